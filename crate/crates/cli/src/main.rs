use std::path::Path;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();
    let mut args: Vec<String> = std::env::args().collect();
    let program = args.remove(0);
    // Installed under a tool's name (e.g. a symlink named `iospeed`), the
    // tool name is implied.
    let stem = Path::new(&program)
        .file_stem()
        .map(|s| s.to_string_lossy().to_ascii_lowercase())
        .unwrap_or_default();
    if ["iospeed", "fragdisk", "ioexamples", "asynccopy"].contains(&stem.as_str()) {
        args.insert(0, stem);
    }
    let code = seqio_cli::main_with(
        &args,
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    );
    std::process::exit(code);
}
