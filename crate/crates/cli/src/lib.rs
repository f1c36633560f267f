//! Argument parsing and dispatch for the `seqio` executable.
//!
//! Exit codes: [`EXIT_OK`] on success, [`EXIT_CONFIG`] for usage and
//! configuration errors, [`EXIT_IO`] for failures while doing I/O.

mod args;
mod run;

use std::io::Write;

pub use args::{
    parse, parse_asynccopy, parse_examples, parse_figures, parse_fragdisk, parse_iospeed,
    parse_tool, CopyArgs, ExamplesArgs, FiguresArgs, FragdiskArgs, Invocation, IospeedArgs,
    COPY_SIZE, DEFAULT_RECORDS, EXAMPLES_FILE,
};
pub use run::run;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{message}")]
    Usage {
        message: String,
        usage: &'static str,
    },
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage { .. } | CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

/// Parses and runs `args` (without the program name), reporting errors on
/// `err`. Returns the process exit code.
pub fn main_with(args: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match parse(args).and_then(|inv| run(&inv, out, err)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "seqio: {e}");
            if let CliError::Usage { usage, .. } = &e {
                let _ = writeln!(err, "{usage}");
            }
            e.exit_code()
        }
    }
}
