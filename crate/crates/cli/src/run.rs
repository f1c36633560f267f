use std::io::{Read, Write};
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

use seqio::bench::{
    measure_extension, nominal_clock_ghz, per_byte_cost, prepare_target, run_measurement,
    BenchError, ExtensionConfig, ThroughputSample,
};
use seqio::engine::{process_cpu_seconds, EngineError};
use seqio::fragger::{run_cycles, FragError};
use seqio::integration::{regen_figures, RegenError, RegenOptions};
use seqio::pipeline::{copy_file_with, CopyOptions};
use seqio::report::{csv_header, human_summary, quiet_line, ResultRow};
use seqio::workloads::{
    run_read, run_write, write_sort_file, Granularity, WorkloadError, SORT_RECORD_LEN,
};
use seqio::{make_rng, ByteSize, Checksum, SeededRng};

use crate::args::{CopyArgs, ExamplesArgs, FiguresArgs, FragdiskArgs, Invocation, IospeedArgs};
use crate::CliError;

fn bench_err(e: BenchError) -> CliError {
    match e {
        BenchError::Config(_) | BenchError::FileSmallerThanBlock { .. } | BenchError::NoTrials => {
            CliError::Config(e.to_string())
        }
        BenchError::Engine(e) => engine_err(e),
        other => CliError::Io(other.to_string()),
    }
}

fn engine_err(e: EngineError) -> CliError {
    match e {
        EngineError::DirectViolation(_)
        | EngineError::DirectUnsupported { .. }
        | EngineError::GeometryUnavailable { .. }
        | EngineError::InvalidAlignment(_)
        | EngineError::InvalidSector(_)
        | EngineError::ReadOnlyDisposition { .. } => CliError::Config(e.to_string()),
        other => CliError::Io(other.to_string()),
    }
}

fn workload_err(e: WorkloadError) -> CliError {
    match e {
        WorkloadError::Engine(e) => engine_err(e),
        WorkloadError::Config(m) => CliError::Config(m),
        other => CliError::Io(other.to_string()),
    }
}

fn io_err(path: &Path, op: &str, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {op} failed: {e}", path.display()))
}

fn out_err(e: std::io::Error) -> CliError {
    CliError::Io(format!("writing output failed: {e}"))
}

/// Prints a row: alone when quiet, after the human summary otherwise.
fn emit(row: &ResultRow, quiet: bool, out: &mut dyn Write) -> Result<(), CliError> {
    if quiet {
        out.write_all(quiet_line(row).as_bytes())
    } else {
        write!(
            out,
            "{}{}\n{}",
            human_summary(row),
            csv_header(),
            quiet_line(row)
        )
    }
    .map_err(out_err)
}

/// Row for a single timed run outside the bench harness.
fn single_row(tool: &str, direction: &str, block: u64, sample: &ThroughputSample) -> ResultRow {
    let (ghz, _) = nominal_clock_ghz(None);
    let (ns, cycles) = per_byte_cost(sample, ghz).unwrap_or((0.0, 0.0));
    ResultRow {
        tool: tool.to_string(),
        direction: direction.to_string(),
        block_bytes: block,
        direct: false,
        async_depth: None,
        seek_pct: None,
        trials: 1,
        bytes_moved: sample.bytes_moved,
        wall_s: sample.wall_seconds,
        cpu_s: sample.cpu_seconds,
        mb_per_sec: sample.mb_per_sec(),
        ns_per_byte: ns,
        cycles_per_byte: cycles,
        stddev: 0.0,
    }
}

pub fn run(inv: &Invocation, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match inv {
        Invocation::Help(text) => writeln!(out, "{text}").map_err(out_err),
        Invocation::Iospeed(a) => iospeed(a, out, err),
        Invocation::Fragdisk(a) => fragdisk(a, out, err),
        Invocation::Examples(a) => examples(a, out, err),
        Invocation::Asynccopy(a) => asynccopy(a, out, err),
        Invocation::Figures(a) => figures(a, out, err),
    }
}

fn iospeed(a: &IospeedArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let cfg = &a.config;
    if let Some(mode) = a.extension {
        let ext = ExtensionConfig {
            block: cfg.block,
            trials: cfg.trials,
            seed: cfg.seed,
            clock_ghz: cfg.clock_ghz,
            ..ExtensionConfig::new(cfg.target.clone(), cfg.file_size, mode)
        };
        if !cfg.quiet {
            let _ = writeln!(
                err,
                "building {} ({}, {} trials)",
                cfg.target.display(),
                mode.as_str(),
                cfg.trials
            );
        }
        let r = measure_extension(&ext).map_err(bench_err)?;
        emit(&ResultRow::from_result("iospeed", &r), cfg.quiet, out)?;
    }
    let r = run_measurement(cfg).map_err(bench_err)?;
    emit(&ResultRow::from_result("iospeed", &r), cfg.quiet, out)
}

static INTERRUPTED: AtomicBool = AtomicBool::new(false);

extern "C" fn on_interrupt(_: libc::c_int) {
    INTERRUPTED.store(true, Ordering::SeqCst);
}

fn fragdisk(a: &FragdiskArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let cfg = &a.config;
    // SAFETY: the handler only stores to an atomic.
    unsafe {
        libc::signal(
            libc::SIGINT,
            on_interrupt as *const () as libc::sighandler_t,
        );
    }
    if cfg.max_cycles == 0 {
        let _ = writeln!(
            err,
            "running until interrupted (Ctrl-C stops after the current file)"
        );
    }
    std::fs::create_dir_all(&cfg.root).map_err(|e| io_err(&cfg.root, "create directory", e))?;
    let report = run_cycles(cfg, &INTERRUPTED).map_err(|e| match e {
        FragError::Config(m) => CliError::Config(m),
        FragError::Engine(e) => engine_err(e),
        other => CliError::Io(other.to_string()),
    })?;
    if let Some(p) = &a.event_log {
        report
            .write_event_log(p)
            .map_err(|e| CliError::Io(e.to_string()))?;
    }
    for b in &report.boundaries {
        let _ = writeln!(
            err,
            "cycle {} {:?}: used {} target {}{}",
            b.cycle,
            b.phase,
            b.used,
            b.target,
            if b.limited { " (limited)" } else { "" }
        );
    }
    writeln!(
        out,
        "cycles={} created={} deleted={} bytes_written={} capacity={} fill={:.1}% live_files={}",
        report.cycles_run,
        report.files_created,
        report.files_deleted,
        report.bytes_written,
        report.capacity,
        report.final_fill_pct,
        report.census.len()
    )
    .map_err(out_err)
}

fn examples(a: &ExamplesArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let total = ByteSize(a.records * SORT_RECORD_LEN as u64);
    let _ = writeln!(
        err,
        "{}: {} records of {} bytes",
        a.path.display(),
        a.records,
        SORT_RECORD_LEN
    );
    writeln!(out, "{}", csv_header()).map_err(out_err)?;

    let cpu0 = process_cpu_seconds();
    let t0 = Instant::now();
    write_sort_file(&a.path, a.records, &mut make_rng(a.seed)).map_err(workload_err)?;
    let sort = ThroughputSample {
        bytes_moved: total.bytes(),
        wall_seconds: t0.elapsed().as_secs_f64(),
        cpu_seconds: (process_cpu_seconds() - cpu0).max(0.0),
        request_count: a.records,
        touched_bytes: 0,
    };
    write!(
        out,
        "{}",
        quiet_line(&single_row(
            "examples-sort",
            "write",
            SORT_RECORD_LEN as u64,
            &sort
        ))
    )
    .map_err(out_err)?;

    let cells = [
        ("byte", Granularity::ByteAtATime, 1),
        ("line", Granularity::LineAtATime, SORT_RECORD_LEN as u64),
        (
            "block",
            Granularity::BlockAtATime(ByteSize::kib(64)),
            ByteSize::kib(64).bytes(),
        ),
    ];
    let mut rng: SeededRng = make_rng(a.seed);
    for (label, g, block) in cells {
        let tool = format!("examples-{label}");
        let w = run_write(&a.path, g, total, &mut rng).map_err(workload_err)?;
        write!(
            out,
            "{}",
            quiet_line(&single_row(&tool, "write", block, &w))
        )
        .map_err(out_err)?;
        let (_, _, r) = run_read(&a.path, g).map_err(workload_err)?;
        write!(out, "{}", quiet_line(&single_row(&tool, "read", block, &r))).map_err(out_err)?;
    }
    if !a.keep {
        std::fs::remove_file(&a.path).map_err(|e| io_err(&a.path, "remove", e))?;
    }
    Ok(())
}

fn file_checksum(path: &Path) -> Result<Checksum, CliError> {
    let mut f = std::fs::File::open(path).map_err(|e| io_err(path, "open", e))?;
    let mut sum = Checksum::new();
    let mut buf = vec![0u8; 1 << 20];
    loop {
        let n = f.read(&mut buf).map_err(|e| io_err(path, "read", e))?;
        if n == 0 {
            return Ok(sum);
        }
        sum.update(&buf[..n]);
    }
}

fn asynccopy(a: &CopyArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let src = a.dir.join("source.dat");
    let dst = a.dir.join("target.dat");
    for p in [&src, &dst] {
        match std::fs::remove_file(p) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(io_err(p, "remove", e)),
        }
    }
    if !a.quiet {
        let _ = writeln!(err, "creating {} ({})", src.display(), a.size);
    }
    prepare_target(&src, a.size.bytes(), &mut SeededRng::stream(a.seed, 0)).map_err(bench_err)?;

    let result = (|| {
        let mut hooked = Checksum::new();
        let cpu0 = process_cpu_seconds();
        let report = copy_file_with(
            &src,
            &dst,
            CopyOptions {
                block: a.block.bytes(),
                depth: a.depth,
                direct: a.direct,
            },
            |v| {
                hooked.update(v.data);
                Ok(())
            },
        )
        .map_err(|e| CliError::Io(e.to_string()))?;
        let cpu = (process_cpu_seconds() - cpu0).max(0.0);
        let written = file_checksum(&dst)?;
        if written.value() != hooked.value() || written.bytes() != a.size.bytes() {
            return Err(CliError::Io(format!(
                "{}: copy verification failed ({} of {} bytes, checksum {:016x} vs {:016x})",
                dst.display(),
                written.bytes(),
                a.size.bytes(),
                written.value(),
                hooked.value()
            )));
        }
        let sample = ThroughputSample {
            bytes_moved: report.bytes_copied,
            wall_seconds: report.wall_time.as_secs_f64(),
            cpu_seconds: cpu,
            request_count: report.read_requests + report.write_requests,
            touched_bytes: 0,
        };
        let mut row = single_row("asynccopy", "copy", a.block.bytes(), &sample);
        row.direct = a.direct;
        row.async_depth = Some(a.depth as u64);
        Ok(row)
    })();

    for p in [&src, &dst] {
        let _ = std::fs::remove_file(p);
    }
    emit(&result?, a.quiet, out)
}

fn figures(a: &FiguresArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let scratch = a.scratch.clone().unwrap_or_else(|| a.out.join("scratch"));
    let opts = RegenOptions::new(a.scale, &scratch);
    let res = regen_figures(&a.out, &opts).map_err(|e| match e {
        RegenError::Bench(b) => bench_err(b),
        other => CliError::Io(other.to_string()),
    });
    if a.scratch.is_none() {
        let _ = std::fs::remove_dir_all(&scratch);
    }
    let res = res?;
    for n in &res.notices {
        let _ = writeln!(err, "notice: {n}");
    }
    for f in &res.files {
        writeln!(out, "{}", f.display()).map_err(out_err)?;
    }
    Ok(())
}
