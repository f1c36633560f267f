use std::path::{Path, PathBuf};
use std::time::Instant;

use super::{BenchError, BenchmarkResult, IoConfig, MeasurementKind, ThroughputSample};
use crate::engine::{open_file_with, process_cpu_seconds, EngineError, FlushLevel, OpenConfig};
use crate::rng::{make_rng, SeedValue};
use crate::size::ByteSize;
use crate::types::{Direction, OpenDisposition};

/// How a new file reaches its final length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExtensionMode {
    /// Every write lands past the current end of file.
    Incremental,
    /// The length is set to the final size before the first write.
    Preallocated,
}

impl ExtensionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ExtensionMode::Incremental => "extend",
            ExtensionMode::Preallocated => "prealloc",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionConfig {
    pub target: PathBuf,
    pub final_size: ByteSize,
    pub block: ByteSize,
    pub mode: ExtensionMode,
    pub trials: usize,
    pub seed: SeedValue,
    pub clock_ghz: Option<f64>,
}

impl ExtensionConfig {
    pub fn new(target: impl Into<PathBuf>, final_size: ByteSize, mode: ExtensionMode) -> Self {
        ExtensionConfig {
            target: target.into(),
            final_size,
            block: super::DEFAULT_BLOCK,
            mode,
            trials: super::DEFAULT_TRIALS,
            seed: SeedValue::default(),
            clock_ghz: None,
        }
    }
}

/// Outcome of building one file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtensionTrial {
    pub sample: ThroughputSample,
    /// File length observed just before the first data write.
    pub length_before_first_write: u64,
    /// Extents backing the finished file, where the platform reports them.
    pub extents: Option<u64>,
}

/// Creates `path` (replacing any existing file) and writes `final_size`
/// bytes in `block`-sized requests, then flushes to the device. Timing
/// covers creation, preallocation, writes and the flush.
pub fn extend_file(
    path: &Path,
    final_size: u64,
    block: u64,
    mode: ExtensionMode,
    seed: SeedValue,
) -> Result<ExtensionTrial, BenchError> {
    if block == 0 {
        return Err(BenchError::Config("block size must be at least 1".into()));
    }
    match std::fs::remove_file(path) {
        Ok(()) => {}
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
        Err(e) => {
            return Err(BenchError::Io {
                path: path.to_path_buf(),
                op: "remove",
                source: e,
            })
        }
    }
    let mut data = vec![0u8; block.min(final_size.max(1)) as usize];
    make_rng(seed).fill_bytes(&mut data);

    let cpu0 = process_cpu_seconds();
    let start = Instant::now();
    let mut h = open_file_with(
        path,
        OpenConfig::new(OpenDisposition::CreateNew, Direction::Write),
    )?;
    if mode == ExtensionMode::Preallocated {
        h.preallocate(final_size)?;
    }
    let length_before_first_write = h.len()?;
    let mut written = 0u64;
    let mut requests = 0u64;
    while written < final_size {
        let n = (final_size - written).min(data.len() as u64) as usize;
        h.write_block(&data, n)?;
        written += n as u64;
        requests += 1;
    }
    h.flush(FlushLevel::OperatingSystemCache)?;
    let wall = start.elapsed();
    let cpu = process_cpu_seconds() - cpu0;
    let extents = h.extent_count().or_else(|e| match e {
        EngineError::Io { .. } => Ok(None),
        other => Err(other),
    })?;
    Ok(ExtensionTrial {
        sample: ThroughputSample {
            bytes_moved: written,
            wall_seconds: wall.as_secs_f64(),
            cpu_seconds: cpu.max(0.0),
            request_count: requests,
            touched_bytes: 0,
        },
        length_before_first_write,
        extents,
    })
}

/// Builds the target `trials` times and summarizes the runs.
pub fn measure_extension(cfg: &ExtensionConfig) -> Result<BenchmarkResult, BenchError> {
    if cfg.trials == 0 {
        return Err(BenchError::NoTrials);
    }
    if cfg.final_size.bytes() == 0 {
        return Err(BenchError::Config("extension size must be positive".into()));
    }
    let mut samples = Vec::with_capacity(cfg.trials);
    for _ in 0..cfg.trials {
        let t = extend_file(
            &cfg.target,
            cfg.final_size.bytes(),
            cfg.block.bytes(),
            cfg.mode,
            cfg.seed,
        )?;
        samples.push(t.sample);
    }
    let mut io = IoConfig::new(cfg.target.clone());
    io.direction = Direction::Write;
    io.file_size = cfg.final_size;
    io.block = cfg.block;
    io.trials = cfg.trials;
    io.warmup = false;
    io.seed = cfg.seed;
    io.clock_ghz = cfg.clock_ghz;
    BenchmarkResult::from_samples(io, MeasurementKind::Extension(cfg.mode), samples, vec![])
}
