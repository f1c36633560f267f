//! Duration-bounded throughput and CPU-cost measurement.
//!
//! A measurement runs one or more trials. Each trial issues requests of
//! `block` bytes at offsets from [`OffsetPlan`] until the configured
//! duration elapses, then reports bytes moved, wall time and process CPU
//! time. Results carry medians over trials.
//!
//! Rates are decimal: MB/s means 10^6 bytes per second. Raw byte counts are
//! kept alongside so either convention can be recomputed.

mod extension;
mod measure;
mod offsets;
mod stats;

use std::path::PathBuf;
use std::time::Duration;

pub use extension::{
    extend_file, measure_extension, ExtensionConfig, ExtensionMode, ExtensionTrial,
};
pub use measure::{prepare_target, run_measurement};
pub use offsets::OffsetPlan;
pub use stats::{nominal_clock_ghz, per_byte_cost, summarize, ClockSource, CLOCK_ENV};

use crate::engine::{EngineError, SectorGeometry};
use crate::rng::{SeedValue, SeededRng};
use crate::size::ByteSize;
use crate::types::Direction;

pub const DEFAULT_DURATION: Duration = Duration::from_secs(30);
pub const DEFAULT_BLOCK: ByteSize = ByteSize::kib(64);
pub const DEFAULT_FILE_SIZE: ByteSize = ByteSize::gib(1);
pub const DEFAULT_ASYNC_DEPTH: usize = 4;
pub const DEFAULT_SEEK_PCT: u8 = 100;
pub const DEFAULT_TRIALS: usize = 5;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("file size {file_size} is smaller than one block of {block}")]
    FileSmallerThanBlock { file_size: u64, block: u64 },
    #[error("at least one trial is required")]
    NoTrials,
    #[error("no bytes were transferred")]
    ZeroBytes,
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("{path}: {op} failed: {source}")]
    Io {
        path: PathBuf,
        op: &'static str,
        #[source]
        source: std::io::Error,
    },
}

/// One benchmark run's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct IoConfig {
    pub target: PathBuf,
    pub direction: Direction,
    pub file_size: ByteSize,
    pub duration: Duration,
    pub block: ByteSize,
    /// Outstanding requests when asynchronous; `None` is synchronous.
    pub async_depth: Option<usize>,
    pub direct: bool,
    /// Seek distance as a percentage of the file size; `None` or 0 is
    /// sequential.
    pub seek_pct: Option<u8>,
    /// Read (or produce) every byte of every buffer.
    pub touch: bool,
    pub quiet: bool,
    pub seed: SeedValue,
    /// Measured trials, after an optional discarded warm-up trial.
    pub trials: usize,
    pub warmup: bool,
    /// Nominal clock for cycles/byte; see [`nominal_clock_ghz`].
    pub clock_ghz: Option<f64>,
    /// When set, the request offsets of every measured trial are written
    /// here as newline-delimited decimal numbers.
    pub offset_log: Option<PathBuf>,
    /// Geometry to validate direct requests against instead of querying
    /// the volume.
    pub geometry: Option<SectorGeometry>,
}

impl IoConfig {
    pub fn new(target: impl Into<PathBuf>) -> Self {
        IoConfig {
            target: target.into(),
            direction: Direction::Read,
            file_size: DEFAULT_FILE_SIZE,
            duration: DEFAULT_DURATION,
            block: DEFAULT_BLOCK,
            async_depth: None,
            direct: false,
            seek_pct: None,
            touch: false,
            quiet: false,
            seed: SeedValue::default(),
            trials: DEFAULT_TRIALS,
            warmup: true,
            clock_ghz: None,
            offset_log: None,
            geometry: None,
        }
    }

    /// Checks the field-level invariants (not the direct-I/O geometry,
    /// which needs the target volume).
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.block.bytes() == 0 {
            return Err(BenchError::Config("block size must be at least 1".into()));
        }
        if self.duration.is_zero() {
            return Err(BenchError::Config("duration must be positive".into()));
        }
        if let Some(p) = self.seek_pct {
            if p > 100 {
                return Err(BenchError::Config(format!(
                    "seek percentage {p} exceeds 100"
                )));
            }
        }
        if self.async_depth == Some(0) {
            return Err(BenchError::Config("async depth must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(BenchError::NoTrials);
        }
        if self.file_size < self.block {
            return Err(BenchError::FileSmallerThanBlock {
                file_size: self.file_size.bytes(),
                block: self.block.bytes(),
            });
        }
        Ok(())
    }

    /// Offset walk for this configuration; `sector` is the alignment unit
    /// for direct requests.
    pub fn offset_plan(&self, sector: Option<u64>) -> Result<OffsetPlan, BenchError> {
        let alignment = match (self.direct, sector) {
            (true, Some(s)) => s,
            _ => self.block.bytes(),
        };
        OffsetPlan::new(
            self.file_size.bytes(),
            self.block.bytes(),
            alignment,
            self.seek_pct,
        )
    }
}

/// Offset of the request after one at `current` under `cfg`, for a file of
/// `file_size` bytes.
pub fn next_offset(
    current: u64,
    cfg: &IoConfig,
    file_size: u64,
    rng: &mut SeededRng,
) -> Result<u64, BenchError> {
    let alignment = if cfg.direct {
        cfg.geometry
            .map(|g| g.logical_sector)
            .unwrap_or(cfg.block.bytes())
    } else {
        cfg.block.bytes()
    };
    let plan = OffsetPlan::new(file_size, cfg.block.bytes(), alignment, cfg.seek_pct)?;
    Ok(plan.next(current, rng))
}

/// Counters of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ThroughputSample {
    pub bytes_moved: u64,
    pub wall_seconds: f64,
    pub cpu_seconds: f64,
    pub request_count: u64,
    /// Bytes folded into the touch checksum (0 unless touching).
    pub touched_bytes: u64,
}

impl ThroughputSample {
    /// Decimal megabytes per second.
    pub fn mb_per_sec(&self) -> f64 {
        if self.wall_seconds > 0.0 {
            self.bytes_moved as f64 / 1e6 / self.wall_seconds
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementKind {
    Timed,
    Extension(ExtensionMode),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkResult {
    pub config: IoConfig,
    pub kind: MeasurementKind,
    /// Measured trials only; the warm-up is not included.
    pub samples: Vec<ThroughputSample>,
    /// Median of per-trial MB/s.
    pub mb_per_sec: f64,
    /// Population standard deviation of per-trial MB/s.
    pub stddev: f64,
    /// Median of per-trial CPU ns per byte.
    pub per_byte_ns: f64,
    /// `per_byte_ns * clock_ghz`.
    pub per_byte_cycles: f64,
    pub clock_ghz: f64,
    pub clock_source: ClockSource,
    /// Request offsets of each measured trial, when an offset log was
    /// requested.
    pub offset_logs: Vec<Vec<u64>>,
}

impl BenchmarkResult {
    pub(crate) fn from_samples(
        config: IoConfig,
        kind: MeasurementKind,
        samples: Vec<ThroughputSample>,
        offset_logs: Vec<Vec<u64>>,
    ) -> Result<Self, BenchError> {
        let rates: Vec<f64> = samples.iter().map(ThroughputSample::mb_per_sec).collect();
        let (mb_per_sec, stddev) = summarize(&rates)?;
        let costs: Vec<f64> = samples
            .iter()
            .map(|s| per_byte_cost(s, 1.0).map(|(ns, _)| ns).unwrap_or(0.0))
            .collect();
        let (per_byte_ns, _) = summarize(&costs)?;
        let (clock_ghz, clock_source) = nominal_clock_ghz(config.clock_ghz);
        Ok(BenchmarkResult {
            config,
            kind,
            samples,
            mb_per_sec,
            stddev,
            per_byte_ns,
            per_byte_cycles: per_byte_ns * clock_ghz,
            clock_ghz,
            clock_source,
            offset_logs,
        })
    }

    pub fn total_bytes(&self) -> u64 {
        self.samples.iter().map(|s| s.bytes_moved).sum()
    }

    pub fn total_wall_seconds(&self) -> f64 {
        self.samples.iter().map(|s| s.wall_seconds).sum()
    }

    pub fn total_cpu_seconds(&self) -> f64 {
        self.samples.iter().map(|s| s.cpu_seconds).sum()
    }
}
