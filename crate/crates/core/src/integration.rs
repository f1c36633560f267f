//! End-to-end scenarios: the create/write/read/delete walk-through and the
//! request-size sweeps behind the figure set.
//!
//! `regen_figures` writes into its output directory:
//!
//! | file          | content                                              |
//! |---------------|------------------------------------------------------|
//! | `results.csv` | every measured point, CSV schema v1                  |
//! | `fig2.svg`    | buffered read/write MB/s vs. request size            |
//! | `fig3.svg`    | buffered read/write cycles/byte vs. request size     |
//! | `fig4.svg`    | direct read/write cycles/byte vs. request size       |
//! | `fig5.svg`    | direct read/write MB/s vs. request size              |
//! | `fig8.svg`    | file creation MB/s, appended vs. preallocated        |
//!
//! The striped-array figures (6 and 7) need a 16-disk array and are not
//! produced. When the scratch volume cannot bypass the cache, fig4 and
//! fig5 are skipped and the reason is returned in `RegenOutput::notices`.

use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::bench::{
    measure_extension, run_measurement, BenchError, BenchmarkResult, ExtensionConfig,
    ExtensionMode, IoConfig,
};
use crate::engine::{detect_sector_geometry, open_file_with, IoMode, OpenConfig};
use crate::report::{emit_plot, to_csv, PlotKind, PlotSeries, ReportError, ResultRow};
use crate::size::ByteSize;
use crate::types::{Direction, OpenDisposition};

#[derive(Debug, thiserror::Error)]
#[error("{step}: {source}")]
pub struct ScenarioError {
    pub step: &'static str,
    #[source]
    pub source: Box<dyn std::error::Error + Send + Sync>,
}

fn step<E: std::error::Error + Send + Sync + 'static>(
    step: &'static str,
) -> impl FnOnce(E) -> ScenarioError {
    move |e| ScenarioError {
        step,
        source: Box::new(e),
    }
}

fn fail(step: &'static str, msg: String) -> ScenarioError {
    ScenarioError {
        step,
        source: msg.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScenarioReport {
    pub length: u64,
    pub reads: u64,
}

pub const SCENARIO_FILE: &str = "summary_scenario.dat";

/// Creates a file in `dir`, writes 100 `'a'` bytes, rewinds, reads to end
/// one byte at a time, closes and deletes it.
pub fn summary_scenario(dir: &Path) -> Result<ScenarioReport, ScenarioError> {
    let path = dir.join(SCENARIO_FILE);
    let mut h = open_file_with(
        &path,
        OpenConfig::new(OpenDisposition::Create, Direction::Write),
    )
    .map_err(step("create"))?;
    for _ in 0..100 {
        h.write_byte(b'a').map_err(step("write"))?;
    }
    h.seek(0).map_err(step("rewind"))?;
    let mut reads = 0u64;
    while let Some(b) = h.read_byte().map_err(step("read"))? {
        if b != b'a' {
            return Err(fail("read", format!("byte {reads} is {b:#04x}, not 'a'")));
        }
        reads += 1;
    }
    let length = h.len().map_err(step("close"))?;
    drop(h);
    std::fs::remove_file(&path).map_err(step("delete"))?;
    if length != 100 || reads != 100 {
        return Err(fail(
            "verify",
            format!("length {length} and {reads} reads, expected 100 of each"),
        ));
    }
    Ok(ScenarioReport { length, reads })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureScale {
    /// At most 2 s per point, 3 trials, 64 MiB files.
    Quick,
    /// Tool defaults: 30 s trials, 5 trials plus warm-up, 1 GiB files.
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegenOptions {
    pub scale: FigureScale,
    /// Where test files are created.
    pub scratch: PathBuf,
    /// Overrides the per-point time budget.
    pub point_duration: Option<Duration>,
    /// Largest request size swept.
    pub max_block: u64,
}

impl RegenOptions {
    pub fn new(scale: FigureScale, scratch: impl Into<PathBuf>) -> Self {
        RegenOptions {
            scale,
            scratch: scratch.into(),
            point_duration: None,
            max_block: 4 << 20,
        }
    }

    fn trials(&self) -> usize {
        match self.scale {
            FigureScale::Quick => 3,
            FigureScale::Full => crate::bench::DEFAULT_TRIALS,
        }
    }

    fn trial_duration(&self) -> Duration {
        let point = self.point_duration.unwrap_or(match self.scale {
            FigureScale::Quick => Duration::from_secs(2),
            FigureScale::Full => crate::bench::DEFAULT_DURATION * 6,
        });
        let runs = self.trials() as u32 + u32::from(self.scale == FigureScale::Full);
        (point / runs).max(Duration::from_millis(1))
    }

    fn file_size(&self) -> ByteSize {
        match self.scale {
            FigureScale::Quick => ByteSize::mib(64),
            FigureScale::Full => crate::bench::DEFAULT_FILE_SIZE,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RegenError {
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("{path}: {op} failed: {source}")]
    Io {
        path: PathBuf,
        op: &'static str,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegenOutput {
    pub rows: Vec<ResultRow>,
    pub files: Vec<PathBuf>,
    pub notices: Vec<String>,
}

/// Powers of two from `lo` through `hi`.
pub fn sweep_sizes(lo: u64, hi: u64) -> Vec<u64> {
    let mut v = Vec::new();
    let mut b = lo.max(1).next_power_of_two();
    while b <= hi {
        v.push(b);
        b *= 2;
    }
    v
}

/// Why cache-bypass I/O is unavailable under `dir`, or `None` if it works.
fn direct_unavailable(dir: &Path) -> Option<String> {
    let probe = dir.join("direct_probe.dat");
    let geom = match detect_sector_geometry(&probe) {
        Ok(g) => g,
        Err(e) => return Some(e.to_string()),
    };
    let r = open_file_with(
        &probe,
        OpenConfig {
            io_mode: IoMode::Direct,
            geometry: Some(geom),
            ..OpenConfig::new(OpenDisposition::Create, Direction::Write)
        },
    );
    let _ = std::fs::remove_file(&probe);
    r.err().map(|e| e.to_string())
}

struct Sweep {
    read: Vec<BenchmarkResult>,
    write: Vec<BenchmarkResult>,
}

fn sweep(opts: &RegenOptions, direct: bool, sizes: &[u64]) -> Result<Sweep, RegenError> {
    let target = opts.scratch.join(if direct {
        "sweep_direct.dat"
    } else {
        "sweep.dat"
    });
    let mut out = Sweep {
        read: Vec::new(),
        write: Vec::new(),
    };
    for direction in [Direction::Read, Direction::Write] {
        for &b in sizes {
            let mut cfg = IoConfig::new(&target);
            cfg.direction = direction;
            cfg.block = ByteSize(b);
            cfg.direct = direct;
            cfg.file_size = opts.file_size();
            cfg.duration = opts.trial_duration();
            cfg.trials = opts.trials();
            cfg.warmup = opts.scale == FigureScale::Full;
            log::info!(
                "sweep {} {} block {}",
                if direct { "direct" } else { "buffered" },
                direction,
                b
            );
            let r = run_measurement(&cfg)?;
            match direction {
                Direction::Read => out.read.push(r),
                Direction::Write => out.write.push(r),
            }
        }
    }
    let _ = std::fs::remove_file(&target);
    Ok(out)
}

fn series(label: &str, results: &[BenchmarkResult], kind: PlotKind) -> PlotSeries {
    PlotSeries {
        label: label.into(),
        points: results
            .iter()
            .map(|r| {
                let v = match kind {
                    PlotKind::Bandwidth => r.mb_per_sec,
                    PlotKind::CostPerByte => r.per_byte_cycles,
                };
                (r.config.block.bytes(), v)
            })
            .collect(),
        stddev: match kind {
            PlotKind::Bandwidth => Some(results.iter().map(|r| r.stddev).collect()),
            PlotKind::CostPerByte => None,
        },
    }
}

/// Runs the sweeps and writes `results.csv` plus one SVG per figure into
/// `out`.
pub fn regen_figures(out: &Path, opts: &RegenOptions) -> Result<RegenOutput, RegenError> {
    for d in [out, opts.scratch.as_path()] {
        std::fs::create_dir_all(d).map_err(|source| RegenError::Io {
            path: d.to_path_buf(),
            op: "create directory",
            source,
        })?;
    }
    let mut rows = Vec::new();
    let mut files = Vec::new();
    let mut notices = Vec::new();
    let mut plot = |name: &str, s: Vec<PlotSeries>, kind, title: &str| -> Result<(), RegenError> {
        let p = out.join(name);
        emit_plot(&s, kind, title, &p)?;
        files.push(p);
        Ok(())
    };

    let buffered = sweep(opts, false, &sweep_sizes(1, opts.max_block))?;
    rows.extend(
        buffered
            .read
            .iter()
            .chain(&buffered.write)
            .map(|r| ResultRow::from_result("iospeed", r)),
    );
    plot(
        "fig2.svg",
        vec![
            series("read", &buffered.read, PlotKind::Bandwidth),
            series("write", &buffered.write, PlotKind::Bandwidth),
        ],
        PlotKind::Bandwidth,
        "Buffered bandwidth vs. request size",
    )?;
    plot(
        "fig3.svg",
        vec![
            series("read", &buffered.read, PlotKind::CostPerByte),
            series("write", &buffered.write, PlotKind::CostPerByte),
        ],
        PlotKind::CostPerByte,
        "Buffered CPU cost per byte vs. request size",
    )?;

    match direct_unavailable(&opts.scratch) {
        Some(reason) => {
            let msg = format!("direct figures skipped: {reason}");
            log::warn!("{msg}");
            notices.push(msg);
        }
        None => {
            let sector = detect_sector_geometry(&opts.scratch)
                .map_err(BenchError::from)?
                .logical_sector;
            let direct = sweep(opts, true, &sweep_sizes(sector, opts.max_block))?;
            rows.extend(
                direct
                    .read
                    .iter()
                    .chain(&direct.write)
                    .map(|r| ResultRow::from_result("iospeed", r)),
            );
            plot(
                "fig4.svg",
                vec![
                    series("read", &direct.read, PlotKind::CostPerByte),
                    series("write", &direct.write, PlotKind::CostPerByte),
                ],
                PlotKind::CostPerByte,
                "Direct CPU cost per byte vs. request size",
            )?;
            plot(
                "fig5.svg",
                vec![
                    series("read", &direct.read, PlotKind::Bandwidth),
                    series("write", &direct.write, PlotKind::Bandwidth),
                ],
                PlotKind::Bandwidth,
                "Direct bandwidth vs. request size",
            )?;
        }
    }

    let target = opts.scratch.join("extend.dat");
    let mut ext = Vec::new();
    for mode in [ExtensionMode::Incremental, ExtensionMode::Preallocated] {
        let mut results = Vec::new();
        for b in sweep_sizes(512, opts.max_block) {
            let mut cfg = ExtensionConfig::new(&target, opts.file_size(), mode);
            cfg.block = ByteSize(b);
            cfg.trials = opts.trials();
            results.push(measure_extension(&cfg)?);
        }
        rows.extend(results.iter().map(|r| ResultRow::from_result("iospeed", r)));
        let label = match mode {
            ExtensionMode::Incremental => "appended",
            ExtensionMode::Preallocated => "preallocated",
        };
        ext.push(series(label, &results, PlotKind::Bandwidth));
    }
    let _ = std::fs::remove_file(&target);
    plot(
        "fig8.svg",
        ext,
        PlotKind::Bandwidth,
        "File creation speed vs. request size",
    )?;

    let csv = out.join("results.csv");
    std::fs::write(&csv, to_csv(&rows)).map_err(|source| RegenError::Io {
        path: csv.clone(),
        op: "write",
        source,
    })?;
    files.push(csv);
    Ok(RegenOutput {
        rows,
        files,
        notices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_leaves_nothing_behind() {
        let dir = tempfile::tempdir().unwrap();
        for _ in 0..2 {
            let r = summary_scenario(dir.path()).unwrap();
            assert_eq!(
                r,
                ScenarioReport {
                    length: 100,
                    reads: 100
                }
            );
            assert!(!dir.path().join(SCENARIO_FILE).exists());
        }
    }

    #[test]
    fn sweep_range() {
        let s = sweep_sizes(1, 4 << 20);
        assert_eq!(s.len(), 23);
        assert_eq!(s[0], 1);
        assert_eq!(*s.last().unwrap(), 4 << 20);
        assert_eq!(sweep_sizes(512, 4096), vec![512, 1024, 2048, 4096]);
    }

    #[test]
    fn quick_budget() {
        let o = RegenOptions::new(FigureScale::Quick, "/tmp");
        assert!(o.trial_duration() * o.trials() as u32 <= Duration::from_secs(2));
    }
}
