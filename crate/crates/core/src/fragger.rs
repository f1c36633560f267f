//! Volume fragmentation by repeated create/delete cycles.
//!
//! A directory tree is planned so its leaves hold enough file slots to fill
//! the volume with minimum-size files. Each cycle creates files of uniform
//! random size in random free slots until usage reaches `fill_pct`, then
//! deletes uniformly chosen files until usage is at or below `keep_pct`.
//! All choices come from one seeded stream, so equal configurations on
//! equal starting volumes produce identical event logs.
//!
//! In scaled mode the "volume" is a byte quota under `root`, file sizes are
//! divided by `divisor`, and usage is the total size of live files. Without
//! scaling, usage is the volume's used bytes against its capacity at start.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};

use crate::engine::{open_file_with, volume_usage, EngineError, OpenConfig};
use crate::rng::{make_rng, SeedValue, SeededRng};
use crate::size::ByteSize;
use crate::types::{Direction, OpenDisposition};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scale {
    /// Bytes treated as the whole volume.
    pub quota: u64,
    /// Divides `min_file` and `max_file`.
    pub divisor: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FragConfig {
    pub root: PathBuf,
    /// Files created over the whole run.
    pub max_files: u64,
    pub min_file: ByteSize,
    pub max_file: ByteSize,
    pub files_per_cycle: u64,
    pub max_files_per_dir: u64,
    pub max_subdirs_per_dir: u64,
    /// 0 runs until the stop flag is raised.
    pub max_cycles: u64,
    pub keep_pct: u8,
    pub fill_pct: u8,
    pub seed: SeedValue,
    pub scale: Option<Scale>,
}

#[derive(Debug, thiserror::Error)]
pub enum FragError {
    #[error("invalid fragmentation setup: {0}")]
    Config(String),
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

impl FragConfig {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        FragConfig {
            root: root.into(),
            max_files: 100_000,
            min_file: ByteSize::mib(1),
            max_file: ByteSize::mib(256),
            files_per_cycle: 1_000,
            max_files_per_dir: 100,
            max_subdirs_per_dir: 10,
            max_cycles: 0,
            keep_pct: 5,
            fill_pct: 70,
            seed: SeedValue::default(),
            scale: None,
        }
    }

    pub fn validate(&self) -> Result<(), FragError> {
        let bad = |m: String| Err(FragError::Config(m));
        if !(1..=99).contains(&self.keep_pct) || !(1..=99).contains(&self.fill_pct) {
            return bad(format!(
                "percentages must be in 1..=99 (keep {}, fill {})",
                self.keep_pct, self.fill_pct
            ));
        }
        if self.keep_pct >= self.fill_pct {
            return bad(format!(
                "keep percentage {} must be below fill percentage {}",
                self.keep_pct, self.fill_pct
            ));
        }
        if self.min_file > self.max_file {
            return bad(format!(
                "minimum file size {} exceeds maximum {}",
                self.min_file, self.max_file
            ));
        }
        if self.effective_min() == 0 {
            return bad("minimum file size must be positive".into());
        }
        if self.max_files_per_dir == 0 || self.max_subdirs_per_dir < 2 {
            return bad("need at least 1 file and 2 subdirectories per directory".into());
        }
        if self.files_per_cycle == 0 {
            return bad("files per cycle must be positive".into());
        }
        if let Some(s) = self.scale {
            if s.divisor == 0 || s.quota == 0 {
                return bad("scale quota and divisor must be positive".into());
            }
        }
        Ok(())
    }

    pub fn effective_min(&self) -> u64 {
        self.min_file.bytes() / self.scale.map_or(1, |s| s.divisor)
    }

    pub fn effective_max(&self) -> u64 {
        self.max_file.bytes() / self.scale.map_or(1, |s| s.divisor)
    }
}

/// Directory layout under the root. Files live only in leaves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreePlan {
    /// Levels including the root; a root-only tree has depth 1.
    pub depth: u32,
    /// Every directory below the root, parents before children.
    pub dirs: Vec<PathBuf>,
    /// Leaf directories relative to the root; the root itself is `""`.
    pub leaves: Vec<PathBuf>,
    pub slots_needed: u64,
    pub files_per_leaf: u64,
}

pub fn plan_directory_tree(cfg: &FragConfig, capacity: u64) -> Result<TreePlan, FragError> {
    cfg.validate()?;
    let target = (u128::from(capacity) * u128::from(cfg.fill_pct)).div_ceil(100);
    let slots = target.div_ceil(u128::from(cfg.effective_min())).max(1) as u64;
    let leaves = slots.div_ceil(cfg.max_files_per_dir);
    let fan = cfg.max_subdirs_per_dir;
    let mut depth = 1u32;
    let mut reach = 1u64;
    while reach < leaves {
        reach = reach.saturating_mul(fan);
        depth += 1;
    }
    let mut plan = TreePlan {
        depth,
        dirs: Vec::new(),
        leaves: Vec::new(),
        slots_needed: slots,
        files_per_leaf: cfg.max_files_per_dir,
    };
    build(&mut plan, PathBuf::new(), depth, leaves, fan);
    Ok(plan)
}

/// Lays out `leaves` leaves below `at`, which sits `levels` levels above
/// the leaf level (1 = `at` is a leaf).
fn build(plan: &mut TreePlan, at: PathBuf, levels: u32, leaves: u64, fan: u64) {
    if levels == 1 {
        plan.leaves.push(at);
        return;
    }
    let per_child = fan.pow(levels - 2);
    let children = leaves.div_ceil(per_child);
    let (base, extra) = (leaves / children, leaves % children);
    let width = digits(children - 1);
    for i in 0..children {
        let child = at.join(format!("d{i:0width$}"));
        plan.dirs.push(child.clone());
        build(plan, child, levels - 1, base + u64::from(i < extra), fan);
    }
}

fn digits(n: u64) -> usize {
    n.max(1).ilog10() as usize + 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Create,
    Delete,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FragEvent {
    pub kind: EventKind,
    /// Relative to the root, `/`-separated.
    pub path: String,
    pub bytes: u64,
}

impl fmt::Display for FragEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = match self.kind {
            EventKind::Create => 'C',
            EventKind::Delete => 'D',
        };
        write!(f, "{k} {} {}", self.path, self.bytes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Fill,
    Keep,
}

/// Usage observed when a phase ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseBoundary {
    pub cycle: u64,
    pub phase: Phase,
    pub used: u64,
    pub target: u64,
    /// The phase stopped on a count limit, free-slot exhaustion or a full
    /// volume rather than on reaching its target.
    pub limited: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FragReport {
    pub cycles_run: u64,
    pub files_created: u64,
    pub files_deleted: u64,
    pub bytes_written: u64,
    pub capacity: u64,
    pub final_fill_pct: f64,
    /// Surviving files as (relative path, size), sorted by path.
    pub census: Vec<(String, u64)>,
    pub boundaries: Vec<PhaseBoundary>,
    pub events: Vec<FragEvent>,
    pub plan: TreePlan,
}

impl FragReport {
    pub fn event_log(&self) -> String {
        let mut s = String::new();
        for e in &self.events {
            s.push_str(&e.to_string());
            s.push('\n');
        }
        s
    }

    pub fn write_event_log(&self, path: &Path) -> Result<(), FragError> {
        std::fs::write(path, self.event_log()).map_err(|source| FragError::Io {
            path: path.to_path_buf(),
            op: "write event log",
            source,
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct Slot {
    leaf: u32,
    file: u32,
}

struct Live {
    slot: Slot,
    size: u64,
}

struct Volume<'a> {
    cfg: &'a FragConfig,
    capacity: u64,
    tracked: u64,
}

impl Volume<'_> {
    fn used(&self) -> Result<u64, FragError> {
        match self.cfg.scale {
            Some(_) => Ok(self.tracked),
            None => Ok(volume_usage(&self.cfg.root)?.1),
        }
    }

    fn target(&self, pct: u8) -> u64 {
        (u128::from(self.capacity) * u128::from(pct) / 100) as u64
    }
}

const PATTERN_CHUNK: usize = 1 << 20;

fn rel_path(plan: &TreePlan, slot: Slot) -> String {
    let leaf = &plan.leaves[slot.leaf as usize];
    let width = digits(plan.files_per_leaf - 1);
    let name = format!("f{:0width$}", slot.file);
    let mut parts: Vec<String> = leaf
        .components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect();
    parts.push(name);
    parts.join("/")
}

/// Writes `size` pattern bytes to a new file. `Ok(false)` means the volume
/// filled up; the partial file is removed.
fn create_file(path: &Path, size: u64, pattern: &[u8]) -> Result<bool, FragError> {
    let result = (|| {
        let mut h = open_file_with(
            path,
            OpenConfig {
                app_buffer: 0,
                ..OpenConfig::new(OpenDisposition::CreateNew, Direction::Write)
            },
        )?;
        let mut done = 0u64;
        while done < size {
            let n = (size - done).min(pattern.len() as u64) as usize;
            h.write_block(pattern, n)?;
            done += n as u64;
        }
        Ok::<_, EngineError>(())
    })();
    match result {
        Ok(()) => Ok(true),
        Err(e) if e.is_no_space() => {
            log::warn!("{}: volume full, ending fill phase early", path.display());
            let _ = std::fs::remove_file(path);
            Ok(false)
        }
        Err(e) => Err(e.into()),
    }
}

fn take_random<T>(v: &mut Vec<T>, rng: &mut SeededRng) -> T {
    let i = rng.below(v.len() as u64) as usize;
    v.swap_remove(i)
}

/// Plans and creates the tree, then runs create/delete cycles until
/// `max_cycles` (or, when that is 0, until `stop` is raised or
/// `max_files` have been created).
pub fn run_cycles(cfg: &FragConfig, stop: &AtomicBool) -> Result<FragReport, FragError> {
    cfg.validate()?;
    let io = |path: &Path, op: &'static str| {
        let path = path.to_path_buf();
        move |source| FragError::Io { path, op, source }
    };
    if !cfg.root.is_dir() {
        return Err(FragError::Config(format!(
            "{} is not a directory",
            cfg.root.display()
        )));
    }
    let capacity = match cfg.scale {
        Some(s) => s.quota,
        None => volume_usage(&cfg.root)?.0,
    };
    let plan = plan_directory_tree(cfg, capacity)?;
    for d in &plan.dirs {
        let p = cfg.root.join(d);
        std::fs::create_dir_all(&p).map_err(io(&p, "create directory"))?;
    }

    let mut rng = make_rng(cfg.seed);
    let mut free: Vec<Slot> = (0..plan.leaves.len() as u32)
        .flat_map(|leaf| (0..plan.files_per_leaf as u32).map(move |file| Slot { leaf, file }))
        .collect();
    let mut live: Vec<Live> = Vec::new();
    let mut vol = Volume {
        cfg,
        capacity,
        tracked: 0,
    };
    let pattern: Vec<u8> = (0..PATTERN_CHUNK.min(cfg.effective_max() as usize).max(1))
        .map(|i| i as u8)
        .collect();
    let fill_target = vol.target(cfg.fill_pct);
    let keep_target = vol.target(cfg.keep_pct);

    let mut report = FragReport {
        cycles_run: 0,
        files_created: 0,
        files_deleted: 0,
        bytes_written: 0,
        capacity,
        final_fill_pct: 0.0,
        census: Vec::new(),
        boundaries: Vec::new(),
        events: Vec::new(),
        plan: plan.clone(),
    };

    loop {
        if cfg.max_cycles != 0 && report.cycles_run >= cfg.max_cycles {
            break;
        }
        if cfg.max_cycles == 0 && stop.load(Ordering::Relaxed) {
            break;
        }
        if report.files_created >= cfg.max_files {
            break;
        }
        let cycle = report.cycles_run;

        let mut made = 0u64;
        let mut limited = false;
        while vol.used()? < fill_target {
            if made >= cfg.files_per_cycle
                || report.files_created >= cfg.max_files
                || free.is_empty()
                || stop.load(Ordering::Relaxed)
            {
                limited = true;
                break;
            }
            let slot = take_random(&mut free, &mut rng);
            let size = rng.range_inclusive(cfg.effective_min(), cfg.effective_max());
            let rel = rel_path(&plan, slot);
            if !create_file(&cfg.root.join(&rel), size, &pattern)? {
                free.push(slot);
                limited = true;
                break;
            }
            vol.tracked += size;
            made += 1;
            report.files_created += 1;
            report.bytes_written += size;
            report.events.push(FragEvent {
                kind: EventKind::Create,
                path: rel,
                bytes: size,
            });
            live.push(Live { slot, size });
        }
        report.boundaries.push(PhaseBoundary {
            cycle,
            phase: Phase::Fill,
            used: vol.used()?,
            target: fill_target,
            limited,
        });

        let mut limited = false;
        while vol.used()? > keep_target {
            if live.is_empty() {
                limited = true;
                break;
            }
            let victim = take_random(&mut live, &mut rng);
            let rel = rel_path(&plan, victim.slot);
            let p = cfg.root.join(&rel);
            std::fs::remove_file(&p).map_err(io(&p, "delete"))?;
            vol.tracked -= victim.size;
            report.files_deleted += 1;
            report.events.push(FragEvent {
                kind: EventKind::Delete,
                path: rel,
                bytes: victim.size,
            });
            free.push(victim.slot);
        }
        report.boundaries.push(PhaseBoundary {
            cycle,
            phase: Phase::Keep,
            used: vol.used()?,
            target: keep_target,
            limited,
        });
        report.cycles_run += 1;
        log::info!(
            "cycle {}: {} created, {} deleted in total",
            report.cycles_run,
            report.files_created,
            report.files_deleted
        );
    }

    let used = vol.used()?;
    report.final_fill_pct = if capacity == 0 {
        0.0
    } else {
        used as f64 * 100.0 / capacity as f64
    };
    report.census = live
        .iter()
        .map(|l| (rel_path(&plan, l.slot), l.size))
        .collect();
    report.census.sort();
    Ok(report)
}

/// Writes the report's census as `<path> <bytes>` lines.
pub fn write_census(report: &FragReport, out: &mut impl std::io::Write) -> std::io::Result<()> {
    for (p, n) in &report.census {
        writeln!(out, "{p} {n}")?;
    }
    Ok(())
}

/// Fixed empty stop flag for bounded runs.
pub fn never_stop() -> &'static AtomicBool {
    static NEVER: AtomicBool = AtomicBool::new(false);
    &NEVER
}
