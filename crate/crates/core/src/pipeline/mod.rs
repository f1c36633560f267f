//! Ring-of-buffers asynchronous file copy.
//!
//! `depth` slots each own one buffer of `block` bytes. All slots start with a
//! read at `slot * block`. The coordinator waits for reads strictly in file
//! order, runs the per-block hook, and issues the write. The write's
//! completion advances the slot by `depth * block` and issues that read, so
//! a slot's next read never starts before its previous write has finished.
//! Each slot has at most one request in flight, so no more than `depth`
//! requests are ever outstanding across both files.
//!
//! Completions run on I/O worker threads and enter one mutually exclusive
//! section (the ring lock). The copy ends when every scheduled read has been
//! consumed and the outstanding-write counter has dropped to zero.

mod executor;
mod schedule;

use std::error::Error as StdError;
use std::path::Path;
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

pub(crate) use executor::{IoExecutor, Submitter};
pub use schedule::{plan_schedule, ScheduledRequest};

use crate::engine::{
    allocate_aligned, open_file_with, AlignedBuffer, EngineError, IoMode, OpenConfig, SharedFile,
};
use crate::types::{Direction, OpenDisposition};

/// Default number of slots (outstanding requests).
pub const DEFAULT_DEPTH: usize = 4;
/// Default request size, one mebibyte.
pub const DEFAULT_BLOCK: u64 = 1 << 20;

pub type HookError = Box<dyn StdError + Send + Sync>;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("block size must be at least 1")]
    ZeroBlock,
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("block hook failed at offset {offset}: {source}")]
    Hook {
        offset: u64,
        #[source]
        source: HookError,
    },
    #[error("source returned {got} bytes at offset {offset}, expected {expected}")]
    ShortRead {
        offset: u64,
        expected: u64,
        got: u64,
    },
}

/// A copy failure together with how far the copy got.
#[derive(Debug, thiserror::Error)]
#[error("copy failed after {} bytes: {error}", .progress.bytes_copied)]
pub struct CopyError {
    #[source]
    pub error: PipelineError,
    pub progress: CopyReport,
}

impl From<PipelineError> for CopyError {
    fn from(error: PipelineError) -> Self {
        CopyError {
            error,
            progress: CopyReport::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CopyReport {
    /// Bytes whose writes have completed.
    pub bytes_copied: u64,
    /// Bytes whose reads have completed.
    pub bytes_read: u64,
    pub read_requests: u64,
    pub write_requests: u64,
    pub wall_time: Duration,
    pub peak_outstanding: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CopyOptions {
    pub block: u64,
    pub depth: usize,
    /// Open both files with cache bypass. `block` must then be a multiple
    /// of the sector size; a ragged tail is written padded and trimmed.
    pub direct: bool,
}

impl Default for CopyOptions {
    fn default() -> Self {
        CopyOptions {
            block: DEFAULT_BLOCK,
            depth: DEFAULT_DEPTH,
            direct: false,
        }
    }
}

/// A block handed to the hook between its read and its write.
#[derive(Debug)]
pub struct BlockView<'a> {
    pub slot: usize,
    pub offset: u64,
    pub data: &'a [u8],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotState {
    Idle,
    Reading,
    ReadyToWrite,
    Writing,
}

#[derive(Debug)]
struct RingSlot {
    offset: u64,
    valid_len: usize,
    state: SlotState,
    buffer: Option<AlignedBuffer>,
}

#[derive(Debug, Default)]
struct Counters {
    outstanding: usize,
    peak: usize,
    writes_pending: usize,
    read_requests: u64,
    write_requests: u64,
    bytes_read: u64,
    bytes_written: u64,
}

impl Counters {
    fn issue(&mut self) {
        self.outstanding += 1;
        self.peak = self.peak.max(self.outstanding);
    }
}

struct Ring {
    slots: Vec<RingSlot>,
    counters: Counters,
    failure: Option<PipelineError>,
}

struct Ctx {
    ring: Mutex<Ring>,
    changed: Condvar,
    src: SharedFile,
    dst: SharedFile,
    file_size: u64,
    block: u64,
    stride: u64,
    /// Transfer granularity: 1 when buffered, the sector size when direct.
    granule: u64,
    submit: Submitter,
}

fn round_up(n: u64, granule: u64) -> u64 {
    n.div_ceil(granule) * granule
}

impl Ctx {
    fn launch_read(self: &Arc<Self>, slot: usize, offset: u64, mut buffer: AlignedBuffer) {
        let ctx = Arc::clone(self);
        self.submit.submit(move || {
            let expected = ctx.block.min(ctx.file_size - offset);
            let len = round_up(expected, ctx.granule) as usize;
            let result = ctx.src.read_at(&mut buffer, len, offset);
            let mut ring = ctx.ring.lock().unwrap();
            ring.counters.outstanding -= 1;
            match result {
                Ok(n) if n as u64 == expected => {
                    ring.counters.read_requests += 1;
                    ring.counters.bytes_read += expected;
                    let s = &mut ring.slots[slot];
                    s.valid_len = n;
                    s.state = SlotState::ReadyToWrite;
                    s.buffer = Some(buffer);
                }
                Ok(n) => {
                    ring.failure.get_or_insert(PipelineError::ShortRead {
                        offset,
                        expected,
                        got: n as u64,
                    });
                }
                Err(e) => {
                    ring.failure.get_or_insert(e.into());
                }
            }
            ctx.changed.notify_all();
        });
    }

    fn launch_write(
        self: &Arc<Self>,
        slot: usize,
        offset: u64,
        valid: usize,
        buffer: AlignedBuffer,
    ) {
        let ctx = Arc::clone(self);
        self.submit.submit(move || {
            let len = round_up(valid as u64, ctx.granule) as usize;
            let result = ctx.dst.write_at(&buffer, len, offset);
            // Completion section: one completion at a time per copy.
            let mut ring = ctx.ring.lock().unwrap();
            ring.counters.outstanding -= 1;
            ring.counters.writes_pending -= 1;
            match result {
                Ok(()) => {
                    ring.counters.write_requests += 1;
                    ring.counters.bytes_written += valid as u64;
                    let next = offset + ctx.stride;
                    if next < ctx.file_size && ring.failure.is_none() {
                        let s = &mut ring.slots[slot];
                        s.offset = next;
                        s.state = SlotState::Reading;
                        ring.counters.issue();
                        drop(ring);
                        ctx.launch_read(slot, next, buffer);
                        ctx.changed.notify_all();
                        return;
                    }
                    let s = &mut ring.slots[slot];
                    s.state = SlotState::Idle;
                    s.buffer = Some(buffer);
                }
                Err(e) => {
                    ring.failure.get_or_insert(e.into());
                }
            }
            ctx.changed.notify_all();
        });
    }
}

/// Copies `src` to a new file `dst` with the given block size and depth,
/// without a hook.
pub fn copy_file(
    src: &Path,
    dst: &Path,
    block: u64,
    depth: usize,
) -> Result<CopyReport, CopyError> {
    copy_file_with(
        src,
        dst,
        CopyOptions {
            block,
            depth,
            direct: false,
        },
        |_| Ok(()),
    )
}

/// Copies `src` to a new file `dst`, calling `hook` on every block in file
/// order after its read completes and before its write is issued. A hook
/// error aborts the copy.
///
/// On any failure after `dst` was created, `dst` is removed and the error
/// carries the progress made.
pub fn copy_file_with<F>(
    src: &Path,
    dst: &Path,
    opts: CopyOptions,
    mut hook: F,
) -> Result<CopyReport, CopyError>
where
    F: FnMut(BlockView<'_>) -> Result<(), HookError>,
{
    if opts.block == 0 {
        return Err(PipelineError::ZeroBlock.into());
    }
    if opts.depth == 0 {
        return Err(PipelineError::ZeroDepth.into());
    }
    let started = Instant::now();
    let io_mode = if opts.direct {
        IoMode::Direct
    } else {
        IoMode::Buffered
    };
    let open = |disposition, direction| OpenConfig {
        io_mode,
        app_buffer: 0,
        ..OpenConfig::new(disposition, direction)
    };
    let src_file = open_file_with(src, open(OpenDisposition::Open, Direction::Read))
        .and_then(|h| h.into_shared())
        .map_err(PipelineError::from)?;
    let file_size = src_file.len().map_err(PipelineError::from)?;
    let dst_file = open_file_with(dst, open(OpenDisposition::CreateNew, Direction::Write))
        .and_then(|h| h.into_shared())
        .map_err(PipelineError::from)?;

    let outcome = run_ring(src_file, dst_file, file_size, opts, &mut hook);
    match outcome {
        Ok(mut report) => {
            report.wall_time = started.elapsed();
            Ok(report)
        }
        Err(mut e) => {
            e.progress.wall_time = started.elapsed();
            if let Err(rm) = std::fs::remove_file(dst) {
                log::warn!("{}: could not remove partial copy: {rm}", dst.display());
            }
            Err(e)
        }
    }
}

fn run_ring<F>(
    src: SharedFile,
    dst: SharedFile,
    file_size: u64,
    opts: CopyOptions,
    hook: &mut F,
) -> Result<CopyReport, CopyError>
where
    F: FnMut(BlockView<'_>) -> Result<(), HookError>,
{
    let (granule, alignment) = if opts.direct {
        [src.geometry(), dst.geometry()]
            .into_iter()
            .flatten()
            .fold((1, 64), |(g, a), geom| {
                (
                    g.max(geom.logical_sector),
                    a.max(geom.recommended_alignment),
                )
            })
    } else {
        (1, 64)
    };
    if !opts.block.is_multiple_of(granule) {
        let v = vec![crate::engine::DirectViolation::RaggedLength {
            length: opts.block,
            sector: granule,
        }];
        return Err(PipelineError::Engine(EngineError::DirectViolation(v)).into());
    }
    let schedule = plan_schedule(file_size, opts.block, opts.depth)?;
    let active = opts.depth.min(schedule.len());
    let mut slots = Vec::with_capacity(opts.depth);
    for i in 0..opts.depth {
        let buffer = if i < active {
            Some(allocate_aligned(opts.block, alignment).map_err(PipelineError::from)?)
        } else {
            None
        };
        slots.push(RingSlot {
            offset: i as u64 * opts.block,
            valid_len: 0,
            state: SlotState::Idle,
            buffer,
        });
    }

    let executor = IoExecutor::new(active.max(1));
    let ctx = Arc::new(Ctx {
        ring: Mutex::new(Ring {
            slots,
            counters: Counters::default(),
            failure: None,
        }),
        changed: Condvar::new(),
        src,
        dst,
        file_size,
        block: opts.block,
        stride: opts.block * opts.depth as u64,
        granule,
        submit: executor.submitter(),
    });

    // Launch the initial reads; all are counted as issued before any runs.
    let initial: Vec<(usize, u64, AlignedBuffer)> = {
        let mut ring = ctx.ring.lock().unwrap();
        (0..active)
            .map(|i| {
                ring.counters.issue();
                let s = &mut ring.slots[i];
                s.state = SlotState::Reading;
                (i, s.offset, s.buffer.take().unwrap())
            })
            .collect()
    };
    for (i, offset, buffer) in initial {
        ctx.launch_read(i, offset, buffer);
    }

    // Consume reads strictly in file order.
    for req in &schedule {
        let (buffer, valid) = {
            let mut ring = ctx.ring.lock().unwrap();
            loop {
                if ring.failure.is_some() {
                    break;
                }
                let s = &ring.slots[req.slot];
                if s.state == SlotState::ReadyToWrite {
                    debug_assert_eq!(s.offset, req.offset);
                    break;
                }
                ring = ctx.changed.wait(ring).unwrap();
            }
            if ring.failure.is_some() {
                break;
            }
            let s = &mut ring.slots[req.slot];
            (s.buffer.take().unwrap(), s.valid_len)
        };
        if let Err(source) = hook(BlockView {
            slot: req.slot,
            offset: req.offset,
            data: &buffer[..valid],
        }) {
            let mut ring = ctx.ring.lock().unwrap();
            ring.failure.get_or_insert(PipelineError::Hook {
                offset: req.offset,
                source,
            });
            break;
        }
        {
            let mut ring = ctx.ring.lock().unwrap();
            ring.counters.issue();
            ring.counters.writes_pending += 1;
            ring.slots[req.slot].state = SlotState::Writing;
        }
        ctx.launch_write(req.slot, req.offset, valid, buffer);
    }

    // Drain: wait for every outstanding request, writes included.
    let mut ring = ctx.ring.lock().unwrap();
    while ring.counters.outstanding > 0 {
        ring = ctx.changed.wait(ring).unwrap();
    }
    debug_assert_eq!(ring.counters.writes_pending, 0);
    let c = &ring.counters;
    let report = CopyReport {
        bytes_copied: c.bytes_written,
        bytes_read: c.bytes_read,
        read_requests: c.read_requests,
        write_requests: c.write_requests,
        wall_time: Duration::ZERO,
        peak_outstanding: c.peak,
    };
    if let Some(error) = ring.failure.take() {
        return Err(CopyError {
            error,
            progress: report,
        });
    }
    drop(ring);
    if granule > 1 && !file_size.is_multiple_of(granule) {
        ctx.dst.set_len(file_size).map_err(|e| CopyError {
            error: e.into(),
            progress: report,
        })?;
    }
    Ok(report)
}
