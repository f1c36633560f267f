use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::sync::mpsc;
use std::time::{Duration, Instant};

use super::{BenchError, BenchmarkResult, IoConfig, MeasurementKind, OffsetPlan, ThroughputSample};
use crate::checksum::Checksum;
use crate::engine::{
    allocate_aligned, detect_sector_geometry, open_file_with, process_cpu_seconds, AccessHint,
    AlignedBuffer, EngineError, FileHandle, FlushLevel, IoMode, OpenConfig, SharedFile,
};
use crate::pipeline::IoExecutor;
use crate::rng::{make_rng, SeededRng};
use crate::types::{Direction, OpenDisposition};

const FILL_CHUNK: usize = 1 << 20;

/// Makes sure `path` exists and is at least `size` bytes long, writing a
/// deterministic pattern over any missing tail.
pub fn prepare_target(path: &Path, size: u64, rng: &mut SeededRng) -> Result<(), BenchError> {
    let mut h = open_file_with(
        path,
        OpenConfig {
            app_buffer: 0,
            ..OpenConfig::new(OpenDisposition::OpenOrCreate, Direction::Write)
        },
    )?;
    let len = h.len()?;
    if len >= size {
        return Ok(());
    }
    let mut chunk = vec![0u8; FILL_CHUNK.min(size as usize)];
    rng.fill_bytes(&mut chunk);
    h.seek(len)?;
    let mut pos = len;
    while pos < size {
        let n = (size - pos).min(chunk.len() as u64) as usize;
        h.write_block(&chunk, n)?;
        pos += n as u64;
    }
    h.flush(FlushLevel::ApplicationBuffers)?;
    Ok(())
}

/// Runs `cfg.trials` measured trials (after a warm-up when `cfg.warmup`).
///
/// Trial `k` draws its offsets from stream `k` of `cfg.seed`, so equal
/// configurations produce equal offset sequences.
pub fn run_measurement(cfg: &IoConfig) -> Result<BenchmarkResult, BenchError> {
    cfg.validate()?;
    let geometry = if cfg.direct {
        Some(match cfg.geometry {
            Some(g) => g,
            None => detect_sector_geometry(&cfg.target)?,
        })
    } else {
        cfg.geometry
    };
    if let Some(g) = geometry.filter(|_| cfg.direct) {
        if !cfg.block.bytes().is_multiple_of(g.logical_sector) {
            return Err(EngineError::DirectViolation(vec![
                crate::engine::DirectViolation::RaggedLength {
                    length: cfg.block.bytes(),
                    sector: g.logical_sector,
                },
            ])
            .into());
        }
    }
    let plan = cfg.offset_plan(geometry.map(|g| g.logical_sector))?;

    let mut fill_rng = SeededRng::stream(cfg.seed, u64::MAX - 1);
    prepare_target(&cfg.target, cfg.file_size.bytes(), &mut fill_rng)?;

    let open = OpenConfig {
        io_mode: if cfg.direct {
            IoMode::Direct
        } else {
            IoMode::Buffered
        },
        access_hint: if plan.is_sequential() {
            AccessHint::Sequential
        } else {
            AccessHint::Random
        },
        geometry,
        ..OpenConfig::new(OpenDisposition::Open, cfg.direction)
    };
    let alignment = geometry.map(|g| g.recommended_alignment).unwrap_or(4096);
    let record = cfg.offset_log.is_some();

    let mut samples = Vec::with_capacity(cfg.trials);
    let mut logs = Vec::new();
    let warmups = usize::from(cfg.warmup);
    for trial in 0..warmups + cfg.trials {
        let measured = trial >= warmups;
        let stream = if measured {
            (trial - warmups) as u64
        } else {
            u64::MAX
        };
        let mut rng = SeededRng::stream(cfg.seed, stream);
        let mut log = Vec::new();
        let handle = open_file_with(&cfg.target, open)?;
        let sample = match cfg.async_depth {
            None => sync_trial(
                cfg,
                &plan,
                handle,
                alignment,
                &mut rng,
                record.then_some(&mut log),
            )?,
            Some(depth) => async_trial(
                cfg,
                &plan,
                handle.into_shared()?,
                depth,
                alignment,
                &mut rng,
                record.then_some(&mut log),
            )?,
        };
        if measured {
            samples.push(sample);
            if record {
                logs.push(log);
            }
        }
    }

    if let Some(path) = &cfg.offset_log {
        write_offset_log(path, &logs)?;
    }
    BenchmarkResult::from_samples(cfg.clone(), MeasurementKind::Timed, samples, logs)
}

fn write_offset_log(path: &Path, logs: &[Vec<u64>]) -> Result<(), BenchError> {
    let io = |source| BenchError::Io {
        path: path.to_path_buf(),
        op: "write offset log",
        source,
    };
    let mut out = std::io::BufWriter::new(fs::File::create(path).map_err(io)?);
    for off in logs.iter().flatten() {
        writeln!(out, "{off}").map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Requests between clock checks; keeps the clock off the per-byte path.
fn check_interval(block: u64) -> u64 {
    (65_536 / block.max(1)).clamp(1, 4096)
}

fn payload(block: usize, alignment: u64, rng: &mut SeededRng) -> Result<AlignedBuffer, BenchError> {
    let mut buf = allocate_aligned(block as u64, alignment)?;
    rng.fill_bytes(&mut buf);
    Ok(buf)
}

/// Touching a write buffer changes every byte, so the data cannot be
/// produced without visiting it.
#[inline]
fn touch_write(buf: &mut [u8], sum: &mut Checksum) {
    for b in buf.iter_mut() {
        *b = b.wrapping_add(1);
    }
    sum.update(buf);
}

fn sync_trial(
    cfg: &IoConfig,
    plan: &OffsetPlan,
    mut handle: FileHandle,
    alignment: u64,
    rng: &mut SeededRng,
    mut log: Option<&mut Vec<u64>>,
) -> Result<ThroughputSample, BenchError> {
    let block = cfg.block.bytes() as usize;
    let mut buf = payload(block, alignment, &mut make_rng(cfg.seed))?;
    let mut sum = Checksum::new();
    let every = check_interval(block as u64);
    let duration = cfg.duration;

    let cpu0 = process_cpu_seconds();
    let start = Instant::now();
    let mut offset = 0u64;
    let mut requests = 0u64;
    let mut bytes = 0u64;
    loop {
        if requests.is_multiple_of(every) && start.elapsed() >= duration {
            break;
        }
        handle.seek(offset)?;
        if let Some(log) = log.as_deref_mut() {
            log.push(offset);
        }
        match cfg.direction {
            Direction::Read if block == 1 => {
                if let Some(b) = handle.read_byte()? {
                    bytes += 1;
                    if cfg.touch {
                        sum.update_byte(b);
                    }
                }
            }
            Direction::Read => {
                let n = handle.read_block(&mut buf, block)?;
                bytes += n as u64;
                if cfg.touch {
                    sum.update(&buf[..n]);
                }
            }
            Direction::Write => {
                if cfg.touch {
                    touch_write(&mut buf, &mut sum);
                }
                if block == 1 {
                    handle.write_byte(buf[0])?;
                } else {
                    handle.write_block(&buf, block)?;
                }
                bytes += block as u64;
            }
        }
        requests += 1;
        offset = plan.next(offset, rng);
    }
    if cfg.direction == Direction::Write {
        handle.flush(FlushLevel::ApplicationBuffers)?;
    }
    drop(handle);
    let wall = start.elapsed();
    Ok(sample(
        bytes,
        wall,
        process_cpu_seconds() - cpu0,
        requests,
        &sum,
        cfg.touch,
    ))
}

fn sample(
    bytes: u64,
    wall: Duration,
    cpu: f64,
    requests: u64,
    sum: &Checksum,
    touch: bool,
) -> ThroughputSample {
    ThroughputSample {
        bytes_moved: bytes,
        wall_seconds: wall.as_secs_f64(),
        cpu_seconds: cpu.max(0.0),
        request_count: requests,
        touched_bytes: if touch { sum.bytes() } else { 0 },
    }
}

struct Completion {
    buffer: AlignedBuffer,
    result: Result<usize, EngineError>,
}

/// Keeps up to `depth` requests in flight; each completion issues the next
/// request with the same buffer until the duration elapses.
fn async_trial(
    cfg: &IoConfig,
    plan: &OffsetPlan,
    file: SharedFile,
    depth: usize,
    alignment: u64,
    rng: &mut SeededRng,
    mut log: Option<&mut Vec<u64>>,
) -> Result<ThroughputSample, BenchError> {
    let block = cfg.block.bytes() as usize;
    let executor = IoExecutor::new(depth);
    let submitter = executor.submitter();
    let (tx, rx) = mpsc::channel::<Completion>();
    let direction = cfg.direction;
    let submit = |buffer: AlignedBuffer, offset: u64| {
        let file = file.clone();
        let tx = tx.clone();
        submitter.submit(move || {
            let mut buffer = buffer;
            let result = match direction {
                Direction::Read => file.read_at(&mut buffer, block, offset),
                Direction::Write => file.write_at(&buffer, block, offset).map(|()| block),
            };
            let _ = tx.send(Completion { buffer, result });
        });
    };

    let mut pattern_rng = make_rng(cfg.seed);
    let mut sum = Checksum::new();
    let mut offset = 0u64;
    let mut outstanding = 0usize;
    let mut requests = 0u64;
    let mut bytes = 0u64;
    let mut failure = None;

    let cpu0 = process_cpu_seconds();
    let start = Instant::now();
    for _ in 0..depth {
        let mut buf = payload(block, alignment, &mut pattern_rng)?;
        if direction == Direction::Write && cfg.touch {
            touch_write(&mut buf, &mut sum);
        }
        if let Some(log) = log.as_deref_mut() {
            log.push(offset);
        }
        submit(buf, offset);
        outstanding += 1;
        offset = plan.next(offset, rng);
    }
    while outstanding > 0 {
        let Completion { mut buffer, result } = rx.recv().expect("I/O worker vanished");
        outstanding -= 1;
        match result {
            Ok(n) => {
                requests += 1;
                bytes += n as u64;
                if direction == Direction::Read && cfg.touch {
                    sum.update(&buffer[..n]);
                }
            }
            Err(e) => {
                failure.get_or_insert(e);
            }
        }
        if failure.is_none() && start.elapsed() < cfg.duration {
            if direction == Direction::Write && cfg.touch {
                touch_write(&mut buffer, &mut sum);
            }
            if let Some(log) = log.as_deref_mut() {
                log.push(offset);
            }
            submit(buffer, offset);
            outstanding += 1;
            offset = plan.next(offset, rng);
        }
    }
    // Workers exit only once every sender is gone.
    drop(submitter);
    drop(executor);
    if let Some(e) = failure {
        return Err(e.into());
    }
    let wall = start.elapsed();
    Ok(sample(
        bytes,
        wall,
        process_cpu_seconds() - cpu0,
        requests,
        &sum,
        cfg.touch,
    ))
}
