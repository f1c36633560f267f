//! Timed access-pattern kernels: byte, line, block and typed-record I/O over
//! whole files, plus the sort-benchmark file builder.
//!
//! Sort file format: `record_count` fixed 100-byte records, no separators.
//!
//! | bytes   | content                                             |
//! |---------|-----------------------------------------------------|
//! | 0..10   | key: random printable ASCII (`0x20..=0x7E`)         |
//! | 10..20  | record index, decimal, zero-padded to 10 digits     |
//! | 20..100 | filler: `A..Z` cycling, starting at `index % 26`    |

use std::path::Path;
use std::time::Instant;

use crate::bench::ThroughputSample;
use crate::checksum::Checksum;
use crate::engine::{
    open_file_with, process_cpu_seconds, EngineError, FileHandle, FlushLevel, OpenConfig,
};
use crate::rng::SeededRng;
use crate::size::ByteSize;
use crate::types::{Direction, OpenDisposition};

pub const SORT_RECORD_LEN: usize = 100;
pub const SORT_KEY_LEN: usize = 10;
/// Payload length of each line written at line granularity (a CRLF follows).
pub const LINE_PAYLOAD: usize = 98;
/// Serialized length of one record written at typed-record granularity.
pub const TYPED_RECORD_LEN: u64 = 100;

const CHUNK: usize = 64 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Granularity {
    ByteAtATime,
    LineAtATime,
    BlockAtATime(ByteSize),
    TypedRecords,
}

impl Granularity {
    pub fn label(&self) -> String {
        match self {
            Granularity::ByteAtATime => "byte".into(),
            Granularity::LineAtATime => "line".into(),
            Granularity::BlockAtATime(b) => format!("block{b}"),
            Granularity::TypedRecords => "typed".into(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum WorkloadError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("unexpected end of data at byte {offset}")]
    UnexpectedEnd { offset: u64 },
    #[error("unknown type tag {tag:#04x} at byte {offset}")]
    InvalidTag { tag: u8, offset: u64 },
    #[error("string at byte {offset} is not valid UTF-8")]
    InvalidUtf8 { offset: u64 },
    #[error("invalid workload: {0}")]
    Config(String),
}

fn open_read(path: &Path) -> Result<FileHandle, WorkloadError> {
    Ok(open_file_with(
        path,
        OpenConfig::new(OpenDisposition::Open, Direction::Read),
    )?)
}

fn open_write(path: &Path) -> Result<FileHandle, WorkloadError> {
    Ok(open_file_with(
        path,
        OpenConfig::new(OpenDisposition::Create, Direction::Write),
    )?)
}

struct Clock {
    cpu: f64,
    start: Instant,
}

impl Clock {
    fn start() -> Self {
        Clock {
            cpu: process_cpu_seconds(),
            start: Instant::now(),
        }
    }

    fn sample(&self, bytes: u64, requests: u64, touched: u64) -> ThroughputSample {
        ThroughputSample {
            bytes_moved: bytes,
            wall_seconds: self.start.elapsed().as_secs_f64(),
            cpu_seconds: (process_cpu_seconds() - self.cpu).max(0.0),
            request_count: requests,
            touched_bytes: touched,
        }
    }
}

/// Reads the whole file at `granularity`, folding every payload byte into
/// a checksum.
///
/// Line granularity strips terminators (`\n`, and a `\r` before it) from
/// both the checksum and the byte count. Typed granularity decodes values
/// and checksums the raw bytes they occupy.
pub fn run_read(
    path: &Path,
    granularity: Granularity,
) -> Result<(u64, Checksum, ThroughputSample), WorkloadError> {
    let mut h = open_read(path)?;
    let mut sum = Checksum::new();
    let clock = Clock::start();
    let mut requests = 0u64;
    match granularity {
        Granularity::ByteAtATime => {
            while let Some(b) = h.read_byte()? {
                sum.update_byte(b);
                requests += 1;
            }
        }
        Granularity::BlockAtATime(block) => {
            let block = block.bytes() as usize;
            if block == 0 {
                return Err(WorkloadError::Config(
                    "block size must be at least 1".into(),
                ));
            }
            let mut buf = vec![0u8; block];
            loop {
                let n = h.read_block(&mut buf, block)?;
                requests += 1;
                if n == 0 {
                    break;
                }
                sum.update(&buf[..n]);
            }
        }
        Granularity::LineAtATime => {
            let mut lines = LineReader::new(h);
            while let Some(line) = lines.next_line()? {
                sum.update(line);
                requests += 1;
            }
        }
        Granularity::TypedRecords => {
            let mut src = HandleSource {
                handle: &mut h,
                sum: &mut sum,
            };
            while read_value(&mut src)?.is_some() {
                requests += 1;
            }
        }
    }
    let bytes = sum.bytes();
    Ok((bytes, sum, clock.sample(bytes, requests, bytes)))
}

/// Yields lines without terminators; the final unterminated tail (if
/// non-empty) is a line.
struct LineReader {
    handle: FileHandle,
    buf: Vec<u8>,
    start: usize,
    end: usize,
    line: Vec<u8>,
}

impl LineReader {
    fn new(handle: FileHandle) -> Self {
        LineReader {
            handle,
            buf: vec![0; CHUNK],
            start: 0,
            end: 0,
            line: Vec::new(),
        }
    }

    fn next_line(&mut self) -> Result<Option<&[u8]>, WorkloadError> {
        self.line.clear();
        loop {
            if self.start == self.end {
                self.end = self.handle.read_block(&mut self.buf, CHUNK)?;
                self.start = 0;
                if self.end == 0 {
                    return Ok(if self.line.is_empty() {
                        None
                    } else {
                        Some(&self.line)
                    });
                }
            }
            let avail = &self.buf[self.start..self.end];
            match avail.iter().position(|&b| b == b'\n') {
                Some(i) => {
                    self.line.extend_from_slice(&avail[..i]);
                    self.start += i + 1;
                    if self.line.last() == Some(&b'\r') {
                        self.line.pop();
                    }
                    return Ok(Some(&self.line));
                }
                None => {
                    self.line.extend_from_slice(avail);
                    self.start = self.end;
                }
            }
        }
    }
}

fn printable(rng: &mut SeededRng) -> u8 {
    b' ' + rng.below(95) as u8
}

/// Writes `total` bytes to `path` (replacing it) at `granularity`.
///
/// Byte and block granularity write random bytes. Line granularity writes
/// lines of [`LINE_PAYLOAD`] printable characters plus CRLF, shortening
/// the last one to land on `total`. Typed granularity writes 98-character
/// string values of 100 serialized bytes each and needs `total` to be a
/// multiple of 100.
pub fn run_write(
    path: &Path,
    granularity: Granularity,
    total: ByteSize,
    rng: &mut SeededRng,
) -> Result<ThroughputSample, WorkloadError> {
    let total = total.bytes();
    if granularity == Granularity::TypedRecords && !total.is_multiple_of(TYPED_RECORD_LEN) {
        return Err(WorkloadError::Config(format!(
            "typed records need a multiple of {TYPED_RECORD_LEN} bytes, got {total}"
        )));
    }
    if granularity == Granularity::BlockAtATime(ByteSize(0)) {
        return Err(WorkloadError::Config(
            "block size must be at least 1".into(),
        ));
    }
    let mut h = open_write(path)?;
    let clock = Clock::start();
    let mut requests = 0u64;
    match granularity {
        Granularity::ByteAtATime => {
            for _ in 0..total {
                h.write_byte(rng.next_byte())?;
            }
            requests = total;
        }
        Granularity::BlockAtATime(block) => {
            let mut buf = vec![0u8; block.bytes().min(total.max(1)) as usize];
            let mut done = 0u64;
            while done < total {
                let n = (total - done).min(buf.len() as u64) as usize;
                rng.fill_bytes(&mut buf[..n]);
                h.write_block(&buf, n)?;
                done += n as u64;
                requests += 1;
            }
        }
        Granularity::LineAtATime => {
            let mut line = Vec::with_capacity(LINE_PAYLOAD + 2);
            let mut done = 0u64;
            while done < total {
                let left = total - done;
                line.clear();
                if left == 1 {
                    line.push(b'\n');
                } else {
                    let payload = (left - 2).min(LINE_PAYLOAD as u64) as usize;
                    line.extend((0..payload).map(|_| printable(rng)));
                    line.extend_from_slice(b"\r\n");
                }
                h.write_block(&line, line.len())?;
                done += line.len() as u64;
                requests += 1;
            }
        }
        Granularity::TypedRecords => {
            let mut out = Vec::with_capacity(TYPED_RECORD_LEN as usize);
            for _ in 0..total / TYPED_RECORD_LEN {
                let s: String = (0..98).map(|_| printable(rng) as char).collect();
                out.clear();
                encode_value(&TypedValue::Str(s), &mut out);
                debug_assert_eq!(out.len() as u64, TYPED_RECORD_LEN);
                h.write_block(&out, out.len())?;
                requests += 1;
            }
        }
    }
    h.flush(FlushLevel::ApplicationBuffers)?;
    drop(h);
    Ok(clock.sample(total, requests, 0))
}

/// A value of one of the serializable built-in types.
///
/// Encoding: one tag byte (`1` u32, `2` i64, `3` f64, `4` string), then
/// fixed-width little-endian numerics, or for strings a 7-bit-group
/// variable-length byte count followed by UTF-8 bytes.
#[derive(Debug, Clone)]
pub enum TypedValue {
    U32(u32),
    I64(i64),
    F64(f64),
    Str(String),
}

/// Floats compare bitwise so NaN payloads round-trip as equal.
impl PartialEq for TypedValue {
    fn eq(&self, other: &Self) -> bool {
        use TypedValue::*;
        match (self, other) {
            (U32(a), U32(b)) => a == b,
            (I64(a), I64(b)) => a == b,
            (F64(a), F64(b)) => a.to_bits() == b.to_bits(),
            (Str(a), Str(b)) => a == b,
            _ => false,
        }
    }
}

const TAG_U32: u8 = 1;
const TAG_I64: u8 = 2;
const TAG_F64: u8 = 3;
const TAG_STR: u8 = 4;

pub fn encode_value(v: &TypedValue, out: &mut Vec<u8>) {
    match v {
        TypedValue::U32(x) => {
            out.push(TAG_U32);
            out.extend_from_slice(&x.to_le_bytes());
        }
        TypedValue::I64(x) => {
            out.push(TAG_I64);
            out.extend_from_slice(&x.to_le_bytes());
        }
        TypedValue::F64(x) => {
            out.push(TAG_F64);
            out.extend_from_slice(&x.to_le_bytes());
        }
        TypedValue::Str(s) => {
            out.push(TAG_STR);
            let mut n = s.len() as u64;
            while n >= 0x80 {
                out.push((n as u8 & 0x7F) | 0x80);
                n >>= 7;
            }
            out.push(n as u8);
            out.extend_from_slice(s.as_bytes());
        }
    }
}

trait ByteSource {
    fn next(&mut self) -> Result<Option<u8>, WorkloadError>;
    fn offset(&self) -> u64;
}

struct HandleSource<'a> {
    handle: &'a mut FileHandle,
    sum: &'a mut Checksum,
}

impl ByteSource for HandleSource<'_> {
    fn next(&mut self) -> Result<Option<u8>, WorkloadError> {
        let b = self.handle.read_byte()?;
        if let Some(b) = b {
            self.sum.update_byte(b);
        }
        Ok(b)
    }

    fn offset(&self) -> u64 {
        self.handle.position()
    }
}

struct SliceSource<'a> {
    data: &'a [u8],
    pos: usize,
}

impl ByteSource for SliceSource<'_> {
    fn next(&mut self) -> Result<Option<u8>, WorkloadError> {
        let b = self.data.get(self.pos).copied();
        self.pos += usize::from(b.is_some());
        Ok(b)
    }

    fn offset(&self) -> u64 {
        self.pos as u64
    }
}

fn take<const N: usize>(src: &mut impl ByteSource) -> Result<[u8; N], WorkloadError> {
    let mut out = [0u8; N];
    for b in out.iter_mut() {
        *b = src.next()?.ok_or(WorkloadError::UnexpectedEnd {
            offset: src.offset(),
        })?;
    }
    Ok(out)
}

/// Next value, or `None` at a clean end (between values).
fn read_value(src: &mut impl ByteSource) -> Result<Option<TypedValue>, WorkloadError> {
    let at = src.offset();
    let Some(tag) = src.next()? else {
        return Ok(None);
    };
    let v = match tag {
        TAG_U32 => TypedValue::U32(u32::from_le_bytes(take(src)?)),
        TAG_I64 => TypedValue::I64(i64::from_le_bytes(take(src)?)),
        TAG_F64 => TypedValue::F64(f64::from_le_bytes(take(src)?)),
        TAG_STR => {
            let mut len = 0u64;
            let mut shift = 0;
            loop {
                let [b] = take::<1>(src)?;
                if shift > 63 {
                    return Err(WorkloadError::InvalidTag { tag, offset: at });
                }
                len |= u64::from(b & 0x7F) << shift;
                shift += 7;
                if b & 0x80 == 0 {
                    break;
                }
            }
            let start = src.offset();
            let mut bytes = Vec::with_capacity(len.min(1 << 20) as usize);
            for _ in 0..len {
                let [b] = take::<1>(src)?;
                bytes.push(b);
            }
            TypedValue::Str(
                String::from_utf8(bytes)
                    .map_err(|_| WorkloadError::InvalidUtf8 { offset: start })?,
            )
        }
        other => {
            return Err(WorkloadError::InvalidTag {
                tag: other,
                offset: at,
            })
        }
    };
    Ok(Some(v))
}

/// Decodes a whole byte sequence of values.
pub fn decode_values(data: &[u8]) -> Result<Vec<TypedValue>, WorkloadError> {
    let mut src = SliceSource { data, pos: 0 };
    let mut out = Vec::new();
    while let Some(v) = read_value(&mut src)? {
        out.push(v);
    }
    Ok(out)
}

pub fn write_typed(path: &Path, values: &[TypedValue]) -> Result<(), WorkloadError> {
    let mut h = open_write(path)?;
    let mut out = Vec::new();
    for v in values {
        out.clear();
        encode_value(v, &mut out);
        h.write_block(&out, out.len())?;
    }
    h.flush(FlushLevel::ApplicationBuffers)?;
    Ok(())
}

pub fn read_typed(path: &Path) -> Result<Vec<TypedValue>, WorkloadError> {
    let mut h = open_read(path)?;
    let mut sum = Checksum::new();
    let mut src = HandleSource {
        handle: &mut h,
        sum: &mut sum,
    };
    let mut out = Vec::new();
    while let Some(v) = read_value(&mut src)? {
        out.push(v);
    }
    Ok(out)
}

/// Writes `values` to `path` and reads them back.
pub fn typed_roundtrip(
    path: &Path,
    values: &[TypedValue],
) -> Result<Vec<TypedValue>, WorkloadError> {
    write_typed(path, values)?;
    read_typed(path)
}

/// Number of `\n` terminators, plus one for a non-empty unterminated tail.
pub fn count_lines(path: &Path) -> Result<u64, WorkloadError> {
    let mut h = open_read(path)?;
    let mut buf = vec![0u8; CHUNK];
    let mut count = 0u64;
    let mut last = None;
    loop {
        let n = h.read_block(&mut buf, CHUNK)?;
        if n == 0 {
            break;
        }
        count += buf[..n].iter().filter(|&&b| b == b'\n').count() as u64;
        last = Some(buf[n - 1]);
    }
    if matches!(last, Some(b) if b != b'\n') {
        count += 1;
    }
    Ok(count)
}

/// Fills `out` with sort record `index` (see the module table).
pub fn sort_record(index: u64, rng: &mut SeededRng, out: &mut [u8; SORT_RECORD_LEN]) {
    for b in &mut out[..SORT_KEY_LEN] {
        *b = printable(rng);
    }
    let digits = format!("{:010}", index % 10_000_000_000);
    out[10..20].copy_from_slice(digits.as_bytes());
    let first = (index % 26) as u8;
    for (i, b) in out[20..].iter_mut().enumerate() {
        *b = b'A' + (first + i as u8 % 26) % 26;
    }
}

pub fn write_sort_file(
    path: &Path,
    record_count: u64,
    rng: &mut SeededRng,
) -> Result<(), WorkloadError> {
    let mut h = open_write(path)?;
    let per_chunk = CHUNK / SORT_RECORD_LEN;
    let mut chunk = vec![0u8; per_chunk * SORT_RECORD_LEN];
    let mut rec = [0u8; SORT_RECORD_LEN];
    let mut index = 0u64;
    while index < record_count {
        let n = (record_count - index).min(per_chunk as u64) as usize;
        for slot in chunk.chunks_exact_mut(SORT_RECORD_LEN).take(n) {
            sort_record(index, rng, &mut rec);
            slot.copy_from_slice(&rec);
            index += 1;
        }
        h.write_block(&chunk, n * SORT_RECORD_LEN)?;
    }
    h.flush(FlushLevel::ApplicationBuffers)?;
    Ok(())
}
