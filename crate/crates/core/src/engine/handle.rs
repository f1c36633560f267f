use std::fs::{File, OpenOptions};
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[cfg(unix)]
use std::os::unix::fs::FileExt;
#[cfg(windows)]
use std::os::windows::fs::FileExt;

use super::direct::{check_direct_request, DirectRequest};
use super::{
    detect_sector_geometry, platform, AccessHint, EngineError, FlushLevel, IoMode, SectorGeometry,
    DEFAULT_APP_BUFFER,
};
use crate::types::{Direction, OpenDisposition};

/// Optional knobs for [`open_file_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpenConfig {
    pub disposition: OpenDisposition,
    pub direction: Direction,
    pub io_mode: IoMode,
    pub access_hint: AccessHint,
    /// Application buffer size for buffered handles. Zero disables it.
    pub app_buffer: usize,
    /// Geometry to validate direct transfers against. `None` queries the
    /// volume at open time.
    pub geometry: Option<SectorGeometry>,
}

impl OpenConfig {
    pub fn new(disposition: OpenDisposition, direction: Direction) -> Self {
        OpenConfig {
            disposition,
            direction,
            io_mode: IoMode::Buffered,
            access_hint: AccessHint::Sequential,
            app_buffer: DEFAULT_APP_BUFFER,
            geometry: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stage {
    Idle,
    /// `buf[..len]` mirrors file bytes `[start, start + len)`.
    Read {
        start: u64,
        len: usize,
    },
    /// `buf[..len]` is pending data for file bytes `[start, start + len)`.
    Write {
        start: u64,
        len: usize,
    },
}

/// An open file with a current position, a buffering mode and (for direct
/// handles) the sector geometry every transfer is checked against.
///
/// A `Write` handle may also read; a `Read` handle rejects writes, flushes
/// and length changes.
#[derive(Debug)]
pub struct FileHandle {
    file: Arc<File>,
    path: PathBuf,
    writable: bool,
    io_mode: IoMode,
    access_hint: AccessHint,
    geometry: Option<SectorGeometry>,
    position: u64,
    stage: Stage,
    buf: Vec<u8>,
}

pub fn open_file(
    path: &Path,
    disposition: OpenDisposition,
    direction: Direction,
    io_mode: IoMode,
    access_hint: AccessHint,
) -> Result<FileHandle, EngineError> {
    open_file_with(
        path,
        OpenConfig {
            io_mode,
            access_hint,
            ..OpenConfig::new(disposition, direction)
        },
    )
}

pub fn open_file_with(path: &Path, cfg: OpenConfig) -> Result<FileHandle, EngineError> {
    let writable = cfg.direction == Direction::Write;
    if !writable && cfg.disposition.modifies() {
        return Err(EngineError::ReadOnlyDisposition {
            path: path.to_path_buf(),
            disposition: cfg.disposition,
        });
    }
    if !writable && cfg.disposition == OpenDisposition::OpenOrCreate && !path.exists() {
        OpenOptions::new()
            .write(true)
            .create(true)
            .truncate(false)
            .open(path)
            .map_err(|e| open_error(path, e))?;
    }

    let mut opts = OpenOptions::new();
    opts.read(true).write(writable);
    match cfg.disposition {
        OpenDisposition::Open => {}
        OpenDisposition::Create => {
            opts.create(true).truncate(true);
        }
        OpenDisposition::CreateNew => {
            opts.create_new(true);
        }
        OpenDisposition::OpenOrCreate | OpenDisposition::Append => {
            opts.create(writable).truncate(false);
        }
        OpenDisposition::Truncate => {
            opts.truncate(true);
        }
    }

    let direct = cfg.io_mode == IoMode::Direct;
    let geometry = if direct {
        Some(match cfg.geometry {
            Some(g) => g,
            None => detect_sector_geometry(path)?,
        })
    } else {
        cfg.geometry
    };
    if direct {
        platform::set_direct_flag(&mut opts);
    }

    let file = match opts.open(path) {
        Ok(f) => f,
        Err(e) if direct && platform::is_direct_unsupported(&e) => {
            return Err(EngineError::DirectUnsupported {
                path: path.to_path_buf(),
            })
        }
        Err(e) => return Err(open_error(path, e)),
    };
    if direct {
        platform::after_direct_open(&file).map_err(|_| EngineError::DirectUnsupported {
            path: path.to_path_buf(),
        })?;
    }
    platform::advise(&file, cfg.access_hint);

    let position = if cfg.disposition == OpenDisposition::Append {
        file.metadata()
            .map_err(|e| EngineError::io(path, "stat", e))?
            .len()
    } else {
        0
    };
    let buf_size = if direct { 0 } else { cfg.app_buffer };
    Ok(FileHandle {
        file: Arc::new(file),
        path: path.to_path_buf(),
        writable,
        io_mode: cfg.io_mode,
        access_hint: cfg.access_hint,
        geometry,
        position,
        stage: Stage::Idle,
        buf: vec![0; buf_size],
    })
}

fn open_error(path: &Path, e: io::Error) -> EngineError {
    match e.kind() {
        io::ErrorKind::NotFound => EngineError::NotFound {
            path: path.to_path_buf(),
        },
        io::ErrorKind::AlreadyExists => EngineError::AlreadyExists {
            path: path.to_path_buf(),
        },
        _ => EngineError::io(path, "open", e),
    }
}

#[cfg(unix)]
fn pread(file: &File, buf: &mut [u8], offset: u64) -> io::Result<usize> {
    file.read_at(buf, offset)
}

#[cfg(windows)]
fn pread(file: &File, buf: &mut [u8], offset: u64) -> io::Result<usize> {
    file.seek_read(buf, offset)
}

#[cfg(unix)]
fn pwrite(file: &File, buf: &[u8], offset: u64) -> io::Result<usize> {
    file.write_at(buf, offset)
}

#[cfg(windows)]
fn pwrite(file: &File, buf: &[u8], offset: u64) -> io::Result<usize> {
    file.seek_write(buf, offset)
}

/// Reads until `buf` is full or end of file; returns the byte count.
pub(crate) fn read_full_at(file: &File, buf: &mut [u8], offset: u64) -> io::Result<usize> {
    let mut done = 0;
    while done < buf.len() {
        match pread(file, &mut buf[done..], offset + done as u64) {
            Ok(0) => break,
            Ok(n) => done += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(done)
}

pub(crate) fn write_all_at(file: &File, buf: &[u8], offset: u64) -> io::Result<()> {
    let mut done = 0;
    while done < buf.len() {
        match pwrite(file, &buf[done..], offset + done as u64) {
            Ok(0) => return Err(io::Error::new(io::ErrorKind::WriteZero, "wrote 0 bytes")),
            Ok(n) => done += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

impl FileHandle {
    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn position(&self) -> u64 {
        self.position
    }

    pub fn io_mode(&self) -> IoMode {
        self.io_mode
    }

    pub fn access_hint(&self) -> AccessHint {
        self.access_hint
    }

    pub fn geometry(&self) -> Option<SectorGeometry> {
        self.geometry
    }

    pub fn is_writable(&self) -> bool {
        self.writable
    }

    /// Logical length, including bytes still held in the application buffer.
    pub fn len(&self) -> Result<u64, EngineError> {
        let on_disk = self
            .file
            .metadata()
            .map_err(|e| EngineError::io(&self.path, "stat", e))?
            .len();
        Ok(match self.stage {
            Stage::Write { start, len } => on_disk.max(start + len as u64),
            _ => on_disk,
        })
    }

    pub fn is_empty(&self) -> Result<bool, EngineError> {
        Ok(self.len()? == 0)
    }

    /// Moves the position. Pending buffered writes are handed to the OS
    /// first.
    pub fn seek(&mut self, position: u64) -> Result<(), EngineError> {
        if position != self.position {
            self.flush_stage()?;
            self.position = position;
        }
        Ok(())
    }

    fn require_writable(&self) -> Result<(), EngineError> {
        if self.writable {
            Ok(())
        } else {
            Err(EngineError::NotWritable {
                path: self.path.clone(),
            })
        }
    }

    fn check_direct(&self, buf: &[u8], length: usize) -> Result<(), EngineError> {
        if self.io_mode != IoMode::Direct {
            if length > buf.len() {
                return Err(EngineError::BufferTooSmall {
                    length: length as u64,
                    capacity: buf.len() as u64,
                });
            }
            return Ok(());
        }
        let geom = self.geometry.expect("direct handle without geometry");
        let v = check_direct_request(
            geom,
            DirectRequest::for_slice(buf, length as u64, self.position),
        );
        if v.is_empty() {
            Ok(())
        } else {
            Err(EngineError::DirectViolation(v))
        }
    }

    fn flush_stage(&mut self) -> Result<(), EngineError> {
        if let Stage::Write { start, len } = self.stage {
            self.stage = Stage::Idle;
            write_all_at(&self.file, &self.buf[..len], start)
                .map_err(|e| EngineError::io(&self.path, "write", e))?;
        }
        Ok(())
    }

    /// Reads up to `length` bytes into `buf[..length]`. Returns fewer only at
    /// end of file, and 0 exactly at end of file.
    pub fn read_block(&mut self, buf: &mut [u8], length: usize) -> Result<usize, EngineError> {
        self.check_direct(buf, length)?;
        if self.io_mode == IoMode::Direct || self.buf.is_empty() {
            let n = read_full_at(&self.file, &mut buf[..length], self.position)
                .map_err(|e| EngineError::io(&self.path, "read", e))?;
            self.position += n as u64;
            return Ok(n);
        }
        self.flush_stage()?;
        let cap = self.buf.len();
        let mut done = 0;
        while done < length {
            if let Stage::Read { start, len } = self.stage {
                let end = start + len as u64;
                if self.position >= start && self.position < end {
                    let from = (self.position - start) as usize;
                    let n = (len - from).min(length - done);
                    buf[done..done + n].copy_from_slice(&self.buf[from..from + n]);
                    done += n;
                    self.position += n as u64;
                    continue;
                }
            }
            let want = length - done;
            if want >= cap {
                self.stage = Stage::Idle;
                let n = read_full_at(&self.file, &mut buf[done..length], self.position)
                    .map_err(|e| EngineError::io(&self.path, "read", e))?;
                done += n;
                self.position += n as u64;
                break;
            }
            let n = read_full_at(&self.file, &mut self.buf, self.position)
                .map_err(|e| EngineError::io(&self.path, "read", e))?;
            if n == 0 {
                self.stage = Stage::Idle;
                break;
            }
            self.stage = Stage::Read {
                start: self.position,
                len: n,
            };
        }
        Ok(done)
    }

    /// Next byte, or `None` at end of file.
    #[inline]
    pub fn read_byte(&mut self) -> Result<Option<u8>, EngineError> {
        if let Stage::Read { start, len } = self.stage {
            let rel = self.position.wrapping_sub(start);
            if rel < len as u64 {
                self.position += 1;
                return Ok(Some(self.buf[rel as usize]));
            }
        }
        let mut one = [0u8; 1];
        match self.read_block(&mut one, 1)? {
            0 => Ok(None),
            _ => Ok(Some(one[0])),
        }
    }

    /// Writes `buf[..length]` at the current position.
    pub fn write_block(&mut self, buf: &[u8], length: usize) -> Result<(), EngineError> {
        self.require_writable()?;
        self.check_direct(buf, length)?;
        if length == 0 {
            return Ok(());
        }
        if self.io_mode == IoMode::Direct || self.buf.is_empty() {
            write_all_at(&self.file, &buf[..length], self.position)
                .map_err(|e| EngineError::io(&self.path, "write", e))?;
            self.position += length as u64;
            return Ok(());
        }
        if matches!(self.stage, Stage::Read { .. }) {
            self.stage = Stage::Idle;
        }
        let cap = self.buf.len();
        if length >= cap {
            self.flush_stage()?;
            write_all_at(&self.file, &buf[..length], self.position)
                .map_err(|e| EngineError::io(&self.path, "write", e))?;
            self.position += length as u64;
            return Ok(());
        }
        let mut done = 0;
        while done < length {
            let (start, len) = match self.stage {
                Stage::Write { start, len } if start + len as u64 == self.position && len < cap => {
                    (start, len)
                }
                _ => {
                    self.flush_stage()?;
                    (self.position, 0)
                }
            };
            let n = (cap - len).min(length - done);
            self.buf[len..len + n].copy_from_slice(&buf[done..done + n]);
            done += n;
            self.position += n as u64;
            self.stage = Stage::Write {
                start,
                len: len + n,
            };
        }
        Ok(())
    }

    #[inline]
    pub fn write_byte(&mut self, b: u8) -> Result<(), EngineError> {
        if let Stage::Write { start, len } = self.stage {
            if start + len as u64 == self.position && len < self.buf.len() {
                self.buf[len] = b;
                self.stage = Stage::Write {
                    start,
                    len: len + 1,
                };
                self.position += 1;
                return Ok(());
            }
        }
        self.write_block(&[b], 1)
    }

    pub fn flush(&mut self, level: FlushLevel) -> Result<(), EngineError> {
        self.require_writable()?;
        self.flush_stage()?;
        if level == FlushLevel::OperatingSystemCache {
            platform::flush_os_cache(&self.file)
                .map_err(|e| EngineError::io(&self.path, "flush", e))?;
        }
        Ok(())
    }

    /// Sets the file length to `size` (growing with reserved storage where
    /// possible, or truncating).
    pub fn preallocate(&mut self, size: u64) -> Result<(), EngineError> {
        self.require_writable()?;
        self.flush_stage()?;
        self.stage = Stage::Idle;
        platform::preallocate(&self.file, size)
            .map_err(|e| EngineError::io(&self.path, "preallocate", e))
    }

    /// Extent count of the underlying file, where the platform reports it.
    pub fn extent_count(&mut self) -> Result<Option<u64>, EngineError> {
        self.flush_stage()?;
        platform::extent_count(&self.file)
            .map_err(|e| EngineError::io(&self.path, "extent query", e))
    }

    /// Converts into a positional handle that several threads can use at
    /// once. Pending buffered writes are handed to the OS first.
    pub fn into_shared(mut self) -> Result<SharedFile, EngineError> {
        self.flush_stage()?;
        Ok(SharedFile {
            inner: Arc::new(SharedInner {
                file: Arc::clone(&self.file),
                path: self.path.clone(),
                writable: self.writable,
                io_mode: self.io_mode,
                geometry: self.geometry,
            }),
        })
    }
}

impl Drop for FileHandle {
    fn drop(&mut self) {
        if let Err(e) = self.flush_stage() {
            log::warn!("{}: dropping unflushed data: {e}", self.path.display());
        }
    }
}

#[derive(Debug)]
struct SharedInner {
    file: Arc<File>,
    path: PathBuf,
    writable: bool,
    io_mode: IoMode,
    geometry: Option<SectorGeometry>,
}

/// Positional access to an open file from several threads. Every transfer
/// names its own offset; there is no shared position.
#[derive(Debug, Clone)]
pub struct SharedFile {
    inner: Arc<SharedInner>,
}

impl SharedFile {
    pub fn path(&self) -> &Path {
        &self.inner.path
    }

    pub fn io_mode(&self) -> IoMode {
        self.inner.io_mode
    }

    pub fn geometry(&self) -> Option<SectorGeometry> {
        self.inner.geometry
    }

    pub fn len(&self) -> Result<u64, EngineError> {
        Ok(self
            .inner
            .file
            .metadata()
            .map_err(|e| EngineError::io(&self.inner.path, "stat", e))?
            .len())
    }

    pub fn is_empty(&self) -> Result<bool, EngineError> {
        Ok(self.len()? == 0)
    }

    fn check(&self, buf: &[u8], length: usize, offset: u64) -> Result<(), EngineError> {
        match (self.inner.io_mode, self.inner.geometry) {
            (IoMode::Direct, Some(geom)) => {
                let v = check_direct_request(
                    geom,
                    DirectRequest::for_slice(buf, length as u64, offset),
                );
                if v.is_empty() {
                    Ok(())
                } else {
                    Err(EngineError::DirectViolation(v))
                }
            }
            _ if length > buf.len() => Err(EngineError::BufferTooSmall {
                length: length as u64,
                capacity: buf.len() as u64,
            }),
            _ => Ok(()),
        }
    }

    /// Reads up to `length` bytes at `offset`; short only at end of file.
    pub fn read_at(
        &self,
        buf: &mut [u8],
        length: usize,
        offset: u64,
    ) -> Result<usize, EngineError> {
        self.check(buf, length, offset)?;
        read_full_at(&self.inner.file, &mut buf[..length], offset)
            .map_err(|e| EngineError::io(&self.inner.path, "read", e))
    }

    pub fn write_at(&self, buf: &[u8], length: usize, offset: u64) -> Result<(), EngineError> {
        if !self.inner.writable {
            return Err(EngineError::NotWritable {
                path: self.inner.path.clone(),
            });
        }
        self.check(buf, length, offset)?;
        write_all_at(&self.inner.file, &buf[..length], offset)
            .map_err(|e| EngineError::io(&self.inner.path, "write", e))
    }

    pub fn set_len(&self, size: u64) -> Result<(), EngineError> {
        self.inner
            .file
            .set_len(size)
            .map_err(|e| EngineError::io(&self.inner.path, "set length", e))
    }

    pub fn flush_os_cache(&self) -> Result<(), EngineError> {
        platform::flush_os_cache(&self.inner.file)
            .map_err(|e| EngineError::io(&self.inner.path, "flush", e))
    }
}
