//! File access with explicit open dispositions, buffering tiers and
//! cache-bypass (direct) transfers.
//!
//! A [`FileHandle`] in [`IoMode::Buffered`] keeps a small application buffer
//! in front of the OS cache. Requests at least as large as that buffer go
//! straight to the OS. [`FlushLevel`] selects how far pending data is pushed.
//! A handle in [`IoMode::Direct`] is opened with the platform cache-bypass
//! flag and rejects any transfer that fails [`validate_direct_request`].

mod buffer;
mod direct;
mod handle;
pub(crate) mod platform;

use std::io;
use std::path::{Path, PathBuf};

pub use buffer::{allocate_aligned, AlignedBuffer};
pub use direct::{check_direct_request, validate_direct_request, DirectRequest, DirectViolation};
pub use handle::{open_file, open_file_with, FileHandle, OpenConfig, SharedFile};
pub use platform::process_cpu_seconds;

/// Alignment recommended for direct transfers regardless of sector size.
pub const RECOMMENDED_ALIGNMENT: u64 = 64 * 1024;

/// Size of the application-level buffer of a buffered handle unless
/// overridden in [`OpenConfig`].
pub const DEFAULT_APP_BUFFER: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum IoMode {
    #[default]
    Buffered,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum AccessHint {
    #[default]
    Sequential,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FlushLevel {
    /// Hand the handle's own buffered bytes to the OS.
    ApplicationBuffers,
    /// Also ask the OS to write its cached pages through to the device.
    /// Whether the device itself persists them is up to the hardware.
    OperatingSystemCache,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SectorGeometry {
    pub logical_sector: u64,
    pub recommended_alignment: u64,
}

impl SectorGeometry {
    /// Geometry offered when a volume cannot be queried.
    pub const FALLBACK: SectorGeometry = SectorGeometry {
        logical_sector: 4096,
        recommended_alignment: RECOMMENDED_ALIGNMENT,
    };

    /// Geometry for a volume with the given logical sector size, which must
    /// be a power of two of at least 512.
    pub fn new(logical_sector: u64) -> Result<Self, EngineError> {
        if logical_sector < 512 || !logical_sector.is_power_of_two() {
            return Err(EngineError::InvalidSector(logical_sector));
        }
        Ok(SectorGeometry {
            logical_sector,
            recommended_alignment: logical_sector.max(RECOMMENDED_ALIGNMENT),
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("{path}: file not found")]
    NotFound { path: PathBuf },
    #[error("{path}: file already exists")]
    AlreadyExists { path: PathBuf },
    #[error("{path}: permission denied")]
    PermissionDenied { path: PathBuf },
    #[error("{path}: cache-bypass (direct) I/O is not supported here")]
    DirectUnsupported { path: PathBuf },
    #[error("{path}: {disposition:?} requires write access")]
    ReadOnlyDisposition {
        path: PathBuf,
        disposition: crate::OpenDisposition,
    },
    #[error("direct transfer rejected: {}", join_violations(.0))]
    DirectViolation(Vec<DirectViolation>),
    #[error("{path}: handle is not writable")]
    NotWritable { path: PathBuf },
    #[error("requested {length} bytes but the buffer holds {capacity}")]
    BufferTooSmall { length: u64, capacity: u64 },
    #[error("alignment {0} is not a power of two")]
    InvalidAlignment(u64),
    #[error("sector size {0} is not a power of two of at least 512")]
    InvalidSector(u64),
    #[error("could not allocate {0} bytes")]
    AllocationFailed(u64),
    #[error("{path}: sector geometry unavailable ({reason}); fallback {fallback:?} may be adopted explicitly")]
    GeometryUnavailable {
        path: PathBuf,
        reason: String,
        fallback: SectorGeometry,
    },
    #[error("{path}: insufficient space to {op}")]
    NoSpace { path: PathBuf, op: &'static str },
    #[error("{path}: {op} failed: {source}")]
    Io {
        path: PathBuf,
        op: &'static str,
        #[source]
        source: io::Error,
    },
}

fn join_violations(v: &[DirectViolation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

impl EngineError {
    pub(crate) fn io(path: &Path, op: &'static str, source: io::Error) -> Self {
        if is_no_space(&source) {
            return EngineError::NoSpace {
                path: path.to_path_buf(),
                op,
            };
        }
        match source.kind() {
            io::ErrorKind::PermissionDenied => EngineError::PermissionDenied {
                path: path.to_path_buf(),
            },
            _ => EngineError::Io {
                path: path.to_path_buf(),
                op,
                source,
            },
        }
    }

    pub fn is_no_space(&self) -> bool {
        matches!(self, EngineError::NoSpace { .. })
    }
}

pub(crate) fn is_no_space(err: &io::Error) -> bool {
    #[cfg(unix)]
    {
        if err.raw_os_error() == Some(libc::ENOSPC) || err.raw_os_error() == Some(libc::EDQUOT) {
            return true;
        }
    }
    err.kind() == io::ErrorKind::StorageFull
}

/// Queries the logical sector size of the volume holding `path` (or its
/// parent directory when `path` does not exist yet).
pub fn detect_sector_geometry(path: &Path) -> Result<SectorGeometry, EngineError> {
    let probe = if path.exists() {
        path.to_path_buf()
    } else {
        match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        }
    };
    let unavailable = |reason: String| EngineError::GeometryUnavailable {
        path: path.to_path_buf(),
        reason,
        fallback: SectorGeometry::FALLBACK,
    };
    let sector = platform::logical_sector_size(&probe).map_err(|e| unavailable(e.to_string()))?;
    SectorGeometry::new(sector).map_err(|e| unavailable(e.to_string()))
}

/// Sets the length of the file behind `handle` to exactly `size`, reserving
/// storage for growth where the platform allows.
pub fn preallocate(handle: &mut FileHandle, size: u64) -> Result<(), EngineError> {
    handle.preallocate(size)
}

/// Number of extents backing the file at `path`; `None` where the platform
/// or filesystem cannot enumerate them.
pub fn count_extents(path: &Path) -> Result<Option<u64>, EngineError> {
    let file = std::fs::File::open(path).map_err(|e| EngineError::io(path, "open", e))?;
    platform::extent_count(&file).map_err(|e| EngineError::io(path, "extent query", e))
}

/// Total and used bytes of the volume holding `path`.
pub fn volume_usage(path: &Path) -> Result<(u64, u64), EngineError> {
    platform::volume_usage(path).map_err(|e| EngineError::io(path, "volume query", e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry_invariants() {
        let g = SectorGeometry::new(512).unwrap();
        assert_eq!(g.recommended_alignment, 65_536);
        let g = SectorGeometry::new(1 << 20).unwrap();
        assert_eq!(g.recommended_alignment, 1 << 20);
        assert!(SectorGeometry::new(256).is_err());
        assert!(SectorGeometry::new(1000).is_err());
    }

    #[test]
    fn fallback_is_conservative() {
        assert_eq!(SectorGeometry::FALLBACK.logical_sector, 4096);
        assert_eq!(SectorGeometry::FALLBACK.recommended_alignment, 65_536);
    }
}
