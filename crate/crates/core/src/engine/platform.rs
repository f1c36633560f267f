//! Per-OS primitives behind the engine.
//!
//! | capability            | Linux                                  | macOS                 | Windows                      | other           |
//! |-----------------------|----------------------------------------|-----------------------|------------------------------|-----------------|
//! | cache-bypass open     | `O_DIRECT` at open                     | `fcntl(F_NOCACHE, 1)` | `FILE_FLAG_NO_BUFFERING`     | unsupported     |
//! | flush OS cache        | `fsync` (`File::sync_all`)             | `fsync`               | `FlushFileBuffers`           | `sync_all`      |
//! | preallocate           | `fallocate(2)`, `set_len` fallback     | `set_len`             | `SetEndOfFile` (`set_len`)   | `set_len`       |
//! | logical sector size   | sysfs `queue/logical_block_size`       | unsupported           | unsupported                  | unsupported     |
//! | extent count          | `FS_IOC_FIEMAP`                        | unsupported           | unsupported                  | unsupported     |
//!
//! "Unsupported" surfaces as an error (sector size) or `None` (extent count),
//! never as a silent substitute.

use std::fs::{File, OpenOptions};
use std::io;
use std::path::Path;

/// Adds the cache-bypass flag to `opts` where the platform sets it at open.
pub(crate) fn set_direct_flag(opts: &mut OpenOptions) {
    #[cfg(target_os = "linux")]
    {
        use std::os::unix::fs::OpenOptionsExt;
        opts.custom_flags(libc::O_DIRECT);
    }
    #[cfg(windows)]
    {
        use std::os::windows::fs::OpenOptionsExt;
        const FILE_FLAG_NO_BUFFERING: u32 = 0x2000_0000;
        opts.custom_flags(FILE_FLAG_NO_BUFFERING);
    }
    #[cfg(not(any(target_os = "linux", windows)))]
    {
        let _ = opts;
    }
}

/// Applies any post-open cache-bypass step. Returns `Unsupported` when the
/// platform has no cache-bypass mechanism at all.
pub(crate) fn after_direct_open(file: &File) -> io::Result<()> {
    #[cfg(target_os = "macos")]
    {
        use std::os::unix::io::AsRawFd;
        let rc = unsafe { libc::fcntl(file.as_raw_fd(), libc::F_NOCACHE, 1) };
        if rc == -1 {
            return Err(io::Error::last_os_error());
        }
        Ok(())
    }
    #[cfg(any(target_os = "linux", windows))]
    {
        let _ = file;
        Ok(())
    }
    #[cfg(not(any(target_os = "linux", target_os = "macos", windows)))]
    {
        let _ = file;
        Err(io::Error::new(
            io::ErrorKind::Unsupported,
            "no cache-bypass open on this platform",
        ))
    }
}

/// True when an open error means "this filesystem cannot bypass the cache".
pub(crate) fn is_direct_unsupported(err: &io::Error) -> bool {
    #[cfg(unix)]
    {
        if err.raw_os_error() == Some(libc::EINVAL) {
            return true;
        }
    }
    err.kind() == io::ErrorKind::Unsupported
}

pub(crate) fn flush_os_cache(file: &File) -> io::Result<()> {
    file.sync_all()
}

/// Sets the file length to `size`, allocating backing storage for growth
/// where the platform can.
pub(crate) fn preallocate(file: &File, size: u64) -> io::Result<()> {
    let current = file.metadata()?.len();
    if size <= current {
        return file.set_len(size);
    }
    #[cfg(target_os = "linux")]
    {
        use std::os::unix::io::AsRawFd;
        let len = libc::off_t::try_from(size)
            .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "size exceeds off_t"))?;
        let rc = unsafe { libc::fallocate(file.as_raw_fd(), 0, 0, len) };
        if rc == 0 {
            return Ok(());
        }
        let err = io::Error::last_os_error();
        match err.raw_os_error() {
            Some(libc::EOPNOTSUPP) | Some(libc::ENOSYS) => {}
            _ => return Err(err),
        }
    }
    file.set_len(size)
}

/// Logical sector size of the block device holding `path`.
pub(crate) fn logical_sector_size(path: &Path) -> io::Result<u64> {
    #[cfg(target_os = "linux")]
    {
        use std::os::unix::fs::MetadataExt;
        let meta = std::fs::metadata(path)?;
        let dev = meta.dev();
        let (major, minor) = (libc::major(dev), libc::minor(dev));
        let base = std::path::PathBuf::from(format!("/sys/dev/block/{major}:{minor}"));
        // Whole disks carry queue/ directly; partitions inherit from the parent.
        for candidate in [
            base.join("queue/logical_block_size"),
            base.join("../queue/logical_block_size"),
        ] {
            if let Ok(text) = std::fs::read_to_string(&candidate) {
                return text.trim().parse::<u64>().map_err(|e| {
                    io::Error::new(
                        io::ErrorKind::InvalidData,
                        format!("{}: {e}", candidate.display()),
                    )
                });
            }
        }
        Err(io::Error::new(
            io::ErrorKind::Unsupported,
            format!("no block queue for device {major}:{minor}"),
        ))
    }
    #[cfg(not(target_os = "linux"))]
    {
        let _ = path;
        Err(io::Error::new(
            io::ErrorKind::Unsupported,
            "sector size query not implemented on this platform",
        ))
    }
}

#[cfg(target_os = "linux")]
#[repr(C)]
struct Fiemap {
    fm_start: u64,
    fm_length: u64,
    fm_flags: u32,
    fm_mapped_extents: u32,
    fm_extent_count: u32,
    fm_reserved: u32,
}

/// Number of on-disk extents backing `file`, or `None` where the platform
/// or filesystem cannot report it.
pub(crate) fn extent_count(file: &File) -> io::Result<Option<u64>> {
    #[cfg(target_os = "linux")]
    {
        use std::os::unix::io::AsRawFd;
        const FS_IOC_FIEMAP: libc::c_ulong = 0xC020_660B;
        const FIEMAP_FLAG_SYNC: u32 = 0x1;
        let mut map = Fiemap {
            fm_start: 0,
            fm_length: u64::MAX,
            fm_flags: FIEMAP_FLAG_SYNC,
            fm_mapped_extents: 0,
            fm_extent_count: 0,
            fm_reserved: 0,
        };
        let rc = unsafe { libc::ioctl(file.as_raw_fd(), FS_IOC_FIEMAP as _, &mut map) };
        if rc == -1 {
            let err = io::Error::last_os_error();
            return match err.raw_os_error() {
                Some(libc::EOPNOTSUPP) | Some(libc::ENOTTY) | Some(libc::EINVAL) => Ok(None),
                _ => Err(err),
            };
        }
        Ok(Some(u64::from(map.fm_mapped_extents)))
    }
    #[cfg(not(target_os = "linux"))]
    {
        let _ = file;
        Ok(None)
    }
}

/// Capacity and used bytes of the volume holding `path`.
pub(crate) fn volume_usage(path: &Path) -> io::Result<(u64, u64)> {
    #[cfg(unix)]
    {
        use std::ffi::CString;
        use std::os::unix::ffi::OsStrExt;
        let c = CString::new(path.as_os_str().as_bytes())
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e))?;
        let mut st: libc::statvfs = unsafe { std::mem::zeroed() };
        let rc = unsafe { libc::statvfs(c.as_ptr(), &mut st) };
        if rc != 0 {
            return Err(io::Error::last_os_error());
        }
        let frsize = st.f_frsize as u64;
        let capacity = st.f_blocks as u64 * frsize;
        let used = (st.f_blocks as u64).saturating_sub(st.f_bfree as u64) * frsize;
        Ok((capacity, used))
    }
    #[cfg(not(unix))]
    {
        let _ = path;
        Err(io::Error::new(
            io::ErrorKind::Unsupported,
            "volume usage query not implemented on this platform",
        ))
    }
}

/// Process CPU time (user + system) in seconds.
pub fn process_cpu_seconds() -> f64 {
    #[cfg(unix)]
    {
        let mut ts = libc::timespec {
            tv_sec: 0,
            tv_nsec: 0,
        };
        let rc = unsafe { libc::clock_gettime(libc::CLOCK_PROCESS_CPUTIME_ID, &mut ts) };
        if rc == 0 {
            return ts.tv_sec as f64 + ts.tv_nsec as f64 * 1e-9;
        }
        0.0
    }
    #[cfg(not(unix))]
    {
        0.0
    }
}

/// Passes the access-pattern hint to the OS read-ahead logic where supported.
pub(crate) fn advise(file: &File, hint: super::AccessHint) {
    #[cfg(target_os = "linux")]
    {
        use std::os::unix::io::AsRawFd;
        let advice = match hint {
            super::AccessHint::Sequential => libc::POSIX_FADV_SEQUENTIAL,
            super::AccessHint::Random => libc::POSIX_FADV_RANDOM,
        };
        // Advisory only; failure changes nothing observable.
        let _ = unsafe { libc::posix_fadvise(file.as_raw_fd(), 0, 0, advice) };
    }
    #[cfg(not(target_os = "linux"))]
    {
        let _ = (file, hint);
    }
}
