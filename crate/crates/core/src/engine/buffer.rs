use std::alloc::{self, Layout};
use std::fmt;
use std::ops::{Deref, DerefMut};
use std::ptr::NonNull;

use super::EngineError;

/// Zero-initialized heap memory whose base address is a multiple of
/// `alignment`.
pub struct AlignedBuffer {
    ptr: NonNull<u8>,
    capacity: usize,
    layout: Layout,
}

// SAFETY: the buffer owns its allocation exclusively; access goes through
// &self / &mut self like a Vec<u8>.
unsafe impl Send for AlignedBuffer {}
unsafe impl Sync for AlignedBuffer {}

/// Allocates `capacity` zeroed bytes aligned to `alignment`, which must be a
/// power of two.
pub fn allocate_aligned(capacity: u64, alignment: u64) -> Result<AlignedBuffer, EngineError> {
    if alignment == 0 || !alignment.is_power_of_two() {
        return Err(EngineError::InvalidAlignment(alignment));
    }
    let capacity_usize =
        usize::try_from(capacity).map_err(|_| EngineError::AllocationFailed(capacity))?;
    let alignment_usize =
        usize::try_from(alignment).map_err(|_| EngineError::InvalidAlignment(alignment))?;
    // Zero-sized allocations are not allowed; reserve one byte.
    let layout = Layout::from_size_align(capacity_usize.max(1), alignment_usize)
        .map_err(|_| EngineError::AllocationFailed(capacity))?;
    // SAFETY: layout has nonzero size.
    let raw = unsafe { alloc::alloc_zeroed(layout) };
    let ptr = NonNull::new(raw).ok_or(EngineError::AllocationFailed(capacity))?;
    Ok(AlignedBuffer {
        ptr,
        capacity: capacity_usize,
        layout,
    })
}

impl AlignedBuffer {
    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn alignment(&self) -> usize {
        self.layout.align()
    }

    pub fn base_addr(&self) -> usize {
        self.ptr.as_ptr() as usize
    }

    pub fn as_slice(&self) -> &[u8] {
        // SAFETY: ptr is valid for `capacity` initialized bytes.
        unsafe { std::slice::from_raw_parts(self.ptr.as_ptr(), self.capacity) }
    }

    pub fn as_mut_slice(&mut self) -> &mut [u8] {
        // SAFETY: as above, and we hold &mut self.
        unsafe { std::slice::from_raw_parts_mut(self.ptr.as_ptr(), self.capacity) }
    }
}

impl Deref for AlignedBuffer {
    type Target = [u8];

    fn deref(&self) -> &[u8] {
        self.as_slice()
    }
}

impl DerefMut for AlignedBuffer {
    fn deref_mut(&mut self) -> &mut [u8] {
        self.as_mut_slice()
    }
}

impl Drop for AlignedBuffer {
    fn drop(&mut self) {
        // SAFETY: allocated with this exact layout in allocate_aligned.
        unsafe { alloc::dealloc(self.ptr.as_ptr(), self.layout) }
    }
}

impl fmt::Debug for AlignedBuffer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AlignedBuffer")
            .field("base", &format_args!("{:#x}", self.base_addr()))
            .field("capacity", &self.capacity)
            .field("alignment", &self.alignment())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_is_aligned_and_zeroed() {
        let buf = allocate_aligned(64 * 1024, 4096).unwrap();
        assert_eq!(buf.base_addr() % 4096, 0);
        assert_eq!(buf.capacity(), 65_536);
        assert!(buf.iter().all(|&b| b == 0));
    }

    #[test]
    fn tiny_capacity_keeps_requested_size() {
        let buf = allocate_aligned(1, 512).unwrap();
        assert_eq!(buf.capacity(), 1);
        assert_eq!(buf.base_addr() % 512, 0);
        let empty = allocate_aligned(0, 64 * 1024).unwrap();
        assert_eq!(empty.capacity(), 0);
        assert_eq!(empty.base_addr() % 65_536, 0);
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(matches!(
            allocate_aligned(4096, 3000),
            Err(EngineError::InvalidAlignment(3000))
        ));
        assert!(matches!(
            allocate_aligned(4096, 0),
            Err(EngineError::InvalidAlignment(0))
        ));
    }

    #[test]
    fn writable() {
        let mut buf = allocate_aligned(16, 16).unwrap();
        buf[3] = 7;
        assert_eq!(buf.as_slice()[3], 7);
    }
}
