use std::fmt;

use super::{AlignedBuffer, SectorGeometry};

/// One way a transfer breaks the cache-bypass alignment rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DirectViolation {
    MisalignedBase { base: usize, sector: u64 },
    RaggedLength { length: u64, sector: u64 },
    RaggedOffset { offset: u64, sector: u64 },
    CapacityExceeded { length: u64, capacity: u64 },
}

impl fmt::Display for DirectViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            DirectViolation::MisalignedBase { base, sector } => {
                write!(f, "buffer base {base:#x} is not a multiple of {sector}")
            }
            DirectViolation::RaggedLength { length, sector } => {
                write!(f, "length {length} is not a multiple of {sector}")
            }
            DirectViolation::RaggedOffset { offset, sector } => {
                write!(f, "file offset {offset} is not a multiple of {sector}")
            }
            DirectViolation::CapacityExceeded { length, capacity } => {
                write!(f, "length {length} exceeds buffer capacity {capacity}")
            }
        }
    }
}

/// A transfer described by raw numbers, so arbitrary (even impossible)
/// combinations can be checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DirectRequest {
    pub base: usize,
    pub capacity: u64,
    pub length: u64,
    pub offset: u64,
}

impl DirectRequest {
    pub fn for_slice(buf: &[u8], length: u64, offset: u64) -> Self {
        DirectRequest {
            base: buf.as_ptr() as usize,
            capacity: buf.len() as u64,
            length,
            offset,
        }
    }
}

/// Every violation of `req` against `geom`, in a fixed order; empty means
/// the transfer is acceptable.
pub fn check_direct_request(geom: SectorGeometry, req: DirectRequest) -> Vec<DirectViolation> {
    let sector = geom.logical_sector;
    let mask = sector - 1;
    let mut out = Vec::new();
    if req.base as u64 & mask != 0 {
        out.push(DirectViolation::MisalignedBase {
            base: req.base,
            sector,
        });
    }
    if req.length & mask != 0 {
        out.push(DirectViolation::RaggedLength {
            length: req.length,
            sector,
        });
    }
    if req.offset & mask != 0 {
        out.push(DirectViolation::RaggedOffset {
            offset: req.offset,
            sector,
        });
    }
    if req.length > req.capacity {
        out.push(DirectViolation::CapacityExceeded {
            length: req.length,
            capacity: req.capacity,
        });
    }
    out
}

/// Checks a transfer of `length` bytes between `buffer` and `file_offset`.
pub fn validate_direct_request(
    geom: SectorGeometry,
    buffer: &AlignedBuffer,
    length: u64,
    file_offset: u64,
) -> Result<(), Vec<DirectViolation>> {
    let v = check_direct_request(geom, DirectRequest::for_slice(buffer, length, file_offset));
    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::allocate_aligned;
    use proptest::prelude::*;

    fn geom(sector: u64) -> SectorGeometry {
        SectorGeometry::new(sector).unwrap()
    }

    #[test]
    fn aligned_request_is_ok() {
        let buf = allocate_aligned(65_536, 4096).unwrap();
        assert_eq!(validate_direct_request(geom(512), &buf, 65_536, 0), Ok(()));
    }

    #[test]
    fn ragged_length_is_reported() {
        let buf = allocate_aligned(65_536, 4096).unwrap();
        assert_eq!(
            validate_direct_request(geom(512), &buf, 1000, 0),
            Err(vec![DirectViolation::RaggedLength {
                length: 1000,
                sector: 512
            }])
        );
    }

    #[test]
    fn ragged_offset_is_reported() {
        let buf = allocate_aligned(65_536, 4096).unwrap();
        assert_eq!(
            validate_direct_request(geom(4096), &buf, 4096, 2048),
            Err(vec![DirectViolation::RaggedOffset {
                offset: 2048,
                sector: 4096
            }])
        );
    }

    #[test]
    fn all_violations_listed_together() {
        let req = DirectRequest {
            base: 0x1001,
            capacity: 100,
            length: 513,
            offset: 7,
        };
        let v = check_direct_request(geom(512), req);
        assert_eq!(v.len(), 4);
    }

    /// Divisibility by enumeration of multiples; deliberately unlike the
    /// mask arithmetic above.
    fn is_multiple_brute(x: u64, s: u64) -> bool {
        let mut m = 0u64;
        while m < x {
            m += s;
        }
        m == x
    }

    proptest! {
        #[test]
        fn matches_brute_force(
            shift in 9u32..13,
            base in 0usize..40_000,
            length in 0u64..40_000,
            offset in 0u64..40_000,
            capacity in 0u64..40_000,
        ) {
            let sector = 1u64 << shift;
            let req = DirectRequest { base, capacity, length, offset };
            let expected_ok = is_multiple_brute(base as u64, sector)
                && is_multiple_brute(length, sector)
                && is_multiple_brute(offset, sector)
                && length <= capacity;
            prop_assert_eq!(check_direct_request(geom(sector), req).is_empty(), expected_ok);
        }
    }
}
