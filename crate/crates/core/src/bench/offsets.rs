use super::BenchError;
use crate::rng::SeededRng;

/// Parameters of the request-offset walk.
///
/// With no seek percentage (or 0) the walk is sequential: each offset is the
/// previous plus `block`, wrapping to 0 once the next request would run past
/// the end of the file.
///
/// With a seek percentage `p > 0` the next offset is
/// `current + block + delta`, where `delta` is uniform over
/// `[-d, +d)` with `d = p% * file_size`. The result is wrapped into the
/// valid start positions `[0, file_size - block]` and rounded down to a
/// multiple of `alignment` (the block size, or the sector size for direct
/// I/O). The arithmetic runs in units of `alignment`, so at `p = 100` with a
/// block-aligned file every block-aligned start is equally likely.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OffsetPlan {
    pub file_size: u64,
    pub block: u64,
    pub alignment: u64,
    pub seek_pct: Option<u8>,
}

impl OffsetPlan {
    pub fn new(
        file_size: u64,
        block: u64,
        alignment: u64,
        seek_pct: Option<u8>,
    ) -> Result<Self, BenchError> {
        if block == 0 {
            return Err(BenchError::Config("block size must be at least 1".into()));
        }
        if file_size < block {
            return Err(BenchError::FileSmallerThanBlock { file_size, block });
        }
        if alignment == 0 || alignment > block {
            return Err(BenchError::Config(format!(
                "offset alignment {alignment} must be in 1..={block}"
            )));
        }
        if let Some(p) = seek_pct {
            if p > 100 {
                return Err(BenchError::Config(format!(
                    "seek percentage {p} exceeds 100"
                )));
            }
        }
        Ok(OffsetPlan {
            file_size,
            block,
            alignment,
            seek_pct,
        })
    }

    pub fn is_sequential(&self) -> bool {
        matches!(self.seek_pct, None | Some(0))
    }

    /// Offset of the request following one at `current`.
    pub fn next(&self, current: u64, rng: &mut SeededRng) -> u64 {
        match self.seek_pct {
            None | Some(0) => {
                let next = current + self.block;
                if next + self.block > self.file_size {
                    0
                } else {
                    next
                }
            }
            Some(p) => {
                let a = self.alignment;
                let slots = (self.file_size - self.block) / a + 1;
                let step = self.block / a;
                let reach = (u128::from(p) * u128::from(self.file_size) / 100) as u64 / a;
                let delta = rng.signed_below(reach);
                let target = i128::from(current / a) + i128::from(step) + delta;
                target.rem_euclid(i128::from(slots)) as u64 * a
            }
        }
    }
}
