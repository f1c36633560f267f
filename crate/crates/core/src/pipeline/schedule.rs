use super::PipelineError;

/// One request of a ring copy: slot `slot` transfers `length` bytes at
/// `offset`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ScheduledRequest {
    pub slot: usize,
    pub offset: u64,
    pub length: u64,
}

/// Requests of a copy of `file_size` bytes through `depth` slots of `block`
/// bytes, in file order. Request `k` belongs to slot `k % depth`, so slot
/// `i` visits offsets `i*B, (i+depth)*B, ...`. Only the last request may be
/// shorter than `block`.
pub fn plan_schedule(
    file_size: u64,
    block: u64,
    depth: usize,
) -> Result<Vec<ScheduledRequest>, PipelineError> {
    if block == 0 {
        return Err(PipelineError::ZeroBlock);
    }
    if depth == 0 {
        return Err(PipelineError::ZeroDepth);
    }
    let count = file_size.div_ceil(block);
    Ok((0..count)
        .map(|k| {
            let offset = k * block;
            ScheduledRequest {
                slot: (k % depth as u64) as usize,
                offset,
                length: block.min(file_size - offset),
            }
        })
        .collect())
}
