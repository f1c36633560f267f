/// Streaming FNV-1a (64-bit) over a byte sequence.
///
/// The value depends only on the concatenated input, so feeding a file one
/// byte at a time, one line at a time, or in blocks of any size gives the
/// same result as long as the bytes arrive in file order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Checksum {
    state: u64,
    bytes: u64,
}

const OFFSET_BASIS: u64 = 0xcbf2_9ce4_8422_2325;
const PRIME: u64 = 0x0000_0100_0000_01b3;

impl Default for Checksum {
    fn default() -> Self {
        Self::new()
    }
}

impl Checksum {
    pub const fn new() -> Self {
        Checksum {
            state: OFFSET_BASIS,
            bytes: 0,
        }
    }

    #[inline]
    pub fn update_byte(&mut self, b: u8) {
        self.state ^= u64::from(b);
        self.state = self.state.wrapping_mul(PRIME);
        self.bytes += 1;
    }

    #[inline]
    pub fn update(&mut self, data: &[u8]) {
        let mut s = self.state;
        for &b in data {
            s ^= u64::from(b);
            s = s.wrapping_mul(PRIME);
        }
        self.state = s;
        self.bytes += data.len() as u64;
    }

    pub fn value(&self) -> u64 {
        self.state
    }

    /// Number of bytes folded in so far.
    pub fn bytes(&self) -> u64 {
        self.bytes
    }

    pub fn of(data: &[u8]) -> Self {
        let mut c = Checksum::new();
        c.update(data);
        c
    }
}
