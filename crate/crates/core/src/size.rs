//! Byte counts with `K`/`M`/`G` suffixes.
//!
//! Suffixes are binary multipliers: `K` = 2^10, `M` = 2^20, `G` = 2^30.

use std::fmt;
use std::str::FromStr;

const SUFFIXES: [(char, u64); 3] = [('G', 1 << 30), ('M', 1 << 20), ('K', 1 << 10)];

/// A count of bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ByteSize(pub u64);

impl ByteSize {
    pub const KIB: ByteSize = ByteSize(1 << 10);
    pub const MIB: ByteSize = ByteSize(1 << 20);
    pub const GIB: ByteSize = ByteSize(1 << 30);

    pub const fn bytes(self) -> u64 {
        self.0
    }

    pub const fn kib(n: u64) -> ByteSize {
        ByteSize(n << 10)
    }

    pub const fn mib(n: u64) -> ByteSize {
        ByteSize(n << 20)
    }

    pub const fn gib(n: u64) -> ByteSize {
        ByteSize(n << 30)
    }
}

impl From<u64> for ByteSize {
    fn from(bytes: u64) -> Self {
        ByteSize(bytes)
    }
}

impl fmt::Display for ByteSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_size(*self))
    }
}

impl FromStr for ByteSize {
    type Err = SizeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_size(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SizeError {
    #[error("empty size")]
    Empty,
    #[error("unknown size suffix '{suffix}' in '{token}'")]
    UnknownSuffix { token: String, suffix: String },
    #[error("size '{token}' is not a decimal number")]
    NotNumeric { token: String },
    #[error("size '{token}' overflows 64 bits")]
    Overflow { token: String },
}

/// Parses a decimal byte count with an optional, case-insensitive `K`, `M`
/// or `G` suffix.
pub fn parse_size(text: &str) -> Result<ByteSize, SizeError> {
    if text.is_empty() {
        return Err(SizeError::Empty);
    }
    let digits_end = text
        .find(|c: char| !c.is_ascii_digit())
        .unwrap_or(text.len());
    let (digits, suffix) = text.split_at(digits_end);
    if digits.is_empty() {
        return Err(SizeError::NotNumeric {
            token: text.to_string(),
        });
    }
    let multiplier = match suffix {
        "" => 1,
        s if s.len() == 1 => {
            let c = s.chars().next().unwrap().to_ascii_uppercase();
            match SUFFIXES.iter().find(|(sc, _)| *sc == c) {
                Some((_, m)) => *m,
                None => {
                    return Err(SizeError::UnknownSuffix {
                        token: text.to_string(),
                        suffix: s.to_string(),
                    })
                }
            }
        }
        s => {
            return Err(SizeError::UnknownSuffix {
                token: text.to_string(),
                suffix: s.to_string(),
            })
        }
    };
    let overflow = || SizeError::Overflow {
        token: text.to_string(),
    };
    let value: u64 = digits.parse().map_err(|_| overflow())?;
    value
        .checked_mul(multiplier)
        .map(ByteSize)
        .ok_or_else(overflow)
}

/// Shortest exact rendering: the largest suffix that divides evenly, else
/// plain bytes.
pub fn format_size(size: ByteSize) -> String {
    let n = size.0;
    if n == 0 {
        return "0".to_string();
    }
    for (suffix, mult) in SUFFIXES {
        if n.is_multiple_of(mult) {
            return format!("{}{}", n / mult, suffix);
        }
    }
    n.to_string()
}
