use std::fmt;

/// Transfer direction of a benchmark or handle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Direction {
    #[default]
    Read,
    Write,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Read => "read",
            Direction::Write => "write",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How [`crate::engine::open_file`] treats existing and missing files.
///
/// | disposition    | file exists              | file missing |
/// |----------------|--------------------------|--------------|
/// | `Open`         | open                     | not found    |
/// | `Create`       | truncate                 | create       |
/// | `CreateNew`    | already exists           | create       |
/// | `OpenOrCreate` | open                     | create       |
/// | `Append`       | open, positioned at end  | create       |
/// | `Truncate`     | truncate                 | not found    |
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpenDisposition {
    Open,
    Create,
    CreateNew,
    OpenOrCreate,
    Append,
    Truncate,
}

impl OpenDisposition {
    pub const ALL: [OpenDisposition; 6] = [
        OpenDisposition::Open,
        OpenDisposition::Create,
        OpenDisposition::CreateNew,
        OpenDisposition::OpenOrCreate,
        OpenDisposition::Append,
        OpenDisposition::Truncate,
    ];

    /// True when this disposition may create a missing file.
    pub fn creates(self) -> bool {
        !matches!(self, OpenDisposition::Open | OpenDisposition::Truncate)
    }

    /// True when this disposition needs write access regardless of the
    /// requested direction.
    pub fn modifies(self) -> bool {
        matches!(
            self,
            OpenDisposition::Create
                | OpenDisposition::CreateNew
                | OpenDisposition::Append
                | OpenDisposition::Truncate
        )
    }
}
