use std::path::PathBuf;
use std::time::Duration;

use seqio::bench::{
    ExtensionMode, IoConfig, DEFAULT_ASYNC_DEPTH, DEFAULT_FILE_SIZE, DEFAULT_SEEK_PCT,
};
use seqio::fragger::{FragConfig, Scale};
use seqio::integration::FigureScale;
use seqio::{parse_size, ByteSize, Direction, SeedValue};

use crate::CliError;

pub const DEFAULT_RECORDS: u64 = 1_000_000;
pub const EXAMPLES_FILE: &str = "IO_Examples_temp.txt";
pub const COPY_SIZE: ByteSize = ByteSize::gib(1);

#[derive(Debug, Clone, PartialEq)]
pub enum Invocation {
    Iospeed(IospeedArgs),
    Fragdisk(FragdiskArgs),
    Examples(ExamplesArgs),
    Asynccopy(CopyArgs),
    Figures(FiguresArgs),
    Help(&'static str),
}

/// A timed test, optionally preceded by building the target with `-x` or
/// `-p`.
#[derive(Debug, Clone, PartialEq)]
pub struct IospeedArgs {
    pub config: IoConfig,
    pub extension: Option<ExtensionMode>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FragdiskArgs {
    pub config: FragConfig,
    pub event_log: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExamplesArgs {
    pub path: PathBuf,
    pub records: u64,
    pub seed: SeedValue,
    pub keep: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CopyArgs {
    pub dir: PathBuf,
    pub size: ByteSize,
    pub block: ByteSize,
    pub depth: usize,
    pub direct: bool,
    pub seed: SeedValue,
    pub quiet: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiguresArgs {
    pub out: PathBuf,
    pub scratch: Option<PathBuf>,
    pub scale: FigureScale,
}

pub const IOSPEED_USAGE: &str = "\
usage: seqio iospeed [options] filePath
  -r[fileSize]   read, creating or extending the file if needed (default=1G)
  -w[fileSize]   write (default is read) (default=1G)
  -t<seconds>    test duration (default=30)
  -b<size>       request size (default=64K)
  -a[count]      asynchronous I/O, bare form means depth 4 (default is sync)
  -d             bypass the OS cache
  -s[pct]        random I/O, average seek distance as percent of file (bare=100, default sequential)
  -x<fileSize>   create/extend the file to the given size, then run the timed test
  -p<fileSize>   like -x but preallocate the file first
  -c             touch every byte
  -q             quiet: print only the CSV row
  --trials <n>   measured trials (default=5)
  --seed <n>     random seed (default=137)
  --offset-log <path>  write request offsets, one per line
  --no-warmup    skip the unmeasured warm-up trial
sizes take an optional K, M or G suffix (powers of 1024)";

pub const FRAGDISK_USAGE: &str = "\
usage: seqio fragdisk [options] directoryPath
  -m<count>   max. number of files to create           (default=100000)
  -Fm<size>   min. file size in MB                     (default=1)
  -FM<size>   max. file size in MB                     (default=256)
  -c<count>   files per cycle                          (default=1000)
  -d<count>   max. files per directory                 (default=100)
  -s<count>   max. sub-directories per directory       (default=10)
  -n<count>   max. create/delete cycles, 0 = no limit  (default=0)
  -k<pctg>    percentage (1-99) of files to keep       (default=5)
  -f<pctg>    percentage (1-99) to fill the volume     (default=70)
  -r<value>   random seed                              (default=137)
  --quota <size>    scaled mode: treat this many bytes as the volume
  --divisor <n>     scaled mode: divide file sizes by n (default=1)
  --events <path>   write the create/delete event log";

pub const EXAMPLES_USAGE: &str = "\
usage: seqio examples [fileName [recordCount]]
  default file name is IO_Examples_temp.txt in the temp directory
  default record count is 1,000,000 (100-byte records)
  --seed <n>  random seed (default=137)
  --keep      leave the file in place";

pub const ASYNCCOPY_USAGE: &str = "\
usage: seqio asynccopy [options] [directory]
  -S<size>    source file size (default=1G)
  -b<size>    request size (default=1M)
  -a<count>   outstanding requests (default=4)
  -d          bypass the OS cache
  -q          quiet: print only the CSV row
  --seed <n>  random seed (default=137)";

pub const FIGURES_USAGE: &str = "\
usage: seqio figures [--quick|--full] [--scratch <dir>] outDir
  --quick   short trials on 64 MiB files (default)
  --full    tool defaults: 30 s trials on 1 GiB files";

pub const MAIN_USAGE: &str = "\
usage: seqio <iospeed|fragdisk|examples|asynccopy|figures> [options]
run `seqio <tool> -h` for the tool's options";

fn usage(tool: &'static str, msg: impl Into<String>) -> CliError {
    CliError::Usage {
        message: msg.into(),
        usage: tool,
    }
}

/// Parses `args` without the program name; the first element selects the
/// tool.
pub fn parse(args: &[String]) -> Result<Invocation, CliError> {
    let Some((tool, rest)) = args.split_first() else {
        return Err(usage(MAIN_USAGE, "missing tool name"));
    };
    parse_tool(tool, rest)
}

type Parser = fn(&[String]) -> Result<Invocation, CliError>;

/// Parses the arguments of a named tool. Tool names are matched without
/// case and an optional `.exe`.
pub fn parse_tool(tool: &str, rest: &[String]) -> Result<Invocation, CliError> {
    let name = tool.to_ascii_lowercase();
    let name = name.strip_suffix(".exe").unwrap_or(&name);
    let (help, parsed): (&'static str, Parser) = match name {
        "iospeed" => (IOSPEED_USAGE, |a| parse_iospeed(a).map(Invocation::Iospeed)),
        "fragdisk" => (FRAGDISK_USAGE, |a| {
            parse_fragdisk(a).map(Invocation::Fragdisk)
        }),
        "examples" | "ioexamples" => (EXAMPLES_USAGE, |a| {
            parse_examples(a).map(Invocation::Examples)
        }),
        "asynccopy" => (ASYNCCOPY_USAGE, |a| {
            parse_asynccopy(a).map(Invocation::Asynccopy)
        }),
        "figures" => (FIGURES_USAGE, |a| parse_figures(a).map(Invocation::Figures)),
        "-h" | "--help" | "help" => return Ok(Invocation::Help(MAIN_USAGE)),
        other => return Err(usage(MAIN_USAGE, format!("unknown tool '{other}'"))),
    };
    if rest.iter().any(|a| a == "-h" || a == "--help" || a == "-?") {
        return Ok(Invocation::Help(help));
    }
    parsed(rest)
}

fn size_arg(tool: &'static str, flag: &str, v: &str) -> Result<ByteSize, CliError> {
    parse_size(v).map_err(|e| usage(tool, format!("{flag}: {e}")))
}

fn num_arg<T: std::str::FromStr>(tool: &'static str, flag: &str, v: &str) -> Result<T, CliError> {
    v.parse()
        .map_err(|_| usage(tool, format!("{flag}: '{v}' is not a valid number")))
}

fn pct_arg(
    tool: &'static str,
    flag: &str,
    v: &str,
    range: std::ops::RangeInclusive<u8>,
) -> Result<u8, CliError> {
    let p: u8 = num_arg(tool, flag, v)?;
    if !range.contains(&p) {
        return Err(usage(
            tool,
            format!(
                "{flag}: percentage {p} outside {}-{}",
                range.start(),
                range.end()
            ),
        ));
    }
    Ok(p)
}

/// Walks `args`, splitting `--name value`/`--name=value` long options from
/// single-dash flags and positionals.
struct Tokens<'a> {
    args: &'a [String],
    at: usize,
}

enum Token<'a> {
    Long(&'a str, Option<&'a str>),
    Short(&'a str),
    Positional(&'a str),
}

impl<'a> Tokens<'a> {
    fn new(args: &'a [String]) -> Self {
        Tokens { args, at: 0 }
    }

    fn next(&mut self) -> Option<Token<'a>> {
        let a = self.args.get(self.at)?.as_str();
        self.at += 1;
        Some(if let Some(long) = a.strip_prefix("--") {
            match long.split_once('=') {
                Some((k, v)) => Token::Long(k, Some(v)),
                None => Token::Long(long, None),
            }
        } else if a.len() > 1 && a.starts_with('-') {
            Token::Short(&a[1..])
        } else {
            Token::Positional(a)
        })
    }

    /// Value of a long option: attached with `=` or the next argument.
    fn value(
        &mut self,
        tool: &'static str,
        name: &str,
        inline: Option<&'a str>,
    ) -> Result<&'a str, CliError> {
        if let Some(v) = inline {
            return Ok(v);
        }
        let v = self
            .args
            .get(self.at)
            .ok_or_else(|| usage(tool, format!("--{name} needs a value")))?;
        self.at += 1;
        Ok(v)
    }

    /// Value of a short flag that requires one: attached, else the next
    /// argument.
    fn required(
        &mut self,
        tool: &'static str,
        flag: char,
        attached: &'a str,
    ) -> Result<&'a str, CliError> {
        if !attached.is_empty() {
            return Ok(attached);
        }
        let v = self
            .args
            .get(self.at)
            .ok_or_else(|| usage(tool, format!("-{flag} needs a value")))?;
        self.at += 1;
        Ok(v)
    }
}

fn no_value(tool: &'static str, flag: char, rest: &str) -> Result<(), CliError> {
    if rest.is_empty() {
        Ok(())
    } else {
        Err(usage(
            tool,
            format!("-{flag} takes no value (got '{rest}')"),
        ))
    }
}

fn seconds_arg(tool: &'static str, v: &str) -> Result<Duration, CliError> {
    let s: f64 = num_arg(tool, "-t", v)?;
    if !(s.is_finite() && s > 0.0) {
        return Err(usage(
            tool,
            format!("-t: duration must be positive (got {v})"),
        ));
    }
    Ok(Duration::from_secs_f64(s))
}

pub fn parse_iospeed(args: &[String]) -> Result<IospeedArgs, CliError> {
    const T: &str = IOSPEED_USAGE;
    let mut cfg = IoConfig::new(PathBuf::new());
    let mut direction: Option<Direction> = None;
    let mut rw_size: Option<ByteSize> = None;
    let mut extension: Option<(ExtensionMode, Option<ByteSize>)> = None;
    let mut target: Option<PathBuf> = None;
    let mut toks = Tokens::new(args);
    while let Some(tok) = toks.next() {
        match tok {
            Token::Long(name, inline) => match name {
                "trials" => cfg.trials = num_arg(T, "--trials", toks.value(T, name, inline)?)?,
                "seed" => cfg.seed = SeedValue(num_arg(T, "--seed", toks.value(T, name, inline)?)?),
                "offset-log" => cfg.offset_log = Some(toks.value(T, name, inline)?.into()),
                "no-warmup" => cfg.warmup = false,
                _ => return Err(usage(T, format!("unknown option --{name}"))),
            },
            Token::Short(s) => {
                let flag = s.chars().next().unwrap();
                let rest = &s[flag.len_utf8()..];
                match flag {
                    'r' | 'w' => {
                        let d = if flag == 'r' {
                            Direction::Read
                        } else {
                            Direction::Write
                        };
                        if direction.is_some_and(|prev| prev != d) {
                            return Err(usage(T, "-r and -w cannot be combined"));
                        }
                        direction = Some(d);
                        if !rest.is_empty() {
                            rw_size = Some(size_arg(T, &format!("-{flag}"), rest)?);
                        }
                    }
                    't' => cfg.duration = seconds_arg(T, toks.required(T, 't', rest)?)?,
                    'b' => cfg.block = size_arg(T, "-b", toks.required(T, 'b', rest)?)?,
                    'a' => {
                        cfg.async_depth = Some(if rest.is_empty() {
                            DEFAULT_ASYNC_DEPTH
                        } else {
                            num_arg(T, "-a", rest)?
                        })
                    }
                    'd' => {
                        no_value(T, 'd', rest)?;
                        cfg.direct = true;
                    }
                    's' => {
                        let p = if rest.is_empty() {
                            DEFAULT_SEEK_PCT
                        } else {
                            pct_arg(T, "-s", rest, 0..=100)?
                        };
                        cfg.seek_pct = (p > 0).then_some(p);
                    }
                    'x' | 'p' => {
                        let mode = if flag == 'x' {
                            ExtensionMode::Incremental
                        } else {
                            ExtensionMode::Preallocated
                        };
                        if extension.is_some_and(|(m, _)| m != mode) {
                            return Err(usage(T, "-x and -p are mutually exclusive"));
                        }
                        let size = if rest.is_empty() {
                            None
                        } else {
                            Some(size_arg(T, &format!("-{flag}"), rest)?)
                        };
                        extension = Some((mode, size));
                    }
                    'c' => {
                        no_value(T, 'c', rest)?;
                        cfg.touch = true;
                    }
                    'q' => {
                        no_value(T, 'q', rest)?;
                        cfg.quiet = true;
                    }
                    _ => return Err(usage(T, format!("unknown option -{s}"))),
                }
            }
            Token::Positional(p) => {
                if target.replace(p.into()).is_some() {
                    return Err(usage(T, format!("unexpected extra argument '{p}'")));
                }
            }
        }
    }
    cfg.target = target.ok_or_else(|| usage(T, "missing filePath"))?;
    cfg.direction = direction.unwrap_or(Direction::Read);
    cfg.file_size = extension
        .and_then(|(_, s)| s)
        .or(rw_size)
        .unwrap_or(DEFAULT_FILE_SIZE);
    cfg.validate().map_err(|e| usage(T, e.to_string()))?;
    Ok(IospeedArgs {
        config: cfg,
        extension: extension.map(|(m, _)| m),
    })
}

/// Fragment sizes are megabytes unless a suffix says otherwise.
fn mb_arg(tool: &'static str, flag: &str, v: &str) -> Result<ByteSize, CliError> {
    if !v.is_empty() && v.bytes().all(|b| b.is_ascii_digit()) {
        let n: u64 = num_arg(tool, flag, v)?;
        n.checked_mul(1 << 20)
            .map(ByteSize)
            .ok_or_else(|| usage(tool, format!("{flag}: {v} MB overflows")))
    } else {
        size_arg(tool, flag, v)
    }
}

pub fn parse_fragdisk(args: &[String]) -> Result<FragdiskArgs, CliError> {
    const T: &str = FRAGDISK_USAGE;
    let mut cfg = FragConfig::new(PathBuf::new());
    let mut quota: Option<ByteSize> = None;
    let mut divisor: Option<u64> = None;
    let mut event_log = None;
    let mut root: Option<PathBuf> = None;
    let mut toks = Tokens::new(args);
    while let Some(tok) = toks.next() {
        match tok {
            Token::Long(name, inline) => {
                let v = toks.value(T, name, inline)?;
                match name {
                    "quota" => quota = Some(size_arg(T, "--quota", v)?),
                    "divisor" => divisor = Some(num_arg(T, "--divisor", v)?),
                    "events" => event_log = Some(PathBuf::from(v)),
                    _ => return Err(usage(T, format!("unknown option --{name}"))),
                }
            }
            Token::Short(s) => {
                if let Some(v) = s.strip_prefix("Fm") {
                    cfg.min_file = mb_arg(T, "-Fm", v)?;
                    continue;
                }
                if let Some(v) = s.strip_prefix("FM") {
                    cfg.max_file = mb_arg(T, "-FM", v)?;
                    continue;
                }
                let flag = s.chars().next().unwrap();
                let v = toks.required(T, flag, &s[flag.len_utf8()..])?;
                let f = format!("-{flag}");
                match flag {
                    'm' => cfg.max_files = num_arg(T, &f, v)?,
                    'c' => cfg.files_per_cycle = num_arg(T, &f, v)?,
                    'd' => cfg.max_files_per_dir = num_arg(T, &f, v)?,
                    's' => cfg.max_subdirs_per_dir = num_arg(T, &f, v)?,
                    'n' => cfg.max_cycles = num_arg(T, &f, v)?,
                    'k' => cfg.keep_pct = pct_arg(T, &f, v, 1..=99)?,
                    'f' => cfg.fill_pct = pct_arg(T, &f, v, 1..=99)?,
                    'r' => cfg.seed = SeedValue(num_arg(T, &f, v)?),
                    _ => return Err(usage(T, format!("unknown option -{s}"))),
                }
            }
            Token::Positional(p) => {
                if root.replace(p.into()).is_some() {
                    return Err(usage(T, format!("unexpected extra argument '{p}'")));
                }
            }
        }
    }
    cfg.root = root.ok_or_else(|| usage(T, "missing directoryPath"))?;
    cfg.scale = match (quota, divisor) {
        (None, None) => None,
        (Some(q), d) => Some(Scale {
            quota: q.bytes(),
            divisor: d.unwrap_or(1),
        }),
        (None, Some(_)) => return Err(usage(T, "--divisor needs --quota")),
    };
    cfg.validate().map_err(|e| usage(T, e.to_string()))?;
    Ok(FragdiskArgs {
        config: cfg,
        event_log,
    })
}

pub fn parse_examples(args: &[String]) -> Result<ExamplesArgs, CliError> {
    const T: &str = EXAMPLES_USAGE;
    let mut out = ExamplesArgs {
        path: std::env::temp_dir().join(EXAMPLES_FILE),
        records: DEFAULT_RECORDS,
        seed: SeedValue::default(),
        keep: false,
    };
    let mut positional = Vec::new();
    let mut toks = Tokens::new(args);
    while let Some(tok) = toks.next() {
        match tok {
            Token::Long("seed", inline) => {
                out.seed = SeedValue(num_arg(T, "--seed", toks.value(T, "seed", inline)?)?)
            }
            Token::Long("keep", None) => out.keep = true,
            Token::Long(name, _) => return Err(usage(T, format!("unknown option --{name}"))),
            // A negative count arrives looking like a flag.
            Token::Short(s) if positional.len() == 1 => positional.push(format!("-{s}")),
            Token::Short(s) => return Err(usage(T, format!("unknown option -{s}"))),
            Token::Positional(p) => positional.push(p.to_string()),
        }
    }
    match positional.as_slice() {
        [] => {}
        [path] => out.path = path.into(),
        [path, count] => {
            out.path = path.into();
            out.records = count.parse().map_err(|_| {
                usage(
                    T,
                    format!("record count '{count}' must be a non-negative integer"),
                )
            })?;
        }
        [_, _, extra, ..] => return Err(usage(T, format!("unexpected extra argument '{extra}'"))),
    }
    Ok(out)
}

pub fn parse_asynccopy(args: &[String]) -> Result<CopyArgs, CliError> {
    const T: &str = ASYNCCOPY_USAGE;
    let mut out = CopyArgs {
        dir: std::env::temp_dir(),
        size: COPY_SIZE,
        block: ByteSize(seqio::pipeline::DEFAULT_BLOCK),
        depth: seqio::pipeline::DEFAULT_DEPTH,
        direct: false,
        seed: SeedValue::default(),
        quiet: false,
    };
    let mut dir = None;
    let mut toks = Tokens::new(args);
    while let Some(tok) = toks.next() {
        match tok {
            Token::Long("seed", inline) => {
                out.seed = SeedValue(num_arg(T, "--seed", toks.value(T, "seed", inline)?)?)
            }
            Token::Long(name, _) => return Err(usage(T, format!("unknown option --{name}"))),
            Token::Short(s) => {
                let flag = s.chars().next().unwrap();
                let rest = &s[flag.len_utf8()..];
                match flag {
                    'S' => out.size = size_arg(T, "-S", toks.required(T, 'S', rest)?)?,
                    'b' => out.block = size_arg(T, "-b", toks.required(T, 'b', rest)?)?,
                    'a' => out.depth = num_arg(T, "-a", toks.required(T, 'a', rest)?)?,
                    'd' => {
                        no_value(T, 'd', rest)?;
                        out.direct = true;
                    }
                    'q' => {
                        no_value(T, 'q', rest)?;
                        out.quiet = true;
                    }
                    _ => return Err(usage(T, format!("unknown option -{s}"))),
                }
            }
            Token::Positional(p) => {
                if dir.replace(PathBuf::from(p)).is_some() {
                    return Err(usage(T, format!("unexpected extra argument '{p}'")));
                }
            }
        }
    }
    if let Some(d) = dir {
        out.dir = d;
    }
    if out.block.bytes() == 0 || out.depth == 0 {
        return Err(usage(T, "request size and depth must be positive"));
    }
    Ok(out)
}

pub fn parse_figures(args: &[String]) -> Result<FiguresArgs, CliError> {
    const T: &str = FIGURES_USAGE;
    let mut scale = FigureScale::Quick;
    let mut scratch = None;
    let mut out = None;
    let mut toks = Tokens::new(args);
    while let Some(tok) = toks.next() {
        match tok {
            Token::Long("full", None) => scale = FigureScale::Full,
            Token::Long("quick", None) => scale = FigureScale::Quick,
            Token::Long("scratch", inline) => {
                scratch = Some(PathBuf::from(toks.value(T, "scratch", inline)?))
            }
            Token::Long(name, _) => return Err(usage(T, format!("unknown option --{name}"))),
            Token::Short(s) => return Err(usage(T, format!("unknown option -{s}"))),
            Token::Positional(p) => {
                if out.replace(PathBuf::from(p)).is_some() {
                    return Err(usage(T, format!("unexpected extra argument '{p}'")));
                }
            }
        }
    }
    Ok(FiguresArgs {
        out: out.ok_or_else(|| usage(T, "missing outDir"))?,
        scratch,
        scale,
    })
}
