//! CSV rows and SVG plots of benchmark results.
//!
//! CSV schema v1, one row per measurement, columns in this order:
//!
//! | column            | content                                         |
//! |-------------------|-------------------------------------------------|
//! | `tool`            | producing tool and mode, e.g. `iospeed`         |
//! | `direction`       | `read` or `write`                               |
//! | `block_bytes`     | request size in bytes                           |
//! | `direct`          | `true` when the OS cache was bypassed           |
//! | `async_depth`     | outstanding requests; empty when synchronous    |
//! | `seek_pct`        | seek distance percentage; empty when sequential |
//! | `trials`          | measured trials                                 |
//! | `bytes_moved`     | bytes over all measured trials                  |
//! | `wall_s`          | wall seconds over all measured trials           |
//! | `cpu_s`           | process CPU seconds over all measured trials    |
//! | `mb_per_sec`      | median MB/s (10^6 bytes) across trials          |
//! | `ns_per_byte`     | median CPU nanoseconds per byte                 |
//! | `cycles_per_byte` | `ns_per_byte` times the nominal clock in GHz    |
//! | `stddev`          | population standard deviation of MB/s           |
//!
//! Numbers use a dot decimal separator and the shortest text that reads
//! back to the same value.

use std::fmt::Write as _;
use std::path::Path;

use crate::bench::{BenchmarkResult, MeasurementKind};

pub const CSV_SCHEMA_VERSION: u32 = 1;

pub const CSV_HEADER: [&str; 14] = [
    "tool",
    "direction",
    "block_bytes",
    "direct",
    "async_depth",
    "seek_pct",
    "trials",
    "bytes_moved",
    "wall_s",
    "cpu_s",
    "mb_per_sec",
    "ns_per_byte",
    "cycles_per_byte",
    "stddev",
];

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("column {column}: cannot parse {value:?}")]
    Field { column: &'static str, value: String },
    #[error("expected {expected} fields, found {found}")]
    FieldCount { expected: usize, found: usize },
    #[error("plot needs at least one series with at least one point")]
    NoSeries,
    #[error("series {label:?}: {reason}")]
    BadSeries { label: String, reason: String },
    #[error("{path}: write failed: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub tool: String,
    pub direction: String,
    pub block_bytes: u64,
    pub direct: bool,
    pub async_depth: Option<u64>,
    pub seek_pct: Option<u8>,
    pub trials: u64,
    pub bytes_moved: u64,
    pub wall_s: f64,
    pub cpu_s: f64,
    pub mb_per_sec: f64,
    pub ns_per_byte: f64,
    pub cycles_per_byte: f64,
    pub stddev: f64,
}

impl ResultRow {
    pub fn from_result(tool: &str, r: &BenchmarkResult) -> Self {
        let c = &r.config;
        let tool = match r.kind {
            MeasurementKind::Timed => tool.to_string(),
            MeasurementKind::Extension(m) => format!("{tool}-{}", m.as_str()),
        };
        ResultRow {
            tool,
            direction: c.direction.as_str().to_string(),
            block_bytes: c.block.bytes(),
            direct: c.direct,
            async_depth: c.async_depth.map(|d| d as u64),
            seek_pct: c.seek_pct.filter(|&p| p > 0),
            trials: r.samples.len() as u64,
            bytes_moved: r.total_bytes(),
            wall_s: r.total_wall_seconds(),
            cpu_s: r.total_cpu_seconds(),
            mb_per_sec: r.mb_per_sec,
            ns_per_byte: r.per_byte_ns,
            cycles_per_byte: r.per_byte_cycles,
            stddev: r.stddev,
        }
    }

    pub fn fields(&self) -> [String; 14] {
        let opt = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
        [
            self.tool.clone(),
            self.direction.clone(),
            self.block_bytes.to_string(),
            self.direct.to_string(),
            opt(self.async_depth),
            opt(self.seek_pct.map(u64::from)),
            self.trials.to_string(),
            self.bytes_moved.to_string(),
            num(self.wall_s),
            num(self.cpu_s),
            num(self.mb_per_sec),
            num(self.ns_per_byte),
            num(self.cycles_per_byte),
            num(self.stddev),
        ]
    }

    /// Inverse of [`ResultRow::fields`].
    pub fn from_fields<S: AsRef<str>>(fields: &[S]) -> Result<Self, ReportError> {
        if fields.len() != CSV_HEADER.len() {
            return Err(ReportError::FieldCount {
                expected: CSV_HEADER.len(),
                found: fields.len(),
            });
        }
        let f = |i: usize| fields[i].as_ref();
        fn parse<T: std::str::FromStr>(col: usize, s: &str) -> Result<T, ReportError> {
            s.parse().map_err(|_| ReportError::Field {
                column: CSV_HEADER[col],
                value: s.to_string(),
            })
        }
        fn opt<T: std::str::FromStr>(col: usize, s: &str) -> Result<Option<T>, ReportError> {
            if s.is_empty() {
                Ok(None)
            } else {
                parse(col, s).map(Some)
            }
        }
        Ok(ResultRow {
            tool: f(0).to_string(),
            direction: f(1).to_string(),
            block_bytes: parse(2, f(2))?,
            direct: parse(3, f(3))?,
            async_depth: opt(4, f(4))?,
            seek_pct: opt(5, f(5))?,
            trials: parse(6, f(6))?,
            bytes_moved: parse(7, f(7))?,
            wall_s: parse(8, f(8))?,
            cpu_s: parse(9, f(9))?,
            mb_per_sec: parse(10, f(10))?,
            ns_per_byte: parse(11, f(11))?,
            cycles_per_byte: parse(12, f(12))?,
            stddev: parse(13, f(13))?,
        })
    }

    /// One CSV line without terminator.
    pub fn to_csv_line(&self) -> String {
        join(&self.fields())
    }
}

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        "NaN".into()
    }
}

fn quote(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn join<S: AsRef<str>>(fields: &[S]) -> String {
    fields
        .iter()
        .map(|f| quote(f.as_ref()))
        .collect::<Vec<_>>()
        .join(",")
}

pub fn csv_header() -> String {
    join(&CSV_HEADER)
}

/// Header line plus one line per row, each ending in `\n`.
pub fn to_csv(rows: &[ResultRow]) -> String {
    let mut out = csv_header();
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv_line());
        out.push('\n');
    }
    out
}

/// Quiet-mode output: the row alone.
pub fn quiet_line(row: &ResultRow) -> String {
    let mut s = row.to_csv_line();
    s.push('\n');
    s
}

/// Human-readable block for verbose mode.
pub fn human_summary(row: &ResultRow) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{} {} block={} direct={} depth={} seek={}",
        row.tool,
        row.direction,
        crate::size::format_size(crate::size::ByteSize(row.block_bytes)),
        row.direct,
        row.async_depth.map_or("sync".into(), |d| d.to_string()),
        row.seek_pct.map_or("seq".into(), |p| format!("{p}%")),
    );
    let _ = writeln!(
        s,
        "  {:.2} MB/s (stddev {:.2}) over {} trials, {} bytes",
        row.mb_per_sec, row.stddev, row.trials, row.bytes_moved
    );
    let _ = writeln!(
        s,
        "  cpu {:.3} ns/byte, {:.3} cycles/byte; wall {:.3} s, cpu {:.3} s",
        row.ns_per_byte, row.cycles_per_byte, row.wall_s, row.cpu_s
    );
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub label: String,
    /// (request bytes, value), request bytes strictly increasing.
    pub points: Vec<(u64, f64)>,
    /// One standard deviation per point, drawn as whiskers.
    pub stddev: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Bandwidth,
    CostPerByte,
}

impl PlotKind {
    fn y_label(self) -> &'static str {
        match self {
            PlotKind::Bandwidth => "MB/s",
            PlotKind::CostPerByte => "CPU cycles per byte",
        }
    }
}

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn size_label(bytes: u64) -> String {
    const UNITS: [(u64, &str); 3] = [(1 << 30, "G"), (1 << 20, "M"), (1 << 10, "K")];
    for (unit, suffix) in UNITS {
        if bytes >= unit && bytes.is_multiple_of(unit) {
            return format!("{}{suffix}", bytes / unit);
        }
    }
    bytes.to_string()
}

/// Smallest "1, 2, 5 times a power of ten" step giving at most 6 ticks.
fn tick_step(max: f64) -> f64 {
    let raw = max / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    for m in [1.0, 2.0, 5.0, 10.0] {
        if m * mag >= raw {
            return m * mag;
        }
    }
    10.0 * mag
}

fn check_series(series: &[PlotSeries]) -> Result<(), ReportError> {
    if series.is_empty() || series.iter().all(|s| s.points.is_empty()) {
        return Err(ReportError::NoSeries);
    }
    for s in series {
        let bad = |reason: &str| {
            Err(ReportError::BadSeries {
                label: s.label.clone(),
                reason: reason.into(),
            })
        };
        if s.points.windows(2).any(|w| w[0].0 >= w[1].0) {
            return bad("request sizes must be strictly increasing");
        }
        if s.points.iter().any(|p| p.0 == 0) {
            return bad("request size 0 cannot sit on a log axis");
        }
        if let Some(sd) = &s.stddev {
            if sd.len() != s.points.len() {
                return bad("one standard deviation per point is required");
            }
        }
    }
    Ok(())
}

/// Renders a self-contained SVG: log2 x axis of request size, linear y
/// axis from zero, one polyline per series with optional whiskers.
pub fn render_plot(
    series: &[PlotSeries],
    kind: PlotKind,
    title: &str,
) -> Result<String, ReportError> {
    check_series(series)?;
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let lo = xs.clone().min().unwrap().ilog2();
    let mut hi = xs.max().unwrap().ilog2();
    if (1u64 << hi)
        < series
            .iter()
            .flat_map(|s| &s.points)
            .map(|p| p.0)
            .max()
            .unwrap()
    {
        hi += 1;
    }
    let hi = hi.max(lo + 1);
    let top = series
        .iter()
        .flat_map(|s| {
            s.points
                .iter()
                .enumerate()
                .map(move |(i, p)| p.1 + s.stddev.as_ref().map_or(0.0, |sd| sd[i].max(0.0)))
        })
        .filter(|v| v.is_finite())
        .fold(0.0f64, f64::max);
    let step = tick_step(if top > 0.0 { top * 1.05 } else { 1.0 });
    let ymax = (top * 1.05 / step).ceil().max(1.0) * step;

    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |b: u64| LEFT + ((b as f64).log2() - f64::from(lo)) / f64::from(hi - lo) * pw;
    let py = |v: f64| TOP + ph - (v.clamp(0.0, ymax) / ymax) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + pw / 2.0,
        escape(title)
    );

    let every = if hi - lo > 12 { 2 } else { 1 };
    for e in lo..=hi {
        let x = px(1u64 << e);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.1}" y1="{TOP:.1}" x2="{x:.1}" y2="{:.1}" stroke="#e0e0e0"/>"##,
            TOP + ph
        );
        if (e - lo) % every == 0 {
            let _ = writeln!(
                s,
                r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                TOP + ph + 18.0,
                size_label(1u64 << e)
            );
        }
    }
    let mut v = 0.0;
    while v <= ymax + step / 2.0 {
        let y = py(v);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#e0e0e0"/>"##,
            LEFT + pw
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            y + 4.0,
            trim_num(v)
        );
        v += step;
    }
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT:.1}" y="{TOP:.1}" width="{pw:.1}" height="{ph:.1}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">request size (bytes)</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 16.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        kind.y_label()
    );

    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = ser
            .points
            .iter()
            .map(|&(b, v)| format!("{:.1},{:.1}", px(b), py(v)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        );
        for &(b, v) in &ser.points {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.1}" cy="{:.1}" r="2.5" fill="{color}"/>"#,
                px(b),
                py(v)
            );
        }
        if let Some(sd) = &ser.stddev {
            for (&(b, v), &d) in ser.points.iter().zip(sd) {
                let x = px(b);
                let _ = writeln!(
                    s,
                    r#"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="{color}" stroke-dasharray="3,2"/>"#,
                    py(v - d),
                    py(v + d)
                );
            }
        }
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 26.0,
            ly + 4.0,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn trim_num(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

pub fn emit_plot(
    series: &[PlotSeries],
    kind: PlotKind,
    title: &str,
    out: &Path,
) -> Result<(), ReportError> {
    let svg = render_plot(series, kind, title)?;
    std::fs::write(out, svg).map_err(|source| ReportError::Io {
        path: out.to_path_buf(),
        source,
    })
}
