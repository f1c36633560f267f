//! Acceptance gate: each criterion runs in order and prints one PASS/FAIL
//! line; the test fails if any criterion fails.
//!
//! Set `SEQIO_BLESS=1` to rewrite the golden files used by criterion 11.

use std::io::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use seqio::bench::{extend_file, run_measurement, ExtensionMode, IoConfig};
use seqio::engine::{
    allocate_aligned, check_direct_request, detect_sector_geometry, open_file, open_file_with,
    AccessHint, DirectRequest, DirectViolation, EngineError, IoMode, OpenConfig,
};
use seqio::fragger::{never_stop, run_cycles, FragConfig, Phase, Scale};
use seqio::pipeline::{copy_file, plan_schedule};
use seqio::report::{render_plot, to_csv, PlotKind, PlotSeries, ResultRow};
use seqio::workloads::{
    count_lines, run_read, typed_roundtrip, write_sort_file, Granularity, TypedValue,
};
use seqio::{make_rng, ByteSize, Checksum, Direction, OpenDisposition, SeedValue, SeededRng};
use seqio_cli::{parse_fragdisk, parse_iospeed};
use sha2::{Digest, Sha256};

type Check = Result<String, String>;
type Rule<T> = fn(&T) -> bool;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        match $cond {
            true => {}
            false => return Err(format!($($fmt)+)),
        }
    };
}

fn within(limit: Duration, start: Instant) -> Result<Duration, String> {
    let t = start.elapsed();
    ensure!(t < limit, "took {t:.1?}, limit {limit:?}");
    Ok(t)
}

fn random_bytes(rng: &mut SeededRng, n: usize) -> Vec<u8> {
    let mut v = vec![0u8; n];
    rng.fill_bytes(&mut v);
    v
}

/// Hash of the file as read front to back in fixed chunks.
fn sequential_read_hash(path: &Path) -> Vec<u8> {
    use std::io::Read;
    let mut f = std::fs::File::open(path).unwrap();
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 8192];
    loop {
        let n = f.read(&mut buf).unwrap();
        if n == 0 {
            return h.finalize().to_vec();
        }
        h.update(&buf[..n]);
    }
}

fn copy_oracle() -> Check {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut rng = make_rng(SeedValue(1));
    let mut cases: Vec<(u64, u64, usize)> = Vec::new();
    for &(b, depth) in &[(4096u64, 4usize), (1000, 3), (65_536, 2), (7, 8)] {
        let d = depth as u64;
        for size in [0, 1, b - 1, b, b + 1, d * b - 1, d * b + 1] {
            cases.push((size, b, depth));
        }
    }
    cases.push((10 * 1024 * 1024 + 7, 1 << 20, 4));
    while cases.len() < 200 {
        let block = rng.range_inclusive(1, 256 * 1024);
        let depth = rng.range_inclusive(1, 8) as usize;
        let size = rng.below(2 << 20);
        cases.push((size, block, depth));
    }
    let src = dir.path().join("src");
    for (i, &(size, block, depth)) in cases.iter().enumerate() {
        std::fs::write(&src, random_bytes(&mut rng, size as usize)).unwrap();
        let dst = dir.path().join(format!("dst{i}"));
        let r = copy_file(&src, &dst, block, depth)
            .map_err(|e| format!("size {size} block {block} depth {depth}: {e}"))?;
        ensure!(
            sequential_read_hash(&src) == sequential_read_hash(&dst),
            "hash mismatch: size {size} block {block} depth {depth}"
        );
        ensure!(
            r.bytes_copied == size,
            "reported {} of {size}",
            r.bytes_copied
        );
        std::fs::remove_file(&dst).unwrap();
    }
    let t = within(Duration::from_secs(60), start)?;
    Ok(format!("{} cases in {t:.1?}", cases.len()))
}

fn schedule_oracle() -> Check {
    let start = Instant::now();
    let mut rng = make_rng(SeedValue(2));
    for _ in 0..1000 {
        let size = rng.below(60_000);
        let block = rng.range_inclusive(1, 5000);
        let depth = rng.range_inclusive(1, 16) as usize;
        let plan = plan_schedule(size, block, depth).map_err(|e| e.to_string())?;
        let mut hits = vec![0u8; size as usize];
        for r in &plan {
            ensure!(r.slot < depth, "slot {} >= depth {depth}", r.slot);
            ensure!(
                r.length >= 1 && r.length <= block && r.offset + r.length <= size,
                "bad request {r:?} for size {size} block {block}"
            );
            for b in &mut hits[r.offset as usize..(r.offset + r.length) as usize] {
                *b += 1;
            }
        }
        if let Some(i) = hits.iter().position(|&h| h != 1) {
            return Err(format!(
                "({size},{block},{depth}): byte {i} covered {} times",
                hits[i]
            ));
        }
    }
    let t = within(Duration::from_secs(5), start)?;
    Ok(format!("1000 triples in {t:.1?}"))
}

fn open_truth_table() -> Check {
    use OpenDisposition::*;
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    // (disposition, when existing: Ok((len, pos)) or error kind, when missing)
    #[derive(Debug, PartialEq)]
    enum O {
        At(u64, u64),
        NotFound,
        Exists,
    }
    let table = [
        (Open, O::At(5, 0), O::NotFound),
        (Create, O::At(0, 0), O::At(0, 0)),
        (CreateNew, O::Exists, O::At(0, 0)),
        (OpenOrCreate, O::At(5, 0), O::At(0, 0)),
        (Append, O::At(5, 5), O::At(0, 0)),
        (Truncate, O::At(0, 0), O::NotFound),
    ];
    let mut cells = 0;
    for (d, existing, missing) in table {
        let p = dir.path().join(format!("{d:?}"));
        for (exists, want) in [(true, existing), (false, missing)] {
            if exists {
                std::fs::write(&p, b"hello").unwrap();
            } else {
                let _ = std::fs::remove_file(&p);
            }
            let got = match open_file(
                &p,
                d,
                Direction::Write,
                IoMode::Buffered,
                AccessHint::Sequential,
            ) {
                Ok(h) => O::At(h.len().unwrap(), h.position()),
                Err(EngineError::NotFound { .. }) => O::NotFound,
                Err(EngineError::AlreadyExists { .. }) => O::Exists,
                Err(e) => return Err(format!("{d:?} exists={exists}: {e}")),
            };
            ensure!(
                got == want,
                "{d:?} exists={exists}: got {got:?}, want {want:?}"
            );
            let on_disk = std::fs::metadata(&p).ok().map(|m| m.len());
            let want_disk = match want {
                O::At(len, _) => Some(len),
                O::Exists => Some(5),
                O::NotFound => None,
            };
            ensure!(
                on_disk == want_disk,
                "{d:?} exists={exists}: file left as {on_disk:?}"
            );
            cells += 1;
        }
    }
    ensure!(cells == 12, "{cells} cells");
    let t = within(Duration::from_secs(5), start)?;
    Ok(format!("12 cells in {t:.1?}"))
}

fn direct_guards() -> Check {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("direct.dat");
    let geom = match detect_sector_geometry(&p) {
        Ok(g) => g,
        Err(e) => return Ok(format!("skipped (notice: {e})")),
    };
    let s = geom.logical_sector as usize;
    let open = |dir: Direction, disp| {
        open_file_with(
            &p,
            OpenConfig {
                io_mode: IoMode::Direct,
                geometry: Some(geom),
                ..OpenConfig::new(disp, dir)
            },
        )
    };
    let mut w = match open(Direction::Write, OpenDisposition::Create) {
        Ok(h) => h,
        Err(EngineError::DirectUnsupported { .. }) => {
            return Ok("skipped (notice: volume cannot bypass the cache)".into())
        }
        Err(e) => return Err(e.to_string()),
    };
    let mut buf = allocate_aligned(8 * s as u64, geom.recommended_alignment).unwrap();
    buf.as_mut_slice().fill(0x5a);
    w.write_block(&buf, 4 * s)
        .map_err(|e| format!("aligned write: {e}"))?;
    drop(w);
    let before = std::fs::read(&p).unwrap();

    let mut rejected = 0;
    let mut accepted = 0;
    for mask in 0u8..8 {
        let (bad_base, bad_len, bad_off) = (mask & 1 != 0, mask & 2 != 0, mask & 4 != 0);
        let base = usize::from(bad_base);
        let len = if bad_len { s + 1 } else { 2 * s };
        let off = if bad_off { s as u64 / 2 } else { s as u64 };
        // Expected violations computed from the sector size alone.
        let want = [bad_base, bad_len, bad_off];
        let got = check_direct_request(
            geom,
            DirectRequest::for_slice(&buf[base..], len as u64, off),
        );
        let kinds = [
            got.iter()
                .any(|v| matches!(v, DirectViolation::MisalignedBase { .. })),
            got.iter()
                .any(|v| matches!(v, DirectViolation::RaggedLength { .. })),
            got.iter()
                .any(|v| matches!(v, DirectViolation::RaggedOffset { .. })),
        ];
        ensure!(kinds == want, "mask {mask}: violations {got:?}");

        for direction in [Direction::Write, Direction::Read] {
            let mut h = open(direction, OpenDisposition::Open).map_err(|e| e.to_string())?;
            if off != 0 {
                // An unaligned seek position is itself part of the request.
                h.seek(off).map_err(|e| e.to_string())?;
            }
            let res = match direction {
                Direction::Write => h.write_block(&buf[base..], len).map(|()| len),
                Direction::Read => {
                    let mut rb =
                        allocate_aligned(8 * s as u64, geom.recommended_alignment).unwrap();
                    let r = h.read_block(&mut rb.as_mut_slice()[base..], len);
                    if mask == 0 {
                        ensure!(
                            rb[..len] == before[off as usize..off as usize + len],
                            "aligned read returned wrong bytes"
                        );
                    }
                    r
                }
            };
            drop(h);
            if mask == 0 {
                ensure!(res.is_ok(), "aligned {direction:?} failed: {:?}", res.err());
                accepted += 1;
            } else {
                ensure!(
                    matches!(res, Err(EngineError::DirectViolation(_))),
                    "mask {mask} {direction:?}: not rejected ({res:?})"
                );
                ensure!(
                    std::fs::read(&p).unwrap() == before,
                    "mask {mask} {direction:?}: file changed"
                );
                rejected += 1;
            }
        }
    }
    let t = within(Duration::from_secs(10), start)?;
    Ok(format!(
        "sector {s}: {rejected} misaligned transfers rejected, {accepted} aligned accepted in {t:.1?}"
    ))
}

fn preallocation_contract() -> Check {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("prealloc.dat");
    let mut h = open_file(
        &p,
        OpenDisposition::CreateNew,
        Direction::Write,
        IoMode::Buffered,
        AccessHint::Sequential,
    )
    .map_err(|e| e.to_string())?;
    h.preallocate(ByteSize::mib(128).bytes())
        .map_err(|e| e.to_string())?;
    let len = h.len().map_err(|e| e.to_string())?;
    let meta = std::fs::metadata(&p).unwrap().len();
    ensure!(
        len == 134_217_728 && meta == 134_217_728,
        "length {len} / {meta}"
    );
    let t = within(Duration::from_secs(5), start)?;
    Ok(format!("length 134217728 in {t:.1?}"))
}

fn figure_shape() -> Check {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("cached.dat");
    let point = |block: u64| {
        let mut c = IoConfig::new(&target);
        c.file_size = ByteSize::mib(64);
        c.block = ByteSize(block);
        c.trials = 3;
        c.warmup = true;
        c.duration = Duration::from_millis(500);
        run_measurement(&c).map_err(|e| e.to_string())
    };
    let big = point(65_536)?;
    let one = point(1)?;
    let ratio = big.mb_per_sec / one.mb_per_sec;
    let cost = big.per_byte_ns / one.per_byte_ns;
    ensure!(
        ratio >= 50.0,
        "64K {:.1} MB/s vs 1B {:.3} MB/s: ratio {ratio:.1} < 50",
        big.mb_per_sec,
        one.mb_per_sec
    );
    ensure!(
        cost <= 0.1,
        "ns/byte 64K {:.3} vs 1B {:.3}: ratio {cost:.4} > 0.1",
        big.per_byte_ns,
        one.per_byte_ns
    );
    let t = within(Duration::from_secs(60), start)?;
    Ok(format!(
        "bandwidth x{ratio:.0} ({:.0} vs {:.2} MB/s), cost x{cost:.4} in {t:.1?}",
        big.mb_per_sec, one.mb_per_sec
    ))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn preallocation_benefit() -> Check {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let vol = dir.path().join("vol");
    std::fs::create_dir_all(&vol).unwrap();
    let mut cfg = FragConfig::new(&vol);
    cfg.scale = Some(Scale {
        quota: ByteSize::mib(768).bytes(),
        divisor: 64,
    });
    cfg.max_cycles = 3;
    cfg.files_per_cycle = 200;
    let frag = run_cycles(&cfg, never_stop()).map_err(|e| e.to_string())?;

    let target = vol.join("extend.dat");
    let size = ByteSize::mib(128).bytes();
    let mut rates = [Vec::new(), Vec::new()];
    for trial in 0..5u64 {
        // Alternate which mode goes first so drift hits both equally.
        let order = if trial % 2 == 0 {
            [ExtensionMode::Incremental, ExtensionMode::Preallocated]
        } else {
            [ExtensionMode::Preallocated, ExtensionMode::Incremental]
        };
        for mode in order {
            let t = extend_file(&target, size, 65_536, mode, SeedValue(trial))
                .map_err(|e| format!("{mode:?}: {e}"))?;
            rates[usize::from(mode == ExtensionMode::Preallocated)].push(t.sample.mb_per_sec());
        }
    }
    let _ = std::fs::remove_file(&target);
    let inc = median(rates[0].clone());
    let pre = median(rates[1].clone());
    ensure!(
        pre >= inc,
        "preallocated median {pre:.1} MB/s < incremental {inc:.1} MB/s (runs {:?} vs {:?})",
        rates[1],
        rates[0]
    );
    let t = within(Duration::from_secs(600), start)?;
    Ok(format!(
        "preallocated {pre:.1} MB/s >= incremental {inc:.1} MB/s on {:.0}% full scaled volume in {t:.1?}",
        frag.final_fill_pct
    ))
}

fn fragger_determinism() -> Check {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("frag");
    let run = || {
        let _ = std::fs::remove_dir_all(&root);
        std::fs::create_dir_all(&root).unwrap();
        let mut cfg = FragConfig::new(&root);
        cfg.seed = SeedValue(137);
        cfg.scale = Some(Scale {
            quota: ByteSize::mib(256).bytes(),
            divisor: 256,
        });
        cfg.max_cycles = 4;
        cfg.files_per_cycle = 300;
        run_cycles(&cfg, never_stop())
            .map(|r| (r, cfg.effective_max()))
            .map_err(|e| e.to_string())
    };
    let (a, max_file) = run()?;
    let (b, _) = run()?;
    ensure!(!a.events.is_empty(), "no events");
    ensure!(
        a.event_log().as_bytes() == b.event_log().as_bytes(),
        "event logs differ"
    );
    ensure!(!a.boundaries.is_empty(), "no phase boundaries");
    for bd in &a.boundaries {
        let off = bd.used.abs_diff(bd.target);
        ensure!(
            bd.limited || off <= max_file,
            "cycle {} {:?}: used {} target {} (off by {off} > {max_file})",
            bd.cycle,
            bd.phase,
            bd.used,
            bd.target
        );
        match bd.phase {
            Phase::Fill => ensure!(bd.limited || bd.used >= bd.target, "fill short: {bd:?}"),
            Phase::Keep => ensure!(bd.used <= bd.target, "keep over: {bd:?}"),
        }
    }
    let t = within(Duration::from_secs(300), start)?;
    Ok(format!(
        "{} identical events, {} boundaries within one max_file in {t:.1?}",
        a.events.len(),
        a.boundaries.len()
    ))
}

fn argv(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

fn cli_table() -> Check {
    let start = Instant::now();
    let io = |s: &str| parse_iospeed(&argv(s)).map_err(|e| format!("{s}: {e}"));
    let frag = |s: &str| {
        parse_fragdisk(&argv(s))
            .map(|a| a.config)
            .map_err(|e| format!("{s}: {e}"))
    };

    // IOspeed usage page defaults and overrides.
    let d = io("a.dat")?;
    let c = &d.config;
    ensure!(
        c.duration == Duration::from_secs(30),
        "duration {:?}",
        c.duration
    );
    ensure!(c.block == ByteSize(65_536), "block {}", c.block);
    ensure!(
        c.file_size == ByteSize(1 << 30),
        "file size {}",
        c.file_size
    );
    ensure!(c.direction == Direction::Read, "direction");
    ensure!(
        c.async_depth.is_none() && c.seek_pct.is_none(),
        "sync sequential"
    );
    ensure!(
        !c.direct && !c.touch && !c.quiet && d.extension.is_none(),
        "flags off"
    );
    ensure!(
        io("-t30 -b64K -r1G -s0 a.dat")? == d,
        "default line differs from bare"
    );
    let checks: [(&str, Rule<seqio_cli::IospeedArgs>); 14] = [
        ("-r100M a.dat", |a| {
            a.config.file_size == ByteSize(100 << 20)
        }),
        ("-w a.dat", |a| {
            a.config.direction == Direction::Write && a.config.file_size == ByteSize(1 << 30)
        }),
        ("-w5M a.dat", |a| a.config.file_size == ByteSize(5 << 20)),
        ("-t7 a.dat", |a| a.config.duration == Duration::from_secs(7)),
        ("-b1K a.dat", |a| a.config.block == ByteSize(1024)),
        ("-a a.dat", |a| a.config.async_depth == Some(4)),
        ("-a6 a.dat", |a| a.config.async_depth == Some(6)),
        ("-d a.dat", |a| a.config.direct),
        ("-s a.dat", |a| a.config.seek_pct == Some(100)),
        ("-s30 a.dat", |a| a.config.seek_pct == Some(30)),
        ("-x2M a.dat", |a| {
            a.extension == Some(ExtensionMode::Incremental)
                && a.config.file_size == ByteSize(2 << 20)
        }),
        ("-c -q a.dat", |a| a.config.touch && a.config.quiet),
        ("-a2 -b256K a.dat", |a| {
            a.config.async_depth == Some(2)
                && a.config.block == ByteSize(262_144)
                && a.config.direction == Direction::Read
        }),
        ("-t30 -w100M -p a.dat", |a| {
            a.extension == Some(ExtensionMode::Preallocated)
                && a.config.file_size == ByteSize(100 << 20)
                && a.config.direction == Direction::Write
                && a.config.duration == Duration::from_secs(30)
        }),
    ];
    for (line, ok) in checks {
        ensure!(ok(&io(line)?), "{line}: wrong config");
    }
    let a = io("-t60 -p100M a.dat")?;
    ensure!(
        a.extension == Some(ExtensionMode::Preallocated)
            && a.config.file_size == ByteSize(100 << 20)
            && a.config.direction == Direction::Read
            && a.config.duration == Duration::from_secs(60),
        "-t60 -p100M a.dat: wrong config"
    );
    for bad in ["-r -w a.dat", "-x1M -p1M a.dat", "-b1X a.dat", ""] {
        ensure!(io(bad).is_err(), "'{bad}' accepted");
    }

    // FragDisk usage page defaults and overrides.
    let f = frag("dir")?;
    ensure!(
        (f.max_files, f.min_file, f.max_file, f.files_per_cycle)
            == (100_000, ByteSize::mib(1), ByteSize::mib(256), 1_000),
        "fragdisk size/count defaults {f:?}"
    );
    ensure!(
        (
            f.max_files_per_dir,
            f.max_subdirs_per_dir,
            f.max_cycles,
            f.keep_pct,
            f.fill_pct,
            f.seed
        ) == (100, 10, 0, 5, 70, SeedValue(137)),
        "fragdisk defaults {f:?}"
    );
    let o = frag("-m9 -Fm2 -FM3 -c4 -d5 -s6 -n7 -k8 -f9 -r10 dir")?;
    ensure!(
        (
            o.max_files,
            o.min_file,
            o.max_file,
            o.files_per_cycle,
            o.max_files_per_dir
        ) == (9, ByteSize::mib(2), ByteSize::mib(3), 4, 5)
            && (
                o.max_subdirs_per_dir,
                o.max_cycles,
                o.keep_pct,
                o.fill_pct,
                o.seed
            ) == (6, 7, 8, 9, SeedValue(10)),
        "fragdisk overrides {o:?}"
    );
    let e = frag(r"-f95 -k10 c:\temp")?;
    ensure!(
        e == FragConfig {
            fill_pct: 95,
            keep_pct: 10,
            ..FragConfig::new(r"c:\temp")
        },
        "fragdisk example {e:?}"
    );
    ensure!(frag("").is_err(), "missing directory accepted");
    ensure!(frag("-k70 -f70 dir").is_err(), "keep >= fill accepted");
    let t = within(Duration::from_secs(5), start)?;
    Ok(format!("usage pages parsed in {t:.1?}"))
}

fn random_value(rng: &mut SeededRng) -> TypedValue {
    match rng.below(4) {
        0 => TypedValue::U32(rng.next_u32()),
        1 => TypedValue::I64(rng.next_u64() as i64),
        2 => TypedValue::F64(match rng.below(8) {
            0 => f64::NAN,
            1 => -0.0,
            2 => f64::INFINITY,
            3 => f64::MIN_POSITIVE / 2.0,
            _ => f64::from_bits(rng.next_u64()),
        }),
        _ => {
            let len = if rng.below(20) == 0 {
                rng.range_inclusive(128, 20_000)
            } else {
                rng.below(64)
            };
            let pool = ['a', 'Z', '0', ' ', '\n', 'é', 'ß', '中', '😀'];
            TypedValue::Str(
                (0..len)
                    .map(|_| pool[rng.below(pool.len() as u64) as usize])
                    .collect(),
            )
        }
    }
}

fn workload_equivalence() -> Check {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut rng = make_rng(SeedValue(10));

    let p = dir.path().join("data.bin");
    let data = random_bytes(&mut rng, 3 * 65_536 + 17);
    std::fs::write(&p, &data).unwrap();
    let (nb, byte_sum, _) = run_read(&p, Granularity::ByteAtATime).map_err(|e| e.to_string())?;
    let (nk, block_sum, _) =
        run_read(&p, Granularity::BlockAtATime(ByteSize::kib(64))).map_err(|e| e.to_string())?;
    ensure!(
        byte_sum == block_sum && byte_sum.value() == Checksum::of(&data).value(),
        "byte/block checksums {:016x} {:016x}",
        byte_sum.value(),
        block_sum.value()
    );
    ensure!(nb == nk && nb == data.len() as u64, "byte counts {nb} {nk}");

    let values: Vec<TypedValue> = (0..10_000).map(|_| random_value(&mut rng)).collect();
    let back =
        typed_roundtrip(&dir.path().join("typed.bin"), &values).map_err(|e| e.to_string())?;
    ensure!(back.len() == values.len(), "{} values back", back.len());
    if let Some(i) = (0..values.len()).find(|&i| values[i] != back[i]) {
        return Err(format!(
            "value {i}: {:?} came back as {:?}",
            values[i], back[i]
        ));
    }

    let alphabet = b"ab \t\r\n\n\nxyz";
    for i in 0..100 {
        let len = match i {
            0 => 0,
            1 => 1,
            _ => rng.below(20_000) as usize,
        };
        let text: String = (0..len)
            .map(|_| alphabet[rng.below(alphabet.len() as u64) as usize] as char)
            .collect();
        let tp = dir.path().join(format!("t{i}.txt"));
        std::fs::write(&tp, &text).unwrap();
        let naive =
            text.split('\n').count() as u64 - u64::from(text.is_empty() || text.ends_with('\n'));
        let got = count_lines(&tp).map_err(|e| e.to_string())?;
        ensure!(
            got == naive,
            "file {i} ({len} bytes): {got} lines, naive {naive}"
        );
    }

    for n in [0u64, 1, 7, 10_000] {
        let sp = dir.path().join(format!("sort{n}.dat"));
        write_sort_file(&sp, n, &mut make_rng(SeedValue(n))).map_err(|e| e.to_string())?;
        let len = std::fs::metadata(&sp).unwrap().len();
        ensure!(len == 100 * n, "{n} records: length {len}");
    }
    let t = within(Duration::from_secs(30), start)?;
    Ok(format!(
        "checksums, 10000 values, 100 text files, sort lengths in {t:.1?}"
    ))
}

// Shortest round-trip text is the point of this value.
#[allow(clippy::excessive_precision)]
fn pinned_rows() -> Vec<ResultRow> {
    vec![
        ResultRow {
            tool: "iospeed".into(),
            direction: "read".into(),
            block_bytes: 65_536,
            direct: false,
            async_depth: None,
            seek_pct: None,
            trials: 5,
            bytes_moved: 7_516_192_768,
            wall_s: 150.0,
            cpu_s: 3.25,
            mb_per_sec: 50.1,
            ns_per_byte: 0.4324,
            cycles_per_byte: 1.21072,
            stddev: 0.75,
        },
        ResultRow {
            tool: "iospeed-prealloc".into(),
            direction: "write".into(),
            block_bytes: 1,
            direct: true,
            async_depth: Some(4),
            seek_pct: Some(100),
            trials: 1,
            bytes_moved: 0,
            wall_s: 0.5,
            cpu_s: 0.0,
            mb_per_sec: 1e-7,
            ns_per_byte: 123456.789,
            cycles_per_byte: 2.8,
            stddev: 0.0,
        },
        ResultRow {
            tool: "tool, \"quoted\"".into(),
            direction: "copy".into(),
            block_bytes: 4_194_304,
            direct: false,
            async_depth: Some(2),
            seek_pct: Some(1),
            trials: 3,
            bytes_moved: 1 << 30,
            wall_s: 1.0 / 3.0,
            cpu_s: 2.0 / 3.0,
            mb_per_sec: 3221.2254720000003,
            ns_per_byte: 0.1,
            cycles_per_byte: 0.28,
            stddev: 12.5,
        },
    ]
}

fn pinned_series() -> Vec<PlotSeries> {
    let xs: Vec<u64> = (0..=22).map(|k| 1u64 << k).collect();
    vec![
        PlotSeries {
            label: "buffered read".into(),
            points: xs
                .iter()
                .map(|&x| (x, 50.0 * (x as f64).ln_1p() / 16.0))
                .collect(),
            stddev: Some(xs.iter().map(|&x| (x % 7) as f64 * 0.5).collect()),
        },
        PlotSeries {
            label: "buffered write".into(),
            points: xs.iter().map(|&x| (x, 40.0 - 30.0 / (x as f64))).collect(),
            stddev: None,
        },
    ]
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn serialization_stability() -> Check {
    let start = Instant::now();
    let render = || -> Result<(String, String), String> {
        let csv = to_csv(&pinned_rows());
        let svg = render_plot(&pinned_series(), PlotKind::Bandwidth, "Pinned sweep")
            .map_err(|e| e.to_string())?;
        Ok((csv, svg))
    };
    let (csv1, svg1) = render()?;
    let (csv2, svg2) = render()?;
    ensure!(csv1 == csv2 && svg1 == svg2, "two renderings differ");
    let dir = golden_dir();
    let files = [("pinned.csv", &csv1), ("pinned.svg", &svg1)];
    if std::env::var_os("SEQIO_BLESS").is_some() {
        std::fs::create_dir_all(&dir).unwrap();
        for (name, body) in files {
            std::fs::write(dir.join(name), body).unwrap();
        }
    }
    for (name, body) in files {
        let golden = std::fs::read(dir.join(name)).map_err(|e| format!("{name}: {e}"))?;
        ensure!(golden == body.as_bytes(), "{name} differs from golden");
    }
    let t = within(Duration::from_secs(5), start)?;
    Ok(format!("csv and svg byte-identical to golden in {t:.1?}"))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 11] = [
        ("copy oracle", copy_oracle),
        ("schedule oracle", schedule_oracle),
        ("open-mode truth table", open_truth_table),
        ("direct-I/O guards", direct_guards),
        ("preallocation contract", preallocation_contract),
        ("figure 2/3 left-edge shape", figure_shape),
        ("preallocation benefit direction", preallocation_benefit),
        ("fragger determinism", fragger_determinism),
        ("CLI contract table", cli_table),
        ("workload equivalence", workload_equivalence),
        ("serialization stability", serialization_stability),
    ];
    let mut failed = Vec::new();
    let _ = writeln!(std::io::stdout());
    for (i, (name, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        // Written past the harness capture so the verdicts always show.
        let line = match outcome {
            Ok(detail) => format!("PASS {n:>2} {name}: {detail}"),
            Err(why) => {
                failed.push(n);
                format!("FAIL {n:>2} {name}: {why}")
            }
        };
        let mut out = std::io::stdout().lock();
        let _ = writeln!(out, "{line}");
        let _ = out.flush();
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
