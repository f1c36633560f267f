use std::time::Duration;

use seqio::bench::{run_measurement, BenchError, IoConfig, OffsetPlan};
use seqio::{ByteSize, Direction, SeedValue};

fn quick(target: &std::path::Path) -> IoConfig {
    let mut c = IoConfig::new(target);
    c.file_size = ByteSize::mib(4);
    c.duration = Duration::from_millis(100);
    c.trials = 2;
    c.warmup = false;
    c
}

fn read_log(path: &std::path::Path) -> Vec<u64> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect()
}

#[test]
fn random_offsets_repeat_for_equal_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("f.dat");
    let mut c = quick(&target);
    c.block = ByteSize::kib(4);
    c.seek_pct = Some(50);
    c.offset_log = Some(dir.path().join("a.log"));
    let a = run_measurement(&c).unwrap();
    c.offset_log = Some(dir.path().join("b.log"));
    let b = run_measurement(&c).unwrap();

    let la = read_log(&dir.path().join("a.log"));
    assert_eq!(la, a.offset_logs.concat());
    assert_eq!(read_log(&dir.path().join("b.log")), b.offset_logs.concat());
    assert_eq!((a.offset_logs.len(), b.offset_logs.len()), (2, 2));
    // Trials stop on the clock, so only per-trial prefixes line up.
    for (x, y) in a.offset_logs.iter().zip(&b.offset_logs) {
        let n = x.len().min(y.len());
        assert!(n > 100);
        assert_eq!(x[..n], y[..n]);
    }
    // Each trial follows its own stream, reproduced by an independent walk.
    for (k, log) in a.offset_logs.iter().enumerate() {
        let plan = OffsetPlan::new(4 << 20, 4096, 4096, Some(50)).unwrap();
        let mut rng = seqio::SeededRng::stream(c.seed, k as u64);
        let mut off = 0;
        for &logged in log {
            assert_eq!(logged, off);
            assert!(off % 4096 == 0 && off + 4096 <= 4 << 20);
            off = plan.next(off, &mut rng);
        }
    }
}

#[test]
fn different_seeds_diverge() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("f.dat");
    let mut c = quick(&target);
    c.block = ByteSize::kib(4);
    c.seek_pct = Some(100);
    c.trials = 1;
    c.offset_log = Some(dir.path().join("x.log"));
    run_measurement(&c).unwrap();
    c.seed = SeedValue(138);
    c.offset_log = Some(dir.path().join("y.log"));
    run_measurement(&c).unwrap();
    let (x, y) = (
        read_log(&dir.path().join("x.log")),
        read_log(&dir.path().join("y.log")),
    );
    assert_ne!(x[1..50], y[1..50]);
}

#[test]
fn sequential_walk_wraps_at_end() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("f.dat");
    let mut c = quick(&target);
    c.file_size = ByteSize::kib(64);
    c.block = ByteSize::kib(16);
    c.trials = 1;
    c.offset_log = Some(dir.path().join("s.log"));
    run_measurement(&c).unwrap();
    let log = read_log(&dir.path().join("s.log"));
    for (i, off) in log.iter().enumerate().take(40) {
        assert_eq!(*off, (i as u64 % 4) * 16_384);
    }
}

#[test]
fn target_is_created_at_requested_size() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("new.dat");
    let mut c = quick(&target);
    c.file_size = ByteSize(3 * 65_536 + 5);
    let r = run_measurement(&c).unwrap();
    assert_eq!(std::fs::metadata(&target).unwrap().len(), 3 * 65_536 + 5);
    assert!(r.samples.iter().all(|s| s.bytes_moved > 0));
}

#[test]
fn writes_and_async_requests_report_consistent_totals() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("w.dat");
    for depth in [None, Some(1), Some(4)] {
        for direction in [Direction::Read, Direction::Write] {
            let mut c = quick(&target);
            c.direction = direction;
            c.async_depth = depth;
            c.touch = true;
            let r = run_measurement(&c).unwrap();
            for s in &r.samples {
                assert_eq!(
                    s.bytes_moved,
                    s.request_count * 65_536,
                    "{direction:?} {depth:?}"
                );
                assert_eq!(s.touched_bytes, s.bytes_moved);
                let mbs = s.bytes_moved as f64 / 1e6 / s.wall_seconds;
                assert!((s.mb_per_sec() - mbs).abs() <= 1e-9 * mbs);
            }
            assert_eq!(std::fs::metadata(&target).unwrap().len(), 4 << 20);
        }
    }
}

#[test]
fn small_requests_cost_more_per_byte() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("c.dat");
    let point = |block| {
        let mut c = quick(&target);
        c.block = ByteSize(block);
        c.duration = Duration::from_millis(200);
        c.trials = 3;
        run_measurement(&c).unwrap()
    };
    let one = point(1);
    let big = point(65_536);
    assert!(big.mb_per_sec > 10.0 * one.mb_per_sec);
    assert!(big.per_byte_ns < one.per_byte_ns);
}

#[test]
fn invalid_configs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = quick(&dir.path().join("z.dat"));
    c.block = ByteSize::mib(8);
    assert!(matches!(
        run_measurement(&c),
        Err(BenchError::FileSmallerThanBlock { .. })
    ));
    let mut c = quick(&dir.path().join("z.dat"));
    c.trials = 0;
    assert!(matches!(run_measurement(&c), Err(BenchError::NoTrials)));
    let mut c = quick(&dir.path().join("z.dat"));
    c.seek_pct = Some(101);
    assert!(matches!(run_measurement(&c), Err(BenchError::Config(_))));
    assert!(!dir.path().join("z.dat").exists());
}

#[test]
fn direct_block_must_be_sector_multiple() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("d.dat");
    let Ok(geom) = seqio::engine::detect_sector_geometry(&target) else {
        eprintln!("notice: direct bench test skipped: no sector geometry");
        return;
    };
    let mut c = quick(&target);
    c.direct = true;
    c.block = ByteSize(geom.logical_sector + 1);
    assert!(run_measurement(&c).is_err());
    c.block = ByteSize(geom.logical_sector * 8);
    match run_measurement(&c) {
        Ok(r) => assert!(r.samples.iter().all(|s| s.bytes_moved > 0)),
        Err(e) => eprintln!("notice: direct bench test skipped: {e}"),
    }
}
