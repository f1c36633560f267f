use std::io::BufRead;

use proptest::prelude::*;
use seqio::workloads::{
    count_lines, run_read, run_write, typed_roundtrip, write_sort_file, Granularity, TypedValue,
    LINE_PAYLOAD, SORT_RECORD_LEN,
};
use seqio::{make_rng, ByteSize, Checksum, SeedValue};

fn typed() -> impl Strategy<Value = TypedValue> {
    prop_oneof![
        any::<u32>().prop_map(TypedValue::U32),
        any::<i64>().prop_map(TypedValue::I64),
        any::<u64>().prop_map(|b| TypedValue::F64(f64::from_bits(b))),
        ".{0,300}".prop_map(TypedValue::Str),
    ]
}

fn text() -> impl Strategy<Value = Vec<u8>> {
    proptest::collection::vec(
        prop_oneof![
            3 => Just(b'\n'),
            2 => Just(b'\r'),
            20 => any::<u8>(),
        ],
        0..20_000,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_granularity_sees_the_same_bytes(data in proptest::collection::vec(any::<u8>(), 0..200_000), block in 1u64..100_000) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d");
        std::fs::write(&path, &data).unwrap();
        let expect = Checksum::of(&data);
        let (n, sum, _) = run_read(&path, Granularity::ByteAtATime).unwrap();
        prop_assert_eq!((n, sum), (data.len() as u64, expect));
        let (n, sum, _) = run_read(&path, Granularity::BlockAtATime(ByteSize(block))).unwrap();
        prop_assert_eq!((n, sum), (data.len() as u64, expect));
    }

    #[test]
    fn line_reads_match_a_naive_splitter(data in text()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t");
        std::fs::write(&path, &data).unwrap();
        let mut lines: Vec<&[u8]> = data.split(|&b| b == b'\n').collect();
        let tail = lines.pop().unwrap();
        let mut payload: Vec<u8> = lines
            .iter()
            .flat_map(|l| l.strip_suffix(b"\r").unwrap_or(l))
            .copied()
            .collect();
        payload.extend_from_slice(tail);
        let (n, sum, _) = run_read(&path, Granularity::LineAtATime).unwrap();
        prop_assert_eq!(n, payload.len() as u64);
        prop_assert_eq!(sum, Checksum::of(&payload));
        let naive = std::io::Cursor::new(&data).split(b'\n').count() as u64;
        prop_assert_eq!(count_lines(&path).unwrap(), naive);
    }

    #[test]
    fn typed_values_round_trip(values in proptest::collection::vec(typed(), 0..200)) {
        let dir = tempfile::tempdir().unwrap();
        let back = typed_roundtrip(&dir.path().join("v"), &values).unwrap();
        prop_assert_eq!(back, values);
    }
}

#[test]
fn writes_land_on_the_requested_length() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w");
    let mut rng = make_rng(SeedValue(3));
    for total in [0u64, 1, 99, 100, 101, 65_537, 300_000] {
        for g in [
            Granularity::ByteAtATime,
            Granularity::LineAtATime,
            Granularity::BlockAtATime(ByteSize(4096)),
            Granularity::TypedRecords,
        ] {
            if g == Granularity::TypedRecords && total % 100 != 0 {
                assert!(run_write(&path, g, ByteSize(total), &mut rng).is_err());
                continue;
            }
            let s = run_write(&path, g, ByteSize(total), &mut rng).unwrap();
            assert_eq!(s.bytes_moved, total, "{g:?}");
            assert_eq!(std::fs::metadata(&path).unwrap().len(), total, "{g:?}");
        }
    }
}

#[test]
fn written_lines_are_fixed_width_with_crlf() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("l");
    let total = 10 * (LINE_PAYLOAD as u64 + 2) + 37;
    run_write(
        &path,
        Granularity::LineAtATime,
        ByteSize(total),
        &mut make_rng(SeedValue(1)),
    )
    .unwrap();
    let data = std::fs::read(&path).unwrap();
    let chunks: Vec<&[u8]> = data.chunks(LINE_PAYLOAD + 2).collect();
    for c in &chunks[..10] {
        assert!(c.ends_with(b"\r\n"));
        assert!(c[..LINE_PAYLOAD].iter().all(|b| (0x20..=0x7e).contains(b)));
    }
    assert_eq!(count_lines(&path).unwrap(), 11);
}

#[test]
fn sort_file_follows_the_record_layout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s");
    for count in [0u64, 1, 655, 656, 2_000] {
        write_sort_file(&path, count, &mut make_rng(SeedValue(137))).unwrap();
        let data = std::fs::read(&path).unwrap();
        assert_eq!(data.len() as u64, count * SORT_RECORD_LEN as u64);
        for (i, rec) in data.chunks_exact(SORT_RECORD_LEN).enumerate() {
            assert!(rec[..10].iter().all(|b| (0x20..=0x7e).contains(b)));
            assert_eq!(&rec[10..20], format!("{i:010}").as_bytes());
            for (j, &b) in rec[20..].iter().enumerate() {
                assert_eq!(b, b'A' + ((i + j) % 26) as u8);
            }
        }
    }
    let mut again = make_rng(SeedValue(137));
    let other = dir.path().join("s2");
    write_sort_file(&other, 2_000, &mut again).unwrap();
    assert_eq!(
        std::fs::read(&path).unwrap(),
        std::fs::read(&other).unwrap()
    );
}
