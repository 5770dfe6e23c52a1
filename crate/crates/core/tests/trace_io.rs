use std::io::Write;

use whitespace_kit::trace::{
    extract_iats, load_trace, merge_traces, save_trace, window_trace, PacketRecord, PacketTrace, TraceError,
    TraceFormat,
};

fn ts(t: &PacketTrace) -> Vec<(u64, u8)> {
    t.records().iter().map(|r| (r.timestamp_us, r.channel_id)).collect()
}

#[test]
fn load_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ch.csv");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(f, "ts_us,channel,len_bytes\n100,1,60\n50,2,\n200,1,1500").unwrap();
    drop(f);
    let t = load_trace(&path, TraceFormat::Csv).unwrap();
    assert_eq!(ts(&t), [(50, 2), (100, 1), (200, 1)]);
    assert_eq!(t.source_channels().iter().copied().collect::<Vec<_>>(), [1, 2]);
    assert_eq!(t.records()[1].length_bytes, Some(60));

    let out = dir.path().join("out.csv");
    save_trace(&t, &out).unwrap();
    assert_eq!(load_trace(&out, TraceFormat::Csv).unwrap(), t);
}

#[test]
fn load_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "abc,1\n").unwrap();
    assert!(matches!(load_trace(&bad, TraceFormat::Csv), Err(TraceError::Parse { row: 1, .. })));
    assert!(matches!(
        load_trace(dir.path().join("missing.csv"), TraceFormat::Csv),
        Err(TraceError::Io(_))
    ));
}

#[test]
fn merge_examples() {
    let a = PacketTrace::new(vec![PacketRecord::new(10, 1), PacketRecord::new(30, 1)]).unwrap();
    let b = PacketTrace::new(vec![PacketRecord::new(20, 2)]).unwrap();
    assert_eq!(ts(&merge_traces(&[a.clone(), b]).unwrap()), [(10, 1), (20, 2), (30, 1)]);
    assert_eq!(merge_traces(std::slice::from_ref(&a)).unwrap().records(), a.records());
    let c = PacketTrace::new(vec![PacketRecord::new(10, 2)]).unwrap();
    let d = PacketTrace::new(vec![PacketRecord::new(10, 1)]).unwrap();
    assert_eq!(ts(&merge_traces(&[c, d]).unwrap()), [(10, 1), (10, 2)]);
}

#[test]
fn iat_and_window_examples() {
    let t = PacketTrace::from_timestamps(&[0, 50, 150], 1).unwrap();
    assert_eq!(extract_iats(&t).unwrap().iats_us, [50, 100]);
    let z = PacketTrace::from_timestamps(&[0, 0, 50], 1).unwrap();
    let iats = extract_iats(&z).unwrap();
    assert_eq!((iats.iats_us.as_slice(), iats.merged_zeros), (&[50u64][..], 1));
    let one = PacketTrace::from_timestamps(&[5], 1).unwrap();
    assert!(matches!(extract_iats(&one), Err(TraceError::TooFewRecords { found: 1 })));

    assert_eq!(window_trace(&t, 0, 100).unwrap().timestamps().collect::<Vec<_>>(), [0, 50]);
    assert_eq!(window_trace(&t, 50, 100).unwrap().timestamps().collect::<Vec<_>>(), [50]);
    assert!(window_trace(&t, 1_000, 100).unwrap().is_empty());
}
