//! Write two per-channel CSV captures, load them back and aggregate them
//! into one trace of inter-arrival times.

use whitespace_kit::trace::{
    extract_iats, load_trace, merge_traces, save_trace, window_trace, PacketRecord, PacketTrace, TraceFormat,
};

pub fn run_example() -> anyhow::Result<usize> {
    let dir = tempfile::tempdir()?;
    let mut paths = Vec::new();
    for (channel, gap_us) in [(1u8, 7_000u64), (2, 11_000)] {
        let records = (0..1_000).map(|i| PacketRecord::new(i * gap_us, channel)).collect();
        let path = dir.path().join(format!("ch{channel}.csv"));
        save_trace(&PacketTrace::new(records)?, &path)?;
        paths.push(path);
    }

    let traces = paths
        .iter()
        .map(|p| load_trace(p, TraceFormat::Csv))
        .collect::<Result<Vec<_>, _>>()?;
    let merged = merge_traces(&traces)?;
    println!("merged {} packets from channels {:?}", merged.len(), merged.source_channels());

    let first_second = window_trace(&merged, 0, 1_000_000)?;
    let iats = extract_iats(&merged)?;
    println!(
        "{} packets in the first second; {} gaps, {} coincident arrivals folded",
        first_second.len(),
        iats.count(),
        iats.merged_zeros
    );
    Ok(iats.count())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example().map(|_| ())
}
