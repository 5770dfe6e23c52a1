//! Packet-timestamp traces: CSV ingestion, channel aggregation, windowing and
//! inter-arrival extraction.
//!
//! Timestamps are integer microseconds. The on-disk format is a CSV with the
//! header `ts_us,channel,len_bytes` (the length column is optional), which is
//! what `tshark -T fields -e frame.time_epoch ...` exports after conversion to
//! microseconds.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Channel id used for traffic produced by the generators.
pub const SYNTHETIC_CHANNEL: u8 = 0;
/// Highest 2.4 GHz WiFi channel number.
pub const MAX_WIFI_CHANNEL: u8 = 14;

pub const CSV_HEADER: [&str; 3] = ["ts_us", "channel", "len_bytes"];

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },
    #[error("trace contains no valid rows")]
    EmptyTrace,
    #[error("no non-empty traces to merge")]
    EmptyInput,
    #[error("need at least 2 records to form inter-arrival times, found {found}")]
    TooFewRecords { found: usize },
    #[error("window duration must be positive")]
    InvalidWindow,
    #[error("channel {0} outside 0..={MAX_WIFI_CHANNEL}")]
    InvalidChannel(i64),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PacketRecord {
    pub timestamp_us: u64,
    /// WiFi channel 1..=14, or [`SYNTHETIC_CHANNEL`] for generated traffic.
    pub channel_id: u8,
    pub length_bytes: Option<u32>,
}

impl PacketRecord {
    pub fn new(timestamp_us: u64, channel_id: u8) -> Self {
        Self {
            timestamp_us,
            channel_id,
            length_bytes: None,
        }
    }

    fn sort_key(&self) -> (u64, u8) {
        (self.timestamp_us, self.channel_id)
    }
}

/// Time-ordered packet arrivals from one or more channels.
///
/// Records are kept sorted by `(timestamp_us, channel_id)`; equal timestamps
/// are ordered by ascending channel so that merging is deterministic.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PacketTrace {
    records: Vec<PacketRecord>,
    source_channels: BTreeSet<u8>,
    /// Absolute time origin of `timestamp_us = 0`, informational only.
    pub epoch_us: u64,
}

impl PacketTrace {
    /// Builds a trace, sorting the records. Channel ids above 14 are rejected.
    pub fn new(mut records: Vec<PacketRecord>) -> Result<Self, TraceError> {
        if let Some(bad) = records.iter().find(|r| r.channel_id > MAX_WIFI_CHANNEL) {
            return Err(TraceError::InvalidChannel(bad.channel_id as i64));
        }
        records.sort_by_key(PacketRecord::sort_key);
        Ok(Self::from_sorted(records))
    }

    fn from_sorted(records: Vec<PacketRecord>) -> Self {
        let source_channels = records.iter().map(|r| r.channel_id).collect();
        Self {
            records,
            source_channels,
            epoch_us: 0,
        }
    }

    /// Convenience constructor from bare timestamps on a single channel.
    pub fn from_timestamps(timestamps_us: &[u64], channel_id: u8) -> Result<Self, TraceError> {
        Self::new(
            timestamps_us
                .iter()
                .map(|&t| PacketRecord::new(t, channel_id))
                .collect(),
        )
    }

    pub fn records(&self) -> &[PacketRecord] {
        &self.records
    }

    pub fn source_channels(&self) -> &BTreeSet<u8> {
        &self.source_channels
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn timestamps(&self) -> impl Iterator<Item = u64> + '_ {
        self.records.iter().map(|r| r.timestamp_us)
    }

    pub fn first_timestamp(&self) -> Option<u64> {
        self.records.first().map(|r| r.timestamp_us)
    }

    pub fn last_timestamp(&self) -> Option<u64> {
        self.records.last().map(|r| r.timestamp_us)
    }

    /// `last - first`, zero for traces with fewer than two records.
    pub fn span_us(&self) -> u64 {
        match (self.first_timestamp(), self.last_timestamp()) {
            (Some(a), Some(b)) => b - a,
            _ => 0,
        }
    }

    /// Records with `start_us <= ts < start_us + duration_us`, borrowed.
    pub fn window_slice(&self, start_us: u64, duration_us: u64) -> &[PacketRecord] {
        let end = start_us.saturating_add(duration_us);
        let lo = self.records.partition_point(|r| r.timestamp_us < start_us);
        let hi = self.records.partition_point(|r| r.timestamp_us < end);
        &self.records[lo..hi.max(lo)]
    }
}

/// Strictly positive inter-arrival times in microseconds.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IatSeries {
    pub iats_us: Vec<u64>,
    /// Zero gaps (coincident timestamps) folded into a single arrival.
    pub merged_zeros: usize,
}

impl IatSeries {
    pub fn count(&self) -> usize {
        self.iats_us.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iats_us.is_empty()
    }

    pub fn to_ms(&self) -> Vec<f64> {
        self.iats_us.iter().map(|&v| v as f64 / 1000.0).collect()
    }

    pub fn from_ms(iats_ms: &[f64]) -> Self {
        let iats_us = iats_ms
            .iter()
            .map(|&v| (v * 1000.0).round().max(0.0) as u64)
            .filter(|&v| v > 0)
            .collect();
        Self {
            iats_us,
            merged_zeros: 0,
        }
    }
}

/// Summary of what `load_trace` had to fix up.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadDiagnostics {
    pub rows_read: usize,
    pub negative_rows_dropped: usize,
    pub resorted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceFormat {
    #[default]
    Csv,
}

pub fn load_trace(path: impl AsRef<Path>, format: TraceFormat) -> Result<PacketTrace, TraceError> {
    let path = path.as_ref();
    let file = File::open(path)?;
    let (trace, diag) = match format {
        TraceFormat::Csv => read_trace_csv(file)?,
    };
    if diag.resorted {
        log::warn!(target: "trace_io", "{} was not time-ordered; records sorted on load", path.display());
    }
    if diag.negative_rows_dropped > 0 {
        log::warn!(
            target: "trace_io",
            "{}: dropped {} rows with negative timestamps",
            path.display(),
            diag.negative_rows_dropped
        );
    }
    Ok(trace)
}

/// Parses a trace CSV. The header row is optional; data rows are numbered
/// from 1.
pub fn read_trace_csv<R: Read>(reader: R) -> Result<(PacketTrace, LoadDiagnostics), TraceError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut diag = LoadDiagnostics::default();
    let mut records = Vec::new();
    let mut row = 0usize;
    let mut prev_ts: Option<u64> = None;

    for (line, result) in rdr.records().enumerate() {
        let rec = result.map_err(|e| TraceError::Parse {
            row: row + 1,
            message: e.to_string(),
        })?;
        if line == 0 && rec.get(0).map(|f| f.eq_ignore_ascii_case(CSV_HEADER[0])) == Some(true) {
            continue;
        }
        if rec.iter().all(str::is_empty) {
            continue;
        }
        row += 1;
        diag.rows_read += 1;
        let parse_err = |message: String| TraceError::Parse { row, message };

        if rec.len() < 2 || rec.len() > 3 {
            return Err(parse_err(format!("expected 2 or 3 fields, found {}", rec.len())));
        }
        let ts: i64 = rec[0]
            .parse()
            .map_err(|_| parse_err(format!("invalid timestamp {:?}", &rec[0])))?;
        let channel: i64 = rec[1]
            .parse()
            .map_err(|_| parse_err(format!("invalid channel {:?}", &rec[1])))?;
        if !(0..=MAX_WIFI_CHANNEL as i64).contains(&channel) {
            return Err(parse_err(format!("channel {channel} outside 0..={MAX_WIFI_CHANNEL}")));
        }
        let length_bytes = match rec.get(2) {
            None | Some("") => None,
            Some(s) => Some(
                s.parse::<u32>()
                    .map_err(|_| parse_err(format!("invalid length {s:?}")))?,
            ),
        };
        if ts < 0 {
            diag.negative_rows_dropped += 1;
            continue;
        }
        let ts = ts as u64;
        if prev_ts.is_some_and(|p| ts < p) {
            diag.resorted = true;
        }
        prev_ts = Some(ts);
        records.push(PacketRecord {
            timestamp_us: ts,
            channel_id: channel as u8,
            length_bytes,
        });
    }

    if records.is_empty() {
        return Err(TraceError::EmptyTrace);
    }
    Ok((PacketTrace::new(records)?, diag))
}

pub fn write_trace_csv<W: Write>(trace: &PacketTrace, writer: W) -> Result<(), TraceError> {
    let mut wtr = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| TraceError::Io(e.into());
    wtr.write_record(CSV_HEADER).map_err(io)?;
    for r in trace.records() {
        let len = r.length_bytes.map(|l| l.to_string()).unwrap_or_default();
        wtr.write_record([r.timestamp_us.to_string(), r.channel_id.to_string(), len])
            .map_err(io)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_trace(trace: &PacketTrace, path: impl AsRef<Path>) -> Result<(), TraceError> {
    let file = File::create(path)?;
    write_trace_csv(trace, std::io::BufWriter::new(file))
}

/// Aggregates traces from overlapping channels into one time-ordered trace.
pub fn merge_traces(traces: &[PacketTrace]) -> Result<PacketTrace, TraceError> {
    if traces.iter().all(PacketTrace::is_empty) {
        return Err(TraceError::EmptyInput);
    }
    let mut records: Vec<PacketRecord> =
        traces.iter().flat_map(|t| t.records.iter().copied()).collect();
    // stable, so identical (ts, channel) pairs keep input order
    records.sort_by_key(PacketRecord::sort_key);
    let mut merged = PacketTrace::from_sorted(records);
    merged.epoch_us = traces.iter().find(|t| !t.is_empty()).map_or(0, |t| t.epoch_us);
    Ok(merged)
}

/// Consecutive timestamp differences. Coincident arrivals collapse into one,
/// so every returned gap is strictly positive.
pub fn extract_iats(trace: &PacketTrace) -> Result<IatSeries, TraceError> {
    if trace.len() < 2 {
        return Err(TraceError::TooFewRecords { found: trace.len() });
    }
    let mut iats_us = Vec::with_capacity(trace.len() - 1);
    let mut merged_zeros = 0;
    for pair in trace.records.windows(2) {
        match pair[1].timestamp_us - pair[0].timestamp_us {
            0 => merged_zeros += 1,
            gap => iats_us.push(gap),
        }
    }
    if merged_zeros > 0 {
        log::debug!(target: "trace_io", "merged {merged_zeros} coincident arrivals");
    }
    Ok(IatSeries {
        iats_us,
        merged_zeros,
    })
}

/// Half-open time window `[start_us, start_us + duration_us)`.
pub fn window_trace(
    trace: &PacketTrace,
    start_us: u64,
    duration_us: u64,
) -> Result<PacketTrace, TraceError> {
    if duration_us == 0 {
        return Err(TraceError::InvalidWindow);
    }
    let mut out = PacketTrace::from_sorted(trace.window_slice(start_us, duration_us).to_vec());
    out.epoch_us = trace.epoch_us;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(trace: &PacketTrace) -> Vec<u64> {
        trace.timestamps().collect()
    }

    fn parse(text: &str) -> Result<PacketTrace, TraceError> {
        read_trace_csv(text.as_bytes()).map(|(t, _)| t)
    }

    #[test]
    fn load_sorts_rows() {
        let (trace, diag) = read_trace_csv("ts_us,channel,len_bytes\n100,1,\n50,1,60\n200,1\n".as_bytes()).unwrap();
        assert_eq!(ts(&trace), vec![50, 100, 200]);
        assert!(diag.resorted);
        assert_eq!(trace.records()[0].length_bytes, Some(60));
    }

    #[test]
    fn malformed_row_reports_index() {
        match parse("ts_us,channel,len_bytes\nabc,1\n") {
            Err(TraceError::Parse { row, .. }) => assert_eq!(row, 1),
            other => panic!("unexpected {other:?}"),
        }
        match parse("ts_us,channel\n10,1\n20,x\n") {
            Err(TraceError::Parse { row, .. }) => assert_eq!(row, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn channel_set_and_negative_rows() {
        let trace = parse("ts_us,channel\n1,1\n2,2\n3,1\n").unwrap();
        assert_eq!(trace.source_channels().iter().copied().collect::<Vec<_>>(), vec![1, 2]);

        let (trace, diag) = read_trace_csv("-5,1\n10,1\n".as_bytes()).unwrap();
        assert_eq!(ts(&trace), vec![10]);
        assert_eq!(diag.negative_rows_dropped, 1);
        assert!(matches!(parse("-5,1\n"), Err(TraceError::EmptyTrace)));
        assert!(matches!(parse("ts_us,channel\n"), Err(TraceError::EmptyTrace)));
        assert!(matches!(parse("1,15\n"), Err(TraceError::Parse { row: 1, .. })));
    }

    #[test]
    fn csv_round_trip() {
        let trace = parse("ts_us,channel,len_bytes\n5,3,100\n9,0,\n").unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&trace, &mut buf).unwrap();
        assert_eq!(parse(std::str::from_utf8(&buf).unwrap()).unwrap(), trace);
    }

    #[test]
    fn merge_interleaves_and_breaks_ties_by_channel() {
        let a = PacketTrace::from_timestamps(&[10, 30], 1).unwrap();
        let b = PacketTrace::from_timestamps(&[20], 2).unwrap();
        let m = merge_traces(&[a.clone(), b]).unwrap();
        assert_eq!(
            m.records().iter().map(|r| (r.timestamp_us, r.channel_id)).collect::<Vec<_>>(),
            vec![(10, 1), (20, 2), (30, 1)]
        );
        assert_eq!(merge_traces(std::slice::from_ref(&a)).unwrap(), a);

        let x = PacketTrace::from_timestamps(&[10], 2).unwrap();
        let y = PacketTrace::from_timestamps(&[10], 1).unwrap();
        let m = merge_traces(&[x, y]).unwrap();
        assert_eq!(m.records().iter().map(|r| r.channel_id).collect::<Vec<_>>(), vec![1, 2]);

        assert!(matches!(merge_traces(&[]), Err(TraceError::EmptyInput)));
        assert!(matches!(
            merge_traces(&[PacketTrace::default()]),
            Err(TraceError::EmptyInput)
        ));
    }

    #[test]
    fn iats_merge_zero_gaps() {
        let t = PacketTrace::from_timestamps(&[0, 50, 150], 1).unwrap();
        assert_eq!(extract_iats(&t).unwrap().iats_us, vec![50, 100]);

        let t = PacketTrace::from_timestamps(&[0, 0, 50], 1).unwrap();
        let iats = extract_iats(&t).unwrap();
        assert_eq!(iats.iats_us, vec![50]);
        assert_eq!(iats.merged_zeros, 1);

        let t = PacketTrace::from_timestamps(&[7], 1).unwrap();
        assert!(matches!(extract_iats(&t), Err(TraceError::TooFewRecords { found: 1 })));
    }

    #[test]
    fn windows_are_half_open() {
        let t = PacketTrace::from_timestamps(&[0, 50, 150], 1).unwrap();
        assert_eq!(ts(&window_trace(&t, 0, 100).unwrap()), vec![0, 50]);
        assert_eq!(ts(&window_trace(&t, 50, 100).unwrap()), vec![50]);
        assert!(window_trace(&t, 1_000, 100).unwrap().is_empty());
        assert!(matches!(window_trace(&t, 0, 0), Err(TraceError::InvalidWindow)));
    }
}
