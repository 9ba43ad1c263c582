//! CSV formats for flick traces, feature tables and decoded frames.
//!
//! A trace lives in `<name>.csv` (columns `t_us, acc_x .. mag_z`) next to a
//! `<name>.json` sidecar holding `{trigger_us, label}`.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{window_samples, FeatureError, FeatureTable, FlickTrace, ImuSample, FEATURE_COUNT, FEATURE_NAMES};
use crate::wire::{SensorFrame, TACTILE_CELLS};

pub const TRACE_COLUMNS: [&str; 10] =
    ["t_us", "acc_x", "acc_y", "acc_z", "gyro_x", "gyro_y", "gyro_z", "mag_x", "mag_y", "mag_z"];

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("{path}: {source}")]
    Window { path: PathBuf, source: FeatureError },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> DatasetError + '_ {
    move |source| DatasetError::Csv { path: path.to_path_buf(), source }
}

fn format_err(path: &Path, reason: impl Into<String>) -> DatasetError {
    DatasetError::Format { path: path.to_path_buf(), reason: reason.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceMeta {
    pub trigger_us: i64,
    pub label: Option<String>,
}

/// Writes the trace with the trigger sample stamped at `trigger_us`.
pub fn write_trace(csv_path: &Path, trace: &FlickTrace, trigger_us: i64) -> Result<(), DatasetError> {
    let mut w = csv::Writer::from_path(csv_path).map_err(csv_err(csv_path))?;
    w.write_record(TRACE_COLUMNS).map_err(csv_err(csv_path))?;
    for (k, s) in trace.samples.iter().enumerate() {
        let mut rec = vec![trace.sample_time_us(k, trigger_us).to_string()];
        rec.extend(s.acc.iter().chain(&s.gyro).chain(&s.mag).map(|v| v.to_string()));
        w.write_record(&rec).map_err(csv_err(csv_path))?;
    }
    w.flush().map_err(io_err(csv_path))?;
    let meta = TraceMeta { trigger_us, label: trace.label.clone() };
    let side = csv_path.with_extension("json");
    let json = serde_json::to_string_pretty(&meta).map_err(|source| DatasetError::Json { path: side.clone(), source })?;
    std::fs::write(&side, json + "\n").map_err(io_err(&side))
}

pub fn read_stamped(csv_path: &Path) -> Result<Vec<(i64, ImuSample)>, DatasetError> {
    let mut r = csv::Reader::from_path(csv_path).map_err(csv_err(csv_path))?;
    let headers = r.headers().map_err(csv_err(csv_path))?.clone();
    if headers.iter().ne(TRACE_COLUMNS) {
        return Err(format_err(csv_path, format!("expected columns {}", TRACE_COLUMNS.join(","))));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err(csv_path))?;
        let line = rec.position().map_or(0, |p| p.line());
        let t: i64 = rec[0].trim().parse().map_err(|_| format_err(csv_path, format!("line {line}: bad t_us")))?;
        let mut v = [0.0; 9];
        for (i, slot) in v.iter_mut().enumerate() {
            *slot = rec[i + 1]
                .trim()
                .parse()
                .map_err(|_| format_err(csv_path, format!("line {line}: bad {}", TRACE_COLUMNS[i + 1])))?;
        }
        out.push((t, ImuSample { acc: [v[0], v[1], v[2]], gyro: [v[3], v[4], v[5]], mag: [v[6], v[7], v[8]] }));
    }
    Ok(out)
}

pub fn read_meta(csv_path: &Path) -> Result<TraceMeta, DatasetError> {
    let side = csv_path.with_extension("json");
    let text = std::fs::read_to_string(&side).map_err(io_err(&side))?;
    serde_json::from_str(&text).map_err(|source| DatasetError::Json { path: side, source })
}

/// A trace file windowed around its sidecar trigger.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedTrace {
    pub path: PathBuf,
    pub trace: FlickTrace,
    pub fills: usize,
}

pub fn read_trace(csv_path: &Path, tick_interval_us: u32) -> Result<LoadedTrace, DatasetError> {
    let meta = read_meta(csv_path)?;
    let stamped = read_stamped(csv_path)?;
    let w = window_samples(&stamped, meta.trigger_us, tick_interval_us)
        .map_err(|source| DatasetError::Window { path: csv_path.to_path_buf(), source })?;
    let mut trace = w.trace;
    trace.label = meta.label;
    Ok(LoadedTrace { path: csv_path.to_path_buf(), trace, fills: w.fills })
}

/// Every `*.csv` trace in `dir`, sorted by file name.
pub fn read_trace_dir(dir: &Path, tick_interval_us: u32) -> Result<Vec<LoadedTrace>, DatasetError> {
    let mut paths = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        if path.extension().is_some_and(|e| e == "csv") {
            paths.push(path);
        }
    }
    paths.sort();
    paths.iter().map(|p| read_trace(p, tick_interval_us)).collect()
}

/// Writes `trace_0000.csv`, `trace_0001.csv`, ... with the trigger at the
/// window's pre-trigger offset so timestamps start at zero.
pub fn write_trace_dir(dir: &Path, traces: &[FlickTrace]) -> Result<Vec<PathBuf>, DatasetError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    traces
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let path = dir.join(format!("trace_{i:04}.csv"));
            let trigger = t.trigger_index as i64 * i64::from(t.tick_interval_us);
            write_trace(&path, t, trigger).map(|()| path)
        })
        .collect()
}

pub fn write_features<W: Write>(out: W, table: &FeatureTable) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(std::iter::once("label").chain(FEATURE_NAMES))?;
    for (label, row) in table.labels.iter().zip(&table.rows) {
        let mut rec = vec![label.clone()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Feature rows with an optional leading `label` column; unlabeled rows get
/// an empty label.
pub fn read_features<R: Read>(input: R, path: &Path) -> Result<FeatureTable, DatasetError> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(csv_err(path))?.clone();
    let labeled = headers.get(0) == Some("label");
    let offset = usize::from(labeled);
    let names: Vec<&str> = headers.iter().skip(offset).collect();
    if names != FEATURE_NAMES {
        return Err(format_err(path, "columns must be [label,] followed by the 42 canonical feature names"));
    }
    let mut table = FeatureTable::default();
    for rec in r.records() {
        let rec = rec.map_err(csv_err(path))?;
        let line = rec.position().map_or(0, |p| p.line());
        let mut row = [0.0; FEATURE_COUNT];
        for (i, slot) in row.iter_mut().enumerate() {
            *slot = rec[i + offset]
                .trim()
                .parse()
                .map_err(|_| format_err(path, format!("line {line}: bad value for {}", FEATURE_NAMES[i])))?;
        }
        table.rows.push(row);
        table.labels.push(if labeled { rec[0].to_string() } else { String::new() });
    }
    Ok(table)
}

pub fn read_features_file(path: &Path) -> Result<FeatureTable, DatasetError> {
    let f = std::fs::File::open(path).map_err(io_err(path))?;
    read_features(f, path)
}

pub fn frame_csv_header() -> Vec<String> {
    let mut h: Vec<String> = ["unit_id", "timestamp_us"].iter().map(|s| s.to_string()).collect();
    h.extend(TRACE_COLUMNS[1..].iter().map(|s| s.to_string()));
    h.extend((0..TACTILE_CELLS).map(|i| format!("tactile_{i}")));
    h
}

/// One row per frame; tactile columns are blank when the grid is absent.
pub fn write_frames<W: Write>(out: W, frames: &[SensorFrame]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(frame_csv_header())?;
    for f in frames {
        let mut rec = vec![f.unit_id.to_string(), f.timestamp_us.to_string()];
        rec.extend(f.acc.iter().chain(&f.gyro).chain(&f.mag).map(|v| v.to_string()));
        match &f.tactile {
            Some(grid) => rec.extend(grid.iter().map(|g| g.to_string())),
            None => rec.extend(std::iter::repeat_n(String::new(), TACTILE_CELLS)),
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::extract_features;
    use crate::synth::{gen_flick, FlickModel};

    #[test]
    fn trace_dir_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let traces = gen_flick(&FlickModel::for_mass(125.0, 3), 2);
        write_trace_dir(dir.path(), &traces).unwrap();
        let back = read_trace_dir(dir.path(), 2000).unwrap();
        assert_eq!(back.len(), 2);
        for (b, t) in back.iter().zip(&traces) {
            assert_eq!(b.fills, 0);
            assert_eq!(b.trace, *t);
            assert_eq!(extract_features(&b.trace).unwrap(), extract_features(t).unwrap());
        }
    }

    #[test]
    fn feature_csv_round_trip() {
        let mut table = FeatureTable::default();
        let mut row = [0.0; FEATURE_COUNT];
        for (i, v) in row.iter_mut().enumerate() {
            *v = i as f64 * 0.1 - 1.0 / 3.0;
        }
        table.rows.push(row);
        table.labels.push("82g".into());
        let mut buf = Vec::new();
        write_features(&mut buf, &table).unwrap();
        let back = read_features(buf.as_slice(), Path::new("mem")).unwrap();
        assert_eq!(back, table);
    }

    #[test]
    fn unlabeled_feature_rows() {
        let header = FEATURE_NAMES.join(",");
        let row = vec!["1.5"; 42].join(",");
        let t = read_features(format!("{header}\n{row}\n").as_bytes(), Path::new("mem")).unwrap();
        assert_eq!(t.labels, vec![""]);
        assert_eq!(t.rows[0][41], 1.5);
        let bad = read_features("a,b\n1,2\n".as_bytes(), Path::new("mem"));
        assert!(matches!(bad, Err(DatasetError::Format { .. })));
    }

    #[test]
    fn frames_csv_blank_tactile() {
        let mut f = SensorFrame::imu(3, 10, [1.0, 2.0, 3.0], [0.5; 3], [-1.0; 3]);
        let mut buf = Vec::new();
        write_frames(&mut buf, std::slice::from_ref(&f)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let line = text.lines().nth(1).unwrap();
        assert!(line.starts_with("3,10,1,2,3,0.5,0.5,0.5,-1,-1,-1,"));
        assert!(line.ends_with(&",".repeat(35)));
        f.tactile = Some([20; TACTILE_CELLS]);
        let mut buf = Vec::new();
        write_frames(&mut buf, &[f]).unwrap();
        assert!(String::from_utf8(buf).unwrap().lines().nth(1).unwrap().ends_with(",20,20"));
        assert_eq!(frame_csv_header().len(), 2 + 9 + 36);
    }
}
