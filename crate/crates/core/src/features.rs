//! Trigger-aligned flick windows and their 42 summary statistics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::wire::{FrameStreamConfig, SensorFrame};

/// Window start relative to the flick trigger.
pub const PRE_TRIGGER_US: u64 = 250_000;
/// Window end relative to the flick trigger.
pub const POST_TRIGGER_US: u64 = 1_000_000;

pub const FEATURE_COUNT: usize = 42;

/// Canonical feature order: per-axis statistics for every sensor, then the
/// per-sensor range and magnitude mean.
#[rustfmt::skip]
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "ACC_X_Min", "ACC_X_Max", "ACC_X_Mean", "ACC_X_Std",
    "ACC_Y_Min", "ACC_Y_Max", "ACC_Y_Mean", "ACC_Y_Std",
    "ACC_Z_Min", "ACC_Z_Max", "ACC_Z_Mean", "ACC_Z_Std",
    "GYRO_X_Min", "GYRO_X_Max", "GYRO_X_Mean", "GYRO_X_Std",
    "GYRO_Y_Min", "GYRO_Y_Max", "GYRO_Y_Mean", "GYRO_Y_Std",
    "GYRO_Z_Min", "GYRO_Z_Max", "GYRO_Z_Mean", "GYRO_Z_Std",
    "MAG_X_Min", "MAG_X_Max", "MAG_X_Mean", "MAG_X_Std",
    "MAG_Y_Min", "MAG_Y_Max", "MAG_Y_Mean", "MAG_Y_Std",
    "MAG_Z_Min", "MAG_Z_Max", "MAG_Z_Mean", "MAG_Z_Std",
    "ACC_Range", "ACC_MagMean",
    "GYRO_Range", "GYRO_MagMean",
    "MAG_Range", "MAG_MagMean",
];

/// Number of ticks in a window: both endpoints lie on the grid.
pub fn window_len(tick_interval_us: u32) -> usize {
    ((PRE_TRIGGER_US + POST_TRIGGER_US) / u64::from(tick_interval_us)) as usize + 1
}

pub fn trigger_index(tick_interval_us: u32) -> usize {
    (PRE_TRIGGER_US / u64::from(tick_interval_us)) as usize
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FeatureError {
    #[error("stream covers [{first_us}, {last_us}] µs but the window needs [{start_us}, {end_us}] µs")]
    InsufficientCoverage { start_us: i64, end_us: i64, first_us: i64, last_us: i64 },
    #[error("frames are not sorted by timestamp at index {0}")]
    Unsorted(usize),
    #[error("tick interval must be positive")]
    ZeroTick,
    #[error("trace has no samples")]
    EmptyTrace,
    #[error("trace {0} has no label")]
    UnlabeledTrace(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ImuSample {
    pub acc: [f64; 3],
    pub gyro: [f64; 3],
    pub mag: [f64; 3],
}

impl ImuSample {
    pub fn sensors(&self) -> [&[f64; 3]; 3] {
        [&self.acc, &self.gyro, &self.mag]
    }

    pub fn scaled(&self, c: f64) -> Self {
        let s = |v: [f64; 3]| v.map(|x| x * c);
        Self { acc: s(self.acc), gyro: s(self.gyro), mag: s(self.mag) }
    }
}

impl From<&SensorFrame> for ImuSample {
    fn from(f: &SensorFrame) -> Self {
        let w = |v: [f32; 3]| v.map(f64::from);
        Self { acc: w(f.acc), gyro: w(f.gyro), mag: w(f.mag) }
    }
}

/// A fixed-cadence window of IMU samples around a flick.
#[derive(Debug, Clone, PartialEq)]
pub struct FlickTrace {
    pub samples: Vec<ImuSample>,
    pub tick_interval_us: u32,
    pub trigger_index: usize,
    pub label: Option<String>,
}

impl FlickTrace {
    /// Timestamp of sample `k` given the trigger time.
    pub fn sample_time_us(&self, k: usize, trigger_us: i64) -> i64 {
        trigger_us + (k as i64 - self.trigger_index as i64) * i64::from(self.tick_interval_us)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Windowed {
    pub trace: FlickTrace,
    /// Grid ticks with no nearby sample, filled by holding the previous one.
    pub fills: usize,
}

/// Resamples timestamped readings onto the window grid around `trigger_us`.
///
/// Each grid tick takes the reading nearest to it within half a tick (ties
/// to the earlier one); ticks without one hold the previous sample.
pub fn window_samples(
    stamped: &[(i64, ImuSample)],
    trigger_us: i64,
    tick_interval_us: u32,
) -> Result<Windowed, FeatureError> {
    if tick_interval_us == 0 {
        return Err(FeatureError::ZeroTick);
    }
    if let Some(i) = stamped.windows(2).position(|w| w[1].0 < w[0].0) {
        return Err(FeatureError::Unsorted(i + 1));
    }
    let tick = i64::from(tick_interval_us);
    let half = tick / 2;
    let n = window_len(tick_interval_us);
    let start = trigger_us - trigger_index(tick_interval_us) as i64 * tick;
    let end = start + (n as i64 - 1) * tick;
    let coverage_err = || FeatureError::InsufficientCoverage {
        start_us: start,
        end_us: end,
        first_us: stamped.first().map_or(i64::MAX, |s| s.0),
        last_us: stamped.last().map_or(i64::MIN, |s| s.0),
    };
    match (stamped.first(), stamped.last()) {
        (Some(first), Some(last)) if first.0 <= start + half && last.0 >= end - half => {}
        _ => return Err(coverage_err()),
    }

    let mut samples = Vec::with_capacity(n);
    let mut fills = 0;
    // Index of the first reading with timestamp >= current tick - half.
    let mut cursor = 0;
    for k in 0..n {
        let t = start + k as i64 * tick;
        while cursor < stamped.len() && stamped[cursor].0 < t - half {
            cursor += 1;
        }
        let mut best: Option<(i64, ImuSample)> = None;
        for &(ts, s) in stamped[cursor..].iter().take_while(|(ts, _)| *ts <= t + half) {
            let d = (ts - t).abs();
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, s));
            }
        }
        match best {
            Some((_, s)) => samples.push(s),
            None => {
                fills += 1;
                let held = samples.last().copied().or_else(|| {
                    // Before the first tick: the latest reading earlier than it.
                    stamped[..cursor].last().map(|(_, s)| *s)
                });
                samples.push(held.ok_or_else(coverage_err)?);
            }
        }
    }
    let trace = FlickTrace {
        samples,
        tick_interval_us,
        trigger_index: trigger_index(tick_interval_us),
        label: None,
    };
    Ok(Windowed { trace, fills })
}

/// Windows a single unit's frames (typically the fingertip board).
pub fn window_trace(frames: &[SensorFrame], trigger_us: u64, cfg: &FrameStreamConfig) -> Result<Windowed, FeatureError> {
    let stamped: Vec<(i64, ImuSample)> = frames.iter().map(|f| (i64::from(f.timestamp_us), ImuSample::from(f))).collect();
    window_samples(&stamped, trigger_us as i64, cfg.tick_interval_us)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StdDivisor {
    /// Divide by n.
    #[default]
    Population,
    /// Divide by n - 1; a single sample has zero spread.
    Sample,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: [f64; FEATURE_COUNT],
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        FEATURE_NAMES.iter().position(|n| *n == name).map(|i| self.values[i])
    }

    pub fn names() -> &'static [&'static str; FEATURE_COUNT] {
        &FEATURE_NAMES
    }
}

#[derive(Debug, Clone, Copy)]
struct AxisStats {
    min: f64,
    max: f64,
    mean: f64,
    std: f64,
}

fn axis_stats(values: impl Iterator<Item = f64> + Clone, n: usize, divisor: StdDivisor) -> AxisStats {
    let (mut min, mut max, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for v in values.clone() {
        min = min.min(v);
        max = max.max(v);
        sum += v;
    }
    let mean = sum / n as f64;
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    let denom = match divisor {
        StdDivisor::Population => n as f64,
        StdDivisor::Sample if n > 1 => (n - 1) as f64,
        StdDivisor::Sample => 1.0,
    };
    // Rounding can leave the mean a hair outside [min, max] on flat signals.
    AxisStats { min, max, mean: mean.clamp(min, max), std: (ss / denom).sqrt() }
}

/// Per-sensor range: the largest single-axis excursion.
fn sensor_range(axes: &[AxisStats; 3]) -> f64 {
    axes.iter().map(|a| a.max - a.min).fold(0.0, f64::max)
}

pub fn extract_features_with(trace: &FlickTrace, divisor: StdDivisor) -> Result<FeatureVector, FeatureError> {
    let n = trace.samples.len();
    if n == 0 {
        return Err(FeatureError::EmptyTrace);
    }
    let mut values = [0.0; FEATURE_COUNT];
    for sensor in 0..3 {
        let axes: [AxisStats; 3] = std::array::from_fn(|axis| {
            axis_stats(trace.samples.iter().map(move |s| s.sensors()[sensor][axis]), n, divisor)
        });
        for (axis, st) in axes.iter().enumerate() {
            let at = 12 * sensor + 4 * axis;
            values[at..at + 4].copy_from_slice(&[st.min, st.max, st.mean, st.std]);
        }
        let mag_mean = trace
            .samples
            .iter()
            .map(|s| {
                let v = s.sensors()[sensor];
                (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
            })
            .sum::<f64>()
            / n as f64;
        values[36 + 2 * sensor] = sensor_range(&axes);
        values[37 + 2 * sensor] = mag_mean;
    }
    Ok(FeatureVector { values })
}

pub fn extract_features(trace: &FlickTrace) -> Result<FeatureVector, FeatureError> {
    extract_features_with(trace, StdDivisor::Population)
}

/// Labeled feature rows in canonical column order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureTable {
    pub rows: Vec<[f64; FEATURE_COUNT]>,
    pub labels: Vec<String>,
}

impl FeatureTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn matrix(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.rows.len(), FEATURE_COUNT, |r, c| self.rows[r][c])
    }
}

pub fn batch_extract(traces: &[FlickTrace], divisor: StdDivisor) -> Result<FeatureTable, FeatureError> {
    let mut table = FeatureTable::default();
    for (i, t) in traces.iter().enumerate() {
        let label = t.label.clone().ok_or(FeatureError::UnlabeledTrace(i))?;
        table.rows.push(extract_features_with(t, divisor)?.values);
        table.labels.push(label);
    }
    Ok(table)
}
