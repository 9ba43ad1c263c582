//! Thermal scoring, cross-sectional boundary search, denoising and the
//! thermal affordance map used to filter grasp candidates.

use std::collections::HashMap;

use nalgebra::{IsometryMatrix3, Matrix3, Point3, Rotation3, Translation3, Unit, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cloud::{ColoredPoint, PointCloud};

/// Minimum drop between adjacent slices for a qualified boundary.
pub const JUMP_THRESHOLD: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AffordanceError {
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("point {0} has no thermal score")]
    MissingScores(usize),
    #[error("need at least 2 slices, got {0}")]
    TooFewSlices(usize),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("slice profile does not match the cloud: {0}")]
    ProfileMismatch(String),
}

/// Which side of the liquid surface is warm.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HotSide {
    /// Warm liquid below a cool air layer.
    #[default]
    Below,
    /// Inverted reading: warm slices above cool ones.
    Above,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DenoiseConfig {
    pub red_weight: f64,
    pub green_weight: f64,
    pub blue_weight: f64,
    /// Hot-side slice mean must exceed this for a qualified boundary.
    pub upper_hot_threshold: f64,
    /// Cool-side slice mean must fall below this for a qualified boundary.
    pub lower_cool_threshold: f64,
    pub jump_threshold: f64,
    /// Meters.
    pub slice_height: f64,
    /// Slicing direction; normalized before use.
    pub axis: [f64; 3],
    pub hot_side: HotSide,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        Self {
            red_weight: 1.0,
            green_weight: -0.5,
            blue_weight: -0.5,
            upper_hot_threshold: 40.0,
            lower_cool_threshold: -40.0,
            jump_threshold: JUMP_THRESHOLD,
            slice_height: 0.005,
            axis: [0.0, 0.0, 1.0],
            hot_side: HotSide::Below,
        }
    }
}

impl DenoiseConfig {
    pub fn validate(&self) -> Result<(), AffordanceError> {
        let bad = |m: &str| Err(AffordanceError::InvalidConfig(m.to_string()));
        if !(self.jump_threshold > 0.0) {
            return bad("jump_threshold must be positive");
        }
        if !(self.slice_height > 0.0) {
            return bad("slice_height must be positive");
        }
        if self.axis_unit().is_none() {
            return bad("axis must be a finite non-zero vector");
        }
        Ok(())
    }

    pub fn axis_unit(&self) -> Option<Unit<Vector3<f64>>> {
        let v = Vector3::from(self.axis);
        if !v.iter().all(|c| c.is_finite()) {
            return None;
        }
        Unit::try_new(v, 1e-12)
    }

    pub fn score_rgb(&self, rgb: [u8; 3]) -> f64 {
        self.red_weight * f64::from(rgb[0]) + self.green_weight * f64::from(rgb[1]) + self.blue_weight * f64::from(rgb[2])
    }
}

/// Weighted RGB heat score; positive reads hot, negative cool.
pub fn score_thermal(point: &ColoredPoint, cfg: &DenoiseConfig) -> f64 {
    cfg.score_rgb(point.rgb)
}

/// Copy of `cloud` with every point's `thermal_score` set.
pub fn score_cloud(cloud: &PointCloud, cfg: &DenoiseConfig) -> PointCloud {
    let mut out = cloud.clone();
    for p in &mut out.points {
        p.thermal_score = Some(cfg.score_rgb(p.rgb));
    }
    out
}

fn scores(cloud: &PointCloud) -> Result<Vec<f64>, AffordanceError> {
    cloud
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| p.thermal_score.ok_or(AffordanceError::MissingScores(i)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Slice {
    pub mean_score: f64,
    pub indices: Vec<usize>,
}

/// Points binned into fixed-height layers along an axis.
///
/// Bin edges sit on multiples of `slice_height` measured from the origin;
/// slice 0 is the lowest occupied bin and empty bins in between are kept.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceProfile {
    pub axis: [f64; 3],
    pub slice_height: f64,
    /// Height along `axis` of slice 0's lower edge.
    pub origin: f64,
    pub slices: Vec<Slice>,
}

impl SliceProfile {
    pub fn means(&self) -> Vec<f64> {
        self.slices.iter().map(|s| s.mean_score).collect()
    }

    pub fn bin_of(height: f64, slice_height: f64) -> i64 {
        (height / slice_height).floor() as i64
    }

    /// Slice index holding `height`, possibly outside the occupied range.
    pub fn slice_at(&self, height: f64) -> i64 {
        Self::bin_of(height, self.slice_height) - Self::bin_of(self.origin, self.slice_height)
    }

    /// Lower edge of slice `i` along the axis.
    pub fn slice_floor(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.slice_height
    }

    pub fn point_count(&self) -> usize {
        self.slices.iter().map(|s| s.indices.len()).sum()
    }
}

pub fn slice_cloud(
    cloud: &PointCloud,
    axis: &Unit<Vector3<f64>>,
    slice_height: f64,
) -> Result<SliceProfile, AffordanceError> {
    if cloud.is_empty() {
        return Err(AffordanceError::EmptyCloud);
    }
    if !(slice_height > 0.0) {
        return Err(AffordanceError::InvalidConfig("slice_height must be positive".into()));
    }
    let scores = scores(cloud)?;
    let bins: Vec<i64> = cloud
        .points
        .iter()
        .map(|p| SliceProfile::bin_of(p.position.coords.dot(axis), slice_height))
        .collect();
    let lo = *bins.iter().min().unwrap();
    let hi = *bins.iter().max().unwrap();
    let mut slices: Vec<Slice> = (lo..=hi).map(|_| Slice { mean_score: 0.0, indices: Vec::new() }).collect();
    for (i, b) in bins.iter().enumerate() {
        slices[(b - lo) as usize].indices.push(i);
    }
    for s in &mut slices {
        if !s.indices.is_empty() {
            s.mean_score = s.indices.iter().map(|&i| scores[i]).sum::<f64>() / s.indices.len() as f64;
        }
    }
    Ok(SliceProfile { axis: [axis.x, axis.y, axis.z], slice_height, origin: lo as f64 * slice_height, slices })
}

/// Location of the warm/cool transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Boundary {
    /// Upper slice of the chosen adjacent pair.
    pub upper_slice: usize,
    /// Hot-side mean minus cool-side mean across the pair.
    pub drop: f64,
    /// `true` when the pair met all three thresholds; `false` marks the
    /// low-confidence largest-drop fallback.
    pub qualified: bool,
}

/// Picks the adjacent slice pair with the largest hot-to-cool drop, preferring
/// pairs that clear both level thresholds and the jump threshold.
pub fn find_boundary(profile: &SliceProfile, cfg: &DenoiseConfig) -> Result<Boundary, AffordanceError> {
    let means = profile.means();
    if means.len() < 2 {
        return Err(AffordanceError::TooFewSlices(means.len()));
    }
    let mut best_qualified: Option<Boundary> = None;
    let mut best_any: Option<Boundary> = None;
    for (i, pair) in means.windows(2).enumerate() {
        let (hot, cool) = match cfg.hot_side {
            HotSide::Below => (pair[0], pair[1]),
            HotSide::Above => (pair[1], pair[0]),
        };
        let drop = hot - cool;
        let qualified =
            hot > cfg.upper_hot_threshold && cool < cfg.lower_cool_threshold && drop > cfg.jump_threshold;
        let cand = Boundary { upper_slice: i + 1, drop, qualified };
        if best_any.is_none_or(|b| drop > b.drop) {
            best_any = Some(cand);
        }
        if qualified && best_qualified.is_none_or(|b| drop > b.drop) {
            best_qualified = Some(cand);
        }
    }
    Ok(best_qualified.or(best_any).expect("at least one pair"))
}

/// Component-wise lower median.
fn dominant_rgb(cloud: &PointCloud, indices: &[usize]) -> Option<[u8; 3]> {
    if indices.is_empty() {
        return None;
    }
    let mut out = [0u8; 3];
    let mut channel = Vec::with_capacity(indices.len());
    for (c, slot) in out.iter_mut().enumerate() {
        channel.clear();
        channel.extend(indices.iter().map(|&i| cloud.points[i].rgb[c]));
        channel.sort_unstable();
        *slot = channel[(channel.len() - 1) / 2];
    }
    Some(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Denoised {
    pub cloud: PointCloud,
    /// Indices of replaced points, ascending.
    pub anomalies: Vec<usize>,
    /// Dominant colors of the hot and cool sides.
    pub hot_rgb: Option<[u8; 3]>,
    pub cool_rgb: Option<[u8; 3]>,
}

/// Replaces points whose score sign contradicts their side of the boundary
/// with that side's dominant color.
pub fn denoise(
    cloud: &PointCloud,
    profile: &SliceProfile,
    boundary: &Boundary,
    cfg: &DenoiseConfig,
) -> Result<Denoised, AffordanceError> {
    let scores = scores(cloud)?;
    if profile.point_count() != cloud.len() {
        return Err(AffordanceError::ProfileMismatch(format!(
            "profile holds {} points, cloud has {}",
            profile.point_count(),
            cloud.len()
        )));
    }
    if boundary.upper_slice == 0 || boundary.upper_slice >= profile.slices.len() {
        return Err(AffordanceError::ProfileMismatch(format!("boundary slice {} out of range", boundary.upper_slice)));
    }
    let (below, above): (Vec<usize>, Vec<usize>) = {
        let (lo, hi) = profile.slices.split_at(boundary.upper_slice);
        let gather = |s: &[Slice]| s.iter().flat_map(|s| s.indices.iter().copied()).collect::<Vec<_>>();
        (gather(lo), gather(hi))
    };
    if let Some(&i) = below.iter().chain(&above).find(|&&i| i >= cloud.len()) {
        return Err(AffordanceError::ProfileMismatch(format!("index {i} out of range")));
    }
    let (hot_idx, cool_idx) = match cfg.hot_side {
        HotSide::Below => (below, above),
        HotSide::Above => (above, below),
    };
    let hot_rgb = dominant_rgb(cloud, &hot_idx);
    let cool_rgb = dominant_rgb(cloud, &cool_idx);

    let mut out = cloud.clone();
    let mut anomalies = Vec::new();
    let mut replace = |indices: &[usize], rgb: Option<[u8; 3]>, is_anomaly: fn(f64) -> bool| {
        let Some(rgb) = rgb else { return };
        let score = cfg.score_rgb(rgb);
        for &i in indices {
            if is_anomaly(scores[i]) {
                out.points[i].rgb = rgb;
                out.points[i].thermal_score = Some(score);
                anomalies.push(i);
            }
        }
    };
    replace(&hot_idx, hot_rgb, |s| s < 0.0);
    replace(&cool_idx, cool_rgb, |s| s > 0.0);
    anomalies.sort_unstable();
    Ok(Denoised { cloud: out, anomalies, hot_rgb, cool_rgb })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DenoiseReport {
    pub boundary_slice: usize,
    pub boundary_height: f64,
    pub qualified: bool,
    pub drop: f64,
    pub anomaly_count: usize,
    pub anomalies: Vec<usize>,
    pub slice_means: Vec<f64>,
}

/// Scores, slices, locates the boundary and denoises in one pass.
pub fn run_denoise(cloud: &PointCloud, cfg: &DenoiseConfig) -> Result<(PointCloud, DenoiseReport), AffordanceError> {
    cfg.validate()?;
    let scored = score_cloud(cloud, cfg);
    let axis = cfg.axis_unit().expect("validated");
    let profile = slice_cloud(&scored, &axis, cfg.slice_height)?;
    let boundary = find_boundary(&profile, cfg)?;
    let result = denoise(&scored, &profile, &boundary, cfg)?;
    let report = DenoiseReport {
        boundary_slice: boundary.upper_slice,
        boundary_height: profile.slice_floor(boundary.upper_slice),
        qualified: boundary.qualified,
        drop: boundary.drop,
        anomaly_count: result.anomalies.len(),
        anomalies: result.anomalies,
        slice_means: profile.means(),
    };
    Ok((result.cloud, report))
}

/// Scored cloud split into hot and safe points.
#[derive(Debug, Clone, PartialEq)]
pub struct AffordanceMap {
    pub cloud: PointCloud,
    pub hot_threshold: f64,
    /// `{i : score_i >= hot_threshold}`, ascending.
    pub hot_indices: Vec<usize>,
}

impl AffordanceMap {
    pub fn hot_points(&self) -> impl Iterator<Item = (usize, &Point3<f64>)> + '_ {
        self.hot_indices.iter().map(|&i| (i, &self.cloud.points[i].position))
    }
}

pub fn build_affordance(cloud: &PointCloud, hot_threshold: f64) -> Result<AffordanceMap, AffordanceError> {
    let scores = scores(cloud)?;
    let hot_indices = scores.iter().enumerate().filter(|(_, &s)| s >= hot_threshold).map(|(i, _)| i).collect();
    Ok(AffordanceMap { cloud: cloud.clone(), hot_threshold, hot_indices })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraspCandidate {
    pub hand_pose: IsometryMatrix3<f64>,
    /// World-frame contact points.
    pub contacts: Vec<Point3<f64>>,
}

/// Why a candidate was dropped: its closest (contact, hot point) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rejection {
    pub candidate: usize,
    pub contact: usize,
    pub hot_point: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraspFilter {
    /// Indices into the input of the retained candidates, in input order.
    pub kept: Vec<usize>,
    pub rejected: Vec<Rejection>,
}

impl GraspFilter {
    pub fn kept_candidates<'a>(&'a self, input: &'a [GraspCandidate]) -> impl Iterator<Item = &'a GraspCandidate> + 'a {
        self.kept.iter().map(move |&i| &input[i])
    }
}

/// Uniform hash grid over hot points. Cells are twice the query radius so any
/// pair within the radius lies in neighboring cells.
struct HotGrid<'a> {
    cell: f64,
    points: &'a [ColoredPoint],
    cells: HashMap<[i64; 3], Vec<usize>>,
}

impl<'a> HotGrid<'a> {
    fn new(map: &'a AffordanceMap, radius: f64) -> Self {
        let cell = if radius > 0.0 { 2.0 * radius } else { 1.0 };
        let mut cells: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for (i, p) in map.hot_points() {
            cells.entry(Self::key(p, cell)).or_default().push(i);
        }
        Self { cell, points: &map.cloud.points, cells }
    }

    fn key(p: &Point3<f64>, cell: f64) -> [i64; 3] {
        [(p.x / cell).floor() as i64, (p.y / cell).floor() as i64, (p.z / cell).floor() as i64]
    }

    /// Closest hot point within `radius`, ties to the lowest index.
    fn nearest_within(&self, q: &Point3<f64>, radius: f64) -> Option<(usize, f64)> {
        let [kx, ky, kz] = Self::key(q, self.cell);
        let mut best: Option<(usize, f64)> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let Some(bucket) = self.cells.get(&[kx + dx, ky + dy, kz + dz]) else { continue };
                    for &h in bucket {
                        let d = (self.points[h].position - q).norm();
                        if d <= radius && best.is_none_or(|(bh, bd)| d < bd || (d == bd && h < bh)) {
                            best = Some((h, d));
                        }
                    }
                }
            }
        }
        best
    }
}

/// Keeps candidates whose every contact is farther than `safety_radius` from
/// every hot point.
pub fn filter_grasps(candidates: &[GraspCandidate], map: &AffordanceMap, safety_radius: f64) -> GraspFilter {
    assert!(safety_radius >= 0.0, "safety radius must be non-negative");
    let grid = HotGrid::new(map, safety_radius);
    let mut kept = Vec::new();
    let mut rejected = Vec::new();
    for (ci, cand) in candidates.iter().enumerate() {
        let mut worst: Option<Rejection> = None;
        for (k, contact) in cand.contacts.iter().enumerate() {
            if let Some((h, d)) = grid.nearest_within(contact, safety_radius) {
                if worst.is_none_or(|w| d < w.distance) {
                    worst = Some(Rejection { candidate: ci, contact: k, hot_point: h, distance: d });
                }
            }
        }
        match worst {
            Some(r) => rejected.push(r),
            None => kept.push(ci),
        }
    }
    GraspFilter { kept, rejected }
}

/// Grasp candidate as stored in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraspRecord {
    pub pose: PoseRecord,
    pub contacts: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseRecord {
    #[serde(rename = "R")]
    pub r: [f64; 9],
    pub t: [f64; 3],
}

impl TryFrom<&GraspRecord> for GraspCandidate {
    type Error = AffordanceError;

    fn try_from(rec: &GraspRecord) -> Result<Self, Self::Error> {
        if rec.contacts.is_empty() {
            return Err(AffordanceError::InvalidConfig("grasp candidate needs at least one contact".into()));
        }
        let r = Rotation3::from_matrix_unchecked(Matrix3::from_row_slice(&rec.pose.r));
        let hand_pose = IsometryMatrix3::from_parts(Translation3::new(rec.pose.t[0], rec.pose.t[1], rec.pose.t[2]), r);
        let contacts = rec.contacts.iter().map(|c| Point3::from(*c)).collect();
        Ok(Self { hand_pose, contacts })
    }
}

impl From<&GraspCandidate> for GraspRecord {
    fn from(c: &GraspCandidate) -> Self {
        let m = c.hand_pose.rotation.matrix();
        let mut r = [0.0; 9];
        for row in 0..3 {
            for col in 0..3 {
                r[3 * row + col] = m[(row, col)];
            }
        }
        let t = c.hand_pose.translation.vector;
        Self { pose: PoseRecord { r, t: [t.x, t.y, t.z] }, contacts: c.contacts.iter().map(|p| [p.x, p.y, p.z]).collect() }
    }
}
