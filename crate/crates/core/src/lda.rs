//! Linear discriminant analysis on standardized features.
//!
//! Fitting standardizes every column, builds within- and between-class
//! scatter, and solves `S_B w = λ (S_W + ρI) w` through the Cholesky factor
//! `S_W + ρI = L Lᵀ`: the symmetric matrix `L⁻¹ S_B L⁻ᵀ` has the same
//! eigenvalues, and `w = L⁻ᵀ v` recovers each discriminant direction.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_RIDGE_SCALE: f64 = 1e-6;
/// Retained eigenvalues at or below this are treated as zero.
pub const RANK_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LdaError {
    #[error("class '{label}' has {count} sample(s); at least 2 required")]
    DegenerateClass { label: String, count: usize },
    #[error("need at least 2 classes, got {0}")]
    TooFewClasses(usize),
    #[error("all discriminant eigenvalues are below {RANK_EPSILON:e}")]
    RankCollapse,
    #[error("dimension mismatch: expected {expected} columns, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("{rows} feature rows but {labels} labels")]
    LabelCount { rows: usize, labels: usize },
    #[error("non-finite feature value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("regularized within-class scatter is not positive definite")]
    NotPositiveDefinite,
    #[error("need at least 3 points for an ellipse, got {0}")]
    TooFewPoints(usize),
    #[error("points are collinear; covariance is degenerate")]
    DegenerateCovariance,
    #[error("coverage must lie in (0, 1), got {0}")]
    InvalidCoverage(f64),
    #[error("inconsistent model: {0}")]
    InvalidModel(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LdaConfig {
    /// Ridge added to `S_W` is `ridge_scale * trace(S_W) / p`.
    pub ridge_scale: f64,
}

impl Default for LdaConfig {
    fn default() -> Self {
        Self { ridge_scale: DEFAULT_RIDGE_SCALE }
    }
}

/// A fitted discriminant model. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LdaModel {
    /// Sorted, unique.
    pub class_labels: Vec<String>,
    pub feature_names: Vec<String>,
    /// Per-class means of the raw features.
    pub class_means: Vec<Vec<f64>>,
    /// Mean of the raw training features; the standardization center.
    pub global_mean: Vec<f64>,
    /// Multiplier applied after centering: `1/std`, or 0 for constant columns.
    pub scale: Vec<f64>,
    /// Unit-norm discriminant axes over standardized features.
    pub directions: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub explained_variance: Vec<f64>,
    /// Class centroids in discriminant space.
    pub projected_centroids: Vec<Vec<f64>>,
    pub ridge: f64,
}

fn check_finite(x: &DMatrix<f64>) -> Result<(), LdaError> {
    for c in 0..x.ncols() {
        for r in 0..x.nrows() {
            if !x[(r, c)].is_finite() {
                return Err(LdaError::NonFinite { row: r, col: c });
            }
        }
    }
    Ok(())
}

/// Column means and standardizing multipliers (population std).
fn standardization(x: &DMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
    let n = x.nrows() as f64;
    let mut mean = Vec::with_capacity(x.ncols());
    let mut scale = Vec::with_capacity(x.ncols());
    for col in x.column_iter() {
        let m = col.sum() / n;
        let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
        let sd = var.sqrt();
        // Columns whose spread is pure rounding noise count as constant.
        let constant = !(sd > 1e-12 * m.abs().max(f64::MIN_POSITIVE));
        mean.push(m);
        scale.push(if constant { 0.0 } else { 1.0 / sd });
    }
    (mean, scale)
}

fn apply_standardization(x: &DMatrix<f64>, mean: &[f64], scale: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), x.ncols(), |r, c| (x[(r, c)] - mean[c]) * scale[c])
}

/// Makes the largest-magnitude component positive (first one on ties).
fn canonical_sign(v: &mut DVector<f64>) {
    let mut pivot = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[pivot].abs() {
            pivot = i;
        }
    }
    if v[pivot] < 0.0 {
        v.neg_mut();
    }
}

pub fn fit(
    features: &DMatrix<f64>,
    labels: &[String],
    feature_names: &[String],
    cfg: &LdaConfig,
) -> Result<LdaModel, LdaError> {
    let (n, p) = features.shape();
    if labels.len() != n {
        return Err(LdaError::LabelCount { rows: n, labels: labels.len() });
    }
    if feature_names.len() != p {
        return Err(LdaError::DimensionMismatch { expected: p, actual: feature_names.len() });
    }
    check_finite(features)?;
    let mut class_labels: Vec<String> = labels.to_vec();
    class_labels.sort();
    class_labels.dedup();
    if class_labels.len() < 2 {
        return Err(LdaError::TooFewClasses(class_labels.len()));
    }
    let members: Vec<Vec<usize>> = class_labels
        .iter()
        .map(|c| labels.iter().enumerate().filter(|(_, l)| *l == c).map(|(i, _)| i).collect())
        .collect();
    for (c, m) in class_labels.iter().zip(&members) {
        if m.len() < 2 {
            return Err(LdaError::DegenerateClass { label: c.clone(), count: m.len() });
        }
    }

    let (global_mean, scale) = standardization(features);
    let z = apply_standardization(features, &global_mean, &scale);
    let z_mean: DVector<f64> = z.row_mean().transpose();

    let mut s_w = DMatrix::<f64>::zeros(p, p);
    let mut s_b = DMatrix::<f64>::zeros(p, p);
    let mut z_class_means = Vec::with_capacity(members.len());
    for m in &members {
        let mut mu = DVector::<f64>::zeros(p);
        for &i in m {
            mu += z.row(i).transpose();
        }
        mu /= m.len() as f64;
        for &i in m {
            let d = z.row(i).transpose() - &mu;
            s_w.ger(1.0, &d, &d, 1.0);
        }
        let d = &mu - &z_mean;
        s_b.ger(m.len() as f64, &d, &d, 1.0);
        z_class_means.push(mu);
    }

    let trace = s_w.trace();
    let ridge = if trace > 0.0 { cfg.ridge_scale * trace / p as f64 } else { cfg.ridge_scale };
    let mut a = s_w;
    for i in 0..p {
        a[(i, i)] += ridge;
    }
    let chol = a.cholesky().ok_or(LdaError::NotPositiveDefinite)?;
    let l = chol.l();
    // M = L⁻¹ S_B L⁻ᵀ, formed with two triangular solves.
    let left = l.solve_lower_triangular(&s_b).ok_or(LdaError::NotPositiveDefinite)?;
    let mut m = l.solve_lower_triangular(&left.transpose()).ok_or(LdaError::NotPositiveDefinite)?;
    m = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(m);

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let k = (class_labels.len() - 1).min(p);
    let kept = &order[..k];
    let eigenvalues: Vec<f64> = kept.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let total: f64 = eigenvalues.iter().sum();
    if eigenvalues.iter().all(|&v| v <= RANK_EPSILON) {
        return Err(LdaError::RankCollapse);
    }

    let lt = l.transpose();
    let mut directions = Vec::with_capacity(k);
    for &i in kept {
        let v = eig.eigenvectors.column(i).into_owned();
        let mut w = lt.solve_upper_triangular(&v).ok_or(LdaError::NotPositiveDefinite)?;
        w /= w.norm();
        canonical_sign(&mut w);
        directions.push(w);
    }
    let projected_centroids = z_class_means
        .iter()
        .map(|mu| {
            let c = mu - &z_mean;
            directions.iter().map(|w| w.dot(&c)).collect()
        })
        .collect();
    let class_means = members
        .iter()
        .map(|m| (0..p).map(|c| m.iter().map(|&i| features[(i, c)]).sum::<f64>() / m.len() as f64).collect())
        .collect();

    Ok(LdaModel {
        class_labels,
        feature_names: feature_names.to_vec(),
        class_means,
        global_mean,
        scale,
        directions: directions.iter().map(|w| w.iter().copied().collect()).collect(),
        explained_variance: eigenvalues.iter().map(|v| v / total).collect(),
        eigenvalues,
        projected_centroids,
        ridge,
    })
}

impl LdaModel {
    pub fn dim(&self) -> usize {
        self.global_mean.len()
    }

    pub fn n_directions(&self) -> usize {
        self.directions.len()
    }

    /// Checks internal shape consistency, e.g. after loading from JSON.
    pub fn validate(&self) -> Result<(), LdaError> {
        let p = self.dim();
        let c = self.class_labels.len();
        let k = self.directions.len();
        let bad = |m: &str| Err(LdaError::InvalidModel(m.to_string()));
        if self.scale.len() != p || self.feature_names.len() != p {
            return bad("feature dimension disagrees across fields");
        }
        if self.class_means.len() != c || self.class_means.iter().any(|m| m.len() != p) {
            return bad("class means do not match labels/features");
        }
        if self.directions.iter().any(|d| d.len() != p) || self.explained_variance.len() != k {
            return bad("directions do not match feature dimension");
        }
        if self.projected_centroids.len() != c || self.projected_centroids.iter().any(|m| m.len() != k) {
            return bad("projected centroids do not match directions");
        }
        Ok(())
    }

    fn check_dim(&self, actual: usize) -> Result<(), LdaError> {
        if actual == self.dim() {
            Ok(())
        } else {
            Err(LdaError::DimensionMismatch { expected: self.dim(), actual })
        }
    }

    /// Standardized coordinates of one raw feature row. The standardization
    /// centers on the training mean, so the global mean maps to the origin.
    fn standardize(&self, row: impl Iterator<Item = f64>) -> Vec<f64> {
        row.zip(self.global_mean.iter().zip(&self.scale)).map(|(v, (m, s))| (v - m) * s).collect()
    }

    fn project_standardized(&self, z: &[f64]) -> Vec<f64> {
        self.directions.iter().map(|w| w.iter().zip(z).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn project_row(&self, row: &[f64]) -> Result<Vec<f64>, LdaError> {
        self.check_dim(row.len())?;
        Ok(self.project_standardized(&self.standardize(row.iter().copied())))
    }

    /// Projects each row of an M×p matrix into discriminant space (M×k).
    pub fn project(&self, features: &DMatrix<f64>) -> Result<DMatrix<f64>, LdaError> {
        self.check_dim(features.ncols())?;
        let k = self.n_directions();
        let mut out = DMatrix::zeros(features.nrows(), k);
        for (r, row) in features.row_iter().enumerate() {
            let y = self.project_standardized(&self.standardize(row.iter().copied()));
            for (c, v) in y.into_iter().enumerate() {
                out[(r, c)] = v;
            }
        }
        Ok(out)
    }

    /// Nearest projected centroid; ties go to the earlier class label.
    pub fn classify(&self, row: &[f64]) -> Result<Classification, LdaError> {
        let y = self.project_row(row)?;
        let distances: Vec<f64> = self
            .projected_centroids
            .iter()
            .map(|c| c.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
            .collect();
        let mut best = 0;
        for (i, d) in distances.iter().enumerate() {
            if *d < distances[best] {
                best = i;
            }
        }
        Ok(Classification { label: self.class_labels[best].clone(), index: best, distances, projected: y })
    }

    /// Each direction's standardized-feature weights, largest magnitude first.
    pub fn feature_contributions(&self) -> Vec<Vec<(String, f64)>> {
        self.directions
            .iter()
            .map(|w| {
                let mut pairs: Vec<(String, f64)> =
                    self.feature_names.iter().cloned().zip(w.iter().copied()).collect();
                pairs.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));
                pairs
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub label: String,
    pub index: usize,
    /// Distance to every class centroid, in class-label order.
    pub distances: Vec<f64>,
    pub projected: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LooReport {
    pub accuracy: f64,
    pub class_labels: Vec<String>,
    /// `confusion[true][predicted]` counts.
    pub confusion: Vec<Vec<usize>>,
    pub predictions: Vec<String>,
}

/// Leave-one-out nearest-centroid accuracy.
pub fn leave_one_out(
    features: &DMatrix<f64>,
    labels: &[String],
    feature_names: &[String],
    cfg: &LdaConfig,
) -> Result<LooReport, LdaError> {
    let n = features.nrows();
    if labels.len() != n {
        return Err(LdaError::LabelCount { rows: n, labels: labels.len() });
    }
    let mut class_labels = labels.to_vec();
    class_labels.sort();
    class_labels.dedup();
    let c = class_labels.len();
    let mut confusion = vec![vec![0usize; c]; c];
    let mut predictions = Vec::with_capacity(n);
    let mut correct = 0;
    for held in 0..n {
        let train = features.clone().remove_row(held);
        let train_labels: Vec<String> =
            labels.iter().enumerate().filter(|(i, _)| *i != held).map(|(_, l)| l.clone()).collect();
        let model = fit(&train, &train_labels, feature_names, cfg)?;
        let row: Vec<f64> = features.row(held).iter().copied().collect();
        let pred = model.classify(&row)?.label;
        let t = class_labels.binary_search(&labels[held]).expect("label present");
        let p = class_labels.binary_search(&pred).expect("model labels are a subset");
        confusion[t][p] += 1;
        correct += usize::from(t == p);
        predictions.push(pred);
    }
    Ok(LooReport { accuracy: correct as f64 / n.max(1) as f64, class_labels, confusion, predictions })
}

/// Coverage ellipse of a 2-D point set under a Gaussian fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConfidenceEllipse {
    pub center: [f64; 2],
    /// Semi-axis lengths, major first.
    pub axes: [f64; 2],
    /// Angle of the major axis from +x, radians in (-π/2, π/2].
    pub orientation: f64,
    pub coverage: f64,
}

/// Chi-square quantile with two degrees of freedom.
pub fn chi2_quantile_2dof(coverage: f64) -> f64 {
    -2.0 * (1.0 - coverage).ln()
}

pub fn confidence_ellipse(points: &[[f64; 2]], coverage: f64) -> Result<ConfidenceEllipse, LdaError> {
    if !(coverage > 0.0 && coverage < 1.0) {
        return Err(LdaError::InvalidCoverage(coverage));
    }
    let m = points.len();
    if m < 3 {
        return Err(LdaError::TooFewPoints(m));
    }
    let nf = m as f64;
    let cx = points.iter().map(|p| p[0]).sum::<f64>() / nf;
    let cy = points.iter().map(|p| p[1]).sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in points {
        let (dx, dy) = (p[0] - cx, p[1] - cy);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let (sxx, sxy, syy) = (sxx / (nf - 1.0), sxy / (nf - 1.0), syy / (nf - 1.0));
    let half_tr = 0.5 * (sxx + syy);
    let disc = (0.25 * (sxx - syy) * (sxx - syy) + sxy * sxy).sqrt();
    let (major, minor) = (half_tr + disc, (half_tr - disc).max(0.0));
    let q = chi2_quantile_2dof(coverage);
    let axes = [(q * major).sqrt(), (q * minor).sqrt()];
    if !(axes[1] >= 1e-9) {
        return Err(LdaError::DegenerateCovariance);
    }
    let mut orientation = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    if orientation <= -std::f64::consts::FRAC_PI_2 {
        orientation += std::f64::consts::PI;
    }
    Ok(ConfidenceEllipse { center: [cx, cy], axes, orientation, coverage })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(p: usize) -> Vec<String> {
        (0..p).map(|i| format!("f{i}")).collect()
    }

    fn labels(counts: &[(&str, usize)]) -> Vec<String> {
        counts.iter().flat_map(|(l, n)| std::iter::repeat_n(l.to_string(), *n)).collect()
    }

    /// Three separated 3-D clusters with a small deterministic wobble.
    fn three_clusters() -> (DMatrix<f64>, Vec<String>) {
        let centers = [[0.0, 0.0, 0.0], [5.0, 1.0, 0.0], [1.0, 6.0, 2.0]];
        let mut rows = Vec::new();
        for c in &centers {
            for k in 0..8 {
                let t = f64::from(k);
                rows.extend([c[0] + 0.3 * (t * 1.3).sin(), c[1] + 0.2 * (t * 2.1).cos(), c[2] + 0.25 * (t * 0.7).sin()]);
            }
        }
        (DMatrix::from_row_slice(24, 3, &rows), labels(&[("a", 8), ("b", 8), ("c", 8)]))
    }

    #[test]
    fn three_classes_keep_two_directions() {
        let (x, y) = three_clusters();
        let m = fit(&x, &y, &names(3), &LdaConfig::default()).unwrap();
        assert_eq!(m.n_directions(), 2);
        assert!((m.explained_variance.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(m.explained_variance[0] >= m.explained_variance[1]);
        for d in &m.directions {
            let norm: f64 = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-9);
        }
        m.validate().unwrap();
    }

    #[test]
    fn one_dimensional_two_classes() {
        let vals: Vec<f64> = (0..10).map(|i| if i < 5 { 0.0 } else { 10.0 } + 1e-3 * f64::from(i % 5)).collect();
        let x = DMatrix::from_column_slice(10, 1, &vals);
        let m = fit(&x, &labels(&[("lo", 5), ("hi", 5)]), &names(1), &LdaConfig::default()).unwrap();
        assert_eq!(m.explained_variance, vec![1.0]);
        assert_eq!(m.directions, vec![vec![1.0]]);
    }

    #[test]
    fn fit_errors() {
        let (x, mut y) = three_clusters();
        let cfg = LdaConfig::default();
        y[0] = "lonely".into();
        assert!(matches!(fit(&x, &y, &names(3), &cfg), Err(LdaError::DegenerateClass { .. })));
        let one = labels(&[("a", 24)]);
        assert_eq!(fit(&x, &one, &names(3), &cfg), Err(LdaError::TooFewClasses(1)));
        assert!(matches!(fit(&x, &one[..3], &names(3), &cfg), Err(LdaError::LabelCount { .. })));
        let flat = DMatrix::from_element(6, 2, 1.0);
        let err = fit(&flat, &labels(&[("a", 3), ("b", 3)]), &names(2), &cfg).unwrap_err();
        assert_eq!(err, LdaError::RankCollapse);
        let mut nan = x.clone();
        nan[(3, 1)] = f64::NAN;
        assert_eq!(fit(&nan, &labels(&[("a", 8), ("b", 8), ("c", 8)]), &names(3), &cfg), Err(LdaError::NonFinite { row: 3, col: 1 }));
    }

    #[test]
    fn global_mean_projects_to_origin_and_projection_is_affine() {
        let (x, y) = three_clusters();
        let m = fit(&x, &y, &names(3), &LdaConfig::default()).unwrap();
        for v in m.project_row(&m.global_mean).unwrap() {
            assert!(v.abs() < 1e-12);
        }
        let a = [1.0, 2.0, -3.0];
        let b = [-4.0, 0.5, 7.0];
        let alpha = 0.3;
        let mix: Vec<f64> = a.iter().zip(&b).map(|(p, q)| alpha * p + (1.0 - alpha) * q).collect();
        let (pa, pb, pm) = (m.project_row(&a).unwrap(), m.project_row(&b).unwrap(), m.project_row(&mix).unwrap());
        for i in 0..2 {
            assert!((pm[i] - (alpha * pa[i] + (1.0 - alpha) * pb[i])).abs() < 1e-12);
        }
        assert!(matches!(m.project_row(&[1.0]), Err(LdaError::DimensionMismatch { expected: 3, actual: 1 })));
    }

    #[test]
    fn centroid_classifies_as_itself() {
        let (x, y) = three_clusters();
        let m = fit(&x, &y, &names(3), &LdaConfig::default()).unwrap();
        for (i, mean) in m.class_means.iter().enumerate() {
            let c = m.classify(mean).unwrap();
            assert_eq!(c.index, i);
            assert!(c.distances[i] < 1e-12);
        }
    }

    #[test]
    fn ties_go_to_first_label() {
        let m = LdaModel {
            class_labels: vec!["a".into(), "b".into()],
            feature_names: names(1),
            class_means: vec![vec![-1.0], vec![1.0]],
            global_mean: vec![0.0],
            scale: vec![1.0],
            directions: vec![vec![1.0]],
            eigenvalues: vec![1.0],
            explained_variance: vec![1.0],
            projected_centroids: vec![vec![-1.0], vec![1.0]],
            ridge: 0.0,
        };
        assert_eq!(m.classify(&[0.0]).unwrap().label, "a");
    }

    #[test]
    fn axis_aligned_direction_contributions() {
        // Only feature 1 separates the classes; the others are shared noise.
        let mut rows = Vec::new();
        for k in 0..12 {
            let t = f64::from(k % 6);
            let class = f64::from(u8::from(k >= 6));
            rows.extend([(t * 0.9).sin(), 20.0 * class + 0.01 * (t * 1.7).cos(), (t * 0.4).cos()]);
        }
        let x = DMatrix::from_row_slice(12, 3, &rows);
        let m = fit(&x, &labels(&[("a", 6), ("b", 6)]), &names(3), &LdaConfig::default()).unwrap();
        let c = m.feature_contributions();
        assert_eq!(c[0][0].0, "f1");
        assert!((c[0][0].1 - 1.0).abs() < 1e-3);
        assert!(c[0][1].1.abs() < 1e-3);
    }

    #[test]
    fn contributions_ignore_label_names() {
        let (x, y) = three_clusters();
        let renamed: Vec<String> = y.iter().map(|l| format!("z{l}")).collect();
        let a = fit(&x, &y, &names(3), &LdaConfig::default()).unwrap();
        let b = fit(&x, &renamed, &names(3), &LdaConfig::default()).unwrap();
        assert_eq!(a.feature_contributions(), b.feature_contributions());
    }

    #[test]
    fn model_json_round_trip() {
        let (x, y) = three_clusters();
        let m = fit(&x, &y, &names(3), &LdaConfig::default()).unwrap();
        let back: LdaModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn leave_one_out_on_separated_clusters() {
        let (x, y) = three_clusters();
        let r = leave_one_out(&x, &y, &names(3), &LdaConfig::default()).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.confusion, vec![vec![8, 0, 0], vec![0, 8, 0], vec![0, 0, 8]]);
    }

    #[test]
    fn ellipse_errors() {
        assert_eq!(confidence_ellipse(&[[0.0, 0.0], [1.0, 1.0]], 0.95), Err(LdaError::TooFewPoints(2)));
        let line: Vec<[f64; 2]> = (0..10).map(|i| [f64::from(i), 2.0 * f64::from(i)]).collect();
        assert_eq!(confidence_ellipse(&line, 0.95), Err(LdaError::DegenerateCovariance));
        assert!(matches!(confidence_ellipse(&line, 1.0), Err(LdaError::InvalidCoverage(_))));
    }

    #[test]
    fn chi_square_95() {
        assert!((chi2_quantile_2dof(0.95) - 5.991464547107979).abs() < 1e-12);
    }

    #[test]
    fn ellipse_axis_aligned() {
        let pts = [[2.0, 0.0], [-2.0, 0.0], [0.0, 1.0], [0.0, -1.0]];
        let e = confidence_ellipse(&pts, 0.95).unwrap();
        assert_eq!(e.center, [0.0, 0.0]);
        assert_eq!(e.orientation, 0.0);
        let q = chi2_quantile_2dof(0.95);
        assert!((e.axes[0] - (q * 8.0 / 3.0).sqrt()).abs() < 1e-12);
        assert!((e.axes[1] - (q * 2.0 / 3.0).sqrt()).abs() < 1e-12);
    }
}
