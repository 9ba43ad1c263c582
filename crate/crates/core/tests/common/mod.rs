//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use motif::affordance::{AffordanceMap, GraspCandidate};
use motif::features::FlickTrace;
use nalgebra::{DMatrix, DVector};

pub fn feature_names_oracle() -> Vec<String> {
    let sensors = ["ACC", "GYRO", "MAG"];
    let mut names = Vec::new();
    for s in sensors {
        for a in ["X", "Y", "Z"] {
            for stat in ["Min", "Max", "Mean", "Std"] {
                names.push(format!("{s}_{a}_{stat}"));
            }
        }
    }
    for s in sensors {
        names.push(format!("{s}_Range"));
        names.push(format!("{s}_MagMean"));
    }
    names
}

/// Brute-force statistics: sorting for extrema, compensated sums for moments.
pub fn features_oracle(trace: &FlickTrace) -> Vec<f64> {
    let n = trace.samples.len() as f64;
    let column = |sensor: usize, axis: usize| -> Vec<f64> {
        trace
            .samples
            .iter()
            .map(|s| match sensor {
                0 => s.acc[axis],
                1 => s.gyro[axis],
                _ => s.mag[axis],
            })
            .collect()
    };
    let mut per_axis = Vec::new();
    let mut tail = Vec::new();
    for sensor in 0..3 {
        let mut ranges = Vec::new();
        for axis in 0..3 {
            let mut v = column(sensor, axis);
            let mean = kahan(&v) / n;
            let var = kahan(&v.iter().map(|x| (x - mean).powi(2)).collect::<Vec<_>>()) / n;
            v.sort_by(f64::total_cmp);
            let (lo, hi) = (v[0], v[v.len() - 1]);
            per_axis.extend([lo, hi, mean, var.sqrt()]);
            ranges.push(hi - lo);
        }
        let norms: Vec<f64> = (0..trace.samples.len())
            .map(|k| {
                let (a, b, c) = (column(sensor, 0)[k], column(sensor, 1)[k], column(sensor, 2)[k]);
                a.hypot(b).hypot(c)
            })
            .collect();
        tail.push(ranges.iter().cloned().fold(f64::MIN, f64::max));
        tail.push(kahan(&norms) / n);
    }
    per_axis.extend(tail);
    per_axis
}

fn kahan(v: &[f64]) -> f64 {
    let (mut sum, mut c) = (0.0, 0.0);
    for &x in v {
        let y = x - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

/// Dense reference LDA in standardized coordinates: forms the regularized
/// `S_W^-1 S_B` explicitly and solves the nonsymmetric eigenproblem.
pub struct LdaOracle {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// Unit eigenvectors matching `eigenvalues`.
    pub directions: Vec<DVector<f64>>,
}

pub fn lda_oracle(x: &DMatrix<f64>, labels: &[String], keep: usize) -> LdaOracle {
    let (n, p) = x.shape();
    let mut z = x.clone();
    for c in 0..p {
        let col = x.column(c);
        let mean = col.sum() / n as f64;
        let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        for r in 0..n {
            z[(r, c)] = if sd > 0.0 { (x[(r, c)] - mean) / sd } else { 0.0 };
        }
    }
    let mut classes: Vec<&String> = labels.iter().collect();
    classes.sort();
    classes.dedup();
    let grand = DVector::from_fn(p, |c, _| z.column(c).mean());
    let mut sw = DMatrix::zeros(p, p);
    let mut sb = DMatrix::zeros(p, p);
    for class in classes {
        let rows: Vec<usize> = (0..n).filter(|&r| &labels[r] == class).collect();
        let mu = DVector::from_fn(p, |c, _| rows.iter().map(|&r| z[(r, c)]).sum::<f64>() / rows.len() as f64);
        for &r in &rows {
            let d = z.row(r).transpose() - &mu;
            sw += &d * d.transpose();
        }
        let d = &mu - &grand;
        sb += (&d * d.transpose()) * rows.len() as f64;
    }
    let trace = sw.trace();
    let ridge = if trace > 0.0 { 1e-6 * trace / p as f64 } else { 1e-6 };
    let a = (sw + DMatrix::identity(p, p) * ridge).try_inverse().expect("regularized S_W invertible") * sb;

    let mut eig: Vec<f64> = a.complex_eigenvalues().iter().map(|c| c.re).collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    eig.truncate(keep);
    let directions = eig
        .iter()
        .map(|&lambda| {
            let shifted = &a - DMatrix::identity(p, p) * lambda;
            let svd = shifted.svd(false, true);
            let vt = svd.v_t.unwrap();
            let smallest = (0..p).min_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j])).unwrap();
            let v: DVector<f64> = vt.row(smallest).transpose();
            v.normalize()
        })
        .collect();
    LdaOracle { eigenvalues: eig, directions }
}

/// All-pairs grasp filter: kept indices and, per rejected candidate, the
/// first (contact, hot point) pair attaining the minimum distance.
pub fn filter_oracle(
    candidates: &[GraspCandidate],
    map: &AffordanceMap,
    radius: f64,
) -> (Vec<usize>, Vec<(usize, usize, usize, f64)>) {
    let mut kept = Vec::new();
    let mut rejected = Vec::new();
    for (ci, cand) in candidates.iter().enumerate() {
        let mut best: Option<(usize, usize, f64)> = None;
        for (k, c) in cand.contacts.iter().enumerate() {
            for &h in &map.hot_indices {
                let d = (map.cloud.points[h].position - c).norm();
                if d <= radius && best.is_none_or(|(_, _, bd)| d < bd) {
                    best = Some((k, h, d));
                }
            }
        }
        match best {
            Some((k, h, d)) => rejected.push((ci, k, h, d)),
            None => kept.push(ci),
        }
    }
    (kept, rejected)
}
