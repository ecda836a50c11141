//! Least-squares fit of a single-harmonic fringe `c0 + c1·sin φ + c2·cos φ`.

use std::f64::consts::TAU;

use nalgebra::{Matrix3, Vector3};

use super::scan::{PhaseScanRecord, Samples};
use crate::error::{Error, Result};

/// Two phases closer than this (mod 2π) count as the same point.
const DISTINCT_PHASE_TOL: f64 = 1e-12;

/// Fitted fringe coefficients with their covariance (zero for exact data).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeFit {
    pub coefficients: [f64; 3],
    pub covariance: [[f64; 3]; 3],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremaStderr {
    pub p_plus: f64,
    pub p_minus: f64,
    pub visibility: f64,
}

/// Sum (`p_plus`) and difference (`p_minus`) of a fringe's extrema.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremaEstimate {
    pub p_plus: f64,
    pub p_minus: f64,
    pub visibility: f64,
    pub stderr: Option<ExtremaStderr>,
    pub fit: FringeFit,
}

impl ExtremaEstimate {
    /// Extrema of the fringe with the given fit coefficients.
    pub fn from_coefficients(c: [f64; 3]) -> Self {
        let p_plus = 2.0 * c[0];
        let p_minus = 2.0 * c[1].hypot(c[2]);
        Self {
            p_plus,
            p_minus,
            visibility: visibility(p_plus, p_minus),
            stderr: None,
            fit: FringeFit {
                coefficients: c,
                covariance: [[0.0; 3]; 3],
            },
        }
    }

    /// Extrema from known values, e.g. a hand-computed example.
    pub fn from_extrema(p_plus: f64, p_minus: f64) -> Self {
        Self::from_coefficients([p_plus / 2.0, p_minus / 2.0, 0.0])
    }

    /// Mean level of the fringe: the detection probability averaged over φ_in.
    pub fn mean(&self) -> f64 {
        self.fit.coefficients[0]
    }
}

fn visibility(p_plus: f64, p_minus: f64) -> f64 {
    if p_plus > 0.0 {
        p_minus / p_plus
    } else {
        0.0
    }
}

fn distinct_phases(phases: &[f64]) -> usize {
    let mut wrapped: Vec<f64> = phases.iter().map(|p| p.rem_euclid(TAU)).collect();
    wrapped.sort_by(f64::total_cmp);
    let mut count = 0;
    let mut last: Option<f64> = None;
    for &p in &wrapped {
        if last.is_none_or(|l| p - l > DISTINCT_PHASE_TOL) {
            count += 1;
            last = Some(p);
        }
    }
    // 0 and 2π - ε are the same point on the circle.
    if count > 1 && wrapped[0] + TAU - wrapped[wrapped.len() - 1] <= DISTINCT_PHASE_TOL {
        count -= 1;
    }
    count
}

/// Ordinary least squares; with sampled data the coefficient covariance is
/// the sandwich estimate under independent Poisson noise per point.
pub fn fit_fringe(scan: &PhaseScanRecord) -> Result<ExtremaEstimate> {
    let samples = scan.samples();
    let phases = samples.phases();
    let distinct = distinct_phases(&phases);
    if distinct < 3 {
        return Err(Error::UnderdeterminedFit { distinct });
    }
    let (ys, vars): (Vec<f64>, Vec<f64>) = match samples {
        Samples::Exact(v) => v.iter().map(|&(_, p)| (p, 0.0)).unzip(),
        Samples::Sampled(v) => v
            .iter()
            .map(|&(_, k, n)| {
                let n = n as f64;
                (k as f64 / n, k as f64 / (n * n))
            })
            .unzip(),
    };
    let rows: Vec<Vector3<f64>> = phases
        .iter()
        .map(|&phi| Vector3::new(1.0, phi.sin(), phi.cos()))
        .collect();
    let mut gram = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    let mut meat = Matrix3::zeros();
    for ((x, &y), &var) in rows.iter().zip(&ys).zip(&vars) {
        let outer = x * x.transpose();
        gram += outer;
        rhs += x * y;
        meat += outer * var;
    }
    let inv = gram
        .try_inverse()
        .ok_or(Error::UnderdeterminedFit { distinct })?;
    let beta = inv * rhs;
    let cov = inv * meat * inv;
    let c = [beta[0], beta[1], beta[2]];
    let mut est = ExtremaEstimate::from_coefficients(c);
    let mut covariance = [[0.0; 3]; 3];
    for (i, row) in covariance.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = cov[(i, j)];
        }
    }
    est.fit.covariance = covariance;
    if scan.is_sampled() {
        est.stderr = Some(extrema_stderr(&est, &cov));
    }
    Ok(est)
}

/// First-order propagation of the coefficient covariance to the extrema.
fn extrema_stderr(est: &ExtremaEstimate, cov: &Matrix3<f64>) -> ExtremaStderr {
    let [c0, c1, c2] = est.fit.coefficients;
    let r = c1.hypot(c2);
    let var_plus = 4.0 * cov[(0, 0)];
    let var_minus = if r > 0.0 {
        let g = Vector3::new(0.0, 2.0 * c1 / r, 2.0 * c2 / r);
        (g.transpose() * cov * g)[0]
    } else {
        2.0 * (cov[(1, 1)] + cov[(2, 2)])
    };
    let var_vis = if c0 > 0.0 {
        // V = r / c0
        let g = if r > 0.0 {
            Vector3::new(-r / (c0 * c0), c1 / (r * c0), c2 / (r * c0))
        } else {
            Vector3::new(0.0, 1.0 / c0, 0.0)
        };
        (g.transpose() * cov * g)[0]
    } else {
        0.0
    };
    ExtremaStderr {
        p_plus: var_plus.max(0.0).sqrt(),
        p_minus: var_minus.max(0.0).sqrt(),
        visibility: var_vis.max(0.0).sqrt(),
    }
}
