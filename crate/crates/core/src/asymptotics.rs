//! Fits of the Bergman density expansion and of convergence rates.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ChartPoint, TwoForm};
use crate::linalg::hermitian_det;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionSample {
    pub p: u64,
    pub a_p: f64,
    /// `P_p(x₀)`.
    pub value: f64,
}

/// Least-squares fit of `P_p / A_pⁿ ≈ Σ_r b̂_r A_p^{−r}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionFit {
    pub point: ChartPoint,
    pub dim: usize,
    pub samples: Vec<ExpansionSample>,
    pub coefficients: Vec<f64>,
    /// Euclidean norm of the residual of `P_p / A_pⁿ`.
    pub residual: f64,
    /// `(b₀, b₁)` predicted from the geometry, when supplied.
    pub predicted: Option<(f64, f64)>,
}

impl ExpansionFit {
    pub fn with_prediction(mut self, b: (f64, f64)) -> Self {
        self.predicted = Some(b);
        self
    }

    /// `(P_p/A_pⁿ − b̂₀)·A_p` at the largest `p`, which should approach `b̂₁`.
    pub fn consistency(&self) -> Option<f64> {
        let last = self.samples.last()?;
        let lead = last.value / last.a_p.powi(self.dim as i32);
        Some((lead - self.coefficients[0]) * last.a_p)
    }
}

/// Number of expansion terms retained for approximation exponent `a`: `⌈a⌉ − 1`.
pub fn expansion_order(a: f64) -> usize {
    ((-(-a).floor()) - 1.0).max(0.0) as usize
}

/// Fits `k + 1` coefficients by normal equations on unit-norm columns.
pub fn fit_expansion(point: ChartPoint, dim: usize, samples: &[ExpansionSample], k: usize) -> Result<ExpansionFit> {
    let mut samples = samples.to_vec();
    samples.sort_by(|a, b| a.a_p.total_cmp(&b.a_p).then(a.p.cmp(&b.p)));
    let mut distinct = samples.iter().map(|s| s.a_p).collect::<Vec<_>>();
    distinct.dedup();
    if distinct.len() < k + 2 || distinct.len() != samples.len() {
        return Err(Error::RankDeficient);
    }
    if samples.iter().any(|s| !(s.a_p > 0.0) || !s.value.is_finite()) {
        return Err(Error::InvalidParams("A_p must be positive and P_p finite".into()));
    }
    let rows = samples.len();
    let y = DVector::from_iterator(rows, samples.iter().map(|s| s.value / s.a_p.powi(dim as i32)));
    let mut x = DMatrix::from_fn(rows, k + 1, |i, r| samples[i].a_p.powi(-(r as i32)));
    let scales: Vec<f64> = (0..=k).map(|r| x.column(r).norm()).collect();
    for (r, s) in scales.iter().enumerate() {
        x.column_mut(r).scale_mut(1.0 / s);
    }
    let normal = x.transpose() * &x;
    let rhs = x.transpose() * &y;
    let chol = normal.clone().cholesky().ok_or(Error::RankDeficient)?;
    let l = chol.l();
    let diag_min = (0..=k).map(|i| l[(i, i)].abs()).fold(f64::INFINITY, f64::min);
    if diag_min < 1e-7 {
        return Err(Error::RankDeficient);
    }
    let scaled = chol.solve(&rhs);
    let residual = (&y - &x * &scaled).norm();
    let coefficients = scaled.iter().zip(&scales).map(|(c, s)| c / s).collect();
    Ok(ExpansionFit { point, dim, samples, coefficients, residual, predicted: None })
}

/// `b₀ = ωⁿ/ϑⁿ` and `b₁ = b₀ r_ω / (8π)` at `x0`.
pub fn predicted_coefficients(omega: &TwoForm, x0: &ChartPoint) -> Result<(f64, f64)> {
    let model = omega.model;
    model.check_point(x0)?;
    let h = omega.matrix(x0);
    let b0 = hermitian_det(&h) / hermitian_det(&model.reference_matrix(x0));
    if !(b0 > 0.0) {
        return Err(Error::NotPositive(format!("ω at {x0:?}")));
    }
    let r = omega.scalar_curvature(x0);
    Ok((b0, b0 * r / (8.0 * PI)))
}

/// `|value| ≈ C₁ log A / A + C₂ A^{−â}` with `C₁, C₂ ≥ 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// Input sorted by `A`.
    pub points: Vec<(f64, f64)>,
    pub c1: f64,
    pub c2: f64,
    pub a_hat: f64,
    pub r_squared: f64,
    /// All values below `10⁻¹²`; no fit attempted.
    pub exact: bool,
    /// Both terms contribute within a factor 3 of each other, so `â` is
    /// weakly identified; consult `profile`.
    pub ambiguous: bool,
    /// Sum of squared residuals over a grid of `â`.
    pub profile: Vec<(f64, f64)>,
}

pub const RATE_MIN: f64 = 0.05;
pub const RATE_MAX: f64 = 3.0;
const PROFILE_STEP: f64 = 0.01;

/// Nonnegative least squares in two columns: the unconstrained solution if
/// feasible, else the best single-column or empty fit.
fn nnls2(a: &[f64], b: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(x, y)| x * y).sum::<f64>();
    let loss = |c1: f64, c2: f64| y.iter().zip(a).zip(b).map(|((v, x), z)| (v - c1 * x - c2 * z).powi(2)).sum::<f64>();
    let (aa, bb, ab, ay, by) = (dot(a, a), dot(b, b), dot(a, b), dot(a, y), dot(b, y));
    let det = aa * bb - ab * ab;
    let mut best = (0.0, 0.0, loss(0.0, 0.0));
    if det > 1e-14 * aa * bb {
        let c1 = (bb * ay - ab * by) / det;
        let c2 = (aa * by - ab * ay) / det;
        if c1 >= 0.0 && c2 >= 0.0 {
            return (c1, c2, loss(c1, c2));
        }
    }
    for (c1, c2) in [((ay / aa).max(0.0), 0.0), (0.0, (by / bb).max(0.0))] {
        let l = loss(c1, c2);
        if l < best.2 {
            best = (c1, c2, l);
        }
    }
    best
}

pub fn fit_rate(records: &[(f64, f64)]) -> Result<RateFit> {
    let mut points = records.to_vec();
    if points.iter().any(|(a, v)| !(*a > 1.0) || !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidParams("rate data needs A > 1 and finite nonnegative values".into()));
    }
    points.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    let mut distinct: Vec<f64> = points.iter().map(|p| p.0).collect();
    distinct.dedup();
    if distinct.len() < 4 {
        return Err(Error::InsufficientData(format!("{} distinct A values, need 4", distinct.len())));
    }
    if points.iter().all(|(_, v)| *v < 1e-12) {
        return Ok(RateFit {
            points,
            c1: 0.0,
            c2: 0.0,
            a_hat: f64::NAN,
            r_squared: 1.0,
            exact: true,
            ambiguous: false,
            profile: Vec::new(),
        });
    }
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    let log_col: Vec<f64> = points.iter().map(|(a, _)| a.ln() / a).collect();
    let solve = |rate: f64| {
        let pow_col: Vec<f64> = points.iter().map(|(a, _)| a.powf(-rate)).collect();
        nnls2(&log_col, &pow_col, &y)
    };

    let steps = ((RATE_MAX - RATE_MIN) / PROFILE_STEP).round() as usize;
    let grid: Vec<f64> = (0..=steps).map(|i| RATE_MIN + i as f64 * PROFILE_STEP).collect();
    let profile: Vec<(f64, f64)> = grid.iter().map(|r| (*r, solve(*r).2)).collect();

    let mut best = (f64::NAN, f64::INFINITY);
    for start in [0.25, 0.5, 1.0, 2.0] {
        // Descend on the profile grid, then refine by golden section.
        let mut i = ((start - RATE_MIN) / PROFILE_STEP).round() as usize;
        loop {
            let here = profile[i].1;
            if i > 0 && profile[i - 1].1 < here {
                i -= 1;
            } else if i + 1 < profile.len() && profile[i + 1].1 < here {
                i += 1;
            } else {
                break;
            }
        }
        let (mut lo, mut hi) = (grid[i.saturating_sub(1)], grid[(i + 1).min(grid.len() - 1)]);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..60 {
            let m1 = hi - g * (hi - lo);
            let m2 = lo + g * (hi - lo);
            if solve(m1).2 <= solve(m2).2 {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        let rate = 0.5 * (lo + hi);
        let loss = solve(rate).2;
        let candidate = if loss <= profile[i].1 { (rate, loss) } else { profile[i] };
        if candidate.1 < best.1 {
            best = candidate;
        }
    }
    let (a_hat, loss) = best;
    let (c1, c2, _) = solve(a_hat);
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let total = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    let r_squared = if total > 0.0 { 1.0 - loss / total } else { 1.0 };
    let mid = distinct[distinct.len() / 2];
    let t1 = c1 * mid.ln() / mid;
    let t2 = c2 * mid.powf(-a_hat);
    let ambiguous = t1 > 0.0 && t2 > 0.0 && t1.max(t2) <= 3.0 * t1.min(t2);
    Ok(RateFit { points, c1, c2, a_hat, r_squared, exact: false, ambiguous, profile })
}

/// `|value| ≈ C₁ log A / A + C₂ A^{−a}` with the exponent held at `a`.
pub fn fit_rate_with_exponent(records: &[(f64, f64)], a: f64) -> Result<RateFit> {
    if !(a > 0.0) {
        return Err(Error::InvalidParams(format!("rate exponent must be positive, got {a}")));
    }
    let mut points = records.to_vec();
    if points.iter().any(|(x, v)| !(*x > 1.0) || !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidParams("rate data needs A > 1 and finite nonnegative values".into()));
    }
    points.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    let log_col: Vec<f64> = points.iter().map(|(x, _)| x.ln() / x).collect();
    let pow_col: Vec<f64> = points.iter().map(|(x, _)| x.powf(-a)).collect();
    let (c1, c2, loss) = nnls2(&log_col, &pow_col, &y);
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let total = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    let r_squared = if total > 0.0 { 1.0 - loss / total } else { 1.0 };
    let exact = y.iter().all(|v| *v < 1e-12);
    Ok(RateFit { points, c1, c2, a_hat: a, r_squared, exact, ambiguous: false, profile: vec![(a, loss)] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::KahlerModel;
    use num_complex::Complex64;

    fn samples(f: impl Fn(f64) -> f64, ps: &[u64]) -> Vec<ExpansionSample> {
        ps.iter().map(|&p| ExpansionSample { p, a_p: p as f64, value: f(p as f64) }).collect()
    }

    #[test]
    fn exact_expansions() {
        let x = ChartPoint::origin(1);
        let fit = fit_expansion(x, 1, &samples(|p| p + 1.0, &[10, 20, 40]), 1).unwrap();
        assert!((fit.coefficients[0] - 1.0).abs() < 1e-12 && (fit.coefficients[1] - 1.0).abs() < 1e-10);
        assert!(fit.residual < 1e-13);
        let fit = fit_expansion(x, 1, &samples(|p| 3.0 * p, &[10, 20, 40]), 0).unwrap();
        assert!((fit.coefficients[0] - 3.0).abs() < 1e-13 && fit.residual < 1e-13);
        let fit = fit_expansion(x, 1, &samples(|p| 2.0 * p - 0.5 + 4.0 / p, &[8, 16, 32, 64, 128]), 2).unwrap();
        for (c, e) in fit.coefficients.iter().zip([2.0, -0.5, 4.0]) {
            assert!((c - e).abs() < 1e-8, "{c} vs {e}");
        }
        assert_eq!(fit_expansion(x, 1, &samples(|p| p, &[10, 20]), 1).unwrap_err(), Error::RankDeficient);
    }

    #[test]
    fn predicted_coefficients_examples() {
        let line = KahlerModel::projective_line();
        let x = ChartPoint::line(0, Complex64::new(0.3, -0.2));
        let (b0, b1) = predicted_coefficients(&TwoForm::reference(line), &x).unwrap();
        assert!((b0 - 1.0).abs() < 1e-12 && (b1 - 1.0).abs() < 1e-12);
        let (b0, b1) = predicted_coefficients(&TwoForm::reference(line).scaled(2.0), &x).unwrap();
        assert!((b0 - 2.0).abs() < 1e-12 && (b1 - 1.0).abs() < 1e-12);
        let torus = KahlerModel::flat_torus(Complex64::new(0.2, 1.1)).unwrap();
        let (b0, b1) = predicted_coefficients(&TwoForm::reference(torus), &ChartPoint::origin(1)).unwrap();
        assert!((b0 - 1.0).abs() < 1e-12 && b1.abs() < 1e-12);
    }

    #[test]
    fn rate_fits_on_synthetic_data() {
        let a = [25.0, 50.0, 100.0, 200.0, 400.0];
        let fit = fit_rate(&a.map(|a: f64| (a, a.ln() / a))).unwrap();
        assert!(fit.r_squared > 0.999 && fit.c2 < 1e-6 * fit.c1, "{fit:?}");
        let fit = fit_rate(&a.map(|a: f64| (a, a.powf(-0.5)))).unwrap();
        assert!((fit.a_hat - 0.5).abs() < 0.03, "{}", fit.a_hat);
        let fit = fit_rate(&a.map(|a| (a, 0.0))).unwrap();
        assert!(fit.exact);
        assert!(matches!(fit_rate(&a[..3].iter().map(|a| (*a, 1.0)).collect::<Vec<_>>()), Err(Error::InsufficientData(_))));
    }
}
