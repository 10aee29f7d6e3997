//! The flat model at a point: the Gaussian kernel `𝒫` of the projection onto
//! the kernel of `Σ b_j b_j⁺`, and comparison of rescaled Bergman kernels with it.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use statrs::function::erf::erfc;

use crate::bergman::{bergman_kernel2, OrthonormalBasis};
use crate::error::{Error, Result};
use crate::geometry::quadrature::gauss_legendre_interval;
use crate::geometry::{curvature_eigenvalues, ChartPoint, KahlerModel, ModelKind, TwoForm};
use crate::linalg::CMatrix;

/// Model data at `x₀`: curvature eigenvalues `a_j` and the linear map taking
/// model coordinates `Z` (orthonormal for ϑ at `x₀`, diagonalizing ω) to chart
/// displacements.
#[derive(Clone, Debug)]
pub struct ModelFrame {
    pub model: KahlerModel,
    pub x0: ChartPoint,
    pub a: Vec<f64>,
    to_chart: CMatrix,
}

impl ModelFrame {
    pub fn new(model: KahlerModel, omega: &TwoForm, x0: ChartPoint) -> Result<Self> {
        model.check_point(&x0)?;
        let theta = TwoForm::reference(model);
        let a = curvature_eigenvalues(omega, &theta, &x0)?;
        let ht = theta.matrix(&x0);
        let l = ht.cholesky().ok_or_else(|| Error::NotPositive("reference form".into()))?.l();
        let linv = l.clone().try_inverse().ok_or_else(|| Error::NotPositive("reference form".into()))?;
        let m = &linv * omega.matrix(&x0) * linv.adjoint();
        let eig = crate::linalg::hermitize(&m).symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|i, j| eig.eigenvalues[*i].total_cmp(&eig.eigenvalues[*j]));
        let u = CMatrix::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
        Ok(Self { model, x0, a, to_chart: linv.adjoint() * u })
    }

    pub fn from_eigenvalues(model: KahlerModel, x0: ChartPoint, a: Vec<f64>) -> Result<Self> {
        if a.len() != model.dim() || a.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidParams("model eigenvalues must be positive, one per dimension".into()));
        }
        let ht = TwoForm::reference(model).matrix(&x0);
        let l = ht.cholesky().ok_or_else(|| Error::NotPositive("reference form".into()))?.l();
        let linv = l.try_inverse().ok_or_else(|| Error::NotPositive("reference form".into()))?;
        Ok(Self { model, x0, a, to_chart: linv.adjoint() })
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    /// `𝒫(0, 0) = Π a_j/2π`.
    pub fn leading_density(&self) -> f64 {
        self.a.iter().map(|a| a / (2.0 * PI)).product()
    }

    /// The chart point `x₀ + M Z / √A`.
    pub fn point(&self, z: &[Complex64], sqrt_a: f64) -> ChartPoint {
        let delta: Vec<Complex64> = (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.to_chart[(i, j)] * z[j]).sum::<Complex64>() / sqrt_a)
            .collect();
        self.x0.shifted(&delta)
    }

    /// Chart displacement `|M Z|` for a unit-length `Z` in the worst direction.
    fn stretch(&self) -> f64 {
        self.to_chart.norm()
    }

    /// Volume distortion `κ(x) = dv_X(x)/dv_X(x₀)` in the chart of `x₀`.
    pub fn kappa(&self, x: &ChartPoint) -> f64 {
        self.model.volume_density(x) / self.model.volume_density(&self.x0)
    }

    /// Largest chart displacement for which rescaled points stay in the chart:
    /// unbounded on the spheres, half the shortest period on a torus.
    pub fn chart_limit(&self) -> f64 {
        match self.model.kind {
            ModelKind::FlatTorus { tau } => {
                let mut shortest = f64::INFINITY;
                for m in -3i32..=3 {
                    for n in -3i32..=3 {
                        if (m, n) != (0, 0) {
                            shortest = shortest.min((Complex64::from(f64::from(m)) + tau * f64::from(n)).norm());
                        }
                    }
                }
                0.5 * shortest
            }
            _ => f64::INFINITY,
        }
    }
}

/// A kernel on `ℂⁿ × ℂⁿ` with its `∂/∂z̄_j` derivative in the first argument.
pub trait ModelKernel {
    fn value(&self, z: &[Complex64], w: &[Complex64]) -> Complex64;
    fn dzbar(&self, z: &[Complex64], w: &[Complex64], j: usize) -> Complex64;
}

fn gaussian_exponent(a: &[f64], z: &[Complex64], w: &[Complex64]) -> Complex64 {
    let mut e = Complex64::new(0.0, 0.0);
    for ((a, z), w) in a.iter().zip(z).zip(w) {
        e -= 0.25 * a * (z.norm_sqr() + w.norm_sqr() - 2.0 * z * w.conj());
    }
    e
}

impl ModelKernel for ModelFrame {
    fn value(&self, z: &[Complex64], w: &[Complex64]) -> Complex64 {
        gaussian_exponent(&self.a, z, w).exp() * self.leading_density()
    }

    fn dzbar(&self, z: &[Complex64], w: &[Complex64], j: usize) -> Complex64 {
        // ∂/∂z̄ of −¼a(z z̄ + …) is −¼a z.
        self.value(z, w) * (-0.25 * self.a[j] * z[j])
    }
}

/// `𝒫(Z, Z′) = Π(a_j/2π) exp(−¼ Σ a_j(|z_j|² + |z′_j|² − 2 z_j z̄′_j))`.
pub fn model_kernel(frame: &ModelFrame, z: &[Complex64], w: &[Complex64]) -> Complex64 {
    frame.value(z, w)
}

/// `Σ_j |b_j⁺ K(·, Z′)|(Z)` with `b_j⁺ = 2∂/∂z̄_j + ½ a_j z_j`.
pub fn kernel_residual<K: ModelKernel>(kernel: &K, a: &[f64], z: &[Complex64], w: &[Complex64]) -> f64 {
    (0..a.len())
        .map(|j| (kernel.dzbar(z, w, j) * 2.0 + kernel.value(z, w) * (0.5 * a[j] * z[j])).norm())
        .sum()
}

pub fn annihilation_residual(frame: &ModelFrame, z: &[Complex64], w: &[Complex64]) -> f64 {
    kernel_residual(frame, &frame.a, z, w)
}

/// Test points `|Z| ≤ 1`: a 5×5 grid on curves, a 3×3 grid per coordinate on surfaces.
fn defect_points(n: usize) -> Vec<Vec<Complex64>> {
    let line = |k: i32| -> Vec<Complex64> {
        let step = 1.0 / f64::from(k);
        let mut out = Vec::new();
        for i in -k..=k {
            for j in -k..=k {
                let c = Complex64::new(f64::from(i) * step, f64::from(j) * step);
                if c.norm() <= 1.0 + 1e-12 {
                    out.push(c);
                }
            }
        }
        out
    };
    if n == 1 {
        line(2).into_iter().map(|c| vec![c]).collect()
    } else {
        let base = line(1);
        let mut out = Vec::new();
        for a in &base {
            for b in &base {
                if (a.norm_sqr() + b.norm_sqr()).sqrt() <= 1.0 + 1e-12 {
                    out.push(vec![*a, *b]);
                }
            }
        }
        out
    }
}

/// Certified bound on `sup |∫ 𝒫(Z,W)𝒫(W,Z′) dW − 𝒫(Z,Z′)|` over test pairs
/// with `|Z|, |Z′| ≤ 1`: Gauss–Legendre quadrature on the box `[−R, R]^{2n}`
/// (`nodes` per real axis) plus the exact Gaussian mass outside the box.
pub fn reproducing_defect(frame: &ModelFrame, box_radius: f64, nodes: usize) -> Result<f64> {
    if !(box_radius > 0.0) || nodes == 0 {
        return Err(Error::InvalidParams("box radius and node count must be positive".into()));
    }
    let (t, w) = gauss_legendre_interval(nodes, -box_radius, box_radius);
    let points = defect_points(frame.dim());
    let pairs: Vec<(usize, usize)> = (0..points.len()).flat_map(|i| (0..points.len()).map(move |j| (i, j))).collect();
    let defects: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (z, zp) = (&points[i], &points[j]);
            let mut product = Complex64::new(1.0, 0.0);
            let mut abs_product = 1.0;
            let mut bounded = 1.0;
            for k in 0..frame.dim() {
                let a = frame.a[k];
                let c = a / (2.0 * PI);
                let mut acc = Complex64::new(0.0, 0.0);
                for (x, wx) in t.iter().zip(&w) {
                    for (y, wy) in t.iter().zip(&w) {
                        let u = Complex64::new(*x, *y);
                        let e = gaussian_exponent(&[a], &[z[k]], &[u]) + gaussian_exponent(&[a], &[u], &[zp[k]]);
                        acc += e.exp() * (wx * wy);
                    }
                }
                let value = acc * (c * c);
                // |integrand| = c² e^{−(a/8)|z−z′|²} e^{−(a/2)|u−m|²}, m the midpoint.
                let mid = (z[k] + zp[k]) * 0.5;
                let s = (0.5 * a).sqrt();
                let inside = |m: f64| 1.0 - 0.5 * erfc(s * (box_radius - m)) - 0.5 * erfc(s * (box_radius + m));
                let total = 2.0 * PI / a;
                let tail = c * c * (-(a / 8.0) * (z[k] - zp[k]).norm_sqr()).exp() * total * (1.0 - inside(mid.re) * inside(mid.im));
                product *= value;
                abs_product *= value.norm();
                bounded *= value.norm() + tail;
            }
            let exact = model_kernel(frame, z, zp);
            (product - exact).norm() + (bounded - abs_product)
        })
        .collect();
    Ok(defects.into_iter().fold(0.0, f64::max))
}

/// Grid of model points with `|Z| ≤ q`: 9×9 on curves, 5×5 per coordinate on surfaces.
fn window_points(n: usize, q: f64) -> Vec<Vec<Complex64>> {
    let axis = |k: i32| -> Vec<Complex64> {
        let mut out = Vec::new();
        for i in -k..=k {
            for j in -k..=k {
                out.push(Complex64::new(f64::from(i), f64::from(j)) * (q / f64::from(k)));
            }
        }
        out
    };
    let inside = |z: &Vec<Complex64>| z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt() <= q * (1.0 + 1e-12);
    if n == 1 {
        axis(4).into_iter().map(|c| vec![c]).filter(inside).collect()
    } else {
        let base = axis(2);
        base.iter().flat_map(|a| base.iter().map(move |b| vec![*a, *b])).filter(inside).collect()
    }
}

/// `sup |A^{−n} |P_p(x, y)| κ(x)^{1/2} κ(y)^{1/2} − |𝒫(Z, Z′)||` over the
/// window grid, with `x = x₀ + M Z/√A` and `y = x₀ + M Z′/√A`.
pub fn rescaled_comparison(onb: &OrthonormalBasis, frame: &ModelFrame, a_p: f64, q: f64) -> Result<f64> {
    let sqrt_a = a_p.sqrt();
    let displacement = q * frame.stretch() / sqrt_a;
    let limit = frame.chart_limit();
    if displacement >= limit {
        return Err(Error::WindowTooLarge { displacement, limit });
    }
    let points = window_points(frame.dim(), q);
    let chart: Vec<ChartPoint> = points.iter().map(|z| frame.point(z, sqrt_a)).collect();
    let kappa: Vec<f64> = chart.iter().map(|x| frame.kappa(x).sqrt()).collect();
    let norm = a_p.powi(frame.dim() as i32);
    let defects: Vec<f64> = (0..points.len())
        .into_par_iter()
        .map(|i| {
            (0..points.len())
                .map(|j| {
                    let scaled = bergman_kernel2(onb, &chart[i], &chart[j]) / norm * kappa[i] * kappa[j];
                    (scaled - model_kernel(frame, &points[i], &points[j]).norm()).abs()
                })
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(defects.into_iter().fold(0.0, f64::max))
}
