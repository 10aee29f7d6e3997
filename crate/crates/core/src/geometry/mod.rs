//! Model Kähler manifolds (the projective line, a product of two projective
//! lines and flat tori) with their reference forms, quadrature and curvature.
//!
//! A (1,1)-form is represented by its coefficient matrix `H` against chart
//! Lebesgue measure: `ω = (i/2) Σ H_jk dz_j ∧ dz̄_k`, so on a curve `ω = H dA`
//! and `ωⁿ/n! = det H · dA` in general.

pub mod quadrature;
pub mod sphere;

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bundles::Psi;
use crate::error::{Error, Result};
use crate::linalg::{relative_eigenvalues, CMatrix};
pub use quadrature::{QuadratureRule, RuleLayout};

/// A point of a model given in one of its charts.
///
/// Projective line: chart 0 is `z`, chart 1 is `w = 1/z`. Product: chart id
/// `c1 | (c2 << 1)` with `c_i` the chart of factor `i`. Torus: chart 0, the
/// coordinate `z` on the universal cover.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub chart: u8,
    dim: u8,
    coords: [Complex64; 2],
}

impl ChartPoint {
    pub fn new(chart: u8, coords: &[Complex64]) -> Self {
        assert!(matches!(coords.len(), 1 | 2), "chart points have one or two coordinates");
        let mut c = [Complex64::new(0.0, 0.0); 2];
        c[..coords.len()].copy_from_slice(coords);
        Self { chart, dim: coords.len() as u8, coords: c }
    }

    pub fn line(chart: u8, z: Complex64) -> Self {
        Self::new(chart, &[z])
    }

    pub fn product(chart: u8, z: Complex64, w: Complex64) -> Self {
        Self::new(chart, &[z, w])
    }

    pub fn origin(dim: usize) -> Self {
        Self::new(0, &[Complex64::new(0.0, 0.0); 2][..dim])
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.coords[..self.dim as usize]
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    /// Chart and coordinate of factor `i` of a product point (or of a curve point).
    pub fn factor(&self, i: usize) -> (u8, Complex64) {
        ((self.chart >> i) & 1, self.coords[i])
    }

    /// Same chart, coordinates shifted by `delta`.
    pub fn shifted(&self, delta: &[Complex64]) -> Self {
        let mut out = *self;
        for (c, d) in out.coords.iter_mut().zip(delta) {
            *c += d;
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelKind {
    ProjectiveLine,
    ProjectiveProduct,
    FlatTorus { tau: Complex64 },
}

/// A model manifold with its unit-volume reference Kähler form ϑ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KahlerModel {
    pub kind: ModelKind,
}

pub fn make_model(kind: ModelKind) -> Result<KahlerModel> {
    if let ModelKind::FlatTorus { tau } = kind {
        if !(tau.im > 0.0) || !tau.re.is_finite() {
            return Err(Error::InvalidParams(format!("torus modulus must have Im τ > 0, got {tau}")));
        }
    }
    Ok(KahlerModel { kind })
}

impl KahlerModel {
    pub fn projective_line() -> Self {
        Self { kind: ModelKind::ProjectiveLine }
    }

    pub fn projective_product() -> Self {
        Self { kind: ModelKind::ProjectiveProduct }
    }

    pub fn flat_torus(tau: Complex64) -> Result<Self> {
        make_model(ModelKind::FlatTorus { tau })
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            ModelKind::ProjectiveProduct => 2,
            _ => 1,
        }
    }

    pub fn chart_count(&self) -> u8 {
        match self.kind {
            ModelKind::ProjectiveLine => 2,
            ModelKind::ProjectiveProduct => 4,
            ModelKind::FlatTorus { .. } => 1,
        }
    }

    pub fn tau(&self) -> Option<Complex64> {
        match self.kind {
            ModelKind::FlatTorus { tau } => Some(tau),
            _ => None,
        }
    }

    pub fn check_point(&self, x: &ChartPoint) -> Result<()> {
        if x.dim() != self.dim() || x.chart >= self.chart_count() {
            return Err(Error::InvalidParams(format!("point {x:?} does not belong to {:?}", self.kind)));
        }
        Ok(())
    }

    /// Expresses `x` in `chart`, or `None` if `x` lies outside that chart.
    pub fn to_chart(&self, x: &ChartPoint, chart: u8) -> Option<ChartPoint> {
        match self.kind {
            ModelKind::FlatTorus { .. } => Some(*x),
            _ => {
                let mut coords = [Complex64::new(0.0, 0.0); 2];
                for (i, c) in coords.iter_mut().enumerate().take(self.dim()) {
                    let (from, v) = x.factor(i);
                    let to = (chart >> i) & 1;
                    *c = if from == to {
                        v
                    } else if v.norm_sqr() == 0.0 {
                        return None;
                    } else {
                        v.inv()
                    };
                }
                Some(ChartPoint::new(chart, &coords[..self.dim()]))
            }
        }
    }

    /// The representative with every spherical coordinate of modulus at most
    /// one; torus points are reduced to the fundamental parallelogram.
    pub fn canonical(&self, x: &ChartPoint) -> ChartPoint {
        match self.kind {
            ModelKind::FlatTorus { tau } => {
                let (u, v) = lattice_coords(tau, x.coords[0]);
                ChartPoint::line(0, Complex64::new(u.rem_euclid(1.0), 0.0) + tau * v.rem_euclid(1.0))
            }
            _ => {
                let mut chart = 0u8;
                let mut coords = [Complex64::new(0.0, 0.0); 2];
                for (i, c) in coords.iter_mut().enumerate().take(self.dim()) {
                    let (from, v) = x.factor(i);
                    if v.norm_sqr() > 1.0 {
                        *c = v.inv();
                        chart |= (1 - from) << i;
                    } else {
                        *c = v;
                        chart |= from << i;
                    }
                }
                ChartPoint::new(chart, &coords[..self.dim()])
            }
        }
    }

    /// Coefficient matrix of the reference form ϑ at `x`.
    pub fn reference_matrix(&self, x: &ChartPoint) -> CMatrix {
        match self.kind {
            ModelKind::ProjectiveLine => CMatrix::from_element(1, 1, sphere::fs_density(x.coords[0]).into()),
            ModelKind::ProjectiveProduct => CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
                sphere::fs_density(x.coords[0]).into(),
                sphere::fs_density(x.coords[1]).into(),
            ])),
            ModelKind::FlatTorus { tau } => CMatrix::from_element(1, 1, (1.0 / tau.im).into()),
        }
    }

    /// Density of `dv_X = ϑⁿ/n!` against chart Lebesgue measure.
    pub fn volume_density(&self, x: &ChartPoint) -> f64 {
        match self.kind {
            ModelKind::ProjectiveLine => sphere::fs_density(x.coords[0]),
            ModelKind::ProjectiveProduct => sphere::fs_density(x.coords[0]) * sphere::fs_density(x.coords[1]),
            ModelKind::FlatTorus { tau } => 1.0 / tau.im,
        }
    }

    /// Scalar curvature of the reference metric (constant on every model).
    pub fn scalar_curvature(&self, _x: &ChartPoint) -> f64 {
        match self.kind {
            ModelKind::ProjectiveLine => 8.0 * PI,
            ModelKind::ProjectiveProduct => 16.0 * PI,
            ModelKind::FlatTorus { .. } => 0.0,
        }
    }

    /// Scalar curvature of a single reference factor.
    fn factor_curvature(&self) -> f64 {
        match self.kind {
            ModelKind::FlatTorus { .. } => 0.0,
            _ => 8.0 * PI,
        }
    }
}

/// Real coordinates `(u, v)` with `z = u + vτ`.
pub fn lattice_coords(tau: Complex64, z: Complex64) -> (f64, f64) {
    let v = z.im / tau.im;
    (z.re - v * tau.re, v)
}

pub fn volume_density(model: &KahlerModel, x: &ChartPoint) -> f64 {
    model.volume_density(x)
}

pub fn scalar_curvature(model: &KahlerModel, x: &ChartPoint) -> f64 {
    model.scalar_curvature(x)
}

/// `Σ w_i f(x_i)`; nodes are evaluated in parallel and summed in a fixed
/// pairwise tree, so the result does not depend on the thread count.
pub fn integrate<F>(_model: &KahlerModel, integrand: F, rule: &QuadratureRule) -> Result<Complex64>
where
    F: Fn(&ChartPoint) -> Complex64 + Sync,
{
    let terms: Vec<Complex64> = rule
        .nodes
        .par_iter()
        .zip(rule.weights.par_iter())
        .map(|(x, w)| integrand(x) * *w)
        .collect();
    if let Some(node) = terms.iter().position(|t| !t.re.is_finite() || !t.im.is_finite()) {
        return Err(Error::NonFiniteIntegrand { node });
    }
    Ok(quadrature::pairwise_sum(&terms))
}

pub fn integrate_real<F>(model: &KahlerModel, integrand: F, rule: &QuadratureRule) -> Result<f64>
where
    F: Fn(&ChartPoint) -> f64 + Sync,
{
    integrate(model, |x| Complex64::new(integrand(x), 0.0), rule).map(|z| z.re)
}

/// A real (1,1)-form `Σ c_i ϑ_i + Σ s_k (i/2π)∂∂̄ψ_k`, where `ϑ_i` are the
/// reference forms of the factors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoForm {
    pub model: KahlerModel,
    pub factors: [f64; 2],
    pub potentials: Vec<(Psi, f64)>,
}

impl TwoForm {
    pub fn reference(model: KahlerModel) -> Self {
        Self::new(model, [1.0, 1.0], Vec::new())
    }

    pub fn new(model: KahlerModel, factors: [f64; 2], potentials: Vec<(Psi, f64)>) -> Self {
        let potentials = potentials.into_iter().filter(|(psi, s)| *s != 0.0 && *psi != Psi::Zero).collect();
        Self { model, factors, potentials }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::new(
            self.model,
            [self.factors[0] * c, self.factors[1] * c],
            self.potentials.iter().map(|(p, s)| (*p, s * c)).collect(),
        )
    }

    pub fn sum(&self, other: &Self) -> Self {
        let mut potentials = self.potentials.clone();
        potentials.extend(other.potentials.iter().copied());
        Self::new(
            self.model,
            [self.factors[0] + other.factors[0], self.factors[1] + other.factors[1]],
            potentials,
        )
    }

    pub fn matrix(&self, x: &ChartPoint) -> CMatrix {
        let mut h = self.model.reference_matrix(x);
        for i in 0..self.model.dim() {
            h[(i, i)] *= self.factors[i];
        }
        for (psi, s) in &self.potentials {
            h += psi.ddc_matrix(&self.model, x) * Complex64::new(*s, 0.0);
        }
        h
    }

    /// Scalar curvature of the Kähler metric of this form, `r = −4 tr(H⁻¹∂∂̄ log det H)`.
    ///
    /// Forms without potentials are handled exactly. Catalog potentials are
    /// separable, so `H` is diagonal with entry `i` depending only on `z_i`
    /// and `r = Σ_i −Δ_i log H_ii / H_ii`, evaluated by a fourth-order stencil.
    pub fn scalar_curvature(&self, x: &ChartPoint) -> f64 {
        if self.potentials.is_empty() {
            let r = self.model.factor_curvature();
            return (0..self.model.dim()).map(|i| r / self.factors[i]).sum();
        }
        let h = 1e-3;
        let mut total = 0.0;
        for i in 0..self.model.dim() {
            let entry = |dx: f64, dy: f64| {
                let mut delta = [Complex64::new(0.0, 0.0); 2];
                delta[i] = Complex64::new(dx, dy);
                self.matrix(&x.shifted(&delta[..self.model.dim()]))[(i, i)].re.ln()
            };
            let centre = entry(0.0, 0.0);
            let second = |f: &dyn Fn(f64) -> f64| {
                (-f(2.0 * h) + 16.0 * f(h) - 30.0 * centre + 16.0 * f(-h) - f(-2.0 * h)) / (12.0 * h * h)
            };
            let lap = second(&|t| entry(t, 0.0)) + second(&|t| entry(0.0, t));
            total += -lap / centre.exp();
        }
        total
    }
}

/// `2π` times the eigenvalues of `H_ω` relative to `H_ϑ`, ascending.
pub fn curvature_eigenvalues(omega: &TwoForm, theta: &TwoForm, x: &ChartPoint) -> Result<Vec<f64>> {
    let hw = omega.matrix(x);
    let ht = theta.matrix(x);
    let ev = relative_eigenvalues(&hw, &ht)?;
    if ev[0] <= 0.0 {
        return Err(Error::NotPositive(format!("form has relative eigenvalue {:e}", ev[0])));
    }
    Ok(ev.into_iter().map(|v| 2.0 * PI * v).collect())
}
