//! Explicit bases of holomorphic sections and their pointwise evaluation.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::bundles::HermitianLineBundle;
use crate::geometry::{lattice_coords, ChartPoint, ModelKind};

/// Canonical basis of `H⁰(X, L)`: monomials `z^j` on the projective line
/// (`w^{d−j}` in the chart at infinity), bimonomials `z^j w^k` on the product
/// (index `j(e+1)+k`), and theta functions with characteristic `j/d` on a
/// torus.
#[derive(Clone, Debug, PartialEq)]
pub struct SectionBasis {
    pub bundle: HermitianLineBundle,
    /// Theta series truncation `|k| ≤ K` (unused on spheres).
    pub theta_cutoff: i64,
}

pub fn raw_basis(bundle: &HermitianLineBundle) -> SectionBasis {
    let theta_cutoff = match bundle.model.kind {
        ModelKind::FlatTorus { tau } => {
            // Dropped terms are below e^{-37} ≈ 1e-16 of the leading one, with margin 2.
            let d = f64::from(bundle.degree[0]);
            (2.0 * (37.0 / (PI * d * tau.im)).sqrt()).ceil() as i64 + 2
        }
        _ => 0,
    };
    SectionBasis { bundle: bundle.clone(), theta_cutoff }
}

pub fn dimension(bundle: &HermitianLineBundle) -> usize {
    match bundle.model.kind {
        ModelKind::ProjectiveLine => bundle.degree[0] as usize + 1,
        ModelKind::ProjectiveProduct => (bundle.degree[0] as usize + 1) * (bundle.degree[1] as usize + 1),
        ModelKind::FlatTorus { .. } => bundle.degree[0] as usize,
    }
}

/// `c^e` for the exponent list `e_j = j` (chart 0) or `d − j` (chart 1),
/// scaled by `scale`, written into `out[j]`.
fn sphere_powers(chart: u8, c: Complex64, d: usize, scale: f64, out: &mut [Complex64]) {
    let mut pw = Complex64::new(scale, 0.0);
    for k in 0..=d {
        let j = if chart == 0 { k } else { d - k };
        out[j] = pw;
        pw *= c;
    }
}

impl SectionBasis {
    pub fn len(&self) -> usize {
        dimension(&self.bundle)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Polynomial degree a quadrature rule must resolve for this basis' Gram matrix.
    pub fn required_degree(&self) -> usize {
        match self.bundle.model.kind {
            ModelKind::FlatTorus { .. } => 4 * self.bundle.degree[0] as usize,
            _ => self.bundle.degrees().iter().copied().max().unwrap_or(0) as usize,
        }
    }

    /// `f_j(x) |e(x)|_h`, whose modulus is the pointwise norm of the section.
    ///
    /// The point is first moved to its canonical chart. Values in different
    /// charts differ by a phase common to all `j`, which cancels from every
    /// quantity built on moduli of kernels.
    pub fn weighted_values(&self, x: &ChartPoint, out: &mut [Complex64]) {
        let model = &self.bundle.model;
        let x = model.canonical(x);
        let damp = (-0.5 * self.bundle.perturbation(&x)).exp();
        match model.kind {
            ModelKind::ProjectiveLine => {
                let (chart, c) = x.factor(0);
                let d = self.bundle.degree[0] as usize;
                let scale = (1.0 + c.norm_sqr()).powf(-0.5 * d as f64) * damp;
                sphere_powers(chart, c, d, scale, out);
            }
            ModelKind::ProjectiveProduct => {
                let (d, e) = (self.bundle.degree[0] as usize, self.bundle.degree[1] as usize);
                let mut a = vec![Complex64::new(0.0, 0.0); d + 1];
                let mut b = vec![Complex64::new(0.0, 0.0); e + 1];
                let (c1, z) = x.factor(0);
                let (c2, w) = x.factor(1);
                sphere_powers(c1, z, d, (1.0 + z.norm_sqr()).powf(-0.5 * d as f64) * damp, &mut a);
                sphere_powers(c2, w, e, (1.0 + w.norm_sqr()).powf(-0.5 * e as f64), &mut b);
                for j in 0..=d {
                    for k in 0..=e {
                        out[j * (e + 1) + k] = a[j] * b[k];
                    }
                }
            }
            ModelKind::FlatTorus { tau } => self.theta_values(tau, x.coords()[0], damp, out, None),
        }
    }

    /// Weighted theta values; with `deriv`, also `∂θ_j/∂z` scaled by the same factor.
    fn theta_values(
        &self,
        tau: Complex64,
        z: Complex64,
        scale: f64,
        out: &mut [Complex64],
        mut deriv: Option<&mut [Complex64]>,
    ) {
        let d = f64::from(self.bundle.degree[0]);
        let (x, y) = (z.re, z.im);
        for j in 0..out.len() {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut dacc = Complex64::new(0.0, 0.0);
            for k in -self.theta_cutoff - 1..=self.theta_cutoff {
                let n = k as f64 + j as f64 / d;
                let gauss = -(PI * d / tau.im) * (y + tau.im * n).powi(2);
                let phase = PI * tau.re * d * n * n + 2.0 * PI * d * n * x;
                let term = Complex64::from_polar(gauss.exp(), phase);
                acc += term;
                dacc += term * Complex64::new(0.0, 2.0 * PI * d * n);
            }
            out[j] = acc * scale;
            if let Some(dv) = deriv.as_deref_mut() {
                dv[j] = dacc * scale;
            }
        }
    }

    /// Values `λ f_j(x)` and derivatives `λ ∂f_j/∂z_i` (row `i` of `derivs`,
    /// flattened) in the chart of `x`, for some positive `λ` common to all `j`.
    pub fn holomorphic_jet(&self, x: &ChartPoint, values: &mut [Complex64], derivs: &mut [Complex64]) {
        let model = &self.bundle.model;
        let len = values.len();
        match model.kind {
            ModelKind::ProjectiveLine => {
                let (chart, c) = x.factor(0);
                let d = self.bundle.degree[0] as usize;
                let scale = (1.0 + c.norm_sqr()).powf(-0.5 * d as f64);
                sphere_jet(chart, c, d, scale, values, &mut derivs[..len]);
            }
            ModelKind::ProjectiveProduct => {
                let (d, e) = (self.bundle.degree[0] as usize, self.bundle.degree[1] as usize);
                let (c1, z) = x.factor(0);
                let (c2, w) = x.factor(1);
                let mut a = vec![Complex64::new(0.0, 0.0); d + 1];
                let mut da = a.clone();
                let mut b = vec![Complex64::new(0.0, 0.0); e + 1];
                let mut db = b.clone();
                sphere_jet(c1, z, d, (1.0 + z.norm_sqr()).powf(-0.5 * d as f64), &mut a, &mut da);
                sphere_jet(c2, w, e, (1.0 + w.norm_sqr()).powf(-0.5 * e as f64), &mut b, &mut db);
                for j in 0..=d {
                    for k in 0..=e {
                        let idx = j * (e + 1) + k;
                        values[idx] = a[j] * b[k];
                        derivs[idx] = da[j] * b[k];
                        derivs[len + idx] = a[j] * db[k];
                    }
                }
            }
            ModelKind::FlatTorus { tau } => {
                let z = x.coords()[0];
                // Shift by lattice vectors so the theta series stays centred;
                // the induced automorphy factor is common to all j.
                let (u, v) = lattice_coords(tau, z);
                let z = z - u.floor() - tau * v.floor();
                self.theta_values(tau, z, 1.0, values, Some(&mut derivs[..len]));
            }
        }
    }
}

fn sphere_jet(chart: u8, c: Complex64, d: usize, scale: f64, values: &mut [Complex64], derivs: &mut [Complex64]) {
    for k in 0..=d {
        let j = if chart == 0 { k } else { d - k };
        values[j] = c.powu(k as u32) * scale;
        derivs[j] = if k == 0 { Complex64::new(0.0, 0.0) } else { c.powu(k as u32 - 1) * (k as f64 * scale) };
    }
}
