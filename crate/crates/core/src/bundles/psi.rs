//! Catalog of smooth weight perturbations ψ.
//!
//! On the sphere every ψ is a polynomial in the ambient coordinates, so it is
//! smooth in both charts and its `(i/2π)∂∂̄ψ` equals `Δ_{S²}ψ · ω_FS`. On the
//! product the catalog entry is `ψ(z) + ψ(w)`; on a torus it is a short
//! trigonometric sum scaled so that the relative size of `(i/2π)∂∂̄ψ` does
//! not depend on τ.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::sphere::{self, AmbientPoly};
use crate::geometry::{lattice_coords, ChartPoint, KahlerModel, ModelKind};
use crate::linalg::CMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Psi {
    #[serde(rename = "psi-zero")]
    Zero,
    #[serde(rename = "psi-bump-1")]
    Bump1,
    #[serde(rename = "psi-re-1")]
    Re1,
}

/// One torus term `amp · cos(2π(k u + l v))` (or `sin` when `odd`).
#[derive(Clone, Copy, Debug)]
struct Wave {
    amp: f64,
    k: f64,
    l: f64,
    odd: bool,
}

impl Psi {
    pub const ALL: [Psi; 3] = [Psi::Zero, Psi::Bump1, Psi::Re1];

    pub fn id(self) -> &'static str {
        match self {
            Psi::Zero => "psi-zero",
            Psi::Bump1 => "psi-bump-1",
            Psi::Re1 => "psi-re-1",
        }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.id() == id)
            .ok_or_else(|| Error::InvalidParams(format!("unknown ψ id {id:?}")))
    }

    pub fn description(self) -> &'static str {
        match self {
            Psi::Zero => "ψ = 0",
            Psi::Bump1 => {
                "sphere: -½ Σ_{i=1..4} t^i/i with t = (1 - x3)/2, i.e. a radial bump peaked at z = 0; \
                 torus: cos 2πu + cos 2πv, scaled"
            }
            Psi::Re1 => "sphere: Re z/(1+|z|²)² = x1(1 - x3)/4; torus: sin 2π(u + v), scaled",
        }
    }

    /// The sphere version as an ambient polynomial.
    pub fn sphere_poly(self) -> &'static AmbientPoly {
        static POLYS: OnceLock<[AmbientPoly; 3]> = OnceLock::new();
        let polys = POLYS.get_or_init(|| {
            let x1 = AmbientPoly::coordinate(0);
            let x3 = AmbientPoly::coordinate(2);
            let t = AmbientPoly::constant(1.0).add(&x3.scale(-1.0)).scale(0.5);
            let mut bump = AmbientPoly::constant(0.0);
            for i in 1..=4 {
                bump = bump.add(&t.pow(i).scale(-0.5 / f64::from(i)));
            }
            let re = x1.mul(&AmbientPoly::constant(1.0).add(&x3.scale(-1.0))).scale(0.25);
            [AmbientPoly::constant(0.0), bump, re]
        });
        &polys[self as usize]
    }

    fn waves(self, tau: Complex64) -> Vec<Wave> {
        // Each wave is scaled so its (i/2π)∂∂̄ relative to ϑ has sup `target`.
        let wave = |k: f64, l: f64, odd: bool, target: f64| {
            let kx = 2.0 * PI * k;
            let ky = 2.0 * PI * (l - k * tau.re) / tau.im;
            let ratio = (kx * kx + ky * ky) * tau.im / (4.0 * PI);
            Wave { amp: target / ratio, k, l, odd }
        };
        match self {
            Psi::Zero => Vec::new(),
            Psi::Bump1 => vec![wave(1.0, 0.0, false, 0.25), wave(0.0, 1.0, false, 0.25)],
            Psi::Re1 => vec![wave(1.0, 1.0, true, 0.25)],
        }
    }

    /// Value, and `Δψ` in the flat coordinates `(x, y)` of the torus chart.
    fn torus_jet(self, tau: Complex64, z: Complex64) -> (f64, f64) {
        let (u, v) = lattice_coords(tau, z);
        let mut value = 0.0;
        let mut lap = 0.0;
        for w in self.waves(tau) {
            let phase = 2.0 * PI * (w.k * u + w.l * v);
            let f = if w.odd { phase.sin() } else { phase.cos() };
            let kx = 2.0 * PI * w.k;
            let ky = 2.0 * PI * (w.l - w.k * tau.re) / tau.im;
            value += w.amp * f;
            lap -= w.amp * (kx * kx + ky * ky) * f;
        }
        (value, lap)
    }

    pub fn is_zero(self) -> bool {
        self == Psi::Zero
    }

    /// Whether ψ is invariant under rotation of each spherical factor.
    pub fn is_rotation_invariant(self) -> bool {
        matches!(self, Psi::Zero | Psi::Bump1)
    }

    pub fn value(self, model: &KahlerModel, x: &ChartPoint) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        match model.kind {
            ModelKind::FlatTorus { tau } => self.torus_jet(tau, x.coords()[0]).0,
            _ => (0..model.dim())
                .map(|i| {
                    let (chart, c) = x.factor(i);
                    self.sphere_poly().value(sphere::to_sphere(chart, c))
                })
                .sum(),
        }
    }

    /// `Δ_{S²}ψ` at a sphere point, i.e. the ratio `(i/2π)∂∂̄ψ / ω_FS`.
    pub fn sphere_ratio(self, chart: u8, c: Complex64) -> f64 {
        let x = sphere::to_sphere(chart, c);
        self.sphere_poly().jet(x).sphere_laplacian(x)
    }

    /// Coefficient matrix of `(i/2π)∂∂̄ψ` at `x`.
    pub fn ddc_matrix(self, model: &KahlerModel, x: &ChartPoint) -> CMatrix {
        let n = model.dim();
        let mut h = CMatrix::zeros(n, n);
        if self.is_zero() {
            return h;
        }
        match model.kind {
            ModelKind::FlatTorus { tau } => {
                h[(0, 0)] = (self.torus_jet(tau, x.coords()[0]).1 / (4.0 * PI)).into();
            }
            _ => {
                for i in 0..n {
                    let (chart, c) = x.factor(i);
                    h[(i, i)] = (self.sphere_ratio(chart, c) * sphere::fs_density(c)).into();
                }
            }
        }
        h
    }

    /// Certified bound on the operator norm of `(i/2π)∂∂̄ψ` relative to ϑ.
    ///
    /// On the sphere this is a dense-grid maximum of `|Δ_{S²}ψ|` with a 1.05
    /// margin; on the torus it is the exact sum of the per-wave bounds.
    pub fn ddc_bound(self, model: &KahlerModel) -> f64 {
        match model.kind {
            ModelKind::FlatTorus { .. } => match self {
                Psi::Zero => 0.0,
                Psi::Bump1 => 0.5,
                Psi::Re1 => 0.25,
            },
            _ => {
                static BOUNDS: OnceLock<[f64; 3]> = OnceLock::new();
                BOUNDS.get_or_init(|| Psi::ALL.map(sphere_grid_bound))[self as usize]
            }
        }
    }
}

fn sphere_grid_bound(psi: Psi) -> f64 {
    let poly = psi.sphere_poly();
    let n = 400;
    let mut worst = 0.0f64;
    for i in 0..=n {
        let polar = PI * i as f64 / n as f64;
        for j in 0..2 * n {
            let az = PI * j as f64 / n as f64;
            let x = [polar.sin() * az.cos(), polar.sin() * az.sin(), polar.cos()];
            worst = worst.max(poly.jet(x).sphere_laplacian(x).abs());
        }
    }
    1.05 * worst
}
