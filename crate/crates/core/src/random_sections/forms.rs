//! Catalog of smooth test functions paired against zero currents.
//!
//! On the sphere each form is a polynomial in the ambient coordinates, on the
//! product it is `f(z) f(w)`, and on a torus a short trigonometric sum.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::sphere::{self, AmbientPoly};
use crate::geometry::{lattice_coords, ChartPoint, KahlerModel, ModelKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TestForm {
    #[serde(rename = "phi-one")]
    One,
    #[serde(rename = "phi-cap-north")]
    CapNorth,
    #[serde(rename = "phi-re-moment")]
    ReMoment,
    #[serde(rename = "phi-bump-eq")]
    BumpEq,
    #[serde(rename = "phi-im-moment")]
    ImMoment,
}

/// `(amplitude, k, l, odd)`: `amp · cos(2π(k u + l v))`, or `sin` when odd.
type Wave = (f64, f64, f64, bool);

impl TestForm {
    pub const ALL: [TestForm; 5] =
        [TestForm::One, TestForm::CapNorth, TestForm::ReMoment, TestForm::BumpEq, TestForm::ImMoment];

    pub fn id(self) -> &'static str {
        match self {
            TestForm::One => "phi-one",
            TestForm::CapNorth => "phi-cap-north",
            TestForm::ReMoment => "phi-re-moment",
            TestForm::BumpEq => "phi-bump-eq",
            TestForm::ImMoment => "phi-im-moment",
        }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.id() == id)
            .ok_or_else(|| Error::InvalidParams(format!("unknown test form id {id:?}")))
    }

    pub fn description(self) -> &'static str {
        match self {
            TestForm::One => "1",
            TestForm::CapNorth => {
                "sphere: ((1+x3)/2)^4 = (|z|²/(1+|z|²))^4 = 1/(1+|w|²)^4; torus: ((1+cos 2πv)/2)^2"
            }
            TestForm::ReMoment => "sphere: x1 = 2Re z/(1+|z|²) = 2Re w/(1+|w|²); torus: cos 2πu",
            TestForm::BumpEq => {
                "sphere: (1-x3²)² = 16|z|⁴/(1+|z|²)⁴ (same in w); torus: sin²(π(u+v))"
            }
            TestForm::ImMoment => "sphere: x2 = 2Im z/(1+|z|²) = -2Im w/(1+|w|²); torus: sin 2πu",
        }
    }

    fn sphere_poly(self) -> &'static AmbientPoly {
        static POLYS: OnceLock<[AmbientPoly; 5]> = OnceLock::new();
        let polys = POLYS.get_or_init(|| {
            let one = AmbientPoly::constant(1.0);
            let x1 = AmbientPoly::coordinate(0);
            let x2 = AmbientPoly::coordinate(1);
            let x3 = AmbientPoly::coordinate(2);
            let cap = one.add(&x3).scale(0.5).pow(4);
            let bump = one.add(&x3.mul(&x3).scale(-1.0)).pow(2);
            [one, cap, x1, bump, x2]
        });
        &polys[self as usize]
    }

    fn waves(self) -> Vec<Wave> {
        match self {
            TestForm::One => vec![(1.0, 0.0, 0.0, false)],
            TestForm::CapNorth => vec![(0.375, 0.0, 0.0, false), (0.5, 0.0, 1.0, false), (0.125, 0.0, 2.0, false)],
            TestForm::ReMoment => vec![(1.0, 1.0, 0.0, false)],
            TestForm::BumpEq => vec![(0.5, 0.0, 0.0, false), (-0.5, 1.0, 1.0, false)],
            TestForm::ImMoment => vec![(1.0, 1.0, 0.0, true)],
        }
    }

    fn sphere_value(self, chart: u8, c: num_complex::Complex64) -> f64 {
        self.sphere_poly().value(sphere::to_sphere(chart, c))
    }

    pub fn value(self, model: &KahlerModel, x: &ChartPoint) -> f64 {
        match model.kind {
            ModelKind::ProjectiveLine => {
                let (chart, c) = x.factor(0);
                self.sphere_value(chart, c)
            }
            ModelKind::ProjectiveProduct => {
                let (c1, z) = x.factor(0);
                let (c2, w) = x.factor(1);
                self.sphere_value(c1, z) * self.sphere_value(c2, w)
            }
            ModelKind::FlatTorus { tau } => {
                let (u, v) = lattice_coords(tau, x.coords()[0]);
                self.waves()
                    .iter()
                    .map(|(amp, k, l, odd)| {
                        let phase = 2.0 * PI * (k * u + l * v);
                        amp * if *odd { phase.sin() } else { phase.cos() }
                    })
                    .sum()
            }
        }
    }

    /// `(sup|f|, sup|df|_g, sup|∇²f|_g)` on a dense grid, for the unit-area
    /// sphere (radius `R₀ = 1/√(4π)`) or the unit-area flat torus.
    fn grid_norms(self, model: &KahlerModel) -> [f64; 3] {
        match model.kind {
            ModelKind::FlatTorus { tau } => {
                let waves = self.waves();
                let n = 256;
                let mut out = [0.0f64; 3];
                for i in 0..n {
                    for j in 0..n {
                        let (u, v) = (i as f64 / n as f64, j as f64 / n as f64);
                        let (mut f, mut g, mut h) = (0.0, [0.0; 2], [[0.0; 2]; 2]);
                        for (amp, k, l, odd) in &waves {
                            let phase = 2.0 * PI * (k * u + l * v);
                            let (s, c) = phase.sin_cos();
                            let kv = [2.0 * PI * k, 2.0 * PI * (l - k * tau.re) / tau.im];
                            let (val, d1, d2) = if *odd { (s, c, -s) } else { (c, -s, -c) };
                            f += amp * val;
                            for a in 0..2 {
                                g[a] += amp * d1 * kv[a];
                                for b in 0..2 {
                                    h[a][b] += amp * d2 * kv[a] * kv[b];
                                }
                            }
                        }
                        // g = (1/Im τ)(dx² + dy²).
                        let grad = (g[0] * g[0] + g[1] * g[1]).sqrt() * tau.im.sqrt();
                        let hess = h.iter().flatten().map(|v| v * v).sum::<f64>().sqrt() * tau.im;
                        out = [out[0].max(f.abs()), out[1].max(grad), out[2].max(hess)];
                    }
                }
                out
            }
            _ => {
                let poly = self.sphere_poly();
                let radius = 1.0 / (4.0 * PI).sqrt();
                let n = 200;
                let mut out = [0.0f64; 3];
                for i in 0..=n {
                    let polar = PI * i as f64 / n as f64;
                    for j in 0..2 * n {
                        let az = PI * j as f64 / n as f64;
                        let x = [polar.sin() * az.cos(), polar.sin() * az.sin(), polar.cos()];
                        let jet = poly.jet(x);
                        let g = jet.sphere_gradient(x);
                        let h = jet.sphere_hessian(x);
                        let grad = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt() / radius;
                        let hess = h.iter().flatten().map(|v| v * v).sum::<f64>().sqrt() / (radius * radius);
                        out = [out[0].max(jet.value.abs()), out[1].max(grad), out[2].max(hess)];
                    }
                }
                out
            }
        }
    }

    /// Certified `‖φ‖_{C²} = sup|φ| + sup|dφ| + sup|∇²φ|`: grid maxima with a
    /// 1.05 margin. On the product the factor bounds are combined through
    /// `|d(fg)|² = |df|²g² + f²|dg|²` and the analogous Hessian identity.
    pub fn c2_norm(self, model: &KahlerModel) -> f64 {
        let [f, g, h] = self.grid_norms(model);
        let total = match model.kind {
            ModelKind::ProjectiveProduct => {
                let grad = (2.0 * g * g * f * f).sqrt();
                let hess = (2.0 * h * h * f * f + 2.0 * g.powi(4)).sqrt();
                f * f + grad + hess
            }
            _ => f + g + h,
        };
        1.05 * total
    }
}
