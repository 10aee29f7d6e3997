//! Stereographic charts of the Riemann sphere and polynomial functions of the
//! ambient coordinates `(x1, x2, x3)` on the unit sphere.
//!
//! Chart 0 is `z`, chart 1 is `w = 1/z`; the north pole `x3 = 1` is `z = ∞`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

/// Density of the unit-area Fubini–Study form against Lebesgue measure of
/// either chart.
#[inline]
pub fn fs_density(c: Complex64) -> f64 {
    let t = 1.0 + c.norm_sqr();
    1.0 / (PI * t * t)
}

/// `s = |z|²/(1+|z|²)` evaluated in either chart.
#[inline]
pub fn fs_moment(chart: u8, c: Complex64) -> f64 {
    let r2 = c.norm_sqr();
    if chart == 0 {
        r2 / (1.0 + r2)
    } else {
        1.0 / (1.0 + r2)
    }
}

pub fn to_sphere(chart: u8, c: Complex64) -> [f64; 3] {
    let r2 = c.norm_sqr();
    let t = 1.0 + r2;
    if chart == 0 {
        [2.0 * c.re / t, 2.0 * c.im / t, (r2 - 1.0) / t]
    } else {
        [2.0 * c.re / t, -2.0 * c.im / t, (1.0 - r2) / t]
    }
}

/// Inverse of [`to_sphere`], choosing the chart in which `|coord| <= 1`.
pub fn from_sphere(x: [f64; 3]) -> (u8, Complex64) {
    if x[2] <= 0.0 {
        let d = 1.0 - x[2];
        (0, Complex64::new(x[0] / d, x[1] / d))
    } else {
        let d = 1.0 + x[2];
        (1, Complex64::new(x[0] / d, -x[1] / d))
    }
}

/// Re-expresses a chart coordinate in the other chart of the sphere.
#[inline]
pub fn flip(c: Complex64) -> Complex64 {
    c.inv()
}

/// Value, gradient and Hessian of an ambient function at a point.
#[derive(Clone, Copy, Debug, Default)]
pub struct Jet3 {
    pub value: f64,
    pub grad: [f64; 3],
    pub hess: [[f64; 3]; 3],
}

impl Jet3 {
    /// Laplace–Beltrami operator of the unit round sphere applied to the
    /// restriction, valid for `|x| = 1`.
    pub fn sphere_laplacian(&self, x: [f64; 3]) -> f64 {
        let trace = self.hess[0][0] + self.hess[1][1] + self.hess[2][2];
        let radial = x[0] * self.grad[0] + x[1] * self.grad[1] + x[2] * self.grad[2];
        let mut xhx = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                xhx += x[i] * self.hess[i][j] * x[j];
            }
        }
        trace - 2.0 * radial - xhx
    }

    /// Tangential gradient on the unit sphere.
    pub fn sphere_gradient(&self, x: [f64; 3]) -> [f64; 3] {
        let radial = x[0] * self.grad[0] + x[1] * self.grad[1] + x[2] * self.grad[2];
        [
            self.grad[0] - radial * x[0],
            self.grad[1] - radial * x[1],
            self.grad[2] - radial * x[2],
        ]
    }

    /// Covariant Hessian on the unit sphere as an ambient 3×3 matrix acting
    /// on the tangent plane (zero on the normal line).
    pub fn sphere_hessian(&self, x: [f64; 3]) -> [[f64; 3]; 3] {
        let radial = x[0] * self.grad[0] + x[1] * self.grad[1] + x[2] * self.grad[2];
        let mut proj = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                proj[i][j] = if i == j { 1.0 } else { 0.0 } - x[i] * x[j];
            }
        }
        let mut ph = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                ph[i][j] = (0..3).map(|k| proj[i][k] * self.hess[k][j]).sum();
            }
        }
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = (0..3).map(|k| ph[i][k] * proj[k][j]).sum::<f64>() - radial * proj[i][j];
            }
        }
        out
    }
}

/// Real polynomial in the ambient coordinates.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AmbientPoly {
    terms: BTreeMap<[u8; 3], f64>,
}

impl AmbientPoly {
    pub fn constant(c: f64) -> Self {
        let mut terms = BTreeMap::new();
        if c != 0.0 {
            terms.insert([0, 0, 0], c);
        }
        Self { terms }
    }

    pub fn coordinate(i: usize) -> Self {
        let mut e = [0u8; 3];
        e[i] = 1;
        Self { terms: BTreeMap::from([(e, 1.0)]) }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        for (e, c) in &other.terms {
            *terms.entry(*e).or_insert(0.0) += c;
        }
        terms.retain(|_, c| *c != 0.0);
        Self { terms }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            terms: self.terms.iter().map(|(e, c)| (*e, c * s)).filter(|(_, c)| *c != 0.0).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut terms: BTreeMap<[u8; 3], f64> = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]];
                *terms.entry(e).or_insert(0.0) += ca * cb;
            }
        }
        terms.retain(|_, c| *c != 0.0);
        Self { terms }
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::constant(1.0), |acc, _| acc.mul(self))
    }

    pub fn jet(&self, x: [f64; 3]) -> Jet3 {
        let mut jet = Jet3::default();
        for (e, c) in &self.terms {
            let mono = |d: [u8; 3]| -> f64 {
                let mut v = *c;
                for i in 0..3 {
                    if d[i] > e[i] {
                        return 0.0;
                    }
                    let k = e[i] - d[i];
                    for m in 0..d[i] {
                        v *= f64::from(e[i] - m);
                    }
                    v *= x[i].powi(i32::from(k));
                }
                v
            };
            jet.value += mono([0, 0, 0]);
            for i in 0..3 {
                let mut d = [0u8; 3];
                d[i] = 1;
                jet.grad[i] += mono(d);
                for j in 0..3 {
                    let mut d = [0u8; 3];
                    d[i] += 1;
                    d[j] += 1;
                    jet.hess[i][j] += mono(d);
                }
            }
        }
        jet
    }

    pub fn value(&self, x: [f64; 3]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * x[0].powi(i32::from(e[0])) * x[1].powi(i32::from(e[1])) * x[2].powi(i32::from(e[2])))
            .sum()
    }
}
