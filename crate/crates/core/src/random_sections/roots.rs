//! Roots of univariate polynomials on the Riemann sphere.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;

use crate::geometry::sphere;
use crate::geometry::ChartPoint;

/// A point of the sphere, stored in the chart where its coordinate has
/// modulus at most one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpherePoint {
    pub chart: u8,
    pub coord: Complex64,
}

impl SpherePoint {
    pub fn infinity() -> Self {
        Self { chart: 1, coord: Complex64::new(0.0, 0.0) }
    }

    pub fn from_z(z: Complex64) -> Self {
        if z.norm_sqr() <= 1.0 {
            Self { chart: 0, coord: z }
        } else {
            Self { chart: 1, coord: z.inv() }
        }
    }

    pub fn chart_point(&self) -> ChartPoint {
        ChartPoint::line(self.chart, self.coord)
    }

    pub fn ambient(&self) -> [f64; 3] {
        sphere::to_sphere(self.chart, self.coord)
    }

    /// Chordal distance on the unit sphere halved (`|z−w|/√((1+|z|²)(1+|w|²))`).
    pub fn chordal(&self, other: &Self) -> f64 {
        let (a, b) = (self.ambient(), other.ambient());
        0.5 * ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
    }
}

/// Value and derivative of `Σ a_j c^{e_j}` in a chart: `e_j = j` in chart 0,
/// `d − j` in chart 1.
pub fn eval_chart(a: &[Complex64], chart: u8, c: Complex64) -> (Complex64, Complex64) {
    let d = a.len() - 1;
    let coef = |k: usize| if chart == 0 { a[k] } else { a[d - k] };
    let mut v = Complex64::new(0.0, 0.0);
    let mut dv = Complex64::new(0.0, 0.0);
    for k in (0..=d).rev() {
        dv = dv * c + v;
        v = v * c + coef(k);
    }
    (v, dv)
}

/// Diagonal similarity making row and column norms comparable.
fn balance(m: &mut DMatrix<Complex64>) {
    let n = m.nrows();
    let radix = 2.0f64;
    loop {
        let mut done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].l1_norm();
                    r += m[(i, j)].l1_norm();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let (mut c2, mut r2) = (c, r);
            while c2 < r2 / radix {
                c2 *= radix;
                r2 /= radix;
                f *= radix;
            }
            while c2 >= r2 * radix {
                c2 /= radix;
                r2 *= radix;
                f /= radix;
            }
            if (c2 + r2) < 0.95 * s {
                done = false;
                for j in 0..n {
                    m[(i, j)] /= f;
                    m[(j, i)] *= f;
                }
            }
        }
        if done {
            break;
        }
    }
}

/// Roots of `Σ a_j z^j` (formal degree `a.len() − 1`) on the sphere with
/// multiplicities. A coefficient counts as zero when `|a_j| scale[j]` is at
/// most `zero_tol` times the largest such value; vanishing top coefficients
/// are roots at infinity.
pub fn sphere_roots(a: &[Complex64], scale: &[f64], zero_tol: f64, merge_tol: f64) -> Vec<(SpherePoint, u32)> {
    let normalized: Vec<f64> = a.iter().zip(scale).map(|(v, s)| v.norm() * s).collect();
    let top = normalized.iter().cloned().fold(0.0, f64::max);
    let formal = a.len() - 1;
    let mut deg = formal;
    while deg > 0 && normalized[deg] <= zero_tol * top {
        deg -= 1;
    }
    let mut low = 0;
    while low < deg && normalized[low] <= zero_tol * top {
        low += 1;
    }
    let mut roots: Vec<SpherePoint> = Vec::with_capacity(formal);
    roots.extend(std::iter::repeat_n(SpherePoint::infinity(), formal - deg));
    roots.extend(std::iter::repeat_n(SpherePoint::from_z(Complex64::new(0.0, 0.0)), low));
    let inner = &a[low..=deg];
    let k = inner.len() - 1;
    if k > 0 {
        let lead = inner[k];
        let mut comp = DMatrix::<Complex64>::zeros(k, k);
        for i in 1..k {
            comp[(i, i - 1)] = Complex64::new(1.0, 0.0);
        }
        for i in 0..k {
            comp[(i, k - 1)] = -inner[i] / lead;
        }
        balance(&mut comp);
        let eig = companion_eigenvalues(comp);
        let raw: Vec<SpherePoint> = eig.iter().map(|z| SpherePoint::from_z(*z)).collect();
        let polished = polish(a, &raw);
        roots.extend(polished);
    }
    merge(roots, merge_tol)
}

/// Eigenvalues by shifted QR. Matrices on which the iteration stalls (the
/// cyclic shift of `z^k − 1` is one) are conjugated by a fixed Householder
/// reflection and retried.
fn companion_eigenvalues(comp: DMatrix<Complex64>) -> Vec<Complex64> {
    let n = comp.nrows();
    let eps = f64::EPSILON;
    let max_iter = 100 * n.max(10);
    if let Some(ev) = Schur::try_new(comp.clone(), eps, max_iter).and_then(|s| s.eigenvalues()) {
        return ev.iter().copied().collect();
    }
    let v = DVector::from_fn(n, |i, _| Complex64::new((i as f64 + 1.0).cos(), (0.5 * i as f64 + 0.3).sin()));
    let v = &v / Complex64::new(v.norm(), 0.0);
    let h = DMatrix::<Complex64>::identity(n, n) - &v * v.adjoint() * Complex64::new(2.0, 0.0);
    let conj = &h * comp * &h;
    Schur::try_new(conj.clone(), eps, 10 * max_iter)
        .and_then(|s| s.eigenvalues())
        .map(|ev| ev.iter().copied().collect())
        .unwrap_or_else(|| conj.diagonal().iter().copied().collect())
}

/// Newton refinement in the chart of each root; a step is kept only if it
/// moves the root by less than half the distance to the nearest other root.
fn polish(a: &[Complex64], roots: &[SpherePoint]) -> Vec<SpherePoint> {
    let mut out = roots.to_vec();
    for (i, r) in roots.iter().enumerate() {
        let nearest = roots
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, o)| r.chordal(o))
            .fold(f64::INFINITY, f64::min);
        let mut cur = *r;
        for _ in 0..8 {
            let (v, dv) = eval_chart(a, cur.chart, cur.coord);
            if dv.norm() == 0.0 {
                break;
            }
            let next = cur.coord - v / dv;
            let candidate = if cur.chart == 0 {
                SpherePoint::from_z(next)
            } else if next.norm() == 0.0 {
                SpherePoint::infinity()
            } else {
                SpherePoint::from_z(next.inv())
            };
            if r.chordal(&candidate) >= 0.5 * nearest || !candidate.coord.re.is_finite() {
                break;
            }
            let moved = cur.chordal(&candidate);
            cur = candidate;
            if moved < 1e-15 {
                break;
            }
        }
        out[i] = cur;
    }
    out
}

/// Groups roots closer than `tol` (chordally) into one point with multiplicity.
pub fn merge(roots: Vec<SpherePoint>, tol: f64) -> Vec<(SpherePoint, u32)> {
    let mut out: Vec<(SpherePoint, u32, [f64; 3])> = Vec::new();
    for r in roots {
        if let Some(slot) = out.iter_mut().find(|(c, _, _)| c.chordal(&r) < tol) {
            let x = r.ambient();
            slot.1 += 1;
            for k in 0..3 {
                slot.2[k] += x[k];
            }
        } else {
            out.push((r, 1, r.ambient()));
        }
    }
    out.into_iter()
        .map(|(r, m, sum)| {
            if m == 1 {
                return (r, 1);
            }
            let norm = (sum[0] * sum[0] + sum[1] * sum[1] + sum[2] * sum[2]).sqrt();
            let (chart, c) = sphere::from_sphere([sum[0] / norm, sum[1] / norm, sum[2] / norm]);
            (SpherePoint { chart, coord: c }, m)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn linear_and_double_roots() {
        let r = sphere_roots(&[c(-1.0), c(1.0)], &[1.0, 1.0], 1e-15, 1e-8);
        assert_eq!(r.len(), 1);
        assert!((r[0].0.coord - c(1.0)).norm() < 1e-14 && r[0].1 == 1);
        let r = sphere_roots(&[c(0.0), c(0.0), c(1.0)], &[1.0; 3], 1e-15, 1e-8);
        assert_eq!(r, vec![(SpherePoint::from_z(c(0.0)), 2)]);
        let r = sphere_roots(&[c(1.0), c(0.0), c(0.0)], &[1.0; 3], 1e-15, 1e-8);
        assert_eq!(r, vec![(SpherePoint::infinity(), 2)]);
    }

    #[test]
    fn roots_of_unity() {
        let mut a = vec![c(0.0); 13];
        a[0] = c(-1.0);
        a[12] = c(1.0);
        let r = sphere_roots(&a, &[1.0; 13], 1e-15, 1e-8);
        assert_eq!(r.len(), 12);
        for (p, m) in r {
            assert_eq!(m, 1);
            let z = if p.chart == 0 { p.coord } else { p.coord.inv() };
            assert!((z.powu(12) - c(1.0)).norm() < 1e-13);
        }
    }
}
