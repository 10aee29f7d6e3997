//! Resultant of two bivariate polynomials with respect to the second variable.
//!
//! Polynomials are coefficient grids `a[j][k]` of `z^j w^k`, `j ≤ d`, `k ≤ e`,
//! and the resultant is taken at formal degree `e` in `w`, so a common zero at
//! `w = ∞` is also detected. The result is a polynomial in `z` of formal
//! degree `2de`.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Largest bidegree (per variable) handled in exact integer arithmetic.
pub const EXACT_LIMIT: usize = 6;
const QUANT_BITS: i32 = 40;

#[derive(Clone, Debug, PartialEq, Eq)]
struct GaussInt {
    re: BigInt,
    im: BigInt,
}

impl GaussInt {
    fn zero() -> Self {
        Self { re: BigInt::zero(), im: BigInt::zero() }
    }

    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    fn add(&self, o: &Self) -> Self {
        Self { re: &self.re + &o.re, im: &self.im + &o.im }
    }

    fn sub(&self, o: &Self) -> Self {
        Self { re: &self.re - &o.re, im: &self.im - &o.im }
    }

    fn mul(&self, o: &Self) -> Self {
        Self { re: &self.re * &o.re - &self.im * &o.im, im: &self.re * &o.im + &self.im * &o.re }
    }

    fn scale(&self, s: &BigInt) -> Self {
        Self { re: &self.re * s, im: &self.im * s }
    }

    /// Exact quotient; the caller guarantees divisibility.
    fn div_exact(&self, o: &Self) -> Self {
        let norm = &o.re * &o.re + &o.im * &o.im;
        let re = &self.re * &o.re + &self.im * &o.im;
        let im = &self.im * &o.re - &self.re * &o.im;
        Self { re: re / &norm, im: im / &norm }
    }

    fn neg(&self) -> Self {
        Self { re: -&self.re, im: -&self.im }
    }
}

/// Fraction-free Gaussian elimination (Bareiss) determinant.
fn bareiss_det(mut m: Vec<Vec<GaussInt>>) -> GaussInt {
    let n = m.len();
    if n == 0 {
        return GaussInt { re: BigInt::one(), im: BigInt::zero() };
    }
    let mut negate = false;
    let mut prev = GaussInt { re: BigInt::one(), im: BigInt::zero() };
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&r| !m[r][k].is_zero()) {
                Some(r) => {
                    m.swap(k, r);
                    negate = !negate;
                }
                None => return GaussInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = m[i][j].mul(&m[k][k]).sub(&m[i][k].mul(&m[k][j]));
                m[i][j] = num.div_exact(&prev);
            }
        }
        prev = m[k][k].clone();
    }
    let det = m[n - 1][n - 1].clone();
    if negate {
        det.neg()
    } else {
        det
    }
}

fn quantize(a: &[Vec<Complex64>]) -> Vec<Vec<GaussInt>> {
    let max = a.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max);
    let s = if max > 0.0 { 2f64.powi(QUANT_BITS) / max } else { 0.0 };
    let to_int = |x: f64| BigInt::from((x * s).round() as i64);
    a.iter()
        .map(|row| row.iter().map(|c| GaussInt { re: to_int(c.re), im: to_int(c.im) }).collect())
        .collect()
}

/// Coefficients `A_k(z0)` of the polynomial in `w` at an integer `z0`.
fn specialize_int(q: &[Vec<GaussInt>], z0: i64) -> Vec<GaussInt> {
    let e = q[0].len() - 1;
    let z = BigInt::from(z0);
    (0..=e)
        .map(|k| {
            let mut acc = GaussInt::zero();
            for row in q.iter().rev() {
                acc = acc.scale(&z).add(&row[k]);
            }
            acc
        })
        .collect()
}

fn sylvester<T: Clone>(a: &[T], b: &[T], zero: T) -> Vec<Vec<T>> {
    let e = a.len() - 1;
    let n = 2 * e;
    let mut m = vec![vec![zero; n]; n];
    for i in 0..e {
        for k in 0..=e {
            m[i][i + k] = a[e - k].clone();
            m[e + i][i + k] = b[e - k].clone();
        }
    }
    m
}

/// Integer-coefficient resultant after quantizing each input to 40-bit
/// Gaussian integers: evaluation at `z = 0..N`, exact determinants, and
/// Newton forward-difference interpolation. Returns coefficients scaled to
/// a common power of two, or `None` when the resultant vanishes identically.
fn exact_resultant(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> Option<Vec<Complex64>> {
    let d = a.len() - 1;
    let e = a[0].len() - 1;
    let big_n = 2 * d * e;
    let (qa, qb) = (quantize(a), quantize(b));
    let values: Vec<GaussInt> = (0..=big_n as i64)
        .map(|z0| {
            let sa = specialize_int(&qa, z0);
            let sb = specialize_int(&qb, z0);
            bareiss_det(sylvester(&sa, &sb, GaussInt::zero()))
        })
        .collect();
    // Forward differences Δ^k y_0.
    let mut table = values;
    let mut diffs = Vec::with_capacity(big_n + 1);
    for _ in 0..=big_n {
        diffs.push(table[0].clone());
        table = table.windows(2).map(|w| w[1].sub(&w[0])).collect();
    }
    // N!·R(z) = Σ_k Δ^k y_0 · (N!/k!) · z(z−1)…(z−k+1).
    let mut coeffs = vec![GaussInt::zero(); big_n + 1];
    let mut falling: Vec<BigInt> = vec![BigInt::one()];
    let mut ratio = (1..=big_n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i));
    for (k, dk) in diffs.iter().enumerate() {
        if k > 0 {
            // falling ← falling · (z − (k−1)); N!/k! ← (N!/(k−1)!)/k
            let shift = BigInt::from(k - 1);
            let mut next = vec![BigInt::zero(); falling.len() + 1];
            for (i, c) in falling.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= c * &shift;
            }
            falling = next;
            ratio /= BigInt::from(k);
        }
        if dk.is_zero() {
            continue;
        }
        let scaled = dk.scale(&ratio);
        for (i, c) in falling.iter().enumerate() {
            coeffs[i] = coeffs[i].add(&scaled.scale(c));
        }
    }
    if coeffs.iter().all(GaussInt::is_zero) {
        return None;
    }
    let bits = coeffs.iter().map(|c| c.re.bits().max(c.im.bits())).max().unwrap_or(0);
    let shift = bits.saturating_sub(60);
    let to_f64 = |x: &BigInt| -> f64 {
        let v = (x.abs() >> shift).to_f64().unwrap_or(0.0);
        if x.is_negative() {
            -v
        } else {
            v
        }
    };
    Some(coeffs.iter().map(|c| Complex64::new(to_f64(&c.re), to_f64(&c.im))).collect())
}

/// Floating-point resultant: LU determinants at the `(N+1)`-th roots of
/// unity and an inverse discrete Fourier transform.
fn float_resultant(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> Option<Vec<Complex64>> {
    let d = a.len() - 1;
    let e = a[0].len() - 1;
    let m = 2 * d * e + 1;
    let specialize = |q: &[Vec<Complex64>], z: Complex64| -> Vec<Complex64> {
        (0..=e)
            .map(|k| q.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, row| acc * z + row[k]))
            .collect()
    };
    let mut hadamard = 0.0f64;
    let values: Vec<Complex64> = (0..m)
        .map(|t| {
            let z = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * t as f64 / m as f64);
            let rows = sylvester(&specialize(a, z), &specialize(b, z), Complex64::new(0.0, 0.0));
            let n = rows.len();
            let mat = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
            let bound: f64 = (0..n).map(|i| mat.row(i).norm()).product();
            hadamard = hadamard.max(bound);
            mat.lu().determinant()
        })
        .collect();
    let coeffs: Vec<Complex64> = (0..m)
        .map(|i| {
            values
                .iter()
                .enumerate()
                .map(|(t, v)| v * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * (i * t) as f64 / m as f64))
                .sum::<Complex64>()
                / m as f64
        })
        .collect();
    let top = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if top < 1e-10 * hadamard {
        return None;
    }
    Some(coeffs)
}

/// Resultant coefficients in `z`, with a flag telling whether exact
/// arithmetic was used.
pub fn resultant_in_w(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> Result<(Vec<Complex64>, bool)> {
    let d = a.len() - 1;
    let e = a[0].len() - 1;
    let exact = d <= EXACT_LIMIT && e <= EXACT_LIMIT;
    let out = if exact { exact_resultant(a, b) } else { float_resultant(a, b) };
    out.map(|c| (c, exact)).ok_or(Error::DegeneratePair)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn bareiss_matches_float_determinant() {
        let m = vec![
            vec![(2, 1), (0, 0), (3, -1)],
            vec![(1, 1), (4, 0), (0, 2)],
            vec![(0, 0), (5, 0), (1, 0)],
        ];
        let exact = bareiss_det(
            m.iter()
                .map(|r| r.iter().map(|(a, b)| GaussInt { re: BigInt::from(*a), im: BigInt::from(*b) }).collect())
                .collect(),
        );
        let f = DMatrix::from_fn(3, 3, |i, j| c(f64::from(m[i][j].0), f64::from(m[i][j].1))).determinant();
        assert_eq!(exact.re, BigInt::from(f.re.round() as i64));
        assert_eq!(exact.im, BigInt::from(f.im.round() as i64));
    }

    #[test]
    fn exact_and_float_paths_agree() {
        // f1 = z − w, f2 = zw − 1 (bidegree (1,1)); Res_w ∝ z² − 1.
        let a = vec![vec![c(0.0, 0.0), c(-1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]];
        let b = vec![vec![c(-1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]];
        let (r, exact) = resultant_in_w(&a, &b).unwrap();
        assert!(exact);
        let f = float_resultant(&a, &b).unwrap();
        let ratio_exact = r[0] / r[2];
        let ratio_float = f[0] / f[2];
        assert!((ratio_exact - c(-1.0, 0.0)).norm() < 1e-15);
        assert!((ratio_float - c(-1.0, 0.0)).norm() < 1e-12);
        assert!(r[1].norm() == 0.0);
    }

    #[test]
    fn identical_inputs_are_degenerate() {
        let a = vec![vec![c(0.3, 0.1), c(-1.0, 0.2)], vec![c(1.0, 0.0), c(0.5, 0.5)]];
        assert_eq!(resultant_in_w(&a, &a).unwrap_err(), Error::DegeneratePair);
        assert!(float_resultant(&a, &a).is_none());
    }
}
