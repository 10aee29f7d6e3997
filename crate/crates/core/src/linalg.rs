//! Small dense Hermitian helpers shared by the numerical modules.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

pub fn hermitian_defect(a: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn hermitize(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Eigenvalues of the Hermitian matrix `a` in ascending order.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = hermitize(a).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Eigenvalues of `a` relative to the positive definite `b`, i.e. of
/// `L⁻¹ a L⁻ᴴ` with `b = L Lᴴ`, ascending.
pub fn relative_eigenvalues(a: &CMatrix, b: &CMatrix) -> Result<Vec<f64>> {
    let chol = hermitize(b)
        .cholesky()
        .ok_or_else(|| Error::NotPositive("reference matrix".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NotPositive("reference matrix".into()))?;
    let m = &linv * a * linv.adjoint();
    Ok(hermitian_eigenvalues(&m))
}

/// Determinant of a Hermitian matrix (real part).
pub fn hermitian_det(a: &CMatrix) -> f64 {
    a.determinant().re
}

/// Elementary symmetric polynomial `e_m` of the given values.
pub fn elementary_symmetric(values: &[f64], m: usize) -> f64 {
    let mut e = vec![0.0; m + 1];
    e[0] = 1.0;
    for &v in values {
        for k in (1..=m).rev() {
            e[k] += v * e[k - 1];
        }
    }
    e[m]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_eigenvalues_of_scaled_reference() {
        let b = CMatrix::from_row_slice(
            2,
            2,
            &[Complex64::new(2.0, 0.0), Complex64::new(0.3, 0.4), Complex64::new(0.3, -0.4), Complex64::new(1.0, 0.0)],
        );
        let a = &b * Complex64::new(3.0, 0.0);
        let ev = relative_eigenvalues(&a, &b).unwrap();
        assert!(ev.iter().all(|v| (v - 3.0).abs() < 1e-13));
    }

    #[test]
    fn elementary_symmetric_small() {
        assert_eq!(elementary_symmetric(&[1.0, 2.0, 3.0], 2), 11.0);
        assert_eq!(elementary_symmetric(&[1.0, 2.0, 3.0], 3), 6.0);
        assert_eq!(elementary_symmetric(&[5.0], 0), 1.0);
    }
}
