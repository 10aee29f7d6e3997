//! Orthonormal section bases, the Bergman kernel and the Fubini–Study current.

pub mod basis;
pub mod gram;

use std::f64::consts::PI;

use num_complex::Complex64;

pub use basis::{dimension, raw_basis, SectionBasis};
pub use gram::{gram_for_bundle, gram_matrix, GramMatrix, WhiteningMethod};

use crate::bundles::HermitianLineBundle;
use crate::error::Result;
use crate::geometry::{ChartPoint, ModelKind};
use crate::linalg::CMatrix;

#[derive(Clone, Debug)]
pub struct OrthonormalBasis {
    pub basis: SectionBasis,
    pub gram: GramMatrix,
    /// Whitening transform, `Tᴴ G T = I`; the orthonormal sections are
    /// `S_j = Σ_k conj(T_kj) f_k`.
    pub t: CMatrix,
    t_adj: CMatrix,
    pub method: WhiteningMethod,
    /// `T` is diagonal (the raw basis is already orthogonal).
    pub diagonal: bool,
}

pub fn orthonormalize(basis: &SectionBasis, gram: GramMatrix) -> Result<OrthonormalBasis> {
    let (t, method, diagonal) = gram::whitening(&gram)?;
    Ok(OrthonormalBasis { basis: basis.clone(), gram, t_adj: t.adjoint(), t, method, diagonal })
}

impl OrthonormalBasis {
    /// Raw basis, Gram on the default rule (refined when perturbed), whitening.
    pub fn for_bundle(bundle: &HermitianLineBundle) -> Result<Self> {
        let basis = raw_basis(bundle);
        let gram = gram_for_bundle(&basis)?;
        orthonormalize(&basis, gram)
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn bundle(&self) -> &HermitianLineBundle {
        &self.basis.bundle
    }

    fn apply(&self, raw: &[Complex64], out: &mut [Complex64]) {
        if self.diagonal {
            for (j, o) in out.iter_mut().enumerate() {
                *o = self.t_adj[(j, j)] * raw[j];
            }
        } else {
            for (j, o) in out.iter_mut().enumerate() {
                *o = self.t_adj.row(j).iter().zip(raw).map(|(a, b)| a * b).sum();
            }
        }
    }

    /// `S_j(x)` times the frame norm at `x` (modulus = pointwise norm).
    pub fn section_values(&self, x: &ChartPoint, out: &mut [Complex64]) {
        let mut raw = vec![Complex64::new(0.0, 0.0); self.len()];
        self.basis.weighted_values(x, &mut raw);
        self.apply(&raw, out);
    }

    /// Holomorphic coefficient vector of `Σ_j c_j S_j` in the raw basis.
    pub fn to_raw_coefficients(&self, c: &[Complex64]) -> Vec<Complex64> {
        (0..self.len())
            .map(|k| (0..self.len()).map(|j| self.t[(k, j)].conj() * c[j]).sum())
            .collect()
    }
}

/// `P_p(x) = Σ_j |S_j(x)|²_h`.
pub fn bergman_function(onb: &OrthonormalBasis, x: &ChartPoint) -> f64 {
    let mut s = vec![Complex64::new(0.0, 0.0); onb.len()];
    onb.section_values(x, &mut s);
    s.iter().map(|v| v.norm_sqr()).sum()
}

/// `|P_p(x, y)|_{h ⊗ h} = |Σ_j S_j(x) conj(S_j(y))|`.
pub fn bergman_kernel2(onb: &OrthonormalBasis, x: &ChartPoint, y: &ChartPoint) -> f64 {
    let mut a = vec![Complex64::new(0.0, 0.0); onb.len()];
    let mut b = a.clone();
    onb.section_values(x, &mut a);
    onb.section_values(y, &mut b);
    a.iter().zip(&b).map(|(u, v)| u * v.conj()).sum::<Complex64>().norm()
}

/// Coefficient matrix of `γ_p = (i/2π)∂∂̄ log Σ|S_j|²` at `x`, in the chart of `x`.
///
/// Uses `π H_jk = (⟨∂_jS, ∂_kS⟩Q − ⟨∂_jS, S⟩⟨S, ∂_kS⟩)/Q²` with `Q = ‖S‖²`
/// and analytic derivatives of the raw basis. Sphere points are evaluated in
/// the chart where each coordinate has modulus at most one and the matrix is
/// pulled back with the Jacobian of `w = 1/z`.
pub fn fubini_study_current(onb: &OrthonormalBasis, x: &ChartPoint) -> CMatrix {
    let model = onb.bundle().model;
    let n = model.dim();
    let y = model.canonical(x);
    let len = onb.len();
    let mut f = vec![Complex64::new(0.0, 0.0); len];
    let mut df = vec![Complex64::new(0.0, 0.0); n * len];
    onb.basis.holomorphic_jet(&y, &mut f, &mut df);
    let mut s = vec![Complex64::new(0.0, 0.0); len];
    onb.apply(&f, &mut s);
    let mut ds = vec![Complex64::new(0.0, 0.0); n * len];
    for i in 0..n {
        onb.apply(&df[i * len..(i + 1) * len], &mut ds[i * len..(i + 1) * len]);
    }
    let inner = |a: &[Complex64], b: &[Complex64]| a.iter().zip(b).map(|(u, v)| u * v.conj()).sum::<Complex64>();
    let q = inner(&s, &s).re;
    let mut h = CMatrix::zeros(n, n);
    for j in 0..n {
        let dj = &ds[j * len..(j + 1) * len];
        for k in 0..n {
            let dk = &ds[k * len..(k + 1) * len];
            h[(j, k)] = (inner(dj, dk) * q - inner(dj, &s) * inner(&s, dk)) / (PI * q * q);
        }
    }
    if !matches!(model.kind, ModelKind::FlatTorus { .. }) {
        // H_x = Jᴴ H_y J with J diagonal, J_ii = ∂y_i/∂x_i = −1/x_i² on flipped factors.
        for i in 0..n {
            if x.factor(i).0 != y.factor(i).0 {
                let jac = (-x.coords()[i].powi(2)).inv().norm();
                for k in 0..n {
                    h[(i, k)] *= jac;
                    h[(k, i)] *= jac;
                }
            }
        }
    }
    h
}
