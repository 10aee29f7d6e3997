//! Hermitian line bundles on the models and the sequences `(L_p, h_p)`.
//!
//! A bundle is a degree vector together with weight perturbations: the
//! squared norm of the standard frame is `e^{−φ}` with
//! `φ = Σ_i d_i log(1+|z_i|²) + Σ_k s_k ψ_k` on the sphere factors (and
//! `2π d y²/Im τ + Σ s_k ψ_k` on a torus), so that
//! `c₁ = Σ d_i ϑ_i + Σ s_k (i/2π)∂∂̄ψ_k`.

pub mod diophantine;
pub mod psi;

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use diophantine::{diophantine_ray, RayApproximation, RayTuple};
pub use psi::Psi;

use crate::error::{Error, Result};
use crate::geometry::{ChartPoint, KahlerModel, ModelKind, TwoForm};
use crate::linalg::{relative_eigenvalues, CMatrix};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermitianLineBundle {
    pub model: KahlerModel,
    /// Degree per factor; only the first entry is used on curves.
    pub degree: [u32; 2],
    pub potentials: Vec<(Psi, f64)>,
}

impl HermitianLineBundle {
    /// Builds the bundle and checks that its curvature is semipositive.
    ///
    /// The check first tries the certified bound `d_i − Σ|s_k| sup|∂∂̄ψ_k| ≥ 0`
    /// and falls back to scanning the pairing grid.
    pub fn new(model: KahlerModel, degree: [u32; 2], potentials: Vec<(Psi, f64)>) -> Result<Self> {
        let degree = if model.dim() == 1 { [degree[0], 0] } else { degree };
        if matches!(model.kind, ModelKind::FlatTorus { .. }) && degree[0] == 0 {
            return Err(Error::InvalidParams("torus polarization multiple must be at least 1".into()));
        }
        let potentials: Vec<(Psi, f64)> = potentials.into_iter().filter(|(p, s)| !p.is_zero() && *s != 0.0).collect();
        let bundle = Self { model, degree, potentials };
        let slack: f64 = bundle.potentials.iter().map(|(p, s)| s.abs() * p.ddc_bound(&model)).sum();
        let min_degree = (0..model.dim()).map(|i| f64::from(degree[i])).fold(f64::INFINITY, f64::min);
        if min_degree - slack < 0.0 {
            let grid = crate::geometry::QuadratureRule::for_pairing(&model).nodes;
            let low = curvature_lower_bound(&bundle, &grid)?;
            if low < 0.0 {
                return Err(Error::PositivityLost { at: "construction grid".into(), eigenvalue: low / (2.0 * PI) });
            }
        }
        Ok(bundle)
    }

    /// The positive generator: `O(1)`, `O(1,1)` or the principal polarization.
    pub fn prequantum(model: KahlerModel) -> Self {
        Self { model, degree: [1, u32::from(model.dim() == 2)], potentials: Vec::new() }
    }

    /// `O(d)` (or `O(d, e)`) with the Fubini–Study / flat weight.
    pub fn standard(model: KahlerModel, degree: [u32; 2]) -> Result<Self> {
        Self::new(model, degree, Vec::new())
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degree[..self.model.dim()]
    }

    pub fn curvature_form(&self) -> TwoForm {
        TwoForm::new(self.model, [f64::from(self.degree[0]), f64::from(self.degree[1])], self.potentials.clone())
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        if self.model != other.model {
            return Err(Error::InvalidParams("tensor product across different models".into()));
        }
        let mut potentials = self.potentials.clone();
        potentials.extend(other.potentials.iter().copied());
        Self::new(
            self.model,
            [self.degree[0] + other.degree[0], self.degree[1] + other.degree[1]],
            potentials,
        )
    }

    pub fn power(&self, k: u32) -> Result<Self> {
        Self::new(
            self.model,
            [self.degree[0] * k, self.degree[1] * k],
            self.potentials.iter().map(|(p, s)| (*p, s * f64::from(k))).collect(),
        )
    }

    /// Sum of `s_k ψ_k(x)`.
    pub fn perturbation(&self, x: &ChartPoint) -> f64 {
        self.potentials.iter().map(|(p, s)| s * p.value(&self.model, x)).sum()
    }

    /// `φ(x)` with `|e(x)|² = e^{−φ(x)}` for the standard frame of the chart.
    pub fn weight_exponent(&self, x: &ChartPoint) -> f64 {
        let base = match self.model.kind {
            ModelKind::FlatTorus { tau } => {
                let y = x.coords()[0].im;
                2.0 * PI * f64::from(self.degree[0]) * y * y / tau.im
            }
            _ => (0..self.model.dim())
                .map(|i| f64::from(self.degree[i]) * x.coords()[i].norm_sqr().ln_1p())
                .sum(),
        };
        base + self.perturbation(x)
    }

    /// Whether every potential is invariant under rotations of the spheres.
    pub fn is_rotation_invariant(&self) -> bool {
        self.potentials.iter().all(|(p, _)| p.is_rotation_invariant())
    }
}

/// Curvature matrix of `c₁(L, h)` at `x`; fails unless positive definite.
pub fn chern_curvature(bundle: &HermitianLineBundle, x: &ChartPoint) -> Result<CMatrix> {
    let h = bundle.curvature_form().matrix(x);
    let ev = relative_eigenvalues(&h, &bundle.model.reference_matrix(x))?;
    if ev[0] <= 0.0 {
        return Err(Error::PositivityLost { at: format!("{x:?}"), eigenvalue: ev[0] });
    }
    Ok(h)
}

/// `min_x 2π λ_min(c₁ relative to ϑ)` over the grid.
pub fn curvature_lower_bound(bundle: &HermitianLineBundle, grid: &[ChartPoint]) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::InvalidParams("empty grid".into()));
    }
    let form = bundle.curvature_form();
    let mins: Vec<f64> = grid
        .par_iter()
        .map(|x| relative_eigenvalues(&form.matrix(x), &bundle.model.reference_matrix(x)).map(|ev| ev[0]))
        .collect::<Result<_>>()?;
    Ok(2.0 * PI * mins.into_iter().fold(f64::INFINITY, f64::min))
}

/// `2 a_L − C`, the lower bound on the spectral gap with a caller-supplied `C`.
pub fn spectral_gap_lower_bound(bundle: &HermitianLineBundle, grid: &[ChartPoint], c: f64) -> Result<f64> {
    Ok(2.0 * curvature_lower_bound(bundle, grid)? - c)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SequenceKind {
    /// `L_p = L^p`.
    PowerRay { base: HermitianLineBundle },
    /// `L_p = ⊗ F_j^{m_{j,p}}` along an approximated ray.
    MultiRay { factors: Vec<HermitianLineBundle>, ray: RayApproximation },
    /// `L_p = O(p)` (or `O(p,p)`, or the `p`-th polarization) with weight
    /// perturbed by `p^{1−a} ψ`.
    PerturbedPower { psi: Psi, a: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleSequence {
    pub model: KahlerModel,
    pub kind: SequenceKind,
}

impl BundleSequence {
    pub fn power(base: HermitianLineBundle) -> Self {
        Self { model: base.model, kind: SequenceKind::PowerRay { base } }
    }

    pub fn perturbed(model: KahlerModel, psi: Psi, a: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::InvalidParams(format!("approximation exponent must be positive, got {a}")));
        }
        Ok(Self { model, kind: SequenceKind::PerturbedPower { psi, a } })
    }

    pub fn multi_ray(factors: Vec<HermitianLineBundle>, ray: RayApproximation) -> Result<Self> {
        let model = factors.first().ok_or_else(|| Error::InvalidParams("no ray factors".into()))?.model;
        if factors.len() != ray.ray.len() || factors.iter().any(|f| f.model != model) {
            return Err(Error::InvalidParams("ray factors do not match the ray".into()));
        }
        // c₁(F₁) must dominate a multiple of ϑ.
        let grid = crate::geometry::QuadratureRule::for_pairing(&model).nodes;
        if curvature_lower_bound(&factors[0], &grid)? <= 0.0 {
            return Err(Error::InvalidParams("first ray factor is not positive".into()));
        }
        Ok(Self { model, kind: SequenceKind::MultiRay { factors, ray } })
    }

    pub fn a_p(&self, p: u64) -> f64 {
        p as f64
    }

    /// Declared approximation exponent; `∞` for exact powers.
    pub fn exponent(&self) -> f64 {
        match &self.kind {
            SequenceKind::PowerRay { .. } => f64::INFINITY,
            SequenceKind::MultiRay { .. } => 2.0,
            SequenceKind::PerturbedPower { a, .. } => *a,
        }
    }

    pub fn limit_form(&self) -> TwoForm {
        match &self.kind {
            SequenceKind::PowerRay { base } => base.curvature_form(),
            SequenceKind::MultiRay { factors, ray } => factors
                .iter()
                .zip(&ray.ray)
                .map(|(f, r)| f.curvature_form().scaled(*r))
                .reduce(|a, b| a.sum(&b))
                .unwrap(),
            SequenceKind::PerturbedPower { .. } => HermitianLineBundle::prequantum(self.model).curvature_form(),
        }
    }

    pub fn bundle(&self, p: u64) -> Result<HermitianLineBundle> {
        let k = u32::try_from(p).map_err(|_| Error::InvalidParams(format!("p = {p} too large")))?;
        match &self.kind {
            SequenceKind::PowerRay { base } => base.power(k),
            SequenceKind::MultiRay { factors, ray } => {
                let tuple = ray
                    .tuple(p)
                    .ok_or_else(|| Error::InvalidParams(format!("p = {p} is not on the approximated ray")))?;
                let mut out: Option<HermitianLineBundle> = None;
                for (f, m) in factors.iter().zip(&tuple.m) {
                    let piece = f.power(*m as u32)?;
                    out = Some(match out {
                        None => piece,
                        Some(acc) => acc.tensor(&piece)?,
                    });
                }
                Ok(out.unwrap())
            }
            SequenceKind::PerturbedPower { psi, a } => {
                let base = HermitianLineBundle::prequantum(self.model).power(k)?;
                let scale = (p as f64).powf(1.0 - a);
                HermitianLineBundle::new(self.model, base.degree, vec![(*psi, scale)])
            }
        }
    }
}

/// `max_x ‖A_p⁻¹ H_{c₁} − H_ω‖` measured against `H_ϑ`.
pub fn approximation_defect(seq: &BundleSequence, p: u64, grid: &[ChartPoint]) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::InvalidParams("empty grid".into()));
    }
    let bundle = seq.bundle(p)?;
    let c1 = bundle.curvature_form();
    let omega = seq.limit_form();
    let a = seq.a_p(p);
    let norms: Vec<f64> = grid
        .par_iter()
        .map(|x| {
            let diff = c1.matrix(x) / num_complex::Complex64::new(a, 0.0) - omega.matrix(x);
            let ev = relative_eigenvalues(&diff, &seq.model.reference_matrix(x))?;
            Ok(ev.iter().fold(0.0f64, |m, v| m.max(v.abs())))
        })
        .collect::<Result<_>>()?;
    Ok(norms.into_iter().fold(0.0, f64::max))
}
