//! Gram matrices `G_jk = ⟨f_j, f_k⟩` and their whitening.

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::basis::SectionBasis;
use crate::bundles::HermitianLineBundle;
use crate::error::{Error, Result};
use crate::geometry::{ChartPoint, KahlerModel, ModelKind, QuadratureRule, RuleLayout};
use crate::linalg::{hermitian_defect, hermitian_eigenvalues, hermitize, CMatrix};

pub const CHOLESKY_LIMIT: f64 = 1e6;
pub const CONDITION_LIMIT: f64 = 1e8;
/// Largest quadrature rule `gram_for_bundle` will build (about 1 GB).
pub const MAX_RULE_NODES: usize = 20_000_000;

#[derive(Clone, Debug)]
pub struct GramMatrix {
    pub matrix: CMatrix,
    /// Condition number of the Jacobi-scaled matrix `D^{-1/2} G D^{-1/2}`.
    pub condition: f64,
    pub rule_nodes: usize,
    pub declared_degree: usize,
    /// `max |G_refined − G|` when the Gram was recomputed on a refined rule.
    pub error_estimate: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WhiteningMethod {
    Cholesky,
    Eigen,
}

pub fn gram_matrix(basis: &SectionBasis, rule: &QuadratureRule) -> Result<GramMatrix> {
    let required = basis.required_degree();
    if rule.declared_degree < required {
        return Err(Error::RuleTooCoarse { declared: rule.declared_degree, required });
    }
    let matrix = assemble(basis, rule)?;
    finish(matrix, rule)
}

fn finish(matrix: CMatrix, rule: &QuadratureRule) -> Result<GramMatrix> {
    let scale = matrix.diagonal().map(|v| v.re).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if hermitian_defect(&matrix) > 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotPositive("gram matrix is not Hermitian".into()));
    }
    let condition = scaled_condition(&matrix)?;
    if condition > CONDITION_LIMIT {
        return Err(Error::IllConditioned { condition });
    }
    Ok(GramMatrix {
        matrix,
        condition,
        rule_nodes: rule.len(),
        declared_degree: rule.declared_degree,
        error_estimate: None,
    })
}

/// Gram matrix on the default rule; perturbed weights are recomputed on the
/// rule with doubled node counts, which is returned together with the
/// difference between the two as error estimate.
pub fn gram_for_bundle(basis: &SectionBasis) -> Result<GramMatrix> {
    let levels = u32::from(!basis.bundle.potentials.is_empty());
    let planned = QuadratureRule::planned_len(&basis.bundle.model, basis.bundle.degrees(), levels);
    if planned > MAX_RULE_NODES {
        return Err(Error::InvalidParams(format!(
            "degrees {:?} need a {planned}-node quadrature rule, above the limit of {MAX_RULE_NODES}",
            basis.bundle.degrees()
        )));
    }
    let rule = QuadratureRule::for_degree(&basis.bundle.model, basis.bundle.degrees());
    let coarse = gram_matrix(basis, &rule)?;
    if basis.bundle.potentials.is_empty() {
        return Ok(coarse);
    }
    let fine_rule = rule.refined();
    let mut fine = gram_matrix(basis, &fine_rule)?;
    fine.error_estimate = Some((&fine.matrix - &coarse.matrix).iter().fold(0.0f64, |m, v| m.max(v.norm())));
    Ok(fine)
}

fn is_diagonal(m: &CMatrix) -> bool {
    (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)] == Complex64::new(0.0, 0.0)))
}

fn jacobi_scaled(g: &CMatrix) -> Result<(DVector<f64>, CMatrix)> {
    let diag = g.diagonal().map(|v| v.re);
    if let Some(i) = diag.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::NotPositive(format!("diagonal entry {i} is {}", diag[i])));
    }
    let inv_sqrt = diag.map(|v| 1.0 / v.sqrt());
    let mut scaled = g.clone();
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            scaled[(i, j)] *= inv_sqrt[i] * inv_sqrt[j];
        }
    }
    Ok((inv_sqrt, hermitize(&scaled)))
}

fn scaled_condition(g: &CMatrix) -> Result<f64> {
    let (_, scaled) = jacobi_scaled(g)?;
    if is_diagonal(&scaled) {
        return Ok(1.0);
    }
    let ev = hermitian_eigenvalues(&scaled);
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    if !(lo > 0.0) {
        return Err(Error::NotPositive(format!("smallest scaled eigenvalue {lo:e}")));
    }
    Ok(hi / lo)
}

/// Whitening transform `T` with `Tᴴ G T = I`: `D^{-1/2} L^{-H}` from the
/// Cholesky factor of the Jacobi-scaled Gram when its condition is below
/// `10⁶`, otherwise `D^{-1/2} U Λ^{-1/2}` from its eigendecomposition.
pub fn whitening(g: &GramMatrix) -> Result<(CMatrix, WhiteningMethod, bool)> {
    let (inv_sqrt, scaled) = jacobi_scaled(&g.matrix)?;
    let n = scaled.nrows();
    if is_diagonal(&g.matrix) {
        let t = CMatrix::from_diagonal(&inv_sqrt.map(Complex64::from));
        return Ok((t, WhiteningMethod::Cholesky, true));
    }
    let d = CMatrix::from_diagonal(&inv_sqrt.map(Complex64::from));
    if g.condition < CHOLESKY_LIMIT {
        let chol = scaled.cholesky().ok_or_else(|| Error::NotPositive("Cholesky factorization failed".into()))?;
        let mut linv_h = CMatrix::identity(n, n);
        chol.l().adjoint().solve_upper_triangular_mut(&mut linv_h);
        return Ok((d * linv_h, WhiteningMethod::Cholesky, false));
    }
    let eig = scaled.symmetric_eigen();
    if let Some(v) = eig.eigenvalues.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::NotPositive(format!("scaled eigenvalue {v:e}")));
    }
    let mut u = eig.eigenvectors;
    for (j, lam) in eig.eigenvalues.iter().enumerate() {
        let f = Complex64::new(1.0 / lam.sqrt(), 0.0);
        for v in u.column_mut(j).iter_mut() {
            *v *= f;
        }
    }
    Ok((d * u, WhiteningMethod::Eigen, false))
}

fn assemble(basis: &SectionBasis, rule: &QuadratureRule) -> Result<CMatrix> {
    let bundle = &basis.bundle;
    match (&bundle.model.kind, &rule.layout) {
        (ModelKind::ProjectiveLine, RuleLayout::Polar { s, s_weights, n_theta }) => {
            Ok(polar_gram(bundle, rule, s, s_weights, *n_theta))
        }
        (ModelKind::ProjectiveProduct, RuleLayout::Tensor { first, second })
            if matches!(first.layout, RuleLayout::Polar { .. }) && matches!(second.layout, RuleLayout::Polar { .. }) =>
        {
            // The catalog potentials split as ψ(z) + ψ(w), so the weight and
            // the Gram matrix factor.
            let line = KahlerModel::projective_line();
            let factor = |d: u32| HermitianLineBundle {
                model: line,
                degree: [d, 0],
                potentials: bundle.potentials.clone(),
            };
            let g1 = assemble(&super::basis::raw_basis(&factor(bundle.degree[0])), first)?;
            let g2 = assemble(&super::basis::raw_basis(&factor(bundle.degree[1])), second)?;
            Ok(g1.kronecker(&g2))
        }
        _ => generic_gram(basis, rule),
    }
}

/// Sphere Gram in the variables `s = |z|²/(1+|z|²)` and `θ = arg z`:
/// `|z^j z̄^k| (1+|z|²)^{-d} = ρ_j ρ_k` with `ρ_j = s^{j/2}(1−s)^{(d−j)/2}`,
/// and the angular integral of the perturbation is a Fourier coefficient.
fn polar_gram(bundle: &HermitianLineBundle, rule: &QuadratureRule, s: &[f64], s_weights: &[f64], n_theta: usize) -> CMatrix {
    let d = bundle.degree[0] as usize;
    let n = d + 1;
    let radial = bundle.is_rotation_invariant();
    let rows: Vec<(Vec<f64>, Vec<Complex64>)> = s
        .par_iter()
        .enumerate()
        .map(|(i, &si)| {
            let (ls, l1s) = (si.ln(), (1.0 - si).ln());
            let rho: Vec<f64> = (0..n).map(|j| (0.5 * j as f64 * ls + 0.5 * (d - j) as f64 * l1s).exp()).collect();
            let nodes = &rule.nodes[i * n_theta..(i + 1) * n_theta];
            let coeffs = if radial {
                vec![Complex64::new((-bundle.perturbation(&nodes[0])).exp(), 0.0)]
            } else {
                let mut buf: Vec<Complex64> =
                    nodes.iter().map(|x| Complex64::new((-bundle.perturbation(x)).exp(), 0.0)).collect();
                FftPlanner::new().plan_fft_inverse(n_theta).process(&mut buf);
                buf.iter().map(|c| c / n_theta as f64).collect()
            };
            (rho, coeffs)
        })
        .collect();
    let mut g = CMatrix::zeros(n, n);
    if radial {
        for j in 0..n {
            let terms: Vec<f64> = rows.iter().zip(s_weights).map(|((rho, c), w)| w * rho[j] * rho[j] * c[0].re).collect();
            g[(j, j)] = crate::geometry::quadrature::pairwise_sum_real(&terms).into();
        }
        return g;
    }
    let entries: Vec<Complex64> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (j, k) = (idx / n, idx % n);
            let m = (j as i64 - k as i64).rem_euclid(n_theta as i64) as usize;
            let terms: Vec<Complex64> = rows
                .iter()
                .zip(s_weights)
                .map(|((rho, c), w)| c[m] * (w * rho[j] * rho[k]))
                .collect();
            crate::geometry::quadrature::pairwise_sum(&terms)
        })
        .collect();
    for (idx, v) in entries.into_iter().enumerate() {
        g[(idx / n, idx % n)] = v;
    }
    hermitize(&g)
}

fn generic_gram(basis: &SectionBasis, rule: &QuadratureRule) -> Result<CMatrix> {
    const CHUNK: usize = 2048;
    let n = basis.len();
    let partials: Vec<Result<CMatrix>> = rule
        .nodes
        .par_chunks(CHUNK)
        .zip(rule.weights.par_chunks(CHUNK))
        .enumerate()
        .map(|(c, (nodes, weights))| {
            let mut a = CMatrix::zeros(nodes.len(), n);
            let mut row = vec![Complex64::new(0.0, 0.0); n];
            for (r, (x, w)) in nodes.iter().zip(weights).enumerate() {
                basis.weighted_values(x, &mut row);
                let sw = w.sqrt();
                for (j, v) in row.iter().enumerate() {
                    if !v.re.is_finite() || !v.im.is_finite() {
                        return Err(Error::NonFiniteIntegrand { node: c * CHUNK + r });
                    }
                    a[(r, j)] = v * sw;
                }
            }
            Ok(a.transpose() * a.conjugate())
        })
        .collect();
    let mut g = CMatrix::zeros(n, n);
    for part in partials {
        g += part?;
    }
    Ok(hermitize(&g))
}

/// Sample points for sup-norm scans; uses the pairing rule's nodes.
pub fn scan_grid(model: &KahlerModel) -> Vec<ChartPoint> {
    QuadratureRule::for_pairing(model).nodes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bergman::basis::raw_basis;
    use crate::bundles::Psi;

    fn beta(j: u32, p: u32) -> f64 {
        // j!(p−j)!/(p+1)!
        let lg = |x: f64| statrs::function::gamma::ln_gamma(x);
        (lg(f64::from(j) + 1.0) + lg(f64::from(p - j) + 1.0) - lg(f64::from(p) + 2.0)).exp()
    }

    #[test]
    fn sphere_gram_matches_beta_oracle() {
        let line = KahlerModel::projective_line();
        for p in [1u32, 3, 17, 60] {
            let b = raw_basis(&HermitianLineBundle::standard(line, [p, 0]).unwrap());
            let g = gram_for_bundle(&b).unwrap();
            for j in 0..=p {
                let expected = beta(j, p);
                assert!(((g.matrix[(j as usize, j as usize)].re - expected) / expected).abs() < 1e-10);
            }
        }
        let b = raw_basis(&HermitianLineBundle::standard(line, [3, 0]).unwrap());
        let g = gram_for_bundle(&b).unwrap();
        let expected = [0.25, 1.0 / 12.0, 1.0 / 12.0, 0.25];
        for (j, e) in expected.iter().enumerate() {
            assert!((g.matrix[(j, j)].re - e).abs() < 1e-15);
        }
    }

    #[test]
    fn fast_paths_agree_with_generic_assembly() {
        let line = KahlerModel::projective_line();
        for psi in [Psi::Bump1, Psi::Re1] {
            let bundle = HermitianLineBundle::new(line, [5, 0], vec![(psi, 0.4)]).unwrap();
            let basis = raw_basis(&bundle);
            let rule = QuadratureRule::polar(40, 40);
            let fast = assemble(&basis, &rule).unwrap();
            let slow = generic_gram(&basis, &rule).unwrap();
            assert!((fast - slow).norm() < 1e-13, "{psi:?}");
        }
        let prod = KahlerModel::projective_product();
        let bundle = HermitianLineBundle::new(prod, [2, 3], vec![(Psi::Re1, 0.3)]).unwrap();
        let basis = raw_basis(&bundle);
        let rule = QuadratureRule::tensor(QuadratureRule::polar(14, 14), QuadratureRule::polar(16, 16));
        let fast = assemble(&basis, &rule).unwrap();
        let slow = generic_gram(&basis, &rule).unwrap();
        assert!((fast - slow).norm() < 1e-13);
    }

    #[test]
    fn coarse_rule_is_rejected() {
        let line = KahlerModel::projective_line();
        let b = raw_basis(&HermitianLineBundle::standard(line, [10, 0]).unwrap());
        let err = gram_matrix(&b, &QuadratureRule::polar(6, 6)).unwrap_err();
        assert_eq!(err, Error::RuleTooCoarse { declared: 5, required: 10 });
    }

    #[test]
    fn oversized_rule_is_refused_before_allocation() {
        let model = KahlerModel::projective_product();
        for degrees in [[3u32, 2], [5, 5]] {
            let rule = QuadratureRule::for_degree(&model, &degrees);
            assert_eq!(QuadratureRule::planned_len(&model, &degrees, 0), rule.len());
            assert_eq!(QuadratureRule::planned_len(&model, &degrees, 1), rule.refined().len());
        }
        let bundle = HermitianLineBundle::new(model, [70, 111], vec![(Psi::Re1, 1.0)]).unwrap();
        assert!(matches!(gram_for_bundle(&raw_basis(&bundle)), Err(Error::InvalidParams(_))));
    }
}
