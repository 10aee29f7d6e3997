//! Random sections, their zero sets, and pairings of zero currents and
//! Fubini–Study currents against smooth test forms.

pub mod forms;
pub mod resultant;
pub mod roots;
pub mod sampling;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::bergman::{fubini_study_current, OrthonormalBasis};
use crate::bundles::BundleSequence;
use crate::error::{Error, Result};
use crate::geometry::quadrature::pairwise_sum_real;
use crate::geometry::{integrate_real, ChartPoint, KahlerModel, ModelKind, QuadratureRule, TwoForm};
use crate::linalg::{hermitian_det, CMatrix};

pub use forms::TestForm;
pub use roots::SpherePoint;
pub use sampling::{sample_section, stream, SectionSample};

/// Chordal distance below which roots are merged into one with multiplicity.
pub const MERGE_TOL: f64 = 1e-8;

/// Zeros of one section (`m = n = 1`) or common zeros of two (`m = n = 2`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroSet {
    pub points: Vec<ChartPoint>,
    pub multiplicities: Vec<u32>,
    pub expected_total: u32,
    /// Largest normalized section modulus at a reported zero.
    pub residual: f64,
}

impl ZeroSet {
    pub fn total(&self) -> u32 {
        self.multiplicities.iter().sum()
    }

    /// `⟨[Z], φ⟩ = Σ mult·φ(x_i)`.
    pub fn pairing_sum(&self, model: &KahlerModel, form: TestForm) -> f64 {
        self.points
            .iter()
            .zip(&self.multiplicities)
            .map(|(x, m)| f64::from(*m) * form.value(model, x))
            .sum()
    }
}

/// One measured value of `⟨A_p^{−m}[s=0] − ω^m, φ⟩`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyRecord {
    pub p: u64,
    pub a_p: f64,
    pub m: usize,
    pub form: TestForm,
    pub seed: u64,
    pub index: u64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExceptionalSetEstimate {
    pub p: u64,
    pub epsilon: f64,
    pub samples: usize,
    pub exceptional: usize,
    pub fraction: f64,
    /// Wilson score interval at 95%.
    pub interval: (f64, f64),
}

impl ExceptionalSetEstimate {
    pub fn new(p: u64, epsilon: f64, samples: usize, exceptional: usize) -> Self {
        let n = samples as f64;
        let fraction = exceptional as f64 / n;
        let z = 1.959_963_984_540_054;
        let denom = 1.0 + z * z / n;
        let centre = (fraction + z * z / (2.0 * n)) / denom;
        let half = z * (fraction * (1.0 - fraction) / n + z * z / (4.0 * n * n)).sqrt() / denom;
        let interval = ((centre - half).max(0.0).min(fraction), (centre + half).min(1.0).max(fraction));
        Self { p, epsilon, samples, exceptional, fraction, interval }
    }
}

/// Bookkeeping quantities of the multi-projective sampling space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Combinatorics {
    pub d_p: usize,
    pub d_pm: usize,
    pub c_pm: f64,
    pub delta1: f64,
    pub delta2: f64,
}

/// `c_{p,m} = ((d_p−1)!)^{m/d_{p,m}} / (d_{p,m}!)^{1/d_{p,m}}` with
/// `d_{p,m} = m(d_p − 1)`, via log-gamma.
pub fn c_pm(d_p: usize, m: usize) -> f64 {
    let d_pm = m * (d_p - 1);
    if d_pm == 0 {
        return 1.0;
    }
    let n = d_pm as f64;
    ((m as f64 * ln_gamma(d_p as f64) - ln_gamma(n + 1.0)) / n).exp()
}

/// `∫ c₁(L)^k ∧ ϑ^{n−k}` for a bundle of the given degree.
pub fn degree_integral(model: &KahlerModel, degree: [u32; 2], k: usize) -> f64 {
    let d = f64::from(degree[0]);
    let e = f64::from(degree[1]);
    match (model.kind, k) {
        (ModelKind::ProjectiveProduct, 0) => 2.0,
        (ModelKind::ProjectiveProduct, 1) => d + e,
        (ModelKind::ProjectiveProduct, _) => 2.0 * d * e,
        (_, 0) => 1.0,
        (_, _) => d,
    }
}

pub fn combinatorics(seq: &BundleSequence, p: u64, m: usize) -> Result<Combinatorics> {
    let n = seq.model.dim();
    if p == 0 || m == 0 || m > n {
        return Err(Error::InvalidParams(format!("need p ≥ 1 and 1 ≤ m ≤ {n}")));
    }
    let bundle = seq.bundle(p)?;
    let d_p = crate::bergman::basis::dimension(&bundle);
    let c = c_pm(d_p, m);
    Ok(Combinatorics {
        d_p,
        d_pm: m * (d_p - 1),
        c_pm: c,
        delta1: degree_integral(&seq.model, bundle.degree, m),
        delta2: degree_integral(&seq.model, bundle.degree, m - 1) / c,
    })
}

/// Density of `α₁ ∧ … ∧ α_m ∧ ϑ^{n−m}` with respect to the volume form,
/// for `n ≤ 2`. Equal arguments give `m!(n−m)! e_m(H_ϑ⁻¹H_α)`; distinct
/// ones follow by polarization.
pub fn wedge_density(mats: &[CMatrix], theta: &CMatrix) -> f64 {
    let n = theta.nrows();
    match (n, mats.len()) {
        (_, 0) => (1..=n).product::<usize>() as f64,
        (1, 1) => mats[0][(0, 0)].re / theta[(0, 0)].re,
        (2, 1) => {
            let inv = theta.clone().try_inverse().expect("reference matrix is invertible");
            (inv * &mats[0]).trace().re
        }
        (2, 2) => {
            let det_t = hermitian_det(theta);
            let sum = &mats[0] + &mats[1];
            (hermitian_det(&sum) - hermitian_det(&mats[0]) - hermitian_det(&mats[1])) / det_t
        }
        _ => panic!("wedge of {} forms in dimension {n}", mats.len()),
    }
}

/// `∫ φ ω^m ∧ ϑ^{n−m}` by quadrature.
pub fn form_mass(omega: &TwoForm, form: TestForm, m: usize) -> Result<f64> {
    let model = omega.model;
    let rule = QuadratureRule::for_pairing(&model);
    integrate_real(
        &model,
        |x| {
            let h = omega.matrix(x);
            let mats = vec![h; m];
            form.value(&model, x) * wedge_density(&mats, &model.reference_matrix(x))
        },
        &rule,
    )
}

/// `A_p^{−m} Σ mult·φ(x_i) − ∫ φ ω^m`.
pub fn pair_zero_current(zeros: &ZeroSet, form: TestForm, a_p: f64, m: usize, omega: &TwoForm) -> Result<f64> {
    let mass = form_mass(omega, form, m)?;
    Ok(zeros.pairing_sum(&omega.model, form) / a_p.powi(m as i32) - mass)
}

/// `∫ (γ₁ ∧ … ∧ γ_m / A_p^m − ω^m) ∧ φ ϑ^{n−m}` with `γ_i` the
/// Fubini–Study currents of the given bases and `m` the number of bases.
pub fn fs_current_pairing(onbs: &[&OrthonormalBasis], form: TestForm, a_p: f64, omega: &TwoForm) -> Result<f64> {
    let model = omega.model;
    let m = onbs.len();
    if m == 0 || m > model.dim() || onbs.iter().any(|o| o.bundle().model != model) {
        return Err(Error::InvalidParams("need 1 ≤ m ≤ n bases on the model of ω".into()));
    }
    let rule = QuadratureRule::for_pairing(&model);
    let scale = Complex64::new(1.0 / a_p, 0.0);
    integrate_real(
        &model,
        |x| {
            let theta = model.reference_matrix(x);
            let gammas: Vec<CMatrix> = onbs.iter().map(|o| fubini_study_current(o, x) * scale).collect();
            let omegas = vec![omega.matrix(x); m];
            form.value(&model, x) * (wedge_density(&gammas, &theta) - wedge_density(&omegas, &theta))
        },
        &rule,
    )
}

fn bideg(onb: &OrthonormalBasis) -> (usize, usize) {
    let d = onb.bundle().degree;
    (d[0] as usize, d[1] as usize)
}

/// Zeros on the projective line of `Σ c_j S_j`, with multiplicity; roots at
/// infinity account for the degree drop of the monomial expansion.
pub fn zeros_cp1(onb: &OrthonormalBasis, sample: &SectionSample) -> Result<ZeroSet> {
    let model = onb.bundle().model;
    if model.kind != ModelKind::ProjectiveLine {
        return Err(Error::InvalidParams("zeros_cp1 needs the projective line".into()));
    }
    if sample.coefficients.len() != onb.len() {
        return Err(Error::InvalidParams("sample dimension does not match the basis".into()));
    }
    if sample.coefficients.iter().all(|c| c.norm() == 0.0) {
        return Err(Error::ZeroSection);
    }
    let raw = onb.to_raw_coefficients(&sample.coefficients);
    let scale: Vec<f64> = (0..raw.len()).map(|j| onb.gram.matrix[(j, j)].re.sqrt()).collect();
    if raw.iter().zip(&scale).all(|(a, s)| a.norm() * s == 0.0) {
        return Err(Error::ZeroSection);
    }
    let found = roots::sphere_roots(&raw, &scale, 1e-15, MERGE_TOL);
    let mut s = vec![Complex64::new(0.0, 0.0); onb.len()];
    let mut residual = 0.0f64;
    let mut points = Vec::with_capacity(found.len());
    let mut multiplicities = Vec::with_capacity(found.len());
    for (pt, mult) in found {
        let x = pt.chart_point();
        onb.section_values(&x, &mut s);
        let v: Complex64 = s.iter().zip(&sample.coefficients).map(|(a, b)| a * b).sum();
        residual = residual.max(v.norm());
        points.push(x);
        multiplicities.push(mult);
    }
    Ok(ZeroSet { points, multiplicities, expected_total: bideg(onb).0 as u32, residual })
}

/// Bihomogeneous polynomial `Σ a[j][k] z^j w^k` evaluated in a product chart.
struct Bipoly<'a> {
    a: &'a [Vec<Complex64>],
}

impl Bipoly<'_> {
    fn degrees(&self) -> (usize, usize) {
        (self.a.len() - 1, self.a[0].len() - 1)
    }

    fn coef(&self, cz: u8, cw: u8, j: usize, k: usize) -> Complex64 {
        let (d, e) = self.degrees();
        let jj = if cz == 0 { j } else { d - j };
        let kk = if cw == 0 { k } else { e - k };
        self.a[jj][kk]
    }

    /// Polynomial in the second variable at a fixed first coordinate.
    fn in_w(&self, cz: u8, z: Complex64) -> Vec<Complex64> {
        let (d, e) = self.degrees();
        (0..=e)
            .map(|k| {
                let mut v = Complex64::new(0.0, 0.0);
                for j in (0..=d).rev() {
                    v = v * z + self.coef(cz, 0, j, k);
                }
                v
            })
            .collect()
    }

    /// Value and partial derivatives in chart `(cz, cw)`.
    fn jet(&self, cz: u8, cw: u8, z: Complex64, w: Complex64) -> (Complex64, Complex64, Complex64) {
        let (d, e) = self.degrees();
        let zero = Complex64::new(0.0, 0.0);
        let (mut v, mut vz, mut vw) = (zero, zero, zero);
        // Horner in z of polynomials in w.
        for j in (0..=d).rev() {
            let (mut p, mut dp) = (zero, zero);
            for k in (0..=e).rev() {
                dp = dp * w + p;
                p = p * w + self.coef(cz, cw, j, k);
            }
            vz = vz * z + v;
            v = v * z + p;
            vw = vw * z + dp;
        }
        (v, vz, vw)
    }

    /// `|f| / ((1+|z|²)^{d/2}(1+|w|²)^{e/2} ‖a‖)`, a chart-independent size.
    fn normalized(&self, cz: u8, cw: u8, z: Complex64, w: Complex64) -> f64 {
        let (d, e) = self.degrees();
        let norm = self.a.iter().flatten().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let (v, _, _) = self.jet(cz, cw, z, w);
        v.norm() / ((1.0 + z.norm_sqr()).powf(d as f64 / 2.0) * (1.0 + w.norm_sqr()).powf(e as f64 / 2.0) * norm)
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)).exp()
}

fn coefficient_grid(onb: &OrthonormalBasis, c: &[Complex64]) -> Vec<Vec<Complex64>> {
    let (d, e) = bideg(onb);
    let raw = onb.to_raw_coefficients(c);
    (0..=d).map(|j| raw[j * (e + 1)..(j + 1) * (e + 1)].to_vec()).collect()
}

/// Common zeros of two sections of a bidegree `(d, e)` bundle on the product
/// of projective lines, found through the resultant in `w`.
pub fn common_zeros_p1xp1(onb: &OrthonormalBasis, s1: &SectionSample, s2: &SectionSample) -> Result<ZeroSet> {
    let model = onb.bundle().model;
    if model.kind != ModelKind::ProjectiveProduct {
        return Err(Error::InvalidParams("common_zeros_p1xp1 needs the product of projective lines".into()));
    }
    for s in [s1, s2] {
        if s.coefficients.len() != onb.len() {
            return Err(Error::InvalidParams("sample dimension does not match the basis".into()));
        }
        if s.coefficients.iter().all(|c| c.norm() == 0.0) {
            return Err(Error::ZeroSection);
        }
    }
    let (d, e) = bideg(onb);
    if d == 0 || e == 0 {
        return Err(Error::InvalidParams("common zeros need positive bidegree".into()));
    }
    let a1 = coefficient_grid(onb, &s1.coefficients);
    let a2 = coefficient_grid(onb, &s2.coefficients);
    common_zeros_of(&a1, &a2)
}

/// Common zeros of two bihomogeneous polynomials given by coefficient grids
/// `a[j][k]` of `z^j w^k`.
pub fn common_zeros_of(a1: &[Vec<Complex64>], a2: &[Vec<Complex64>]) -> Result<ZeroSet> {
    let f1 = Bipoly { a: a1 };
    let f2 = Bipoly { a: a2 };
    let (d, e) = f1.degrees();
    let total = 2 * d * e;
    let (res, exact) = resultant::resultant_in_w(a1, a2)?;
    let scale: Vec<f64> = (0..=total).map(|i| 1.0 / binomial(total, i).sqrt()).collect();
    let zero_tol = if exact { 0.0 } else { 1e-12 };
    let z_roots = roots::sphere_roots(&res, &scale, zero_tol, MERGE_TOL);

    let mut found: Vec<(ChartPoint, u32)> = Vec::with_capacity(z_roots.len());
    for (zp, mult) in z_roots {
        let (cz, z) = (zp.chart, zp.coord);
        let g1 = f1.in_w(cz, z);
        let w_scale: Vec<f64> = (0..=e).map(|k| binomial(e, k).sqrt().recip()).collect();
        let candidates = if g1.iter().all(|c| c.norm() == 0.0) {
            // f1 vanishes on the whole fibre; the second section picks w.
            roots::sphere_roots(&f2.in_w(cz, z), &w_scale, 1e-14, MERGE_TOL)
        } else {
            roots::sphere_roots(&g1, &w_scale, 1e-14, MERGE_TOL)
        };
        let best = candidates
            .iter()
            .map(|(wp, _)| (*wp, f2.normalized(cz, wp.chart, z, wp.coord)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or(Error::DegeneratePair)?
            .0;
        let (z, w, cw) = newton2(&f1, &f2, cz, best.chart, z, best.coord);
        let (cz, z) = recenter(cz, z);
        let (cw, w) = recenter(cw, w);
        found.push((ChartPoint::product(cz | (cw << 1), z, w), mult));
    }

    // Merge points whose factors are both within the tolerance.
    let mut points: Vec<ChartPoint> = Vec::new();
    let mut multiplicities: Vec<u32> = Vec::new();
    for (x, m) in found {
        let close = |y: &ChartPoint| {
            (0..2).all(|i| {
                let (ca, a) = x.factor(i);
                let (cb, b) = y.factor(i);
                SpherePoint { chart: ca, coord: a }.chordal(&SpherePoint { chart: cb, coord: b }) < MERGE_TOL
            })
        };
        if let Some(i) = points.iter().position(close) {
            multiplicities[i] += m;
        } else {
            points.push(x);
            multiplicities.push(m);
        }
    }
    let residual = points
        .iter()
        .map(|x| {
            let (cz, z) = x.factor(0);
            let (cw, w) = x.factor(1);
            f1.normalized(cz, cw, z, w).max(f2.normalized(cz, cw, z, w))
        })
        .fold(0.0, f64::max);
    Ok(ZeroSet { points, multiplicities, expected_total: total as u32, residual })
}

fn recenter(chart: u8, c: Complex64) -> (u8, Complex64) {
    if c.norm_sqr() > 1.0 {
        (1 - chart, c.inv())
    } else {
        (chart, c)
    }
}

/// Two-variable Newton iteration in a fixed chart; steps that grow the
/// residual are rejected.
fn newton2(f1: &Bipoly, f2: &Bipoly, cz: u8, cw: u8, z: Complex64, w: Complex64) -> (Complex64, Complex64, u8) {
    let size = |z: Complex64, w: Complex64| f1.normalized(cz, cw, z, w).max(f2.normalized(cz, cw, z, w));
    let (mut z, mut w) = (z, w);
    let mut current = size(z, w);
    for _ in 0..30 {
        let (v1, a, b) = f1.jet(cz, cw, z, w);
        let (v2, c, d) = f2.jet(cz, cw, z, w);
        let det = a * d - b * c;
        if det.norm() == 0.0 {
            break;
        }
        let dz = (d * v1 - b * v2) / det;
        let dw = (a * v2 - c * v1) / det;
        let (nz, nw) = (z - dz, w - dw);
        let next = size(nz, nw);
        if !(next < current) {
            break;
        }
        z = nz;
        w = nw;
        current = next;
        if dz.norm() + dw.norm() < 1e-16 * (1.0 + z.norm() + w.norm()) {
            break;
        }
    }
    (z, w, cw)
}

/// Zero-set experiment for one bundle of a sequence with `m = n`: caches the
/// orthonormal basis, the test-form norms and the limit masses.
#[derive(Clone, Debug)]
pub struct ZeroExperiment {
    pub seq: BundleSequence,
    pub p: u64,
    pub m: usize,
    pub a_p: f64,
    pub onb: OrthonormalBasis,
    pub forms: Vec<TestForm>,
    pub norms: Vec<f64>,
    /// `∫ φ ω^m` per form.
    pub omega_mass: Vec<f64>,
    /// `∫ φ γ_p^m` per form (unnormalized).
    pub gamma_mass: Vec<f64>,
}

/// Everything measured on one sample of a [`ZeroExperiment`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub index: u64,
    pub records: Vec<DiscrepancyRecord>,
    /// `max_φ |⟨[s=0] − γ_p^m, φ⟩| / (‖φ‖_{C²} A_p^m)`.
    pub deviation: f64,
    pub total: u32,
    pub expected_total: u32,
    pub residual: f64,
}

/// Resampling attempts before a degenerate pair is reported.
const MAX_ATTEMPTS: u64 = 16;

impl ZeroExperiment {
    pub fn new(seq: &BundleSequence, p: u64) -> Result<Self> {
        let model = seq.model;
        if matches!(model.kind, ModelKind::FlatTorus { .. }) {
            return Err(Error::InvalidParams(
                "zero sets are computed on the projective line and the product of projective lines".into(),
            ));
        }
        let m = model.dim();
        let bundle = seq.bundle(p)?;
        let onb = OrthonormalBasis::for_bundle(&bundle)?;
        let forms = TestForm::ALL.to_vec();
        let norms = forms.iter().map(|f| f.c2_norm(&model)).collect();
        let omega = seq.limit_form();
        let omega_mass = forms.iter().map(|f| form_mass(&omega, *f, m)).collect::<Result<Vec<_>>>()?;
        let rule = QuadratureRule::for_pairing(&model);
        let gamma_density: Vec<f64> = rule
            .nodes
            .par_iter()
            .map(|x| {
                let g = fubini_study_current(&onb, x);
                wedge_density(&vec![g; m], &model.reference_matrix(x))
            })
            .collect();
        let gamma_mass = forms
            .iter()
            .map(|f| {
                let terms: Vec<f64> = rule
                    .nodes
                    .iter()
                    .zip(&rule.weights)
                    .zip(&gamma_density)
                    .map(|((x, w), g)| w * f.value(&model, x) * g)
                    .collect();
                pairwise_sum_real(&terms)
            })
            .collect();
        Ok(Self { seq: seq.clone(), p, m, a_p: seq.a_p(p), onb, forms, norms, omega_mass, gamma_mass })
    }

    /// Zero set of sample `index`; on the product a degenerate pair is
    /// replaced by the next pair of sub-streams.
    pub fn zeros(&self, seed: u64, index: u64) -> Result<ZeroSet> {
        let dim = self.onb.len();
        if self.m == 1 {
            let s = sample_section(dim, seed, self.p, index, 0);
            return zeros_cp1(&self.onb, &s);
        }
        for attempt in 0..MAX_ATTEMPTS {
            let s1 = sample_section(dim, seed, self.p, index, 2 * attempt);
            let s2 = sample_section(dim, seed, self.p, index, 2 * attempt + 1);
            match common_zeros_p1xp1(&self.onb, &s1, &s2) {
                Err(Error::DegeneratePair) => continue,
                other => return other,
            }
        }
        Err(Error::DegeneratePair)
    }

    /// Records of `⟨A_p^{−m}[s=0] − ω^m, φ⟩` for every catalog form.
    pub fn records_for(&self, seed: u64, index: u64, zeros: &ZeroSet) -> Vec<DiscrepancyRecord> {
        let model = self.seq.model;
        let norm = self.a_p.powi(self.m as i32);
        self.forms
            .iter()
            .zip(&self.omega_mass)
            .map(|(f, mass)| DiscrepancyRecord {
                p: self.p,
                a_p: self.a_p,
                m: self.m,
                form: *f,
                seed,
                index,
                value: zeros.pairing_sum(&model, *f) / norm - mass,
            })
            .collect()
    }

    /// `max_φ |⟨[s=0] − γ_p^m, φ⟩| / (‖φ‖_{C²} A_p^m)` over the catalog.
    pub fn deviation(&self, zeros: &ZeroSet) -> f64 {
        let model = self.seq.model;
        let norm = self.a_p.powi(self.m as i32);
        self.forms
            .iter()
            .zip(&self.gamma_mass)
            .zip(&self.norms)
            .map(|((f, mass), c2)| (zeros.pairing_sum(&model, *f) - mass).abs() / (c2 * norm))
            .fold(0.0, f64::max)
    }

    /// Zero sets, records and catalog deviations for samples `0..n`, in index order.
    pub fn run(&self, seed: u64, n: usize) -> Result<Vec<SampleOutcome>> {
        (0..n as u64)
            .into_par_iter()
            .map(|index| {
                let z = self.zeros(seed, index)?;
                Ok(SampleOutcome {
                    index,
                    records: self.records_for(seed, index, &z),
                    deviation: self.deviation(&z),
                    total: z.total(),
                    expected_total: z.expected_total,
                    residual: z.residual,
                })
            })
            .collect()
    }

    pub fn exceptional(&self, outcomes: &[SampleOutcome], epsilon: f64) -> ExceptionalSetEstimate {
        let count = outcomes.iter().filter(|o| o.deviation >= epsilon).count();
        ExceptionalSetEstimate::new(self.p, epsilon, outcomes.len(), count)
    }
}

/// Regenerates one record from its provenance.
pub fn discrepancy_record(seq: &BundleSequence, p: u64, form: TestForm, seed: u64, index: u64) -> Result<DiscrepancyRecord> {
    let exp = ZeroExperiment::new(seq, p)?;
    let z = exp.zeros(seed, index)?;
    Ok(exp.records_for(seed, index, &z).into_iter().find(|r| r.form == form).unwrap())
}

/// Fraction of `n` samples whose zero current deviates from `γ_p^m` by at
/// least `A_p^m ε` against some catalog form of unit C² norm.
pub fn exceptional_fraction(
    seq: &BundleSequence,
    p: u64,
    m: usize,
    epsilon: f64,
    n: usize,
    seed: u64,
) -> Result<ExceptionalSetEstimate> {
    if n < 50 {
        return Err(Error::InvalidParams(format!("need at least 50 samples, got {n}")));
    }
    if m != seq.model.dim() {
        return Err(Error::InvalidParams("zero currents are sampled with m = n".into()));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidParams(format!("ε must be nonnegative, got {epsilon}")));
    }
    let exp = ZeroExperiment::new(seq, p)?;
    let outcomes = exp.run(seed, n)?;
    Ok(exp.exceptional(&outcomes, epsilon))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundles::HermitianLineBundle;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn line_onb(d: u32) -> OrthonormalBasis {
        let b = HermitianLineBundle::standard(KahlerModel::projective_line(), [d, 0]).unwrap();
        OrthonormalBasis::for_bundle(&b).unwrap()
    }

    /// Orthonormal coefficients of the polynomial with raw coefficients `raw`.
    fn from_raw(onb: &OrthonormalBasis, raw: &[Complex64]) -> SectionSample {
        let t = onb.t.adjoint().try_inverse().unwrap();
        let v = nalgebra::DVector::from_column_slice(raw);
        let coefficients: Vec<Complex64> = (&t * v).iter().copied().collect();
        SectionSample { coefficients, seed: 0, p: 0, index: 0, sub: 0 }
    }

    #[test]
    fn linear_and_double_zero_and_infinity() {
        let onb = line_onb(1);
        let z = zeros_cp1(&onb, &from_raw(&onb, &[c(-1.0, 0.0), c(1.0, 0.0)])).unwrap();
        assert_eq!(z.multiplicities, vec![1]);
        assert!((z.points[0].coords()[0] - c(1.0, 0.0)).norm() < 1e-12);

        let onb = line_onb(2);
        let z = zeros_cp1(&onb, &from_raw(&onb, &[c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)])).unwrap();
        assert_eq!(z.multiplicities, vec![2]);
        assert!(z.points[0].coords()[0].norm() < 1e-12 && z.points[0].chart == 0);

        let z = zeros_cp1(&onb, &from_raw(&onb, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)])).unwrap();
        assert_eq!(z.multiplicities, vec![2]);
        assert_eq!(z.points[0], ChartPoint::line(1, c(0.0, 0.0)));
    }

    #[test]
    fn zero_section_is_rejected() {
        let onb = line_onb(3);
        let s = SectionSample { coefficients: vec![c(0.0, 0.0); 4], seed: 0, p: 0, index: 0, sub: 0 };
        assert_eq!(zeros_cp1(&onb, &s).unwrap_err(), Error::ZeroSection);
    }

    #[test]
    fn random_zero_counts_and_mass() {
        let onb = line_onb(40);
        let omega = TwoForm::reference(KahlerModel::projective_line());
        for i in 0..20 {
            let s = sample_section(onb.len(), 7, 40, i, 0);
            let z = zeros_cp1(&onb, &s).unwrap();
            assert_eq!(z.total(), 40);
            assert!(z.residual < 1e-9, "{}", z.residual);
            assert!(pair_zero_current(&z, TestForm::One, 40.0, 1, &omega).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn product_resultant_example() {
        // f1 = z − w, f2 = zw − 1 meet at (1, 1) and (−1, −1).
        let a1 = vec![vec![c(0.0, 0.0), c(-1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]];
        let a2 = vec![vec![c(-1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]];
        let z = common_zeros_of(&a1, &a2).unwrap();
        assert_eq!(z.total(), 2);
        assert_eq!(z.points.len(), 2);
        for x in &z.points {
            let (_, a) = x.factor(0);
            let (_, b) = x.factor(1);
            assert!((a - b).norm() < 1e-12 && (a.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn random_product_pair_has_bezout_count() {
        let b = HermitianLineBundle::standard(KahlerModel::projective_product(), [2, 1]).unwrap();
        let onb = OrthonormalBasis::for_bundle(&b).unwrap();
        let s1 = sample_section(onb.len(), 3, 2, 0, 0);
        let s2 = sample_section(onb.len(), 3, 2, 0, 1);
        let z = common_zeros_p1xp1(&onb, &s1, &s2).unwrap();
        assert_eq!(z.expected_total, 4);
        assert_eq!(z.total(), 4);
        assert!(z.residual < 1e-10, "{}", z.residual);
        assert_eq!(common_zeros_p1xp1(&onb, &s1, &s1).unwrap_err(), Error::DegeneratePair);
    }

    #[test]
    fn combinatorics_examples() {
        let seq = BundleSequence::power(HermitianLineBundle::prequantum(KahlerModel::projective_line()));
        let r = combinatorics(&seq, 2, 1).unwrap();
        assert_eq!((r.d_p, r.d_pm), (3, 2));
        assert!((r.c_pm - 1.0).abs() < 1e-14);
        assert!((r.delta1 - 2.0).abs() < 1e-14 && (r.delta2 - 1.0).abs() < 1e-14);
        assert!((c_pm(3, 2) - (1.0f64 / 6.0).powf(0.25)).abs() < 1e-12);
    }

    #[test]
    fn fs_pairing_vanishes_for_standard_powers() {
        let onb = line_onb(12);
        let omega = TwoForm::reference(KahlerModel::projective_line());
        for f in TestForm::ALL {
            assert!(fs_current_pairing(&[&onb], f, 12.0, &omega).unwrap().abs() < 1e-8);
        }
        let model = KahlerModel::projective_product();
        let b = HermitianLineBundle::standard(model, [3, 3]).unwrap();
        let onb = OrthonormalBasis::for_bundle(&b).unwrap();
        let omega = TwoForm::reference(model);
        for f in TestForm::ALL {
            assert!(fs_current_pairing(&[&onb, &onb], f, 3.0, &omega).unwrap().abs() < 1e-8);
        }
    }

    #[test]
    fn exceptional_fraction_extremes() {
        let seq = BundleSequence::power(HermitianLineBundle::prequantum(KahlerModel::projective_line()));
        let all = exceptional_fraction(&seq, 10, 1, 0.0, 50, 1).unwrap();
        assert_eq!(all.fraction, 1.0);
        let none = exceptional_fraction(&seq, 10, 1, 1e6, 50, 1).unwrap();
        assert_eq!(none.fraction, 0.0);
        assert!(none.interval.0 <= 0.0 && none.interval.1 > 0.0);
    }

    #[test]
    fn records_are_reproducible() {
        let seq = BundleSequence::power(HermitianLineBundle::prequantum(KahlerModel::projective_line()));
        let exp = ZeroExperiment::new(&seq, 15).unwrap();
        let outcomes = exp.run(11, 6).unwrap();
        let r = &outcomes[3].records[2];
        let again = discrepancy_record(&seq, 15, r.form, 11, r.index).unwrap();
        assert_eq!(&again, r);
    }
}
