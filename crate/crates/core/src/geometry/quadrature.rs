//! Quadrature rules on the three models. Every rule integrates against the
//! unit-volume measure `dv_X`, so weights sum to one.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use super::{ChartPoint, KahlerModel, ModelKind};
use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, computed by Newton
/// iteration on the three-term recurrence. Cached by order.
pub fn gauss_legendre(n: usize) -> Arc<(Vec<f64>, Vec<f64>)> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<(Vec<f64>, Vec<f64>)>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(hit) = cache.lock().unwrap().get(&n) {
        return hit.clone();
    }
    let rule = Arc::new(compute_gauss_legendre(n));
    cache.lock().unwrap().insert(n, rule.clone());
    rule
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    (p1, n * (x * p1 - p0) / (x * x - 1.0))
}

fn compute_gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut t = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, t);
            let step = p / dp;
            t -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, t);
        let weight = 2.0 / ((1.0 - t * t) * dp * dp);
        x[i] = -t;
        x[n - 1 - i] = t;
        w[i] = weight;
        w[n - 1 - i] = weight;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_interval(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let rule = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (
        rule.0.iter().map(|t| mid + half * t).collect(),
        rule.1.iter().map(|w| half * w).collect(),
    )
}

/// Structure of a rule, kept so that fast paths can exploit separability.
#[derive(Clone, Debug)]
pub enum RuleLayout {
    Scattered,
    /// Nodes ordered `s`-major then angle; `s = |z|²/(1+|z|²)`.
    Polar { s: Vec<f64>, s_weights: Vec<f64>, n_theta: usize },
    TorusGrid { n: usize, tau: Complex64 },
    /// Nodes ordered first-factor-major.
    Tensor { first: Box<QuadratureRule>, second: Box<QuadratureRule> },
}

#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub nodes: Vec<ChartPoint>,
    pub weights: Vec<f64>,
    pub declared_degree: usize,
    pub layout: RuleLayout,
}

impl QuadratureRule {
    /// Arbitrary nodes and weights; weights must be positive and sum to one.
    pub fn scattered(nodes: Vec<ChartPoint>, weights: Vec<f64>, declared_degree: usize) -> Result<Self> {
        if nodes.len() != weights.len() || nodes.is_empty() {
            return Err(Error::InvalidParams("nodes and weights differ in length".into()));
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidParams("quadrature weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParams(format!("weights sum to {total}, expected 1")));
        }
        Ok(Self { nodes, weights, declared_degree, layout: RuleLayout::Scattered })
    }

    /// Gauss–Legendre in `s` times trapezoid in `arg z` on the sphere.
    /// Nodes with `|z| > 1` are stored in the `w = 1/z` chart.
    pub fn polar(n_s: usize, n_theta: usize) -> Self {
        let (s, s_weights) = gauss_legendre_interval(n_s, 0.0, 1.0);
        let mut nodes = Vec::with_capacity(n_s * n_theta);
        let mut weights = Vec::with_capacity(n_s * n_theta);
        for (si, wi) in s.iter().zip(&s_weights) {
            let r = (si / (1.0 - si)).sqrt();
            for l in 0..n_theta {
                let theta = 2.0 * PI * l as f64 / n_theta as f64;
                let node = if r <= 1.0 {
                    ChartPoint::line(0, Complex64::from_polar(r, theta))
                } else {
                    ChartPoint::line(1, Complex64::from_polar(1.0 / r, -theta))
                };
                nodes.push(node);
                weights.push(wi / n_theta as f64);
            }
        }
        Self {
            nodes,
            weights,
            declared_degree: n_s.min(n_theta) - 1,
            layout: RuleLayout::Polar { s, s_weights, n_theta },
        }
    }

    /// Periodic trapezoid rule on the fundamental parallelogram `z = u + vτ`.
    pub fn torus_grid(tau: Complex64, n: usize) -> Self {
        let mut nodes = Vec::with_capacity(n * n);
        let h = 1.0 / n as f64;
        for i in 0..n {
            for j in 0..n {
                let u = (i as f64 + 0.5) * h;
                let v = (j as f64 + 0.5) * h;
                nodes.push(ChartPoint::line(0, Complex64::new(u, 0.0) + tau * v));
            }
        }
        Self {
            weights: vec![h * h; n * n],
            nodes,
            declared_degree: n - 1,
            layout: RuleLayout::TorusGrid { n, tau },
        }
    }

    /// Tensor product of two sphere rules on the product of projective lines.
    pub fn tensor(first: QuadratureRule, second: QuadratureRule) -> Self {
        let mut nodes = Vec::with_capacity(first.nodes.len() * second.nodes.len());
        let mut weights = Vec::with_capacity(nodes.capacity());
        for (a, wa) in first.nodes.iter().zip(&first.weights) {
            for (b, wb) in second.nodes.iter().zip(&second.weights) {
                nodes.push(ChartPoint::product(a.chart | (b.chart << 1), a.coords()[0], b.coords()[0]));
                weights.push(wa * wb);
            }
        }
        Self {
            nodes,
            weights,
            declared_degree: first.declared_degree.min(second.declared_degree),
            layout: RuleLayout::Tensor { first: Box::new(first), second: Box::new(second) },
        }
    }

    /// Default rule for sections of degree `degrees` (one entry per factor).
    pub fn for_degree(model: &KahlerModel, degrees: &[u32]) -> Self {
        match model.kind {
            ModelKind::ProjectiveLine => {
                let n = 2 * degrees[0] as usize + 8;
                Self::polar(n, n)
            }
            ModelKind::ProjectiveProduct => {
                let a = 2 * degrees[0] as usize + 8;
                let b = 2 * degrees.get(1).copied().unwrap_or(degrees[0]) as usize + 8;
                Self::tensor(Self::polar(a, a), Self::polar(b, b))
            }
            ModelKind::FlatTorus { tau } => Self::torus_grid(tau, 4 * degrees[0] as usize + 16),
        }
    }

    /// Node count of `for_degree(model, degrees)`, refined `levels` times,
    /// without building the rule.
    pub fn planned_len(model: &KahlerModel, degrees: &[u32], levels: u32) -> usize {
        let f = 1usize << levels;
        match model.kind {
            ModelKind::ProjectiveLine => (f * (2 * degrees[0] as usize + 8)).pow(2),
            ModelKind::ProjectiveProduct => {
                let a = f * (2 * degrees[0] as usize + 8);
                let b = f * (2 * degrees.get(1).copied().unwrap_or(degrees[0]) as usize + 8);
                a.saturating_mul(a).saturating_mul(b).saturating_mul(b)
            }
            ModelKind::FlatTorus { .. } => (f * (4 * degrees[0] as usize + 16)).pow(2),
        }
    }

    /// The same layout with every node count doubled.
    pub fn refined(&self) -> Self {
        match &self.layout {
            RuleLayout::Polar { s, n_theta, .. } => Self::polar(2 * s.len(), 2 * n_theta),
            RuleLayout::TorusGrid { n, tau } => Self::torus_grid(*tau, 2 * n),
            RuleLayout::Tensor { first, second } => Self::tensor(first.refined(), second.refined()),
            RuleLayout::Scattered => self.clone(),
        }
    }

    /// Moderate-size rule for pairing smooth test forms.
    pub fn for_pairing(model: &KahlerModel) -> Self {
        match model.kind {
            ModelKind::ProjectiveLine => Self::polar(48, 24),
            ModelKind::ProjectiveProduct => Self::tensor(Self::polar(16, 12), Self::polar(16, 12)),
            ModelKind::FlatTorus { tau } => Self::torus_grid(tau, 48),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Sum in a fixed balanced binary tree, independent of how the terms were
/// produced.
pub fn pairwise_sum(terms: &[Complex64]) -> Complex64 {
    const LEAF: usize = 32;
    if terms.len() <= LEAF {
        return terms.iter().fold(Complex64::new(0.0, 0.0), |acc, t| acc + t);
    }
    let mid = terms.len() / 2;
    pairwise_sum(&terms[..mid]) + pairwise_sum(&terms[mid..])
}

/// Real counterpart of [`pairwise_sum`].
pub fn pairwise_sum_real(terms: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if terms.len() <= LEAF {
        return terms.iter().sum();
    }
    let mid = terms.len() / 2;
    pairwise_sum_real(&terms[..mid]) + pairwise_sum_real(&terms[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre_interval(7, 0.0, 1.0);
        for k in 0..14 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
            assert!((q - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "k = {k}");
        }
    }

    #[test]
    fn large_gauss_legendre_weights_sum_to_two() {
        let rule = gauss_legendre(1200);
        let total: f64 = rule.1.iter().sum();
        assert!((total - 2.0).abs() < 1e-12);
        assert!(rule.0.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn refined_torus_keeps_tau() {
        let tau = Complex64::new(0.3, 1.2);
        let rule = QuadratureRule::torus_grid(tau, 5).refined();
        match rule.layout {
            RuleLayout::TorusGrid { n, .. } => assert_eq!(n, 10),
            _ => unreachable!(),
        }
        let expected = Complex64::new(0.05, 0.0) + tau * 0.05;
        assert!((rule.nodes[0].coords()[0] - expected).norm() < 1e-14);
    }
}
