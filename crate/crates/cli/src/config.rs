//! Experiment configuration documents and their validation.

use bergman_core::bundles::diophantine::diophantine_ray;
use bergman_core::bundles::{BundleSequence, HermitianLineBundle, Psi};
use bergman_core::geometry::{make_model, ChartPoint, KahlerModel, ModelKind};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    BergmanScan,
    ExpansionFit,
    ModelKernel,
    ZerosEquidist,
    FsSpeed,
    Degrees,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// One factor `F = O(degree)` of a multi-ray sequence, optionally twisted
/// by a catalog potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorSpec {
    pub degree: [u32; 2],
    #[serde(default)]
    pub psi: Option<String>,
    #[serde(default)]
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SequenceSpec {
    /// `L^p` for `L = O(degree)` with the reference metric.
    Power {
        #[serde(default = "unit_degree")]
        degree: [u32; 2],
    },
    /// `L^p` with the metric twisted by `p^{1−a} ψ`.
    Perturbed { psi: String, a: f64 },
    /// `F₁^{m₁} ⊗ … ⊗ F_k^{m_k}` with `m/p` approximating `ray`.
    MultiRay {
        ray: Vec<f64>,
        factors: Vec<FactorSpec>,
        #[serde(default = "default_depth")]
        depth: usize,
    },
}

fn unit_degree() -> [u32; 2] {
    [1, 1]
}

fn default_depth() -> usize {
    8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PSpec {
    List(Vec<u64>),
    Range { start: u64, end: u64, #[serde(default = "one")] step: u64 },
}

fn one() -> u64 {
    1
}

impl PSpec {
    pub fn values(&self) -> Vec<u64> {
        match self {
            PSpec::List(v) => v.clone(),
            PSpec::Range { start, end, step } => {
                if *step == 0 {
                    return Vec::new();
                }
                (*start..=*end).step_by(*step as usize).collect()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub model: ModelKind,
    pub sequence: SequenceSpec,
    pub p: PSpec,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<String>,
    #[serde(default)]
    pub format: Format,
    /// Base point as `[[re, im], …]` in chart 0; the origin by default.
    #[serde(default)]
    pub point: Option<Vec<Complex64>>,
    /// Number of expansion coefficients beyond `b₀` to fit.
    #[serde(default)]
    pub order: Option<usize>,
    /// Exceptional-set threshold `ε = factor · log A_p / A_p`.
    #[serde(default)]
    pub epsilon_factor: Option<f64>,
    /// Window radius `q` of the rescaled kernel comparison.
    #[serde(default)]
    pub window: Option<f64>,
    /// Number of scan points for `bergman-scan`.
    #[serde(default)]
    pub grid_points: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn kahler_model(&self) -> bergman_core::Result<KahlerModel> {
        make_model(self.model)
    }

    pub fn p_values(&self) -> Vec<u64> {
        self.p.values()
    }

    pub fn m(&self) -> usize {
        self.m.unwrap_or(match self.model {
            ModelKind::ProjectiveProduct => 2,
            _ => 1,
        })
    }

    pub fn base_point(&self) -> ChartPoint {
        let dim = if self.model == ModelKind::ProjectiveProduct { 2 } else { 1 };
        match &self.point {
            Some(c) => ChartPoint::new(0, c),
            None => ChartPoint::origin(dim),
        }
    }

    pub fn sequence(&self) -> bergman_core::Result<BundleSequence> {
        let model = self.kahler_model()?;
        let degree = |d: [u32; 2]| if model.dim() == 1 { [d[0], 0] } else { d };
        match &self.sequence {
            SequenceSpec::Power { degree: d } => {
                Ok(BundleSequence::power(HermitianLineBundle::standard(model, degree(*d))?))
            }
            SequenceSpec::Perturbed { psi, a } => BundleSequence::perturbed(model, Psi::from_id(psi)?, *a),
            SequenceSpec::MultiRay { ray, factors, depth } => {
                let factors = factors
                    .iter()
                    .map(|f| {
                        let potentials = match &f.psi {
                            Some(id) => vec![(Psi::from_id(id)?, f.weight)],
                            None => Vec::new(),
                        };
                        HermitianLineBundle::new(model, degree(f.degree), potentials)
                    })
                    .collect::<bergman_core::Result<Vec<_>>>()?;
                BundleSequence::multi_ray(factors, diophantine_ray(ray, *depth)?)
            }
        }
    }
}

/// Problems that would make `run` fail before any computation.
pub fn validate(config: &ExperimentConfig) -> Vec<String> {
    let mut out = Vec::new();
    let ps = config.p_values();
    if ps.is_empty() {
        out.push("p list is empty".to_string());
    } else if ps.windows(2).any(|w| w[0] >= w[1]) {
        out.push("p list must be strictly increasing".to_string());
    }
    if ps.first() == Some(&0) {
        out.push("p must be at least 1".to_string());
    }
    let model = match config.kahler_model() {
        Ok(m) => Some(m),
        Err(e) => {
            out.push(format!("model: {e}"));
            None
        }
    };
    match &config.sequence {
        SequenceSpec::Perturbed { psi, a } => {
            if !(*a > 0.0) || !a.is_finite() {
                out.push(format!("perturbed sequence needs a > 0, got {a}"));
            }
            if Psi::from_id(psi).is_err() {
                out.push(format!("unknown potential id {psi:?}"));
            }
        }
        SequenceSpec::MultiRay { ray, factors, .. } => {
            if ray.len() != factors.len() || ray.is_empty() {
                out.push("multi-ray needs one factor per ray entry".to_string());
            }
            if ray.iter().any(|r| !(*r > 0.0)) {
                out.push("ray entries must be positive".to_string());
            }
        }
        SequenceSpec::Power { degree } => {
            let dim = model.map_or(1, |m| m.dim());
            if degree[..dim].iter().all(|d| *d == 0) {
                out.push("power sequence needs a nonzero degree".to_string());
            }
        }
    }
    if let Some(model) = model {
        if out.is_empty() {
            if let Err(e) = config.sequence() {
                out.push(format!("sequence: {e}"));
            }
        }
        let m = config.m();
        if m == 0 || m > model.dim() {
            out.push(format!("m must lie in 1..={}, got {m}", model.dim()));
        }
        if let Some(point) = &config.point {
            if point.len() != model.dim() {
                out.push(format!("point needs {} coordinates", model.dim()));
            }
        }
        match config.experiment {
            Experiment::ZerosEquidist => {
                if matches!(model.kind, ModelKind::FlatTorus { .. }) {
                    out.push("zeros-equidist runs on projective-line or projective-product".to_string());
                }
                if m != model.dim() {
                    out.push("zeros-equidist samples full intersections, so m must equal the dimension".to_string());
                }
                match config.samples {
                    None | Some(0) => out.push("zeros-equidist needs samples ≥ 1".to_string()),
                    _ => {}
                }
            }
            Experiment::FsSpeed if config.samples == Some(0) => {
                out.push("samples must be at least 1 when given".to_string());
            }
            _ => {}
        }
    }
    if let Some(f) = config.epsilon_factor {
        if !(f >= 0.0) {
            out.push("epsilon_factor must be nonnegative".to_string());
        }
    }
    if let Some(q) = config.window {
        if !(q > 0.0) {
            out.push("window must be positive".to_string());
        }
    }
    if config.grid_points == Some(0) {
        out.push("grid_points must be positive".to_string());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ExperimentConfig {
        ExperimentConfig::from_json(
            r#"{"experiment": "bergman-scan", "model": {"kind": "projective-line"},
                "sequence": {"kind": "power", "degree": [1, 0]}, "p": [1, 2, 3]}"#,
        )
        .unwrap()
    }

    #[test]
    fn well_formed_config_has_no_diagnostics() {
        assert!(validate(&base()).is_empty());
    }

    #[test]
    fn decreasing_p_list_is_one_diagnostic() {
        let mut c = base();
        c.p = PSpec::List(vec![3, 2, 1]);
        assert_eq!(validate(&c).len(), 1);
    }

    #[test]
    fn nonpositive_rate_is_one_diagnostic() {
        let mut c = base();
        c.sequence = SequenceSpec::Perturbed { psi: "psi-bump-1".into(), a: 0.0 };
        assert_eq!(validate(&c).len(), 1, "{:?}", validate(&c));
    }

    #[test]
    fn zero_samples_are_rejected() {
        let mut c = base();
        c.experiment = Experiment::ZerosEquidist;
        c.p = PSpec::List(vec![50]);
        c.samples = Some(0);
        assert_eq!(validate(&c).len(), 1);
    }

    #[test]
    fn ranges_expand() {
        let p = PSpec::Range { start: 10, end: 80, step: 10 };
        assert_eq!(p.values(), vec![10, 20, 30, 40, 50, 60, 70, 80]);
    }
}
