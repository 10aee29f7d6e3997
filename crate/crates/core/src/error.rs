use thiserror::Error;

/// Errors raised by the numerical modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("integrand is not finite at node {node}")]
    NonFiniteIntegrand { node: usize },
    #[error("matrix is not positive definite ({0})")]
    NotPositive(String),
    #[error("curvature positivity lost at {at} (smallest eigenvalue {eigenvalue:e})")]
    PositivityLost { at: String, eigenvalue: f64 },
    #[error("ray component {index} is not positive ({value})")]
    NonPositiveRay { index: usize, value: f64 },
    #[error("gram matrix is ill-conditioned (condition {condition:e})")]
    IllConditioned { condition: f64 },
    #[error("quadrature rule exact to degree {declared} but degree {required} is needed")]
    RuleTooCoarse { declared: usize, required: usize },
    #[error("rescaling window leaves the chart (displacement {displacement}, limit {limit})")]
    WindowTooLarge { displacement: f64, limit: f64 },
    #[error("section vanishes identically")]
    ZeroSection,
    #[error("section pair shares a common component")]
    DegeneratePair,
    #[error("least-squares design is rank deficient")]
    RankDeficient,
    #[error("not enough data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, Error>;
