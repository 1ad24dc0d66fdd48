use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScalarError {
    #[error("cannot parse rational from {0:?}")]
    Parse(String),
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("phi^{phase_exp} is not a fourth root of unity at theta = {theta}")]
    ExactnessUnavailable { theta: String, phase_exp: i64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("cannot combine exact and numeric elements")]
    ModeMismatch,
    #[error("expected a single nonzero monomial, found {support} terms")]
    NotAMonomial { support: usize },
    #[error("Neumann inversion needs ||a||_1 < 1 for k = lambda(1 + a), got {norm}")]
    NotDiagonallyDominant { norm: f64 },
    #[error("inverse residual {residual:e} exceeds tolerance {tolerance:e} at order {order}")]
    ToleranceNotMet {
        residual: f64,
        tolerance: f64,
        order: usize,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalculusError {
    #[error("operands live on different calculi ({left} vs {right})")]
    DescriptorMismatch { left: String, right: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConnectionError {
    #[error("{0}")]
    HypothesisViolated(String),
    #[error("coefficient {at} is not a scalar multiple of the unit")]
    NonScalarCoefficient { at: String },
    #[error("input tensor is not symmetric")]
    NotSymmetric,
    #[error("base connection is not Levi-Civita for g0: {0}")]
    BaseNotLeviCivita(String),
    #[error(transparent)]
    Calculus(#[from] CalculusError),
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("unknown preset {0:?} (expected nc-torus, qhm or commutative-torus)")]
    UnknownPreset(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{context}: {source}")]
    Algebra {
        context: String,
        #[source]
        source: AlgebraError,
    },
    #[error("{context}: {source}")]
    Connection {
        context: String,
        #[source]
        source: ConnectionError,
    },
}

impl ScenarioError {
    pub fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}
