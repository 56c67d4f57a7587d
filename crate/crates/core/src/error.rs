use thiserror::Error;

/// Errors raised across the toolkit.
///
/// Variants are grouped loosely by the module that produces them; the CLI maps
/// them onto exit codes via [`Error::exit_code`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("extension degree must be at least 1")]
    DegreeZero,
    #[error("prime {0} exceeds the supported range (p < 2^31)")]
    PrimeTooLarge(u64),
    #[error("exhaustive operation refused: {size} elements exceed the bound {bound}")]
    BoundExceeded { size: String, bound: u64 },
    #[error("field context mismatch: F_{{{p1}^{k1}}} vs F_{{{p2}^{k2}}}")]
    CtxMismatch { p1: u64, k1: usize, p2: u64, k2: usize },
    #[error("division by zero")]
    DivisionByZero,
    #[error("polynomial modulus is zero")]
    ZeroModulus,
    #[error("zero polynomial")]
    ZeroPolynomial,
    #[error("cannot embed F_{{p^{from}}} into F_{{p^{to}}}")]
    NotSubfield { from: usize, to: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("degenerate component: F is divisible by a polynomial in {0} alone")]
    DegenerateComponent(char),
    #[error("point ({0}, {1}) is not on the curve")]
    NotOnCurve(String, String),
    #[error("characteristic {0} not supported (need p >= 5)")]
    SmallCharacteristic(u64),
    #[error("j = {0} is excluded from isogeny validation")]
    ExcludedJ(String),
    #[error("component is truncated")]
    Truncated,
    #[error("ramified edge encountered at ({0}, {1})")]
    UnsupportedRamified(String, String),
    #[error("budget {budget} is smaller than the {needed} edges of a radius-{radius} tree ball")]
    BudgetTooSmall { budget: usize, needed: usize, radius: usize },
    #[error("correspondence is not a self-correspondence of type (d, d)")]
    NotSelfCorrespondence,
    #[error("clump is not symmetric: first and second projections differ")]
    NotSymmetricClump,
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("graph is not simple: {0}")]
    NotSimple(String),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Exit code contract: 1 usage/input, 2 assertion, 3 budget.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::BoundExceeded { .. } | Error::BudgetTooSmall { .. } | Error::Truncated => 3,
            _ => 1,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
