use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors shared across the crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Expression text failed to parse.
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    /// Identifier not in the grammar (unknown function, constant, variable).
    #[error("unknown identifier `{0}`")]
    UnknownIdent(String),

    /// Function called with the wrong number of arguments.
    #[error("arity mismatch: {0}")]
    Arity(String),

    /// Evaluation left the function's domain or produced a non-finite value.
    #[error("domain error: {0}")]
    Domain(String),

    /// Numeric inversion target lies outside the function's range on the bracket.
    #[error("target {y} outside range [{f_lo}, {f_hi}] on bracket [{lo}, {hi}]")]
    OutOfRange {
        y: f64,
        f_lo: f64,
        f_hi: f64,
        lo: f64,
        hi: f64,
    },

    /// A function expected to be monotone on a bracket is not.
    #[error("not monotone on [{lo}, {hi}]: f({u}) = {fu}, f({v}) = {fv}")]
    NotMonotone {
        lo: f64,
        hi: f64,
        u: f64,
        v: f64,
        fu: f64,
        fv: f64,
    },

    /// A sampled hypothesis required by a construction failed.
    #[error("hypothesis `{check}` failed: {witness}")]
    Hypothesis { check: String, witness: String },

    /// A parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// Builtin space name not recognized.
    #[error("unknown builtin space `{0}`")]
    UnknownBuiltin(String),

    /// Distance-matrix shape or entry constraint violated.
    #[error("matrix error: {0}")]
    Matrix(String),

    /// Space or operation descriptor malformed.
    #[error("descriptor error: {0}")]
    Descriptor(String),

    /// Unsupported combination of inputs (e.g. product over mixed domains).
    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    pub fn hypothesis(check: impl Into<String>, witness: impl Into<String>) -> Self {
        Error::Hypothesis {
            check: check.into(),
            witness: witness.into(),
        }
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
