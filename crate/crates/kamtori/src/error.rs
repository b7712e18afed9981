use thiserror::Error;

/// Errors surfaced by the algebra, the small-divisor machinery and the
/// iteration engine.
#[derive(Debug, Error)]
pub enum KamError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("invalid caps: {0}")]
    InvalidCaps(String),

    #[error("operands use different coefficient backends")]
    BackendMismatch,

    #[error("operands use different mode windows ({0} vs {1})")]
    WindowMismatch(u32, u32),

    #[error("operands use different weights (sigma or cutoff differ)")]
    WeightMismatch,

    #[error("divisor floor is undefined for l = 0")]
    ZeroDivisorVector,

    #[error("enumeration size {needed} exceeds budget {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("small divisor |D| = {divisor:.3e} below guard {guard:.3e} for key {key}")]
    Resonance {
        key: String,
        divisor: f64,
        guard: f64,
    },

    #[error("Lie series diverging: term norms grew for 3 consecutive orders (order {order}, ratio {ratio:.3e})")]
    Divergence { order: u32, ratio: f64 },

    #[error("contraction targets violated at step {step}: {detail}")]
    ContractFailure { step: u32, detail: String },

    #[error("frequency freezing did not converge after {iters} iterations (residual {residual:.3e})")]
    FreezeNonConvergence { iters: u32, residual: f64 },

    #[error("tame defect requires a momentum-conserving key (momentum = {0})")]
    MomentumNotConserved(i64),
}

pub type Result<T> = std::result::Result<T, KamError>;
