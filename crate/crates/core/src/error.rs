use alloc::string::String;
use alloc::vec::Vec;

/// Every domain failure the library can report.
///
/// Variants carry enough context to be turned into a machine-readable
/// reason code by the scan engine.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("resonance module is not saturated (elementary divisors {divisors:?})")]
    NonSaturatedModule { divisors: Vec<i64> },

    #[error("intrinsic frequency is itself resonant: k = {k:?}")]
    ResidualResonance { k: Vec<i64> },

    #[error("exact resonance k = {k:?}: divisor vanishes")]
    ZeroDivisor { k: Vec<i64> },

    #[error("series is not real: imaginary residual {residual:e}")]
    RealityViolation { residual: f64 },

    #[error("small divisor {modulus:e} at k = {k:?} below floor {floor:e}")]
    SmallDivisorBreach { k: Vec<i64>, modulus: f64, floor: f64 },

    #[error("map is not invertible: min |1 + grad f . Omega| = {min_jacobian:e}")]
    NotInvertible { min_jacobian: f64 },

    #[error("lift is not monotone: min derivative {min_derivative:e}")]
    NonMonotone { min_derivative: f64 },

    #[error("every resonant average through order {order} is below threshold")]
    AllOrdersFlat { order: usize },

    #[error("eta has no zero (range [{min}, {max}])")]
    NoZero { min: f64, max: f64 },

    #[error("eta zero at {y} is degenerate (slope {slope:e})")]
    DegenerateZero { y: f64, slope: f64 },

    #[error("iteration is not contracting ({context}): ratio {ratio}")]
    NotContracting { context: &'static str, ratio: f64 },

    #[error("normal multiplier {multiplier} is within {gap:e} of the unit circle")]
    HyperbolicityFail { multiplier: f64, gap: f64 },

    #[error("solvability fails: average {average:e} at y0")]
    SolvabilityFail { average: f64 },

    #[error("non-degeneracy fails: {quantity:e} below floor")]
    NonDegeneracyFail { quantity: f64 },

    #[error("pinching fails: lambda = {lambda}, delta = {delta}")]
    PinchingFail { lambda: f64, delta: f64 },

    #[error("fiber inversion stalled at sigma = {sigma}")]
    FiberInversionFail { sigma: f64 },

    #[error("multiplier changes sign or vanishes (min |a| = {min_abs:e})")]
    SignChange { min_abs: f64 },

    #[error("Newton iteration diverged after {steps} steps (residual {residual:e})")]
    Diverged { steps: usize, residual: f64 },

    #[error("scan grid of {cells} cells exceeds budget {budget}")]
    BudgetExceeded { cells: usize, budget: usize },
}

impl Error {
    /// Short stable identifier used in scan outputs.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::NonSaturatedModule { .. } => "non_saturated_module",
            Error::ResidualResonance { .. } => "residual_resonance",
            Error::ZeroDivisor { .. } => "zero_divisor",
            Error::RealityViolation { .. } => "reality_violation",
            Error::SmallDivisorBreach { .. } => "small_divisor_breach",
            Error::NotInvertible { .. } => "not_invertible",
            Error::NonMonotone { .. } => "non_monotone",
            Error::AllOrdersFlat { .. } => "all_orders_flat",
            Error::NoZero { .. } => "no_zero",
            Error::DegenerateZero { .. } => "degenerate_zero",
            Error::NotContracting { .. } => "not_contracting",
            Error::HyperbolicityFail { .. } => "hyperbolicity_fail",
            Error::SolvabilityFail { .. } => "solvability_fail",
            Error::NonDegeneracyFail { .. } => "non_degeneracy_fail",
            Error::PinchingFail { .. } => "pinching_fail",
            Error::FiberInversionFail { .. } => "fiber_inversion_fail",
            Error::SignChange { .. } => "sign_change",
            Error::Diverged { .. } => "diverged",
            Error::BudgetExceeded { .. } => "budget_exceeded",
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::error::Error::InvalidInput(alloc::format!($($arg)*))
    };
}
pub(crate) use invalid;
