use thiserror::Error;

#[derive(Debug, Error)]
pub enum WrpError {
    #[error("argument {lambda} lies on the branch cut of the jump log term (lambda <= -alpha)")]
    BranchCutViolation { lambda: String },

    #[error("Re(lambda) = {re} is left of the exponential-moment abscissa -zeta = {min}")]
    AdmissibilityViolation { re: f64, min: f64 },

    #[error("strike must be strictly negative (below the barrier at 0), got {0}")]
    InvalidStrike(f64),

    #[error("payoff is not integrable: {0}")]
    NonIntegrable(String),

    #[error("payoff support must lie in (-inf, 0): {0}")]
    SupportViolation(String),

    #[error("|psi(lambda) - psi(-zeta - iz)| = {value:e} below floor {threshold:e}; increase gamma")]
    DenominatorUnderflow { value: f64, threshold: f64 },

    #[error("gamma = {gamma} lies left of the kernel poles (largest mirror-root real part {abscissa})")]
    ContourBelowPoles { gamma: f64, abscissa: f64 },

    #[error("pointwise symmetry images need an L1 Fourier preimage; indicator-type payoffs must go through the density pairing")]
    RequiresL1,

    #[error("exponent {0} exceeds the overflow guard (700)")]
    OverflowGuard(f64),

    #[error("truncation cap {cap} reached at x = {x} with bound {bound:e} > target {target:e}")]
    TruncationCapExceeded { x: f64, cap: f64, bound: f64, target: f64 },

    #[error("grid does not cover enough of (0, inf): {0}")]
    InsufficientGrid(String),

    #[error("inner-integral cache mismatch: {0}")]
    CacheMismatch(String),

    #[error("Monte Carlo simulation supports only Gamma or empty jump measures")]
    UnsupportedJumpKind,

    #[error("x = {x} outside the tabulated range [{lo}, {hi}]")]
    GridExtrapolation { x: f64, lo: f64, hi: f64 },

    #[error("integrand grows faster than the certified exponential moment: {0}")]
    TailUnbounded(String),

    #[error("density inversion produced a negative excursion {0:e} beyond the clipping tolerance")]
    NegativeDensity(f64),

    #[error("quadrature did not converge: estimated error {err:e} above tolerance {tol:e}")]
    QuadratureFailure { err: f64, tol: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, WrpError>;

impl WrpError {
    /// Short remediation hint for CLI error output.
    pub fn hint(&self) -> &'static str {
        match self {
            WrpError::RequiresL1 => "RequiresL1: use `wrp joint` for indicator payoffs",
            WrpError::DenominatorUnderflow { .. } | WrpError::ContourBelowPoles { .. } => {
                "raise --gamma above the mirror-root abscissa"
            }
            WrpError::OverflowGuard(_) => "reduce gamma or the largest x",
            WrpError::TruncationCapExceeded { .. } => "relax --target-err or shrink the x range",
            WrpError::InvalidStrike(_) => "strikes are log-distances to the barrier and must be < 0",
            WrpError::CacheMismatch(_) => "rebuild the inner-integral cache for this model/payoff",
            WrpError::GridExtrapolation { .. } => "extend the symmetry-image grid",
            WrpError::Io(_) => "check that input files exist and the output path is writable",
            WrpError::Json(_) => "check the JSON config against the documented schema",
            _ => "see the error message",
        }
    }
}
