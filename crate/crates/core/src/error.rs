use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

/// Every failure the library reports. Precondition violations and numerical
/// breakdowns are kept apart so front ends can map them to different exit codes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("unsupported series dimension {0}, expected 1 or 2")]
    UnsupportedDimension(usize),
    #[error("truncation order {order} below the minimum {min}")]
    OrderTooSmall { order: usize, min: usize },
    #[error("reparametrization must vanish at zero")]
    NonzeroConstantTerm,
    #[error("series is not divisible by zeta^{power}")]
    NotDivisible { power: usize },
    #[error("truncation order {order} exhausted, need {needed}")]
    TruncationExhausted { needed: usize, order: usize },
    #[error("derivative at zero vanishes, series is not invertible")]
    NotInvertible,

    #[error("half-disk is not attached: coefficient {index} is not real")]
    NotReal { index: usize },
    #[error("half-disk does not pass through the origin")]
    NotCentered,
    #[error("map vanishes to truncation order")]
    VanishesToTruncation,
    #[error("vanishing order {0} is not 1; tangency is only defined for immersed boundary points")]
    NotImmersed(usize),
    #[error("tangent vectors are not collinear")]
    NotTangent,
    #[error("tangent vectors differ in length; rescale the parameter first")]
    TangentLengthMismatch,
    #[error("vanishing orders differ: {0} vs {1}")]
    OrderMismatch(usize, usize),
    #[error("contact order exceeds the truncation order {0}")]
    ContactBeyondTruncation(usize),
    #[error("index undefined: curves coincide")]
    Coincident,

    #[error("linking route failed: {0}")]
    Linking(&'static str),
    #[error(
        "rounding residual {residual:.3} above guard; radius too large or sampling too coarse"
    )]
    LinkingResidual { residual: f64 },
    #[error("roots did not separate within {0} perturbation rounds")]
    RootsNotSeparated(usize),

    #[error("structure is not tamed: J + J_st is singular (condition {0:e})")]
    Untamed(f64),
    #[error("structure differs from J_st on the totally real edge by {0:e}")]
    NotStandardOnEdge(f64),
    #[error("matrix is not an anti-linear contraction: {0}")]
    NotContraction(&'static str),
    #[error("Id - W is singular")]
    SingularCayley,

    #[error("perturbation too large: Neumann term ratio {0:.3}")]
    PerturbationTooLarge(f64),
    #[error("iteration did not contract: ratio {ratio:.3} after {iterations} steps")]
    NoContraction { ratio: f64, iterations: usize },
    #[error("initial vector too large: sup norm {0} exceeds 1/2")]
    InitialTooLarge(f64),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("smallness condition on the perturbation fails: {0}")]
    SmallnessViolated(&'static str),
    #[error("initial half-disk is not J-holomorphic: residual {0:e}")]
    NotHolomorphic(f64),
    #[error("vanishing orders violate 2 mu - 2 + (alpha - 1) nu >= 0")]
    OrdersIncompatible,
    #[error("differential vanishes near the origin")]
    CuspPersists,

    #[error("inconsistent configuration: {0}")]
    InconsistentConfig(&'static str),
    #[error("move not applicable: {0}")]
    MoveNotApplicable(&'static str),
}

impl Error {
    /// `true` for violated preconditions of the caller, `false` for failures
    /// of the computation itself.
    pub fn is_precondition(&self) -> bool {
        !matches!(
            self,
            Error::Linking(_)
                | Error::LinkingResidual { .. }
                | Error::RootsNotSeparated(_)
                | Error::NoContraction { .. }
                | Error::PerturbationTooLarge(_)
                | Error::TruncationExhausted { .. }
        )
    }
}
