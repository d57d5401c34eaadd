use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("matrix is not antisymmetric: symmetric part has norm {0:.3e}")]
    NotAntisymmetric(f64),
    #[error("matrix is not a rotation: orthogonality defect {orthogonality:.3e}, det {det:.6}")]
    NotARotation { orthogonality: f64, det: f64 },
    #[error("near-singular matrix: smallest singular value {sigma_min:.3e}")]
    NearSingular { sigma_min: f64 },
    #[error("rotation angle {angle:.9} too close to pi for the logarithm")]
    AngleNearPi { angle: f64 },
    #[error("tangency defect {defect:.3e} at grid point {index} (grid too coarse)")]
    TangencyDefect { index: usize, defect: f64 },
    #[error("concentration {kappa} exceeds kappa_max = {max}")]
    KappaOverflow { kappa: f64, max: f64 },
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("constraint violated: transverse current {norm:.3e}")]
    ConstraintViolated { norm: f64 },
    #[error("degenerate fit: {0}")]
    FitDegenerate(String),
    #[error("root search exhausted at kappa_max = {kappa_max}: iota/c1 = {ratio} < rho = {rho}")]
    RangeExhausted { kappa_max: f64, ratio: f64, rho: f64 },
    #[error("unstable extrapolation: successive estimates {a} and {b}")]
    ExtrapolationUnstable { a: f64, b: f64 },
    #[error("marginal case: (iota/c1)' = {derivative:.3e} at kappa = {kappa}")]
    MarginalCase { kappa: f64, derivative: f64 },
    #[error("wrong regime: {0}")]
    WrongRegime(String),
    #[error("eigen-solver failure: {0}")]
    EigenFailure(String),
    #[error("step rejected at t = {t}: dt shrank to {dt:.3e}")]
    StepRejected { t: f64, dt: f64 },
    #[error("no linear regime found in decay series (best R^2 = {r2:.6})")]
    NoLinearRegime { r2: f64 },
}

impl Error {
    /// True for failures of a numerical procedure, false for rejected inputs.
    pub fn is_numerical(&self) -> bool {
        !matches!(self, Error::InvalidInput(_) | Error::NotAntisymmetric(_) | Error::NotARotation { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
