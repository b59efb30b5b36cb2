use thiserror::Error;

/// Errors raised by the solvers.
///
/// The variants are grouped by how a driver should react: input problems,
/// admissibility violations (the problem is ill-posed for the chosen
/// parameters) and numerical failures.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument {x} is within {distance:e} of the gamma pole at {pole}")]
    Pole { x: f64, pole: f64, distance: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("Mittag-Leffler evaluation failed for alpha={alpha}, beta={beta}, z={z}: {reason}")]
    RegimeFailure {
        alpha: f64,
        beta: f64,
        z: f64,
        reason: String,
    },

    #[error("quadrature did not converge after {panels} panels (last change {change:e})")]
    QuadratureNonConvergence { panels: usize, change: f64 },

    #[error("root scan produced no finite samples of rho")]
    EmptyScan,

    #[error("contour integral for {constant} does not decay along the ray at theta={theta}")]
    DivergentContour { constant: &'static str, theta: f64 },

    #[error(
        "final time T={t_final} is within relative distance {distance:e} of the resonant \
         horizon (eta/lambda)^(1/alpha) for mode index {mode} and root index {root} (eta={eta})"
    )]
    InadmissibleT {
        t_final: f64,
        mode: usize,
        root: usize,
        eta: f64,
        distance: f64,
    },

    #[error("rho(lambda T^alpha) = {rho:e} is numerically zero for mode index {mode}")]
    RhoNearZero { mode: usize, rho: f64 },

    #[error("observation time xi={xi} is inadmissible: lambda |Delta(xi)| = {scaled:e} for mode index {mode}")]
    InadmissibleXi { xi: f64, mode: usize, scaled: f64 },

    #[error("functional is degenerate: |Phi[f]| = {value:e} is below the margin {margin:e}")]
    FunctionalDegenerate { value: f64, margin: f64 },

    #[error("functional coefficients are not square summable (tail fraction {tail_fraction:.3})")]
    FunctionalNotSquareSummable { tail_fraction: f64 },

    #[error("time grid too coarse: {nodes} nodes, need at least {required}")]
    GridTooCoarse { nodes: usize, required: usize },

    #[error("linear system is singular (condition estimate {condition:e})")]
    SingularSystem { condition: f64 },

    #[error("verification failed: {0}")]
    VerificationFailure(String),

    #[error("observation data vanish while p does not (|p|_inf = {p_norm:e})")]
    ZeroData { p_norm: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// True for errors signalling that T, xi or Phi[f] violate an
    /// admissibility hypothesis.
    pub fn is_admissibility(&self) -> bool {
        matches!(
            self,
            Error::InadmissibleT { .. }
                | Error::RhoNearZero { .. }
                | Error::InadmissibleXi { .. }
                | Error::FunctionalDegenerate { .. }
        )
    }

    /// True for numerical breakdowns (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::RegimeFailure { .. }
                | Error::QuadratureNonConvergence { .. }
                | Error::EmptyScan
                | Error::DivergentContour { .. }
                | Error::SingularSystem { .. }
                | Error::VerificationFailure(_)
                | Error::ZeroData { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
