use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("the zero wavevector has no Coulomb interaction")]
    ZeroMode,

    #[error("frequency {0} lies in the upper half-plane (Im tau must be <= 0)")]
    UpperHalfPlane(num_complex::Complex64),

    #[error("dispersion integral diverges: Re xi = {re} is not below lambda_dagger = {bound}")]
    Divergent { re: f64, bound: f64 },

    #[error("quadrature did not reach tolerance {tol:e} (estimate {estimate:e}) after {panels} panels")]
    Quadrature {
        tol: f64,
        estimate: f64,
        panels: usize,
    },

    #[error("Volterra step blow-up: |1 - dt K(0)/2| = {0:e} is below 1e-8; reduce the step size")]
    StepSize(f64),

    #[error("fit rejected: {0}")]
    Fit(String),

    #[error("no epsilon on the grid reaches kappa_target = {0}")]
    NoQualifyingEpsilon(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
