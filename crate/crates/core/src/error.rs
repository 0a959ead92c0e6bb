use thiserror::Error;

/// Errors raised by the engine, the Fock-space oracle and the sweep front end.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter out of range: {0}")]
    Range(String),

    #[error("no stable state in this regime: {0}")]
    UnstableRegime(String),

    #[error("Fermi window selects {selected} modes, half filling needs {expected}")]
    HalfFilling { selected: usize, expected: usize },

    #[error("Fock truncation not converged: {0}")]
    Truncation(String),

    #[error("constrained Liouvillian is singular (pivot {pivot:e} at row {row})")]
    SingularLiouvillian { row: usize, pivot: f64 },

    #[error("finite-difference step not converged: estimates {coarse:e} and {fine:e} disagree")]
    Step { coarse: f64, fine: f64 },

    #[error("quadrature grid too narrow: integrated mass {mass}")]
    Grid { mass: f64 },

    #[error("covariance lost positivity at t = {time}: smallest eigenvalue {eigenvalue:e}")]
    Stability { time: f64, eigenvalue: f64 },

    #[error("Gaussian QFI prefactor is singular (|256 det^2 - 1| = {0:e})")]
    PurityPole(f64),

    #[error("division by zero: {0}")]
    DivisionByZero(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
