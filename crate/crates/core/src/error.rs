use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("matching radius not reached before R = {r_max} bohr (E = {energy}, L = {l})")]
    GridTooSmall { energy: f64, l: usize, r_max: f64 },

    #[error("degenerate kinematics: momentum transfer {0} is zero")]
    KinematicDegenerate(f64),

    #[error("infeasible superposition: {0}")]
    Infeasible(String),

    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("degenerate contact slice: zero norm at x = 0")]
    DegenerateSlice,

    #[error("degenerate curve: {0}")]
    Degenerate(String),

    #[error("packets never overlap (peak overlap {0:e})")]
    NoCollision(f64),

    #[error("parameter search failed: {0}")]
    Bracket(String),

    #[error("not converged: {0}")]
    Convergence(String),
}

impl Error {
    /// True for failures of a numerical procedure rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::GridTooSmall { .. }
                | Error::NoCollision(_)
                | Error::Bracket(_)
                | Error::Convergence(_)
                | Error::DegenerateSlice
                | Error::Degenerate(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive and finite, got {value}")))
    }
}
