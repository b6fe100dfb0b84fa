//! Time integration of the CBF system on the torus.

mod export;
mod modulation;
mod operators;
mod stepper;

pub use export::{export_trajectory, read_manifest, TrajectoryDiagnostics};
pub use modulation::{GValue, Modulation, TimeProfile};
pub use operators::{
    convection, damping, damping_jacobian_apply, damping_physical, pressure_gradient, rhs, Dynamics,
};
pub(crate) use operators::linear_part;
pub use stepper::{solve_forward, step, SamplingPolicy, Trajectory, BLOWUP_LIMIT};

use thiserror::Error;

use crate::spectral::SpectralError;

#[derive(Debug, Error)]
pub enum ForwardError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("solution blew up at step {step} (t = {time:.6e}): sup norm {linf:.3e}")]
    BlowUp { step: usize, time: f64, linf: f64 },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Physical constants of the model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CbfParams {
    /// Brinkman viscosity μ.
    pub mu: f64,
    /// Darcy coefficient α.
    pub alpha: f64,
    /// Forchheimer coefficient β.
    pub beta: f64,
    /// Absorption exponent r.
    pub r: f64,
    pub dim: usize,
    pub length: f64,
}

impl CbfParams {
    pub fn validate(&self) -> Result<(), ForwardError> {
        let mut problems = Vec::new();
        for (name, v) in [("mu", self.mu), ("alpha", self.alpha), ("beta", self.beta), ("length", self.length)] {
            if !(v > 0.0) || !v.is_finite() {
                problems.push(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.r >= 1.0) || !self.r.is_finite() {
            problems.push(format!("r must be >= 1, got {}", self.r));
        }
        if self.dim != 2 && self.dim != 3 {
            problems.push(format!("dimension must be 2 or 3, got {}", self.dim));
        }
        if self.dim == 3 && self.r < 3.0 {
            problems.push("r ≥ 3 required for d = 3".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ForwardError::InvalidParams(problems.join("; ")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> CbfParams {
        CbfParams { mu: 1.0, alpha: 1.0, beta: 1.0, r: 3.0, dim: 3, length: 1.0 }
    }

    #[test]
    fn accepts_regular_parameters() {
        assert!(base().validate().is_ok());
    }

    #[test]
    fn rejects_low_exponent_in_3d() {
        let p = CbfParams { r: 2.0, ..base() };
        let err = p.validate().unwrap_err().to_string();
        assert!(err.contains("r ≥ 3 required for d = 3"));
        assert!(CbfParams { r: 2.0, dim: 2, ..base() }.validate().is_ok());
    }

    #[test]
    fn rejects_nonpositive_constants() {
        assert!(CbfParams { mu: 0.0, ..base() }.validate().is_err());
        assert!(CbfParams { beta: -1.0, ..base() }.validate().is_err());
        assert!(CbfParams { r: 0.5, dim: 2, ..base() }.validate().is_err());
    }
}
