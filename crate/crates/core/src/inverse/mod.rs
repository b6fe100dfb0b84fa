//! Recovery of the spatial source factor `f` from final-time data.

mod admissibility;
mod constants;
mod solver;

pub use admissibility::{
    check_admissibility, compute_m, example_t_bound, planar_bound, regime_condition, AdmissibilityReport, Radius,
    RadiusInputs, Regime, RegimeCondition,
};
pub use constants::{k1, k2, k3, k_constants, KTable, K1, K2, K3};
pub use solver::{
    data_term, operator_a, operator_b, recover_pressure, solve_inverse, write_history, InverseOutcome,
    IterationRecord, PressureRecovery,
};

use std::sync::Arc;

use thiserror::Error;

use crate::forward::{CbfParams, ForwardError, Modulation};
use crate::spectral::{complement_project, norm_l2, spectral_divergence_max, SpectralError, TorusGrid, VectorField};

/// Tolerance on the divergence of `u₀`, `φ` and on the solenoidal part of `∇ψ`.
pub const DATA_TOLERANCE: f64 = 1e-9;

/// Smallest admissible `|g(x, T)|` when dividing by it.
pub const MIN_FINAL_MODULATION: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum InverseError {
    #[error("{0}")]
    Constants(String),
    #[error("invalid inverse problem: {0}")]
    InvalidProblem(String),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("|g(x, T)| = {value:.3e} at grid point {index} is below {MIN_FINAL_MODULATION:e}")]
    SmallModulation { index: usize, value: f64 },
    #[error("forward solve failed at iteration {iteration}: {source}")]
    ForwardBlowUp { iteration: usize, source: ForwardError },
    #[error(transparent)]
    Forward(#[from] ForwardError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Data of one source-recovery problem.
#[derive(Clone, Debug)]
pub struct InverseProblem {
    pub grid: Arc<TorusGrid>,
    pub params: CbfParams,
    pub t_end: f64,
    pub u0: VectorField,
    /// Target state `u(·, T)`.
    pub phi: VectorField,
    /// Target pressure gradient `∇p(·, T)`.
    pub grad_psi: VectorField,
    pub g: Modulation,
}

impl InverseProblem {
    /// Checks shapes, solenoidality of `u₀`, `φ`, the gradient structure of
    /// `∇ψ` and positivity of `g(·, T)`. Collects every violation.
    pub fn validate(&self) -> Result<(), InverseError> {
        self.params.validate()?;
        let mut problems = Vec::new();
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            problems.push(format!("final time must be positive, got {}", self.t_end));
        }
        if self.grid.dim() != self.params.dim {
            problems.push(format!("grid dimension {} differs from parameter dimension {}", self.grid.dim(), self.params.dim));
        }
        let fields = [("u0", &self.u0), ("phi", &self.phi), ("grad_psi", &self.grad_psi)];
        let shapes_ok = fields.iter().all(|(name, v)| {
            let ok = v.dim() == self.grid.dim() && v.grid().len() == self.grid.len();
            if !ok {
                problems.push(format!("{name} does not match the grid"));
            }
            ok
        });
        if shapes_ok {
            for (name, v) in &fields[..2] {
                let div = spectral_divergence_max(v);
                if div > DATA_TOLERANCE * (1.0 + norm_l2(v)) {
                    problems.push(format!("{name} is not divergence-free (max |∇·{name}| = {div:.3e})"));
                }
            }
            let sol = norm_l2(&self.grad_psi.sub(&complement_project(&self.grad_psi)));
            if sol > DATA_TOLERANCE * (1.0 + norm_l2(&self.grad_psi)) {
                problems.push(format!("grad_psi has a solenoidal part of norm {sol:.3e}"));
            }
        }
        if let Err(e) = self.g.check_len(self.grid.len()) {
            problems.push(e.to_string());
        } else {
            let gt = self.g.eval(self.t_end).min_abs();
            if !(gt > 0.0) {
                problems.push(format!("min |g(·, T)| must be positive, got {gt:e}"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(InverseError::InvalidProblem(problems.join("; ")))
        }
    }
}

/// How iterates are confined to a ball.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BallMode {
    /// Radius from the admissibility report; unbounded when it is undefined.
    Computed,
    User(f64),
    Unbounded,
}

/// Settings of the relaxed Picard iteration `f ← (1 − θ) f + θ B f`.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedPointConfig {
    pub max_iters: usize,
    /// Stop when `‖f^{k+1} − f^k‖ / max(‖f^k‖, ε)` drops to this value.
    pub rel_tol: f64,
    /// Relaxation θ in `(0, 1]`.
    pub relaxation: f64,
    pub ball: BallMode,
    /// Time steps of each forward solve.
    pub nt: usize,
    /// Leray-project the output of `B`.
    pub project_output: bool,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        Self { max_iters: 200, rel_tol: 1e-8, relaxation: 1.0, ball: BallMode::Computed, nt: 1000, project_output: false }
    }
}

impl FixedPointConfig {
    pub fn validate(&self) -> Result<(), InverseError> {
        let mut problems = Vec::new();
        if self.max_iters < 1 {
            problems.push("max_iters must be at least 1".to_string());
        }
        if !(self.rel_tol > 0.0) {
            problems.push(format!("rel_tol must be positive, got {}", self.rel_tol));
        }
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            problems.push(format!("relaxation must lie in (0, 1], got {}", self.relaxation));
        }
        if let BallMode::User(m) = self.ball {
            if !(m > 0.0) {
                problems.push(format!("ball radius must be positive, got {m}"));
            }
        }
        if self.nt == 0 {
            problems.push("nt must be positive".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(InverseError::InvalidConfig(problems.join("; ")))
        }
    }
}
