use std::fmt::Write as _;
use std::time::Instant;

use super::{
    check_admissibility, AdmissibilityReport, BallMode, FixedPointConfig, InverseError, InverseProblem,
    MIN_FINAL_MODULATION,
};
use crate::forward::{linear_part, solve_forward, Dynamics, GValue, SamplingPolicy};
use crate::spectral::{leray_project, norm_l2, VectorField};

/// `(φ·∇)φ + ∇ψ − μΔφ + αφ + β|φ|^{r−1}φ`, with the nonlinear terms dealiased
/// exactly as in the forward right-hand side.
pub fn data_term(problem: &InverseProblem) -> Result<VectorField, InverseError> {
    let grid = &problem.grid;
    let dynamics = Dynamics::new(grid, &VectorField::zeros(grid), &problem.params)?;
    let phi_hat = problem.phi.spectral_comps();
    let (mut out, _) = dynamics.nonlinear_hat(&phi_hat);
    let lin = linear_part(grid, &problem.params, &phi_hat);
    let psi = problem.grad_psi.spectral_comps();
    for ((o, l), q) in out.iter_mut().zip(&lin).zip(&psi) {
        for ((a, b), c) in o.iter_mut().zip(l).zip(q) {
            *a += b + c;
        }
    }
    Ok(VectorField::from_spectral(grid, out))
}

/// `A f = u_t(·, T)` of the forward solution driven by `f g`.
pub fn operator_a(f: &VectorField, problem: &InverseProblem, nt: usize) -> Result<VectorField, InverseError> {
    let traj = solve_forward(&problem.u0, f, &problem.g, &problem.params, problem.t_end, nt, &SamplingPolicy::final_only())?;
    Ok(traj.final_rate)
}

/// Divides `v` pointwise by `g(·, T)`.
fn divide_by_final_modulation(v: &VectorField, g_final: &GValue) -> Result<VectorField, InverseError> {
    let grid = v.grid();
    match g_final {
        GValue::Uniform(c) => {
            if c.abs() < MIN_FINAL_MODULATION {
                return Err(InverseError::SmallModulation { index: 0, value: *c });
            }
            Ok(v.scaled(1.0 / c))
        }
        GValue::Field(gv) => {
            if let Some((index, &value)) = gv.iter().enumerate().find(|(_, x)| x.abs() < MIN_FINAL_MODULATION) {
                return Err(InverseError::SmallModulation { index, value });
            }
            let comps = v
                .physical_comps()
                .into_iter()
                .map(|c| c.iter().zip(gv).map(|(a, b)| a / b).collect())
                .collect();
            Ok(VectorField::from_physical(grid, comps))
        }
    }
}

fn apply_b(f: &VectorField, problem: &InverseProblem, data: &VectorField, config: &FixedPointConfig) -> Result<VectorField, InverseError> {
    let af = operator_a(f, problem, config.nt)?;
    let out = divide_by_final_modulation(&af.add(data), &problem.g.eval(problem.t_end))?;
    Ok(if config.project_output { leray_project(&out) } else { out.with_solenoidal(false) })
}

/// `B f = (A f + D) / g(·, T)` with `D` from [`data_term`].
pub fn operator_b(f: &VectorField, problem: &InverseProblem, config: &FixedPointConfig) -> Result<VectorField, InverseError> {
    apply_b(f, problem, &data_term(problem)?, config)
}

/// One Picard iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    /// `‖B f^k − f^k‖_H`
    pub residual: f64,
    /// `‖f^k‖_H`
    pub f_norm: f64,
    /// Whether the next iterate was pulled back onto the ball.
    pub scaled: bool,
    /// Seconds spent in the forward solve.
    pub wall_time: f64,
}

#[derive(Clone, Debug)]
pub struct InverseOutcome {
    pub f_hat: VectorField,
    pub iterations: usize,
    pub history: Vec<IterationRecord>,
    pub converged: bool,
    pub scaling_triggered: bool,
    /// Ball radius enforced, if any.
    pub radius: Option<f64>,
    pub admissibility: AdmissibilityReport,
    pub warnings: Vec<String>,
}

/// Relaxed Picard iteration for `f = B f`, started from `initial` (zero if
/// `None`). Without convergence the iterate with the smallest residual is
/// returned and `converged` is false.
pub fn solve_inverse(
    problem: &InverseProblem,
    config: &FixedPointConfig,
    initial: Option<&VectorField>,
) -> Result<InverseOutcome, InverseError> {
    problem.validate()?;
    config.validate()?;
    let admissibility = check_admissibility(problem, config.nt)?;
    let mut warnings = Vec::new();
    if !admissibility.admissible() {
        warnings.push(format!(
            "problem is not admissible (g_T = {:.3e}, {} slack {:.3e})",
            admissibility.g_final_min,
            admissibility.condition.label,
            admissibility.condition.slack()
        ));
    }
    let radius = match config.ball {
        BallMode::Unbounded => None,
        BallMode::User(m) => Some(m),
        BallMode::Computed => match &admissibility.radius.value {
            Ok(m) => Some(*m),
            Err(why) => {
                warnings.push(format!("ball radius undefined ({why}); iterating without a ball"));
                None
            }
        },
    };

    let grid = &problem.grid;
    let data = data_term(problem)?;
    let mut f = match initial {
        Some(f0) => {
            if f0.dim() != grid.dim() || f0.grid().len() != grid.len() {
                return Err(InverseError::InvalidProblem("initial iterate does not match the grid".into()));
            }
            f0.clone()
        }
        None => VectorField::zeros(grid),
    };
    let theta = config.relaxation;
    let mut history = Vec::new();
    let mut best: Option<(f64, VectorField)> = None;
    let mut converged = false;
    let mut scaling_triggered = false;

    for iter in 0..config.max_iters {
        let start = Instant::now();
        let bf = apply_b(&f, problem, &data, config).map_err(|e| match e {
            InverseError::Forward(source) => InverseError::ForwardBlowUp { iteration: iter, source },
            other => other,
        })?;
        let wall_time = start.elapsed().as_secs_f64();
        let f_norm = norm_l2(&f);
        let residual = norm_l2(&bf.sub(&f));
        if best.as_ref().map_or(true, |(r, _)| residual < *r) {
            best = Some((residual, f.clone()));
        }

        let mut next = if theta == 1.0 { bf } else { f.lin_comb(1.0 - theta, &bf, theta) };
        let mut scaled = false;
        if let Some(m) = radius {
            let norm = norm_l2(&next);
            if norm > m {
                next = next.scaled(m / norm);
                scaled = true;
                scaling_triggered = true;
            }
        }
        history.push(IterationRecord { iter, residual, f_norm, scaled, wall_time });
        let step = norm_l2(&next.sub(&f)) / f_norm.max(f64::MIN_POSITIVE);
        f = next;
        if step <= config.rel_tol {
            converged = true;
            break;
        }
    }

    let f_hat = if converged { f } else { best.map(|(_, b)| b).unwrap_or(f) };
    if !converged {
        warnings.push(format!("fixed-point iteration did not converge in {} iterations", config.max_iters));
    }
    Ok(InverseOutcome {
        f_hat,
        iterations: history.len(),
        history,
        converged,
        scaling_triggered,
        radius,
        admissibility,
        warnings,
    })
}

/// Final-time pressure gradient and state of the forward solve driven by `f`,
/// with their mismatch against the data.
#[derive(Clone, Debug)]
pub struct PressureRecovery {
    pub grad_p: VectorField,
    pub final_state: VectorField,
    /// `‖∇p(·, T) − ∇ψ‖_H`
    pub pressure_mismatch: f64,
    /// `‖u(·, T) − φ‖_H`
    pub state_mismatch: f64,
}

pub fn recover_pressure(problem: &InverseProblem, f: &VectorField, nt: usize) -> Result<PressureRecovery, InverseError> {
    let traj = solve_forward(&problem.u0, f, &problem.g, &problem.params, problem.t_end, nt, &SamplingPolicy::final_only())?;
    let dynamics = Dynamics::new(&problem.grid, f, &problem.params)?;
    let final_state = traj.final_state().clone();
    let grad_p = dynamics.pressure_at(&final_state, &problem.g, problem.t_end);
    Ok(PressureRecovery {
        pressure_mismatch: norm_l2(&grad_p.sub(&problem.grad_psi)),
        state_mismatch: norm_l2(&final_state.sub(&problem.phi)),
        grad_p,
        final_state,
    })
}

/// Iteration history as CSV. Wall times are written as zero unless `timing`
/// is set, so that repeated runs give identical files.
pub fn write_history(history: &[IterationRecord], timing: bool) -> String {
    let mut s = String::from("iter,residual,f_norm,scaled,forward_wall_time\n");
    for h in history {
        let wt = if timing { h.wall_time } else { 0.0 };
        let _ = writeln!(s, "{},{:.17e},{:.17e},{},{:.17e}", h.iter, h.residual, h.f_norm, h.scaled as u8, wt);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{CbfParams, Modulation};
    use crate::spectral::{make_grid, random_solenoidal, TorusGrid};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn zero_problem(grid: &Arc<TorusGrid>, p: CbfParams) -> InverseProblem {
        let z = VectorField::zeros(grid);
        InverseProblem {
            grid: grid.clone(),
            params: p,
            t_end: 0.2,
            u0: z.clone(),
            phi: z.clone(),
            grad_psi: z,
            g: Modulation::Constant(1.0),
        }
    }

    fn params() -> CbfParams {
        CbfParams { mu: 0.5, alpha: 0.5, beta: 0.5, r: 1.0, dim: 2, length: 2.0 * PI }
    }

    #[test]
    fn zero_data_converges_immediately() {
        let g = make_grid(2, 16, 2.0 * PI).unwrap();
        let prob = zero_problem(&g, params());
        let cfg = FixedPointConfig { nt: 20, ..Default::default() };
        let out = solve_inverse(&prob, &cfg, None).unwrap();
        assert!(out.converged);
        assert_eq!(out.iterations, 1);
        assert_eq!(norm_l2(&out.f_hat), 0.0);
        let rec = recover_pressure(&prob, &out.f_hat, 20).unwrap();
        assert_eq!(norm_l2(&rec.grad_p), 0.0);
    }

    #[test]
    fn taylor_green_operator_a() {
        let g = make_grid(2, 16, 2.0 * PI).unwrap();
        let p = params();
        let mut prob = zero_problem(&g, p);
        prob.u0 = VectorField::from_fn(&g, |x| [x[0].sin() * x[1].cos(), -x[0].cos() * x[1].sin(), 0.0]);
        prob.g = Modulation::Constant(3.0);
        let rate = 2.0 * p.mu + p.alpha + p.beta;
        let expected = prob.u0.scaled(-rate * (-rate * prob.t_end).exp());
        let af = operator_a(&VectorField::zeros(&g), &prob, 400).unwrap();
        assert!(norm_l2(&af.sub(&expected)) <= 1e-6 * norm_l2(&expected));
    }

    #[test]
    fn operator_a_depends_continuously_on_f() {
        let g = make_grid(2, 16, 2.0 * PI).unwrap();
        let p = CbfParams { r: 3.0, ..params() };
        let prob = zero_problem(&g, p);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_solenoidal(&g, 3, &mut rng);
        let h = random_solenoidal(&g, 3, &mut rng);
        let base = operator_a(&f, &prob, 40).unwrap();
        let diffs: Vec<f64> = [1e-1, 1e-2, 1e-3]
            .iter()
            .map(|&e| norm_l2(&operator_a(&f.lin_comb(1.0, &h, e), &prob, 40).unwrap().sub(&base)))
            .collect();
        assert!(diffs[0] > diffs[1] && diffs[1] > diffs[2] && diffs[2] < 1e-2 * diffs[0]);
    }

    #[test]
    fn small_final_modulation_is_rejected() {
        let g = make_grid(2, 16, 2.0 * PI).unwrap();
        let v = VectorField::zeros(&g);
        let mut gv = vec![1.0; g.len()];
        gv[7] = 1e-13;
        assert!(matches!(
            divide_by_final_modulation(&v, &GValue::Field(gv)),
            Err(InverseError::SmallModulation { index: 7, .. })
        ));
    }

    #[test]
    fn history_csv_is_deterministic_without_timing() {
        let h = vec![IterationRecord { iter: 0, residual: 1.0, f_norm: 0.0, scaled: false, wall_time: 0.37 }];
        let csv = write_history(&h, false);
        assert!(csv.ends_with("0,1.00000000000000000e0,0.00000000000000000e0,0,0.00000000000000000e0\n"));
    }
}
