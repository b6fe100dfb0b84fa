use std::sync::Arc;

use num_complex::Complex64;

use super::operators::{Coeffs, Dynamics};
use super::{CbfParams, ForwardError, Modulation};
use crate::spectral::ops::{dealias_in_place, project_in_place};
use crate::spectral::{TorusGrid, VectorField};

/// Sup-norm above which a step is declared unstable.
pub const BLOWUP_LIMIT: f64 = 1e6;

/// Which step indices of a forward solve are stored.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplingPolicy {
    /// Store every `every`-th step.
    pub every: usize,
    /// Also store steps 1, 2, 4, 8, … below `every`.
    pub geometric_start: bool,
    /// Also store the steps nearest to `jT/8`, `j = 1..8`.
    pub landmarks: bool,
    /// Record `∇p` at each stored time.
    pub pressure: bool,
}

impl SamplingPolicy {
    pub fn final_only() -> Self {
        Self { every: usize::MAX, geometric_start: false, landmarks: false, pressure: false }
    }

    /// Uniform sampling with roughly `samples` intervals plus the geometric
    /// start and the landmark times.
    pub fn standard(nt: usize, samples: usize) -> Self {
        Self { every: (nt / samples.max(1)).max(1), geometric_start: true, landmarks: true, pressure: false }
    }

    pub fn every_step() -> Self {
        Self { every: 1, geometric_start: false, landmarks: false, pressure: false }
    }

    /// Sorted step indices to store, always including 0 and `nt`.
    pub fn steps(&self, nt: usize) -> Vec<usize> {
        let mut s = vec![0, nt];
        if self.every != usize::MAX {
            s.extend((0..=nt).step_by(self.every.max(1)));
        }
        if self.geometric_start {
            let mut k = 1;
            while k < self.every.min(nt) {
                s.push(k);
                k *= 2;
            }
        }
        if self.landmarks {
            s.extend((1..=8).map(|j| ((j * nt) as f64 / 8.0).round() as usize));
        }
        s.sort_unstable();
        s.dedup();
        s
    }
}

/// Stored states of a forward solve.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<VectorField>,
    pub pressure: Option<Vec<VectorField>>,
    /// `u_t(T)` evaluated from the right-hand side.
    pub final_rate: VectorField,
    pub nt: usize,
    pub t_end: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &VectorField {
        self.states.last().expect("trajectory holds at least two states")
    }
}

struct Stepper<'a> {
    dynamics: &'a Dynamics,
    g: &'a Modulation,
    e: Vec<f64>,
    dt: f64,
}

impl<'a> Stepper<'a> {
    fn new(dynamics: &'a Dynamics, g: &'a Modulation, dt: f64) -> Self {
        let p = dynamics.params();
        let e = dynamics.grid().ksq().iter().map(|k2| (-(p.mu * k2 + p.alpha) * dt).exp()).collect();
        Self { dynamics, g, e, dt }
    }

    fn grid(&self) -> &Arc<TorusGrid> {
        self.dynamics.grid()
    }

    /// One integrating-factor Heun step from `t` to `t + dt`; returns the new
    /// state and `sup |u|` of the incoming one.
    fn advance(&self, u: &Coeffs, t: f64, t_next: f64) -> (Coeffs, f64) {
        let (n0, linf) = self.dynamics.explicit_hat(u, &self.g.eval(t));
        let predictor: Coeffs = u
            .iter()
            .zip(&n0)
            .map(|(uc, nc)| {
                uc.iter().zip(nc).zip(&self.e).map(|((a, b), e)| (a + self.dt * b) * e).collect()
            })
            .collect();
        let (n1, _) = self.dynamics.explicit_hat(&predictor, &self.g.eval(t_next));
        let half = 0.5 * self.dt;
        let mut next: Coeffs = (0..u.len())
            .map(|a| {
                (0..u[a].len())
                    .map(|p| self.e[p] * (u[a][p] + half * n0[a][p]) + half * n1[a][p])
                    .collect()
            })
            .collect();
        project_in_place(self.grid(), &mut next);
        for c in next.iter_mut() {
            dealias_in_place(self.grid(), c);
        }
        (next, linf)
    }
}

fn guard(step: usize, time: f64, linf: f64) -> Result<(), ForwardError> {
    if linf.is_nan() || linf > BLOWUP_LIMIT {
        Err(ForwardError::BlowUp { step, time, linf })
    } else {
        Ok(())
    }
}

fn sup_of(grid: &TorusGrid, u: &[Vec<Complex64>]) -> f64 {
    let phys: Vec<Vec<f64>> = u.iter().map(|c| grid.to_physical(c)).collect();
    let mut m: f64 = 0.0;
    for p in 0..grid.len() {
        let m2: f64 = phys.iter().map(|c| c[p] * c[p]).sum();
        if m2.is_nan() {
            return f64::NAN;
        }
        m = m.max(m2.sqrt());
    }
    m
}

/// One IMEX step of size `dt` from time `t`.
pub fn step(
    u: &VectorField,
    t: f64,
    dt: f64,
    f: &VectorField,
    g: &Modulation,
    params: &CbfParams,
) -> Result<VectorField, ForwardError> {
    if !(dt > 0.0) {
        return Err(ForwardError::InvalidInput(format!("time step must be positive, got {dt}")));
    }
    let grid = u.grid().clone();
    g.check_len(grid.len())?;
    let dynamics = Dynamics::new(&grid, f, params)?;
    let stepper = Stepper::new(&dynamics, g, dt);
    let (next, linf) = stepper.advance(&u.spectral_comps(), t, t + dt);
    guard(0, t, linf)?;
    let out_sup = sup_of(&grid, &next);
    guard(1, t + dt, out_sup)?;
    Ok(VectorField::from_spectral(&grid, next).with_solenoidal(true))
}

/// Integrates from `u0` over `[0, t_end]` in `nt` uniform steps.
pub fn solve_forward(
    u0: &VectorField,
    f: &VectorField,
    g: &Modulation,
    params: &CbfParams,
    t_end: f64,
    nt: usize,
    policy: &SamplingPolicy,
) -> Result<Trajectory, ForwardError> {
    if nt == 0 {
        return Err(ForwardError::InvalidInput("step count must be positive".into()));
    }
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(ForwardError::InvalidInput(format!("final time must be positive, got {t_end}")));
    }
    let grid = u0.grid().clone();
    g.check_len(grid.len())?;
    let dynamics = Dynamics::new(&grid, f, params)?;
    let dt = t_end / nt as f64;
    let stepper = Stepper::new(&dynamics, g, dt);
    let time_of = |j: usize| t_end * j as f64 / nt as f64;

    let keep = policy.steps(nt);
    let mut next_keep = 0;
    let mut times = Vec::with_capacity(keep.len());
    let mut states = Vec::with_capacity(keep.len());
    let mut pressure = policy.pressure.then(Vec::new);

    let mut u: Coeffs = u0.spectral_comps();
    project_in_place(&grid, &mut u);
    for c in u.iter_mut() {
        dealias_in_place(&grid, c);
    }
    let mut record = |j: usize, u: &Coeffs, times: &mut Vec<f64>, states: &mut Vec<VectorField>| {
        let t = time_of(j);
        let field = VectorField::from_spectral(&grid, u.clone()).with_solenoidal(true);
        if let Some(p) = pressure.as_mut() {
            p.push(dynamics.pressure_at(&field, g, t));
        }
        times.push(t);
        states.push(field);
    };

    for j in 0..nt {
        if keep[next_keep] == j {
            record(j, &u, &mut times, &mut states);
            next_keep += 1;
        }
        let (next, linf) = stepper.advance(&u, time_of(j), time_of(j + 1));
        guard(j, time_of(j), linf)?;
        u = next;
    }
    guard(nt, t_end, sup_of(&grid, &u))?;
    record(nt, &u, &mut times, &mut states);

    let last = states.last().expect("final state recorded");
    let final_rate = dynamics.rhs_at(last, g, t_end);
    Ok(Trajectory { times, states, pressure, final_rate, nt, t_end })
}
