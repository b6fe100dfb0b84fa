use std::fmt::Write as _;

use crate::forward::{CbfParams, Dynamics, ForwardError, Modulation, Trajectory};
use crate::spectral::ops::derivative;
use crate::spectral::{norm_h1_semi, norm_l2, norm_laplacian, norm_lp, VectorField};

/// Norms and time integrals of one trajectory, sampled at its recorded times.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyLedger {
    pub params: CbfParams,
    pub t_end: f64,
    pub times: Vec<f64>,
    /// `‖u(t)‖_H`
    pub l2: Vec<f64>,
    /// `‖∇u(t)‖_H`
    pub grad: Vec<f64>,
    /// `‖u(t)‖_{L^{r+1}}`
    pub lr1: Vec<f64>,
    /// `‖u_t(t)‖_H` from the right-hand side
    pub rate: Vec<f64>,
    /// `‖Δu(t)‖_H`
    pub lap: Vec<f64>,
    /// `‖|u|^{(r−1)/2} |∇u|‖²_H`
    pub weighted_grad_sq: Vec<f64>,
    /// Running trapezoid integrals from `0` of `‖∇u‖²`, `‖u‖²`,
    /// `‖u‖^{r+1}_{L^{r+1}}`, `‖u_t‖²`, `‖Δu‖²`, `‖|u|^{(r−1)/2}|∇u|‖²`.
    pub int_grad_sq: Vec<f64>,
    pub int_l2_sq: Vec<f64>,
    pub int_lr1: Vec<f64>,
    pub int_rate_sq: Vec<f64>,
    pub int_lap_sq: Vec<f64>,
    pub int_weighted_grad_sq: Vec<f64>,
    /// `‖u₀‖_H`
    pub u0_norm: f64,
    /// `‖f‖_H`
    pub f_norm: f64,
    /// `sup |g|` over the grid and the step times
    pub g_sup: f64,
    /// `sup |g_t|` over the grid and the step times
    pub gt_sup: f64,
    /// Index of the recorded time nearest to `jT/8`, `j = 0..=8`.
    pub landmarks: [usize; 9],
}

/// `∫ |u|^{r−1} |∇u|² dx` by grid quadrature.
pub(crate) fn weighted_gradient_sq(u: &VectorField, r: f64) -> f64 {
    let grid = u.grid();
    let hat = u.spectral_comps();
    let phys = u.physical_comps();
    let n = grid.len();
    let mut gsq = vec![0.0; n];
    for c in &hat {
        for j in 0..grid.dim() {
            let d = grid.to_physical(&derivative(grid, c, j));
            for (s, v) in gsq.iter_mut().zip(&d) {
                *s += v * v;
            }
        }
    }
    let mut sum = 0.0;
    for (p, g2) in gsq.iter().enumerate() {
        let m2: f64 = phys.iter().map(|c| c[p] * c[p]).sum();
        let w = if r == 1.0 { 1.0 } else if m2 == 0.0 { 0.0 } else { m2.powf(0.5 * (r - 1.0)) };
        sum += w * g2;
    }
    sum * grid.cell_volume()
}

fn cumulative_trapezoid(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..values.len() {
        acc += 0.5 * (times[i] - times[i - 1]) * (values[i] + values[i - 1]);
        out.push(acc);
    }
    out
}

/// Evaluates every monitored norm at the recorded times of `traj`.
pub fn build_ledger(traj: &Trajectory, f: &VectorField, g: &Modulation, params: &CbfParams) -> Result<EnergyLedger, ForwardError> {
    let first = traj.states.first().ok_or_else(|| ForwardError::InvalidInput("empty trajectory".into()))?;
    let grid = first.grid().clone();
    let dynamics = Dynamics::new(&grid, f, params)?;
    let r = params.r;
    let m = traj.states.len();
    let (mut l2, mut grad, mut lr1, mut rate, mut lap, mut wg) =
        (Vec::with_capacity(m), Vec::with_capacity(m), Vec::with_capacity(m), Vec::with_capacity(m), Vec::with_capacity(m), Vec::with_capacity(m));
    for (t, u) in traj.times.iter().zip(&traj.states) {
        l2.push(norm_l2(u));
        grad.push(norm_h1_semi(u));
        lr1.push(norm_lp(u, r + 1.0)?);
        rate.push(norm_l2(&dynamics.rhs_at(u, g, *t)));
        lap.push(norm_laplacian(u));
        wg.push(weighted_gradient_sq(u, r));
    }
    let times = traj.times.clone();
    let sq = |v: &[f64]| v.iter().map(|x| x * x).collect::<Vec<_>>();
    let int_grad_sq = cumulative_trapezoid(&times, &sq(&grad));
    let int_l2_sq = cumulative_trapezoid(&times, &sq(&l2));
    let int_lr1 = cumulative_trapezoid(&times, &lr1.iter().map(|x| x.powf(r + 1.0)).collect::<Vec<_>>());
    let int_rate_sq = cumulative_trapezoid(&times, &sq(&rate));
    let int_lap_sq = cumulative_trapezoid(&times, &sq(&lap));
    let int_weighted_grad_sq = cumulative_trapezoid(&times, &wg);
    let t_end = traj.t_end;
    let mut landmarks = [0usize; 9];
    for (j, slot) in landmarks.iter_mut().enumerate() {
        let target = t_end * j as f64 / 8.0;
        *slot = nearest(&times, target);
    }
    Ok(EnergyLedger {
        params: *params,
        t_end,
        u0_norm: l2[0],
        f_norm: norm_l2(f),
        g_sup: g.sup_norm(t_end, traj.nt),
        gt_sup: g.rate_sup_norm(t_end, traj.nt),
        times,
        l2,
        grad,
        lr1,
        rate,
        lap,
        weighted_grad_sq: wg,
        int_grad_sq,
        int_l2_sq,
        int_lr1,
        int_rate_sq,
        int_lap_sq,
        int_weighted_grad_sq,
        landmarks,
    })
}

fn nearest(times: &[f64], target: f64) -> usize {
    let mut best = 0;
    for (i, t) in times.iter().enumerate() {
        if (t - target).abs() < (times[best] - target).abs() {
            best = i;
        }
    }
    best
}

impl EnergyLedger {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `‖u(t)‖^{r+1}_{L^{r+1}}`
    pub fn lr1_power(&self, i: usize) -> f64 {
        self.lr1[i].powf(self.params.r + 1.0)
    }

    /// Indices of recorded times inside `[a, b]`, with a relative slack that
    /// keeps landmark times on the boundary.
    pub fn window(&self, a: f64, b: f64) -> Vec<usize> {
        let eps = 1e-12 * self.t_end;
        (0..self.len()).filter(|&i| self.times[i] >= a - eps && self.times[i] <= b + eps).collect()
    }

    /// Time series as CSV.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "time,l2,h1_semi,lr1,rate,laplacian,weighted_grad_sq,int_grad_sq,int_l2_sq,int_lr1,int_rate_sq,int_lap_sq,int_weighted_grad_sq\n",
        );
        for i in 0..self.len() {
            let row = [
                self.times[i],
                self.l2[i],
                self.grad[i],
                self.lr1[i],
                self.rate[i],
                self.lap[i],
                self.weighted_grad_sq[i],
                self.int_grad_sq[i],
                self.int_l2_sq[i],
                self.int_lr1[i],
                self.int_rate_sq[i],
                self.int_lap_sq[i],
                self.int_weighted_grad_sq[i],
            ];
            let line: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
            let _ = writeln!(s, "{}", line.join(","));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{solve_forward, SamplingPolicy};
    use crate::spectral::make_grid;
    use std::f64::consts::PI;

    #[test]
    fn trapezoid_of_linear_function_is_exact() {
        let t = [0.0, 0.5, 1.5, 2.0];
        let v = [0.0, 1.0, 3.0, 4.0];
        assert_eq!(cumulative_trapezoid(&t, &v), vec![0.0, 0.25, 2.25, 4.0]);
    }

    #[test]
    fn zero_trajectory_gives_zero_ledger() {
        let g = make_grid(2, 16, 1.0).unwrap();
        let p = CbfParams { mu: 1.0, alpha: 1.0, beta: 1.0, r: 3.0, dim: 2, length: 1.0 };
        let z = VectorField::zeros(&g);
        let traj = solve_forward(&z, &z, &Modulation::Constant(1.0), &p, 1.0, 16, &SamplingPolicy::every_step()).unwrap();
        let led = build_ledger(&traj, &z, &Modulation::Constant(1.0), &p).unwrap();
        for series in [&led.l2, &led.grad, &led.rate, &led.int_grad_sq, &led.int_lr1, &led.int_rate_sq] {
            assert!(series.iter().all(|&x| x == 0.0));
        }
        assert_eq!(led.landmarks, [0, 2, 4, 6, 8, 10, 12, 14, 16]);
    }

    #[test]
    fn taylor_green_ledger_matches_closed_form() {
        let g = make_grid(2, 32, 2.0 * PI).unwrap();
        let p = CbfParams { mu: 0.5, alpha: 0.5, beta: 0.5, r: 1.0, dim: 2, length: 2.0 * PI };
        let u0 = VectorField::from_fn(&g, |x| [x[0].sin() * x[1].cos(), -x[0].cos() * x[1].sin(), 0.0]);
        let z = VectorField::zeros(&g);
        let (t_end, nt) = (0.5, 500);
        let traj = solve_forward(&u0, &z, &Modulation::Constant(1.0), &p, t_end, nt, &SamplingPolicy::every_step()).unwrap();
        let led = build_ledger(&traj, &z, &Modulation::Constant(1.0), &p).unwrap();
        let lam = 2.0 * p.mu + p.alpha + p.beta;
        // ‖u₀‖² = 2π², ‖∇u₀‖² = 2‖u₀‖²
        let a2 = 2.0 * PI * PI;
        for (t, l) in led.times.iter().zip(&led.l2) {
            assert!((l - (-lam * t).exp() * a2.sqrt()).abs() <= 1e-6 * a2.sqrt());
        }
        let exact = 2.0 * a2 * (1.0 - (-2.0 * lam * t_end).exp()) / (2.0 * lam);
        let got = *led.int_grad_sq.last().unwrap();
        assert!((got - exact).abs() <= 1e-5 * exact, "{got} vs {exact}");
        // u_t = −λu
        assert!((led.rate[0] - lam * a2.sqrt()).abs() < 1e-10);
    }
}
