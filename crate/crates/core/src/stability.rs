//! Data-perturbation sweeps measuring how the recovered source and state move
//! with the data, and least-squares fits of the resulting rates.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::forward::{solve_forward, SamplingPolicy, Trajectory};
use crate::inverse::{solve_inverse, FixedPointConfig, InverseError, InverseProblem};
use crate::spectral::{
    gradient, laplacian, norm_h1_semi, norm_hminus1, norm_l2, norm_lp, random_scalar, random_solenoidal, VectorField,
};

/// Which datum is perturbed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PerturbationTarget {
    U0,
    Phi,
    GradPsi,
    /// `g + δ h(x)`
    G,
    /// `g + δ h(x) t`, which perturbs `g_t` by `δ h`
    Gt,
}

impl PerturbationTarget {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "u0" => Self::U0,
            "phi" => Self::Phi,
            "grad_psi" => Self::GradPsi,
            "g" => Self::G,
            "g_t" => Self::Gt,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::U0 => "u0",
            Self::Phi => "phi",
            Self::GradPsi => "grad_psi",
            Self::G => "g",
            Self::Gt => "g_t",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationSpec {
    pub target: PerturbationTarget,
    /// Strictly decreasing amplitudes.
    pub amplitudes: Vec<f64>,
    pub seed: u64,
    /// Highest integer wavenumber of the random direction field.
    pub kmax: i64,
}

impl PerturbationSpec {
    /// `δ₀ · ratio^j` for `j = 0..rungs`.
    pub fn geometric(target: PerturbationTarget, delta0: f64, ratio: f64, rungs: usize, seed: u64) -> Self {
        let amplitudes = (0..rungs).map(|j| delta0 * ratio.powi(j as i32)).collect();
        Self { target, amplitudes, seed, kmax: 2 }
    }

    pub fn validate(&self) -> Result<(), InverseError> {
        let bad = |m: String| Err(InverseError::InvalidConfig(m));
        if self.amplitudes.is_empty() {
            return bad("perturbation ladder is empty".into());
        }
        if self.amplitudes.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
            return bad("perturbation amplitudes must be finite and nonnegative".into());
        }
        if self.amplitudes.windows(2).any(|w| w[1] >= w[0]) {
            return bad("perturbation amplitudes must be strictly decreasing".into());
        }
        if self.kmax < 1 {
            return bad("perturbation kmax must be at least 1".into());
        }
        Ok(())
    }
}

/// Settings of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub solver: FixedPointConfig,
    /// Approximate number of stored times per forward solve.
    pub samples: usize,
    /// Worker threads; zero uses the rayon default.
    pub threads: usize,
}

/// Error measures tabulated per row.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Column {
    /// `‖f₁ − f₂‖_H`
    Source,
    /// `sup_t ‖u₁ − u₂‖_H`
    StateSup,
    /// `(∫‖∇(u₁ − u₂)‖² dt)^{1/2}`
    GradientL2,
    /// `(∫‖u₁ − u₂‖^{r+1}_{L^{r+1}} dt)^{1/(r+1)}`
    LrNorm,
    /// `(∫‖∇(p₁ − p₂)‖_{H^{−1}}^{(r+1)/r} dt)^{r/(r+1)}`
    Pressure,
}

impl Column {
    pub const ALL: [Column; 5] = [Column::Source, Column::StateSup, Column::GradientL2, Column::LrNorm, Column::Pressure];

    pub fn name(&self) -> &'static str {
        match self {
            Column::Source => "f_err",
            Column::StateSup => "u_sup_err",
            Column::GradientL2 => "grad_l2_err",
            Column::LrNorm => "lr1_err",
            Column::Pressure => "pressure_hm1_err",
        }
    }

    fn index(&self) -> usize {
        *self as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityRow {
    pub delta: f64,
    pub valid: bool,
    pub note: String,
    pub iterations: usize,
    /// `‖Δu₀‖ + ‖Δg‖₀ + ‖Δg_t‖₀ + ‖∇Δφ‖ + ‖Δ∇ψ − μΔ(Δφ)‖`
    pub data_linear: f64,
    /// Same terms each raised to `2/(r+1)`.
    pub data_holder: f64,
    /// Indexed by [`Column`].
    pub errors: [f64; 5],
}

impl StabilityRow {
    pub fn error(&self, c: Column) -> f64 {
        self.errors[c.index()]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityTable {
    pub target: PerturbationTarget,
    /// `2/(r+1)`
    pub exponent: f64,
    pub rel_tol: f64,
    /// Norms of the base solution, indexed by [`Column`], used for the error floor.
    pub base: [f64; 5],
    pub rows: Vec<StabilityRow>,
}

impl StabilityTable {
    /// Rows that are valid and whose error in `c` clears `10 · rel_tol · base`.
    pub fn usable(&self, c: Column) -> Vec<&StabilityRow> {
        let floor = 10.0 * self.rel_tol * self.base[c.index()];
        self.rows.iter().filter(|r| r.valid && r.delta > 0.0 && r.error(c) > floor).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("delta,valid,iterations,data_linear,data_holder");
        for c in Column::ALL {
            s.push(',');
            s.push_str(c.name());
        }
        s.push('\n');
        for r in &self.rows {
            let _ = write!(s, "{:.17e},{},{},{:.17e},{:.17e}", r.delta, r.valid as u8, r.iterations, r.data_linear, r.data_holder);
            for e in r.errors {
                let _ = write!(s, ",{e:.17e}");
            }
            s.push('\n');
        }
        s
    }

    /// Two-column `delta error` text per column, for plotting.
    pub fn column_data(&self, c: Column) -> String {
        let mut s = String::new();
        for r in self.rows.iter().filter(|r| r.valid) {
            let _ = writeln!(s, "{:.17e} {:.17e}", r.delta, r.error(c));
        }
        s
    }
}

/// Direction field and data-difference norms of one perturbation.
struct Direction {
    field: Option<VectorField>,
    scalar: Option<Vec<f64>>,
    /// Per unit amplitude: `(u₀, g, g_t, ∇φ, ∇ψ − μΔφ)` difference norms.
    unit_norms: [f64; 5],
}

fn direction(base: &InverseProblem, spec: &PerturbationSpec) -> Direction {
    let grid = &base.grid;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mu = base.params.mu;
    let t = base.t_end;
    match spec.target {
        PerturbationTarget::U0 => {
            let v = random_solenoidal(grid, spec.kmax, &mut rng);
            let n = norm_l2(&v);
            Direction { field: Some(v), scalar: None, unit_norms: [n, 0.0, 0.0, 0.0, 0.0] }
        }
        PerturbationTarget::Phi => {
            let v = random_solenoidal(grid, spec.kmax, &mut rng);
            let lap = norm_l2(&laplacian(&v).scaled(mu));
            Direction { unit_norms: [0.0, 0.0, 0.0, norm_h1_semi(&v), lap], field: Some(v), scalar: None }
        }
        PerturbationTarget::GradPsi => {
            let q = gradient(&random_scalar(grid, spec.kmax, &mut rng));
            let v = q.scaled(1.0 / norm_l2(&q));
            Direction { unit_norms: [0.0, 0.0, 0.0, 0.0, 1.0], field: Some(v), scalar: None }
        }
        PerturbationTarget::G | PerturbationTarget::Gt => {
            let h = random_scalar(grid, spec.kmax, &mut rng).into_physical();
            let sup = h.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let h: Vec<f64> = h.iter().map(|x| x / sup).collect();
            let norms = if spec.target == PerturbationTarget::G {
                [0.0, 1.0, 0.0, 0.0, 0.0]
            } else {
                [0.0, t, 1.0, 0.0, 0.0]
            };
            Direction { field: None, scalar: Some(h), unit_norms: norms }
        }
    }
}

fn perturb(base: &InverseProblem, spec: &PerturbationSpec, dir: &Direction, delta: f64, nt: usize) -> InverseProblem {
    let mut p = base.clone();
    let add = |v: &VectorField| v.lin_comb(1.0, dir.field.as_ref().expect("vector direction"), delta);
    match spec.target {
        PerturbationTarget::U0 => p.u0 = add(&base.u0).with_solenoidal(true),
        PerturbationTarget::Phi => p.phi = add(&base.phi).with_solenoidal(true),
        PerturbationTarget::GradPsi => p.grad_psi = add(&base.grad_psi),
        PerturbationTarget::G | PerturbationTarget::Gt => {
            let h = dir.scalar.as_ref().expect("scalar direction");
            p.g = base.g.perturbed(h, delta, spec.target == PerturbationTarget::Gt, base.t_end, nt);
        }
    }
    p
}

struct Solved {
    f: VectorField,
    traj: Trajectory,
    iterations: usize,
}

fn solve_and_run(problem: &InverseProblem, cfg: &SweepConfig) -> Result<(Solved, bool), InverseError> {
    let out = solve_inverse(problem, &cfg.solver, None)?;
    let nt = cfg.solver.nt;
    let policy = SamplingPolicy { pressure: true, ..SamplingPolicy::standard(nt, cfg.samples) };
    let traj = solve_forward(&problem.u0, &out.f_hat, &problem.g, &problem.params, problem.t_end, nt, &policy)?;
    Ok((Solved { f: out.f_hat, traj, iterations: out.iterations }, out.converged))
}

fn trapezoid(times: &[f64], v: &[f64]) -> f64 {
    times.windows(2).zip(v.windows(2)).map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0] + y[1])).sum()
}

/// Error columns between two solved problems sharing their time samples.
fn error_columns(a: &Solved, b: &Solved, r: f64) -> Result<[f64; 5], InverseError> {
    let times = &a.traj.times;
    if *times != b.traj.times {
        return Err(InverseError::InvalidConfig("trajectories are sampled differently".into()));
    }
    let (pa, pb) = (a.traj.pressure.as_ref().expect("pressure"), b.traj.pressure.as_ref().expect("pressure"));
    let mut sup: f64 = 0.0;
    let (mut g2, mut lr, mut pr) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..times.len() {
        let du = a.traj.states[i].sub(&b.traj.states[i]);
        sup = sup.max(norm_l2(&du));
        g2.push(norm_h1_semi(&du).powi(2));
        lr.push(norm_lp(&du, r + 1.0)?.powf(r + 1.0));
        pr.push(norm_hminus1(&pa[i].sub(&pb[i])).powf((r + 1.0) / r));
    }
    Ok([
        norm_l2(&a.f.sub(&b.f)),
        sup,
        trapezoid(times, &g2).sqrt(),
        trapezoid(times, &lr).powf(1.0 / (r + 1.0)),
        trapezoid(times, &pr).powf(r / (r + 1.0)),
    ])
}

/// Solves the base problem and every perturbed one, tabulating errors by row.
/// Rows run concurrently and are returned in ladder order.
pub fn run_stability_sweep(base: &InverseProblem, spec: &PerturbationSpec, cfg: &SweepConfig) -> Result<StabilityTable, InverseError> {
    spec.validate()?;
    let r = base.params.r;
    let q = 2.0 / (r + 1.0);
    let (base_sol, converged) = solve_and_run(base, cfg)?;
    if !converged {
        return Err(InverseError::InvalidProblem("base inverse solve did not converge".into()));
    }
    let zero = Solved {
        f: VectorField::zeros(&base.grid),
        traj: Trajectory {
            states: base_sol.traj.states.iter().map(|s| VectorField::zeros(s.grid())).collect(),
            pressure: base_sol.traj.pressure.as_ref().map(|p| p.iter().map(|s| VectorField::zeros(s.grid())).collect()),
            ..base_sol.traj.clone()
        },
        iterations: 0,
    };
    let base_norms = error_columns(&base_sol, &zero, r)?;
    let dir = direction(base, spec);

    let run_row = |&delta: &f64| -> StabilityRow {
        let diffs = dir.unit_norms.map(|x| x * delta);
        let data_linear = diffs.iter().sum();
        let data_holder = diffs.iter().map(|x| x.powf(q)).sum();
        let problem = perturb(base, spec, &dir, delta, cfg.solver.nt);
        let invalid = |note: String| StabilityRow {
            delta,
            valid: false,
            note,
            iterations: 0,
            data_linear,
            data_holder,
            errors: [f64::NAN; 5],
        };
        match solve_and_run(&problem, cfg) {
            Ok((sol, conv)) => match error_columns(&sol, &base_sol, r) {
                Ok(errors) => StabilityRow {
                    delta,
                    valid: conv,
                    note: if conv { String::new() } else { "not converged".into() },
                    iterations: sol.iterations,
                    data_linear,
                    data_holder,
                    errors,
                },
                Err(e) => invalid(e.to_string()),
            },
            Err(e) => invalid(e.to_string()),
        }
    };
    let rows: Vec<StabilityRow> = if cfg.threads == 0 {
        spec.amplitudes.par_iter().map(run_row).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| InverseError::InvalidConfig(e.to_string()))?;
        pool.install(|| spec.amplitudes.par_iter().map(run_row).collect())
    };
    Ok(StabilityTable { target: spec.target, exponent: q, rel_tol: cfg.solver.rel_tol, base: base_norms, rows })
}

/// Least-squares slope of `log error` against `log δ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HolderFit {
    pub exponent: f64,
    pub r_squared: f64,
    pub rows: usize,
}

/// Fits `error ≈ C δ^p` from at least four positive pairs.
pub fn fit_holder_exponent(deltas: &[f64], errors: &[f64]) -> Result<HolderFit, String> {
    if deltas.len() != errors.len() {
        return Err("deltas and errors differ in length".into());
    }
    if deltas.len() < 4 {
        return Err(format!("need at least 4 rows, got {}", deltas.len()));
    }
    if let Some(i) = (0..deltas.len()).find(|&i| !(deltas[i] > 0.0 && errors[i] > 0.0 && errors[i].is_finite())) {
        return Err(format!("row {i} has a nonpositive value (delta {:e}, error {:e})", deltas[i], errors[i]));
    }
    let x: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
    let y: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err("all deltas are equal".into());
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(&y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(HolderFit { exponent: slope, r_squared, rows: deltas.len() })
}

/// Fit over the usable rows of one column.
pub fn fit_column(table: &StabilityTable, c: Column) -> Result<HolderFit, String> {
    let rows = table.usable(c);
    let d: Vec<f64> = rows.iter().map(|r| r.delta).collect();
    let e: Vec<f64> = rows.iter().map(|r| r.error(c)).collect();
    fit_holder_exponent(&d, &e)
}

/// `error ≤ C δ^{2/(r+1)}` on every usable row, `C` calibrated on the largest `δ`.
#[derive(Clone, Debug, PartialEq)]
pub struct UpperBoundCheck {
    pub column: Column,
    pub constant: f64,
    /// Largest `error / (C δ^q)` over the usable rows.
    pub worst_ratio: f64,
    pub rows: usize,
    pub pass: bool,
}

pub fn check_holder_upper_bound(table: &StabilityTable, c: Column) -> Result<UpperBoundCheck, String> {
    let rows = table.usable(c);
    let first = rows.first().ok_or_else(|| format!("no usable rows in column {}", c.name()))?;
    let q = table.exponent;
    let constant = first.error(c) / first.delta.powf(q);
    let worst_ratio = rows.iter().map(|r| r.error(c) / (constant * r.delta.powf(q))).fold(0.0, f64::max);
    Ok(UpperBoundCheck { column: c, constant, worst_ratio, rows: rows.len(), pass: worst_ratio <= 1.0 + 1e-12 })
}

/// Ratio `‖f₁ − f₂‖ / (linear data-difference sum)` across rows.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceStability {
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub min_ratio: f64,
    pub pass: bool,
}

/// Passes when the ratio is finite on every valid row with nonzero data
/// difference and varies by at most a factor of ten.
pub fn check_f_stability_bound(table: &StabilityTable) -> SourceStability {
    let ratios: Vec<f64> = table
        .rows
        .iter()
        .filter(|r| r.valid && r.data_linear > 0.0)
        .map(|r| r.error(Column::Source) / r.data_linear)
        .collect();
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let finite = !ratios.is_empty() && ratios.iter().all(|x| x.is_finite());
    let pass = finite && (max_ratio == 0.0 || max_ratio <= 10.0 * min_ratio);
    SourceStability { ratios, max_ratio, min_ratio, pass }
}

/// Flat `key = value` summary of fits and checks.
pub fn summary(table: &StabilityTable) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "target = {}", table.target.name());
    let _ = writeln!(s, "exponent_bound = {:.17e}", table.exponent);
    let _ = writeln!(s, "rows = {}", table.rows.len());
    let _ = writeln!(s, "valid_rows = {}", table.rows.iter().filter(|r| r.valid).count());
    for c in Column::ALL {
        match fit_column(table, c) {
            Ok(f) => {
                let _ = writeln!(s, "{}.exponent = {:.17e}", c.name(), f.exponent);
                let _ = writeln!(s, "{}.r_squared = {:.17e}", c.name(), f.r_squared);
                let _ = writeln!(s, "{}.fit_rows = {}", c.name(), f.rows);
            }
            Err(why) => {
                let _ = writeln!(s, "{}.exponent = undefined", c.name());
                let _ = writeln!(s, "{}.reason = {why}", c.name());
            }
        }
        if let Ok(u) = check_holder_upper_bound(table, c) {
            let _ = writeln!(s, "{}.bound_constant = {:.17e}", c.name(), u.constant);
            let _ = writeln!(s, "{}.bound_worst_ratio = {:.17e}", c.name(), u.worst_ratio);
            let _ = writeln!(s, "{}.bound_pass = {}", c.name(), u.pass);
        }
    }
    let fs = check_f_stability_bound(table);
    let _ = writeln!(s, "source_ratio.max = {:.17e}", fs.max_ratio);
    let _ = writeln!(s, "source_ratio.min = {:.17e}", fs.min_ratio);
    let _ = writeln!(s, "source_ratio.pass = {}", fs.pass);
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn synthetic(deltas: &[f64], err: impl Fn(f64) -> f64, q: f64) -> StabilityTable {
        let rows = deltas
            .iter()
            .map(|&d| StabilityRow {
                delta: d,
                valid: true,
                note: String::new(),
                iterations: 1,
                data_linear: d,
                data_holder: d.powf(q),
                errors: [err(d); 5],
            })
            .collect();
        StabilityTable { target: PerturbationTarget::U0, exponent: q, rel_tol: 1e-8, base: [1.0; 5], rows }
    }

    fn ladder() -> Vec<f64> {
        (0..5).map(|j| 0.1 * 10f64.powf(-0.5 * j as f64)).collect()
    }

    #[test]
    fn exact_power_laws() {
        let d = ladder();
        let lin: Vec<f64> = d.clone();
        let half: Vec<f64> = d.iter().map(|x| x.sqrt()).collect();
        assert!((fit_holder_exponent(&d, &lin).unwrap().exponent - 1.0).abs() < 1e-12);
        assert!((fit_holder_exponent(&d, &half).unwrap().exponent - 0.5).abs() < 1e-12);
    }

    #[test]
    fn noisy_half_power() {
        let d = ladder();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let e: Vec<f64> = d.iter().map(|x| 3.0 * x.sqrt() * (1.0 + 0.01 * rng.gen_range(-1.0..1.0))).collect();
        assert!((fit_holder_exponent(&d, &e).unwrap().exponent - 0.5).abs() < 0.05);
    }

    #[test]
    fn fit_is_scale_invariant() {
        let d = ladder();
        let e: Vec<f64> = d.iter().map(|x| x.powf(0.7) * (1.0 + x)).collect();
        let scaled: Vec<f64> = e.iter().map(|x| x * 37.5).collect();
        assert_eq!(fit_holder_exponent(&d, &e).unwrap().exponent, fit_holder_exponent(&d, &scaled).unwrap().exponent);
    }

    #[test]
    fn degenerate_fits_are_rejected() {
        assert!(fit_holder_exponent(&[1.0, 0.5, 0.25], &[1.0, 0.5, 0.25]).is_err());
        assert!(fit_holder_exponent(&[1.0, 0.5, 0.25, 0.1], &[1.0, 0.0, 0.25, 0.1]).is_err());
    }

    #[test]
    fn linear_oracle_respects_bound_and_constant_ratio() {
        let t = synthetic(&ladder(), |d| d, 0.5);
        let fit = fit_column(&t, Column::Source).unwrap();
        assert!((fit.exponent - 1.0).abs() < 0.01);
        assert!(check_holder_upper_bound(&t, Column::Source).unwrap().pass);
        let fs = check_f_stability_bound(&t);
        assert!(fs.pass);
        assert!((fs.max_ratio - fs.min_ratio).abs() < 1e-15);
    }

    #[test]
    fn slower_than_bound_fails() {
        let t = synthetic(&ladder(), |d| d.powf(0.25), 0.5);
        assert!(!check_holder_upper_bound(&t, Column::Source).unwrap().pass);
    }

    #[test]
    fn floor_excludes_tiny_errors() {
        let mut t = synthetic(&[0.1, 0.05, 0.0], |d| d, 0.5);
        t.rows[1].errors = [1e-9; 5];
        assert_eq!(t.usable(Column::Source).len(), 1);
    }

    #[test]
    fn ladder_validation() {
        let mut s = PerturbationSpec::geometric(PerturbationTarget::Phi, 0.1, 0.5, 5, 1);
        assert!(s.validate().is_ok());
        s.amplitudes[2] = 1.0;
        assert!(s.validate().is_err());
        assert_eq!(PerturbationTarget::parse("g_t"), Some(PerturbationTarget::Gt));
    }
}
