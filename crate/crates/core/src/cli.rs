//! Command-line surface: one subcommand per run mode.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::estimates::{
    build_ledger, check_all, verdicts_to_csv, verify_cprime_positivity, verify_damping_identity, verify_monotonicity,
    EnergyLedger, LemmaVerdict,
};
use crate::forward::{
    convection, export_trajectory, read_manifest, solve_forward, CbfParams, ForwardError, SamplingPolicy,
    Trajectory,
};
use crate::inverse::{
    check_admissibility, recover_pressure, solve_inverse, write_history, InverseError, InverseOutcome, InverseProblem,
};
use crate::io::{
    assemble_problem, build_grid, initial_state, load_config, manufacture, source, write_problem, write_provenance,
    IoError, Mode, RunConfig, StartMode,
};
use crate::spectral::{
    complement_project, gradient, inner, leray_project, norm_h1_semi, norm_l2, random_scalar, random_solenoidal, read_snapshot, write_snapshot,
    Representation, TorusGrid, VectorField,
};
use crate::stability::{check_holder_upper_bound, run_stability_sweep, summary, Column, SweepConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BLOWUP: i32 = 3;
pub const EXIT_NONCONVERGENCE: i32 = 4;
pub const EXIT_VERDICT: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "cbf", version, about = "Convective Brinkman–Forchheimer forward and inverse-source solver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve forward, write the trajectory, ledger and diagnostics.
    Forward(RunArgs),
    /// Recover the source factor from final-time data.
    Inverse(RunArgs),
    /// Audit the energy estimates and structural identities on a trajectory.
    Verify(RunArgs),
    /// Perturb one datum along a ladder and tabulate stability errors.
    Sweep(RunArgs),
    /// Generate an inverse problem from a known source.
    Manufacture(RunArgs),
}

#[derive(Debug, Args, Clone)]
pub struct RunArgs {
    /// Configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, overriding `output.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run the inverse solve even when the problem is not admissible.
    #[arg(long)]
    pub force: bool,
    /// Worker threads for sweeps.
    #[arg(long)]
    pub threads: Option<usize>,
    /// RNG seed, overriding `seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl Command {
    pub fn mode(&self) -> Mode {
        match self {
            Command::Forward(_) => Mode::Forward,
            Command::Inverse(_) => Mode::Inverse,
            Command::Verify(_) => Mode::Verify,
            Command::Sweep(_) => Mode::Sweep,
            Command::Manufacture(_) => Mode::Manufacture,
        }
    }

    pub fn args(&self) -> &RunArgs {
        match self {
            Command::Forward(a) | Command::Inverse(a) | Command::Verify(a) | Command::Sweep(a) | Command::Manufacture(a) => a,
        }
    }
}

/// A failed run: exit code and message.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        let code = match &e {
            IoError::Config(_) | IoError::Field(_) => EXIT_CONFIG,
            IoError::Forward(f) => forward_code(f),
            IoError::Inverse(i) => inverse_code(i),
            IoError::Spectral(_) | IoError::Io(_) => EXIT_FAILURE,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<ForwardError> for Failure {
    fn from(e: ForwardError) -> Self {
        Failure::new(forward_code(&e), e.to_string())
    }
}

impl From<InverseError> for Failure {
    fn from(e: InverseError) -> Self {
        Failure::new(inverse_code(&e), e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(EXIT_FAILURE, e.to_string())
    }
}

impl From<crate::spectral::SpectralError> for Failure {
    fn from(e: crate::spectral::SpectralError) -> Self {
        Failure::new(EXIT_FAILURE, e.to_string())
    }
}

fn forward_code(e: &ForwardError) -> i32 {
    match e {
        ForwardError::BlowUp { .. } => EXIT_BLOWUP,
        ForwardError::InvalidParams(_) | ForwardError::InvalidInput(_) => EXIT_CONFIG,
        ForwardError::Spectral(_) => EXIT_FAILURE,
    }
}

fn inverse_code(e: &InverseError) -> i32 {
    match e {
        InverseError::ForwardBlowUp { .. } => EXIT_BLOWUP,
        InverseError::Forward(f) => forward_code(f),
        InverseError::Constants(_)
        | InverseError::InvalidProblem(_)
        | InverseError::InvalidConfig(_)
        | InverseError::SmallModulation { .. } => EXIT_CONFIG,
        InverseError::Spectral(_) => EXIT_FAILURE,
    }
}

/// Parses the process arguments and runs; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_CONFIG
            } else {
                EXIT_OK
            }
        }
    }
}

pub fn run(cli: &Cli) -> i32 {
    match execute(cli.command.mode(), cli.command.args()) {
        Ok(summary) => {
            print!("{summary}");
            EXIT_OK
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

/// Loads the configuration, applies the flags and runs `mode`. Returns the
/// text summary printed on success.
pub fn execute(mode: Mode, args: &RunArgs) -> Result<String, Failure> {
    let mut cfg = load_config(&args.config).map_err(IoError::from)?;
    if let Some(m) = cfg.mode {
        if m != mode {
            return Err(Failure::new(
                EXIT_CONFIG,
                format!("configuration mode `{}` does not match command `{}`", m.name(), mode.name()),
            ));
        }
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let out = cfg.output_dir.clone();
    fs::create_dir_all(&out)?;
    write_provenance(&out, mode.name(), &cfg)?;
    match mode {
        Mode::Forward => run_forward(&cfg, &out),
        Mode::Inverse => run_inverse(&cfg, &out, args.force),
        Mode::Verify => run_verify(&cfg, &out),
        Mode::Sweep => run_sweep(&cfg, &out, args.threads.unwrap_or(0)),
        Mode::Manufacture => run_manufacture(&cfg, &out),
    }
}

fn sampling(cfg: &RunConfig) -> SamplingPolicy {
    SamplingPolicy { pressure: cfg.record_pressure, ..SamplingPolicy::standard(cfg.nt, cfg.samples) }
}

fn write_field(path: &Path, v: &VectorField) -> Result<(), Failure> {
    Ok(write_snapshot(path, v.components(), Representation::Spectral)?)
}

fn run_forward(cfg: &RunConfig, out: &Path) -> Result<String, Failure> {
    let grid = build_grid(cfg)?;
    let u0 = initial_state(cfg, &grid)?;
    let f = source(cfg, &grid)?;
    let g = cfg.g.to_modulation(&grid);
    let traj = solve_forward(&u0, &f, &g, &cfg.params, cfg.t_end, cfg.nt, &sampling(cfg))?;
    let tdir = out.join("trajectory");
    export_trajectory(&traj, &tdir, &cfg.params)?;
    write_field(&tdir.join("forcing.bin"), &f)?;
    let ledger = build_ledger(&traj, &f, &g, &cfg.params)?;
    fs::write(out.join("ledger.csv"), ledger.to_csv())?;
    let last = traj.final_state();
    Ok(format!(
        "forward: {} stored states, T = {}, |u(T)| = {:.6e}, |grad u(T)| = {:.6e}\n",
        traj.states.len(),
        cfg.t_end,
        norm_l2(last),
        norm_h1_semi(last)
    ))
}

/// Rebuilds a trajectory written by `forward`.
pub fn load_trajectory(dir: &Path, grid: &Arc<TorusGrid>, nt: usize) -> Result<(Trajectory, VectorField), Failure> {
    let (times, states) = read_manifest(dir)?;
    if states[0].grid().n() != grid.n() || states[0].dim() != grid.dim() {
        return Err(Failure::new(EXIT_CONFIG, format!("{}: stored grid does not match the configuration", dir.display())));
    }
    let rebase = |v: VectorField| VectorField::from_spectral(grid, v.spectral_comps());
    let states: Vec<VectorField> = states.into_iter().map(|s| rebase(s).with_solenoidal(true)).collect();
    let final_rate = rebase(read_snapshot(&dir.join("rate_final.bin"))?.into_vector()?);
    let forcing = rebase(read_snapshot(&dir.join("forcing.bin"))?.into_vector()?);
    let t_end = *times.last().unwrap_or(&0.0);
    Ok((Trajectory { times, states, pressure: None, final_rate, nt, t_end }, forcing))
}

/// Outcome of one structural check.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentityCheck {
    pub check: &'static str,
    pub subject: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Keeps the modes with every `|m_i| <= kmax`.
fn low_pass(v: &VectorField, kmax: i64) -> VectorField {
    let grid = v.grid().clone();
    let mut comps = v.spectral_comps();
    for c in comps.iter_mut() {
        for (p, z) in c.iter_mut().enumerate() {
            if grid.mode_of(p).iter().any(|m| m.abs() > kmax) {
                *z = num_complex::Complex64::new(0.0, 0.0);
            }
        }
    }
    VectorField::from_spectral(&grid, comps)
}

/// Projection, convection, damping-identity, monotonicity and `C′`
/// positivity checks on `trials` random fields and on `extra`. Random
/// fields are band-limited to `n/8` so that grid quadrature is exact up to
/// rounding for `r = 3`.
pub fn identity_suite(grid: &Arc<TorusGrid>, params: &CbfParams, seed: u64, trials: usize, extra: &[(String, VectorField)]) -> Result<Vec<IdentityCheck>, Failure> {
    let kmax = (grid.n() / 8).max(1) as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut subjects: Vec<(String, VectorField)> =
        (0..trials).map(|i| (format!("random_{i}"), random_solenoidal(grid, kmax, &mut rng))).collect();
    for (name, v) in extra {
        subjects.push((format!("{name}_lowpass"), leray_project(&low_pass(v, kmax))));
    }
    let r = params.r;
    let identity_applies = r == 1.0 || r >= 3.0;
    let mut checks = Vec::new();
    for (i, (name, u)) in subjects.iter().enumerate() {
        let nu = norm_l2(u);
        let mixed = u.add(&gradient(&random_scalar(grid, kmax, &mut rng)));
        let pu = leray_project(&mixed);
        let idem = norm_l2(&leray_project(&pu).sub(&pu));
        let bound = 1e-11 * norm_l2(&mixed).max(f64::MIN_POSITIVE);
        checks.push(IdentityCheck { check: "leray_idempotence", subject: name.clone(), value: idem, bound, pass: idem <= bound });
        let orth = inner(&pu, &complement_project(&mixed)).abs();
        let bound = 1e-11 * norm_l2(&mixed).powi(2);
        checks.push(IdentityCheck { check: "leray_orthogonality", subject: name.clone(), value: orth, bound, pass: orth <= bound });
        let conv = inner(&convection(u), u).abs();
        let bound = 1e-11 * nu * norm_h1_semi(u);
        checks.push(IdentityCheck { check: "convection_orthogonality", subject: name.clone(), value: conv, bound, pass: conv <= bound.max(1e-300) });
        if identity_applies {
            let id = verify_damping_identity(u, r)?;
            checks.push(IdentityCheck { check: "damping_identity", subject: name.clone(), value: id.rel_err, bound: 1e-6, pass: id.rel_err <= 1e-6 });
        }
        let other = &subjects[(i + 1) % subjects.len()].1;
        let c = verify_cprime_positivity(u, other, r)?;
        let w2 = norm_l2(other).powi(2);
        checks.push(IdentityCheck { check: "cprime_positivity", subject: name.clone(), value: c.value, bound: -1e-12 * w2, pass: c.pass });
        let m = verify_monotonicity(u, other, r, params.beta)?;
        checks.push(IdentityCheck { check: "monotonicity", subject: name.clone(), value: m.pairing, bound: m.lower_bound, pass: m.pass });
    }
    Ok(checks)
}

pub fn identities_to_csv(checks: &[IdentityCheck]) -> String {
    let mut s = String::from("check,subject,value,bound,pass\n");
    for c in checks {
        let _ = writeln!(s, "{},{},{:.17e},{:.17e},{}", c.check, c.subject, c.value, c.bound, c.pass);
    }
    s
}

fn run_verify(cfg: &RunConfig, out: &Path) -> Result<String, Failure> {
    let grid = build_grid(cfg)?;
    let g = cfg.g.to_modulation(&grid);
    let (traj, f) = match &cfg.trajectory_dir {
        Some(dir) => load_trajectory(dir, &grid, cfg.nt)?,
        None => {
            let u0 = initial_state(cfg, &grid)?;
            let f = source(cfg, &grid)?;
            (solve_forward(&u0, &f, &g, &cfg.params, cfg.t_end, cfg.nt, &sampling(cfg))?, f)
        }
    };
    let ledger: EnergyLedger = build_ledger(&traj, &f, &g, &cfg.params)?;
    fs::write(out.join("ledger.csv"), ledger.to_csv())?;
    let verdicts: Vec<LemmaVerdict> = check_all(&ledger, &cfg.audit);
    fs::write(out.join("verdicts.csv"), verdicts_to_csv(&verdicts))?;
    let extra = vec![("final_state".to_string(), traj.final_state().clone())];
    let checks = identity_suite(&grid, &cfg.params, cfg.seed, 20, &extra)?;
    fs::write(out.join("identities.csv"), identities_to_csv(&checks))?;

    let applicable = verdicts.iter().filter(|v| v.applicable()).count();
    let failed: Vec<String> = verdicts.iter().filter(|v| v.applicable() && !v.passed()).map(|v| v.lemma.to_string()).collect();
    let failed_ids: Vec<String> = checks.iter().filter(|c| !c.pass).map(|c| format!("{}:{}", c.check, c.subject)).collect();
    let text = format!(
        "verify: {applicable} applicable estimates, {} failed; {} identity checks, {} failed\n",
        failed.len(),
        checks.len(),
        failed_ids.len()
    );
    if failed.is_empty() && failed_ids.is_empty() {
        Ok(text)
    } else {
        Err(Failure::new(EXIT_VERDICT, format!("{}failed: {}", text, failed.into_iter().chain(failed_ids).collect::<Vec<_>>().join(", "))))
    }
}

/// Initial iterate selected by `solver.start`: zero, or a random solenoidal
/// field with norm `min(1, M/2)`.
pub fn initial_iterate(cfg: &RunConfig, problem: &InverseProblem, radius: Option<f64>) -> Option<VectorField> {
    match cfg.start {
        StartMode::Zero => None,
        StartMode::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
            let v = random_solenoidal(&problem.grid, 3, &mut rng);
            let s = radius.map_or(1.0, |m| (0.5 * m).min(1.0));
            Some(v.scaled(s))
        }
    }
}

fn inverse_report(outcome: &InverseOutcome, problem: &InverseProblem, f_star: Option<&VectorField>, state_mismatch: f64, pressure_mismatch: f64) -> String {
    let mut s = String::new();
    let f = &outcome.f_hat;
    let fn_ = norm_l2(f);
    let rel = |a: f64, b: f64| if b > 0.0 { a / b } else { a };
    let _ = writeln!(s, "converged = {}", outcome.converged);
    let _ = writeln!(s, "iterations = {}", outcome.iterations);
    let _ = writeln!(s, "final_residual = {:.17e}", outcome.history.last().map_or(0.0, |h| h.residual));
    let _ = writeln!(s, "scaling_triggered = {}", outcome.scaling_triggered);
    match outcome.radius {
        Some(m) => {
            let _ = writeln!(s, "ball_radius = {m:.17e}");
        }
        None => {
            let _ = writeln!(s, "ball_radius = unbounded");
        }
    }
    let _ = writeln!(s, "f_hat.norm = {fn_:.17e}");
    let _ = writeln!(s, "f_hat.gradient_fraction = {:.17e}", rel(norm_l2(&complement_project(f)), fn_));
    let _ = writeln!(s, "state_mismatch.relative = {:.17e}", rel(state_mismatch, norm_l2(&problem.phi)));
    let _ = writeln!(s, "pressure_mismatch.relative = {:.17e}", rel(pressure_mismatch, norm_l2(&problem.grad_psi)));
    if let Some(fs) = f_star {
        let _ = writeln!(s, "f_error.relative = {:.17e}", rel(norm_l2(&f.sub(fs)), norm_l2(fs)));
    }
    for (i, w) in outcome.warnings.iter().enumerate() {
        let _ = writeln!(s, "warning.{i} = {w}");
    }
    s
}

fn run_inverse(cfg: &RunConfig, out: &Path, force: bool) -> Result<String, Failure> {
    let (problem, _, f_star) = assemble_problem(cfg)?;
    problem.validate()?;
    let report = check_admissibility(&problem, cfg.solver.nt)?;
    let kv = report.to_key_value();
    fs::write(out.join("admissibility.txt"), &kv)?;
    if !report.admissible() && !force {
        return Err(Failure::new(EXIT_CONFIG, format!("problem is not admissible; rerun with --force to solve anyway\n{kv}")));
    }
    let init = initial_iterate(cfg, &problem, report.m());
    let outcome = solve_inverse(&problem, &cfg.solver, init.as_ref())?;
    fs::write(out.join("history.csv"), write_history(&outcome.history, cfg.timing))?;
    write_field(&out.join("f_hat.bin"), &outcome.f_hat)?;
    let rec = recover_pressure(&problem, &outcome.f_hat, cfg.solver.nt)?;
    write_field(&out.join("grad_p.bin"), &rec.grad_p)?;
    let text = inverse_report(&outcome, &problem, f_star.as_ref(), rec.state_mismatch, rec.pressure_mismatch);
    fs::write(out.join("report.txt"), &text)?;
    if outcome.converged {
        Ok(text)
    } else {
        Err(Failure::new(EXIT_NONCONVERGENCE, format!("fixed-point iteration did not converge\n{text}")))
    }
}

fn run_sweep(cfg: &RunConfig, out: &Path, threads: usize) -> Result<String, Failure> {
    let (problem, _, _) = assemble_problem(cfg)?;
    let spec = cfg.sweep.to_spec(cfg.seed);
    let sweep_cfg = SweepConfig { solver: cfg.solver.clone(), samples: cfg.samples, threads };
    let table = run_stability_sweep(&problem, &spec, &sweep_cfg)?;
    fs::write(out.join("stability.csv"), table.to_csv())?;
    for c in Column::ALL {
        fs::write(out.join(format!("{}.dat", c.name())), table.column_data(c))?;
    }
    let text = summary(&table);
    fs::write(out.join("stability_summary.txt"), &text)?;
    let failed: Vec<&str> =
        Column::ALL.iter().filter(|c| check_holder_upper_bound(&table, **c).is_ok_and(|u| !u.pass)).map(|c| c.name()).collect();
    if failed.is_empty() {
        Ok(text)
    } else {
        Err(Failure::new(EXIT_VERDICT, format!("rate bound violated in {}\n{text}", failed.join(", "))))
    }
}

fn run_manufacture(cfg: &RunConfig, out: &Path) -> Result<String, Failure> {
    let m = manufacture(cfg)?;
    let pdir = out.join("problem");
    write_problem(&pdir, cfg, &m.problem, Some(&m.f_star))?;
    export_trajectory(&m.trajectory, &out.join("trajectory"), &cfg.params)?;
    write_field(&out.join("trajectory").join("forcing.bin"), &m.f_star)?;
    let report = check_admissibility(&m.problem, cfg.nt)?;
    fs::write(out.join("admissibility.txt"), report.to_key_value())?;
    let manifest = "problem/problem.txt\nproblem/u0.bin\nproblem/phi.bin\nproblem/grad_psi.bin\nproblem/f_star.bin\n\
                    trajectory/manifest.txt\ntrajectory/diagnostics.csv\ntrajectory/forcing.bin\nadmissibility.txt\nprovenance.txt\n";
    fs::write(out.join("manifest.txt"), manifest)?;
    let mut text = format!(
        "manufacture: |f*| = {:.6e}, |phi| = {:.6e}, |grad psi| = {:.6e}, admissible = {}\n",
        norm_l2(&m.f_star),
        norm_l2(&m.problem.phi),
        norm_l2(&m.problem.grad_psi),
        report.admissible()
    );
    if !report.admissible() {
        text.push_str("warning: problem is not admissible; inverse runs need --force\n");
    }
    Ok(text)
}
