use std::path::Path;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cbf::cli::load_trajectory;
use cbf::estimates::{build_ledger, check_all, verdicts_to_csv, verify_damping_identity, AuditConfig};
use cbf::forward::{export_trajectory, solve_forward, CbfParams, Modulation, SamplingPolicy, TimeProfile};
use cbf::inverse::{operator_b, solve_inverse, BallMode, FixedPointConfig, InverseProblem};
use cbf::io::{manufacture, parse_config};
use cbf::spectral::{
    complement_project, curl_2d_stream, inner, make_grid, norm_h1_semi, norm_l2, norm_lp, random_solenoidal,
    ScalarField, VectorField,
};
use cbf::stability::{run_stability_sweep, Column, PerturbationSpec, PerturbationTarget, SweepConfig};

fn params(r: f64) -> CbfParams {
    CbfParams { mu: 0.3, alpha: 0.7, beta: 0.9, r, dim: 2, length: std::f64::consts::TAU }
}

/// `|½‖u(T)‖² − ½‖u₀‖² + ∫(μ‖∇u‖² + α‖u‖² + β‖u‖^{r+1}_{L^{r+1}} − (fg, u))|`
/// with trapezoid quadrature over every step.
fn energy_residual(u0: &VectorField, f: &VectorField, b: TimeProfile, p: &CbfParams, t_end: f64, nt: usize) -> f64 {
    let g = Modulation::separable(&ScalarField::constant(u0.grid(), 1.0), b);
    let traj = solve_forward(u0, f, &g, p, t_end, nt, &SamplingPolicy::every_step()).unwrap();
    let power: Vec<f64> = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(t, u)| {
            let gf = b.value(*t) * inner(f, u);
            p.mu * norm_h1_semi(u).powi(2) + p.alpha * norm_l2(u).powi(2) + p.beta * norm_lp(u, p.r + 1.0).unwrap().powf(p.r + 1.0)
                - gf
        })
        .collect();
    let dt = t_end / nt as f64;
    let integral: f64 = power.windows(2).map(|w| 0.5 * dt * (w[0] + w[1])).sum();
    let e = |u: &VectorField| 0.5 * norm_l2(u).powi(2);
    (e(traj.final_state()) - e(u0) + integral).abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn energy_balance_is_second_order(seed in any::<u64>(), r in prop::sample::select(vec![1.0, 3.0, 5.0])) {
        let grid = make_grid(2, 32, std::f64::consts::TAU).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u0 = random_solenoidal(&grid, 3, &mut rng);
        let f = random_solenoidal(&grid, 3, &mut rng);
        let b = TimeProfile::Exp { lambda: -0.5 };
        let p = params(r);
        let coarse = energy_residual(&u0, &f, b, &p, 0.5, 50);
        let fine = energy_residual(&u0, &f, b, &p, 0.5, 100);
        prop_assert!(coarse <= 1e-3, "coarse residual {}", coarse);
        prop_assert!(fine <= coarse / 3.0 || fine <= 1e-13, "residuals {} -> {}", coarse, fine);
    }

    #[test]
    fn manufactured_source_is_a_fixed_point(seed in any::<u64>(), r in prop::sample::select(vec![1.0, 2.0, 3.0])) {
        let grid = make_grid(2, 16, std::f64::consts::TAU).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u0 = random_solenoidal(&grid, 3, &mut rng).scaled(0.5);
        let f = random_solenoidal(&grid, 3, &mut rng);
        let a = ScalarField::from_fn(&grid, |x| 2.0 + x[0].cos());
        let g = Modulation::separable(&a, TimeProfile::CosShift { omega: 1.0, c: 2.0 });
        let p = params(r);
        let nt = 60;
        let traj = solve_forward(&u0, &f, &g, &p, 0.3, nt, &SamplingPolicy::final_only()).unwrap();
        let phi = traj.final_state().clone();
        let grad_psi = cbf::forward::Dynamics::new(&grid, &f, &p).unwrap().pressure_at(&phi, &g, 0.3);
        let problem = InverseProblem { grid: grid.clone(), params: p, t_end: 0.3, u0, phi, grad_psi, g };
        let cfg = FixedPointConfig { nt, ..FixedPointConfig::default() };
        let bf = operator_b(&f, &problem, &cfg).unwrap();
        prop_assert!(norm_l2(&bf.sub(&f)) <= 1e-10 * norm_l2(&f));
    }
}

#[test]
fn verdicts_reproduce_from_saved_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let grid = make_grid(2, 16, std::f64::consts::TAU).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let u0 = random_solenoidal(&grid, 3, &mut rng);
    let f = random_solenoidal(&grid, 3, &mut rng);
    let g = Modulation::Constant(1.0);
    let p = params(3.0);
    let traj = solve_forward(&u0, &f, &g, &p, 1.0, 200, &SamplingPolicy::standard(200, 50)).unwrap();
    export_trajectory(&traj, dir.path(), &p).unwrap();
    cbf::spectral::write_snapshot(&dir.path().join("forcing.bin"), f.components(), cbf::spectral::Representation::Spectral)
        .unwrap();
    let audit = AuditConfig::default();
    let direct = verdicts_to_csv(&check_all(&build_ledger(&traj, &f, &g, &p).unwrap(), &audit));
    let (loaded, lf) = load_trajectory(dir.path(), &grid, 200).unwrap();
    let again = verdicts_to_csv(&check_all(&build_ledger(&loaded, &lf, &g, &p).unwrap(), &audit));
    assert_eq!(direct, again);
}

#[test]
fn damping_identity_error_drops_under_refinement() {
    // Smooth but not band-limited, so the coarse grids carry a real quadrature error.
    let rel_err = |n: usize, r: f64| {
        let grid = make_grid(2, n, std::f64::consts::TAU).unwrap();
        let psi = ScalarField::from_fn(&grid, |x| 0.3 * (x[0].sin() + x[1].cos()).exp());
        verify_damping_identity(&curl_2d_stream(&psi), r).unwrap().rel_err
    };
    for r in [2.0, 3.0, 5.0] {
        for n in [16, 32, 64] {
            let (coarse, fine) = (rel_err(n, r), rel_err(2 * n, r));
            assert!(fine <= coarse / 4.0 || fine <= 1e-12, "r = {r}, n = {n}: {coarse:e} -> {fine:e}");
        }
    }
}

const SMALL: &str = "grid.d = 2\ngrid.n = 16\nparams.mu = 1\nparams.alpha = 2\nparams.beta = 1\nparams.r = 3\n\
                     time.T = 0.5\ntime.nt = 200\ndata.u0 = tg1\ndata.u0_scale = 0.3\ndata.f = mix\n";

#[test]
fn ball_scaling_confines_iterates() {
    let cfg = parse_config(SMALL, Path::new(".")).unwrap();
    let m = manufacture(&cfg).unwrap();
    let radius = 0.5 * norm_l2(&m.f_star);
    let solver = FixedPointConfig { nt: 200, ball: BallMode::User(radius), max_iters: 30, ..FixedPointConfig::default() };
    let out = solve_inverse(&m.problem, &solver, None).unwrap();
    assert!(out.scaling_triggered);
    assert!(out.history.iter().all(|h| h.f_norm <= radius * (1.0 + 1e-12)));
}

#[test]
fn recovered_source_is_solenoidal_and_residuals_settle() {
    let cfg = parse_config(SMALL, Path::new(".")).unwrap();
    let m = manufacture(&cfg).unwrap();
    let solver = FixedPointConfig { nt: 200, ..FixedPointConfig::default() };
    let out = solve_inverse(&m.problem, &solver, None).unwrap();
    assert!(out.converged);
    assert!(norm_l2(&complement_project(&out.f_hat)) <= 1e-3 * norm_l2(&out.f_hat));
    let tail: Vec<f64> = out.history.iter().rev().take(5).map(|h| h.residual).collect();
    assert!(tail.windows(2).all(|w| w[0] <= w[1]), "{tail:?}");
}

#[test]
fn sweep_errors_shrink_with_the_perturbation() {
    let cfg = parse_config(SMALL, Path::new(".")).unwrap();
    let m = manufacture(&cfg).unwrap();
    let sweep = SweepConfig { solver: FixedPointConfig { nt: 200, ..FixedPointConfig::default() }, samples: 50, threads: 2 };
    for target in [PerturbationTarget::Phi, PerturbationTarget::Gt] {
        let spec = PerturbationSpec::geometric(target, 0.1, 10f64.powf(-0.5), 5, 11);
        let table = run_stability_sweep(&m.problem, &spec, &sweep).unwrap();
        for c in Column::ALL {
            let rows = table.usable(c);
            assert!(rows.windows(2).all(|w| w[1].error(c) <= w[0].error(c)), "{} {}", target.name(), c.name());
        }
    }
}
