use std::fs;
use std::path::Path;
use std::process::Command;

use cbf::forward::{solve_forward, SamplingPolicy};
use cbf::io::{read_problem, parse_config};
use cbf::spectral::{norm_l2, spectral_divergence_max};

const BIN: &str = env!("CARGO_BIN_EXE_cbf");

fn run(sub: &str, cfg: &Path, out: &Path, extra: &[&str]) -> (i32, String, String) {
    let o = Command::new(BIN)
        .arg(sub)
        .arg("--config")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .expect("binary runs");
    (o.status.code().unwrap_or(-1), String::from_utf8_lossy(&o.stdout).into_owned(), String::from_utf8_lossy(&o.stderr).into_owned())
}

fn write_cfg(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

const TG: &str = "grid.d = 2\ngrid.n = 16\nparams.mu = 0.5\nparams.alpha = 0.5\nparams.beta = 0.5\nparams.r = 1\n\
                  time.T = 0.5\ntime.nt = 200\ndata.u0 = tg1\n";

const SMALL_PROBLEM: &str = "grid.d = 2\ngrid.n = 16\nparams.mu = 1\nparams.alpha = 2\nparams.beta = 1\nparams.r = 3\n\
                             time.T = 0.5\ntime.nt = 200\ndata.u0 = tg1\ndata.u0_scale = 0.3\ndata.f = mix\n";

#[test]
fn forward_then_verify_taylor_green() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write_cfg(d, "tg.cfg", TG);
    let (code, stdout, stderr) = run("forward", &cfg, &d.join("fwd"), &[]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.starts_with("forward:"));
    for f in ["ledger.csv", "provenance.txt", "trajectory/manifest.txt", "trajectory/diagnostics.csv", "trajectory/forcing.bin"] {
        assert!(d.join("fwd").join(f).exists(), "{f}");
    }
    let vcfg = write_cfg(d, "verify.cfg", &format!("{TG}data.trajectory = fwd/trajectory\n"));
    let (code, _, stderr) = run("verify", &vcfg, &d.join("ver"), &[]);
    assert_eq!(code, 0, "{stderr}");
    let verdicts = fs::read_to_string(d.join("ver/verdicts.csv")).unwrap();
    assert!(verdicts.lines().skip(1).all(|l| !l.ends_with(",fail")));
    let ids = fs::read_to_string(d.join("ver/identities.csv")).unwrap();
    assert!(ids.lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn provenance_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write_cfg(d, "tg.cfg", TG);
    assert_eq!(run("forward", &cfg, &d.join("a"), &["--seed", "17"]).0, 0);
    let prov = fs::read_to_string(d.join("a/provenance.txt")).unwrap();
    assert!(prov.contains("seed = 17"));
    let again = write_cfg(d, "again.cfg", &prov);
    assert_eq!(run("forward", &again, &d.join("b"), &[]).0, 0);
    assert_eq!(fs::read(d.join("a/ledger.csv")).unwrap(), fs::read(d.join("b/ledger.csv")).unwrap());
}

#[test]
fn inadmissible_inverse_needs_force() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let text = SMALL_PROBLEM.replace("params.mu = 1", "params.mu = 0.01");
    let cfg = write_cfg(d, "bad.cfg", &text);
    let (code, _, stderr) = run("inverse", &cfg, &d.join("i"), &[]);
    assert_eq!(code, 2);
    assert!(stderr.contains("admissible = false"));
    assert!(stderr.contains("condition.label = planar_phi_l4"));
    assert!(!d.join("i/history.csv").exists());
    let (code, _, _) = run("inverse", &cfg, &d.join("j"), &["--force"]);
    assert!(code == 0 || code == 4);
    assert!(d.join("j/history.csv").exists());
}

#[test]
fn blow_up_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let text = "grid.d = 2\ngrid.n = 16\nparams.mu = 0.001\nparams.alpha = 0.001\nparams.beta = 1\nparams.r = 3\n\
                time.T = 50\ntime.nt = 5\ndata.u0 = tg1\ndata.u0_scale = 1000\n";
    let cfg = write_cfg(d, "blow.cfg", text);
    let (code, _, stderr) = run("forward", &cfg, &d.join("o"), &[]);
    assert_eq!(code, 3, "{stderr}");
    assert!(stderr.contains("blew up"));
}

#[test]
fn non_convergence_exits_with_four() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write_cfg(d, "nc.cfg", &format!("{SMALL_PROBLEM}solver.max_iters = 2\nsolver.rel_tol = 1e-14\n"));
    let (code, _, stderr) = run("inverse", &cfg, &d.join("o"), &[]);
    assert_eq!(code, 4, "{stderr}");
    assert!(stderr.contains("converged = false"));
    assert_eq!(fs::read_to_string(d.join("o/history.csv")).unwrap().lines().count(), 3);
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write_cfg(d, "bad.cfg", "grid.d = 3\ngrid.n = 8\nparams.mu = 1\nparams.alpha = 1\nparams.beta = 1\nparams.r = 2\ntime.T = 1\ntime.nt = 10\nwhat = 1\n");
    let (code, _, stderr) = run("forward", &cfg, &d.join("o"), &[]);
    assert_eq!(code, 2);
    assert!(stderr.contains("r ≥ 3 required for d = 3"));
    assert!(stderr.contains("line 9: unknown key `what`"));
    let mismatch = write_cfg(d, "mode.cfg", &format!("mode = sweep\n{TG}"));
    let (code, _, stderr) = run("forward", &mismatch, &d.join("p"), &[]);
    assert_eq!(code, 2);
    assert!(stderr.contains("does not match"));
}

#[test]
fn manufactured_problem_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write_cfg(d, "m.cfg", SMALL_PROBLEM);
    let (code, stdout, stderr) = run("manufacture", &cfg, &d.join("m"), &[]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("admissible = true"));

    let (problem, nt, f_star) = read_problem(&d.join("m/problem")).unwrap();
    assert!(spectral_divergence_max(&problem.phi) <= 1e-9);
    let f = f_star.unwrap();
    let traj = solve_forward(&problem.u0, &f, &problem.g, &problem.params, problem.t_end, nt, &SamplingPolicy::final_only()).unwrap();
    assert!(norm_l2(&traj.final_state().sub(&problem.phi)) <= 1e-12 * norm_l2(&problem.phi));

    let icfg = write_cfg(d, "i.cfg", &format!("{SMALL_PROBLEM}data.problem = m/problem\n"));
    let (code, _, stderr) = run("inverse", &icfg, &d.join("i"), &[]);
    assert_eq!(code, 0, "{stderr}");
    let report = fs::read_to_string(d.join("i/report.txt")).unwrap();
    let ferr: f64 = report.lines().find_map(|l| l.strip_prefix("f_error.relative = ")).unwrap().parse().unwrap();
    assert!(ferr <= 1e-3, "{ferr}");
}

#[test]
fn zero_data_manufacture_is_trivial() {
    let cfg = parse_config("grid.d = 2\ngrid.n = 16\nparams.mu = 1\nparams.alpha = 1\nparams.beta = 1\nparams.r = 3\ntime.T = 0.1\ntime.nt = 10\n", Path::new(".")).unwrap();
    let m = cbf::io::manufacture(&cfg).unwrap();
    assert_eq!(norm_l2(&m.problem.phi), 0.0);
    assert_eq!(norm_l2(&m.problem.grad_psi), 0.0);
}

#[test]
fn sweep_writes_table_and_fits() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write_cfg(d, "s.cfg", &format!("{SMALL_PROBLEM}sweep.target = g\n"));
    let (code, stdout, stderr) = run("sweep", &cfg, &d.join("s"), &["--threads", "2"]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("f_err.bound_pass = true"));
    let csv = fs::read_to_string(d.join("s/stability.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
    assert!(d.join("s/pressure_hm1_err.dat").exists());
}
