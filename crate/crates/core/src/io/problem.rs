//! Manufactured inverse problems and their on-disk form.
//!
//! A problem directory holds `problem.txt` (configuration entries for the
//! grid, parameters, horizon and modulation) and the snapshots `u0.bin`,
//! `phi.bin`, `grad_psi.bin` and, when known, `f_star.bin`.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use super::catalog::catalog_field;
use super::config::{g_entries, parse_config, FieldSource, RunConfig};
use super::IoError;
use crate::forward::{solve_forward, Dynamics, SamplingPolicy, Trajectory};
use crate::inverse::InverseProblem;
use crate::spectral::{leray_project, make_grid, read_snapshot, write_snapshot, Representation, TorusGrid, VectorField};

const U0_SALT: u64 = 0x75_30;
const F_SALT: u64 = 0x66_2a;

pub fn build_grid(cfg: &RunConfig) -> Result<Arc<TorusGrid>, IoError> {
    Ok(make_grid(cfg.dim, cfg.n, cfg.params.length)?)
}

/// Loads a field from the catalog or a snapshot and scales it. Snapshot
/// fields must live on `grid`.
pub fn load_field(src: &FieldSource, grid: &Arc<TorusGrid>, scale: f64, seed: u64) -> Result<VectorField, IoError> {
    let v = match src {
        FieldSource::Catalog(name) => catalog_field(name, grid, seed).map_err(IoError::Field)?,
        FieldSource::File(path) => read_field(path, grid)?,
    };
    Ok(v.scaled(scale))
}

fn read_field(path: &Path, grid: &Arc<TorusGrid>) -> Result<VectorField, IoError> {
    let snap = read_snapshot(path)?;
    let g = &snap.grid;
    if g.dim() != grid.dim() || g.n() != grid.n() || g.length() != grid.length() {
        return Err(IoError::Field(format!(
            "{}: grid (d = {}, n = {}, L = {}) does not match the configured grid (d = {}, n = {}, L = {})",
            path.display(),
            g.dim(),
            g.n(),
            g.length(),
            grid.dim(),
            grid.n(),
            grid.length()
        )));
    }
    let comps = snap.components.into_iter().map(|c| crate::spectral::ScalarField::from_spectral(grid, c.spectral().into_owned())).collect();
    Ok(VectorField::from_components(grid, comps)?)
}

pub fn initial_state(cfg: &RunConfig, grid: &Arc<TorusGrid>) -> Result<VectorField, IoError> {
    Ok(leray_project(&load_field(&cfg.u0, grid, cfg.u0_scale, cfg.seed ^ U0_SALT)?))
}

/// The source factor `f`, projected onto solenoidal fields.
pub fn source(cfg: &RunConfig, grid: &Arc<TorusGrid>) -> Result<VectorField, IoError> {
    Ok(leray_project(&load_field(&cfg.f, grid, cfg.f_scale, cfg.seed ^ F_SALT)?))
}

/// A problem whose data are generated from a known source.
#[derive(Clone, Debug)]
pub struct Manufactured {
    pub problem: InverseProblem,
    pub f_star: VectorField,
    pub trajectory: Trajectory,
}

/// Solves forward from the configured `u₀` and `f`, and takes `φ = u(T)` and
/// `∇ψ = ∇p(T)` as data.
pub fn manufacture(cfg: &RunConfig) -> Result<Manufactured, IoError> {
    let grid = build_grid(cfg)?;
    let u0 = initial_state(cfg, &grid)?;
    let f_star = source(cfg, &grid)?;
    let g = cfg.g.to_modulation(&grid);
    let policy = SamplingPolicy { pressure: cfg.record_pressure, ..SamplingPolicy::standard(cfg.nt, cfg.samples) };
    let trajectory = solve_forward(&u0, &f_star, &g, &cfg.params, cfg.t_end, cfg.nt, &policy)?;
    let phi = trajectory.final_state().clone();
    let grad_psi = Dynamics::new(&grid, &f_star, &cfg.params)?.pressure_at(&phi, &g, cfg.t_end);
    let problem = InverseProblem { grid, params: cfg.params, t_end: cfg.t_end, u0, phi, grad_psi, g };
    Ok(Manufactured { problem, f_star, trajectory })
}

/// Inverse problem described by `cfg`: read from `data.problem`, built from
/// `data.phi` and `data.grad_psi`, or manufactured from `data.f`. Returns the
/// problem, the step count of its forward solves and the known source.
pub fn assemble_problem(cfg: &RunConfig) -> Result<(InverseProblem, usize, Option<VectorField>), IoError> {
    if let Some(dir) = &cfg.problem_dir {
        return read_problem(dir);
    }
    if let Some(phi_src) = &cfg.phi {
        let grid = build_grid(cfg)?;
        let u0 = initial_state(cfg, &grid)?;
        let phi = load_field(phi_src, &grid, 1.0, cfg.seed)?;
        let grad_psi = match &cfg.grad_psi {
            Some(src) => load_field(src, &grid, 1.0, cfg.seed)?,
            None => VectorField::zeros(&grid),
        };
        let g = cfg.g.to_modulation(&grid);
        return Ok((InverseProblem { grid, params: cfg.params, t_end: cfg.t_end, u0, phi, grad_psi, g }, cfg.nt, None));
    }
    let m = manufacture(cfg)?;
    Ok((m.problem, cfg.nt, Some(m.f_star)))
}

/// Writes a problem directory. Modulations that are not given by `cfg.g`
/// cannot be stored.
pub fn write_problem(dir: &Path, cfg: &RunConfig, problem: &InverseProblem, f_star: Option<&VectorField>) -> Result<(), IoError> {
    fs::create_dir_all(dir)?;
    let mut text = String::new();
    let p = &problem.params;
    let mut entries = vec![
        ("grid.d", p.dim.to_string()),
        ("grid.n", problem.grid.n().to_string()),
        ("grid.L", format!("{:?}", p.length)),
        ("params.mu", format!("{:?}", p.mu)),
        ("params.alpha", format!("{:?}", p.alpha)),
        ("params.beta", format!("{:?}", p.beta)),
        ("params.r", format!("{:?}", p.r)),
        ("time.T", format!("{:?}", problem.t_end)),
        ("time.nt", cfg.nt.to_string()),
    ];
    entries.extend(g_entries(&cfg.g));
    for (k, v) in entries {
        text.push_str(&format!("{k} = {v}\n"));
    }
    fs::write(dir.join("problem.txt"), text)?;
    let snap = |name: &str, v: &VectorField| write_snapshot(&dir.join(name), v.components(), Representation::Spectral);
    snap("u0.bin", &problem.u0)?;
    snap("phi.bin", &problem.phi)?;
    snap("grad_psi.bin", &problem.grad_psi)?;
    if let Some(f) = f_star {
        snap("f_star.bin", f)?;
    }
    Ok(())
}

/// Reads a problem directory, returning the problem, its step count and the
/// known source if stored.
pub fn read_problem(dir: &Path) -> Result<(InverseProblem, usize, Option<VectorField>), IoError> {
    let text = fs::read_to_string(dir.join("problem.txt"))?;
    let cfg = parse_config(&text, dir)?;
    let grid = build_grid(&cfg)?;
    let u0 = read_field(&dir.join("u0.bin"), &grid)?.with_solenoidal(true);
    let phi = read_field(&dir.join("phi.bin"), &grid)?.with_solenoidal(true);
    let grad_psi = read_field(&dir.join("grad_psi.bin"), &grid)?;
    let fpath = dir.join("f_star.bin");
    let f_star = if fpath.exists() { Some(read_field(&fpath, &grid)?) } else { None };
    let g = cfg.g.to_modulation(&grid);
    Ok((InverseProblem { grid, params: cfg.params, t_end: cfg.t_end, u0, phi, grad_psi, g }, cfg.nt, f_star))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::norm_l2;

    fn cfg() -> RunConfig {
        let text = "grid.d = 2\ngrid.n = 16\nparams.mu = 1\nparams.alpha = 2\nparams.beta = 1\nparams.r = 3\n\
                    time.T = 0.2\ntime.nt = 40\ndata.u0 = tg1\ndata.u0_scale = 0.3\ndata.f = mix\n\
                    g.kind = separable\ng.space = cos_x1\ng.time = exp\n";
        parse_config(text, Path::new(".")).unwrap()
    }

    #[test]
    fn manufactured_data_are_consistent() {
        let m = manufacture(&cfg()).unwrap();
        m.problem.validate().unwrap();
        assert_eq!(m.trajectory.final_state().spectral_comps(), m.problem.phi.spectral_comps());
        assert!(norm_l2(&m.problem.grad_psi) > 0.0);
    }

    #[test]
    fn problem_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg();
        let m = manufacture(&c).unwrap();
        write_problem(dir.path(), &c, &m.problem, Some(&m.f_star)).unwrap();
        let (p, nt, f) = read_problem(dir.path()).unwrap();
        assert_eq!(nt, 40);
        assert_eq!(p.params, m.problem.params);
        assert_eq!(p.phi.spectral_comps(), m.problem.phi.spectral_comps());
        assert_eq!(p.grad_psi.spectral_comps(), m.problem.grad_psi.spectral_comps());
        assert_eq!(f.unwrap().spectral_comps(), m.f_star.spectral_comps());
        let t = 0.2;
        assert_eq!(p.g.eval(t), m.problem.g.eval(t));
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let g8 = make_grid(2, 8, std::f64::consts::TAU).unwrap();
        let path = dir.path().join("v.bin");
        write_snapshot(&path, VectorField::zeros(&g8).components(), Representation::Spectral).unwrap();
        let g16 = make_grid(2, 16, std::f64::consts::TAU).unwrap();
        assert!(matches!(read_field(&path, &g16), Err(IoError::Field(_))));
    }
}
