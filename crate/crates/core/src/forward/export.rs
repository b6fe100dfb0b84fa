use std::fs;
use std::io::Write;
use std::path::Path;

use super::{CbfParams, ForwardError, Trajectory};
use crate::spectral::{
    norm_h1_semi, norm_l2, norm_linf, norm_lp, read_snapshot, spectral_divergence_max, write_snapshot,
    Representation, SpectralError, VectorField,
};

/// Per-time scalar diagnostics of a stored state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryDiagnostics {
    pub time: f64,
    pub l2: f64,
    pub h1_semi: f64,
    pub lr1: f64,
    pub linf: f64,
    pub div_max: f64,
}

impl TrajectoryDiagnostics {
    pub fn of(time: f64, u: &VectorField, r: f64) -> Result<Self, ForwardError> {
        Ok(Self {
            time,
            l2: norm_l2(u),
            h1_semi: norm_h1_semi(u),
            lr1: norm_lp(u, r + 1.0)?,
            linf: norm_linf(u),
            div_max: spectral_divergence_max(u),
        })
    }
}

/// Writes state snapshots, a manifest and a diagnostics CSV into `dir`.
pub fn export_trajectory(traj: &Trajectory, dir: &Path, params: &CbfParams) -> Result<Vec<TrajectoryDiagnostics>, ForwardError> {
    fs::create_dir_all(dir).map_err(SpectralError::from)?;
    let mut manifest = String::new();
    let mut csv = String::from("time,l2,h1_semi,lr1,linf,div_max\n");
    let mut diags = Vec::with_capacity(traj.states.len());
    for (idx, (t, u)) in traj.times.iter().zip(&traj.states).enumerate() {
        let name = format!("state_{idx:05}.bin");
        write_snapshot(&dir.join(&name), u.components(), Representation::Spectral)?;
        if let Some(p) = &traj.pressure {
            write_snapshot(&dir.join(format!("gradp_{idx:05}.bin")), p[idx].components(), Representation::Spectral)?;
        }
        manifest.push_str(&format!("{idx} {t:.17e} {name}\n"));
        let d = TrajectoryDiagnostics::of(*t, u, params.r)?;
        csv.push_str(&format!(
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
            d.time, d.l2, d.h1_semi, d.lr1, d.linf, d.div_max
        ));
        diags.push(d);
    }
    write_snapshot(&dir.join("rate_final.bin"), traj.final_rate.components(), Representation::Spectral)?;
    write_text(&dir.join("manifest.txt"), &manifest)?;
    write_text(&dir.join("diagnostics.csv"), &csv)?;
    Ok(diags)
}

fn write_text(path: &Path, text: &str) -> Result<(), ForwardError> {
    let mut f = fs::File::create(path).map_err(SpectralError::from)?;
    f.write_all(text.as_bytes()).map_err(SpectralError::from)?;
    Ok(())
}

/// Reads the manifest of an exported trajectory and loads its states.
pub fn read_manifest(dir: &Path) -> Result<(Vec<f64>, Vec<VectorField>), ForwardError> {
    let text = fs::read_to_string(dir.join("manifest.txt")).map_err(SpectralError::from)?;
    let mut times = Vec::new();
    let mut states = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let bad = || ForwardError::InvalidInput(format!("manifest line {}: malformed entry", lineno + 1));
        if parts.len() != 3 {
            return Err(bad());
        }
        let t: f64 = parts[1].parse().map_err(|_| bad())?;
        let u = read_snapshot(&dir.join(parts[2]))?.into_vector()?.with_solenoidal(true);
        times.push(t);
        states.push(u);
    }
    if times.len() < 2 {
        return Err(ForwardError::InvalidInput("manifest lists fewer than two states".into()));
    }
    Ok((times, states))
}
