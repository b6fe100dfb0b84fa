use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::estimates::AuditConfig;
use crate::forward::{CbfParams, Modulation, TimeProfile};
use crate::inverse::{BallMode, FixedPointConfig};
use crate::spectral::{ScalarField, TorusGrid};
use crate::stability::{PerturbationSpec, PerturbationTarget};

use super::catalog::is_catalog_name;

pub const DEFAULT_SEED: u64 = 20240607;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Forward,
    Inverse,
    Verify,
    Sweep,
    Manufacture,
}

impl Mode {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "forward" => Mode::Forward,
            "inverse" => Mode::Inverse,
            "verify" => Mode::Verify,
            "sweep" => Mode::Sweep,
            "manufacture" => Mode::Manufacture,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Mode::Forward => "forward",
            Mode::Inverse => "inverse",
            Mode::Verify => "verify",
            Mode::Sweep => "sweep",
            Mode::Manufacture => "manufacture",
        }
    }
}

/// A field given by catalog name or by snapshot path.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldSource {
    Catalog(String),
    File(PathBuf),
}

/// Spatial factor of a separable modulation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpaceProfile {
    One,
    /// `offset + cos(2π x₁ / L)`
    CosX1 { offset: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GSpec {
    Constant(f64),
    Separable { space: SpaceProfile, time: TimeProfile },
}

impl GSpec {
    pub fn to_modulation(&self, grid: &std::sync::Arc<TorusGrid>) -> Modulation {
        match *self {
            GSpec::Constant(c) => Modulation::Constant(c),
            GSpec::Separable { space, time } => {
                let k0 = std::f64::consts::TAU / grid.length();
                let a = match space {
                    SpaceProfile::One => ScalarField::constant(grid, 1.0),
                    SpaceProfile::CosX1 { offset } => ScalarField::from_fn(grid, |x| offset + (k0 * x[0]).cos()),
                };
                Modulation::separable(&a, time)
            }
        }
    }
}

/// Initial iterate of the fixed-point solver.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StartMode {
    Zero,
    Random,
}

/// Perturbation ladder of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub target: PerturbationTarget,
    pub delta0: f64,
    pub ratio: f64,
    pub rungs: usize,
    pub kmax: i64,
}

impl SweepSpec {
    pub fn to_spec(&self, seed: u64) -> PerturbationSpec {
        PerturbationSpec { kmax: self.kmax, ..PerturbationSpec::geometric(self.target, self.delta0, self.ratio, self.rungs, seed) }
    }
}

/// Fully resolved run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mode: Option<Mode>,
    pub dim: usize,
    pub n: usize,
    pub params: CbfParams,
    pub t_end: f64,
    pub nt: usize,
    /// Approximate number of stored times per forward solve.
    pub samples: usize,
    pub record_pressure: bool,
    pub u0: FieldSource,
    pub u0_scale: f64,
    pub f: FieldSource,
    pub f_scale: f64,
    /// Final-state datum; the problem is manufactured from `f` when absent.
    pub phi: Option<FieldSource>,
    /// Final pressure-gradient datum, zero when absent.
    pub grad_psi: Option<FieldSource>,
    /// Directory written by `manufacture`.
    pub problem_dir: Option<PathBuf>,
    /// Directory written by `forward`.
    pub trajectory_dir: Option<PathBuf>,
    pub g: GSpec,
    pub solver: FixedPointConfig,
    pub start: StartMode,
    pub audit: AuditConfig,
    pub sweep: SweepSpec,
    pub output_dir: PathBuf,
    pub timing: bool,
    pub seed: u64,
}

/// One configuration problem, with its line when it comes from a file line.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigIssue {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

/// Every problem found while loading a configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigErrors(pub Vec<ConfigIssue>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, issue) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

const KEYS: &[&str] = &[
    "mode",
    "grid.d",
    "grid.n",
    "grid.L",
    "params.mu",
    "params.alpha",
    "params.beta",
    "params.r",
    "time.T",
    "time.nt",
    "time.samples",
    "time.pressure",
    "data.u0",
    "data.u0_scale",
    "data.f",
    "data.f_scale",
    "data.phi",
    "data.grad_psi",
    "data.problem",
    "data.trajectory",
    "g.kind",
    "g.value",
    "g.space",
    "g.offset",
    "g.time",
    "g.lambda",
    "g.omega",
    "g.c",
    "solver.max_iters",
    "solver.rel_tol",
    "solver.relaxation",
    "solver.ball",
    "solver.project_output",
    "solver.nt",
    "solver.start",
    "audit.tol_rel",
    "audit.c_max",
    "sweep.target",
    "sweep.delta0",
    "sweep.ratio",
    "sweep.rungs",
    "sweep.kmax",
    "output.dir",
    "output.timing",
    "seed",
];

const REQUIRED: &[&str] = &["grid.d", "grid.n", "params.mu", "params.alpha", "params.beta", "params.r", "time.T", "time.nt"];

/// Raw `key = value` entries with their line numbers.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawConfig {
    pub entries: BTreeMap<String, (String, usize)>,
}

/// Splits text into entries. Reports malformed lines, unknown and repeated keys.
pub fn parse_entries(text: &str) -> (RawConfig, Vec<ConfigIssue>) {
    let mut raw = RawConfig::default();
    let mut issues = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((k, v)) = body.split_once('=') else {
            issues.push(ConfigIssue { line: Some(lineno), message: format!("expected `key = value`, got `{body}`") });
            continue;
        };
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            issues.push(ConfigIssue { line: Some(lineno), message: format!("unknown key `{k}`") });
            continue;
        }
        if v.is_empty() {
            issues.push(ConfigIssue { line: Some(lineno), message: format!("empty value for `{k}`") });
            continue;
        }
        if let Some((_, prev)) = raw.entries.insert(k.to_string(), (v.to_string(), lineno)) {
            issues.push(ConfigIssue { line: Some(lineno), message: format!("`{k}` repeats the entry on line {prev}") });
        }
    }
    (raw, issues)
}

/// Parses a real number; accepts a trailing `pi` factor such as `2pi`.
pub fn parse_real(s: &str) -> Option<f64> {
    let t = s.trim();
    if let Some(head) = t.strip_suffix("pi") {
        let head = head.trim().trim_end_matches('*').trim();
        let c = if head.is_empty() { 1.0 } else { head.parse::<f64>().ok()? };
        return Some(c * std::f64::consts::PI);
    }
    t.parse().ok()
}

struct Reader<'a> {
    raw: &'a RawConfig,
    issues: Vec<ConfigIssue>,
}

impl<'a> Reader<'a> {
    fn line(&self, k: &str) -> Option<usize> {
        self.raw.entries.get(k).map(|(_, l)| *l)
    }

    fn str(&self, k: &str) -> Option<&'a str> {
        self.raw.entries.get(k).map(|(v, _)| v.as_str())
    }

    fn bad(&mut self, k: &str, msg: String) {
        let line = self.line(k);
        self.issues.push(ConfigIssue { line, message: msg });
    }

    fn parsed<T>(&mut self, k: &str, what: &str, default: T, f: impl Fn(&str) -> Option<T>) -> T {
        match self.str(k) {
            None => default,
            Some(v) => match f(v) {
                Some(x) => x,
                None => {
                    self.bad(k, format!("`{k}`: cannot parse `{v}` as {what}"));
                    default
                }
            },
        }
    }

    fn real(&mut self, k: &str, default: f64) -> f64 {
        self.parsed(k, "a real number", default, parse_real)
    }

    fn count(&mut self, k: &str, default: usize) -> usize {
        self.parsed(k, "a nonnegative integer", default, |v| v.parse().ok())
    }

    fn flag(&mut self, k: &str, default: bool) -> bool {
        self.parsed(k, "a boolean", default, |v| match v {
            "true" | "yes" | "1" => Some(true),
            "false" | "no" | "0" => Some(false),
            _ => None,
        })
    }

    fn field(&mut self, k: &str, base: &Path, default: &str) -> FieldSource {
        match self.str(k) {
            None => FieldSource::Catalog(default.into()),
            Some(v) if is_catalog_name(v) => FieldSource::Catalog(v.into()),
            Some(v) => {
                let p = base.join(v);
                if !p.exists() {
                    self.bad(k, format!("`{k}`: `{v}` is neither a catalog field nor an existing file"));
                }
                FieldSource::File(p)
            }
        }
    }

    fn dir(&mut self, k: &str, base: &Path) -> Option<PathBuf> {
        let v = self.str(k)?;
        let p = base.join(v);
        if !p.is_dir() {
            self.bad(k, format!("`{k}`: directory `{v}` does not exist"));
        }
        Some(p)
    }
}

/// Resolves entries into a configuration. Relative paths are taken from `base`.
pub fn resolve(raw: &RawConfig, base: &Path) -> Result<RunConfig, ConfigErrors> {
    let mut rd = Reader { raw, issues: Vec::new() };
    for k in REQUIRED {
        if rd.str(k).is_none() {
            rd.issues.push(ConfigIssue { line: None, message: format!("missing required key `{k}`") });
        }
    }
    let mode = rd.parsed("mode", "a mode (forward, inverse, verify, sweep, manufacture)", None, |v| Mode::parse(v).map(Some));
    let dim = rd.count("grid.d", 2);
    let n = rd.count("grid.n", 32);
    let length = rd.real("grid.L", std::f64::consts::TAU);
    let params = CbfParams {
        mu: rd.real("params.mu", 1.0),
        alpha: rd.real("params.alpha", 1.0),
        beta: rd.real("params.beta", 1.0),
        r: rd.real("params.r", 3.0),
        dim,
        length,
    };
    if let Err(e) = params.validate() {
        let msg = e.to_string();
        let line = rd.line("params.r").or(rd.line("grid.d"));
        for part in msg.trim_start_matches("invalid parameters: ").split("; ") {
            rd.issues.push(ConfigIssue { line, message: part.to_string() });
        }
    }
    if n < 8 || n % 2 == 1 {
        rd.bad("grid.n", format!("grid.n must be even and at least 8, got {n}"));
    }
    let t_end = rd.real("time.T", 1.0);
    if !(t_end > 0.0) {
        rd.bad("time.T", format!("time.T must be positive, got {t_end}"));
    }
    let nt = rd.count("time.nt", 1000);
    if nt == 0 {
        rd.bad("time.nt", "time.nt must be positive".into());
    }
    let samples = rd.count("time.samples", 200).max(1);
    let record_pressure = rd.flag("time.pressure", false);

    let u0 = rd.field("data.u0", base, "zero");
    let u0_scale = rd.real("data.u0_scale", 1.0);
    let f = rd.field("data.f", base, "zero");
    let f_scale = rd.real("data.f_scale", 1.0);
    let phi = rd.str("data.phi").map(|_| rd.field("data.phi", base, "zero"));
    let grad_psi = rd.str("data.grad_psi").map(|_| rd.field("data.grad_psi", base, "zero"));
    let problem_dir = rd.dir("data.problem", base);
    let trajectory_dir = rd.dir("data.trajectory", base);

    let g = match rd.str("g.kind").unwrap_or("constant") {
        "constant" => GSpec::Constant(rd.real("g.value", 1.0)),
        "separable" => {
            let space = match rd.str("g.space").unwrap_or("one") {
                "one" => SpaceProfile::One,
                "cos_x1" => SpaceProfile::CosX1 { offset: rd.real("g.offset", 2.0) },
                other => {
                    rd.bad("g.space", format!("`g.space`: unknown profile `{other}` (one, cos_x1)"));
                    SpaceProfile::One
                }
            };
            let time = match rd.str("g.time").unwrap_or("one") {
                "one" => TimeProfile::One,
                "exp" => TimeProfile::Exp { lambda: rd.real("g.lambda", -1.0) },
                "cos_shift" => TimeProfile::CosShift { omega: rd.real("g.omega", 1.0), c: rd.real("g.c", 2.0) },
                other => {
                    rd.bad("g.time", format!("`g.time`: unknown profile `{other}` (one, exp, cos_shift)"));
                    TimeProfile::One
                }
            };
            GSpec::Separable { space, time }
        }
        other => {
            rd.bad("g.kind", format!("`g.kind`: unknown kind `{other}` (constant, separable)"));
            GSpec::Constant(1.0)
        }
    };

    let defaults = FixedPointConfig::default();
    let ball = match rd.str("solver.ball").unwrap_or("computed") {
        "computed" => BallMode::Computed,
        "unbounded" => BallMode::Unbounded,
        v => match parse_real(v) {
            Some(m) if m > 0.0 => BallMode::User(m),
            _ => {
                rd.bad("solver.ball", format!("`solver.ball`: expected computed, unbounded or a positive radius, got `{v}`"));
                BallMode::Computed
            }
        },
    };
    let solver = FixedPointConfig {
        max_iters: rd.count("solver.max_iters", defaults.max_iters),
        rel_tol: rd.real("solver.rel_tol", defaults.rel_tol),
        relaxation: rd.real("solver.relaxation", defaults.relaxation),
        ball,
        nt: rd.count("solver.nt", nt),
        project_output: rd.flag("solver.project_output", false),
    };
    if let Err(e) = solver.validate() {
        let line = rd.line("solver.relaxation").or(rd.line("solver.rel_tol")).or(rd.line("solver.max_iters"));
        rd.issues.push(ConfigIssue { line, message: e.to_string() });
    }
    let start = rd.parsed("solver.start", "zero or random", StartMode::Zero, |v| match v {
        "zero" => Some(StartMode::Zero),
        "random" => Some(StartMode::Random),
        _ => None,
    });
    let audit = AuditConfig { tol_rel: rd.real("audit.tol_rel", 1e-2), c_max: rd.real("audit.c_max", 100.0) };
    let sweep = SweepSpec {
        target: rd.parsed("sweep.target", "a target (u0, phi, grad_psi, g, g_t)", PerturbationTarget::U0, PerturbationTarget::parse),
        delta0: rd.real("sweep.delta0", 0.1),
        ratio: rd.real("sweep.ratio", 10f64.powf(-0.5)),
        rungs: rd.count("sweep.rungs", 5),
        kmax: rd.parsed("sweep.kmax", "a positive integer", 2, |v| v.parse().ok()),
    };
    if sweep.rungs < 5 {
        rd.bad("sweep.rungs", format!("sweep.rungs must be at least 5, got {}", sweep.rungs));
    }
    if !(sweep.ratio > 0.0 && sweep.ratio < 1.0) {
        rd.bad("sweep.ratio", format!("sweep.ratio must lie in (0, 1), got {}", sweep.ratio));
    }
    let output_dir = PathBuf::from(rd.str("output.dir").unwrap_or("out"));
    let timing = rd.flag("output.timing", false);
    let seed = rd.parsed("seed", "an unsigned integer", DEFAULT_SEED, |v| v.parse().ok());

    if rd.issues.is_empty() {
        Ok(RunConfig {
            mode,
            dim,
            n,
            params,
            t_end,
            nt,
            samples,
            record_pressure,
            u0,
            u0_scale,
            f,
            f_scale,
            phi,
            grad_psi,
            problem_dir,
            trajectory_dir,
            g,
            solver,
            start,
            audit,
            sweep,
            output_dir,
            timing,
            seed,
        })
    } else {
        Err(ConfigErrors(rd.issues))
    }
}

/// Parses and resolves configuration text.
pub fn parse_config(text: &str, base: &Path) -> Result<RunConfig, ConfigErrors> {
    let (raw, mut issues) = parse_entries(text);
    match resolve(&raw, base) {
        Ok(cfg) if issues.is_empty() => Ok(cfg),
        Ok(_) => Err(ConfigErrors(issues)),
        Err(ConfigErrors(more)) => {
            issues.extend(more);
            issues.sort_by_key(|i| i.line.unwrap_or(0));
            Err(ConfigErrors(issues))
        }
    }
}

/// Reads a configuration file; relative paths inside it are resolved against
/// the file's directory.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigErrors> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        ConfigErrors(vec![ConfigIssue { line: None, message: format!("cannot read {}: {e}", path.display()) }])
    })?;
    parse_config(&text, path.parent().unwrap_or(Path::new(".")))
}

impl RunConfig {
    /// Resolved configuration as `key = value` lines.
    pub fn render(&self) -> String {
        let mut v: Vec<(String, String)> = Vec::new();
        let mut kv = |k: &str, s: String| v.push((k.to_string(), s));
        if let Some(m) = self.mode {
            kv("mode", m.name().into());
        }
        kv("grid.d", self.dim.to_string());
        kv("grid.n", self.n.to_string());
        kv("grid.L", format!("{:?}", self.params.length));
        kv("params.mu", format!("{:?}", self.params.mu));
        kv("params.alpha", format!("{:?}", self.params.alpha));
        kv("params.beta", format!("{:?}", self.params.beta));
        kv("params.r", format!("{:?}", self.params.r));
        kv("time.T", format!("{:?}", self.t_end));
        kv("time.nt", self.nt.to_string());
        kv("time.samples", self.samples.to_string());
        kv("time.pressure", self.record_pressure.to_string());
        let src = |s: &FieldSource| match s {
            FieldSource::Catalog(n) => n.clone(),
            FieldSource::File(p) => p.display().to_string(),
        };
        kv("data.u0", src(&self.u0));
        kv("data.u0_scale", format!("{:?}", self.u0_scale));
        kv("data.f", src(&self.f));
        kv("data.f_scale", format!("{:?}", self.f_scale));
        if let Some(s) = &self.phi {
            kv("data.phi", src(s));
        }
        if let Some(s) = &self.grad_psi {
            kv("data.grad_psi", src(s));
        }
        if let Some(p) = &self.problem_dir {
            kv("data.problem", p.display().to_string());
        }
        if let Some(p) = &self.trajectory_dir {
            kv("data.trajectory", p.display().to_string());
        }
        for (k, s) in g_entries(&self.g) {
            kv(k, s);
        }
        kv("solver.max_iters", self.solver.max_iters.to_string());
        kv("solver.rel_tol", format!("{:?}", self.solver.rel_tol));
        kv("solver.relaxation", format!("{:?}", self.solver.relaxation));
        kv(
            "solver.ball",
            match self.solver.ball {
                BallMode::Computed => "computed".into(),
                BallMode::Unbounded => "unbounded".into(),
                BallMode::User(m) => format!("{m:?}"),
            },
        );
        kv("solver.project_output", self.solver.project_output.to_string());
        kv("solver.nt", self.solver.nt.to_string());
        kv("solver.start", if self.start == StartMode::Zero { "zero" } else { "random" }.into());
        kv("audit.tol_rel", format!("{:?}", self.audit.tol_rel));
        kv("audit.c_max", format!("{:?}", self.audit.c_max));
        kv("sweep.target", self.sweep.target.name().into());
        kv("sweep.delta0", format!("{:?}", self.sweep.delta0));
        kv("sweep.ratio", format!("{:?}", self.sweep.ratio));
        kv("sweep.rungs", self.sweep.rungs.to_string());
        kv("sweep.kmax", self.sweep.kmax.to_string());
        kv("output.dir", self.output_dir.display().to_string());
        kv("output.timing", self.timing.to_string());
        kv("seed", self.seed.to_string());
        v.into_iter().map(|(k, s)| format!("{k} = {s}\n")).collect()
    }
}

/// Configuration entries that reproduce `g`.
pub fn g_entries(g: &GSpec) -> Vec<(&'static str, String)> {
    match *g {
        GSpec::Constant(c) => vec![("g.kind", "constant".into()), ("g.value", format!("{c:?}"))],
        GSpec::Separable { space, time } => {
            let mut v = vec![("g.kind", "separable".to_string())];
            match space {
                SpaceProfile::One => v.push(("g.space", "one".into())),
                SpaceProfile::CosX1 { offset } => {
                    v.push(("g.space", "cos_x1".into()));
                    v.push(("g.offset", format!("{offset:?}")));
                }
            }
            match time {
                TimeProfile::One => v.push(("g.time", "one".into())),
                TimeProfile::Exp { lambda } => {
                    v.push(("g.time", "exp".into()));
                    v.push(("g.lambda", format!("{lambda:?}")));
                }
                TimeProfile::CosShift { omega, c } => {
                    v.push(("g.time", "cos_shift".into()));
                    v.push(("g.omega", format!("{omega:?}")));
                    v.push(("g.c", format!("{c:?}")));
                }
            }
            v
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "# forward run\ngrid.d = 2\ngrid.n = 16\nparams.mu = 1\nparams.alpha = 2\nparams.beta = 1\nparams.r = 3\ntime.T = 1\ntime.nt = 100\n";

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse_config(MINIMAL, Path::new(".")).unwrap();
        assert_eq!(c.params.length, std::f64::consts::TAU);
        assert_eq!(c.seed, DEFAULT_SEED);
        assert_eq!(c.solver.rel_tol, 1e-8);
        assert_eq!(c.solver.nt, 100);
        assert_eq!(c.g, GSpec::Constant(1.0));
        assert_eq!(c.u0, FieldSource::Catalog("zero".into()));
        assert_eq!(c.samples, 200);
    }

    #[test]
    fn low_exponent_in_3d_is_reported_with_line() {
        let text = MINIMAL.replace("grid.d = 2", "grid.d = 3").replace("params.r = 3", "params.r = 2");
        let err = parse_config(&text, Path::new(".")).unwrap_err();
        let hit = err.0.iter().find(|i| i.message.contains("r ≥ 3 required for d = 3")).unwrap();
        assert_eq!(hit.line, Some(7));
    }

    #[test]
    fn every_problem_is_reported() {
        let text = format!("{MINIMAL}bogus.key = 1\nparams.mu = x\ntime.nt = -3\n");
        let err = parse_config(&text, Path::new(".")).unwrap_err();
        let msgs: Vec<String> = err.0.iter().map(|i| i.to_string()).collect();
        assert!(msgs.iter().any(|m| m.contains("unknown key `bogus.key`") && m.starts_with("line 10")));
        assert!(msgs.iter().any(|m| m.contains("repeats")));
        assert!(msgs.iter().any(|m| m.contains("time.nt")));
    }

    #[test]
    fn missing_required_keys_are_listed() {
        let err = parse_config("grid.d = 2\n", Path::new(".")).unwrap_err();
        assert_eq!(err.0.iter().filter(|i| i.message.starts_with("missing required key")).count(), REQUIRED.len() - 1);
    }

    #[test]
    fn pi_multiples() {
        assert_eq!(parse_real("2pi"), Some(std::f64::consts::TAU));
        assert_eq!(parse_real("pi"), Some(std::f64::consts::PI));
        assert_eq!(parse_real("0.5"), Some(0.5));
        assert_eq!(parse_real("zpi"), None);
    }

    #[test]
    fn render_round_trips() {
        let text = format!("{MINIMAL}g.kind = separable\ng.space = cos_x1\ng.time = exp\ng.lambda = -1\nsolver.ball = 3.5\n");
        let c = parse_config(&text, Path::new(".")).unwrap();
        let again = parse_config(&c.render(), Path::new(".")).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn missing_path_is_an_error() {
        let text = format!("{MINIMAL}data.u0 = no/such/file.bin\n");
        let err = parse_config(&text, Path::new(".")).unwrap_err();
        assert!(err.0[0].message.contains("data.u0"));
    }
}
