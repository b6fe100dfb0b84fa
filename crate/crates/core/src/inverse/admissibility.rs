use super::constants::{k1, k2, k3, KTable, K1};
use super::{data_term, InverseError, InverseProblem};
use crate::forward::CbfParams;
use crate::spectral::{norm_l2, norm_lp};

/// Which of the three parameter branches a `(d, r)` pair falls in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// `d = 2`, `1 ≤ r ≤ 3`
    Planar,
    /// `r > 3`
    Fast,
    /// `d = r = 3`
    Critical3D,
}

impl Regime {
    pub fn of(p: &CbfParams) -> Self {
        if p.r > 3.0 {
            Regime::Fast
        } else if p.dim == 3 {
            Regime::Critical3D
        } else {
            Regime::Planar
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Regime::Planar => "d2_r_le_3",
            Regime::Fast => "r_gt_3",
            Regime::Critical3D => "d3_r3",
        }
    }
}

/// Verdict of the regime restriction that applies to the parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct RegimeCondition {
    pub label: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl RegimeCondition {
    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }
}

/// Evaluates the data/parameter restriction for the regime of `p`.
/// `phi_l4` is only used in the planar branch.
pub fn regime_condition(p: &CbfParams, phi_l4: f64) -> RegimeCondition {
    match Regime::of(p) {
        Regime::Planar => {
            let lhs = 3.0 / (4.0 * p.alpha.cbrt()) * phi_l4.powf(4.0 / 3.0);
            RegimeCondition { label: "planar_phi_l4", lhs, rhs: p.mu, holds: lhs <= p.mu }
        }
        Regime::Fast => {
            let r = p.r;
            let lhs = 2.0 * (r - 3.0) / (p.alpha * (r - 1.0)) * (8.0 / (p.beta * p.mu * (r - 1.0))).powf(2.0 / (r - 3.0));
            RegimeCondition { label: "fast_damping", lhs, rhs: p.mu, holds: lhs < p.mu }
        }
        Regime::Critical3D => {
            let lhs = 1.0 / p.beta;
            RegimeCondition { label: "critical_inverse_beta", lhs, rhs: p.mu, holds: lhs < p.mu }
        }
    }
}

/// Scalar data entering the ball radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadiusInputs {
    /// `‖u₀‖_H`
    pub u0_norm: f64,
    /// `‖(φ·∇)φ + ∇ψ − μΔφ + αφ + β|φ|^{r−1}φ‖_H`
    pub data_norm: f64,
    /// `sup |g|`
    pub g_sup: f64,
    /// `sup |g_t|`
    pub gt_sup: f64,
    /// `min_x |g(x, T)|`
    pub g_final_min: f64,
    pub t_end: f64,
}

/// Outcome of the ball-radius computation: the value, and in the closed-form
/// branches the denominator whose positivity makes it defined.
#[derive(Clone, Debug, PartialEq)]
pub struct Radius {
    pub value: Result<f64, String>,
    pub denominator: Option<f64>,
}

/// Ball radius `M`. Closed form for `r > 3` and `d = r = 3`; for `d = 2`,
/// `r ≤ 3` the smallest root of `LHS(M) ≤ M` in the implicit inequality on `[0, 1e9]`.
pub fn compute_m(p: &CbfParams, inp: &RadiusInputs) -> Radius {
    let t = inp.t_end;
    match Regime::of(p) {
        Regime::Fast => {
            let c = match k2(p) {
                Ok(c) => c,
                Err(e) => return Radius { value: Err(e.to_string()), denominator: None },
            };
            if !(p.alpha > c.eta_star) {
                return Radius {
                    value: Err(format!("α = {} does not exceed η* = {:.6e}", p.alpha, c.eta_star)),
                    denominator: None,
                };
            }
            let num = (8.0 * c.k21 / (t * t) + 8.0 * c.k22 + 8.0 * c.k23 / t).sqrt() * inp.u0_norm + inp.data_norm;
            let den = inp.g_final_min
                - ((8.0 * c.k24 + 8.0 * c.k25 / t).sqrt() * inp.g_sup
                    + (3.0 / p.alpha + 1.0 / (p.alpha * (p.alpha - c.eta_star))).sqrt() * inp.gt_sup);
            closed_form(num, den)
        }
        Regime::Critical3D => {
            let c = match k3(p) {
                Ok(c) => c,
                Err(e) => return Radius { value: Err(e.to_string()), denominator: None },
            };
            let num = (8.0 * c.k31 / (t * t) + 8.0 * c.k32 + 8.0 * c.k33 / t).sqrt() * inp.u0_norm + inp.data_norm;
            let den = inp.g_final_min
                - ((8.0 * c.k34 + 8.0 * c.k35 / t).sqrt() * inp.g_sup
                    + (3.0 / p.alpha + 1.0 / (p.alpha * p.alpha)).sqrt() * inp.gt_sup);
            closed_form(num, den)
        }
        Regime::Planar => Radius { value: planar_radius(p, inp), denominator: None },
    }
}

fn closed_form(num: f64, den: f64) -> Radius {
    if den > 0.0 {
        Radius { value: Ok(num / den), denominator: Some(den) }
    } else {
        Radius {
            value: Err(format!("ball radius denominator {den:.6e} is not positive")),
            denominator: Some(den),
        }
    }
}

/// Right-hand side of the planar implicit inequality at radius `m`, with the
/// unnamed interpolation constant set to one.
pub fn planar_bound(p: &CbfParams, inp: &RadiusInputs, m: f64) -> f64 {
    let K1 { k11, k12, k13 } = k1(p);
    let (mu, al, t) = (p.mu, p.alpha, inp.t_end);
    let a = inp.u0_norm;
    let gm2 = (inp.g_sup * m).powi(2);
    let pp = (1.0 / t + al / 8.0) * a * a + gm2 / al;
    let x1 = (k11 / t + k12) * a * a
        + (0.75 * t + k13) * gm2
        + (a + inp.g_sup * m / al).powf(2.0 / 3.0)
            * (4.0 / mu * pp + gm2 / (2.0 * mu * al)).powf(4.0 / 3.0)
            * (4.0 / (mu * mu) * pp + 3.0 * t * gm2 / (8.0 * mu * mu));
    let x2 = 8.0 / t + 8.0 / (mu * mu) * pp + gm2 / (mu * mu * al);
    (x1.sqrt() * x2.sqrt() + (t / al).sqrt() * inp.gt_sup * m + inp.data_norm) / inp.g_final_min
}

fn planar_radius(p: &CbfParams, inp: &RadiusInputs) -> Result<f64, String> {
    if !(inp.g_final_min > 0.0) {
        return Err("g(·,T) vanishes somewhere".into());
    }
    let h = |m: f64| planar_bound(p, inp, m) - m;
    if h(0.0) <= 0.0 {
        return Ok(0.0);
    }
    const UPPER: f64 = 1e9;
    let mut prev = 0.0;
    let samples = 2000;
    for j in 0..=samples {
        // log-spaced from 1e-12 to 1e9
        let m = 10f64.powf(-12.0 + 21.0 * j as f64 / samples as f64).min(UPPER);
        if h(m) <= 0.0 {
            let (mut lo, mut hi) = (prev, m);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if h(mid) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo <= 1e-14 * hi {
                    break;
                }
            }
            return Ok(hi);
        }
        prev = m;
    }
    Err(format!("implicit radius inequality has no solution on [0, {UPPER:e}]"))
}

/// Lower bound on `T` from the worked example with `g ≡ 1`, `u₀ = 0`, for
/// radius `m`. `None` outside the closed-form branches or when `8K·4 ≥ 1`.
pub fn example_t_bound(p: &CbfParams, m: f64, data_norm: f64) -> Option<f64> {
    let (k4, k5) = match Regime::of(p) {
        Regime::Fast => k2(p).ok().map(|c| (c.k24, c.k25))?,
        Regime::Critical3D => k3(p).ok().map(|c| (c.k34, c.k35))?,
        Regime::Planar => return None,
    };
    let den = (1.0 - 8.0 * k4) * m * m - data_norm * data_norm;
    if 8.0 * k4 < 1.0 && den > 0.0 {
        Some(8.0 * m * m * k5 / den)
    } else {
        None
    }
}

/// Per-condition verdicts for an inverse problem.
#[derive(Clone, Debug, PartialEq)]
pub struct AdmissibilityReport {
    pub regime: Regime,
    /// `g_T = min_x |g(x, T)|`
    pub g_final_min: f64,
    pub g_final_positive: bool,
    pub condition: RegimeCondition,
    pub inputs: RadiusInputs,
    pub constants: KTable,
    /// `α > η*` in the fast branch.
    pub eta_star_below_alpha: Option<bool>,
    pub radius: Radius,
    pub radius_defined: bool,
    pub t_bound: Option<f64>,
}

impl AdmissibilityReport {
    /// The problem satisfies positivity of `g(·,T)` and its regime restriction.
    pub fn admissible(&self) -> bool {
        self.g_final_positive && self.condition.holds
    }

    pub fn m(&self) -> Option<f64> {
        self.radius.value.as_ref().ok().copied()
    }

    /// Flat `key = value` rendering.
    pub fn to_key_value(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| s.push_str(&format!("{k} = {v}\n"));
        kv("regime", self.regime.tag().into());
        kv("admissible", self.admissible().to_string());
        kv("final_modulation.min", fmt(self.g_final_min));
        kv("final_modulation.pass", self.g_final_positive.to_string());
        kv("condition.label", self.condition.label.into());
        kv("condition.lhs", fmt(self.condition.lhs));
        kv("condition.rhs", fmt(self.condition.rhs));
        kv("condition.slack", fmt(self.condition.slack()));
        kv("condition.pass", self.condition.holds.to_string());
        kv("data.u0_norm", fmt(self.inputs.u0_norm));
        kv("data.residual_norm", fmt(self.inputs.data_norm));
        kv("data.g_sup", fmt(self.inputs.g_sup));
        kv("data.gt_sup", fmt(self.inputs.gt_sup));
        let k = &self.constants;
        kv("K11", fmt(k.k1.k11));
        kv("K12", fmt(k.k1.k12));
        kv("K13", fmt(k.k1.k13));
        if let Some(c) = &k.k2 {
            kv("gamma", fmt(c.gamma));
            kv("K21", fmt(c.k21));
            kv("K22", fmt(c.k22));
            kv("K23", fmt(c.k23));
            kv("K24", fmt(c.k24));
            kv("K25", fmt(c.k25));
            kv("eta_star", fmt(c.eta_star));
        }
        if let Some(ok) = self.eta_star_below_alpha {
            kv("eta_star_below_alpha", ok.to_string());
        }
        if let Some(c) = &k.k3 {
            kv("K31", fmt(c.k31));
            kv("K32", fmt(c.k32));
            kv("K33", fmt(c.k33));
            kv("K34", fmt(c.k34));
            kv("K35", fmt(c.k35));
        }
        if let Some(d) = self.radius.denominator {
            kv("radius.denominator", fmt(d));
        }
        kv("radius.defined", self.radius_defined.to_string());
        match &self.radius.value {
            Ok(m) => kv("M", fmt(*m)),
            Err(why) => {
                kv("M", "undefined".into());
                kv("M.reason", why.clone());
            }
        }
        match self.t_bound {
            Some(t) => kv("example_T_bound", fmt(t)),
            None => kv("example_T_bound", "not_applicable".into()),
        }
        s
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.17e}")
}

/// Evaluates positivity of `g(·,T)`, the regime restriction and the ball radius.
/// `nt` is the number of time intervals used for the sup norms of `g`, `g_t`.
pub fn check_admissibility(problem: &InverseProblem, nt: usize) -> Result<AdmissibilityReport, InverseError> {
    let p = &problem.params;
    let t = problem.t_end;
    let g_final_min = problem.g.eval(t).min_abs();
    let phi_l4 = norm_lp(&problem.phi, 4.0)?;
    let condition = regime_condition(p, phi_l4);
    let inputs = RadiusInputs {
        u0_norm: norm_l2(&problem.u0),
        data_norm: norm_l2(&data_term(problem)?),
        g_sup: problem.g.sup_norm(t, nt),
        gt_sup: problem.g.rate_sup_norm(t, nt),
        g_final_min,
        t_end: t,
    };
    let constants = KTable { k1: k1(p), k2: k2(p).ok(), k3: k3(p).ok() };
    let eta_star_below_alpha = constants.k2.map(|c| c.eta_star < p.alpha);
    let radius = compute_m(p, &inputs);
    let radius_defined = radius.value.is_ok();
    let t_bound = radius.value.as_ref().ok().and_then(|&m| example_t_bound(p, m, inputs.data_norm));
    Ok(AdmissibilityReport {
        regime: Regime::of(p),
        g_final_min,
        g_final_positive: g_final_min > 0.0,
        condition,
        inputs,
        constants,
        eta_star_below_alpha,
        radius,
        radius_defined,
        t_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(dim: usize, r: f64, mu: f64, beta: f64, alpha: f64) -> CbfParams {
        CbfParams { mu, alpha, beta, r, dim, length: 1.0 }
    }

    fn unit_g(u0: f64, data: f64, t: f64) -> RadiusInputs {
        RadiusInputs { u0_norm: u0, data_norm: data, g_sup: 1.0, gt_sup: 0.0, g_final_min: 1.0, t_end: t }
    }

    #[test]
    fn critical_3d_condition() {
        assert!(regime_condition(&p(3, 3.0, 1.0, 2.0, 0.3), 0.0).holds);
        assert!(!regime_condition(&p(3, 3.0, 0.4, 2.0, 0.3), 0.0).holds);
    }

    #[test]
    fn planar_condition_zero_data() {
        let c = regime_condition(&p(2, 1.0, 1e-6, 1.0, 1.0), 0.0);
        assert_eq!(c.label, "planar_phi_l4");
        assert!(c.holds);
    }

    #[test]
    fn zero_data_gives_zero_radius() {
        let par = p(3, 3.0, 1.0, 5.0, 100.0);
        let r = compute_m(&par, &unit_g(0.0, 0.0, 10.0));
        assert_eq!(r.value, Ok(0.0));
        let planar = compute_m(&p(2, 3.0, 1.0, 1.0, 2.0), &unit_g(0.0, 0.0, 1.0));
        assert_eq!(planar.value, Ok(0.0));
    }

    #[test]
    fn closed_form_radius_matches_hand_plug_in() {
        let par = p(3, 3.0, 1.0, 5.0, 100.0);
        let (a, data, t) = (0.3, 0.7, 10.0);
        // independent plug-in of the printed constants with βμ − 1 = 4
        let k31: f64 = 6.0 + 2.0 / 4.0;
        let k32: f64 = 75.0;
        let k33: f64 = (15.0 + 0.25) * 100.0 / 4.0;
        let k34: f64 = 3.0 / 400.0 + 3.0 / 32.0;
        let k35: f64 = (8.0 + 0.25) * 2.0 / 100.0;
        let num = (8.0 * k31 / (t * t) + 8.0 * k32 + 8.0 * k33 / t).sqrt() * a + data;
        let den = 1.0 - (8.0 * k34 + 8.0 * k35 / t).sqrt();
        assert!(den > 0.0);
        let r = compute_m(&par, &unit_g(a, data, t));
        assert!((r.value.unwrap() - num / den).abs() < 1e-12 * num / den);
    }

    #[test]
    fn negative_denominator_is_undefined() {
        // α = 8, β = 2, μ = 1, T = 10: 8·K34 = 3.75 > 1
        let r = compute_m(&p(3, 3.0, 1.0, 2.0, 8.0), &unit_g(0.0, 1.0, 10.0));
        assert!(r.value.is_err());
        assert!(r.denominator.unwrap() < 0.0);
        let tiny = compute_m(&p(2, 5.0, 1.0, 1.0, 1e-3), &unit_g(0.0, 1.0, 1.0));
        assert!(tiny.value.is_err());
    }

    #[test]
    fn planar_radius_is_a_fixed_point() {
        let par = p(2, 3.0, 1.0, 1.0, 2.0);
        let inp = RadiusInputs { u0_norm: 0.01, data_norm: 0.01, g_sup: 0.05, gt_sup: 0.0, g_final_min: 1.0, t_end: 1.0 };
        let m = compute_m(&par, &inp).value.unwrap();
        assert!(planar_bound(&par, &inp, m) <= m * (1.0 + 1e-12));
        assert!(planar_bound(&par, &inp, 0.99 * m) > 0.99 * m);
        // with g ≡ 1 the bound grows faster than M itself
        assert!(compute_m(&par, &unit_g(0.1, 0.1, 1.0)).value.is_err());
    }

    #[test]
    fn example_bound_is_met_by_closed_form_radius() {
        let par = p(3, 3.0, 1.0, 5.0, 100.0);
        let t = 10.0;
        let m = compute_m(&par, &unit_g(0.0, 0.5, t)).value.unwrap();
        let tb = example_t_bound(&par, m, 0.5).unwrap();
        assert!(tb <= t * (1.0 + 1e-12));
    }
}
