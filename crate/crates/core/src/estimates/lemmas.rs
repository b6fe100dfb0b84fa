use std::fmt;
use std::fmt::Write as _;

use super::EnergyLedger;
use crate::inverse::{k1, k2, k3};

/// The audited energy inequalities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LemmaId {
    /// `sup ‖u‖ ≤ ‖u₀‖ + ‖g‖₀‖f‖/α`
    EnergySup,
    /// `μ∫‖∇u‖² + β∫‖u‖^{r+1}_{L^{r+1}}` bounded for every `t`
    Dissipation,
    /// `‖∇u(t₁)‖²` at a time in `[T/8, 2T/8]`
    GradientMeanValue,
    /// `‖u(t₁)‖^{r+1}_{L^{r+1}}` at a time in `[T/8, 2T/8]`
    LrMeanValue,
    /// `sup_{[t₁,T]} ‖∇u‖²`, `d = 2`, `r ≤ 3`
    GradientSupPlanar,
    /// `∫_{t₁}^t ‖Δu‖²`, `d = 2`, `r ≤ 3`
    LaplacianIntegralPlanar,
    /// Enstrophy balance for `r > 3`
    GradientFast,
    /// Enstrophy balance for `d = r = 3`
    GradientCritical,
    /// `∫_{t₁}^{3T/8} ‖u_t‖²`, `d = 2`, `r ≤ 3` (ratio form)
    RateIntegralPlanar,
    RateIntegralFast,
    RateIntegralCritical,
    /// `‖u_t(t₂)‖²` at a time in `[2T/8, 3T/8]`, `d = 2`, `r ≤ 3` (ratio form)
    RateMeanValuePlanar,
    RateMeanValueFast,
    RateMeanValueCritical,
    /// `sup_{[t₂,T]} ‖u_t‖²`, `d = 2`, `r ≤ 3` (ratio form)
    RateSupPlanar,
    RateSupFast,
    RateSupCritical,
    /// `‖u(t)‖² + 2μ∫‖∇u‖² + α∫‖u‖² + 2β∫‖u‖^{r+1}` for every `t`
    EnergyBudget,
}

impl LemmaId {
    pub const ALL: [LemmaId; 18] = [
        LemmaId::EnergySup,
        LemmaId::Dissipation,
        LemmaId::GradientMeanValue,
        LemmaId::LrMeanValue,
        LemmaId::GradientSupPlanar,
        LemmaId::LaplacianIntegralPlanar,
        LemmaId::GradientFast,
        LemmaId::GradientCritical,
        LemmaId::RateIntegralPlanar,
        LemmaId::RateIntegralFast,
        LemmaId::RateIntegralCritical,
        LemmaId::RateMeanValuePlanar,
        LemmaId::RateMeanValueFast,
        LemmaId::RateMeanValueCritical,
        LemmaId::RateSupPlanar,
        LemmaId::RateSupFast,
        LemmaId::RateSupCritical,
        LemmaId::EnergyBudget,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            LemmaId::EnergySup => "energy_sup",
            LemmaId::Dissipation => "dissipation",
            LemmaId::GradientMeanValue => "gradient_mean_value",
            LemmaId::LrMeanValue => "lr_mean_value",
            LemmaId::GradientSupPlanar => "gradient_sup_planar",
            LemmaId::LaplacianIntegralPlanar => "laplacian_integral_planar",
            LemmaId::GradientFast => "gradient_fast",
            LemmaId::GradientCritical => "gradient_critical",
            LemmaId::RateIntegralPlanar => "rate_integral_planar",
            LemmaId::RateIntegralFast => "rate_integral_fast",
            LemmaId::RateIntegralCritical => "rate_integral_critical",
            LemmaId::RateMeanValuePlanar => "rate_mean_value_planar",
            LemmaId::RateMeanValueFast => "rate_mean_value_fast",
            LemmaId::RateMeanValueCritical => "rate_mean_value_critical",
            LemmaId::RateSupPlanar => "rate_sup_planar",
            LemmaId::RateSupFast => "rate_sup_fast",
            LemmaId::RateSupCritical => "rate_sup_critical",
            LemmaId::EnergyBudget => "energy_budget",
        }
    }

    /// Inequalities on `u` itself and its gradient, as opposed to `u_t`.
    pub fn is_state_bound(&self) -> bool {
        matches!(
            self,
            LemmaId::EnergySup
                | LemmaId::Dissipation
                | LemmaId::GradientMeanValue
                | LemmaId::LrMeanValue
                | LemmaId::GradientSupPlanar
                | LemmaId::LaplacianIntegralPlanar
                | LemmaId::GradientFast
                | LemmaId::GradientCritical
                | LemmaId::EnergyBudget
        )
    }

    /// Bounds containing an unnamed interpolation constant; judged by ratio.
    pub fn is_ratio_form(&self) -> bool {
        matches!(self, LemmaId::RateIntegralPlanar | LemmaId::RateMeanValuePlanar | LemmaId::RateSupPlanar)
    }
}

impl fmt::Display for LemmaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Pass,
    Fail,
    NotApplicable(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LemmaVerdict {
    pub lemma: LemmaId,
    /// `d`, `r` branch of the parameters.
    pub regime: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`
    pub slack: f64,
    /// `lhs / rhs` (zero when both vanish).
    pub ratio: f64,
    /// Time at which the inequality was evaluated, when it is pointwise in time.
    pub time: Option<f64>,
    pub outcome: Outcome,
}

impl LemmaVerdict {
    pub fn passed(&self) -> bool {
        self.outcome == Outcome::Pass
    }

    pub fn applicable(&self) -> bool {
        !matches!(self.outcome, Outcome::NotApplicable(_))
    }
}

/// Tolerances of the audit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuditConfig {
    /// Absolute forms pass when `slack ≥ −tol_rel · rhs`.
    pub tol_rel: f64,
    /// Ratio forms pass when `lhs / rhs ≤ c_max`.
    pub c_max: f64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self { tol_rel: 1e-2, c_max: 100.0 }
    }
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else if rhs > 0.0 {
        lhs / rhs
    } else {
        f64::INFINITY
    }
}

/// Quantities shared by all bounds.
struct Data {
    a: f64,
    gf: f64,
    gtf: f64,
    t: f64,
    mu: f64,
    al: f64,
    beta: f64,
    /// `(1/T + α/8)‖u₀‖² + ‖g‖₀²‖f‖²/α`
    p: f64,
}

impl Data {
    fn of(l: &EnergyLedger) -> Self {
        let p = &l.params;
        let a = l.u0_norm;
        let gf = l.g_sup * l.f_norm;
        Self {
            a,
            gf,
            gtf: l.gt_sup * l.f_norm,
            t: l.t_end,
            mu: p.mu,
            al: p.alpha,
            beta: p.beta,
            p: (1.0 / l.t_end + p.alpha / 8.0) * a * a + gf * gf / p.alpha,
        }
    }

    /// Planar rate-integral bound with the interpolation constant set to one.
    fn planar_rate_integral(&self, l: &EnergyLedger) -> f64 {
        let c = k1(&l.params);
        let (mu, al, t, gf2) = (self.mu, self.al, self.t, self.gf * self.gf);
        let s1 = (c.k11 / t + c.k12) * self.a * self.a + (0.75 * t + c.k13) * gf2;
        let s2 = (self.a + self.gf / al).powf(2.0 / 3.0)
            * (4.0 / mu * self.p + gf2 / (2.0 * mu * al)).powf(4.0 / 3.0)
            * (4.0 / (mu * mu) * self.p + 3.0 * t * gf2 / (8.0 * mu * mu));
        s1 + s2
    }

    fn fast_rate_integral(&self, l: &EnergyLedger) -> Option<f64> {
        let c = k2(&l.params).ok()?;
        let t = self.t;
        Some(
            (c.k21 / t + c.k22 * t + c.k23) * self.a * self.a
                + (c.k24 * t + c.k25) * self.gf * self.gf
                + 3.0 * t / (8.0 * self.al) * self.gtf * self.gtf,
        )
    }

    fn critical_rate_integral(&self, l: &EnergyLedger) -> Option<f64> {
        let c = k3(&l.params).ok()?;
        let t = self.t;
        Some(
            (c.k31 / t + c.k32 * t + c.k33) * self.a * self.a
                + (c.k34 * t + c.k35) * self.gf * self.gf
                + 3.0 * t / (8.0 * self.al) * self.gtf * self.gtf,
        )
    }
}

fn regime_tag(l: &EnergyLedger) -> String {
    format!("d{}_r{}", l.params.dim, l.params.r)
}

/// Checks one inequality against the ledger.
pub fn check_lemma(id: LemmaId, ledger: &EnergyLedger, cfg: &AuditConfig) -> LemmaVerdict {
    let regime = regime_tag(ledger);
    let p = &ledger.params;
    let planar = p.dim == 2 && p.r <= 3.0;
    let fast = p.r > 3.0;
    let critical = p.dim == 3 && p.r == 3.0;
    let need = |ok: bool, why: &str| if ok { None } else { Some(why.to_string()) };
    let gate = match id {
        LemmaId::GradientSupPlanar
        | LemmaId::LaplacianIntegralPlanar
        | LemmaId::RateIntegralPlanar
        | LemmaId::RateMeanValuePlanar
        | LemmaId::RateSupPlanar => need(planar, "requires d = 2 and r <= 3"),
        LemmaId::GradientFast => need(fast, "requires r > 3").or_else(|| {
            let eta = fast_eta(ledger);
            need(eta < 2.0 * p.alpha, &format!("requires eta = {eta:.6e} < 2 alpha"))
        }),
        LemmaId::RateIntegralFast | LemmaId::RateMeanValueFast => need(fast, "requires r > 3"),
        LemmaId::RateSupFast => need(fast, "requires r > 3").or_else(|| {
            let es = k2(p).map(|c| c.eta_star).unwrap_or(f64::INFINITY);
            need(es < p.alpha, &format!("requires eta* = {es:.6e} < alpha"))
        }),
        LemmaId::GradientCritical
        | LemmaId::RateIntegralCritical
        | LemmaId::RateMeanValueCritical
        | LemmaId::RateSupCritical => {
            need(critical, "requires d = r = 3").or_else(|| need(p.beta * p.mu > 1.0, "requires beta mu > 1"))
        }
        _ => None,
    };
    if let Some(reason) = gate {
        return LemmaVerdict {
            lemma: id,
            regime,
            lhs: f64::NAN,
            rhs: f64::NAN,
            slack: f64::NAN,
            ratio: f64::NAN,
            time: None,
            outcome: Outcome::NotApplicable(reason),
        };
    }
    if ledger.is_empty() {
        return LemmaVerdict {
            lemma: id,
            regime,
            lhs: f64::NAN,
            rhs: f64::NAN,
            slack: f64::NAN,
            ratio: f64::NAN,
            time: None,
            outcome: Outcome::NotApplicable("empty ledger".into()),
        };
    }
    let (lhs, rhs, time) = evaluate(id, ledger, cfg);
    let slack = rhs - lhs;
    let ratio = ratio(lhs, rhs);
    let ok = if id.is_ratio_form() { ratio <= cfg.c_max } else { slack >= -cfg.tol_rel * rhs };
    LemmaVerdict {
        lemma: id,
        regime,
        lhs,
        rhs,
        slack,
        ratio,
        time,
        outcome: if ok && lhs.is_finite() && rhs.is_finite() { Outcome::Pass } else { Outcome::Fail },
    }
}

/// Runs every inequality.
pub fn check_all(ledger: &EnergyLedger, cfg: &AuditConfig) -> Vec<LemmaVerdict> {
    LemmaId::ALL.iter().map(|&id| check_lemma(id, ledger, cfg)).collect()
}

fn fast_eta(l: &EnergyLedger) -> f64 {
    let p = &l.params;
    let r = p.r;
    2.0 * (r - 3.0) / (p.mu * (r - 1.0)) * (4.0 / (p.beta * p.mu * (r - 1.0))).powf(2.0 / (r - 3.0))
}

/// Among `(lhs, rhs, time)` triples keeps the one closest to violation.
fn worst(items: impl Iterator<Item = (f64, f64, f64)>, tol: f64) -> (f64, f64, Option<f64>) {
    let mut best: Option<(f64, f64, f64)> = None;
    for (lhs, rhs, t) in items {
        let margin = rhs - lhs + tol * rhs;
        let replace = match best {
            None => true,
            Some((bl, br, _)) => margin < br - bl + tol * br || margin.is_nan(),
        };
        if replace {
            best = Some((lhs, rhs, t));
        }
    }
    match best {
        Some((l, r, t)) => (l, r, Some(t)),
        None => (0.0, 0.0, None),
    }
}

fn argmin(idx: &[usize], value: impl Fn(usize) -> f64) -> Option<usize> {
    idx.iter().copied().min_by(|&a, &b| value(a).total_cmp(&value(b)))
}

/// `t₁`: minimizer of `‖∇u‖²` over recorded times in `[T/8, 2T/8]`.
pub fn first_mean_value_index(l: &EnergyLedger) -> Option<usize> {
    argmin(&l.window(l.t_end / 8.0, 2.0 * l.t_end / 8.0), |i| l.grad[i])
}

/// `t₂`: minimizer of `‖u_t‖²` over recorded times in `[2T/8, 3T/8]`.
pub fn second_mean_value_index(l: &EnergyLedger) -> Option<usize> {
    argmin(&l.window(2.0 * l.t_end / 8.0, 3.0 * l.t_end / 8.0), |i| l.rate[i])
}

fn evaluate(id: LemmaId, l: &EnergyLedger, cfg: &AuditConfig) -> (f64, f64, Option<f64>) {
    let d = Data::of(l);
    let gf2 = d.gf * d.gf;
    let gtf2 = d.gtf * d.gtf;
    let n = l.len();
    let tol = cfg.tol_rel;
    let t1 = first_mean_value_index(l);
    let t2 = second_mean_value_index(l);
    let missing = (f64::NAN, f64::NAN, None);
    let after = |i0: usize| i0..n;

    match id {
        LemmaId::EnergySup => {
            let lhs = l.l2.iter().copied().fold(0.0, f64::max);
            (lhs, d.a + d.gf / d.al, None)
        }
        LemmaId::Dissipation => worst(
            (0..n).map(|i| {
                let t = l.times[i];
                (d.mu * l.int_grad_sq[i] + d.beta * l.int_lr1[i], 0.5 * d.a * d.a + t * d.gf * (d.a + d.gf / d.al), t)
            }),
            tol,
        ),
        LemmaId::GradientMeanValue => match t1 {
            Some(i) => (l.grad[i].powi(2), 4.0 / d.mu * d.p, Some(l.times[i])),
            None => missing,
        },
        LemmaId::LrMeanValue => {
            match argmin(&l.window(l.t_end / 8.0, 2.0 * l.t_end / 8.0), |i| l.lr1_power(i)) {
                Some(i) => (l.lr1_power(i), 4.0 / d.beta * d.p, Some(l.times[i])),
                None => missing,
            }
        }
        LemmaId::GradientSupPlanar => match t1 {
            Some(i0) => {
                let lhs = after(i0).map(|i| l.grad[i].powi(2)).fold(0.0, f64::max);
                (lhs, 4.0 / d.mu * d.p + gf2 / (2.0 * d.mu * d.al), Some(l.times[i0]))
            }
            None => missing,
        },
        LemmaId::LaplacianIntegralPlanar => match t1 {
            Some(i0) => worst(
                after(i0).map(|i| {
                    let dt = l.times[i] - l.times[i0];
                    (
                        l.int_lap_sq[i] - l.int_lap_sq[i0],
                        4.0 / (d.mu * d.mu) * d.p + dt * gf2 / (d.mu * d.mu),
                        l.times[i],
                    )
                }),
                tol,
            ),
            None => missing,
        },
        LemmaId::GradientFast | LemmaId::GradientCritical => match t1 {
            Some(i0) => {
                let eta = fast_eta(l);
                worst(
                    after(i0).map(|i| {
                        let dt = l.times[i] - l.times[i0];
                        let lhs = if id == LemmaId::GradientFast {
                            l.grad[i].powi(2)
                                + (2.0 * d.al - eta) * (l.int_grad_sq[i] - l.int_grad_sq[i0])
                                + d.beta * (l.int_weighted_grad_sq[i] - l.int_weighted_grad_sq[i0])
                        } else {
                            l.grad[i].powi(2)
                                + d.mu * (l.int_lap_sq[i] - l.int_lap_sq[i0])
                                + 2.0 * (d.beta - 1.0 / d.mu) * (l.int_weighted_grad_sq[i] - l.int_weighted_grad_sq[i0])
                        };
                        (lhs, 4.0 / d.mu * d.p + 2.0 * dt / d.mu * gf2, l.times[i])
                    }),
                    tol,
                )
            }
            None => missing,
        },
        LemmaId::RateIntegralPlanar | LemmaId::RateIntegralFast | LemmaId::RateIntegralCritical => {
            let Some(i0) = t1 else { return missing };
            let i3 = l.landmarks[3];
            let lhs = (l.int_rate_sq[i3] - l.int_rate_sq[i0]).max(0.0);
            let rhs = match id {
                LemmaId::RateIntegralPlanar => Some(d.planar_rate_integral(l)),
                LemmaId::RateIntegralFast => d.fast_rate_integral(l),
                _ => d.critical_rate_integral(l),
            };
            (lhs, rhs.unwrap_or(f64::NAN), Some(l.times[i0]))
        }
        LemmaId::RateMeanValuePlanar | LemmaId::RateMeanValueFast | LemmaId::RateMeanValueCritical => {
            let Some(i) = t2 else { return missing };
            let base = match id {
                LemmaId::RateMeanValuePlanar => Some(d.planar_rate_integral(l)),
                LemmaId::RateMeanValueFast => d.fast_rate_integral(l),
                _ => d.critical_rate_integral(l),
            };
            (l.rate[i].powi(2), 8.0 / d.t * base.unwrap_or(f64::NAN), Some(l.times[i]))
        }
        LemmaId::RateSupPlanar | LemmaId::RateSupFast | LemmaId::RateSupCritical => {
            let Some(i0) = t2 else { return missing };
            let lhs = after(i0).map(|i| l.rate[i].powi(2)).fold(0.0, f64::max);
            let rhs = match id {
                LemmaId::RateSupPlanar => {
                    let x2 = 8.0 / d.t + 8.0 / (d.mu * d.mu) * d.p + gf2 / (d.mu * d.mu * d.al);
                    d.planar_rate_integral(l) * x2 + d.t / d.al * gtf2
                }
                LemmaId::RateSupFast => match (d.fast_rate_integral(l), k2(&l.params)) {
                    (Some(b), Ok(c)) => 8.0 / d.t * b + gtf2 / (d.al * (d.al - c.eta_star)),
                    _ => f64::NAN,
                },
                _ => match d.critical_rate_integral(l) {
                    Some(b) => 8.0 / d.t * b + gtf2 / (d.al * d.al),
                    None => f64::NAN,
                },
            };
            (lhs, rhs, Some(l.times[i0]))
        }
        LemmaId::EnergyBudget => worst(
            (0..n).map(|i| {
                let t = l.times[i];
                let lhs = l.l2[i].powi(2)
                    + 2.0 * d.mu * l.int_grad_sq[i]
                    + d.al * l.int_l2_sq[i]
                    + 2.0 * d.beta * l.int_lr1[i];
                (lhs, d.a * d.a + t / d.al * gf2, t)
            }),
            tol,
        ),
    }
}

/// Verdict table as CSV.
pub fn verdicts_to_csv(verdicts: &[LemmaVerdict]) -> String {
    let mut s = String::from("lemma_id,regime,lhs,rhs,slack,ratio,time,pass\n");
    for v in verdicts {
        let pass = match &v.outcome {
            Outcome::Pass => "pass",
            Outcome::Fail => "fail",
            Outcome::NotApplicable(_) => "not_applicable",
        };
        let time = v.time.map(|t| format!("{t:.17e}")).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{:.17e},{:.17e},{:.17e},{:.17e},{},{}",
            v.lemma, v.regime, v.lhs, v.rhs, v.slack, v.ratio, time, pass
        );
    }
    s
}
