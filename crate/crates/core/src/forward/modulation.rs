use crate::spectral::ScalarField;

use super::ForwardError;

/// Closed-form time factors `b(t)` with their derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimeProfile {
    One,
    /// `e^{λt}`
    Exp { lambda: f64 },
    /// `cos(ωt) + c`
    CosShift { omega: f64, c: f64 },
}

impl TimeProfile {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            TimeProfile::One => 1.0,
            TimeProfile::Exp { lambda } => (lambda * t).exp(),
            TimeProfile::CosShift { omega, c } => (omega * t).cos() + c,
        }
    }

    pub fn rate(&self, t: f64) -> f64 {
        match *self {
            TimeProfile::One => 0.0,
            TimeProfile::Exp { lambda } => lambda * (lambda * t).exp(),
            TimeProfile::CosShift { omega, .. } => -omega * (omega * t).sin(),
        }
    }
}

/// Value of `g(·, t)` on the grid, with a fast path for spatially uniform `g`.
#[derive(Clone, Debug, PartialEq)]
pub enum GValue {
    Uniform(f64),
    Field(Vec<f64>),
}

impl GValue {
    pub fn at(&self, i: usize) -> f64 {
        match self {
            GValue::Uniform(c) => *c,
            GValue::Field(v) => v[i],
        }
    }

    pub fn min_abs(&self) -> f64 {
        match self {
            GValue::Uniform(c) => c.abs(),
            GValue::Field(v) => v.iter().fold(f64::INFINITY, |m, x| m.min(x.abs())),
        }
    }

    pub fn max_abs(&self) -> f64 {
        match self {
            GValue::Uniform(c) => c.abs(),
            GValue::Field(v) => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }
}

impl From<&ScalarField> for GValue {
    fn from(s: &ScalarField) -> Self {
        GValue::Field(s.physical().into_owned())
    }
}

/// Scalar modulation `g(x, t)` of the forcing `F = f g`.
#[derive(Clone, Debug)]
pub enum Modulation {
    Constant(f64),
    /// `a(x) b(t)`
    Separable { space: Vec<f64>, time: TimeProfile },
    /// Samples of `g` and `g_t` on a time grid; linear interpolation between rows.
    Tabulated { times: Vec<f64>, values: Vec<Vec<f64>>, rates: Vec<Vec<f64>> },
}

impl Modulation {
    pub fn separable(space: &ScalarField, time: TimeProfile) -> Self {
        Modulation::Separable { space: space.physical().into_owned(), time }
    }

    pub fn eval(&self, t: f64) -> GValue {
        match self {
            Modulation::Constant(c) => GValue::Uniform(*c),
            Modulation::Separable { space, time } => {
                let b = time.value(t);
                GValue::Field(space.iter().map(|a| a * b).collect())
            }
            Modulation::Tabulated { times, values, .. } => GValue::Field(interpolate(times, values, t)),
        }
    }

    pub fn eval_rate(&self, t: f64) -> GValue {
        match self {
            Modulation::Constant(_) => GValue::Uniform(0.0),
            Modulation::Separable { space, time } => {
                let b = time.rate(t);
                GValue::Field(space.iter().map(|a| a * b).collect())
            }
            Modulation::Tabulated { times, rates, .. } => GValue::Field(interpolate(times, rates, t)),
        }
    }

    /// Samples this modulation at `nt + 1` uniform times on `[0, t_end]`.
    pub fn tabulate(&self, npoints: usize, t_end: f64, nt: usize) -> Self {
        let times: Vec<f64> = (0..=nt).map(|j| t_end * j as f64 / nt as f64).collect();
        let expand = |v: GValue| match v {
            GValue::Uniform(c) => vec![c; npoints],
            GValue::Field(f) => f,
        };
        let values = times.iter().map(|&t| expand(self.eval(t))).collect();
        let rates = times.iter().map(|&t| expand(self.eval_rate(t))).collect();
        Modulation::Tabulated { times, values, rates }
    }

    /// Adds `amp · h(x) · w(t)` to the values and `amp · h(x) · w'(t)` to the
    /// rates, where `w(t) = t` when `linear_in_time` and `1` otherwise.
    pub fn perturbed(&self, h: &[f64], amp: f64, linear_in_time: bool, t_end: f64, nt: usize) -> Self {
        let Modulation::Tabulated { times, mut values, mut rates } = self.tabulate(h.len(), t_end, nt) else {
            unreachable!("tabulate returns a table")
        };
        for (j, &t) in times.iter().enumerate() {
            let w = if linear_in_time { t } else { 1.0 };
            for (i, &hv) in h.iter().enumerate() {
                values[j][i] += amp * hv * w;
                if linear_in_time {
                    rates[j][i] += amp * hv;
                }
            }
        }
        Modulation::Tabulated { times, values, rates }
    }

    /// `sup |g|` over the grid and the time samples `jT/nt`.
    pub fn sup_norm(&self, t_end: f64, nt: usize) -> f64 {
        self.sup_over(t_end, nt, false)
    }

    /// `sup |g_t|` over the grid and the time samples `jT/nt`.
    pub fn rate_sup_norm(&self, t_end: f64, nt: usize) -> f64 {
        self.sup_over(t_end, nt, true)
    }

    fn sup_over(&self, t_end: f64, nt: usize, rate: bool) -> f64 {
        let nt = nt.max(1);
        let time_at = |j: usize| t_end * j as f64 / nt as f64;
        match self {
            Modulation::Constant(c) => {
                if rate {
                    0.0
                } else {
                    c.abs()
                }
            }
            Modulation::Separable { space, time } => {
                let a = space.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                let b = (0..=nt)
                    .map(|j| if rate { time.rate(time_at(j)).abs() } else { time.value(time_at(j)).abs() })
                    .fold(0.0, f64::max);
                a * b
            }
            Modulation::Tabulated { .. } => (0..=nt)
                .map(|j| if rate { self.eval_rate(time_at(j)) } else { self.eval(time_at(j)) }.max_abs())
                .fold(0.0, f64::max),
        }
    }

    /// Checks the modulation against a grid of `npoints` samples.
    pub fn check_len(&self, npoints: usize) -> Result<(), ForwardError> {
        let ok = match self {
            Modulation::Constant(_) => true,
            Modulation::Separable { space, .. } => space.len() == npoints,
            Modulation::Tabulated { values, rates, times } => {
                !times.is_empty()
                    && values.len() == times.len()
                    && rates.len() == times.len()
                    && values.iter().chain(rates).all(|v| v.len() == npoints)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(ForwardError::InvalidInput("modulation does not match the grid".into()))
        }
    }
}

fn interpolate(times: &[f64], rows: &[Vec<f64>], t: f64) -> Vec<f64> {
    if t <= times[0] {
        return rows[0].clone();
    }
    let last = times.len() - 1;
    if t >= times[last] {
        return rows[last].clone();
    }
    let j = times.partition_point(|&s| s <= t) - 1;
    let (t0, t1) = (times[j], times[j + 1]);
    let w = (t - t0) / (t1 - t0);
    if w == 0.0 {
        return rows[j].clone();
    }
    rows[j].iter().zip(&rows[j + 1]).map(|(a, b)| a + w * (b - a)).collect()
}
