use std::sync::Arc;

use num_complex::Complex64;

use super::{CbfParams, ForwardError, GValue, Modulation};
use crate::spectral::ops::{dealias_in_place, derivative, laplacian_coeffs, project_in_place};
use crate::spectral::{TorusGrid, VectorField};

pub(crate) type Coeffs = Vec<Vec<Complex64>>;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn check_exponent(r: f64) -> Result<(), ForwardError> {
    if r >= 1.0 && r.is_finite() {
        Ok(())
    } else {
        Err(ForwardError::InvalidParams(format!("r must be >= 1, got {r}")))
    }
}

/// `|u|^{r−1}` from the squared magnitude, zero at the origin when `r > 1`.
#[inline]
pub(crate) fn magnitude_power(m2: f64, r: f64) -> f64 {
    if r == 1.0 {
        1.0
    } else if r == 3.0 {
        m2
    } else if m2 == 0.0 {
        0.0
    } else {
        m2.powf(0.5 * (r - 1.0))
    }
}

/// Pointwise `|u|^{r−1} u` on grid samples, without dealiasing.
pub fn damping_physical(u: &VectorField, r: f64) -> Result<Vec<Vec<f64>>, ForwardError> {
    check_exponent(r)?;
    Ok(damping_samples(&u.physical_comps(), r))
}

pub(crate) fn damping_samples(phys: &[Vec<f64>], r: f64) -> Vec<Vec<f64>> {
    let n = phys[0].len();
    let mut out = vec![vec![0.0; n]; phys.len()];
    for i in 0..n {
        let m2: f64 = phys.iter().map(|c| c[i] * c[i]).sum();
        let w = magnitude_power(m2, r);
        for (o, c) in out.iter_mut().zip(phys) {
            o[i] = w * c[i];
        }
    }
    out
}

/// Damping `C(u) = |u|^{r−1} u`, dealiased.
pub fn damping(u: &VectorField, r: f64) -> Result<VectorField, ForwardError> {
    let grid = u.grid().clone();
    let comps = damping_physical(u, r)?
        .iter()
        .map(|c| {
            let mut s = grid.to_spectral(c);
            dealias_in_place(&grid, &mut s);
            s
        })
        .collect();
    Ok(VectorField::from_spectral(&grid, comps))
}

/// Gateaux derivative `C′(u) w`, evaluated pointwise on grid samples.
///
/// For `1 < r < 3` the second term is set to zero where `u = 0`.
pub fn damping_jacobian_apply(u: &VectorField, w: &VectorField, r: f64) -> Result<VectorField, ForwardError> {
    check_exponent(r)?;
    let grid = u.grid().clone();
    let up = u.physical_comps();
    let wp = w.physical_comps();
    let n = grid.len();
    let mut out = vec![vec![0.0; n]; up.len()];
    for i in 0..n {
        let m2: f64 = up.iter().map(|c| c[i] * c[i]).sum();
        let dot: f64 = up.iter().zip(&wp).map(|(a, b)| a[i] * b[i]).sum();
        let first = magnitude_power(m2, r);
        let second = if r == 1.0 || m2 == 0.0 {
            0.0
        } else if r == 3.0 {
            2.0
        } else {
            (r - 1.0) * m2.powf(0.5 * (r - 3.0))
        };
        for a in 0..up.len() {
            out[a][i] = first * wp[a][i] + second * up[a][i] * dot;
        }
    }
    Ok(VectorField::from_physical(&grid, out))
}

/// Skew-symmetric convection `½[(u·∇)u + ∇·(u⊗u)]`, dealiased.
pub fn convection(u: &VectorField) -> VectorField {
    let grid = u.grid().clone();
    let (c, _) = convection_coeffs(&grid, &u.spectral_comps());
    VectorField::from_spectral(&grid, c)
}

/// Returns the convection coefficients and the physical samples of `u`.
pub(crate) fn convection_coeffs(grid: &TorusGrid, u_hat: &[Vec<Complex64>]) -> (Coeffs, Vec<Vec<f64>>) {
    let d = grid.dim();
    let n = grid.len();
    let phys: Vec<Vec<f64>> = u_hat.iter().map(|c| grid.to_physical(c)).collect();
    let mut out: Coeffs = Vec::with_capacity(d);
    for i in 0..d {
        let mut adv = vec![0.0; n];
        for j in 0..d {
            let dij = grid.to_physical(&derivative(grid, &u_hat[i], j));
            for p in 0..n {
                adv[p] += phys[j][p] * dij[p];
            }
        }
        out.push(grid.to_spectral(&adv));
    }
    for i in 0..d {
        for j in i..d {
            let prod: Vec<f64> = (0..n).map(|p| phys[i][p] * phys[j][p]).collect();
            let ph = grid.to_spectral(&prod);
            let (ki, kj) = (grid.kd(i), grid.kd(j));
            for p in 0..n {
                out[i][p] += I * kj[p] * ph[p];
                if i != j {
                    out[j][p] += I * ki[p] * ph[p];
                }
            }
        }
    }
    for c in out.iter_mut() {
        for z in c.iter_mut() {
            *z *= 0.5;
        }
        dealias_in_place(grid, c);
    }
    (out, phys)
}

/// `∇p` solving `−Δp = ∇·[(u·∇)u + β|u|^{r−1}u − f g]` with zero mean.
pub fn pressure_gradient(u: &VectorField, f: &VectorField, g: &GValue, params: &CbfParams) -> Result<VectorField, ForwardError> {
    let grid = u.grid().clone();
    let dyn_ = Dynamics::new(&grid, f, params)?;
    Ok(VectorField::from_spectral(&grid, dyn_.pressure_hat(&u.spectral_comps(), g)))
}

/// `u_t = P[f g − (u·∇)u − β|u|^{r−1}u] + μΔu − αu`.
pub fn rhs(u: &VectorField, f: &VectorField, g: &GValue, params: &CbfParams) -> Result<VectorField, ForwardError> {
    let grid = u.grid().clone();
    let dyn_ = Dynamics::new(&grid, f, params)?;
    Ok(VectorField::from_spectral(&grid, dyn_.rhs_hat(&u.spectral_comps(), g)).with_solenoidal(true))
}

/// The source factor and constants of one forward problem, pre-transformed
/// for repeated right-hand-side evaluations.
pub struct Dynamics {
    grid: Arc<TorusGrid>,
    params: CbfParams,
    f_hat: Coeffs,
    f_phys: Vec<Vec<f64>>,
    f_zero: bool,
}

impl Dynamics {
    pub fn new(grid: &Arc<TorusGrid>, f: &VectorField, params: &CbfParams) -> Result<Self, ForwardError> {
        params.validate()?;
        if grid.dim() != params.dim {
            return Err(ForwardError::InvalidInput(format!(
                "grid dimension {} differs from parameter dimension {}",
                grid.dim(),
                params.dim
            )));
        }
        if f.dim() != grid.dim() || f.grid().len() != grid.len() {
            return Err(ForwardError::InvalidInput("source factor does not match the grid".into()));
        }
        let f_hat = f.spectral_comps();
        let f_phys = f.physical_comps();
        let f_zero = f_hat.iter().flatten().all(|z| *z == ZERO);
        Ok(Self { grid: grid.clone(), params: *params, f_hat, f_phys, f_zero })
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    pub fn params(&self) -> &CbfParams {
        &self.params
    }

    /// Spectral coefficients of `f g`.
    pub(crate) fn forcing_hat(&self, g: &GValue) -> Coeffs {
        if self.f_zero {
            return vec![vec![ZERO; self.grid.len()]; self.grid.dim()];
        }
        match g {
            GValue::Uniform(c) => self.f_hat.iter().map(|v| v.iter().map(|z| z * *c).collect()).collect(),
            GValue::Field(gv) => self
                .f_phys
                .iter()
                .map(|fc| {
                    let prod: Vec<f64> = fc.iter().zip(gv).map(|(a, b)| a * b).collect();
                    self.grid.to_spectral(&prod)
                })
                .collect(),
        }
    }

    /// Convection plus `β C(u)`, dealiased; also returns `sup |u|` over the grid.
    pub(crate) fn nonlinear_hat(&self, u_hat: &[Vec<Complex64>]) -> (Coeffs, f64) {
        let (mut out, phys) = convection_coeffs(&self.grid, u_hat);
        let damp = damping_samples(&phys, self.params.r);
        for (o, dc) in out.iter_mut().zip(&damp) {
            let mut s = self.grid.to_spectral(dc);
            dealias_in_place(&self.grid, &mut s);
            for (a, b) in o.iter_mut().zip(&s) {
                *a += self.params.beta * b;
            }
        }
        let mut linf: f64 = 0.0;
        for p in 0..self.grid.len() {
            let m2: f64 = phys.iter().map(|c| c[p] * c[p]).sum();
            if m2.is_nan() {
                linf = f64::NAN;
                break;
            }
            linf = linf.max(m2.sqrt());
        }
        (out, linf)
    }

    /// Explicit part `P[f g − N(u)]`; also returns `sup |u|`.
    pub(crate) fn explicit_hat(&self, u_hat: &[Vec<Complex64>], g: &GValue) -> (Coeffs, f64) {
        let (nl, linf) = self.nonlinear_hat(u_hat);
        let mut out = self.forcing_hat(g);
        for (o, n) in out.iter_mut().zip(&nl) {
            for (a, b) in o.iter_mut().zip(n) {
                *a -= b;
            }
        }
        project_in_place(&self.grid, &mut out);
        (out, linf)
    }

    pub(crate) fn rhs_hat(&self, u_hat: &[Vec<Complex64>], g: &GValue) -> Coeffs {
        let (mut out, _) = self.explicit_hat(u_hat, g);
        let ksq = self.grid.ksq();
        let (mu, alpha) = (self.params.mu, self.params.alpha);
        for (o, u) in out.iter_mut().zip(u_hat) {
            for p in 0..o.len() {
                o[p] -= (mu * ksq[p] + alpha) * u[p];
            }
        }
        out
    }

    /// `∇p = (I − P)[f g − N(u)]`.
    pub(crate) fn pressure_hat(&self, u_hat: &[Vec<Complex64>], g: &GValue) -> Coeffs {
        let (nl, _) = self.nonlinear_hat(u_hat);
        let mut full = self.forcing_hat(g);
        for (o, n) in full.iter_mut().zip(&nl) {
            for (a, b) in o.iter_mut().zip(n) {
                *a -= b;
            }
        }
        let mut proj = full.clone();
        project_in_place(&self.grid, &mut proj);
        for (o, p) in full.iter_mut().zip(&proj) {
            for (a, b) in o.iter_mut().zip(p) {
                *a -= b;
            }
        }
        full
    }

    /// `u_t` at time `t` for the modulation `g`.
    pub fn rhs_at(&self, u: &VectorField, g: &Modulation, t: f64) -> VectorField {
        VectorField::from_spectral(&self.grid, self.rhs_hat(&u.spectral_comps(), &g.eval(t))).with_solenoidal(true)
    }

    /// `∇p` at time `t` for the modulation `g`.
    pub fn pressure_at(&self, u: &VectorField, g: &Modulation, t: f64) -> VectorField {
        VectorField::from_spectral(&self.grid, self.pressure_hat(&u.spectral_comps(), &g.eval(t)))
    }
}

/// `−μΔu + αu` in spectral form.
pub(crate) fn linear_part(grid: &TorusGrid, params: &CbfParams, u_hat: &[Vec<Complex64>]) -> Coeffs {
    u_hat
        .iter()
        .map(|c| {
            let lap = laplacian_coeffs(grid, c);
            lap.iter().zip(c.iter()).map(|(l, u)| -params.mu * l + params.alpha * u).collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{
        inner, leray_project, make_grid, norm_h1_semi, norm_l2, norm_lp, random_solenoidal,
        spectral_divergence_max,
    };
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(dim: usize, r: f64, length: f64) -> CbfParams {
        CbfParams { mu: 0.7, alpha: 0.4, beta: 1.3, r, dim, length }
    }

    fn taylor_green(grid: &Arc<TorusGrid>) -> VectorField {
        VectorField::from_fn(grid, |x| [x[0].sin() * x[1].cos(), -x[0].cos() * x[1].sin(), 0.0])
    }

    #[test]
    fn damping_examples() {
        let g = make_grid(2, 8, 1.0).unwrap();
        let u = VectorField::from_fn(&g, |_| [2.0, 0.0, 0.0]);
        let c = damping_physical(&u, 3.0).unwrap();
        assert!(c[0].iter().all(|v| (*v - 8.0).abs() < 1e-14));
        let z = damping_physical(&VectorField::zeros(&g), 2.5).unwrap();
        assert!(z.iter().flatten().all(|v| *v == 0.0));
        assert!(damping(&u, 0.5).is_err());
    }

    #[test]
    fn damping_is_identity_at_r1() {
        let g = make_grid(2, 16, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_solenoidal(&g, 4, &mut rng);
        let c = damping(&u, 1.0).unwrap();
        assert!(norm_l2(&c.sub(&u)) < 1e-13);
    }

    #[test]
    fn jacobian_examples() {
        let g = make_grid(2, 8, 1.0).unwrap();
        let u = VectorField::from_fn(&g, |_| [1.0, 0.0, 0.0]);
        let w = VectorField::from_fn(&g, |_| [0.0, 1.0, 0.0]);
        let j = damping_jacobian_apply(&u, &w, 3.0).unwrap().physical_comps();
        assert!(j[0].iter().all(|v| v.abs() < 1e-14));
        assert!(j[1].iter().all(|v| (v - 1.0).abs() < 1e-14));
        // central difference oracle at the same point
        let eps = 1e-6;
        let c = |s: f64| {
            let v = [1.0, s];
            let m2 = v[0] * v[0] + v[1] * v[1];
            [m2 * v[0], m2 * v[1]]
        };
        let fd = [(c(eps)[0] - c(-eps)[0]) / (2.0 * eps), (c(eps)[1] - c(-eps)[1]) / (2.0 * eps)];
        assert!(fd[0].abs() < 1e-8 && (fd[1] - 1.0).abs() < 1e-8);
        let jr1 = damping_jacobian_apply(&u, &w, 1.0).unwrap();
        assert!(norm_l2(&jr1.sub(&w)) < 1e-14);
    }

    #[test]
    fn convection_of_constant_vanishes() {
        let g = make_grid(3, 8, 1.0).unwrap();
        let u = VectorField::from_fn(&g, |_| [1.0, 2.0, -3.0]);
        assert!(norm_l2(&convection(&u)) < 1e-13);
    }

    #[test]
    fn taylor_green_convection_is_gradient() {
        let g = make_grid(2, 32, 2.0 * std::f64::consts::PI).unwrap();
        let u = taylor_green(&g);
        let c = convection(&u);
        // hand expansion: (u·∇)u = (½ sin 2x, ½ sin 2y) = ∇(−¼ cos 2x − ¼ cos 2y)
        let expect = VectorField::from_fn(&g, |x| [0.5 * (2.0 * x[0]).sin(), 0.5 * (2.0 * x[1]).sin(), 0.0]);
        assert!(norm_l2(&c.sub(&expect)) < 1e-12);
        assert!(norm_l2(&leray_project(&c)) < 1e-10);
    }

    #[test]
    fn trivial_pressure_and_rhs() {
        let g = make_grid(2, 16, 1.0).unwrap();
        let p = params(2, 3.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = random_solenoidal(&g, 3, &mut rng);
        let zero = VectorField::zeros(&g);
        let gp = pressure_gradient(&zero, &f, &GValue::Uniform(2.0), &p).unwrap();
        assert!(norm_l2(&gp) < 1e-14);
        let r = rhs(&zero, &f, &GValue::Uniform(1.0), &p).unwrap();
        assert!(norm_l2(&r.sub(&f)) < 1e-13);
        let r0 = rhs(&zero, &zero, &GValue::Uniform(1.0), &p).unwrap();
        assert_eq!(norm_l2(&r0), 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn convection_conserves_energy(seed in any::<u64>(), l in 0.5f64..7.0) {
            let g = make_grid(2, 32, l).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = random_solenoidal(&g, 6, &mut rng);
            let c = convection(&u);
            prop_assert!(inner(&c, &u).abs() <= 1e-11 * norm_l2(&u) * norm_h1_semi(&u));
        }

        #[test]
        fn rhs_energy_balance(seed in any::<u64>(), r in prop::sample::select(vec![1.0, 2.0, 3.0, 4.5])) {
            let g = make_grid(2, 32, 1.0).unwrap();
            let p = params(2, r, 1.0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = random_solenoidal(&g, 5, &mut rng);
            let zero = VectorField::zeros(&g);
            let lhs = inner(&rhs(&u, &zero, &GValue::Uniform(1.0), &p).unwrap(), &u);
            let expect = -p.mu * norm_h1_semi(&u).powi(2) - p.alpha * norm_l2(&u).powi(2)
                - p.beta * norm_lp(&u, r + 1.0).unwrap().powf(r + 1.0);
            // dealiasing of the damping term perturbs the pairing only through
            // modes outside the mask, which u does not carry
            prop_assert!((lhs - expect).abs() <= 1e-9 * expect.abs());
        }

        #[test]
        fn pressure_makes_rhs_divergence_free(seed in any::<u64>()) {
            let g = make_grid(3, 12, 1.0).unwrap();
            let p = params(3, 3.0, 1.0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = random_solenoidal(&g, 3, &mut rng);
            let f = random_solenoidal(&g, 3, &mut rng);
            let gv = GValue::Field((0..g.len()).map(|i| 2.0 + (6.283 * g.coords(i)[0]).cos()).collect());
            let dynm = Dynamics::new(&g, &f, &p).unwrap();
            let u_hat = u.spectral_comps();
            let nl = dynm.nonlinear_hat(&u_hat).0;
            let forcing = dynm.forcing_hat(&gv);
            let gp = dynm.pressure_hat(&u_hat, &gv);
            let lin = linear_part(&g, &p, &u_hat);
            // full momentum right-hand side with the explicit pressure gradient
            let full: Coeffs = (0..3).map(|a| (0..g.len()).map(|k| forcing[a][k] - nl[a][k] - gp[a][k] - lin[a][k]).collect()).collect();
            let v = VectorField::from_spectral(&g, full);
            let scale = norm_l2(&v).max(1.0);
            prop_assert!(spectral_divergence_max(&v) <= 1e-10 * scale);
            let projected = leray_project(&VectorField::from_spectral(&g, gp.clone()));
            prop_assert!(norm_l2(&projected) <= 1e-12 * scale);
        }
    }
}
