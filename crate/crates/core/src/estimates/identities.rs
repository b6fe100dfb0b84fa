use crate::forward::{damping_jacobian_apply, damping_physical, ForwardError};
use crate::spectral::ops::{derivative, laplacian_coeffs};
use crate::spectral::{inner, norm_l2, VectorField};

/// Both sides of `⟨−Δu, |u|^{r−1}u⟩ = ∫|∇u|²|u|^{r−1} + ((r−1)/4)∫|u|^{r−3}|∇|u|²|²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DampingIdentity {
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
}

/// Evaluates both sides by grid quadrature, independently of each other.
pub fn verify_damping_identity(u: &VectorField, r: f64) -> Result<DampingIdentity, ForwardError> {
    let grid = u.grid();
    let n = grid.len();
    let dim = u.dim();
    let hat = u.spectral_comps();
    let phys = u.physical_comps();
    let damp = damping_physical(u, r)?;

    let mut lhs = 0.0;
    for (c, dc) in hat.iter().zip(&damp) {
        let lap = grid.to_physical(&laplacian_coeffs(grid, c));
        lhs -= lap.iter().zip(dc).map(|(a, b)| a * b).sum::<f64>();
    }
    lhs *= grid.cell_volume();

    // du[i][j] = ∂_j u_i
    let du: Vec<Vec<Vec<f64>>> =
        hat.iter().map(|c| (0..dim).map(|j| grid.to_physical(&derivative(grid, c, j))).collect()).collect();
    let mut first = 0.0;
    let mut second = 0.0;
    for p in 0..n {
        let m2: f64 = phys.iter().map(|c| c[p] * c[p]).sum();
        let grad_sq: f64 = du.iter().flat_map(|row| row.iter().map(move |d| d[p] * d[p])).sum();
        // ∇|u|² = 2 Σ_i u_i ∇u_i
        let grad_m2_sq: f64 = (0..dim)
            .map(|j| {
                let s: f64 = (0..dim).map(|i| 2.0 * phys[i][p] * du[i][j][p]).sum();
                s * s
            })
            .sum();
        if m2 > 0.0 {
            first += m2.powf(0.5 * (r - 1.0)) * grad_sq;
            second += m2.powf(0.5 * (r - 3.0)) * grad_m2_sq;
        } else if r == 1.0 {
            first += grad_sq;
        }
    }
    let rhs = (first + 0.25 * (r - 1.0) * second) * grid.cell_volume();
    let scale = lhs.abs().max(rhs.abs());
    let rel_err = if scale == 0.0 { 0.0 } else { (lhs - rhs).abs() / scale };
    Ok(DampingIdentity { lhs, rhs, rel_err })
}

/// `β(C(u₁) − C(u₂), u₁ − u₂)` against `(β/2^r)‖u₁ − u₂‖^{r+1}_{L^{r+1}}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Monotonicity {
    pub pairing: f64,
    pub lower_bound: f64,
    pub pass: bool,
}

pub fn verify_monotonicity(u1: &VectorField, u2: &VectorField, r: f64, beta: f64) -> Result<Monotonicity, ForwardError> {
    let grid = u1.grid();
    let (c1, c2) = (damping_physical(u1, r)?, damping_physical(u2, r)?);
    let (p1, p2) = (u1.physical_comps(), u2.physical_comps());
    let mut pairing = 0.0;
    let mut bound = 0.0;
    for p in 0..grid.len() {
        let mut dot = 0.0;
        let mut diff2 = 0.0;
        for a in 0..p1.len() {
            let du = p1[a][p] - p2[a][p];
            dot += (c1[a][p] - c2[a][p]) * du;
            diff2 += du * du;
        }
        pairing += dot;
        bound += diff2.powf(0.5 * (r + 1.0));
    }
    let dv = grid.cell_volume();
    let pairing = beta * pairing * dv;
    let lower_bound = beta / 2f64.powf(r) * bound * dv;
    Ok(Monotonicity { pairing, lower_bound, pass: pairing >= lower_bound - 1e-10 * (1.0 + pairing.abs()) })
}

/// `⟨C′(u)w, w⟩`, which must be nonnegative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CprimePositivity {
    pub value: f64,
    pub pass: bool,
}

pub fn verify_cprime_positivity(u: &VectorField, w: &VectorField, r: f64) -> Result<CprimePositivity, ForwardError> {
    let value = inner(&damping_jacobian_apply(u, w, r)?, w);
    let w2 = norm_l2(w).powi(2);
    Ok(CprimePositivity { value, pass: value >= -1e-12 * w2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{make_grid, norm_h1_semi, norm_lp, random_solenoidal};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_at_r1_is_integration_by_parts() {
        let g = make_grid(2, 32, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_solenoidal(&g, 4, &mut rng);
        let id = verify_damping_identity(&u, 1.0).unwrap();
        let h1 = norm_h1_semi(&u).powi(2);
        assert!((id.lhs - h1).abs() <= 1e-12 * h1);
        assert!(id.rel_err <= 1e-12);
    }

    #[test]
    fn identity_at_zero() {
        let g = make_grid(3, 8, 1.0).unwrap();
        let id = verify_damping_identity(&VectorField::zeros(&g), 3.0).unwrap();
        assert_eq!((id.lhs, id.rhs, id.rel_err), (0.0, 0.0, 0.0));
    }

    #[test]
    fn identity_single_mode_r3() {
        let g = make_grid(2, 32, 1.0).unwrap();
        let tau = std::f64::consts::TAU;
        let u = VectorField::from_fn(&g, |x| [(tau * x[1]).sin(), 0.0, 0.0]);
        let id = verify_damping_identity(&u, 3.0).unwrap();
        // ⟨−Δu, |u|²u⟩ = (2π)² ∫ sin⁴ = (2π)² · 3/8
        let exact = tau * tau * 3.0 / 8.0;
        assert!((id.lhs - exact).abs() <= 1e-10 * exact);
        assert!(id.rel_err <= 1e-8);
    }

    #[test]
    fn monotonicity_hand_point() {
        // u₁ = (1, 0), u₂ = 0 everywhere on the unit torus, r = 3:
        // pairing = β, bound = β/8
        let g = make_grid(2, 8, 1.0).unwrap();
        let u1 = VectorField::from_fn(&g, |_| [1.0, 0.0, 0.0]);
        let m = verify_monotonicity(&u1, &VectorField::zeros(&g), 3.0, 2.0).unwrap();
        assert!((m.pairing - 2.0).abs() < 1e-14);
        assert!((m.lower_bound - 0.25).abs() < 1e-14);
        assert!(m.pass);
        let same = verify_monotonicity(&u1, &u1, 3.0, 2.0).unwrap();
        assert_eq!((same.pairing, same.lower_bound), (0.0, 0.0));
        assert!(same.pass);
    }

    #[test]
    fn cprime_along_u_at_r3() {
        // ⟨C′(u)u, u⟩ = |u|⁴ + 2|u|⁴ = 3∫|u|⁴
        let g = make_grid(2, 16, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = random_solenoidal(&g, 3, &mut rng);
        let c = verify_cprime_positivity(&u, &u, 3.0).unwrap();
        let l4 = norm_lp(&u, 4.0).unwrap().powi(4);
        assert!((c.value - 3.0 * l4).abs() <= 1e-12 * l4);
        let zero = verify_cprime_positivity(&VectorField::zeros(&g), &u, 3.0).unwrap();
        assert_eq!(zero.value, 0.0);
        assert!(zero.pass);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn monotone_and_positive(seed in any::<u64>(), r in prop::sample::select(vec![1.0, 2.0, 3.0, 5.0]), s in 0.1f64..10.0) {
            let g = make_grid(2, 16, 1.0).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u1 = random_solenoidal(&g, 4, &mut rng).scaled(s);
            let u2 = random_solenoidal(&g, 4, &mut rng);
            prop_assert!(verify_monotonicity(&u1, &u2, r, 0.7).unwrap().pass);
            prop_assert!(verify_cprime_positivity(&u1, &u2, r).unwrap().pass);
        }
    }
}
