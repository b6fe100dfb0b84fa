use super::ops::divergence_coeffs;
use super::{SpectralError, VectorField};

/// L2 norm with quadrature weight `(L/n)^d`, evaluated by Parseval.
pub fn norm_l2(v: &VectorField) -> f64 {
    let vol = v.grid().volume();
    let s: f64 = v.components().iter().map(|c| c.spectral().iter().map(|z| z.norm_sqr()).sum::<f64>()).sum();
    (vol * s).sqrt()
}

/// `‖∇v‖_{L2}` from the `|k|²`-weighted coefficient sum.
pub fn norm_h1_semi(v: &VectorField) -> f64 {
    weighted(v, |k2| k2)
}

/// `‖Δv‖_{L2}`.
pub fn norm_laplacian(v: &VectorField) -> f64 {
    weighted(v, |k2| k2 * k2)
}

/// Negative-order norm `(L^d Σ_{k≠0} |c_k|²/|k|²)^{1/2}`.
pub fn norm_hminus1(v: &VectorField) -> f64 {
    weighted(v, |k2| if k2 > 0.0 { 1.0 / k2 } else { 0.0 })
}

fn weighted(v: &VectorField, w: impl Fn(f64) -> f64) -> f64 {
    let g = v.grid();
    let ksq = g.ksq();
    let mut s = 0.0;
    for c in v.components() {
        for (z, &k2) in c.spectral().iter().zip(ksq) {
            s += w(k2) * z.norm_sqr();
        }
    }
    (g.volume() * s).sqrt()
}

/// `(Σ |v(x)|^p (L/n)^d)^{1/p}` over grid points, `|·|` Euclidean.
pub fn norm_lp(v: &VectorField, p: f64) -> Result<f64, SpectralError> {
    if !(p >= 1.0) {
        return Err(SpectralError::InvalidExponent(p));
    }
    let phys = v.physical_comps();
    let n = v.grid().len();
    let mut s = 0.0;
    for i in 0..n {
        let m2: f64 = phys.iter().map(|c| c[i] * c[i]).sum();
        s += m2.powf(0.5 * p);
    }
    Ok((s * v.grid().cell_volume()).powf(1.0 / p))
}

/// Largest pointwise Euclidean magnitude.
pub fn norm_linf(v: &VectorField) -> f64 {
    let phys = v.physical_comps();
    (0..v.grid().len())
        .map(|i| phys.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

/// `∫ u·w dx`, by Parseval.
pub fn inner(u: &VectorField, w: &VectorField) -> f64 {
    let vol = u.grid().volume();
    let mut s = 0.0;
    for (a, b) in u.components().iter().zip(w.components()) {
        for (x, y) in a.spectral().iter().zip(b.spectral().iter()) {
            s += (x.conj() * y).re;
        }
    }
    vol * s
}

/// Largest modulus of the spectral divergence.
pub fn spectral_divergence_max(v: &VectorField) -> f64 {
    let div = divergence_coeffs(v.grid(), &v.spectral_comps());
    div.iter().fold(0.0, |m, z| m.max(z.norm()))
}
