use num_complex::Complex64;

use super::{ScalarField, TorusGrid, VectorField};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Removes the gradient part of each mode: `c ← c − k (k·c)/|k|²`. The mean
/// mode passes through.
pub(crate) fn project_in_place(grid: &TorusGrid, comps: &mut [Vec<Complex64>]) {
    let d = grid.dim();
    let ksq = grid.ksq();
    for flat in 0..grid.len() {
        if ksq[flat] == 0.0 {
            continue;
        }
        let mut kdotc = Complex64::new(0.0, 0.0);
        for (a, comp) in comps.iter().enumerate().take(d) {
            kdotc += comp[flat] * grid.kd(a)[flat];
        }
        let s = kdotc / ksq[flat];
        for (a, comp) in comps.iter_mut().enumerate().take(d) {
            comp[flat] -= s * grid.kd(a)[flat];
        }
    }
}

pub(crate) fn dealias_in_place(grid: &TorusGrid, coeffs: &mut [Complex64]) {
    for (c, &keep) in coeffs.iter_mut().zip(grid.dealias_mask()) {
        if !keep {
            *c = Complex64::new(0.0, 0.0);
        }
    }
}

/// Spectral derivative along `axis`.
pub(crate) fn derivative(grid: &TorusGrid, coeffs: &[Complex64], axis: usize) -> Vec<Complex64> {
    coeffs.iter().zip(grid.kd(axis)).map(|(c, &k)| I * k * c).collect()
}

pub(crate) fn laplacian_coeffs(grid: &TorusGrid, coeffs: &[Complex64]) -> Vec<Complex64> {
    coeffs.iter().zip(grid.ksq()).map(|(c, &k2)| -k2 * c).collect()
}

pub(crate) fn divergence_coeffs(grid: &TorusGrid, comps: &[Vec<Complex64>]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (a, comp) in comps.iter().enumerate() {
        for ((o, c), &k) in out.iter_mut().zip(comp).zip(grid.kd(a)) {
            *o += I * k * c;
        }
    }
    out
}

/// Leray (Helmholtz–Hodge) projection onto divergence-free fields.
pub fn leray_project(v: &VectorField) -> VectorField {
    let grid = v.grid().clone();
    let mut comps = v.spectral_comps();
    project_in_place(&grid, &mut comps);
    VectorField::from_spectral(&grid, comps).with_solenoidal(true)
}

/// Gradient part `(I − P) v`.
pub fn complement_project(v: &VectorField) -> VectorField {
    let grid = v.grid().clone();
    let orig = v.spectral_comps();
    let mut proj = orig.clone();
    project_in_place(&grid, &mut proj);
    let comps = orig
        .into_iter()
        .zip(proj)
        .map(|(o, p)| o.iter().zip(&p).map(|(a, b)| a - b).collect())
        .collect();
    VectorField::from_spectral(&grid, comps)
}

pub fn gradient(s: &ScalarField) -> VectorField {
    let grid = s.grid().clone();
    let c = s.spectral();
    let comps = (0..grid.dim()).map(|a| derivative(&grid, &c, a)).collect();
    VectorField::from_spectral(&grid, comps)
}

pub fn divergence(v: &VectorField) -> ScalarField {
    let grid = v.grid().clone();
    let comps = v.spectral_comps();
    ScalarField::from_spectral(&grid, divergence_coeffs(&grid, &comps))
}

pub fn laplacian_scalar(s: &ScalarField) -> ScalarField {
    let grid = s.grid().clone();
    ScalarField::from_spectral(&grid, laplacian_coeffs(&grid, &s.spectral()))
}

/// Component-wise Laplacian; preserves the solenoidal flag.
pub fn laplacian(v: &VectorField) -> VectorField {
    let grid = v.grid().clone();
    let comps = v.spectral_comps().iter().map(|c| laplacian_coeffs(&grid, c)).collect();
    VectorField::from_spectral(&grid, comps).with_solenoidal(v.is_solenoidal())
}

pub fn dealias_scalar(s: &ScalarField) -> ScalarField {
    let grid = s.grid().clone();
    let mut c = s.spectral().into_owned();
    dealias_in_place(&grid, &mut c);
    ScalarField::from_spectral(&grid, c)
}

/// Applies the 2/3-rule mask component-wise; preserves the solenoidal flag.
pub fn dealias(v: &VectorField) -> VectorField {
    let grid = v.grid().clone();
    let mut comps = v.spectral_comps();
    for c in comps.iter_mut() {
        dealias_in_place(&grid, c);
    }
    VectorField::from_spectral(&grid, comps).with_solenoidal(v.is_solenoidal())
}

/// 2D velocity `(∂ψ/∂y, −∂ψ/∂x)` of a stream function.
pub fn curl_2d_stream(psi: &ScalarField) -> VectorField {
    let grid = psi.grid().clone();
    assert_eq!(grid.dim(), 2, "stream-function curl is two-dimensional");
    let c = psi.spectral();
    let dy = derivative(&grid, &c, 1);
    let dx: Vec<Complex64> = derivative(&grid, &c, 0).into_iter().map(|z| -z).collect();
    VectorField::from_spectral(&grid, vec![dy, dx]).with_solenoidal(true)
}

/// Curl of a 3D vector potential.
pub fn curl_3d(a: &VectorField) -> VectorField {
    let grid = a.grid().clone();
    assert_eq!(grid.dim(), 3, "vector-potential curl is three-dimensional");
    let c = a.spectral_comps();
    let d = |comp: usize, axis: usize| derivative(&grid, &c[comp], axis);
    let sub = |x: Vec<Complex64>, y: Vec<Complex64>| -> Vec<Complex64> { x.iter().zip(&y).map(|(a, b)| a - b).collect() };
    let comps = vec![sub(d(2, 1), d(1, 2)), sub(d(0, 2), d(2, 0)), sub(d(1, 0), d(0, 1))];
    VectorField::from_spectral(&grid, comps).with_solenoidal(true)
}
