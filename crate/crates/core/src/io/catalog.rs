//! Named analytic and random solenoidal fields.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::spectral::{curl_2d_stream, curl_3d, leray_project, random_solenoidal, ScalarField, TorusGrid, VectorField};

pub const CATALOG: &[&str] = &["zero", "tg1", "mix", "abc", "random"];

pub fn is_catalog_name(s: &str) -> bool {
    CATALOG.contains(&s)
}

/// Builds a catalog field. Coordinates are rescaled so that every field has
/// unit base wavenumber on a torus of any side length.
pub fn catalog_field(name: &str, grid: &Arc<TorusGrid>, seed: u64) -> Result<VectorField, String> {
    let k0 = std::f64::consts::TAU / grid.length();
    let d = grid.dim();
    let v = match (name, d) {
        ("zero", _) => VectorField::zeros(grid),
        ("tg1", 2) => VectorField::from_fn(grid, |x| {
            let (a, b) = (k0 * x[0], k0 * x[1]);
            [a.sin() * b.cos(), -a.cos() * b.sin(), 0.0]
        }),
        ("tg1", _) => VectorField::from_fn(grid, |x| {
            let (a, b, c) = (k0 * x[0], k0 * x[1], k0 * x[2]);
            [a.sin() * b.cos() * c.cos(), -a.cos() * b.sin() * c.cos(), 0.0]
        }),
        ("mix", 2) => {
            let psi = ScalarField::from_fn(grid, |x| {
                let (a, b) = (k0 * x[0], k0 * x[1]);
                a.sin() * (2.0 * b).sin() + 0.5 * (2.0 * a + b).cos()
            });
            curl_2d_stream(&psi)
        }
        ("mix", _) => {
            let a = VectorField::from_fn(grid, |x| {
                let (a, b, c) = (k0 * x[0], k0 * x[1], k0 * x[2]);
                [(2.0 * b + c).sin(), 0.5 * (a + c).cos(), (a + 2.0 * b).sin()]
            });
            curl_3d(&a)
        }
        ("abc", 3) => VectorField::from_fn(grid, |x| {
            let (a, b, c) = (k0 * x[0], k0 * x[1], k0 * x[2]);
            [c.sin() + b.cos(), a.sin() + c.cos(), b.sin() + a.cos()]
        }),
        ("abc", _) => return Err("catalog field `abc` is three-dimensional".into()),
        ("random", _) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            random_solenoidal(grid, 3, &mut rng)
        }
        (other, _) => return Err(format!("unknown catalog field `{other}`")),
    };
    Ok(leray_project(&v))
}
