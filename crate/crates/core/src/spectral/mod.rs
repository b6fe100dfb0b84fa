//! Periodic-torus discretization: transforms, differential operators, Leray
//! projection, dealiasing and discrete norms.

mod field;
mod grid;
mod norms;
pub(crate) mod ops;
mod snapshot;

pub use field::{random_scalar, random_solenoidal, Representation, ScalarField, VectorField};
pub use grid::{make_grid, TorusGrid};
pub use norms::{
    inner, norm_h1_semi, norm_hminus1, norm_l2, norm_laplacian, norm_linf, norm_lp, spectral_divergence_max,
};
pub use ops::{
    complement_project, curl_2d_stream, curl_3d, dealias, dealias_scalar, divergence, gradient, laplacian, laplacian_scalar,
    leray_project,
};
pub use snapshot::{read_snapshot, write_snapshot, Snapshot};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("invalid exponent p = {0}; need p >= 1")]
    InvalidExponent(f64),
    #[error("component count {got} does not match dimension {dim}")]
    ComponentCount { got: usize, dim: usize },
    #[error("snapshot format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
