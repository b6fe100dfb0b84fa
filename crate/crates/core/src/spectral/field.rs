use std::borrow::Cow;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use super::{leray_project, norm_l2, SpectralError, TorusGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Representation {
    Physical,
    Spectral,
}

#[derive(Clone, Debug)]
enum Data {
    Physical(Vec<f64>),
    Spectral(Vec<Complex64>),
}

/// Real scalar field on a torus grid, held either as grid samples or as
/// Fourier-series coefficients. Conversion is lazy through `physical()` and
/// `spectral()`.
#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: Arc<TorusGrid>,
    data: Data,
}

impl ScalarField {
    pub fn zeros(grid: &Arc<TorusGrid>) -> Self {
        Self::from_spectral(grid, vec![Complex64::new(0.0, 0.0); grid.len()])
    }

    pub fn from_physical(grid: &Arc<TorusGrid>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len(), "sample count does not match grid");
        Self { grid: grid.clone(), data: Data::Physical(values) }
    }

    pub fn from_spectral(grid: &Arc<TorusGrid>, coeffs: Vec<Complex64>) -> Self {
        assert_eq!(coeffs.len(), grid.len(), "coefficient count does not match grid");
        Self { grid: grid.clone(), data: Data::Spectral(coeffs) }
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: &Arc<TorusGrid>, f: impl Fn(&[f64; 3]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.coords(i))).collect();
        Self::from_physical(grid, values)
    }

    pub fn constant(grid: &Arc<TorusGrid>, c: f64) -> Self {
        Self::from_physical(grid, vec![c; grid.len()])
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    pub fn representation(&self) -> Representation {
        match self.data {
            Data::Physical(_) => Representation::Physical,
            Data::Spectral(_) => Representation::Spectral,
        }
    }

    pub fn physical(&self) -> Cow<'_, [f64]> {
        match &self.data {
            Data::Physical(v) => Cow::Borrowed(v),
            Data::Spectral(c) => Cow::Owned(self.grid.to_physical(c)),
        }
    }

    pub fn spectral(&self) -> Cow<'_, [Complex64]> {
        match &self.data {
            Data::Physical(v) => Cow::Owned(self.grid.to_spectral(v)),
            Data::Spectral(c) => Cow::Borrowed(c),
        }
    }

    pub fn into_physical(self) -> Vec<f64> {
        match self.data {
            Data::Physical(v) => v,
            Data::Spectral(c) => self.grid.to_physical(&c),
        }
    }

    pub fn into_spectral(self) -> Vec<Complex64> {
        match self.data {
            Data::Physical(v) => self.grid.to_spectral(&v),
            Data::Spectral(c) => c,
        }
    }

    /// Same field, converted to the requested representation.
    pub fn to_representation(self, repr: Representation) -> Self {
        let grid = self.grid.clone();
        match repr {
            Representation::Physical => Self::from_physical(&grid, self.into_physical()),
            Representation::Spectral => Self::from_spectral(&grid, self.into_spectral()),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        match &self.data {
            Data::Physical(v) => Self::from_physical(&self.grid, v.iter().map(|x| x * c).collect()),
            Data::Spectral(s) => Self::from_spectral(&self.grid, s.iter().map(|x| x * c).collect()),
        }
    }

    /// `a * self + b * other`, kept physical only when both operands are physical.
    pub fn lin_comb(&self, a: f64, other: &ScalarField, b: f64) -> Self {
        match (&self.data, &other.data) {
            (Data::Physical(x), Data::Physical(y)) => Self::from_physical(
                &self.grid,
                x.iter().zip(y).map(|(x, y)| a * x + b * y).collect(),
            ),
            _ => {
                let x = self.spectral();
                let y = other.spectral();
                Self::from_spectral(&self.grid, x.iter().zip(y.iter()).map(|(x, y)| x * a + y * b).collect())
            }
        }
    }

    /// Largest modulus of `c_k - conj(c_{-k})` over all modes.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let c = self.spectral();
        let mut worst: f64 = 0.0;
        for flat in 0..c.len() {
            let m = self.grid.mode_of(flat);
            let neg = self.grid.flat_of_mode(&[-m[0], -m[1], -m[2]]);
            worst = worst.max((c[flat] - c[neg].conj()).norm());
        }
        worst
    }
}

/// A `d`-component real vector field. The solenoidal flag is set by the Leray
/// projection and cleared by operations that can break it.
#[derive(Clone, Debug)]
pub struct VectorField {
    grid: Arc<TorusGrid>,
    comps: Vec<ScalarField>,
    solenoidal: bool,
}

impl VectorField {
    pub fn from_components(grid: &Arc<TorusGrid>, comps: Vec<ScalarField>) -> Result<Self, SpectralError> {
        if comps.len() != grid.dim() {
            return Err(SpectralError::ComponentCount { got: comps.len(), dim: grid.dim() });
        }
        if comps.iter().any(|c| **c.grid() != **grid) {
            return Err(SpectralError::GridMismatch);
        }
        Ok(Self { grid: grid.clone(), comps, solenoidal: false })
    }

    pub fn zeros(grid: &Arc<TorusGrid>) -> Self {
        let comps = (0..grid.dim()).map(|_| ScalarField::zeros(grid)).collect();
        Self { grid: grid.clone(), comps, solenoidal: true }
    }

    pub fn from_spectral(grid: &Arc<TorusGrid>, comps: Vec<Vec<Complex64>>) -> Self {
        assert_eq!(comps.len(), grid.dim());
        let comps = comps.into_iter().map(|c| ScalarField::from_spectral(grid, c)).collect();
        Self { grid: grid.clone(), comps, solenoidal: false }
    }

    pub fn from_physical(grid: &Arc<TorusGrid>, comps: Vec<Vec<f64>>) -> Self {
        assert_eq!(comps.len(), grid.dim());
        let comps = comps.into_iter().map(|c| ScalarField::from_physical(grid, c)).collect();
        Self { grid: grid.clone(), comps, solenoidal: false }
    }

    /// Samples `f` at every grid point; only the first `d` entries are used.
    pub fn from_fn(grid: &Arc<TorusGrid>, f: impl Fn(&[f64; 3]) -> [f64; 3]) -> Self {
        let d = grid.dim();
        let mut comps = vec![Vec::with_capacity(grid.len()); d];
        for i in 0..grid.len() {
            let v = f(&grid.coords(i));
            for (a, comp) in comps.iter_mut().enumerate() {
                comp.push(v[a]);
            }
        }
        Self::from_physical(grid, comps)
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.comps
    }

    pub fn component(&self, i: usize) -> &ScalarField {
        &self.comps[i]
    }

    pub fn into_components(self) -> Vec<ScalarField> {
        self.comps
    }

    pub fn is_solenoidal(&self) -> bool {
        self.solenoidal
    }

    /// Overrides the solenoidal flag; callers vouch for the property.
    pub fn with_solenoidal(mut self, flag: bool) -> Self {
        self.solenoidal = flag;
        self
    }

    pub fn spectral_comps(&self) -> Vec<Vec<Complex64>> {
        self.comps.iter().map(|c| c.spectral().into_owned()).collect()
    }

    pub fn physical_comps(&self) -> Vec<Vec<f64>> {
        self.comps.iter().map(|c| c.physical().into_owned()).collect()
    }

    pub fn representation(&self) -> Representation {
        self.comps[0].representation()
    }

    pub fn to_representation(self, repr: Representation) -> Self {
        let solenoidal = self.solenoidal;
        let comps = self.comps.into_iter().map(|c| c.to_representation(repr)).collect();
        Self { grid: self.grid, comps, solenoidal }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let comps = self.comps.iter().map(|x| x.scaled(c)).collect();
        Self { grid: self.grid.clone(), comps, solenoidal: self.solenoidal }
    }

    /// `a * self + b * other`; solenoidal when both operands are.
    pub fn lin_comb(&self, a: f64, other: &VectorField, b: f64) -> Self {
        let comps = self.comps.iter().zip(&other.comps).map(|(x, y)| x.lin_comb(a, y, b)).collect();
        Self { grid: self.grid.clone(), comps, solenoidal: self.solenoidal && other.solenoidal }
    }

    pub fn add(&self, other: &VectorField) -> Self {
        self.lin_comb(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &VectorField) -> Self {
        self.lin_comb(1.0, other, -1.0)
    }
}

/// Random real band-limited scalar field with modes `|m_i| <= kmax`,
/// normalized to unit L2 norm.
pub fn random_scalar<R: Rng + ?Sized>(grid: &Arc<TorusGrid>, kmax: i64, rng: &mut R) -> ScalarField {
    let coeffs = random_coeffs(grid, kmax, rng);
    let values = grid.to_physical(&coeffs);
    let field = ScalarField::from_spectral(grid, grid.to_spectral(&values));
    let nrm = (grid.volume() * field.spectral().iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt();
    if nrm > 0.0 {
        field.scaled(1.0 / nrm)
    } else {
        field
    }
}

/// Random real band-limited solenoidal field with modes `|m_i| <= kmax`,
/// zero mean, normalized to unit L2 norm.
pub fn random_solenoidal<R: Rng + ?Sized>(grid: &Arc<TorusGrid>, kmax: i64, rng: &mut R) -> VectorField {
    let comps: Vec<Vec<Complex64>> = (0..grid.dim())
        .map(|_| {
            let mut c = random_coeffs(grid, kmax, rng);
            c[0] = Complex64::new(0.0, 0.0);
            grid.to_spectral(&grid.to_physical(&c))
        })
        .collect();
    let v = leray_project(&VectorField::from_spectral(grid, comps));
    let nrm = norm_l2(&v);
    if nrm > 0.0 {
        v.scaled(1.0 / nrm)
    } else {
        v
    }
}

fn random_coeffs<R: Rng + ?Sized>(grid: &TorusGrid, kmax: i64, rng: &mut R) -> Vec<Complex64> {
    let mask = grid.dealias_mask();
    (0..grid.len())
        .map(|flat| {
            let m = grid.mode_of(flat);
            let inside = mask[flat] && m.iter().all(|c| c.abs() <= kmax);
            let re = rng.gen::<f64>() * 2.0 - 1.0;
            let im = rng.gen::<f64>() * 2.0 - 1.0;
            if inside {
                let m2 = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) as f64;
                Complex64::new(re, im) / (1.0 + m2)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::make_grid;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_reproduces_samples() {
        let g = make_grid(2, 16, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let vals: Vec<f64> = (0..g.len()).map(|_| rng.gen::<f64>() - 0.5).collect();
        let f = ScalarField::from_physical(&g, vals.clone());
        let back = f.clone().to_representation(Representation::Spectral).into_physical();
        let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in back.iter().zip(&vals) {
            assert!((a - b).abs() <= 1e-12 * scale);
        }
        assert!(f.conjugate_symmetry_defect() < 1e-14);
    }

    #[test]
    fn random_solenoidal_is_normalized_and_flagged() {
        let g = make_grid(3, 8, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let v = random_solenoidal(&g, 2, &mut rng);
        assert!(v.is_solenoidal());
        assert!((norm_l2(&v) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn component_count_checked() {
        let g = make_grid(3, 8, 1.0).unwrap();
        let err = VectorField::from_components(&g, vec![ScalarField::zeros(&g)]);
        assert!(err.is_err());
    }
}
