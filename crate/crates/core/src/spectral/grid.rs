use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::SpectralError;

/// Uniform collocation grid on the periodic box `[0, L)^d`.
///
/// The grid owns the FFT plans and the flattened wavenumber tables used by
/// every spectral operator. Fields hold an `Arc` to it, so it is built once
/// and shared across threads.
pub struct TorusGrid {
    dim: usize,
    n: usize,
    length: f64,
    /// Integer mode per axis position, FFT ordering: 0, 1, .., n/2-1, -n/2, .., -1.
    modes: Vec<i64>,
    wavenumbers: Vec<f64>,
    axis_mask: Vec<bool>,
    /// Derivative wavenumbers per axis over the flattened index. The Nyquist
    /// row is zeroed so first derivatives map real fields to real fields.
    kd: Vec<Vec<f64>>,
    ksq: Vec<f64>,
    mask: Vec<bool>,
    fft_forward: Arc<dyn Fft<f64>>,
    fft_inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .field("length", &self.length)
            .finish()
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n && self.length == other.length
    }
}

/// Builds a `d`-dimensional grid with `n` points per axis and period `length`.
pub fn make_grid(dim: usize, n: usize, length: f64) -> Result<Arc<TorusGrid>, SpectralError> {
    TorusGrid::new(dim, n, length).map(Arc::new)
}

impl TorusGrid {
    pub fn new(dim: usize, n: usize, length: f64) -> Result<Self, SpectralError> {
        if dim != 2 && dim != 3 {
            return Err(SpectralError::InvalidGrid(format!(
                "dimension must be 2 or 3, got {dim}"
            )));
        }
        if n % 2 != 0 {
            return Err(SpectralError::InvalidGrid(format!(
                "points per axis must be even, got {n}"
            )));
        }
        if n < 8 {
            return Err(SpectralError::InvalidGrid(format!(
                "points per axis must be at least 8, got {n}"
            )));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(SpectralError::InvalidGrid(format!(
                "period length must be positive, got {length}"
            )));
        }

        let scale = 2.0 * PI / length;
        let half = (n / 2) as i64;
        let modes: Vec<i64> = (0..n as i64)
            .map(|j| if j < half { j } else { j - n as i64 })
            .collect();
        let wavenumbers: Vec<f64> = modes.iter().map(|&m| m as f64 * scale).collect();
        // 2/3 rule: keep |m| <= n/3 (strict ">" removal)
        let axis_mask: Vec<bool> = modes.iter().map(|&m| 3 * m.abs() <= n as i64).collect();
        let deriv_axis: Vec<f64> = modes
            .iter()
            .map(|&m| if m == -half { 0.0 } else { m as f64 * scale })
            .collect();

        let total = n.pow(dim as u32);
        let mut kd = vec![vec![0.0; total]; dim];
        let mut ksq = vec![0.0; total];
        let mut mask = vec![true; total];
        for flat in 0..total {
            let idx = unravel(flat, n, dim);
            for axis in 0..dim {
                let k = deriv_axis[idx[axis]];
                kd[axis][flat] = k;
                ksq[flat] += k * k;
                mask[flat] &= axis_mask[idx[axis]];
            }
        }

        let mut planner = FftPlanner::new();
        let fft_forward = planner.plan_fft_forward(n);
        let fft_inverse = planner.plan_fft_inverse(n);

        Ok(Self {
            dim,
            n,
            length,
            modes,
            wavenumbers,
            axis_mask,
            kd,
            ksq,
            mask,
            fft_forward,
            fft_inverse,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Number of grid points, `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight per grid point, `(L/n)^d`.
    pub fn cell_volume(&self) -> f64 {
        (self.length / self.n as f64).powi(self.dim as i32)
    }

    /// Volume of the torus, `L^d`.
    pub fn volume(&self) -> f64 {
        self.length.powi(self.dim as i32)
    }

    /// Per-axis wavenumber table in FFT ordering, scaled by `2π/L`.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Per-axis integer modes in FFT ordering.
    pub fn modes(&self) -> &[i64] {
        &self.modes
    }

    /// Per-axis 2/3-rule mask in FFT ordering.
    pub fn axis_mask(&self) -> &[bool] {
        &self.axis_mask
    }

    /// Flattened dealiasing mask: true where a mode survives.
    pub fn dealias_mask(&self) -> &[bool] {
        &self.mask
    }

    /// Flattened derivative wavenumbers along `axis`.
    pub fn kd(&self, axis: usize) -> &[f64] {
        &self.kd[axis]
    }

    /// Flattened `|k|^2` built from the derivative wavenumbers.
    pub fn ksq(&self) -> &[f64] {
        &self.ksq
    }

    pub fn index(&self, flat: usize) -> [usize; 3] {
        unravel(flat, self.n, self.dim)
    }

    /// Integer mode vector of a flattened spectral index.
    pub fn mode_of(&self, flat: usize) -> [i64; 3] {
        let idx = self.index(flat);
        let mut m = [0i64; 3];
        for axis in 0..self.dim {
            m[axis] = self.modes[idx[axis]];
        }
        m
    }

    /// Flattened index holding integer mode `m` (components taken modulo n).
    pub fn flat_of_mode(&self, m: &[i64]) -> usize {
        let n = self.n as i64;
        let mut flat = 0usize;
        for axis in 0..self.dim {
            let j = m[axis].rem_euclid(n) as usize;
            flat = flat * self.n + j;
        }
        flat
    }

    /// Physical coordinates of a flattened grid index.
    pub fn coords(&self, flat: usize) -> [f64; 3] {
        let idx = self.index(flat);
        let h = self.length / self.n as f64;
        let mut x = [0.0; 3];
        for axis in 0..self.dim {
            x[axis] = idx[axis] as f64 * h;
        }
        x
    }

    /// Forward transform, normalized so the output holds Fourier-series coefficients.
    pub fn forward(&self, buf: &mut [Complex64]) {
        self.transform(buf, &self.fft_forward);
        let norm = 1.0 / self.len() as f64;
        for c in buf.iter_mut() {
            *c *= norm;
        }
    }

    /// Inverse transform (synthesis from Fourier-series coefficients).
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.transform(buf, &self.fft_inverse);
    }

    /// Fourier-series coefficients of real grid samples.
    pub fn to_spectral(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }

    /// Real grid samples synthesized from coefficients (imaginary residue dropped).
    pub fn to_physical(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut buf = coeffs.to_vec();
        self.inverse(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    fn transform(&self, buf: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        let total = buf.len();
        debug_assert_eq!(total, self.len());
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(buf, &mut scratch);
        let mut lines = vec![Complex64::new(0.0, 0.0); total];
        for axis in 0..self.dim - 1 {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            let block = stride * n;
            let outer = total / block;
            for o in 0..outer {
                for inner in 0..stride {
                    let dst = (o * stride + inner) * n;
                    let src = o * block + inner;
                    for j in 0..n {
                        lines[dst + j] = buf[src + j * stride];
                    }
                }
            }
            fft.process_with_scratch(&mut lines, &mut scratch);
            for o in 0..outer {
                for inner in 0..stride {
                    let src = (o * stride + inner) * n;
                    let dst = o * block + inner;
                    for j in 0..n {
                        buf[dst + j * stride] = lines[src + j];
                    }
                }
            }
        }
    }
}

fn unravel(flat: usize, n: usize, dim: usize) -> [usize; 3] {
    let mut idx = [0usize; 3];
    let mut rest = flat;
    for axis in (0..dim).rev() {
        idx[axis] = rest % n;
        rest /= n;
    }
    idx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_scaling_at_two_pi() {
        let g = make_grid(2, 8, 2.0 * PI).unwrap();
        let expected = [0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0];
        for (k, e) in g.wavenumbers().iter().zip(expected) {
            assert!((k - e).abs() < 1e-14);
        }
    }

    #[test]
    fn unit_period_scales_by_two_pi() {
        let g = make_grid(2, 8, 1.0).unwrap();
        let expected = [0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0];
        for (k, e) in g.wavenumbers().iter().zip(expected) {
            assert!((k - 2.0 * PI * e).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(make_grid(3, 7, 1.0).is_err());
        assert!(make_grid(2, 6, 1.0).is_err());
        assert!(make_grid(2, 8, 0.0).is_err());
        assert!(make_grid(2, 8, -1.0).is_err());
        assert!(make_grid(4, 8, 1.0).is_err());
    }

    #[test]
    fn zero_mode_once_and_mask_symmetric() {
        let g = make_grid(3, 12, 1.0).unwrap();
        assert_eq!(g.modes().iter().filter(|&&m| m == 0).count(), 1);
        for flat in 0..g.len() {
            let m = g.mode_of(flat);
            let neg = g.flat_of_mode(&[-m[0], -m[1], -m[2]]);
            assert_eq!(g.dealias_mask()[flat], g.dealias_mask()[neg]);
        }
        // n = 12: keep |m| <= 4
        let kept: Vec<i64> = g
            .modes()
            .iter()
            .zip(g.axis_mask())
            .filter(|(_, &k)| k)
            .map(|(&m, _)| m)
            .collect();
        assert_eq!(kept.iter().map(|m| m.abs()).max(), Some(4));
    }

    #[test]
    fn transform_round_trip() {
        let g = make_grid(3, 8, 1.0).unwrap();
        let orig: Vec<Complex64> = (0..g.len())
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), 0.0))
            .collect();
        let mut buf = orig.clone();
        g.forward(&mut buf);
        g.inverse(&mut buf);
        for (a, b) in buf.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-13);
        }
    }
}
