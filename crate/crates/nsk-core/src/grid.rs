//! Uniform periodic grid with spectrally accurate differentiation,
//! quadrature and dealiasing.
//!
//! Differentiation is Fourier-spectral so that discrete integration by
//! parts is exact (to roundoff) for dealiased fields; the identity
//! residual checks elsewhere in the crate depend on that exactness.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// A uniform grid on the flat torus `[0, length)`.
pub struct Grid {
    n: usize,
    length: f64,
    spacing: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n)
            .field("length", &self.length)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.length == other.length
    }
}

impl Grid {
    /// Build an `n`-point grid over a torus of the given circumference.
    /// `n` must be a power of two with `n >= 8`.
    pub fn new(n: usize, length: f64) -> Result<Arc<Grid>> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::Config(format!(
                "grid point count must be a power of two >= 8, got {n}"
            )));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::Config(format!(
                "torus length must be positive and finite, got {length}"
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Arc::new(Grid {
            n,
            length,
            spacing: length / n as f64,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Node positions `x_j = j * length / n`.
    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| j as f64 * self.spacing).collect()
    }

    /// Signed integer wavenumber for FFT bin `j` (`0..n/2`, then negative).
    fn mode(&self, j: usize) -> i64 {
        if j <= self.n / 2 {
            j as i64
        } else {
            j as i64 - self.n as i64
        }
    }
}

/// Real samples of a function on a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl PeriodicField {
    pub fn constant(grid: &Arc<Grid>, c: f64) -> PeriodicField {
        PeriodicField {
            grid: grid.clone(),
            values: vec![c; grid.n()],
        }
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64) -> f64) -> PeriodicField {
        let values = (0..grid.n())
            .map(|j| f(j as f64 * grid.spacing()))
            .collect();
        PeriodicField {
            grid: grid.clone(),
            values,
        }
    }

    pub fn from_values(grid: &Arc<Grid>, values: Vec<f64>) -> Result<PeriodicField> {
        if values.len() != grid.n() {
            return Err(Error::Config(format!(
                "value count {} does not match grid size {}",
                values.len(),
                grid.n()
            )));
        }
        Ok(PeriodicField {
            grid: grid.clone(),
            values,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn l2(&self) -> f64 {
        self.zip_with(self, |a, b| a * b).integrate().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn ensure_finite(&self, what: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(what.to_string()))
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> PeriodicField {
        PeriodicField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &PeriodicField, f: impl Fn(f64, f64) -> f64) -> PeriodicField {
        assert_eq!(
            self.grid, other.grid,
            "fields combined across different grids"
        );
        PeriodicField {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scale(&self, c: f64) -> PeriodicField {
        self.map(|v| c * v)
    }

    /// Pointwise power, valid for strictly positive fields.
    pub fn powf(&self, p: f64) -> PeriodicField {
        self.map(|v| v.powf(p))
    }

    /// Trapezoid (= rectangle) quadrature over the torus.
    pub fn integrate(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.spacing()
    }

    pub fn mean(&self) -> f64 {
        self.integrate() / self.grid.length()
    }

    fn to_complex(&self) -> Vec<Complex<f64>> {
        self.values.iter().map(|&v| Complex::new(v, 0.0)).collect()
    }

    /// Forward DFT normalized so `f(x_j) = sum_k c_k e^{i 2 pi k x / L}`.
    pub fn spectrum(&self) -> Vec<Complex<f64>> {
        let mut buf = self.to_complex();
        self.grid.fwd.process(&mut buf);
        let scale = 1.0 / self.grid.n() as f64;
        for c in &mut buf {
            *c *= scale;
        }
        buf
    }

    fn from_spectrum(grid: &Arc<Grid>, mut buf: Vec<Complex<f64>>) -> PeriodicField {
        grid.inv.process(&mut buf);
        PeriodicField {
            grid: grid.clone(),
            values: buf.into_iter().map(|c| c.re).collect(),
        }
    }

    /// Spectral derivative of the given order (1..=3). Odd orders zero the
    /// Nyquist mode so the result stays real.
    pub fn deriv(&self, order: usize) -> Result<PeriodicField> {
        if !(1..=3).contains(&order) {
            return Err(Error::UnsupportedOrder(order));
        }
        let n = self.grid.n();
        let base = 2.0 * std::f64::consts::PI / self.grid.length();
        let mut buf = self.spectrum();
        for (j, c) in buf.iter_mut().enumerate() {
            let m = self.grid.mode(j);
            if order % 2 == 1 && j == n / 2 {
                *c = Complex::new(0.0, 0.0);
                continue;
            }
            let ik = Complex::new(0.0, base * m as f64);
            *c *= ik.powu(order as u32);
        }
        let out = Self::from_spectrum(&self.grid, buf);
        out.ensure_finite("spectral derivative")?;
        Ok(out)
    }

    /// Two-thirds rule: zero every mode with `|k| > n/3`.
    pub fn dealias(&self) -> PeriodicField {
        let n = self.grid.n();
        let cutoff = n as f64 / 3.0;
        let mut buf = self.spectrum();
        for (j, c) in buf.iter_mut().enumerate() {
            if (self.grid.mode(j).unsigned_abs() as f64) > cutoff {
                *c = Complex::new(0.0, 0.0);
            }
        }
        Self::from_spectrum(&self.grid, buf)
    }

    /// Fraction of spectral mass carried by the top `frac` of modes.
    /// Used as a resolution guard before evaluating quartic functionals.
    pub fn modal_tail_fraction(&self, frac: f64) -> f64 {
        let spec = self.spectrum();
        let n = self.grid.n();
        let kmax = n / 2;
        let k0 = ((1.0 - frac) * kmax as f64).floor() as i64;
        let mut tail = 0.0;
        let mut total = 0.0;
        for (j, c) in spec.iter().enumerate() {
            let m = self.grid.mode(j).abs();
            if m == 0 {
                continue; // mean carries no resolution information
            }
            let e = c.norm_sqr();
            total += e;
            if m >= k0 {
                tail += e;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            tail / total
        }
    }

    /// `true` when the top 10% of modes carry less than `tol` of the
    /// (mean-free) spectral mass.
    pub fn is_resolved(&self, tol: f64) -> bool {
        self.modal_tail_fraction(0.1) < tol
    }

    /// Resample onto a finer (or coarser) grid by trigonometric interpolation.
    pub fn resample(&self, grid: &Arc<Grid>) -> Result<PeriodicField> {
        if (grid.length() - self.grid.length()).abs() > 1e-15 * self.grid.length() {
            return Err(Error::Config(
                "resample requires grids over the same torus".into(),
            ));
        }
        let n_src = self.grid.n();
        let n_dst = grid.n();
        let spec = self.spectrum();
        let mut out = vec![Complex::new(0.0, 0.0); n_dst];
        let kmax = (n_src.min(n_dst)) / 2;
        for (j, c) in spec.iter().enumerate() {
            let m = self.grid.mode(j);
            if m.unsigned_abs() as usize >= kmax {
                continue; // drop shared Nyquist content
            }
            let dst = if m >= 0 {
                m as usize
            } else {
                (n_dst as i64 + m) as usize
            };
            out[dst] = *c;
        }
        Ok(Self::from_spectrum(grid, out))
    }
}

impl std::ops::Add for &PeriodicField {
    type Output = PeriodicField;
    fn add(self, rhs: &PeriodicField) -> PeriodicField {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl std::ops::Sub for &PeriodicField {
    type Output = PeriodicField;
    fn sub(self, rhs: &PeriodicField) -> PeriodicField {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl std::ops::Mul for &PeriodicField {
    type Output = PeriodicField;
    fn mul(self, rhs: &PeriodicField) -> PeriodicField {
        self.zip_with(rhs, |a, b| a * b)
    }
}

impl std::ops::Div for &PeriodicField {
    type Output = PeriodicField;
    fn div(self, rhs: &PeriodicField) -> PeriodicField {
        self.zip_with(rhs, |a, b| a / b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn grid(n: usize) -> Arc<Grid> {
        Grid::new(n, 1.0).unwrap()
    }

    /// Random band-limited field with modes up to `kmax`.
    fn random_field(g: &Arc<Grid>, kmax: usize, rng: &mut ChaCha8Rng) -> PeriodicField {
        let modes: Vec<(f64, f64, f64)> = (1..=kmax)
            .map(|k| {
                (
                    k as f64,
                    rng.gen_range(-1.0..1.0) / k as f64,
                    rng.gen_range(-1.0..1.0) / k as f64,
                )
            })
            .collect();
        PeriodicField::from_fn(g, |x| {
            modes
                .iter()
                .map(|(k, a, b)| a * (2.0 * PI * k * x).sin() + b * (2.0 * PI * k * x).cos())
                .sum()
        })
    }

    #[test]
    fn make_grid_nodes() {
        let g = grid(8);
        let nodes = g.nodes();
        let expect = [0.0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875];
        for (a, b) in nodes.iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn make_grid_spacing() {
        let g = Grid::new(256, 1.0).unwrap();
        assert!((g.spacing() - 1.0 / 256.0).abs() < 1e-18);
        assert!((g.spacing() * g.n() as f64 - g.length()).abs() <= f64::EPSILON);
    }

    #[test]
    fn make_grid_rejects_bad_input() {
        assert!(matches!(Grid::new(7, 1.0), Err(Error::Config(_))));
        assert!(matches!(Grid::new(4, 1.0), Err(Error::Config(_))));
        assert!(matches!(Grid::new(64, 0.0), Err(Error::Config(_))));
        assert!(matches!(Grid::new(64, -2.0), Err(Error::Config(_))));
    }

    #[test]
    fn deriv_single_mode_is_exact() {
        let g = grid(64);
        let f = PeriodicField::from_fn(&g, |x| (2.0 * PI * x).sin());
        let d = f.deriv(1).unwrap();
        let exact = PeriodicField::from_fn(&g, |x| 2.0 * PI * (2.0 * PI * x).cos());
        let err = (&d - &exact).linf() / exact.linf();
        assert!(err < 1e-12, "relative error {err}");
    }

    #[test]
    fn deriv_of_constant_is_zero() {
        let g = grid(32);
        let f = PeriodicField::constant(&g, 3.7);
        for order in 1..=3 {
            assert!(f.deriv(order).unwrap().linf() < 1e-12);
        }
    }

    #[test]
    fn deriv_two_mode_second_derivative() {
        let g = grid(128);
        let f =
            PeriodicField::from_fn(&g, |x| (2.0 * PI * x).sin() + 0.3 * (6.0 * PI * x).cos());
        let d2 = f.deriv(2).unwrap();
        let exact = PeriodicField::from_fn(&g, |x| {
            -4.0 * PI * PI * (2.0 * PI * x).sin() - 0.3 * 36.0 * PI * PI * (6.0 * PI * x).cos()
        });
        let err = (&d2 - &exact).linf() / exact.linf();
        assert!(err < 1e-10, "relative error {err}");
    }

    #[test]
    fn deriv_rejects_unsupported_order() {
        let g = grid(32);
        let f = PeriodicField::constant(&g, 1.0);
        assert!(matches!(f.deriv(0), Err(Error::UnsupportedOrder(0))));
        assert!(matches!(f.deriv(4), Err(Error::UnsupportedOrder(4))));
    }

    #[test]
    fn integrate_constant_and_mean_zero_mode() {
        let g = grid(64);
        assert!((PeriodicField::constant(&g, 2.5).integrate() - 2.5).abs() < 1e-14);
        let s = PeriodicField::from_fn(&g, |x| (2.0 * PI * x).sin());
        assert!(s.integrate().abs() < 1e-14);
    }

    #[test]
    fn integrate_squared_two_plus_sine() {
        let g = grid(64);
        let f = PeriodicField::from_fn(&g, |x| 2.0 + (2.0 * PI * x).sin());
        let sq = &f * &f;
        assert!((sq.integrate() - 4.5).abs() < 1e-13);
    }

    #[test]
    fn dealias_keeps_low_modes_kills_nyquist() {
        let g = grid(64);
        let f = PeriodicField::from_fn(&g, |x| {
            (2.0 * PI * x).sin() + 0.5 * (2.0 * PI * 9.0 * x).cos()
        });
        let d = f.dealias();
        assert!((&d - &f).linf() < 1e-14, "band-limited field must pass through");

        // single mode at the Nyquist frequency k = n/2 is removed entirely
        let ny = PeriodicField::from_fn(&g, |x| (2.0 * PI * 32.0 * x).cos());
        assert!(ny.dealias().linf() < 1e-14);
    }

    #[test]
    fn dealias_preserves_retained_energy() {
        let g = grid(128);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let noise: Vec<f64> = (0..128).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = PeriodicField::from_values(&g, noise).unwrap();
        let d = f.dealias();
        // Parseval bookkeeping: retained modes unchanged, removed modes zero.
        let fs = f.spectrum();
        let ds = d.spectrum();
        let cutoff = 128.0 / 3.0;
        for j in 0..128 {
            let m = if j <= 64 { j as i64 } else { j as i64 - 128 };
            if (m.abs() as f64) > cutoff {
                assert!(ds[j].norm() < 1e-15);
            } else {
                assert!((ds[j] - fs[j]).norm() < 1e-12 * (1.0 + fs[j].norm()));
            }
        }
    }

    #[test]
    fn deriv_composes() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = grid(256);
        for _ in 0..10 {
            let f = random_field(&g, 20, &mut rng);
            let d11 = f.deriv(1).unwrap().deriv(1).unwrap();
            let d2 = f.deriv(2).unwrap();
            let rel = (&d11 - &d2).linf() / d2.linf().max(1e-300);
            assert!(rel < 1e-10, "deriv-compose residual {rel}");
        }
    }

    #[test]
    fn integral_of_derivative_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = grid(128);
        for _ in 0..20 {
            let f = random_field(&g, 40, &mut rng);
            let scale = f.linf().max(1.0);
            assert!(f.deriv(1).unwrap().integrate().abs() < 1e-12 * scale);
        }
    }

    #[test]
    fn discrete_integration_by_parts() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = grid(256);
        for _ in 0..10 {
            let f = random_field(&g, 30, &mut rng).dealias();
            let gg = random_field(&g, 30, &mut rng).dealias();
            let lhs = (&f * &gg.deriv(1).unwrap()).integrate();
            let rhs = -(&f.deriv(1).unwrap() * &gg).integrate();
            let scale = lhs.abs().max(rhs.abs()).max(1e-12);
            assert!((lhs - rhs).abs() / scale < 1e-10);
        }
    }

    #[test]
    fn parseval() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let g = grid(128);
        for _ in 0..10 {
            let f = random_field(&g, 50, &mut rng);
            let quad = (&f * &f).integrate();
            let modal: f64 =
                f.spectrum().iter().map(|c| c.norm_sqr()).sum::<f64>() * g.length();
            assert!((quad - modal).abs() / quad.abs().max(1e-12) < 1e-12);
        }
    }

    #[test]
    fn resample_is_trig_interpolation() {
        let g = grid(64);
        let g2 = grid(128);
        let f = PeriodicField::from_fn(&g, |x| (2.0 * PI * x).sin() + 0.2 * (6.0 * PI * x).cos());
        let up = f.resample(&g2).unwrap();
        let exact =
            PeriodicField::from_fn(&g2, |x| (2.0 * PI * x).sin() + 0.2 * (6.0 * PI * x).cos());
        assert!((&up - &exact).linf() < 1e-13);
    }
}
