//! Periodic Fourier pseudospectral grid.
//!
//! The domain is `[-L, L)` sampled at `n` equispaced nodes `x_j = -L + j dx`,
//! `dx = 2L/n`.  Real fields are plain `Vec<f64>` of length `n`; complex
//! fields are `Vec<Complex<f64>>`.  Differentiation, translation, and
//! antidifferentiation act through the FFT; the Nyquist mode is zeroed for
//! odd-order derivatives so the derivative of a real field stays real and
//! the discrete first-derivative matrix is exactly skew-symmetric (which the
//! symmetric operator assembly downstream relies on).
//!
//! Products of band-limited fields alias; [`Grid::low_pass`] applies the
//! standard two-thirds truncation used by the nonlinear solvers.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Largest exponent passed to `exp` by the weighted norms; anything beyond
/// this overflows f64 (`exp(710) = inf`), so rates that would exceed it on
/// the box are rejected up front.
const EXP_ARG_CAP: f64 = 700.0;

/// A pair of real fields `(first, second)` living on the same grid: the
/// discrete analogue of an element of `H^1 x L^2`.  `first` is the
/// density-type component, `second` the velocity-type component.
#[derive(Clone, Debug, PartialEq)]
pub struct PairField {
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

impl PairField {
    pub fn new(first: Vec<f64>, second: Vec<f64>) -> Result<Self> {
        if first.len() != second.len() {
            return Err(Error::LengthMismatch { expected: first.len(), found: second.len() });
        }
        Ok(Self { first, second })
    }

    pub fn zeros(n: usize) -> Self {
        Self { first: vec![0.0; n], second: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.first.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first.is_empty()
    }

    /// Component-wise swap `S(u1, u2) = (u2, u1)`.
    pub fn swapped(&self) -> Self {
        Self { first: self.second.clone(), second: self.first.clone() }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            first: self.first.iter().map(|a| s * a).collect(),
            second: self.second.iter().map(|a| s * a).collect(),
        }
    }

    pub fn axpy(&mut self, s: f64, other: &Self) {
        for (a, b) in self.first.iter_mut().zip(&other.first) {
            *a += s * b;
        }
        for (a, b) in self.second.iter_mut().zip(&other.second) {
            *a += s * b;
        }
    }
}

/// Periodic uniform grid on `[-L, L)` with cached FFT plans.
#[derive(Clone)]
pub struct Grid {
    half_length: f64,
    n: usize,
    dx: f64,
    nodes: Vec<f64>,
    /// Wavenumbers in FFT layout: `m = j` for `j < n/2`, `m = j - n` otherwise,
    /// i.e. the Nyquist slot carries `-(n/2) k0`.
    wavenumbers: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid")
            .field("half_length", &self.half_length)
            .field("n", &self.n)
            .field("dx", &self.dx)
            .finish()
    }
}

impl Grid {
    /// Build a grid with half-length `half_length` (domain `[-L, L)`) and an
    /// even number `n >= 16` of nodes.
    pub fn new(half_length: f64, n: usize) -> Result<Self> {
        if !half_length.is_finite() || half_length <= 0.0 {
            return Err(Error::BadDomain(half_length));
        }
        if n < 16 || n % 2 != 0 {
            return Err(Error::BadGridSize(n));
        }
        let dx = 2.0 * half_length / n as f64;
        let nodes = (0..n).map(|j| -half_length + j as f64 * dx).collect();
        let k0 = std::f64::consts::PI / half_length;
        let half = n / 2;
        let wavenumbers = (0..n)
            .map(|j| {
                let m = if j < half { j as i64 } else { j as i64 - n as i64 };
                m as f64 * k0
            })
            .collect();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        Ok(Self { half_length, n, dx, nodes, wavenumbers, fwd, inv })
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Grid nodes `x_j`.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Wavenumbers in FFT layout (`k_j = m_j pi / L`).
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Largest harmonic index retained by the two-thirds dealiasing rule.
    pub fn band_limit(&self) -> usize {
        self.n / 3
    }

    /// Fundamental wavenumber `pi / L`.
    pub fn k_fundamental(&self) -> f64 {
        std::f64::consts::PI / self.half_length
    }

    /// Largest resolved wavenumber magnitude (Nyquist), `(n/2) pi / L`.
    pub fn k_max(&self) -> f64 {
        self.n as f64 / 2.0 * self.k_fundamental()
    }

    pub fn check_len(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, found: f.len() });
        }
        Ok(())
    }

    pub fn check_pair(&self, u: &PairField) -> Result<()> {
        self.check_len(&u.first)?;
        self.check_len(&u.second)
    }

    /// Signed displacement from `center` to `x` along the torus, in `[-L, L)`.
    pub fn wrap_displacement(&self, x: f64, center: f64) -> f64 {
        let period = 2.0 * self.half_length;
        let mut d = (x - center) % period;
        if d < -self.half_length {
            d += period;
        } else if d >= self.half_length {
            d -= period;
        }
        d
    }

    /// Sample a scalar function of the signed torus displacement from `center`.
    pub fn sample_centered(&self, center: f64, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&x| f(self.wrap_displacement(x, center))).collect()
    }

    // ---- spectral transforms -------------------------------------------------

    /// Forward FFT of a real field (unnormalised coefficients, FFT layout).
    pub fn to_spectral(&self, f: &[f64]) -> Vec<Complex<f64>> {
        debug_assert_eq!(f.len(), self.n);
        let mut buf: Vec<Complex<f64>> = f.iter().map(|&x| Complex::new(x, 0.0)).collect();
        self.fwd.process(&mut buf);
        buf
    }

    /// Inverse FFT back to a real field (divides by `n`, takes the real part).
    pub fn from_spectral(&self, mut buf: Vec<Complex<f64>>) -> Vec<f64> {
        debug_assert_eq!(buf.len(), self.n);
        self.inv.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        buf.iter().map(|c| c.re * scale).collect()
    }

    /// Forward FFT of a complex field in place (unnormalised).
    pub fn fft_complex(&self, buf: &mut [Complex<f64>]) {
        debug_assert_eq!(buf.len(), self.n);
        self.fwd.process(buf);
    }

    /// Inverse FFT of a complex field in place, normalised by `1/n`.
    pub fn ifft_complex(&self, buf: &mut [Complex<f64>]) {
        debug_assert_eq!(buf.len(), self.n);
        self.inv.process(buf);
        let scale = 1.0 / self.n as f64;
        for c in buf.iter_mut() {
            *c *= scale;
        }
    }

    /// Spectral derivative of order 1..=4.  Odd orders zero the Nyquist mode;
    /// even orders keep it (the multiplier `(ik)^order` is then real).
    pub fn derivative(&self, f: &[f64], order: u32) -> Result<Vec<f64>> {
        if !(1..=4).contains(&order) {
            return Err(Error::Config(format!("derivative order must be 1..=4, got {order}")));
        }
        self.check_len(f)?;
        Ok(self.derivative_unchecked(f, order))
    }

    fn derivative_unchecked(&self, f: &[f64], order: u32) -> Vec<f64> {
        let mut buf = self.to_spectral(f);
        for (j, c) in buf.iter_mut().enumerate() {
            *c *= Complex::new(0.0, self.wavenumbers[j]).powu(order);
        }
        if order % 2 == 1 {
            buf[self.n / 2] = Complex::new(0.0, 0.0);
        }
        self.from_spectral(buf)
    }

    /// First spectral derivative (unchecked length; internal convenience).
    pub fn dx1(&self, f: &[f64]) -> Vec<f64> {
        debug_assert_eq!(f.len(), self.n);
        self.derivative_unchecked(f, 1)
    }

    /// Second spectral derivative (unchecked length; internal convenience).
    pub fn dx2(&self, f: &[f64]) -> Vec<f64> {
        debug_assert_eq!(f.len(), self.n);
        self.derivative_unchecked(f, 2)
    }

    /// First spectral derivative of a complex field.
    pub fn derivative_complex(&self, f: &[Complex<f64>]) -> Vec<Complex<f64>> {
        let mut buf = f.to_vec();
        self.fft_complex(&mut buf);
        for (j, c) in buf.iter_mut().enumerate() {
            *c *= Complex::new(0.0, self.wavenumbers[j]);
        }
        buf[self.n / 2] = Complex::new(0.0, 0.0);
        self.ifft_complex(&mut buf);
        buf
    }

    /// Two-thirds dealiasing: zero every mode with harmonic index above
    /// `band_limit()`.
    pub fn low_pass(&self, f: &[f64]) -> Vec<f64> {
        let mut buf = self.to_spectral(f);
        self.low_pass_spectral(&mut buf);
        self.from_spectral(buf)
    }

    /// Apply the two-thirds truncation to coefficients in FFT layout.
    pub fn low_pass_spectral(&self, buf: &mut [Complex<f64>]) {
        let cut = self.band_limit() as i64;
        let half = self.n / 2;
        for (j, c) in buf.iter_mut().enumerate() {
            let m = if j < half { j as i64 } else { j as i64 - self.n as i64 };
            if m.abs() > cut {
                *c = Complex::new(0.0, 0.0);
            }
        }
    }

    /// Translate a field: returns `g(x) = f(x - shift)` (profile moves by
    /// `+shift`).  Spectrally exact for band-limited fields.
    pub fn translate(&self, f: &[f64], shift: f64) -> Vec<f64> {
        let mut buf = self.to_spectral(f);
        for (j, c) in buf.iter_mut().enumerate() {
            *c *= Complex::from_polar(1.0, -self.wavenumbers[j] * shift);
        }
        self.from_spectral(buf)
    }

    /// Zero-mean antiderivative of the zero-mean part of `f`.  The mean of
    /// `f` is ignored (a linear ramp is not periodic); callers that need it
    /// must add `mean(f) * x` themselves.
    pub fn antiderivative_zero_mean(&self, f: &[f64]) -> Vec<f64> {
        let mut buf = self.to_spectral(f);
        buf[0] = Complex::new(0.0, 0.0);
        for j in 1..self.n {
            if j == self.n / 2 {
                buf[j] = Complex::new(0.0, 0.0);
            } else {
                buf[j] /= Complex::new(0.0, self.wavenumbers[j]);
            }
        }
        self.from_spectral(buf)
    }

    // ---- quadrature and norms -------------------------------------------------

    /// Rectangle-rule quadrature `dx * sum f` (spectrally accurate on the torus).
    pub fn quadrature(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.n);
        self.dx * f.iter().sum::<f64>()
    }

    /// Scalar L2 inner product `dx * sum f g`.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.n);
        debug_assert_eq!(g.len(), self.n);
        self.dx * f.iter().zip(g).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Pair L2 inner product `dx * sum (u1 w1 + u2 w2)`.
    pub fn inner_l2(&self, u: &PairField, w: &PairField) -> Result<f64> {
        self.check_pair(u)?;
        self.check_pair(w)?;
        Ok(self.inner(&u.first, &w.first) + self.inner(&u.second, &w.second))
    }

    pub fn mean(&self, f: &[f64]) -> f64 {
        f.iter().sum::<f64>() / self.n as f64
    }

    pub fn norm_l2(&self, f: &[f64]) -> f64 {
        self.inner(f, f).sqrt()
    }

    /// H1 norm squared: `|f|_L2^2 + |f'|_L2^2`.
    pub fn norm_h1_sq(&self, f: &[f64]) -> f64 {
        let df = self.dx1(f);
        self.inner(f, f) + self.inner(&df, &df)
    }

    /// Energy-space norm: `|u|_X^2 = |u1|_H1^2 + |u2|_L2^2`.
    pub fn norm_x(&self, u: &PairField) -> f64 {
        (self.norm_h1_sq(&u.first) + self.inner(&u.second, &u.second)).sqrt()
    }

    /// [`Grid::norm_x`] with the quadrature restricted to torus distance
    /// `<= halfwidth` from `center` (sharp cutoff on the integrands; the
    /// derivative is still global spectral).
    pub fn norm_x_window(&self, u: &PairField, center: f64, halfwidth: f64) -> f64 {
        let du1 = self.dx1(&u.first);
        let mut acc = 0.0;
        for j in 0..self.n {
            if self.wrap_displacement(self.nodes[j], center).abs() <= halfwidth {
                acc += u.first[j] * u.first[j] + du1[j] * du1[j] + u.second[j] * u.second[j];
            }
        }
        (acc * self.dx).sqrt()
    }

    /// Exponentially weighted squared X-norm
    /// `int ((d u1)^2 + u1^2 + u2^2) exp(2 nu |x - center|)`, with `|.|` the
    /// torus distance.  Errors if the weight would overflow anywhere on the
    /// box, reporting the largest admissible rate.
    pub fn weighted_norm_sq(&self, u: &PairField, nu: f64, center: f64) -> Result<f64> {
        self.check_pair(u)?;
        if nu < 0.0 || !nu.is_finite() {
            return Err(Error::Config(format!("weight rate must be >= 0, got {nu}")));
        }
        let max_arg = 2.0 * nu * self.half_length;
        if max_arg > EXP_ARG_CAP {
            return Err(Error::Config(format!(
                "weight exp(2*{nu}*|x|) overflows on [-L, L); largest admissible rate is {:.6}",
                EXP_ARG_CAP / (2.0 * self.half_length)
            )));
        }
        let du1 = self.dx1(&u.first);
        let mut acc = 0.0;
        for j in 0..self.n {
            let d = self.wrap_displacement(self.nodes[j], center).abs();
            let w = (2.0 * nu * d).exp();
            acc += w * (u.first[j] * u.first[j] + du1[j] * du1[j] + u.second[j] * u.second[j]);
        }
        Ok(acc * self.dx)
    }

    /// Dense first-derivative matrix (row-major, `n x n`), consistent with
    /// [`Grid::dx1`] including the Nyquist convention.  Intended for small
    /// grids (tests, operator assembly cross-checks).
    pub fn derivative_matrix(&self) -> Vec<Vec<f64>> {
        let mut rows = vec![vec![0.0; self.n]; self.n];
        let mut e = vec![0.0; self.n];
        for j in 0..self.n {
            e[j] = 1.0;
            let col = self.dx1(&e);
            e[j] = 0.0;
            for (i, row) in rows.iter_mut().enumerate() {
                row[j] = col[i];
            }
        }
        rows
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid() -> Grid {
        Grid::new(5.0, 64).unwrap()
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Grid::new(-1.0, 64).is_err());
        assert!(Grid::new(0.0, 64).is_err());
        assert!(Grid::new(f64::NAN, 64).is_err());
        assert!(Grid::new(5.0, 63).is_err());
        assert!(Grid::new(5.0, 8).is_err());
    }

    #[test]
    fn nodes_cover_half_open_interval() {
        let g = grid();
        assert_abs_diff_eq!(g.nodes()[0], -5.0, epsilon = 1e-15);
        let last = g.nodes()[g.len() - 1];
        assert_abs_diff_eq!(last, 5.0 - g.dx(), epsilon = 1e-12);
        assert_abs_diff_eq!(g.dx() * g.len() as f64, 10.0, epsilon = 1e-12);
    }

    #[test]
    fn derivative_rejects_unsupported_order() {
        let g = grid();
        let f = vec![0.0; g.len()];
        assert!(g.derivative(&f, 0).is_err());
        assert!(g.derivative(&f, 5).is_err());
        assert!(g.derivative(&f[..10], 1).is_err());
    }

    #[test]
    fn derivative_of_constant_vanishes() {
        let g = grid();
        let f = vec![3.25; g.len()];
        for order in 1..=4 {
            let df = g.derivative(&f, order).unwrap();
            for &y in &df {
                assert!(y.abs() < 1e-13, "order {order}: {y}");
            }
        }
    }

    #[test]
    fn derivative_of_trig_is_exact() {
        let g = grid();
        let k = 3.0 * g.k_fundamental();
        let f: Vec<f64> = g.nodes().iter().map(|&x| (k * x).sin()).collect();
        let df = g.derivative(&f, 1).unwrap();
        for (j, &x) in g.nodes().iter().enumerate() {
            assert_abs_diff_eq!(df[j], k * (k * x).cos(), epsilon = 1e-11);
        }
        let ddf = g.derivative(&f, 2).unwrap();
        for (j, &x) in g.nodes().iter().enumerate() {
            assert_abs_diff_eq!(ddf[j], -k * k * (k * x).sin(), epsilon = 1e-10);
        }
    }

    #[test]
    fn second_derivative_matches_repeated_first_on_band_limited_field() {
        let g = grid();
        // Band-limited: harmonics up to 10 < 64/3.
        let f: Vec<f64> = g
            .nodes()
            .iter()
            .map(|&x| {
                let k0 = g.k_fundamental();
                (2.0 * k0 * x).sin() + 0.3 * (10.0 * k0 * x).cos()
            })
            .collect();
        let d2 = g.dx2(&f);
        let d1d1 = g.dx1(&g.dx1(&f));
        for j in 0..g.len() {
            assert_abs_diff_eq!(d2[j], d1d1[j], epsilon = 1e-9);
        }
    }

    #[test]
    fn derivative_handles_sharp_profile_spectrally() {
        // sech^2 profile well inside a big box: machine-accurate derivative.
        let g = Grid::new(30.0, 512).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|&x| 1.0 / x.cosh().powi(2)).collect();
        let df = g.dx1(&f);
        for (j, &x) in g.nodes().iter().enumerate() {
            let exact = -2.0 * x.tanh() / x.cosh().powi(2);
            assert_abs_diff_eq!(df[j], exact, epsilon = 1e-11);
        }
    }

    #[test]
    fn quadrature_of_sech_squared() {
        // integral of sech^2(b x) over R = 2/b; tails < 1e-20 inside the box.
        let g = Grid::new(40.0, 256).unwrap();
        let b = 0.7;
        let f: Vec<f64> = g.nodes().iter().map(|&x| 1.0 / (b * x).cosh().powi(2)).collect();
        assert_abs_diff_eq!(g.quadrature(&f), 2.0 / b, epsilon = 1e-13);
    }

    #[test]
    fn translation_is_exact_for_band_limited_fields() {
        let g = grid();
        let k = 4.0 * g.k_fundamental();
        let f: Vec<f64> = g.nodes().iter().map(|&x| (k * x).sin()).collect();
        let shift = 0.731;
        let t = g.translate(&f, shift);
        for (j, &x) in g.nodes().iter().enumerate() {
            assert_abs_diff_eq!(t[j], (k * (x - shift)).sin(), epsilon = 1e-12);
        }
    }

    #[test]
    fn antiderivative_inverts_derivative_on_zero_mean_fields() {
        let g = grid();
        let k = 5.0 * g.k_fundamental();
        let f: Vec<f64> = g.nodes().iter().map(|&x| (k * x).cos()).collect();
        let anti = g.antiderivative_zero_mean(&f);
        for (j, &x) in g.nodes().iter().enumerate() {
            assert_abs_diff_eq!(anti[j], (k * x).sin() / k, epsilon = 1e-12);
        }
    }

    #[test]
    fn low_pass_removes_high_harmonics_only() {
        let g = grid(); // n = 64, band limit 21
        let k0 = g.k_fundamental();
        let f: Vec<f64> = g
            .nodes()
            .iter()
            .map(|&x| (3.0 * k0 * x).sin() + (25.0 * k0 * x).cos())
            .collect();
        let lp = g.low_pass(&f);
        for (j, &x) in g.nodes().iter().enumerate() {
            assert_abs_diff_eq!(lp[j], (3.0 * k0 * x).sin(), epsilon = 1e-12);
        }
    }

    #[test]
    fn wrap_displacement_takes_shortest_path() {
        let g = grid(); // L = 5
        assert_abs_diff_eq!(g.wrap_displacement(4.5, -4.5), -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.wrap_displacement(-4.5, 4.5), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.wrap_displacement(1.0, 0.5), 0.5, epsilon = 1e-12);
        // displacement of exactly L maps to -L (half-open convention)
        assert_abs_diff_eq!(g.wrap_displacement(5.0, 0.0), -5.0, epsilon = 1e-12);
    }

    #[test]
    fn pair_inner_and_norms_are_consistent() {
        let g = grid();
        let u = PairField::new(
            g.nodes().iter().map(|&x| (-x * x).exp()).collect(),
            g.nodes().iter().map(|&x| x * (-x * x).exp()).collect(),
        )
        .unwrap();
        let n2 = g.inner_l2(&u, &u).unwrap();
        assert!(n2 > 0.0);
        // Window covering the whole box reproduces the full X-norm.
        let full = g.norm_x(&u);
        let windowed = g.norm_x_window(&u, 0.0, g.half_length() + 1.0);
        assert_abs_diff_eq!(full, windowed, epsilon = 1e-12);
        // Zero-rate weight reproduces the squared X-norm.
        let w = g.weighted_norm_sq(&u, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(w, full * full, epsilon = 1e-12);
    }

    #[test]
    fn weighted_norm_rejects_overflowing_rate() {
        let g = grid();
        let u = PairField::zeros(g.len());
        let err = g.weighted_norm_sq(&u, 1e4, 0.0);
        assert!(err.is_err());
        // Rate just below the admissible threshold works.
        assert!(g.weighted_norm_sq(&u, 69.0, 0.0).is_ok());
    }

    #[test]
    fn derivative_matrix_matches_operator_and_is_skew() {
        let g = Grid::new(3.0, 16).unwrap();
        let d = g.derivative_matrix();
        let f: Vec<f64> = g.nodes().iter().map(|&x| (g.k_fundamental() * x).sin()).collect();
        let df = g.dx1(&f);
        for i in 0..g.len() {
            let row: f64 = (0..g.len()).map(|j| d[i][j] * f[j]).sum();
            assert_abs_diff_eq!(row, df[i], epsilon = 1e-12);
        }
        for i in 0..g.len() {
            for j in 0..g.len() {
                assert_abs_diff_eq!(d[i][j], -d[j][i], epsilon = 1e-12);
            }
        }
    }
}
