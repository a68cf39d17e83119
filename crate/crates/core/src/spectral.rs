//! Periodic grid, discrete Fourier transforms, and Fourier-multiplier
//! operators on the torus [-pi, pi).
//!
//! Conventions:
//! - `coeffs(k) = (1/n) * sum_j values_j * exp(-i k x_j)` with nodes
//!   `x_j = -pi + j * dx`, so a real constant field has `coeffs(0)` equal to
//!   its value and discrete Parseval reads
//!   `dx * sum values^2 = 2*pi * sum |coeffs|^2`.
//! - Odd-symbol operators (Hilbert transform, d/dx, Poisson gradient) zero
//!   the Nyquist mode `k = n/2`, where the sign of the wavenumber is
//!   ambiguous; this keeps their outputs real and the golden files stable.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use once_cell::sync::Lazy;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Uniform periodic grid with `n` nodes `x_j = -pi + j * 2*pi/n`.
///
/// `n` must be a power of two and at least 8.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    n: usize,
}

impl Grid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(n));
        }
        Ok(Self { n })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    /// Node coordinate `x_j`.
    #[inline]
    pub fn node(&self, j: usize) -> f64 {
        -PI + j as f64 * self.dx()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |j| self.node(j))
    }

    /// Signed wavenumber of FFT bin `i`: `k = i` for `i <= n/2`, else `i - n`.
    #[inline]
    pub fn wavenumber(&self, bin: usize) -> i64 {
        if bin <= self.n / 2 {
            bin as i64
        } else {
            bin as i64 - self.n as i64
        }
    }

    /// Largest represented wavenumber (the Nyquist mode `n/2`).
    #[inline]
    pub fn max_wavenumber(&self) -> i64 {
        (self.n / 2) as i64
    }

    /// Two-thirds-rule cutoff: modes with `|k| > n/3` are discarded by
    /// [`Spectrum::dealias`].
    #[inline]
    pub fn dealias_cutoff(&self) -> i64 {
        (self.n / 3) as i64
    }
}

/// Real samples of a field on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: Grid,
    values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::LengthMismatch {
                got: values.len(),
                want: grid.n(),
            });
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("field values"));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.n()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl FnMut(f64) -> f64) -> Self {
        let values = grid.nodes().map(f).collect();
        Self { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Grid mean `(1/n) * sum_j values_j`, the discrete torus average.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.grid.n() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn argmin(&self) -> usize {
        let mut best = 0;
        for (j, v) in self.values.iter().enumerate() {
            if *v < self.values[best] {
                best = j;
            }
        }
        best
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (j, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = j;
            }
        }
        best
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Pointwise map producing a new field on the same grid.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Forward transform to spectral coefficients.
    pub fn forward(&self) -> Spectrum {
        let n = self.grid.n();
        let mut buf: Vec<Complex64> = self
            .values
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        plan(n, true).process(&mut buf);
        let scale = 1.0 / n as f64;
        for (i, c) in buf.iter_mut().enumerate() {
            // Phase factor (-1)^k from x_0 = -pi; (-1)^k == (-1)^bin for even n.
            let sign = if i % 2 == 0 { scale } else { -scale };
            *c *= sign;
        }
        Spectrum {
            grid: self.grid,
            coeffs: buf,
        }
    }

    pub fn hilbert(&self) -> RealField {
        self.forward().hilbert().inverse()
    }

    pub fn frac_laplacian(&self, alpha: f64) -> Result<RealField> {
        Ok(self.forward().frac_laplacian(alpha)?.inverse())
    }

    pub fn derivative(&self) -> RealField {
        self.forward().derivative().inverse()
    }

    /// Gradient `d/dx v` of the chemical field solving
    /// `d^2/dx^2 v = u - <u>` with `<v> = 0`.
    pub fn chemo_gradient(&self) -> RealField {
        self.forward().chemo_gradient().inverse()
    }

    /// Heat-kernel mollification with multiplier `exp(-width k^2)`.
    ///
    /// The k=0 multiplier is exactly 1 so the mean passes through; sample
    /// values in `[-1e-12, 0)` (roundoff negativity of a positive kernel
    /// acting on nonnegative data) are clamped to zero.
    pub fn mollify(&self, width: f64) -> RealField {
        assert!(width >= 0.0, "mollifier width must be nonnegative");
        if width == 0.0 {
            return self.clone();
        }
        let mut out = self.forward().mollify(width).inverse();
        for v in out.values_mut() {
            if *v < 0.0 && *v >= -1e-12 {
                *v = 0.0;
            }
        }
        out
    }
}

/// Complex Fourier coefficients of a field, stored in FFT bin order
/// (`k = 0, 1, ..., n/2, -n/2+1, ..., -1`).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.n()],
        }
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    #[inline]
    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient for signed wavenumber `k` in `{-n/2+1, ..., n/2}`.
    pub fn coeff(&self, k: i64) -> Complex64 {
        let n = self.grid.n() as i64;
        assert!(-n / 2 < k && k <= n / 2, "wavenumber {k} out of range");
        let bin = if k >= 0 { k as usize } else { (k + n) as usize };
        self.coeffs[bin]
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Inverse transform back to real samples (imaginary residue discarded).
    pub fn inverse(&self) -> RealField {
        let n = self.grid.n();
        let mut buf: Vec<Complex64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| if i % 2 == 0 { *c } else { -*c })
            .collect();
        plan(n, false).process(&mut buf);
        RealField {
            grid: self.grid,
            values: buf.iter().map(|c| c.re).collect(),
        }
    }

    /// Apply a diagonal Fourier multiplier `symbol(k)`.
    pub fn apply_multiplier(&self, symbol: impl Fn(i64) -> Complex64) -> Spectrum {
        let mut out = self.clone();
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            *c *= symbol(out.grid.wavenumber(i));
        }
        out
    }

    /// In-place variant of [`Self::apply_multiplier`].
    pub fn scale_by(&mut self, factor: impl Fn(i64) -> f64) {
        for i in 0..self.coeffs.len() {
            let k = self.grid.wavenumber(i);
            self.coeffs[i] *= factor(k);
        }
    }

    /// Periodic Hilbert transform: multiplier `-i sign(k)`, zero at `k = 0`
    /// and at the Nyquist mode.
    pub fn hilbert(&self) -> Spectrum {
        let nyq = self.grid.max_wavenumber();
        self.apply_multiplier(|k| {
            if k == 0 || k == nyq {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, -(k.signum() as f64))
            }
        })
    }

    /// Fractional Laplacian: multiplier `|k|^alpha`, zero mode annihilated.
    pub fn frac_laplacian(&self, alpha: f64) -> Result<Spectrum> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::InvalidAlpha(alpha));
        }
        Ok(self.apply_multiplier(|k| {
            if k == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new((k.abs() as f64).powf(alpha), 0.0)
            }
        }))
    }

    /// Spatial derivative: multiplier `i k`, Nyquist mode zeroed.
    pub fn derivative(&self) -> Spectrum {
        let nyq = self.grid.max_wavenumber();
        self.apply_multiplier(|k| {
            if k == nyq {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, k as f64)
            }
        })
    }

    /// `d/dx` of the zero-mean solution of `d^2/dx^2 v = u - <u>`:
    /// multiplier `-i/k` for `k != 0`, zero at `k = 0` and Nyquist.
    pub fn chemo_gradient(&self) -> Spectrum {
        let nyq = self.grid.max_wavenumber();
        self.apply_multiplier(|k| {
            if k == 0 || k == nyq {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, -1.0 / k as f64)
            }
        })
    }

    /// Heat-kernel multiplier `exp(-width k^2)`.
    pub fn mollify(&self, width: f64) -> Spectrum {
        self.apply_multiplier(|k| Complex64::new((-width * (k * k) as f64).exp(), 0.0))
    }

    /// Zero all coefficients with `|k| > n/3` (two-thirds rule).
    pub fn dealias(&self) -> Spectrum {
        let cut = self.grid.dealias_cutoff();
        self.apply_multiplier(|k| {
            if k.abs() > cut {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(1.0, 0.0)
            }
        })
    }

    /// Energy fraction carried by modes with `|k| > n/3`.
    pub fn tail_fraction(&self) -> f64 {
        let cut = self.grid.dealias_cutoff();
        let mut tail = 0.0;
        let mut total = 0.0;
        for (i, c) in self.coeffs.iter().enumerate() {
            let e = c.norm_sqr();
            total += e;
            if self.grid.wavenumber(i).abs() > cut {
                tail += e;
            }
        }
        if total > 0.0 {
            tail / total
        } else {
            0.0
        }
    }

    /// `2*pi * sum_k |k|^{2s} |coeffs(k)|^2`, the squared homogeneous
    /// Sobolev seminorm.
    pub fn hs_norm_sq(&self, s: f64) -> f64 {
        let mut acc = 0.0;
        for (i, c) in self.coeffs.iter().enumerate() {
            let k = self.grid.wavenumber(i);
            if k != 0 {
                acc += (k.abs() as f64).powf(2.0 * s) * c.norm_sqr();
            }
        }
        2.0 * PI * acc
    }
}

type PlanCache = HashMap<(usize, bool), Arc<dyn Fft<f64>>>;

static PLANS: Lazy<Mutex<PlanCache>> = Lazy::new(|| Mutex::new(HashMap::new()));

fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    let mut plans = PLANS.lock().expect("fft plan cache poisoned");
    plans
        .entry((n, forward))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if forward {
                planner.plan_fft_forward(n)
            } else {
                planner.plan_fft_inverse(n)
            }
        })
        .clone()
}
