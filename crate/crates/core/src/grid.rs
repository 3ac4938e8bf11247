//! The periodized box that stands in for the real line, and functions
//! sampled on it.
//!
//! A box of `periods` copies of `[0, 2π)` with `points_per_period` samples
//! each. Its discrete wavenumbers are `q / periods` for integer `q`, so every
//! box frequency splits exactly into an integer harmonic `j` plus one of the
//! `periods` Floquet exponents `ξ_m = -1/2 + m / periods`.

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn fft_forward(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n))
}

pub(crate) fn fft_inverse(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct SpatialGrid {
    periods: usize,
    points_per_period: usize,
}

impl SpatialGrid {
    pub fn new(periods: usize, points_per_period: usize) -> Result<Self> {
        if periods < 2 || periods % 2 != 0 {
            return Err(Error::Domain(format!(
                "periods must be even and >= 2, got {periods}"
            )));
        }
        if points_per_period < 32 || !points_per_period.is_power_of_two() {
            return Err(Error::Domain(format!(
                "points_per_period must be a power of two >= 32, got {points_per_period}"
            )));
        }
        Ok(Self {
            periods,
            points_per_period,
        })
    }

    pub fn periods(&self) -> usize {
        self.periods
    }

    pub fn points_per_period(&self) -> usize {
        self.points_per_period
    }

    /// Total number of samples on the box.
    pub fn len(&self) -> usize {
        self.periods * self.points_per_period
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.points_per_period as f64
    }

    pub fn box_length(&self) -> f64 {
        2.0 * PI * self.periods as f64
    }

    pub fn x(&self, n: usize) -> f64 {
        n as f64 * self.spacing()
    }

    /// Floquet exponent of slot `m`, in `[-1/2, 1/2)`.
    pub fn xi(&self, m: usize) -> f64 {
        -0.5 + m as f64 / self.periods as f64
    }

    pub fn xi_samples(&self) -> Vec<f64> {
        (0..self.periods).map(|m| self.xi(m)).collect()
    }

    /// Signed numerator `m - periods/2` of the Floquet exponent.
    pub(crate) fn xi_offset(&self, m: usize) -> i64 {
        m as i64 - (self.periods / 2) as i64
    }

    /// Lowest integer harmonic carried by slot `m`; slot `m` carries exactly
    /// `points_per_period` consecutive harmonics starting here.
    pub fn harmonic_lo(&self, m: usize) -> i64 {
        let half = (self.len() / 2) as i64;
        let p = self.periods as i64;
        let off = self.xi_offset(m);
        // ceil((-half - off) / p)
        let num = -half - off;
        num.div_euclid(p) + i64::from(num.rem_euclid(p) != 0)
    }

    /// Signed box frequency index of harmonic `j` in slot `m`.
    pub(crate) fn box_index(&self, m: usize, j: i64) -> i64 {
        j * self.periods as i64 + self.xi_offset(m)
    }

    /// FFT storage slot of signed box frequency `q`.
    pub(crate) fn fft_slot(&self, q: i64) -> usize {
        q.rem_euclid(self.len() as i64) as usize
    }

    pub(crate) fn signed_index(&self, slot: usize) -> i64 {
        let n = self.len();
        if slot < n / 2 {
            slot as i64
        } else {
            slot as i64 - n as i64
        }
    }

    /// Wavenumber of an FFT storage slot.
    pub fn wavenumber(&self, slot: usize) -> f64 {
        self.signed_index(slot) as f64 / self.periods as f64
    }

    /// Splits an FFT storage slot into (Floquet slot m, harmonic j).
    pub(crate) fn split_slot(&self, slot: usize) -> (usize, i64) {
        let q = self.signed_index(slot);
        let p = self.periods as i64;
        let off = (q + p / 2).rem_euclid(p) - p / 2;
        let j = (q - off) / p;
        ((off + p / 2) as usize, j)
    }
}

/// Discrete L², H¹ and H² norms on the box, computed spectrally with
/// Sobolev weights `1 + κ²` and `1 + κ² + κ⁴`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Norms {
    pub l2: f64,
    pub h1: f64,
    pub h2: f64,
}

/// A (possibly vector-valued) function sampled on a [`SpatialGrid`].
/// Values are stored component-major.
#[derive(Debug, Clone)]
pub struct SampledFunction {
    grid: SpatialGrid,
    components: usize,
    values: Vec<C64>,
    norms: OnceLock<Norms>,
}

impl SampledFunction {
    pub fn new(grid: SpatialGrid, components: usize, values: Vec<C64>) -> Result<Self> {
        if components == 0 || values.len() != components * grid.len() {
            return Err(Error::Shape(format!(
                "expected {} x {} samples, got {}",
                components,
                grid.len(),
                values.len()
            )));
        }
        Ok(Self {
            grid,
            components,
            values,
            norms: OnceLock::new(),
        })
    }

    pub fn zeros(grid: SpatialGrid, components: usize) -> Self {
        Self::new(grid, components, vec![C64::new(0.0, 0.0); components * grid.len()])
            .expect("consistent shape")
    }

    /// Samples a scalar function `f(x)` on the grid.
    pub fn from_fn(grid: SpatialGrid, f: impl Fn(f64) -> C64) -> Self {
        let values = (0..grid.len()).map(|n| f(grid.x(n))).collect();
        Self::new(grid, 1, values).expect("consistent shape")
    }

    pub fn grid(&self) -> SpatialGrid {
        self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn component(&self, c: usize) -> &[C64] {
        let n = self.grid.len();
        &self.values[c * n..(c + 1) * n]
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    /// Normalized DFT coefficients `c_q` with `f(x_n) = Σ_q c_q e^{i q x_n / periods}`,
    /// component-major, FFT slot order.
    pub fn spectrum(&self) -> Vec<C64> {
        let n = self.grid.len();
        let fft = fft_forward(n);
        let mut out = self.values.clone();
        let scale = 1.0 / n as f64;
        for chunk in out.chunks_mut(n) {
            fft.process(chunk);
            for z in chunk.iter_mut() {
                *z *= scale;
            }
        }
        out
    }

    /// Inverse of [`spectrum`](Self::spectrum).
    pub fn from_spectrum(grid: SpatialGrid, components: usize, mut spec: Vec<C64>) -> Result<Self> {
        let n = grid.len();
        if spec.len() != components * n {
            return Err(Error::Shape(format!(
                "spectrum has {} entries, expected {}",
                spec.len(),
                components * n
            )));
        }
        let fft = fft_inverse(n);
        for chunk in spec.chunks_mut(n) {
            fft.process(chunk);
        }
        Self::new(grid, components, spec)
    }

    pub fn norms(&self) -> Norms {
        *self.norms.get_or_init(|| spectral_norms(self.grid, &self.spectrum()))
    }

    pub fn l2_norm(&self) -> f64 {
        self.norms().l2
    }

    /// L² norm by the trapezoid rule on the samples (exact for band-limited data).
    pub fn trapezoid_l2(&self) -> f64 {
        (self.grid.spacing() * self.values.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// Spatial mean of component `c`.
    pub fn mean(&self, c: usize) -> C64 {
        let s: C64 = self.component(c).iter().sum();
        s / self.grid.len() as f64
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.values.iter().fold(0.0, |m, z| m.max(z.im.abs()))
    }

    pub fn real_part(&self) -> Self {
        let values = self.values.iter().map(|z| C64::new(z.re, 0.0)).collect();
        Self::new(self.grid, self.components, values).expect("same shape")
    }

    pub fn scaled(&self, a: C64) -> Self {
        let values = self.values.iter().map(|z| z * a).collect();
        Self::new(self.grid, self.components, values).expect("same shape")
    }

    pub fn normalized(&self) -> Self {
        let n = self.l2_norm();
        if n == 0.0 {
            self.clone()
        } else {
            self.scaled(C64::new(1.0 / n, 0.0))
        }
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid || self.components != other.components {
            return Err(Error::Shape("functions live on different grids".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Self::new(self.grid, self.components, values)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Self::new(self.grid, self.components, values)
    }

    /// Largest pointwise difference.
    pub fn max_diff(&self, other: &Self) -> Result<f64> {
        self.check_same(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).norm())))
    }
}

pub(crate) fn spectral_norms(grid: SpatialGrid, spec: &[C64]) -> Norms {
    let n = grid.len();
    let (mut l2, mut h1, mut h2) = (0.0, 0.0, 0.0);
    for chunk in spec.chunks(n) {
        for (slot, z) in chunk.iter().enumerate() {
            let k2 = grid.wavenumber(slot).powi(2);
            let a = z.norm_sqr();
            l2 += a;
            h1 += (1.0 + k2) * a;
            h2 += (1.0 + k2 + k2 * k2) * a;
        }
    }
    let len = grid.box_length();
    Norms {
        l2: (len * l2).sqrt(),
        h1: (len * h1).sqrt(),
        h2: (len * h2).sqrt(),
    }
}
