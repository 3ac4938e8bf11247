//! Linear semigroup evolution through the Bloch decomposition and
//! nonlinear time stepping of `u_t = L u + N(u)` on the periodized box.

mod bounds;
mod experiments;

pub use bounds::{
    damping_check, dissipative_bound, polynomial_bound, polynomial_bound_scaled, rho_series, DampingReport,
    DissipativeBound, PolynomialBound,
};
pub use experiments::{
    dissipative_experiment, fit_growth_sandwich, instability_experiment, least_squares_slope, DeltaRun,
    DissipativeOutcome, DissipativeSettings, GrowthDiagnostics, InstabilityOutcome, InstabilitySettings,
    InstabilityVerdict, SandwichSettings,
};

use crate::bloch::{bloch_transform, inverse_bloch, BlochField};
use crate::error::{Error, Result};
use crate::grid::{fft_forward, fft_inverse, spectral_norms, Norms, SampledFunction, SpatialGrid};
use crate::linalg::{expm, mat_vec, CMat};
use crate::operator::{assemble_bloch_matrix, ik_pow, Nonlinearity, PeriodicOperator};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Norm above which a run is declared to have overflowed.
pub const OVERFLOW_CAP: f64 = 1e12;

/// Largest Galerkin truncation that fits every harmonic window of `grid`.
pub fn default_truncation(grid: SpatialGrid) -> usize {
    grid.points_per_period() / 2 - 1
}

/// Per-ξ exponentials `exp(dt L_ξ)` of the truncated Bloch matrices.
#[derive(Debug, Clone)]
pub struct BlochPropagator {
    truncation: usize,
    mats: Vec<CMat>,
}

impl BlochPropagator {
    pub fn new(op: &PeriodicOperator, grid: SpatialGrid, truncation: usize, dt: f64) -> Result<Self> {
        if 2 * truncation + 2 > grid.points_per_period() {
            return Err(Error::Domain(format!(
                "truncation {truncation} does not fit {} points per period",
                grid.points_per_period()
            )));
        }
        let mats = grid
            .xi_samples()
            .par_iter()
            .map(|&xi| assemble_bloch_matrix(op, xi, truncation).map(|a| expm(a.matrix.as_ref(), dt)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { truncation, mats })
    }

    /// Applies the propagator in place; harmonics beyond the truncation are
    /// dropped.
    pub fn apply(&self, field: &mut BlochField) -> Result<()> {
        let updated: Vec<Vec<C64>> = self
            .mats
            .par_iter()
            .enumerate()
            .map(|(m, e)| mat_vec(e, &field.truncated_vector(m, self.truncation)))
            .collect();
        for (m, v) in updated.iter().enumerate() {
            field.set_truncated_vector(m, self.truncation, v)?;
        }
        Ok(())
    }
}

/// `e^{Lt} u₀` by exponentiating each truncated Bloch matrix.
pub fn linear_evolve(op: &PeriodicOperator, u0: &SampledFunction, t: f64, truncation: usize) -> Result<SampledFunction> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("evolution time must be >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(u0.clone());
    }
    let prop = BlochPropagator::new(op, u0.grid(), truncation, t)?;
    let mut field = bloch_transform(u0);
    prop.apply(&mut field)?;
    let out = inverse_bloch(&field)?;
    let norm = out.l2_norm();
    if !norm.is_finite() {
        return Err(Error::NonFinite { time: t });
    }
    if norm > OVERFLOW_CAP {
        return Err(Error::GrowthOverflow { norm, time: t });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Fourth-order exponential time differencing in box Fourier space.
    Etdrk4,
    /// Strang splitting: Bloch exponential half steps around an RK4
    /// nonlinear step.
    Splitting,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveSettings {
    pub dt: f64,
    pub sample_interval: f64,
    /// Galerkin truncation per ξ; `None` uses [`default_truncation`].
    pub truncation: Option<usize>,
    /// Halve `dt` until the final state changes by less than `refine_tol`
    /// (splitting integrator only).
    pub refine: bool,
    pub refine_tol: f64,
    pub max_halvings: usize,
    pub keep_states: bool,
    pub overflow_cap: f64,
}

impl Default for EvolveSettings {
    fn default() -> Self {
        Self {
            dt: 0.05,
            sample_interval: 0.5,
            truncation: None,
            refine: false,
            refine_tol: 1e-6,
            max_halvings: 6,
            keep_states: false,
            overflow_cap: OVERFLOW_CAP,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub norms: Vec<Norms>,
    /// Spatial mean of every component at each sample, component-major
    /// per sample.
    pub means: Vec<Vec<C64>>,
    #[serde(skip)]
    pub states: Vec<SampledFunction>,
    #[serde(skip)]
    pub final_state: SampledFunction,
    pub overflow: bool,
    pub dt: f64,
    pub integrator: Integrator,
    /// Relative change of the final state under the last dt halving.
    pub refinement_change: Option<f64>,
}

impl Trajectory {
    pub fn l2(&self) -> Vec<f64> {
        self.norms.iter().map(|n| n.l2).collect()
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().expect("trajectory has samples")
    }

    /// Largest deviation of any component mean from its initial value.
    pub fn mean_drift(&self) -> f64 {
        let first = &self.means[0];
        self.means
            .iter()
            .flat_map(|m| m.iter().zip(first).map(|(a, b)| (a - b).norm()))
            .fold(0.0, f64::max)
    }
}

/// The right-hand side `N(v)` in normalized box Fourier coefficients.
struct SpectralNonlinearity {
    kind: Nonlinearity,
    grid: SpatialGrid,
    components: usize,
    /// Harmonics kept by the Galerkin truncation.
    mask: Vec<bool>,
    /// 2/3-rule filter for quadratic terms.
    dealias: Vec<bool>,
}

impl SpectralNonlinearity {
    fn new(kind: Nonlinearity, grid: SpatialGrid, components: usize, truncation: usize) -> Self {
        let n = grid.len();
        let mask = (0..n)
            .map(|slot| grid.split_slot(slot).1.unsigned_abs() as usize <= truncation)
            .collect();
        let cutoff = n as i64 / 3;
        let dealias = (0..n).map(|slot| grid.signed_index(slot).abs() < cutoff).collect();
        Self {
            kind,
            grid,
            components,
            mask,
            dealias,
        }
    }

    fn apply_mask(&self, v: &mut [C64]) {
        let n = self.grid.len();
        for chunk in v.chunks_mut(n) {
            for (z, &keep) in chunk.iter_mut().zip(&self.mask) {
                if !keep {
                    *z = ZERO;
                }
            }
        }
    }

    fn eval(&self, v: &[C64]) -> Vec<C64> {
        let n = self.grid.len();
        match self.kind {
            Nonlinearity::None => vec![ZERO; v.len()],
            Nonlinearity::Power { exponent, scale } => {
                let l2 = spectral_norms(self.grid, v).l2;
                let f = scale * l2.powf(exponent - 1.0);
                let mut out: Vec<C64> = v.iter().map(|z| z * f).collect();
                self.apply_mask(&mut out);
                out
            }
            Nonlinearity::Advective => {
                // −u u_x = −(u²/2)_x
                let mut u: Vec<C64> = v[..n]
                    .iter()
                    .zip(&self.dealias)
                    .map(|(&z, &keep)| if keep { z } else { ZERO })
                    .collect();
                fft_inverse(n).process(&mut u);
                let mut sq: Vec<C64> = u.iter().map(|z| z * z).collect();
                fft_forward(n).process(&mut sq);
                let scale = 1.0 / n as f64;
                let mut out: Vec<C64> = sq
                    .iter()
                    .enumerate()
                    .map(|(slot, &z)| {
                        if self.dealias[slot] {
                            -0.5 * scale * z * C64::new(0.0, self.grid.wavenumber(slot))
                        } else {
                            ZERO
                        }
                    })
                    .collect();
                out.resize(self.components * n, ZERO);
                self.apply_mask(&mut out);
                out
            }
        }
    }
}

struct Recorder {
    grid: SpatialGrid,
    components: usize,
    keep_states: bool,
    times: Vec<f64>,
    norms: Vec<Norms>,
    means: Vec<Vec<C64>>,
    states: Vec<SampledFunction>,
}

impl Recorder {
    fn record(&mut self, t: f64, v: &[C64]) -> Result<Norms> {
        let norms = spectral_norms(self.grid, v);
        if !norms.l2.is_finite() || !norms.h2.is_finite() {
            return Err(Error::NonFinite { time: t });
        }
        let n = self.grid.len();
        self.times.push(t);
        self.norms.push(norms);
        self.means.push((0..self.components).map(|c| v[c * n]).collect());
        if self.keep_states {
            self.states
                .push(SampledFunction::from_spectrum(self.grid, self.components, v.to_vec())?);
        }
        Ok(norms)
    }
}

fn etdrk4_coefficients(symbol: C64, h: f64) -> [C64; 6] {
    const POINTS: usize = 32;
    let z = symbol * h;
    let (mut q, mut f1, mut f2, mut f3) = (ZERO, ZERO, ZERO, ZERO);
    for k in 0..POINTS {
        let r = z + C64::from_polar(1.0, PI * (2 * k + 1) as f64 / POINTS as f64);
        let er = r.exp();
        let r3 = r * r * r;
        q += ((r * 0.5).exp() - 1.0) / r;
        f1 += (-4.0 - r + er * (4.0 - 3.0 * r + r * r)) / r3;
        f2 += (2.0 + r + er * (r - 2.0)) / r3;
        f3 += (-4.0 - 3.0 * r - r * r + er * (4.0 - r)) / r3;
    }
    let s = h / POINTS as f64;
    [z.exp(), (z * 0.5).exp(), q * s, f1 * s, f2 * s, f3 * s]
}

fn run_once(
    op: &PeriodicOperator,
    nonlin: Nonlinearity,
    u0: &SampledFunction,
    delta: f64,
    t_end: f64,
    dt: f64,
    settings: &EvolveSettings,
    integrator: Integrator,
) -> Result<Trajectory> {
    let grid = u0.grid();
    let n = grid.len();
    let d = u0.components();
    let truncation = settings.truncation.unwrap_or_else(|| default_truncation(grid));
    let steps = ((t_end / dt) - 1e-9).ceil().max(1.0) as usize;
    let h = t_end / steps as f64;
    let stride = ((settings.sample_interval / h).round() as usize).max(1);
    let nl = SpectralNonlinearity::new(nonlin, grid, d, truncation);

    let mut v: Vec<C64> = u0.spectrum().iter().map(|z| z * delta).collect();
    nl.apply_mask(&mut v);
    let mut rec = Recorder {
        grid,
        components: d,
        keep_states: settings.keep_states,
        times: Vec::new(),
        norms: Vec::new(),
        means: Vec::new(),
        states: Vec::new(),
    };
    rec.record(0.0, &v)?;

    let add = |a: &[C64], b: &[C64], s: f64| -> Vec<C64> { a.iter().zip(b).map(|(x, y)| x + y * s).collect() };
    let mut overflow = false;
    match integrator {
        Integrator::Etdrk4 => {
            let coeffs: Vec<[C64; 6]> = (0..n)
                .map(|slot| {
                    let sym: C64 = op
                        .terms()
                        .iter()
                        .map(|t| t.coeff.mode(0) * ik_pow(grid.wavenumber(slot), t.order))
                        .sum();
                    etdrk4_coefficients(sym, h)
                })
                .collect();
            for step in 1..=steps {
                let nv = nl.eval(&v);
                let a: Vec<C64> = (0..n).map(|i| coeffs[i][1] * v[i] + coeffs[i][2] * nv[i]).collect();
                let na = nl.eval(&a);
                let b: Vec<C64> = (0..n).map(|i| coeffs[i][1] * v[i] + coeffs[i][2] * na[i]).collect();
                let nb = nl.eval(&b);
                let c: Vec<C64> = (0..n)
                    .map(|i| coeffs[i][1] * a[i] + coeffs[i][2] * (2.0 * nb[i] - nv[i]))
                    .collect();
                let nc = nl.eval(&c);
                for i in 0..n {
                    let [e, _, _, f1, f2, f3] = coeffs[i];
                    v[i] = e * v[i] + f1 * nv[i] + 2.0 * f2 * (na[i] + nb[i]) + f3 * nc[i];
                }
                let now = spectral_norms(grid, &v).l2;
                if !now.is_finite() {
                    return Err(Error::NonFinite { time: step as f64 * h });
                }
                if now > settings.overflow_cap {
                    rec.record(step as f64 * h, &v)?;
                    overflow = true;
                    break;
                }
                if step % stride == 0 || step == steps {
                    rec.record(step as f64 * h, &v)?;
                }
            }
        }
        Integrator::Splitting => {
            let half = BlochPropagator::new(op, grid, truncation, 0.5 * h)?;
            let linear_half = |v: &mut Vec<C64>| -> Result<()> {
                let mut field = BlochField::from_box_spectrum(grid, d, v);
                half.apply(&mut field)?;
                *v = field.to_box_spectrum();
                Ok(())
            };
            let nonlinear_active = !matches!(nonlin, Nonlinearity::None);
            for step in 1..=steps {
                linear_half(&mut v)?;
                if nonlinear_active {
                    let k1 = nl.eval(&v);
                    let k2 = nl.eval(&add(&v, &k1, 0.5 * h));
                    let k3 = nl.eval(&add(&v, &k2, 0.5 * h));
                    let k4 = nl.eval(&add(&v, &k3, h));
                    for i in 0..v.len() {
                        v[i] += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (h / 6.0);
                    }
                }
                linear_half(&mut v)?;
                let now = spectral_norms(grid, &v).l2;
                if !now.is_finite() {
                    return Err(Error::NonFinite { time: step as f64 * h });
                }
                if now > settings.overflow_cap {
                    rec.record(step as f64 * h, &v)?;
                    overflow = true;
                    break;
                }
                if step % stride == 0 || step == steps {
                    rec.record(step as f64 * h, &v)?;
                }
            }
        }
    }
    Ok(Trajectory {
        final_state: SampledFunction::from_spectrum(grid, d, v)?,
        times: rec.times,
        norms: rec.norms,
        means: rec.means,
        states: rec.states,
        overflow,
        dt: h,
        integrator,
        refinement_change: None,
    })
}

/// Trajectory of `u_δ` with `u_δ(0) = δ u₀` under `u_t = L u + N(u)`.
pub fn nonlinear_evolve(
    op: &PeriodicOperator,
    nonlin: Nonlinearity,
    u0: &SampledFunction,
    delta: f64,
    t_end: f64,
    settings: &EvolveSettings,
) -> Result<Trajectory> {
    if u0.components() != op.components() {
        return Err(Error::Shape("initial data and operator disagree on components".into()));
    }
    nonlin.validate(op.components())?;
    if !(t_end > 0.0) || !(settings.dt > 0.0) || !(settings.sample_interval > 0.0) {
        return Err(Error::Domain("t_end, dt and sample_interval must be positive".into()));
    }
    let integrator = if op.components() == 1 && op.is_constant_coefficient() {
        Integrator::Etdrk4
    } else {
        Integrator::Splitting
    };
    let mut traj = run_once(op, nonlin, u0, delta, t_end, settings.dt, settings, integrator)?;
    if integrator == Integrator::Splitting && settings.refine {
        let mut dt = settings.dt;
        for _ in 0..settings.max_halvings {
            dt *= 0.5;
            let finer = run_once(op, nonlin, u0, delta, t_end, dt, settings, integrator)?;
            let diff = finer.final_state.sub(&traj.final_state)?.l2_norm();
            let change = diff / finer.final_state.l2_norm().max(f64::MIN_POSITIVE);
            traj = finer;
            traj.refinement_change = Some(change);
            if change < settings.refine_tol || traj.overflow {
                break;
            }
        }
    }
    Ok(traj)
}
