//! Linear growth fits and the two nonlinear experiments: the instability
//! run over a family of δ and the damping run for dissipative systems.

use super::bounds::{
    damping_check, dissipative_bound, polynomial_bound_scaled, rho_series, DampingReport, DissipativeBound,
    PolynomialBound,
};
use super::{default_truncation, linear_evolve, nonlinear_evolve, BlochPropagator, EvolveSettings, Trajectory, OVERFLOW_CAP};
use crate::bloch::bloch_transform;
use crate::error::{Error, Result};
use crate::grid::SampledFunction;
use crate::operator::{Nonlinearity, PeriodicOperator};
use crate::projections::{project_p, ProjectionReport};
use crate::spectra::SpectrumSampling;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Least-squares slope of `y` against `t`.
pub fn least_squares_slope(t: &[f64], y: &[f64]) -> f64 {
    let n = t.len().min(y.len()) as f64;
    let tm = t.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let (mut num, mut den) = (0.0, 0.0);
    for (a, b) in t.iter().zip(y) {
        num += (a - tm) * (b - ym);
        den += (a - tm) * (a - tm);
    }
    num / den
}

/// L² norms of `e^{Lt}u` for each input at `t = k dt`, `k = 0..=steps`,
/// stopping early once the first input exceeds `cap`.
fn linear_norm_series(
    op: &PeriodicOperator,
    inputs: &[&SampledFunction],
    truncation: usize,
    dt: f64,
    steps: usize,
    cap: f64,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let grid = inputs[0].grid();
    let prop = BlochPropagator::new(op, grid, truncation, dt)?;
    let mut fields: Vec<_> = inputs.iter().map(|u| bloch_transform(u)).collect();
    // restrict to the Galerkin space the propagator acts on
    for f in fields.iter_mut() {
        for m in 0..grid.periods() {
            let v = f.truncated_vector(m, truncation);
            f.set_truncated_vector(m, truncation, &v)?;
        }
    }
    let mut times = vec![0.0];
    let mut norms: Vec<Vec<f64>> = fields.iter().map(|f| vec![f.weighted_energy().sqrt()]).collect();
    for k in 1..=steps {
        for f in fields.iter_mut() {
            prop.apply(f)?;
        }
        let t = k as f64 * dt;
        let current: Vec<f64> = fields.iter().map(|f| f.weighted_energy().sqrt()).collect();
        if current.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { time: t });
        }
        if current[0] > cap {
            break;
        }
        times.push(t);
        for (series, x) in norms.iter_mut().zip(current) {
            series.push(x);
        }
    }
    Ok((times, norms))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichSettings {
    pub horizon: f64,
    pub samples: usize,
    pub tolerance: f64,
    pub overflow_cap: f64,
}

impl Default for SandwichSettings {
    fn default() -> Self {
        Self {
            horizon: 40.0,
            samples: 200,
            tolerance: 0.01,
            overflow_cap: OVERFLOW_CAP,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthDiagnostics {
    pub omega: f64,
    pub lambda_m: f64,
    pub lambda0: f64,
    pub tolerance: f64,
    pub times: Vec<f64>,
    /// `‖e^{Lt}u₀‖`.
    pub norms: Vec<f64>,
    /// `‖P e^{Lt}u₀‖`.
    pub projected_norms: Vec<f64>,
    pub window: [f64; 2],
    /// Fitted rate of the projected part.
    pub rate_lower: f64,
    /// Fitted rate of the full solution.
    pub rate_upper: f64,
    /// `min_t ‖P e^{Lt}u₀‖ e^{−ωt}`.
    pub c_lower: f64,
    /// `max_t ‖e^{Lt}u₀‖ e^{−λ_M t}`.
    pub c_upper: f64,
    pub rho: Vec<f64>,
    pub lower_holds: bool,
    pub upper_holds: bool,
    pub truncated_by_overflow: bool,
}

impl GrowthDiagnostics {
    pub fn holds(&self) -> bool {
        self.lower_holds && self.upper_holds
    }
}

/// Evolves `u₀` and `Pu₀` linearly and fits both growth rates.
pub fn fit_growth_sandwich(
    op: &PeriodicOperator,
    u0: &SampledFunction,
    s: &SpectrumSampling,
    report: &ProjectionReport,
    omega: f64,
    settings: &SandwichSettings,
) -> Result<GrowthDiagnostics> {
    if omega >= report.lambda_m {
        return Err(Error::Domain(format!(
            "omega = {omega} must lie below lambda_M = {}",
            report.lambda_m
        )));
    }
    if !(settings.horizon > 0.0) || settings.samples < 10 {
        return Err(Error::Diagnostics(format!(
            "growth fit needs a positive horizon and at least 10 samples, got {}",
            settings.samples
        )));
    }
    let pu0 = project_p(u0, s, report)?;
    let dt = settings.horizon / settings.samples as f64;
    let (times, mut series) = linear_norm_series(op, &[u0, &pu0], s.truncation, dt, settings.samples, settings.overflow_cap)?;
    if times.len() < 10 {
        return Err(Error::Diagnostics(format!(
            "only {} samples before overflow; shorten the horizon",
            times.len()
        )));
    }
    let projected_norms = series.pop().expect("two series");
    let norms = series.pop().expect("two series");
    let log = |v: &[f64]| v.iter().map(|x| x.ln()).collect::<Vec<_>>();
    let rate_lower = least_squares_slope(&times, &log(&projected_norms));
    let rate_upper = least_squares_slope(&times, &log(&norms));
    let lambda_m = report.lambda_m;
    let c_lower = times
        .iter()
        .zip(&projected_norms)
        .map(|(t, n)| n * (-omega * t).exp())
        .fold(f64::INFINITY, f64::min);
    let mut best = f64::NEG_INFINITY;
    let rho: Vec<f64> = times
        .iter()
        .zip(&norms)
        .map(|(t, n)| {
            best = best.max(n * (-lambda_m * t).exp());
            best
        })
        .collect();
    let c_upper = *rho.last().expect("nonempty");
    let window = [times[0], *times.last().expect("nonempty")];
    Ok(GrowthDiagnostics {
        omega,
        lambda_m,
        lambda0: report.lambda0,
        tolerance: settings.tolerance,
        truncated_by_overflow: times.len() < settings.samples + 1,
        lower_holds: omega - settings.tolerance <= rate_lower,
        upper_holds: rate_upper <= lambda_m + settings.tolerance,
        times,
        norms,
        projected_norms,
        window,
        rate_lower,
        rate_upper,
        c_lower,
        c_upper,
        rho,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstabilitySettings {
    pub eta: f64,
    pub deltas: Vec<f64>,
    /// Overrides the sampled `λ₀` (e.g. with a value from a finer ξ grid).
    pub lambda0: Option<f64>,
    /// Step of the linear flow used to measure the linear constants.
    pub linear_dt: f64,
    /// Relative slack allowed in `max ρ ≤ δ · root`.
    pub rho_slack: f64,
    pub evolve: EvolveSettings,
}

impl Default for InstabilitySettings {
    fn default() -> Self {
        Self {
            eta: 0.02,
            deltas: vec![1e-2, 1e-3, 1e-4],
            lambda0: None,
            linear_dt: 0.1,
            rho_slack: 0.05,
            evolve: EvolveSettings::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DeltaRun {
    pub delta: f64,
    /// `T = ln(2η/δ)/λ_M`.
    pub time: f64,
    pub norm_at_time: f64,
    /// `δ ‖e^{LT}u₀‖`.
    pub linear_norm_at_time: f64,
    /// `‖u_δ(T) − δ e^{LT}u₀‖`.
    pub remainder: f64,
    pub rho_max: f64,
    /// `δ` times the polynomial-bound root, when one exists.
    pub rho_bound: Option<f64>,
    pub rho_holds: bool,
    pub overflow: bool,
    pub pass: bool,
    #[serde(skip)]
    pub trajectory: Trajectory,
}

#[derive(Debug, Clone, Serialize)]
pub struct InstabilityVerdict {
    pub eta: f64,
    pub p: f64,
    pub lambda_m: f64,
    pub lambda0: f64,
    /// `2 min_t ‖e^{Lt}u₀‖ e^{−λ_M t}`: the linear part at `T` is at least
    /// this times `η`.
    pub c_lower: f64,
    /// `max_t ‖e^{Lt}u₀‖ e^{−λ_M t}`, the constant fed to the polynomial bound.
    pub c_linear: f64,
    /// `max_δ ‖u_δ(T) − δ e^{LT}u₀‖ / η^p`.
    pub c_upper: f64,
    pub epsilon: f64,
    pub bound: PolynomialBound,
    pub runs: Vec<DeltaRun>,
    /// Largest over smallest `‖u_δ(T)‖`.
    pub spread: f64,
    pub unstable: bool,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum InstabilityOutcome {
    Verdict(InstabilityVerdict),
    HypothesesUnmet { lambda_m: f64, lambda0: f64, p: f64 },
}

fn nonlinear_scale(nonlin: Nonlinearity) -> f64 {
    match nonlin {
        Nonlinearity::Power { scale, .. } => scale.abs(),
        _ => 1.0,
    }
}

/// Runs `u_δ` to `T(δ)` for every δ and compares against `ε`.
pub fn instability_experiment(
    op: &PeriodicOperator,
    nonlin: Nonlinearity,
    u0: &SampledFunction,
    report: &ProjectionReport,
    settings: &InstabilitySettings,
) -> Result<InstabilityOutcome> {
    let p = nonlin
        .degree()
        .ok_or_else(|| Error::Config("instability experiment needs a nonlinearity".into()))?;
    let lambda_m = report.lambda_m;
    let lambda0 = settings.lambda0.unwrap_or(report.lambda0);
    if !(lambda_m > lambda0 / p) {
        return Ok(InstabilityOutcome::HypothesesUnmet { lambda_m, lambda0, p });
    }
    let eta = settings.eta;
    if settings.deltas.is_empty() || settings.deltas.iter().any(|&d| !(d > 0.0 && d < 2.0 * eta)) {
        return Err(Error::Config(format!("every delta must lie in (0, 2 eta) = (0, {})", 2.0 * eta)));
    }
    let truncation = settings.evolve.truncation.unwrap_or_else(|| default_truncation(u0.grid()));
    let times: Vec<f64> = settings.deltas.iter().map(|d| (2.0 * eta / d).ln() / lambda_m).collect();
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    let steps = (t_max / settings.linear_dt).ceil().max(1.0) as usize;
    let (lin_t, lin_n) = linear_norm_series(op, &[u0], truncation, t_max / steps as f64, steps, f64::INFINITY)?;
    let weighted = lin_t.iter().zip(&lin_n[0]).map(|(t, n)| n * (-lambda_m * t).exp());
    let (lo, hi) = weighted.fold((f64::INFINITY, 0.0f64), |(a, b), x| (a.min(x), b.max(x)));
    let c_lower = 2.0 * lo;
    let c_linear = hi;
    let bound = polynomial_bound_scaled(p, eta, lambda_m, lambda0, c_linear, nonlinear_scale(nonlin))?;

    let runs = settings
        .deltas
        .par_iter()
        .zip(times.par_iter())
        .map(|(&delta, &time)| -> Result<DeltaRun> {
            let trajectory = nonlinear_evolve(op, nonlin, u0, delta, time, &settings.evolve)?;
            let linear = linear_evolve(op, u0, time, truncation)?.scaled(delta.into());
            let remainder = trajectory.final_state.sub(&linear)?.l2_norm();
            let rho_max = rho_series(&trajectory, lambda_m).last().copied().unwrap_or(0.0);
            let rho_bound = bound.root.map(|r| delta * r);
            Ok(DeltaRun {
                delta,
                time,
                norm_at_time: trajectory.final_state.l2_norm(),
                linear_norm_at_time: linear.l2_norm(),
                remainder,
                rho_max,
                rho_bound,
                rho_holds: rho_bound.is_some_and(|b| rho_max <= (1.0 + settings.rho_slack) * b),
                overflow: trajectory.overflow,
                pass: false,
                trajectory,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let c_upper = runs.iter().map(|r| r.remainder).fold(0.0, f64::max) / eta.powf(p);
    let epsilon = c_lower * eta - c_upper * eta.powf(p);
    if !(epsilon > 0.0) {
        return Err(Error::Config(format!(
            "eta = {eta} too large: epsilon = {epsilon:.3e} (C_lower = {c_lower:.3e}, C_upper = {c_upper:.3e}); try a smaller eta"
        )));
    }
    let mut runs = runs;
    for r in runs.iter_mut() {
        r.pass = !r.overflow && r.norm_at_time >= epsilon;
    }
    let (min_n, max_n) = runs
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), r| (a.min(r.norm_at_time), b.max(r.norm_at_time)));
    Ok(InstabilityOutcome::Verdict(InstabilityVerdict {
        eta,
        p,
        lambda_m,
        lambda0,
        c_lower,
        c_linear,
        c_upper,
        epsilon,
        bound,
        unstable: runs.iter().all(|r| r.pass),
        spread: max_n / min_n,
        runs,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DissipativeSettings {
    pub eta: f64,
    pub delta: f64,
    pub theta: f64,
    pub t_end: f64,
    pub lambda0: Option<f64>,
    /// Upper limit on an acceptable damping constant.
    pub cap: f64,
    /// Also rerun at `dt/2` and compare the damping constants.
    pub halve: bool,
    pub evolve: EvolveSettings,
}

impl Default for DissipativeSettings {
    fn default() -> Self {
        Self {
            eta: 0.02,
            delta: 1e-3,
            theta: 0.05,
            t_end: 20.0,
            lambda0: None,
            cap: 1e6,
            halve: true,
            evolve: EvolveSettings {
                dt: 0.02,
                sample_interval: 0.1,
                ..Default::default()
            },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DissipativeOutcome {
    pub p: f64,
    pub theta: f64,
    pub lambda_m: f64,
    pub lambda0: f64,
    /// `(λ₀ + θ)/(p − 1) < λ_M`.
    pub hypotheses_met: bool,
    pub damping: DampingReport,
    pub damping_half_step: Option<DampingReport>,
    /// Relative change of the damping constant under dt halving.
    pub damping_change: Option<f64>,
    pub mean_drift: f64,
    /// `sup_t ‖e^{Lt}u₀‖ e^{−λ_M t}`.
    pub c_linear: f64,
    pub a_p: Option<f64>,
    pub a_pm1: Option<f64>,
    pub bound: Option<DissipativeBound>,
    #[serde(skip)]
    pub trajectory: Trajectory,
}

/// Damping-estimate run: evolves `δu₀`, fits the damping constant and, when
/// the hypotheses hold, evaluates the dissipative root bound with it.
pub fn dissipative_experiment(
    op: &PeriodicOperator,
    nonlin: Nonlinearity,
    u0: &SampledFunction,
    report: &ProjectionReport,
    settings: &DissipativeSettings,
) -> Result<DissipativeOutcome> {
    let p = nonlin
        .degree()
        .ok_or_else(|| Error::Config("dissipative experiment needs a nonlinearity".into()))?;
    let lambda_m = report.lambda_m;
    let lambda0 = settings.lambda0.unwrap_or(report.lambda0);
    let theta = settings.theta;
    let hypotheses_met = (lambda0 + theta) / (p - 1.0) < lambda_m;

    let run = |dt: f64| -> Result<(Trajectory, DampingReport)> {
        let evolve = EvolveSettings { dt, ..settings.evolve };
        let traj = nonlinear_evolve(op, nonlin, u0, settings.delta, settings.t_end, &evolve)?;
        let damping = damping_check(&traj, theta, settings.cap)?;
        Ok((traj, damping))
    };
    let (trajectory, damping) = run(settings.evolve.dt)?;
    let damping_half_step = if settings.halve {
        Some(run(0.5 * settings.evolve.dt)?.1)
    } else {
        None
    };
    let damping_change = damping_half_step.map(|h| {
        if damping.constant == 0.0 && h.constant == 0.0 {
            0.0
        } else {
            (h.constant - damping.constant).abs() / damping.constant.max(h.constant)
        }
    });

    let truncation = settings.evolve.truncation.unwrap_or_else(|| default_truncation(u0.grid()));
    let steps = (settings.t_end / 0.1).ceil().max(1.0) as usize;
    let (lin_t, lin_n) = linear_norm_series(op, &[u0], truncation, settings.t_end / steps as f64, steps, f64::INFINITY)?;
    let c_linear = lin_t
        .iter()
        .zip(&lin_n[0])
        .map(|(t, n)| n * (-lambda_m * t).exp())
        .fold(0.0, f64::max);

    let (mut a_p, mut a_pm1, mut bound) = (None, None, None);
    if hypotheses_met && damping.finite {
        // H^n with n = half the operator order
        let norms = u0.norms();
        let hn = if op.order() >= 4 { norms.h2 } else { norms.h1 };
        let lower_gap = (p - 1.0) * lambda_m - theta - lambda0;
        let upper_gap = p * lambda_m - lambda0;
        let apm1 = 2f64.powf(p - 2.0) * hn / lower_gap;
        let ap = 2f64.powf(p - 1.0) * damping.constant / (theta + lambda_m) * (1.0 / upper_gap + 1.0 / lower_gap);
        bound = Some(dissipative_bound(p, settings.eta, settings.delta, ap, apm1, c_linear)?);
        a_p = Some(ap);
        a_pm1 = Some(apm1);
    }

    Ok(DissipativeOutcome {
        p,
        theta,
        lambda_m,
        lambda0,
        hypotheses_met,
        damping,
        damping_half_step,
        damping_change,
        mean_drift: trajectory.mean_drift(),
        c_linear,
        a_p,
        a_pm1,
        bound,
        trajectory,
    })
}
