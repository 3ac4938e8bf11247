//! Closed-form bounds from the nonlinear growth argument and trajectory
//! post-processing (ρ series, damping constant).

use super::Trajectory;
use crate::error::{Error, Result};
use serde::Serialize;

/// Running supremum `ρ(t_k) = max_{j ≤ k} ‖u(t_j)‖ e^{-λ_M t_j}`.
pub fn rho_series(traj: &Trajectory, lambda_m: f64) -> Vec<f64> {
    let mut best = f64::NEG_INFINITY;
    traj.times
        .iter()
        .zip(&traj.norms)
        .map(|(&t, n)| {
            best = best.max(n.l2 * (-lambda_m * t).exp());
            best
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolynomialBound {
    /// Coefficient of `z^p` in `g`.
    pub coefficient: f64,
    pub critical_z: f64,
    pub value_at_critical: f64,
    /// Smallest positive root of `g`, present iff `g(z*) < 0`.
    pub root: Option<f64>,
}

impl PolynomialBound {
    pub fn eval(&self, c: f64, p: f64, z: f64) -> f64 {
        c - z + self.coefficient * z.powf(p)
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    // f(lo) > 0 > f(hi)
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `g(z) = C − z + (2η)^{p−1}/(pλ_M − λ₀) z^p`.
pub fn polynomial_bound(p: f64, eta: f64, lambda_m: f64, lambda0: f64, c: f64) -> Result<PolynomialBound> {
    polynomial_bound_scaled(p, eta, lambda_m, lambda0, c, 1.0)
}

/// As [`polynomial_bound`] for a nonlinearity with `‖N(u)‖ ≤ C_N ‖u‖^p`,
/// which multiplies the `z^p` coefficient by `C_N`.
pub fn polynomial_bound_scaled(
    p: f64,
    eta: f64,
    lambda_m: f64,
    lambda0: f64,
    c: f64,
    scale: f64,
) -> Result<PolynomialBound> {
    if !(p > 1.0) || !(eta > 0.0) || !(scale > 0.0) {
        return Err(Error::Domain(format!(
            "need p > 1, eta > 0 and C_N > 0 (p = {p}, eta = {eta}, C_N = {scale})"
        )));
    }
    let gap = p * lambda_m - lambda0;
    if !(gap > 0.0) {
        return Err(Error::Hypothesis(format!(
            "p lambda_M - lambda0 = {gap} must be positive"
        )));
    }
    let coefficient = scale * (2.0 * eta).powf(p - 1.0) / gap;
    let critical_z = (gap / (p * scale)).powf(1.0 / (p - 1.0)) / (2.0 * eta);
    let g = |z: f64| c - z + coefficient * z.powf(p);
    let value_at_critical = g(critical_z);
    let root = (value_at_critical < 0.0).then(|| bisect(g, 0.0, critical_z));
    Ok(PolynomialBound {
        coefficient,
        critical_z,
        value_at_critical,
        root,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DissipativeBound {
    /// `L = C + 1`.
    pub l: f64,
    pub h_at_l: f64,
    /// `a_p η^{p−1} L^p + a_{p−1} η^{p−2} δ L^{p−1}`; below 1 certifies a root.
    pub comparison: f64,
    pub certified: bool,
    pub root: Option<f64>,
}

/// `h(z) = a_p η^{p−1} z^p + a_{p−1} η^{p−2} δ z^{p−1} − z + C` on `[0, C + 1]`.
pub fn dissipative_bound(p: f64, eta: f64, delta: f64, a_p: f64, a_pm1: f64, c: f64) -> Result<DissipativeBound> {
    if !(p > 1.0) || !(eta > 0.0) || !(delta >= 0.0) || !(a_p >= 0.0) || !(a_pm1 >= 0.0) || !(c >= 0.0) {
        return Err(Error::Domain("dissipative bound needs p > 1 and nonnegative constants".into()));
    }
    let h = |z: f64| a_p * eta.powf(p - 1.0) * z.powf(p) + a_pm1 * eta.powf(p - 2.0) * delta * z.powf(p - 1.0) - z + c;
    let l = c + 1.0;
    let comparison = a_p * eta.powf(p - 1.0) * l.powf(p) + a_pm1 * eta.powf(p - 2.0) * delta * l.powf(p - 1.0);
    let h_at_l = h(l);
    let certified = comparison < 1.0;
    let root = (h_at_l < 0.0 && c > 0.0).then(|| bisect(h, 0.0, l));
    Ok(DissipativeBound {
        l,
        h_at_l,
        comparison,
        certified,
        root,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DampingReport {
    pub theta: f64,
    /// Smallest `C ≥ 0` satisfying the damping inequality at every sample.
    pub constant: f64,
    /// `max_k (lhs_k − rhs_k)` at the reported constant.
    pub max_residual: f64,
    pub finite: bool,
}

/// Fits the damping estimate
/// `‖u(t)‖_{H²} ≤ e^{−θt}‖u(0)‖_{H²} + C ∫₀ᵗ e^{−θ(t−s)}‖u(s)‖_{H¹} ds`
/// on the trajectory samples, with the integral by the trapezoid rule.
pub fn damping_check(traj: &Trajectory, theta: f64, cap: f64) -> Result<DampingReport> {
    if traj.times.len() < 2 {
        return Err(Error::Diagnostics("damping check needs at least two samples".into()));
    }
    let t = &traj.times;
    let h1: Vec<f64> = traj.norms.iter().map(|n| n.h1).collect();
    let h2: Vec<f64> = traj.norms.iter().map(|n| n.h2).collect();
    let mut integrals = vec![0.0; t.len()];
    let mut slack = vec![0.0; t.len()];
    let mut constant = 0.0f64;
    let mut finite = true;
    for k in 0..t.len() {
        let mut integral = 0.0;
        for j in 1..=k {
            let f = |i: usize| (-theta * (t[k] - t[i])).exp() * h1[i];
            integral += 0.5 * (t[j] - t[j - 1]) * (f(j) + f(j - 1));
        }
        integrals[k] = integral;
        slack[k] = h2[k] - (-theta * t[k]).exp() * h2[0];
        if slack[k] > 0.0 {
            if integral > 0.0 {
                constant = constant.max(slack[k] / integral);
            } else {
                finite = false;
            }
        }
    }
    if constant > cap {
        finite = false;
    }
    let max_residual = (0..t.len())
        .map(|k| slack[k] - constant * integrals[k])
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(DampingReport {
        theta,
        constant,
        max_residual,
        finite,
    })
}
