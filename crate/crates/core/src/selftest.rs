//! Quick built-in oracle checks, run by `floquet selftest`.

use crate::bloch::{bloch_transform, inverse_bloch, isometry_defect};
use crate::evolution::{linear_evolve, nonlinear_evolve, polynomial_bound, EvolveSettings};
use crate::grid::{SampledFunction, SpatialGrid};
use crate::operator::{symbol_eval, Nonlinearity, PeriodicOperator};
use crate::projections::{eigenbasis_projection, spectral_projection, Contour};
use crate::spectra::{bloch_spectrum, lambda0, XiGrid};
use num_complex::Complex64 as C64;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
}

fn check(name: &'static str, value: f64, tolerance: f64) -> Check {
    Check {
        name,
        passed: value.is_finite() && value <= tolerance,
        value,
        tolerance,
    }
}

fn bloch_round_trip() -> (f64, f64) {
    let g = SpatialGrid::new(4, 32).expect("valid grid");
    let l = g.box_length();
    let fs = [
        SampledFunction::from_fn(g, |x| C64::from_polar(1.0, 0.75 * x)),
        SampledFunction::from_fn(g, |x| C64::new((-(x - 0.5 * l).powi(2) / l).exp(), 0.0)),
        SampledFunction::from_fn(g, |x| C64::new((0.25 * x).sin(), (1.5 * x).cos())),
    ];
    let mut defect = 0.0f64;
    let mut round = 0.0f64;
    for f in &fs {
        defect = defect.max(isometry_defect(f));
        let back = inverse_bloch(&bloch_transform(f)).expect("same shape");
        round = round.max(back.max_diff(f).expect("same shape"));
    }
    (defect, round)
}

fn symbol_match() -> f64 {
    let op = PeriodicOperator::kdv_ks(0.1, None);
    let s = bloch_spectrum(&op, &XiGrid::uniform(16).expect("valid"), 4).expect("valid");
    let mut worst = 0.0f64;
    for sample in &s.samples {
        for k in -4i64..=4 {
            let want = symbol_eval(&op, k as f64 + sample.xi).expect("constant coefficients");
            let d = sample.values.iter().map(|v| (v - want).norm()).fold(f64::INFINITY, f64::min);
            worst = worst.max(d);
        }
    }
    worst
}

fn projection_routes() -> f64 {
    let op = PeriodicOperator::mathieu(0.8);
    let v: Vec<C64> = (0..13).map(|i| C64::new(1.0 / (1.0 + i as f64), 0.1 * i as f64)).collect();
    let a = crate::operator::assemble_bloch_matrix(&op, 0.1, 6).expect("valid");
    let evs = crate::linalg::eigen_sorted(&a.matrix).expect("eigensolver").values;
    let radius = 0.5 * (evs[0] - evs[1]).norm();
    let gamma = Contour::circle(evs[0], radius, 128).expect("valid");
    let r = spectral_projection(&op, 0.1, 6, &gamma, &v).expect("clear contour");
    let e = eigenbasis_projection(&op, 0.1, 6, &gamma, &v).expect("clear contour");
    r.iter().zip(&e).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
}

fn heat_mode() -> f64 {
    let g = SpatialGrid::new(4, 32).expect("valid");
    let u = SampledFunction::from_fn(g, |x| C64::from_polar(1.0, 1.25 * x));
    let out = linear_evolve(&PeriodicOperator::heat(), &u, 0.5, 15).expect("no overflow");
    out.max_diff(&u.scaled(C64::new((-1.5625f64 * 0.5).exp(), 0.0))).expect("same shape")
}

fn linear_reduction() -> f64 {
    let g = SpatialGrid::new(4, 32).expect("valid");
    let op = PeriodicOperator::kdv_ks(0.1, None);
    let u = SampledFunction::from_fn(g, |x| C64::new((0.75 * x).cos(), 0.0));
    let settings = EvolveSettings {
        dt: 0.1,
        ..Default::default()
    };
    let traj = nonlinear_evolve(&op, Nonlinearity::None, &u, 1.0, 2.0, &settings).expect("stable run");
    let want = linear_evolve(&op, &u, 2.0, 15).expect("stable run");
    traj.final_state.max_diff(&want).expect("same shape")
}

fn bound_arithmetic() -> f64 {
    let b = polynomial_bound(2.0, 0.05, 1.0, 1.5, 1.0).expect("hypothesis holds");
    let no_root = polynomial_bound(2.0, 0.5, 1.0, 1.5, 1.0).expect("hypothesis holds");
    let miss = if no_root.root.is_some() { 1.0 } else { 0.0 };
    (b.critical_z - 2.5).abs().max((b.value_at_critical + 0.25).abs()).max(miss)
}

fn kdvks_lambda0() -> f64 {
    let op = PeriodicOperator::kdv_ks(0.1, None);
    let s = bloch_spectrum(&op, &XiGrid::uniform(512).expect("valid"), 3).expect("valid");
    (lambda0(&s).value - 0.025).abs()
}

pub fn run_all() -> Vec<Check> {
    let (defect, round) = bloch_round_trip();
    vec![
        check("bloch isometry defect", defect, 1e-8),
        check("bloch round trip", round, 1e-10),
        check("constant-coefficient eigenvalues vs symbol", symbol_match(), 1e-10),
        check("kdv-ks lambda0 = beta/4", kdvks_lambda0(), 1e-6),
        check("riesz vs eigenbasis projection", projection_routes(), 1e-8),
        check("heat mode semigroup", heat_mode(), 1e-10),
        check("nonlinear stepper without nonlinearity", linear_reduction(), 1e-8),
        check("polynomial bound arithmetic", bound_arithmetic(), 1e-12),
    ]
}
