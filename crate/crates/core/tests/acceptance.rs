//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits nonzero if any fails.

use faer::Mat;
use floquet_core::evolution::{
    damping_check, fit_growth_sandwich, instability_experiment, linear_evolve, nonlinear_evolve,
    polynomial_bound, EvolveSettings, InstabilityOutcome, InstabilitySettings, SandwichSettings,
};
use floquet_core::linalg::{eigen_sorted, solve, CMat};
use floquet_core::projections::{
    eigenbasis_projection, lambda_m, prepared_initial_data, spectral_projection, ActivationSettings,
    Contour, PreparedOptions, ProjectionReport,
};
use floquet_core::spectra::{
    bloch_spectrum, branch_of, hypothesis_partition, lambda0, track_branches, SpectrumSampling, XiGrid,
};
use floquet_core::{
    bloch_transform, inverse_bloch, isometry_defect, symbol_eval, CoefficientTerm, Complex64 as C64,
    Nonlinearity, PeriodicCoefficient, PeriodicOperator, SampledFunction, SpatialGrid,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::{Duration, Instant};

struct Outcome {
    pass: bool,
    detail: String,
}

fn run(id: usize, name: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let pass = out.pass && elapsed < limit;
    println!(
        "{} criterion {id:>2} ({name}): {} [{:.2}s / limit {}s]",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    pass
}

fn rel_l2(a: &SampledFunction, b: &SampledFunction) -> f64 {
    a.sub(b).unwrap().l2_norm() / b.l2_norm()
}

fn vnorm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Normalized DFT coefficients → signed box index of an FFT slot.
fn signed(slot: usize, n: usize) -> i64 {
    if slot < n / 2 {
        slot as i64
    } else {
        slot as i64 - n as i64
    }
}

// ---------------------------------------------------------------- 1

fn corpus(rng: &mut ChaCha8Rng) -> Vec<SampledFunction> {
    let mut out = Vec::new();
    for &(np, nx) in &[(2usize, 32usize), (4, 32), (8, 64)] {
        let g = SpatialGrid::new(np, nx).unwrap();
        let l = g.box_length();
        for q in [1i64, 3, 7] {
            let kappa = q as f64 / np as f64;
            out.push(SampledFunction::from_fn(g, |x| C64::from_polar(1.0, kappa * x)));
        }
        let xc = 0.5 * l;
        out.push(SampledFunction::from_fn(g, |x| {
            C64::from_polar((-(x - xc).powi(2) / (0.05 * l * l)).exp(), 0.8 * x)
        }));
        out.push(SampledFunction::from_fn(g, |x| {
            C64::new((-(x - xc).powi(2) / (0.02 * l * l)).exp() * (1.3 * x).cos(), 0.0)
        }));
        for _ in 0..2 {
            let vals: Vec<C64> = (0..g.len())
                .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            out.push(SampledFunction::new(g, 1, vals).unwrap());
        }
    }
    out
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let fs = corpus(&mut rng);
    let mut defect = 0.0f64;
    let mut round = 0.0f64;
    for f in &fs {
        defect = defect.max(isometry_defect(f));
        let back = inverse_bloch(&bloch_transform(f)).unwrap();
        round = round.max(back.max_diff(f).unwrap() / f.values().iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    Outcome {
        pass: fs.len() >= 20 && defect < 1e-8 && round < 1e-10,
        detail: format!("{} functions, max isometry defect {defect:.2e}, max round trip {round:.2e}", fs.len()),
    }
}

// ---------------------------------------------------------------- 2

fn criterion_2() -> Outcome {
    let ops = [
        ("heat", PeriodicOperator::heat()),
        ("heat+0.7", PeriodicOperator::heat().shifted(0.7)),
        ("kdv-ks(0.1)", PeriodicOperator::kdv_ks(0.1, None)),
    ];
    let truncation = 6;
    let grid = XiGrid::uniform(64).unwrap();
    let mut worst = 0.0f64;
    for (_, op) in &ops {
        let s = bloch_spectrum(op, &grid, truncation).unwrap();
        for sample in &s.samples {
            let mut used = vec![false; sample.values.len()];
            for k in -(truncation as i64)..=truncation as i64 {
                let want = symbol_eval(op, k as f64 + sample.xi).unwrap();
                let (i, d) = sample
                    .values
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| !used[*i])
                    .map(|(i, v)| (i, (v - want).norm()))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .unwrap();
                used[i] = true;
                worst = worst.max(d);
            }
        }
    }
    // 512 samples put a grid point within 1/1024 of κ = 1/√2
    let s = bloch_spectrum(&PeriodicOperator::kdv_ks(0.1, None), &XiGrid::uniform(512).unwrap(), 3).unwrap();
    let l0 = lambda0(&s).value;
    Outcome {
        pass: worst < 1e-10 && (l0 - 0.025).abs() < 1e-6,
        detail: format!("max |eig - symbol| {worst:.2e}, lambda0 = {l0:.9} (target 0.025 +- 1e-6)"),
    }
}

// ---------------------------------------------------------------- 3

fn criterion_3() -> Outcome {
    let phi = PeriodicCoefficient::cosine(0.3, 1);
    let system = PeriodicOperator::new(
        2,
        vec![
            CoefficientTerm { order: 2, row: 0, col: 0, coeff: PeriodicCoefficient::constant(1.0) },
            CoefficientTerm { order: 2, row: 1, col: 1, coeff: PeriodicCoefficient::constant(0.5) },
            CoefficientTerm { order: 0, row: 0, col: 1, coeff: PeriodicCoefficient::cosine(0.4, 1) },
            CoefficientTerm { order: 0, row: 1, col: 0, coeff: PeriodicCoefficient::constant(0.2) },
        ],
    )
    .unwrap();
    let ops = [
        PeriodicOperator::heat().shifted(1.0),
        PeriodicOperator::mathieu(1.0),
        PeriodicOperator::kdv_ks(0.1, Some(&phi)),
        system,
    ];
    let truncation = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut cases, mut agree, mut idem) = (0usize, 0.0f64, 0.0f64);
    for op in &ops {
        for &xi in &[-0.3, 0.0, 0.2] {
            let a = floquet_core::assemble_bloch_matrix(op, xi, truncation).unwrap();
            let evs = eigen_sorted(&a.matrix).unwrap().values;
            let n = evs.len();
            let v: Vec<C64> = (0..n)
                .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let gap = |z: C64| {
                evs.iter()
                    .map(|w| (w - z).norm())
                    .filter(|&d| d > 1e-9 * (1.0 + z.norm()))
                    .fold(f64::INFINITY, f64::min)
            };
            // circle around the top eigenvalue
            let top = evs[0];
            let mut contours = vec![Contour::circle(top, 0.5 * gap(top), 128).unwrap()];
            // rectangle around the top two distinct real parts (with
            // multiplicities); its left edge sits half-way to the rest
            let tol = 1e-9 * (1.0 + evs[0].norm());
            let second = evs.iter().find(|w| evs[0].re - w.re > tol).unwrap().re;
            let (top2, rest): (Vec<C64>, Vec<C64>) = evs.iter().partition(|w| w.re >= second - tol);
            let rest_hi = rest.iter().map(|w| w.re).fold(f64::NEG_INFINITY, f64::max);
            let h = 0.5 * (second - rest_hi);
            let im_lo = top2.iter().map(|w| w.im).fold(f64::INFINITY, f64::min);
            let im_hi = top2.iter().map(|w| w.im).fold(f64::NEG_INFINITY, f64::max);
            contours.push(
                Contour::rectangle(C64::new(second - h, im_lo - h), C64::new(evs[0].re + h, im_hi + h), 512).unwrap(),
            );
            for gamma in &contours {
                let riesz = spectral_projection(op, xi, truncation, gamma, &v).unwrap();
                let eig = eigenbasis_projection(op, xi, truncation, gamma, &v).unwrap();
                let scale = vnorm(&v);
                let d: Vec<C64> = riesz.iter().zip(&eig).map(|(a, b)| a - b).collect();
                agree = agree.max(vnorm(&d) / scale);
                let twice = spectral_projection(op, xi, truncation, gamma, &riesz).unwrap();
                let e: Vec<C64> = twice.iter().zip(&riesz).map(|(a, b)| a - b).collect();
                idem = idem.max(vnorm(&e) / scale);
                cases += 1;
            }
        }
    }
    Outcome {
        pass: cases >= 10 && agree < 1e-8 && idem < 1e-9,
        detail: format!("{cases} cases, max route disagreement {agree:.2e}, max idempotence defect {idem:.2e}"),
    }
}

// ---------------------------------------------------------------- 4

/// Galerkin matrix of `op` on the whole box in the box Fourier basis,
/// restricted to the harmonics `|j| ≤ M` of every Floquet slot.
fn box_galerkin(op: &PeriodicOperator, grid: SpatialGrid, truncation: usize) -> (Vec<(usize, usize)>, CMat) {
    let n = grid.len();
    let np = grid.periods() as i64;
    let half = np / 2;
    let d = op.components();
    let mut basis = Vec::new();
    for c in 0..d {
        for slot in 0..n {
            let q = signed(slot, n);
            let j = (q + half).div_euclid(np);
            if j.unsigned_abs() as usize <= truncation {
                basis.push((c, slot));
            }
        }
    }
    let dim = basis.len();
    let mat = Mat::from_fn(dim, dim, |r, s| {
        let (c, qs) = basis[r];
        let (c2, qs2) = basis[s];
        let (q, q2) = (signed(qs, n), signed(qs2, n));
        if (q - q2).rem_euclid(np) != 0 {
            return C64::new(0.0, 0.0);
        }
        let k = (q - q2) / np;
        let kappa = q2 as f64 / np as f64;
        op.terms()
            .iter()
            .filter(|t| t.row == c && t.col == c2)
            .map(|t| t.coeff.mode(k) * C64::new(0.0, kappa).powu(t.order as u32))
            .sum()
    });
    (basis, mat)
}

fn dense_evolve(op: &PeriodicOperator, u0: &SampledFunction, t: f64, truncation: usize) -> SampledFunction {
    let grid = u0.grid();
    let (basis, a) = box_galerkin(op, grid, truncation);
    let spec = u0.spectrum();
    let n = grid.len();
    let v: Vec<C64> = basis.iter().map(|&(c, s)| spec[c * n + s]).collect();
    let e = eigen_sorted(&a).unwrap();
    let coords = solve(&e.vectors, &v);
    let dim = basis.len();
    let mut out = vec![C64::new(0.0, 0.0); op.components() * n];
    for (r, &(c, s)) in basis.iter().enumerate() {
        out[c * n + s] = (0..dim).map(|i| e.vectors[(r, i)] * (e.values[i] * t).exp() * coords[i]).sum();
    }
    SampledFunction::from_spectrum(grid, op.components(), out).unwrap()
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let phi = PeriodicCoefficient::new([(0, C64::new(0.1, 0.0)), (1, C64::new(0.15, -0.05)), (-1, C64::new(0.15, 0.05))], true).unwrap();
    let random_op = PeriodicOperator::scalar([
        (2, PeriodicCoefficient::constant(1.0)),
        (1, PeriodicCoefficient::sine(0.3, 1)),
        (0, PeriodicCoefficient::new([(0, C64::new(0.2, 0.0)), (2, C64::new(0.1, 0.05)), (-2, C64::new(0.1, -0.05))], true).unwrap()),
    ])
    .unwrap();
    let system = PeriodicOperator::new(
        2,
        vec![
            CoefficientTerm { order: 2, row: 0, col: 0, coeff: PeriodicCoefficient::constant(1.0) },
            CoefficientTerm { order: 2, row: 1, col: 1, coeff: PeriodicCoefficient::constant(0.3) },
            CoefficientTerm { order: 0, row: 0, col: 1, coeff: PeriodicCoefficient::cosine(0.5, 1) },
            CoefficientTerm { order: 1, row: 1, col: 0, coeff: PeriodicCoefficient::constant(0.4) },
        ],
    )
    .unwrap();
    let instances: Vec<(PeriodicOperator, SpatialGrid, f64)> = vec![
        (PeriodicOperator::heat().shifted(0.5), SpatialGrid::new(4, 32).unwrap(), 0.7),
        (PeriodicOperator::mathieu(1.0), SpatialGrid::new(8, 32).unwrap(), 1.0),
        (PeriodicOperator::kdv_ks(0.1, Some(&phi)), SpatialGrid::new(4, 32).unwrap(), 0.5),
        (random_op, SpatialGrid::new(8, 64).unwrap(), 0.8),
        (system, SpatialGrid::new(4, 32).unwrap(), 0.6),
    ];
    let mut worst = 0.0f64;
    for (op, grid, t) in &instances {
        assert!(grid.len() * op.components() <= 512 || grid.len() <= 512);
        let n = grid.len();
        let d = op.components();
        let spec: Vec<C64> = (0..d * n)
            .map(|i| {
                let q = signed(i % n, n) as f64 / grid.periods() as f64;
                let w = (-0.5 * q * q).exp();
                C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * w
            })
            .collect();
        let u0 = SampledFunction::from_spectrum(*grid, d, spec).unwrap();
        let truncation = grid.points_per_period() / 2 - 1;
        let bloch = linear_evolve(op, &u0, *t, truncation).unwrap();
        let dense = dense_evolve(op, &u0, *t, truncation);
        worst = worst.max(rel_l2(&bloch, &dense));
    }
    Outcome {
        pass: instances.len() >= 5 && worst < 1e-8,
        detail: format!("{} instances, max relative L2 difference {worst:.2e}", instances.len()),
    }
}

// ---------------------------------------------------------------- 5

struct Scenario {
    name: &'static str,
    op: PeriodicOperator,
    grid: SpatialGrid,
    spectrum: SpectrumSampling,
    u0: SampledFunction,
    report: ProjectionReport,
}

/// Prepared data on the branch through eigenvalue `eigen` at slot `m`,
/// over slots `m - width ..= m + width`.
fn prepared(
    name: &'static str,
    op: PeriodicOperator,
    grid: SpatialGrid,
    m: usize,
    eigen: Option<usize>,
    kappa: Option<f64>,
    width: usize,
    real: bool,
    extra: Option<SampledFunction>,
) -> Scenario {
    let truncation = grid.points_per_period() / 2 - 1;
    let spectrum = bloch_spectrum(&op, &XiGrid::for_box(grid), truncation).unwrap();
    let branches = track_branches(&spectrum, None);
    let i = match (eigen, kappa) {
        (Some(i), _) => i,
        (None, Some(k)) => {
            let want = symbol_eval(&op, k).unwrap();
            spectrum.samples[m]
                .values
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 - want).norm().total_cmp(&(b.1 - want).norm()))
                .unwrap()
                .0
        }
        _ => unreachable!(),
    };
    let id = branch_of(&branches, m, i).unwrap();
    let data = prepared_initial_data(
        grid,
        &spectrum,
        &branches,
        id,
        m - width,
        m + width,
        PreparedOptions { real, normalize: true },
    )
    .unwrap();
    let mut u0 = data.function;
    if let Some(e) = extra {
        u0 = u0.add(&e).unwrap();
    }
    let report = lambda_m(&u0, &spectrum, &ActivationSettings::default())
        .unwrap()
        .report()
        .cloned()
        .expect("scenario activates an unstable eigenvalue");
    Scenario { name, op, grid, spectrum, u0, report }
}

/// Slot of `ξ = κ − round(κ)` on a box with `np` periods.
fn slot_of(kappa: f64, np: usize) -> usize {
    (((kappa + 0.5).rem_euclid(1.0)) * np as f64).round() as usize % np
}

fn criterion_5() -> Outcome {
    let g16 = SpatialGrid::new(16, 32).unwrap();
    let stable = SampledFunction::from_fn(g16, |x| C64::from_polar(0.3, 1.375 * x));
    let scenarios = vec![
        (
            prepared("heat+1", PeriodicOperator::heat().shifted(1.0), g16, slot_of(0.3125, 16), None, Some(0.3125), 1, true, None),
            SandwichSettings { horizon: 20.0, samples: 200, ..Default::default() },
        ),
        (
            prepared("mathieu q=1", PeriodicOperator::mathieu(1.0), g16, 8, Some(0), None, 2, false, None),
            SandwichSettings { horizon: 30.0, samples: 200, ..Default::default() },
        ),
        (
            prepared("kdv-ks 0.1", PeriodicOperator::kdv_ks(0.1, None), g16, slot_of(0.6875, 16), None, Some(0.6875), 1, true, None),
            SandwichSettings { horizon: 400.0, samples: 400, ..Default::default() },
        ),
        (
            prepared(
                "kdv-ks 0.4 low band + stable mode",
                PeriodicOperator::kdv_ks(0.4, None),
                g16,
                slot_of(0.375, 16),
                None,
                Some(0.375),
                1,
                false,
                Some(stable),
            ),
            SandwichSettings { horizon: 150.0, samples: 300, ..Default::default() },
        ),
    ];
    let mut ok = true;
    let mut lines = Vec::new();
    let mut engineered = false;
    for (sc, settings) in &scenarios {
        let omega = sc.report.lambda_m - 0.05;
        let diag = fit_growth_sandwich(&sc.op, &sc.u0, &sc.spectrum, &sc.report, omega, settings).unwrap();
        ok &= diag.holds() && sc.report.lambda_m > sc.report.lambda0 / 2.0;
        if sc.report.lambda0 > sc.report.lambda_m + 0.01 {
            engineered = true;
        }
        let _ = sc.grid;
        lines.push(format!(
            "{}: lM={:.5} l0={:.5} r={:.5}>={:.5} R={:.5}<={:.5}",
            sc.name,
            sc.report.lambda_m,
            sc.report.lambda0,
            diag.rate_lower,
            omega - 0.01,
            diag.rate_upper,
            sc.report.lambda_m + 0.01
        ));
    }
    Outcome {
        pass: ok && engineered && scenarios.len() >= 3,
        detail: lines.join("; "),
    }
}

// ---------------------------------------------------------------- 6, 7

struct InstabilityRuns {
    ok6: bool,
    ok7: bool,
    detail6: String,
    detail7: String,
}

fn instability_runs() -> InstabilityRuns {
    let g = SpatialGrid::new(16, 32).unwrap();
    let op = PeriodicOperator::kdv_ks(0.1, None);
    let sc = prepared("kdv-ks", op.clone(), g, slot_of(0.6875, 16), None, Some(0.6875), 1, true, None);
    let fine = bloch_spectrum(&op, &XiGrid::uniform(512).unwrap(), 3).unwrap();
    let settings = InstabilitySettings {
        eta: 0.02,
        deltas: vec![1e-2, 1e-3, 1e-4],
        lambda0: Some(lambda0(&fine).value),
        evolve: EvolveSettings { dt: 0.05, sample_interval: 0.25, ..Default::default() },
        ..Default::default()
    };
    let nl = Nonlinearity::Power { exponent: 2.0, scale: 0.05 };
    match instability_experiment(&op, nl, &sc.u0, &sc.report, &settings) {
        Ok(InstabilityOutcome::Verdict(v)) => {
            let runs: Vec<String> = v
                .runs
                .iter()
                .map(|r| format!("d={:.0e}: T={:.2} |u(T)|={:.5}", r.delta, r.time, r.norm_at_time))
                .collect();
            let rho: Vec<String> = v
                .runs
                .iter()
                .map(|r| {
                    format!(
                        "d={:.0e}: max rho/d={:.5} root={}",
                        r.delta,
                        r.rho_max / r.delta,
                        r.rho_bound.map_or("none".into(), |b| format!("{:.5}", b / r.delta))
                    )
                })
                .collect();
            InstabilityRuns {
                ok6: v.unstable && v.spread <= 4.0,
                ok7: v.runs.iter().all(|r| r.rho_holds),
                detail6: format!(
                    "lM={:.5} l0={:.6} eps={:.5} spread={:.3}; {}",
                    v.lambda_m,
                    v.lambda0,
                    v.epsilon,
                    v.spread,
                    runs.join(", ")
                ),
                detail7: rho.join(", "),
            }
        }
        Ok(other) => InstabilityRuns {
            ok6: false,
            ok7: false,
            detail6: format!("{other:?}"),
            detail7: "no verdict".into(),
        },
        Err(e) => InstabilityRuns {
            ok6: false,
            ok7: false,
            detail6: e.to_string(),
            detail7: "no verdict".into(),
        },
    }
}

// ---------------------------------------------------------------- 8

fn criterion_8() -> Outcome {
    let b = polynomial_bound(2.0, 0.05, 1.0, 1.5, 1.0).unwrap();
    let none = polynomial_bound(2.0, 0.5, 1.0, 1.5, 1.0).unwrap();
    Outcome {
        pass: (b.critical_z - 2.5).abs() < 1e-12
            && (b.value_at_critical + 0.25).abs() < 1e-12
            && b.root.is_some()
            && none.root.is_none(),
        detail: format!(
            "z*={} g(z*)={} root={:?}; eta=0.5 root={:?}",
            b.critical_z, b.value_at_critical, b.root, none.root
        ),
    }
}

// ---------------------------------------------------------------- 9

fn criterion_9() -> Outcome {
    let g = SpatialGrid::new(8, 32).unwrap();
    let phi = PeriodicCoefficient::cosine(0.2, 1);
    let op = PeriodicOperator::kdv_ks(0.1, Some(&phi));
    let u0 = SampledFunction::from_fn(g, |x| C64::new(0.3 + (0.75 * x).cos() + 0.5 * (1.25 * x).sin(), 0.0));
    let theta = 0.05;
    let fit = |dt: f64| {
        let settings = EvolveSettings { dt, sample_interval: 0.1, ..Default::default() };
        let traj = nonlinear_evolve(&op, Nonlinearity::Advective, &u0, 0.01, 20.0, &settings).unwrap();
        let rep = damping_check(&traj, theta, 1e6).unwrap();
        (traj, rep)
    };
    let (traj, a) = fit(0.02);
    let (_, b) = fit(0.01);
    let change = (a.constant - b.constant).abs() / a.constant.max(b.constant);
    let drift = traj.mean_drift();
    Outcome {
        pass: a.finite && b.finite && a.max_residual <= 1e-8 && change < 0.1 && drift < 1e-10,
        detail: format!(
            "C={:.6} (dt/2: {:.6}, change {:.2e}), residual {:.2e}, mean drift {:.2e}",
            a.constant, b.constant, change, a.max_residual, drift
        ),
    }
}

// ---------------------------------------------------------------- 10

fn criterion_10() -> Outcome {
    let c = 1.0;
    let lm = 0.6;
    let truncation = 8;
    let op = PeriodicOperator::heat().shifted(c);
    let s = bloch_spectrum(&op, &XiGrid::uniform(64).unwrap(), truncation).unwrap();
    let part = hypothesis_partition(&s, lm, 2.0, 1e-9).unwrap();
    let mut mismatches = 0;
    for (sample, &count) in s.samples.iter().zip(&part.counts) {
        let want = (-(truncation as i64)..=truncation as i64)
            .filter(|&k| c - (k as f64 + sample.xi).powi(2) > lm)
            .count();
        if want != count {
            mismatches += 1;
        }
    }
    let covered: usize = part.intervals.iter().map(|i| i.last - i.first + 1).sum();
    Outcome {
        pass: mismatches == 0 && covered == s.samples.len(),
        detail: format!(
            "{} xi samples, {} intervals, {mismatches} count mismatches",
            s.samples.len(),
            part.intervals.len()
        ),
    }
}

fn main() {
    let mut all = true;
    all &= run(1, "Bloch isometry", Duration::from_secs(5), criterion_1);
    all &= run(2, "constant-coefficient spectrum", Duration::from_secs(30), criterion_2);
    all &= run(3, "projection routes", Duration::from_secs(30), criterion_3);
    all &= run(4, "semigroup vs dense box", Duration::from_secs(60), criterion_4);
    all &= run(5, "growth sandwich", Duration::from_secs(120), criterion_5);
    let start = Instant::now();
    let t1 = instability_runs();
    let elapsed = start.elapsed();
    all &= run(6, "instability experiment", Duration::from_secs(300), || Outcome {
        pass: t1.ok6 && elapsed < Duration::from_secs(300),
        detail: format!("{} [run {:.2}s]", t1.detail6, elapsed.as_secs_f64()),
    });
    all &= run(7, "rho bound", Duration::from_secs(300), || Outcome {
        pass: t1.ok7,
        detail: t1.detail7.clone(),
    });
    all &= run(8, "polynomial bound", Duration::from_secs(1), criterion_8);
    all &= run(9, "damping estimate", Duration::from_secs(180), criterion_9);
    all &= run(10, "hypothesis partition", Duration::from_secs(10), criterion_10);
    if all {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: some criteria FAILED");
        std::process::exit(1);
    }
}
