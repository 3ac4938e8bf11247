use crate::config::{self, PerturbationConfig, ScenarioConfig};
use crate::output::{OutDir, Plot, Style};
use crate::perturbation::load_initial_perturbation;
use crate::RunArgs;
use anyhow::{bail, Context, Result};
use floquet_core::evolution::{
    dissipative_experiment, fit_growth_sandwich, instability_experiment, rho_series, DissipativeSettings,
    InstabilityOutcome, InstabilitySettings, SandwichSettings,
};
use floquet_core::projections::{lambda_m, ProjectionOutcome, ProjectionReport};
use floquet_core::spectra::{
    bloch_spectrum, branch_of, hypothesis_partition, lambda0, track_branches, unstable_set, SpectrumSampling, XiGrid,
};
use floquet_core::{bloch_transform, Error, PeriodicOperator, SampledFunction, SpatialGrid};
use serde::Serialize;
use serde_json::Value;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Completed,
    HypothesesUnmet,
    Failed,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Completed => 0,
            Status::HypothesesUnmet => 2,
            Status::Failed => 1,
        }
    }
}

struct Ctx {
    cfg: ScenarioConfig,
    resolved: Value,
    op: PeriodicOperator,
    grid: SpatialGrid,
    truncation: usize,
    out: OutDir,
    base: PathBuf,
}

impl Ctx {
    fn box_spectrum(&self) -> Result<SpectrumSampling> {
        Ok(bloch_spectrum(&self.op, &XiGrid::for_box(self.grid), self.truncation)?)
    }

    fn xi_grid(&self) -> Result<XiGrid> {
        Ok(match self.cfg.grid.xi_samples {
            Some(n) => XiGrid::uniform(n)?,
            None => XiGrid::for_box(self.grid),
        })
    }

    fn initial(&self, s: &SpectrumSampling) -> Result<SampledFunction> {
        load_initial_perturbation(&self.cfg, self.grid, s, &self.base)
    }

    /// λ₀ from the finer ξ grid when configured.
    fn refined_lambda0(&self) -> Result<Option<f64>> {
        match self.cfg.grid.lambda0_xi_samples {
            None => Ok(None),
            Some(n) => {
                let s = bloch_spectrum(&self.op, &XiGrid::uniform(n)?, self.truncation)?;
                Ok(Some(lambda0(&s).value))
            }
        }
    }

    /// Projection report of u₀, or `None` (hypotheses unmet) after writing
    /// the not-activated summary.
    fn report(&self, command: &str, s: &SpectrumSampling, u0: &SampledFunction) -> Result<Option<ProjectionReport>> {
        let outcome = lambda_m(u0, s, &self.cfg.activation())?;
        match outcome {
            ProjectionOutcome::Activated(r) => Ok(Some(r)),
            other => {
                eprintln!("hypotheses unmet: no activated eigenvalue above lambda0/p");
                self.out.summary(command, &self.resolved, &other)?;
                Ok(None)
            }
        }
    }
}

fn setup(command: &str, args: &RunArgs) -> Result<Ctx> {
    if let Some(n) = args.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("--jobs: configuring the thread pool")?;
    }
    let mut overrides = args.overrides.clone();
    if let Some(dt) = args.dt {
        overrides.push(format!("experiment.dt={dt}"));
    }
    let (mut cfg, _) = config::load(&args.config, &overrides)?;
    if let Some(seed) = args.seed {
        match &mut cfg.perturbation {
            PerturbationConfig::Random { seed: s, .. } => *s = seed,
            _ => eprintln!("warning: --seed ignored, perturbation is not a random recipe"),
        }
    }
    let resolved = serde_json::to_value(&cfg)?;
    let op = cfg.operator()?;
    let grid = cfg.spatial_grid()?;
    let truncation = cfg.truncation()?;
    let out = OutDir::create(args.out.join(&cfg.name).join(command))?;
    let base = args
        .config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok(Ctx {
        cfg,
        resolved,
        op,
        grid,
        truncation,
        out,
        base,
    })
}

pub fn run(command: &str, args: &RunArgs) -> Result<Status> {
    let ctx = setup(command, args)?;
    let status = match command {
        "spectrum" => spectrum(&ctx)?,
        "lambdam" => lambdam(&ctx)?,
        "hypothesis" => hypothesis(&ctx)?,
        "linear" => linear(&ctx)?,
        "instability" => instability(&ctx)?,
        "dissipative" => dissipative(&ctx)?,
        other => bail!("unknown command {other}"),
    };
    eprintln!("artifacts in {}", ctx.out.root().display());
    Ok(status)
}

#[derive(Serialize)]
struct SpectrumRow {
    xi_index: usize,
    xi: f64,
    eigen_index: usize,
    branch: usize,
    re: f64,
    im: f64,
    crossing: bool,
}

#[derive(Serialize)]
struct Quantity {
    quantity: &'static str,
    value: f64,
}

fn spectrum(ctx: &Ctx) -> Result<Status> {
    let s = bloch_spectrum(&ctx.op, &ctx.xi_grid()?, ctx.truncation)?;
    let branches = track_branches(&s, None);
    let l0 = lambda0(&s);
    let p = ctx.cfg.p();
    let unstable = unstable_set(&s, p)?;
    let mut rows = Vec::new();
    for (m, sample) in s.samples.iter().enumerate() {
        for (i, v) in sample.values.iter().enumerate() {
            let b = branch_of(&branches, m, i).expect("every eigenvalue is on a branch");
            rows.push(SpectrumRow {
                xi_index: m,
                xi: sample.xi,
                eigen_index: i,
                branch: b,
                re: v.re,
                im: v.im,
                crossing: branches[b].crossing[m],
            });
        }
    }
    ctx.out.csv("spectrum.csv", rows)?;
    let refined = ctx.refined_lambda0()?;
    let mut summary = vec![
        Quantity { quantity: "lambda0", value: l0.value },
        Quantity { quantity: "lambda0_xi", value: l0.xi },
        Quantity { quantity: "threshold", value: l0.value / p },
        Quantity { quantity: "p", value: p },
        Quantity { quantity: "unstable_members", value: unstable.members.len() as f64 },
        Quantity { quantity: "xi_samples", value: s.samples.len() as f64 },
        Quantity { quantity: "truncation", value: s.truncation as f64 },
    ];
    if let Some(r) = refined {
        summary.push(Quantity { quantity: "lambda0_refined", value: r });
    }
    ctx.out.csv("spectrum_summary.csv", summary)?;
    let segments: Vec<Value> = unstable
        .segments(&branches)
        .into_iter()
        .map(|(b, first, last)| serde_json::json!({"branch": b, "first": first, "last": last}))
        .collect();
    ctx.out.summary(
        "spectrum",
        &ctx.resolved,
        serde_json::json!({
            "lambda0": l0,
            "lambda0_refined": refined,
            "threshold": unstable.threshold,
            "unstable_members": unstable.members.len(),
            "unstable_segments": segments,
        }),
    )?;
    // the top branches by their maximum real part
    let mut order: Vec<usize> = (0..branches.len()).collect();
    let top = |b: usize| branches[b].values.iter().map(|v| v.re).fold(f64::NEG_INFINITY, f64::max);
    order.sort_by(|&a, &b| top(b).total_cmp(&top(a)));
    let mut plot = Plot::new(&format!("{}: Bloch spectrum", ctx.cfg.name), "xi", "Re lambda");
    for &b in order.iter().take(6) {
        let pts = s.samples.iter().zip(&branches[b].values).map(|(x, v)| (x.xi, v.re)).collect();
        plot = plot.add(&format!("branch {b}"), pts, Style::Dots);
    }
    ctx.out.svg("spectrum.svg", &plot)?;
    println!("lambda0 = {:.10} at xi = {:.6}; {} eigenvalues above lambda0/p", l0.value, l0.xi, unstable.members.len());
    Ok(Status::Completed)
}

#[derive(Serialize)]
struct ActivationRow {
    xi_index: usize,
    xi: f64,
    eigen_index: usize,
    branch: usize,
    re: f64,
    im: f64,
    mass: f64,
}

#[derive(Serialize)]
struct BlochNormRow {
    xi_index: usize,
    xi: f64,
    norm: f64,
}

fn lambdam(ctx: &Ctx) -> Result<Status> {
    let s = ctx.box_spectrum()?;
    let u0 = ctx.initial(&s)?;
    let outcome = lambda_m(&u0, &s, &ctx.cfg.activation())?;
    ctx.out.csv(
        "activation.csv",
        outcome.records().iter().map(|r| ActivationRow {
            xi_index: r.xi_index,
            xi: r.xi,
            eigen_index: r.eigen_index,
            branch: r.branch_id,
            re: r.eigenvalue.re,
            im: r.eigenvalue.im,
            mass: r.mass,
        }),
    )?;
    let field = bloch_transform(&u0);
    ctx.out.csv(
        "bloch_norms.csv",
        (0..ctx.grid.periods()).map(|m| BlochNormRow {
            xi_index: m,
            xi: ctx.grid.xi(m),
            norm: field.slice_norm(m),
        }),
    )?;
    ctx.out.summary("lambdam", &ctx.resolved, &outcome)?;
    match outcome.report() {
        Some(r) => {
            println!(
                "lambda_M = {:.10} (eigenvalue {:.6}{:+.6}i at xi = {:.6}), interval [{:.4}, {:.4}), lambda0 = {:.10}",
                r.lambda_m, r.eigenvalue.re, r.eigenvalue.im, r.xi, r.interval.xi_lo, r.interval.xi_hi, r.lambda0
            );
            Ok(Status::Completed)
        }
        None => {
            println!("no activated eigenvalue above lambda0/p");
            Ok(Status::HypothesesUnmet)
        }
    }
}

#[derive(Serialize)]
struct CountRow {
    xi_index: usize,
    xi: f64,
    count: usize,
}

fn hypothesis(ctx: &Ctx) -> Result<Status> {
    let lm = match ctx.cfg.experiment.lambda_m {
        Some(v) => v,
        None => {
            let s = ctx.box_spectrum()?;
            let u0 = ctx.initial(&s)?;
            match ctx.report("hypothesis", &s, &u0)? {
                Some(r) => r.lambda_m,
                None => return Ok(Status::HypothesesUnmet),
            }
        }
    };
    let s = bloch_spectrum(&ctx.op, &ctx.xi_grid()?, ctx.truncation)?;
    let part = match hypothesis_partition(&s, lm, ctx.cfg.p(), ctx.cfg.projection.eps_gap) {
        Ok(p) => p,
        Err(Error::Hypothesis(msg)) => {
            println!("hypotheses unmet: {msg}");
            ctx.out
                .summary("hypothesis", &ctx.resolved, serde_json::json!({"hypotheses_met": false, "reason": msg}))?;
            return Ok(Status::HypothesesUnmet);
        }
        Err(e) => return Err(e.into()),
    };
    ctx.out.csv(
        "counts.csv",
        s.samples.iter().zip(&part.counts).enumerate().map(|(m, (x, &c))| CountRow {
            xi_index: m,
            xi: x.xi,
            count: c,
        }),
    )?;
    ctx.out.csv("partition.csv", part.intervals.iter())?;
    ctx.out.summary("hypothesis", &ctx.resolved, &part)?;
    for w in &part.warnings {
        eprintln!("warning: eigenvalue {:.6}{:+.6}i at xi = {:.6} is within eps_gap of lambda_M", w.eigenvalue.re, w.eigenvalue.im, w.xi);
    }
    println!("lambda_M = {lm:.10}: {} intervals", part.intervals.len());
    Ok(Status::Completed)
}

#[derive(Serialize)]
struct GrowthRow {
    t: f64,
    norm: f64,
    projected_norm: f64,
    rho: f64,
}

fn linear(ctx: &Ctx) -> Result<Status> {
    let s = ctx.box_spectrum()?;
    let u0 = ctx.initial(&s)?;
    let Some(report) = ctx.report("linear", &s, &u0)? else {
        return Ok(Status::HypothesesUnmet);
    };
    let e = &ctx.cfg.experiment;
    let omega = report.lambda_m - e.omega_offset;
    let settings = SandwichSettings {
        horizon: e.horizon,
        samples: e.samples,
        tolerance: e.tolerance,
        ..Default::default()
    };
    let d = fit_growth_sandwich(&ctx.op, &u0, &s, &report, omega, &settings)?;
    ctx.out.csv(
        "growth.csv",
        (0..d.times.len()).map(|k| GrowthRow {
            t: d.times[k],
            norm: d.norms[k],
            projected_norm: d.projected_norms[k],
            rho: d.rho[k],
        }),
    )?;
    ctx.out
        .summary("linear", &ctx.resolved, serde_json::json!({"report": report, "diagnostics": d, "holds": d.holds()}))?;
    let plot = Plot::new(&format!("{}: linear growth", ctx.cfg.name), "t", "log norm")
        .add("ln |e^{Lt}u0|", d.times.iter().zip(&d.norms).map(|(t, n)| (*t, n.ln())).collect(), Style::Line)
        .add(
            "ln |P e^{Lt}u0|",
            d.times.iter().zip(&d.projected_norms).map(|(t, n)| (*t, n.ln())).collect(),
            Style::Line,
        )
        .add("omega t + ln C_lower", d.times.iter().map(|t| (*t, omega * t + d.c_lower.ln())).collect(), Style::Line)
        .add(
            "lambda_M t + ln C_upper",
            d.times.iter().map(|t| (*t, d.lambda_m * t + d.c_upper.ln())).collect(),
            Style::Line,
        );
    ctx.out.svg("growth.svg", &plot)?;
    println!(
        "r = {:.6} (omega - tol = {:.6}), R = {:.6} (lambda_M + tol = {:.6}): {}",
        d.rate_lower,
        omega - d.tolerance,
        d.rate_upper,
        d.lambda_m + d.tolerance,
        if d.holds() { "sandwich holds" } else { "sandwich VIOLATED" }
    );
    Ok(Status::Completed)
}

#[derive(Serialize)]
struct DeltaRow {
    delta: f64,
    time: f64,
    norm_at_time: f64,
    linear_norm_at_time: f64,
    remainder: f64,
    rho_max: f64,
    rho_bound: Option<f64>,
    rho_holds: bool,
    overflow: bool,
    pass: bool,
}

#[derive(Serialize)]
struct TrajectoryRow {
    t: f64,
    l2: f64,
    h1: f64,
    h2: f64,
    rho: f64,
}

fn instability(ctx: &Ctx) -> Result<Status> {
    let s = ctx.box_spectrum()?;
    let u0 = ctx.initial(&s)?;
    let Some(report) = ctx.report("instability", &s, &u0)? else {
        return Ok(Status::HypothesesUnmet);
    };
    let e = &ctx.cfg.experiment;
    let settings = InstabilitySettings {
        eta: e.eta,
        deltas: e.deltas.clone(),
        lambda0: ctx.refined_lambda0()?,
        evolve: ctx.cfg.evolve()?,
        ..Default::default()
    };
    let outcome = instability_experiment(&ctx.op, ctx.cfg.nonlinearity(), &u0, &report, &settings)?;
    let v = match outcome {
        InstabilityOutcome::Verdict(v) => v,
        unmet @ InstabilityOutcome::HypothesesUnmet { .. } => {
            println!("hypotheses unmet: lambda_M <= lambda0/p");
            ctx.out.summary("instability", &ctx.resolved, &unmet)?;
            return Ok(Status::HypothesesUnmet);
        }
    };
    ctx.out.csv(
        "instability.csv",
        v.runs.iter().map(|r| DeltaRow {
            delta: r.delta,
            time: r.time,
            norm_at_time: r.norm_at_time,
            linear_norm_at_time: r.linear_norm_at_time,
            remainder: r.remainder,
            rho_max: r.rho_max,
            rho_bound: r.rho_bound,
            rho_holds: r.rho_holds,
            overflow: r.overflow,
            pass: r.pass,
        }),
    )?;
    let mut plot = Plot::new(&format!("{}: |u_delta(t)|", ctx.cfg.name), "t", "log10 |u|");
    for (k, r) in v.runs.iter().enumerate() {
        let traj = &r.trajectory;
        let rho = rho_series(traj, v.lambda_m);
        ctx.out.csv(
            &format!("trajectory_{k}.csv"),
            (0..traj.times.len()).map(|i| TrajectoryRow {
                t: traj.times[i],
                l2: traj.norms[i].l2,
                h1: traj.norms[i].h1,
                h2: traj.norms[i].h2,
                rho: rho[i],
            }),
        )?;
        plot = plot.add(
            &format!("delta = {:.0e}", r.delta),
            traj.times.iter().zip(&traj.norms).map(|(t, n)| (*t, n.l2.log10())).collect(),
            Style::Line,
        );
    }
    let t_max = v.runs.iter().map(|r| r.time).fold(0.0, f64::max);
    plot = plot.add("epsilon", vec![(0.0, v.epsilon.log10()), (t_max, v.epsilon.log10())], Style::Line);
    ctx.out.svg("instability.svg", &plot)?;
    ctx.out.summary("instability", &ctx.resolved, &v)?;
    for r in &v.runs {
        println!(
            "delta = {:.1e}: T = ln(2 eta/delta)/lambda_M = {:.6}, |u(T)| = {:.6e}, epsilon = {:.6e}: {}",
            r.delta,
            r.time,
            r.norm_at_time,
            v.epsilon,
            if r.pass { "pass" } else { "FAIL" }
        );
    }
    println!("unstable: {} (spread {:.3})", v.unstable, v.spread);
    Ok(Status::Completed)
}

#[derive(Serialize)]
struct DampingRow {
    t: f64,
    l2: f64,
    h1: f64,
    h2: f64,
    mean_re: f64,
    mean_im: f64,
}

fn dissipative(ctx: &Ctx) -> Result<Status> {
    let s = ctx.box_spectrum()?;
    let u0 = ctx.initial(&s)?;
    let Some(report) = ctx.report("dissipative", &s, &u0)? else {
        return Ok(Status::HypothesesUnmet);
    };
    let e = &ctx.cfg.experiment;
    let settings = DissipativeSettings {
        eta: e.eta,
        delta: e.delta,
        theta: e.theta,
        t_end: e.t_end,
        lambda0: ctx.refined_lambda0()?,
        cap: e.damping_cap,
        halve: true,
        evolve: ctx.cfg.evolve()?,
    };
    let d = dissipative_experiment(&ctx.op, ctx.cfg.nonlinearity(), &u0, &report, &settings)?;
    let traj = &d.trajectory;
    ctx.out.csv(
        "damping.csv",
        (0..traj.times.len()).map(|i| DampingRow {
            t: traj.times[i],
            l2: traj.norms[i].l2,
            h1: traj.norms[i].h1,
            h2: traj.norms[i].h2,
            mean_re: traj.means[i][0].re,
            mean_im: traj.means[i][0].im,
        }),
    )?;
    ctx.out.summary("dissipative", &ctx.resolved, &d)?;
    let plot = Plot::new(&format!("{}: damping run", ctx.cfg.name), "t", "log10 norm")
        .add("H1", traj.times.iter().zip(&traj.norms).map(|(t, n)| (*t, n.h1.log10())).collect(), Style::Line)
        .add("H2", traj.times.iter().zip(&traj.norms).map(|(t, n)| (*t, n.h2.log10())).collect(), Style::Line);
    ctx.out.svg("damping.svg", &plot)?;
    println!(
        "damping C = {:.6e} (dt/2 change {:.2e}), residual {:.2e}, mean drift {:.2e}",
        d.damping.constant,
        d.damping_change.unwrap_or(f64::NAN),
        d.damping.max_residual,
        d.mean_drift
    );
    if !d.damping.finite {
        eprintln!("damping failure: no finite constant below {:e}", settings.cap);
        return Ok(Status::Failed);
    }
    if !d.hypotheses_met {
        println!(
            "hypotheses unmet: (lambda0 + theta)/(p - 1) = {:.6} >= lambda_M = {:.6}",
            (d.lambda0 + d.theta) / (d.p - 1.0),
            d.lambda_m
        );
        return Ok(Status::HypothesesUnmet);
    }
    if let Some(b) = &d.bound {
        println!("dissipative bound: comparison {:.6} ({}), root {:?}", b.comparison, if b.certified { "certified" } else { "not certified" }, b.root);
    }
    Ok(Status::Completed)
}

#[derive(Serialize)]
struct CheckRow {
    name: &'static str,
    value: f64,
    tolerance: f64,
    passed: bool,
}

pub fn selftest(out: Option<PathBuf>) -> Result<Status> {
    let checks = floquet_core::selftest::run_all();
    for c in &checks {
        println!("{} {} = {:.3e} (tol {:.0e})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.tolerance);
    }
    if let Some(root) = out {
        let dir = OutDir::create(root.join("selftest"))?;
        dir.csv(
            "selftest.csv",
            checks.iter().map(|c| CheckRow {
                name: c.name,
                value: c.value,
                tolerance: c.tolerance,
                passed: c.passed,
            }),
        )?;
    }
    Ok(if checks.iter().all(|c| c.passed) { Status::Completed } else { Status::Failed })
}
