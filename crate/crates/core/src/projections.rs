//! Riesz projections of Bloch operators, the activation rate λ_M(u₀), the
//! Bloch-space projections P and I − P′, and prepared initial data.

use crate::bloch::{bloch_transform, inverse_bloch};
use crate::error::{Error, Result};
use crate::grid::SampledFunction;
use crate::linalg::{clusters, eigen_sorted, inverse, mat_vec, solve, spectral_norm, vec_norm, CMat, CLUSTER_TOL};
use crate::operator::{assemble_bloch_matrix, PeriodicOperator};
use crate::spectra::{branch_of, lambda0, track_branches, Branch, MarginalWarning, SpectrumSampling, XiGrid};
use faer::Mat;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum ContourShape {
    Circle { center: [f64; 2], radius: f64 },
    Rectangle { lower_left: [f64; 2], upper_right: [f64; 2] },
}

/// A closed, positively oriented curve with a fixed quadrature rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub shape: ContourShape,
    pub nodes: usize,
    /// Minimum admissible distance between an eigenvalue and the curve.
    pub gap: f64,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on
/// the Legendre recurrence.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = vec![(0.0, 0.0); n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out[i] = (-x, w);
        out[n - 1 - i] = (x, w);
    }
    out
}

fn segment_distance(z: C64, a: C64, b: C64) -> f64 {
    let d = b - a;
    let t = ((z - a) * d.conj()).re / d.norm_sqr();
    (z - (a + d * t.clamp(0.0, 1.0))).norm()
}

impl Contour {
    pub const MIN_NODES: usize = 64;
    pub const DEFAULT_GAP: f64 = 1e-6;

    pub fn circle(center: C64, radius: f64, nodes: usize) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Domain(format!("circle radius must be positive, got {radius}")));
        }
        Self::checked(
            ContourShape::Circle {
                center: [center.re, center.im],
                radius,
            },
            nodes,
        )
    }

    pub fn rectangle(lower_left: C64, upper_right: C64, nodes: usize) -> Result<Self> {
        if !(upper_right.re > lower_left.re && upper_right.im > lower_left.im) {
            return Err(Error::Domain("rectangle corners are not ordered".into()));
        }
        Self::checked(
            ContourShape::Rectangle {
                lower_left: [lower_left.re, lower_left.im],
                upper_right: [upper_right.re, upper_right.im],
            },
            nodes,
        )
    }

    fn checked(shape: ContourShape, nodes: usize) -> Result<Self> {
        if nodes < Self::MIN_NODES {
            return Err(Error::Domain(format!(
                "contour needs at least {} nodes, got {nodes}",
                Self::MIN_NODES
            )));
        }
        Ok(Self {
            shape,
            nodes,
            gap: Self::DEFAULT_GAP,
        })
    }

    pub fn with_gap(mut self, gap: f64) -> Self {
        self.gap = gap;
        self
    }

    fn corners(&self) -> Option<[C64; 4]> {
        match self.shape {
            ContourShape::Rectangle { lower_left: a, upper_right: b } => Some([
                C64::new(a[0], a[1]),
                C64::new(b[0], a[1]),
                C64::new(b[0], b[1]),
                C64::new(a[0], b[1]),
            ]),
            ContourShape::Circle { .. } => None,
        }
    }

    /// Nodes `ζ_k` and weights `w_k` with `∮ f dζ ≈ Σ w_k f(ζ_k)`: the
    /// trapezoid rule on circles, Gauss–Legendre on each rectangle side.
    pub fn quadrature(&self) -> Vec<(C64, C64)> {
        match self.shape {
            ContourShape::Circle { center, radius } => {
                let c = C64::new(center[0], center[1]);
                let n = self.nodes as f64;
                (0..self.nodes)
                    .map(|k| {
                        let e = C64::from_polar(1.0, 2.0 * PI * k as f64 / n);
                        (c + e * radius, C64::new(0.0, 2.0 * PI / n) * e * radius)
                    })
                    .collect()
            }
            ContourShape::Rectangle { .. } => {
                let corners = self.corners().expect("rectangle");
                let rule = gauss_legendre(self.nodes.div_ceil(4));
                let mut out = Vec::with_capacity(4 * rule.len());
                for s in 0..4 {
                    let (a, b) = (corners[s], corners[(s + 1) % 4]);
                    let half = (b - a) * 0.5;
                    let mid = (a + b) * 0.5;
                    out.extend(rule.iter().map(|&(x, w)| (mid + half * x, half * w)));
                }
                out
            }
        }
    }

    pub fn contains(&self, z: C64) -> bool {
        match self.shape {
            ContourShape::Circle { center, radius } => (z - C64::new(center[0], center[1])).norm() < radius,
            ContourShape::Rectangle { lower_left: a, upper_right: b } => {
                z.re > a[0] && z.re < b[0] && z.im > a[1] && z.im < b[1]
            }
        }
    }

    /// Distance from `z` to the curve.
    pub fn distance(&self, z: C64) -> f64 {
        match self.shape {
            ContourShape::Circle { center, radius } => ((z - C64::new(center[0], center[1])).norm() - radius).abs(),
            ContourShape::Rectangle { .. } => {
                let c = self.corners().expect("rectangle");
                (0..4)
                    .map(|s| segment_distance(z, c[s], c[(s + 1) % 4]))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// `inf Re Γ`, the contour floor.
    pub fn floor(&self) -> f64 {
        match self.shape {
            ContourShape::Circle { center, radius } => center[0] - radius,
            ContourShape::Rectangle { lower_left, .. } => lower_left[0],
        }
    }

    fn check_clearance(&self, eigenvalues: &[C64]) -> Result<()> {
        for &ev in eigenvalues {
            let d = self.distance(ev);
            if d < self.gap {
                let zeta = self
                    .quadrature()
                    .into_iter()
                    .map(|(z, _)| z)
                    .min_by(|a, b| (a - ev).norm().total_cmp(&(b - ev).norm()))
                    .unwrap_or(ev);
                return Err(Error::Contour {
                    zeta,
                    eigenvalue: ev,
                    distance: d,
                });
            }
        }
        Ok(())
    }
}

/// `(1/2πi) ∮_Γ (ζ − A)^{-1} v dζ` by the contour's quadrature rule.
pub fn riesz_apply(a: &CMat, gamma: &Contour, v: &[C64]) -> Result<Vec<C64>> {
    let n = a.nrows();
    if v.len() != n {
        return Err(Error::Shape(format!("vector of length {} for a {n}x{n} matrix", v.len())));
    }
    let evs = eigen_sorted(a).ok_or(Error::Eigensolver { xi: f64::NAN })?;
    gamma.check_clearance(&evs.values)?;
    let mut out = vec![ZERO; n];
    let scale = C64::new(0.0, 2.0 * PI).inv();
    for (zeta, w) in gamma.quadrature() {
        let shifted = Mat::from_fn(n, n, |i, j| if i == j { zeta - a[(i, j)] } else { -a[(i, j)] });
        let x = solve(&shifted, v);
        let f = w * scale;
        for (o, xi) in out.iter_mut().zip(&x) {
            *o += f * xi;
        }
    }
    Ok(out)
}

/// Riesz projection of `v` for the truncated `L_ξ`.
pub fn spectral_projection(
    op: &PeriodicOperator,
    xi: f64,
    truncation: usize,
    gamma: &Contour,
    v: &[C64],
) -> Result<Vec<C64>> {
    let a = assemble_bloch_matrix(op, xi, truncation)?;
    riesz_apply(&a.matrix, gamma, v).map_err(|e| match e {
        Error::Eigensolver { .. } => Error::Eigensolver { xi },
        other => other,
    })
}

/// Spectral projectors built from right eigenvectors `V` and the rows of
/// `W = V^{-1}`.
#[derive(Debug, Clone)]
pub struct EigenProjector {
    pub values: Vec<C64>,
    right: CMat,
    left: CMat,
}

impl EigenProjector {
    pub fn new(values: Vec<C64>, vectors: CMat) -> Self {
        let left = inverse(&vectors);
        Self {
            values,
            right: vectors,
            left,
        }
    }

    pub fn from_matrix(a: &CMat) -> Option<Self> {
        let e = eigen_sorted(a)?;
        Some(Self::new(e.values, e.vectors))
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Eigen-coordinates `W v`.
    pub fn coordinates(&self, v: &[C64]) -> Vec<C64> {
        mat_vec(&self.left, v)
    }

    /// `Σ_{i ∈ idx} V_i c_i` for precomputed coordinates `c`.
    pub fn synthesize(&self, idx: &[usize], coords: &[C64]) -> Vec<C64> {
        let n = self.dim();
        let mut out = vec![ZERO; n];
        for &i in idx {
            let ci = coords[i];
            for (r, o) in out.iter_mut().enumerate() {
                *o += self.right[(r, i)] * ci;
            }
        }
        out
    }

    pub fn project(&self, idx: &[usize], v: &[C64]) -> Vec<C64> {
        self.synthesize(idx, &self.coordinates(v))
    }

    /// Operator 2-norm of the projector onto `idx`.
    pub fn norm(&self, idx: &[usize]) -> f64 {
        let n = self.dim();
        let p = Mat::from_fn(n, n, |r, c| idx.iter().map(|&i| self.right[(r, i)] * self.left[(i, c)]).sum());
        spectral_norm(&p)
    }

    pub fn enclosed(&self, gamma: &Contour) -> Vec<usize> {
        (0..self.dim()).filter(|&i| gamma.contains(self.values[i])).collect()
    }

    pub fn clusters(&self) -> Vec<Vec<usize>> {
        clusters(&self.values, CLUSTER_TOL)
    }
}

/// Eigenbasis projection of `v` onto the eigenvalues enclosed by `gamma`.
pub fn eigenbasis_projection(
    op: &PeriodicOperator,
    xi: f64,
    truncation: usize,
    gamma: &Contour,
    v: &[C64],
) -> Result<Vec<C64>> {
    let a = assemble_bloch_matrix(op, xi, truncation)?;
    let p = EigenProjector::from_matrix(&a.matrix).ok_or(Error::Eigensolver { xi })?;
    gamma.check_clearance(&p.values)?;
    Ok(p.project(&p.enclosed(gamma), v))
}

fn sample_projector(s: &SpectrumSampling, m: usize) -> EigenProjector {
    let sample = &s.samples[m];
    EigenProjector::new(sample.values.clone(), sample.vectors.clone())
}

fn check_matching(u0: &SampledFunction, s: &SpectrumSampling) -> Result<()> {
    let want = XiGrid::for_box(u0.grid());
    if s.xi_grid != want {
        return Err(Error::Shape(format!(
            "spectrum sampled on {} exponents, box realizes {}",
            s.xi_grid.len(),
            want.len()
        )));
    }
    if s.components != u0.components() {
        return Err(Error::Shape("component count differs from spectrum".into()));
    }
    if 2 * s.truncation + 2 > u0.grid().points_per_period() {
        return Err(Error::Domain(format!(
            "truncation {} needs more than {} points per period",
            s.truncation,
            u0.grid().points_per_period()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivationSettings {
    pub p: f64,
    /// Absolute activation threshold; `None` means `1e-8 ‖u₀‖_{L²}`.
    pub tau_act: Option<f64>,
    pub contour_nodes: usize,
    pub eps_gap: f64,
}

impl Default for ActivationSettings {
    fn default() -> Self {
        Self {
            p: 2.0,
            tau_act: None,
            contour_nodes: 128,
            eps_gap: 1e-6,
        }
    }
}

/// `‖P̃_λ(ξ_m) ǔ₀(ξ_m)‖` for one sampled eigenvalue (its cluster, when the
/// eigenvalue is numerically repeated).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActivationRecord {
    pub xi_index: usize,
    pub xi: f64,
    pub eigen_index: usize,
    pub branch_id: usize,
    pub eigenvalue: C64,
    pub mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiInterval {
    pub first: usize,
    pub last: usize,
    pub xi_lo: f64,
    pub xi_hi: f64,
}

impl XiInterval {
    pub fn len(&self) -> usize {
        self.last + 1 - self.first
    }

    pub fn is_empty(&self) -> bool {
        self.last < self.first
    }

    pub fn contains(&self, m: usize) -> bool {
        m >= self.first && m <= self.last
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectionReport {
    pub lambda_m: f64,
    pub lambda0: f64,
    pub p: f64,
    pub eigenvalue: C64,
    pub xi: f64,
    pub xi_index: usize,
    pub branch_id: usize,
    pub interval: XiInterval,
    /// Eigenvalue index of the branch at each ξ of the interval.
    pub branch_indices: Vec<usize>,
    pub contour: Contour,
    /// `inf Re Γ` of the reported contour.
    pub contour_floor: f64,
    /// Infimum over the interval of the branch activation mass.
    pub activation_mass: f64,
    /// Activation mass at the attaining ξ recomputed by contour quadrature.
    pub contour_mass: f64,
    pub tau_act: f64,
    /// Supremum over the interval of the measured `‖P̃(ξ)‖`.
    pub projector_norm: f64,
    pub crossing_in_interval: bool,
    #[serde(skip)]
    pub records: Vec<ActivationRecord>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum ProjectionOutcome {
    Activated(ProjectionReport),
    /// No activated eigenvalue above `λ₀/p`.
    NotActivated {
        lambda0: f64,
        threshold: f64,
        tau_act: f64,
        best: Option<ActivationRecord>,
        #[serde(skip)]
        records: Vec<ActivationRecord>,
    },
}

impl ProjectionOutcome {
    pub fn report(&self) -> Option<&ProjectionReport> {
        match self {
            ProjectionOutcome::Activated(r) => Some(r),
            ProjectionOutcome::NotActivated { .. } => None,
        }
    }

    pub fn records(&self) -> &[ActivationRecord] {
        match self {
            ProjectionOutcome::Activated(r) => &r.records,
            ProjectionOutcome::NotActivated { records, .. } => records,
        }
    }
}

/// Activation masses of every sampled eigenvalue, ordered by ξ then
/// eigenvalue index.
pub fn activation_masses(
    u0: &SampledFunction,
    s: &SpectrumSampling,
    branches: &[Branch],
) -> Result<Vec<ActivationRecord>> {
    check_matching(u0, s)?;
    let field = bloch_transform(u0);
    let per_xi: Vec<Vec<ActivationRecord>> = (0..s.samples.len())
        .into_par_iter()
        .map(|m| {
            let proj = sample_projector(s, m);
            let v = field.truncated_vector(m, s.truncation);
            let coords = proj.coordinates(&v);
            let mut masses = vec![0.0; proj.dim()];
            for cluster in proj.clusters() {
                let mass = if cluster.len() == 1 {
                    // unit-norm eigenvector
                    coords[cluster[0]].norm()
                } else {
                    vec_norm(&proj.synthesize(&cluster, &coords))
                };
                for &i in &cluster {
                    masses[i] = mass;
                }
            }
            (0..proj.dim())
                .map(|i| ActivationRecord {
                    xi_index: m,
                    xi: s.samples[m].xi,
                    eigen_index: i,
                    branch_id: branch_of(branches, m, i).unwrap_or(usize::MAX),
                    eigenvalue: proj.values[i],
                    mass: masses[i],
                })
                .collect()
        })
        .collect();
    Ok(per_xi.into_iter().flatten().collect())
}

/// λ_M(u₀): the largest `Re λ` among sampled eigenvalues whose Riesz
/// projection of `ǔ₀` carries mass above `τ_act`.
pub fn lambda_m(u0: &SampledFunction, s: &SpectrumSampling, settings: &ActivationSettings) -> Result<ProjectionOutcome> {
    if !(settings.p > 1.0) {
        return Err(Error::Domain(format!("p must exceed 1, got {}", settings.p)));
    }
    let branches = track_branches(s, None);
    let records = activation_masses(u0, s, &branches)?;
    let tau = settings.tau_act.unwrap_or(1e-8 * u0.l2_norm());
    let l0 = lambda0(s).value;
    let threshold = l0 / settings.p;
    let best = records
        .iter()
        .filter(|r| r.mass > tau)
        .fold(None::<&ActivationRecord>, |b, r| match b {
            Some(b) if b.eigenvalue.re >= r.eigenvalue.re => Some(b),
            _ => Some(r),
        })
        .copied();
    let Some(best) = best.filter(|b| b.eigenvalue.re > threshold) else {
        return Ok(ProjectionOutcome::NotActivated {
            lambda0: l0,
            threshold,
            tau_act: tau,
            best,
            records,
        });
    };

    let n_eig = s.eigen_count();
    let mass_at = |m: usize, b: &Branch| records[m * n_eig + b.indices[m]].mass;
    let branch = &branches[best.branch_id];
    let (mut first, mut last) = (best.xi_index, best.xi_index);
    while first > 0 && mass_at(first - 1, branch) > tau {
        first -= 1;
    }
    while last + 1 < s.samples.len() && mass_at(last + 1, branch) > tau {
        last += 1;
    }
    let h = s.xi_grid.spacing();
    let xs = s.xi_grid.values();
    let interval = XiInterval {
        first,
        last,
        xi_lo: xs[first],
        xi_hi: xs[last] + h,
    };
    let branch_indices: Vec<usize> = (first..=last).map(|m| branch.indices[m]).collect();
    let activation_mass = (first..=last).map(|m| mass_at(m, branch)).fold(f64::INFINITY, f64::min);
    let crossing_in_interval = (first + 1..=last).any(|m| branch.crossing[m]);

    let projector_norm = (first..=last)
        .into_par_iter()
        .map(|m| {
            let proj = sample_projector(s, m);
            let cluster = proj
                .clusters()
                .into_iter()
                .find(|c| c.contains(&branch.indices[m]))
                .expect("index belongs to a cluster");
            proj.norm(&cluster)
        })
        .reduce(|| 0.0, f64::max);

    // Circle around the attaining eigenvalue, half-way to its nearest
    // neighbour outside the cluster.
    let values = &s.samples[best.xi_index].values;
    let ev = best.eigenvalue;
    let scale = 1.0 + ev.norm();
    let nearest = values
        .iter()
        .map(|v| (v - ev).norm())
        .filter(|&d| d > CLUSTER_TOL * scale)
        .fold(f64::INFINITY, f64::min);
    let radius = if nearest.is_finite() { 0.5 * nearest } else { 0.5 * scale };
    let contour = Contour::circle(ev, radius, settings.contour_nodes)?.with_gap(settings.eps_gap.min(0.25 * radius));
    let field = bloch_transform(u0);
    let a = assemble_bloch_matrix(&s.operator, best.xi, s.truncation)?;
    let contour_mass = vec_norm(&riesz_apply(&a.matrix, &contour, &field.truncated_vector(best.xi_index, s.truncation))?);

    Ok(ProjectionOutcome::Activated(ProjectionReport {
        lambda_m: best.eigenvalue.re,
        lambda0: l0,
        p: settings.p,
        eigenvalue: ev,
        xi: best.xi,
        xi_index: best.xi_index,
        branch_id: best.branch_id,
        interval,
        branch_indices,
        contour_floor: contour.floor(),
        contour,
        activation_mass,
        contour_mass,
        tau_act: tau,
        projector_norm,
        crossing_in_interval,
        records,
    }))
}

/// `Pu₀`: the branch projection of `ǔ₀` on the report's interval, zero
/// elsewhere.
pub fn project_p(u0: &SampledFunction, s: &SpectrumSampling, report: &ProjectionReport) -> Result<SampledFunction> {
    check_matching(u0, s)?;
    if report.interval.is_empty() || report.branch_indices.len() != report.interval.len() {
        return Err(Error::Domain("projection interval is empty".into()));
    }
    let field = bloch_transform(u0);
    let mut out = crate::bloch::BlochField::zeros(u0.grid(), u0.components());
    for (k, m) in (report.interval.first..=report.interval.last).enumerate() {
        let proj = sample_projector(s, m);
        let idx = report.branch_indices[k];
        let cluster = proj
            .clusters()
            .into_iter()
            .find(|c| c.contains(&idx))
            .expect("index belongs to a cluster");
        let v = proj.project(&cluster, &field.truncated_vector(m, s.truncation));
        out.set_truncated_vector(m, s.truncation, &v)?;
    }
    inverse_bloch(&out)
}

#[derive(Debug, Clone)]
pub struct ComplementOutcome {
    pub function: SampledFunction,
    pub warnings: Vec<MarginalWarning>,
}

/// `(I − P′)u₀`, where `P′` projects at each ξ onto the eigenvalues with
/// `Re λ > λ_M`. Harmonics beyond the truncation pass through unchanged.
pub fn complement_pprime(
    u0: &SampledFunction,
    s: &SpectrumSampling,
    lambda_m: f64,
    eps_gap: f64,
) -> Result<ComplementOutcome> {
    check_matching(u0, s)?;
    let mut field = bloch_transform(u0);
    let mut warnings = Vec::new();
    for m in 0..s.samples.len() {
        let sample = &s.samples[m];
        for &v in &sample.values {
            if (v.re - lambda_m).abs() < eps_gap {
                warnings.push(MarginalWarning {
                    xi_index: m,
                    xi: sample.xi,
                    eigenvalue: v,
                });
            }
        }
        let idx: Vec<usize> = (0..sample.values.len()).filter(|&i| sample.values[i].re > lambda_m).collect();
        if idx.is_empty() {
            continue;
        }
        let proj = sample_projector(s, m);
        let v = field.truncated_vector(m, s.truncation);
        let pv = proj.project(&idx, &v);
        let rest: Vec<C64> = v.iter().zip(&pv).map(|(a, b)| a - b).collect();
        field.write_truncated(m, s.truncation, &rest)?;
    }
    Ok(ComplementOutcome {
        function: inverse_bloch(&field)?,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreparedOptions {
    /// Keep only the real part (adds the conjugate packet at `-ξ`).
    pub real: bool,
    /// Rescale to unit L² norm on the box.
    pub normalize: bool,
}

impl Default for PreparedOptions {
    fn default() -> Self {
        Self {
            real: false,
            normalize: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PreparedData {
    pub function: SampledFunction,
    pub warnings: Vec<String>,
}

/// `f₀ = inverse_bloch(φ)`, with `φ(ξ)` the branch eigenvector on the
/// interval (phases aligned to the previous ξ) and zero elsewhere.
pub fn prepared_initial_data(
    grid: crate::grid::SpatialGrid,
    s: &SpectrumSampling,
    branches: &[Branch],
    branch_id: usize,
    first: usize,
    last: usize,
    options: PreparedOptions,
) -> Result<PreparedData> {
    if XiGrid::for_box(grid) != s.xi_grid {
        return Err(Error::Shape("spectrum and box use different xi samples".into()));
    }
    if first > last || last >= s.samples.len() {
        return Err(Error::Domain(format!("invalid xi index range {first}..={last}")));
    }
    let branch = branches
        .iter()
        .find(|b| b.id == branch_id)
        .ok_or_else(|| Error::Domain(format!("no branch with id {branch_id}")))?;
    let mut warnings = Vec::new();
    if (first + 1..=last).any(|m| branch.crossing[m]) {
        warnings.push(format!("branch {branch_id} is crossing-suspect inside the interval"));
    }
    let mut field = crate::bloch::BlochField::zeros(grid, s.components);
    let mut prev: Option<Vec<C64>> = None;
    for m in first..=last {
        let mut v = s.eigenvector(m, branch.indices[m]);
        let phase = match &prev {
            None => {
                let big = v.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or(ZERO);
                big.conj() / big.norm()
            }
            Some(p) => {
                let overlap: C64 = p.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                if overlap.norm() < 1e-2 {
                    return Err(Error::DegenerateContinuation {
                        xi: s.samples[m].xi,
                        overlap: overlap.norm(),
                    });
                }
                overlap.conj() / overlap.norm()
            }
        };
        for z in v.iter_mut() {
            *z *= phase;
        }
        field.set_truncated_vector(m, s.truncation, &v)?;
        prev = Some(v);
    }
    let mut f = inverse_bloch(&field)?;
    if options.real {
        f = f.real_part();
    }
    if options.normalize {
        f = f.normalized();
    }
    Ok(PreparedData { function: f, warnings })
}
