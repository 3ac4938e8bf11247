//! Bloch eigenvalue sweeps over ξ, branch tracking, λ₀, Σ_U and the
//! constant-count partition of ξ above λ_M.

use crate::error::{Error, Result};
use crate::grid::SpatialGrid;
use crate::linalg::{eigen_sorted, CMat};
use crate::operator::{assemble_bloch_matrix, PeriodicOperator};
use crate::projections::Contour;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

/// Uniform Floquet-exponent samples `ξ_m = -1/2 + m/N_ξ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct XiGrid {
    values: Vec<f64>,
}

impl XiGrid {
    pub fn uniform(count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::Domain("xi grid needs at least one sample".into()));
        }
        Ok(Self {
            values: (0..count).map(|m| -0.5 + m as f64 / count as f64).collect(),
        })
    }

    /// The exponents realized by a periodized box.
    pub fn for_box(grid: SpatialGrid) -> Self {
        Self {
            values: grid.xi_samples(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.values.len() as f64
    }
}

/// Eigenpairs of the truncated `L_ξ` at one exponent.
#[derive(Debug, Clone)]
pub struct XiSample {
    pub xi: f64,
    pub values: Vec<C64>,
    /// Unit-norm eigenvectors in harmonic coordinates `-M..=M`, one per column.
    pub vectors: CMat,
}

#[derive(Debug, Clone)]
pub struct SpectrumSampling {
    pub operator: PeriodicOperator,
    pub xi_grid: XiGrid,
    pub truncation: usize,
    pub components: usize,
    pub samples: Vec<XiSample>,
}

impl SpectrumSampling {
    pub fn eigen_count(&self) -> usize {
        self.components * (2 * self.truncation + 1)
    }

    pub fn eigenvector(&self, m: usize, i: usize) -> Vec<C64> {
        let v = &self.samples[m].vectors;
        (0..v.nrows()).map(|r| v[(r, i)]).collect()
    }
}

pub fn bloch_spectrum(op: &PeriodicOperator, xi_grid: &XiGrid, truncation: usize) -> Result<SpectrumSampling> {
    let samples = xi_grid
        .values()
        .par_iter()
        .map(|&xi| {
            let a = assemble_bloch_matrix(op, xi, truncation)?;
            let e = eigen_sorted(&a.matrix).ok_or(Error::Eigensolver { xi })?;
            Ok(XiSample {
                xi,
                values: e.values,
                vectors: e.vectors,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumSampling {
        operator: op.clone(),
        xi_grid: xi_grid.clone(),
        truncation,
        components: op.components(),
        samples,
    })
}

/// An eigenvalue curve `λ(ξ_m)` followed across the ξ grid.
#[derive(Debug, Clone, Serialize)]
pub struct Branch {
    pub id: usize,
    pub values: Vec<C64>,
    /// Position of this branch in the sorted eigenvalue list at each ξ.
    pub indices: Vec<usize>,
    /// Set at `m` when the jump from `m-1` exceeds the continuity threshold.
    pub crossing: Vec<bool>,
}

fn median_gap(values: &[C64]) -> f64 {
    let mut distinct: Vec<C64> = Vec::with_capacity(values.len());
    for &v in values {
        let scale = 1.0 + v.norm();
        if !distinct.iter().any(|d| (d - v).norm() <= 1e-9 * scale) {
            distinct.push(v);
        }
    }
    let mut gaps: Vec<f64> = distinct
        .iter()
        .enumerate()
        .filter_map(|(i, a)| {
            distinct
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, b)| (a - b).norm())
                .min_by(f64::total_cmp)
        })
        .collect();
    if gaps.is_empty() {
        return f64::INFINITY;
    }
    gaps.sort_by(f64::total_cmp);
    gaps[gaps.len() / 2]
}

/// Greedy nearest-neighbour continuation between adjacent ξ samples: all
/// (branch, eigenvalue) pairs are ranked by distance and matched in order.
/// A branch is flagged where its step exceeds `threshold` (default: ten
/// times the median nearest-neighbour gap among distinct eigenvalues at the
/// destination ξ).
pub fn track_branches(s: &SpectrumSampling, threshold: Option<f64>) -> Vec<Branch> {
    let n_xi = s.samples.len();
    let n = s.eigen_count();
    let mut branches: Vec<Branch> = (0..n)
        .map(|i| Branch {
            id: i,
            values: vec![s.samples[0].values[i]],
            indices: vec![i],
            crossing: vec![false],
        })
        .collect();
    for m in 1..n_xi {
        let next = &s.samples[m].values;
        let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
        for (b, br) in branches.iter().enumerate() {
            let last = *br.values.last().expect("nonempty");
            for (i, &v) in next.iter().enumerate() {
                pairs.push(((v - last).norm(), b, i));
            }
        }
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        let mut taken_b = vec![false; n];
        let mut taken_i = vec![false; n];
        let mut assign = vec![0usize; n];
        let mut left = n;
        for (_, b, i) in pairs {
            if left == 0 {
                break;
            }
            if !taken_b[b] && !taken_i[i] {
                taken_b[b] = true;
                taken_i[i] = true;
                assign[b] = i;
                left -= 1;
            }
        }
        let tau = threshold.unwrap_or_else(|| 10.0 * median_gap(next));
        for (b, br) in branches.iter_mut().enumerate() {
            let i = assign[b];
            let step = (next[i] - *br.values.last().expect("nonempty")).norm();
            br.values.push(next[i]);
            br.indices.push(i);
            br.crossing.push(step > tau);
        }
    }
    branches
}

/// Looks up which branch holds eigenvalue `i` at ξ index `m`.
pub fn branch_of(branches: &[Branch], m: usize, i: usize) -> Option<usize> {
    branches.iter().position(|b| b.indices[m] == i)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lambda0 {
    pub value: f64,
    pub xi: f64,
    pub xi_index: usize,
    pub eigen_index: usize,
    pub eigenvalue: C64,
}

/// Largest real part over all sampled eigenvalues; the first attaining
/// `(ξ, eigenvalue)` in grid order is reported.
pub fn lambda0(s: &SpectrumSampling) -> Lambda0 {
    let mut best: Option<Lambda0> = None;
    for (m, sample) in s.samples.iter().enumerate() {
        for (i, &v) in sample.values.iter().enumerate() {
            if best.is_none_or(|b| v.re > b.value) {
                best = Some(Lambda0 {
                    value: v.re,
                    xi: sample.xi,
                    xi_index: m,
                    eigen_index: i,
                    eigenvalue: v,
                });
            }
        }
    }
    best.expect("spectrum has at least one sample")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralPoint {
    pub xi_index: usize,
    pub xi: f64,
    pub eigen_index: usize,
    pub eigenvalue: C64,
}

#[derive(Debug, Clone, Serialize)]
pub struct UnstableSet {
    pub lambda0: f64,
    pub threshold: f64,
    pub members: Vec<SpectralPoint>,
}

impl UnstableSet {
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Maximal runs of consecutive ξ indices along each branch that stay in
    /// Σ_U, as `(branch id, first index, last index)`.
    pub fn segments(&self, branches: &[Branch]) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for b in branches {
            let inside: Vec<bool> = b.values.iter().map(|v| v.re > self.threshold).collect();
            let mut m = 0;
            while m < inside.len() {
                if inside[m] {
                    let start = m;
                    while m + 1 < inside.len() && inside[m + 1] {
                        m += 1;
                    }
                    out.push((b.id, start, m));
                }
                m += 1;
            }
        }
        out
    }
}

pub fn unstable_set(s: &SpectrumSampling, p: f64) -> Result<UnstableSet> {
    if !(p > 1.0) {
        return Err(Error::Domain(format!("p must exceed 1, got {p}")));
    }
    let l0 = lambda0(s).value;
    let threshold = l0 / p;
    let members = s
        .samples
        .iter()
        .enumerate()
        .flat_map(|(m, sample)| {
            sample
                .values
                .iter()
                .enumerate()
                .filter(move |(_, v)| v.re > threshold)
                .map(move |(i, &v)| SpectralPoint {
                    xi_index: m,
                    xi: sample.xi,
                    eigen_index: i,
                    eigenvalue: v,
                })
        })
        .collect();
    Ok(UnstableSet {
        lambda0: l0,
        threshold,
        members,
    })
}

/// A run of ξ samples `[xi_lo, xi_hi)` with constant eigenvalue count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountInterval {
    pub first: usize,
    pub last: usize,
    pub xi_lo: f64,
    pub xi_hi: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalWarning {
    pub xi_index: usize,
    pub xi: f64,
    pub eigenvalue: C64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisPartition {
    pub lambda_m: f64,
    pub counts: Vec<usize>,
    pub intervals: Vec<CountInterval>,
    /// Rectangle around every counted eigenvalue, left edge at λ_M; `None`
    /// when nothing is counted.
    pub contour: Option<Contour>,
    pub warnings: Vec<MarginalWarning>,
}

/// Counts, per ξ, eigenvalues with `Re λ > λ_M` (all of which lie in Σ_U
/// because `λ_M > λ₀/p`) and merges runs of equal count into intervals.
pub fn hypothesis_partition(
    s: &SpectrumSampling,
    lambda_m: f64,
    p: f64,
    eps_gap: f64,
) -> Result<HypothesisPartition> {
    let u = unstable_set(s, p)?;
    if !(lambda_m > u.threshold) {
        return Err(Error::Hypothesis(format!(
            "lambda_M = {lambda_m} does not exceed lambda0/p = {}",
            u.threshold
        )));
    }
    let mut counts = Vec::with_capacity(s.samples.len());
    let mut warnings = Vec::new();
    let (mut re_hi, mut im_lo, mut im_hi) = (f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (m, sample) in s.samples.iter().enumerate() {
        let mut count = 0;
        for &v in &sample.values {
            if (v.re - lambda_m).abs() < eps_gap {
                warnings.push(MarginalWarning {
                    xi_index: m,
                    xi: sample.xi,
                    eigenvalue: v,
                });
            }
            if v.re > lambda_m {
                count += 1;
                re_hi = re_hi.max(v.re);
                im_lo = im_lo.min(v.im);
                im_hi = im_hi.max(v.im);
            }
        }
        counts.push(count);
    }
    let h = s.xi_grid.spacing();
    let xs = s.xi_grid.values();
    let mut intervals: Vec<CountInterval> = Vec::new();
    for (m, &c) in counts.iter().enumerate() {
        match intervals.last_mut() {
            Some(last) if last.count == c => {
                last.last = m;
                last.xi_hi = xs[m] + h;
            }
            _ => intervals.push(CountInterval {
                first: m,
                last: m,
                xi_lo: xs[m],
                xi_hi: xs[m] + h,
                count: c,
            }),
        }
    }
    let contour = if re_hi.is_finite() {
        Some(Contour::rectangle(
            C64::new(lambda_m, im_lo - eps_gap),
            C64::new(re_hi + eps_gap, im_hi + eps_gap),
            Contour::MIN_NODES,
        )?)
    } else {
        None
    };
    Ok(HypothesisPartition {
        lambda_m,
        counts,
        intervals,
        contour,
        warnings,
    })
}
