//! Scenario files: JSON, unknown keys rejected, validated on load.

use anyhow::{anyhow, bail, Context, Result};
use floquet_core::evolution::EvolveSettings;
use floquet_core::projections::ActivationSettings;
use floquet_core::{
    Complex64 as C64, CoefficientTerm, Nonlinearity, PeriodicCoefficient, PeriodicOperator, SpatialGrid,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub model: ModelConfig,
    #[serde(default)]
    pub nonlinearity: NonlinearityConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub projection: ProjectionConfig,
    pub perturbation: PerturbationConfig,
    #[serde(default)]
    pub experiment: ExperimentConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    /// General `Σ a_j(x) ∂^j` plus an optional constant shift.
    ReactionDiffusion {
        #[serde(default = "one")]
        components: usize,
        terms: Vec<TermConfig>,
        #[serde(default)]
        shift: f64,
    },
    /// KdV–KS linearization about `phi` (zero state when `phi` is empty).
    Kdvks {
        beta: f64,
        #[serde(default)]
        phi: Vec<ModeConfig>,
    },
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub order: usize,
    #[serde(default)]
    pub row: usize,
    #[serde(default)]
    pub col: usize,
    pub modes: Vec<ModeConfig>,
}

/// Fourier mode `â_k = re + i im` of a coefficient.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    pub k: i64,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NonlinearityConfig {
    #[default]
    None,
    Power {
        p: f64,
        #[serde(default = "unit")]
        c_n: f64,
    },
    Advective,
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub periods: usize,
    pub points_per_period: usize,
    /// Galerkin truncation `M`; defaults to the largest that fits.
    #[serde(default)]
    pub truncation: Option<usize>,
    /// ξ samples for `spectrum`/`hypothesis`; defaults to the box exponents.
    #[serde(default)]
    pub xi_samples: Option<usize>,
    /// Finer ξ grid used only to estimate λ₀ for the instability and dissipative verdicts.
    #[serde(default)]
    pub lambda0_xi_samples: Option<usize>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProjectionConfig {
    /// Defaults to the nonlinearity's degree, else 2.
    pub p: Option<f64>,
    pub tau_act: Option<f64>,
    pub eps_gap: f64,
    pub contour_nodes: usize,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        let d = ActivationSettings::default();
        Self {
            p: None,
            tau_act: None,
            eps_gap: d.eps_gap,
            contour_nodes: d.contour_nodes,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PerturbationConfig {
    /// `amplitude · e^{i(harmonic + ξ_slot)x}`.
    Mode {
        slot: usize,
        harmonic: i64,
        #[serde(default = "unit")]
        amplitude: f64,
        #[serde(default)]
        real: bool,
    },
    /// Branch eigenfunctions over slots `slot - width ..= slot + width`.
    /// The branch is fixed by `eigen` (index at `slot`) or by the nearest
    /// eigenvalue to the symbol at `kappa` (constant coefficients only).
    Prepared {
        slot: usize,
        #[serde(default)]
        eigen: Option<usize>,
        #[serde(default)]
        kappa: Option<f64>,
        #[serde(default)]
        width: usize,
        #[serde(default)]
        real: bool,
    },
    /// Random band-limited data with `|κ| ≤ bandwidth`.
    Random {
        bandwidth: f64,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        real: bool,
    },
    /// CSV with columns `re,im`, component-major, one row per grid point.
    Samples { path: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub eta: f64,
    pub deltas: Vec<f64>,
    /// `ω = λ_M − omega_offset` for the growth sandwich.
    pub omega_offset: f64,
    pub horizon: f64,
    pub samples: usize,
    pub tolerance: f64,
    pub dt: f64,
    pub sample_interval: f64,
    pub refine: bool,
    /// Dissipative run: amplitude, length, damping rate and cap.
    pub delta: f64,
    pub t_end: f64,
    pub theta: f64,
    pub damping_cap: f64,
    /// λ_M for `hypothesis`; defaults to λ_M(u₀).
    pub lambda_m: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            eta: 0.02,
            deltas: vec![1e-2, 1e-3, 1e-4],
            omega_offset: 0.05,
            horizon: 40.0,
            samples: 200,
            tolerance: 0.01,
            dt: 0.05,
            sample_interval: 0.5,
            refine: false,
            delta: 1e-3,
            t_end: 20.0,
            theta: 0.05,
            damping_cap: 1e6,
            lambda_m: None,
        }
    }
}

/// Sets `key` (dotted path) in a JSON tree; the value is parsed as JSON
/// and falls back to a string.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| anyhow!("override `{assignment}` is not KEY=VALUE"))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        node = match node {
            Value::Object(map) => {
                if last {
                    map.insert(part.to_string(), value);
                    return Ok(());
                }
                map.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = part.parse().with_context(|| format!("override key `{key}`: `{part}` is not an index"))?;
                let len = items.len();
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| anyhow!("override key `{key}`: index {idx} out of range ({len})"))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => bail!("override key `{key}`: `{part}` is not inside an object"),
        };
    }
    Ok(())
}

pub fn load(path: &Path, overrides: &[String]) -> Result<(ScenarioConfig, Value)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let mut tree: Value = serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
    for o in overrides {
        apply_override(&mut tree, o)?;
    }
    let cfg: ScenarioConfig =
        serde_json::from_value(tree.clone()).with_context(|| format!("config {}", path.display()))?;
    cfg.validate()?;
    let resolved = serde_json::to_value(&cfg)?;
    Ok((cfg, resolved))
}

fn coefficient(modes: &[ModeConfig], key: &str) -> Result<PeriodicCoefficient> {
    let lookup = |k: i64| {
        modes
            .iter()
            .filter(|m| m.k == k)
            .fold(C64::new(0.0, 0.0), |a, m| a + C64::new(m.re, m.im))
    };
    let real = modes.iter().all(|m| (lookup(-m.k) - lookup(m.k).conj()).norm() <= 1e-14 * (1.0 + lookup(m.k).norm()));
    PeriodicCoefficient::new(modes.iter().map(|m| (m.k, C64::new(m.re, m.im))), real)
        .with_context(|| format!("{key}: invalid Fourier modes (operator rule)"))
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let op = self.operator()?;
        op.validate_model().context("model: operator rule")?;
        let grid = self.spatial_grid()?;
        let m = self.truncation()?;
        if m < op.bandwidth() {
            bail!("grid.truncation = {m} is below the coefficient bandwidth {} (operator rule)", op.bandwidth());
        }
        if 2 * op.bandwidth() >= grid.points_per_period() {
            bail!("grid.points_per_period too small for the coefficient bandwidth (operator rule)");
        }
        if let Some(n) = self.grid.xi_samples {
            if n == 0 {
                bail!("grid.xi_samples must be positive (spectra rule)");
            }
        }
        self.nonlinearity().validate(op.components()).context("nonlinearity")?;
        let p = self.p();
        if !(p > 1.0) {
            bail!("projection.p must exceed 1, got {p} (projections rule)");
        }
        if self.projection.contour_nodes < 64 {
            bail!("projection.contour_nodes must be at least 64 (projections rule)");
        }
        let e = &self.experiment;
        if !(e.eta > 0.0) {
            bail!("experiment.eta must be positive (evolution rule)");
        }
        if e.deltas.iter().any(|&d| !(d > 0.0 && d < 2.0 * e.eta)) {
            bail!("experiment.deltas must lie in (0, 2 eta) (evolution rule)");
        }
        if !(e.dt > 0.0) || !(e.sample_interval > 0.0) || !(e.horizon > 0.0) || !(e.t_end > 0.0) {
            bail!("experiment.dt, sample_interval, horizon and t_end must be positive (evolution rule)");
        }
        if e.samples < 10 {
            bail!("experiment.samples must be at least 10 (evolution rule)");
        }
        if !(e.theta > 0.0) {
            bail!("experiment.theta must be positive (evolution rule)");
        }
        if let PerturbationConfig::Prepared { slot, width, eigen, kappa, .. } = &self.perturbation {
            if *width > *slot || slot + width >= grid.periods() {
                bail!("perturbation.slot +- width leaves the {} box exponents", grid.periods());
            }
            if eigen.is_none() && kappa.is_none() {
                bail!("perturbation: prepared data needs `eigen` or `kappa`");
            }
        }
        if let PerturbationConfig::Mode { slot, harmonic, .. } = &self.perturbation {
            if *slot >= grid.periods() {
                bail!("perturbation.slot = {slot} exceeds the {} box exponents", grid.periods());
            }
            if harmonic.unsigned_abs() as usize > m {
                bail!("perturbation.harmonic = {harmonic} exceeds the truncation {m}");
            }
        }
        Ok(())
    }

    pub fn operator(&self) -> Result<PeriodicOperator> {
        match &self.model {
            ModelConfig::ReactionDiffusion { components, terms, shift } => {
                let mut list = Vec::with_capacity(terms.len());
                for (i, t) in terms.iter().enumerate() {
                    list.push(CoefficientTerm {
                        order: t.order,
                        row: t.row,
                        col: t.col,
                        coeff: coefficient(&t.modes, &format!("model.terms[{i}].modes"))?,
                    });
                }
                let op = PeriodicOperator::new(*components, list).context("model.terms (operator rule)")?;
                Ok(if *shift != 0.0 { op.shifted(*shift) } else { op })
            }
            ModelConfig::Kdvks { beta, phi } => {
                if !(*beta > 0.0) {
                    bail!("model.beta must be positive (operator rule)");
                }
                if phi.is_empty() {
                    Ok(PeriodicOperator::kdv_ks(*beta, None))
                } else {
                    let c = coefficient(phi, "model.phi")?;
                    Ok(PeriodicOperator::kdv_ks(*beta, Some(&c)))
                }
            }
        }
    }

    pub fn spatial_grid(&self) -> Result<SpatialGrid> {
        SpatialGrid::new(self.grid.periods, self.grid.points_per_period).context("grid (bloch rule)")
    }

    pub fn truncation(&self) -> Result<usize> {
        let nx = self.grid.points_per_period;
        let max = (nx / 2).saturating_sub(1);
        match self.grid.truncation {
            None => Ok(max),
            Some(m) if m <= max => Ok(m),
            Some(m) => bail!("grid.truncation = {m} exceeds N_x/2 - 1 = {max} (bloch rule)"),
        }
    }

    pub fn nonlinearity(&self) -> Nonlinearity {
        match self.nonlinearity {
            NonlinearityConfig::None => Nonlinearity::None,
            NonlinearityConfig::Power { p, c_n } => Nonlinearity::Power { exponent: p, scale: c_n },
            NonlinearityConfig::Advective => Nonlinearity::Advective,
        }
    }

    pub fn p(&self) -> f64 {
        self.projection.p.or(self.nonlinearity().degree()).unwrap_or(2.0)
    }

    pub fn activation(&self) -> ActivationSettings {
        ActivationSettings {
            p: self.p(),
            tau_act: self.projection.tau_act,
            contour_nodes: self.projection.contour_nodes,
            eps_gap: self.projection.eps_gap,
        }
    }

    pub fn evolve(&self) -> Result<EvolveSettings> {
        Ok(EvolveSettings {
            dt: self.experiment.dt,
            sample_interval: self.experiment.sample_interval,
            truncation: Some(self.truncation()?),
            refine: self.experiment.refine,
            ..Default::default()
        })
    }
}
