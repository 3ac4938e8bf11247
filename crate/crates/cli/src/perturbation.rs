//! Initial perturbation recipes.

use crate::config::{PerturbationConfig, ScenarioConfig};
use anyhow::{bail, Context, Result};
use floquet_core::projections::{prepared_initial_data, PreparedOptions};
use floquet_core::spectra::{branch_of, track_branches, SpectrumSampling};
use floquet_core::{symbol_eval, Complex64 as C64, SampledFunction, SpatialGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::Path;

fn signed(slot: usize, n: usize) -> i64 {
    if slot < n / 2 {
        slot as i64
    } else {
        slot as i64 - n as i64
    }
}

pub fn load_initial_perturbation(
    cfg: &ScenarioConfig,
    grid: SpatialGrid,
    box_spectrum: &SpectrumSampling,
    base_dir: &Path,
) -> Result<SampledFunction> {
    let d = box_spectrum.components;
    match &cfg.perturbation {
        PerturbationConfig::Mode { slot, harmonic, amplitude, real } => {
            if d != 1 {
                bail!("perturbation: mode recipe is scalar only");
            }
            let kappa = *harmonic as f64 + grid.xi(*slot);
            let f = SampledFunction::from_fn(grid, |x| C64::from_polar(*amplitude, kappa * x));
            Ok(if *real { f.real_part() } else { f })
        }
        PerturbationConfig::Prepared { slot, eigen, kappa, width, real } => {
            let branches = track_branches(box_spectrum, None);
            let i = match (eigen, kappa) {
                (Some(i), _) => *i,
                (None, Some(k)) => {
                    let want = symbol_eval(&box_spectrum.operator, *k)
                        .context("perturbation.kappa needs a constant-coefficient operator")?;
                    box_spectrum.samples[*slot]
                        .values
                        .iter()
                        .enumerate()
                        .min_by(|a, b| (a.1 - want).norm().total_cmp(&(b.1 - want).norm()))
                        .map(|(i, _)| i)
                        .expect("nonempty spectrum")
                }
                (None, None) => bail!("perturbation: prepared data needs `eigen` or `kappa`"),
            };
            let id = branch_of(&branches, *slot, i)
                .with_context(|| format!("perturbation.eigen = {i} is not a sampled eigenvalue index"))?;
            let data = prepared_initial_data(
                grid,
                box_spectrum,
                &branches,
                id,
                slot - width,
                slot + width,
                PreparedOptions { real: *real, normalize: true },
            )?;
            for w in &data.warnings {
                eprintln!("warning: {w}");
            }
            Ok(data.function)
        }
        PerturbationConfig::Random { bandwidth, seed, real } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let n = grid.len();
            let np = grid.periods() as f64;
            let spec: Vec<C64> = (0..d * n)
                .map(|i| {
                    let kappa = signed(i % n, n) as f64 / np;
                    let z = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                    if kappa.abs() <= *bandwidth {
                        z
                    } else {
                        C64::new(0.0, 0.0)
                    }
                })
                .collect();
            let f = SampledFunction::from_spectrum(grid, d, spec)?;
            let f = if *real { f.real_part() } else { f };
            Ok(f.normalized())
        }
        PerturbationConfig::Samples { path } => {
            let p = base_dir.join(path);
            let mut reader = csv::Reader::from_path(&p).with_context(|| format!("perturbation.path {}", p.display()))?;
            let mut values = Vec::new();
            for row in reader.deserialize::<(f64, f64)>() {
                let (re, im) = row.with_context(|| format!("perturbation.path {}", p.display()))?;
                values.push(C64::new(re, im));
            }
            if values.len() != d * grid.len() {
                bail!(
                    "perturbation.path {}: {} samples, grid needs {}",
                    p.display(),
                    values.len(),
                    d * grid.len()
                );
            }
            Ok(SampledFunction::new(grid, d, values)?)
        }
    }
}
