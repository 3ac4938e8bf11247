//! Bloch transform between functions on the periodized box and families of
//! 2π-periodic functions indexed by the box's Floquet exponents.
//!
//! Conventions: with `c_q` the normalized DFT coefficients of `f`, the Bloch
//! coefficient of harmonic `j` at `ξ_m` is `N_per · c_{j N_per + m'}`, so that
//! `f(x) = Σ_m (1/N_per) e^{iξ_m x} f̌(ξ_m, x)`. Per-period norms are
//! normalized (`(1/2π)∫₀^{2π}|g|²`, i.e. the sum of squared coefficients);
//! with that choice `‖f‖² = 2π Σ_m (1/N_per) ‖f̌(ξ_m)‖²` holds exactly.

use crate::error::{Error, Result};
use crate::grid::{fft_inverse, SampledFunction, SpatialGrid};
use num_complex::Complex64 as C64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Bloch coefficients stored as `[component][ξ slot m][harmonic]`, where
/// slot `m` carries harmonics `harmonic_lo(m) .. harmonic_lo(m) + N_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlochField {
    grid: SpatialGrid,
    components: usize,
    coeffs: Vec<C64>,
}

impl BlochField {
    pub fn new(grid: SpatialGrid, components: usize, coeffs: Vec<C64>) -> Result<Self> {
        if components == 0 || coeffs.len() != components * grid.len() {
            return Err(Error::Shape(format!(
                "Bloch field needs {} coefficients, got {}",
                components * grid.len(),
                coeffs.len()
            )));
        }
        Ok(Self {
            grid,
            components,
            coeffs,
        })
    }

    pub fn zeros(grid: SpatialGrid, components: usize) -> Self {
        Self {
            grid,
            components,
            coeffs: vec![ZERO; components * grid.len()],
        }
    }

    pub fn grid(&self) -> SpatialGrid {
        self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn xi_samples(&self) -> Vec<f64> {
        self.grid.xi_samples()
    }

    pub fn coefficients(&self) -> &[C64] {
        &self.coeffs
    }

    fn offset(&self, c: usize, m: usize) -> usize {
        let nx = self.grid.points_per_period();
        (c * self.grid.periods() + m) * nx
    }

    /// Harmonic coefficients of component `c` at slot `m`.
    pub fn slice(&self, c: usize, m: usize) -> &[C64] {
        let o = self.offset(c, m);
        &self.coeffs[o..o + self.grid.points_per_period()]
    }

    pub fn slice_mut(&mut self, c: usize, m: usize) -> &mut [C64] {
        let o = self.offset(c, m);
        let nx = self.grid.points_per_period();
        &mut self.coeffs[o..o + nx]
    }

    /// Coefficient of harmonic `j` (zero outside the slot's window).
    pub fn coefficient(&self, c: usize, m: usize, j: i64) -> C64 {
        let lo = self.grid.harmonic_lo(m);
        let nx = self.grid.points_per_period() as i64;
        if j < lo || j >= lo + nx {
            ZERO
        } else {
            self.slice(c, m)[(j - lo) as usize]
        }
    }

    /// All components at slot `m`, concatenated component-major over the
    /// full harmonic window.
    pub fn slot_vector(&self, m: usize) -> Vec<C64> {
        (0..self.components)
            .flat_map(|c| self.slice(c, m).iter().copied())
            .collect()
    }

    pub fn set_slot_vector(&mut self, m: usize, v: &[C64]) -> Result<()> {
        let nx = self.grid.points_per_period();
        if v.len() != self.components * nx {
            return Err(Error::Shape(format!(
                "slot vector has {} entries, expected {}",
                v.len(),
                self.components * nx
            )));
        }
        for c in 0..self.components {
            self.slice_mut(c, m).copy_from_slice(&v[c * nx..(c + 1) * nx]);
        }
        Ok(())
    }

    /// Harmonics `-M..=M` at slot `m`, component-major; the layout of
    /// [`assemble_bloch_matrix`](crate::operator::assemble_bloch_matrix).
    pub fn truncated_vector(&self, m: usize, truncation: usize) -> Vec<C64> {
        let t = truncation as i64;
        (0..self.components)
            .flat_map(|c| (-t..=t).map(move |j| self.coefficient(c, m, j)))
            .collect()
    }

    /// Writes a truncated vector back into slot `m`; harmonics outside
    /// `-M..=M` are zeroed.
    pub fn set_truncated_vector(&mut self, m: usize, truncation: usize, v: &[C64]) -> Result<()> {
        for c in 0..self.components {
            self.slice_mut(c, m).fill(ZERO);
        }
        self.write_truncated(m, truncation, v)
    }

    /// Overwrites harmonics `-M..=M` at slot `m`, leaving the rest intact.
    pub fn write_truncated(&mut self, m: usize, truncation: usize, v: &[C64]) -> Result<()> {
        let width = 2 * truncation + 1;
        if v.len() != self.components * width {
            return Err(Error::Shape(format!(
                "truncated vector has {} entries, expected {}",
                v.len(),
                self.components * width
            )));
        }
        let lo = self.grid.harmonic_lo(m);
        let nx = self.grid.points_per_period() as i64;
        let t = truncation as i64;
        if -t < lo || t >= lo + nx {
            return Err(Error::Domain(format!(
                "truncation {truncation} exceeds the harmonic window of slot {m}"
            )));
        }
        for c in 0..self.components {
            let slice = self.slice_mut(c, m);
            for (i, j) in (-t..=t).enumerate() {
                slice[(j - lo) as usize] = v[c * width + i];
            }
        }
        Ok(())
    }

    /// Normalized per-period norm `‖f̌(ξ_m,·)‖` summed over components.
    pub fn slice_norm(&self, m: usize) -> f64 {
        (0..self.components)
            .map(|c| self.slice(c, m).iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    /// Samples `f̌(ξ_m, x_n)` of component `c` on one period (`N_x` points).
    pub fn slice_values(&self, c: usize, m: usize) -> Vec<C64> {
        let nx = self.grid.points_per_period();
        let lo = self.grid.harmonic_lo(m);
        let mut buf = vec![ZERO; nx];
        for (i, &a) in self.slice(c, m).iter().enumerate() {
            buf[(lo + i as i64).rem_euclid(nx as i64) as usize] = a;
        }
        fft_inverse(nx).process(&mut buf);
        buf
    }

    /// Samples of every slice, laid out `[component][m][x_n]`.
    pub fn values(&self) -> Vec<C64> {
        (0..self.components)
            .flat_map(|c| (0..self.grid.periods()).flat_map(move |m| self.slice_values(c, m)))
            .collect()
    }

    /// `2π Σ_m (1/N_per) ‖f̌(ξ_m)‖²`.
    pub fn weighted_energy(&self) -> f64 {
        let w = 1.0 / self.grid.periods() as f64;
        2.0 * std::f64::consts::PI
            * (0..self.grid.periods())
                .map(|m| w * self.slice_norm(m).powi(2))
                .sum::<f64>()
    }
}

pub fn bloch_transform(f: &SampledFunction) -> BlochField {
    BlochField::from_box_spectrum(f.grid(), f.components(), &f.spectrum())
}

pub fn inverse_bloch(field: &BlochField) -> Result<SampledFunction> {
    SampledFunction::from_spectrum(field.grid(), field.components(), field.to_box_spectrum())
}

impl BlochField {
    /// Re-indexes normalized box DFT coefficients (FFT slot order,
    /// component-major) into Bloch coefficients.
    pub fn from_box_spectrum(grid: SpatialGrid, components: usize, spec: &[C64]) -> Self {
        let n = grid.len();
        let scale = grid.periods() as f64;
        let mut field = BlochField::zeros(grid, components);
        for c in 0..components {
            for slot in 0..n {
                let (m, j) = grid.split_slot(slot);
                let idx = (j - grid.harmonic_lo(m)) as usize;
                field.slice_mut(c, m)[idx] = spec[c * n + slot] * scale;
            }
        }
        field
    }

    /// Inverse of [`from_box_spectrum`](Self::from_box_spectrum).
    pub fn to_box_spectrum(&self) -> Vec<C64> {
        let grid = self.grid;
        let n = grid.len();
        let scale = 1.0 / grid.periods() as f64;
        let mut spec = vec![ZERO; self.components * n];
        for c in 0..self.components {
            for m in 0..grid.periods() {
                let lo = grid.harmonic_lo(m);
                for (i, &a) in self.slice(c, m).iter().enumerate() {
                    let slot = grid.fft_slot(grid.box_index(m, lo + i as i64));
                    spec[c * n + slot] = a * scale;
                }
            }
        }
        spec
    }
}

/// Relative defect of the discrete Bloch isometry.
pub fn isometry_defect(f: &SampledFunction) -> f64 {
    let lhs = f.l2_norm().powi(2);
    let rhs = bloch_transform(f).weighted_energy();
    (lhs - rhs).abs() / lhs.max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_frequency_data_is_constant_in_x() {
        let g = SpatialGrid::new(8, 32).unwrap();
        let f = SampledFunction::from_fn(g, |x| C64::from_polar(1.0, 0.25 * x) * 0.5);
        let b = bloch_transform(&f);
        for m in 0..8 {
            let vals = b.slice_values(0, m);
            let spread = vals.iter().fold(0.0f64, |a, v| a.max((v - vals[0]).norm()));
            assert!(spread < 1e-12);
        }
        // ξ = 0.25 is slot 6 of 8; f̂ = 0.5 scaled by N_per.
        assert!((b.coefficient(0, 6, 0) - C64::new(4.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn harmonic_shift_lands_on_j_one() {
        let g = SpatialGrid::new(4, 32).unwrap();
        let f = SampledFunction::from_fn(g, |x| C64::from_polar(1.0, 1.25 * x));
        let b = bloch_transform(&f);
        assert!((b.coefficient(0, 3, 1) - C64::new(4.0, 0.0)).norm() < 1e-12);
        assert!((b.slice_norm(3) - 4.0).abs() < 1e-12);
        for m in 0..3 {
            assert!(b.slice_norm(m) < 1e-12);
        }
    }

    #[test]
    fn unit_slice_inverts_to_constant() {
        let g = SpatialGrid::new(4, 32).unwrap();
        let mut b = BlochField::zeros(g, 1);
        // ξ_2 = 0, harmonic 0
        let lo = g.harmonic_lo(2);
        b.slice_mut(0, 2)[(0 - lo) as usize] = C64::new(1.0, 0.0);
        let f = inverse_bloch(&b).unwrap();
        for v in f.values() {
            assert!((v - C64::new(0.25, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn truncated_vectors_round_trip() {
        let g = SpatialGrid::new(2, 32).unwrap();
        let f = SampledFunction::from_fn(g, |x| C64::new((1.5 * x).cos(), (0.5 * x).sin()));
        let b = bloch_transform(&f);
        let mut c = BlochField::zeros(g, 1);
        for m in 0..2 {
            let v = b.truncated_vector(m, 15);
            c.set_truncated_vector(m, 15, &v).unwrap();
        }
        let back = inverse_bloch(&c).unwrap();
        assert!(back.max_diff(&f).unwrap() < 1e-12);
    }

    #[test]
    fn single_mode_isometry_is_exact() {
        let g = SpatialGrid::new(6, 32).unwrap();
        for m in 0..6 {
            let kappa = 2.0 + g.xi(m);
            let f = SampledFunction::from_fn(g, |x| C64::from_polar(1.0, kappa * x));
            assert!(isometry_defect(&f) < 1e-12);
        }
        assert_eq!(isometry_defect(&SampledFunction::zeros(g, 1)), 0.0);
    }
}
