//! Periodic-coefficient differential operators `L = Σ_j a_j(x) ∂_x^j`,
//! their Bloch operators as Fourier–Galerkin matrices, and the supported
//! nonlinearities.

use crate::error::{Error, Result};
use crate::grid::{fft_forward, fft_inverse, SampledFunction};
use crate::linalg::CMat;
use faer::Mat;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// `(iκ)^j`, exact in the real and imaginary parts.
pub(crate) fn ik_pow(kappa: f64, j: usize) -> C64 {
    let m = kappa.powi(j as i32);
    match j % 4 {
        0 => C64::new(m, 0.0),
        1 => C64::new(0.0, m),
        2 => C64::new(-m, 0.0),
        _ => C64::new(0.0, -m),
    }
}

/// A 2π-periodic coefficient given by finitely many Fourier modes,
/// `a(x) = Σ_k â(k) e^{ikx}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicCoefficient {
    modes: BTreeMap<i64, C64>,
    is_real: bool,
}

impl PeriodicCoefficient {
    pub fn new(modes: impl IntoIterator<Item = (i64, C64)>, is_real: bool) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (k, a) in modes {
            if !a.re.is_finite() || !a.im.is_finite() {
                return Err(Error::Domain(format!("non-finite amplitude for mode {k}")));
            }
            *map.entry(k).or_insert(ZERO) += a;
        }
        map.retain(|_, a| *a != ZERO);
        let coeff = Self {
            modes: map,
            is_real,
        };
        if is_real {
            let scale = coeff.modes.values().fold(0.0f64, |m, a| m.max(a.norm()));
            let tol = 1e-14 * scale.max(1.0);
            for (&k, &a) in &coeff.modes {
                if (coeff.mode(-k) - a.conj()).norm() > tol {
                    return Err(Error::Domain(format!(
                        "real coefficient needs mode(-{k}) = conj(mode({k}))"
                    )));
                }
            }
        }
        Ok(coeff)
    }

    pub fn zero() -> Self {
        Self {
            modes: BTreeMap::new(),
            is_real: true,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new([(0, C64::new(c, 0.0))], true).expect("real constant")
    }

    /// `amplitude · cos(k x)`.
    pub fn cosine(amplitude: f64, k: u32) -> Self {
        if k == 0 {
            return Self::constant(amplitude);
        }
        let half = C64::new(amplitude / 2.0, 0.0);
        Self::new([(k as i64, half), (-(k as i64), half)], true).expect("real cosine")
    }

    /// `amplitude · sin(k x)`.
    pub fn sine(amplitude: f64, k: u32) -> Self {
        if k == 0 {
            return Self::zero();
        }
        let half = C64::new(0.0, amplitude / 2.0);
        Self::new([(k as i64, -half), (-(k as i64), half)], true).expect("real sine")
    }

    pub fn mode(&self, k: i64) -> C64 {
        self.modes.get(&k).copied().unwrap_or(ZERO)
    }

    pub fn modes(&self) -> impl Iterator<Item = (i64, C64)> + '_ {
        self.modes.iter().map(|(&k, &a)| (k, a))
    }

    pub fn is_real(&self) -> bool {
        self.is_real
    }

    pub fn bandwidth(&self) -> usize {
        self.modes.keys().map(|k| k.unsigned_abs() as usize).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.modes.keys().all(|&k| k == 0)
    }

    pub fn eval(&self, x: f64) -> C64 {
        self.modes
            .iter()
            .map(|(&k, &a)| a * C64::from_polar(1.0, k as f64 * x))
            .sum()
    }

    pub fn derivative(&self) -> Self {
        Self {
            modes: self
                .modes
                .iter()
                .filter(|(&k, _)| k != 0)
                .map(|(&k, &a)| (k, a * C64::new(0.0, k as f64)))
                .collect(),
            is_real: self.is_real,
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            modes: self
                .modes
                .iter()
                .filter(|_| c != 0.0)
                .map(|(&k, &a)| (k, a * c))
                .collect(),
            is_real: self.is_real,
        }
    }
}

/// One term `a(x) ∂_x^order` acting from component `col` into component `row`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTerm {
    pub order: usize,
    pub row: usize,
    pub col: usize,
    pub coeff: PeriodicCoefficient,
}

impl CoefficientTerm {
    pub fn scalar(order: usize, coeff: PeriodicCoefficient) -> Self {
        Self {
            order,
            row: 0,
            col: 0,
            coeff,
        }
    }
}

/// `L = Σ_j a_j(x) ∂_x^j` acting on `d`-component functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOperator {
    components: usize,
    terms: Vec<CoefficientTerm>,
}

impl PeriodicOperator {
    pub fn new(components: usize, terms: Vec<CoefficientTerm>) -> Result<Self> {
        if components == 0 {
            return Err(Error::Domain("operator needs at least one component".into()));
        }
        for t in &terms {
            if t.row >= components || t.col >= components {
                return Err(Error::Domain(format!(
                    "term (order {}, row {}, col {}) outside {components} components",
                    t.order, t.row, t.col
                )));
            }
        }
        let terms: Vec<_> = terms.into_iter().filter(|t| !t.coeff.is_zero()).collect();
        if terms.is_empty() {
            return Err(Error::Domain("operator has no nonzero coefficient".into()));
        }
        Ok(Self { components, terms })
    }

    pub fn scalar(terms: impl IntoIterator<Item = (usize, PeriodicCoefficient)>) -> Result<Self> {
        Self::new(
            1,
            terms
                .into_iter()
                .map(|(j, a)| CoefficientTerm::scalar(j, a))
                .collect(),
        )
    }

    /// `∂_x²`.
    pub fn heat() -> Self {
        Self::scalar([(2, PeriodicCoefficient::constant(1.0))]).expect("valid")
    }

    /// `∂_x² + 2 q cos(x)`.
    pub fn mathieu(q: f64) -> Self {
        Self::scalar([
            (2, PeriodicCoefficient::constant(1.0)),
            (0, PeriodicCoefficient::cosine(2.0 * q, 1)),
        ])
        .expect("valid")
    }

    /// Linearization of `u_t + u_xxx + β(u_xx + u_xxxx) + (φ u)_x = 0`,
    /// i.e. `L = -∂³ - β∂² - β∂⁴ - φ ∂ - φ'`. With `phi = None` this is the
    /// constant-coefficient operator at the zero state.
    pub fn kdv_ks(beta: f64, phi: Option<&PeriodicCoefficient>) -> Self {
        let mut terms = vec![
            (3, PeriodicCoefficient::constant(-1.0)),
            (2, PeriodicCoefficient::constant(-beta)),
            (4, PeriodicCoefficient::constant(-beta)),
        ];
        if let Some(phi) = phi {
            terms.push((1, phi.scaled(-1.0)));
            terms.push((0, phi.derivative().scaled(-1.0)));
        }
        Self::scalar(terms).expect("valid")
    }

    /// `L + c I`.
    pub fn shifted(&self, c: f64) -> Self {
        let mut terms = self.terms.clone();
        for d in 0..self.components {
            terms.push(CoefficientTerm {
                order: 0,
                row: d,
                col: d,
                coeff: PeriodicCoefficient::constant(c),
            });
        }
        Self::new(self.components, terms).unwrap_or_else(|_| self.clone())
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn terms(&self) -> &[CoefficientTerm] {
        &self.terms
    }

    pub fn order(&self) -> usize {
        self.terms.iter().map(|t| t.order).max().unwrap_or(0)
    }

    /// Largest harmonic present in any coefficient (K_c).
    pub fn bandwidth(&self) -> usize {
        self.terms.iter().map(|t| t.coeff.bandwidth()).max().unwrap_or(0)
    }

    pub fn is_constant_coefficient(&self) -> bool {
        self.terms.iter().all(|t| t.coeff.is_constant())
    }

    pub fn is_real(&self) -> bool {
        self.terms.iter().all(|t| t.coeff.is_real())
    }

    /// Model checks applied to configured operators: even order `2n ≥ 2`
    /// and, for scalar operators with constant leading coefficient, a leading
    /// symbol `(iκ)^{2n} a_{2n}` with negative real part.
    pub fn validate_model(&self) -> Result<()> {
        let order = self.order();
        if order < 2 || order % 2 != 0 {
            return Err(Error::Config(format!(
                "operator order must be even and >= 2, got {order}"
            )));
        }
        if self.components == 1 {
            let lead: Vec<_> = self.terms.iter().filter(|t| t.order == order).collect();
            if lead.iter().all(|t| t.coeff.is_constant()) {
                let a: C64 = lead.iter().map(|t| t.coeff.mode(0)).sum();
                for kappa in (1..=64).map(|i| 8.0 * i as f64) {
                    let s = ik_pow(kappa, order) * a;
                    if s.re >= 0.0 {
                        return Err(Error::Config(format!(
                            "leading symbol has Re >= 0 at kappa = {kappa}; operator is not sectorial"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Fourier–Galerkin matrix of the Bloch operator `L_ξ` on a window of
/// consecutive harmonics. Rows and columns are component-major.
#[derive(Debug, Clone)]
pub struct BlochMatrix {
    pub xi: f64,
    lo: i64,
    modes: usize,
    components: usize,
    pub matrix: CMat,
}

impl BlochMatrix {
    /// Harmonics `lo..lo+modes`.
    pub fn harmonics(&self) -> std::ops::Range<i64> {
        self.lo..self.lo + self.modes as i64
    }

    pub fn lowest_harmonic(&self) -> i64 {
        self.lo
    }

    pub fn mode_count(&self) -> usize {
        self.modes
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn dim(&self) -> usize {
        self.modes * self.components
    }

    pub fn index(&self, component: usize, k: i64) -> usize {
        component * self.modes + (k - self.lo) as usize
    }
}

/// Galerkin truncation of `L_ξ` to harmonics `|k| ≤ M`: entry `(k, k')` is
/// `Σ_j â_j(k − k') (i(k' + ξ))^j`.
pub fn assemble_bloch_matrix(op: &PeriodicOperator, xi: f64, truncation: usize) -> Result<BlochMatrix> {
    if !(-0.5..0.5).contains(&xi) {
        return Err(Error::Domain(format!("xi = {xi} outside [-1/2, 1/2)")));
    }
    let bandwidth = op.bandwidth();
    if truncation < bandwidth {
        return Err(Error::Truncation {
            truncation,
            bandwidth,
        });
    }
    Ok(assemble_window(op, xi, -(truncation as i64), 2 * truncation + 1))
}

pub(crate) fn assemble_window(op: &PeriodicOperator, xi: f64, lo: i64, modes: usize) -> BlochMatrix {
    let d = op.components();
    let hi = lo + modes as i64;
    let mut matrix = Mat::zeros(d * modes, d * modes);
    for term in op.terms() {
        for kp in lo..hi {
            let factor = ik_pow(kp as f64 + xi, term.order);
            let col = term.col * modes + (kp - lo) as usize;
            for (s, amp) in term.coeff.modes() {
                let k = kp + s;
                if k < lo || k >= hi {
                    continue;
                }
                let row = term.row * modes + (k - lo) as usize;
                matrix[(row, col)] += amp * factor;
            }
        }
    }
    BlochMatrix {
        xi,
        lo,
        modes,
        components: d,
        matrix,
    }
}

/// `Σ_j a_j (iκ)^j` for a scalar constant-coefficient operator.
pub fn symbol_eval(op: &PeriodicOperator, kappa: f64) -> Result<C64> {
    if op.components() != 1 {
        return Err(Error::UnsupportedOracle(
            "symbol is matrix-valued for systems".into(),
        ));
    }
    if !op.is_constant_coefficient() {
        return Err(Error::UnsupportedOracle(
            "symbol requires constant coefficients".into(),
        ));
    }
    Ok(op
        .terms()
        .iter()
        .map(|t| t.coeff.mode(0) * ik_pow(kappa, t.order))
        .sum())
}

/// Energy fraction of `spec` (FFT slot order, one component) that a shift
/// by up to `bandwidth` harmonics would push past the Nyquist band.
fn wrap_energy_fraction(grid: crate::grid::SpatialGrid, spec: &[C64], bandwidth: usize) -> f64 {
    if bandwidth == 0 {
        return 0.0;
    }
    let half = (grid.len() / 2) as i64;
    let shift = (bandwidth * grid.periods()) as i64;
    let (mut total, mut risky) = (0.0, 0.0);
    for (slot, z) in spec.iter().enumerate() {
        let q = grid.signed_index(slot);
        let e = z.norm_sqr();
        total += e;
        if q + shift >= half || q - shift < -half {
            risky += e;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        risky / total
    }
}

/// Pseudospectral `L u` on the box: spectral derivatives, then pointwise
/// multiplication by the sampled coefficients.
pub fn apply_operator(op: &PeriodicOperator, u: &SampledFunction) -> Result<SampledFunction> {
    if u.components() != op.components() {
        return Err(Error::Shape(format!(
            "operator has {} components, function has {}",
            op.components(),
            u.components()
        )));
    }
    let grid = u.grid();
    let n = grid.len();
    let bandwidth = op.bandwidth();
    if 2 * bandwidth >= grid.points_per_period() {
        return Err(Error::Resolution(format!(
            "{} points per period cannot resolve coefficient harmonic {bandwidth}",
            grid.points_per_period()
        )));
    }
    let spec = u.spectrum();
    for c in 0..u.components() {
        let frac = wrap_energy_fraction(grid, &spec[c * n..(c + 1) * n], bandwidth);
        if frac > 1e-24 {
            return Err(Error::Resolution(format!(
                "component {c} has energy fraction {frac:e} near Nyquist; coefficient products would alias"
            )));
        }
    }
    let fwd_inv = fft_inverse(n);
    let _ = fft_forward(n);
    let mut out = vec![ZERO; u.components() * n];
    for term in op.terms() {
        let mut deriv: Vec<C64> = spec[term.col * n..(term.col + 1) * n]
            .iter()
            .enumerate()
            .map(|(slot, z)| z * ik_pow(grid.wavenumber(slot), term.order))
            .collect();
        fwd_inv.process(&mut deriv);
        let target = &mut out[term.row * n..(term.row + 1) * n];
        if term.coeff.is_constant() {
            let a = term.coeff.mode(0);
            for (o, d) in target.iter_mut().zip(&deriv) {
                *o += a * d;
            }
        } else {
            for (i, (o, d)) in target.iter_mut().zip(&deriv).enumerate() {
                *o += term.coeff.eval(grid.x(i)) * d;
            }
        }
    }
    SampledFunction::new(grid, u.components(), out)
}

/// Nonlinear terms `N(u)` supported by the evolution module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Nonlinearity {
    None,
    /// `N(u) = C_N ‖u‖_{L²}^{p−1} u`, so that `‖N(u)‖ = C_N ‖u‖^p` holds
    /// exactly on the discrete box.
    Power { exponent: f64, scale: f64 },
    /// `N(u) = −u u_x` (scalar only).
    Advective,
}

impl Nonlinearity {
    pub fn validate(&self, components: usize) -> Result<()> {
        match *self {
            Nonlinearity::Power { exponent, scale } => {
                if !(exponent > 1.0) || !exponent.is_finite() {
                    return Err(Error::Config(format!("power exponent must exceed 1, got {exponent}")));
                }
                if !(scale >= 0.0) || !scale.is_finite() {
                    return Err(Error::Config(format!("power scale must be >= 0, got {scale}")));
                }
            }
            Nonlinearity::Advective if components != 1 => {
                return Err(Error::Config("advective nonlinearity is scalar only".into()));
            }
            _ => {}
        }
        Ok(())
    }

    /// The polynomial degree `p` of the nonlinearity, if any.
    pub fn degree(&self) -> Option<f64> {
        match *self {
            Nonlinearity::None => None,
            Nonlinearity::Power { exponent, .. } => Some(exponent),
            Nonlinearity::Advective => Some(2.0),
        }
    }

    /// `N(u)` evaluated on the grid (advective term without dealiasing).
    pub fn apply(&self, u: &SampledFunction) -> Result<SampledFunction> {
        self.validate(u.components())?;
        match *self {
            Nonlinearity::None => Ok(SampledFunction::zeros(u.grid(), u.components())),
            Nonlinearity::Power { exponent, scale } => {
                let f = scale * u.l2_norm().powf(exponent - 1.0);
                Ok(u.scaled(C64::new(f, 0.0)))
            }
            Nonlinearity::Advective => {
                let grid = u.grid();
                let mut spec = u.spectrum();
                for (slot, z) in spec.iter_mut().enumerate() {
                    *z *= C64::new(0.0, grid.wavenumber(slot));
                }
                let ux = SampledFunction::from_spectrum(grid, 1, spec)?;
                let values = u
                    .values()
                    .iter()
                    .zip(ux.values())
                    .map(|(a, b)| -a * b)
                    .collect();
                SampledFunction::new(grid, 1, values)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpatialGrid;

    fn diag(m: &BlochMatrix) -> Vec<C64> {
        (0..m.dim()).map(|i| m.matrix[(i, i)]).collect()
    }

    #[test]
    fn heat_matrix_is_shifted_parabola() {
        let m = assemble_bloch_matrix(&PeriodicOperator::heat(), 0.25, 1).unwrap();
        let d = diag(&m);
        // modes k = -1, 0, 1
        assert_eq!(d, vec![C64::new(-0.5625, 0.0), C64::new(-0.0625, 0.0), C64::new(-1.5625, 0.0)]);
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_eq!(m.matrix[(i, j)], ZERO);
                }
            }
        }
    }

    #[test]
    fn cosine_potential_fills_first_off_diagonals() {
        let op = PeriodicOperator::scalar([
            (2, PeriodicCoefficient::constant(1.0)),
            (0, PeriodicCoefficient::cosine(2.0, 1)),
        ])
        .unwrap();
        let m = assemble_bloch_matrix(&op, 0.0, 2).unwrap();
        for i in 0..5 {
            let k = i as f64 - 2.0;
            assert_eq!(m.matrix[(i, i)], C64::new(-k * k, 0.0));
            for j in 0..5 {
                let want = if (i as i64 - j as i64).abs() == 1 { 1.0 } else if i == j { -k * k } else { 0.0 };
                assert_eq!(m.matrix[(i, j)], C64::new(want, 0.0), "({i},{j})");
            }
        }
    }

    #[test]
    fn assembly_rejects_bad_inputs() {
        let op = PeriodicOperator::mathieu(1.0);
        assert!(matches!(assemble_bloch_matrix(&op, 0.5, 4), Err(Error::Domain(_))));
        assert!(matches!(assemble_bloch_matrix(&op, -0.6, 4), Err(Error::Domain(_))));
        assert!(assemble_bloch_matrix(&op, -0.5, 4).is_ok());
        let wide = PeriodicOperator::scalar([
            (2, PeriodicCoefficient::constant(1.0)),
            (0, PeriodicCoefficient::cosine(1.0, 3)),
        ])
        .unwrap();
        assert_eq!(
            assemble_bloch_matrix(&wide, 0.0, 2).unwrap_err(),
            Error::Truncation { truncation: 2, bandwidth: 3 }
        );
    }

    #[test]
    fn band_width_bounded_by_coefficient_bandwidth() {
        let op = PeriodicOperator::scalar([
            (2, PeriodicCoefficient::constant(1.0)),
            (1, PeriodicCoefficient::sine(0.5, 2)),
        ])
        .unwrap();
        let m = assemble_bloch_matrix(&op, 0.1, 6).unwrap();
        for i in 0..m.dim() {
            for j in 0..m.dim() {
                if (i as i64 - j as i64).abs() > 2 {
                    assert_eq!(m.matrix[(i, j)], ZERO);
                }
            }
        }
    }

    #[test]
    fn symbols() {
        assert_eq!(symbol_eval(&PeriodicOperator::heat(), 2.0).unwrap(), C64::new(-4.0, 0.0));
        let bih = PeriodicOperator::scalar([(4, PeriodicCoefficient::constant(1.0))]).unwrap();
        assert_eq!(symbol_eval(&bih, 1.0).unwrap(), C64::new(1.0, 0.0));
        let kdv = PeriodicOperator::kdv_ks(0.1, None);
        let k = 0.5f64.sqrt();
        let s = symbol_eval(&kdv, k).unwrap();
        assert!((s.re - 0.025).abs() < 1e-15);
        assert!((s.im - k.powi(3)).abs() < 1e-15);
        assert!(matches!(
            symbol_eval(&PeriodicOperator::mathieu(1.0), 1.0),
            Err(Error::UnsupportedOracle(_))
        ));
    }

    #[test]
    fn sectoriality_heuristic() {
        assert!(PeriodicOperator::heat().validate_model().is_ok());
        assert!(PeriodicOperator::kdv_ks(0.1, None).validate_model().is_ok());
        let anti = PeriodicOperator::scalar([(2, PeriodicCoefficient::constant(-1.0))]).unwrap();
        assert!(matches!(anti.validate_model(), Err(Error::Config(_))));
        let bih = PeriodicOperator::scalar([(4, PeriodicCoefficient::constant(1.0))]).unwrap();
        assert!(bih.validate_model().is_err());
        let odd = PeriodicOperator::scalar([(3, PeriodicCoefficient::constant(1.0))]).unwrap();
        assert!(odd.validate_model().is_err());
    }

    #[test]
    fn real_coefficients_must_be_conjugate_symmetric() {
        let bad = PeriodicCoefficient::new([(1, C64::new(1.0, 0.0))], true);
        assert!(bad.is_err());
        let ok = PeriodicCoefficient::new([(1, C64::new(1.0, 2.0)), (-1, C64::new(1.0, -2.0))], true);
        assert!(ok.is_ok());
    }

    #[test]
    fn apply_second_derivative_to_sine() {
        let g = SpatialGrid::new(2, 32).unwrap();
        let u = SampledFunction::from_fn(g, |x| C64::new(x.sin(), 0.0));
        let lu = apply_operator(&PeriodicOperator::heat(), &u).unwrap();
        let want = u.scaled(C64::new(-1.0, 0.0));
        assert!(lu.max_diff(&want).unwrap() < 1e-12);
    }

    #[test]
    fn apply_multiplication_by_cosine() {
        let g = SpatialGrid::new(2, 32).unwrap();
        let op = PeriodicOperator::scalar([(0, PeriodicCoefficient::cosine(1.0, 1))]).unwrap();
        let one = SampledFunction::from_fn(g, |_| C64::new(1.0, 0.0));
        let lu = apply_operator(&op, &one).unwrap();
        let want = SampledFunction::from_fn(g, |x| C64::new(x.cos(), 0.0));
        assert!(lu.max_diff(&want).unwrap() < 1e-12);
    }

    #[test]
    fn aliasing_detector_trips_near_nyquist() {
        let g = SpatialGrid::new(2, 32).unwrap();
        let op = PeriodicOperator::mathieu(1.0);
        let u = SampledFunction::from_fn(g, |x| C64::new((15.5 * x).cos(), 0.0));
        assert!(matches!(apply_operator(&op, &u), Err(Error::Resolution(_))));
    }

    #[test]
    fn power_nonlinearity_meets_polynomial_estimate() {
        let g = SpatialGrid::new(2, 32).unwrap();
        let u = SampledFunction::from_fn(g, |x| C64::new(0.3 * x.sin() + 0.1, 0.0));
        let n = Nonlinearity::Power { exponent: 2.5, scale: 0.7 };
        let nu = n.apply(&u).unwrap();
        let bound = 0.7 * u.l2_norm().powf(2.5);
        assert!((nu.l2_norm() - bound).abs() <= 1e-12 * bound);
    }

    #[test]
    fn advective_nonlinearity() {
        let g = SpatialGrid::new(2, 32).unwrap();
        let u = SampledFunction::from_fn(g, |x| C64::new(x.sin(), 0.0));
        let nu = Nonlinearity::Advective.apply(&u).unwrap();
        let want = SampledFunction::from_fn(g, |x| C64::new(-x.sin() * x.cos(), 0.0));
        assert!(nu.max_diff(&want).unwrap() < 1e-12);
    }
}
