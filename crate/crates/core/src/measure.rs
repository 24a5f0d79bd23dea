//! Reference measures on a uniform 1D grid, density ratios, and the scalar
//! functionals (variance, entropy, Fisher information, Dirichlet energy).
//!
//! A [`GridMeasure`] stores probability masses `mu_i ∝ exp(-V(x_i))`, so all
//! integrals against `mu` are plain weighted sums and `dx` only enters through
//! gradients.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Tolerance on `sum(mu_i) = 1`.
pub const MASS_TOLERANCE: f64 = 1e-12;
/// Tolerance on `mu(f) = 1` for density ratios.
pub const DENSITY_TOLERANCE: f64 = 1e-10;
/// `Var(sqrt f)` below this is treated as a constant density.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;
/// Default bound on the mass that truncation removes.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-12;

/// Confining potentials the laboratory knows by name, plus explicit polynomials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Potential {
    /// `x^2 / 2`, the Ornstein–Uhlenbeck model.
    #[serde(alias = "ou")]
    Gaussian,
    /// `x^4 - 2 x^2`.
    DoubleWell,
    /// `x^4`.
    Quartic,
    /// `V = 0`; only meaningful on a bounded domain.
    Uniform,
    /// `c_0 + c_1 x + c_2 x^2 + ...`
    Polynomial(Vec<f64>),
}

impl Potential {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Potential::Gaussian => 0.5 * x * x,
            Potential::DoubleWell => x.powi(4) - 2.0 * x * x,
            Potential::Quartic => x.powi(4),
            Potential::Uniform => 0.0,
            Potential::Polynomial(coeffs) => coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c),
        }
    }

    /// Whether the model lives on its domain (no tails to truncate).
    pub fn is_bounded(&self) -> bool {
        matches!(self, Potential::Uniform)
    }

    pub fn label(&self) -> String {
        match self {
            Potential::Gaussian => "ou".into(),
            Potential::DoubleWell => "double_well".into(),
            Potential::Quartic => "quartic".into(),
            Potential::Uniform => "uniform".into(),
            Potential::Polynomial(c) => {
                let parts: Vec<String> = c.iter().map(|v| format!("{v}")).collect();
                format!("poly[{}]", parts.join(","))
            }
        }
    }
}

/// Uniformly spaced nodes `x_0 < ... < x_{n-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct UniformGrid {
    nodes: Vec<f64>,
    dx: f64,
}

impl UniformGrid {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(LabError::invalid(format!("grid needs at least 3 nodes, got {n}")));
        }
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(LabError::invalid(format!("bad domain [{lo}, {hi}]")));
        }
        let dx = (hi - lo) / (n - 1) as f64;
        let nodes = (0..n).map(|i| lo + i as f64 * dx).collect();
        Ok(UniformGrid { nodes, dx })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn lo(&self) -> f64 {
        self.nodes[0]
    }

    pub fn hi(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn diameter(&self) -> f64 {
        self.hi() - self.lo()
    }
}

/// A probability measure `mu ∝ exp(-V)` discretized on a uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridMeasure {
    grid: UniformGrid,
    potential: Vec<f64>,
    weights: Vec<f64>,
    base_point: f64,
}

/// Discretizes `exp(-V) dx` on `n` nodes of `[lo, hi]` and normalizes it.
pub fn build_grid_measure(potential: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> Result<GridMeasure> {
    let grid = UniformGrid::new(lo, hi, n)?;
    let values: Vec<f64> = grid.nodes().iter().map(|&x| potential(x)).collect();
    GridMeasure::from_grid_values(grid, values)
}

impl GridMeasure {
    /// Builds the measure from potential values already sampled at the nodes.
    pub fn from_values(lo: f64, hi: f64, potential: Vec<f64>) -> Result<Self> {
        let grid = UniformGrid::new(lo, hi, potential.len())?;
        Self::from_grid_values(grid, potential)
    }

    pub fn from_potential(potential: &Potential, lo: f64, hi: f64, n: usize) -> Result<Self> {
        build_grid_measure(|x| potential.eval(x), lo, hi, n)
    }

    fn from_grid_values(grid: UniformGrid, potential: Vec<f64>) -> Result<Self> {
        if let Some(index) = potential.iter().position(|v| !v.is_finite()) {
            return Err(LabError::NonFinitePotential {
                index,
                x: grid.nodes()[index],
            });
        }
        let vmin = potential.iter().copied().fold(f64::INFINITY, f64::min);
        let raw: Vec<f64> = potential.iter().map(|v| (vmin - v).exp()).collect();
        let total: f64 = raw.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(LabError::ZeroMass);
        }
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        if let Some(index) = weights.iter().position(|&w| w <= 0.0) {
            return Err(LabError::Degenerate(format!(
                "weight underflows to zero at node {index}; shrink the domain"
            )));
        }
        let base_point = if grid.lo() <= 0.0 && grid.hi() >= 0.0 {
            0.0
        } else {
            grid.lo()
        };
        Ok(GridMeasure {
            grid,
            potential,
            weights,
            base_point,
        })
    }

    /// Sets the base point `x0` used by `d(x0, .)`.
    pub fn with_base_point(mut self, x0: f64) -> Self {
        self.base_point = x0;
        self
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn nodes(&self) -> &[f64] {
        self.grid.nodes()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dx(&self) -> f64 {
        self.grid.dx()
    }

    pub fn base_point(&self) -> f64 {
        self.base_point
    }

    /// `mu(g)` for a function sampled at the nodes.
    pub fn expect(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// `d^2(x0, x_i)` at every node.
    pub fn squared_distance_to_base(&self) -> Vec<f64> {
        self.nodes().iter().map(|x| (x - self.base_point).powi(2)).collect()
    }
}

/// Mass fraction that `exp(-V)` puts outside `[lo, hi]`, estimated by doubling
/// the domain at the same spacing.
pub fn truncation_tail(potential: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> Result<f64> {
    let inner = UniformGrid::new(lo, hi, n)?;
    let dx = inner.dx();
    let pad = n / 2;
    let values: Vec<f64> = (0..n + 2 * pad)
        .map(|k| potential(lo + (k as f64 - pad as f64) * dx))
        .collect();
    if values.iter().any(|v| v.is_nan()) {
        return Err(LabError::invalid("potential is NaN on the doubled domain"));
    }
    let vmin = values
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(f64::INFINITY, f64::min);
    let mass: Vec<f64> = values.iter().map(|v| (vmin - v).exp()).collect();
    let total: f64 = mass.iter().sum();
    let outside: f64 = mass[..pad].iter().sum::<f64>() + mass[pad + n..].iter().sum::<f64>();
    Ok(outside / total)
}

/// Rejects a truncation whose tail mass exceeds `tolerance`.
pub fn check_truncation(potential: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize, tolerance: f64) -> Result<f64> {
    let tail = truncation_tail(potential, lo, hi, n)?;
    if tail > tolerance {
        return Err(LabError::TailTooHeavy { tail, tolerance });
    }
    Ok(tail)
}

/// Smallest symmetric half-width `R` (doubling from 1) whose tail mass is below `tolerance`.
pub fn auto_half_width(potential: impl Fn(f64) -> f64, n: usize, tolerance: f64) -> Result<f64> {
    let mut r = 1.0;
    for _ in 0..12 {
        if truncation_tail(&potential, -r, r, n)? < tolerance {
            return Ok(r);
        }
        r *= 2.0;
    }
    Err(LabError::invalid(
        "potential is not confining enough for automatic truncation",
    ))
}

/// A nonnegative density `f = d nu / d mu` sampled at the grid nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityRatio {
    values: Vec<f64>,
}

impl DensityRatio {
    /// Validates nonnegativity and `mu(f) = 1`.
    pub fn new(values: Vec<f64>, mu: &GridMeasure) -> Result<Self> {
        check_shape(values.len(), mu)?;
        check_nonnegative(&values)?;
        let mass = mu.expect(&values);
        if (mass - 1.0).abs() > DENSITY_TOLERANCE {
            return Err(LabError::NotNormalized { mass });
        }
        Ok(DensityRatio { values })
    }

    /// Rescales a nonnegative function so that `mu(f) = 1`.
    pub fn normalized(mut values: Vec<f64>, mu: &GridMeasure) -> Result<Self> {
        check_shape(values.len(), mu)?;
        check_nonnegative(&values)?;
        let mass = mu.expect(&values);
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(LabError::Degenerate(format!(
                "cannot normalize a function with mu-mass {mass}"
            )));
        }
        values.iter_mut().for_each(|v| *v /= mass);
        Ok(DensityRatio { values })
    }

    pub fn constant(mu: &GridMeasure) -> Self {
        DensityRatio {
            values: vec![1.0; mu.len()],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Probability masses `f_i mu_i` of `nu = f mu`.
    pub fn masses(&self, mu: &GridMeasure) -> Vec<f64> {
        self.values.iter().zip(mu.weights()).map(|(f, w)| f * w).collect()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn check_shape(len: usize, mu: &GridMeasure) -> Result<()> {
    if len != mu.len() {
        return Err(LabError::invalid(format!(
            "density has {len} values but the grid has {} nodes",
            mu.len()
        )));
    }
    Ok(())
}

fn check_nonnegative(values: &[f64]) -> Result<()> {
    for (index, &value) in values.iter().enumerate() {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(LabError::NegativeDensity { index, value });
        }
    }
    Ok(())
}

/// Central differences in the interior, first-order one-sided at the ends.
pub fn gradient(values: &[f64], dx: f64) -> Vec<f64> {
    let n = values.len();
    let mut g = vec![0.0; n];
    if n < 2 {
        return g;
    }
    g[0] = (values[1] - values[0]) / dx;
    g[n - 1] = (values[n - 1] - values[n - 2]) / dx;
    for i in 1..n - 1 {
        g[i] = (values[i + 1] - values[i - 1]) / (2.0 * dx);
    }
    g
}

/// Variance, entropy, Fisher information and Dirichlet energy of one density.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FunctionalBundle {
    pub variance: f64,
    pub entropy: f64,
    /// `+inf` when `f` vanishes at a node where its gradient does not.
    pub fisher: f64,
    pub dirichlet: f64,
}

impl FunctionalBundle {
    pub fn fisher_is_finite(&self) -> bool {
        self.fisher.is_finite()
    }
}

/// `Var_mu(g)` for an arbitrary grid function.
pub fn variance(values: &[f64], mu: &GridMeasure) -> f64 {
    let mean = mu.expect(values);
    mu.weights()
        .iter()
        .zip(values)
        .map(|(w, v)| w * (v - mean).powi(2))
        .sum()
}

/// `mu(|g'|^2)` with the finite-difference gradient.
pub fn dirichlet_energy(values: &[f64], mu: &GridMeasure) -> f64 {
    let grad = gradient(values, mu.dx());
    mu.weights().iter().zip(&grad).map(|(w, g)| w * g * g).sum()
}

pub fn functionals(f: &DensityRatio, mu: &GridMeasure) -> Result<FunctionalBundle> {
    check_shape(f.len(), mu)?;
    check_nonnegative(f.values())?;
    let values = f.values();
    let mass = mu.expect(values);
    let variance = variance(values, mu);

    // Ent(f) = mu(f log f) - mu(f) log mu(f), with 0 log 0 = 0.
    let flogf: f64 = mu
        .weights()
        .iter()
        .zip(values)
        .map(|(w, &v)| if v > 0.0 { w * v * v.ln() } else { 0.0 })
        .sum();
    let entropy = (flogf - mass * mass.ln()).max(0.0);

    let grad = gradient(values, mu.dx());
    let mut dirichlet = 0.0;
    let mut fisher = 0.0;
    for ((&w, &v), &g) in mu.weights().iter().zip(values).zip(&grad) {
        dirichlet += w * g * g;
        if v > 0.0 {
            fisher += w * g * g / v;
        } else if g != 0.0 {
            fisher = f64::INFINITY;
        }
    }

    Ok(FunctionalBundle {
        variance,
        entropy,
        fisher,
        dirichlet,
    })
}

/// `c = mu(sqrt f)`, `sigma^2 = Var_mu(sqrt f)` and `f_c = (sqrt f - c)^2 / sigma^2`.
#[derive(Clone, Debug, PartialEq)]
pub struct Centering {
    pub c: f64,
    pub sigma2: f64,
    pub f_c: DensityRatio,
}

pub fn sqrt_centering(f: &DensityRatio, mu: &GridMeasure) -> Result<Centering> {
    sqrt_centering_with(f, mu, DEGENERACY_THRESHOLD)
}

pub fn sqrt_centering_with(f: &DensityRatio, mu: &GridMeasure, threshold: f64) -> Result<Centering> {
    check_shape(f.len(), mu)?;
    let root: Vec<f64> = f.values().iter().map(|v| v.sqrt()).collect();
    let c = mu.expect(&root);
    let sigma2 = variance(&root, mu);
    if sigma2 < threshold {
        return Err(LabError::Degenerate(format!(
            "Var(sqrt f) = {sigma2:e} is below {threshold:e}; f is constant"
        )));
    }
    let values = root.iter().map(|r| (r - c).powi(2) / sigma2).collect();
    Ok(Centering {
        c,
        sigma2,
        f_c: DensityRatio { values },
    })
}

/// The grid-normalized tilt `f ∝ exp(m x)`.
///
/// On the standard Gaussian grid this is the density of `N(m, 1)` against `N(0, 1)`.
pub fn gaussian_tilt(m: f64, mu: &GridMeasure) -> Result<DensityRatio> {
    if !m.is_finite() {
        return Err(LabError::invalid("tilt slope must be finite"));
    }
    let exponents: Vec<f64> = mu.nodes().iter().map(|x| m * x).collect();
    let shift = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_mass = shift
        + mu.expect(&exponents.iter().map(|e| (e - shift).exp()).collect::<Vec<_>>())
            .ln();
    let values: Vec<f64> = exponents.iter().map(|e| (e - log_mass).exp()).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(LabError::Overflow(format!(
            "exp({m} x) overflows on this grid; use a smaller |m| or a narrower domain"
        )));
    }
    DensityRatio::normalized(values, mu)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ou(n: usize) -> GridMeasure {
        GridMeasure::from_potential(&Potential::Gaussian, -8.0, 8.0, n).unwrap()
    }

    #[test]
    fn uniform_weights() {
        let mu = GridMeasure::from_potential(&Potential::Uniform, 0.0, 1.0, 11).unwrap();
        for w in mu.weights() {
            assert!((w - 1.0 / 11.0).abs() < 1e-15);
        }
    }

    #[test]
    fn gaussian_weights_follow_density() {
        let mu = ou(1024);
        let total: f64 = mu.weights().iter().sum();
        assert!((total - 1.0).abs() < MASS_TOLERANCE);
        let dx = mu.dx();
        for (x, w) in mu.nodes().iter().zip(mu.weights()).step_by(97) {
            let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
            assert!((w / dx - pdf).abs() < 1e-9, "x = {x}");
        }
    }

    #[test]
    fn double_well_weights_match_fine_quadrature() {
        let v = |x: f64| x.powi(4) - x * x;
        let mu = build_grid_measure(v, -4.0, 4.0, 512).unwrap();
        // Oracle: Z from a 16384-node trapezoid sum.
        let fine = UniformGrid::new(-4.0, 4.0, 16384).unwrap();
        let z: f64 = fine
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let end = i == 0 || i == fine.len() - 1;
                (if end { 0.5 } else { 1.0 }) * (-v(x)).exp() * fine.dx()
            })
            .sum();
        for (x, w) in mu.nodes().iter().zip(mu.weights()) {
            let expected = (-v(*x)).exp() / z * mu.dx();
            assert!(
                (w - expected).abs() < 1e-9 * expected.max(1e-3),
                "x = {x}: {w} vs {expected}"
            );
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            build_grid_measure(|x| if x > 0.5 { f64::INFINITY } else { 0.0 }, 0.0, 1.0, 5),
            Err(LabError::NonFinitePotential { index: 3, .. })
        ));
        assert!(UniformGrid::new(0.0, 1.0, 2).is_err());
        assert!(UniformGrid::new(1.0, 0.0, 5).is_err());
        let mu = ou(64);
        let mut bad = vec![1.0; 64];
        bad[3] = -0.1;
        assert!(matches!(
            DensityRatio::normalized(bad, &mu),
            Err(LabError::NegativeDensity { index: 3, .. })
        ));
        assert!(matches!(
            DensityRatio::new(vec![2.0; 64], &mu),
            Err(LabError::NotNormalized { .. })
        ));
    }

    #[test]
    fn tail_check() {
        let v = |x: f64| 0.5 * x * x;
        assert!(check_truncation(v, -8.0, 8.0, 1024, 1e-12).is_ok());
        assert!(matches!(
            check_truncation(v, -2.0, 2.0, 256, 1e-12),
            Err(LabError::TailTooHeavy { .. })
        ));
        let r = auto_half_width(v, 512, 1e-12).unwrap();
        assert_eq!(r, 8.0);
    }

    #[test]
    fn constant_density_has_zero_functionals() {
        let mu = ou(256);
        let b = functionals(&DensityRatio::constant(&mu), &mu).unwrap();
        assert_eq!((b.variance, b.entropy, b.fisher, b.dirichlet), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn gaussian_tilt_closed_forms() {
        let mu = ou(1024);
        let m: f64 = 0.5;
        let f = gaussian_tilt(m, &mu).unwrap();
        let b = functionals(&f, &mu).unwrap();
        let e = (m * m).exp();
        assert!((b.variance - (e - 1.0)).abs() < 1e-3, "{b:?}");
        assert!((b.entropy - m * m / 2.0).abs() < 1e-3, "{b:?}");
        assert!((b.fisher - m * m).abs() < 1e-3, "{b:?}");
        assert!((b.dirichlet - m * m * e).abs() < 1e-3, "{b:?}");
        // Same values as the unnormalized closed form exp(mx - m^2/2).
        for (x, v) in mu.nodes().iter().zip(f.values()).step_by(101) {
            assert!((v - (m * x - m * m / 2.0).exp()).abs() < 1e-9 * v.max(1.0));
        }
    }

    #[test]
    fn tilt_symmetry_and_zero() {
        let mu = ou(512);
        assert!(gaussian_tilt(0.0, &mu)
            .unwrap()
            .values()
            .iter()
            .all(|v| (v - 1.0).abs() < 1e-14));
        let a = functionals(&gaussian_tilt(0.5, &mu).unwrap(), &mu).unwrap();
        let b = functionals(&gaussian_tilt(-0.5, &mu).unwrap(), &mu).unwrap();
        assert!((a.variance - b.variance).abs() < 1e-12);
        assert!((a.entropy - b.entropy).abs() < 1e-12);
        assert!((a.fisher - b.fisher).abs() < 1e-12);
    }

    #[test]
    fn tilt_overflow_is_rejected() {
        let mu = ou(64);
        assert!(matches!(gaussian_tilt(1e308, &mu), Err(LabError::Overflow(_))));
    }

    #[test]
    fn two_atom_toy() {
        // mu = (1/2, 1/2), f = (1.5, 0.5), replicated on four equal-weight nodes.
        let mu = GridMeasure::from_values(0.0, 3.0, vec![0.0; 4]).unwrap();
        let f = DensityRatio::new(vec![1.5, 0.5, 1.5, 0.5], &mu).unwrap();
        let b = functionals(&f, &mu).unwrap();
        assert!((b.variance - 0.25).abs() < 1e-15);
    }

    #[test]
    fn fisher_conventions() {
        let mu = GridMeasure::from_values(0.0, 1.0, vec![0.0; 5]).unwrap();
        let f = DensityRatio::normalized(vec![0.0, 1.0, 1.0, 1.0, 1.0], &mu).unwrap();
        assert!(!functionals(&f, &mu).unwrap().fisher_is_finite());
        // f = 0 with a vanishing central difference contributes 0^2/0 = 0.
        let g = DensityRatio::normalized(vec![2.0, 0.0, 2.0, 2.0, 2.0], &mu).unwrap();
        let b = functionals(&g, &mu).unwrap();
        assert!(b.fisher.is_finite());
        assert!(b.entropy.is_finite());
    }

    #[test]
    fn centering() {
        let mu = ou(1024);
        assert!(matches!(
            sqrt_centering(&DensityRatio::constant(&mu), &mu),
            Err(LabError::Degenerate(_))
        ));
        let f = gaussian_tilt(1.0, &mu).unwrap();
        let c = sqrt_centering(&f, &mu).unwrap();
        assert!((c.c - (-0.125f64).exp()).abs() < 1e-3);
        assert!((c.sigma2 - (1.0 - (-0.25f64).exp())).abs() < 1e-3);
        assert!((c.c * c.c + c.sigma2 - 1.0).abs() < 1e-10);
        assert!((mu.expect(c.f_c.values()) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn centering_two_atom_oracle() {
        let mu = GridMeasure::from_values(0.0, 3.0, vec![0.0; 4]).unwrap();
        let f = DensityRatio::new(vec![1.5, 0.5, 1.5, 0.5], &mu).unwrap();
        let c = sqrt_centering(&f, &mu).unwrap();
        let expected_c = (1.5f64.sqrt() + 0.5f64.sqrt()) / 2.0;
        assert!((c.c - expected_c).abs() < 1e-15);
        assert!((c.sigma2 - (1.0 - expected_c * expected_c)).abs() < 1e-12);
        assert!((mu.expect(c.f_c.values()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn richardson_refinement() {
        // Functionals of a smooth density converge at second order.
        let f_of = |n: usize| {
            let mu = ou(n);
            let v: Vec<f64> = mu
                .nodes()
                .iter()
                .map(|x| 1.0 + 0.3 * (x * 1.3).sin() * (-x * x / 8.0).exp())
                .collect();
            let f = DensityRatio::normalized(v, &mu).unwrap();
            functionals(&f, &mu).unwrap()
        };
        let (a, b, c) = (f_of(257), f_of(513), f_of(1025));
        let ratio = (a.dirichlet - b.dirichlet).abs() / (b.dirichlet - c.dirichlet).abs();
        assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
        assert!((b.variance - c.variance).abs() < 1e-4);
        assert!((b.entropy - c.entropy).abs() < 1e-4);
    }
}
