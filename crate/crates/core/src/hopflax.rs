//! Infimum convolution `Q_t h(x) = min_y { h(y) + (x - y)^2 / (2t) }` on a
//! uniform grid, with minimizers restricted to grid nodes.

use crate::error::{LabError, Result};
use crate::measure::{DensityRatio, GridMeasure, UniformGrid};

/// Slope mismatch (in units of `dx`) that marks a node as a kink.
pub const KINK_FACTOR: f64 = 10.0;

/// Real values on the nodes of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(LabError::invalid("grid function is empty"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(LabError::invalid(format!("grid function is not finite at node {i}")));
        }
        Ok(GridFunction { values })
    }

    pub fn from_fn(grid: &UniformGrid, h: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid.nodes().iter().map(|&x| h(x)).collect())
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

    /// Largest adjacent slope.
    pub fn lipschitz(&self, dx: f64) -> f64 {
        self.values
            .windows(2)
            .map(|w| (w[1] - w[0]).abs() / dx)
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: f64) -> GridFunction {
        GridFunction {
            values: self.values.iter().map(|v| s * v).collect(),
        }
    }
}

fn check(h: &GridFunction, t: f64, grid: &UniformGrid) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(LabError::invalid(format!(
            "Hopf-Lax time must be positive and finite, got {t}"
        )));
    }
    if h.len() != grid.len() {
        return Err(LabError::invalid("grid function does not match the grid"));
    }
    Ok(())
}

#[inline]
fn candidate(h: &[f64], i: usize, j: usize, dx: f64, two_t: f64) -> f64 {
    let d = (i as f64 - j as f64) * dx;
    h[j] + d * d / two_t
}

fn minimize(h: &[f64], i: usize, range: std::ops::Range<usize>, dx: f64, two_t: f64) -> f64 {
    let mut best = f64::INFINITY;
    for j in range {
        let v = candidate(h, i, j, dx, two_t);
        // Strict comparison keeps the smallest index on ties.
        if v < best {
            best = v;
        }
    }
    best
}

/// Brute-force minimization over every node.
pub fn hopf_lax_reference(h: &GridFunction, t: f64, grid: &UniformGrid) -> Result<GridFunction> {
    check(h, t, grid)?;
    let (n, dx, two_t) = (grid.len(), grid.dx(), 2.0 * t);
    let values = (0..n).map(|i| minimize(&h.values, i, 0..n, dx, two_t)).collect();
    Ok(GridFunction { values })
}

/// `Q_t h` on the grid.
///
/// A minimizer `y` satisfies `(x - y)^2 / (2t) <= h(x) - h(y) <= Lip |x - y|`,
/// so only nodes within `2 t Lip` of `x` can compete; the search window adds
/// two nodes of slack, which keeps results identical to the reference.
pub fn hopf_lax(h: &GridFunction, t: f64, grid: &UniformGrid) -> Result<GridFunction> {
    check(h, t, grid)?;
    let (n, dx, two_t) = (grid.len(), grid.dx(), 2.0 * t);
    let reach = 2.0 * t * h.lipschitz(dx) / dx;
    let radius = if reach < n as f64 { reach as usize + 2 } else { n };
    let values = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(radius);
            let hi = (i + radius + 1).min(n);
            minimize(&h.values, i, lo..hi, dx, two_t)
        })
        .collect();
    Ok(GridFunction { values })
}

/// Nodes closer than this to an end may have their minimizer cut off by the
/// truncated domain.
fn unclipped_margin(h: &GridFunction, t: f64, dx: f64) -> usize {
    (2.0 * t * h.lipschitz(dx) / dx).ceil() as usize + 1
}

/// Max over interior non-kink nodes of `|(Q_{t+dt} h - Q_t h)/dt + |∇Q_t h|^2 / 2|`.
/// `dt` defaults to `t / 100`.
pub fn hj_residual(h: &GridFunction, t: f64, dt: Option<f64>, grid: &UniformGrid) -> Result<f64> {
    let dt = dt.unwrap_or(t / 100.0);
    if !(dt > 0.0) {
        return Err(LabError::invalid("time step must be positive"));
    }
    let u0 = hopf_lax(h, t, grid)?;
    let u1 = hopf_lax(h, t + dt, grid)?;
    let (u0, u1) = (u0.values(), u1.values());
    let dx = grid.dx();
    let margin = unclipped_margin(h, t + dt, dx);
    if 2 * margin >= grid.len() {
        return Err(LabError::invalid("grid too small: every node sees the boundary"));
    }
    let mut worst: f64 = 0.0;
    for i in margin..grid.len() - margin {
        let left = (u0[i] - u0[i - 1]) / dx;
        let right = (u0[i + 1] - u0[i]) / dx;
        if (right - left).abs() > KINK_FACTOR * dx {
            continue;
        }
        let slope = 0.5 * (left + right);
        let r = (u1[i] - u0[i]) / dt + 0.5 * slope * slope;
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

/// `2 (∫ Q_1 h f dmu - ∫ h dmu)`, a lower bound on `W2^2(f mu, mu)`.
pub fn dual_lower_bound(f: &DensityRatio, h: &GridFunction, mu: &GridMeasure) -> Result<f64> {
    if f.len() != mu.len() {
        return Err(LabError::invalid("density and grid lengths differ"));
    }
    let q = hopf_lax(h, 1.0, mu.grid())?;
    let nu = f.masses(mu);
    let a: f64 = q.values().iter().zip(&nu).map(|(q, w)| q * w).sum();
    Ok(2.0 * (a - mu.expect(h.values())))
}

/// `max |Q_1(t h) - t h + t^2 |∇h|^2 / 2|` over nodes at least `2 t Lip(h)`
/// away from the ends, where the minimizer cannot be clipped.
pub fn expansion_defect(h: &GridFunction, t: f64, grid: &UniformGrid) -> Result<f64> {
    let th = h.scaled(t);
    let q = hopf_lax(&th, 1.0, grid)?;
    let dx = grid.dx();
    let n = grid.len();
    let margin = unclipped_margin(&th, 1.0, dx);
    if 2 * margin >= n {
        return Err(LabError::invalid("grid too small for the expansion margin"));
    }
    let hv = h.values();
    let mut worst: f64 = 0.0;
    for i in margin..n - margin {
        let g = (hv[i + 1] - hv[i - 1]) / (2.0 * dx);
        let d = q.values[i] - t * hv[i] + 0.5 * t * t * g * g;
        worst = worst.max(d.abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> UniformGrid {
        UniformGrid::new(-3.0, 3.0, 601).unwrap()
    }

    #[test]
    fn constant_is_fixed() {
        let g = grid();
        let h = GridFunction::from_fn(&g, |_| 2.5).unwrap();
        assert_eq!(hopf_lax(&h, 0.7, &g).unwrap(), h);
        assert_eq!(hj_residual(&h, 0.7, None, &g).unwrap(), 0.0);
    }

    #[test]
    fn linear_shifts_down() {
        let g = grid();
        let h = GridFunction::from_fn(&g, |x| x).unwrap();
        let q = hopf_lax(&h, 0.5, &g).unwrap();
        for (i, x) in g.nodes().iter().enumerate().filter(|(_, x)| x.abs() < 2.0) {
            assert!((q.values()[i] - (x - 0.25)).abs() < 1e-12);
        }
        // t and t + dt on the grid spacing make the minimizer exact.
        let r = hj_residual(&h, 0.5, Some(0.01), &g).unwrap();
        assert!(r < 1e-6, "{r}");
    }

    #[test]
    fn abs_matches_closed_form() {
        let g = grid();
        let h = GridFunction::from_fn(&g, f64::abs).unwrap();
        let t = 0.4;
        let q = hopf_lax(&h, t, &g).unwrap();
        for (i, &x) in g.nodes().iter().enumerate().filter(|(_, x)| x.abs() < 2.0) {
            let exact = if x.abs() >= t {
                x.abs() - t / 2.0
            } else {
                x * x / (2.0 * t)
            };
            assert!((q.values()[i] - exact).abs() < g.dx() * g.dx() / t, "{x}");
        }
        let r = hj_residual(&h, t, None, &g).unwrap();
        assert!(r <= 5.0 * (t / 100.0 + g.dx()), "{r}");
    }

    #[test]
    fn windowed_equals_reference() {
        let g = UniformGrid::new(-2.0, 2.0, 257).unwrap();
        let h = GridFunction::from_fn(&g, |x| (3.0 * x).sin() + 0.3 * x.abs()).unwrap();
        for t in [0.001, 0.05, 0.3, 2.0, 50.0] {
            assert_eq!(hopf_lax(&h, t, &g).unwrap(), hopf_lax_reference(&h, t, &g).unwrap());
        }
    }

    #[test]
    fn rejects_nonpositive_time() {
        let g = grid();
        let h = GridFunction::from_fn(&g, |x| x).unwrap();
        assert!(hopf_lax(&h, 0.0, &g).is_err());
        assert!(hopf_lax(&h, -1.0, &g).is_err());
    }

    #[test]
    fn dual_bound_trivial_cases() {
        let mu = GridMeasure::from_potential(&crate::measure::Potential::Gaussian, -6.0, 6.0, 200).unwrap();
        let f = DensityRatio::constant(&mu);
        let zero = GridFunction::new(vec![0.0; 200]).unwrap();
        assert_eq!(dual_lower_bound(&f, &zero, &mu).unwrap(), 0.0);
        let h = GridFunction::from_fn(mu.grid(), |x| x.sin()).unwrap();
        assert!(dual_lower_bound(&f, &h, &mu).unwrap() <= 0.0);
    }
}
