//! W2 between two measures on the same uniform grid through their quantile
//! functions. Each atom's mass is spread uniformly over its cell
//! `[x_i - dx/2, x_i + dx/2]`, which makes both CDFs piecewise linear.

use crate::error::{LabError, Result};
use crate::measure::{DensityRatio, GridMeasure};

/// Quantile points per grid node when no explicit count is given.
pub const DEFAULT_POINTS_PER_NODE: usize = 8;

/// `W2(f mu, mu)` with the default quantile grid of `8 n` points.
pub fn w2_quantile(nu: &DensityRatio, mu: &GridMeasure) -> Result<f64> {
    Ok(w2_squared_quantile(nu, mu, None)?.sqrt())
}

/// `W2^2(f mu, mu)`; `points` overrides the quantile grid size.
pub fn w2_squared_quantile(nu: &DensityRatio, mu: &GridMeasure, points: Option<usize>) -> Result<f64> {
    if nu.len() != mu.len() {
        return Err(LabError::invalid("density and grid lengths differ"));
    }
    let masses = nu.masses(mu);
    w2_squared_between(&masses, mu.weights(), mu.grid().lo(), mu.dx(), points)
}

/// `W2^2` between two mass vectors on the grid `lo + i dx`.
pub fn w2_squared_between(a: &[f64], b: &[f64], lo: f64, dx: f64, points: Option<usize>) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(LabError::invalid("mass vectors must be nonempty and of equal length"));
    }
    let m = points.unwrap_or(DEFAULT_POINTS_PER_NODE * a.len());
    if m == 0 {
        return Err(LabError::invalid("quantile grid must have at least one point"));
    }
    let qa = QuantileFn::new(a, lo, dx)?;
    let qb = QuantileFn::new(b, lo, dx)?;
    let (mut ca, mut cb) = (qa.cursor(), qb.cursor());
    let mut total = 0.0;
    for k in 0..m {
        let u = (k as f64 + 0.5) / m as f64;
        let d = qa.eval(u, &mut ca) - qb.eval(u, &mut cb);
        total += d * d;
    }
    Ok(total / m as f64)
}

/// Piecewise-linear inverse of a cell-smoothed CDF.
struct QuantileFn<'a> {
    masses: &'a [f64],
    /// `cum[i]` is the mass strictly left of cell `i`, normalized to total 1.
    cum: Vec<f64>,
    total: f64,
    lo: f64,
    dx: f64,
}

impl<'a> QuantileFn<'a> {
    fn new(masses: &'a [f64], lo: f64, dx: f64) -> Result<Self> {
        let mut cum = Vec::with_capacity(masses.len() + 1);
        let mut acc = 0.0;
        cum.push(0.0);
        for (i, &w) in masses.iter().enumerate() {
            if !(w >= 0.0) {
                return Err(LabError::NegativeDensity { index: i, value: w });
            }
            acc += w;
            cum.push(acc);
        }
        if !(acc > 0.0) {
            return Err(LabError::ZeroMass);
        }
        Ok(QuantileFn {
            masses,
            cum,
            total: acc,
            lo,
            dx,
        })
    }

    fn cursor(&self) -> usize {
        0
    }

    /// `F^{-1}(u)` for increasing `u`; the cursor only moves forward. Empty
    /// cells are skipped, so ties resolve to the lower quantile.
    fn eval(&self, u: f64, cursor: &mut usize) -> f64 {
        let target = u * self.total;
        let n = self.masses.len();
        while *cursor + 1 < n && (self.cum[*cursor + 1] < target || self.masses[*cursor] == 0.0) {
            *cursor += 1;
        }
        let i = *cursor;
        let w = self.masses[i];
        let frac = if w > 0.0 {
            ((target - self.cum[i]) / w).clamp(0.0, 1.0)
        } else {
            0.5
        };
        self.lo + (i as f64 - 0.5 + frac) * self.dx
    }
}
