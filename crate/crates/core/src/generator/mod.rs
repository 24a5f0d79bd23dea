//! The mu-reversible birth–death generator approximating `L = Δ - V'·∇`,
//! its heat semigroup, and the spectral constants derived from it.
//!
//! Rates are `L[i][i+1] = sqrt(mu[i+1]/mu[i]) / dx^2` and
//! `L[i+1][i] = sqrt(mu[i]/mu[i+1]) / dx^2` with reflecting ends, so detailed
//! balance holds exactly at every resolution. Conjugating by `sqrt(mu)` turns
//! `L` into a symmetric tridiagonal matrix with constant off-diagonal
//! `1/dx^2`; that matrix is diagonalized once and cached for the spectral
//! constants. `P_t` itself is applied by contour quadrature of the resolvent
//! (see [`expm`]), which stays accurate where `mu` is tiny.

pub mod expm;
mod lsi;
mod trace;
pub mod tridiag;

use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::measure::{DensityRatio, GridMeasure};

pub use lsi::{lsi_constant, LsiBound, LsiSearch};
pub use trace::{flow_trace, FlowTrace, TraceRow};
use tridiag::{symmetric_tridiagonal_eigen, TridiagonalEigen};

/// Negative entries of `P_t f` above `-POSITIVITY_TOLERANCE * max(1, |f|_inf)`
/// are clamped to zero; anything below is a numerical failure.
pub const POSITIVITY_TOLERANCE: f64 = 1e-10;

#[derive(Debug)]
pub struct GeneratorMatrix {
    measure: GridMeasure,
    /// `up[i] = L[i][i+1]`
    up: Vec<f64>,
    /// `down[i] = L[i+1][i]`
    down: Vec<f64>,
    sqrt_mu: Vec<f64>,
    spectrum: OnceLock<std::result::Result<TridiagonalEigen, LabError>>,
}

pub fn build_generator(mu: &GridMeasure) -> Result<GeneratorMatrix> {
    GeneratorMatrix::new(mu.clone())
}

impl GeneratorMatrix {
    pub fn new(measure: GridMeasure) -> Result<Self> {
        let n = measure.len();
        if n < 3 {
            return Err(LabError::invalid("generator needs at least 3 nodes"));
        }
        let h2 = measure.dx() * measure.dx();
        let w = measure.weights();
        let up = (0..n - 1).map(|i| (w[i + 1] / w[i]).sqrt() / h2).collect();
        let down = (0..n - 1).map(|i| (w[i] / w[i + 1]).sqrt() / h2).collect();
        let sqrt_mu = w.iter().map(|v| v.sqrt()).collect();
        Ok(GeneratorMatrix {
            measure,
            up,
            down,
            sqrt_mu,
            spectrum: OnceLock::new(),
        })
    }

    pub fn measure(&self) -> &GridMeasure {
        &self.measure
    }

    pub fn dimension(&self) -> usize {
        self.measure.len()
    }

    /// `L[i][j]`; zero off the tridiagonal band.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let n = self.dimension();
        match j as isize - i as isize {
            1 => self.up[i],
            -1 => self.down[j],
            0 => {
                let mut s = 0.0;
                if i + 1 < n {
                    s += self.up[i];
                }
                if i > 0 {
                    s += self.down[i - 1];
                }
                -s
            }
            _ => 0.0,
        }
    }

    pub fn up_rates(&self) -> &[f64] {
        &self.up
    }

    pub fn down_rates(&self) -> &[f64] {
        &self.down
    }

    /// `(L g)_i` for a grid function `g`.
    pub fn apply(&self, g: &[f64]) -> Vec<f64> {
        let n = self.dimension();
        (0..n)
            .map(|i| {
                let mut s = 0.0;
                if i + 1 < n {
                    s += self.up[i] * (g[i + 1] - g[i]);
                }
                if i > 0 {
                    s += self.down[i - 1] * (g[i - 1] - g[i]);
                }
                s
            })
            .collect()
    }

    /// Dirichlet form `E(g, h) = sum_i mu_i L[i][i+1] (g_{i+1}-g_i)(h_{i+1}-h_i)`.
    pub fn dirichlet_form(&self, g: &[f64], h: &[f64]) -> f64 {
        let w = self.measure.weights();
        (0..self.dimension() - 1)
            .map(|i| w[i] * self.up[i] * (g[i + 1] - g[i]) * (h[i + 1] - h[i]))
            .sum()
    }

    /// Bond conductances `mu_i L[i][i+1]`, symmetric under detailed balance.
    pub fn conductances(&self) -> Vec<f64> {
        let w = self.measure.weights();
        self.up.iter().zip(w).map(|(u, m)| u * m).collect()
    }

    /// `max_i |mu_i L[i][i+1] - mu_{i+1} L[i+1][i]|`
    pub fn detailed_balance_residual(&self) -> f64 {
        let w = self.measure.weights();
        (0..self.dimension() - 1)
            .map(|i| (w[i] * self.up[i] - w[i + 1] * self.down[i]).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_row_sum(&self) -> f64 {
        let n = self.dimension();
        (0..n)
            .map(|i| {
                let lo = i.saturating_sub(1);
                let hi = (i + 1).min(n - 1);
                (lo..=hi).map(|j| self.entry(i, j)).sum::<f64>().abs()
            })
            .fold(0.0, f64::max)
    }

    /// Diagonal and off-diagonal of `-sqrt(mu) L / sqrt(mu)`.
    pub fn symmetrized(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.dimension();
        let diag = (0..n).map(|i| -self.entry(i, i)).collect();
        let off = (0..n - 1)
            .map(|i| -self.sqrt_mu[i] * self.up[i] / self.sqrt_mu[i + 1])
            .collect();
        (diag, off)
    }

    /// Cached eigendecomposition of `-L` in `L^2(mu)` (symmetrized form).
    pub fn spectrum(&self) -> Result<&TridiagonalEigen> {
        self.spectrum
            .get_or_init(|| {
                let (diag, off) = self.symmetrized();
                symmetric_tridiagonal_eigen(&diag, &off)
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// `P_t g` for an arbitrary grid function.
    pub fn evolve_function(&self, g: &[f64], t: f64) -> Result<Vec<f64>> {
        self.check_time(g, t)?;
        if t == 0.0 {
            return Ok(g.to_vec());
        }
        expm::expm_apply(&self.up, &self.down, g, t)
    }

    fn check_time(&self, g: &[f64], t: f64) -> Result<()> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(LabError::invalid(format!("time must be finite and >= 0, got {t}")));
        }
        if g.len() != self.dimension() {
            return Err(LabError::invalid("function length does not match the generator"));
        }
        Ok(())
    }

    /// `P_t g` through the cached eigendecomposition. Agrees with
    /// [`Self::evolve_function`] in `L^2(mu)` but loses relative accuracy
    /// where `mu` underflows toward machine precision.
    pub fn evolve_function_spectral(&self, g: &[f64], t: f64) -> Result<Vec<f64>> {
        self.check_time(g, t)?;
        if t == 0.0 {
            return Ok(g.to_vec());
        }
        let eig = self.spectrum()?;
        let n = self.dimension();
        let conj: Vec<f64> = g.iter().zip(&self.sqrt_mu).map(|(v, s)| v * s).collect();
        let mut out = vec![0.0; n];
        for k in 0..n {
            let decay = (-t * eig.values[k].max(0.0)).exp();
            if decay == 0.0 {
                continue;
            }
            let u = eig.vector(k);
            let coeff: f64 = u.iter().zip(&conj).map(|(a, b)| a * b).sum::<f64>() * decay;
            for (o, a) in out.iter_mut().zip(u) {
                *o += coeff * a;
            }
        }
        out.iter_mut().zip(&self.sqrt_mu).for_each(|(o, s)| *o /= s);
        Ok(out)
    }
}

/// `P_t f` for a density ratio; keeps `mu(P_t f) = 1` and `P_t f >= 0`.
pub fn evolve(generator: &GeneratorMatrix, f: &DensityRatio, t: f64) -> Result<DensityRatio> {
    let mut values = generator.evolve_function(f.values(), t)?;
    if t == 0.0 {
        return Ok(f.clone());
    }
    let scale = f.values().iter().copied().fold(1.0, f64::max);
    let floor = -POSITIVITY_TOLERANCE * scale;
    for (i, v) in values.iter_mut().enumerate() {
        if *v < 0.0 {
            if *v < floor {
                return Err(LabError::Numerical(format!(
                    "P_t f = {v:e} at node {i} violates positivity"
                )));
            }
            *v = 0.0;
        }
    }
    DensityRatio::normalized(values, generator.measure())
}

/// Poincaré, log-Sobolev and curvature constants with their provenance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConstantsBundle {
    pub c_p: Constant,
    pub c_ls: Option<Constant>,
    pub rho: Option<Constant>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Constant {
    pub value: f64,
    pub provenance: Provenance,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Computed,
    /// Computed as a lower bound over a finite family (log-Sobolev only).
    LowerBound,
    /// `1 / rho` from a positive curvature bound (log-Sobolev only).
    CurvatureBound,
    Supplied,
}

impl Constant {
    pub fn computed(value: f64) -> Self {
        Constant {
            value,
            provenance: Provenance::Computed,
        }
    }

    pub fn with_provenance(value: f64, provenance: Provenance) -> Self {
        Constant { value, provenance }
    }

    pub fn supplied(value: f64) -> Self {
        Constant {
            value,
            provenance: Provenance::Supplied,
        }
    }
}

/// `C_P = 1 / lambda_1`, the inverse of the smallest nonzero eigenvalue of `-L`.
pub fn spectral_gap(generator: &GeneratorMatrix) -> Result<f64> {
    Ok(1.0 / spectral_gap_eigenvalue(generator)?)
}

/// The smallest eigenvalue of `-L` once the constants are deflated.
pub fn spectral_gap_eigenvalue(generator: &GeneratorMatrix) -> Result<f64> {
    if generator.up.iter().chain(&generator.down).any(|&r| !(r > 0.0)) {
        return Err(LabError::Degenerate(
            "chain is disconnected; the spectral gap is zero".into(),
        ));
    }
    let eig = generator.spectrum()?;
    // The constants map to sqrt(mu); drop the eigenvector with the largest overlap.
    let ground = (0..eig.n)
        .max_by(|&a, &b| {
            let oa = overlap(eig.vector(a), &generator.sqrt_mu);
            let ob = overlap(eig.vector(b), &generator.sqrt_mu);
            oa.total_cmp(&ob)
        })
        .expect("nonempty spectrum");
    let gap = (0..eig.n)
        .filter(|&k| k != ground)
        .map(|k| eig.values[k])
        .fold(f64::INFINITY, f64::min);
    if !(gap > 0.0) {
        return Err(LabError::Degenerate(format!("spectral gap {gap:e} is not positive")));
    }
    Ok(gap)
}

fn overlap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>().abs()
}

/// `rho = min V''` over interior nodes, by second differences.
pub fn curvature_lower_bound(mu: &GridMeasure) -> Result<f64> {
    let n = mu.len();
    if n < 5 {
        return Err(LabError::invalid("curvature stencil needs at least 5 nodes"));
    }
    let v = mu.potential();
    let h2 = mu.dx() * mu.dx();
    Ok((1..n - 1)
        .map(|i| (v[i + 1] - 2.0 * v[i] + v[i - 1]) / h2)
        .fold(f64::INFINITY, f64::min))
}
