use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use super::{thm2::C1, w2_tolerance, InequalityReport};
use crate::error::{LabError, Result};
use crate::generator::GeneratorMatrix;
use crate::measure::{functionals, sqrt_centering, DensityRatio, GridMeasure};
use crate::transport::TransportBackend;

/// `LW <= (-c d²(x, x0) + b) W` with `W > 0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LyapunovWitness {
    pub w: Vec<f64>,
    pub c: f64,
    pub b: f64,
    pub x0: f64,
}

impl LyapunovWitness {
    pub fn new(w: Vec<f64>, c: f64, b: f64, x0: f64) -> Result<Self> {
        if let Some((i, v)) = w.iter().enumerate().find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
            return Err(LabError::invalid(format!(
                "Lyapunov function must be positive and finite, W[{i}] = {v}"
            )));
        }
        if !(c > 0.0) || !(b >= 0.0) {
            return Err(LabError::invalid(format!(
                "need c > 0 and b >= 0, got c = {c}, b = {b}"
            )));
        }
        Ok(LyapunovWitness { w, c, b, x0 })
    }

    pub fn from_fn(mu: &GridMeasure, w: impl Fn(f64) -> f64, c: f64, b: f64, x0: f64) -> Result<Self> {
        Self::new(mu.nodes().iter().map(|&x| w(x)).collect(), c, b, x0)
    }

    /// `b / c`, the `C₄` the Lyapunov argument produces.
    pub fn default_c4(&self) -> f64 {
        self.b / self.c
    }
}

#[derive(Clone, Debug)]
pub struct LyapunovCheck {
    pub report: InequalityReport,
    /// `((LW)_i - (-c d_i² + b) W_i) / W_i` on interior nodes; NaN at the ends.
    pub residuals: Vec<f64>,
    /// Interior nodes whose residual exceeds the tolerance.
    pub violations: Vec<usize>,
}

/// Relative residual of the Lyapunov inequality; default tolerance `10 dx²`.
pub fn check_lyapunov(
    witness: &LyapunovWitness,
    generator: &GeneratorMatrix,
    tolerance: Option<f64>,
    context: &str,
) -> Result<LyapunovCheck> {
    let mu = generator.measure();
    let n = mu.len();
    if witness.w.len() != n {
        return Err(LabError::invalid("Lyapunov function does not match the grid"));
    }
    let tol = tolerance.unwrap_or(10.0 * mu.dx() * mu.dx());
    let lw = generator.apply(&witness.w);
    let mut residuals = vec![f64::NAN; n];
    let mut violations = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    for i in 1..n - 1 {
        let d = mu.nodes()[i] - witness.x0;
        let r = lw[i] / witness.w[i] - (-witness.c * d * d + witness.b);
        residuals[i] = r;
        worst = worst.max(r);
        if r > tol {
            violations.push(i);
        }
    }
    let report = InequalityReport::compare("lyapunov", context, worst, 0.0, tol)
        .with_constant("c", witness.c)
        .with_constant("b", witness.b)
        .with_constant("x0", witness.x0)
        .with_constant("violations", violations.len() as f64);
    Ok(LyapunovCheck {
        report,
        residuals,
        violations,
    })
}

/// Smallest `C₃` with `Σ μ d² h² <= C₃ E(h, h) + C₄ Σ μ h²` for every grid
/// function, where `E` is the Dirichlet form of the generator.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightedPoincareFit {
    /// `+∞` when the quadratic form is positive on constants.
    pub c3: f64,
    pub c4: f64,
    pub x0: f64,
    /// Extremal function (absent when `C₃` is infinite).
    #[serde(skip)]
    pub witness: Option<Vec<f64>>,
    pub diagnostic: Option<String>,
}

impl WeightedPoincareFit {
    pub fn is_finite(&self) -> bool {
        self.c3.is_finite()
    }

    /// `C₃ E(h, h) + C₄ Σ μ h² - Σ μ d² h²`; nonnegative for every `h`.
    pub fn slack(&self, generator: &GeneratorMatrix, h: &[f64]) -> f64 {
        let mu = generator.measure();
        let (mut weighted, mut plain) = (0.0, 0.0);
        for ((x, w), v) in mu.nodes().iter().zip(mu.weights()).zip(h) {
            let d = x - self.x0;
            weighted += w * d * d * v * v;
            plain += w * v * v;
        }
        self.c3 * generator.dirichlet_form(h, h) + self.c4 * plain - weighted
    }
}

/// Writes `h = h₀ 1 + S δ` with `δ` the increments, eliminates `h₀`
/// (possible because the form is negative on constants) and solves the
/// remaining `(n-1)`-dimensional eigenproblem against `diag(μ_k L[k][k+1])`.
pub fn fit_weighted_poincare(generator: &GeneratorMatrix, x0: f64, c4: f64) -> Result<WeightedPoincareFit> {
    if !(c4 >= 0.0) {
        return Err(LabError::invalid(format!("C4 must be >= 0, got {c4}")));
    }
    let mu = generator.measure();
    let n = mu.len();
    let a: Vec<f64> = mu
        .nodes()
        .iter()
        .zip(mu.weights())
        .map(|(x, w)| w * ((x - x0) * (x - x0) - c4))
        .collect();
    let alpha: f64 = a.iter().sum();
    if alpha >= 0.0 {
        return Ok(WeightedPoincareFit {
            c3: f64::INFINITY,
            c4,
            x0,
            witness: None,
            diagnostic: Some(format!(
                "constants violate the inequality (μ(d²) - C4 = {alpha:e} >= 0); increase C4"
            )),
        });
    }
    // head[k] = Σ_{i <= k} a_i, tail[k] = Σ_{i >= k} a_i. The reduced form
    // `tail[max+1] - tail[k+1] tail[l+1] / α` equals `head[min] tail[max+1] / α`;
    // the product form avoids cancellation where μ is tiny.
    let mut tail = vec![0.0; n + 1];
    for i in (0..n).rev() {
        tail[i] = tail[i + 1] + a[i];
    }
    let head: Vec<f64> = a
        .iter()
        .scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect();
    let m = n - 1;
    let scale: Vec<f64> = generator.conductances().iter().map(|w| 1.0 / w.sqrt()).collect();
    let b = DMatrix::from_fn(m, m, |k, l| {
        head[k.min(l)] * tail[k.max(l) + 1] / alpha * scale[k] * scale[l]
    });
    let eig = SymmetricEigen::new(b);
    let (top, &lambda) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.total_cmp(y.1))
        .ok_or_else(|| LabError::Numerical("empty eigenproblem".into()))?;
    let delta: Vec<f64> = eig
        .eigenvectors
        .column(top)
        .iter()
        .zip(&scale)
        .map(|(v, s)| v * s)
        .collect();
    let mut h = vec![0.0; n];
    for i in 1..n {
        h[i] = h[i - 1] + delta[i - 1];
    }
    let h0 = -delta.iter().enumerate().map(|(k, d)| tail[k + 1] * d).sum::<f64>() / alpha;
    h.iter_mut().for_each(|v| *v += h0);
    Ok(WeightedPoincareFit {
        c3: lambda.max(0.0),
        c4,
        x0,
        witness: Some(h),
        diagnostic: None,
    })
}

/// The chain `W2² <= centralized bound <= weighted-Poincaré bound <= C₇ I(f)`.
pub fn check_w2i_from_lyapunov(
    f: &DensityRatio,
    generator: &GeneratorMatrix,
    fit: &WeightedPoincareFit,
    c_p: f64,
    backend: &TransportBackend,
    context: &str,
) -> Result<Vec<InequalityReport>> {
    const IDS: [&str; 3] = [
        "w2i_lyapunov.centralized",
        "w2i_lyapunov.weighted_poincare",
        "w2i_lyapunov.w2i",
    ];
    let mu = generator.measure();
    if !fit.is_finite() {
        let reason = fit.diagnostic.clone().unwrap_or_else(|| "C3 is infinite".into());
        return Ok(IDS
            .iter()
            .map(|id| InequalityReport::skipped(*id, context, reason.clone()))
            .collect());
    }
    let centering = match sqrt_centering(f, mu) {
        Ok(c) => c,
        Err(LabError::Degenerate(reason)) => {
            return Ok(IDS
                .iter()
                .map(|id| InequalityReport::vacuous(*id, context, reason.clone()))
                .collect());
        }
        Err(e) => return Err(e),
    };
    let (c, sigma2) = (centering.c, centering.sigma2);
    let c2 = 96.0 * c_p;
    let d2: Vec<f64> = mu.nodes().iter().map(|x| (x - fit.x0) * (x - fit.x0)).collect();
    let m2 = mu.expect(&d2);
    let h: Vec<f64> = f.values().iter().map(|v| v.sqrt() - c).collect();
    let a_f = mu.expect(&d2.iter().zip(&h).map(|(d, v)| d * v * v).collect::<Vec<_>>());
    let energy = generator.dirichlet_form(&h, &h);
    let fisher = functionals(f, mu)?.fisher;
    let w2sq = backend.w2_squared(f, mu)?;
    let dx = mu.dx();

    let rhs1 = 2.0 * C1 * a_f + (2.0 * C1 * m2 + c2) * sigma2;
    let rhs2 = fit.c3 * energy + fit.c4 * sigma2;
    let c7 = 2.0 * C1 * fit.c3 / 4.0 + (2.0 * C1 * fit.c4 + 2.0 * C1 * m2 + c2) * c_p / 4.0;
    let rhs3 = c7 * fisher;
    Ok(vec![
        InequalityReport::compare(IDS[0], context, w2sq, rhs1, w2_tolerance(dx, w2sq, rhs1))
            .with_constant("C_1", C1)
            .with_constant("C_2", c2)
            .with_constant("mu_d2", m2)
            .with_constant("sigma2", sigma2),
        InequalityReport::compare(IDS[1], context, a_f, rhs2, 1e-12 * (1.0 + rhs2.abs()))
            .with_constant("C_3", fit.c3)
            .with_constant("C_4", fit.c4),
        InequalityReport::compare(IDS[2], context, w2sq, rhs3, w2_tolerance(dx, w2sq, rhs3))
            .with_constant("C_7", c7)
            .with_constant("C_3", fit.c3)
            .with_constant("C_4", fit.c4)
            .with_constant("C_P", c_p),
    ])
}
