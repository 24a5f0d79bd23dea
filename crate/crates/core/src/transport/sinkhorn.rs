//! Entropic transport with certified brackets.
//!
//! Iterations run in the log domain with epsilon scaling. The returned upper
//! bracket is the cost of a rounded, exactly feasible plan; the lower bracket
//! is the dual objective after a c-transform, which is always dual feasible.

use super::lp::{FiniteMetricMeasure, TransportPlan};
use crate::error::{LabError, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SinkhornOptions {
    pub epsilon: f64,
    /// Target L1 marginal error before rounding.
    pub tol: f64,
    pub max_iterations: usize,
    pub exponent: f64,
}

impl Default for SinkhornOptions {
    fn default() -> Self {
        SinkhornOptions {
            epsilon: 1e-2,
            tol: 1e-9,
            max_iterations: 200_000,
            exponent: 2.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SinkhornResult {
    /// Cost of the rounded plan, an upper bound on `W_p^p`.
    pub upper: f64,
    /// Dual objective of the c-transformed potentials, a lower bound on `W_p^p`.
    pub lower: f64,
    pub plan: TransportPlan,
    pub iterations: usize,
    /// Marginal error of the unrounded plan at exit.
    pub marginal_error: f64,
}

impl SinkhornResult {
    /// Upper bracket on `W_p`.
    pub fn distance(&self, exponent: f64) -> f64 {
        self.upper.max(0.0).powf(1.0 / exponent)
    }

    pub fn contains(&self, value: f64, slack: f64) -> bool {
        self.lower - slack <= value && value <= self.upper + slack
    }
}

pub fn sinkhorn(
    source: &FiniteMetricMeasure,
    target: &FiniteMetricMeasure,
    options: &SinkhornOptions,
) -> Result<SinkhornResult> {
    if !(options.epsilon > 0.0) || !(options.tol > 0.0) {
        return Err(LabError::invalid("sinkhorn needs epsilon > 0 and tol > 0"));
    }
    if source.space() != target.space() {
        return Err(LabError::invalid("source and target live on different metric spaces"));
    }
    let space = source.space();
    let n = space.len();
    let p = options.exponent;
    let cost: Vec<f64> = (0..n * n)
        .map(|k| {
            let d = space.get(k / n, k % n);
            if p == 2.0 {
                d * d
            } else {
                d.powf(p)
            }
        })
        .collect();
    solve(source.weights(), target.weights(), &cost, options)
}

/// Sinkhorn on an explicit `n x m` cost matrix.
pub fn solve(a: &[f64], b: &[f64], cost: &[f64], options: &SinkhornOptions) -> Result<SinkhornResult> {
    let (n, m) = (a.len(), b.len());
    if cost.len() != n * m || n == 0 || m == 0 {
        return Err(LabError::invalid("cost matrix shape does not match the marginals"));
    }
    let rows: Vec<usize> = (0..n).filter(|&i| a[i] > 0.0).collect();
    let cols: Vec<usize> = (0..m).filter(|&j| b[j] > 0.0).collect();
    let log_a: Vec<f64> = a.iter().map(|x| x.ln()).collect();
    let log_b: Vec<f64> = b.iter().map(|x| x.ln()).collect();

    let cmax = cost.iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
    let mut f = vec![0.0; n];
    let mut g = vec![0.0; m];
    let mut eps = options.epsilon.max(cmax);
    let mut iterations = 0;
    let mut err;
    loop {
        // Iterate at the current epsilon until the marginals settle.
        let stage_tol = if eps > options.epsilon {
            options.tol.max(1e-3)
        } else {
            options.tol
        };
        let mut kernel = Kernel::new(&f, &g, cost, eps, &rows, &cols, m);
        loop {
            iterations += 1;
            if !kernel.scale(a, b, &rows, &cols) {
                // Rows or columns underflowed: absorb and take one log-domain step.
                kernel.absorb(&mut f, &mut g, eps, &rows, &cols);
                log_step(&mut f, &mut g, &log_a, &log_b, cost, eps, &rows, &cols, m);
                kernel = Kernel::new(&f, &g, cost, eps, &rows, &cols, m);
                continue;
            }
            if kernel.needs_absorb() {
                kernel.absorb(&mut f, &mut g, eps, &rows, &cols);
                kernel = Kernel::new(&f, &g, cost, eps, &rows, &cols, m);
            }
            if iterations % CHECK_EVERY != 0 && iterations < options.max_iterations {
                continue;
            }
            err = kernel.row_error(a, &rows, &cols);
            if err <= stage_tol {
                break;
            }
            if iterations >= options.max_iterations || !err.is_finite() {
                return Err(LabError::NoConvergence {
                    iterations,
                    last_error: err,
                });
            }
        }
        kernel.absorb(&mut f, &mut g, eps, &rows, &cols);
        if eps <= options.epsilon {
            break;
        }
        eps = (eps * 0.5).max(options.epsilon);
    }

    let mut plan = vec![0.0; n * m];
    for &i in &rows {
        for &j in &cols {
            plan[i * m + j] = ((f[i] + g[j] - cost[i * m + j]) / eps).exp();
        }
    }
    round_to_marginals(&mut plan, a, b, n, m);
    let plan = TransportPlan {
        rows: n,
        cols: m,
        matrix: plan,
    };
    let upper = plan.cost(|i, j| cost[i * m + j]);

    // c-transform of g gives a feasible pair (f~, g).
    let mut lower: f64 = cols.iter().map(|&j| b[j] * g[j]).sum();
    for &i in &rows {
        let ft = cols
            .iter()
            .map(|&j| cost[i * m + j] - g[j])
            .fold(f64::INFINITY, f64::min);
        lower += a[i] * ft;
    }

    Ok(SinkhornResult {
        upper,
        lower,
        plan,
        iterations,
        marginal_error: err,
    })
}

/// Marginal error is measured every this many iterations.
const CHECK_EVERY: usize = 10;
/// Scalings outside `[1/ABSORB, ABSORB]` are moved into the potentials.
const ABSORB: f64 = 1e40;

/// `K_ij = exp((f_i + g_j - c_ij) / eps)` with scalings `u`, `v`; the plan is
/// `u_i K_ij v_j`. Stored row-major and transposed for cache-friendly products.
struct Kernel {
    k: Vec<f64>,
    kt: Vec<f64>,
    u: Vec<f64>,
    v: Vec<f64>,
    n: usize,
    m: usize,
}

impl Kernel {
    fn new(f: &[f64], g: &[f64], cost: &[f64], eps: f64, rows: &[usize], cols: &[usize], m: usize) -> Self {
        let n = f.len();
        let mut k = vec![0.0; n * m];
        let mut kt = vec![0.0; n * m];
        for &i in rows {
            for &j in cols {
                let v = ((f[i] + g[j] - cost[i * m + j]) / eps).exp();
                k[i * m + j] = v;
                kt[j * n + i] = v;
            }
        }
        Kernel {
            k,
            kt,
            u: vec![1.0; n],
            v: vec![1.0; m],
            n,
            m,
        }
    }

    /// One row and one column update; false if any scaling is not finite.
    fn scale(&mut self, a: &[f64], b: &[f64], rows: &[usize], cols: &[usize]) -> bool {
        let (n, m) = (self.n, self.m);
        for &i in rows {
            let row = &self.k[i * m..(i + 1) * m];
            let s: f64 = cols.iter().map(|&j| row[j] * self.v[j]).sum();
            self.u[i] = a[i] / s;
        }
        for &j in cols {
            let col = &self.kt[j * n..(j + 1) * n];
            let s: f64 = rows.iter().map(|&i| col[i] * self.u[i]).sum();
            self.v[j] = b[j] / s;
        }
        rows.iter().all(|&i| self.u[i].is_finite() && self.u[i] > 0.0)
            && cols.iter().all(|&j| self.v[j].is_finite() && self.v[j] > 0.0)
    }

    fn needs_absorb(&self) -> bool {
        let out = |x: &f64| *x > ABSORB || *x < 1.0 / ABSORB;
        self.u.iter().any(out) || self.v.iter().any(out)
    }

    fn absorb(&mut self, f: &mut [f64], g: &mut [f64], eps: f64, rows: &[usize], cols: &[usize]) {
        for &i in rows {
            if self.u[i].is_finite() && self.u[i] > 0.0 {
                f[i] += eps * self.u[i].ln();
            }
            self.u[i] = 1.0;
        }
        for &j in cols {
            if self.v[j].is_finite() && self.v[j] > 0.0 {
                g[j] += eps * self.v[j].ln();
            }
            self.v[j] = 1.0;
        }
    }

    /// `Σ_i |row sum_i - a_i|`; columns are exact after `scale`.
    fn row_error(&self, a: &[f64], rows: &[usize], cols: &[usize]) -> f64 {
        let m = self.m;
        rows.iter()
            .map(|&i| {
                let row = &self.k[i * m..(i + 1) * m];
                let s: f64 = cols.iter().map(|&j| row[j] * self.v[j]).sum();
                (self.u[i] * s - a[i]).abs()
            })
            .sum()
    }
}

#[allow(clippy::too_many_arguments)]
fn log_step(
    f: &mut [f64],
    g: &mut [f64],
    log_a: &[f64],
    log_b: &[f64],
    cost: &[f64],
    eps: f64,
    rows: &[usize],
    cols: &[usize],
    m: usize,
) {
    for &i in rows {
        let row = &cost[i * m..(i + 1) * m];
        f[i] = eps * log_a[i] - eps * log_sum_exp(cols.iter().map(|&j| (g[j] - row[j]) / eps));
    }
    for &j in cols {
        g[j] = eps * log_b[j] - eps * log_sum_exp(rows.iter().map(|&i| (f[i] - cost[i * m + j]) / eps));
    }
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Projects a nonnegative matrix onto the transport polytope of `(a, b)`.
fn round_to_marginals(plan: &mut [f64], a: &[f64], b: &[f64], n: usize, m: usize) {
    for i in 0..n {
        let row = &mut plan[i * m..(i + 1) * m];
        let s: f64 = row.iter().sum();
        if s > a[i] {
            let scale = a[i] / s;
            row.iter_mut().for_each(|x| *x *= scale);
        }
    }
    for j in 0..m {
        let s: f64 = (0..n).map(|i| plan[i * m + j]).sum();
        if s > b[j] {
            let scale = b[j] / s;
            (0..n).for_each(|i| plan[i * m + j] *= scale);
        }
    }
    let ra: Vec<f64> = (0..n)
        .map(|i| (a[i] - plan[i * m..(i + 1) * m].iter().sum::<f64>()).max(0.0))
        .collect();
    let rb: Vec<f64> = (0..m)
        .map(|j| (b[j] - (0..n).map(|i| plan[i * m + j]).sum::<f64>()).max(0.0))
        .collect();
    let total: f64 = ra.iter().sum();
    if total > 0.0 {
        for i in 0..n {
            for j in 0..m {
                plan[i * m + j] += ra[i] * rb[j] / total;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::lp::{w2_lp, LpOptions, MetricSpace};
    use std::sync::Arc;

    fn pair() -> (FiniteMetricMeasure, FiniteMetricMeasure) {
        let space = Arc::new(MetricSpace::from_line(&[0.0, 0.3, 1.1, 1.7, 2.0]).unwrap());
        let a = vec![0.1, 0.3, 0.2, 0.25, 0.15];
        let b = vec![0.3, 0.1, 0.1, 0.2, 0.3];
        (
            FiniteMetricMeasure::new(space.clone(), a).unwrap(),
            FiniteMetricMeasure::new(space, b).unwrap(),
        )
    }

    #[test]
    fn brackets_contain_exact_value() {
        let (s, t) = pair();
        let exact = w2_lp(&s, &t, &LpOptions::default()).unwrap().cost;
        let mut last_upper = f64::INFINITY;
        for eps in [1e-1, 1e-2, 1e-3] {
            let r = sinkhorn(
                &s,
                &t,
                &SinkhornOptions {
                    epsilon: eps,
                    ..Default::default()
                },
            )
            .unwrap();
            assert!(r.contains(exact, 1e-12), "{eps}: {} <= {exact} <= {}", r.lower, r.upper);
            assert!(r.plan.marginal_error(s.weights(), t.weights()) < 1e-12);
            assert!(r.upper <= last_upper + 1e-12);
            last_upper = r.upper;
        }
        assert!(last_upper - exact < 1e-2);
    }

    #[test]
    fn identical_measures() {
        let (s, _) = pair();
        let r = sinkhorn(
            &s,
            &s,
            &SinkhornOptions {
                epsilon: 1e-2,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(r.contains(0.0, 1e-12));
        assert!(r.upper < 0.05);
    }

    #[test]
    fn reports_non_convergence() {
        let (s, t) = pair();
        let opts = SinkhornOptions {
            epsilon: 1e-3,
            max_iterations: 2,
            ..Default::default()
        };
        assert!(matches!(sinkhorn(&s, &t, &opts), Err(LabError::NoConvergence { .. })));
    }
}
