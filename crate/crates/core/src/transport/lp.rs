//! Exact discrete optimal transport by the transportation simplex method.
//!
//! The basis is a spanning tree of the bipartite source/target graph with
//! `n + m - 1` cells. Potentials `u_i + v_j = c_ij` on the tree give the
//! reduced costs; the most negative one enters and the cycle it closes in
//! the tree decides which cell leaves.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{LabError, Result};
use crate::measure::{DensityRatio, GridMeasure};

/// Default cap on each side of the LP.
pub const DEFAULT_SIZE_CAP: usize = 500;
const MARGINAL_TOLERANCE: f64 = 1e-9;
const TRIANGLE_TOLERANCE: f64 = 1e-12;
const TRIANGLE_SAMPLES: usize = 200_000;

/// A finite metric space `(E, d)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricSpace {
    n: usize,
    dist: Vec<f64>,
}

impl MetricSpace {
    /// Validates symmetry, zero diagonal, nonnegativity and the triangle
    /// inequality (all triples up to 64 points, a fixed random sample above).
    pub fn new(n: usize, dist: Vec<f64>) -> Result<Self> {
        if n == 0 || dist.len() != n * n {
            return Err(LabError::invalid("distance matrix must be n x n with n > 0"));
        }
        for i in 0..n {
            if dist[i * n + i] != 0.0 {
                return Err(LabError::invalid(format!("d({i},{i}) is not zero")));
            }
            for j in 0..n {
                let d = dist[i * n + j];
                if !(d >= 0.0) || !d.is_finite() {
                    return Err(LabError::invalid(format!(
                        "d({i},{j}) = {d} is not a finite nonnegative number"
                    )));
                }
                if (d - dist[j * n + i]).abs() > TRIANGLE_TOLERANCE * d.max(1.0) {
                    return Err(LabError::invalid(format!(
                        "distance matrix is not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        let space = MetricSpace { n, dist };
        if n <= 64 {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        space.check_triangle(i, j, k)?;
                    }
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
            for _ in 0..TRIANGLE_SAMPLES {
                let (i, j, k) = (rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n));
                space.check_triangle(i, j, k)?;
            }
        }
        Ok(space)
    }

    /// Points on the real line with `d(x, y) = |x - y|`.
    pub fn from_line(points: &[f64]) -> Result<Self> {
        let n = points.len();
        let dist = points
            .iter()
            .flat_map(|x| points.iter().map(move |y| (x - y).abs()))
            .collect();
        Self::new(n, dist)
    }

    fn check_triangle(&self, i: usize, j: usize, k: usize) -> Result<()> {
        let (dij, djk, dik) = (self.get(i, j), self.get(j, k), self.get(i, k));
        if dik > dij + djk + TRIANGLE_TOLERANCE * dik.max(1.0) {
            return Err(LabError::invalid(format!("triangle inequality fails on ({i},{j},{k})")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }
}

/// A probability vector on a shared finite metric space.
#[derive(Clone, Debug)]
pub struct FiniteMetricMeasure {
    space: Arc<MetricSpace>,
    weights: Vec<f64>,
}

impl FiniteMetricMeasure {
    pub fn new(space: Arc<MetricSpace>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != space.len() {
            return Err(LabError::invalid("weight vector does not match the metric space"));
        }
        if let Some((index, &value)) = weights.iter().enumerate().find(|(_, w)| !(**w >= 0.0)) {
            return Err(LabError::NegativeDensity { index, value });
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MARGINAL_TOLERANCE {
            return Err(LabError::NotNormalized { mass: total });
        }
        Ok(FiniteMetricMeasure { space, weights })
    }

    pub fn space(&self) -> &Arc<MetricSpace> {
        &self.space
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// `(nu, mu)` as atoms on the grid nodes of `mu`.
pub fn atomize(nu: &DensityRatio, mu: &GridMeasure) -> Result<(FiniteMetricMeasure, FiniteMetricMeasure)> {
    let space = Arc::new(MetricSpace::from_line(mu.nodes())?);
    let source = FiniteMetricMeasure::new(space.clone(), nu.masses(mu))?;
    let target = FiniteMetricMeasure::new(space, mu.weights().to_vec())?;
    Ok((source, target))
}

/// A coupling matrix (row-major `rows x cols`).
#[derive(Clone, Debug, PartialEq)]
pub struct TransportPlan {
    pub rows: usize,
    pub cols: usize,
    pub matrix: Vec<f64>,
}

impl TransportPlan {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.cols + j]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.matrix.chunks(self.cols).map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.cols];
        for row in self.matrix.chunks(self.cols) {
            for (acc, v) in s.iter_mut().zip(row) {
                *acc += v;
            }
        }
        s
    }

    /// Largest marginal violation against `(a, b)`.
    pub fn marginal_error(&self, a: &[f64], b: &[f64]) -> f64 {
        let r = self
            .row_sums()
            .iter()
            .zip(a)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        let c = self
            .col_sums()
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        r.max(c)
    }

    pub fn cost(&self, cost: impl Fn(usize, usize) -> f64) -> f64 {
        let mut total = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                let p = self.get(i, j);
                if p != 0.0 {
                    total += p * cost(i, j);
                }
            }
        }
        total
    }
}

/// Optimal plan, value and Kantorovich potentials for cost `d^p`.
#[derive(Clone, Debug)]
pub struct LpSolution {
    /// `W_p = (min cost)^(1/p)`.
    pub distance: f64,
    /// `W_p^p`, the optimal transport cost.
    pub cost: f64,
    pub plan: TransportPlan,
    /// Source potential `phi`.
    pub phi: Vec<f64>,
    /// Target potential `psi`, normalized to zero mean under the target.
    pub psi: Vec<f64>,
    pub iterations: usize,
}

impl LpSolution {
    /// `sum a phi + sum b psi - cost`; zero at optimality.
    pub fn duality_gap(&self, a: &[f64], b: &[f64]) -> f64 {
        let dual: f64 = a.iter().zip(&self.phi).map(|(x, y)| x * y).sum::<f64>()
            + b.iter().zip(&self.psi).map(|(x, y)| x * y).sum::<f64>();
        (dual - self.cost).abs()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LpOptions {
    pub exponent: f64,
    pub size_cap: usize,
    pub max_iterations: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            exponent: 2.0,
            size_cap: DEFAULT_SIZE_CAP,
            max_iterations: 1_000_000,
        }
    }
}

/// Exact `W_p` between two measures on the same metric space.
pub fn w2_lp(source: &FiniteMetricMeasure, target: &FiniteMetricMeasure, options: &LpOptions) -> Result<LpSolution> {
    if !Arc::ptr_eq(&source.space, &target.space) && source.space != target.space {
        return Err(LabError::invalid("source and target live on different metric spaces"));
    }
    if !(options.exponent >= 1.0) {
        return Err(LabError::invalid("transport exponent must be >= 1"));
    }
    let space = &source.space;
    let p = options.exponent;
    let cost = |i: usize, j: usize| {
        let d = space.get(i, j);
        if p == 2.0 {
            d * d
        } else {
            d.powf(p)
        }
    };
    let mut sol = solve_transport(source.weights(), target.weights(), cost, options)?;
    sol.distance = sol.cost.max(0.0).powf(1.0 / p);
    Ok(sol)
}

/// Transportation simplex on an arbitrary cost function.
pub fn solve_transport(
    a: &[f64],
    b: &[f64],
    cost: impl Fn(usize, usize) -> f64,
    options: &LpOptions,
) -> Result<LpSolution> {
    let (n, m) = (a.len(), b.len());
    if n == 0 || m == 0 {
        return Err(LabError::invalid("empty marginal"));
    }
    if n > options.size_cap || m > options.size_cap {
        return Err(LabError::SizeCap {
            rows: n,
            cols: m,
            cap: options.size_cap,
        });
    }
    let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
    if (sa - sb).abs() > MARGINAL_TOLERANCE {
        return Err(LabError::invalid(format!(
            "infeasible marginals: masses {sa} and {sb} differ"
        )));
    }
    let c: Vec<f64> = (0..n * m).map(|k| cost(k / m, k % m)).collect();
    let cmax = c.iter().copied().fold(0.0, |x: f64, y| x.max(y.abs()));
    let optimality_tol = 1e-13 * cmax.max(1.0);

    let mut tree = BasisTree::northwest(a, b);
    let mut u = vec![0.0; n];
    let mut v = vec![0.0; m];
    let mut iterations = 0;
    loop {
        tree.potentials(&c, m, &mut u, &mut v);
        // Dantzig pricing: most negative reduced cost.
        let mut entering = None;
        let mut best = -optimality_tol;
        for i in 0..n {
            let row = &c[i * m..(i + 1) * m];
            for (j, &cij) in row.iter().enumerate() {
                let r = cij - u[i] - v[j];
                if r < best {
                    best = r;
                    entering = Some((i, j));
                }
            }
        }
        let Some((ei, ej)) = entering else { break };
        iterations += 1;
        if iterations > options.max_iterations {
            return Err(LabError::Numerical(format!(
                "transport simplex exceeded {} pivots",
                options.max_iterations
            )));
        }
        tree.pivot(ei, ej);
    }

    let mut matrix = vec![0.0; n * m];
    for cell in &tree.cells {
        matrix[cell.i * m + cell.j] += cell.flow.max(0.0);
    }
    let plan = TransportPlan {
        rows: n,
        cols: m,
        matrix,
    };
    let total = plan.cost(|i, j| c[i * m + j]);

    // Normalize so that the target potential has zero mean under b.
    let shift = b.iter().zip(&v).map(|(w, x)| w * x).sum::<f64>() / sb;
    v.iter_mut().for_each(|x| *x -= shift);
    u.iter_mut().for_each(|x| *x += shift);

    Ok(LpSolution {
        distance: total,
        cost: total,
        plan,
        phi: u,
        psi: v,
        iterations,
    })
}

#[derive(Clone, Copy, Debug)]
struct Cell {
    i: usize,
    j: usize,
    flow: f64,
}

/// Spanning-tree basis. Nodes `0..n` are sources, `n..n+m` targets.
struct BasisTree {
    n: usize,
    m: usize,
    cells: Vec<Cell>,
}

impl BasisTree {
    /// Northwest-corner start: a staircase of exactly `n + m - 1` cells.
    fn northwest(a: &[f64], b: &[f64]) -> Self {
        let (n, m) = (a.len(), b.len());
        let mut ra = a.to_vec();
        let mut rb = b.to_vec();
        let (mut i, mut j) = (0, 0);
        let mut cells = Vec::with_capacity(n + m - 1);
        loop {
            let x = ra[i].min(rb[j]).max(0.0);
            cells.push(Cell { i, j, flow: x });
            ra[i] -= x;
            rb[j] -= x;
            if i == n - 1 && j == m - 1 {
                break;
            }
            if j == m - 1 || (i < n - 1 && ra[i] <= rb[j]) {
                i += 1;
            } else {
                j += 1;
            }
        }
        // Rounding leftovers land on the last cell.
        let last = cells.len() - 1;
        cells[last].flow += ra[n - 1].max(0.0);
        BasisTree { n, m, cells }
    }

    fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.n + self.m];
        for (k, cell) in self.cells.iter().enumerate() {
            adj[cell.i].push((self.n + cell.j, k));
            adj[self.n + cell.j].push((cell.i, k));
        }
        adj
    }

    fn potentials(&self, c: &[f64], m: usize, u: &mut [f64], v: &mut [f64]) {
        let adj = self.adjacency();
        let total = self.n + self.m;
        let mut seen = vec![false; total];
        let mut stack = vec![0usize];
        seen[0] = true;
        u[0] = 0.0;
        while let Some(node) = stack.pop() {
            for &(next, k) in &adj[node] {
                if seen[next] {
                    continue;
                }
                seen[next] = true;
                let cell = self.cells[k];
                let cij = c[cell.i * m + cell.j];
                if next >= self.n {
                    v[next - self.n] = cij - u[cell.i];
                } else {
                    u[next] = cij - v[cell.j];
                }
                stack.push(next);
            }
        }
    }

    /// Brings `(ei, ej)` into the basis and drops the blocking cell.
    fn pivot(&mut self, ei: usize, ej: usize) {
        let adj = self.adjacency();
        let total = self.n + self.m;
        // Tree path from source ei to target ej.
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; total];
        let mut seen = vec![false; total];
        let mut queue = std::collections::VecDeque::from([ei]);
        seen[ei] = true;
        let goal = self.n + ej;
        while let Some(node) = queue.pop_front() {
            if node == goal {
                break;
            }
            for &(next, k) in &adj[node] {
                if !seen[next] {
                    seen[next] = true;
                    parent[next] = Some((node, k));
                    queue.push_back(next);
                }
            }
        }
        let mut path = Vec::new();
        let mut node = goal;
        while let Some((prev, k)) = parent[node] {
            path.push(k);
            node = prev;
        }
        // Walking from the target back to the source, cells alternate
        // -, +, -, ... around the cycle opened by the entering cell.
        let mut theta = f64::INFINITY;
        let mut leaving = usize::MAX;
        for (pos, &k) in path.iter().enumerate() {
            if pos % 2 == 0 && self.cells[k].flow < theta {
                theta = self.cells[k].flow;
                leaving = k;
            }
        }
        let theta = theta.max(0.0);
        for (pos, &k) in path.iter().enumerate() {
            if pos % 2 == 0 {
                self.cells[k].flow -= theta;
            } else {
                self.cells[k].flow += theta;
            }
        }
        self.cells[leaving] = Cell {
            i: ei,
            j: ej,
            flow: theta,
        };
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_pair(points: &[f64], a: Vec<f64>, b: Vec<f64>) -> (FiniteMetricMeasure, FiniteMetricMeasure) {
        let space = Arc::new(MetricSpace::from_line(points).unwrap());
        (
            FiniteMetricMeasure::new(space.clone(), a).unwrap(),
            FiniteMetricMeasure::new(space, b).unwrap(),
        )
    }

    #[test]
    fn dirac_to_dirac() {
        let (s, t) = line_pair(&[0.0, 3.0], vec![1.0, 0.0], vec![0.0, 1.0]);
        let sol = w2_lp(&s, &t, &LpOptions::default()).unwrap();
        assert!((sol.distance - 3.0).abs() < 1e-12);
        assert!((sol.plan.get(0, 1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn split_mass_forced_plan() {
        let (s, t) = line_pair(&[0.0, 1.0], vec![0.5, 0.5], vec![1.0, 0.0]);
        let sol = w2_lp(&s, &t, &LpOptions::default()).unwrap();
        assert!((sol.cost - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_problems() {
        let (s, t) = line_pair(&[0.0, 1.0, 2.0], vec![0.5, 0.5, 0.0], vec![0.2, 0.3, 0.5]);
        let opts = LpOptions {
            size_cap: 2,
            ..LpOptions::default()
        };
        assert!(matches!(w2_lp(&s, &t, &opts), Err(LabError::SizeCap { .. })));
        assert!(solve_transport(&[0.5, 0.5], &[0.5, 0.6], |_, _| 1.0, &LpOptions::default()).is_err());
        assert!(MetricSpace::new(3, vec![0.0, 1.0, 5.0, 1.0, 0.0, 1.0, 5.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn duals_are_feasible_and_tight() {
        let pts: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
        let a: Vec<f64> = (0..40).map(|i| 1.0 + (i % 7) as f64).collect();
        let b: Vec<f64> = (0..40).map(|i| 1.0 + (i % 5) as f64).collect();
        let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
        let a: Vec<f64> = a.iter().map(|x| x / sa).collect();
        let b: Vec<f64> = b.iter().map(|x| x / sb).collect();
        let (s, t) = line_pair(&pts, a.clone(), b.clone());
        let sol = w2_lp(&s, &t, &LpOptions::default()).unwrap();
        assert!(sol.plan.marginal_error(&a, &b) < 1e-9);
        assert!(sol.duality_gap(&a, &b) <= 1e-8 * (1.0 + sol.cost));
        let space = s.space();
        for i in 0..40 {
            for j in 0..40 {
                let c = space.get(i, j).powi(2);
                assert!(sol.phi[i] + sol.psi[j] <= c + 1e-9);
                if sol.plan.get(i, j) > 1e-12 {
                    assert!((sol.phi[i] + sol.psi[j] - c).abs() < 1e-9);
                }
            }
        }
        let mean: f64 = b.iter().zip(&sol.psi).map(|(x, y)| x * y).sum();
        assert!(mean.abs() < 1e-12);
    }
}
