//! Quadratic Wasserstein distance backends.

pub mod lp;
pub mod quantile;
pub mod sinkhorn;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::measure::{DensityRatio, GridMeasure};

pub use lp::{atomize, solve_transport, w2_lp, FiniteMetricMeasure, LpOptions, LpSolution, MetricSpace, TransportPlan};
pub use quantile::{w2_quantile, w2_squared_between, w2_squared_quantile};
pub use sinkhorn::{sinkhorn, SinkhornOptions, SinkhornResult};

/// Which solver supplies `W2(f mu, mu)` on grid models.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TransportBackend {
    Quantile {
        #[serde(default)]
        points: Option<usize>,
    },
    Lp,
    /// Uses the upper bracket.
    Sinkhorn {
        epsilon: f64,
        tol: f64,
    },
}

impl Default for TransportBackend {
    fn default() -> Self {
        TransportBackend::Quantile { points: None }
    }
}

impl TransportBackend {
    pub fn w2_squared(&self, nu: &DensityRatio, mu: &GridMeasure) -> Result<f64> {
        match *self {
            TransportBackend::Quantile { points } => w2_squared_quantile(nu, mu, points),
            TransportBackend::Lp => {
                let (s, t) = atomize(nu, mu)?;
                Ok(w2_lp(&s, &t, &LpOptions::default())?.cost)
            }
            TransportBackend::Sinkhorn { epsilon, tol } => {
                let (s, t) = atomize(nu, mu)?;
                let opts = SinkhornOptions {
                    epsilon,
                    tol,
                    ..SinkhornOptions::default()
                };
                Ok(sinkhorn(&s, &t, &opts)?.upper)
            }
        }
    }

    pub fn w2(&self, nu: &DensityRatio, mu: &GridMeasure) -> Result<f64> {
        Ok(self.w2_squared(nu, mu)?.max(0.0).sqrt())
    }

    pub fn label(&self) -> &'static str {
        match self {
            TransportBackend::Quantile { .. } => "quantile",
            TransportBackend::Lp => "lp",
            TransportBackend::Sinkhorn { .. } => "sinkhorn",
        }
    }
}

/// `2 sum_i d^2(x0, x_i) |f_i - 1| mu_i`, the weighted total-variation bound on `W2^2`.
pub fn weighted_tv_bound(nu: &DensityRatio, mu: &GridMeasure) -> f64 {
    mu.squared_distance_to_base()
        .iter()
        .zip(nu.values())
        .zip(mu.weights())
        .map(|((d2, f), w)| d2 * (f - 1.0).abs() * w)
        .sum::<f64>()
        * 2.0
}
