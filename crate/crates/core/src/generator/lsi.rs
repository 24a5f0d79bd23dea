use serde::{Deserialize, Serialize};

use super::GeneratorMatrix;
use crate::error::{LabError, Result};
use crate::measure::{functionals, gaussian_tilt, DensityRatio};

/// Family searched for the log-Sobolev ratio `2 Ent(f) / I(f)`.
///
/// Bump centers and widths are fractions of the domain length, so one
/// configuration serves every grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LsiSearch {
    pub tilt_slopes: Vec<f64>,
    pub bump_centers: Vec<f64>,
    pub bump_widths: Vec<f64>,
    pub bump_heights: Vec<f64>,
}

impl Default for LsiSearch {
    fn default() -> Self {
        LsiSearch {
            tilt_slopes: (-8..=8).map(|k| k as f64 * 0.25).collect(),
            bump_centers: vec![0.2, 0.35, 0.5, 0.65, 0.8],
            bump_widths: vec![0.03, 0.08],
            bump_heights: vec![0.5, 3.0],
        }
    }
}

/// A certified lower bound on `C_LS` and the family member attaining it.
#[derive(Clone, Debug)]
pub struct LsiBound {
    pub lower: f64,
    pub witness: DensityRatio,
    pub witness_label: String,
    pub evaluated: usize,
    pub skipped: usize,
}

pub fn lsi_constant(generator: &GeneratorMatrix, family: &LsiSearch) -> Result<LsiBound> {
    let mu = generator.measure();
    let mut candidates: Vec<(String, DensityRatio)> = Vec::new();
    for &s in &family.tilt_slopes {
        if let Ok(f) = gaussian_tilt(s, mu) {
            candidates.push((format!("tilt({s})"), f));
        }
    }
    let (lo, len) = (mu.grid().lo(), mu.grid().diameter());
    for &c in &family.bump_centers {
        for &w in &family.bump_widths {
            for &h in &family.bump_heights {
                let (center, width) = (lo + c * len, w * len);
                let values = mu
                    .nodes()
                    .iter()
                    .map(|x| 1.0 + h * (-(x - center).powi(2) / (2.0 * width * width)).exp())
                    .collect();
                candidates.push((format!("bump({c},{w},{h})"), DensityRatio::normalized(values, mu)?));
            }
        }
    }
    if candidates.is_empty() {
        return Err(LabError::invalid("log-Sobolev search family is empty"));
    }

    let mut best: Option<(f64, usize)> = None;
    let mut skipped = 0;
    for (k, (_, f)) in candidates.iter().enumerate() {
        let b = functionals(f, mu)?;
        if !(b.fisher > 0.0) || !b.fisher.is_finite() {
            skipped += 1;
            continue;
        }
        let ratio = 2.0 * b.entropy / b.fisher;
        if best.is_none_or(|(r, _)| ratio > r) {
            best = Some((ratio, k));
        }
    }
    let evaluated = candidates.len() - skipped;
    let (lower, k) = best.unwrap_or((0.0, 0));
    let (witness_label, witness) = candidates.swap_remove(k);
    Ok(LsiBound {
        lower,
        witness,
        witness_label,
        evaluated,
        skipped,
    })
}
