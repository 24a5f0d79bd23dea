use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::measure::{gaussian_tilt, DensityRatio, GridMeasure};

/// Test densities `f = dν/dμ` built on every model of a suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensityFamilySpec {
    /// Slopes `m` of `f ∝ exp(m x)`.
    pub tilts: Vec<f64>,
    pub mixtures: Vec<MixtureSpec>,
    /// Number of smooth random perturbations `1 + a g`.
    pub random_perturbations: usize,
    pub seed: u64,
    /// `a` above; must lie in `[0, 1)` so the perturbation stays positive.
    pub amplitude: f64,
    /// Cosine modes in each random `g`.
    pub modes: usize,
    /// Adds `f ≡ 1`, which exercises the degenerate branches.
    pub include_constant: bool,
}

/// `f ∝ Σ w_k exp(m_k x)`, a multi-bump density on Gaussian-like models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureSpec {
    pub weights: Vec<f64>,
    pub shifts: Vec<f64>,
}

impl Default for DensityFamilySpec {
    fn default() -> Self {
        let mix = |w: [f64; 2], m: [f64; 2]| MixtureSpec {
            weights: w.to_vec(),
            shifts: m.to_vec(),
        };
        DensityFamilySpec {
            tilts: vec![-1.0, -0.5, -0.25, 0.25, 0.5, 1.0],
            mixtures: vec![
                mix([0.5, 0.5], [-1.5, 1.5]),
                mix([0.3, 0.7], [-1.0, 1.0]),
                mix([0.5, 0.5], [-2.0, 2.0]),
                mix([0.6, 0.4], [-0.5, 1.5]),
            ],
            random_perturbations: 10,
            seed: 20240917,
            amplitude: 0.5,
            modes: 6,
            include_constant: false,
        }
    }
}

impl DensityFamilySpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.amplitude) {
            return Err(LabError::invalid(format!(
                "amplitude must lie in [0, 1), got {}",
                self.amplitude
            )));
        }
        if self.random_perturbations > 0 && self.modes == 0 {
            return Err(LabError::invalid("random perturbations need at least one mode"));
        }
        for m in &self.mixtures {
            if m.weights.is_empty() || m.weights.len() != m.shifts.len() {
                return Err(LabError::invalid(
                    "mixture weights and shifts must be nonempty and of equal length",
                ));
            }
            if m.weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
                return Err(LabError::invalid("mixture weights must be positive"));
            }
        }
        Ok(())
    }

    /// Labeled densities in a fixed order: constant, tilts, mixtures, random.
    pub fn build(&self, mu: &GridMeasure) -> Result<Vec<(String, DensityRatio)>> {
        self.validate()?;
        let mut out = Vec::new();
        if self.include_constant {
            out.push(("const".to_string(), DensityRatio::constant(mu)));
        }
        for &m in &self.tilts {
            out.push((format!("tilt({m})"), gaussian_tilt(m, mu)?));
        }
        for spec in &self.mixtures {
            out.push((mixture_label(spec), mixture(spec, mu)?));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let (lo, len) = (mu.grid().lo(), mu.grid().diameter());
        for k in 0..self.random_perturbations {
            let coeffs: Vec<(f64, f64)> = (1..=self.modes)
                .map(|j| {
                    let a: f64 = rng.random_range(-1.0..1.0);
                    let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                    (a / j as f64, phase)
                })
                .collect();
            let g: Vec<f64> = mu
                .nodes()
                .iter()
                .map(|x| {
                    let u = std::f64::consts::PI * (x - lo) / len;
                    coeffs
                        .iter()
                        .enumerate()
                        .map(|(j, (a, ph))| a * ((j + 1) as f64 * u + ph).cos())
                        .sum()
                })
                .collect();
            let sup = g.iter().fold(0.0f64, |s, v| s.max(v.abs()));
            let scale = if sup > 0.0 { self.amplitude / sup } else { 0.0 };
            let values = g.iter().map(|v| 1.0 + scale * v).collect();
            out.push((
                format!("random({},{k})", self.seed),
                DensityRatio::normalized(values, mu)?,
            ));
        }
        Ok(out)
    }
}

fn mixture_label(spec: &MixtureSpec) -> String {
    let parts: Vec<String> = spec
        .weights
        .iter()
        .zip(&spec.shifts)
        .map(|(w, m)| format!("{w}@{m}"))
        .collect();
    format!("mix({})", parts.join("|"))
}

fn mixture(spec: &MixtureSpec, mu: &GridMeasure) -> Result<DensityRatio> {
    let total: f64 = spec.weights.iter().sum();
    let mut values = vec![0.0; mu.len()];
    for (w, &m) in spec.weights.iter().zip(&spec.shifts) {
        let tilt = gaussian_tilt(m, mu)?;
        for (v, t) in values.iter_mut().zip(tilt.values()) {
            *v += w / total * t;
        }
    }
    DensityRatio::normalized(values, mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Potential;

    #[test]
    fn default_family_has_twenty_positive_members() {
        let mu = GridMeasure::from_potential(&Potential::Gaussian, -8.0, 8.0, 256).unwrap();
        let fam = DensityFamilySpec::default().build(&mu).unwrap();
        assert_eq!(fam.len(), 20);
        for (label, f) in &fam {
            assert!(f.min() > 0.0, "{label}");
            assert!((mu.expect(f.values()) - 1.0).abs() < 1e-12, "{label}");
        }
        let again = DensityFamilySpec::default().build(&mu).unwrap();
        assert_eq!(fam, again);
    }

    #[test]
    fn seeds_change_the_random_members() {
        let mu = GridMeasure::from_potential(&Potential::Gaussian, -8.0, 8.0, 128).unwrap();
        let spec = |seed| DensityFamilySpec {
            tilts: vec![],
            mixtures: vec![],
            seed,
            ..Default::default()
        };
        let a = spec(1).build(&mu).unwrap();
        let b = spec(2).build(&mu).unwrap();
        assert_ne!(a[0].1, b[0].1);
    }

    #[test]
    fn rejects_bad_amplitude() {
        let spec = DensityFamilySpec {
            amplitude: 1.0,
            ..Default::default()
        };
        assert!(spec.validate().is_err());
    }
}
