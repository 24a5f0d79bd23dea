use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::density::DensityFamilySpec;
use crate::battery::{InterpolationOptions, DEFAULT_DENSITY_FLOOR};
use crate::measure::{Potential, DEFAULT_TAIL_TOLERANCE};
use crate::transport::TransportBackend;

/// A batch of checks: models × densities × suites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub models: Vec<ModelSpec>,
    #[serde(default)]
    pub densities: DensityFamilySpec,
    pub suites: Vec<SuiteId>,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Positive times for the flow-based checks.
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
    #[serde(default)]
    pub transport: TransportBackend,
    #[serde(default)]
    pub options: CheckOptions,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_times() -> Vec<f64> {
    vec![0.25, 0.5, 1.0, 2.0, 4.0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    /// Defaults to the potential's label.
    #[serde(default)]
    pub name: Option<String>,
    pub potential: Potential,
    /// `[lo, hi]`; chosen from the tail tolerance when absent.
    #[serde(default)]
    pub domain: Option<[f64; 2]>,
    pub n: usize,
    #[serde(default)]
    pub x0: f64,
    /// A known valid (upper) log-Sobolev constant.
    #[serde(default)]
    pub c_ls: Option<f64>,
    /// A known Talagrand constant.
    #[serde(default)]
    pub c_t: Option<f64>,
    #[serde(default)]
    pub lyapunov: Option<LyapunovSpec>,
}

impl ModelSpec {
    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.potential.label())
    }
}

/// `W` with `LW <= (-c d²(x, x0) + b) W`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovSpec {
    pub witness: WitnessShape,
    pub c: f64,
    pub b: f64,
    /// Defaults to `b / c`.
    #[serde(default)]
    pub c4: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WitnessShape {
    /// `exp(a (x - x0)²)`
    ExpQuadratic {
        a: f64,
    },
    Constant,
}

impl WitnessShape {
    pub fn eval(&self, x: f64, x0: f64) -> f64 {
        match *self {
            WitnessShape::ExpQuadratic { a } => (a * (x - x0) * (x - x0)).exp(),
            WitnessShape::Constant => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Largest mass `exp(-V)` may put outside the domain.
    pub tail: f64,
    /// Lyapunov residual tolerance; `10 dx²` when absent.
    pub lyapunov: Option<f64>,
    /// Positive floor the derivative check requires of densities.
    pub density_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tail: DEFAULT_TAIL_TOLERANCE,
            lyapunov: None,
            density_floor: DEFAULT_DENSITY_FLOOR,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckOptions {
    pub interpolation: InterpolationOptions,
    /// Finite-difference step of the derivative check.
    pub lemma1_dt: f64,
    /// Perturbation size of the converse check.
    pub converse_epsilon: f64,
    /// Time of the Hopf–Lax scaling check.
    pub hopflax_t: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            interpolation: InterpolationOptions::default(),
            lemma1_dt: 1e-2,
            converse_epsilon: 1e-2,
            hopflax_t: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub report: String,
    pub summary: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: PathBuf::from("."),
            report: "report.json".into(),
            summary: "summary.csv".into(),
        }
    }
}

/// Named groups of checks a config may select.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteId {
    Functional,
    Thm1,
    Interpolation,
    Lemma1,
    Decay,
    Prop1,
    Transport,
    Thm2,
    Lyapunov,
    Converse,
    Hopflax,
}

impl SuiteId {
    pub const ALL: [SuiteId; 11] = [
        SuiteId::Functional,
        SuiteId::Thm1,
        SuiteId::Interpolation,
        SuiteId::Lemma1,
        SuiteId::Decay,
        SuiteId::Prop1,
        SuiteId::Transport,
        SuiteId::Thm2,
        SuiteId::Lyapunov,
        SuiteId::Converse,
        SuiteId::Hopflax,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SuiteId::Functional => "functional",
            SuiteId::Thm1 => "thm1",
            SuiteId::Interpolation => "interpolation",
            SuiteId::Lemma1 => "lemma1",
            SuiteId::Decay => "decay",
            SuiteId::Prop1 => "prop1",
            SuiteId::Transport => "transport",
            SuiteId::Thm2 => "thm2",
            SuiteId::Lyapunov => "lyapunov",
            SuiteId::Converse => "converse",
            SuiteId::Hopflax => "hopflax",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            SuiteId::Functional => "Ent <= Var, Ent <= p Var^(1/p), the Poincaré inequality, C_P <= C_LS",
            SuiteId::Thm1 => "the five W2^2 bounds in terms of Var, Ent and the Dirichlet energy",
            SuiteId::Interpolation => "W2^2 <= 2 sqrt(Ent f) ∫ sqrt(Ent P_t f) dt",
            SuiteId::Lemma1 => "|d/dt W2^2(P_t f)| <= 2 W2 sqrt(I) at the configured times",
            SuiteId::Decay => "exponential decay of Var, Λ and Ent along the heat flow",
            SuiteId::Prop1 => "Wasserstein contraction from LSI and a curvature bound",
            SuiteId::Transport => "Talagrand, W2V, W2I, HWI and the weighted total-variation bound",
            SuiteId::Thm2 => "the centralization bound with C1 = 2, C2 = 96 C_P",
            SuiteId::Lyapunov => "Lyapunov witness, weighted Poincaré fit and the chained W2I bound",
            SuiteId::Converse => "Poincaré inequality recovered from measured transport constants",
            SuiteId::Hopflax => "Kantorovich dual lower bounds and the Hopf–Lax scaling identity",
        }
    }
}

impl fmt::Display for SuiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Config parse failure with the position serde reported.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{0}")]
    Invalid(String),
}

impl SuiteConfig {
    pub fn from_json(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let config: SuiteConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text, path)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.models.is_empty() {
            return invalid("models: at least one model is required".into());
        }
        if self.suites.is_empty() {
            return invalid("suites: select at least one suite".into());
        }
        for (k, m) in self.models.iter().enumerate() {
            if m.n < 8 {
                return invalid(format!("models[{k}].n: need at least 8 nodes, got {}", m.n));
            }
            if let Some([lo, hi]) = m.domain {
                if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                    return invalid(format!("models[{k}].domain: need finite lo < hi, got [{lo}, {hi}]"));
                }
            } else if m.potential.is_bounded() {
                return invalid(format!("models[{k}].domain: required for a bounded model"));
            }
            for (field, v) in [("c_ls", m.c_ls), ("c_t", m.c_t)] {
                if let Some(v) = v {
                    if !(v > 0.0) || !v.is_finite() {
                        return invalid(format!("models[{k}].{field}: must be positive, got {v}"));
                    }
                }
            }
        }
        if self.times.iter().any(|t| !(*t > 0.0) || !t.is_finite()) || self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("times: must be positive and strictly increasing".into());
        }
        if let Err(e) = self.densities.validate() {
            return invalid(format!("densities: {e}"));
        }
        if !(self.options.lemma1_dt > 0.0) || self.times.iter().any(|&t| t <= self.options.lemma1_dt) {
            return invalid("options.lemma1_dt: must be positive and below every time".into());
        }
        if !(self.options.converse_epsilon > 0.0 && self.options.converse_epsilon < 1.0) {
            return invalid("options.converse_epsilon: must lie in (0, 1)".into());
        }
        if !(self.options.hopflax_t > 0.0) {
            return invalid("options.hopflax_t: must be positive".into());
        }
        Ok(())
    }
}
