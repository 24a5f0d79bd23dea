//! Executable inequality checks. Every check returns [`InequalityReport`]s
//! whose verdict is a pure function of `(lhs, rhs, tolerance)` unless the
//! inputs are degenerate (vacuous) or a constant is missing (skipped).

mod contraction;
mod decay;
mod lyapunov;
mod thm1;
mod thm2;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use contraction::{
    check_contraction, check_transport_inequalities, contraction_constants, gamma, minimize_gamma_brute_force,
    w2i_constant, ContractionConstants, TransportConstants,
};
pub use decay::check_decay;
pub use lyapunov::{
    check_lyapunov, check_w2i_from_lyapunov, fit_weighted_poincare, LyapunovCheck, LyapunovWitness, WeightedPoincareFit,
};
pub use thm1::{
    best_p, check_converse, check_derivative_bound, check_functionals, check_interpolation_bound, check_thm1,
    InterpolationOptions, DEFAULT_DENSITY_FLOOR,
};
pub use thm2::{check_centralization, C1};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// A documented degeneracy makes the statement empty.
    Vacuous,
    /// A required constant is unavailable.
    Skipped,
}

/// One checked inequality `lhs <= rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub suite: String,
    pub id: String,
    pub context: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub constants: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl InequalityReport {
    /// Pass iff `rhs - lhs >= -tolerance`; NaN anywhere fails.
    pub fn compare(id: impl Into<String>, context: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let margin = rhs - lhs;
        InequalityReport {
            suite: String::new(),
            id: id.into(),
            context: context.into(),
            lhs,
            rhs,
            margin,
            tolerance,
            verdict: verdict_for(margin, tolerance),
            constants: BTreeMap::new(),
            note: None,
        }
    }

    pub fn vacuous(id: impl Into<String>, context: impl Into<String>, reason: impl Into<String>) -> Self {
        let mut r = Self::compare(id, context, 0.0, 0.0, 0.0);
        r.verdict = Verdict::Vacuous;
        r.note = Some(reason.into());
        r
    }

    pub fn skipped(id: impl Into<String>, context: impl Into<String>, reason: impl Into<String>) -> Self {
        let mut r = Self::compare(id, context, f64::NAN, f64::NAN, 0.0);
        r.verdict = Verdict::Skipped;
        r.note = Some(reason.into());
        r
    }

    pub fn with_constant(mut self, name: &str, value: f64) -> Self {
        self.constants.insert(name.to_string(), value);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn in_suite(mut self, suite: &str) -> Self {
        self.suite = suite.to_string();
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// Whether the stored verdict agrees with the stored numbers.
    pub fn is_consistent(&self) -> bool {
        match self.verdict {
            Verdict::Pass | Verdict::Fail => self.verdict == verdict_for(self.rhs - self.lhs, self.tolerance),
            Verdict::Vacuous | Verdict::Skipped => true,
        }
    }

    /// Counts toward the exit status: everything except vacuous and skipped.
    pub fn is_binding(&self) -> bool {
        matches!(self.verdict, Verdict::Pass | Verdict::Fail)
    }
}

fn verdict_for(margin: f64, tolerance: f64) -> Verdict {
    if margin >= -tolerance {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

/// `1e-6 + 2 dx max(|lhs|, |rhs|)`, the slack for anything involving `W2`.
pub fn w2_tolerance(dx: f64, lhs: f64, rhs: f64) -> f64 {
    1e-6 + 2.0 * dx * lhs.abs().max(rhs.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdicts_follow_the_numbers() {
        assert!(InequalityReport::compare("a", "c", 1.0, 1.0, 0.0).passed());
        assert!(InequalityReport::compare("a", "c", 1.0 + 1e-9, 1.0, 1e-8).passed());
        assert!(!InequalityReport::compare("a", "c", 1.1, 1.0, 1e-8).passed());
        assert!(!InequalityReport::compare("a", "c", f64::NAN, 1.0, 1e-8).passed());
        let v = InequalityReport::vacuous("thm2", "c", "sigma^2 = 0");
        assert_eq!(v.verdict, Verdict::Vacuous);
        assert!(!v.is_binding() && v.is_consistent());
        let mut r = InequalityReport::compare("a", "c", 2.0, 1.0, 0.0);
        r.verdict = Verdict::Pass;
        assert!(!r.is_consistent());
    }
}
