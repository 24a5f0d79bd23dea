use super::{w2_tolerance, InequalityReport};
use crate::generator::FlowTrace;

/// Exact-arithmetic properties of the discrete chain get only round-off slack.
const ROUNDOFF: f64 = 1e-10;

/// Exponential decay of `Var`, `Λ` and (with a valid `C_LS`) `Ent` along a trace.
pub fn check_decay(trace: &FlowTrace, c_p: f64, c_ls: Option<f64>, dx: f64, context: &str) -> Vec<InequalityReport> {
    let Some(first) = trace.rows.first() else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for row in trace.rows.iter().filter(|r| r.t > 0.0) {
        let ctx = format!("{context};t={}", row.t);
        let rhs = (-2.0 * row.t / c_p).exp() * first.variance;
        out.push(
            InequalityReport::compare(
                "decay.variance",
                &ctx,
                row.variance,
                rhs,
                ROUNDOFF * (1.0 + first.variance),
            )
            .with_constant("C_P", c_p),
        );
        let rhs = (-3.0 * row.t / c_p).exp() * first.lambda;
        out.push(
            InequalityReport::compare("decay.lambda", &ctx, row.lambda, rhs, ROUNDOFF * (1.0 + first.lambda))
                .with_constant("C_P", c_p),
        );
        if let Some(c_ls) = c_ls {
            let rhs = (-2.0 * row.t / c_ls).exp() * first.entropy;
            out.push(
                InequalityReport::compare(
                    "decay.entropy",
                    &ctx,
                    row.entropy,
                    rhs,
                    w2_tolerance(dx, row.entropy, rhs),
                )
                .with_constant("C_LS", c_ls),
            );
        }
    }
    out
}
