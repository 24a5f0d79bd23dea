use super::{w2_tolerance, InequalityReport};
use crate::error::{LabError, Result};
use crate::measure::{sqrt_centering, DensityRatio, GridMeasure};
use crate::transport::TransportBackend;

/// Multiplier of the centralized transport term.
pub const C1: f64 = 2.0;
/// `C₂ = 96 C_P`.
const C2_FACTOR: f64 = 96.0;

/// `W2^2(ν, μ) <= C₁ σ² W2^2(f_c μ, μ) + C₂ σ²`, plus the diameter form
/// `W2^2 <= σ² (C₁ diam² + C₂)` when the reference measure has bounded support.
pub fn check_centralization(
    f: &DensityRatio,
    mu: &GridMeasure,
    c_p: f64,
    bounded: bool,
    backend: &TransportBackend,
    context: &str,
) -> Result<Vec<InequalityReport>> {
    let centering = match sqrt_centering(f, mu) {
        Ok(c) => c,
        Err(LabError::Degenerate(reason)) => {
            let mut out = vec![InequalityReport::vacuous("thm2", context, reason.clone())];
            if bounded {
                out.push(InequalityReport::vacuous("thm2.bounded", context, reason));
            }
            return Ok(out);
        }
        Err(e) => return Err(e),
    };
    let c2 = C2_FACTOR * c_p;
    let sigma2 = centering.sigma2;
    let lhs = backend.w2_squared(f, mu)?;
    let w2c = backend.w2_squared(&centering.f_c, mu)?;
    let rhs = C1 * sigma2 * w2c + c2 * sigma2;
    let dx = mu.dx();
    let mut out = vec![
        InequalityReport::compare("thm2", context, lhs, rhs, w2_tolerance(dx, lhs, rhs))
            .with_constant("C_1", C1)
            .with_constant("C_2", c2)
            .with_constant("C_P", c_p)
            .with_constant("sigma2", sigma2)
            .with_constant("c", centering.c)
            .with_constant("W2sq_fc", w2c),
    ];
    if bounded {
        let diam = mu.grid().diameter();
        let rhs = sigma2 * (C1 * diam * diam + c2);
        out.push(
            InequalityReport::compare("thm2.bounded", context, lhs, rhs, w2_tolerance(dx, lhs, rhs))
                .with_constant("C_1", C1)
                .with_constant("C_2", c2)
                .with_constant("diam", diam)
                .with_constant("sigma2", sigma2),
        );
    }
    Ok(out)
}
