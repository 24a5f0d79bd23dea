use serde::{Deserialize, Serialize};

use super::{w2_tolerance, InequalityReport};
use crate::error::{LabError, Result};
use crate::generator::{evolve, GeneratorMatrix};
use crate::measure::{functionals, DensityRatio, GridMeasure};
use crate::transport::{weighted_tv_bound, TransportBackend};

/// Explicit constants of the LSI ⇒ Wasserstein contraction bound
/// `W2(P_t ν, μ) <= C e^(-κ t) W2(ν, μ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionConstants {
    pub rho: f64,
    pub c_ls: f64,
    pub t0: f64,
    /// `β(T₀)`
    pub beta_t0: f64,
    /// `γ(T₀)`
    pub gamma_t0: f64,
    pub c: f64,
    pub kappa: f64,
}

/// `1/β(T) = ρ / (1 - e^(-2ρT)) - ρ`, or `1/(2T)` at `ρ = 0`.
pub fn inverse_beta(rho: f64, t: f64) -> f64 {
    if rho == 0.0 {
        1.0 / (2.0 * t)
    } else {
        rho / -(-2.0 * rho * t).exp_m1() - rho
    }
}

/// `γ(T) = C_LS e^(2T/C_LS) / β(T)`.
pub fn gamma(rho: f64, c_ls: f64, t: f64) -> f64 {
    c_ls * (2.0 * t / c_ls).exp() * inverse_beta(rho, t)
}

pub fn contraction_constants(rho: f64, c_ls: f64) -> Result<ContractionConstants> {
    if !(c_ls > 0.0) || !c_ls.is_finite() {
        return Err(LabError::invalid(format!("C_LS must be positive, got {c_ls}")));
    }
    if !rho.is_finite() {
        return Err(LabError::invalid("curvature bound must be finite"));
    }
    let t0 = if rho == 0.0 {
        c_ls / 2.0
    } else {
        (c_ls * rho.abs()).ln_1p() / (2.0 * rho.abs())
    };
    let inv_beta = inverse_beta(rho, t0);
    let gamma_t0 = gamma(rho, c_ls, t0);
    let short_time = ((2.0 / c_ls - 2.0 * rho) * t0).exp();
    let c = gamma_t0.max(short_time).max(1.0).sqrt();
    Ok(ContractionConstants {
        rho,
        c_ls,
        t0,
        beta_t0: 1.0 / inv_beta,
        gamma_t0,
        c,
        kappa: 1.0 / c_ls,
    })
}

/// `(T*, γ(T*))` minimizing `γ` over `(0, 10 C_LS]` by a log-spaced scan
/// followed by golden-section refinement.
pub fn minimize_gamma_brute_force(rho: f64, c_ls: f64) -> (f64, f64) {
    let hi = 10.0 * c_ls;
    let lo = hi * 1e-9;
    let samples = 200_000;
    let at = |k: usize| lo * (hi / lo).powf(k as f64 / samples as f64);
    let (mut best_k, mut best) = (0, f64::INFINITY);
    for k in 0..=samples {
        let g = gamma(rho, c_ls, at(k));
        if g < best {
            best = g;
            best_k = k;
        }
    }
    let (mut a, mut b) = (at(best_k.saturating_sub(1)), at((best_k + 1).min(samples)));
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if gamma(rho, c_ls, c) <= gamma(rho, c_ls, d) {
            b = d;
        } else {
            a = c;
        }
    }
    let t = 0.5 * (a + b);
    let g = gamma(rho, c_ls, t);
    if g < best {
        (t, g)
    } else {
        (at(best_k), best)
    }
}

/// `W2(P_t ν, μ) <= C e^(-κ t) W2(ν, μ)` at each time.
pub fn check_contraction(
    f: &DensityRatio,
    generator: &GeneratorMatrix,
    backend: &TransportBackend,
    constants: &ContractionConstants,
    times: &[f64],
    context: &str,
) -> Result<Vec<InequalityReport>> {
    let mu = generator.measure();
    let w0 = backend.w2(f, mu)?;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let ctx = format!("{context};t={t}");
        if w0 == 0.0 {
            out.push(InequalityReport::vacuous("prop1.contraction", ctx, "W2(ν, μ) = 0"));
            continue;
        }
        let ft = evolve(generator, f, t).map_err(|e| e.at_time(t))?;
        let lhs = backend.w2(&ft, mu).map_err(|e| e.at_time(t))?;
        let rhs = constants.c * (-constants.kappa * t).exp() * w0;
        out.push(
            InequalityReport::compare("prop1.contraction", ctx, lhs, rhs, w2_tolerance(mu.dx(), lhs, rhs))
                .with_constant("C", constants.c)
                .with_constant("kappa", constants.kappa)
                .with_constant("rho", constants.rho)
                .with_constant("C_LS", constants.c_ls)
                .with_constant("t", t),
        );
    }
    Ok(out)
}

/// `C_I = 2 C^2 (1 - e^(-2ρt)) / (κρ)` with `t` solving `C e^(-κt) = 1/2`;
/// the `ρ = 0` limit replaces `(1 - e^(-2ρt))/ρ` by `2t`. Returns `(C_I, t)`.
pub fn w2i_constant(c: f64, kappa: f64, rho: f64) -> (f64, f64) {
    let t = (2.0 * c).ln() / kappa;
    let factor = if rho == 0.0 {
        2.0 * t
    } else {
        -(-2.0 * rho * t).exp_m1() / rho
    };
    (2.0 * c * c * factor / kappa, t)
}

/// Constants available to the transport checks; absent ones skip their check.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TransportConstants {
    pub c_p: f64,
    /// Talagrand constant.
    pub c_t: Option<f64>,
    /// A valid (upper) log-Sobolev constant.
    pub c_ls: Option<f64>,
    pub rho: Option<f64>,
}

/// Talagrand, W2V, W2I, HWI and the weighted total-variation bound.
pub fn check_transport_inequalities(
    f: &DensityRatio,
    mu: &GridMeasure,
    backend: &TransportBackend,
    constants: &TransportConstants,
    context: &str,
) -> Result<Vec<InequalityReport>> {
    let w2sq = backend.w2_squared(f, mu)?;
    let w2 = w2sq.max(0.0).sqrt();
    let b = functionals(f, mu)?;
    let dx = mu.dx();
    let cmp =
        |id: &str, lhs: f64, rhs: f64| InequalityReport::compare(id, context, lhs, rhs, w2_tolerance(dx, lhs, rhs));
    let mut out = Vec::new();

    out.push(match constants.c_t {
        Some(c_t) => cmp("transport.talagrand", w2sq, 2.0 * c_t * b.entropy).with_constant("C_T", c_t),
        None => InequalityReport::skipped(
            "transport.talagrand",
            context,
            "no Talagrand constant supplied for this model",
        ),
    });

    let c_v = 2.0 * constants.c_p;
    out.push(
        cmp("transport.w2v", w2sq, c_v * b.variance)
            .with_constant("C_V", c_v)
            .with_note("converse direction checked by thm1.converse"),
    );

    out.push(match (constants.c_ls, constants.rho) {
        (Some(c_ls), Some(rho)) => {
            let k = contraction_constants(rho, c_ls)?;
            let (c_i, t) = w2i_constant(k.c, k.kappa, rho);
            cmp("transport.w2i", w2sq, c_i * b.fisher)
                .with_constant("C_I", c_i)
                .with_constant("C", k.c)
                .with_constant("kappa", k.kappa)
                .with_constant("rho", rho)
                .with_constant("t", t)
        }
        _ => InequalityReport::skipped(
            "transport.w2i",
            context,
            "needs a log-Sobolev constant and a curvature bound",
        ),
    });

    out.push(match constants.rho {
        Some(rho) => {
            let rhs = w2 * b.fisher.sqrt() - 0.5 * rho * w2sq;
            InequalityReport::compare(
                "transport.hwi",
                context,
                b.entropy,
                rhs,
                w2_tolerance(dx, b.entropy, rhs),
            )
            .with_constant("rho", rho)
        }
        None => InequalityReport::skipped("transport.hwi", context, "needs a curvature bound"),
    });

    out.push(cmp("transport.weighted_tv", w2sq, weighted_tv_bound(f, mu)).with_constant("x0", mu.base_point()));
    Ok(out)
}
