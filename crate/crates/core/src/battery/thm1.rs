use serde::{Deserialize, Serialize};

use super::{w2_tolerance, InequalityReport};
use crate::error::{LabError, Result};
use crate::generator::{evolve, GeneratorMatrix};
use crate::measure::{functionals, variance, DensityRatio, FunctionalBundle};
use crate::transport::TransportBackend;

/// Positive floor required of densities in the derivative check.
pub const DEFAULT_DENSITY_FLOOR: f64 = 1e-10;
const FUNCTIONAL_TOLERANCE: f64 = 1e-12;
const SCAN_STEP: f64 = 1e-3;
const SCAN_MAX: f64 = 20.0;

/// `(p*, p*^2 v^(1/p*))` minimizing `p^2 v^(1/p)` over `p >= 1`.
///
/// The stationary point is `p = ln(v) / 2`; a scan over `[1, 20]` guards the
/// boundary and wins if it finds anything smaller.
pub fn best_p(v: f64) -> Result<(f64, f64)> {
    if !(v >= 0.0) {
        return Err(LabError::invalid(format!("best_p needs v >= 0, got {v}")));
    }
    let value = |p: f64| p * p * v.powf(1.0 / p);
    if v == 0.0 {
        return Ok((1.0, 0.0));
    }
    let p = (v.ln() / 2.0).max(1.0);
    let mut best = (p, value(p));
    let steps = ((SCAN_MAX - 1.0) / SCAN_STEP).round() as usize;
    for k in 0..=steps {
        let q = 1.0 + k as f64 * SCAN_STEP;
        let vq = value(q);
        if vq < best.1 {
            best = (q, vq);
        }
    }
    Ok(best)
}

/// The five forward bounds of the Poincaré/transport equivalence.
pub fn check_thm1(
    f: &DensityRatio,
    generator: &GeneratorMatrix,
    c_p: f64,
    backend: &TransportBackend,
    context: &str,
) -> Result<Vec<InequalityReport>> {
    let mu = generator.measure();
    let w2sq = backend.w2_squared(f, mu)?;
    let b = functionals(f, mu)?;
    let (p3, inf3) = best_p(b.variance)?;
    let (p4, inf4) = best_p(c_p * b.dirichlet)?;
    let rhs = [
        2.0 * c_p * b.variance.sqrt() * b.entropy.sqrt(),
        2.0 * c_p * b.variance,
        2.0 * c_p * inf3,
        2.0 * c_p * inf4,
        2.0 * c_p * c_p * b.dirichlet,
    ];
    let dx = mu.dx();
    Ok(rhs
        .iter()
        .enumerate()
        .map(|(k, &r)| {
            let mut rep =
                InequalityReport::compare(format!("thm1.{}", k + 1), context, w2sq, r, w2_tolerance(dx, w2sq, r))
                    .with_constant("C_P", c_p);
            match k {
                2 => rep = rep.with_constant("p", p3),
                3 => rep = rep.with_constant("p", p4),
                _ => {}
            }
            rep
        })
        .collect())
}

/// `Ent <= Var`, `Ent <= p Var^(1/p)` and the Poincaré inequality itself.
pub fn check_functionals(
    f: &DensityRatio,
    generator: &GeneratorMatrix,
    c_p: f64,
    context: &str,
) -> Result<Vec<InequalityReport>> {
    let mu = generator.measure();
    let b = functionals(f, mu)?;
    let tol = |a: f64, c: f64| FUNCTIONAL_TOLERANCE * (1.0 + a.abs().max(c.abs()));
    let mut out = vec![InequalityReport::compare(
        "functional.ent_var",
        context,
        b.entropy,
        b.variance,
        tol(b.entropy, b.variance),
    )];
    for p in [1.0, 1.5, 2.0, 3.0] {
        let rhs = p * b.variance.powf(1.0 / p);
        out.push(
            InequalityReport::compare(
                format!("functional.ent_pvar.p{p}"),
                context,
                b.entropy,
                rhs,
                tol(b.entropy, rhs),
            )
            .with_constant("p", p),
        );
    }
    let energy = generator.dirichlet_form(f.values(), f.values());
    let rhs = c_p * energy;
    out.push(
        InequalityReport::compare("functional.poincare", context, b.variance, rhs, tol(b.variance, rhs))
            .with_constant("C_P", c_p),
    );
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterpolationOptions {
    /// Trapezoid step in time.
    pub step: f64,
    /// Analytic tail bound left after `T_max`.
    pub tail_tolerance: f64,
    /// Overrides the horizon derived from `tail_tolerance`.
    pub t_max: Option<f64>,
}

impl Default for InterpolationOptions {
    fn default() -> Self {
        InterpolationOptions {
            step: 0.05,
            tail_tolerance: 1e-8,
            t_max: None,
        }
    }
}

/// `W2^2 <= 2 sqrt(Ent f) ∫_0^∞ sqrt(Ent P_t f) dt`, with the integral cut at
/// `T_max` and the rest bounded by `C_P e^(-T/C_P) sqrt(Var f)`.
pub fn check_interpolation_bound(
    f: &DensityRatio,
    generator: &GeneratorMatrix,
    c_p: f64,
    backend: &TransportBackend,
    options: &InterpolationOptions,
    context: &str,
) -> Result<InequalityReport> {
    let mu = generator.measure();
    if !(options.step > 0.0) || !(options.tail_tolerance > 0.0) {
        return Err(LabError::invalid("quadrature step and tail tolerance must be positive"));
    }
    let w2sq = backend.w2_squared(f, mu)?;
    let b0 = functionals(f, mu)?;
    let id = "interpolation";
    if b0.entropy == 0.0 {
        let rep = InequalityReport::compare(id, context, w2sq, 0.0, w2_tolerance(mu.dx(), w2sq, 0.0));
        return Ok(if rep.passed() {
            rep
        } else {
            rep.with_note("Ent(f) = 0 but W2 > 0; the discretization is inconsistent")
        });
    }
    let sd = b0.variance.sqrt();
    let t_max = options
        .t_max
        .unwrap_or_else(|| (c_p * (c_p * sd / options.tail_tolerance).ln()).max(options.step));
    let steps = (t_max / options.step).ceil() as usize;
    let h = t_max / steps as f64;
    let mut integral = 0.0;
    let mut prev = b0.entropy.sqrt();
    for k in 1..=steps {
        let t = k as f64 * h;
        let ft = evolve(generator, f, t).map_err(|e| e.at_time(t))?;
        let cur = functionals(&ft, mu).map_err(|e| e.at_time(t))?.entropy.sqrt();
        integral += 0.5 * h * (prev + cur);
        prev = cur;
    }
    let tail = c_p * (-t_max / c_p).exp() * sd;
    let rhs = 2.0 * b0.entropy.sqrt() * (integral + tail);
    Ok(
        InequalityReport::compare(id, context, w2sq, rhs, w2_tolerance(mu.dx(), w2sq, rhs))
            .with_constant("C_P", c_p)
            .with_constant("T_max", t_max)
            .with_constant("tail", tail),
    )
}

/// `|d/dt W2^2(P_t f mu, mu)| <= 2 W2(P_t f mu, mu) sqrt(I(P_t f))` at each time,
/// by Richardson-extrapolated central differences.
pub fn check_derivative_bound(
    f: &DensityRatio,
    generator: &GeneratorMatrix,
    backend: &TransportBackend,
    times: &[f64],
    dt: f64,
    floor: f64,
    context: &str,
) -> Result<Vec<InequalityReport>> {
    let mu = generator.measure();
    let fmin = f.min();
    if fmin < floor {
        return Err(LabError::invalid(format!(
            "density minimum {fmin:e} is below the floor {floor:e}; the derivative bound assumes a positive lower bound"
        )));
    }
    let w2sq_at = |t: f64| -> Result<f64> {
        let ft = evolve(generator, f, t)?;
        backend.w2_squared(&ft, mu)
    };
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        if !(t > dt) {
            return Err(LabError::invalid(format!("time {t} must exceed the step {dt}")));
        }
        let rep = (|| {
            let d1 = (w2sq_at(t + dt)? - w2sq_at(t - dt)?) / (2.0 * dt);
            let d2 = (w2sq_at(t + dt / 2.0)? - w2sq_at(t - dt / 2.0)?) / dt;
            let derivative = (4.0 * d2 - d1) / 3.0;
            let fd_error = (derivative - d2).abs();
            let ft = evolve(generator, f, t)?;
            let b = functionals(&ft, mu)?;
            let w2 = backend.w2(&ft, mu)?;
            let lhs = derivative.abs();
            let rhs = 2.0 * w2 * b.fisher.sqrt();
            Ok::<_, LabError>(
                InequalityReport::compare(
                    "lemma1",
                    format!("{context};t={t}"),
                    lhs,
                    rhs,
                    w2_tolerance(mu.dx(), lhs, rhs) + fd_error,
                )
                .with_constant("t", t)
                .with_constant("dt", dt)
                .with_constant("fd_error", fd_error),
            )
        })()
        .map_err(|e| e.at_time(t))?;
        out.push(rep);
    }
    Ok(out)
}

/// The converse direction: measure `C = max_h W2^2 / (2 sqrt(Var Ent))` on
/// small perturbations `1 + eps h / |h|_inf`, then check the Poincaré
/// inequality `Var(h) <= sqrt(2) C mu(|h'|^2)` on the same family.
pub fn check_converse(
    family: &[(String, Vec<f64>)],
    generator: &GeneratorMatrix,
    backend: &TransportBackend,
    epsilon: f64,
    context: &str,
) -> Result<Vec<InequalityReport>> {
    let mu = generator.measure();
    let mut measured = Vec::with_capacity(family.len());
    for (label, h) in family {
        let mean = mu.expect(h);
        let centered: Vec<f64> = h.iter().map(|v| v - mean).collect();
        let sup = centered.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if sup == 0.0 {
            measured.push((label, centered, None));
            continue;
        }
        let f = DensityRatio::new(centered.iter().map(|v| 1.0 + epsilon * v / sup).collect(), mu)?;
        let b: FunctionalBundle = functionals(&f, mu)?;
        let w2sq = backend.w2_squared(&f, mu)?;
        let c_h = w2sq / (2.0 * (b.variance * b.entropy).sqrt());
        measured.push((label, centered, Some(c_h)));
    }
    let c = measured.iter().filter_map(|m| m.2).fold(0.0f64, f64::max);
    Ok(measured
        .into_iter()
        .map(|(label, h, c_h)| {
            let ctx = format!("{context};h={label}");
            if c_h.is_none() {
                return InequalityReport::vacuous("thm1.converse", ctx, "constant test function");
            }
            let lhs = variance(&h, mu);
            let energy = crate::measure::dirichlet_energy(&h, mu);
            let rhs = std::f64::consts::SQRT_2 * c * energy;
            InequalityReport::compare("thm1.converse", ctx, lhs, rhs, 1e-6 + 2e-2 * lhs.abs().max(rhs.abs()))
                .with_constant("C", c)
                .with_constant("epsilon", epsilon)
        })
        .collect())
}
