use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ModelSpec, SuiteConfig, SuiteId};
use super::output::{to_csv, to_json};
use crate::battery::{
    check_centralization, check_contraction, check_converse, check_decay, check_derivative_bound, check_functionals,
    check_interpolation_bound, check_lyapunov, check_thm1, check_transport_inequalities, check_w2i_from_lyapunov,
    contraction_constants, fit_weighted_poincare, gamma, minimize_gamma_brute_force, w2_tolerance,
    ContractionConstants, InequalityReport, LyapunovWitness, TransportConstants, WeightedPoincareFit,
};
use crate::error::{LabError, Result};
use crate::generator::{
    curvature_lower_bound, flow_trace, lsi_constant, spectral_gap, Constant, ConstantsBundle, GeneratorMatrix,
    LsiSearch, Provenance,
};
use crate::hopflax::{dual_lower_bound, hopf_lax, GridFunction};
use crate::measure::{auto_half_width, check_truncation, DensityRatio, GridMeasure, Potential};

/// What a model resolved to before any check ran.
#[derive(Clone, Debug, Serialize)]
pub struct ModelSummary {
    pub name: String,
    pub potential: String,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub dx: f64,
    pub x0: f64,
    pub constants: ConstantsBundle,
    /// Largest `2 Ent / I` over the search family; never used as a constant.
    pub c_ls_lower_bound: Option<f64>,
    pub c_t: Option<Constant>,
    pub contraction: Option<ContractionConstants>,
    pub weighted_poincare: Option<WeightedPoincareFit>,
    pub densities: Vec<String>,
}

/// A check that raised instead of reporting.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TaskError {
    pub suite: String,
    pub context: String,
    pub message: String,
}

/// Everything a run produced, in deterministic order.
#[derive(Clone, Debug, Serialize)]
pub struct SuiteOutcome {
    pub version: &'static str,
    pub config: SuiteConfig,
    pub models: Vec<ModelSummary>,
    pub reports: Vec<InequalityReport>,
    pub errors: Vec<TaskError>,
}

impl SuiteOutcome {
    /// No errors and every binding report passed.
    pub fn success(&self) -> bool {
        self.errors.is_empty() && self.reports.iter().filter(|r| r.is_binding()).all(|r| r.passed())
    }

    pub fn counts(&self) -> Counts {
        let mut c = Counts::default();
        for r in &self.reports {
            match r.verdict {
                crate::battery::Verdict::Pass => c.pass += 1,
                crate::battery::Verdict::Fail => c.fail += 1,
                crate::battery::Verdict::Vacuous => c.vacuous += 1,
                crate::battery::Verdict::Skipped => c.skipped += 1,
            }
        }
        c.errors = self.errors.len();
        c
    }

    pub fn report_json(&self) -> String {
        to_json(self).expect("outcome serializes")
    }

    pub fn summary_csv(&self) -> String {
        to_csv(&self.reports).expect("reports serialize")
    }

    /// Writes the report and summary into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> std::io::Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let report = dir.join(&self.config.output.report);
        let summary = dir.join(&self.config.output.summary);
        std::fs::write(&report, self.report_json())?;
        std::fs::write(&summary, self.summary_csv())?;
        Ok((report, summary))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counts {
    pub pass: usize,
    pub fail: usize,
    pub vacuous: usize,
    pub skipped: usize,
    pub errors: usize,
}

struct Prepared {
    name: String,
    potential: Potential,
    generator: GeneratorMatrix,
    c_p: f64,
    rho: f64,
    c_ls: Option<Constant>,
    c_t: Option<Constant>,
    contraction: Option<ContractionConstants>,
    densities: Vec<(String, DensityRatio)>,
    witness: Option<LyapunovWitness>,
    fit: Option<WeightedPoincareFit>,
    summary: ModelSummary,
}

impl Prepared {
    fn dx(&self) -> f64 {
        self.generator.measure().dx()
    }

    fn transport_constants(&self) -> TransportConstants {
        TransportConstants {
            c_p: self.c_p,
            c_t: self.c_t.map(|c| c.value),
            c_ls: self.c_ls.map(|c| c.value),
            rho: Some(self.rho),
        }
    }
}

fn prepare(spec: &ModelSpec, config: &SuiteConfig) -> Result<Prepared> {
    let name = spec.label();
    let pot = spec.potential.clone();
    let v = |x: f64| pot.eval(x);
    let [lo, hi] = match spec.domain {
        Some(d) => {
            if !pot.is_bounded() {
                check_truncation(v, d[0], d[1], spec.n, config.tolerances.tail)?;
            }
            d
        }
        None => {
            let r = auto_half_width(v, spec.n, config.tolerances.tail)?;
            [-r, r]
        }
    };
    let mu = GridMeasure::from_potential(&pot, lo, hi, spec.n)?.with_base_point(spec.x0);
    let generator = GeneratorMatrix::new(mu)?;
    let c_p = spectral_gap(&generator)?;
    let rho = curvature_lower_bound(generator.measure())?;
    let c_ls = match spec.c_ls {
        Some(c) => Some(Constant::supplied(c)),
        None if rho > 0.0 => Some(Constant::with_provenance(1.0 / rho, Provenance::CurvatureBound)),
        None => None,
    };
    let c_t = match (spec.c_t, &pot, c_ls) {
        (Some(c), _, _) => Some(Constant::supplied(c)),
        (None, Potential::Gaussian, Some(c)) => Some(c),
        _ => None,
    };
    let c_ls_lower_bound = lsi_constant(&generator, &LsiSearch::default()).ok().map(|b| b.lower);
    let contraction = match c_ls {
        Some(c) => Some(contraction_constants(rho, c.value)?),
        None => None,
    };
    let mu = generator.measure();
    let densities = config.densities.build(mu)?;
    let witness = match &spec.lyapunov {
        Some(l) => Some(LyapunovWitness::from_fn(
            mu,
            |x| l.witness.eval(x, spec.x0),
            l.c,
            l.b,
            spec.x0,
        )?),
        None => None,
    };
    let fit = match (&witness, config.suites.contains(&SuiteId::Lyapunov)) {
        (Some(w), true) => {
            let c4 = spec
                .lyapunov
                .as_ref()
                .and_then(|l| l.c4)
                .unwrap_or_else(|| w.default_c4());
            Some(fit_weighted_poincare(&generator, spec.x0, c4)?)
        }
        _ => None,
    };
    let summary = ModelSummary {
        name: name.clone(),
        potential: pot.label(),
        lo,
        hi,
        n: spec.n,
        dx: mu.dx(),
        x0: spec.x0,
        constants: ConstantsBundle {
            c_p: Constant::computed(c_p),
            c_ls,
            rho: Some(Constant::computed(rho)),
        },
        c_ls_lower_bound,
        c_t,
        contraction,
        weighted_poincare: fit.clone(),
        densities: densities.iter().map(|d| d.0.clone()).collect(),
    };
    Ok(Prepared {
        name,
        potential: pot,
        generator,
        c_p,
        rho,
        c_ls,
        c_t,
        contraction,
        densities,
        witness,
        fit,
        summary,
    })
}

#[derive(Clone, Copy)]
enum Task {
    Model {
        model: usize,
        suite: SuiteId,
    },
    Density {
        model: usize,
        density: usize,
        suite: SuiteId,
    },
}

fn has_model_task(suite: SuiteId) -> bool {
    matches!(
        suite,
        SuiteId::Functional | SuiteId::Prop1 | SuiteId::Lyapunov | SuiteId::Converse
    )
}

fn has_density_task(suite: SuiteId) -> bool {
    suite != SuiteId::Converse
}

/// Runs every selected suite on every model and density, `jobs` at a time
/// (all cores when `None`).
pub fn run_suite(config: &SuiteConfig, jobs: Option<usize>) -> Result<SuiteOutcome> {
    config.validate().map_err(|e| LabError::InvalidInput(e.to_string()))?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| LabError::Numerical(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| execute(config)))
}

fn execute(config: &SuiteConfig) -> SuiteOutcome {
    let prepared: Vec<Result<Prepared>> = config.models.par_iter().map(|m| prepare(m, config)).collect();
    let mut errors = Vec::new();
    let mut models = Vec::new();
    for (spec, p) in config.models.iter().zip(&prepared) {
        if let Err(e) = p {
            errors.push(TaskError {
                suite: "model".into(),
                context: spec.label(),
                message: e.to_string(),
            });
        }
    }
    let ready: Vec<&Prepared> = prepared.iter().filter_map(|p| p.as_ref().ok()).collect();
    let mut suites = config.suites.clone();
    suites.sort();
    suites.dedup();

    let mut tasks = Vec::new();
    for (m, p) in ready.iter().enumerate() {
        models.push(p.summary.clone());
        for &suite in &suites {
            if has_model_task(suite) {
                tasks.push(Task::Model { model: m, suite });
            }
            if has_density_task(suite) {
                for d in 0..p.densities.len() {
                    tasks.push(Task::Density {
                        model: m,
                        density: d,
                        suite,
                    });
                }
            }
        }
    }

    let results: Vec<(SuiteId, String, Result<Vec<InequalityReport>>)> = tasks
        .par_iter()
        .map(|task| match *task {
            Task::Model { model, suite } => {
                let p = ready[model];
                (suite, p.name.clone(), run_model_task(p, suite, config))
            }
            Task::Density { model, density, suite } => {
                let p = ready[model];
                let (label, f) = &p.densities[density];
                let ctx = format!("{};{label}", p.name);
                let out = run_density_task(p, f, suite, config, &ctx);
                (suite, ctx, out)
            }
        })
        .collect();

    let mut reports = Vec::new();
    for (suite, context, result) in results {
        match result {
            Ok(rs) => reports.extend(rs.into_iter().map(|r| r.in_suite(suite.name()))),
            Err(e) => errors.push(TaskError {
                suite: suite.name().into(),
                context,
                message: e.to_string(),
            }),
        }
    }
    reports.sort_by(|a, b| (&a.suite, &a.id, &a.context).cmp(&(&b.suite, &b.id, &b.context)));
    errors.sort_by(|a, b| (&a.suite, &a.context).cmp(&(&b.suite, &b.context)));
    SuiteOutcome {
        version: env!("CARGO_PKG_VERSION"),
        config: config.clone(),
        models,
        reports,
        errors,
    }
}

fn run_model_task(p: &Prepared, suite: SuiteId, config: &SuiteConfig) -> Result<Vec<InequalityReport>> {
    let ctx = p.name.as_str();
    let dx = p.dx();
    match suite {
        SuiteId::Functional => Ok(vec![match p.c_ls {
            Some(c) => InequalityReport::compare(
                "constants.hierarchy",
                ctx,
                p.c_p,
                c.value,
                w2_tolerance(dx, p.c_p, c.value),
            )
            .with_constant("C_P", p.c_p)
            .with_constant("C_LS", c.value),
            None => InequalityReport::skipped("constants.hierarchy", ctx, "no valid log-Sobolev constant"),
        }]),
        SuiteId::Prop1 => Ok(vec![match p.contraction {
            Some(k) => {
                let (t_star, g_star) = minimize_gamma_brute_force(k.rho, k.c_ls);
                InequalityReport::compare("prop1.t0_optimality", ctx, k.gamma_t0, g_star, 1e-8)
                    .with_constant("T0", k.t0)
                    .with_constant("T_min", t_star)
                    .with_constant("gamma_T0", gamma(k.rho, k.c_ls, k.t0))
                    .with_constant("C", k.c)
                    .with_constant("rho", k.rho)
                    .with_constant("C_LS", k.c_ls)
            }
            None => InequalityReport::skipped("prop1.t0_optimality", ctx, "needs a log-Sobolev constant"),
        }]),
        SuiteId::Lyapunov => {
            let Some(w) = &p.witness else {
                return Ok(vec![InequalityReport::skipped(
                    "lyapunov",
                    ctx,
                    "no Lyapunov witness configured",
                )]);
            };
            let check = check_lyapunov(w, &p.generator, config.tolerances.lyapunov, ctx)?;
            let mut out = vec![check.report];
            if let Some(fit) = &p.fit {
                out.push(match &fit.witness {
                    Some(h) => {
                        let slack = fit.slack(&p.generator, h);
                        let mu = p.generator.measure();
                        let weighted: f64 = mu
                            .squared_distance_to_base()
                            .iter()
                            .zip(mu.weights())
                            .zip(h)
                            .map(|((d, w), v)| d * w * v * v)
                            .sum();
                        let rhs = weighted + slack;
                        InequalityReport::compare("lyapunov.fit", ctx, weighted, rhs, 1e-9 * rhs.abs().max(1e-300))
                            .with_constant("C3", fit.c3)
                            .with_constant("C4", fit.c4)
                    }
                    None => InequalityReport::compare("lyapunov.fit", ctx, fit.c3, f64::MAX, 0.0)
                        .with_constant("C4", fit.c4)
                        .with_note(fit.diagnostic.clone().unwrap_or_default()),
                });
            }
            Ok(out)
        }
        SuiteId::Converse => {
            let family: Vec<(String, Vec<f64>)> = p
                .densities
                .iter()
                .map(|(l, f)| (l.clone(), f.values().to_vec()))
                .collect();
            check_converse(
                &family,
                &p.generator,
                &config.transport,
                config.options.converse_epsilon,
                ctx,
            )
        }
        _ => Ok(Vec::new()),
    }
}

fn run_density_task(
    p: &Prepared,
    f: &DensityRatio,
    suite: SuiteId,
    config: &SuiteConfig,
    ctx: &str,
) -> Result<Vec<InequalityReport>> {
    let gen = &p.generator;
    let mu = gen.measure();
    let backend = &config.transport;
    match suite {
        SuiteId::Functional => check_functionals(f, gen, p.c_p, ctx),
        SuiteId::Thm1 => check_thm1(f, gen, p.c_p, backend, ctx),
        SuiteId::Interpolation => Ok(vec![check_interpolation_bound(
            f,
            gen,
            p.c_p,
            backend,
            &config.options.interpolation,
            ctx,
        )?]),
        SuiteId::Lemma1 => check_derivative_bound(
            f,
            gen,
            backend,
            &config.times,
            config.options.lemma1_dt,
            config.tolerances.density_floor,
            ctx,
        ),
        SuiteId::Decay => {
            let times: Vec<f64> = std::iter::once(0.0).chain(config.times.iter().copied()).collect();
            let trace = flow_trace(gen, f, &times, backend)?;
            Ok(check_decay(&trace, p.c_p, p.c_ls.map(|c| c.value), mu.dx(), ctx))
        }
        SuiteId::Prop1 => match &p.contraction {
            Some(k) => check_contraction(f, gen, backend, k, &config.times, ctx),
            None => Ok(vec![InequalityReport::skipped(
                "prop1.contraction",
                ctx,
                "needs a log-Sobolev constant",
            )]),
        },
        SuiteId::Transport => check_transport_inequalities(f, mu, backend, &p.transport_constants(), ctx),
        SuiteId::Thm2 => check_centralization(f, mu, p.c_p, p.potential.is_bounded(), backend, ctx),
        SuiteId::Lyapunov => match (&p.witness, &p.fit) {
            (Some(w), Some(fit)) => {
                let check = check_lyapunov(w, gen, config.tolerances.lyapunov, ctx)?;
                if !check.report.passed() {
                    return Ok(vec![InequalityReport::skipped(
                        "w2i_lyapunov.w2i",
                        ctx,
                        "the Lyapunov witness fails its own check",
                    )]);
                }
                check_w2i_from_lyapunov(f, gen, fit, p.c_p, backend, ctx)
            }
            _ => Ok(vec![InequalityReport::skipped(
                "w2i_lyapunov.w2i",
                ctx,
                "no Lyapunov witness configured",
            )]),
        },
        SuiteId::Hopflax => hopflax_checks(f, mu, backend, config.options.hopflax_t, ctx),
        SuiteId::Converse => Ok(Vec::new()),
    }
}

fn hopflax_checks(
    f: &DensityRatio,
    mu: &GridMeasure,
    backend: &crate::transport::TransportBackend,
    t: f64,
    ctx: &str,
) -> Result<Vec<InequalityReport>> {
    let grid = mu.grid();
    let w2sq = backend.w2_squared(f, mu)?;
    let mut tests = vec![("f-1", f.values().iter().map(|v| v - 1.0).collect::<Vec<_>>())];
    if f.min() > 0.0 {
        tests.push(("log_f", f.values().iter().map(|v| v.ln()).collect()));
    }
    let mut out = Vec::new();
    for (label, h) in tests {
        let h = GridFunction::new(h)?;
        let lhs = dual_lower_bound(f, &h, mu)?;
        out.push(
            InequalityReport::compare(
                "hopflax.dual",
                format!("{ctx};h={label}"),
                lhs,
                w2sq,
                w2_tolerance(mu.dx(), lhs, w2sq),
            )
            .with_constant("Lip", h.lipschitz(mu.dx())),
        );
    }
    let h = GridFunction::new(f.values().iter().map(|v| v - 1.0).collect())?;
    let lhs_q = hopf_lax(&h.scaled(t), 1.0, grid)?;
    let rhs_q = hopf_lax(&h, t, grid)?;
    let (defect, scale) = lhs_q
        .values()
        .iter()
        .zip(rhs_q.values())
        .fold((0.0f64, 1.0f64), |(d, s), (a, b)| {
            (d.max((a - t * b).abs()), s.max(a.abs()))
        });
    out.push(
        InequalityReport::compare("hopflax.scaling", format!("{ctx};t={t}"), defect, 0.0, 1e-12 * scale)
            .with_constant("t", t),
    );
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::suite::config::SuiteConfig;

    fn config(text: &str) -> SuiteConfig {
        SuiteConfig::from_json(text, Path::new("t.json")).unwrap()
    }

    #[test]
    fn thm1_on_ou_tilts() {
        let c = config(
            r#"{"models": [{"potential": "ou", "domain": [-8, 8], "n": 512}],
                "densities": {"tilts": [0.25, 0.5, 1.0], "mixtures": [], "random_perturbations": 0},
                "suites": ["thm1"]}"#,
        );
        let out = run_suite(&c, Some(2)).unwrap();
        assert_eq!(out.reports.len(), 15);
        assert!(out.reports.iter().all(|r| r.passed() && r.suite == "thm1"));
        assert!(out.success());
    }

    #[test]
    fn model_errors_are_recorded() {
        let c = config(
            r#"{"models": [{"potential": "ou", "domain": [-1, 1], "n": 64}, {"potential": "ou", "domain": [-8, 8], "n": 64}],
                "densities": {"tilts": [0.5], "mixtures": [], "random_perturbations": 0},
                "suites": ["thm1"]}"#,
        );
        let out = run_suite(&c, Some(1)).unwrap();
        assert_eq!(out.errors.len(), 1);
        assert_eq!(out.reports.len(), 5);
        assert!(!out.success());
    }
}
