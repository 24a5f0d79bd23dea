use std::io::{BufWriter, ErrorKind, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use poincare_lab::battery::Verdict;
use poincare_lab::generator::{evolve, spectral_gap, GeneratorMatrix};
use poincare_lab::hopflax::{hopf_lax, GridFunction};
use poincare_lab::measure::{
    auto_half_width, gaussian_tilt, DensityRatio, GridMeasure, Potential, UniformGrid, DEFAULT_TAIL_TOLERANCE,
};
use poincare_lab::suite::{run_suite, SuiteConfig, SuiteId};
use poincare_lab::transport::TransportBackend;

#[derive(Parser)]
#[command(
    name = "poincare-lab",
    version,
    about = "Checks functional and transport inequalities on 1D diffusions"
)]
struct Cli {
    /// Print the suite ids a config may select.
    #[arg(long)]
    list_suites: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the suites selected by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (all cores by default).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Evaluate one quantity and print it.
    Compute {
        #[command(subcommand)]
        what: Compute,
    },
}

#[derive(Subcommand)]
enum Compute {
    /// Poincaré constant `C_P = 1 / gap`.
    Gap(ModelArgs),
    /// `W2(f mu, mu)` for a tilt `f ∝ exp(m x)`.
    W2 {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        tilt: f64,
        #[arg(long, value_enum, default_value_t = Backend::Quantile)]
        backend: Backend,
        /// Sinkhorn regularization.
        #[arg(long, default_value_t = 1e-2)]
        epsilon: f64,
    },
    /// `P_t f` for a tilt, one `x value` pair per line.
    Evolve {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        tilt: f64,
        #[arg(long)]
        t: f64,
    },
    /// `Q_t h` on a uniform grid, one `x value` pair per line.
    Hopflax {
        /// `constant:C`, `linear:S`, `abs`, `quadratic:A` or `cos:K`.
        #[arg(long)]
        h: String,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
        lo: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        hi: f64,
        #[arg(long, default_value_t = 201)]
        n: usize,
    },
}

#[derive(Args)]
struct ModelArgs {
    /// `ou`, `double_well`, `quartic`, `uniform` or `poly:c0,c1,...`.
    #[arg(long, default_value = "ou")]
    potential: String,
    #[arg(long, allow_hyphen_values = true)]
    lo: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    hi: Option<f64>,
    #[arg(long, default_value_t = 1024)]
    n: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Backend {
    Quantile,
    Lp,
    Sinkhorn,
}

type CliResult<T> = std::result::Result<T, String>;

fn parse_potential(s: &str) -> CliResult<Potential> {
    if let Some(rest) = s.strip_prefix("poly:") {
        let coeffs = rest
            .split(',')
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .map_err(|e| format!("bad coefficient {c:?}: {e}"))
            })
            .collect::<CliResult<Vec<_>>>()?;
        return Ok(Potential::Polynomial(coeffs));
    }
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| format!("unknown potential {s:?}"))
}

impl ModelArgs {
    fn generator(&self) -> CliResult<GeneratorMatrix> {
        let pot = parse_potential(&self.potential)?;
        let (lo, hi) = match (self.lo, self.hi) {
            (Some(lo), Some(hi)) => (lo, hi),
            (None, None) => {
                let r = auto_half_width(|x| pot.eval(x), self.n, DEFAULT_TAIL_TOLERANCE).map_err(|e| e.to_string())?;
                (-r, r)
            }
            _ => return Err("give both --lo and --hi, or neither".into()),
        };
        let mu = GridMeasure::from_potential(&pot, lo, hi, self.n).map_err(|e| e.to_string())?;
        GeneratorMatrix::new(mu).map_err(|e| e.to_string())
    }
}

fn parse_test_function(spec: &str) -> CliResult<Box<dyn Fn(f64) -> f64>> {
    let (kind, arg) = match spec.split_once(':') {
        Some((k, a)) => (
            k,
            Some(
                a.parse::<f64>()
                    .map_err(|e| format!("bad parameter in {spec:?}: {e}"))?,
            ),
        ),
        None => (spec, None),
    };
    let need = |a: Option<f64>| a.ok_or_else(|| format!("{kind} needs a parameter, e.g. {kind}:1"));
    Ok(match kind {
        "constant" => {
            let c = need(arg)?;
            Box::new(move |_| c)
        }
        "linear" => {
            let s = need(arg)?;
            Box::new(move |x| s * x)
        }
        "quadratic" => {
            let a = need(arg)?;
            Box::new(move |x| a * x * x)
        }
        "cos" => {
            let k = need(arg)?;
            Box::new(move |x| (k * std::f64::consts::PI * x).cos())
        }
        "abs" => Box::new(f64::abs),
        _ => return Err(format!("unknown test function {spec:?}")),
    })
}

/// `f ≡ 1` exactly at zero slope, so `nu = mu` gives exact zeros.
fn tilt_density(m: f64, mu: &GridMeasure) -> CliResult<DensityRatio> {
    if m == 0.0 {
        return Ok(DensityRatio::constant(mu));
    }
    gaussian_tilt(m, mu).map_err(|e| e.to_string())
}

/// `x value` lines; a closed pipe (e.g. `| head`) ends output quietly.
fn print_pairs(xs: &[f64], vs: &[f64]) -> CliResult<()> {
    let mut out = BufWriter::new(std::io::stdout().lock());
    let written = xs
        .iter()
        .zip(vs)
        .try_for_each(|(x, v)| writeln!(out, "{x} {v}"))
        .and_then(|()| out.flush());
    match written {
        Err(e) if e.kind() != ErrorKind::BrokenPipe => Err(e.to_string()),
        _ => Ok(()),
    }
}

fn compute(what: Compute) -> CliResult<()> {
    match what {
        Compute::Gap(model) => {
            let gen = model.generator()?;
            println!("{}", spectral_gap(&gen).map_err(|e| e.to_string())?);
        }
        Compute::W2 {
            model,
            tilt,
            backend,
            epsilon,
        } => {
            let gen = model.generator()?;
            let mu = gen.measure();
            let f = tilt_density(tilt, mu)?;
            let backend = match backend {
                Backend::Quantile => TransportBackend::default(),
                Backend::Lp => TransportBackend::Lp,
                Backend::Sinkhorn => TransportBackend::Sinkhorn { epsilon, tol: 1e-9 },
            };
            println!("{}", backend.w2(&f, mu).map_err(|e| e.to_string())?);
        }
        Compute::Evolve { model, tilt, t } => {
            let gen = model.generator()?;
            let mu = gen.measure();
            let f = tilt_density(tilt, mu)?;
            let ft = evolve(&gen, &f, t).map_err(|e| e.to_string())?;
            print_pairs(mu.nodes(), ft.values())?;
        }
        Compute::Hopflax { h, t, lo, hi, n } => {
            let grid = UniformGrid::new(lo, hi, n).map_err(|e| e.to_string())?;
            let func = parse_test_function(&h)?;
            let h = GridFunction::from_fn(&grid, func).map_err(|e| e.to_string())?;
            let q = hopf_lax(&h, t, &grid).map_err(|e| e.to_string())?;
            print_pairs(grid.nodes(), q.values())?;
        }
    }
    Ok(())
}

fn run(config: PathBuf, out: Option<PathBuf>, jobs: Option<usize>) -> ExitCode {
    let config = match SuiteConfig::load(&config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let dir = out.unwrap_or_else(|| config.output.dir.clone());
    let outcome = match run_suite(&config, jobs) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let paths = match outcome.write(&dir) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot write reports to {}: {e}", dir.display());
            return ExitCode::from(2);
        }
    };
    for r in outcome.reports.iter().filter(|r| r.verdict == Verdict::Fail) {
        eprintln!(
            "FAIL {} [{}] lhs={} rhs={} margin={}",
            r.id, r.context, r.lhs, r.rhs, r.margin
        );
    }
    for e in &outcome.errors {
        eprintln!("ERROR {} [{}]: {}", e.suite, e.context, e.message);
    }
    let c = outcome.counts();
    println!(
        "{} pass, {} fail, {} vacuous, {} skipped, {} errors",
        c.pass, c.fail, c.vacuous, c.skipped, c.errors
    );
    println!("report: {}", paths.0.display());
    println!("summary: {}", paths.1.display());
    if outcome.success() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.list_suites {
        for s in SuiteId::ALL {
            println!("{:<14} {}", s.name(), s.description());
        }
        return ExitCode::SUCCESS;
    }
    match cli.command {
        Some(Command::Run { config, out, jobs }) => run(config, out, jobs),
        Some(Command::Compute { what }) => match compute(what) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        None => {
            eprintln!("nothing to do; see --help");
            ExitCode::from(2)
        }
    }
}
