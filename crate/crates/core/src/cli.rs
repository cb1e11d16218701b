//! `sigcore` command-line front end.
//!
//! Exit codes: 0 success, 1 `check-weibull` found the table incompatible,
//! 2 parse or validation error, 3 system/model mismatch or inapplicable
//! route, 4 numerical failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use crate::error::{Error, Result};
use crate::formats;
use crate::lifetimes::LifetimeModel;
use crate::oracle::{monte_carlo_signature, MonteCarloConfig, DEFAULT_BATCH_SIZE};
use crate::quality::{
    auto_route, quality_for_model, weibull_characterization_check, QualityFunction, QualityRoute,
    DEFAULT_QUADRATURE_TOL,
};
use crate::signature::{
    projection_residual_check, signature_for_model, symmetric_projection, SignatureRoute,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INCOMPATIBLE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Default tolerance of `check-weibull`.
pub const DEFAULT_CHECK_TOL: f64 = 1e-8;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "SIGCORE_THREADS";

#[derive(Parser, Debug)]
#[command(name = "sigcore", version, about = "Generalized signatures of semicoherent systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Signature p_k = Pr(T = X_{k:n}) of a system under a lifetime model.
    Signature(SignatureArgs),
    /// Relative quality function q of a lifetime model.
    Quality(QualityArgs),
    /// Best symmetric approximation of a set function under level weights.
    Project(ProjectArgs),
    /// Monte Carlo estimate of the signature.
    Simulate(SimulateArgs),
    /// Tests whether a quality table comes from Weibull lifetimes with a common shape.
    CheckWeibull(CheckWeibullArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum RouteArg {
    Auto,
    /// Boland's formula; i.i.d. and exchangeable models only.
    Boland,
    Exchangeable,
    Quadrature,
    #[value(name = "closed-form", alias = "weibull_closed_form")]
    ClosedForm,
    #[value(name = "difference", alias = "weibull_difference")]
    Difference,
    #[value(name = "order-probs", alias = "order_probs")]
    OrderProbs,
}

impl RouteArg {
    fn signature_route(self) -> SignatureRoute {
        match self {
            RouteArg::Auto => SignatureRoute::Auto,
            RouteArg::Boland => SignatureRoute::Boland,
            RouteArg::Exchangeable => SignatureRoute::Quality(QualityRoute::Exchangeable),
            RouteArg::Quadrature => SignatureRoute::Quality(QualityRoute::Quadrature),
            RouteArg::ClosedForm => SignatureRoute::Quality(QualityRoute::WeibullClosedForm),
            RouteArg::Difference => SignatureRoute::Quality(QualityRoute::WeibullDifference),
            RouteArg::OrderProbs => SignatureRoute::Quality(QualityRoute::OrderProbs),
        }
    }

    fn quality_route(self, model: &LifetimeModel) -> QualityRoute {
        match self {
            RouteArg::Auto => auto_route(model),
            RouteArg::Boland | RouteArg::Exchangeable => QualityRoute::Exchangeable,
            RouteArg::Quadrature => QualityRoute::Quadrature,
            RouteArg::ClosedForm => QualityRoute::WeibullClosedForm,
            RouteArg::Difference => QualityRoute::WeibullDifference,
            RouteArg::OrderProbs => QualityRoute::OrderProbs,
        }
    }
}

#[derive(Args, Debug)]
struct OutputFormat {
    /// JSON output (default).
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    /// CSV output with 17 significant digits.
    #[arg(long)]
    csv: bool,
}

#[derive(Args, Debug)]
struct SignatureArgs {
    #[arg(long)]
    system: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_enum, default_value_t = RouteArg::Auto)]
    route: RouteArg,
    /// Rescale each level of q to sum to 1 before use.
    #[arg(long)]
    normalize_levels: bool,
    /// Absolute tolerance per subset for the quadrature route.
    #[arg(long, default_value_t = DEFAULT_QUADRATURE_TOL)]
    tol: f64,
    #[command(flatten)]
    format: OutputFormat,
}

#[derive(Args, Debug)]
struct QualityArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_enum, default_value_t = RouteArg::Auto)]
    route: RouteArg,
    /// Component count for models that do not state it.
    #[arg(long)]
    n: Option<usize>,
    /// Also emit q~(S) = C(n,|S|) q(S).
    #[arg(long)]
    tilde: bool,
    #[arg(long)]
    normalize_levels: bool,
    #[arg(long, default_value_t = DEFAULT_QUADRATURE_TOL)]
    tol: f64,
    #[command(flatten)]
    format: OutputFormat,
}

#[derive(Args, Debug)]
struct ProjectArgs {
    /// Real table, set-keyed table or structure file.
    #[arg(long)]
    function: PathBuf,
    /// Weight table, for instance the output of `quality`.
    #[arg(long)]
    weights: PathBuf,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    system: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = crate::oracle::DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = crate::oracle::DEFAULT_SEED)]
    seed: u64,
    /// Samples per independently seeded stream.
    #[arg(long, default_value_t = DEFAULT_BATCH_SIZE)]
    batch_size: usize,
    #[command(flatten)]
    format: OutputFormat,
}

#[derive(Args, Debug)]
struct CheckWeibullArgs {
    #[arg(long)]
    quality: PathBuf,
    #[arg(long, default_value_t = DEFAULT_CHECK_TOL)]
    tol: f64,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn check_tol(tol: f64) -> Result<()> {
    if tol.is_finite() && tol > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")))
    }
}

fn compute_quality(
    model: &LifetimeModel,
    route: QualityRoute,
    tol: f64,
    normalize: bool,
) -> Result<QualityFunction> {
    check_tol(tol)?;
    let q = quality_for_model(model, route, tol)?;
    let q = if normalize { q.normalize_levels()? } else { q };
    q.validate(route.level_tolerance())?;
    Ok(q)
}

fn signature(args: &SignatureArgs, out: &mut dyn Write) -> Result<i32> {
    let system = formats::parse_system(&read(&args.system)?)?;
    let (model, _) = formats::parse_model(&read(&args.model)?, Some(system.n()))?;
    check_tol(args.tol)?;
    let result = signature_for_model(
        &system.phi,
        &model,
        args.route.signature_route(),
        args.tol,
        args.normalize_levels,
    )?;
    info!("signature via {}", result.route);
    let text = if args.format.csv {
        formats::signature_to_csv(&result.signature)
    } else {
        formats::signature_to_json(&result.signature, &result.tails, result.route) + "\n"
    };
    emit(out, &text)?;
    Ok(EXIT_OK)
}

fn quality(args: &QualityArgs, out: &mut dyn Write) -> Result<i32> {
    let (model, _) = formats::parse_model(&read(&args.model)?, args.n)?;
    let route = args.route.quality_route(&model);
    let q = compute_quality(&model, route, args.tol, args.normalize_levels)?;
    let text = if args.format.csv {
        formats::quality_to_csv(&q)
    } else {
        formats::quality_to_json(&q, route, args.tilde) + "\n"
    };
    emit(out, &text)?;
    Ok(EXIT_OK)
}

fn project(args: &ProjectArgs, out: &mut dyn Write) -> Result<i32> {
    let f = formats::parse_set_function(&read(&args.function)?)?;
    let w = formats::parse_set_function(&read(&args.weights)?)?;
    let approx = symmetric_projection(&f, &w)?;
    let residual = projection_residual_check(&f, &w, &approx)?;
    emit(out, &(formats::projection_to_json(&approx, residual) + "\n"))?;
    Ok(EXIT_OK)
}

fn simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<i32> {
    let system = formats::parse_system(&read(&args.system)?)?;
    let (model, raw) = formats::parse_model(&read(&args.model)?, Some(system.n()))?;
    if args.samples == 0 || args.batch_size == 0 {
        return Err(Error::InvalidArgument(
            "--samples and --batch-size must be positive".into(),
        ));
    }
    let config = MonteCarloConfig {
        samples: args.samples,
        seed: args.seed,
        batch_size: args.batch_size,
    };
    let report = match &system.paths {
        Some(paths) => monte_carlo_signature(paths, &model, &config)?,
        None => monte_carlo_signature(&system.phi, &model, &config)?,
    };
    let text = if args.format.csv {
        formats::simulation_to_csv(&report)
    } else {
        formats::simulation_to_json(&report, &raw) + "\n"
    };
    emit(out, &text)?;
    Ok(EXIT_OK)
}

fn check_weibull(args: &CheckWeibullArgs, out: &mut dyn Write) -> Result<i32> {
    check_tol(args.tol)?;
    let q = formats::parse_quality(&read(&args.quality)?)?;
    let check = weibull_characterization_check(&q, args.tol);
    emit(out, &(formats::weibull_check_to_json(&check) + "\n"))?;
    Ok(if check.is_weibull_compatible {
        EXIT_OK
    } else {
        EXIT_INCOMPATIBLE
    })
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| Error::InvalidArgument(format!("cannot write output: {e}")))
}

/// Runs the command line `args` (program name first), writing data to `out`
/// and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = err.write_all(text.as_bytes());
                return EXIT_USAGE;
            }
            let _ = out.write_all(text.as_bytes());
            return EXIT_OK;
        }
    };
    let result = match &cli.command {
        Command::Signature(a) => signature(a, out),
        Command::Quality(a) => quality(a, out),
        Command::Project(a) => project(a, out),
        Command::Simulate(a) => simulate(a, out),
        Command::CheckWeibull(a) => check_weibull(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "sigcore: {e}");
            e.exit_code()
        }
    }
}

fn configure_threads() {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return;
    };
    match value.trim().parse::<usize>() {
        Ok(threads) if threads > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global()
            {
                log::warn!("cannot configure thread pool: {e}");
            }
        }
        _ => log::warn!("ignoring {THREADS_ENV}={value:?}; expected a positive integer"),
    }
}

/// Entry point of the `sigcore` binary.
pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    configure_threads();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
