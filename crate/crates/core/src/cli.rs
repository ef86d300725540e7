//! Command-line front end. `run` returns the process exit code: 0 on
//! success, 1 when a check or numerical certificate fails, 2 on usage or
//! input errors. Errors go to stderr as `{"error", "hint"}` JSON.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::density::density;
use crate::error::{Result, WrpError};
use crate::joint::{joint_surface, InnerIntegralCache, JointLawQuery, JointParams, OuterRule, DEFAULT_STEP};
use crate::levy::LevyTriplet;
use crate::mc::{estimate_barrier_price, estimate_joint, mean_running_max, simulate, terminal_moments, SimConfig};
use crate::payoff::{FourierPayoff, PayoffSpec};
use crate::symmetry::{
    compute_g_curve, compute_g_image, static_hedge_payoff, ContourParams, Truncation, DEFAULT_GAMMA, DEFAULT_QUAD_TOL,
};
use crate::verify::{run_suite, Suite, SCHEMA_VERSION};

#[derive(Debug, Parser)]
#[command(name = "wrp", version, about = "Weak reflection principle for spectrally negative Levy processes")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Log level for progress messages on stderr.
    #[arg(long, global = true, default_value = "warn")]
    pub log_level: log::LevelFilter,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Symmetry image g = W+ h on a grid of x > 0.
    Symmetry(ImageArgs),
    /// Static hedge payoff h - g on a grid (x may be negative).
    Hedge(ImageArgs),
    /// Surface of P(X_T <= K + x, sup X >= x).
    Joint(JointArgs),
    /// Transition density p_t on a grid.
    Density(DensityArgs),
    /// Monte Carlo estimates from simulated paths.
    Mc(McArgs),
    /// Run the verification suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct ImageArgs {
    /// Model JSON.
    #[arg(long)]
    pub model: PathBuf,
    /// Payoff JSON.
    #[arg(long)]
    pub payoff: PathBuf,
    /// `a:b:n`, n evenly spaced points from a to b inclusive.
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
    pub x_grid: Grid,
    /// Choose r per point so the error certificate is below this.
    #[arg(long, conflicts_with = "r")]
    pub target_err: Option<f64>,
    /// Fixed outer truncation (default 60 when no target is given).
    #[arg(long)]
    pub r: Option<f64>,
    /// Inner truncation; defaults to r. `inf` integrates the whole line.
    #[arg(long = "big-r")]
    pub big_r: Option<f64>,
    /// Real part of the outer contour; must exceed every mirror root.
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    pub gamma: f64,
    /// Relative tolerance of the adaptive quadrature.
    #[arg(long, default_value_t = DEFAULT_QUAD_TOL)]
    pub quad_tol: f64,
    /// Output file (default stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    Uniform,
    Adaptive,
}

#[derive(Debug, Args)]
pub struct JointArgs {
    /// Model JSON.
    #[arg(long)]
    pub model: PathBuf,
    /// Strike offset, strictly negative.
    #[arg(long = "K", allow_hyphen_values = true)]
    pub strike: f64,
    /// Barrier levels `a:b:n` or one value, all >= 0.
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
    pub x: Grid,
    /// Horizons `a:b:n` or one value, all > 0.
    #[arg(long = "T", value_parser = parse_grid)]
    pub t: Grid,
    /// Real part of the Bromwich contour.
    #[arg(long, default_value_t = 4.0)]
    pub gamma: f64,
    /// Outer rule: fixed-step trapezoid or adaptive Gauss-Kronrod.
    #[arg(long, value_enum, default_value_t = RuleArg::Uniform)]
    pub rule: RuleArg,
    /// Step of the uniform rule.
    #[arg(long, default_value_t = DEFAULT_STEP)]
    pub step: f64,
    /// Derivative orders in x and T (0 for the probability itself).
    #[arg(long, default_value_t = 0)]
    pub order_x: u32,
    #[arg(long, default_value_t = 0)]
    pub order_t: u32,
    /// Output file (default stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    /// Defaults to the BM+Gamma example (alpha = beta = sigma = 1).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Horizon t > 0.
    #[arg(long)]
    pub t: f64,
    /// Evaluation points `a:b:n` or one value.
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
    pub x: Grid,
    /// Output file (default stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimateArg {
    Joint,
    Barrier,
    Moments,
    Max,
}

#[derive(Debug, Args)]
pub struct McArgs {
    /// Model JSON.
    #[arg(long)]
    pub model: PathBuf,
    /// Horizon T > 0.
    #[arg(long = "T")]
    pub t: f64,
    /// Number of paths (>= 1000); accepts scientific notation such as 1e6.
    #[arg(long, value_parser = parse_count)]
    pub paths: usize,
    /// Time steps per path (>= 100).
    #[arg(long, value_parser = parse_count)]
    pub steps: usize,
    /// Master seed; path i draws from its own stream.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Statistic to report.
    #[arg(long, value_enum)]
    pub estimate: EstimateArg,
    /// Strike for `joint` and `barrier` (put payoff).
    #[arg(long = "K", allow_hyphen_values = true)]
    pub strike: Option<f64>,
    /// Level for `joint`.
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<f64>,
    /// Start level for `barrier` (barrier at 0).
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub x0: f64,
    /// Disable Brownian-bridge sampling of the maximum.
    #[arg(long)]
    pub no_bridge: bool,
    /// Write the batch as a WRPB columnar file.
    #[arg(long)]
    pub export: Option<PathBuf>,
    /// Output file (default stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Quick,
    Full,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// `quick` runs in seconds; `full` uses 10^6 paths and 10^4 steps.
    #[arg(long, value_enum, default_value_t = SuiteArg::Quick)]
    pub suite: SuiteArg,
    /// Seed of the Monte Carlo checks.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Report file (default stdout). The report is always JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Evenly spaced points, `a:b:n` or a single value.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

pub fn parse_grid(s: &str) -> std::result::Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("bad number {p:?}: {e}"));
    match parts.as_slice() {
        [v] => Ok(Grid(vec![num(v)?])),
        [a, b, n] => {
            let (a, b) = (num(a)?, num(b)?);
            let n = parse_count(n)?;
            if n == 0 || !(a.is_finite() && b.is_finite()) {
                return Err("grid needs finite ends and n >= 1".into());
            }
            if n == 1 {
                return Ok(Grid(vec![a]));
            }
            let h = (b - a) / (n - 1) as f64;
            Ok(Grid((0..n).map(|k| if k == n - 1 { b } else { a + h * k as f64 }).collect()))
        }
        _ => Err(format!("expected a:b:n, got {s:?}")),
    }
}

/// Nonnegative integer, possibly written as `1e6`.
pub fn parse_count(s: &str) -> std::result::Result<usize, String> {
    let v: f64 = s.trim().parse().map_err(|e| format!("bad count {s:?}: {e}"))?;
    if !(v >= 0.0 && v.fract() == 0.0 && v <= 9.007_199_254_740_992e15) {
        return Err(format!("{s:?} is not a nonnegative integer"));
    }
    Ok(v as usize)
}

/// Model config: the triplet fields plus `schema_version`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    #[serde(default = "one")]
    pub schema_version: u32,
    #[serde(flatten)]
    pub triplet: LevyTriplet,
}

fn one() -> u32 {
    1
}

pub fn read_model(path: &Path) -> Result<LevyTriplet> {
    let text = fs::read_to_string(path)?;
    let m: ModelFile = serde_json::from_str(&text)?;
    if m.schema_version != SCHEMA_VERSION {
        return Err(WrpError::InvalidParameter(format!("unsupported model schema_version {}", m.schema_version)));
    }
    m.triplet.validate()?;
    Ok(m.triplet)
}

pub fn read_payoff(path: &Path) -> Result<FourierPayoff> {
    let text = fs::read_to_string(path)?;
    PayoffSpec::from_json(&text)?.build(path.parent())
}

/// Shortest text that reads back as the same f64 is not fixed-width;
/// 17 significant digits are.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv<const N: usize>(header: [&str; N], rows: impl Iterator<Item = [f64; N]>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.iter().map(|&v| num(v)).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn contour(args: &ImageArgs) -> ContourParams {
    let r = args.r.unwrap_or(60.0);
    ContourParams::new(args.gamma, r, args.big_r.unwrap_or(r)).with_quad_tol(args.quad_tol)
}

fn cmd_symmetry(args: &ImageArgs, format: Format) -> Result<()> {
    let triplet = read_model(&args.model)?;
    let payoff = read_payoff(&args.payoff)?;
    let params = contour(args);
    let image = match args.target_err {
        Some(e) => compute_g_curve(&triplet, &payoff, &args.x_grid.0, e, &params)?,
        None => compute_g_image(&triplet, &payoff, &args.x_grid.0, &params)?,
    };
    info!("image on {} points, largest r {}", image.len(), image.params.r);
    let text = match format {
        Format::Json => to_json(&json!({ "schema_version": SCHEMA_VERSION, "image": image }))?,
        Format::Csv => csv(
            ["x", "g", "err_bound", "im_residual"],
            (0..image.len())
                .map(|i| [image.x_grid[i], image.g_values[i], image.error_bounds[i], image.im_residuals[i]]),
        ),
    };
    emit(&args.out, &text)
}

fn cmd_hedge(args: &ImageArgs, format: Format) -> Result<()> {
    let triplet = read_model(&args.model)?;
    let payoff = read_payoff(&args.payoff)?;
    let params = contour(args);
    let truncation = match args.target_err {
        Some(target_err) => Truncation::Target { target_err, base: params },
        None => Truncation::Fixed(params),
    };
    let hedge = static_hedge_payoff(&triplet, &payoff, &args.x_grid.0, truncation)?;
    let text = match format {
        Format::Json => to_json(&json!({ "schema_version": SCHEMA_VERSION, "hedge": hedge }))?,
        Format::Csv => csv(
            ["x", "hedge", "err_bound"],
            (0..hedge.x_grid.len()).map(|i| [hedge.x_grid[i], hedge.values[i], hedge.error_bounds[i]]),
        ),
    };
    emit(&args.out, &text)
}

fn cmd_joint(args: &JointArgs, format: Format) -> Result<()> {
    let triplet = read_model(&args.model)?;
    let rule = match args.rule {
        RuleArg::Uniform => OuterRule::Uniform { step: args.step },
        RuleArg::Adaptive => OuterRule::Adaptive,
    };
    let params = JointParams::default().with_gamma(args.gamma).with_rule(rule);
    let (xs, ts) = (&args.x.0, &args.t.0);
    let values: Vec<Vec<f64>> = if args.order_x == 0 && args.order_t == 0 {
        let s = joint_surface(&triplet, args.strike, xs, ts, &params)?;
        info!("cache {} nodes, build {:.3}s, eval {:.3}s", s.cache_nodes, s.build_seconds, s.eval_seconds);
        s.values
    } else {
        let payoff = params.indicator(&triplet, args.strike)?;
        let t_min = ts.iter().cloned().fold(f64::INFINITY, f64::min);
        let cache = InnerIntegralCache::build(&triplet, &payoff, &params, t_min)?;
        ts.iter()
            .map(|&t| {
                xs.par_iter()
                    .map(|&x| cache.sensitivity(&JointLawQuery::new(args.strike, x, t)?, args.order_x, args.order_t))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?
    };
    let column = if args.order_x == 0 && args.order_t == 0 { "prob" } else { "sensitivity" };
    let text = match format {
        Format::Json => to_json(&json!({
            "schema_version": SCHEMA_VERSION,
            "K": args.strike,
            "order_x": args.order_x,
            "order_t": args.order_t,
            "x": xs,
            "T": ts,
            column: values,
        }))?,
        Format::Csv => csv(
            ["x", "T", column],
            ts.iter()
                .enumerate()
                .flat_map(|(i, &t)| xs.iter().enumerate().map(move |(j, &x)| (i, j, x, t)))
                .map(|(i, j, x, t)| [x, t, values[i][j]]),
        ),
    };
    emit(&args.out, &text)
}

fn cmd_density(args: &DensityArgs, format: Format) -> Result<()> {
    let triplet = match &args.model {
        Some(p) => read_model(p)?,
        None => LevyTriplet::example(),
    };
    let slice = density(&triplet, args.t, &args.x.0)?;
    let text = match format {
        Format::Json => to_json(&json!({ "schema_version": SCHEMA_VERSION, "density": slice }))?,
        Format::Csv => csv(["x", "p"], slice.x_grid.iter().zip(&slice.p_values).map(|(&x, &p)| [x, p])),
    };
    emit(&args.out, &text)
}

fn cmd_mc(args: &McArgs, format: Format) -> Result<()> {
    let triplet = read_model(&args.model)?;
    let config = SimConfig::new(args.paths, args.steps, args.t, args.seed, !args.no_bridge)?;
    let need =
        |v: Option<f64>, name: &str| v.ok_or_else(|| WrpError::InvalidParameter(format!("--estimate needs --{name}")));
    // Validate estimator inputs before the simulation runs.
    let (strike, level) = match args.estimate {
        EstimateArg::Joint => (need(args.strike, "K")?, need(args.x, "x")?),
        EstimateArg::Barrier => (need(args.strike, "K")?, 0.0),
        _ => (0.0, 0.0),
    };
    let batch = simulate(&triplet, &config)?;
    info!("simulated {} paths x {} steps", config.n_paths, config.n_steps);
    if let Some(p) = &args.export {
        batch.write_to(io::BufWriter::new(fs::File::create(p)?))?;
    }
    let rows: Vec<(&str, f64, f64)> = match args.estimate {
        EstimateArg::Joint => {
            let e = estimate_joint(&batch, strike, level)?;
            vec![("joint", e.value, e.se)]
        }
        EstimateArg::Barrier => {
            let e = estimate_barrier_price(&batch, |s| (strike - s).max(0.0), args.x0)?;
            vec![("barrier_put", e.value, e.se)]
        }
        EstimateArg::Moments => {
            let m = terminal_moments(&batch)?;
            vec![("mean", m.mean.value, m.mean.se), ("variance", m.variance.value, m.variance.se)]
        }
        EstimateArg::Max => {
            let e = mean_running_max(&batch)?;
            vec![("mean_max", e.value, e.se)]
        }
    };
    let text = match format {
        Format::Json => {
            let estimates: serde_json::Map<String, serde_json::Value> =
                rows.iter().map(|(n, v, se)| (n.to_string(), json!({ "value": v, "se": se }))).collect();
            to_json(&json!({
                "schema_version": SCHEMA_VERSION,
                "config": config,
                "bias": batch.bias,
                "estimates": estimates,
            }))?
        }
        Format::Csv => {
            let mut out = String::from("estimate,value,se\n");
            for (n, v, se) in rows {
                out.push_str(&format!("{n},{},{}\n", num(v), num(se)));
            }
            out
        }
    };
    emit(&args.out, &text)
}

fn cmd_verify(args: &VerifyArgs) -> Result<bool> {
    let suite = match args.suite {
        SuiteArg::Quick => Suite::Quick,
        SuiteArg::Full => Suite::Full,
    };
    let report = run_suite(suite, args.seed);
    for c in &report.checks {
        info!("{} {}: {:e} vs {:e}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.tolerance);
    }
    emit(&args.out, &to_json(&report)?)?;
    Ok(report.pass)
}

fn error_json(error: &str, hint: &str) {
    eprintln!("{}", json!({ "error": error, "hint": hint }));
}

/// Exit code for a library error: failed certificates are 1, bad input is 2.
fn exit_code(e: &WrpError) -> i32 {
    match e {
        WrpError::TruncationCapExceeded { .. } | WrpError::QuadratureFailure { .. } | WrpError::NegativeDensity(_) => 1,
        _ => 2,
    }
}

fn dispatch(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Symmetry(a) => cmd_symmetry(a, cli.format).map(|_| true),
        Command::Hedge(a) => cmd_hedge(a, cli.format).map(|_| true),
        Command::Joint(a) => cmd_joint(a, cli.format).map(|_| true),
        Command::Density(a) => cmd_density(a, cli.format).map(|_| true),
        Command::Mc(a) => cmd_mc(a, cli.format).map(|_| true),
        Command::Verify(a) => cmd_verify(a),
    }
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("usage error").trim_start_matches("error: ");
            error_json(first, "see `wrp <command> --help` for the flag grammar");
            return 2;
        }
    };
    let _ = env_logger::Builder::new().filter_level(cli.log_level).format_timestamp(None).try_init();
    let pool = match cli.threads {
        Some(0) => {
            error_json("--threads must be >= 1", "omit --threads to use every core");
            return 2;
        }
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    };
    let pool = match pool {
        Ok(p) => p,
        Err(e) => {
            error_json(&e.to_string(), "lower --threads");
            return 2;
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            error_json(&e.to_string(), e.hint());
            exit_code(&e)
        }
    }
}
