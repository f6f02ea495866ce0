//! Argument definitions and command dispatch.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use simplex_conf_core::specfun::{chi2_cdf, chi2_quantile};
use simplex_conf_core::SimplexPoint;

use crate::bounds::{compute_bounds, BoundsRequest};
use crate::error::{CliError, CliResult};
use crate::input::{
    parse_epsilon_mode, parse_format, parse_list, parse_objective, read_counts_csv, OutputFormat,
    RunConfig,
};
use crate::simulate::{simulate_coverage, write_csv, SimulationSetup};
use crate::svg::{coverage_charts, write_svg};
use crate::verify;

#[derive(Debug, Parser)]
#[command(name = "simplex-conf", version, about = "Confidence bounds for convex functions of multinomial weights")]
pub struct Cli {
    /// JSON file with default settings; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Confidence bounds for one vector of counts.
    Bounds(BoundsArgs),
    /// Monte Carlo coverage of the bounds over a grid of sample sizes.
    Simulate(SimulateArgs),
    /// Check the approximation machinery against brute force.
    Verify {
        #[command(subcommand)]
        target: VerifyTarget,
    },
    /// Chi-square distribution function and quantiles.
    Chi2 {
        #[command(subcommand)]
        op: Chi2Op,
    },
}

#[derive(Debug, Clone, Args)]
pub struct LevelArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Defaults to d + 1.
    #[arg(long)]
    pub tau: Option<f64>,
    /// practical or theoretical.
    #[arg(long)]
    pub epsilon_mode: Option<String>,
    /// negentropy, quadratic:fig2 or quadratic:<matrix.json>.
    #[arg(long)]
    pub objective: Option<String>,
    /// Known category values, comma separated.
    #[arg(long)]
    pub values: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub level: LevelArgs,
    /// All category counts, comma separated; the last is the implied one.
    #[arg(long, conflicts_with = "counts_file")]
    pub counts: Option<String>,
    /// CSV with header category,value,count.
    #[arg(long)]
    pub counts_file: Option<PathBuf>,
    /// `half` adds one half to every count.
    #[arg(long)]
    pub smooth: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub level: LevelArgs,
    /// fig1 or fig2.
    #[arg(long)]
    pub preset: Option<String>,
    /// True probabilities of all categories, comma separated.
    #[arg(long)]
    pub p0: Option<String>,
    #[arg(long)]
    pub n_grid: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write `<prefix>_bounds.svg` and `<prefix>_level.svg`.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum VerifyTarget {
    /// Closed-form central moments against enumeration.
    Moments {
        #[arg(long, default_value = "2,5,10")]
        n: String,
    },
    /// Local expansion bound over the whole bulk.
    Expansion {
        #[arg(long, default_value_t = 256)]
        n: u64,
        #[arg(long, default_value_t = 3.0)]
        tau: f64,
        /// Free weights, comma separated; defaults to uniform with d = 2.
        #[arg(long)]
        p: Option<String>,
    },
    /// Total-variation estimate against its bound, uniform weights.
    Tv {
        #[arg(long, default_value_t = 16)]
        n: u64,
        #[arg(long, default_value_t = 1)]
        d: usize,
    },
    /// Largest CDF gap of Pearson's statistic against its bound.
    Cdf {
        #[arg(long, default_value_t = 400)]
        n: u64,
        #[arg(long, default_value_t = 2)]
        d: usize,
    },
    /// Exact set inside the Gaussian superset, two balanced categories.
    Containment {
        #[arg(long, default_value_t = 50)]
        n: u64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 999)]
        grid: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum Chi2Op {
    Cdf {
        #[arg(long)]
        d: u32,
        #[arg(long)]
        ell: f64,
    },
    Quantile {
        #[arg(long)]
        d: u32,
        #[arg(long)]
        q: f64,
    },
}

/// Formats like C's `%.15g`.
pub fn format_g15(v: f64) -> String {
    const DIGITS: i32 = 15;
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".into() } else { v.to_string() };
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if exp < -4 || exp >= DIGITS {
        format!("{}e{}{:02}", trim(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        trim(&format!("{:.*}", (DIGITS - 1 - exp) as usize, v))
    }
}

/// Runs `emit` against the file at `path`, or against `out` if none.
fn emit_to(
    path: Option<&Path>,
    out: &mut dyn Write,
    emit: impl FnOnce(&mut dyn Write) -> CliResult<()>,
) -> CliResult<()> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            let mut writer = BufWriter::new(file);
            emit(&mut writer)?;
            writer.flush()?;
        }
        None => {
            emit(out)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn write_json<T: serde::Serialize>(out: &mut dyn Write, value: &T) -> CliResult<()> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn level_values(level: &LevelArgs, cfg: &RunConfig) -> CliResult<Option<Vec<f64>>> {
    match &level.values {
        Some(text) => Ok(Some(parse_list(text, "value")?)),
        None => Ok(cfg.values.clone()),
    }
}

fn run_bounds(
    args: &BoundsArgs,
    cfg: &RunConfig,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CliResult<()> {
    let level = &args.level;
    let (counts, file_values) = match (&args.counts, &args.counts_file) {
        (Some(text), _) => (parse_list(text, "count")?, None),
        (None, Some(path)) => {
            let (c, v) = read_counts_csv(path)?;
            (c, Some(v))
        }
        (None, None) => (
            cfg.counts.clone().ok_or_else(|| CliError::Parse("no counts given".into()))?,
            None,
        ),
    };
    let values = level_values(level, cfg)?.or(file_values).unwrap_or_default();
    let objective_spec = level.objective.clone().or(cfg.objective.clone());
    let objective = parse_objective(objective_spec.as_deref().unwrap_or("negentropy"), values)?;
    let smooth = match args.smooth.as_deref().or(cfg.smooth.as_deref()) {
        None => false,
        Some("half") => true,
        Some(other) => return Err(CliError::Parse(format!("--smooth accepts only half, got {other:?}"))),
    };
    let mode = level.epsilon_mode.as_deref().or(cfg.epsilon_mode.as_deref()).unwrap_or("practical");
    let request = BoundsRequest {
        counts,
        objective,
        alpha: level.alpha.or(cfg.alpha).unwrap_or(0.05),
        epsilon_mode: parse_epsilon_mode(mode)?,
        tau: level.tau.or(cfg.tau),
        smooth,
    };
    let report = compute_bounds(&request)?;
    for warning in &report.diagnostics.warnings {
        writeln!(err, "warning: {warning}")?;
    }
    emit_to(level.out.as_deref().or(cfg.out.as_deref()), out, |w| write_json(w, &report))
}

fn simulation_setup(args: &SimulateArgs, cfg: &RunConfig) -> CliResult<SimulationSetup> {
    let level = &args.level;
    let mut setup = match args.preset.as_deref().or(cfg.preset.as_deref()).unwrap_or("fig1") {
        "fig1" => SimulationSetup::fig1(),
        "fig2" => SimulationSetup::fig2(),
        other => return Err(CliError::Parse(format!("preset must be fig1 or fig2, got {other:?}"))),
    };
    let p0 = match &args.p0 {
        Some(text) => Some(parse_list::<f64>(text, "probability")?),
        None => cfg.p0.clone(),
    };
    if let Some(p0) = p0 {
        setup.p0 = SimplexPoint::from_probabilities(&p0)?;
    }
    let values = level_values(level, cfg)?;
    if let Some(spec) = level.objective.as_deref().or(cfg.objective.as_deref()) {
        setup.objective = parse_objective(spec, values.unwrap_or_default())?;
    } else if let Some(values) = values {
        setup.objective.values = values;
    }
    if let Some(alpha) = level.alpha.or(cfg.alpha) {
        setup.alpha = alpha;
    }
    if let Some(mode) = level.epsilon_mode.as_deref().or(cfg.epsilon_mode.as_deref()) {
        setup.epsilon_mode = parse_epsilon_mode(mode)?;
    }
    setup.tau = level.tau.or(cfg.tau);
    if let Some(text) = &args.n_grid {
        setup.n_grid = parse_list(text, "sample size")?;
    } else if let Some(grid) = &cfg.n_grid {
        setup.n_grid = grid.clone();
    }
    if let Some(trials) = args.trials.or(cfg.trials) {
        setup.trials = trials;
    }
    if let Some(seed) = args.seed.or(cfg.seed) {
        setup.seed = seed;
    }
    Ok(setup)
}

fn run_simulate(args: &SimulateArgs, cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let setup = simulation_setup(args, cfg)?;
    let format = parse_format(args.format.as_deref().or(cfg.format.as_deref()).unwrap_or("csv"))?;
    let rows = simulate_coverage(&setup)?;
    emit_to(args.level.out.as_deref().or(cfg.out.as_deref()), out, |w| match format {
        OutputFormat::Csv => write_csv(&rows, w),
        OutputFormat::Json => write_json(w, &rows),
    })?;
    if let Some(prefix) = args.svg.as_ref().or(cfg.svg.as_ref()) {
        let [bounds, level] = coverage_charts(&rows, setup.alpha);
        let path = |suffix: &str| {
            let mut name = prefix.clone().into_os_string();
            name.push(suffix);
            PathBuf::from(name)
        };
        write_svg(&bounds.0, &bounds.1, &path("_bounds.svg"))?;
        write_svg(&level.0, &level.1, &path("_level.svg"))?;
    }
    Ok(())
}

fn run_verify(target: &VerifyTarget, out: &mut dyn Write) -> CliResult<()> {
    let checks = match target {
        VerifyTarget::Moments { n } => verify::verify_moments(&parse_list(n, "sample size")?)?,
        VerifyTarget::Expansion { n, tau, p } => {
            let p = match p {
                Some(text) => SimplexPoint::new(parse_list(text, "weight")?)?,
                None => SimplexPoint::uniform(2),
            };
            verify::verify_expansion(*n, *tau, &p)?
        }
        VerifyTarget::Tv { n, d } => verify::verify_tv(*n, *d)?,
        VerifyTarget::Cdf { n, d } => verify::verify_cdf(*n, *d)?,
        VerifyTarget::Containment { n, alpha, grid } => verify::verify_containment(*n, *alpha, *grid)?,
    };
    for check in &checks {
        writeln!(out, "{}", check.line())?;
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(CliError::Verify(format!("{failed} of {} checks failed", checks.len())));
    }
    Ok(())
}

fn run_chi2(op: &Chi2Op, out: &mut dyn Write) -> CliResult<()> {
    let value = match *op {
        Chi2Op::Cdf { d, ell } => chi2_cdf(d, ell),
        Chi2Op::Quantile { d, q } => chi2_quantile(d, q),
    }
    .map_err(|e| CliError::Parse(e.to_string()))?;
    writeln!(out, "{}", format_g15(value))?;
    Ok(())
}

/// Runs one parsed invocation, writing results to `out` and warnings to
/// `err`.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    match &cli.command {
        Command::Bounds(args) => run_bounds(args, &cfg, out, err),
        Command::Simulate(args) => run_simulate(args, &cfg, out),
        Command::Verify { target } => run_verify(target, out),
        Command::Chi2 { op } => run_chi2(op, out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g15_formatting() {
        assert_eq!(format_g15(1.0 - (-1f64).exp()), "0.632120558828558");
        assert_eq!(format_g15(-2.0 * 0.05f64.ln()), "5.99146454710798");
        assert_eq!(format_g15(0.0), "0");
        assert_eq!(format_g15(2.0), "2");
        assert_eq!(format_g15(1.5e-7), "1.5e-07");
        assert_eq!(format_g15(1e20), "1e+20");
        assert_eq!(format_g15(0.0001), "0.0001");
    }

    #[test]
    fn arguments_parse() {
        let cli = Cli::try_parse_from(["simplex-conf", "chi2", "quantile", "--d", "2", "--q", "0.95"]).unwrap();
        let mut out = Vec::new();
        run(&cli, &mut out, &mut Vec::new()).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "5.99146454710798\n");
        assert!(Cli::try_parse_from(["simplex-conf", "bounds", "--counts", "1,2", "--counts-file", "x"]).is_err());
    }
}
