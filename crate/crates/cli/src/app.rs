//! Command-line definitions and execution.

use std::collections::BTreeMap;
use std::time::Instant;

use bcp_core::transforms::{
    reduce_gbm, reduce_growth, reduce_ou, reduce_ou_td, CoefFn, ReducedProblem,
};
use bcp_core::{
    BcpError, GbmParams, GeneralBoundary, GrowthParams, McConfig, OuParams, OuTdParams, Rate,
    SeriesConfig, Side,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::expr::{parse_boundary, BoundaryExpr, ParseError};
use crate::report::{
    emit_csv, emit_json, emit_plot_data, Curve, Param, Request, Results, Run, RunReport,
};

/// Seed used by `reproduce` unless `--seed` is given.
pub const REPRODUCE_SEED: u64 = 42;
const PLOT_POINTS: usize = 201;

#[derive(Debug, Parser)]
#[command(
    name = "bcp",
    version,
    about = "Boundary crossing probabilities for Brownian motion and reducible diffusions",
    long_about = "Estimates the probability that a process started at x0 stays strictly between \
                  a lower and an upper boundary on [0, T]. Boundaries and time-dependent \
                  coefficients are expressions in t, e.g. \"sqrt(1+t)\", \"0.1+0.05*exp(-t)\", \
                  \"inf\", \"-inf\". Diffusions are mapped to Brownian motion, the boundaries are \
                  bracketed by piecewise-linear envelopes on n equal steps, and both envelope \
                  probabilities are estimated by Monte Carlo on common samples."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Standard Brownian motion started at 0.
    Bm {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Ornstein-Uhlenbeck process dX = kappa (alpha - X) dt + sigma dW.
    Ou {
        #[arg(long, allow_negative_numbers = true)]
        kappa: f64,
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        /// Variance rate sigma^2.
        #[arg(long, allow_negative_numbers = true)]
        sigma2: f64,
        #[arg(long, allow_negative_numbers = true)]
        x0: f64,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Ornstein-Uhlenbeck process with coefficients given as expressions in t.
    #[command(name = "ou-td")]
    OuTd {
        #[arg(long, allow_hyphen_values = true)]
        kappa: String,
        #[arg(long, allow_hyphen_values = true)]
        alpha: String,
        #[arg(long, allow_hyphen_values = true)]
        sigma: String,
        #[arg(long, allow_negative_numbers = true)]
        x0: f64,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Growth process dX = (alpha X - beta X log X) dt + sigma X dW.
    Growth {
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, allow_negative_numbers = true)]
        beta: f64,
        #[arg(long, allow_negative_numbers = true)]
        sigma: f64,
        #[arg(long, allow_negative_numbers = true)]
        x0: f64,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Geometric Brownian motion dX = r(t) X dt + sigma X dW.
    Gbm {
        #[arg(long, allow_negative_numbers = true)]
        sigma: f64,
        /// Short rate r(t), an expression in t.
        #[arg(long, allow_hyphen_values = true)]
        rate: String,
        #[arg(long, allow_negative_numbers = true)]
        x0: f64,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Re-run the four benchmark examples.
    Reproduce {
        /// `paper7`: the four benchmark examples (OU, growth, GBM with a time-varying rate,
        /// Brownian motion under Daniels' boundary) at n = 128, 10^6 paths, 6 series terms.
        #[arg(value_enum)]
        experiment: Experiment,
        #[arg(long, default_value_t = REPRODUCE_SEED)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Worker threads (0 = all cores).
        #[arg(long, env = "BCP_THREADS", default_value_t = 0)]
        threads: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    Paper7,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    PlotData,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Lower boundary a(t).
    #[arg(long, default_value = "-inf", allow_hyphen_values = true)]
    pub lower: String,
    /// Upper boundary b(t).
    #[arg(long, allow_hyphen_values = true)]
    pub upper: String,
    /// Horizon T.
    #[arg(long = "T", default_value_t = 1.0)]
    pub horizon: f64,
    /// Number of equal steps of the (transformed) time interval.
    #[arg(long, default_value_t = 128)]
    pub n: usize,
    #[arg(long, default_value_t = 1_000_000)]
    pub paths: u64,
    /// Required; there is no entropy-seeded default.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Terms of the two-sided series before the tail check.
    #[arg(long, default_value_t = 6)]
    pub series_terms: usize,
    /// Samples per step used to build the envelopes.
    #[arg(long, default_value_t = 50)]
    pub envelope_samples: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Average each draw with its mirror image.
    #[arg(long)]
    pub antithetic: bool,
    /// Worker threads (0 = all cores).
    #[arg(long, env = "BCP_THREADS", default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Error)]
#[error("{message}")]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub const USAGE: u8 = 2;
    pub const NUMERIC: u8 = 3;
    pub const BOUNDARY: u8 = 4;

    fn usage(message: impl Into<String>) -> Self {
        CliError { code: Self::USAGE, message: message.into() }
    }

    fn parse(flag: &str, text: &str, e: ParseError) -> Self {
        Self::usage(format!("--{flag} '{text}': {e}"))
    }
}

impl From<BcpError> for CliError {
    fn from(e: BcpError) -> Self {
        let code = match e {
            BcpError::InvalidArgument(_) | BcpError::InvalidDomain(_) => CliError::USAGE,
            BcpError::NumericFailure(_) | BcpError::IndexOutOfRange { .. } => CliError::NUMERIC,
            BcpError::StartOutsideBand { .. }
            | BcpError::InvalidBoundaries(_)
            | BcpError::Evaluation { .. } => CliError::BOUNDARY,
        };
        CliError { code, message: e.to_string() }
    }
}

/// A process with parsed coefficients.
#[derive(Debug, Clone)]
pub enum Process {
    Bm,
    Ou { kappa: f64, alpha: f64, sigma2: f64, x0: f64 },
    OuTd { kappa: BoundaryExpr, alpha: BoundaryExpr, sigma: BoundaryExpr, x0: f64 },
    Growth { alpha: f64, beta: f64, sigma: f64, x0: f64 },
    Gbm { sigma: f64, rate: BoundaryExpr, x0: f64 },
}

impl Process {
    pub fn name(&self) -> &'static str {
        match self {
            Process::Bm => "bm",
            Process::Ou { .. } => "ou",
            Process::OuTd { .. } => "ou-td",
            Process::Growth { .. } => "growth",
            Process::Gbm { .. } => "gbm",
        }
    }

    fn parameters(&self) -> BTreeMap<String, Param> {
        let num = |k: &str, v: f64| (k.to_string(), Param::Number(v));
        let expr = |k: &str, e: &BoundaryExpr| (k.to_string(), Param::Expr(e.source().to_string()));
        match self {
            Process::Bm => BTreeMap::new(),
            Process::Ou { kappa, alpha, sigma2, x0 } => {
                [num("kappa", *kappa), num("alpha", *alpha), num("sigma2", *sigma2), num("x0", *x0)].into()
            }
            Process::OuTd { kappa, alpha, sigma, x0 } => {
                [expr("kappa", kappa), expr("alpha", alpha), expr("sigma", sigma), num("x0", *x0)].into()
            }
            Process::Growth { alpha, beta, sigma, x0 } => {
                [num("alpha", *alpha), num("beta", *beta), num("sigma", *sigma), num("x0", *x0)].into()
            }
            Process::Gbm { sigma, rate, x0 } => {
                [num("sigma", *sigma), expr("rate", rate), num("x0", *x0)].into()
            }
        }
    }

    fn reduce(&self, a: &GeneralBoundary, b: &GeneralBoundary, horizon: f64) -> bcp_core::Result<ReducedProblem> {
        match self {
            Process::Bm => ReducedProblem::brownian(a.clone(), b.clone()),
            Process::Ou { kappa, alpha, sigma2, x0 } => {
                if !(*sigma2 > 0.0) {
                    return Err(BcpError::InvalidArgument(format!("sigma2 must be positive, got {sigma2}")));
                }
                let p = OuParams { kappa: *kappa, alpha: *alpha, sigma: sigma2.sqrt(), x0: *x0 };
                reduce_ou(&p, a, b, horizon)
            }
            Process::OuTd { kappa, alpha, sigma, x0 } => {
                let p = OuTdParams {
                    kappa: kappa.function(),
                    alpha: alpha.function(),
                    sigma: sigma.function(),
                    x0: *x0,
                };
                reduce_ou_td(&p, a, b, horizon)
            }
            Process::Growth { alpha, beta, sigma, x0 } => {
                let p = GrowthParams { alpha: *alpha, beta: *beta, sigma: *sigma, x0: *x0 };
                reduce_growth(&p, a, b, horizon)
            }
            Process::Gbm { sigma, rate, x0 } => {
                let rate = match rate.constant() {
                    Some(r) => Rate::Constant(r),
                    None => Rate::Function(rate.function() as CoefFn),
                };
                reduce_gbm(&GbmParams { sigma: *sigma, rate, x0: *x0 }, a, b, horizon)
            }
        }
    }
}

/// One fully specified estimation.
#[derive(Debug, Clone)]
pub struct Job {
    pub process: Process,
    pub lower: BoundaryExpr,
    pub upper: BoundaryExpr,
    pub horizon: f64,
    pub n: usize,
    pub paths: u64,
    pub seed: u64,
    pub series_terms: usize,
    pub envelope_samples: usize,
    pub antithetic: bool,
    pub threads: usize,
}

fn parse_flag(flag: &str, text: &str) -> Result<BoundaryExpr, CliError> {
    parse_boundary(text).map_err(|e| CliError::parse(flag, text, e))
}

impl Job {
    fn from_args(process: Process, run: &RunArgs) -> Result<Self, CliError> {
        let lower = parse_flag("lower", &run.lower)?;
        let upper = parse_flag("upper", &run.upper)?;
        if lower.infinite() == Some(f64::NEG_INFINITY) && upper.infinite() == Some(f64::INFINITY) {
            return Err(CliError {
                code: CliError::BOUNDARY,
                message: "upper boundary must be finite or problem trivial (P=1 when both infinite)".into(),
            });
        }
        let seed = run
            .seed
            .ok_or_else(|| CliError::usage("--seed is required so that runs are reproducible"))?;
        Ok(Job {
            process,
            lower,
            upper,
            horizon: run.horizon,
            n: run.n,
            paths: run.paths,
            seed,
            series_terms: run.series_terms,
            envelope_samples: run.envelope_samples,
            antithetic: run.antithetic,
            threads: run.threads,
        })
    }

    pub fn request(&self) -> Request {
        Request {
            process: self.process.name().to_string(),
            parameters: self.process.parameters(),
            lower_boundary: self.lower.source().to_string(),
            upper_boundary: self.upper.source().to_string(),
            horizon: self.horizon,
            n: self.n,
            paths: self.paths,
            seed: self.seed,
            series_terms: self.series_terms,
            envelope_samples: self.envelope_samples,
            antithetic: self.antithetic,
        }
    }

    pub fn mc_config(&self) -> McConfig {
        McConfig {
            series: SeriesConfig::with_terms(self.series_terms),
            threads: self.threads,
            antithetic: self.antithetic,
            ..McConfig::new(self.paths, self.seed)
        }
    }

    /// Original boundaries as library objects.
    pub fn boundaries(&self) -> Result<(GeneralBoundary, GeneralBoundary), CliError> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(CliError::usage(format!("--T must be positive, got {}", self.horizon)));
        }
        Ok((
            self.lower.to_boundary(Side::Lower, self.horizon)?,
            self.upper.to_boundary(Side::Upper, self.horizon)?,
        ))
    }

    pub fn reduced(&self) -> Result<ReducedProblem, CliError> {
        let (a, b) = self.boundaries()?;
        Ok(self.process.reduce(&a, &b, self.horizon)?)
    }

    pub fn run(&self) -> Result<Run, CliError> {
        let start = Instant::now();
        let reduced = self.reduced()?;
        let est = reduced.estimate(self.n, self.envelope_samples, &self.mc_config())?;
        let timing_ms = start.elapsed().as_secs_f64() * 1e3;
        let bracket = est.bracket.expect("bracketed estimates carry a bracket");
        let report = RunReport {
            request: self.request(),
            results: Results {
                mean: est.mean,
                std_error: est.std_error,
                lower: bracket.lower,
                upper: bracket.upper,
                bracket_width: bracket.width(),
            },
            timing_ms,
            version: env!("CARGO_PKG_VERSION").to_string(),
        };
        Ok(Run { report, curves: self.curves(&reduced)? })
    }

    fn curves(&self, reduced: &ReducedProblem) -> Result<Vec<Curve>, CliError> {
        let label = self.process.name();
        let sample = |g: &GeneralBoundary, horizon: f64| -> Result<Vec<(f64, f64)>, CliError> {
            (0..PLOT_POINTS)
                .map(|k| {
                    let t = horizon * k as f64 / (PLOT_POINTS - 1) as f64;
                    Ok((t, g.eval(t)?))
                })
                .collect()
        };
        let (a, b) = self.boundaries()?;
        let mut curves = Vec::new();
        let mut push = |name: &str, g: &GeneralBoundary, horizon: f64| -> Result<(), CliError> {
            if g.is_finite() {
                curves.push(Curve { name: format!("{label}:{name}"), points: sample(g, horizon)? });
            }
            Ok(())
        };
        push("lower", &a, self.horizon)?;
        push("upper", &b, self.horizon)?;
        if !matches!(self.process, Process::Bm) {
            push("transformed_lower", &reduced.lower, reduced.horizon)?;
            push("transformed_upper", &reduced.upper, reduced.horizon)?;
        }
        Ok(curves)
    }
}

/// The four benchmark runs of `reproduce paper7`.
pub fn paper7_jobs(seed: u64, threads: usize) -> Vec<Job> {
    let expr = |s: &str| parse_boundary(s).expect("built-in expression parses");
    let job = |process, lower: &str, upper: &str| Job {
        process,
        lower: expr(lower),
        upper: expr(upper),
        horizon: 1.0,
        n: 128,
        paths: 1_000_000,
        seed,
        series_terms: 6,
        envelope_samples: 50,
        antithetic: false,
        threads,
    };
    vec![
        job(Process::Ou { kappa: 0.5, alpha: 0.0, sigma2: 1.0, x0: 0.0 }, "-inf", "1"),
        job(Process::Growth { alpha: 0.5, beta: 0.5, sigma: 1.0, x0: 1.0 }, "0", "exp(1)"),
        job(
            Process::Gbm { sigma: 0.1, rate: expr("0.1+0.05*exp(-t)"), x0: 10.0 },
            "-inf",
            "12",
        ),
        job(Process::Bm, "-inf", "0.5 - t*log(0.25+0.25*sqrt(1+8*exp(-1/t)))"),
    ]
}

/// Turns a parsed command into jobs and the requested output format.
pub fn plan(command: &Command) -> Result<(Vec<Job>, Format), CliError> {
    let single = |process: Process, run: &RunArgs| -> Result<(Vec<Job>, Format), CliError> {
        Ok((vec![Job::from_args(process, run)?], run.format))
    };
    match command {
        Command::Bm { run } => single(Process::Bm, run),
        Command::Ou { kappa, alpha, sigma2, x0, run } => single(
            Process::Ou { kappa: *kappa, alpha: *alpha, sigma2: *sigma2, x0: *x0 },
            run,
        ),
        Command::OuTd { kappa, alpha, sigma, x0, run } => single(
            Process::OuTd {
                kappa: parse_flag("kappa", kappa)?,
                alpha: parse_flag("alpha", alpha)?,
                sigma: parse_flag("sigma", sigma)?,
                x0: *x0,
            },
            run,
        ),
        Command::Growth { alpha, beta, sigma, x0, run } => single(
            Process::Growth { alpha: *alpha, beta: *beta, sigma: *sigma, x0: *x0 },
            run,
        ),
        Command::Gbm { sigma, rate, x0, run } => single(
            Process::Gbm { sigma: *sigma, rate: parse_flag("rate", rate)?, x0: *x0 },
            run,
        ),
        Command::Reproduce { experiment: Experiment::Paper7, seed, format, threads } => {
            Ok((paper7_jobs(*seed, *threads), *format))
        }
    }
}

pub fn render(runs: &[Run], format: Format) -> String {
    let reports: Vec<&RunReport> = runs.iter().map(|r| &r.report).collect();
    match format {
        Format::Json => emit_json(&reports),
        Format::Csv => emit_csv(&reports),
        Format::PlotData => emit_plot_data(&runs.iter().collect::<Vec<_>>()),
    }
}

/// Runs a parsed command and renders its output.
pub fn execute(command: &Command) -> Result<String, CliError> {
    let (jobs, format) = plan(command)?;
    let runs = jobs.iter().map(Job::run).collect::<Result<Vec<_>, _>>()?;
    Ok(render(&runs, format))
}
