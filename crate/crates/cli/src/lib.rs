//! Command-line front end for `ldpfreq-core`.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data errors and 3 when
//! `verify` finds a disagreement with the brute-force oracle.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ldpfreq_core::harness::{
    ingest_histogram, run_ibu_convergence, write_sweep_csv, zipf_distribution, HistogramFormat,
    SweepConfig, ZipfSpec, THREADS_ENV,
};
use ldpfreq_core::metrics::neg_log_likelihood;
use ldpfreq_core::oracle::{verify_agreement, ORACLE_MAX_K};
use ldpfreq_core::{
    empirical_histogram, run_estimator, sample_dataset, Distribution, EstimatorKind, MleTrace,
    RRParams, Seed, DEFAULT_IBU_ITERS,
};
use serde::Serialize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_DISAGREEMENT: i32 = 3;

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] ldpfreq_core::Error),
    #[error("{0}")]
    Disagreement(String),
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Data(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(e.into())
    }
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Disagreement(_) => EXIT_DISAGREEMENT,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(
    name = "ldpfreq",
    version,
    about = "Frequency estimation under k-ary randomized response"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate the true histogram from one observed histogram.
    Estimate(EstimateArgs),
    /// Sample a randomized dataset from a true distribution.
    Simulate(SimulateArgs),
    /// Run a Monte-Carlo sweep described by a JSON config and write CSV.
    Sweep(SweepArgs),
    /// Squared distance between IBU iterates and the exact MLE, as CSV.
    IbuConvergence(ConvergenceArgs),
    /// Check the closed-form MLE against a brute-force maximizer on small K.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct ChannelArgs {
    /// Privacy budget; p and q are derived from it.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Keep probability p, instead of --epsilon.
    #[arg(long)]
    p: Option<f64>,
}

impl ChannelArgs {
    fn params(&self, k: usize) -> CliResult<RRParams> {
        let params = match (self.epsilon, self.p) {
            (Some(eps), None) => RRParams::from_epsilon(k, eps)?,
            (None, Some(p)) => RRParams::from_p(k, p)?,
            _ => return Err(CliError::Usage("give exactly one of --epsilon, --p".into())),
        };
        Ok(params)
    }
}

#[derive(Args, Debug)]
struct HistogramArgs {
    /// Histogram file.
    #[arg(long, short)]
    input: PathBuf,
    /// counts-csv, probs-csv or json; guessed from the extension if omitted.
    #[arg(long, value_parser = parse_format)]
    format: Option<HistogramFormat>,
    /// Sample size; required for probability files without one.
    #[arg(long)]
    n: Option<u64>,
}

impl HistogramArgs {
    fn load(&self) -> CliResult<(Distribution, u64)> {
        let format = self
            .format
            .unwrap_or_else(|| HistogramFormat::from_path(&self.input));
        Ok(ingest_histogram(&self.input, format, self.n)?)
    }
}

fn parse_format(s: &str) -> Result<HistogramFormat, String> {
    s.parse().map_err(|e: ldpfreq_core::Error| e.to_string())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    Inv,
    Invn,
    Invp,
    Mle,
    Ibu,
    All,
}

impl Method {
    fn kinds(self) -> Vec<EstimatorKind> {
        match self {
            Method::Inv => vec![EstimatorKind::Inv],
            Method::Invn => vec![EstimatorKind::InvN],
            Method::Invp => vec![EstimatorKind::InvP],
            Method::Mle => vec![EstimatorKind::Mle],
            Method::Ibu => vec![EstimatorKind::Ibu],
            Method::All => EstimatorKind::ALL.to_vec(),
        }
    }
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[command(flatten)]
    histogram: HistogramArgs,
    #[command(flatten)]
    channel: ChannelArgs,
    #[arg(long, value_enum, default_value = "mle")]
    method: Method,
    /// Include the MLE trace (zero count, threshold, multiplier).
    #[arg(long)]
    trace: bool,
    #[arg(long, default_value_t = DEFAULT_IBU_ITERS)]
    ibu_iters: usize,
    /// Output file; stdout if omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct EstimateOutput {
    method: EstimatorKind,
    theta: Vec<f64>,
    /// Non-finite for an invalid Inv estimate, serialized as null.
    nll_per_sample: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<MleTrace>,
}

#[derive(Serialize)]
struct EstimateReport<'a> {
    k: usize,
    n: u64,
    epsilon: f64,
    p: f64,
    q: f64,
    #[serde(flatten)]
    single: Option<&'a EstimateOutput>,
    #[serde(skip_serializing_if = "Option::is_none")]
    estimates: Option<&'a [EstimateOutput]>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SimulateFormat {
    /// One report count per line; readable by `estimate`.
    Counts,
    /// `{"counts": [...], "n": N}` with the report counts.
    Json,
    /// One zero-based report per line.
    Reports,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Number of categories for a Zipf truth.
    #[arg(long, requires = "zipf_s", conflicts_with = "theta")]
    k: Option<usize>,
    /// Zipf exponent for the truth.
    #[arg(long, requires = "k")]
    zipf_s: Option<f64>,
    /// True distribution read from a histogram file.
    #[arg(long, required_unless_present = "k")]
    theta: Option<PathBuf>,
    #[arg(long, value_parser = parse_format)]
    theta_format: Option<HistogramFormat>,
    /// Number of users.
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    channel: ChannelArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "counts")]
    output: SimulateFormat,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// JSON sweep config.
    #[arg(long, short)]
    config: PathBuf,
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Worker threads; the rayon default if neither this nor the variable is set.
    #[arg(long, env = THREADS_ENV)]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct ConvergenceArgs {
    /// Observed histogram; if omitted, one is sampled from a Zipf truth.
    #[arg(long, short, conflicts_with_all = ["k", "zipf_s", "seed"])]
    input: Option<PathBuf>,
    #[arg(long, value_parser = parse_format)]
    format: Option<HistogramFormat>,
    /// Sample size for probability inputs, or number of sampled reports.
    #[arg(long)]
    n: Option<u64>,
    #[arg(long, default_value_t = 500)]
    k: usize,
    #[arg(long, default_value_t = 1.3)]
    zipf_s: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    channel: ChannelArgs,
    #[arg(long, default_value_t = DEFAULT_IBU_ITERS)]
    max_iters: usize,
    #[arg(long, default_value_t = 100)]
    stride: usize,
    /// Label written in the `series` column.
    #[arg(long)]
    series: Option<String>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest K drawn (at most 6).
    #[arg(long, default_value_t = ORACLE_MAX_K)]
    max_k: usize,
}

pub const CONVERGENCE_HEADER: &str = "series,t,sq_error";

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Estimate(args) => estimate(args),
        Command::Simulate(args) => simulate(args),
        Command::Sweep(args) => sweep(args),
        Command::IbuConvergence(args) => ibu_convergence(args),
        Command::Verify(args) => verify(args),
    }
}

fn open_out(path: Option<&Path>) -> CliResult<Box<dyn Write + Send>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn estimate(args: EstimateArgs) -> CliResult<()> {
    let (phi, n) = args.histogram.load()?;
    let params = args.channel.params(phi.k())?;
    if args.trace && !matches!(args.method, Method::Mle | Method::All) {
        return Err(CliError::Usage("--trace needs --method mle or all".into()));
    }
    let outputs = args
        .method
        .kinds()
        .into_iter()
        .map(|kind| {
            let est = run_estimator(kind, &phi, &params, args.ibu_iters)?;
            let nll = neg_log_likelihood(&est.theta, &phi, &params).unwrap_or(f64::NAN);
            Ok(EstimateOutput {
                method: kind,
                theta: est.theta,
                nll_per_sample: nll,
                trace: est.trace.filter(|_| args.trace),
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let all = args.method == Method::All;
    let report = EstimateReport {
        k: phi.k(),
        n,
        epsilon: params.epsilon(),
        p: params.p(),
        q: params.q(),
        single: (!all).then(|| &outputs[0]),
        estimates: all.then_some(outputs.as_slice()),
    };
    let mut out = open_out(args.out.as_deref())?;
    serde_json::to_writer(&mut out, &report)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn simulate(args: SimulateArgs) -> CliResult<()> {
    let theta = match (&args.theta, args.k, args.zipf_s) {
        (Some(path), _, _) => {
            let format = args
                .theta_format
                .unwrap_or_else(|| HistogramFormat::from_path(path));
            // A true distribution needs no sample size of its own.
            ingest_histogram(path, format, Some(1))?.0
        }
        (None, Some(k), Some(s)) => zipf_distribution(ZipfSpec { k, s })?,
        _ => return Err(CliError::Usage("give --theta, or --k with --zipf-s".into())),
    };
    let params = args.channel.params(theta.k())?;
    let (_, reports) = sample_dataset(&theta, args.n, &params, Seed::new(args.seed, 0))?;
    let mut out = open_out(args.out.as_deref())?;
    match args.output {
        SimulateFormat::Counts => {
            for c in reports.counts() {
                writeln!(out, "{c}")?;
            }
        }
        SimulateFormat::Json => {
            let counts = reports.counts();
            serde_json::to_writer(
                &mut out,
                &serde_json::json!({ "counts": counts, "n": reports.n() }),
            )?;
            writeln!(out)?;
        }
        SimulateFormat::Reports => {
            for y in reports.values() {
                writeln!(out, "{y}")?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn sweep(args: SweepArgs) -> CliResult<()> {
    if args.threads == Some(0) {
        return Err(CliError::Usage("--threads must be positive".into()));
    }
    let config = SweepConfig::from_json_file(&args.config)?;
    let mut out = open_out(args.out.as_deref())?;
    let summary = write_sweep_csv(&config, args.threads, &mut out)?;
    eprintln!(
        "{} cells, {} tasks, {} records, {} failures",
        summary.cells,
        summary.tasks,
        summary.records,
        summary.failures.len()
    );
    for f in &summary.failures {
        eprintln!("failed: {f:?}");
    }
    Ok(())
}

fn ibu_convergence(args: ConvergenceArgs) -> CliResult<()> {
    let (phi, label) = match &args.input {
        Some(path) => {
            let format = args
                .format
                .unwrap_or_else(|| HistogramFormat::from_path(path));
            let (phi, _) = ingest_histogram(path, format, args.n)?;
            let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned());
            (phi, stem.unwrap_or_else(|| "input".into()))
        }
        None => {
            let n = args.n.unwrap_or(10_000) as usize;
            let theta = zipf_distribution(ZipfSpec {
                k: args.k,
                s: args.zipf_s,
            })?;
            let params = args.channel.params(args.k)?;
            let (_, reports) = sample_dataset(&theta, n, &params, Seed::new(args.seed, 0))?;
            let label = format!("zipf-{}-k{}-n{}-seed{}", args.zipf_s, args.k, n, args.seed);
            (empirical_histogram(&reports, args.k)?, label)
        }
    };
    let params = args.channel.params(phi.k())?;
    let label = args.series.unwrap_or(label);
    if label.contains([',', '"', '\n']) {
        return Err(CliError::Usage(
            "--series must not contain commas, quotes or newlines".into(),
        ));
    }
    let series = run_ibu_convergence(&phi, &params, args.max_iters, args.stride)?;
    let mut out = open_out(args.out.as_deref())?;
    writeln!(out, "{CONVERGENCE_HEADER}")?;
    for point in &series.points {
        writeln!(out, "{label},{},{:?}", point.t, point.sq_error)?;
    }
    out.flush()?;
    if !series.monotone_violations.is_empty() {
        eprintln!(
            "note: distance to the MLE increased at {} checkpoints",
            series.monotone_violations.len()
        );
    }
    Ok(())
}

fn verify(args: VerifyArgs) -> CliResult<()> {
    if args.max_k < 2 || args.max_k > ORACLE_MAX_K {
        return Err(CliError::Usage(format!(
            "--max-k must be in 2..={ORACLE_MAX_K}"
        )));
    }
    let report = verify_agreement(args.trials, args.seed, args.max_k)?;
    let mut out = BufWriter::new(io::stdout());
    serde_json::to_writer(
        &mut out,
        &serde_json::json!({
            "trials": report.trials,
            "passed": report.passed(),
            "max_linf": report.max_linf,
            "max_nll_excess": report.max_nll_excess,
            "failures": report.failures.len(),
        }),
    )?;
    writeln!(out)?;
    out.flush()?;
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::Disagreement(format!(
            "{} of {} instances disagree; first: {:?}",
            report.failures.len(),
            report.trials,
            report.failures[0]
        )))
    }
}
