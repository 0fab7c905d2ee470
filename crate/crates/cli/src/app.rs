//! Command-line parsing and the exit-code contract: 0 all rows pass, 1 some
//! row fails, 2 usage or configuration error.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::acceptance;
use crate::config::{ExperimentConfig, SweepConfig};
use crate::report::{self, Format, Row};
use crate::run::{self, VerifyParams, DEFAULT_SEED, DEFAULT_TRIALS};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "qsep", version, about = "Checks for Haar-random and reflection oracle separations")]
pub struct Cli {
    /// JSON config for `experiment` and `sweep`.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte Carlo trials per estimate.
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    /// Report path; without it the report goes to stdout after the summary
    /// when --format is given.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check one identity or bound, or `acceptance` for the whole suite.
    Verify(Box<VerifyArgs>),
    /// Run the experiment described by --config.
    Experiment,
    /// Run every cell of the grid in --config.
    Sweep,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// binom, tracenorm, reflect, swap, zerosplit, types, hyb, keylemma,
    /// thresholdb, theta, or acceptance.
    pub lemma: String,
    /// haar, phase or fixed.
    #[arg(long)]
    pub dist: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long)]
    pub t1: Option<usize>,
    #[arg(long)]
    pub t2: Option<usize>,
    #[arg(long)]
    pub levels: Option<usize>,
    /// Rows of the block-ones matrix.
    #[arg(long = "M")]
    pub m: Option<usize>,
    /// Columns of the block-ones matrix, or the symbol count N.
    #[arg(long = "N")]
    pub big_n: Option<usize>,
    #[arg(long)]
    pub a1: Option<usize>,
    #[arg(long)]
    pub a2: Option<usize>,
    #[arg(long)]
    pub b1: Option<usize>,
    #[arg(long)]
    pub b2: Option<usize>,
    /// Dimension of the reflected state.
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub max_t: Option<usize>,
    #[arg(long)]
    pub max_regs: Option<usize>,
    /// Also report the global-vs-PPT gap (keylemma).
    #[arg(long)]
    pub gap: bool,
}

impl From<&VerifyArgs> for VerifyParams {
    fn from(a: &VerifyArgs) -> Self {
        VerifyParams {
            dist: a.dist.clone(),
            n: a.n,
            t: a.t,
            t1: a.t1,
            t2: a.t2,
            levels: a.levels,
            m: a.m,
            big_n: a.big_n,
            a1: a.a1,
            a2: a.a2,
            b1: a.b1,
            b2: a.b2,
            d: a.d,
            samples: a.samples,
            max_t: a.max_t,
            max_regs: a.max_regs,
            gap: a.gap,
        }
    }
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut impl Write, stderr: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = write!(if e.use_stderr() { stderr as &mut dyn Write } else { stdout as &mut dyn Write }, "{e}");
            return code;
        }
    };
    match run(&cli, stdout) {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_FAIL,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e:#}");
            EXIT_USAGE
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: Option<&Path>) -> Result<T> {
    let path = path.context("--config is required")?;
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

struct Output {
    seed: u64,
    trials: u64,
    out: Option<PathBuf>,
    format: Option<Format>,
}

impl Output {
    fn resolve(cli: &Cli, seed: Option<u64>, trials: Option<u64>, out: Option<&PathBuf>, format: Option<Format>) -> Result<Self> {
        let trials = cli.trials.or(trials).unwrap_or(DEFAULT_TRIALS);
        anyhow::ensure!(trials > 0, "trials must be positive");
        Ok(Output {
            seed: cli.seed.or(seed).unwrap_or(DEFAULT_SEED),
            trials,
            out: cli.out.clone().or(out.cloned()),
            format: cli.format.or(format),
        })
    }

    /// Summary to `stdout`, report to the output path or to `stdout`.
    fn emit(&self, rows: &[Row], stdout: &mut impl Write) -> Result<bool> {
        report::summarize(rows, stdout)?;
        self.write_report(&report::encode(rows, self.format.unwrap_or_default())?, stdout)?;
        Ok(report::all_pass(rows))
    }

    fn write_report(&self, bytes: &[u8], stdout: &mut impl Write) -> Result<()> {
        match (&self.out, self.format) {
            (Some(path), _) => std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?,
            (None, Some(_)) => stdout.write_all(bytes)?,
            (None, None) => {}
        }
        Ok(())
    }
}

pub fn run(cli: &Cli, stdout: &mut impl Write) -> Result<bool> {
    if let Some(w) = cli.workers {
        anyhow::ensure!(w > 0, "--workers must be positive");
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
    match &cli.command {
        Command::Verify(args) if args.lemma == "acceptance" => {
            let o = Output::resolve(cli, None, None, None, None)?;
            let suite = acceptance::run_suite(o.seed, o.format.unwrap_or_default(), |oc| {
                let _ = writeln!(stdout, "{}", oc.line());
            })?;
            writeln!(stdout, "{}", suite.determinism_line())?;
            o.write_report(&suite.report, stdout)?;
            Ok(suite.pass())
        }
        Command::Verify(args) => {
            let o = Output::resolve(cli, None, None, None, None)?;
            let rows = run::run_verify(&args.lemma, &args.as_ref().into(), o.seed)?;
            o.emit(&rows, stdout)
        }
        Command::Experiment => {
            let cfg: ExperimentConfig = read_json(cli.config.as_deref())?;
            cfg.validate()?;
            let o = Output::resolve(cli, cfg.seed, cfg.trials, cfg.out.as_ref(), cfg.format)?;
            let rows = run::run_experiment(&cfg, o.seed, o.trials)?;
            o.emit(&rows, stdout)
        }
        Command::Sweep => {
            let cfg: SweepConfig = read_json(cli.config.as_deref())?;
            cfg.validate()?;
            let o = Output::resolve(cli, cfg.seed, cfg.trials, cfg.out.as_ref(), cfg.format)?;
            let rows = run::run_sweep(&cfg, o.seed, o.trials)?;
            o.emit(&rows, stdout)
        }
    }
}
