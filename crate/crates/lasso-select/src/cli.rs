//! The `lasso-select` command line.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on runtime errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use lasso_select_core::diagnostics::{tuning_sequence, Regime, TuningConfig};
use lasso_select_core::harness::{curve_rows, ExperimentResult};
use lasso_select_core::solver::{compute_penalty, solve_weighted_lasso, KktReport, SolverOptions};
use serde::Serialize;

use crate::config::{load_experiment, load_toml, AuditSpec, BoundsSpec, OracleSpec};
use crate::dataset::{load_dataset_path, ColumnMode, Layout};
use crate::error::{Error, Result};
use crate::parallel;
use crate::results::{curve_csv, fmt_num, persist_results, to_json, write_text, Precision};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "lasso-select", version, about = "Weighted-Lasso variable selection: solver, oracle, audits, bounds and experiments", arg_required_else_help = true)]
pub struct Cli {
    /// Print extra detail on stdout.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    /// Float precision of JSON output.
    #[arg(long, global = true, value_enum, default_value_t = Precision::Significant)]
    pub precision: Precision,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the weighted Lasso on a CSV dataset.
    Solve(SolveArgs),
    /// Compute the sparsest population approximation.
    Oracle(ConfigArgs),
    /// Check boundedness, coherence and minimum-signal conditions.
    Audit(ConfigArgs),
    /// Tabulate the probability bounds along a grid of sample sizes.
    Bounds(ConfigArgs),
    /// Run a Monte Carlo experiment and write results.json and curve.csv.
    Simulate(SimulateArgs),
    /// Run a Monte Carlo experiment and write only the consistency curve.
    Curve(ConfigArgs),
}

fn existing_file(s: &str) -> std::result::Result<PathBuf, String> {
    let p = PathBuf::from(s);
    if p.is_file() {
        Ok(p)
    } else {
        Err(format!("no such file: {s}"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RegimeArg {
    Sqrt,
    Quarter,
}

impl From<RegimeArg> for Regime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::Sqrt => Regime::Sqrt,
            RegimeArg::Quarter => Regime::Quarter,
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// CSV file with a header row.
    #[arg(long, value_parser = existing_file)]
    pub data: PathBuf,
    /// Name of the response column.
    #[arg(long, default_value = "y")]
    pub response: String,
    /// Design columns, comma separated; all other columns by default.
    #[arg(long, value_delimiter = ',')]
    pub columns: Option<Vec<String>>,
    /// Treat design columns as precomputed dictionary values.
    #[arg(long)]
    pub precomputed: bool,
    /// Tuning parameter r.
    #[arg(long, conflicts_with = "a", required_unless_present = "a")]
    pub r: Option<f64>,
    /// Constant A of the tuning sequence r = A·rate(n, M).
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long, value_enum, default_value_t = RegimeArg::Sqrt)]
    pub regime: RegimeArg,
    /// Output JSON file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// TOML specification.
    #[arg(long, value_parser = existing_file)]
    pub config: PathBuf,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML experiment specification.
    #[arg(long, value_parser = existing_file)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
pub struct SolveReport {
    pub n: usize,
    pub m: usize,
    pub r: f64,
    pub columns: Vec<String>,
    pub lambda_hat: Vec<f64>,
    pub support: Vec<usize>,
    pub support_names: Vec<String>,
    pub objective: f64,
    pub sweeps: usize,
    pub kkt: KktReport,
}

pub fn solve_report(args: &SolveArgs) -> Result<SolveReport> {
    let mode = if args.precomputed { ColumnMode::Precomputed } else { ColumnMode::Raw };
    let mut layout = Layout::new(args.response.clone(), mode);
    if let Some(cols) = &args.columns {
        layout = layout.with_columns(cols.clone());
    }
    let data = load_dataset_path(&args.data, &layout)?;
    let (n, m) = (data.sample.n(), data.dictionary.len());
    let r = match (args.r, args.a) {
        (Some(r), _) => r,
        (None, Some(a)) => tuning_sequence(&TuningConfig { a, regime: args.regime.into(), n, m, gamma_cap: None })?,
        (None, None) => return Err(Error::Config("either --r or --a is required".into())),
    };
    let pen = compute_penalty(&data.sample.col_norms, r)?;
    let sol = solve_weighted_lasso(&data.sample.design, &data.sample.y, &pen, &SolverOptions::default())?;
    Ok(SolveReport {
        n,
        m,
        r,
        support_names: sol.support.iter().map(|&j| data.columns[j].clone()).collect(),
        columns: data.columns,
        lambda_hat: sol.lambda_hat,
        support: sol.support,
        objective: sol.objective,
        sweeps: sol.sweeps,
        kkt: sol.kkt,
    })
}

/// Writes `text` to `path`, or to `out` when no path is given.
fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<bool> {
    match path {
        Some(p) => {
            write_text(p, text)?;
            Ok(true)
        }
        None => {
            out.write_all(text.as_bytes()).map_err(Error::io("<stdout>"))?;
            Ok(false)
        }
    }
}

fn line(out: &mut dyn Write, text: impl AsRef<str>) -> Result<()> {
    writeln!(out, "{}", text.as_ref()).map_err(Error::io("<stdout>"))
}

fn summarize_experiment(out: &mut dyn Write, result: &ExperimentResult, verbose: bool) -> Result<()> {
    line(out, "n\tr\tkstar_r\tp_exact\tci_lo\tci_hi\tfailed")?;
    for a in &result.aggregates {
        line(
            out,
            format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                a.n,
                fmt_num(a.r),
                fmt_num(a.kstar_r),
                fmt_num(a.p_exact),
                fmt_num(a.ci_exact.lo),
                fmt_num(a.ci_exact.hi),
                a.failed
            ),
        )?;
    }
    if verbose {
        if let Some(t) = result.wall_clock_secs {
            line(out, format!("wall clock: {} s", fmt_num(t)))?;
        }
    }
    Ok(())
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let precision = cli.precision;
    match &cli.command {
        Command::Solve(args) => {
            let report = solve_report(args)?;
            if emit(out, args.out.as_deref(), &to_json(&report, precision)?)? {
                line(
                    out,
                    format!(
                        "r = {}; support = {:?}; KKT {}",
                        fmt_num(report.r),
                        report.support_names,
                        if report.kkt.pass { "pass" } else { "FAIL" }
                    ),
                )?;
            }
        }
        Command::Oracle(args) => {
            let target = load_toml::<OracleSpec>(&args.config)?.run()?;
            if emit(out, args.out.as_deref(), &to_json(&target, precision)?)? {
                line(out, format!("k* = {}; I* = {:?}; error = {}", target.k_star, target.support, fmt_num(target.approx_error)))?;
            }
        }
        Command::Audit(args) => {
            let report = load_toml::<AuditSpec>(&args.config)?.run()?;
            if emit(out, args.out.as_deref(), &to_json(&report, precision)?)? {
                line(
                    out,
                    format!(
                        "boundedness {}; coherence {}; minimum signal {}",
                        pass_word(report.boundedness.pass),
                        report.coherence.as_ref().map_or("n/a", |c| pass_word(c.holds)),
                        pass_word(report.min_signal.holds)
                    ),
                )?;
            }
        }
        Command::Bounds(args) => {
            let rows = load_toml::<BoundsSpec>(&args.config)?.table()?;
            if let Some(p) = &args.out {
                write_text(p, &to_json(&rows, precision)?)?;
            }
            line(out, "n\tr\tpi_star\tp_star\tI\tII\tIII\tIV\tM_p_star")?;
            for row in &rows {
                let e = &row.events;
                let cols = [
                    row.r,
                    row.pi_star.raw,
                    row.p_star.raw,
                    e.noise_correlation.raw,
                    e.column_norm.raw,
                    e.inner_product.raw,
                    e.approximation.raw,
                    row.m_p_star,
                ];
                let body: Vec<String> = cols.iter().map(|&v| fmt_num(v)).collect();
                line(out, format!("{}\t{}", row.n, body.join("\t")))?;
            }
            if rows.iter().any(|r| r.events.margin_nonpositive) {
                line(out, "warning: c0²/(64L²) − C_f ≤ 0; bound IV reported as 1")?;
            }
        }
        Command::Simulate(args) => {
            let cfg = load_experiment(&args.config)?;
            let result = parallel::run_experiment(&cfg)?;
            let files = persist_results(&result, &args.out, precision)?;
            summarize_experiment(out, &result, cli.verbose)?;
            line(out, format!("wrote {} and {}", files.json.display(), files.csv.display()))?;
        }
        Command::Curve(args) => {
            let cfg = load_experiment(&args.config)?;
            let result = parallel::run_experiment(&cfg)?;
            emit(out, args.out.as_deref(), &curve_csv(&curve_rows(&result))?)?;
        }
    }
    Ok(())
}

fn pass_word(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// exit code.
pub fn dispatch<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let sink: &mut dyn Write = if code == EXIT_OK { out } else { err };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_RUNTIME
        }
    }
}
