//! `drglm`: divide-and-recombine GLM fitting from the command line.
//!
//! Exit codes: 0 success, 1 runtime failure or tolerance miss, 2 usage or
//! validation error. Errors are reported on stderr as JSON.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use drglm::data::ModelSpec;
use drglm::harness::{
    compare_baseline, compare_fits, generate_synthetic, read_baseline, render_text, sidecar,
    SynthConfig, Tolerances,
};
use drglm::partition::{replicate_plan, sequential_plan, stratified_plan};
use drglm::pipeline::{run_csv, Division, RunOptions, RunOutput, DEFAULT_CHUNK_ROWS};
use drglm::recombine::{CombinedFit, VarianceScheme};
use drglm::Error;

use output::{file_digest, manifest, spec_digest, write_json, ErrorJson, ResultJson};

#[derive(Parser)]
#[command(
    name = "drglm",
    version,
    about = "Divide-and-recombine fitting of generalized linear models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model and write result and manifest JSON
    Fit(FitArgs),
    /// Compare a D&R fit with the full-data fit or an external baseline
    Compare(CompareArgs),
    /// Print a partition plan as JSON
    Partition(PartitionArgs),
    /// Generate a synthetic data set from a JSON config
    Synth(SynthArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DivisionArg {
    Sequential,
    Replicate,
    Stratified,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Dr,
    Full,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VarianceArg {
    /// (1/S²) Σ V(β̂_s) for every family
    Aggregated,
    /// σ̂² (Σ X'X)⁻¹ from pooled sums (gaussian only)
    Pooled,
}

#[derive(Args)]
struct DivisionArgs {
    /// Number of subsets
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    subsets: Option<u64>,
    /// How rows are divided into subsets
    #[arg(long, value_enum)]
    division: Option<DivisionArg>,
    /// Seed for replicate division
    #[arg(long)]
    seed: Option<u64>,
    /// Column to stratify on
    #[arg(long)]
    strat_column: Option<String>,
    /// Largest stratified subset (default: ceil(rows / subsets))
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    max_subset_rows: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    /// Input CSV with a header row
    #[arg(long)]
    data: PathBuf,
    /// Model spec JSON
    #[arg(long)]
    spec: PathBuf,
    #[command(flatten)]
    division: DivisionArgs,
    /// Rows per delivered chunk
    #[arg(long, default_value_t = DEFAULT_CHUNK_ROWS as u64, value_parser = clap::value_parser!(u64).range(1..))]
    chunk_rows: u64,
    /// Worker threads (default: all cores)
    #[arg(long, env = "DR_GLM_THREADS", value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
    /// Covariance of the recombined estimate
    #[arg(long, value_enum, default_value = "aggregated")]
    variance: VarianceArg,
    /// Reuse or refresh a schema sidecar at this path
    #[arg(long)]
    schema_cache: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    run: RunArgs,
    /// dr: divide and recombine; full: one subset
    #[arg(long, value_enum, default_value = "dr")]
    method: MethodArg,
    /// Result JSON path; the manifest goes to <stem>.manifest.json beside it
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Coefficient tolerance (absolute or relative)
    #[arg(long)]
    tol_coef: f64,
    /// Standard error tolerance (absolute or relative)
    #[arg(long)]
    tol_se: f64,
    /// External coefficients to compare against (CSV: label,estimate,se)
    #[arg(long)]
    baseline: Option<PathBuf>,
    /// Also write the report as JSON to this path
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct PartitionArgs {
    /// Number of rows
    #[arg(long)]
    rows: Option<u64>,
    #[command(flatten)]
    division: DivisionArgs,
    /// CSV to read the stratification column from
    #[arg(long)]
    data: Option<PathBuf>,
    /// Write the plan here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Generator config JSON
    #[arg(long)]
    config: PathBuf,
    /// Output CSV; ground truth and a model spec are written beside it
    #[arg(long)]
    out: PathBuf,
}

fn usage(message: impl Into<String>) -> Error {
    Error::InvalidConfig {
        path: "arguments".into(),
        message: message.into(),
    }
}

impl DivisionArgs {
    fn subsets(&self) -> Result<usize, Error> {
        self.subsets
            .map(|s| s as usize)
            .ok_or_else(|| usage("--subsets is required"))
    }

    fn division(&self) -> Result<Division, Error> {
        match self
            .division
            .ok_or_else(|| usage("--division is required"))?
        {
            DivisionArg::Sequential => Ok(Division::Sequential),
            DivisionArg::Replicate => {
                let seed = self
                    .seed
                    .ok_or_else(|| usage("--division replicate needs --seed"))?;
                Ok(Division::Replicate { seed })
            }
            DivisionArg::Stratified => {
                let column = self
                    .strat_column
                    .clone()
                    .ok_or_else(|| usage("--division stratified needs --strat-column"))?;
                Ok(Division::Stratified {
                    column,
                    max_subset_rows: self.max_subset_rows.map(|m| m as usize),
                })
            }
        }
    }
}

impl RunArgs {
    fn options(&self) -> RunOptions {
        RunOptions {
            chunk_rows: self.chunk_rows as usize,
            threads: self.threads.map(|t| t as usize),
            variance: match self.variance {
                VarianceArg::Aggregated => VarianceScheme::Aggregated,
                VarianceArg::Pooled => VarianceScheme::PooledExact,
            },
            schema_cache: self.schema_cache.clone(),
        }
    }

    fn spec(&self) -> Result<ModelSpec, Error> {
        ModelSpec::from_path(&self.spec)
    }

    fn run(
        &self,
        spec: &ModelSpec,
        subsets: usize,
        division: &Division,
    ) -> Result<RunOutput, Error> {
        run_csv(&self.data, spec, subsets, division, &self.options())
    }
}

fn manifest_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_os_string())
        .unwrap_or_default();
    let mut name = stem;
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn print_fit(fit: &CombinedFit) {
    let stat = fit.stat_name();
    let width = fit.labels.iter().map(|l| l.len()).max().unwrap_or(0).max(5);
    println!(
        "{:<width$}  {:>14}  {:>12}  {:>10}  {:>10}",
        "label", "estimate", "se", stat, "p"
    );
    for r in fit.rows() {
        println!(
            "{:<width$}  {:>14.6}  {:>12.6}  {:>10.3}  {:>10.3e}",
            r.label, r.estimate, r.se, r.stat, r.p
        );
    }
    let df = fit.df.map(|d| format!(", df {d}")).unwrap_or_default();
    println!(
        "{} ({}), S = {}, n = {}{df}",
        fit.family,
        fit.method.name(),
        fit.subsets,
        fit.n
    );
}

fn cmd_fit(args: &FitArgs) -> Result<i32, Error> {
    let start = Instant::now();
    let spec = args.run.spec()?;
    let (subsets, division, method) = match args.method {
        MethodArg::Dr => (
            args.run.division.subsets()?,
            args.run.division.division()?,
            "dr",
        ),
        MethodArg::Full => (1, Division::Sequential, "full"),
    };
    let run = args.run.run(&spec, subsets, &division)?;
    let manifest_file = manifest_path(&args.out);
    let manifest_ref = manifest_file
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let converged = run.subsets.iter().all(|s| s.converged);
    let result = ResultJson::new(
        &run.fit,
        converged,
        run.plan.warnings().to_vec(),
        manifest_ref,
    );
    write_json(&args.out, &result)?;

    let result_ref = args
        .out
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let doc = manifest(
        &run,
        method,
        file_digest(&args.run.data)?,
        spec_digest(&spec)?,
        args.run.chunk_rows as usize,
        start.elapsed().as_secs_f64() * 1e3,
        result_ref,
    );
    write_json(&manifest_file, &doc)?;
    for w in run.plan.warnings() {
        eprintln!("warning: {w}");
    }
    print_fit(&run.fit);
    Ok(if converged { 0 } else { 1 })
}

fn cmd_compare(args: &CompareArgs) -> Result<i32, Error> {
    if !(args.tol_coef >= 0.0 && args.tol_se >= 0.0) {
        return Err(usage("tolerances must be nonnegative numbers"));
    }
    let tol = Tolerances {
        coef: args.tol_coef,
        se: args.tol_se,
    };
    let spec = args.run.spec()?;
    let subsets = args.run.division.subsets()?;
    let division = args.run.division.division()?;
    let dr = args.run.run(&spec, subsets, &division)?;
    let report = match &args.baseline {
        Some(path) => compare_baseline(&dr.fit, &read_baseline(path)?, tol)?,
        None => {
            let full = args.run.run(&spec, 1, &Division::Sequential)?;
            compare_fits(&dr.fit, &full.fit, tol)?
        }
    };
    print!("{}", render_text(&report));
    if let Some(path) = &args.json {
        write_json(path, &report)?;
    }
    Ok(if report.passed { 0 } else { 1 })
}

fn cmd_partition(args: &PartitionArgs) -> Result<i32, Error> {
    let subsets = args.division.subsets()?;
    let division = args.division.division()?;
    let plan = match division {
        Division::Stratified {
            column,
            max_subset_rows,
        } => {
            let data = args
                .data
                .as_ref()
                .ok_or_else(|| usage("--division stratified needs --data"))?;
            let values = drglm::data::read_column(data, &column)?;
            if let Some(rows) = args.rows {
                if rows as usize != values.len() {
                    return Err(Error::RowCountDrift {
                        expected: rows as usize,
                        actual: values.len(),
                    });
                }
            }
            let cap = max_subset_rows.unwrap_or_else(|| values.len().div_ceil(subsets));
            stratified_plan(&column, &values, cap)?
        }
        Division::Sequential | Division::Replicate { .. } => {
            let n = args.rows.ok_or_else(|| usage("--rows is required"))? as usize;
            match division {
                Division::Replicate { seed } => replicate_plan(n, subsets, seed)?,
                _ => sequential_plan(n, subsets)?,
            }
        }
    };
    let doc = plan.document();
    match &args.out {
        Some(path) => write_json(path, &doc)?,
        None => println!("{}", serde_json::to_string_pretty(&doc)?),
    }
    Ok(0)
}

fn cmd_synth(args: &SynthArgs) -> Result<i32, Error> {
    let config = SynthConfig::from_path(&args.config)?;
    let out = generate_synthetic(&config, &args.out)?;
    println!(
        "wrote {} rows to {} (sha256 {})",
        config.n,
        out.data.display(),
        out.ground_truth.data_digest
    );
    println!(
        "ground truth: {}",
        sidecar(&args.out, ".truth.json").display()
    );
    println!("model spec: {}", out.spec.display());
    Ok(0)
}

fn exit_code_for(e: &Error) -> i32 {
    if e.is_usage() {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let json = ErrorJson::usage(e.render().to_string().trim().to_string());
            eprintln!("{}", serde_json::to_string(&json).unwrap_or_default());
            return ExitCode::from(2);
        }
    };
    let result = match &cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Partition(a) => cmd_partition(a),
        Command::Synth(a) => cmd_synth(a),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            let code = exit_code_for(&e);
            let json = ErrorJson::from_error(&e, code);
            eprintln!("{}", serde_json::to_string(&json).unwrap_or_default());
            ExitCode::from(code as u8)
        }
    }
}
