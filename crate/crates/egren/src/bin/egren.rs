//! Command-line front end: one job per invocation, JSON in, JSON out.
//!
//! Exit codes separate mathematical verdicts from operational health:
//! 0 = a verdict was produced (Infeasible and NonRenormalizable included),
//! 2 = schema violation, 3 = numerical failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use egren::job::{self, JobError, JobSpec};

#[derive(Parser)]
#[command(name = "egren", version, about = "causal renormalization workbench")]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Args)]
struct JobArgs {
    /// Job spec JSON file.
    #[arg(long)]
    spec: PathBuf,
    /// RNG seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Relative quadrature tolerance override (default from EGREN_TOL).
    #[arg(long)]
    tol: Option<f64>,
    /// Write the report here instead of stdout (atomic).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write plot data (lambda vs pairing) as CSV, for sd jobs.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Scaling-degree estimate of a kernel.
    Sd(JobArgs),
    /// Extension of a kernel across its singular locus.
    Extend(JobArgs),
    /// Wave-front-set cone queries (member, hormander, gamma_to, digamma).
    Wf(JobArgs),
    /// Causal-cover witness and partition weights.
    Cover(JobArgs),
    /// Sheaf-consistency gluing check.
    Glue(JobArgs),
    /// Contraction-graph enumeration with coefficients.
    Wick(JobArgs),
    /// Power-counting classification of an interaction.
    Classify(JobArgs),
    /// Fourier decay probe along directions.
    Probe(JobArgs),
}

impl CliCommand {
    fn name(&self) -> &'static str {
        match self {
            CliCommand::Sd(_) => "sd",
            CliCommand::Extend(_) => "extend",
            CliCommand::Wf(_) => "wf",
            CliCommand::Cover(_) => "cover",
            CliCommand::Glue(_) => "glue",
            CliCommand::Wick(_) => "wick",
            CliCommand::Classify(_) => "classify",
            CliCommand::Probe(_) => "probe",
        }
    }

    fn args(&self) -> &JobArgs {
        match self {
            CliCommand::Sd(a)
            | CliCommand::Extend(a)
            | CliCommand::Wf(a)
            | CliCommand::Cover(a)
            | CliCommand::Glue(a)
            | CliCommand::Wick(a)
            | CliCommand::Classify(a)
            | CliCommand::Probe(a) => a,
        }
    }
}

fn atomic_write(path: &Path, contents: &str) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}

fn load_spec(args: &JobArgs, expected: &str) -> Result<JobSpec, JobError> {
    let text = fs::read_to_string(&args.spec)
        .map_err(|e| JobError::Schema(format!("cannot read spec: {e}")))?;
    let mut spec = job::parse_spec(&text)?;
    if spec.command.name() != expected {
        return Err(JobError::Schema(format!(
            "spec file is a '{}' job but the '{expected}' command was invoked",
            spec.command.name()
        )));
    }
    if let Some(seed) = args.seed {
        spec.seed = Some(seed);
    }
    let tol = args.tol.or_else(|| {
        std::env::var("EGREN_TOL")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(tol) = tol {
        let mut t = spec.tolerances.unwrap_or(job::Tolerances {
            rel_tol: None,
            max_depth: None,
        });
        t.rel_tol = Some(tol);
        spec.tolerances = Some(t);
    }
    Ok(spec)
}

fn run(cli: &Cli) -> Result<(), JobError> {
    let args = cli.command.args();
    let spec = load_spec(args, cli.command.name())?;
    let report = job::run_job(&spec)?;
    let rendered = serde_json::to_string_pretty(&report)
        .map_err(|e| JobError::Numerical(format!("report serialization: {e}")))?;
    match &args.out {
        Some(path) => atomic_write(path, &rendered)
            .map_err(|e| JobError::Numerical(format!("cannot write report: {e}")))?,
        None => println!("{rendered}"),
    }
    if let Some(plot) = &args.plot {
        match job::plot_csv(&report) {
            Some(csv) => atomic_write(plot, &csv)
                .map_err(|e| JobError::Numerical(format!("cannot write plot: {e}")))?,
            None => {
                return Err(JobError::Schema(
                    "this job type carries no plot data".into(),
                ))
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("egren: {e}");
            match e {
                JobError::Schema(_) => ExitCode::from(2),
                JobError::Numerical(_) => ExitCode::from(3),
            }
        }
    }
}
