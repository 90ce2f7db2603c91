use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gradest::output::Format;
use gradest::{execute, CliError, ExperimentSpec, RunOptions, Task, WORKERS_ENV};

#[derive(Parser)]
#[command(
    name = "gradest",
    version,
    about = "Check local gradient and Hessian bounds of diffusion semigroups"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the bound functions on the (t, x) grid.
    Bounds(RunArgs),
    /// Simulate paths and check the moment bound.
    Simulate(RunArgs),
    /// Monte Carlo estimates of T_t phi and its derivatives.
    Estimate(RunArgs),
    /// Short-time gradient (and Hessian) bound verification.
    VerifyShort(RunArgs),
    /// Long-time decay bound verification.
    VerifyLong(RunArgs),
    /// Poisson equation solve, residual and gradient bound.
    Poisson(RunArgs),
    /// Uniform-in-n gradient bound for the mollified singular drift.
    Singular(RunArgs),
    /// Run the task named in the spec file (`task = "..."`, default "all").
    Run(RunArgs),
    /// Print the pass flags of a stored summary.
    Report {
        /// Directory holding summary.json.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// List the model catalog.
    Catalog {
        /// Machine-readable JSON instead of text.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Overrides the seed in the spec.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = WORKERS_ENV)]
    workers: Option<usize>,
    /// Output directory (default: the spec's `output`, else ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "both")]
    format: Format,
}

fn run(args: RunArgs, task: Option<Task>) -> Result<bool, CliError> {
    let mut spec = ExperimentSpec::load(&args.spec)?;
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    let workers = args.workers.unwrap_or(0);
    if workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    }
    let task = task.or(spec.task).unwrap_or(Task::All);
    let opts = RunOptions {
        out: args.out.or_else(|| spec.output.clone()).unwrap_or_else(|| "out".into()),
        format: args.format,
        workers: rayon::current_num_threads(),
    };
    let rep = execute(&spec, task, &opts)?;
    println!(
        "{} {}: {} (reports in {})",
        task.name(),
        spec.model_name(),
        if rep.pass { "pass" } else { "FAIL" },
        opts.out.display()
    );
    Ok(rep.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Bounds(a) => run(a, Some(Task::Bounds)),
        Command::Simulate(a) => run(a, Some(Task::Simulate)),
        Command::Estimate(a) => run(a, Some(Task::Estimate)),
        Command::VerifyShort(a) => run(a, Some(Task::VerifyShort)),
        Command::VerifyLong(a) => run(a, Some(Task::VerifyLong)),
        Command::Poisson(a) => run(a, Some(Task::Poisson)),
        Command::Singular(a) => run(a, Some(Task::Singular)),
        Command::Run(a) => run(a, None),
        Command::Report { out } => gradest::run::report(&out).map(|(pass, text)| {
            print!("{text}");
            pass
        }),
        Command::Catalog { json } => {
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&gradest::run::catalog_json()).expect("serializable")
                );
            } else {
                print!("{}", gradest::run::catalog_text());
            }
            Ok(true)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("gradest: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
