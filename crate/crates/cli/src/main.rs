use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use mistake_recurrence_cli::{run_experiment, validate_config, Experiment, RunOptions};

/// Run a recurrence experiment from a JSON config.
#[derive(Debug, Parser)]
#[command(name = "mrec", version)]
struct Args {
    /// Experiment config (JSON).
    #[arg(long, required_unless_present = "list_experiments")]
    config: Option<PathBuf>,
    /// Output CSV path; overrides `output_path` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (wall time only; output does not depend on it).
    #[arg(long)]
    workers: Option<usize>,
    /// Master seed; overrides `master_seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Print the available experiments and exit.
    #[arg(long)]
    list_experiments: bool,
    /// Fill the runtime_ms column.
    #[arg(long)]
    timing: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if args.list_experiments {
        for e in Experiment::ALL {
            println!("{:<12} {}", e.name(), e.about());
        }
        return ExitCode::SUCCESS;
    }
    let path = args.config.expect("clap enforces --config");
    let text = match fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return ExitCode::from(2);
        }
    };
    let mut config = match validate_config(&text) {
        Ok(c) => c,
        Err(diagnostics) => {
            eprintln!("error: invalid config {}", path.display());
            for d in diagnostics {
                eprintln!("  {d}");
            }
            return ExitCode::from(2);
        }
    };
    if let Some(out) = args.out {
        config.output_path = out;
    }
    if let Some(seed) = args.seed {
        config.master_seed = seed;
        if let mistake_recurrence::recurrence::SpecCheckMode::Sampled { seed: s, .. } = &mut config.spec_mode {
            *s = seed;
        }
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(args.workers.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(2);
        }
    };
    let outcome = match pool.install(|| run_experiment(&config, RunOptions { timing: args.timing })) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    print!("{}", outcome.summary);
    println!("wrote {} and {}", outcome.csv_path.display(), outcome.summary_path.display());
    let failures: Vec<String> = outcome.violations.iter().cloned().chain(outcome.summary.failures()).collect();
    if failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        for f in failures {
            eprintln!("FAILED {f}");
        }
        ExitCode::FAILURE
    }
}
