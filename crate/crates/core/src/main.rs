//! Experiment runner for the variable-order subdiffusion laboratory.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use varorder::config::load_experiment;
use varorder::experiments;
use varorder::verification;

#[derive(Parser)]
#[command(
    name = "varorder",
    about = "Laplace-domain experiments for the variable-order subdiffusion model",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON experiment configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// output directory for CSV artifacts
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// override the configuration's random seed
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Flux curve over the frequency grid and the weighted boundary data
    Forward,
    /// Expansion cascades and remainder-rate probes at p -> 0 and p -> 1
    Asympt,
    /// Recover the order exponents from the one-point flux curve
    InvertExponents,
    /// Linearized per-subdomain recovery from full-boundary weighted data
    InvertLinearized,
    /// Both sides of the stability inequality for a pair of order fields
    Stability,
    /// L1 time stepping cross-check of the Laplace-domain computations
    Crosscheck,
    /// The four-order distinguishability scenario
    Figure1,
    /// Run the acceptance suite and print one PASS/FAIL line per criterion
    Verify {
        /// run only these criterion ids (1..=12)
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<usize>>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("could not configure {threads} threads: {e}");
            return ExitCode::from(1);
        }
    }

    if let Command::Verify { only } = &cli.command {
        let outcomes = match only {
            Some(ids) => verification::run_selected(ids),
            None => verification::run_all(),
        };
        let mut all_pass = true;
        for outcome in &outcomes {
            println!("{}", outcome.line());
            all_pass &= outcome.passed;
        }
        let report: Vec<String> = outcomes
            .iter()
            .map(|o| {
                format!(
                    "{},{},{},{:.2},{}",
                    o.id,
                    o.name,
                    if o.passed { "PASS" } else { "FAIL" },
                    o.seconds,
                    o.detail.replace(',', ";")
                )
            })
            .collect();
        let _ = std::fs::create_dir_all(&cli.out);
        let _ = std::fs::write(
            cli.out.join("acceptance_report.csv"),
            format!("id,name,status,seconds,detail\n{}\n", report.join("\n")),
        );
        return if all_pass {
            ExitCode::SUCCESS
        } else {
            ExitCode::from(3)
        };
    }

    let Some(config_path) = cli.config.as_ref() else {
        eprintln!("this command needs --config <path>");
        return ExitCode::from(1);
    };
    let mut experiment = match load_experiment(config_path) {
        Ok(e) => e,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if let Some(seed) = cli.seed {
        experiment.seed = seed;
    }

    let result = match &cli.command {
        Command::Forward => experiments::run_forward(&experiment, &cli.out),
        Command::Asympt => experiments::run_asympt(&experiment, &cli.out),
        Command::InvertExponents => experiments::run_invert_exponents(&experiment, &cli.out),
        Command::InvertLinearized => experiments::run_invert_linearized(&experiment, &cli.out),
        Command::Stability => experiments::run_stability(&experiment, &cli.out),
        Command::Crosscheck => experiments::run_crosscheck(&experiment, &cli.out),
        Command::Figure1 => experiments::run_figure1(&experiment, &cli.out),
        Command::Verify { .. } => unreachable!("handled above"),
    };
    match result {
        Ok(summary) => {
            for line in &summary.lines {
                println!("{line}");
            }
            for artifact in &summary.artifacts {
                println!("wrote {}", artifact.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
