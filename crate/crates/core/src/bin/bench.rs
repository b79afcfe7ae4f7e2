use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use robustlb::harness::{self, ExperimentConfig};

#[derive(Parser)]
#[command(name = "bench", about = "Corruption-robust linear bandit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every cell of an experiment matrix.
    Run {
        config: PathBuf,
        /// Overrides the config's output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit regret-vs-level slopes on a summary CSV.
    Fit {
        summary: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "d,alg")]
        group: Vec<String>,
    },
    /// Re-run one cell from its JSON record.
    Replay { record: PathBuf },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> robustlb::Result<ExitCode> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let out = out.unwrap_or_else(|| cfg.output_dir.clone());
            let threads = harness::effective_threads(cfg.threads);
            let report = harness::run_matrix(&cfg, &out, threads)?;
            println!(
                "{} cells ok, {} failed ({} threads); summary: {}",
                report.rows.len(),
                report.failures.len(),
                report.threads,
                report.summary_path.display()
            );
            for f in &report.failures {
                eprintln!("failed: {} {} level={} seed={}: {}", f.alg, f.env, f.level, f.seed, f.error);
            }
            Ok(if report.ok() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Fit { summary, group } => {
            let rows = harness::read_summary(&summary)?;
            let keys: Vec<&str> = group.iter().map(|s| s.trim()).collect();
            print!("{}", harness::fit_scaling(&rows, &keys)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Replay { record } => {
            let rec = harness::read_replay(&record)?;
            let outcome = harness::replay(&rec)?;
            let row = &outcome.row;
            println!("alg,env,d,level,seed,final_regret,C,Cinf");
            println!(
                "{},{},{},{},{},{},{},{}",
                row.alg, row.env, row.d, row.level, row.seed, row.final_regret, row.c, row.c_inf
            );
            if row.final_regret.to_bits() == rec.final_regret.to_bits() {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("replayed regret {} differs from recorded {}", row.final_regret, rec.final_regret);
                Ok(ExitCode::FAILURE)
            }
        }
    }
}
