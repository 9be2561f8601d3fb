use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use reactbench_bench::{cmd_eval, cmd_fit, cmd_gen_data, cmd_oracle, BenchConfig, BenchError, FitOverrides};

#[derive(Parser)]
#[command(name = "bench", version, about = "Reaction prediction benchmark for highway merges")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate episodes and write a dataset archive.
    GenData {
        /// JSON config; omitted fields take defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Train one predictor on the training split.
    Fit {
        #[arg(long, value_parser = ["hmm", "mdn", "irl"])]
        method: String,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Score models and configured baselines on the test split.
    Eval {
        /// Comma-separated model files.
        #[arg(long, value_delimiter = ',')]
        models: Vec<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recompute all scores of a predictions file independently.
    Oracle {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        preds: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), BenchError> {
    match cli.command {
        Command::GenData { config, out, seed, episodes } => {
            let mut cfg = match config {
                Some(p) => BenchConfig::load(&p)?,
                None => BenchConfig::default(),
            };
            if let Some(s) = seed {
                cfg.scenario.seed = s;
            }
            if let Some(n) = episodes {
                cfg.episodes = n;
            }
            let m = cmd_gen_data(&cfg, &out)?;
            println!(
                "wrote {} episodes ({} train, {} test) to {}",
                m.episodes.len(),
                m.train_episodes.len(),
                m.test_episodes.len(),
                out.display()
            );
        }
        Command::Fit { method, data, out, lr, epochs, iters, seed } => {
            let (doc, traces) = cmd_fit(&method, &data, &out, FitOverrides { lr, epochs, iters, seed })?;
            for (k, trace) in traces.iter().enumerate() {
                for (i, v) in trace.iter().enumerate() {
                    eprintln!("{method} run {k} iteration {i} objective {v:.9}");
                }
            }
            println!("wrote {} model to {}", doc.method, out.display());
        }
        Command::Eval { models, data, out } => {
            let paths: Vec<&Path> = models.iter().map(PathBuf::as_path).collect();
            let report = cmd_eval(&paths, &data, &out)?;
            print!("{}", report.csv());
        }
        Command::Oracle { data, preds } => {
            for row in cmd_oracle(&data, &preds)? {
                println!("{} max deviation {:e}", row.method, row.max_abs_deviation);
            }
            println!("oracle agrees");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
