use clap::{Parser, Subcommand};

mod cli;

#[derive(Debug, Parser)]
#[command(
    name = "schemalabel",
    version,
    about = "Predict schema labels for table columns with missing headers"
)]
struct Cli {
    /// Worker threads for data-parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic corpus with ambiguous label pairs.
    Generate(cli::GenerateArgs),
    /// Split a corpus and train a model.
    Train(cli::TrainArgs),
    /// Label headerless (or partially masked) tables.
    Predict(cli::PredictArgs),
    /// Score predictions against gold labels; optionally run the masked sweep and baselines.
    Evaluate(cli::EvaluateArgs),
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        anyhow::ensure!(n >= 1, "--threads must be at least 1");
        if !schemalabel::parallel::configure_threads(n) {
            eprintln!("warning: thread pool already initialized; --threads ignored");
        }
    }
    match cli.command {
        Command::Generate(a) => cli::generate(a),
        Command::Train(a) => cli::train(a),
        Command::Predict(a) => cli::predict(a),
        Command::Evaluate(a) => cli::evaluate(a),
    }
}
