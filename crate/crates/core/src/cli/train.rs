use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use serde::{Deserialize, Serialize};

use schemalabel::corpus::{
    load_corpus, split_corpus, LabelVocabulary, LoadOptions, DEFAULT_VALUE_CAP,
};
use schemalabel::encoder::{save_model, AdamConfig, Hyperparameters, Model, TokenizerConfig};
use schemalabel::prepared::prepare_tables;
use schemalabel::training::{fit, TrainConfig};

use super::{create_dir, required, resolve, write_json};

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct TrainArgs {
    /// Corpus manifest (JSONL).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Output directory for the model, loss curve, split and config snapshot.
    #[arg(long)]
    pub run_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    /// Values sampled per column.
    #[arg(long, default_value_t = DEFAULT_VALUE_CAP)]
    pub value_cap: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    /// Fraction of tables used for training.
    #[arg(long, default_value_t = 0.8)]
    pub split: f64,
    /// Train the values-only baseline: no context at training or inference.
    #[arg(long)]
    pub values_only: bool,
    /// Drop labels seen fewer times than this in the corpus.
    #[arg(long, default_value_t = 1)]
    pub min_count: usize,
    /// Shuffle each training context instead of keeping column order.
    #[arg(long)]
    pub shuffle_context: bool,
    #[arg(long, default_value_t = 32)]
    pub embedding_dim: usize,
    #[arg(long, default_value_t = 256)]
    pub hidden: usize,
    /// Hash buckets of the subword vocabulary.
    #[arg(long, default_value_t = 1 << 16)]
    pub buckets: u32,
    #[arg(long, default_value_t = 256)]
    pub max_seq_len: usize,
    /// Also save the model after every epoch under checkpoints/.
    #[arg(long)]
    pub checkpoints: bool,
    /// JSON file whose keys override these flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

pub fn train(args: TrainArgs) -> anyhow::Result<()> {
    let config_path = args.config.clone();
    let args = resolve(args, config_path.as_deref())?;
    let manifest = required(&args.manifest, "--manifest")?;
    let run_dir = required(&args.run_dir, "--run-dir")?;
    anyhow::ensure!(
        args.embedding_dim >= 1 && args.hidden >= 1,
        "model sizes must be positive"
    );
    anyhow::ensure!(args.buckets > 2, "--buckets must exceed the reserved ids");
    anyhow::ensure!(
        args.max_seq_len > 3,
        "--max-seq-len must leave room for values"
    );

    let corpus = load_corpus(
        manifest,
        &LoadOptions {
            min_count: args.min_count,
        },
    )?;
    let split = split_corpus(&corpus.tables, args.split, args.seed)?;
    let (train_tables, _) = split.partition(&corpus.tables);
    let vocabulary = LabelVocabulary::from_tables(&train_tables, 1)?;
    let hyper = Hyperparameters {
        embedding_dim: args.embedding_dim,
        hidden: args.hidden,
        tokenizer: TokenizerConfig {
            buckets: args.buckets,
            max_sequence_length: args.max_seq_len,
            ..TokenizerConfig::default()
        },
        init_seed: args.seed,
        values_only: args.values_only,
    };
    let config = TrainConfig {
        epochs: args.epochs,
        adam: AdamConfig {
            learning_rate: args.lr,
            ..AdamConfig::default()
        },
        seed: args.seed,
        value_cap: args.value_cap,
        shuffle_context: args.shuffle_context,
    };
    config.validate()?;

    create_dir(run_dir)?;
    write_json(&run_dir.join("train_config.json"), &args)?;
    write_json(&run_dir.join("split.json"), &split)?;
    let checkpoint_dir = run_dir.join("checkpoints");
    if args.checkpoints {
        create_dir(&checkpoint_dir)?;
    }

    let mut model = Model::new(vocabulary, hyper);
    let prepared = prepare_tables(&model, &train_tables, args.value_cap, args.seed);
    eprintln!(
        "training on {} tables, {} labels, {} epochs",
        prepared.len(),
        model.num_labels(),
        args.epochs
    );
    let mut curve = String::from("epoch,mean_loss,tables,columns,leakage_checks\n");
    fit(&mut model, &prepared, &config, |m, s| {
        eprintln!("epoch {:>3}  loss {:.6}", s.epoch, s.mean_loss);
        writeln!(
            curve,
            "{},{},{},{},{}",
            s.epoch, s.mean_loss, s.tables, s.columns, s.leakage_checks
        )
        .expect("writing to a string");
        if args.checkpoints {
            save_model(m, &checkpoint_dir.join(format!("epoch_{:02}.bin", s.epoch)))?;
        }
        Ok(())
    })
    .context("training failed")?;

    let loss_path = run_dir.join("loss_curve.csv");
    fs::write(&loss_path, curve).with_context(|| format!("writing {}", loss_path.display()))?;
    let model_path = run_dir.join("model.bin");
    save_model(&model, &model_path)?;
    eprintln!("saved {}", model_path.display());
    Ok(())
}
