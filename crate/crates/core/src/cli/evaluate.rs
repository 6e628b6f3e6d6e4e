use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{ArgAction, Args};
use serde::{Deserialize, Serialize};

use schemalabel::corpus::{load_tables, CorpusSplit, LabelVocabulary, Table, DEFAULT_VALUE_CAP};
use schemalabel::encoder::{load_model, AdamConfig, Model};
use schemalabel::evaluation::{
    column_kind, compute_metrics, label_frequency_rows, run_baseline, run_masked_sweep,
    split_by_kind, BaselineConfig, BaselineKind, KindReport, MetricsReport, PredictionRecord,
    DEFAULT_PERCENTAGES, DEFAULT_REPEATS,
};
use schemalabel::inference::{InferenceOptions, TablePrediction, DEFAULT_TOP_K};
use schemalabel::prepared::PreparedTable;
use schemalabel::training::TrainConfig;

use super::predict::test_tables;
use super::{create_dir, read_json, required, resolve, write_json};

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EvaluateArgs {
    /// Predictions JSONL written by `predict`.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Manifest holding the gold labels.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Directory for metrics.json and the CSV outputs.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Model for the masked-headers sweep.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// split.json from training; selects sweep tables and baseline train/test sides.
    #[arg(long)]
    pub split_file: Option<PathBuf>,
    /// Run the masked-headers sweep (needs --model).
    #[arg(long)]
    pub sweep: bool,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_PERCENTAGES)]
    pub percentages: Vec<u32>,
    #[arg(long, default_value_t = DEFAULT_REPEATS)]
    pub repeats: usize,
    #[arg(long, action = ArgAction::Set, default_value_t = true)]
    pub unique_headers: bool,
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    pub top_k: usize,
    /// Comma-separated baselines to train and score (needs --split-file):
    /// global_stats, char_dist, char_emb, word_emb, para_emb, all_features, values_only_model.
    #[arg(long, value_delimiter = ',')]
    pub baselines: Vec<String>,
    /// Epochs for the values-only baseline model.
    #[arg(long, default_value_t = 10)]
    pub baseline_epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub baseline_lr: f64,
    #[arg(long, default_value_t = DEFAULT_VALUE_CAP)]
    pub value_cap: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON file whose keys override these flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Metrics {
    overall: MetricsReport,
    by_kind: KindReport,
    records: usize,
    /// Gold columns without a label, or with one the model never saw.
    skipped: usize,
}

fn read_predictions(path: &Path) -> anyhow::Result<Vec<TablePrediction>> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(
                serde_json::from_str(&line)
                    .with_context(|| format!("{}:{}", path.display(), n + 1))?,
            );
        }
    }
    Ok(out)
}

/// Label vocabulary recovered from the full rankings in the predictions.
fn prediction_vocabulary(predictions: &[TablePrediction]) -> anyhow::Result<LabelVocabulary> {
    let column = predictions
        .iter()
        .flat_map(|p| p.columns.first())
        .next()
        .context("predictions contain no columns")?;
    let mut labels = column.ranking.clone();
    labels.sort();
    Ok(LabelVocabulary::new(labels)?)
}

fn to_id(vocab: &LabelVocabulary, label: &str) -> anyhow::Result<usize> {
    vocab
        .id(label)
        .with_context(|| format!("predicted label {label:?} is not in the ranking vocabulary"))
}

pub fn evaluate(args: EvaluateArgs) -> anyhow::Result<()> {
    let config_path = args.config.clone();
    let args = resolve(args, config_path.as_deref())?;
    let predictions_path = required(&args.predictions, "--predictions")?;
    let manifest = required(&args.manifest, "--manifest")?;
    let out_dir = required(&args.out_dir, "--out-dir")?;

    let predictions = read_predictions(predictions_path)?;
    let gold = load_tables(manifest)?;
    let by_id: HashMap<&str, &Table> = gold.iter().map(|t| (t.id.as_str(), t)).collect();
    let vocab = prediction_vocabulary(&predictions)?;

    let mut records = Vec::new();
    let mut kinds = Vec::new();
    let mut skipped = 0;
    for p in &predictions {
        let Some(table) = by_id.get(p.table_id.as_str()) else {
            bail!(
                "prediction for table {:?}, which is not in the gold manifest",
                p.table_id
            );
        };
        for c in &p.columns {
            let Some(column) = table.columns.get(c.index) else {
                bail!(
                    "table {}: predicted column {} out of range",
                    p.table_id,
                    c.index
                );
            };
            let Some(truth) = column.label.as_deref().and_then(|l| vocab.id(l)) else {
                skipped += 1;
                continue;
            };
            let ranking = c
                .ranking
                .iter()
                .map(|l| to_id(&vocab, l))
                .collect::<anyhow::Result<Vec<_>>>()?;
            records.push(PredictionRecord::with_prediction(
                truth,
                to_id(&vocab, &c.final_label)?,
                &ranking,
            )?);
            kinds.push(column_kind(&column.values));
        }
    }
    anyhow::ensure!(!records.is_empty(), "no prediction has a usable gold label");
    let metrics = Metrics {
        overall: compute_metrics(&records, vocab.len())?,
        by_kind: split_by_kind(&records, &kinds, vocab.len())?,
        records: records.len(),
        skipped,
    };

    create_dir(out_dir)?;
    write_json(&out_dir.join("evaluate_config.json"), &args)?;
    write_json(&out_dir.join("metrics.json"), &metrics)?;
    let mut freq = String::from("label,frequency,correct\n");
    for (label, n, ok) in label_frequency_rows(&records) {
        writeln!(
            freq,
            "{},{n},{}",
            csv_field(vocab.label(label)),
            u8::from(ok)
        )?;
    }
    fs::write(out_dir.join("label_frequency.csv"), freq)?;
    eprintln!(
        "{} columns: micro-F {:.4}, macro-F {:.4}, MRR {:.4}",
        metrics.records, metrics.overall.micro_f, metrics.overall.macro_f, metrics.overall.mrr
    );

    let split: Option<CorpusSplit> = args.split_file.as_deref().map(read_json).transpose()?;
    let model = match &args.model {
        Some(p) => Some(load_model(p).with_context(|| format!("loading model {}", p.display()))?),
        None => None,
    };
    if args.sweep {
        let model = model.as_ref().context("--sweep needs --model")?;
        sweep(&args, model, &gold, split.as_ref(), out_dir)?;
    }
    if !args.baselines.is_empty() {
        let split = split.as_ref().context("--baselines needs --split-file")?;
        baselines(&args, model.as_ref(), &gold, split, out_dir)?;
    }
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn sweep(
    args: &EvaluateArgs,
    model: &Model,
    gold: &[Table],
    split: Option<&CorpusSplit>,
    out_dir: &Path,
) -> anyhow::Result<()> {
    let candidates = match split {
        Some(s) => test_tables(gold.to_vec(), s)?,
        None => gold.to_vec(),
    };
    let vocab = model.vocabulary();
    let fully_known = |t: &Table| {
        t.columns
            .iter()
            .all(|c| c.label.as_deref().is_some_and(|l| vocab.id(l).is_some()))
    };
    let tables: Vec<PreparedTable> = candidates
        .iter()
        .filter(|t| fully_known(t))
        .map(|t| PreparedTable::new(t, vocab, model.tokenizer(), args.value_cap, args.seed))
        .collect();
    anyhow::ensure!(
        !tables.is_empty(),
        "no table has every label in the model vocabulary"
    );
    if tables.len() < candidates.len() {
        eprintln!(
            "sweep: skipping {} tables with labels outside the model vocabulary",
            candidates.len() - tables.len()
        );
    }
    let options = InferenceOptions {
        unique_headers: args.unique_headers,
        top_k: args.top_k,
    };
    let points = run_masked_sweep(
        model,
        &tables,
        &args.percentages,
        args.repeats,
        &options,
        args.seed,
    )?;
    let mut out = String::from("percentage,mean,std\n");
    for p in &points {
        writeln!(out, "{},{},{}", p.percentage, p.mean, p.std)?;
        eprintln!(
            "masked {:>3}%: top-1 {:.4} ± {:.4}",
            p.percentage, p.mean, p.std
        );
    }
    fs::write(out_dir.join("sweep.csv"), out)?;
    Ok(())
}

fn baselines(
    args: &EvaluateArgs,
    model: Option<&Model>,
    gold: &[Table],
    split: &CorpusSplit,
    out_dir: &Path,
) -> anyhow::Result<()> {
    let kinds = args
        .baselines
        .iter()
        .map(|s| s.parse::<BaselineKind>())
        .collect::<Result<Vec<_>, _>>()?;
    let labeled: Vec<Table> = gold
        .iter()
        .filter_map(|t| {
            let columns: Vec<_> = t
                .columns
                .iter()
                .filter(|c| c.label.is_some())
                .cloned()
                .collect();
            (!columns.is_empty()).then(|| Table {
                id: t.id.clone(),
                columns,
            })
        })
        .collect();
    let (train, test) = split.partition(&labeled);
    let vocab = match model {
        Some(m) => m.vocabulary().clone(),
        None => LabelVocabulary::from_tables(&train, 1)?,
    };
    let mut config = BaselineConfig {
        value_cap: args.value_cap,
        seed: args.seed,
        train: TrainConfig {
            epochs: args.baseline_epochs,
            adam: AdamConfig {
                learning_rate: args.baseline_lr,
                ..AdamConfig::default()
            },
            seed: args.seed,
            value_cap: args.value_cap,
            ..TrainConfig::default()
        },
        ..BaselineConfig::default()
    };
    if let Some(m) = model {
        config.hyperparameters = *m.hyperparameters();
    }
    let mut reports: BTreeMap<&str, MetricsReport> = BTreeMap::new();
    for kind in kinds {
        let report = run_baseline(kind, &train, &test, &vocab, &config)?;
        eprintln!("baseline {:<18} micro-F {:.4}", kind.name(), report.micro_f);
        reports.insert(kind.name(), report);
    }
    write_json(&out_dir.join("baselines.json"), &reports)?;
    Ok(())
}
