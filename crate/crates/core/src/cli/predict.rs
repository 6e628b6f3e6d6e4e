use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{ArgAction, Args};
use serde::{Deserialize, Serialize};

use schemalabel::corpus::{load_tables, CorpusSplit, Table, DEFAULT_VALUE_CAP};
use schemalabel::encoder::{load_model, Model};
use schemalabel::inference::{label_tables, InferenceOptions, TablePrediction, DEFAULT_TOP_K};
use schemalabel::prepared::PreparedTable;

use super::{create_dir, read_json, required, resolve, write_json};

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PredictArgs {
    /// Trained model file.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Manifest of the tables to label; any header row is ignored.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// split.json from training; restricts labeling to its test tables.
    #[arg(long)]
    pub split_file: Option<PathBuf>,
    /// Forbid duplicate labels within a table.
    #[arg(long, action = ArgAction::Set, default_value_t = true)]
    pub unique_headers: bool,
    /// Candidates searched per column by the unique-headers constraint.
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    pub top_k: usize,
    /// JSONL of {"table_id", "masked": [column indices]}; the other columns'
    /// manifest labels are given as known context. Unlisted tables are
    /// fully masked.
    #[arg(long)]
    pub mask_file: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_VALUE_CAP)]
    pub value_cap: usize,
    /// Seed for value sampling.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output JSONL, one record per table.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON file whose keys override these flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
struct MaskRecord {
    table_id: String,
    masked: Vec<usize>,
}

fn read_masks(path: &Path) -> anyhow::Result<HashMap<String, Vec<usize>>> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = HashMap::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: MaskRecord =
            serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), n + 1))?;
        if out.insert(rec.table_id.clone(), rec.masked).is_some() {
            bail!("{}: table {:?} listed twice", path.display(), rec.table_id);
        }
    }
    Ok(out)
}

/// Keeps the tables named by `split.test`, in manifest order.
pub(super) fn test_tables(tables: Vec<Table>, split: &CorpusSplit) -> anyhow::Result<Vec<Table>> {
    let wanted: HashSet<&str> = split.test.iter().map(String::as_str).collect();
    let present: HashSet<&str> = tables.iter().map(|t| t.id.as_str()).collect();
    if let Some(missing) = split.test.iter().find(|id| !present.contains(id.as_str())) {
        bail!("split names table {missing:?}, which is not in the manifest");
    }
    Ok(tables
        .into_iter()
        .filter(|t| wanted.contains(t.id.as_str()))
        .collect())
}

fn known_labels(
    model: &Model,
    table: &Table,
    masked: Option<&Vec<usize>>,
) -> anyhow::Result<Vec<Option<usize>>> {
    let Some(masked) = masked else {
        return Ok(vec![None; table.width()]);
    };
    if let Some(&bad) = masked.iter().find(|&&i| i >= table.width()) {
        bail!("table {}: masked column {bad} out of range", table.id);
    }
    (0..table.width())
        .map(|i| {
            if masked.contains(&i) {
                return Ok(None);
            }
            let label = table.columns[i].label.as_deref().with_context(|| {
                format!(
                    "table {}: column {i} is unmasked but has no label",
                    table.id
                )
            })?;
            let id = model.vocabulary().id(label).with_context(|| {
                format!(
                    "table {}: known label {label:?} is not in the model vocabulary",
                    table.id
                )
            })?;
            Ok(Some(id))
        })
        .collect()
}

pub fn predict(args: PredictArgs) -> anyhow::Result<()> {
    let config_path = args.config.clone();
    let args = resolve(args, config_path.as_deref())?;
    let model_path = required(&args.model, "--model")?;
    let manifest = required(&args.manifest, "--manifest")?;
    let out = required(&args.out, "--out")?;
    anyhow::ensure!(args.value_cap >= 1, "--value-cap must be at least 1");
    let options = InferenceOptions {
        unique_headers: args.unique_headers,
        top_k: args.top_k,
    };
    if options.unique_headers {
        anyhow::ensure!(options.top_k >= 1, "--top-k must be at least 1");
    }

    let model = load_model(model_path)
        .with_context(|| format!("loading model {}", model_path.display()))?;
    let mut tables = load_tables(manifest)?;
    if let Some(split_path) = &args.split_file {
        tables = test_tables(tables, &read_json(split_path)?)?;
    }
    let masks = match &args.mask_file {
        Some(p) => read_masks(p)?,
        None => HashMap::new(),
    };
    let known: Vec<Vec<Option<usize>>> = tables
        .iter()
        .map(|t| known_labels(&model, t, masks.get(&t.id)))
        .collect::<anyhow::Result<_>>()?;
    let prepared: Vec<PreparedTable> = tables
        .iter()
        .map(|t| {
            PreparedTable::new(
                t,
                model.vocabulary(),
                model.tokenizer(),
                args.value_cap,
                args.seed,
            )
        })
        .collect();
    let labeled = label_tables(&model, &prepared, &known, &options)?;

    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    let mut buf = Vec::new();
    let mut columns = 0;
    for l in &labeled {
        let record = TablePrediction::from_trace(&l.trace, &model);
        columns += record.columns.len();
        serde_json::to_writer(&mut buf, &record)?;
        buf.push(b'\n');
    }
    fs::File::create(out)
        .and_then(|mut f| f.write_all(&buf))
        .with_context(|| format!("writing {}", out.display()))?;
    write_json(&out.with_file_name("predict_config.json"), &args)?;
    eprintln!(
        "labeled {columns} columns in {} tables -> {}",
        labeled.len(),
        out.display()
    );
    Ok(())
}
