use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use schemalabel::corpus::{generate_synthetic_corpus, save_corpus, GeneratorConfig};

use super::{create_dir, read_json, required, resolve, write_json};

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GenerateArgs {
    /// Output directory; receives manifest.jsonl and tables/.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Generator settings as JSON (default: the built-in four-domain corpus).
    #[arg(long)]
    pub generator: Option<PathBuf>,
    /// Number of tables, overriding the generator settings.
    #[arg(long)]
    pub tables: Option<usize>,
    /// JSON file whose keys override these flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

pub fn generate(args: GenerateArgs) -> anyhow::Result<()> {
    let config_path = args.config.clone();
    let mut args = resolve(args, config_path.as_deref())?;
    let out = required(&args.out, "--out")?.to_path_buf();
    let mut generator: GeneratorConfig = match &args.generator {
        Some(p) => read_json(p)?,
        None => GeneratorConfig::default(),
    };
    if let Some(n) = args.tables {
        generator.tables = n;
    }
    let tables = generate_synthetic_corpus(&generator, args.seed)?;
    create_dir(&out)?;
    let manifest = save_corpus(&out, &tables)?;
    let generator_path = out.join("generator.json");
    write_json(&generator_path, &generator)?;

    args.generator = Some(generator_path);
    args.tables = None;
    write_json(&out.join("generate_config.json"), &args)?;
    eprintln!(
        "wrote {} tables ({} ambiguous label pairs) to {}",
        tables.len(),
        generator.ambiguous_pairs().len(),
        manifest.display()
    );
    Ok(())
}
