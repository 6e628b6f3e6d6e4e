//! Subcommand arguments and drivers. Every command accepts `--config FILE`,
//! a JSON object whose keys override the matching flags, and writes the
//! resolved arguments next to its outputs.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::de::DeserializeOwned;
use serde::Serialize;

mod evaluate;
mod generate;
mod predict;
mod train;

pub use evaluate::{evaluate, EvaluateArgs};
pub use generate::{generate, GenerateArgs};
pub use predict::{predict, PredictArgs};
pub use train::{train, TrainArgs};

/// Applies the keys of a JSON config file over parsed flags.
fn resolve<T: Serialize + DeserializeOwned>(args: T, config: Option<&Path>) -> anyhow::Result<T> {
    let Some(path) = config else {
        return Ok(args);
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let overrides: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let serde_json::Value::Object(overrides) = overrides else {
        bail!("{} must hold a JSON object", path.display());
    };
    let mut merged = serde_json::to_value(&args)?;
    let fields = merged
        .as_object_mut()
        .expect("arguments serialize to an object");
    for (key, value) in overrides {
        if !fields.contains_key(&key) {
            bail!("{}: unknown setting {key:?}", path.display());
        }
        fields.insert(key, value);
    }
    serde_json::from_value(merged).with_context(|| format!("applying {}", path.display()))
}

fn required<'a>(value: &'a Option<PathBuf>, flag: &str) -> anyhow::Result<&'a Path> {
    value
        .as_deref()
        .with_context(|| format!("{flag} is required (as a flag or in --config)"))
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn create_dir(path: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))
}
