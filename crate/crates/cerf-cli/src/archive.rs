use std::path::Path;

use cerf::apps::FeatureMap;
use cerf::cvem::TrainedCerf;
use cerf::features::Embedding;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const EMBEDDING_FORMAT: &str = "cerf-embedding-v1";
pub const TRAINED_FORMAT: &str = "cerf-trained-v1";

/// Self-describing JSON container for a plain embedding or a trained CERF.
#[derive(Debug, Serialize, Deserialize)]
pub struct Archive {
    pub format: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Embedding>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trained: Option<TrainedCerf>,
}

pub fn save_embedding(path: &Path, embedding: &Embedding, seed: u64) -> Result<()> {
    let archive = Archive {
        format: EMBEDDING_FORMAT.into(),
        seed,
        embedding: Some(embedding.clone()),
        trained: None,
    };
    write_json(path, &archive)
}

pub fn save_trained(path: &Path, trained: &TrainedCerf, seed: u64) -> Result<()> {
    let archive = Archive {
        format: TRAINED_FORMAT.into(),
        seed,
        embedding: None,
        trained: Some(trained.clone()),
    };
    write_json(path, &archive)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let json = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Data(format!("serializing {}: {e}", path.display())))?;
    std::fs::write(path, json + "\n")?;
    Ok(())
}

/// Loads either archive flavor as a feature map.
pub fn load_feature_map(path: &Path) -> Result<FeatureMap> {
    let archive = load_archive(path)?;
    match (archive.format.as_str(), archive.embedding, archive.trained) {
        (EMBEDDING_FORMAT, Some(e), _) => Ok(FeatureMap::Plain(e)),
        (TRAINED_FORMAT, _, Some(t)) => Ok(FeatureMap::Trained(t)),
        (fmt, _, _) => Err(CliError::Data(format!(
            "{}: format tag '{fmt}' does not match its payload",
            path.display()
        ))),
    }
}

pub fn load_archive(path: &Path) -> Result<Archive> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}
