//! Versioned JSON checkpoints. The container stores the scorer kind, the
//! init seed, the full configuration, and every matrix in row-major order
//! with declared shapes; the round trip is bit-exact at 64-bit because
//! floats are emitted in shortest round-trip form.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{GkrError, Result};
use crate::model::PairModel;

pub const CHECKPOINT_SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    schema_version: u32,
    kind: String,
    seed: u64,
    model: PairModel,
}

pub fn save_checkpoint(path: &Path, model: &PairModel) -> Result<()> {
    let ckpt = Checkpoint {
        schema_version: CHECKPOINT_SCHEMA_VERSION,
        kind: model.scorer.kind().to_string(),
        seed: model.seed,
        model: model.clone(),
    };
    let mut json = serde_json::to_string_pretty(&ckpt).map_err(|e| GkrError::Json {
        context: format!("serializing checkpoint {}", path.display()),
        source: e,
    })?;
    json.push('\n');
    fs::write(path, json)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<PairModel> {
    let content = fs::read_to_string(path)?;
    let ckpt: Checkpoint = serde_json::from_str(&content).map_err(|e| GkrError::Json {
        context: format!("parsing checkpoint {}", path.display()),
        source: e,
    })?;
    if ckpt.schema_version != CHECKPOINT_SCHEMA_VERSION {
        return Err(GkrError::usage(format!(
            "checkpoint {} has schema_version {}, expected {CHECKPOINT_SCHEMA_VERSION}",
            path.display(),
            ckpt.schema_version
        )));
    }
    if ckpt.kind != ckpt.model.scorer.kind() {
        return Err(GkrError::usage(format!(
            "checkpoint {} kind tag {} disagrees with stored model {}",
            path.display(),
            ckpt.kind,
            ckpt.model.scorer.kind()
        )));
    }
    ckpt.model.validate()?;
    Ok(ckpt.model)
}
