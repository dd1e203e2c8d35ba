//! Model persistence: a single self-describing JSON document.
//!
//! Floats are rendered with shortest round-trip decimals, so a save/load
//! cycle reproduces every stored real bit-exactly and loaded models predict
//! bit-identically to the originals.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::Task;
use crate::ensemble::{CsgeConfig, CsgeModel};
use crate::error::{CsgeError, Result};
use crate::estimators::FittedEstimator;
use crate::scoring::Scorer;
use crate::softgate::SoftGateConfig;
use crate::weighting::{GlobalScores, LocalMemory, TimeScores};
use crate::weights::EtaVector;

/// Document format tag; bump on breaking layout changes.
pub const MODEL_FORMAT: &str = "csge/1";

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format: String,
    task: Task,
    horizon: usize,
    member_ids: Vec<String>,
    feature_names: Vec<String>,
    eta: EtaVector,
    global_scores: GlobalScores,
    time_scores: TimeScores,
    local_memory: LocalMemory,
    scorer: Scorer,
    gate: SoftGateConfig,
    config: CsgeConfig,
    objective_value: f64,
    members: Vec<FittedEstimator>,
}

/// Serializes a model to the versioned JSON document.
///
/// Models carrying a user-supplied scorer cannot be persisted; the closure
/// has no stable representation.
pub fn model_to_json(model: &CsgeModel) -> Result<String> {
    if let Scorer::UserSupplied { name, .. } = model.scorer() {
        return Err(CsgeError::Unsupported(format!(
            "cannot serialize a model with the user-supplied scorer `{name}`"
        )));
    }
    let document = ModelDocument {
        format: MODEL_FORMAT.to_string(),
        task: model.task(),
        horizon: model.horizon(),
        member_ids: model.member_ids().to_vec(),
        feature_names: model.feature_names().to_vec(),
        eta: model.eta(),
        global_scores: model.global_scores().clone(),
        time_scores: model.time_scores().clone(),
        local_memory: model.local_memory().clone(),
        scorer: model.scorer().clone(),
        gate: *model.gate(),
        config: model.config().clone(),
        objective_value: model.objective_value(),
        members: model.members().to_vec(),
    };
    serde_json::to_string_pretty(&document)
        .map_err(|e| CsgeError::Unsupported(format!("model serialization failed: {e}")))
}

/// Parses a model document produced by [`model_to_json`].
pub fn model_from_json(json: &str) -> Result<CsgeModel> {
    let document: ModelDocument = serde_json::from_str(json).map_err(|e| CsgeError::Parse {
        line: e.line(),
        message: format!("model document: {e}"),
    })?;
    if document.format != MODEL_FORMAT {
        return Err(CsgeError::Unsupported(format!(
            "model format `{}` is not `{MODEL_FORMAT}`",
            document.format
        )));
    }
    CsgeModel::assemble(
        document.members,
        document.member_ids,
        document.feature_names,
        document.task,
        document.horizon,
        document.eta,
        document.global_scores,
        document.local_memory,
        document.time_scores,
        document.scorer,
        document.gate,
        document.config,
        document.objective_value,
        Vec::new(),
    )
}

/// Writes the model document to disk.
pub fn save_model(model: &CsgeModel, path: impl AsRef<Path>) -> Result<()> {
    let json = model_to_json(model)?;
    fs::write(path.as_ref(), json)?;
    Ok(())
}

/// Reads a model document from disk.
pub fn load_model(path: impl AsRef<Path>) -> Result<CsgeModel> {
    let json = fs::read_to_string(path.as_ref())?;
    model_from_json(&json)
}
