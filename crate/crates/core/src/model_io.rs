//! JSON persistence of fitted models.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fpca::FpcaBasis;
use crate::generative::{GenerativeClimbModel, WeightDistribution};

pub const SCHEMA_VERSION: u32 = 1;
const MODEL_SUFFIX: &str = ".model.json";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    schema_version: u32,
    type_code: String,
    interval_fl: [f64; 2],
    grid_m: Vec<f64>,
    #[serde(rename = "mean_N")]
    mean_n: Vec<f64>,
    modes: Vec<Vec<f64>>,
    explained_variance: Vec<f64>,
    mu_w: Vec<f64>,
    sigma_diag: Vec<f64>,
    n_flights_fit: usize,
}

#[derive(Deserialize)]
struct VersionProbe {
    schema_version: Option<u32>,
}

/// File name used for a type's model inside a model directory.
pub fn model_path(dir: &Path, type_code: &str) -> PathBuf {
    dir.join(format!("{type_code}{MODEL_SUFFIX}"))
}

pub fn model_to_json(model: &GenerativeClimbModel) -> String {
    let file = ModelFile {
        schema_version: SCHEMA_VERSION,
        type_code: model.type_code.clone(),
        interval_fl: model.interval_fl,
        grid_m: model.basis.grid.clone(),
        mean_n: model.basis.mean.clone(),
        modes: model.basis.modes.clone(),
        explained_variance: model.basis.explained_variance.clone(),
        mu_w: model.weights.mu_w.clone(),
        sigma_diag: model.weights.sigma_diag.clone(),
        n_flights_fit: model.n_flights_fit,
    };
    let mut s = serde_json::to_string_pretty(&file).expect("model serialises");
    s.push('\n');
    s
}

pub fn model_from_json(path: &Path, text: &str) -> Result<GenerativeClimbModel> {
    let corrupted = |reason: String| Error::Corrupted {
        path: path.to_path_buf(),
        reason,
    };
    let probe: VersionProbe =
        serde_json::from_str(text).map_err(|e| corrupted(e.to_string()))?;
    match probe.schema_version {
        Some(SCHEMA_VERSION) => {}
        Some(found) => {
            return Err(Error::SchemaVersion {
                found,
                expected: SCHEMA_VERSION,
            })
        }
        None => return Err(corrupted("missing schema_version".into())),
    }
    let f: ModelFile = serde_json::from_str(text).map_err(|e| corrupted(e.to_string()))?;
    let model = GenerativeClimbModel {
        type_code: f.type_code,
        interval_fl: f.interval_fl,
        basis: FpcaBasis {
            grid: f.grid_m,
            mean: f.mean_n,
            modes: f.modes,
            explained_variance: f.explained_variance,
        },
        weights: WeightDistribution {
            mu_w: f.mu_w,
            sigma_diag: f.sigma_diag,
        },
        n_flights_fit: f.n_flights_fit,
    };
    model.validate().map_err(|e| corrupted(e.to_string()))?;
    Ok(model)
}

pub fn save_model(model: &GenerativeClimbModel, path: &Path) -> Result<()> {
    fs::write(path, model_to_json(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<GenerativeClimbModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_json(path, &text)
}

/// Loads every `*.model.json` in `dir`, keyed by type code.
pub fn load_models(dir: &Path) -> Result<BTreeMap<String, GenerativeClimbModel>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(MODEL_SUFFIX)) {
            paths.push(path);
        }
    }
    paths.sort();
    let mut models = BTreeMap::new();
    for path in paths {
        let m = load_model(&path)?;
        models.insert(m.type_code.clone(), m);
    }
    Ok(models)
}
