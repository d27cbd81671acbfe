//! JSON checkpoints: model config plus every named parameter.
//!
//! Floats are written in shortest round-trip form and parsed with exact
//! round-tripping, so save → load is bit-exact.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use cograph_core::{Model, ModelConfig, Param, Tensor, TrainConfig};
use serde::{Deserialize, Serialize};

pub const FORMAT: &str = "cograph-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredParam {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_epoch: Option<usize>,
    pub params: Vec<StoredParam>,
}

impl Checkpoint {
    pub fn from_model(model: &Model, train: Option<&TrainConfig>, best_epoch: Option<usize>) -> Self {
        Checkpoint {
            format: FORMAT.into(),
            version: VERSION,
            model: model.config().clone(),
            train: train.cloned(),
            best_epoch,
            params: model
                .params()
                .iter()
                .map(|p| StoredParam {
                    name: p.name.clone(),
                    shape: p.tensor.shape().to_vec(),
                    data: p.tensor.data().to_vec(),
                })
                .collect(),
        }
    }

    /// Rebuilds the model, checking the parameter list against the layout
    /// the stored config implies.
    pub fn to_model(&self) -> Result<Model> {
        if self.format != FORMAT {
            bail!("not a checkpoint: format is `{}`, expected `{FORMAT}`", self.format);
        }
        if self.version != VERSION {
            bail!("unsupported checkpoint version {} (this build reads {VERSION})", self.version);
        }
        let params = self
            .params
            .iter()
            .map(|p| {
                let tensor = Tensor::new(p.shape.clone(), p.data.clone())
                    .with_context(|| format!("parameter `{}`", p.name))?;
                Ok(Param {
                    name: p.name.clone(),
                    tensor: tensor.with_grad(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Model::from_params(self.model.clone(), params)
            .context("checkpoint parameters do not match its model config")
    }
}

/// Writes through a sibling temp file and a rename, so a failed save never
/// leaves a partial checkpoint behind.
pub fn save(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let json = serde_json::to_vec(ckpt)?;
    let tmp = path.with_extension("tmp");
    let write = || -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&json)?;
        f.write_all(b"\n")?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
    .with_context(|| format!("writing checkpoint {}", path.display()))
}

pub fn load(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).with_context(|| format!("reading checkpoint {}", path.display()))?;
    serde_json::from_slice(&bytes).with_context(|| format!("parsing checkpoint {}", path.display()))
}
