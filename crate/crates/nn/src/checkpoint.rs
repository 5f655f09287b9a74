//! Versioned JSON checkpoints.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::NnError;
use crate::gnn::{GnnConfig, GnnModel};
use crate::loss::LossKind;
use crate::tensor::Tensor;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub d: usize,
    pub rounds: usize,
    pub rni_fraction: f64,
    pub loss: LossKind,
    pub params: Vec<NamedTensor>,
}

impl Checkpoint {
    pub fn from_model(model: &GnnModel, loss: LossKind) -> Self {
        let cfg = model.config();
        Checkpoint {
            format_version: CHECKPOINT_VERSION,
            d: cfg.d,
            rounds: cfg.rounds,
            rni_fraction: cfg.rni_fraction,
            loss,
            params: model
                .named_params()
                .map(|(name, t)| NamedTensor { name: name.into(), shape: t.shape().to_vec(), values: t.data().to_vec() })
                .collect(),
        }
    }

    pub fn config(&self) -> Result<GnnConfig, NnError> {
        GnnConfig::new(self.d, self.rounds, self.rni_fraction)
    }

    pub fn into_model(self) -> Result<GnnModel, NnError> {
        if self.format_version != CHECKPOINT_VERSION {
            return Err(NnError::Checkpoint(format!(
                "format version {} is not supported (expected {CHECKPOINT_VERSION})",
                self.format_version
            )));
        }
        let cfg = self.config()?;
        let named = self
            .params
            .into_iter()
            .map(|p| Tensor::new(p.shape, p.values).map(|t| (p.name, t)))
            .collect::<Result<Vec<_>, _>>()?;
        GnnModel::from_params(cfg, named)
    }

    pub fn save(&self, path: &Path) -> Result<(), NnError> {
        let text = serde_json::to_string(self)?;
        fs::write(path, text).map_err(|source| NnError::Io { path: path.display().to_string(), source })
    }

    pub fn load(path: &Path) -> Result<Self, NnError> {
        let text = fs::read_to_string(path).map_err(|source| NnError::Io { path: path.display().to_string(), source })?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Loads a model and checks it against an expected configuration.
pub fn load_model(path: &Path, expected: Option<&GnnConfig>) -> Result<(GnnModel, LossKind), NnError> {
    let ck = Checkpoint::load(path)?;
    let loss = ck.loss;
    let model = ck.into_model()?;
    if let Some(want) = expected {
        if model.config() != want {
            return Err(NnError::Checkpoint(format!(
                "checkpoint has d={}, rounds={}, rni={} but d={}, rounds={}, rni={} was requested",
                model.config().d,
                model.config().rounds,
                model.config().rni_fraction,
                want.d,
                want.rounds,
                want.rni_fraction
            )));
        }
    }
    Ok((model, loss))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let cfg = GnnConfig::new(4, 2, 0.5).unwrap();
        let model = GnnModel::init(cfg, 9);
        Checkpoint::from_model(&model, LossKind::Mse).save(&path).unwrap();
        let (back, loss) = load_model(&path, Some(&cfg)).unwrap();
        assert_eq!(back, model);
        assert_eq!(loss, LossKind::Mse);
    }

    #[test]
    fn rejects_mismatches() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let cfg = GnnConfig::new(4, 1, 0.0).unwrap();
        let model = GnnModel::init(cfg, 9);
        let ck = Checkpoint::from_model(&model, LossKind::Bce);
        ck.save(&path).unwrap();
        assert!(load_model(&path, Some(&GnnConfig::new(8, 1, 0.0).unwrap())).is_err());

        let mut wrong_d = ck.clone();
        wrong_d.d = 5;
        assert!(wrong_d.into_model().is_err());

        let mut ragged = ck.clone();
        ragged.params[0].values.pop();
        assert!(ragged.into_model().is_err());

        let mut version = ck.clone();
        version.format_version = 99;
        assert!(version.into_model().is_err());

        let mut rni = ck;
        rni.rni_fraction = 1.0;
        assert!(rni.into_model().is_err());
    }
}
