use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::optim::WarmRestarts;
use crate::model::{ModelConfig, Preset};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Weight of the whole-label loss; 0 removes it from the graph entirely.
    pub alpha: f64,
    /// Peak learning rate.
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// First warm-restart cycle, in epochs.
    pub restart_period: f64,
    pub restart_mult: f64,
    /// Learning-rate floor as a fraction of `lr`.
    pub min_lr_ratio: f64,
    /// Share of the training file held out for model selection when no dev
    /// file is given.
    pub dev_fraction: f64,
}

impl TrainConfig {
    pub fn fidelity() -> Self {
        Self {
            alpha: 0.25,
            lr: 3e-5,
            batch_size: 8,
            epochs: 100,
            seed: 0,
            restart_period: 10.0,
            restart_mult: 2.0,
            min_lr_ratio: 0.01,
            dev_fraction: 0.1,
        }
    }

    /// Small models from scratch need a far larger step than the published rate.
    pub fn desk() -> Self {
        Self {
            lr: 5e-3,
            epochs: 300,
            ..Self::fidelity()
        }
    }

    pub fn preset(p: Preset) -> Self {
        match p {
            Preset::Desk => Self::desk(),
            Preset::Fidelity => Self::fidelity(),
        }
    }

    pub fn schedule(&self) -> WarmRestarts {
        WarmRestarts {
            peak: self.lr,
            floor_ratio: self.min_lr_ratio,
            period: self.restart_period,
            mult: self.restart_mult,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!(
                "alpha must be a finite value ≥ 0, got {}",
                self.alpha
            )));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!(
                "lr must be positive, got {}",
                self.lr
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if !(self.restart_period > 0.0) || self.restart_mult < 1.0 {
            return Err(Error::Config(
                "restart_period must be > 0 and restart_mult ≥ 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.min_lr_ratio) {
            return Err(Error::Config("min_lr_ratio must lie in [0, 1]".into()));
        }
        if !(0.0..1.0).contains(&self.dev_fraction) {
            return Err(Error::Config("dev_fraction must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::desk()
    }
}

/// Model and training settings together.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub preset: Preset,
    pub model: ModelConfig,
    pub train: TrainConfig,
}

impl RunConfig {
    pub fn preset(p: Preset) -> Self {
        Self {
            preset: p,
            model: ModelConfig::preset(p),
            train: TrainConfig::preset(p),
        }
    }

    /// Parses a flat TOML document of `key = value` lines. Keys are the
    /// field names of `TrainConfig` and `ModelConfig` plus `preset`. The
    /// preset (from `preset_override`, else the file, else desk) supplies the
    /// defaults and the remaining keys override them.
    pub fn from_toml(text: &str, preset_override: Option<Preset>) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e| Error::Config(format!("config file: {e}")))?;
        let file_preset = match table.get("preset") {
            Some(v) => Some(
                v.clone()
                    .try_into::<Preset>()
                    .map_err(|e| Error::Config(format!("preset: {e}")))?,
            ),
            None => None,
        };
        let mut cfg = Self::preset(preset_override.or(file_preset).unwrap_or_default());
        let model_keys = keys_of(&cfg.model)?;
        let train_keys = keys_of(&cfg.train)?;
        let mut model_over = toml::Table::new();
        let mut train_over = toml::Table::new();
        for (k, v) in table {
            if k == "preset" {
                continue;
            }
            if model_keys.contains(&k) {
                model_over.insert(k, v);
            } else if train_keys.contains(&k) {
                train_over.insert(k, v);
            } else {
                return Err(Error::Config(format!("unknown config key {k:?}")));
            }
        }
        cfg.model = merge(&cfg.model, model_over)?;
        cfg.train = merge(&cfg.train, train_over)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path, preset_override: Option<Preset>) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::from_toml(&text, preset_override)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.train.validate()
    }

    /// Flat TOML with every key, suitable as a config file template.
    pub fn to_toml(&self) -> String {
        let mut t = toml::Table::new();
        t.insert(
            "preset".into(),
            toml::Value::try_from(self.preset).expect("preset serializes"),
        );
        t.extend(toml::Table::try_from(&self.train).expect("train config serializes"));
        t.extend(toml::Table::try_from(&self.model).expect("model config serializes"));
        toml::to_string(&t).expect("flat table serializes")
    }
}

fn keys_of<T: Serialize>(value: &T) -> Result<Vec<String>> {
    let t = toml::Table::try_from(value).map_err(|e| Error::Config(e.to_string()))?;
    Ok(t.keys().cloned().collect())
}

fn merge<T: Serialize + DeserializeOwned>(base: &T, over: toml::Table) -> Result<T> {
    let mut t = toml::Table::try_from(base).map_err(|e| Error::Config(e.to_string()))?;
    for (k, v) in over {
        // Accept integers for float-valued keys.
        let v = match (t.get(&k), v) {
            (Some(toml::Value::Float(_)), toml::Value::Integer(i)) => toml::Value::Float(i as f64),
            (_, v) => v,
        };
        t.insert(k, v);
    }
    toml::Value::Table(t)
        .try_into()
        .map_err(|e| Error::Config(format!("config file: {e}")))
}
