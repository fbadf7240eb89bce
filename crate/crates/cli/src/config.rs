//! Flat key-value run configuration.
//!
//! A run is described by one TOML file of top-level keys; `--set key=value`
//! flags are applied on top and win over the file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use ukm_core::anfis::{ConsequentOrder, OutputMode, TrainingConfig};
use ukm_core::data::{Encoding, PREDEFINED_TRAIN_ROWS};
use ukm_core::fuzzy::MfShape;
use ukm_core::mlp::{Activation, Batch, Loss, MlpConfig};
use ukm_core::pipeline::{ExperimentSpec, HiddenSpec, ModelSpec, SplitSpec};

use crate::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub name: Option<String>,
    pub dataset: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,

    /// `binarize` (default) or `passthrough`
    pub encoding: Option<String>,
    pub threshold: Option<f64>,

    /// `ratio` (default), `predefined` or `kfold`
    pub split: Option<String>,
    pub ratio: Option<f64>,
    pub seed: Option<u64>,
    pub train_rows: Option<usize>,
    pub folds: Option<usize>,
    pub fold: Option<usize>,

    /// `anfis` (default) or `mlp`
    pub model: Option<String>,
    pub mf_shape: Option<String>,
    pub mfs_per_input: Option<usize>,
    pub output_mode: Option<String>,
    /// `first` (default) or `zero`
    pub consequent: Option<String>,
    pub ridge: Option<f64>,
    pub early_stop_rmse: Option<f64>,

    pub hidden: Option<usize>,
    pub hidden_sweep: Option<bool>,
    pub hidden_min: Option<usize>,
    pub hidden_max: Option<usize>,
    pub hidden_activation: Option<String>,
    pub output_activation: Option<String>,
    pub loss: Option<String>,
    pub batch: Option<String>,

    pub epochs: Option<usize>,
    pub learn_rate: Option<f64>,
}

fn parse_override(item: &str) -> Result<(String, toml::Value), CliError> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override {item:?} is not key=value")))?;
    let key = key.trim().to_string();
    let raw = raw.trim();
    // bare words are strings; everything else goes through the TOML parser
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    Ok((key, value))
}

impl RunConfig {
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", p.display())))?;
                toml::from_str::<toml::Table>(&text)
                    .map_err(|e| CliError::Config(format!("config {}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for item in overrides {
            let (key, value) = parse_override(item)?;
            table.insert(key, value);
        }
        toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))
    }

    pub fn dataset(&self) -> Result<&Path, CliError> {
        self.dataset
            .as_deref()
            .ok_or_else(|| CliError::Config("no dataset given (set `dataset` or pass --dataset)".into()))
    }

    pub fn encoding(&self) -> Result<Encoding, CliError> {
        match self.encoding.as_deref().unwrap_or("binarize") {
            "binarize" => Ok(Encoding::Binarize {
                threshold: self.threshold.unwrap_or(0.5),
            }),
            "passthrough" => Ok(Encoding::Passthrough),
            other => Err(CliError::Config(format!("unknown encoding {other:?}"))),
        }
    }

    pub fn split_spec(&self) -> Result<SplitSpec, CliError> {
        let seed = self.seed.unwrap_or(0);
        match self.split.as_deref().unwrap_or("ratio") {
            "ratio" => Ok(SplitSpec::Ratio {
                ratio: self.ratio.unwrap_or(0.8),
                seed,
            }),
            "predefined" => Ok(SplitSpec::Predefined {
                train_rows: self.train_rows.unwrap_or(PREDEFINED_TRAIN_ROWS),
            }),
            "kfold" => Ok(SplitSpec::Kfold {
                k: self.folds.unwrap_or(5),
                fold: self.fold.unwrap_or(0),
                seed,
            }),
            other => Err(CliError::Config(format!("unknown split mode {other:?}"))),
        }
    }

    pub fn model_spec(&self) -> Result<ModelSpec, CliError> {
        let seed = self.seed.unwrap_or(0);
        match self.model.as_deref().unwrap_or("anfis") {
            "anfis" => {
                let defaults = TrainingConfig::default();
                let training = TrainingConfig {
                    epochs: self.epochs.unwrap_or(defaults.epochs),
                    learn_rate: self.learn_rate.unwrap_or(defaults.learn_rate),
                    ridge: self.ridge.unwrap_or(defaults.ridge),
                    seed,
                    early_stop_rmse: self.early_stop_rmse.unwrap_or(defaults.early_stop_rmse),
                };
                training.validate().map_err(|e| CliError::Config(e.to_string()))?;
                Ok(ModelSpec::Anfis {
                    mf_shape: parse(self.mf_shape.as_deref(), MfShape::Gauss2)?,
                    mfs_per_input: self.mfs_per_input.unwrap_or(2),
                    output_mode: parse(self.output_mode.as_deref(), OutputMode::Single)?,
                    order: match self.consequent.as_deref().unwrap_or("first") {
                        "first" => ConsequentOrder::First,
                        "zero" => ConsequentOrder::Zero,
                        other => return Err(CliError::Config(format!("unknown consequent order {other:?}"))),
                    },
                    training,
                })
            }
            "mlp" => {
                let defaults = MlpConfig::default();
                let training = MlpConfig {
                    epochs: self.epochs.unwrap_or(defaults.epochs),
                    learn_rate: self.learn_rate.unwrap_or(defaults.learn_rate),
                    seed,
                    batch: match self.batch.as_deref().unwrap_or("stochastic") {
                        "stochastic" => Batch::Stochastic,
                        "full" => Batch::Full,
                        other => return Err(CliError::Config(format!("unknown batch mode {other:?}"))),
                    },
                    loss: match self.loss.as_deref().unwrap_or("mse") {
                        "mse" => Loss::Mse,
                        "cross_entropy" | "crossentropy" => Loss::CrossEntropy,
                        other => return Err(CliError::Config(format!("unknown loss {other:?}"))),
                    },
                };
                let hidden = if self.hidden_sweep.unwrap_or(false) {
                    HiddenSpec::Sweep {
                        min: self.hidden_min.unwrap_or(4),
                        max: self.hidden_max.unwrap_or(20),
                    }
                } else {
                    let size = self.hidden.unwrap_or(10);
                    if size == 0 {
                        return Err(CliError::Config("hidden must be at least 1".into()));
                    }
                    HiddenSpec::Fixed { size }
                };
                Ok(ModelSpec::Mlp {
                    hidden,
                    hidden_activation: parse(self.hidden_activation.as_deref(), Activation::Tansig)?,
                    output_activation: parse(self.output_activation.as_deref(), Activation::Logsig)?,
                    training,
                })
            }
            other => Err(CliError::Config(format!("unknown model {other:?}"))),
        }
    }

    pub fn experiment(&self) -> Result<ExperimentSpec, CliError> {
        Ok(ExperimentSpec {
            encoding: self.encoding()?,
            split: self.split_spec()?,
            model: self.model_spec()?,
        })
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.model.clone().unwrap_or_else(|| "anfis".into()))
    }
}

fn parse<T: std::str::FromStr<Err = String>>(value: Option<&str>, default: T) -> Result<T, CliError> {
    value.map_or(Ok(default), |v| v.parse().map_err(CliError::Config))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_win_over_file_values() {
        let dir = std::env::temp_dir().join(format!("ukm-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.toml");
        std::fs::write(&path, "model = \"mlp\"\nepochs = 5\nseed = 3\n").unwrap();
        let cfg = RunConfig::load(Some(&path), &["epochs=7".into(), "hidden_activation=logsig".into()]).unwrap();
        assert_eq!(cfg.epochs, Some(7));
        assert_eq!(cfg.seed, Some(3));
        assert_eq!(cfg.hidden_activation.as_deref(), Some("logsig"));
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn defaults_resolve_to_gauss2_anfis_on_ratio_split() {
        let spec = RunConfig::default().experiment().unwrap();
        assert_eq!(spec.split, SplitSpec::Ratio { ratio: 0.8, seed: 0 });
        match spec.model {
            ModelSpec::Anfis {
                mf_shape,
                mfs_per_input,
                training,
                ..
            } => {
                assert_eq!(mf_shape, MfShape::Gauss2);
                assert_eq!(mfs_per_input, 2);
                assert_eq!(training, TrainingConfig::default());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_unknown_keys_and_values() {
        assert!(RunConfig::load(None, &["colour=blue".into()]).is_err());
        let cfg = RunConfig::load(None, &["mf_shape=hexagon".into()]).unwrap();
        assert!(cfg.experiment().is_err());
        let cfg = RunConfig::load(None, &["epochs=0".into()]).unwrap();
        assert!(cfg.experiment().is_err());
    }
}
