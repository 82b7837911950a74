//! Run configuration: a TOML file with `[model.teacher]`, `[model.student]`,
//! `[distill]`, `[train]` and `[data]` sections.

use std::path::Path;

use mvat_core::distill::DistillConfig;
use mvat_core::model::{ModelConfig, Role};
use mvat_core::signal::{CorpusConfig, StftConfig};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Environment variable that replaces `train.seed`.
pub const SEED_ENV: &str = "MVAT_SEED";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    #[serde(default = "defaults::batch_size")]
    pub batch_size: usize,
    #[serde(default = "defaults::learning_rate")]
    pub learning_rate: f64,
    /// Multiplicative learning-rate factor applied after every epoch.
    #[serde(default = "defaults::lr_decay")]
    pub lr_decay: f64,
    pub seed: u64,
    /// Samples per training example; shorter clips are zero-padded.
    #[serde(default = "defaults::segment_len")]
    pub segment_len: usize,
    /// Global gradient-norm bound.
    #[serde(default = "defaults::clip_norm")]
    pub clip_norm: f64,
    #[serde(default = "defaults::resolutions")]
    pub resolutions: Vec<StftConfig>,
}

mod defaults {
    use super::StftConfig;

    pub fn batch_size() -> usize {
        4
    }
    pub fn learning_rate() -> f64 {
        5e-4
    }
    pub fn lr_decay() -> f64 {
        0.999
    }
    pub fn segment_len() -> usize {
        16_384
    }
    pub fn clip_norm() -> f64 {
        5.0
    }
    pub fn resolutions() -> Vec<StftConfig> {
        StftConfig::DEFAULT_RESOLUTIONS.to_vec()
    }
}

impl TrainConfig {
    pub fn new(epochs: usize, seed: u64) -> Self {
        Self {
            epochs,
            batch_size: defaults::batch_size(),
            learning_rate: defaults::learning_rate(),
            lr_decay: defaults::lr_decay(),
            seed,
            segment_len: defaults::segment_len(),
            clip_norm: defaults::clip_norm(),
            resolutions: defaults::resolutions(),
        }
    }

    /// Learning rate during epoch `epoch` (0-based).
    pub fn lr_at(&self, epoch: usize) -> f64 {
        self.learning_rate * self.lr_decay.powi(epoch as i32)
    }

    /// Checks that do not depend on the model.
    pub fn validate_settings(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(format!("[train] {m}")));
        if self.epochs == 0 || self.batch_size == 0 {
            return fail(format!(
                "epochs ({}) and batch_size ({}) must be >= 1",
                self.epochs, self.batch_size
            ));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return fail(format!(
                "learning_rate must be finite and >= 0, got {}",
                self.learning_rate
            ));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay.is_finite()) {
            return fail(format!("lr_decay must be positive, got {}", self.lr_decay));
        }
        if !(self.clip_norm > 0.0) {
            return fail(format!(
                "clip_norm must be positive, got {}",
                self.clip_norm
            ));
        }
        if self.seed > i64::MAX as u64 {
            return fail(format!(
                "seed must be at most {}, got {}",
                i64::MAX,
                self.seed
            ));
        }
        if self.resolutions.is_empty() {
            return fail("resolutions must not be empty".into());
        }
        for r in &self.resolutions {
            r.validate()?;
        }
        Ok(())
    }

    pub fn validate(&self, model: &ModelConfig) -> Result<()> {
        self.validate_settings()?;
        let fail = |m: String| Err(Error::Config(format!("[train] {m}")));
        let min = model.total_stride();
        if self.segment_len < min {
            return fail(format!(
                "segment_len {} is shorter than stride^depth = {min}",
                self.segment_len
            ));
        }
        for r in &self.resolutions {
            if r.window_len > self.segment_len {
                return fail(format!(
                    "stft window {} exceeds segment_len {}",
                    r.window_len, self.segment_len
                ));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub teacher: Option<ModelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub student: Option<ModelConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub distill: DistillConfig,
    pub train: TrainConfig,
    #[serde(default)]
    pub data: CorpusConfig,
}

fn require(table: &toml::Table, section: &str, keys: &[&str]) -> Result<()> {
    match keys.iter().find(|k| !table.contains_key(**k)) {
        Some(k) => Err(Error::MissingKey {
            section: section.into(),
            key: (*k).into(),
        }),
        None => Ok(()),
    }
}

/// Fills `role` from the section name and the role's default MA placement.
fn complete_model_section(model: &mut toml::Table, name: &str, role: Role) -> Result<()> {
    let Some(sec) = model.get_mut(name) else {
        return Ok(());
    };
    let section = format!("model.{name}");
    let sec = sec
        .as_table_mut()
        .ok_or_else(|| Error::Config(format!("[{section}] must be a table")))?;
    require(sec, &section, &["depth", "base_channels"])?;
    match sec.get("role").map(|v| v.as_str()) {
        None => {
            sec.insert("role".into(), name.into());
        }
        Some(Some(r)) if r == name => {}
        Some(_) => {
            return Err(Error::Config(format!(
                "[{section}] role must be \"{name}\""
            )))
        }
    }
    if !sec.contains_key("ma_placement") {
        let depth = sec["depth"]
            .as_integer()
            .filter(|&d| d >= 1)
            .ok_or_else(|| {
                Error::Config(format!("[{section}] depth must be a positive integer"))
            })?;
        let placement: Vec<i64> = match role {
            Role::Teacher => (1..=depth).collect(),
            Role::Student => vec![depth],
        };
        sec.insert("ma_placement".into(), placement.into());
    }
    Ok(())
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        if let Some(model) = table.get_mut("model") {
            let model = model
                .as_table_mut()
                .ok_or_else(|| Error::Config("[model] must be a table".into()))?;
            complete_model_section(model, "teacher", Role::Teacher)?;
            complete_model_section(model, "student", Role::Student)?;
        }
        match table.get("train").map(|t| t.as_table()) {
            None => {
                return Err(Error::MissingKey {
                    section: "train".into(),
                    key: "epochs".into(),
                })
            }
            Some(None) => return Err(Error::Config("[train] must be a table".into())),
            Some(Some(train)) => require(train, "train", &["epochs", "seed"])?,
        }
        let cfg: RunConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Replaces `train.seed` with `MVAT_SEED` when that variable is set.
    pub fn apply_env(&mut self) -> Result<()> {
        match std::env::var(SEED_ENV) {
            Ok(v) => {
                self.train.seed = v.trim().parse().map_err(|_| {
                    Error::Config(format!("{SEED_ENV} must be an unsigned integer, got `{v}`"))
                })?;
                self.validate()
            }
            Err(std::env::VarError::NotPresent) => Ok(()),
            Err(e) => Err(Error::Config(format!("{SEED_ENV}: {e}"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate_settings()?;
        for (name, m) in [
            ("teacher", &self.model.teacher),
            ("student", &self.model.student),
        ] {
            if let Some(m) = m {
                m.validate()
                    .map_err(|e| Error::Config(format!("[model.{name}] {e}")))?;
                self.train.validate(m)?;
            }
        }
        self.distill
            .validate()
            .map_err(|e| Error::Config(format!("[distill] {e}")))?;
        self.data
            .validate()
            .map_err(|e| Error::Config(format!("[data] {e}")))?;
        if self.data.seed > i64::MAX as u64 {
            return Err(Error::Config(format!(
                "[data] seed must be at most {}",
                i64::MAX
            )));
        }
        Ok(())
    }

    pub fn teacher(&self) -> Result<&ModelConfig> {
        self.model
            .teacher
            .as_ref()
            .ok_or_else(|| Error::MissingKey {
                section: "model".into(),
                key: "teacher".into(),
            })
    }

    pub fn student(&self) -> Result<&ModelConfig> {
        self.model
            .student
            .as_ref()
            .ok_or_else(|| Error::MissingKey {
                section: "model".into(),
                key: "student".into(),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use mvat_core::distill::{PLoss, View};

    const FULL: &str = r#"
[model.teacher]
depth = 3
base_channels = 24

[model.student]
depth = 2
base_channels = 6

[distill]
lambda_kd = 0.0
single_view = "global"
p_loss = 2

[train]
epochs = 3
seed = 11
segment_len = 4096

[data]
train_clips = 8
"#;

    #[test]
    fn parses_sections_and_fills_defaults() {
        let cfg = RunConfig::parse(FULL).unwrap();
        assert_eq!(cfg.teacher().unwrap(), &ModelConfig::teacher(3, 24));
        assert_eq!(cfg.student().unwrap(), &ModelConfig::student(2, 6));
        assert_eq!(cfg.distill.single_view, Some(View::Global));
        assert_eq!(cfg.distill.p_loss, PLoss::L2);
        assert_eq!(cfg.distill.lambda_at, 1.0);
        assert_eq!(cfg.train.batch_size, 4);
        assert_eq!(cfg.train.learning_rate, 5e-4);
        assert_eq!(cfg.train.resolutions, StftConfig::DEFAULT_RESOLUTIONS);
        assert_eq!(cfg.data.train_clips, 8);
        assert_eq!(cfg.data.val_clips, CorpusConfig::default().val_clips);
    }

    #[test]
    fn round_trip_is_identity() {
        let cfg = RunConfig::parse(FULL).unwrap();
        let text = cfg.to_toml().unwrap();
        assert_eq!(RunConfig::parse(&text).unwrap(), cfg);
        assert_eq!(RunConfig::parse(&text).unwrap().to_toml().unwrap(), text);
    }

    #[test]
    fn missing_keys_name_section_and_key() {
        let cases = [
            (
                "[model.student]\nbase_channels = 6\n[train]\nepochs = 1\nseed = 0\n",
                "model.student",
                "depth",
            ),
            (
                "[model.teacher]\ndepth = 2\n[train]\nepochs = 1\nseed = 0\n",
                "model.teacher",
                "base_channels",
            ),
            ("[train]\nepochs = 1\n", "train", "seed"),
            ("[distill]\n", "train", "epochs"),
        ];
        for (text, section, key) in cases {
            match RunConfig::parse(text) {
                Err(Error::MissingKey { section: s, key: k }) => {
                    assert_eq!((s.as_str(), k.as_str()), (section, key))
                }
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for text in [
            "[train]\nepochs = 1\nseed = 0\nbogus = 1\n",
            "[train]\nepochs = 1\nseed = 0\n[distill]\nlambda = 1.0\n",
            "[train]\nepochs = 1\nseed = 0\n[model.student]\ndepth = 2\nbase_channels = 6\nwidth = 3\n",
            "[train]\nepochs = 1\nseed = 0\n[model.assistant]\ndepth = 2\nbase_channels = 6\n",
            "[train]\nepochs = 1\nseed = 0\n[extra]\n",
        ] {
            let err = RunConfig::parse(text).unwrap_err();
            assert!(matches!(err, Error::Config(_)), "{text}: {err:?}");
        }
    }

    #[test]
    fn invalid_values_are_rejected() {
        for text in [
            "[train]\nepochs = 0\nseed = 0\n",
            "[train]\nepochs = 1\nseed = 0\nsegment_len = 8\n[model.student]\ndepth = 2\nbase_channels = 6\n",
            "[train]\nepochs = 1\nseed = 0\n[model.student]\ndepth = 2\nbase_channels = 6\nrole = \"teacher\"\n",
            "[train]\nepochs = 1\nseed = 0\n[model.student]\ndepth = 2\nbase_channels = 4\n",
            "[train]\nepochs = 1\nseed = 0\n[distill]\nlambda_at = -1.0\n",
            "[train]\nepochs = 1\nseed = 0\n[distill]\np_loss = 3\n",
        ] {
            assert!(RunConfig::parse(text).is_err(), "{text}");
        }
    }

    #[test]
    fn learning_rate_decays_per_epoch() {
        let t = TrainConfig::new(3, 0);
        assert_eq!(t.lr_at(0), 5e-4);
        assert!((t.lr_at(2) - 5e-4 * 0.999 * 0.999).abs() < 1e-18);
    }
}
