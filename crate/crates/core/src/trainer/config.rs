use serde::{Deserialize, Serialize};

use crate::losses::{LossWeights, DEFAULT_END_EFFECTORS};
use crate::motiondata::WINDOW;
use crate::network::ArchConfig;
use crate::tensorkit::AmsGradConfig;
use crate::{Error, Result};

/// Loss-weight presets for the full model and its ablations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Full,
    /// Reconstruction and cross reconstruction only.
    CrossOnly,
    /// Reconstruction and triplets, no cross reconstruction.
    RecTriplet,
    /// Full model without the end-effector velocity term.
    NoFoot,
}

impl Preset {
    pub fn weights(self) -> LossWeights {
        let full = LossWeights::default();
        match self {
            Preset::Full => full,
            Preset::CrossOnly => LossWeights { triplet: 0.0, foot: 0.0, ..full },
            Preset::RecTriplet => LossWeights { cross: 0.0, foot: 0.0, ..full },
            Preset::NoFoot => LossWeights { foot: 0.0, ..full },
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::InvalidInput(format!("unknown preset `{s}`")))
    }
}

/// Everything that controls a training run. Defaults for batch size,
/// epochs, learning rate and patience are our own choices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Pairs per epoch; `None` draws as many pairs as there are training
    /// samples.
    pub pairs_per_epoch: Option<usize>,
    pub clip_lengths: Vec<usize>,
    pub scale_range: (f64, f64),
    /// Off by default: mirroring a rendered clip also mirrors its camera
    /// yaw, so a flipped input no longer matches its view label.
    pub flip_prob: f64,
    pub joint_dropout: f64,
    pub weights: LossWeights,
    pub optimizer: AmsGradConfig,
    pub seed: u64,
    pub unlabeled_per_epoch: usize,
    /// `last.ckpt` is written every this many epochs (and after the last).
    pub checkpoint_every: usize,
    /// Adds the four single-attribute swap terms to every pair.
    pub single_swaps: bool,
    /// Stop after this many epochs without a validation improvement.
    pub patience: Option<usize>,
    pub end_effectors: Vec<String>,
    /// `None` uses the default architecture for the dataset's joint count.
    pub arch: Option<ArchConfig>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 25,
            batch_size: 8,
            pairs_per_epoch: None,
            clip_lengths: vec![64, 56, 48, 40],
            scale_range: (0.5, 1.5),
            flip_prob: 0.0,
            joint_dropout: 0.05,
            weights: LossWeights::default(),
            optimizer: AmsGradConfig::default(),
            seed: 0,
            unlabeled_per_epoch: 16,
            checkpoint_every: 1,
            single_swaps: false,
            patience: None,
            end_effectors: DEFAULT_END_EFFECTORS.iter().map(|s| s.to_string()).collect(),
            arch: None,
        }
    }
}

impl TrainConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let c: TrainConfig = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if self.epochs == 0 || self.batch_size == 0 || self.checkpoint_every == 0 {
            return bad("epochs, batch_size and checkpoint_every must be positive".into());
        }
        if self.pairs_per_epoch == Some(0) || self.patience == Some(0) {
            return bad("pairs_per_epoch and patience must be positive".into());
        }
        if self.clip_lengths.is_empty() || self.clip_lengths.iter().any(|&l| l == 0 || l % 8 != 0 || l > WINDOW) {
            return bad(format!("clip lengths {:?} must be positive multiples of 8 up to {WINDOW}", self.clip_lengths));
        }
        let (lo, hi) = self.scale_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return bad(format!("scale range ({lo}, {hi})"));
        }
        for (name, p) in [("flip_prob", self.flip_prob), ("joint_dropout", self.joint_dropout)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} {p} outside [0, 1]"));
            }
        }
        let o = &self.optimizer;
        if !(o.lr > 0.0 && (0.0..1.0).contains(&o.beta1) && (0.0..1.0).contains(&o.beta2) && o.eps > 0.0) {
            return bad(format!("optimizer {o:?}"));
        }
        if self.end_effectors.is_empty() {
            return bad("no end effectors".into());
        }
        if let Some(a) = &self.arch {
            a.validate()?;
        }
        self.weights.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_parse() {
        let c = TrainConfig::default();
        c.validate().unwrap();
        assert_eq!(TrainConfig::parse("{}").unwrap(), c);
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(TrainConfig::parse(&text).unwrap(), c);
        let c = TrainConfig::parse(r#"{"epochs": 3, "weights": {"foot": 0.0}}"#).unwrap();
        assert_eq!((c.epochs, c.weights.foot, c.weights.triplet), (3, 0.0, 0.1));
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            r#"{"clip_lengths": [60]}"#,
            r#"{"clip_lengths": [72]}"#,
            r#"{"clip_lengths": []}"#,
            r#"{"flip_prob": 1.5}"#,
            r#"{"joint_dropout": -0.1}"#,
            r#"{"scale_range": [1.5, 0.5]}"#,
            r#"{"epochs": 0}"#,
            r#"{"bogus": 1}"#,
            r#"{"weights": {"rec": -1}}"#,
        ] {
            assert!(TrainConfig::parse(text).is_err(), "{text}");
        }
    }

    #[test]
    fn presets() {
        assert_eq!(Preset::Full.weights(), LossWeights::default());
        assert_eq!("rec-triplet".parse::<Preset>().unwrap().weights().cross, 0.0);
        assert_eq!("cross-only".parse::<Preset>().unwrap().weights().triplet, 0.0);
        assert_eq!("no-foot".parse::<Preset>().unwrap().weights().foot, 0.0);
        assert!("nope".parse::<Preset>().is_err());
    }
}
