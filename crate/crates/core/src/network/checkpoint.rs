use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ArchConfig;
use super::model::ModelParams;
use crate::container::Container;
use crate::motiondata::NormStats;
use crate::tensorkit::Tensor;
use crate::{Error, Result};

pub const CHECKPOINT_KIND: &str = "checkpoint";
const STATE_PREFIX: &str = "state/";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Meta {
    config: ArchConfig,
    fingerprint: String,
    stats: NormStats,
    #[serde(default)]
    train_state: Option<serde_json::Value>,
}

/// Parameters plus the normalization statistics they were trained with.
/// `state` carries extra tensors (optimizer moments) and `train_state`
/// free-form resume metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams<f32>,
    pub stats: NormStats,
    pub train_state: Option<serde_json::Value>,
    pub state: BTreeMap<String, Tensor<f32>>,
}

impl Checkpoint {
    pub fn new(params: ModelParams<f32>, stats: NormStats) -> Self {
        Checkpoint {
            params,
            stats,
            train_state: None,
            state: BTreeMap::new(),
        }
    }

    pub fn to_container(&self) -> Result<Container> {
        let meta = Meta {
            config: self.params.config.clone(),
            fingerprint: self.params.config.fingerprint(),
            stats: self.stats.clone(),
            train_state: self.train_state.clone(),
        };
        let mut c = Container::new(CHECKPOINT_KIND, serde_json::to_value(meta)?);
        for (k, t) in &self.params.tensors {
            c.insert(k.clone(), t.shape().to_vec(), t.data().to_vec())?;
        }
        for (k, t) in &self.state {
            c.insert(format!("{STATE_PREFIX}{k}"), t.shape().to_vec(), t.data().to_vec())?;
        }
        Ok(c)
    }

    pub fn from_container(c: Container) -> Result<Self> {
        c.expect_kind(CHECKPOINT_KIND)?;
        let meta: Meta = serde_json::from_value(c.meta)?;
        meta.config.validate()?;
        if meta.fingerprint != meta.config.fingerprint() {
            return Err(Error::Format("architecture fingerprint mismatch".into()));
        }
        let stats = NormStats::new(meta.stats.mean, meta.stats.std, meta.stats.vel_std)?;
        if stats.joints() != meta.config.joints {
            return Err(Error::Format(format!(
                "statistics for {} joints, network for {}",
                stats.joints(),
                meta.config.joints
            )));
        }
        let mut params = BTreeMap::new();
        let mut state = BTreeMap::new();
        for (k, (shape, data)) in c.tensors {
            if data.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("checkpoint tensor `{k}`")));
            }
            if shape.is_empty() || shape.len() > 3 {
                return Err(Error::Format(format!("tensor `{k}` has rank {}", shape.len())));
            }
            let t = Tensor::new(&shape, data)?;
            match k.strip_prefix(STATE_PREFIX) {
                Some(s) => state.insert(s.to_string(), t),
                None => params.insert(k, t),
            };
        }
        Ok(Checkpoint {
            params: ModelParams::from_tensors(meta.config, params)?,
            stats,
            train_state: meta.train_state,
            state,
        })
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.to_container()?.to_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Self::from_container(Container::from_bytes(bytes)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_container()?.save(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_container(Container::load(path)?)
    }

    /// Loads and requires a specific architecture.
    pub fn load_for(path: &Path, config: &ArchConfig) -> Result<Self> {
        let c = Self::load(path)?;
        if &c.params.config != config {
            return Err(Error::Format("checkpoint architecture differs from the requested one".into()));
        }
        Ok(c)
    }
}
