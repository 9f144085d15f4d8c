use std::path::Path;
use std::time::Instant;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::pairs::{augment_pair, combination_key, inject_noise, sample_pairs, Augmentation, TrainingPair};
use crate::evalkit::{evaluation_tasks, latent_silhouettes, network_mse, RetargetTask};
use crate::losses::{
    end_effector_indices, labels_distinct, pair_objective, reconstruction_objective, CrossTerm, LossComponents,
    ObjectiveContext, PairTensors, Side,
};
use crate::motiondata::{normalize, Dataset, Sample2D, SampleKey};
use crate::network::{ArchConfig, Checkpoint, Gradients, ModelParams};
use crate::tensorkit::{AmsGradState, Tensor};
use crate::{Error, Result};

pub const BEST_CHECKPOINT: &str = "best.ckpt";
pub const LAST_CHECKPOINT: &str = "last.ckpt";
pub const METRICS_FILE: &str = "metrics.csv";

const SINGLE_SWAPS: [(Side, Side, Side); 4] = [
    (Side::A, Side::B, Side::A),
    (Side::A, Side::A, Side::B),
    (Side::B, Side::A, Side::B),
    (Side::B, Side::B, Side::A),
];
const VALIDATION_SEED: u64 = 0x7a11d;

/// Held-out measurements after an epoch (or at initialization).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub components: LossComponents,
    pub total: f64,
    /// Motion, skeleton and view silhouettes of validation latents.
    pub silhouettes: [f64; 3],
    pub retarget_mse: f64,
}

impl ValidationReport {
    pub fn cross(&self) -> f64 {
        self.components.cross
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochReport {
    pub epoch: usize,
    pub train: LossComponents,
    pub train_total: f64,
    /// Mean reconstruction loss on unlabelled clips, if any were used.
    pub unlabeled_rec: Option<f64>,
    pub val: ValidationReport,
    pub seconds: f64,
}

#[derive(Serialize)]
struct MetricsRow {
    epoch: usize,
    train_rec: Option<f64>,
    train_cross: Option<f64>,
    train_triplet_motion: Option<f64>,
    train_triplet_skeleton: Option<f64>,
    train_triplet_view: Option<f64>,
    train_foot: Option<f64>,
    train_total: Option<f64>,
    unlabeled_rec: Option<f64>,
    val_rec: f64,
    val_cross: f64,
    val_triplet_motion: f64,
    val_triplet_skeleton: f64,
    val_triplet_view: f64,
    val_foot: f64,
    val_total: f64,
    silhouette_motion: f64,
    silhouette_skeleton: f64,
    silhouette_view: f64,
    val_retarget_mse: f64,
    seconds: Option<f64>,
}

fn metrics_row(epoch: usize, train: Option<&EpochReport>, val: &ValidationReport) -> MetricsRow {
    let t = train.map(|r| r.train);
    let v = &val.components;
    MetricsRow {
        epoch,
        train_rec: t.map(|c| c.rec),
        train_cross: t.map(|c| c.cross),
        train_triplet_motion: t.map(|c| c.triplet_motion),
        train_triplet_skeleton: t.map(|c| c.triplet_skeleton),
        train_triplet_view: t.map(|c| c.triplet_view),
        train_foot: t.map(|c| c.foot),
        train_total: train.map(|r| r.train_total),
        unlabeled_rec: train.and_then(|r| r.unlabeled_rec),
        val_rec: v.rec,
        val_cross: v.cross,
        val_triplet_motion: v.triplet_motion,
        val_triplet_skeleton: v.triplet_skeleton,
        val_triplet_view: v.triplet_view,
        val_foot: v.foot,
        val_total: val.total,
        silhouette_motion: val.silhouettes[0],
        silhouette_skeleton: val.silhouettes[1],
        silhouette_view: val.silhouettes[2],
        val_retarget_mse: val.retarget_mse,
        seconds: train.map(|r| r.seconds),
    }
}

/// Resume metadata stored in `last.ckpt`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainState {
    config: TrainConfig,
    epoch: usize,
    optimizer_steps: u64,
    best: Option<(usize, f64)>,
    since_best: usize,
    initial: ValidationReport,
    reports: Vec<EpochReport>,
}

impl TrainState {
    fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let v = ckpt.train_state.clone().ok_or_else(|| Error::Format("checkpoint has no training state".into()))?;
        Ok(serde_json::from_value(v)?)
    }
}

/// The configuration a resumable checkpoint was trained with.
pub fn checkpoint_config(ckpt: &Checkpoint) -> Result<TrainConfig> {
    Ok(TrainState::from_checkpoint(ckpt)?.config)
}

/// Validation pairs: every validation window with a partner that differs in
/// all labels, drawn once with a fixed seed.
pub fn validation_pairs(ds: &Dataset) -> Result<Vec<TrainingPair>> {
    let keys = ds.val_keys();
    let mut rng = ChaCha8Rng::seed_from_u64(VALIDATION_SEED);
    keys.iter()
        .map(|a| {
            let partners: Vec<&SampleKey> = keys.iter().filter(|k| labels_distinct(&a.labels, &k.labels)).collect();
            let b = partners
                .choose(&mut rng)
                .ok_or_else(|| Error::InvalidInput("validation split too small for cross pairs".into()))?;
            TrainingPair::new(*a, **b)
        })
        .collect()
}

fn tensor_of(s: &Sample2D, ds: &Dataset) -> Result<Tensor<f32>> {
    Ok(normalize(s, &ds.stats)?.data.cast())
}

/// Owns the model, optimizer and bookkeeping of one run.
pub struct Trainer<'a> {
    ds: &'a Dataset,
    unlabeled: &'a [Sample2D],
    pub config: TrainConfig,
    pub params: ModelParams<f32>,
    optimizer: AmsGradState<f32>,
    end_effectors: Vec<usize>,
    train_keys: Vec<SampleKey>,
    val_pairs: Vec<TrainingPair>,
    tasks: Vec<RetargetTask>,
    /// Completed epochs.
    pub epoch: usize,
    best: Option<(usize, f64)>,
    since_best: usize,
    pub initial: ValidationReport,
    pub reports: Vec<EpochReport>,
}

impl<'a> Trainer<'a> {
    pub fn new(ds: &'a Dataset, unlabeled: &'a [Sample2D], config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let arch = config.arch.clone().unwrap_or_else(|| ArchConfig::for_joints(ds.topology.len()));
        if arch.joints != ds.topology.len() {
            return Err(Error::Shape(format!("architecture for {} joints, dataset has {}", arch.joints, ds.topology.len())));
        }
        let params = ModelParams::init(&arch, &mut ChaCha8Rng::seed_from_u64(config.seed))?;
        let optimizer = AmsGradState::new(config.optimizer);
        let mut t = Self::assemble(ds, unlabeled, config, params, optimizer)?;
        t.initial = t.validate()?;
        Ok(t)
    }

    fn assemble(
        ds: &'a Dataset,
        unlabeled: &'a [Sample2D],
        config: TrainConfig,
        params: ModelParams<f32>,
        optimizer: AmsGradState<f32>,
    ) -> Result<Self> {
        if unlabeled.iter().any(|s| s.joints() != ds.topology.len() || s.frames() < ds.spec.window) {
            return Err(Error::Shape(format!("unlabelled clips need {} joints and {} frames", ds.topology.len(), ds.spec.window)));
        }
        let end_effectors = end_effector_indices(&ds.topology, &config.end_effectors)?;
        let train_keys = ds.train_keys();
        sample_pairs(&train_keys, 1, &mut ChaCha8Rng::seed_from_u64(0))?;
        let zero = ValidationReport { components: LossComponents::default(), total: 0.0, silhouettes: [0.0; 3], retarget_mse: 0.0 };
        Ok(Trainer {
            ds,
            unlabeled,
            config,
            params,
            optimizer,
            end_effectors,
            train_keys,
            val_pairs: validation_pairs(ds)?,
            tasks: evaluation_tasks(ds),
            epoch: 0,
            best: None,
            since_best: 0,
            initial: zero,
            reports: Vec::new(),
        })
    }

    /// Continues a run from `last.ckpt`. `config` may extend `epochs` (or
    /// change `patience`) but must otherwise match the stored one.
    pub fn resume(ds: &'a Dataset, unlabeled: &'a [Sample2D], config: TrainConfig, ckpt: Checkpoint) -> Result<Self> {
        config.validate()?;
        let state = TrainState::from_checkpoint(&ckpt)?;
        let comparable = TrainConfig { epochs: state.config.epochs, patience: state.config.patience, ..config.clone() };
        if comparable != state.config {
            return Err(Error::InvalidInput("training config differs from the checkpoint's".into()));
        }
        if ckpt.stats != ds.stats {
            return Err(Error::InvalidInput("checkpoint was trained on different normalization statistics".into()));
        }
        let optimizer = AmsGradState::import(config.optimizer, state.optimizer_steps, &ckpt.state)?;
        let mut t = Self::assemble(ds, unlabeled, config, ckpt.params, optimizer)?;
        t.epoch = state.epoch;
        t.best = state.best;
        t.since_best = state.since_best;
        t.initial = state.initial;
        t.reports = state.reports;
        Ok(t)
    }

    fn context(&self) -> ObjectiveContext<'_> {
        ObjectiveContext { stats: &self.ds.stats, end_effectors: &self.end_effectors, weights: self.config.weights }
    }

    fn pair_tensors(&self, pair: &TrainingPair, aug: &Augmentation, noise: Option<&mut ChaCha8Rng>) -> Result<PairTensors<f32>> {
        let ds = self.ds;
        let s = augment_pair(ds, pair, aug)?;
        let (a, b) = (tensor_of(&s.a, ds)?, tensor_of(&s.b, ds)?);
        let (a_in, b_in) = match noise {
            Some(rng) => {
                let j = ds.topology.len();
                let p = self.config.joint_dropout;
                (inject_noise(&a, j, p, rng)?, inject_noise(&b, j, p, rng)?)
            }
            None => (a.clone(), b.clone()),
        };
        let mut extra = Vec::new();
        if self.config.single_swaps {
            let mirror = ds.topology.mirror();
            for (m, k, v) in SINGLE_SWAPS {
                let key = combination_key(&pair.a, &pair.b, m, k, v);
                let target = tensor_of(&aug.apply(ds.get(&key)?, m, k, mirror)?, ds)?;
                extra.push(CrossTerm { motion: m, skeleton: k, view: v, target });
            }
        }
        Ok(PairTensors { a_in, b_in, a, b, gt_ab: tensor_of(&s.gt_ab, ds)?, gt_ba: tensor_of(&s.gt_ba, ds)?, extra })
    }

    fn step(&mut self, grads: Gradients<f32>, count: usize, what: &str) -> Result<()> {
        let mut grads = grads;
        grads.scale(1.0 / count as f32);
        if !grads.norm().is_finite() {
            return Err(Error::NonFinite(format!("gradient in epoch {} ({what})", self.epoch + 1)));
        }
        self.optimizer.step(&mut self.params.tensors, &grads.map)?;
        self.params.ensure_finite()
    }

    /// Loss components on the validation pairs, silhouettes and retargeting
    /// error, with dropout and noise off.
    pub fn validate(&self) -> Result<ValidationReport> {
        let ctx = self.context();
        let identity = Augmentation::identity(self.ds.spec.window);
        let mut sum = LossComponents::default();
        for pair in &self.val_pairs {
            let t = self.pair_tensors(pair, &identity, None)?;
            let c = pair_objective::<f32, ChaCha8Rng>(&self.params, &t, &ctx, None, None)?;
            sum.add_scaled(&c, 1.0 / self.val_pairs.len() as f64);
        }
        let sil = latent_silhouettes(&self.params, &self.ds.stats, self.ds, &self.ds.val_keys())?;
        let report = ValidationReport {
            components: sum,
            total: sum.total(&self.config.weights),
            silhouettes: sil.map(|s| s.mean),
            retarget_mse: network_mse(&self.params, &self.ds.stats, self.ds, &self.tasks)?,
        };
        if !(sum.is_finite() && report.retarget_mse.is_finite()) {
            return Err(Error::NonFinite(format!("validation loss after epoch {}", self.epoch)));
        }
        Ok(report)
    }

    /// One pass over the paired data followed by the unlabelled clips.
    pub fn run_epoch(&mut self) -> Result<EpochReport> {
        let start = Instant::now();
        let epoch = self.epoch + 1;
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(epoch as u64);
        let count = self.config.pairs_per_epoch.unwrap_or(self.train_keys.len());
        let pairs = sample_pairs(&self.train_keys, count, &mut rng)?;
        let window = self.ds.spec.window;
        let mut train = LossComponents::default();
        for batch in pairs.chunks(self.config.batch_size) {
            let len = *self.config.clip_lengths.choose(&mut rng).expect("validated non-empty");
            let mut grads = Gradients::new();
            for pair in batch {
                let aug = Augmentation::draw(len, window, self.config.scale_range, self.config.flip_prob, &mut rng);
                let t = self.pair_tensors(pair, &aug, Some(&mut rng))?;
                let c = pair_objective(&self.params, &t, &self.context(), Some(&mut rng), Some(&mut grads))?;
                if !c.is_finite() {
                    return Err(Error::NonFinite(format!("training loss in epoch {epoch}: {c:?}")));
                }
                train.add_scaled(&c, 1.0 / pairs.len() as f64);
            }
            self.step(grads, batch.len(), "paired batch")?;
        }
        let unlabeled_rec = self.unlabeled_pass(&mut rng)?;
        let val = self.validate()?;
        self.epoch = epoch;
        let report = EpochReport {
            epoch,
            train,
            train_total: train.total(&self.config.weights),
            unlabeled_rec,
            val,
            seconds: start.elapsed().as_secs_f64(),
        };
        if self.best.is_none_or(|(_, b)| val.cross() < b) {
            self.best = Some((epoch, val.cross()));
            self.since_best = 0;
        } else {
            self.since_best += 1;
        }
        self.reports.push(report);
        Ok(report)
    }

    fn unlabeled_pass(&mut self, rng: &mut ChaCha8Rng) -> Result<Option<f64>> {
        let n = self.config.unlabeled_per_epoch;
        if n == 0 || self.unlabeled.is_empty() {
            return Ok(None);
        }
        let mirror = self.ds.topology.mirror();
        let mut total = 0.0;
        let mut left = n;
        while left > 0 {
            let size = left.min(self.config.batch_size);
            left -= size;
            let len = *self.config.clip_lengths.choose(rng).expect("validated non-empty");
            let mut grads = Gradients::new();
            for _ in 0..size {
                let clip = self.unlabeled.choose(rng).expect("non-empty");
                let aug = Augmentation::draw(len, clip.frames().min(self.ds.spec.window), self.config.scale_range, self.config.flip_prob, rng);
                let s = aug.apply(clip, Side::A, Side::A, mirror)?;
                let target = tensor_of(&s, self.ds)?;
                let x = inject_noise(&target, self.ds.topology.len(), self.config.joint_dropout, rng)?;
                let l = reconstruction_objective(&self.params, &x, &target, 1.0, Some(&mut *rng), Some(&mut grads))?;
                if !l.is_finite() {
                    return Err(Error::NonFinite(format!("unlabelled reconstruction loss in epoch {}", self.epoch + 1)));
                }
                total += l / n as f64;
            }
            self.step(grads, size, "unlabelled batch")?;
        }
        Ok(Some(total))
    }

    pub fn best(&self) -> Option<(usize, f64)> {
        self.best
    }

    pub fn should_stop(&self) -> bool {
        self.epoch >= self.config.epochs || self.config.patience.is_some_and(|p| self.since_best >= p)
    }

    /// Parameters, statistics, optimizer moments and resume metadata.
    pub fn checkpoint(&self) -> Result<Checkpoint> {
        let state = TrainState {
            config: self.config.clone(),
            epoch: self.epoch,
            optimizer_steps: self.optimizer.steps(),
            best: self.best,
            since_best: self.since_best,
            initial: self.initial,
            reports: self.reports.clone(),
        };
        let mut c = Checkpoint::new(self.params.clone(), self.ds.stats.clone());
        c.train_state = Some(serde_json::to_value(state)?);
        c.state = self.optimizer.export();
        Ok(c)
    }

    pub fn write_metrics(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.serialize(metrics_row(0, None, &self.initial))?;
        for r in &self.reports {
            w.serialize(metrics_row(r.epoch, Some(r), &r.val))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Trains until the epoch budget or patience runs out. With `out_dir`,
    /// writes `best.ckpt` on every validation improvement, `last.ckpt` on
    /// the checkpoint cadence and `metrics.csv` after every epoch.
    pub fn run(&mut self, out_dir: Option<&Path>, mut on_epoch: impl FnMut(&EpochReport)) -> Result<()> {
        let path = |name: &str| out_dir.map(|d| d.join(name));
        if let Some(d) = out_dir {
            std::fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
        }
        while !self.should_stop() {
            let report = self.run_epoch()?;
            on_epoch(&report);
            if let Some(p) = path(BEST_CHECKPOINT) {
                if self.best.is_some_and(|(e, _)| e == report.epoch) {
                    self.checkpoint()?.save(&p)?;
                }
            }
            if let Some(p) = path(LAST_CHECKPOINT) {
                if report.epoch % self.config.checkpoint_every == 0 || self.should_stop() {
                    self.checkpoint()?.save(&p)?;
                }
            }
            if let Some(p) = path(METRICS_FILE) {
                self.write_metrics(&p)?;
            }
        }
        Ok(())
    }
}
