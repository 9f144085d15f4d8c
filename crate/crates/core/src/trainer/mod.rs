//! Pair sampling, attribute-consistent augmentation, joint-dropout noise,
//! unlabelled-clip mixing and the training loop with checkpoints.

mod config;
mod pairs;
mod train;

pub use config::{Preset, TrainConfig};
pub use pairs::{
    augment_pair, combination_key, inject_noise, sample_pairs, unlabeled_clips, AugmentedPair, Augmentation,
    TrainingPair,
};
pub use train::{
    checkpoint_config, validation_pairs, EpochReport, Trainer, ValidationReport, BEST_CHECKPOINT, LAST_CHECKPOINT, METRICS_FILE,
};
