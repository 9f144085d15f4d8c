//! Retargeting error, silhouette scores, 2D and 3D baselines, whole-sequence
//! inference and the comparison report.

mod baselines;
mod inference;
mod metrics;
mod report;

pub use baselines::{anchor_root, baseline3d, fk2d_baseline, mean_height_2d, mean_limb_lengths, Baseline3dMode};
pub use inference::{decode_sequence, encode_sequence, encoding_window, retarget_sequence, sequence_windows, SequenceCodes};
pub use metrics::{mean_silhouette, retarget_mse, Silhouette};
pub use report::{
    baseline3d_mse, evaluate, evaluation_tasks, export_latents, fk2d_mse, latent_silhouettes, latent_vector, network_mse,
    Method, Models, Report, ReportRow, RetargetTask,
};
