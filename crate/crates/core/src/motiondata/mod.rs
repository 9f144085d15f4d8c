//! Synthetic motion corpus: parametric skeletons, procedural motions, ground
//! truth retargeting, weak-perspective projection, windowing, normalization
//! and pose-file ingestion.

mod camera;
mod dataset;
mod generator;
mod kinematics;
mod normalize;
mod posefile;
mod sample;
mod skeleton;

pub use camera::{project, project_in_frame, CameraView};
pub use dataset::{Dataset, DatasetManifest, DatasetSpec, SampleKey, Split, MANIFEST_FILE, PAYLOAD_FILE};
pub use generator::{generate_motion, GeneratedMotion, MotionFamily, MotionParams, MotionSpec, MIN_FRAMES};
pub use kinematics::{
    character_frame, forward_kinematics, retarget_ground_truth, retarget_with_velocity_scale, ClipLabels,
    JointRotations, MotionClip3D,
};
pub use normalize::{denormalize, denormalize_local, normalize, root_velocity, NormStats, NormalizedSample, RELATIVE_STD_FLOOR, STD_FLOOR};
pub use posefile::{export_pose_json, ingest_pose_file, parse_pose_json, PoseFile};
pub use sample::{window, Labels, Sample2D, WINDOW};
pub use skeleton::{skeleton_roster, Proportions, Skeleton, Topology};
