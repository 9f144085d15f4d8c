//! Learning character-agnostic motion from 2D pose sequences.
//!
//! The crate decomposes windows of 2D joint positions into three latent codes
//! (a duration-dependent motion code and fixed-size skeleton and camera-view
//! codes), recombines them to retarget motion between characters and views,
//! and searches pose databases by latent motion similarity.
//!
//! Layout:
//!
//! * [`tensorkit`]: dense tensors, the layer set of the network with
//!   hand-written backward passes, and the AmsGrad optimizer.
//! * [`motiondata`]: skeletons, procedural 3D motions, weak-perspective
//!   projection, windowing, normalization and pose-file ingestion.
//! * [`network`]: the three encoders, the decoder and checkpoints.
//! * [`losses`]: cross reconstruction, reconstruction, triplet and
//!   foot-velocity objectives.
//! * [`trainer`]: pair sampling, augmentation and the training loop.
//! * [`evalkit`]: retargeting error, silhouette scores, baselines and reports.
//! * [`retrieval`]: latent motion index and cross-correlation search.

pub mod container;
pub mod error;
pub mod evalkit;
pub mod losses;
pub mod motiondata;
pub mod network;
pub mod retrieval;
pub mod tensorkit;
pub mod trainer;

pub use error::{Error, Result};
