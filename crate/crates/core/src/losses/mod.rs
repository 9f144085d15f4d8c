//! Training objectives: reconstruction, cross reconstruction, triplet and
//! end-effector velocity terms, and their weighted combination.

mod objective;
mod terms;
mod triplets;

pub use objective::{
    pair_objective, reconstruction_objective, total_loss, CrossTerm, LossComponents, LossWeights, ObjectiveContext,
    PairTensors, Side,
};
pub use terms::{
    end_effector_indices, foot_velocity_loss, mse, triplet_loss, DEFAULT_END_EFFECTORS, TRIPLET_MARGIN,
};
pub use triplets::{build_triplets, labels_distinct, Source, Space, TripletSpec, TRIPLET_PLAN};
