//! Latent motion index over videos and sliding cosine search.

mod index;

pub use index::{hits_to_json_lines, IndexEntry, MotionIndex, SearchHit, SearchResult, INDEX_KIND};

/// Localization accuracy quoted for the original encoder, in frames. It is
/// reported next to the latent stride and the analytic receptive field of
/// the built encoder, not reconciled with them.
pub const QUOTED_RECEPTIVE_FIELD: usize = 12;
