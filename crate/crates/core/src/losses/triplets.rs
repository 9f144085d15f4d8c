use serde::{Deserialize, Serialize};

use crate::motiondata::Labels;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    Motion,
    Skeleton,
    View,
}

impl Space {
    pub const ALL: [Space; 3] = [Space::Motion, Space::Skeleton, Space::View];

    pub fn label(self, l: &Labels) -> usize {
        match self {
            Space::Motion => l.motion,
            Space::Skeleton => l.skeleton,
            Space::View => l.view,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Space::Motion => "motion",
            Space::Skeleton => "skeleton",
            Space::View => "view",
        }
    }
}

impl std::str::FromStr for Space {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Space::ALL
            .into_iter()
            .find(|sp| sp.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown latent space `{s}`")))
    }
}

/// The four sequences of a pair: the two inputs and the two cross ground
/// truths (`AB` = a's motion with b's statics).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    A,
    B,
    AB,
    BA,
}

impl Source {
    pub fn labels(self, a: &Labels, b: &Labels) -> Labels {
        match self {
            Source::A => *a,
            Source::B => *b,
            Source::AB => Labels { motion: a.motion, skeleton: b.skeleton, view: b.view },
            Source::BA => Labels { motion: b.motion, skeleton: a.skeleton, view: a.view },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TripletSpec {
    pub space: Space,
    pub anchor: Source,
    pub positive: Source,
    pub negative: Source,
}

const fn spec(space: Space, anchor: Source, positive: Source, negative: Source) -> TripletSpec {
    TripletSpec { space, anchor, positive, negative }
}

/// Two triplets per latent space, each anchored on a cross ground truth.
pub const TRIPLET_PLAN: [TripletSpec; 6] = [
    spec(Space::Motion, Source::AB, Source::A, Source::B),
    spec(Space::Motion, Source::BA, Source::B, Source::A),
    spec(Space::Skeleton, Source::AB, Source::B, Source::A),
    spec(Space::Skeleton, Source::BA, Source::A, Source::B),
    spec(Space::View, Source::AB, Source::B, Source::A),
    spec(Space::View, Source::BA, Source::A, Source::B),
];

pub fn labels_distinct(a: &Labels, b: &Labels) -> bool {
    a.motion != b.motion && a.skeleton != b.skeleton && a.view != b.view
}

/// The plan instantiated on concrete labels: `(space, anchor, positive,
/// negative)`. Fails unless the pair differs in all three labels.
pub fn build_triplets(a: &Labels, b: &Labels) -> Result<Vec<(Space, Labels, Labels, Labels)>> {
    if !labels_distinct(a, b) {
        return Err(Error::InvalidInput(format!("pair {a:?} / {b:?} shares a label")));
    }
    Ok(TRIPLET_PLAN
        .iter()
        .map(|t| (t.space, t.anchor.labels(a, b), t.positive.labels(a, b), t.negative.labels(a, b)))
        .collect())
}
