use std::sync::Arc;

use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Joint hierarchy shared by every character in a dataset.
///
/// Joints are stored in topological order: the root is joint 0 and every
/// parent index is smaller than its child's.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TopologyDef", into = "TopologyDef")]
pub struct Topology {
    names: Vec<String>,
    parents: Vec<Option<usize>>,
    mirror: Vec<usize>,
    height_bones: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct TopologyDef {
    names: Vec<String>,
    parents: Vec<Option<usize>>,
}

impl TryFrom<TopologyDef> for Topology {
    type Error = Error;
    fn try_from(d: TopologyDef) -> Result<Self> {
        Topology::new(d.names, d.parents)
    }
}

impl From<Topology> for TopologyDef {
    fn from(t: Topology) -> Self {
        TopologyDef {
            names: t.names,
            parents: t.parents,
        }
    }
}

const STANDARD_15: [(&str, Option<&str>); 15] = [
    ("pelvis", None),
    ("neck", Some("pelvis")),
    ("head", Some("neck")),
    ("l_shoulder", Some("neck")),
    ("l_elbow", Some("l_shoulder")),
    ("l_wrist", Some("l_elbow")),
    ("r_shoulder", Some("neck")),
    ("r_elbow", Some("r_shoulder")),
    ("r_wrist", Some("r_elbow")),
    ("l_hip", Some("pelvis")),
    ("l_knee", Some("l_hip")),
    ("l_ankle", Some("l_knee")),
    ("r_hip", Some("pelvis")),
    ("r_knee", Some("r_hip")),
    ("r_ankle", Some("r_knee")),
];

impl Topology {
    pub fn new(names: Vec<String>, parents: Vec<Option<usize>>) -> Result<Self> {
        if names.is_empty() || names.len() != parents.len() {
            return Err(Error::Skeleton(format!(
                "{} names vs {} parents",
                names.len(),
                parents.len()
            )));
        }
        if parents[0].is_some() {
            return Err(Error::Skeleton("joint 0 must be the root".into()));
        }
        for (j, p) in parents.iter().enumerate().skip(1) {
            match p {
                Some(p) if *p < j => {}
                Some(p) => {
                    return Err(Error::Skeleton(format!(
                        "joint {j} has parent {p}; parents must precede children"
                    )))
                }
                None => return Err(Error::Skeleton(format!("second root at joint {j}"))),
            }
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(Error::Skeleton(format!("duplicate joint name `{n}`")));
            }
        }
        let index = |n: &str| names.iter().position(|x| x == n);
        let mirror = names
            .iter()
            .enumerate()
            .map(|(i, n)| {
                let partner = if let Some(rest) = n.strip_prefix("l_") {
                    index(&format!("r_{rest}"))
                } else if let Some(rest) = n.strip_prefix("r_") {
                    index(&format!("l_{rest}"))
                } else {
                    Some(i)
                };
                partner.ok_or_else(|| Error::Skeleton(format!("`{n}` has no mirror partner")))
            })
            .collect::<Result<Vec<_>>>()?;
        // leg (thigh + shin, averaged over sides), torso and neck
        let mut height_bones = Vec::new();
        for (name, w) in [
            ("l_knee", 0.5),
            ("l_ankle", 0.5),
            ("r_knee", 0.5),
            ("r_ankle", 0.5),
            ("neck", 1.0),
            ("head", 1.0),
        ] {
            let j = index(name)
                .ok_or_else(|| Error::Skeleton(format!("height bone `{name}` missing")))?;
            height_bones.push((j, w));
        }
        Ok(Topology {
            names,
            parents,
            mirror,
            height_bones,
        })
    }

    /// The default 15-joint body: pelvis, neck, head and left/right
    /// shoulder, elbow, wrist, hip, knee, ankle.
    pub fn standard() -> Self {
        Self::from_table(&STANDARD_15)
    }

    /// 17 joints: the standard body plus toes.
    pub fn with_toes() -> Self {
        let mut table = STANDARD_15.to_vec();
        table.push(("l_toe", Some("l_ankle")));
        table.push(("r_toe", Some("r_ankle")));
        Self::from_table(&table)
    }

    pub fn for_joint_count(joints: usize) -> Result<Self> {
        match joints {
            15 => Ok(Self::standard()),
            17 => Ok(Self::with_toes()),
            n => Err(Error::InvalidInput(format!(
                "no built-in topology with {n} joints (15 or 17)"
            ))),
        }
    }

    fn from_table(table: &[(&str, Option<&str>)]) -> Self {
        let names: Vec<String> = table.iter().map(|(n, _)| n.to_string()).collect();
        let parents = table
            .iter()
            .map(|(_, p)| p.map(|p| names.iter().position(|n| n == p).expect("parent listed")))
            .collect();
        Topology::new(names, parents).expect("built-in topology is valid")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parents
    }

    pub fn parent(&self, j: usize) -> Option<usize> {
        self.parents[j]
    }

    pub fn index(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownJoint(name.to_string()))
    }

    /// Left/right partner of every joint; unpaired joints map to themselves.
    pub fn mirror(&self) -> &[usize] {
        &self.mirror
    }

    /// `(bone end joint, weight)` pairs whose weighted bone lengths sum to
    /// the character height.
    pub fn height_bones(&self) -> &[(usize, f64)] {
        &self.height_bones
    }

    /// Joints without children.
    pub fn leaves(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&j| !self.parents.contains(&Some(j)))
            .collect()
    }
}

/// Limb-length multipliers relative to the canonical character.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Proportions {
    pub torso: f64,
    pub head: f64,
    pub arms: f64,
    pub legs: f64,
    pub shoulders: f64,
    pub hips: f64,
}

impl Proportions {
    pub const UNIT: Proportions = Proportions {
        torso: 1.0,
        head: 1.0,
        arms: 1.0,
        legs: 1.0,
        shoulders: 1.0,
        hips: 1.0,
    };

    /// Short-stature preset, deliberately outside the random range.
    pub const CHILD: Proportions = Proportions {
        torso: 0.62,
        head: 0.85,
        arms: 0.6,
        legs: 0.58,
        shoulders: 0.66,
        hips: 0.7,
    };

    pub fn uniform(f: f64) -> Self {
        Proportions {
            torso: f,
            head: f,
            arms: f,
            legs: f,
            shoulders: f,
            hips: f,
        }
    }

    pub fn random(rng: &mut impl Rng) -> Self {
        let mut draw = || rng.random_range(0.7..=1.4);
        Proportions {
            torso: draw(),
            head: draw(),
            arms: draw(),
            legs: draw(),
            shoulders: draw(),
            hips: draw(),
        }
    }
}

/// A character: topology plus rest-pose bone offsets (parent to child, in
/// the parent's rest frame; Y up, character facing +Z, its left along +X).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Skeleton {
    pub name: String,
    pub topology: Arc<Topology>,
    offsets: Vec<[f64; 3]>,
}

impl Skeleton {
    pub fn new(name: impl Into<String>, topology: Arc<Topology>, offsets: Vec<Vector3<f64>>) -> Result<Self> {
        if offsets.len() != topology.len() {
            return Err(Error::Skeleton(format!(
                "{} offsets for {} joints",
                offsets.len(),
                topology.len()
            )));
        }
        for j in 1..offsets.len() {
            let l = offsets[j].norm();
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::Skeleton(format!(
                    "bone to `{}` has length {l}",
                    topology.names()[j]
                )));
            }
        }
        Ok(Skeleton {
            name: name.into(),
            topology,
            offsets: offsets.iter().map(|v| [v.x, v.y, v.z]).collect(),
        })
    }

    /// Canonical adult character (height about 16 units).
    pub fn canonical(topology: Arc<Topology>) -> Result<Self> {
        Self::with_proportions("canonical", topology, &Proportions::UNIT)
    }

    pub fn with_proportions(name: impl Into<String>, topology: Arc<Topology>, p: &Proportions) -> Result<Self> {
        let offsets = topology
            .names()
            .iter()
            .map(|n| {
                let side = if n.starts_with("l_") { 1.0 } else { -1.0 };
                let v = match n.as_str() {
                    "pelvis" => Vector3::zeros(),
                    "neck" => Vector3::new(0.0, 5.2 * p.torso, 0.0),
                    "head" => Vector3::new(0.0, 2.2 * p.head, 0.2 * p.head),
                    "l_shoulder" | "r_shoulder" => Vector3::new(side * 1.8 * p.shoulders, -0.3 * p.torso, 0.0),
                    "l_elbow" | "r_elbow" => Vector3::new(0.0, -2.9 * p.arms, 0.0),
                    "l_wrist" | "r_wrist" => Vector3::new(0.0, -2.6 * p.arms, 0.0),
                    "l_hip" | "r_hip" => Vector3::new(side * 1.0 * p.hips, -0.4 * p.hips, 0.0),
                    "l_knee" | "r_knee" => Vector3::new(0.0, -4.4 * p.legs, 0.0),
                    "l_ankle" | "r_ankle" => Vector3::new(0.0, -4.2 * p.legs, 0.0),
                    "l_toe" | "r_toe" => Vector3::new(0.0, -0.5 * p.legs, 1.3 * p.legs),
                    other => return Err(Error::UnknownJoint(other.to_string())),
                };
                Ok(v)
            })
            .collect::<Result<Vec<_>>>()?;
        Skeleton::new(name, topology, offsets)
    }

    /// Same topology with every bone multiplied by `f`.
    pub fn scaled(&self, f: f64) -> Result<Self> {
        Skeleton::new(
            format!("{}x{f}", self.name),
            self.topology.clone(),
            self.offsets().iter().map(|o| o * f).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn offset(&self, j: usize) -> Vector3<f64> {
        let o = self.offsets[j];
        Vector3::new(o[0], o[1], o[2])
    }

    pub fn offsets(&self) -> Vec<Vector3<f64>> {
        (0..self.len()).map(|j| self.offset(j)).collect()
    }

    /// Length of the bone ending at each joint (0 for the root).
    pub fn bone_lengths(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.offset(j).norm()).collect()
    }

    /// Leg + torso + neck length.
    pub fn height(&self) -> f64 {
        let lengths = self.bone_lengths();
        self.topology
            .height_bones()
            .iter()
            .map(|&(j, w)| w * lengths[j])
            .sum()
    }

    pub fn same_topology(&self, other: &Skeleton) -> bool {
        self.topology == other.topology
    }
}

/// `count` characters: random proportions, with the short-stature preset at
/// index 1 whenever `count >= 2`.
pub fn skeleton_roster(topology: Arc<Topology>, count: usize, rng: &mut impl Rng) -> Result<Vec<Skeleton>> {
    (0..count)
        .map(|k| {
            let p = if k == 1 {
                Proportions::CHILD
            } else {
                Proportions::random(rng)
            };
            Skeleton::with_proportions(format!("character_{k}"), topology.clone(), &p)
        })
        .collect()
}
