//! Procedural motion families.
//!
//! Every family produces local joint rotations as smooth periodic functions
//! of a phase angle plus a root trajectory expressed for the canonical
//! character. Rotations never depend on the character, so applying the same
//! family and parameters to two skeletons yields "the same motion".

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use nalgebra::{UnitQuaternion, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::kinematics::JointRotations;
use super::skeleton::Topology;
use crate::{Error, Result};

pub const MIN_FRAMES: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MotionFamily {
    Walk,
    Run,
    Jump,
    Wave,
    Kick,
    Squat,
}

impl MotionFamily {
    pub const ALL: [MotionFamily; 6] = [
        MotionFamily::Walk,
        MotionFamily::Run,
        MotionFamily::Jump,
        MotionFamily::Wave,
        MotionFamily::Kick,
        MotionFamily::Squat,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MotionFamily::Walk => "walk",
            MotionFamily::Run => "run",
            MotionFamily::Jump => "jump",
            MotionFamily::Wave => "wave",
            MotionFamily::Kick => "kick",
            MotionFamily::Squat => "squat",
        }
    }
}

impl fmt::Display for MotionFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MotionFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        MotionFamily::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown motion family `{s}`")))
    }
}

/// Continuous parameters of a motion family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionParams {
    /// Multiplier on every joint angle; 0 gives the rest pose.
    pub amplitude: f64,
    /// Cycles per second.
    pub frequency: f64,
    /// Phase offset in radians.
    pub phase: f64,
    /// Root travel speed in canonical units per second.
    pub speed: f64,
    /// Family-specific variation in [0, 1] (side, arm usage, crouch depth).
    pub style: f64,
}

impl MotionParams {
    pub fn sample(family: MotionFamily, rng: &mut impl Rng) -> Self {
        let (freq, speed) = match family {
            MotionFamily::Walk => (rng.random_range(0.8..1.2), rng.random_range(9.0..15.0)),
            MotionFamily::Run => (rng.random_range(1.3..1.8), rng.random_range(22.0..32.0)),
            MotionFamily::Jump => (rng.random_range(0.7..1.1), rng.random_range(0.0..4.0)),
            MotionFamily::Wave => (rng.random_range(0.8..1.6), 0.0),
            MotionFamily::Kick => (rng.random_range(0.6..0.9), rng.random_range(0.0..2.0)),
            MotionFamily::Squat => (rng.random_range(0.5..0.8), 0.0),
        };
        MotionParams {
            amplitude: rng.random_range(0.75..1.15),
            frequency: freq,
            phase: rng.random_range(0.0..TAU),
            speed,
            style: rng.random(),
        }
    }
}

/// Family plus parameters: one entry of the motion set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionSpec {
    pub family: MotionFamily,
    pub params: MotionParams,
}

pub struct GeneratedMotion {
    pub rotations: JointRotations,
    pub root_trajectory: Vec<Vector3<f64>>,
}

fn rx(a: f64) -> UnitQuaternion<f64> {
    UnitQuaternion::from_axis_angle(&Vector3::x_axis(), a)
}

fn ry(a: f64) -> UnitQuaternion<f64> {
    UnitQuaternion::from_axis_angle(&Vector3::y_axis(), a)
}

fn rz(a: f64) -> UnitQuaternion<f64> {
    UnitQuaternion::from_axis_angle(&Vector3::z_axis(), a)
}

fn pos(v: f64) -> f64 {
    v.max(0.0)
}

/// Joint indices the families drive.
struct Rig {
    neck: usize,
    l_shoulder: usize,
    l_elbow: usize,
    r_shoulder: usize,
    r_elbow: usize,
    l_hip: usize,
    l_knee: usize,
    r_hip: usize,
    r_knee: usize,
}

impl Rig {
    fn new(t: &Topology) -> Result<Self> {
        Ok(Rig {
            neck: t.index("neck")?,
            l_shoulder: t.index("l_shoulder")?,
            l_elbow: t.index("l_elbow")?,
            r_shoulder: t.index("r_shoulder")?,
            r_elbow: t.index("r_elbow")?,
            l_hip: t.index("l_hip")?,
            l_knee: t.index("l_knee")?,
            r_hip: t.index("r_hip")?,
            r_knee: t.index("r_knee")?,
        })
    }
}

/// Pose of one frame: local rotations (identity where unset) and the root
/// offset relative to the travelled distance.
struct Pose {
    rot: Vec<UnitQuaternion<f64>>,
    root: Vector3<f64>,
}

// Sign conventions (rest pose limbs hang along -Y, character faces +Z):
// negative X-rotation swings a hanging limb forward, positive X-rotation bends
// a knee backward, positive Z-rotation raises a left arm sideways.
fn pose_at(family: MotionFamily, p: &MotionParams, phi: f64, rig: &Rig, joints: usize) -> Pose {
    let a = p.amplitude;
    let s = p.style;
    let mut rot = vec![UnitQuaternion::identity(); joints];
    let mut root = Vector3::zeros();
    match family {
        MotionFamily::Walk => {
            let swing = a * (0.35 + 0.15 * s);
            rot[rig.l_hip] = rx(-swing * phi.sin());
            rot[rig.r_hip] = rx(swing * phi.sin());
            rot[rig.l_knee] = rx(a * 0.55 * pos((phi - 0.6).sin()));
            rot[rig.r_knee] = rx(a * 0.55 * pos((phi + PI - 0.6).sin()));
            rot[rig.l_shoulder] = rz(a * 0.12) * rx(swing * 0.9 * phi.sin());
            rot[rig.r_shoulder] = rz(-a * 0.12) * rx(-swing * 0.9 * phi.sin());
            rot[rig.l_elbow] = rx(-a * 0.25 * (1.0 + phi.sin()));
            rot[rig.r_elbow] = rx(-a * 0.25 * (1.0 - phi.sin()));
            rot[0] = ry(a * 0.06 * phi.sin());
            root.y = a * 0.12 * (2.0 * phi).cos();
        }
        MotionFamily::Run => {
            let swing = a * 0.75;
            rot[rig.l_hip] = rx(-swing * phi.sin() - a * 0.2);
            rot[rig.r_hip] = rx(swing * phi.sin() - a * 0.2);
            rot[rig.l_knee] = rx(a * (0.5 + 0.7 * pos((phi - 0.4).sin())));
            rot[rig.r_knee] = rx(a * (0.5 + 0.7 * pos((phi + PI - 0.4).sin())));
            rot[rig.l_shoulder] = rz(a * 0.2) * rx(swing * 0.8 * phi.sin());
            rot[rig.r_shoulder] = rz(-a * 0.2) * rx(-swing * 0.8 * phi.sin());
            rot[rig.l_elbow] = rx(-a * (1.2 + 0.2 * s));
            rot[rig.r_elbow] = rx(-a * (1.2 + 0.2 * s));
            rot[rig.neck] = rx(a * 0.15);
            root.y = a * 0.35 * (2.0 * phi).sin().abs() - a * 0.3;
        }
        MotionFamily::Jump => {
            let air = pos(phi.sin());
            let crouch = pos(-phi.sin());
            rot[rig.l_hip] = rx(-a * 0.9 * crouch);
            rot[rig.r_hip] = rx(-a * 0.9 * crouch);
            rot[rig.l_knee] = rx(a * 1.3 * crouch + a * 0.3 * air);
            rot[rig.r_knee] = rx(a * 1.3 * crouch + a * 0.3 * air);
            let raise = a * (2.2 + 0.6 * s) * air - a * 0.5 * crouch;
            rot[rig.l_shoulder] = rz(a * 0.3 * air) * rx(-raise);
            rot[rig.r_shoulder] = rz(-a * 0.3 * air) * rx(-raise);
            rot[rig.l_elbow] = rx(-a * 0.4 * crouch);
            rot[rig.r_elbow] = rx(-a * 0.4 * crouch);
            root.y = a * (3.5 * air - 2.2 * crouch);
        }
        MotionFamily::Wave => {
            let (sh, el, other_sh, sign) = if s < 0.5 {
                (rig.l_shoulder, rig.l_elbow, rig.r_shoulder, 1.0)
            } else {
                (rig.r_shoulder, rig.r_elbow, rig.l_shoulder, -1.0)
            };
            rot[sh] = rz(sign * a * (2.3 + 0.25 * phi.sin()));
            rot[el] = rz(sign * a * (0.5 + 0.55 * (2.0 * phi).sin()));
            rot[other_sh] = rx(a * 0.15 * phi.sin());
            rot[rig.neck] = rz(-sign * a * 0.12 * phi.sin());
            root.x = sign * a * 0.15 * phi.sin();
        }
        MotionFamily::Kick => {
            let (hip, knee, arm, sign) = if s < 0.5 {
                (rig.r_hip, rig.r_knee, rig.l_shoulder, -1.0)
            } else {
                (rig.l_hip, rig.l_knee, rig.r_shoulder, 1.0)
            };
            let kick = pos(phi.sin()).powi(2);
            let chamber = pos(-phi.cos()) * pos(phi.sin());
            rot[hip] = rx(-a * 1.5 * kick);
            rot[knee] = rx(a * 1.4 * chamber);
            rot[arm] = rz(sign * a * 0.2) * rx(-a * 1.1 * kick);
            rot[rig.neck] = rx(-a * 0.25 * kick);
            rot[0] = ry(sign * a * 0.1 * kick);
        }
        MotionFamily::Squat => {
            let depth = a * (0.7 + 0.5 * s) * (1.0 - phi.cos()) * 0.5;
            rot[rig.l_hip] = rx(-1.6 * depth);
            rot[rig.r_hip] = rx(-1.6 * depth);
            rot[rig.l_knee] = rx(2.0 * depth);
            rot[rig.r_knee] = rx(2.0 * depth);
            rot[rig.l_shoulder] = rx(-1.6 * depth);
            rot[rig.r_shoulder] = rx(-1.6 * depth);
            rot[rig.neck] = rx(0.2 * depth);
            root.y = -4.5 * depth;
        }
    }
    Pose { rot, root }
}

/// Rotation curves and canonical-character root trajectory for `frames`
/// frames at `fps`.
pub fn generate_motion(
    topology: &Topology,
    spec: &MotionSpec,
    frames: usize,
    fps: f64,
) -> Result<GeneratedMotion> {
    if frames < MIN_FRAMES {
        return Err(Error::TooShort {
            frames,
            required: MIN_FRAMES,
        });
    }
    if !(fps > 0.0) {
        return Err(Error::InvalidInput(format!("fps {fps}")));
    }
    let rig = Rig::new(topology)?;
    let joints = topology.len();
    let p = &spec.params;
    let mut rotations = JointRotations::identity(frames, joints);
    let mut root_trajectory = Vec::with_capacity(frames);
    for t in 0..frames {
        let time = t as f64 / fps;
        let phi = TAU * p.frequency * time + p.phase;
        let pose = pose_at(spec.family, p, phi, &rig, joints);
        for (j, q) in pose.rot.into_iter().enumerate() {
            rotations.set(t, j, q);
        }
        root_trajectory.push(pose.root + Vector3::new(0.0, 0.0, p.speed * time));
    }
    Ok(GeneratedMotion {
        rotations,
        root_trajectory,
    })
}
