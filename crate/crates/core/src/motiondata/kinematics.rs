use std::sync::Arc;

use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::skeleton::{Skeleton, Topology};
use crate::{Error, Result};

/// Per-frame local joint rotations, `frames x joints`, row-major. The root
/// rotation orients the whole body.
#[derive(Clone, Debug, PartialEq)]
pub struct JointRotations {
    joints: usize,
    data: Vec<UnitQuaternion<f64>>,
}

impl JointRotations {
    pub fn identity(frames: usize, joints: usize) -> Self {
        JointRotations {
            joints,
            data: vec![UnitQuaternion::identity(); frames * joints],
        }
    }

    pub fn frames(&self) -> usize {
        self.data.len().checked_div(self.joints).unwrap_or(0)
    }

    pub fn joints(&self) -> usize {
        self.joints
    }

    pub fn get(&self, frame: usize, joint: usize) -> &UnitQuaternion<f64> {
        &self.data[frame * self.joints + joint]
    }

    pub fn set(&mut self, frame: usize, joint: usize, q: UnitQuaternion<f64>) {
        self.data[frame * self.joints + joint] = q;
    }

    pub fn frame(&self, frame: usize) -> &[UnitQuaternion<f64>] {
        &self.data[frame * self.joints..(frame + 1) * self.joints]
    }

    /// Largest rotation angle between corresponding entries.
    pub fn max_angle_to(&self, other: &JointRotations) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.angle_to(b))
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClipLabels {
    pub motion: usize,
    pub skeleton: usize,
}

/// 3D joint positions over time (`frames x joints`).
#[derive(Clone, Debug, PartialEq)]
pub struct MotionClip3D {
    pub topology: Arc<Topology>,
    pub fps: f64,
    pub labels: Option<ClipLabels>,
    positions: Vec<Vector3<f64>>,
}

impl MotionClip3D {
    pub fn new(topology: Arc<Topology>, fps: f64, positions: Vec<Vector3<f64>>) -> Result<Self> {
        if topology.is_empty() || positions.len() % topology.len() != 0 {
            return Err(Error::Shape(format!(
                "{} positions for {} joints",
                positions.len(),
                topology.len()
            )));
        }
        Ok(MotionClip3D {
            topology,
            fps,
            labels: None,
            positions,
        })
    }

    pub fn frames(&self) -> usize {
        self.positions.len() / self.joints()
    }

    pub fn joints(&self) -> usize {
        self.topology.len()
    }

    pub fn position(&self, frame: usize, joint: usize) -> Vector3<f64> {
        self.positions[frame * self.joints() + joint]
    }

    pub fn frame(&self, frame: usize) -> &[Vector3<f64>] {
        let j = self.joints();
        &self.positions[frame * j..(frame + 1) * j]
    }

    pub fn positions(&self) -> &[Vector3<f64>] {
        &self.positions
    }

    pub fn root_trajectory(&self) -> Vec<Vector3<f64>> {
        (0..self.frames()).map(|t| self.position(t, 0)).collect()
    }

    /// Applies a rigid transform `p -> r * p` to every position.
    pub fn rotated(&self, r: &Matrix3<f64>) -> Self {
        MotionClip3D {
            positions: self.positions.iter().map(|p| r * p).collect(),
            ..self.clone()
        }
    }

    pub fn bone_lengths(&self, frame: usize) -> Vec<f64> {
        (0..self.joints())
            .map(|j| match self.topology.parent(j) {
                None => 0.0,
                Some(p) => (self.position(frame, j) - self.position(frame, p)).norm(),
            })
            .collect()
    }
}

/// Child position = parent position + parent's global rotation applied to the
/// rest-pose bone offset; a joint's own rotation moves only its descendants.
pub fn forward_kinematics(
    skeleton: &Skeleton,
    rotations: &JointRotations,
    root_trajectory: &[Vector3<f64>],
    fps: f64,
) -> Result<MotionClip3D> {
    let joints = skeleton.len();
    if rotations.joints() != joints {
        return Err(Error::Shape(format!(
            "{} rotation tracks for {joints} joints",
            rotations.joints()
        )));
    }
    let frames = rotations.frames();
    if root_trajectory.len() != frames {
        return Err(Error::Shape(format!(
            "{} root positions for {frames} frames",
            root_trajectory.len()
        )));
    }
    let topo = &skeleton.topology;
    let offsets = skeleton.offsets();
    let mut positions = Vec::with_capacity(frames * joints);
    let mut global = vec![UnitQuaternion::identity(); joints];
    for t in 0..frames {
        let base = positions.len();
        for j in 0..joints {
            let local = rotations.get(t, j);
            match topo.parent(j) {
                None => {
                    global[j] = *local;
                    positions.push(root_trajectory[t]);
                }
                Some(p) => {
                    let pos = positions[base + p] + global[p] * offsets[j];
                    global[j] = global[p] * local;
                    positions.push(pos);
                }
            }
        }
    }
    MotionClip3D::new(topo.clone(), fps, positions)
}

/// Re-targets a rotation track onto `target`: rotations copied, the root
/// start position and per-frame root displacement multiplied by
/// `velocity_scale` relative to the start scaled by the height ratio.
pub fn retarget_with_velocity_scale(
    rotations: &JointRotations,
    root_trajectory: &[Vector3<f64>],
    source: &Skeleton,
    target: &Skeleton,
    velocity_scale: f64,
    fps: f64,
) -> Result<MotionClip3D> {
    if !source.same_topology(target) {
        return Err(Error::Skeleton("source and target topologies differ".into()));
    }
    let ratio = target.height() / source.height();
    let mut root = Vec::with_capacity(root_trajectory.len());
    if let Some(first) = root_trajectory.first() {
        root.push(first * ratio);
        for w in root_trajectory.windows(2) {
            let prev = *root.last().expect("non-empty");
            root.push(prev + (w[1] - w[0]) * velocity_scale);
        }
    }
    forward_kinematics(target, rotations, &root, fps)
}

/// Ground-truth cross-character retargeting: rotation copy plus global
/// velocity rescaled by the height ratio.
pub fn retarget_ground_truth(
    rotations: &JointRotations,
    root_trajectory: &[Vector3<f64>],
    source: &Skeleton,
    target: &Skeleton,
    fps: f64,
) -> Result<MotionClip3D> {
    let ratio = target.height() / source.height();
    retarget_with_velocity_scale(rotations, root_trajectory, source, target, ratio, fps)
}

/// The character's temporally averaged coordinate frame. Columns are the
/// character's X (left), Y (up) and Z (forward) axes in world coordinates.
pub fn character_frame(clip: &MotionClip3D) -> Result<Rotation3<f64>> {
    if clip.frames() == 0 {
        return Err(Error::InvalidInput("empty clip".into()));
    }
    let topo = &clip.topology;
    let (ls, rs) = (topo.index("l_shoulder")?, topo.index("r_shoulder")?);
    let (lh, rh) = (topo.index("l_hip")?, topo.index("r_hip")?);
    let up = Vector3::y();
    let mut forward_sum = Vector3::zeros();
    for t in 0..clip.frames() {
        let across = ((clip.position(t, rs) - clip.position(t, ls))
            + (clip.position(t, rh) - clip.position(t, lh)))
            * 0.5;
        let fwd = up.cross(&across);
        let n = fwd.norm();
        if !(n > 1e-9) {
            return Err(Error::InvalidInput(format!(
                "degenerate shoulder/hip axis at frame {t}"
            )));
        }
        forward_sum += fwd / n;
    }
    let n = forward_sum.norm();
    if !(n > 1e-9) {
        return Err(Error::InvalidInput("forward directions cancel out".into()));
    }
    let z = forward_sum / n;
    let x = up.cross(&z).normalize();
    let y = z.cross(&x);
    Ok(Rotation3::from_matrix_unchecked(Matrix3::from_columns(&[x, y, z])))
}
