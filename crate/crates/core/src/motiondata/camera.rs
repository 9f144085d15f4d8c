use nalgebra::{Matrix3, Rotation3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::kinematics::{character_frame, MotionClip3D};
use super::sample::{Labels, Sample2D};
use crate::{Error, Result};

/// Weak-perspective camera: rotation, orthographic depth drop, uniform scale
/// and 2D translation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraView {
    pub label: usize,
    /// Axis-angle rotation (axis scaled by angle in radians).
    pub axis_angle: [f64; 3],
    pub scale: f64,
    pub translation: [f64; 2],
}

impl CameraView {
    pub fn new(label: usize, axis_angle: Vector3<f64>, scale: f64, translation: Vector2<f64>) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidInput(format!("camera scale {scale}")));
        }
        Ok(CameraView {
            label,
            axis_angle: [axis_angle.x, axis_angle.y, axis_angle.z],
            scale,
            translation: [translation.x, translation.y],
        })
    }

    /// Rotation about the vertical axis, unit scale, no translation.
    pub fn yaw(label: usize, degrees: f64) -> Self {
        CameraView::new(label, Vector3::y() * degrees.to_radians(), 1.0, Vector2::zeros())
            .expect("unit scale is valid")
    }

    /// `count` yaw views evenly spanning `[min_deg, max_deg]`.
    pub fn yaw_sweep(count: usize, min_deg: f64, max_deg: f64) -> Vec<CameraView> {
        (0..count)
            .map(|v| {
                let f = if count > 1 { v as f64 / (count - 1) as f64 } else { 0.5 };
                CameraView::yaw(v, min_deg + f * (max_deg - min_deg))
            })
            .collect()
    }

    pub fn rotation(&self) -> Rotation3<f64> {
        Rotation3::from_scaled_axis(Vector3::from(self.axis_angle))
    }

    pub fn yaw_degrees(&self) -> f64 {
        self.axis_angle[1].to_degrees()
    }

    /// `s * Pi(R p) + b`.
    pub fn project_point(&self, p: &Vector3<f64>) -> [f64; 2] {
        let q = self.rotation() * p;
        [
            self.scale * q.x + self.translation[0],
            self.scale * q.y + self.translation[1],
        ]
    }
}

/// Projects world positions with the view rotation applied in the given
/// character frame (columns = character axes in world coordinates).
pub fn project_in_frame(clip: &MotionClip3D, frame: &Matrix3<f64>, view: &CameraView) -> Sample2D {
    let to_char = frame.transpose();
    let joints = clip.joints();
    let mut coords = Vec::with_capacity(clip.frames() * joints * 2);
    for p in clip.positions() {
        coords.extend(view.project_point(&(to_char * p)));
    }
    let labels = clip.labels.map(|l| Labels {
        motion: l.motion,
        skeleton: l.skeleton,
        view: view.label,
    });
    Sample2D::new(joints, clip.fps, coords, labels).expect("coordinate count matches frames")
}

/// Weak-perspective projection with the view expressed relative to the
/// clip's averaged character frame.
pub fn project(clip: &MotionClip3D, view: &CameraView) -> Result<Sample2D> {
    let frame = character_frame(clip)?;
    Ok(project_in_frame(clip, frame.matrix(), view))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motiondata::skeleton::Topology;
    use std::sync::Arc;

    fn single_point_clip(p: Vector3<f64>) -> MotionClip3D {
        let topo = Arc::new(Topology::standard());
        let mut pts = vec![Vector3::zeros(); 15];
        pts[0] = p;
        MotionClip3D::new(topo, 30.0, pts).unwrap()
    }

    #[test]
    fn identity_projection_drops_depth() {
        let clip = single_point_clip(Vector3::new(1.5, -2.0, 7.0));
        let s = project_in_frame(&clip, &Matrix3::identity(), &CameraView::yaw(0, 0.0));
        assert_eq!(s.point(0, 0), [1.5, -2.0]);
    }

    #[test]
    fn quarter_yaw_maps_depth_to_x() {
        let v = CameraView::yaw(0, 90.0);
        let p = v.project_point(&Vector3::new(0.0, 0.0, 1.0));
        assert!((p[0] - 1.0).abs() < 1e-12 && p[1].abs() < 1e-12);
        let p = v.project_point(&Vector3::new(1.0, 0.0, 0.0));
        assert!(p[0].abs() < 1e-12);
    }

    #[test]
    fn scale_and_translation() {
        let v = CameraView::new(0, Vector3::zeros(), 2.0, Vector2::new(1.0, 1.0)).unwrap();
        assert_eq!(v.project_point(&Vector3::new(1.0, 1.0, 0.0)), [3.0, 3.0]);
        assert!(CameraView::new(0, Vector3::zeros(), 0.0, Vector2::zeros()).is_err());
    }

    #[test]
    fn view_rotations_are_proper() {
        for v in CameraView::yaw_sweep(7, -90.0, 90.0) {
            let r = v.rotation();
            let m = r.matrix();
            assert!((m.transpose() * m - Matrix3::identity()).norm() < 1e-9);
            assert!((m.determinant() - 1.0).abs() < 1e-9);
        }
        let sweep = CameraView::yaw_sweep(5, -90.0, 90.0);
        assert!((sweep[0].yaw_degrees() + 90.0).abs() < 1e-9);
        assert!((sweep[4].yaw_degrees() - 90.0).abs() < 1e-9);
    }
}
