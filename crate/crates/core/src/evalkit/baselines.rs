use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::motiondata::{retarget_with_velocity_scale, JointRotations, MotionClip3D, Sample2D, Skeleton, Topology};
use crate::{Error, Result};

fn limb(s: &Sample2D, t: usize, j: usize, parent: usize) -> [f64; 2] {
    let (a, b) = (s.point(t, parent), s.point(t, j));
    [b[0] - a[0], b[1] - a[1]]
}

/// Time-averaged 2D length of the bone ending at each joint (0 for the root).
pub fn mean_limb_lengths(s: &Sample2D, topology: &Topology) -> Result<Vec<f64>> {
    if s.joints() != topology.len() {
        return Err(Error::Shape(format!("{} joints vs topology {}", s.joints(), topology.len())));
    }
    let mut out = vec![0.0; s.joints()];
    for (j, len) in out.iter_mut().enumerate().skip(1) {
        let p = topology.parent(j).expect("non-root joint");
        let mut n = 0usize;
        for t in 0..s.frames() {
            if s.is_missing(t, j) || s.is_missing(t, p) {
                continue;
            }
            let [x, y] = limb(s, t, j, p);
            *len += x.hypot(y);
            n += 1;
        }
        *len = if n > 0 { *len / n as f64 } else { 0.0 };
    }
    Ok(out)
}

/// Average 2D height from the same bones that define the 3D height.
pub fn mean_height_2d(s: &Sample2D, topology: &Topology) -> Result<f64> {
    let lengths = mean_limb_lengths(s, topology)?;
    Ok(topology.height_bones().iter().map(|&(j, w)| w * lengths[j]).sum())
}

/// Per-limb 2D rescaling: every bone of `source` is scaled so its average
/// length matches the corresponding bone of `target_reference`, keeping its
/// per-frame direction. The root path is re-integrated from `start_root`
/// with velocities scaled by the ratio of average 2D heights.
pub fn fk2d_baseline(
    source: &Sample2D,
    target_reference: &Sample2D,
    topology: &Topology,
    start_root: [f64; 2],
) -> Result<Sample2D> {
    let src = mean_limb_lengths(source, topology)?;
    let tgt = mean_limb_lengths(target_reference, topology)?;
    let mut scale = vec![1.0; src.len()];
    for j in 1..src.len() {
        if !(src[j] > 1e-12) {
            return Err(Error::InvalidInput(format!(
                "source limb `{}` has zero length",
                topology.names()[j]
            )));
        }
        scale[j] = tgt[j] / src[j];
    }
    let (hs, ht) = (mean_height_2d(source, topology)?, mean_height_2d(target_reference, topology)?);
    let vel = ht / hs;
    let joints = source.joints();
    let mut out = Sample2D::new(joints, source.fps, vec![0.0; source.coords().len()], None)?;
    let mut root = start_root;
    for t in 0..source.frames() {
        if t > 0 {
            let (a, b) = (source.root(t - 1), source.root(t));
            root = [root[0] + vel * (b[0] - a[0]), root[1] + vel * (b[1] - a[1])];
        }
        out.set_point(t, 0, root);
        for j in 1..joints {
            let p = topology.parent(j).expect("non-root joint");
            let [x, y] = limb(source, t, j, p);
            let base = out.point(t, p);
            out.set_point(t, j, [base[0] + scale[j] * x, base[1] + scale[j] * y]);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Baseline3dMode {
    /// Rotations and root velocity copied unchanged.
    Naive,
    /// Root velocity scaled by the height ratio.
    Rescaled,
}

/// Rotation-copy retargeting of a 3D clip from `source` to `target`.
pub fn baseline3d(
    rotations: &JointRotations,
    source_root: &[Vector3<f64>],
    source: &Skeleton,
    target: &Skeleton,
    mode: Baseline3dMode,
    fps: f64,
) -> Result<MotionClip3D> {
    let scale = match mode {
        Baseline3dMode::Naive => 1.0,
        Baseline3dMode::Rescaled => target.height() / source.height(),
    };
    retarget_with_velocity_scale(rotations, source_root, source, target, scale, fps)
}

/// Translates the whole sequence so its first root sits at `start_root`.
pub fn anchor_root(s: &Sample2D, start_root: [f64; 2]) -> Sample2D {
    let r = s.root(0);
    let (dx, dy) = (start_root[0] - r[0], start_root[1] - r[1]);
    let mut out = s.clone();
    for t in 0..s.frames() {
        for j in 0..s.joints() {
            let [x, y] = s.point(t, j);
            out.set_point(t, j, [x + dx, y + dy]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motiondata::{forward_kinematics, generate_motion, MotionFamily, MotionParams, MotionSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn random_seq(rng: &mut ChaCha8Rng, frames: usize) -> Sample2D {
        let coords = (0..frames * 15 * 2).map(|_| rng.random_range(-8.0..8.0)).collect();
        Sample2D::new(15, 30.0, coords, None).unwrap()
    }

    fn angle(v: [f64; 2]) -> f64 {
        v[1].atan2(v[0])
    }

    #[test]
    fn identity_for_identical_skeletons_and_idempotent() {
        let topo = Topology::standard();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = random_seq(&mut rng, 20);
        let out = fk2d_baseline(&s, &s, &topo, s.root(0)).unwrap();
        assert!(out.max_abs_diff(&s) < 1e-9);
        let again = fk2d_baseline(&out, &out, &topo, out.root(0)).unwrap();
        assert!(again.max_abs_diff(&out) < 1e-9);
    }

    #[test]
    fn doubled_static_target_doubles_local_pose() {
        let topo = Topology::standard();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let frame = random_seq(&mut rng, 1);
        let stat = Sample2D::new(15, 30.0, frame.coords().repeat(5), None).unwrap();
        let big = stat.scaled(2.0);
        let out = fk2d_baseline(&stat, &big, &topo, [0.0, 0.0]).unwrap();
        for t in 0..5 {
            for j in 0..15 {
                let (o, s, r) = (out.point(t, j), stat.point(t, j), stat.root(t));
                assert!((o[0] - 2.0 * (s[0] - r[0])).abs() < 1e-9 && (o[1] - 2.0 * (s[1] - r[1])).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn preserves_limb_angles() {
        let topo = Topology::standard();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (s, reference) = (random_seq(&mut rng, 12), random_seq(&mut rng, 30));
        let out = fk2d_baseline(&s, &reference, &topo, [1.0, 2.0]).unwrap();
        for t in 0..12 {
            for j in 1..15 {
                let p = topo.parent(j).unwrap();
                let d = angle(limb(&out, t, j, p)) - angle(limb(&s, t, j, p));
                assert!(d.sin().abs() < 1e-6 && d.cos() > 0.0);
            }
        }
        assert_eq!(out.root(0), [1.0, 2.0]);
        let zero = Sample2D::new(15, 30.0, vec![0.0; 15 * 2 * 3], None).unwrap();
        assert!(fk2d_baseline(&zero, &reference, &topo, [0.0; 2]).is_err());
    }

    #[test]
    fn naive_3d_keeps_local_pose_but_drifts() {
        let topo = Arc::new(Topology::standard());
        let src = Skeleton::canonical(topo.clone()).unwrap();
        let tgt = src.scaled(2.0).unwrap();
        let spec = MotionSpec { family: MotionFamily::Walk, params: MotionParams::sample(MotionFamily::Walk, &mut ChaCha8Rng::seed_from_u64(3)) };
        let m = generate_motion(&topo, &spec, 48, 30.0).unwrap();
        let src_clip = forward_kinematics(&src, &m.rotations, &m.root_trajectory, 30.0).unwrap();
        let root = src_clip.root_trajectory();
        let naive = baseline3d(&m.rotations, &root, &src, &tgt, Baseline3dMode::Naive, 30.0).unwrap();
        let rescaled = baseline3d(&m.rotations, &root, &src, &tgt, Baseline3dMode::Rescaled, 30.0).unwrap();
        let mut global = 0.0f64;
        for t in 0..48 {
            for j in 0..15 {
                let a = naive.position(t, j) - naive.position(t, 0);
                let b = rescaled.position(t, j) - rescaled.position(t, 0);
                assert!((a - b).norm() < 1e-9);
                global = global.max((naive.position(t, j) - rescaled.position(t, j)).norm());
            }
        }
        assert!(global > 1.0);
        let same = baseline3d(&m.rotations, &root, &src, &src, Baseline3dMode::Naive, 30.0).unwrap();
        assert!(same.positions().iter().zip(src_clip.positions()).all(|(a, b)| (a - b).norm() < 1e-9));
    }
}
