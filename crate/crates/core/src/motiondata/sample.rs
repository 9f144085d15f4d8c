use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const WINDOW: usize = 64;

/// (motion, skeleton, view) label triple.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Labels {
    pub motion: usize,
    pub skeleton: usize,
    pub view: usize,
}

/// A sequence of 2D poses, `frames x joints x 2`, row-major.
///
/// `missing` marks joints that were not observed (ingested poses); their
/// coordinates are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample2D {
    joints: usize,
    pub fps: f64,
    coords: Vec<f64>,
    pub labels: Option<Labels>,
    missing: Option<Vec<bool>>,
}

impl Sample2D {
    pub fn new(joints: usize, fps: f64, coords: Vec<f64>, labels: Option<Labels>) -> Result<Self> {
        if joints == 0 || coords.len() % (2 * joints) != 0 {
            return Err(Error::Shape(format!(
                "{} coordinates for {joints} joints",
                coords.len()
            )));
        }
        Ok(Sample2D {
            joints,
            fps,
            coords,
            labels,
            missing: None,
        })
    }

    pub fn with_missing(mut self, missing: Vec<bool>) -> Result<Self> {
        if missing.len() != self.frames() * self.joints {
            return Err(Error::Shape(format!(
                "missing mask has {} entries for {} frames x {} joints",
                missing.len(),
                self.frames(),
                self.joints
            )));
        }
        self.missing = missing.iter().any(|&m| m).then_some(missing);
        Ok(self)
    }

    pub fn joints(&self) -> usize {
        self.joints
    }

    pub fn frames(&self) -> usize {
        self.coords.len() / (2 * self.joints)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn point(&self, frame: usize, joint: usize) -> [f64; 2] {
        let i = 2 * (frame * self.joints + joint);
        [self.coords[i], self.coords[i + 1]]
    }

    pub fn set_point(&mut self, frame: usize, joint: usize, p: [f64; 2]) {
        let i = 2 * (frame * self.joints + joint);
        self.coords[i] = p[0];
        self.coords[i + 1] = p[1];
    }

    pub fn is_missing(&self, frame: usize, joint: usize) -> bool {
        self.missing
            .as_ref()
            .is_some_and(|m| m[frame * self.joints + joint])
    }

    pub fn missing_mask(&self) -> Option<&[bool]> {
        self.missing.as_deref()
    }

    pub fn root(&self, frame: usize) -> [f64; 2] {
        self.point(frame, 0)
    }

    /// Frames `[start, start + len)`.
    pub fn crop(&self, start: usize, len: usize) -> Result<Sample2D> {
        if start + len > self.frames() || len == 0 {
            return Err(Error::Shape(format!(
                "crop {start}+{len} of {} frames",
                self.frames()
            )));
        }
        let w = 2 * self.joints;
        Ok(Sample2D {
            joints: self.joints,
            fps: self.fps,
            coords: self.coords[start * w..(start + len) * w].to_vec(),
            labels: self.labels,
            missing: self
                .missing
                .as_ref()
                .map(|m| m[start * self.joints..(start + len) * self.joints].to_vec())
                .filter(|m| m.iter().any(|&x| x)),
        })
    }

    /// Uniform scaling about the image origin (a change of camera distance).
    pub fn scaled(&self, s: f64) -> Sample2D {
        let mut out = self.clone();
        out.coords.iter_mut().for_each(|c| *c *= s);
        out
    }

    /// Left-right flip: x negated and paired joints swapped.
    /// `mirror[j]` is joint `j`'s partner (itself when unpaired).
    pub fn flipped(&self, mirror: &[usize]) -> Result<Sample2D> {
        if mirror.len() != self.joints {
            return Err(Error::Missing(format!(
                "pairing table covers {} of {} joints",
                mirror.len(),
                self.joints
            )));
        }
        let mut out = self.clone();
        for t in 0..self.frames() {
            for (j, &m) in mirror.iter().enumerate() {
                let [x, y] = self.point(t, m);
                out.set_point(t, j, [-x, y]);
                if let (Some(dst), Some(src)) = (out.missing.as_mut(), self.missing.as_ref()) {
                    dst[t * self.joints + j] = src[t * self.joints + m];
                }
            }
        }
        Ok(out)
    }

    pub fn max_abs_diff(&self, other: &Sample2D) -> f64 {
        if self.coords.len() != other.coords.len() {
            return f64::INFINITY;
        }
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Windows of `len` frames starting every `stride` frames; a tail shorter
/// than `len` is dropped.
pub fn window(seq: &Sample2D, len: usize, stride: usize) -> Result<Vec<Sample2D>> {
    if len == 0 || stride == 0 {
        return Err(Error::InvalidInput("zero window length or stride".into()));
    }
    if seq.frames() < len {
        return Err(Error::TooShort {
            frames: seq.frames(),
            required: len,
        });
    }
    (0..=seq.frames() - len)
        .step_by(stride)
        .map(|start| seq.crop(start, len))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motiondata::skeleton::Topology;
    use proptest::prelude::*;

    fn ramp(frames: usize, joints: usize) -> Sample2D {
        let coords = (0..frames * joints * 2).map(|i| i as f64 * 0.5 - 3.0).collect();
        Sample2D::new(joints, 30.0, coords, None).unwrap()
    }

    #[test]
    fn windowing() {
        assert_eq!(window(&ramp(128, 3), 64, 64).unwrap().len(), 2);
        assert!(matches!(window(&ramp(63, 3), 64, 64), Err(Error::TooShort { .. })));
        let w = window(&ramp(130, 3), 64, 64).unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!(w[1].point(0, 0), ramp(130, 3).point(64, 0));
        assert_eq!(window(&ramp(128, 3), 64, 32).unwrap().len(), 3);
    }

    #[test]
    fn flip_examples() {
        let topo = Topology::standard();
        let mut s = Sample2D::new(15, 30.0, vec![0.0; 30], None).unwrap();
        let lw = topo.index("l_wrist").unwrap();
        let rw = topo.index("r_wrist").unwrap();
        s.set_point(0, lw, [2.0, 1.0]);
        let f = s.flipped(topo.mirror()).unwrap();
        assert_eq!(f.point(0, rw), [-2.0, 1.0]);
        assert_eq!(f.point(0, lw), [0.0, 0.0]);
        assert!(s.flipped(&[0, 1]).is_err());
    }

    #[test]
    fn symmetric_pose_is_flip_fixed_point() {
        let topo = Topology::standard();
        let mut s = Sample2D::new(15, 30.0, vec![0.0; 30], None).unwrap();
        for (j, &m) in topo.mirror().iter().enumerate() {
            let x = if j == m { 0.0 } else if topo.names()[j].starts_with("l_") { 1.0 + j as f64 } else { -(1.0 + m as f64) };
            s.set_point(0, j, [x, j.min(m) as f64]);
        }
        assert_eq!(s.flipped(topo.mirror()).unwrap(), s);
    }

    proptest! {
        #[test]
        fn flip_is_an_involution(coords in proptest::collection::vec(-100.0f64..100.0, 15 * 2 * 3)) {
            let topo = Topology::standard();
            let s = Sample2D::new(15, 30.0, coords, None).unwrap();
            let back = s.flipped(topo.mirror()).unwrap().flipped(topo.mirror()).unwrap();
            prop_assert_eq!(back, s);
        }

        #[test]
        fn flip_and_scale_commute_with_windowing(
            coords in proptest::collection::vec(-10.0f64..10.0, 15 * 2 * 80),
            scale in 0.5f64..1.5,
        ) {
            let topo = Topology::standard();
            let s = Sample2D::new(15, 30.0, coords, None).unwrap();
            let a: Vec<_> = window(&s.flipped(topo.mirror()).unwrap().scaled(scale), 40, 20).unwrap();
            let b: Vec<_> = window(&s, 40, 20).unwrap().iter()
                .map(|w| w.flipped(topo.mirror()).unwrap().scaled(scale)).collect();
            prop_assert_eq!(a, b);
        }
    }
}
