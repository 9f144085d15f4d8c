//! Pose JSON: `{"fps": 30, "joints": [names], "frames": [[[x, y] | null, ...], ...]}`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::generator::MIN_FRAMES;
use super::sample::Sample2D;
use super::skeleton::Topology;
use crate::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseFile {
    pub fps: f64,
    pub joints: Vec<String>,
    pub frames: Vec<Vec<Option<[f64; 2]>>>,
}

impl PoseFile {
    pub fn from_sample(sample: &Sample2D, topology: &Topology) -> Result<Self> {
        if sample.joints() != topology.len() {
            return Err(Error::Shape(format!(
                "sample has {} joints, topology {}",
                sample.joints(),
                topology.len()
            )));
        }
        let frames = (0..sample.frames())
            .map(|t| {
                (0..sample.joints())
                    .map(|j| (!sample.is_missing(t, j)).then(|| sample.point(t, j)))
                    .collect()
            })
            .collect();
        Ok(PoseFile {
            fps: sample.fps,
            joints: topology.names().to_vec(),
            frames,
        })
    }

    /// Maps named joints onto `topology`. Joints absent from the file or null
    /// in a frame are zero and flagged missing. A missing root is replaced by
    /// the hip midpoint when both hips are present.
    pub fn into_sample(self, topology: &Topology) -> Result<Sample2D> {
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::InvalidInput(format!("fps {}", self.fps)));
        }
        if self.frames.len() < MIN_FRAMES {
            return Err(Error::TooShort {
                frames: self.frames.len(),
                required: MIN_FRAMES,
            });
        }
        let mut slots = Vec::with_capacity(self.joints.len());
        for name in &self.joints {
            let j = topology.index(name)?;
            if slots.contains(&j) {
                return Err(Error::InvalidInput(format!("joint {name} listed twice")));
            }
            slots.push(j);
        }
        let hips = topology.index("l_hip").ok().zip(topology.index("r_hip").ok());
        let jn = topology.len();
        let mut coords = vec![0.0; self.frames.len() * jn * 2];
        let mut missing = vec![true; self.frames.len() * jn];
        for (t, frame) in self.frames.iter().enumerate() {
            if frame.len() != slots.len() {
                return Err(Error::Shape(format!(
                    "frame {t} has {} entries for {} joints",
                    frame.len(),
                    slots.len()
                )));
            }
            for (p, &j) in frame.iter().zip(&slots) {
                if let Some([x, y]) = p {
                    if !(x.is_finite() && y.is_finite()) {
                        return Err(Error::NonFinite(format!("frame {t} joint {j}")));
                    }
                    coords[2 * (t * jn + j)] = *x;
                    coords[2 * (t * jn + j) + 1] = *y;
                    missing[t * jn + j] = false;
                }
            }
            if missing[t * jn] {
                let (l, r) = hips
                    .filter(|&(l, r)| !missing[t * jn + l] && !missing[t * jn + r])
                    .ok_or_else(|| Error::Missing(format!("root and hips missing in frame {t}")))?;
                for d in 0..2 {
                    coords[2 * t * jn + d] = 0.5 * (coords[2 * (t * jn + l) + d] + coords[2 * (t * jn + r) + d]);
                }
                missing[t * jn] = false;
            }
        }
        // Missing coordinates sit at the root so they vanish once the root
        // is subtracted.
        for t in 0..self.frames.len() {
            for j in 1..jn {
                if missing[t * jn + j] {
                    coords[2 * (t * jn + j)] = coords[2 * t * jn];
                    coords[2 * (t * jn + j) + 1] = coords[2 * t * jn + 1];
                }
            }
        }
        Sample2D::new(jn, self.fps, coords, None)?.with_missing(missing)
    }
}

pub fn parse_pose_json(text: &str, topology: &Topology) -> Result<Sample2D> {
    let file: PoseFile = serde_json::from_str(text)?;
    file.into_sample(topology)
}

pub fn ingest_pose_file(path: &Path, topology: &Topology) -> Result<Sample2D> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_pose_json(&text, topology)
}

pub fn export_pose_json(sample: &Sample2D, topology: &Topology) -> Result<String> {
    Ok(serde_json::to_string(&PoseFile::from_sample(sample, topology)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motiondata::normalize::{normalize, NormStats};
    use crate::motiondata::sample::window;

    fn walkish(frames: usize) -> Sample2D {
        let coords = (0..frames * 15 * 2)
            .map(|i| ((i % 30) as f64 * 0.7).sin() * 3.0 + (i / 30) as f64 * 0.1)
            .collect();
        Sample2D::new(15, 25.0, coords, None).unwrap()
    }

    #[test]
    fn round_trip_through_export() {
        let topo = Topology::standard();
        let s = walkish(50);
        let text = export_pose_json(&s, &topo).unwrap();
        assert_eq!(parse_pose_json(&text, &topo).unwrap(), s);
    }

    #[test]
    fn null_ankle_becomes_zero_channel() {
        let topo = Topology::standard();
        let s = walkish(48);
        let mut file = PoseFile::from_sample(&s, &topo).unwrap();
        let la = topo.index("l_ankle").unwrap();
        file.frames[5][la] = None;
        let got = file.into_sample(&topo).unwrap();
        assert!(got.is_missing(5, la));
        let stats = NormStats::compute([&s]).unwrap();
        let n = normalize(&got, &stats).unwrap();
        assert_eq!(n.data.at2(2 * (la - 1), 5), 0.0);
        assert_eq!(n.data.at2(2 * (la - 1) + 1, 5), 0.0);
    }

    #[test]
    fn hundred_frames_give_one_window() {
        let topo = Topology::standard();
        let text = export_pose_json(&walkish(100), &topo).unwrap();
        let s = parse_pose_json(&text, &topo).unwrap();
        assert_eq!(window(&s, 64, 64).unwrap().len(), 1);
    }

    #[test]
    fn rejects_bad_files() {
        let topo = Topology::standard();
        assert!(matches!(parse_pose_json("{", &topo), Err(Error::Json(_))));
        let short = export_pose_json(&walkish(39), &topo).unwrap();
        assert!(matches!(parse_pose_json(&short, &topo), Err(Error::TooShort { .. })));
        let bad = export_pose_json(&walkish(40), &topo).unwrap().replace("l_knee", "l_tail");
        assert!(matches!(parse_pose_json(&bad, &topo), Err(Error::UnknownJoint(_))));
    }

    #[test]
    fn missing_root_uses_hips() {
        let topo = Topology::standard();
        let s = walkish(40);
        let mut file = PoseFile::from_sample(&s, &topo).unwrap();
        file.frames[0][0] = None;
        let got = file.into_sample(&topo).unwrap();
        let (l, r) = (s.point(0, topo.index("l_hip").unwrap()), s.point(0, topo.index("r_hip").unwrap()));
        assert_eq!(got.root(0), [0.5 * (l[0] + r[0]), 0.5 * (l[1] + r[1])]);
    }
}
