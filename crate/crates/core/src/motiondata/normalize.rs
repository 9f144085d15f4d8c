use serde::{Deserialize, Serialize};

use super::sample::Sample2D;
use crate::tensorkit::Tensor;
use crate::{Error, Result};

pub const STD_FLOOR: f64 = 1e-6;
/// Deviations are also floored at this fraction of the mean pose deviation,
/// so channels that never move in the corpus cannot amplify noise.
pub const RELATIVE_STD_FLOOR: f64 = 0.05;

/// Per-joint statistics of root-relative 2D positions plus the root
/// velocity spread. Index 0 (the root) is carried but unused.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<[f64; 2]>,
    pub std: Vec<[f64; 2]>,
    pub vel_std: [f64; 2],
}

/// Root velocity per frame: forward difference with the last value repeated.
pub fn root_velocity(sample: &Sample2D) -> Vec<[f64; 2]> {
    let t = sample.frames();
    (0..t)
        .map(|f| {
            let (a, b) = if f + 1 < t { (f, f + 1) } else if t > 1 { (t - 2, t - 1) } else { (0, 0) };
            let (ra, rb) = (sample.root(a), sample.root(b));
            [rb[0] - ra[0], rb[1] - ra[1]]
        })
        .collect()
}

impl NormStats {
    pub fn new(mean: Vec<[f64; 2]>, std: Vec<[f64; 2]>, vel_std: [f64; 2]) -> Result<Self> {
        if mean.len() != std.len() || mean.len() < 2 {
            return Err(Error::Shape(format!(
                "{} means and {} deviations",
                mean.len(),
                std.len()
            )));
        }
        let all = mean.iter().chain(&std).flatten().chain(&vel_std);
        if all.clone().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("normalization statistics".into()));
        }
        if std.iter().skip(1).flatten().chain(&vel_std).any(|&s| s <= 0.0) {
            return Err(Error::InvalidInput("non-positive standard deviation".into()));
        }
        Ok(NormStats { mean, std, vel_std })
    }

    /// One pass over the corpus; missing joints are excluded from their
    /// joint's statistics. Deviations are clamped at [`STD_FLOOR`] and at
    /// [`RELATIVE_STD_FLOOR`] times the mean pose deviation.
    pub fn compute<'a>(samples: impl IntoIterator<Item = &'a Sample2D>) -> Result<Self> {
        let mut joints = None;
        let mut sum = Vec::new();
        let mut sq = Vec::new();
        let mut count = Vec::new();
        let mut vsum = [0.0; 2];
        let mut vsq = [0.0; 2];
        let mut vcount = 0usize;
        for s in samples {
            let j = *joints.get_or_insert_with(|| {
                sum = vec![[0.0; 2]; s.joints()];
                sq = vec![[0.0; 2]; s.joints()];
                count = vec![0usize; s.joints()];
                s.joints()
            });
            if s.joints() != j {
                return Err(Error::Shape(format!("mixed joint counts {j} and {}", s.joints())));
            }
            for t in 0..s.frames() {
                let r = s.root(t);
                for k in 1..j {
                    if s.is_missing(t, k) {
                        continue;
                    }
                    let p = s.point(t, k);
                    for d in 0..2 {
                        let x = p[d] - r[d];
                        sum[k][d] += x;
                        sq[k][d] += x * x;
                    }
                    count[k] += 1;
                }
            }
            for v in root_velocity(s) {
                for d in 0..2 {
                    vsum[d] += v[d];
                    vsq[d] += v[d] * v[d];
                }
                vcount += 1;
            }
        }
        let j = joints.ok_or_else(|| Error::InvalidInput("no samples for statistics".into()))?;
        let spread = |s: f64, q: f64, n: usize| {
            if n == 0 {
                return (0.0, 1.0);
            }
            let m = s / n as f64;
            let var = (q / n as f64 - m * m).max(0.0);
            (m, var.sqrt())
        };
        let mut mean = vec![[0.0; 2]; j];
        let mut std = vec![[1.0; 2]; j];
        for k in 1..j {
            for d in 0..2 {
                let (m, sd) = spread(sum[k][d], sq[k][d], count[k]);
                mean[k][d] = m;
                std[k][d] = sd;
            }
        }
        let mut vel_std = [1.0; 2];
        for d in 0..2 {
            vel_std[d] = spread(vsum[d], vsq[d], vcount).1;
        }
        let pose: Vec<f64> = std.iter().skip(1).flatten().copied().collect();
        let floor = (RELATIVE_STD_FLOOR * pose.iter().sum::<f64>() / pose.len() as f64).max(STD_FLOOR);
        std.iter_mut().skip(1).flatten().chain(&mut vel_std).for_each(|s| *s = s.max(floor));
        NormStats::new(mean, std, vel_std)
    }

    pub fn joints(&self) -> usize {
        self.mean.len()
    }

    pub fn channels(&self) -> usize {
        2 * (self.joints() - 1) + 2
    }
}

/// Network input layout: `2(J-1)` normalized root-relative joint channels
/// (x, y per non-root joint) followed by 2 standardized velocity channels.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedSample {
    pub data: Tensor<f64>,
}

impl NormalizedSample {
    pub fn new(data: Tensor<f64>, joints: usize) -> Result<Self> {
        let (c, _) = data.dims2()?;
        if c != 2 * (joints - 1) + 2 {
            return Err(Error::Shape(format!("{c} channels for {joints} joints")));
        }
        Ok(NormalizedSample { data })
    }

    pub fn frames(&self) -> usize {
        self.data.shape()[1]
    }

    pub fn channels(&self) -> usize {
        self.data.shape()[0]
    }

    /// Joint channels only.
    pub fn pose_channels(&self) -> Tensor<f64> {
        let c = self.channels();
        self.data.slice_channels(0, c - 2).expect("at least two channels")
    }
}

pub fn normalize(sample: &Sample2D, stats: &NormStats) -> Result<NormalizedSample> {
    let j = sample.joints();
    if j != stats.joints() {
        return Err(Error::Shape(format!(
            "sample has {j} joints, statistics {}",
            stats.joints()
        )));
    }
    let t = sample.frames();
    let c = stats.channels();
    let mut data = vec![0.0; c * t];
    for f in 0..t {
        let r = sample.root(f);
        for k in 1..j {
            if sample.is_missing(f, k) {
                continue;
            }
            let p = sample.point(f, k);
            for d in 0..2 {
                data[(2 * (k - 1) + d) * t + f] = (p[d] - r[d] - stats.mean[k][d]) / stats.std[k][d];
            }
        }
    }
    for (f, v) in root_velocity(sample).into_iter().enumerate() {
        for d in 0..2 {
            data[(c - 2 + d) * t + f] = v[d] / stats.vel_std[d];
        }
    }
    NormalizedSample::new(Tensor::new(&[c, t], data)?, j)
}

/// Root-relative positions (root at the origin) from normalized joint
/// channels. Accepts either the pose channels alone or the full layout.
pub fn denormalize_local(channels: &Tensor<f64>, stats: &NormStats) -> Result<Vec<[f64; 2]>> {
    let (c, t) = channels.dims2()?;
    let j = stats.joints();
    if c != 2 * (j - 1) && c != stats.channels() {
        return Err(Error::Shape(format!("{c} channels for {j} joints")));
    }
    let mut out = vec![[0.0; 2]; t * j];
    for k in 1..j {
        for d in 0..2 {
            let row = channels.row(2 * (k - 1) + d);
            for f in 0..t {
                out[f * j + k][d] = row[f] * stats.std[k][d] + stats.mean[k][d];
            }
        }
    }
    Ok(out)
}

/// Inverse of [`normalize`]; the root path is re-integrated from `start_root`.
pub fn denormalize(normed: &NormalizedSample, stats: &NormStats, start_root: [f64; 2], fps: f64) -> Result<Sample2D> {
    let j = stats.joints();
    let t = normed.frames();
    let c = normed.channels();
    if c != stats.channels() {
        return Err(Error::Shape(format!("{c} channels for {j} joints")));
    }
    let local = denormalize_local(&normed.data, stats)?;
    let (vx, vy) = (normed.data.row(c - 2), normed.data.row(c - 1));
    let mut root = start_root;
    let mut coords = Vec::with_capacity(t * j * 2);
    for f in 0..t {
        for p in &local[f * j..(f + 1) * j] {
            coords.push(p[0] + root[0]);
            coords.push(p[1] + root[1]);
        }
        root[0] += vx[f] * stats.vel_std[0];
        root[1] += vy[f] * stats.vel_std[1];
    }
    Sample2D::new(j, fps, coords, None)
}
