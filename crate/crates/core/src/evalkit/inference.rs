use crate::motiondata::{denormalize, normalize, NormStats, NormalizedSample, Sample2D, WINDOW};
use crate::network::{decode, encode, LatentCodes, ModelParams};
use crate::tensorkit::Tensor;
use crate::{Error, Result};

/// Length of the contiguous windows a sequence is cut into: 64 frames, or
/// the longest multiple of the time factor for shorter sequences.
pub fn encoding_window(frames: usize, time_factor: usize) -> Result<usize> {
    let len = frames.min(WINDOW) / time_factor * time_factor;
    if len == 0 {
        return Err(Error::TooShort { frames, required: time_factor });
    }
    Ok(len)
}

/// Normalized, contiguous, non-overlapping windows; trailing frames that do
/// not fill a window are dropped.
pub fn sequence_windows(sample: &Sample2D, stats: &NormStats, time_factor: usize) -> Result<Vec<Tensor<f32>>> {
    if sample.joints() != stats.joints() {
        return Err(Error::Shape(format!("{} joints, stats for {}", sample.joints(), stats.joints())));
    }
    let len = encoding_window(sample.frames(), time_factor)?;
    (0..sample.frames() / len)
        .map(|w| {
            let n = normalize(&sample.crop(w * len, len)?, stats)?;
            Ok(n.data.cast())
        })
        .collect()
}

/// Codes of a whole sequence: one motion code per window, static codes
/// averaged over windows.
#[derive(Clone, Debug)]
pub struct SequenceCodes {
    pub motion: Vec<Tensor<f32>>,
    pub skeleton: Tensor<f32>,
    pub view: Tensor<f32>,
}

impl SequenceCodes {
    pub fn windows(&self) -> usize {
        self.motion.len()
    }

    /// Motion codes concatenated along time.
    pub fn motion_concat(&self) -> Result<Tensor<f32>> {
        Tensor::concat_time(&self.motion.iter().collect::<Vec<_>>())
    }
}

fn mean_tensor(ts: &[Tensor<f32>]) -> Result<Tensor<f32>> {
    let mut acc = Tensor::zeros(ts[0].shape());
    for t in ts {
        acc.axpy(1.0, t)?;
    }
    acc.scale(1.0 / ts.len() as f32);
    Ok(acc)
}

pub fn encode_sequence(params: &ModelParams<f32>, stats: &NormStats, sample: &Sample2D) -> Result<SequenceCodes> {
    let windows = sequence_windows(sample, stats, params.config.time_factor())?;
    let codes = windows.iter().map(|x| encode(params, x)).collect::<Result<Vec<_>>>()?;
    let skeleton = mean_tensor(&codes.iter().map(|c| c.skeleton.clone()).collect::<Vec<_>>())?;
    let view = mean_tensor(&codes.iter().map(|c| c.view.clone()).collect::<Vec<_>>())?;
    Ok(SequenceCodes { motion: codes.into_iter().map(|c| c.motion).collect(), skeleton, view })
}

/// Decodes every motion window with the given static codes and re-integrates
/// the root path from `start_root`.
pub fn decode_sequence(
    params: &ModelParams<f32>,
    stats: &NormStats,
    motion: &[Tensor<f32>],
    skeleton: &Tensor<f32>,
    view: &Tensor<f32>,
    start_root: [f64; 2],
    fps: f64,
) -> Result<Sample2D> {
    if motion.is_empty() {
        return Err(Error::InvalidInput("no motion windows".into()));
    }
    let mut parts = Vec::with_capacity(motion.len());
    for m in motion {
        let codes = LatentCodes { motion: m.clone(), skeleton: skeleton.clone(), view: view.clone() };
        parts.push(decode(params, &codes)?);
    }
    let out: Tensor<f64> = Tensor::concat_time(&parts.iter().collect::<Vec<_>>())?.cast();
    if !out.all_finite() {
        return Err(Error::NonFinite("decoder output".into()));
    }
    denormalize(&NormalizedSample::new(out, stats.joints())?, stats, start_root, fps)
}

/// Motion of `motion_source` on the skeleton and view of `static_source`.
pub fn retarget_sequence(
    params: &ModelParams<f32>,
    stats: &NormStats,
    motion_source: &Sample2D,
    static_source: &Sample2D,
    start_root: [f64; 2],
) -> Result<Sample2D> {
    let m = encode_sequence(params, stats, motion_source)?;
    let s = encode_sequence(params, stats, static_source)?;
    decode_sequence(params, stats, &m.motion, &s.skeleton, &s.view, start_root, motion_source.fps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::ArchConfig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (ModelParams<f32>, NormStats, ChaCha8Rng) {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let config = ArchConfig::tiny(3);
        let p = ModelParams::init(&config, &mut rng).unwrap();
        let stats = NormStats::new(vec![[0.0; 2], [0.5, 0.1], [-0.3, 0.4]], vec![[1.0; 2], [0.6, 0.7], [0.9, 1.1]], [0.2, 0.3]).unwrap();
        (p, stats, rng)
    }

    fn seq(rng: &mut ChaCha8Rng, frames: usize) -> Sample2D {
        Sample2D::new(3, 30.0, (0..frames * 6).map(|_| rng.random_range(-2.0..2.0)).collect(), None).unwrap()
    }

    #[test]
    fn window_layout() {
        assert_eq!(encoding_window(130, 8).unwrap(), 64);
        assert_eq!(encoding_window(45, 8).unwrap(), 40);
        assert!(encoding_window(7, 8).is_err());
        let (p, stats, mut rng) = setup();
        let s = seq(&mut rng, 150);
        let codes = encode_sequence(&p, &stats, &s).unwrap();
        assert_eq!(codes.windows(), 2);
        let out = retarget_sequence(&p, &stats, &s, &seq(&mut rng, 64), [3.0, 4.0]).unwrap();
        assert_eq!(out.frames(), 128);
        assert_eq!(out.root(0), [3.0, 4.0]);
    }

    #[test]
    fn static_codes_are_window_means() {
        let (p, stats, mut rng) = setup();
        let s = seq(&mut rng, 128);
        let codes = encode_sequence(&p, &stats, &s).unwrap();
        let w0 = encode(&p, &normalize(&s.crop(0, 64).unwrap(), &stats).unwrap().data.cast()).unwrap();
        let w1 = encode(&p, &normalize(&s.crop(64, 64).unwrap(), &stats).unwrap().data.cast()).unwrap();
        for i in 0..codes.skeleton.len() {
            let m = 0.5 * (w0.skeleton.data()[i] + w1.skeleton.data()[i]);
            assert!((codes.skeleton.data()[i] - m).abs() < 1e-6);
        }
        assert_eq!(codes.motion[1], w1.motion);
        assert_eq!(codes.motion_concat().unwrap().shape()[1], 2 * w0.motion.shape()[1]);
    }
}
