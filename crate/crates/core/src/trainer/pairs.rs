use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::losses::{labels_distinct, Side};
use crate::motiondata::{
    generate_motion, project, retarget_ground_truth, skeleton_roster, CameraView, Dataset, Labels, MotionFamily,
    MotionParams, MotionSpec, Sample2D, SampleKey,
};
use crate::tensorkit::{Scalar, Tensor};
use crate::{Error, Result};

/// Two training windows with distinct labels and the keys of their cross
/// ground truths.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingPair {
    pub a: SampleKey,
    pub b: SampleKey,
    /// a's motion (and window) with b's skeleton and view.
    pub gt_ab: SampleKey,
    /// b's motion (and window) with a's skeleton and view.
    pub gt_ba: SampleKey,
}

/// Ground truth of the combination `(motion, skeleton, view)` drawn from
/// the sides of a pair. The window follows the motion.
pub fn combination_key(a: &SampleKey, b: &SampleKey, motion: Side, skeleton: Side, view: Side) -> SampleKey {
    let pick = |s: Side| if s == Side::A { a } else { b };
    let m = pick(motion);
    SampleKey {
        labels: Labels { motion: m.labels.motion, skeleton: pick(skeleton).labels.skeleton, view: pick(view).labels.view },
        window: m.window,
    }
}

impl TrainingPair {
    pub fn new(a: SampleKey, b: SampleKey) -> Result<Self> {
        if !labels_distinct(&a.labels, &b.labels) {
            return Err(Error::InvalidInput(format!("pair {a:?} / {b:?} shares a label")));
        }
        Ok(TrainingPair {
            a,
            b,
            gt_ab: combination_key(&a, &b, Side::A, Side::B, Side::B),
            gt_ba: combination_key(&a, &b, Side::B, Side::A, Side::A),
        })
    }
}

/// `count` pairs drawn uniformly from `keys`: the first element uniformly,
/// the second uniformly among keys that differ from it in every label.
pub fn sample_pairs(keys: &[SampleKey], count: usize, rng: &mut impl Rng) -> Result<Vec<TrainingPair>> {
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let a = *keys.choose(rng).ok_or_else(|| Error::InvalidInput("no samples to pair".into()))?;
        let partners: Vec<&SampleKey> = keys.iter().filter(|k| labels_distinct(&a.labels, &k.labels)).collect();
        let b = **partners.choose(rng).ok_or_else(|| {
            Error::InvalidInput(format!("no sample differs from {:?} in all labels; dataset too small", a.labels))
        })?;
        out.push(TrainingPair::new(a, b)?);
    }
    Ok(out)
}

/// Per-sequence augmentation parameters of one pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Augmentation {
    pub clip_len: usize,
    /// Crop start and flip follow the motion label.
    pub offset: [usize; 2],
    pub flip: [bool; 2],
    /// Scale follows the skeleton label.
    pub scale: [f64; 2],
}

impl Augmentation {
    pub fn identity(window: usize) -> Self {
        Augmentation { clip_len: window, offset: [0; 2], flip: [false; 2], scale: [1.0; 2] }
    }

    pub fn draw(clip_len: usize, window: usize, scale_range: (f64, f64), flip_prob: f64, rng: &mut impl Rng) -> Self {
        let mut draw_side = || {
            let offset = rng.random_range(0..=window - clip_len);
            let flip = rng.random_bool(flip_prob);
            let scale = if scale_range.0 < scale_range.1 { rng.random_range(scale_range.0..scale_range.1) } else { scale_range.0 };
            (offset, flip, scale)
        };
        let (oa, fa, sa) = draw_side();
        let (ob, fb, sb) = draw_side();
        Augmentation { clip_len, offset: [oa, ob], flip: [fa, fb], scale: [sa, sb] }
    }

    /// Applies the augmentation of a sequence whose motion comes from side
    /// `motion` and skeleton from side `skeleton`.
    pub fn apply(&self, s: &Sample2D, motion: Side, skeleton: Side, mirror: &[usize]) -> Result<Sample2D> {
        let (m, k) = (side_index(motion), side_index(skeleton));
        let mut out = s.crop(self.offset[m], self.clip_len)?.scaled(self.scale[k]);
        if self.flip[m] {
            out = out.flipped(mirror)?;
        }
        Ok(out)
    }
}

fn side_index(s: Side) -> usize {
    match s {
        Side::A => 0,
        Side::B => 1,
    }
}

/// The four sequences of a pair after consistent augmentation.
#[derive(Clone, Debug)]
pub struct AugmentedPair {
    pub a: Sample2D,
    pub b: Sample2D,
    pub gt_ab: Sample2D,
    pub gt_ba: Sample2D,
}

pub fn augment_pair(ds: &Dataset, pair: &TrainingPair, aug: &Augmentation) -> Result<AugmentedPair> {
    let mirror = ds.topology.mirror();
    Ok(AugmentedPair {
        a: aug.apply(ds.get(&pair.a)?, Side::A, Side::A, mirror)?,
        b: aug.apply(ds.get(&pair.b)?, Side::B, Side::B, mirror)?,
        gt_ab: aug.apply(ds.get(&pair.gt_ab)?, Side::A, Side::B, mirror)?,
        gt_ba: aug.apply(ds.get(&pair.gt_ba)?, Side::B, Side::A, mirror)?,
    })
}

/// With probability `p` per joint and frame, zeroes both coordinate
/// channels of the joint. Velocity channels are untouched.
pub fn inject_noise<T: Scalar>(x: &Tensor<T>, joints: usize, p: f64, rng: &mut impl Rng) -> Result<Tensor<T>> {
    let (c, t) = x.dims2()?;
    if c != 2 * joints {
        return Err(Error::Shape(format!("{c} channels for {joints} joints")));
    }
    let mut out = x.clone();
    if p <= 0.0 {
        return Ok(out);
    }
    for j in 0..joints - 1 {
        for f in 0..t {
            if rng.random_bool(p) {
                out.data_mut()[2 * j * t + f] = T::zero();
                out.data_mut()[(2 * j + 1) * t + f] = T::zero();
            }
        }
    }
    Ok(out)
}

/// Unlabelled stand-ins for in-the-wild pose tracks: fresh procedural
/// motions of the training families on fresh characters, seen from random
/// yaw angles, with positional jitter and dropped joints.
pub fn unlabeled_clips(ds: &Dataset, count: usize, jitter: f64, dropout: f64, seed: u64) -> Result<Vec<Sample2D>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let families: Vec<MotionFamily> = {
        let mut f: Vec<_> = (0..ds.spec.motions)
            .filter(|&i| ds.split.train_motions.contains(&i))
            .map(|i| ds.motions[i].family)
            .collect();
        f.sort_by_key(|x| x.name());
        f.dedup();
        f
    };
    if families.is_empty() {
        return Err(Error::InvalidInput("no training motions".into()));
    }
    let skeletons = skeleton_roster(ds.topology.clone(), count, &mut rng)?;
    let canonical = ds.canonical()?;
    let noise = Normal::new(0.0, 1.0).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut out = Vec::with_capacity(count);
    for (n, skel) in skeletons.iter().enumerate() {
        let family = families[n % families.len()];
        let spec = MotionSpec { family, params: MotionParams::sample(family, &mut rng) };
        let m = generate_motion(&ds.topology, &spec, ds.spec.window, ds.spec.fps)?;
        let clip = retarget_ground_truth(&m.rotations, &m.root_trajectory, &canonical, skel, ds.spec.fps)?;
        let yaw = rng.random_range(ds.spec.yaw_min..=ds.spec.yaw_max);
        let s = project(&clip, &CameraView::yaw(0, yaw))?;
        let scale = jitter * skel.height();
        let coords = s.coords().iter().map(|c| c + scale * noise.sample(&mut rng)).collect();
        let missing: Vec<bool> = (0..s.frames() * s.joints()).map(|i| i % s.joints() != 0 && rng.random_bool(dropout)).collect();
        out.push(Sample2D::new(s.joints(), s.fps, coords, None)?.with_missing(missing)?);
    }
    Ok(out)
}
