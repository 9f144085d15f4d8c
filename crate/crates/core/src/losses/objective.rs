use rand::Rng;
use serde::{Deserialize, Serialize};

use super::terms::{foot_velocity_loss, mse, triplet_loss, TRIPLET_MARGIN};
use super::triplets::{Source, Space, TRIPLET_PLAN};
use crate::motiondata::NormStats;
use crate::network::{
    decode_backward, decode_with_cache, encode_backward, encode_with_cache, CodeGrads, Gradients, LatentCodes,
    ModelParams,
};
use crate::tensorkit::{Scalar, Tensor};
use crate::{Error, Result};

/// Term weights: `rec * L_rec + cross * L_cross + triplet * L_trip + foot * L_foot`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossWeights {
    pub rec: f64,
    pub cross: f64,
    pub triplet: f64,
    pub foot: f64,
    pub margin: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            rec: 1.0,
            cross: 1.0,
            triplet: 0.1,
            foot: 0.5,
            margin: TRIPLET_MARGIN,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.rec, self.cross, self.triplet, self.foot, self.margin];
        if all.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidInput(format!("loss weights {all:?}")));
        }
        Ok(())
    }
}

/// Unweighted loss values of one evaluation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossComponents {
    pub rec: f64,
    pub cross: f64,
    pub triplet_motion: f64,
    pub triplet_skeleton: f64,
    pub triplet_view: f64,
    pub foot: f64,
}

impl LossComponents {
    /// Motion-space triplet term plus the static (skeleton + view) term.
    pub fn triplet(&self) -> f64 {
        self.triplet_motion + self.triplet_skeleton + self.triplet_view
    }

    pub fn total(&self, w: &LossWeights) -> f64 {
        w.rec * self.rec + w.cross * self.cross + w.triplet * self.triplet() + w.foot * self.foot
    }

    pub fn add_scaled(&mut self, o: &LossComponents, s: f64) {
        self.rec += s * o.rec;
        self.cross += s * o.cross;
        self.triplet_motion += s * o.triplet_motion;
        self.triplet_skeleton += s * o.triplet_skeleton;
        self.triplet_view += s * o.triplet_view;
        self.foot += s * o.foot;
    }

    pub fn is_finite(&self) -> bool {
        [self.rec, self.cross, self.triplet(), self.foot].iter().all(|v| v.is_finite())
    }
}

/// `L_cross_rec + l1 * L_trip + l2 * L_foot`.
pub fn total_loss(cross_rec: f64, triplet: f64, foot: f64, w: &LossWeights) -> f64 {
    cross_rec + w.triplet * triplet + w.foot * foot
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

/// A decoded combination of the two inputs' codes and its ground truth.
#[derive(Clone, Debug)]
pub struct CrossTerm<T: Scalar> {
    pub motion: Side,
    pub skeleton: Side,
    pub view: Side,
    pub target: Tensor<T>,
}

/// Normalized tensors for one training pair. `*_in` are network inputs
/// (possibly corrupted); everything else is a clean target. `gt_ab` has
/// a's motion with b's skeleton and view; `gt_ba` the reverse.
#[derive(Clone, Debug)]
pub struct PairTensors<T: Scalar> {
    pub a_in: Tensor<T>,
    pub b_in: Tensor<T>,
    pub a: Tensor<T>,
    pub b: Tensor<T>,
    pub gt_ab: Tensor<T>,
    pub gt_ba: Tensor<T>,
    /// Additional single-attribute swaps.
    pub extra: Vec<CrossTerm<T>>,
}

pub struct ObjectiveContext<'a> {
    pub stats: &'a NormStats,
    pub end_effectors: &'a [usize],
    pub weights: LossWeights,
}

#[derive(Default)]
struct Routed<T: Scalar> {
    a: CodeGrads<T>,
    b: CodeGrads<T>,
    ab: CodeGrads<T>,
    ba: CodeGrads<T>,
}

impl<T: Scalar> Routed<T> {
    fn side(&mut self, s: Side) -> &mut CodeGrads<T> {
        match s {
            Side::A => &mut self.a,
            Side::B => &mut self.b,
        }
    }

    fn source(&mut self, s: Source) -> &mut CodeGrads<T> {
        match s {
            Source::A => &mut self.a,
            Source::B => &mut self.b,
            Source::AB => &mut self.ab,
            Source::BA => &mut self.ba,
        }
    }
}

fn compose<T: Scalar>(a: &LatentCodes<T>, b: &LatentCodes<T>, m: Side, s: Side, v: Side) -> LatentCodes<T> {
    let pick = |side| if side == Side::A { a } else { b };
    LatentCodes {
        motion: pick(m).motion.clone(),
        skeleton: pick(s).skeleton.clone(),
        view: pick(v).view.clone(),
    }
}

fn add_grad<T: Scalar>(slot: &mut Option<Tensor<T>>, g: Tensor<T>, scale: T) -> Result<()> {
    match slot {
        Some(acc) => acc.axpy(scale, &g),
        None => {
            let mut g = g;
            g.scale(scale);
            *slot = Some(g);
            Ok(())
        }
    }
}

/// Combined objective of one pair: both reconstructions (averaged), the
/// cross reconstructions (summed), two triplets per latent space
/// (averaged) and the end-effector velocity term averaged over every
/// decoded output. Accumulates weighted parameter gradients into `grads`
/// when given; dropout is active when `dropout_rng` is given.
pub fn pair_objective<T: Scalar, R: Rng>(
    params: &ModelParams<T>,
    pair: &PairTensors<T>,
    ctx: &ObjectiveContext,
    mut dropout_rng: Option<&mut R>,
    mut grads: Option<&mut Gradients<T>>,
) -> Result<LossComponents> {
    let w = &ctx.weights;
    let (ca, cache_a) = encode_with_cache(params, &pair.a_in)?;
    let (cb, cache_b) = encode_with_cache(params, &pair.b_in)?;
    let (cab, cache_ab) = encode_with_cache(params, &pair.gt_ab)?;
    let (cba, cache_ba) = encode_with_cache(params, &pair.gt_ba)?;

    let mut terms: Vec<(Side, Side, Side, &Tensor<T>, bool)> = vec![
        (Side::A, Side::A, Side::A, &pair.a, true),
        (Side::B, Side::B, Side::B, &pair.b, true),
        (Side::A, Side::B, Side::B, &pair.gt_ab, false),
        (Side::B, Side::A, Side::A, &pair.gt_ba, false),
    ];
    for t in &pair.extra {
        terms.push((t.motion, t.skeleton, t.view, &t.target, false));
    }
    let outputs = terms.len() as f64;
    let mut out = LossComponents::default();
    let mut routed = Routed::default();
    for (m, s, v, target, is_rec) in terms {
        let codes = compose(&ca, &cb, m, s, v);
        let (y, cache) = decode_with_cache(params, &codes, dropout_rng.as_deref_mut())?;
        let (l, g_mse) = mse(&y, target)?;
        let (f, g_foot) = foot_velocity_loss(&y, target, ctx.stats, ctx.end_effectors)?;
        let mse_weight = if is_rec {
            out.rec += 0.5 * l;
            0.5 * w.rec
        } else {
            out.cross += l;
            w.cross
        };
        out.foot += f / outputs;
        let foot_weight = w.foot / outputs;
        if let Some(g) = grads.as_deref_mut() {
            if mse_weight == 0.0 && foot_weight == 0.0 {
                continue;
            }
            let mut g_out = g_mse;
            g_out.scale(T::of(mse_weight));
            g_out.axpy(T::of(foot_weight), &g_foot)?;
            let cg = decode_backward(params, &cache, &g_out, g)?;
            let one = T::one();
            add_grad(&mut routed.side(m).motion, cg.motion.expect("decoder returns all code grads"), one)?;
            add_grad(&mut routed.side(s).skeleton, cg.skeleton.expect("decoder returns all code grads"), one)?;
            add_grad(&mut routed.side(v).view, cg.view.expect("decoder returns all code grads"), one)?;
        }
    }

    let half = T::of(0.5 * w.triplet);
    for t in TRIPLET_PLAN {
        let codes = |s: Source| match s {
            Source::A => &ca,
            Source::B => &cb,
            Source::AB => &cab,
            Source::BA => &cba,
        };
        let pick = |c: &LatentCodes<T>| -> Tensor<T> {
            match t.space {
                Space::Motion => c.motion.clone(),
                Space::Skeleton => c.skeleton.clone(),
                Space::View => c.view.clone(),
            }
        };
        let (v, [ga, gp, gn]) = triplet_loss(&pick(codes(t.anchor)), &pick(codes(t.positive)), &pick(codes(t.negative)), w.margin)?;
        *match t.space {
            Space::Motion => &mut out.triplet_motion,
            Space::Skeleton => &mut out.triplet_skeleton,
            Space::View => &mut out.triplet_view,
        } += 0.5 * v;
        if grads.is_some() && w.triplet > 0.0 && v > 0.0 {
            for (src, g) in [(t.anchor, ga), (t.positive, gp), (t.negative, gn)] {
                let cg = routed.source(src);
                let slot = match t.space {
                    Space::Motion => &mut cg.motion,
                    Space::Skeleton => &mut cg.skeleton,
                    Space::View => &mut cg.view,
                };
                add_grad(slot, g, half)?;
            }
        }
    }

    if let Some(g) = grads {
        for (cache, cg) in [(&cache_a, &routed.a), (&cache_b, &routed.b), (&cache_ab, &routed.ab), (&cache_ba, &routed.ba)] {
            if !cg.is_empty() {
                encode_backward(params, cache, cg, g)?;
            }
        }
    }
    Ok(out)
}

/// Plain autoencoder reconstruction of `x_in` against the clean `target`;
/// accumulates `weight`-scaled gradients when `grads` is given.
pub fn reconstruction_objective<T: Scalar, R: Rng>(
    params: &ModelParams<T>,
    x_in: &Tensor<T>,
    target: &Tensor<T>,
    weight: f64,
    dropout_rng: Option<&mut R>,
    grads: Option<&mut Gradients<T>>,
) -> Result<f64> {
    let (codes, ecache) = encode_with_cache(params, x_in)?;
    let (y, dcache) = decode_with_cache(params, &codes, dropout_rng)?;
    let (l, mut g) = mse(&y, target)?;
    if let Some(grads) = grads {
        g.scale(T::of(weight));
        let cg = decode_backward(params, &dcache, &g, grads)?;
        encode_backward(params, &ecache, &cg, grads)?;
    }
    Ok(l)
}
