use std::collections::BTreeMap;

use rand::Rng;

use super::config::{ArchConfig, StaticStage};
use crate::tensorkit::{
    conv1d, conv1d_backward, dropout, dropout_backward, global_pool1d, global_pool1d_backward, leaky_relu,
    leaky_relu_backward, pool1d, pool1d_backward, upsample_nearest, upsample_nearest_backward, PoolKind,
    Scalar, Tensor, LEAKY_SLOPE,
};
use crate::{Error, Result};

pub type ParamMap<T> = BTreeMap<String, Tensor<T>>;

/// Named parameter tensors (`<component>/<layer>/<weight|bias>`) of one
/// architecture.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<T: Scalar = f32> {
    pub config: ArchConfig,
    pub tensors: ParamMap<T>,
}

impl<T: Scalar> ModelParams<T> {
    /// Fan-in scaled uniform weights (He bound for the leaky slope), zero
    /// biases.
    pub fn init(config: &ArchConfig, rng: &mut impl Rng) -> Result<Self> {
        config.validate()?;
        let gain = 6.0 / (1.0 + LEAKY_SLOPE * LEAKY_SLOPE);
        let mut tensors = BTreeMap::new();
        for (name, shape) in config.parameter_shapes() {
            let n: usize = shape.iter().product();
            let data = if name.ends_with("/weight") {
                let bound = init_bound(&shape, gain);
                (0..n).map(|_| T::of(rng.random_range(-bound..bound))).collect()
            } else {
                vec![T::zero(); n]
            };
            tensors.insert(name, Tensor::new(&shape, data)?);
        }
        Ok(ModelParams {
            config: config.clone(),
            tensors,
        })
    }

    /// Checks that the tensor set is exactly the one `config` declares.
    pub fn from_tensors(config: ArchConfig, tensors: ParamMap<T>) -> Result<Self> {
        config.validate()?;
        let expected = config.parameter_shapes();
        if expected.len() != tensors.len() {
            let orphans: Vec<_> = tensors
                .keys()
                .filter(|k| !expected.iter().any(|(n, _)| n == *k))
                .collect();
            return Err(Error::Format(format!(
                "{} tensors for {} parameters; unexpected: {orphans:?}",
                tensors.len(),
                expected.len()
            )));
        }
        for (name, shape) in &expected {
            let t = tensors
                .get(name)
                .ok_or_else(|| Error::Format(format!("missing parameter `{name}`")))?;
            if t.shape() != shape.as_slice() {
                return Err(Error::Format(format!("parameter `{name}` has shape {:?}, expected {shape:?}", t.shape())));
            }
        }
        Ok(ModelParams { config, tensors })
    }

    pub fn get(&self, name: &str) -> &Tensor<T> {
        self.tensors
            .get(name)
            .unwrap_or_else(|| panic!("parameter `{name}` declared by the config"))
    }

    pub fn cast<U: Scalar>(&self) -> ModelParams<U> {
        ModelParams {
            config: self.config.clone(),
            tensors: self.tensors.iter().map(|(k, v)| (k.clone(), v.cast())).collect(),
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors.values().map(Tensor::len).sum()
    }

    pub fn ensure_finite(&self) -> Result<()> {
        for (k, v) in &self.tensors {
            v.ensure_finite(k)?;
        }
        Ok(())
    }
}

pub fn init_bound(weight_shape: &[usize], gain: f64) -> f64 {
    let fan_in: usize = weight_shape[1..].iter().product();
    (gain / fan_in as f64).sqrt()
}

/// Accumulated parameter gradients.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Gradients<T: Scalar = f32> {
    pub map: ParamMap<T>,
}

impl<T: Scalar> Gradients<T> {
    pub fn new() -> Self {
        Gradients { map: BTreeMap::new() }
    }

    pub fn accumulate(&mut self, name: &str, g: Tensor<T>) -> Result<()> {
        match self.map.get_mut(name) {
            Some(acc) => acc.add_assign(&g),
            None => {
                self.map.insert(name.to_string(), g);
                Ok(())
            }
        }
    }

    pub fn scale(&mut self, alpha: T) {
        self.map.values_mut().for_each(|t| t.scale(alpha));
    }

    pub fn merge(&mut self, other: Gradients<T>, alpha: T) -> Result<()> {
        for (k, mut v) in other.map {
            v.scale(alpha);
            self.accumulate(&k, v)?;
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<T>> {
        self.map.get(name)
    }

    pub fn norm(&self) -> f64 {
        self.map
            .values()
            .map(|t| t.data().iter().map(|v| v.f64() * v.f64()).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }
}

/// Latent codes: motion `[D_m, T / 8]`, skeleton `[D_s, 1]`, view `[D_v, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LatentCodes<T: Scalar = f32> {
    pub motion: Tensor<T>,
    pub skeleton: Tensor<T>,
    pub view: Tensor<T>,
}

/// Upstream gradients for a subset of the latent spaces.
#[derive(Clone, Debug, Default)]
pub struct CodeGrads<T: Scalar = f32> {
    pub motion: Option<Tensor<T>>,
    pub skeleton: Option<Tensor<T>>,
    pub view: Option<Tensor<T>>,
}

impl<T: Scalar> CodeGrads<T> {
    pub fn is_empty(&self) -> bool {
        self.motion.is_none() && self.skeleton.is_none() && self.view.is_none()
    }

    pub fn add(&mut self, other: CodeGrads<T>) -> Result<()> {
        fn merge<T: Scalar>(slot: &mut Option<Tensor<T>>, g: Option<Tensor<T>>) -> Result<()> {
            match (slot.as_mut(), g) {
                (Some(a), Some(b)) => a.add_assign(&b),
                (None, Some(b)) => {
                    *slot = Some(b);
                    Ok(())
                }
                _ => Ok(()),
            }
        }
        merge(&mut self.motion, other.motion)?;
        merge(&mut self.skeleton, other.skeleton)?;
        merge(&mut self.view, other.view)
    }
}

fn layer<'a, T: Scalar>(p: &'a ModelParams<T>, component: &str, layer: &str) -> (&'a Tensor<T>, &'a Tensor<T>) {
    (
        p.get(&format!("{component}/{layer}/weight")),
        p.get(&format!("{component}/{layer}/bias")),
    )
}

fn accumulate_conv<T: Scalar>(grads: &mut Gradients<T>, component: &str, layer: &str, w: Tensor<T>, b: Tensor<T>) -> Result<()> {
    grads.accumulate(&format!("{component}/{layer}/weight"), w)?;
    grads.accumulate(&format!("{component}/{layer}/bias"), b)
}

fn slope<T: Scalar>() -> T {
    T::of(LEAKY_SLOPE)
}

struct ConvCache<T: Scalar> {
    input: Tensor<T>,
    pre: Tensor<T>,
    /// Post-activation (static encoders: the pooling input).
    act: Option<Tensor<T>>,
}

pub struct EncodeCache<T: Scalar> {
    motion: Vec<ConvCache<T>>,
    skeleton: Vec<ConvCache<T>>,
    view: Vec<ConvCache<T>>,
}

fn static_name(stage: StaticStage, i: usize) -> String {
    if stage == StaticStage::Projection {
        "proj".into()
    } else {
        format!("conv{i}")
    }
}

fn check_input<T: Scalar>(config: &ArchConfig, x: &Tensor<T>) -> Result<usize> {
    let (c, t) = x.dims2()?;
    if c != config.input_channels() {
        return Err(Error::Shape(format!("input has {c} channels, network expects {}", config.input_channels())));
    }
    if t == 0 || t % config.time_factor() != 0 {
        return Err(Error::Shape(format!("length {t} is not a positive multiple of {}", config.time_factor())));
    }
    Ok(t)
}

fn motion_forward<T: Scalar>(p: &ModelParams<T>, x: &Tensor<T>, cache: Option<&mut Vec<ConvCache<T>>>) -> Result<Tensor<T>> {
    let mut store = cache;
    let mut h = x.clone();
    for (i, spec) in p.config.motion_layers().iter().enumerate() {
        let (w, b) = layer(p, "motion", &format!("conv{i}"));
        let z = conv1d(&h, w, b, spec)?;
        let a = leaky_relu(&z, slope());
        if let Some(c) = store.as_deref_mut() {
            c.push(ConvCache {
                input: std::mem::replace(&mut h, a),
                pre: z,
                act: None,
            });
        } else {
            h = a;
        }
    }
    Ok(h)
}

fn static_forward<T: Scalar>(
    p: &ModelParams<T>,
    component: &str,
    dim: usize,
    kind: PoolKind,
    x: &Tensor<T>,
    cache: Option<&mut Vec<ConvCache<T>>>,
) -> Result<Tensor<T>> {
    let mut store = cache;
    let mut h = x.clone();
    for (i, (spec, stage)) in p.config.static_layers(dim).iter().enumerate() {
        let (w, b) = layer(p, component, &static_name(*stage, i));
        let z = conv1d(&h, w, b, spec)?;
        let (next, act) = match stage {
            StaticStage::Projection => (z.clone(), None),
            StaticStage::Pool => {
                let a = leaky_relu(&z, slope());
                (pool1d(&a, kind)?, Some(a))
            }
            StaticStage::GlobalPool => {
                let a = leaky_relu(&z, slope());
                (global_pool1d(&a, kind)?, Some(a))
            }
        };
        let input = std::mem::replace(&mut h, next);
        if let Some(c) = store.as_deref_mut() {
            c.push(ConvCache { input, pre: z, act });
        }
    }
    Ok(h)
}

fn static_backward<T: Scalar>(
    p: &ModelParams<T>,
    component: &str,
    dim: usize,
    kind: PoolKind,
    cache: &[ConvCache<T>],
    grad: Tensor<T>,
    grads: &mut Gradients<T>,
) -> Result<()> {
    let layers = p.config.static_layers(dim);
    let mut g = grad;
    for (i, ((spec, stage), c)) in layers.iter().zip(cache).enumerate().rev() {
        let gz = match stage {
            StaticStage::Projection => g,
            StaticStage::Pool => {
                let a = c.act.as_ref().expect("cached activation");
                leaky_relu_backward(&pool1d_backward(&g, a, kind)?, &c.pre, slope())?
            }
            StaticStage::GlobalPool => {
                let a = c.act.as_ref().expect("cached activation");
                leaky_relu_backward(&global_pool1d_backward(&g, a, kind)?, &c.pre, slope())?
            }
        };
        let name = static_name(*stage, i);
        let (w, _) = layer(p, component, &name);
        let cg = conv1d_backward(&gz, &c.input, w, spec)?;
        accumulate_conv(grads, component, &name, cg.weights, cg.bias)?;
        g = cg.input;
    }
    Ok(())
}

fn encode_impl<T: Scalar>(p: &ModelParams<T>, x: &Tensor<T>, cache: Option<&mut EncodeCache<T>>) -> Result<LatentCodes<T>> {
    check_input(&p.config, x)?;
    let pose = x.slice_channels(0, p.config.pose_channels())?;
    let c = &p.config;
    Ok(match cache {
        Some(cache) => LatentCodes {
            motion: motion_forward(p, x, Some(&mut cache.motion))?,
            skeleton: static_forward(p, "skeleton", c.skeleton_dim, PoolKind::Max, &pose, Some(&mut cache.skeleton))?,
            view: static_forward(p, "view", c.view_dim, PoolKind::Avg, &pose, Some(&mut cache.view))?,
        },
        None => LatentCodes {
            motion: motion_forward(p, x, None)?,
            skeleton: static_forward(p, "skeleton", c.skeleton_dim, PoolKind::Max, &pose, None)?,
            view: static_forward(p, "view", c.view_dim, PoolKind::Avg, &pose, None)?,
        },
    })
}

/// Runs the three encoders on a `[2(J-1)+2, T]` input. The skeleton and view
/// encoders see only the pose channels.
pub fn encode<T: Scalar>(p: &ModelParams<T>, x: &Tensor<T>) -> Result<LatentCodes<T>> {
    encode_impl(p, x, None)
}

pub fn encode_with_cache<T: Scalar>(p: &ModelParams<T>, x: &Tensor<T>) -> Result<(LatentCodes<T>, EncodeCache<T>)> {
    let mut cache = EncodeCache {
        motion: Vec::new(),
        skeleton: Vec::new(),
        view: Vec::new(),
    };
    let codes = encode_impl(p, x, Some(&mut cache))?;
    Ok((codes, cache))
}

/// Accumulates parameter gradients of the encoders given code gradients.
pub fn encode_backward<T: Scalar>(
    p: &ModelParams<T>,
    cache: &EncodeCache<T>,
    grad: &CodeGrads<T>,
    grads: &mut Gradients<T>,
) -> Result<()> {
    let c = &p.config;
    if let Some(g) = &grad.motion {
        let layers = c.motion_layers();
        let mut g = g.clone();
        for (i, (spec, cc)) in layers.iter().zip(&cache.motion).enumerate().rev() {
            let gz = leaky_relu_backward(&g, &cc.pre, slope())?;
            let name = format!("conv{i}");
            let (w, _) = layer(p, "motion", &name);
            let cg = conv1d_backward(&gz, &cc.input, w, spec)?;
            accumulate_conv(grads, "motion", &name, cg.weights, cg.bias)?;
            g = cg.input;
        }
    }
    if let Some(g) = &grad.skeleton {
        static_backward(p, "skeleton", c.skeleton_dim, PoolKind::Max, &cache.skeleton, g.clone(), grads)?;
    }
    if let Some(g) = &grad.view {
        static_backward(p, "view", c.view_dim, PoolKind::Avg, &cache.view, g.clone(), grads)?;
    }
    Ok(())
}

/// Concatenates motion, tiled skeleton and tiled view codes on the channel axis.
pub fn fuse_codes<T: Scalar>(config: &ArchConfig, codes: &LatentCodes<T>) -> Result<Tensor<T>> {
    let (dm, len) = codes.motion.dims2()?;
    if dm != config.motion_dim()
        || codes.skeleton.shape() != [config.skeleton_dim, 1]
        || codes.view.shape() != [config.view_dim, 1]
        || len == 0
    {
        return Err(Error::Shape(format!(
            "codes {:?}/{:?}/{:?} do not match the architecture",
            codes.motion.shape(),
            codes.skeleton.shape(),
            codes.view.shape()
        )));
    }
    let skel = upsample_nearest(&codes.skeleton, len)?;
    let view = upsample_nearest(&codes.view, len)?;
    Tensor::concat_channels(&[&codes.motion, &skel, &view])
}

struct DecodeStage<T: Scalar> {
    up: Tensor<T>,
    dropped: Tensor<T>,
    mask: Option<Tensor<T>>,
}

pub struct DecodeCache<T: Scalar> {
    stages: Vec<DecodeStage<T>>,
}

/// Decodes fused codes back to `[2(J-1)+2, 8 L]`. Dropout is active only
/// when an rng is supplied.
pub fn decode_with_cache<T: Scalar, R: Rng>(
    p: &ModelParams<T>,
    codes: &LatentCodes<T>,
    mut dropout_rng: Option<&mut R>,
) -> Result<(Tensor<T>, DecodeCache<T>)> {
    let layers = p.config.decoder_layers();
    let mut h = fuse_codes(&p.config, codes)?;
    let mut stages = Vec::with_capacity(layers.len());
    for (i, spec) in layers.iter().enumerate() {
        let up = upsample_nearest(&h, 2)?;
        let (w, b) = layer(p, "decoder", &format!("conv{i}"));
        let z = conv1d(&up, w, b, spec)?;
        if i + 1 == layers.len() {
            h = z.clone();
            stages.push(DecodeStage { up, dropped: z, mask: None });
        } else {
            let (d, mask) = match dropout_rng.as_deref_mut() {
                Some(rng) => dropout(&z, p.config.dropout, true, rng)?,
                None => (z.clone(), None),
            };
            h = leaky_relu(&d, slope());
            stages.push(DecodeStage { up, dropped: d, mask });
        }
    }
    Ok((h, DecodeCache { stages }))
}

pub fn decode<T: Scalar>(p: &ModelParams<T>, codes: &LatentCodes<T>) -> Result<Tensor<T>> {
    Ok(decode_with_cache::<T, rand_chacha::ChaCha8Rng>(p, codes, None)?.0)
}

/// Accumulates decoder parameter gradients and returns the code gradients.
pub fn decode_backward<T: Scalar>(
    p: &ModelParams<T>,
    cache: &DecodeCache<T>,
    grad_out: &Tensor<T>,
    grads: &mut Gradients<T>,
) -> Result<CodeGrads<T>> {
    let layers = p.config.decoder_layers();
    let n = layers.len();
    let mut g = grad_out.clone();
    for (i, (spec, st)) in layers.iter().zip(&cache.stages).enumerate().rev() {
        let gz = if i + 1 == n {
            g
        } else {
            let gd = leaky_relu_backward(&g, &st.dropped, slope())?;
            dropout_backward(&gd, st.mask.as_ref())?
        };
        let name = format!("conv{i}");
        let (w, _) = layer(p, "decoder", &name);
        let cg = conv1d_backward(&gz, &st.up, w, spec)?;
        accumulate_conv(grads, "decoder", &name, cg.weights, cg.bias)?;
        g = upsample_nearest_backward(&cg.input, 2)?;
    }
    let c = &p.config;
    let (dm, ds) = (c.motion_dim(), c.skeleton_dim);
    let sum_time = |t: Tensor<T>| -> Result<Tensor<T>> {
        let len = t.shape()[1];
        upsample_nearest_backward(&t, len)
    };
    Ok(CodeGrads {
        motion: Some(g.slice_channels(0, dm)?),
        skeleton: Some(sum_time(g.slice_channels(dm, dm + ds)?)?),
        view: Some(sum_time(g.slice_channels(dm + ds, c.decoder_input())?)?),
    })
}

/// Output length for an input of `frames` frames.
pub fn motion_code_len(config: &ArchConfig, frames: usize) -> usize {
    frames.div_ceil(config.time_factor())
}
