//! Temporal 1D convolution with reflected padding.
//!
//! The padded input is split into `stride` phases so every kernel tap reads a
//! contiguous run of samples, which keeps the inner loops vectorizable for
//! both stride 1 and stride 2.

use serde::{Deserialize, Serialize};

use super::tensor::{Scalar, Tensor};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
}

impl ConvSpec {
    pub fn new(in_channels: usize, out_channels: usize, kernel: usize, stride: usize) -> Self {
        ConvSpec {
            in_channels,
            out_channels,
            kernel,
            stride,
        }
    }

    /// Reflected padding `(left, right)`; total is `kernel - 1`, the odd
    /// sample goes to the right.
    pub fn padding(&self) -> (usize, usize) {
        let total = self.kernel - 1;
        (total / 2, total - total / 2)
    }

    pub fn output_len(&self, input_len: usize) -> usize {
        input_len.div_ceil(self.stride)
    }

    pub fn weight_shape(&self) -> [usize; 3] {
        [self.out_channels, self.in_channels, self.kernel]
    }

    fn validate(&self) -> Result<()> {
        if self.in_channels == 0 || self.out_channels == 0 || self.kernel == 0 {
            return Err(Error::InvalidInput(format!("degenerate conv {self:?}")));
        }
        if self.stride != 1 && self.stride != 2 {
            return Err(Error::InvalidInput(format!(
                "stride {} unsupported",
                self.stride
            )));
        }
        Ok(())
    }
}

/// Maps a padded-coordinate index back into `[0, len)` by mirror reflection
/// (edge sample not repeated).
fn reflect(j: isize, len: usize) -> usize {
    let n = len as isize;
    let r = if j < 0 {
        -j
    } else if j >= n {
        2 * (n - 1) - j
    } else {
        j
    };
    debug_assert!((0..n).contains(&r));
    r as usize
}

/// Padded input stored per channel per stride phase.
struct Phased<T> {
    phase_len: usize,
    stride: usize,
    // [channel][phase][phase_len]
    data: Vec<T>,
}

impl<T: Scalar> Phased<T> {
    fn build(x: &Tensor<T>, spec: &ConvSpec) -> Self {
        let (c_in, len) = (x.shape()[0], x.shape()[1]);
        let (pl, _) = spec.padding();
        let padded = len + spec.kernel - 1;
        let s = spec.stride;
        let phase_len = padded.div_ceil(s);
        let mut data = vec![T::zero(); c_in * s * phase_len];
        for c in 0..c_in {
            let row = x.row(c);
            for m in 0..padded {
                let src = reflect(m as isize - pl as isize, len);
                data[(c * s + m % s) * phase_len + m / s] = row[src];
            }
        }
        Phased {
            phase_len,
            stride: s,
            data,
        }
    }

    fn run(&self, c: usize, tap: usize) -> &[T] {
        let p = tap % self.stride;
        let start = (c * self.stride + p) * self.phase_len + tap / self.stride;
        &self.data[start..]
    }
}

fn check_inputs<T: Scalar>(
    x: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
    spec: &ConvSpec,
) -> Result<(usize, usize)> {
    spec.validate()?;
    let (c_in, len) = x.dims2()?;
    if c_in != spec.in_channels {
        return Err(Error::Shape(format!(
            "conv expects {} input channels, got {c_in}",
            spec.in_channels
        )));
    }
    if weights.shape() != spec.weight_shape() {
        return Err(Error::Shape(format!(
            "conv weights {:?}, expected {:?}",
            weights.shape(),
            spec.weight_shape()
        )));
    }
    if bias.shape() != [spec.out_channels] {
        return Err(Error::Shape(format!(
            "conv bias {:?}, expected [{}]",
            bias.shape(),
            spec.out_channels
        )));
    }
    if len == 0 || len < spec.kernel {
        return Err(Error::Shape(format!(
            "reflected padding needs at least {} time steps, got {len}",
            spec.kernel
        )));
    }
    Ok((len, spec.output_len(len)))
}

pub fn conv1d<T: Scalar>(
    x: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
    spec: &ConvSpec,
) -> Result<Tensor<T>> {
    let (_, out_len) = check_inputs(x, weights, bias, spec)?;
    let phased = Phased::build(x, spec);
    let k = spec.kernel;
    let w = weights.data();
    let mut out = vec![T::zero(); spec.out_channels * out_len];
    for (o, y) in out.chunks_exact_mut(out_len).enumerate() {
        y.fill(bias.data()[o]);
        for c in 0..spec.in_channels {
            let wrow = &w[(o * spec.in_channels + c) * k..][..k];
            for (q, &wq) in wrow.iter().enumerate() {
                let src = &phased.run(c, q)[..out_len];
                for (yv, &xv) in y.iter_mut().zip(src) {
                    *yv += wq * xv;
                }
            }
        }
    }
    Tensor::new(&[spec.out_channels, out_len], out)
}

/// Gradients of [`conv1d`] with respect to input, weights and bias.
pub struct ConvGrads<T> {
    pub input: Tensor<T>,
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
}

pub fn conv1d_backward<T: Scalar>(
    grad_out: &Tensor<T>,
    x: &Tensor<T>,
    weights: &Tensor<T>,
    spec: &ConvSpec,
) -> Result<ConvGrads<T>> {
    let zero_bias = Tensor::zeros(&[spec.out_channels]);
    let (len, out_len) = check_inputs(x, weights, &zero_bias, spec)?;
    if grad_out.shape() != [spec.out_channels, out_len] {
        return Err(Error::Shape(format!(
            "conv grad_out {:?}, expected [{}, {out_len}]",
            grad_out.shape(),
            spec.out_channels
        )));
    }
    let k = spec.kernel;
    let s = spec.stride;
    let c_in = spec.in_channels;
    let phased = Phased::build(x, spec);
    let w = weights.data();

    let mut gb = vec![T::zero(); spec.out_channels];
    let mut gw = vec![T::zero(); w.len()];
    let mut gphase = vec![T::zero(); phased.data.len()];
    for o in 0..spec.out_channels {
        let gy = grad_out.row(o);
        gb[o] = gy.iter().copied().sum();
        for c in 0..c_in {
            let base = (o * c_in + c) * k;
            for q in 0..k {
                let src = &phased.run(c, q)[..out_len];
                gw[base + q] = gy.iter().zip(src).map(|(&g, &v)| g * v).sum();
                let wq = w[base + q];
                let start = (c * s + q % s) * phased.phase_len + q / s;
                for (dst, &g) in gphase[start..start + out_len].iter_mut().zip(gy) {
                    *dst += wq * g;
                }
            }
        }
    }

    let (pl, _) = spec.padding();
    let padded = len + k - 1;
    let mut gx = vec![T::zero(); c_in * len];
    for c in 0..c_in {
        for m in 0..padded {
            let g = gphase[(c * s + m % s) * phased.phase_len + m / s];
            gx[c * len + reflect(m as isize - pl as isize, len)] += g;
        }
    }
    Ok(ConvGrads {
        input: Tensor::new(&[c_in, len], gx)?,
        weights: Tensor::new(&spec.weight_shape(), gw)?,
        bias: Tensor::new(&[spec.out_channels], gb)?,
    })
}
