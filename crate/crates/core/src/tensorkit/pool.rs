//! Temporal pooling and nearest-neighbour upsampling.

use serde::{Deserialize, Serialize};

use super::tensor::{Scalar, Tensor};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolKind {
    Max,
    Avg,
}

/// Window-2, stride-2 pooling over time. An odd trailing sample forms its own
/// window.
pub fn pool1d<T: Scalar>(x: &Tensor<T>, kind: PoolKind) -> Result<Tensor<T>> {
    let (c, len) = x.dims2()?;
    if len == 0 {
        return Err(Error::Shape("pooling an empty sequence".into()));
    }
    let out_len = len.div_ceil(2);
    let mut out = Vec::with_capacity(c * out_len);
    for ch in 0..c {
        let row = x.row(ch);
        for w in row.chunks(2) {
            out.push(match kind {
                PoolKind::Max => w.iter().copied().fold(T::neg_infinity(), T::max),
                PoolKind::Avg => w.iter().copied().sum::<T>() / T::of(w.len() as f64),
            });
        }
    }
    Tensor::new(&[c, out_len], out)
}

pub fn pool1d_backward<T: Scalar>(grad_out: &Tensor<T>, x: &Tensor<T>, kind: PoolKind) -> Result<Tensor<T>> {
    let (c, len) = x.dims2()?;
    let out_len = len.div_ceil(2);
    if grad_out.shape() != [c, out_len] {
        return Err(Error::Shape(format!(
            "pool grad_out {:?}, expected [{c}, {out_len}]",
            grad_out.shape()
        )));
    }
    let mut gx = Tensor::zeros(&[c, len]);
    for ch in 0..c {
        let row = x.row(ch);
        let gy = grad_out.row(ch);
        let dst = gx.row_mut(ch);
        for (i, w) in row.chunks(2).enumerate() {
            match kind {
                PoolKind::Max => {
                    // first maximum wins ties
                    let arg = if w.len() == 2 && w[1] > w[0] { 1 } else { 0 };
                    dst[2 * i + arg] += gy[i];
                }
                PoolKind::Avg => {
                    let share = gy[i] / T::of(w.len() as f64);
                    for j in 0..w.len() {
                        dst[2 * i + j] += share;
                    }
                }
            }
        }
    }
    Ok(gx)
}

/// Collapses the time axis to length 1.
pub fn global_pool1d<T: Scalar>(x: &Tensor<T>, kind: PoolKind) -> Result<Tensor<T>> {
    let (c, len) = x.dims2()?;
    if len == 0 {
        return Err(Error::Shape("pooling an empty sequence".into()));
    }
    let data = (0..c)
        .map(|ch| {
            let row = x.row(ch);
            match kind {
                PoolKind::Max => row.iter().copied().fold(T::neg_infinity(), T::max),
                PoolKind::Avg => row.iter().copied().sum::<T>() / T::of(len as f64),
            }
        })
        .collect();
    Tensor::new(&[c, 1], data)
}

pub fn global_pool1d_backward<T: Scalar>(
    grad_out: &Tensor<T>,
    x: &Tensor<T>,
    kind: PoolKind,
) -> Result<Tensor<T>> {
    let (c, len) = x.dims2()?;
    if grad_out.shape() != [c, 1] {
        return Err(Error::Shape(format!(
            "global pool grad_out {:?}, expected [{c}, 1]",
            grad_out.shape()
        )));
    }
    let mut gx = Tensor::zeros(&[c, len]);
    for ch in 0..c {
        let g = grad_out.data()[ch];
        let row = x.row(ch);
        let dst = gx.row_mut(ch);
        match kind {
            PoolKind::Max => {
                let mut arg = 0;
                for (i, &v) in row.iter().enumerate() {
                    if v > row[arg] {
                        arg = i;
                    }
                }
                dst[arg] += g;
            }
            PoolKind::Avg => {
                let share = g / T::of(len as f64);
                dst.iter_mut().for_each(|d| *d += share);
            }
        }
    }
    Ok(gx)
}

pub fn upsample_nearest<T: Scalar>(x: &Tensor<T>, factor: usize) -> Result<Tensor<T>> {
    let (c, len) = x.dims2()?;
    if factor == 0 {
        return Err(Error::InvalidInput("upsampling factor 0".into()));
    }
    let mut out = Vec::with_capacity(c * len * factor);
    for ch in 0..c {
        for &v in x.row(ch) {
            out.extend(std::iter::repeat_n(v, factor));
        }
    }
    Tensor::new(&[c, len * factor], out)
}

/// Sums the gradient over each group of duplicated samples.
pub fn upsample_nearest_backward<T: Scalar>(grad_out: &Tensor<T>, factor: usize) -> Result<Tensor<T>> {
    let (c, len) = grad_out.dims2()?;
    if factor == 0 || len % factor != 0 {
        return Err(Error::Shape(format!(
            "upsample grad length {len} not divisible by {factor}"
        )));
    }
    let mut out = Vec::with_capacity(c * len / factor);
    for ch in 0..c {
        out.extend(grad_out.row(ch).chunks(factor).map(|w| w.iter().copied().sum::<T>()));
    }
    Tensor::new(&[c, len / factor], out)
}
