use rand::Rng;

use super::tensor::{Scalar, Tensor};
use crate::{Error, Result};

/// Inverted dropout. Returns the output and the per-element multiplier
/// (`0` or `1 / (1 - p)`), which is also the backward mask.
pub fn dropout<T: Scalar>(
    x: &Tensor<T>,
    p: f64,
    training: bool,
    rng: &mut impl Rng,
) -> Result<(Tensor<T>, Option<Tensor<T>>)> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidInput(format!("dropout probability {p}")));
    }
    if !training || p == 0.0 {
        return Ok((x.clone(), None));
    }
    let keep = T::of(1.0 / (1.0 - p));
    let mask_data: Vec<T> = (0..x.len())
        .map(|_| if rng.random::<f64>() < p { T::zero() } else { keep })
        .collect();
    let mask = Tensor::new(x.shape(), mask_data)?;
    let out = Tensor::new(
        x.shape(),
        x.data().iter().zip(mask.data()).map(|(&v, &m)| v * m).collect(),
    )?;
    Ok((out, Some(mask)))
}

pub fn dropout_backward<T: Scalar>(grad_out: &Tensor<T>, mask: Option<&Tensor<T>>) -> Result<Tensor<T>> {
    match mask {
        None => Ok(grad_out.clone()),
        Some(m) => {
            grad_out.same_shape(m)?;
            Tensor::new(
                grad_out.shape(),
                grad_out.data().iter().zip(m.data()).map(|(&g, &k)| g * k).collect(),
            )
        }
    }
}
