use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

use crate::{Error, Result};

/// Floating point element type of a [`Tensor`].
///
/// Implemented for `f64` (gradient checks, metrics) and `f32` (training,
/// checkpoints).
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Send
    + Sync
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + 'static
{
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 converts to every Scalar")
    }

    fn f64(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Dense row-major tensor of rank 1 to 3.
///
/// Sequence data uses channel-major layout `[channels, time]`; convolution
/// weights are `[out_channels, in_channels, kernel]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T = f64> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn new(shape: &[usize], data: Vec<T>) -> Result<Self> {
        if shape.is_empty() || shape.len() > 3 {
            return Err(Error::Shape(format!("rank {} unsupported", shape.len())));
        }
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::Shape(format!(
                "shape {shape:?} holds {n} values, got {}",
                data.len()
            )));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Tensor::new(shape, vec![T::zero(); n]).expect("zeros shape is consistent")
    }

    pub fn full(shape: &[usize], value: T) -> Self {
        let n = shape.iter().product();
        Tensor::new(shape, vec![value; n]).expect("full shape is consistent")
    }

    /// Rank-2 `[channels, time]` tensor from per-channel rows.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let c = rows.len();
        let t = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != t) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Tensor::new(&[c, t], rows.concat())
    }

    pub fn from_f64(shape: &[usize], data: &[f64]) -> Result<Self> {
        Tensor::new(shape, data.iter().map(|&v| T::of(v)).collect())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    /// `(channels, time)` of a rank-2 tensor.
    pub fn dims2(&self) -> Result<(usize, usize)> {
        match self.shape[..] {
            [c, t] => Ok((c, t)),
            _ => Err(Error::Shape(format!(
                "expected [channels, time], got {:?}",
                self.shape
            ))),
        }
    }

    pub fn row(&self, c: usize) -> &[T] {
        let t = self.shape[self.rank() - 1];
        &self.data[c * t..(c + 1) * t]
    }

    pub fn row_mut(&mut self, c: usize) -> &mut [T] {
        let t = self.shape[self.rank() - 1];
        &mut self.data[c * t..(c + 1) * t]
    }

    pub fn at2(&self, c: usize, t: usize) -> T {
        self.data[c * self.shape[1] + t]
    }

    pub fn reshape(self, shape: &[usize]) -> Result<Self> {
        Tensor::new(shape, self.data)
    }

    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| U::of(v.f64())).collect(),
        }
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.data.iter().map(|v| v.f64()).collect()
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn ensure_finite(&self, what: &str) -> Result<()> {
        if self.all_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(what.to_string()))
        }
    }

    pub fn same_shape(&self, other: &Tensor<T>) -> Result<()> {
        if self.shape == other.shape {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "{:?} vs {:?}",
                self.shape, other.shape
            )))
        }
    }

    /// In-place `self += other`.
    pub fn add_assign(&mut self, other: &Tensor<T>) -> Result<()> {
        self.same_shape(other)?;
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    /// In-place `self += alpha * other`.
    pub fn axpy(&mut self, alpha: T, other: &Tensor<T>) -> Result<()> {
        self.same_shape(other)?;
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn scale(&mut self, alpha: T) {
        for a in &mut self.data {
            *a *= alpha;
        }
    }

    pub fn sub(&self, other: &Tensor<T>) -> Result<Self> {
        self.same_shape(other)?;
        Ok(Tensor {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a - b)
                .collect(),
        })
    }

    pub fn dot(&self, other: &Tensor<T>) -> Result<T> {
        self.same_shape(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(&a, &b)| a * b).sum())
    }

    pub fn norm(&self) -> T {
        self.data.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    /// Rows `[start, end)` of a rank-2 tensor.
    pub fn slice_channels(&self, start: usize, end: usize) -> Result<Self> {
        let (c, t) = self.dims2()?;
        if start > end || end > c {
            return Err(Error::Shape(format!("channels {start}..{end} of {c}")));
        }
        Tensor::new(&[end - start, t], self.data[start * t..end * t].to_vec())
    }

    /// Columns `[start, end)` of a rank-2 tensor.
    pub fn slice_time(&self, start: usize, end: usize) -> Result<Self> {
        let (c, t) = self.dims2()?;
        if start > end || end > t {
            return Err(Error::Shape(format!("time {start}..{end} of {t}")));
        }
        let mut out = Vec::with_capacity(c * (end - start));
        for ch in 0..c {
            out.extend_from_slice(&self.data[ch * t + start..ch * t + end]);
        }
        Tensor::new(&[c, end - start], out)
    }

    /// Stacks rank-2 tensors with equal time length along the channel axis.
    pub fn concat_channels(parts: &[&Tensor<T>]) -> Result<Self> {
        let t = parts
            .first()
            .ok_or_else(|| Error::Shape("nothing to concatenate".into()))?
            .dims2()?
            .1;
        let mut c = 0;
        let mut data = Vec::new();
        for p in parts {
            let (pc, pt) = p.dims2()?;
            if pt != t {
                return Err(Error::Shape(format!("time {pt} vs {t} in concat")));
            }
            c += pc;
            data.extend_from_slice(&p.data);
        }
        Tensor::new(&[c, t], data)
    }

    /// Joins rank-2 tensors with equal channel count along the time axis.
    pub fn concat_time(parts: &[&Tensor<T>]) -> Result<Self> {
        let c = parts
            .first()
            .ok_or_else(|| Error::Shape("nothing to concatenate".into()))?
            .dims2()?
            .0;
        let mut total = 0;
        for p in parts {
            let (pc, pt) = p.dims2()?;
            if pc != c {
                return Err(Error::Shape(format!("channels {pc} vs {c} in concat")));
            }
            total += pt;
        }
        let mut data = Vec::with_capacity(c * total);
        for ch in 0..c {
            for p in parts {
                data.extend_from_slice(p.row(ch));
            }
        }
        Tensor::new(&[c, total], data)
    }
}
