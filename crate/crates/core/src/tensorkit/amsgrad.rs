//! AmsGrad: Adam with a running maximum of the second moment.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::tensor::{Scalar, Tensor};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmsGradConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AmsGradConfig {
    fn default() -> Self {
        AmsGradConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Clone, Debug)]
struct Moments<T> {
    m: Vec<T>,
    v: Vec<T>,
    v_max: Vec<T>,
}

#[derive(Clone, Debug)]
pub struct AmsGradState<T> {
    pub config: AmsGradConfig,
    step: u64,
    moments: BTreeMap<String, Moments<T>>,
}

impl<T: Scalar> AmsGradState<T> {
    pub fn new(config: AmsGradConfig) -> Self {
        AmsGradState {
            config,
            step: 0,
            moments: BTreeMap::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Running maximum of the second moment for one parameter.
    pub fn v_max(&self, name: &str) -> Option<&[T]> {
        self.moments.get(name).map(|m| m.v_max.as_slice())
    }

    /// Moment buffers as flat tensors named `{param}/m`, `{param}/v` and
    /// `{param}/v_max`.
    pub fn export(&self) -> BTreeMap<String, Tensor<T>> {
        let mut out = BTreeMap::new();
        for (name, mo) in &self.moments {
            for (suffix, buf) in [("m", &mo.m), ("v", &mo.v), ("v_max", &mo.v_max)] {
                let t = Tensor::new(&[buf.len()], buf.clone()).expect("flat buffer");
                out.insert(format!("{name}/{suffix}"), t);
            }
        }
        out
    }

    /// Inverse of [`AmsGradState::export`].
    pub fn import(config: AmsGradConfig, step: u64, tensors: &BTreeMap<String, Tensor<T>>) -> Result<Self> {
        let mut state = AmsGradState::new(config);
        state.step = step;
        for key in tensors.keys() {
            let Some(name) = key.strip_suffix("/v_max") else { continue };
            let get = |suffix: &str| -> Result<Vec<T>> {
                let t = tensors
                    .get(&format!("{name}/{suffix}"))
                    .ok_or_else(|| Error::Missing(format!("optimizer buffer `{name}/{suffix}`")))?;
                t.ensure_finite(&format!("optimizer buffer `{name}/{suffix}`"))?;
                Ok(t.data().to_vec())
            };
            let (m, v, v_max) = (get("m")?, get("v")?, get("v_max")?);
            if m.len() != v.len() || m.len() != v_max.len() {
                return Err(Error::Shape(format!("optimizer buffers of `{name}` differ in length")));
            }
            state.moments.insert(name.to_string(), Moments { m, v, v_max });
        }
        if tensors.len() != 3 * state.moments.len() {
            return Err(Error::Format("stray optimizer buffers".into()));
        }
        Ok(state)
    }

    /// Applies one update to every parameter that has a gradient. Gradients
    /// are validated before any parameter is touched.
    pub fn step(
        &mut self,
        params: &mut BTreeMap<String, Tensor<T>>,
        grads: &BTreeMap<String, Tensor<T>>,
    ) -> Result<()> {
        for (name, g) in grads {
            let p = params
                .get(name)
                .ok_or_else(|| Error::Missing(format!("no parameter for gradient `{name}`")))?;
            p.same_shape(g)?;
            g.ensure_finite(&format!("gradient of `{name}`"))?;
        }
        self.step += 1;
        let c = self.config;
        let (b1, b2) = (T::of(c.beta1), T::of(c.beta2));
        let bc1 = 1.0 - c.beta1.powi(self.step as i32);
        let bc2_sqrt = T::of((1.0 - c.beta2.powi(self.step as i32)).sqrt());
        let step_size = T::of(c.lr / bc1);
        let eps = T::of(c.eps);
        let one = T::one();
        for (name, g) in grads {
            let p = params.get_mut(name).expect("checked above");
            let mo = self.moments.entry(name.clone()).or_insert_with(|| Moments {
                m: vec![T::zero(); g.len()],
                v: vec![T::zero(); g.len()],
                v_max: vec![T::zero(); g.len()],
            });
            for (i, (pv, &gv)) in p.data_mut().iter_mut().zip(g.data()).enumerate() {
                mo.m[i] = b1 * mo.m[i] + (one - b1) * gv;
                mo.v[i] = b2 * mo.v[i] + (one - b2) * gv * gv;
                mo.v_max[i] = mo.v_max[i].max(mo.v[i]);
                let denom = mo.v_max[i].sqrt() / bc2_sqrt + eps;
                *pv -= step_size * mo.m[i] / denom;
            }
        }
        Ok(())
    }
}
