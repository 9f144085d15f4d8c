use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::tensorkit::{ConvSpec, PoolKind};
use crate::{Error, Result};

/// Layer widths and kernels of the three encoders and the decoder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchConfig {
    pub joints: usize,
    pub motion_channels: Vec<usize>,
    pub motion_kernel: usize,
    pub static_channels: Vec<usize>,
    pub static_kernel: usize,
    pub skeleton_dim: usize,
    pub view_dim: usize,
    pub decoder_channels: Vec<usize>,
    pub decoder_kernel: usize,
    pub dropout: f64,
}

impl Default for ArchConfig {
    fn default() -> Self {
        ArchConfig::for_joints(15)
    }
}

/// Role of one convolution inside a static encoder.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StaticStage {
    Pool,
    GlobalPool,
    Projection,
}

impl ArchConfig {
    pub fn for_joints(joints: usize) -> Self {
        ArchConfig {
            joints,
            motion_channels: vec![64, 96, 128],
            motion_kernel: 8,
            static_channels: vec![32, 48, 64],
            static_kernel: 7,
            skeleton_dim: 16,
            view_dim: 8,
            decoder_channels: vec![128, 64],
            decoder_kernel: 7,
            dropout: 0.2,
        }
    }

    /// Reduced widths for finite-difference checks.
    pub fn tiny(joints: usize) -> Self {
        ArchConfig {
            joints,
            motion_channels: vec![5, 6, 4],
            motion_kernel: 4,
            static_channels: vec![4, 5, 6],
            static_kernel: 3,
            skeleton_dim: 3,
            view_dim: 2,
            decoder_channels: vec![6, 5],
            decoder_kernel: 3,
            dropout: 0.2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.joints < 2 {
            return Err(Error::InvalidInput(format!("{} joints", self.joints)));
        }
        if self.motion_channels.is_empty() || self.static_channels.is_empty() {
            return Err(Error::InvalidInput("empty encoder".into()));
        }
        if self.decoder_channels.len() + 1 != self.motion_channels.len() {
            return Err(Error::InvalidInput(format!(
                "{} decoder stages cannot undo {} downsampling layers",
                self.decoder_channels.len() + 1,
                self.motion_channels.len()
            )));
        }
        let widths = self
            .motion_channels
            .iter()
            .chain(&self.static_channels)
            .chain(&self.decoder_channels)
            .chain([&self.skeleton_dim, &self.view_dim]);
        if widths.clone().any(|&w| w == 0) {
            return Err(Error::InvalidInput("zero-width layer".into()));
        }
        if [self.motion_kernel, self.static_kernel, self.decoder_kernel].contains(&0) {
            return Err(Error::InvalidInput("zero kernel".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidInput(format!("dropout {}", self.dropout)));
        }
        Ok(())
    }

    /// `2(J-1)` root-relative pose channels.
    pub fn pose_channels(&self) -> usize {
        2 * (self.joints - 1)
    }

    /// Pose channels plus 2 velocity channels.
    pub fn input_channels(&self) -> usize {
        self.pose_channels() + 2
    }

    pub fn motion_dim(&self) -> usize {
        *self.motion_channels.last().expect("validated")
    }

    pub fn decoder_input(&self) -> usize {
        self.motion_dim() + self.skeleton_dim + self.view_dim
    }

    /// Temporal downsampling factor of the motion encoder.
    pub fn time_factor(&self) -> usize {
        1 << self.motion_channels.len()
    }

    /// Input frames that influence one motion-code step: each stride-2
    /// layer widens the span by `(kernel - 1)` times the stride so far.
    pub fn motion_receptive_field(&self) -> usize {
        (0..self.motion_channels.len()).map(|l| (self.motion_kernel - 1) << l).sum::<usize>() + 1
    }

    pub fn motion_layers(&self) -> Vec<ConvSpec> {
        let mut inp = self.input_channels();
        self.motion_channels
            .iter()
            .map(|&out| {
                let s = ConvSpec::new(inp, out, self.motion_kernel, 2);
                inp = out;
                s
            })
            .collect()
    }

    pub fn static_layers(&self, out_dim: usize) -> Vec<(ConvSpec, StaticStage)> {
        let mut inp = self.pose_channels();
        let n = self.static_channels.len();
        let mut layers: Vec<_> = self
            .static_channels
            .iter()
            .enumerate()
            .map(|(i, &out)| {
                let s = ConvSpec::new(inp, out, self.static_kernel, 1);
                inp = out;
                (s, if i + 1 == n { StaticStage::GlobalPool } else { StaticStage::Pool })
            })
            .collect();
        layers.push((ConvSpec::new(inp, out_dim, 1, 1), StaticStage::Projection));
        layers
    }

    pub fn decoder_layers(&self) -> Vec<ConvSpec> {
        let mut inp = self.decoder_input();
        self.decoder_channels
            .iter()
            .chain(std::iter::once(&self.input_channels()))
            .map(|&out| {
                let s = ConvSpec::new(inp, out, self.decoder_kernel, 1);
                inp = out;
                s
            })
            .collect()
    }

    /// Every parameter name with its shape, in a fixed order.
    pub fn parameter_shapes(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::new();
        let mut push = |component: &str, layer: String, s: &ConvSpec| {
            out.push((format!("{component}/{layer}/weight"), s.weight_shape().to_vec()));
            out.push((format!("{component}/{layer}/bias"), vec![s.out_channels]));
        };
        for (i, s) in self.motion_layers().iter().enumerate() {
            push("motion", format!("conv{i}"), s);
        }
        for (component, dim) in [("skeleton", self.skeleton_dim), ("view", self.view_dim)] {
            for (i, (s, stage)) in self.static_layers(dim).iter().enumerate() {
                let layer = if *stage == StaticStage::Projection { "proj".to_string() } else { format!("conv{i}") };
                push(component, layer, s);
            }
        }
        for (i, s) in self.decoder_layers().iter().enumerate() {
            push("decoder", format!("conv{i}"), s);
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.parameter_shapes()
            .iter()
            .map(|(_, s)| s.iter().product::<usize>())
            .sum()
    }

    /// Hash of everything that determines the computation: layer shapes,
    /// strides, pooling kinds, latent concatenation order and which
    /// encoders see the velocity channels.
    pub fn fingerprint(&self) -> String {
        let desc = serde_json::json!({
            "config": self,
            "parameters": self.parameter_shapes(),
            "skeleton_pool": PoolKind::Max,
            "view_pool": PoolKind::Avg,
            "concat_order": ["motion", "skeleton", "view"],
            "velocity_inputs": ["motion"],
            "padding": "reflect",
            "upsample": "nearest",
        });
        hex::encode(Sha256::digest(desc.to_string().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_matches_reference_table() {
        let c = ArchConfig::default();
        c.validate().unwrap();
        assert_eq!(c.input_channels(), 30);
        assert_eq!(c.pose_channels(), 28);
        assert_eq!(c.decoder_input(), 152);
        let m: Vec<_> = c.motion_layers().iter().map(|s| (s.in_channels, s.out_channels)).collect();
        assert_eq!(m, [(30, 64), (64, 96), (96, 128)]);
        let d: Vec<_> = c.decoder_layers().iter().map(|s| (s.in_channels, s.out_channels)).collect();
        assert_eq!(d, [(152, 128), (128, 64), (64, 30)]);
        let s: Vec<_> = c.static_layers(16).iter().map(|(s, _)| (s.in_channels, s.out_channels, s.kernel)).collect();
        assert_eq!(s, [(28, 32, 7), (32, 48, 7), (48, 64, 7), (64, 16, 1)]);
    }

    #[test]
    fn parameter_count_closed_form() {
        let c = ArchConfig::default();
        let conv = |i: usize, o: usize, k: usize| o * i * k + o;
        let expected = conv(30, 64, 8) + conv(64, 96, 8) + conv(96, 128, 8)
            + conv(28, 32, 7) + conv(32, 48, 7) + conv(48, 64, 7) + conv(64, 16, 1)
            + conv(28, 32, 7) + conv(32, 48, 7) + conv(48, 64, 7) + conv(64, 8, 1)
            + conv(152, 128, 7) + conv(128, 64, 7) + conv(64, 30, 7);
        assert_eq!(c.parameter_count(), expected);
    }

    #[test]
    fn fingerprint_tracks_architecture() {
        let a = ArchConfig::default();
        assert_eq!(a.fingerprint(), ArchConfig::default().fingerprint());
        assert_ne!(a.fingerprint(), ArchConfig::for_joints(17).fingerprint());
        assert!(ArchConfig { decoder_channels: vec![1], ..a }.validate().is_err());
    }
}
