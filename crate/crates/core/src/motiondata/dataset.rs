//! Synthetic labelled corpus: every (motion, skeleton, view) combination,
//! windowed, with a train/validation split over motions and skeletons.

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Arc;

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::camera::{project, project_in_frame, CameraView};
use super::generator::{generate_motion, GeneratedMotion, MotionFamily, MotionParams, MotionSpec};
use super::kinematics::{character_frame, retarget_ground_truth, ClipLabels, MotionClip3D};
use super::normalize::NormStats;
use super::sample::{Labels, Sample2D};
use super::skeleton::{skeleton_roster, Skeleton, Topology};
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const PAYLOAD_FILE: &str = "samples.bin";
const FORMAT_NAME: &str = "retarget2d-dataset";
const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSpec {
    pub motions: usize,
    pub skeletons: usize,
    pub views: usize,
    /// Length of each generated base sequence.
    pub frames: usize,
    /// Window length; base sequences are cut into non-overlapping windows.
    pub window: usize,
    pub fps: f64,
    pub yaw_min: f64,
    pub yaw_max: f64,
    pub joints: usize,
    pub seed: u64,
    /// Family cycle; see [`DatasetSpec::family`].
    pub families: Vec<MotionFamily>,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec {
            motions: 6,
            skeletons: 6,
            views: 5,
            frames: 128,
            window: 64,
            fps: 30.0,
            yaw_min: -90.0,
            yaw_max: 90.0,
            joints: 15,
            families: MotionFamily::ALL.to_vec(),
            seed: 0,
        }
    }
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.motions < 2 || self.skeletons < 2 || self.views < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 motions, skeletons and views (got {}x{}x{})",
                self.motions, self.skeletons, self.views
            )));
        }
        if self.window == 0 || self.window % 8 != 0 {
            return Err(Error::InvalidInput(format!(
                "window {} is not a positive multiple of 8",
                self.window
            )));
        }
        if self.frames < self.window {
            return Err(Error::TooShort {
                frames: self.frames,
                required: self.window,
            });
        }
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return Err(Error::InvalidInput(format!("fps {}", self.fps)));
        }
        if !(self.yaw_min.is_finite() && self.yaw_max.is_finite() && self.yaw_min <= self.yaw_max) {
            return Err(Error::InvalidInput("yaw range".into()));
        }
        Topology::for_joint_count(self.joints)?;
        if self.families.is_empty() {
            return Err(Error::InvalidInput("no motion families".into()));
        }
        Ok(())
    }

    /// Training motions cycle through `families`; held-out motions cycle
    /// through the families of the training motions, so validation holds
    /// new motions of known kinds.
    pub fn family(&self, i: usize) -> MotionFamily {
        let train = self.split().train_motions.len();
        let f = &self.families;
        if i < train {
            f[i % f.len()]
        } else {
            f[(i - train) % f.len().min(train)]
        }
    }

    pub fn windows_per_sequence(&self) -> usize {
        self.frames / self.window
    }

    /// Motions and skeletons held out for validation: the last third
    /// (at least one of each).
    pub fn split(&self) -> Split {
        let cut = |n: usize| n - (n / 3).max(1);
        let (m, s) = (cut(self.motions), cut(self.skeletons));
        Split {
            train_motions: (0..m).collect(),
            train_skeletons: (0..s).collect(),
            val_motions: (m..self.motions).collect(),
            val_skeletons: (s..self.skeletons).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub train_motions: Vec<usize>,
    pub train_skeletons: Vec<usize>,
    pub val_motions: Vec<usize>,
    pub val_skeletons: Vec<usize>,
}

impl Split {
    pub fn is_train(&self, l: &Labels) -> bool {
        self.train_motions.contains(&l.motion) && self.train_skeletons.contains(&l.skeleton)
    }

    pub fn is_val(&self, l: &Labels) -> bool {
        self.val_motions.contains(&l.motion) && self.val_skeletons.contains(&l.skeleton)
    }

    fn validate(&self, motions: usize, skeletons: usize) -> Result<()> {
        let check = |train: &[usize], val: &[usize], n: usize, what: &str| {
            let t: BTreeSet<_> = train.iter().collect();
            let v: BTreeSet<_> = val.iter().collect();
            if train.is_empty() || t.len() != train.len() || v.len() != val.len() {
                return Err(Error::InvalidInput(format!("{what} split has duplicates or no training ids")));
            }
            if t.intersection(&v).next().is_some() {
                return Err(Error::InvalidInput(format!("{what} split overlaps")));
            }
            if train.iter().chain(val).any(|&i| i >= n) {
                return Err(Error::InvalidInput(format!("{what} id out of range")));
            }
            Ok(())
        };
        check(&self.train_motions, &self.val_motions, motions, "motion")?;
        check(&self.train_skeletons, &self.val_skeletons, skeletons, "skeleton")
    }
}

/// Address of one windowed sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SampleKey {
    pub labels: Labels,
    pub window: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct SkeletonDef {
    name: String,
    offsets: Vec<[f64; 3]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct EntryDef {
    motion: usize,
    skeleton: usize,
    view: usize,
    window: usize,
    /// Byte offset into the payload.
    offset: u64,
}

/// The JSON manifest accompanying `samples.bin`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    format: String,
    version: u32,
    spec: DatasetSpec,
    topology: Topology,
    motions: Vec<MotionSpec>,
    skeletons: Vec<SkeletonDef>,
    views: Vec<CameraView>,
    split: Split,
    stats: NormStats,
    entries: Vec<EntryDef>,
}

impl DatasetManifest {
    /// Parses and checks internal consistency (payload offsets are checked
    /// against the payload when loading).
    pub fn parse(text: &str) -> Result<Self> {
        let m: DatasetManifest = serde_json::from_str(text)?;
        if m.format != FORMAT_NAME {
            return Err(Error::Format(format!("not a dataset manifest: {}", m.format)));
        }
        if m.version != FORMAT_VERSION {
            return Err(Error::Format(format!("dataset version {} unsupported", m.version)));
        }
        m.spec.validate()?;
        let s = &m.spec;
        if m.topology.len() != s.joints
            || m.motions.len() != s.motions
            || m.skeletons.len() != s.skeletons
            || m.views.len() != s.views
            || m.stats.joints() != s.joints
        {
            return Err(Error::Format("manifest counts disagree with its spec".into()));
        }
        m.split.validate(s.motions, s.skeletons)?;
        NormStats::new(m.stats.mean.clone(), m.stats.std.clone(), m.stats.vel_std)?;
        let expected = s.motions * s.skeletons * s.views * s.windows_per_sequence();
        if m.entries.len() != expected {
            return Err(Error::Format(format!(
                "{} entries, expected {expected}",
                m.entries.len()
            )));
        }
        for (n, e) in m.entries.iter().enumerate() {
            let key = key_at(s, n);
            if (e.motion, e.skeleton, e.view, e.window)
                != (key.labels.motion, key.labels.skeleton, key.labels.view, key.window)
            {
                return Err(Error::Format(format!("entry {n} out of order")));
            }
        }
        for v in &m.views {
            if !(v.scale > 0.0) || v.axis_angle.iter().chain(&v.translation).any(|x| !x.is_finite()) {
                return Err(Error::Format("invalid camera".into()));
            }
        }
        Ok(m)
    }
}

fn key_at(spec: &DatasetSpec, n: usize) -> SampleKey {
    let w = spec.windows_per_sequence();
    let window = n % w;
    let n = n / w;
    let view = n % spec.views;
    let n = n / spec.views;
    SampleKey {
        labels: Labels {
            motion: n / spec.skeletons,
            skeleton: n % spec.skeletons,
            view,
        },
        window,
    }
}

/// Full Cartesian product of motions, skeletons and views.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub spec: DatasetSpec,
    pub topology: Arc<Topology>,
    pub motions: Vec<MotionSpec>,
    pub skeletons: Vec<Skeleton>,
    pub views: Vec<CameraView>,
    pub split: Split,
    /// Computed on training samples only.
    pub stats: NormStats,
    samples: Vec<Sample2D>,
}

fn round_f32(s: Sample2D) -> Result<Sample2D> {
    let coords = s.coords().iter().map(|&c| c as f32 as f64).collect();
    Sample2D::new(s.joints(), s.fps, coords, s.labels)
}

impl Dataset {
    /// Deterministic in `spec.seed`. Coordinates are rounded to f32 so that
    /// a saved and reloaded dataset is bit-identical to the generated one.
    pub fn generate(spec: &DatasetSpec) -> Result<Self> {
        spec.validate()?;
        let topology = Arc::new(Topology::for_joint_count(spec.joints)?);
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let skeletons = skeleton_roster(topology.clone(), spec.skeletons, &mut rng)?;
        let motions = (0..spec.motions)
            .map(|i| {
                let family = spec.family(i);
                MotionSpec {
                    family,
                    params: MotionParams::sample(family, &mut rng),
                }
            })
            .collect();
        let views = CameraView::yaw_sweep(spec.views, spec.yaw_min, spec.yaw_max);
        let mut ds = Dataset {
            spec: spec.clone(),
            topology,
            motions,
            skeletons,
            views,
            split: spec.split(),
            stats: NormStats::new(vec![[0.0; 2]; 2], vec![[1.0; 2]; 2], [1.0; 2])?,
            samples: Vec::new(),
        };
        let mut samples = Vec::with_capacity(ds.len());
        for i in 0..spec.motions {
            for k in 0..spec.skeletons {
                let clip = ds.clip3d(i, k)?;
                for view in &ds.views {
                    let full = project(&clip, view)?;
                    for w in 0..spec.windows_per_sequence() {
                        samples.push(round_f32(full.crop(w * spec.window, spec.window)?)?);
                    }
                }
            }
        }
        ds.samples = samples;
        ds.stats = NormStats::compute(ds.train_keys().iter().map(|k| &ds.samples[ds.index_of(k).unwrap()]))?;
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.spec.motions * self.spec.skeletons * self.spec.views * self.spec.windows_per_sequence()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index_of(&self, key: &SampleKey) -> Result<usize> {
        let s = &self.spec;
        let l = &key.labels;
        if l.motion >= s.motions || l.skeleton >= s.skeletons || l.view >= s.views || key.window >= s.windows_per_sequence() {
            return Err(Error::Missing(format!("no sample {key:?}")));
        }
        Ok((((l.motion * s.skeletons + l.skeleton) * s.views + l.view) * s.windows_per_sequence()) + key.window)
    }

    pub fn get(&self, key: &SampleKey) -> Result<&Sample2D> {
        Ok(&self.samples[self.index_of(key)?])
    }

    pub fn samples(&self) -> &[Sample2D] {
        &self.samples
    }

    pub fn key(&self, n: usize) -> SampleKey {
        key_at(&self.spec, n)
    }

    pub fn keys(&self) -> Vec<SampleKey> {
        (0..self.len()).map(|n| self.key(n)).collect()
    }

    /// Training motions x training skeletons x all views.
    pub fn train_keys(&self) -> Vec<SampleKey> {
        self.keys().into_iter().filter(|k| self.split.is_train(&k.labels)).collect()
    }

    /// Validation motions x validation skeletons x all views.
    pub fn val_keys(&self) -> Vec<SampleKey> {
        self.keys().into_iter().filter(|k| self.split.is_val(&k.labels)).collect()
    }

    pub fn canonical(&self) -> Result<Skeleton> {
        Skeleton::canonical(self.topology.clone())
    }

    /// Rotation curves and root path of motion `i` on the canonical character.
    pub fn motion3d(&self, i: usize) -> Result<GeneratedMotion> {
        let spec = self
            .motions
            .get(i)
            .ok_or_else(|| Error::Missing(format!("motion {i}")))?;
        generate_motion(&self.topology, spec, self.spec.frames, self.spec.fps)
    }

    pub fn skeleton(&self, k: usize) -> Result<&Skeleton> {
        self.skeletons
            .get(k)
            .ok_or_else(|| Error::Missing(format!("skeleton {k}")))
    }

    pub fn view(&self, v: usize) -> Result<&CameraView> {
        self.views.get(v).ok_or_else(|| Error::Missing(format!("view {v}")))
    }

    /// Full-length ground-truth 3D clip of motion `i` on skeleton `k`.
    pub fn clip3d(&self, i: usize, k: usize) -> Result<MotionClip3D> {
        let m = self.motion3d(i)?;
        let mut clip = retarget_ground_truth(&m.rotations, &m.root_trajectory, &self.canonical()?, self.skeleton(k)?, self.spec.fps)?;
        clip.labels = Some(ClipLabels { motion: i, skeleton: k });
        Ok(clip)
    }

    /// Projects a 3D clip of motion `motion` through view `v` and cuts out
    /// window `w`, in the same frame convention as the stored samples. The
    /// character frame comes from the motion's ground-truth clip on the
    /// canonical character, so alternative 3D reconstructions of the same
    /// motion share the camera.
    pub fn render_window(&self, clip: &MotionClip3D, motion: usize, v: usize, w: usize) -> Result<Sample2D> {
        let reference = self.clip3d(motion, 0)?;
        let frame = character_frame(&reference)?;
        let full = project_in_frame(clip, frame.matrix(), self.view(v)?);
        round_f32(full.crop(w * self.spec.window, self.spec.window)?)
    }

    /// 3D height of skeleton `k`.
    pub fn height(&self, k: usize) -> Result<f64> {
        Ok(self.skeleton(k)?.height())
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut payload = Vec::new();
        let mut entries = Vec::with_capacity(self.len());
        for (n, s) in self.samples.iter().enumerate() {
            let key = self.key(n);
            entries.push(EntryDef {
                motion: key.labels.motion,
                skeleton: key.labels.skeleton,
                view: key.labels.view,
                window: key.window,
                offset: payload.len() as u64,
            });
            for j in 0..s.joints() {
                for d in 0..2 {
                    for t in 0..s.frames() {
                        payload.extend_from_slice(&(s.point(t, j)[d] as f32).to_le_bytes());
                    }
                }
            }
        }
        let manifest = DatasetManifest {
            format: FORMAT_NAME.into(),
            version: FORMAT_VERSION,
            spec: self.spec.clone(),
            topology: (*self.topology).clone(),
            motions: self.motions.clone(),
            skeletons: self
                .skeletons
                .iter()
                .map(|s| SkeletonDef {
                    name: s.name.clone(),
                    offsets: s.offsets().iter().map(|o| [o.x, o.y, o.z]).collect(),
                })
                .collect(),
            views: self.views.clone(),
            split: self.split.clone(),
            stats: self.stats.clone(),
            entries,
        };
        let mpath = dir.join(MANIFEST_FILE);
        std::fs::write(&mpath, serde_json::to_string_pretty(&manifest)?).map_err(|e| Error::io(&mpath, e))?;
        let ppath = dir.join(PAYLOAD_FILE);
        std::fs::write(&ppath, payload).map_err(|e| Error::io(&ppath, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let mpath = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
        let ppath = dir.join(PAYLOAD_FILE);
        let payload = std::fs::read(&ppath).map_err(|e| Error::io(&ppath, e))?;
        Self::from_parts(DatasetManifest::parse(&text)?, &payload)
    }

    pub fn from_parts(m: DatasetManifest, payload: &[u8]) -> Result<Self> {
        let topology = Arc::new(m.topology);
        let skeletons = m
            .skeletons
            .into_iter()
            .map(|d| {
                let offsets = d.offsets.iter().map(|o| Vector3::new(o[0], o[1], o[2])).collect();
                Skeleton::new(d.name, topology.clone(), offsets)
            })
            .collect::<Result<Vec<_>>>()?;
        let joints = topology.len();
        let t = m.spec.window;
        let bytes = joints * 2 * t * 4;
        let mut samples = Vec::with_capacity(m.entries.len());
        for e in &m.entries {
            let start = usize::try_from(e.offset).map_err(|_| Error::Format("offset overflow".into()))?;
            let chunk = start
                .checked_add(bytes)
                .and_then(|end| payload.get(start..end))
                .ok_or_else(|| Error::Format(format!("entry at byte {start} exceeds payload")))?;
            let mut coords = vec![0.0; joints * 2 * t];
            for (c, raw) in chunk.chunks_exact(4).enumerate() {
                let v = f32::from_le_bytes(raw.try_into().expect("4 bytes")) as f64;
                if !v.is_finite() {
                    return Err(Error::NonFinite("dataset payload".into()));
                }
                let (channel, frame) = (c / t, c % t);
                coords[2 * (frame * joints + channel / 2) + channel % 2] = v;
            }
            let labels = Labels {
                motion: e.motion,
                skeleton: e.skeleton,
                view: e.view,
            };
            samples.push(Sample2D::new(joints, m.spec.fps, coords, Some(labels))?);
        }
        Ok(Dataset {
            spec: m.spec,
            topology,
            motions: m.motions,
            skeletons,
            views: m.views,
            split: m.split,
            stats: m.stats,
            samples,
        })
    }
}
