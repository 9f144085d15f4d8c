use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::container::Container;
use crate::evalkit::encode_sequence;
use crate::motiondata::{NormStats, Sample2D, MIN_FRAMES};
use crate::network::ModelParams;
use crate::tensorkit::Tensor;
use crate::{Error, Result};

pub const INDEX_KIND: &str = "index";
const CODES: &str = "codes";

/// One indexed video: its slice `[offset, offset + len)` of the
/// concatenated motion codes. Latent step `s` of the entry starts at source
/// frame `s * stride`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexEntry {
    pub id: String,
    pub frames: usize,
    pub offset: usize,
    pub len: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Meta {
    fingerprint: String,
    channels: usize,
    stride: usize,
    entries: Vec<IndexEntry>,
}

/// Motion codes of every indexed video, concatenated along time.
#[derive(Clone, Debug, PartialEq)]
pub struct MotionIndex {
    /// Architecture the codes were produced with.
    pub fingerprint: String,
    pub channels: usize,
    /// Source frames per latent step.
    pub stride: usize,
    entries: Vec<IndexEntry>,
    /// Channel-major `[channels, total]` storage, grown per entry.
    rows: Vec<Vec<f32>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub video: String,
    pub latent_offset: usize,
    pub frame_start: usize,
    pub frame_end: usize,
    /// Cosine similarity in [-1, 1].
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub hits: Vec<SearchHit>,
    /// Multiply-adds spent on correlations.
    pub cost: u64,
    pub query_steps: usize,
}

impl MotionIndex {
    pub fn new(params: &ModelParams<f32>) -> Self {
        let channels = params.config.motion_dim();
        MotionIndex {
            fingerprint: params.config.fingerprint(),
            channels,
            stride: params.config.time_factor(),
            entries: Vec::new(),
            rows: vec![Vec::new(); channels],
        }
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total latent steps.
    pub fn steps(&self) -> usize {
        self.rows[0].len()
    }

    /// Motion code of one entry, `[channels, len]`.
    pub fn code(&self, n: usize) -> Result<Tensor<f32>> {
        let e = self.entries.get(n).ok_or_else(|| Error::Missing(format!("index entry {n}")))?;
        let data = self.rows.iter().flat_map(|r| r[e.offset..e.offset + e.len].iter().copied()).collect();
        Tensor::new(&[self.channels, e.len], data)
    }

    fn check_params(&self, params: &ModelParams<f32>) -> Result<()> {
        if params.config.fingerprint() != self.fingerprint {
            return Err(Error::InvalidInput("index was built with a different architecture".into()));
        }
        Ok(())
    }

    /// Encodes `video` in contiguous windows and appends its motion code.
    pub fn add(&mut self, id: &str, video: &Sample2D, params: &ModelParams<f32>, stats: &NormStats) -> Result<()> {
        self.check_params(params)?;
        if video.frames() < MIN_FRAMES {
            return Err(Error::TooShort { frames: video.frames(), required: MIN_FRAMES });
        }
        let code = encode_sequence(params, stats, video)?.motion_concat()?;
        self.push(id, video.frames(), &code)
    }

    fn push(&mut self, id: &str, frames: usize, code: &Tensor<f32>) -> Result<()> {
        let (c, len) = code.dims2()?;
        if c != self.channels {
            return Err(Error::Shape(format!("{c}-channel code in a {}-channel index", self.channels)));
        }
        if len == 0 || len * self.stride > frames {
            return Err(Error::Shape(format!("{len} latent steps for {frames} frames")));
        }
        code.ensure_finite("motion code")?;
        self.entries.push(IndexEntry { id: id.to_string(), frames, offset: self.steps(), len });
        for (k, row) in self.rows.iter_mut().enumerate() {
            row.extend_from_slice(code.row(k));
        }
        Ok(())
    }

    /// Best-matching offset of every entry at least as long as `query`,
    /// ranked by cosine similarity.
    pub fn search_code(&self, query: &Tensor<f32>, top_k: usize) -> Result<SearchResult> {
        if self.is_empty() {
            return Err(Error::InvalidInput("index is empty".into()));
        }
        let (c, lq) = query.dims2()?;
        if c != self.channels {
            return Err(Error::Shape(format!("{c}-channel query for a {}-channel index", self.channels)));
        }
        let q: Vec<f64> = query.data().iter().map(|&v| v as f64).collect();
        let q_norm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut hits = Vec::new();
        let mut cost = 0u64;
        for e in self.entries.iter().filter(|e| e.len >= lq) {
            let mut best: Option<(usize, f64)> = None;
            for o in 0..=e.len - lq {
                let (mut dot, mut norm) = (0.0f64, 0.0f64);
                for (k, row) in self.rows.iter().enumerate() {
                    let w = &row[e.offset + o..e.offset + o + lq];
                    let qr = &q[k * lq..(k + 1) * lq];
                    for (a, b) in w.iter().zip(qr) {
                        let a = *a as f64;
                        dot += a * b;
                        norm += a * a;
                    }
                }
                cost += (lq * c) as u64;
                let denom = norm.sqrt() * q_norm;
                let score = if denom > 0.0 { (dot / denom).clamp(-1.0, 1.0) } else { 0.0 };
                if best.is_none_or(|(_, s)| score > s) {
                    best = Some((o, score));
                }
            }
            if let Some((o, score)) = best {
                let start = o * self.stride;
                hits.push(SearchHit {
                    video: e.id.clone(),
                    latent_offset: o,
                    frame_start: start,
                    frame_end: (start + lq * self.stride).min(e.frames),
                    score,
                });
            }
        }
        if hits.is_empty() {
            return Err(Error::InvalidInput(format!("query of {lq} latent steps is longer than every entry")));
        }
        hits.sort_by(|a, b| b.score.total_cmp(&a.score));
        hits.truncate(top_k);
        Ok(SearchResult { hits, cost, query_steps: lq })
    }

    pub fn search(&self, query: &Sample2D, params: &ModelParams<f32>, stats: &NormStats, top_k: usize) -> Result<SearchResult> {
        self.check_params(params)?;
        let code = encode_sequence(params, stats, query)?.motion_concat()?;
        self.search_code(&code, top_k)
    }

    pub fn to_container(&self) -> Result<Container> {
        let meta = Meta {
            fingerprint: self.fingerprint.clone(),
            channels: self.channels,
            stride: self.stride,
            entries: self.entries.clone(),
        };
        let mut c = Container::new(INDEX_KIND, serde_json::to_value(meta)?);
        let data = self.rows.iter().flatten().copied().collect();
        c.insert(CODES, vec![self.channels, self.steps()], data)?;
        Ok(c)
    }

    pub fn from_container(mut c: Container) -> Result<Self> {
        c.expect_kind(INDEX_KIND)?;
        let meta: Meta = serde_json::from_value(c.meta.clone())?;
        let (shape, data) = c.take(CODES)?;
        if !c.tensors.is_empty() {
            return Err(Error::Format("unexpected tensors in index".into()));
        }
        if meta.channels == 0 || meta.stride == 0 || shape != [meta.channels, data.len() / meta.channels] {
            return Err(Error::Format(format!("codes of shape {shape:?} for {} channels", meta.channels)));
        }
        let total = shape[1];
        let mut next = 0;
        for e in &meta.entries {
            if e.offset != next || e.len == 0 || e.len * meta.stride > e.frames {
                return Err(Error::Format(format!("entry `{}` has an inconsistent layout", e.id)));
            }
            next += e.len;
        }
        if next != total {
            return Err(Error::Format(format!("entries cover {next} of {total} latent steps")));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("index codes".into()));
        }
        let rows = (0..meta.channels).map(|k| data[k * total..(k + 1) * total].to_vec()).collect();
        Ok(MotionIndex { fingerprint: meta.fingerprint, channels: meta.channels, stride: meta.stride, entries: meta.entries, rows })
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.to_container()?.to_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Self::from_container(Container::from_bytes(bytes)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_container()?.save(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_container(Container::load(path)?)
    }
}

/// One JSON object per line.
pub fn hits_to_json_lines(hits: &[SearchHit]) -> Result<String> {
    let mut out = String::new();
    for h in hits {
        out.push_str(&serde_json::to_string(h)?);
        out.push('\n');
    }
    Ok(out)
}
