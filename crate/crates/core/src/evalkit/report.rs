use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::baselines::{anchor_root, baseline3d, fk2d_baseline, Baseline3dMode};
use super::inference::retarget_sequence;
use super::metrics::{mean_silhouette, retarget_mse, Silhouette};
use crate::losses::Space;
use crate::motiondata::{normalize, Dataset, Labels, NormStats, Sample2D, SampleKey};
use crate::network::{encode, LatentCodes, ModelParams};
use crate::{Error, Result};

/// One held-out cross pair: the motion of `motion`, the skeleton and view of
/// `statics`, scored against `ground_truth`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetargetTask {
    pub motion: SampleKey,
    pub statics: SampleKey,
    pub ground_truth: SampleKey,
}

/// Held-out cross pairs: every validation window paired with the windows of
/// a different validation motion on a different validation skeleton, in
/// every view, at the same window index. The ground truth carries the
/// motion of the first and the skeleton and view of the second.
pub fn evaluation_tasks(ds: &Dataset) -> Vec<RetargetTask> {
    let val = ds.val_keys();
    let mut tasks = Vec::new();
    for m in &val {
        for s in &val {
            let (a, b) = (m.labels, s.labels);
            if a.motion == b.motion || a.skeleton == b.skeleton || m.window != s.window {
                continue;
            }
            let gt = SampleKey {
                labels: Labels { motion: a.motion, skeleton: b.skeleton, view: b.view },
                window: m.window,
            };
            tasks.push(RetargetTask { motion: *m, statics: *s, ground_truth: gt });
        }
    }
    tasks
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Full,
    CrossOnly,
    RecTriplet,
    Fk2d,
    Naive3d,
    Rescaled3d,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Full,
        Method::CrossOnly,
        Method::RecTriplet,
        Method::Fk2d,
        Method::Naive3d,
        Method::Rescaled3d,
    ];

    pub fn title(self) -> &'static str {
        match self {
            Method::Full => "ours (full)",
            Method::CrossOnly => "ours (cross only)",
            Method::RecTriplet => "ours (rec + triplet)",
            Method::Fk2d => "2D forward kinematics",
            Method::Naive3d => "3D rotation copy",
            Method::Rescaled3d => "3D rotation copy, rescaled velocity",
        }
    }
}

fn mean_over(tasks: &[RetargetTask], ds: &Dataset, mut run: impl FnMut(&RetargetTask, &Sample2D) -> Result<Sample2D>) -> Result<f64> {
    if tasks.is_empty() {
        return Err(Error::InvalidInput("no evaluation tasks".into()));
    }
    let mut sum = 0.0;
    for t in tasks {
        let gt = ds.get(&t.ground_truth)?;
        let out = run(t, gt)?;
        sum += retarget_mse(&out, gt, ds.height(t.ground_truth.labels.skeleton)?)?;
    }
    Ok(sum / tasks.len() as f64)
}

pub fn network_mse(params: &ModelParams<f32>, stats: &NormStats, ds: &Dataset, tasks: &[RetargetTask]) -> Result<f64> {
    mean_over(tasks, ds, |t, gt| retarget_sequence(params, stats, ds.get(&t.motion)?, ds.get(&t.statics)?, gt.root(0)))
}

pub fn fk2d_mse(ds: &Dataset, tasks: &[RetargetTask]) -> Result<f64> {
    mean_over(tasks, ds, |t, gt| fk2d_baseline(ds.get(&t.motion)?, ds.get(&t.statics)?, &ds.topology, gt.root(0)))
}

pub fn baseline3d_mse(ds: &Dataset, tasks: &[RetargetTask], mode: Baseline3dMode) -> Result<f64> {
    mean_over(tasks, ds, |t, gt| {
        let (i, k) = (t.motion.labels.motion, t.motion.labels.skeleton);
        let m = ds.motion3d(i)?;
        let source_root = ds.clip3d(i, k)?.root_trajectory();
        let clip = baseline3d(&m.rotations, &source_root, ds.skeleton(k)?, ds.skeleton(t.statics.labels.skeleton)?, mode, ds.spec.fps)?;
        let rendered = ds.render_window(&clip, i, t.ground_truth.labels.view, t.ground_truth.window)?;
        Ok(anchor_root(&rendered, gt.root(0)))
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: Method,
    /// `None` when the method's checkpoint was not supplied.
    pub mse: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tasks: usize,
    pub rows: Vec<ReportRow>,
}

impl Report {
    pub fn get(&self, method: Method) -> Option<f64> {
        self.rows.iter().find(|r| r.method == method).and_then(|r| r.mse)
    }

    pub fn to_markdown(&self) -> String {
        let mut s = format!("Retargeting error on {} held-out cross pairs.\n\n| method | MSE |\n|---|---|\n", self.tasks);
        for r in &self.rows {
            let v = r.mse.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"));
            writeln!(s, "| {} | {v} |", r.method.title()).expect("string write");
        }
        s
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["method", "mse"])?;
        for r in &self.rows {
            let key = serde_json::to_value(r.method)?;
            w.write_record([key.as_str().unwrap_or_default().to_string(), r.mse.map_or_else(String::new, |v| v.to_string())])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Network models under evaluation, keyed by method. Missing entries show
/// up as `n/a`.
#[derive(Default)]
pub struct Models<'a> {
    pub full: Option<(&'a ModelParams<f32>, &'a NormStats)>,
    pub cross_only: Option<(&'a ModelParams<f32>, &'a NormStats)>,
    pub rec_triplet: Option<(&'a ModelParams<f32>, &'a NormStats)>,
}

pub fn evaluate(ds: &Dataset, models: &Models) -> Result<Report> {
    let tasks = evaluation_tasks(ds);
    let net = |m: Option<(&ModelParams<f32>, &NormStats)>| m.map(|(p, s)| network_mse(p, s, ds, &tasks)).transpose();
    let rows = vec![
        ReportRow { method: Method::Full, mse: net(models.full)? },
        ReportRow { method: Method::CrossOnly, mse: net(models.cross_only)? },
        ReportRow { method: Method::RecTriplet, mse: net(models.rec_triplet)? },
        ReportRow { method: Method::Fk2d, mse: Some(fk2d_mse(ds, &tasks)?) },
        ReportRow { method: Method::Naive3d, mse: Some(baseline3d_mse(ds, &tasks, Baseline3dMode::Naive)?) },
        ReportRow { method: Method::Rescaled3d, mse: Some(baseline3d_mse(ds, &tasks, Baseline3dMode::Rescaled)?) },
    ];
    Ok(Report { tasks: tasks.len(), rows })
}

fn pick(codes: &LatentCodes<f32>, space: Space) -> Vec<f64> {
    let t = match space {
        Space::Motion => &codes.motion,
        Space::Skeleton => &codes.skeleton,
        Space::View => &codes.view,
    };
    t.data().iter().map(|&v| v as f64).collect()
}

fn encode_window(params: &ModelParams<f32>, stats: &NormStats, sample: &Sample2D) -> Result<LatentCodes<f32>> {
    encode(params, &normalize(sample, stats)?.data.cast())
}

/// Flattened code of one window in `space`.
pub fn latent_vector(params: &ModelParams<f32>, stats: &NormStats, sample: &Sample2D, space: Space) -> Result<Vec<f64>> {
    Ok(pick(&encode_window(params, stats, sample)?, space))
}

/// Mean silhouette of the windows at `keys`, clustered by their label in
/// each space (motion, skeleton, view).
pub fn latent_silhouettes(params: &ModelParams<f32>, stats: &NormStats, ds: &Dataset, keys: &[SampleKey]) -> Result<[Silhouette; 3]> {
    let codes = keys
        .iter()
        .map(|k| encode_window(params, stats, ds.get(k)?))
        .collect::<Result<Vec<_>>>()?;
    let mut out = [Silhouette { mean: 0.0, singletons: 0 }; 3];
    for (slot, space) in out.iter_mut().zip(Space::ALL) {
        let points: Vec<Vec<f64>> = codes.iter().map(|c| pick(c, space)).collect();
        let labels: Vec<usize> = keys.iter().map(|k| space.label(&k.labels)).collect();
        *slot = mean_silhouette(&points, &labels)?;
    }
    Ok(out)
}

/// CSV with label columns followed by the flattened code.
pub fn export_latents(
    params: &ModelParams<f32>,
    stats: &NormStats,
    ds: &Dataset,
    keys: &[SampleKey],
    space: Space,
    out: impl Write,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header_done = false;
    for k in keys {
        let v = latent_vector(params, stats, ds.get(k)?, space)?;
        if !header_done {
            let mut h: Vec<String> = ["motion", "skeleton", "view", "window"].map(String::from).to_vec();
            h.extend((0..v.len()).map(|i| format!("z{i}")));
            w.write_record(&h)?;
            header_done = true;
        }
        let l = k.labels;
        let mut rec: Vec<String> = [l.motion, l.skeleton, l.view, k.window].iter().map(|x| x.to_string()).collect();
        rec.extend(v.iter().map(|x| x.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("latent csv", e))?;
    Ok(())
}
