use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use retarget2d::evalkit::{decode_sequence, encode_sequence, evaluate as evaluate_report, export_latents as write_latents, Models};
use retarget2d::losses::Space;
use retarget2d::motiondata::{export_pose_json, ingest_pose_file, Dataset, DatasetSpec, NormStats, Topology};
use retarget2d::network::{Checkpoint, ModelParams};
use retarget2d::retrieval::{hits_to_json_lines, MotionIndex, QUOTED_RECEPTIVE_FIELD};
use retarget2d::tensorkit::Tensor;
use retarget2d::trainer::{checkpoint_config, unlabeled_clips, Preset, TrainConfig, Trainer, LAST_CHECKPOINT};
use retarget2d::Error;

use crate::{
    CliError, EvaluateArgs, ExportLatentsArgs, GenDataArgs, IndexArgs, InterpolateArgs, RetargetArgs, RetrieveArgs,
    TrainArgs,
};

type Result<T = ()> = std::result::Result<T, CliError>;

const DEFAULT_UNLABELED_CLIPS: usize = 16;
/// Positional jitter of synthetic unlabelled clips, as a fraction of height.
const UNLABELED_JITTER: f64 = 0.005;
const UNLABELED_DROPOUT: f64 = 0.02;
const DEFAULT_TOP_K: usize = 5;
const DEFAULT_STEPS: usize = 5;

fn need<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| CliError::Usage(format!("missing --{flag}")))
}

/// A required input path that must already exist.
fn input(value: Option<PathBuf>, flag: &str) -> Result<PathBuf> {
    let p = need(value, flag)?;
    if !p.exists() {
        return Err(CliError::Usage(format!("--{flag}: {} does not exist", p.display())));
    }
    Ok(p)
}

fn usage(e: Error) -> CliError {
    CliError::Usage(e.to_string())
}

fn write_text(path: &Path, text: &str) -> Result {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e).into())
}

/// Checkpoint plus the joint layout its network was built for.
fn load_model(path: &Path) -> Result<(Checkpoint, Topology)> {
    let ckpt = Checkpoint::load(path)?;
    let topo = Topology::for_joint_count(ckpt.params.config.joints)?;
    Ok((ckpt, topo))
}

fn check_joints(ckpt: &Checkpoint, ds: &Dataset, what: &str) -> Result {
    if ckpt.params.config.joints != ds.topology.len() {
        return Err(Error::Shape(format!(
            "{what} expects {} joints, dataset has {}",
            ckpt.params.config.joints,
            ds.topology.len()
        ))
        .into());
    }
    Ok(())
}

pub fn gen_data(a: GenDataArgs) -> Result {
    let out = need(a.out, "out")?;
    let mut spec = match a.spec {
        Some(p) => {
            let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
            serde_json::from_str(&text).map_err(Error::from)?
        }
        None => DatasetSpec::default(),
    };
    spec.motions = a.motions.unwrap_or(spec.motions);
    spec.skeletons = a.skeletons.unwrap_or(spec.skeletons);
    spec.views = a.views.unwrap_or(spec.views);
    spec.frames = a.frames.unwrap_or(spec.frames);
    spec.joints = a.joints.unwrap_or(spec.joints);
    spec.seed = a.seed.unwrap_or(spec.seed);
    spec.validate().map_err(usage)?;
    let ds = Dataset::generate(&spec)?;
    ds.save(&out)?;
    println!(
        "{} windows ({} train, {} validation) from {}x{}x{} sequences -> {}",
        ds.len(),
        ds.train_keys().len(),
        ds.val_keys().len(),
        spec.motions,
        spec.skeletons,
        spec.views,
        out.display()
    );
    Ok(())
}

fn base_train_config(a: &TrainArgs, resumed: Option<&Checkpoint>) -> Result<TrainConfig> {
    if let Some(c) = resumed {
        return Ok(checkpoint_config(c)?);
    }
    if let Some(v) = &a.trainer {
        return serde_json::from_value(v.clone()).map_err(|e| CliError::Usage(format!("trainer config: {e}")));
    }
    if let Some(p) = &a.train_config {
        let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
        return TrainConfig::parse(&text).map_err(usage);
    }
    Ok(TrainConfig::default())
}

fn pose_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

pub fn train(a: TrainArgs) -> Result {
    let data = input(a.data.clone(), "data")?;
    let out = need(a.out.clone(), "out")?;
    let ds = Dataset::load(&data)?;
    let last = out.join(LAST_CHECKPOINT);
    let resumed = if a.resume {
        if !last.exists() {
            return Err(CliError::Usage(format!("--resume: {} does not exist", last.display())));
        }
        Some(Checkpoint::load(&last)?)
    } else {
        None
    };
    let mut cfg = base_train_config(&a, resumed.as_ref())?;
    if let Some(p) = &a.preset {
        cfg.weights = p.parse::<Preset>().map_err(usage)?.weights();
    }
    cfg.epochs = a.epochs.unwrap_or(cfg.epochs);
    cfg.batch_size = a.batch_size.unwrap_or(cfg.batch_size);
    cfg.optimizer.lr = a.lr.unwrap_or(cfg.optimizer.lr);
    cfg.seed = a.seed.unwrap_or(cfg.seed);
    cfg.patience = a.patience.or(cfg.patience);
    cfg.flip_prob = a.flip_prob.unwrap_or(cfg.flip_prob);
    cfg.checkpoint_every = a.checkpoint_every.unwrap_or(cfg.checkpoint_every);
    cfg.validate().map_err(usage)?;

    let count = a.unlabeled_clips.unwrap_or(DEFAULT_UNLABELED_CLIPS);
    let mut unlabeled = unlabeled_clips(&ds, count, UNLABELED_JITTER, UNLABELED_DROPOUT, cfg.seed)?;
    if let Some(dir) = &a.unlabeled_dir {
        for p in pose_files(dir)? {
            let s = ingest_pose_file(&p, &ds.topology)?;
            if s.frames() < ds.spec.window {
                eprintln!("skipping {}: {} frames", p.display(), s.frames());
                continue;
            }
            unlabeled.push(s);
        }
    }

    let mut trainer = match resumed {
        Some(c) => Trainer::resume(&ds, &unlabeled, cfg.clone(), c)?,
        None => Trainer::new(&ds, &unlabeled, cfg.clone())?,
    };
    write_text(&out.join("config.json"), &serde_json::to_string_pretty(&cfg).map_err(Error::from)?)?;
    let init = trainer.initial;
    eprintln!("initial: val cross {:.4}, retarget mse {:.4}", init.cross(), init.retarget_mse);
    let epochs = cfg.epochs;
    trainer.run(Some(&out), |r| {
        let s = r.val.silhouettes;
        eprintln!(
            "epoch {}/{}: train {:.4} (cross {:.4}), val cross {:.4}, mse {:.4}, silhouettes {:.3}/{:.3}/{:.3}, {:.1}s",
            r.epoch, epochs, r.train_total, r.train.cross, r.val.cross(), r.val.retarget_mse, s[0], s[1], s[2], r.seconds
        );
    })?;
    if let Some((e, v)) = trainer.best() {
        println!("best epoch {e}: val cross {v:.4}");
    }
    Ok(())
}

pub fn retarget(a: RetargetArgs) -> Result {
    let motion = input(a.motion, "motion")?;
    let statics = input(a.statics, "statics")?;
    let (ckpt, topo) = load_model(&input(a.checkpoint, "checkpoint")?)?;
    let out = need(a.out, "out")?;
    let m = ingest_pose_file(&motion, &topo)?;
    let s = ingest_pose_file(&statics, &topo)?;
    let result = retarget2d::evalkit::retarget_sequence(&ckpt.params, &ckpt.stats, &m, &s, s.root(0))?;
    write_text(&out, &export_pose_json(&result, &topo)?)
}

fn lerp(a: &Tensor<f32>, b: &Tensor<f32>, t: f32) -> Result<Tensor<f32>> {
    let mut x = a.clone();
    x.scale(1.0 - t);
    x.axpy(t, b)?;
    Ok(x)
}

pub fn interpolate(a: InterpolateArgs) -> Result {
    let pa = input(a.a, "a")?;
    let pb = input(a.b, "b")?;
    let space: Space = need(a.space, "space")?.parse().map_err(usage)?;
    let steps = a.steps.unwrap_or(DEFAULT_STEPS);
    if steps < 2 {
        return Err(CliError::Usage(format!("--steps {steps}: need at least 2")));
    }
    let (ckpt, topo) = load_model(&input(a.checkpoint, "checkpoint")?)?;
    let out = need(a.out, "out")?;
    let (sa, sb) = (ingest_pose_file(&pa, &topo)?, ingest_pose_file(&pb, &topo)?);
    let ca = encode_sequence(&ckpt.params, &ckpt.stats, &sa)?;
    let cb = encode_sequence(&ckpt.params, &ckpt.stats, &sb)?;
    if space == Space::Motion && ca.motion[0].shape() != cb.motion[0].shape() {
        return Err(Error::Shape("motion codes of different window lengths cannot be interpolated".into()).into());
    }
    // Motion interpolation covers the windows both sequences have.
    let windows = match space {
        Space::Motion => ca.windows().min(cb.windows()),
        _ => ca.windows(),
    };
    for i in 0..steps {
        let t = i as f32 / (steps - 1) as f32;
        let (mut motion, mut skeleton, mut view) = (ca.motion[..windows].to_vec(), ca.skeleton.clone(), ca.view.clone());
        match space {
            Space::Motion => {
                for (m, other) in motion.iter_mut().zip(&cb.motion) {
                    *m = lerp(m, other, t)?;
                }
            }
            Space::Skeleton => skeleton = lerp(&skeleton, &cb.skeleton, t)?,
            Space::View => view = lerp(&view, &cb.view, t)?,
        }
        let s = decode_sequence(&ckpt.params, &ckpt.stats, &motion, &skeleton, &view, sa.root(0), sa.fps)?;
        write_text(&out.join(format!("step_{i:03}.json")), &export_pose_json(&s, &topo)?)?;
    }
    println!("{steps} {} interpolation steps -> {}", space.name(), out.display());
    Ok(())
}

pub fn evaluate(a: EvaluateArgs) -> Result {
    let ds = Dataset::load(&input(a.data, "data")?)?;
    let out = need(a.out, "out")?;
    let load = |p: Option<PathBuf>, flag: &str| -> Result<Option<Checkpoint>> {
        match p {
            Some(p) => {
                let c = Checkpoint::load(&input(Some(p), flag)?)?;
                check_joints(&c, &ds, flag)?;
                Ok(Some(c))
            }
            None => Ok(None),
        }
    };
    let full = load(a.checkpoint, "checkpoint")?;
    let cross_only = load(a.cross_only, "cross-only")?;
    let rec_triplet = load(a.rec_triplet, "rec-triplet")?;
    fn pick(c: &Option<Checkpoint>) -> Option<(&ModelParams<f32>, &NormStats)> {
        c.as_ref().map(|c| (&c.params, &c.stats))
    }
    let models = Models { full: pick(&full), cross_only: pick(&cross_only), rec_triplet: pick(&rec_triplet) };
    let report = evaluate_report(&ds, &models)?;
    let md = report.to_markdown();
    write_text(&out.join("report.md"), &md)?;
    write_text(&out.join("report.csv"), &report.to_csv()?)?;
    print!("{md}");
    Ok(())
}

pub fn index(a: IndexArgs) -> Result {
    let (ckpt, topo) = load_model(&input(a.checkpoint, "checkpoint")?)?;
    let out = need(a.out, "out")?;
    if a.inputs.is_empty() && !a.append {
        return Err(CliError::Usage("no input pose files".into()));
    }
    let inputs: Vec<PathBuf> = a.inputs.into_iter().map(|p| input(Some(p), "inputs")).collect::<Result<_>>()?;
    let mut idx = if a.append && out.exists() { MotionIndex::load(&out)? } else { MotionIndex::new(&ckpt.params) };
    for p in &inputs {
        let id = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let video = ingest_pose_file(p, &topo)?;
        idx.add(&id, &video, &ckpt.params, &ckpt.stats)?;
    }
    idx.save(&out)?;
    println!("{} entries, {} latent steps -> {}", idx.len(), idx.steps(), out.display());
    Ok(())
}

pub fn retrieve(a: RetrieveArgs) -> Result {
    let idx = MotionIndex::load(&input(a.index, "index")?)?;
    let (ckpt, topo) = load_model(&input(a.checkpoint, "checkpoint")?)?;
    let query = ingest_pose_file(&input(a.query, "query")?, &topo)?;
    let top_k = a.top_k.unwrap_or(DEFAULT_TOP_K);
    if top_k == 0 {
        return Err(CliError::Usage("--top-k must be positive".into()));
    }
    let result = idx.search(&query, &ckpt.params, &ckpt.stats, top_k)?;
    let lines = hits_to_json_lines(&result.hits)?;
    let arch = &ckpt.params.config;
    eprintln!(
        "{} hits, {} query steps, cost {}; latent stride {} frames, receptive field {} frames (quoted {})",
        result.hits.len(),
        result.query_steps,
        result.cost,
        arch.time_factor(),
        arch.motion_receptive_field(),
        QUOTED_RECEPTIVE_FIELD
    );
    match a.out {
        Some(p) => write_text(&p, &lines),
        None => {
            print!("{lines}");
            Ok(())
        }
    }
}

pub fn export_latents(a: ExportLatentsArgs) -> Result {
    let ds = Dataset::load(&input(a.data, "data")?)?;
    let ckpt = Checkpoint::load(&input(a.checkpoint, "checkpoint")?)?;
    check_joints(&ckpt, &ds, "checkpoint")?;
    let out = need(a.out, "out")?;
    let keys = match a.split.as_deref().unwrap_or("all") {
        "all" => ds.keys(),
        "train" => ds.train_keys(),
        "val" => ds.val_keys(),
        s => return Err(CliError::Usage(format!("--split {s}: expected train, val or all"))),
    };
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    for space in Space::ALL {
        let path = out.join(format!("{}.csv", space.name()));
        let mut w = BufWriter::new(File::create(&path).map_err(|e| Error::io(&path, e))?);
        write_latents(&ckpt.params, &ckpt.stats, &ds, &keys, space, &mut w)?;
        w.flush().map_err(|e| Error::io(&path, e))?;
    }
    println!("{} windows x 3 spaces -> {}", keys.len(), out.display());
    Ok(())
}
