//! Acceptance run. Prints one PASS/FAIL line per criterion and a summary;
//! failures are reported, not turned into a non-zero exit.
//!
//! The desk-scale training runs take several minutes in the test profile.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use nalgebra::{Matrix3, Vector2, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use retarget2d::evalkit::{baseline3d_mse, evaluation_tasks, fk2d_baseline, fk2d_mse, network_mse, Baseline3dMode};
use retarget2d::losses::{
    foot_velocity_loss, mse, pair_objective, reconstruction_objective, triplet_loss, CrossTerm, ObjectiveContext,
    PairTensors, Side, LossWeights, TRIPLET_MARGIN,
};
use retarget2d::motiondata::{
    character_frame, denormalize, normalize, project_in_frame, CameraView, Dataset, DatasetSpec, NormStats, Sample2D,
    Topology,
};
use retarget2d::network::{
    decode, decode_backward, decode_with_cache, encode, encode_backward, encode_with_cache, fuse_codes, motion_code_len,
    ArchConfig, Checkpoint, Gradients, ModelParams,
};
use retarget2d::retrieval::MotionIndex;
use retarget2d::tensorkit::gradcheck::{check_gradient, random_tensor};
use retarget2d::tensorkit::{
    conv1d, conv1d_backward, dropout, dropout_backward, global_pool1d, global_pool1d_backward, leaky_relu,
    leaky_relu_backward, pool1d, pool1d_backward, upsample_nearest, upsample_nearest_backward, ConvSpec, PoolKind,
    Tensor, LEAKY_SLOPE,
};
use retarget2d::trainer::{unlabeled_clips, Preset, TrainConfig, Trainer};

type Verdict = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

struct Tally {
    passed: usize,
    total: usize,
}

impl Tally {
    fn record(&mut self, id: &str, name: &str, f: impl FnOnce() -> Verdict) {
        let start = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        self.total += 1;
        match verdict {
            Ok(d) => {
                self.passed += 1;
                println!("PASS {id} {name}: {d} ({secs:.1}s)");
            }
            Err(d) => println!("FAIL {id} {name}: {d} ({secs:.1}s)"),
        }
    }
}

// ---- 1. gradients ----

/// Runs `cases` checks and returns the worst relative error.
fn grad_cases(cases: usize, mut one: impl FnMut(usize) -> Result<f64, String>) -> Result<f64, String> {
    let mut worst: f64 = 0.0;
    for c in 0..cases {
        worst = worst.max(one(c).map_err(|e| format!("case {c}: {e}"))?);
    }
    Ok(worst)
}

fn distinct_entries(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor<f64> {
    // max-pool finite differences are invalid near ties
    loop {
        let x = random_tensor(shape, rng);
        let mut v = x.data().to_vec();
        v.sort_by(f64::total_cmp);
        if v.windows(2).all(|w| w[1] - w[0] > 1e-3) {
            return x;
        }
    }
}

fn gradient_suite() -> Vec<(&'static str, Result<f64, String>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut out = Vec::new();

    out.push(("conv1d", grad_cases(12, |c| {
        let (k, s) = [(8, 2), (5, 1), (3, 2), (8, 1)][c % 4];
        let len = [16, 11, 9, 24][c % 4];
        let spec = ConvSpec::new(3, 4, k, s);
        let x = random_tensor(&[3, len], &mut rng);
        let w = random_tensor(&spec.weight_shape(), &mut rng);
        let b = random_tensor(&[4], &mut rng);
        let probe = random_tensor(&[4, spec.output_len(len)], &mut rng);
        let loss = |x: &Tensor<f64>, w: &Tensor<f64>, b: &Tensor<f64>| conv1d(x, w, b, &spec).unwrap().dot(&probe).unwrap();
        let g = conv1d_backward(&probe, &x, &w, &spec).unwrap();
        let e1 = check_gradient(&x, &g.input, |v| loss(v, &w, &b))?;
        let e2 = check_gradient(&w, &g.weights, |v| loss(&x, v, &b))?;
        let e3 = check_gradient(&b, &g.bias, |v| loss(&x, &w, v))?;
        Ok(e1.max(e2).max(e3))
    })));

    out.push(("leaky_relu", grad_cases(10, |_| {
        let x = distinct_entries(&[3, 7], &mut rng);
        let probe = random_tensor(&[3, 7], &mut rng);
        let g = leaky_relu_backward(&probe, &x, LEAKY_SLOPE).unwrap();
        check_gradient(&x, &g, |x| leaky_relu(x, LEAKY_SLOPE).dot(&probe).unwrap())
    })));

    for kind in [PoolKind::Max, PoolKind::Avg] {
        let name = if kind == PoolKind::Max { "max_pool" } else { "avg_pool" };
        out.push((name, grad_cases(10, |c| {
            let len = 5 + c;
            let x = distinct_entries(&[2, len], &mut rng);
            let probe = random_tensor(&[2, len.div_ceil(2)], &mut rng);
            let g = pool1d_backward(&probe, &x, kind).unwrap();
            check_gradient(&x, &g, |x| pool1d(x, kind).unwrap().dot(&probe).unwrap())
        })));
        let name = if kind == PoolKind::Max { "global_max_pool" } else { "global_avg_pool" };
        out.push((name, grad_cases(10, |c| {
            let x = distinct_entries(&[3, 4 + c], &mut rng);
            let probe = random_tensor(&[3, 1], &mut rng);
            let g = global_pool1d_backward(&probe, &x, kind).unwrap();
            check_gradient(&x, &g, |x| global_pool1d(x, kind).unwrap().dot(&probe).unwrap())
        })));
    }

    out.push(("upsample", grad_cases(10, |c| {
        let x = random_tensor(&[2, 3 + c], &mut rng);
        let probe = random_tensor(&[2, 2 * (3 + c)], &mut rng);
        let g = upsample_nearest_backward(&probe, 2).unwrap();
        check_gradient(&x, &g, |x| upsample_nearest(x, 2).unwrap().dot(&probe).unwrap())
    })));

    out.push(("dropout", grad_cases(10, |_| {
        let x = random_tensor(&[2, 6], &mut rng);
        let mask = dropout(&x, 0.3, true, &mut rng).unwrap().1.unwrap();
        let probe = random_tensor(&[2, 6], &mut rng);
        let g = dropout_backward(&probe, Some(&mask)).unwrap();
        check_gradient(&x, &g, |x| x.data().iter().zip(mask.data()).zip(probe.data()).map(|((a, m), p)| a * m * p).sum())
    })));

    out.push(("mse", grad_cases(10, |c| {
        let p = random_tensor(&[4, 3 + c], &mut rng);
        let t = random_tensor(&[4, 3 + c], &mut rng);
        let (_, g) = mse(&p, &t).unwrap();
        check_gradient(&p, &g, |x| mse(x, &t).unwrap().0)
    })));

    out.push(("triplet", grad_cases(10, |_| loop {
        let a = random_tensor(&[4, 2], &mut rng);
        let p = random_tensor(&[4, 2], &mut rng);
        let n = random_tensor(&[4, 2], &mut rng);
        let (v, [ga, gp, gn]) = triplet_loss(&a, &p, &n, TRIPLET_MARGIN).unwrap();
        // The hinge is not differentiable at zero; draw active cases.
        if v < 1e-3 {
            continue;
        }
        let e1 = check_gradient(&a, &ga, |x| triplet_loss(x, &p, &n, TRIPLET_MARGIN).unwrap().0)?;
        let e2 = check_gradient(&p, &gp, |x| triplet_loss(&a, x, &n, TRIPLET_MARGIN).unwrap().0)?;
        let e3 = check_gradient(&n, &gn, |x| triplet_loss(&a, &p, x, TRIPLET_MARGIN).unwrap().0)?;
        break Ok(e1.max(e2).max(e3));
    })));

    let stats4 = NormStats::new(
        vec![[0.1, -0.2], [0.3, 0.4], [-0.5, 0.6], [0.2, 0.2]],
        vec![[1.0; 2], [0.5, 2.0], [1.5, 0.7], [0.9, 1.1]],
        [0.6, 1.3],
    )
    .unwrap();
    out.push(("foot_velocity", grad_cases(10, |c| {
        let p = random_tensor(&[8, 5 + c], &mut rng);
        let t = random_tensor(&[8, 5 + c], &mut rng);
        let (_, g) = foot_velocity_loss(&p, &t, &stats4, &[1, 3]).unwrap();
        check_gradient(&p, &g, |x| foot_velocity_loss(x, &t, &stats4, &[1, 3]).unwrap().0)
    })));

    let config = ArchConfig::tiny(3);
    out.push(("encoder_decoder", grad_cases(10, |c| {
        let p: ModelParams<f64> = ModelParams::init(&config, &mut rng).unwrap();
        let x = random_tensor(&[6, 16], &mut rng);
        let r = random_tensor(&[6, 16], &mut rng);
        let training = c % 2 == 1;
        let seed = c as u64;
        let loss = |p: &ModelParams<f64>| {
            let codes = encode(p, &x).unwrap();
            let mut d = ChaCha8Rng::seed_from_u64(seed);
            decode_with_cache(p, &codes, training.then_some(&mut d)).unwrap().0.dot(&r).unwrap()
        };
        let (codes, ec) = encode_with_cache(&p, &x).unwrap();
        let mut d = ChaCha8Rng::seed_from_u64(seed);
        let (_, dc) = decode_with_cache(&p, &codes, training.then_some(&mut d)).unwrap();
        let mut grads = Gradients::new();
        let cg = decode_backward(&p, &dc, &r, &mut grads).unwrap();
        encode_backward(&p, &ec, &cg, &mut grads).unwrap();
        all_params(&p, &grads, loss)
    })));

    let stats3 = NormStats::new(vec![[0.0; 2], [0.2, -0.1], [0.4, 0.3]], vec![[1.0; 2], [0.8, 1.2], [1.1, 0.9]], [0.5, 0.7]).unwrap();
    out.push(("pair_objective", grad_cases(10, |c| {
        let p: ModelParams<f64> = ModelParams::init(&config, &mut rng).unwrap();
        let mut r = || random_tensor(&[6, 16], &mut rng);
        let mut pair = PairTensors { a_in: r(), b_in: r(), a: r(), b: r(), gt_ab: r(), gt_ba: r(), extra: vec![] };
        if c % 3 == 0 {
            pair.extra.push(CrossTerm { motion: Side::A, skeleton: Side::B, view: Side::A, target: r() });
        }
        let w = LossWeights::default();
        let ctx = ObjectiveContext { stats: &stats3, end_effectors: &[1, 2], weights: w };
        let dropout_seed = (c % 2 == 1).then_some(c as u64);
        let eval = |q: &ModelParams<f64>, grads: Option<&mut Gradients<f64>>| {
            let mut d = dropout_seed.map(ChaCha8Rng::seed_from_u64);
            pair_objective(q, &pair, &ctx, d.as_mut(), grads).unwrap().total(&w)
        };
        let mut grads = Gradients::new();
        eval(&p, Some(&mut grads));
        all_params(&p, &grads, |q| eval(q, None))
    })));

    out.push(("reconstruction_objective", grad_cases(10, |_| {
        let p: ModelParams<f64> = ModelParams::init(&config, &mut rng).unwrap();
        let x = random_tensor(&[6, 16], &mut rng);
        let t = random_tensor(&[6, 16], &mut rng);
        let mut grads = Gradients::new();
        reconstruction_objective::<f64, ChaCha8Rng>(&p, &x, &t, 1.0, None, Some(&mut grads)).unwrap();
        all_params(&p, &grads, |q| reconstruction_objective::<f64, ChaCha8Rng>(q, &x, &t, 1.0, None, None).unwrap())
    })));
    out
}

/// Central differences with the step shrunk by `shrink`, via
/// `g(t) = f(x + (t - x) / shrink)` whose gradient is `f'(x) / shrink`.
fn check_finer(x: &Tensor<f64>, analytic: &Tensor<f64>, f: &impl Fn(&Tensor<f64>) -> f64, shrink: f64) -> Result<f64, String> {
    let scaled = analytic.map(|v| v / shrink);
    check_gradient(x, &scaled, |t| {
        let mut u = t.clone();
        for (a, &b) in u.data_mut().iter_mut().zip(x.data()) {
            *a = b + (*a - b) / shrink;
        }
        f(&u)
    })
}

/// Kinks of leaky ReLU and max pooling inside the network cannot be steered
/// away from, so a tensor that fails at the default step is re-checked at
/// two finer steps and accepted only if both agree.
static REFINED: AtomicUsize = AtomicUsize::new(0);

fn all_params(p: &ModelParams<f64>, grads: &Gradients<f64>, loss: impl Fn(&ModelParams<f64>) -> f64) -> Result<f64, String> {
    let mut worst: f64 = 0.0;
    for (name, base) in &p.tensors {
        let g = grads.get(name).cloned().unwrap_or_else(|| Tensor::zeros(base.shape()));
        let f = |t: &Tensor<f64>| {
            let mut q = p.clone();
            q.tensors.insert(name.clone(), t.clone());
            loss(&q)
        };
        let e = match check_gradient(base, &g, f) {
            Ok(e) => e,
            Err(coarse) => {
                let fine = check_finer(base, &g, &f, 10.0).and_then(|a| Ok(a.max(check_finer(base, &g, &f, 100.0)?)));
                REFINED.fetch_add(1, Ordering::Relaxed);
                fine.map_err(|e| format!("{name}: {coarse}; finer step: {e}"))?
            }
        };
        worst = worst.max(e);
    }
    Ok(worst)
}

fn criterion_gradients() -> Verdict {
    let start = Instant::now();
    let results = gradient_suite();
    let secs = start.elapsed().as_secs_f64();
    let mut worst: f64 = 0.0;
    for (name, r) in &results {
        match r {
            Ok(e) => worst = worst.max(*e),
            Err(e) => return Err(format!("{name}: {e}")),
        }
    }
    let refined = REFINED.load(Ordering::Relaxed);
    ensure(
        secs < 120.0,
        format!("{} ops and losses, >=10 cases each, worst relative error {worst:.2e}, {refined} tensor(s) checked at a finer step", results.len()),
    )
}

// ---- 2. shapes ----

fn criterion_shapes() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for joints in [15, 17] {
        let config = ArchConfig::for_joints(joints);
        let p: ModelParams<f64> = ModelParams::init(&config, &mut rng).unwrap();
        for t in [40, 48, 56, 64] {
            let x = random_tensor(&[2 * joints, t], &mut rng);
            let codes = encode(&p, &x).unwrap();
            let fused = fuse_codes(&config, &codes).unwrap();
            let got = (codes.motion.shape().to_vec(), codes.skeleton.len(), codes.view.len(), fused.shape().to_vec());
            let want = (vec![128, t.div_ceil(8)], 16, 8, vec![152, t.div_ceil(8)]);
            if got != want || motion_code_len(&config, t) != t.div_ceil(8) {
                return Err(format!("J={joints} T={t}: {got:?} vs {want:?}"));
            }
            let y = decode(&p, &codes).unwrap();
            if y.shape() != x.shape() {
                return Err(format!("J={joints} T={t}: decoded {:?}", y.shape()));
            }
        }
    }
    Ok("T in {40,48,56,64} x J in {15,17}; motion ceil(T/8)x128, static 16 and 8, decoder input 152".into())
}

// ---- 3. round trips ----

fn criterion_round_trips(ds: &Dataset) -> Verdict {
    let mut worst_norm: f64 = 0.0;
    for s in ds.samples().iter().step_by(7) {
        let n = normalize(s, &ds.stats).unwrap();
        let back = denormalize(&n, &ds.stats, s.root(0), s.fps).unwrap();
        worst_norm = worst_norm.max(back.max_abs_diff(s));
        let mirror = ds.topology.mirror();
        if s.flipped(mirror).unwrap().flipped(mirror).unwrap() != *s {
            return Err("flip is not an involution".into());
        }
    }
    if worst_norm >= 1e-6 {
        return Err(format!("normalization error {worst_norm:.2e}"));
    }

    let clip = ds.clip3d(0, 0).unwrap();
    let identity = CameraView::new(0, Vector3::zeros(), 1.0, Vector2::zeros()).unwrap();
    let projected = project_in_frame(&clip, &Matrix3::identity(), &identity);
    let mut worst_proj: f64 = 0.0;
    for (n, p) in clip.positions().iter().enumerate() {
        let q = projected.point(n / clip.joints(), n % clip.joints());
        worst_proj = worst_proj.max((q[0] - p.x).abs()).max((q[1] - p.y).abs());
    }
    if worst_proj != 0.0 {
        return Err(format!("identity projection error {worst_proj:.2e}"));
    }

    let params: ModelParams<f32> = ModelParams::init(&ArchConfig::default(), &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let ckpt = Checkpoint::new(params.clone(), ds.stats.clone());
    if Checkpoint::from_bytes(&ckpt.to_bytes().unwrap()).unwrap() != ckpt {
        return Err("checkpoint round trip".into());
    }
    let mut index = MotionIndex::new(&params);
    for (n, s) in ds.samples().iter().take(5).enumerate() {
        index.add(&format!("v{n}"), s, &params, &ds.stats).unwrap();
    }
    if MotionIndex::from_bytes(&index.to_bytes().unwrap()).unwrap() != index {
        return Err("index round trip".into());
    }
    Ok(format!("normalization {worst_norm:.1e}, flip and projection exact, checkpoint and index bit-exact"))
}

// ---- 4 and 7. desk-scale training ----

struct RunResult {
    initial_cross: f64,
    final_cross: f64,
    mse: f64,
    silhouettes: [f64; 3],
    foot: f64,
    params: ModelParams<f32>,
}

fn train(ds: &Dataset, unlabeled: &[Sample2D], preset: Preset) -> RunResult {
    let start = Instant::now();
    let config = TrainConfig { weights: preset.weights(), ..TrainConfig::default() };
    let mut t = Trainer::new(ds, unlabeled, config).unwrap();
    t.run(None, |_| {}).unwrap();
    let last = &t.reports.last().unwrap().val;
    let tasks = evaluation_tasks(ds);
    let r = RunResult {
        initial_cross: t.initial.cross(),
        final_cross: last.cross(),
        mse: network_mse(&t.params, &ds.stats, ds, &tasks).unwrap(),
        silhouettes: last.silhouettes,
        foot: last.components.foot,
        params: t.params.clone(),
    };
    eprintln!(
        "  {preset:?}: {} epochs in {:.0}s, val cross {:.3} -> {:.3}, mse {:.3}, silhouettes {:.3?}, foot {:.3}",
        t.epoch,
        start.elapsed().as_secs_f64(),
        r.initial_cross,
        r.final_cross,
        r.mse,
        r.silhouettes,
        r.foot
    );
    r
}

// ---- 5. baselines ----

fn angle(s: &Sample2D, t: usize, j: usize, p: usize) -> f64 {
    let (a, b) = (s.point(t, j), s.point(t, p));
    (a[1] - b[1]).atan2(a[0] - b[0])
}

fn criterion_baselines(ds: &Dataset) -> Verdict {
    let tasks = evaluation_tasks(ds);
    let rescaled = baseline3d_mse(ds, &tasks, Baseline3dMode::Rescaled).unwrap();
    if rescaled > 1e-9 {
        return Err(format!("rescaled 3D baseline MSE {rescaled:.2e}"));
    }
    let topo: &Topology = &ds.topology;
    let mut worst_angle: f64 = 0.0;
    let mut worst_identity: f64 = 0.0;
    for task in tasks.iter().step_by(5) {
        let (src, reference) = (ds.get(&task.motion).unwrap(), ds.get(&task.statics).unwrap());
        let out = fk2d_baseline(src, reference, topo, reference.root(0)).unwrap();
        for t in 0..src.frames() {
            for j in 1..topo.len() {
                let p = topo.parent(j).unwrap();
                let d = angle(&out, t, j, p) - angle(src, t, j, p);
                worst_angle = worst_angle.max(d.sin().abs());
            }
        }
        let same = fk2d_baseline(src, src, topo, src.root(0)).unwrap();
        worst_identity = worst_identity.max(same.max_abs_diff(src));
    }
    ensure(
        worst_angle < 1e-6 && worst_identity < 1e-6,
        format!("rescaled 3D MSE {rescaled:.1e}, 2D-FK angle error {worst_angle:.1e}, identity error {worst_identity:.1e}"),
    )
}

// ---- 6. retrieval ----

/// 20 indexed videos: 10 motions that are queried and 10 distractors, all
/// from the families the model was trained on. Windows are encoded on a
/// 64-frame grid, so queries are grid-aligned 64-frame crops.
fn criterion_retrieval(ds: &Dataset, params: &ModelParams<f32>) -> Verdict {
    let start = Instant::now();
    let (targets, videos, frames) = (10, 20, 192);
    let families: Vec<_> = ds.spec.split().train_motions.iter().map(|&i| ds.spec.family(i)).collect();
    let spec = DatasetSpec { motions: videos, skeletons: 3, frames, families, seed: 77, ..DatasetSpec::default() };
    let bench = Dataset::generate(&spec).unwrap();
    let render = |m: usize, k: usize, v: usize| {
        let frame = character_frame(&bench.clip3d(m, 0).unwrap()).unwrap();
        project_in_frame(&bench.clip3d(m, k).unwrap(), frame.matrix(), bench.view(v).unwrap())
    };
    let views = spec.views;
    let mut index = MotionIndex::new(params);
    let mut rendered = Vec::new();
    for m in 0..videos {
        let v = render(m, 0, m % views);
        index.add(&format!("m{m}"), &v, params, &ds.stats).unwrap();
        rendered.push(v);
    }

    let mut self_queries = 0;
    for (m, v) in rendered.iter().enumerate() {
        for offset in (0..frames).step_by(64) {
            let hit = &index.search(&v.crop(offset, 64).unwrap(), params, &ds.stats, 1).unwrap().hits[0];
            let step = (hit.latent_offset as i64 - (offset / 8) as i64).abs();
            if hit.video != format!("m{m}") || step > 1 || hit.score <= 0.999 {
                return Err(format!("self-query m{m}@{offset}: got {} at step {} score {:.5}", hit.video, hit.latent_offset, hit.score));
            }
            self_queries += 1;
        }
    }

    let queries = 25;
    let (mut correct, mut same_family) = (0, 0);
    for q in 0..queries {
        let m = q % targets;
        let view = (m % views + 1 + q % (views - 1)) % views;
        let query = render(m, 1 + q % 2, view).crop(64 * (q % 3), 64).unwrap();
        let top = &index.search(&query, params, &ds.stats, 1).unwrap().hits[0];
        correct += usize::from(top.video == format!("m{m}"));
        let n: usize = top.video[1..].parse().unwrap();
        same_family += usize::from(bench.spec.family(n) == bench.spec.family(m));
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(
        correct * 5 >= queries * 4 && secs < 300.0,
        format!(
            "{self_queries} self-queries exact; cross-skeleton/view top-1 {correct}/{queries} (right family {same_family}/{queries}); {videos} videos"
        ),
    )
}

fn main() {
    let mut tally = Tally { passed: 0, total: 0 };
    tally.record("1", "gradient suite", criterion_gradients);
    tally.record("2", "shape suite", criterion_shapes);

    let ds = Dataset::generate(&DatasetSpec::default()).unwrap();
    tally.record("3", "round trips", || criterion_round_trips(&ds));
    tally.record("5", "baseline correctness", || criterion_baselines(&ds));

    let tasks = evaluation_tasks(&ds);
    let fk2d = fk2d_mse(&ds, &tasks).unwrap();
    let unlabeled = unlabeled_clips(&ds, 16, 0.005, 0.02, 1).unwrap();
    eprintln!("desk-scale training: {} samples, {} evaluation tasks, 2D-FK MSE {fk2d:.3}", ds.len(), tasks.len());
    let full = train(&ds, &unlabeled, Preset::Full);
    let cross_only = train(&ds, &unlabeled, Preset::CrossOnly);
    let rec_triplet = train(&ds, &unlabeled, Preset::RecTriplet);
    let no_foot = train(&ds, &unlabeled, Preset::NoFoot);

    tally.record("4a", "validation cross loss drop", || {
        let ratio = full.initial_cross / full.final_cross;
        ensure(ratio >= 5.0, format!("{:.3} -> {:.3} ({ratio:.1}x, need 5x)", full.initial_cross, full.final_cross))
    });
    tally.record("4b", "full model beats 2D-FK", || {
        ensure(full.mse < fk2d, format!("full {:.3} vs 2D-FK {fk2d:.3}", full.mse))
    });
    tally.record("4c", "rec+triplet ablation at least 2x worse", || {
        let ratio = rec_triplet.mse / full.mse;
        ensure(ratio >= 2.0, format!("rec+triplet {:.3} vs full {:.3} ({ratio:.1}x)", rec_triplet.mse, full.mse))
    });
    tally.record("4d", "silhouettes positive and above cross-only", || {
        let (a, b) = (full.silhouettes, cross_only.silhouettes);
        let positive = a.iter().all(|&s| s > 0.0);
        let above = a.iter().zip(&b).all(|(x, y)| x > y);
        ensure(
            positive && above,
            format!("full [motion, skeleton, view] {a:.3?} vs cross-only {b:.3?}"),
        )
    });
    tally.record("6", "retrieval", || criterion_retrieval(&ds, &full.params));
    tally.record("7", "foot velocity term lowers end-effector error", || {
        ensure(full.foot < no_foot.foot, format!("foot weight 0.5: {:.3}, foot weight 0: {:.3}", full.foot, no_foot.foot))
    });
    println!("{}/{} criteria passed", tally.passed, tally.total);
}
