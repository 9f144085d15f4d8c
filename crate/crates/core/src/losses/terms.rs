use crate::motiondata::{NormStats, Topology};
use crate::tensorkit::{Scalar, Tensor};
use crate::{Error, Result};

pub const TRIPLET_MARGIN: f64 = 0.3;
pub const DEFAULT_END_EFFECTORS: [&str; 4] = ["l_wrist", "r_wrist", "l_ankle", "r_ankle"];

/// Mean squared error over all elements and its gradient with respect to
/// `pred`.
pub fn mse<T: Scalar>(pred: &Tensor<T>, target: &Tensor<T>) -> Result<(f64, Tensor<T>)> {
    pred.same_shape(target)?;
    let n = pred.len().max(1) as f64;
    let mut sum = 0.0;
    let scale = T::of(2.0 / n);
    let grad = pred
        .data()
        .iter()
        .zip(target.data())
        .map(|(&p, &t)| {
            let d = p - t;
            sum += d.f64() * d.f64();
            scale * d
        })
        .collect();
    Ok((sum / n, Tensor::new(pred.shape(), grad)?))
}

/// Hinge `[|a - p| - |a - n| + margin]_+` on flattened codes, with
/// gradients for anchor, positive and negative.
pub fn triplet_loss<T: Scalar>(
    anchor: &Tensor<T>,
    positive: &Tensor<T>,
    negative: &Tensor<T>,
    margin: f64,
) -> Result<(f64, [Tensor<T>; 3])> {
    anchor.same_shape(positive)?;
    anchor.same_shape(negative)?;
    let ap = anchor.sub(positive)?;
    let an = anchor.sub(negative)?;
    let (dp, dn) = (ap.norm().f64(), an.norm().f64());
    let value = dp - dn + margin;
    let zeros = || Tensor::zeros(anchor.shape());
    if value <= 0.0 {
        return Ok((0.0, [zeros(), zeros(), zeros()]));
    }
    // Subgradient 0 where a distance vanishes.
    let unit = |v: &Tensor<T>, d: f64| if d > 0.0 { v.map(|x| x / T::of(d)) } else { zeros() };
    let (up, un) = (unit(&ap, dp), unit(&an, dn));
    let ga = up.sub(&un)?;
    let gp = up.map(|x| -x);
    Ok((value, [ga, gp, un]))
}

pub fn end_effector_indices(topology: &Topology, names: &[String]) -> Result<Vec<usize>> {
    names
        .iter()
        .map(|n| {
            let j = topology.index(n)?;
            if j == 0 {
                return Err(Error::InvalidInput("the root cannot be an end effector".into()));
            }
            Ok(j)
        })
        .collect()
}

/// Global image-space velocity of joint `j` between frames `t` and `t + 1`
/// from normalized channels: root velocity plus the change of the joint's
/// denormalized root-relative position.
fn joint_velocity<T: Scalar>(x: &Tensor<T>, stats: &NormStats, j: usize, t: usize) -> [f64; 2] {
    let c = x.shape()[0];
    let mut v = [0.0; 2];
    for (d, vd) in v.iter_mut().enumerate() {
        let row = x.row(2 * (j - 1) + d);
        *vd = x.at2(c - 2 + d, t).f64() * stats.vel_std[d] + (row[t + 1].f64() - row[t].f64()) * stats.std[j][d];
    }
    v
}

/// Squared end-effector velocity error summed over joints and averaged over
/// the `T - 1` frame steps; gradient with respect to `pred`.
pub fn foot_velocity_loss<T: Scalar>(
    pred: &Tensor<T>,
    target: &Tensor<T>,
    stats: &NormStats,
    end_effectors: &[usize],
) -> Result<(f64, Tensor<T>)> {
    pred.same_shape(target)?;
    let (c, t) = pred.dims2()?;
    if c != stats.channels() {
        return Err(Error::Shape(format!("{c} channels for {} joints", stats.joints())));
    }
    if let Some(&bad) = end_effectors.iter().find(|&&j| j == 0 || j >= stats.joints()) {
        return Err(Error::InvalidInput(format!("end effector index {bad}")));
    }
    let mut grad = vec![0.0f64; c * t];
    if t < 2 {
        return Ok((0.0, Tensor::zeros(pred.shape())));
    }
    let steps = (t - 1) as f64;
    let mut sum = 0.0;
    for &j in end_effectors {
        for f in 0..t - 1 {
            let vp = joint_velocity(pred, stats, j, f);
            let vg = joint_velocity(target, stats, j, f);
            for d in 0..2 {
                let e = vp[d] - vg[d];
                sum += e * e;
                let g = 2.0 * e / steps;
                grad[(c - 2 + d) * t + f] += g * stats.vel_std[d];
                let row = (2 * (j - 1) + d) * t;
                grad[row + f + 1] += g * stats.std[j][d];
                grad[row + f] -= g * stats.std[j][d];
            }
        }
    }
    Ok((sum / steps, Tensor::new(pred.shape(), grad.into_iter().map(T::of).collect())?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensorkit::gradcheck::{check_gradient, random_tensor};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn t1(v: &[f64]) -> Tensor<f64> {
        Tensor::new(&[v.len()], v.to_vec()).unwrap()
    }

    #[test]
    fn mse_examples_and_loop_oracle() {
        let x = t1(&[1.0, 2.0, 3.0]);
        let y = x.map(|v| v + 0.25);
        assert!((mse(&y, &x).unwrap().0 - 0.0625).abs() < 1e-15);
        assert_eq!(mse(&x, &x).unwrap().0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..10 {
            let a = random_tensor(&[4, 6], &mut rng);
            let b = random_tensor(&[4, 6], &mut rng);
            let mut oracle = 0.0;
            for c in 0..4 {
                for t in 0..6 {
                    oracle += (a.at2(c, t) - b.at2(c, t)).powi(2);
                }
            }
            let (v, g) = mse(&a, &b).unwrap();
            assert!((v - oracle / 24.0).abs() < 1e-12);
            check_gradient(&a, &g, |x| mse(x, &b).unwrap().0).unwrap();
        }
        assert!(mse(&x, &t1(&[1.0])).is_err());
    }

    #[test]
    fn triplet_examples() {
        let a = t1(&[0.0, 0.0]);
        let m = TRIPLET_MARGIN;
        assert_eq!(triplet_loss(&a, &a, &t1(&[1.0, 0.0]), m).unwrap().0, 0.0);
        let v = triplet_loss(&a, &t1(&[1.0, 0.0]), &t1(&[0.0, 1.0]), m).unwrap().0;
        assert!((v - 0.3).abs() < 1e-12);
        assert_eq!(triplet_loss(&a, &t1(&[0.5, 0.0]), &t1(&[0.0, 0.9]), m).unwrap().0, 0.0);
        let v = triplet_loss(&a, &t1(&[0.5, 0.0]), &t1(&[0.0, 0.6]), m).unwrap().0;
        assert!((v - 0.2).abs() < 1e-12);
        assert!(triplet_loss(&a, &t1(&[1.0]), &a, m).is_err());
    }

    #[test]
    fn triplet_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut checked = 0;
        while checked < 10 {
            let a = random_tensor(&[3, 2], &mut rng);
            let p = random_tensor(&[3, 2], &mut rng);
            let n = random_tensor(&[3, 2], &mut rng);
            let (v, [ga, gp, gn]) = triplet_loss(&a, &p, &n, TRIPLET_MARGIN).unwrap();
            if v < 1e-3 {
                continue;
            }
            check_gradient(&a, &ga, |x| triplet_loss(x, &p, &n, TRIPLET_MARGIN).unwrap().0).unwrap();
            check_gradient(&p, &gp, |x| triplet_loss(&a, x, &n, TRIPLET_MARGIN).unwrap().0).unwrap();
            check_gradient(&n, &gn, |x| triplet_loss(&a, &p, x, TRIPLET_MARGIN).unwrap().0).unwrap();
            checked += 1;
        }
    }

    fn unit_stats(joints: usize) -> NormStats {
        NormStats::new(vec![[0.0; 2]; joints], vec![[1.0; 2]; joints], [1.0; 2]).unwrap()
    }

    #[test]
    fn foot_velocity_examples() {
        let stats = unit_stats(15);
        let topo = Topology::standard();
        let names: Vec<String> = DEFAULT_END_EFFECTORS.iter().map(|s| s.to_string()).collect();
        let ee = end_effector_indices(&topo, &names).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random_tensor(&[30, 16], &mut rng);
        assert_eq!(foot_velocity_loss(&x, &x, &stats, &ee).unwrap().0, 0.0);

        // Stationary target; prediction identical except for a root drift.
        let gt = Tensor::<f64>::zeros(&[30, 16]);
        let mut pred = gt.clone();
        let delta = 0.3;
        pred.row_mut(28).fill(delta);
        let v = foot_velocity_loss(&pred, &gt, &stats, &ee).unwrap().0;
        assert!((v - 4.0 * delta * delta).abs() < 1e-12);
        assert!(end_effector_indices(&topo, &["l_tail".to_string()]).is_err());
    }

    #[test]
    fn foot_velocity_loop_oracle_and_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let stats = NormStats::new(
            vec![[0.1, -0.2], [0.3, 0.4], [-0.5, 0.6], [0.2, 0.2]],
            vec![[1.0; 2], [0.5, 2.0], [1.5, 0.7], [0.9, 1.1]],
            [0.6, 1.3],
        )
        .unwrap();
        for _ in 0..10 {
            let p = random_tensor(&[8, 9], &mut rng);
            let g = random_tensor(&[8, 9], &mut rng);
            let ee = [1, 3];
            let (v, grad) = foot_velocity_loss(&p, &g, &stats, &ee).unwrap();
            // Oracle: denormalize to absolute positions, integrate the root,
            // difference the end effectors.
            let absolute = |x: &Tensor<f64>| {
                let mut root = [0.0, 0.0];
                let mut out = Vec::new();
                for t in 0..9 {
                    let mut frame = Vec::new();
                    for &j in &ee {
                        let mut q = [0.0; 2];
                        for d in 0..2 {
                            q[d] = root[d] + x.at2(2 * (j - 1) + d, t) * stats.std[j][d] + stats.mean[j][d];
                        }
                        frame.push(q);
                    }
                    out.push(frame);
                    for d in 0..2 {
                        root[d] += x.at2(6 + d, t) * stats.vel_std[d];
                    }
                }
                out
            };
            let (ap, ag) = (absolute(&p), absolute(&g));
            let mut oracle = 0.0;
            for t in 0..8 {
                for n in 0..2 {
                    for d in 0..2 {
                        let e = (ap[t + 1][n][d] - ap[t][n][d]) - (ag[t + 1][n][d] - ag[t][n][d]);
                        oracle += e * e;
                    }
                }
            }
            assert!((v - oracle / 8.0).abs() < 1e-10);
            check_gradient(&p, &grad, |x| foot_velocity_loss(x, &g, &stats, &ee).unwrap().0).unwrap();
        }
    }
}
