use crate::motiondata::Sample2D;
use crate::{Error, Result};

/// `|p - q|^2 / (2 J T h)` over absolute 2D positions.
pub fn retarget_mse(output: &Sample2D, ground_truth: &Sample2D, height: f64) -> Result<f64> {
    if output.joints() != ground_truth.joints() || output.frames() != ground_truth.frames() {
        return Err(Error::Shape(format!(
            "output {}x{} vs ground truth {}x{}",
            output.frames(),
            output.joints(),
            ground_truth.frames(),
            ground_truth.joints()
        )));
    }
    if !(height > 0.0 && height.is_finite()) {
        return Err(Error::InvalidInput(format!("height {height}")));
    }
    let sum: f64 = output
        .coords()
        .iter()
        .zip(ground_truth.coords())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / (output.coords().len() as f64 * height))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Silhouette {
    pub mean: f64,
    /// Points alone in their cluster (scored 0).
    pub singletons: usize,
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Mean silhouette coefficient with Euclidean distances.
pub fn mean_silhouette(points: &[Vec<f64>], labels: &[usize]) -> Result<Silhouette> {
    if points.len() != labels.len() {
        return Err(Error::Shape(format!("{} points, {} labels", points.len(), labels.len())));
    }
    let mut clusters: Vec<usize> = labels.to_vec();
    clusters.sort_unstable();
    clusters.dedup();
    if clusters.len() < 2 {
        return Err(Error::InvalidInput("silhouette needs at least two clusters".into()));
    }
    if let Some(p) = points.first() {
        if points.iter().any(|q| q.len() != p.len()) {
            return Err(Error::Shape("points of different dimension".into()));
        }
    }
    let slot = |l: usize| clusters.binary_search(&l).expect("label collected above");
    let sizes = labels.iter().fold(vec![0usize; clusters.len()], |mut acc, &l| {
        acc[slot(l)] += 1;
        acc
    });
    let mut total = 0.0;
    let mut singletons = 0;
    for (i, p) in points.iter().enumerate() {
        let own = slot(labels[i]);
        if sizes[own] == 1 {
            singletons += 1;
            continue;
        }
        let mut sums = vec![0.0; clusters.len()];
        for (j, q) in points.iter().enumerate() {
            if i != j {
                sums[slot(labels[j])] += distance(p, q);
            }
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..clusters.len())
            .filter(|&c| c != own)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    Ok(Silhouette {
        mean: total / points.len() as f64,
        singletons,
    })
}
