//! Lloyd's k-means with farthest-point seeding.

use ndarray::{Array2, ArrayView2};
use rand::Rng;

use crate::error::Error;
use crate::Result;

const MAX_ITERS: usize = 300;

/// Result of the best restart: hard assignments plus the within-cluster
/// sum of squared distances they achieve.
#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    pub centers: Array2<f64>,
    pub inertia: f64,
}

/// Cluster the rows of `x` into `k` groups. Each restart seeds one center
/// at a random row and then repeatedly adds the row farthest from its
/// nearest chosen center; Lloyd iterations run until the assignment stops
/// changing. The restart with the lowest inertia wins. Identical inputs and
/// RNG state give identical results.
pub fn kmeans<R: Rng>(x: ArrayView2<'_, f64>, k: usize, restarts: usize, rng: &mut R) -> Result<KMeansResult> {
    let n = x.nrows();
    if k == 0 || restarts == 0 {
        return Err(Error::Metric("kmeans needs k > 0 and at least one restart".into()));
    }
    if n < k {
        return Err(Error::Metric(format!("cannot split {n} points into {k} clusters")));
    }

    let mut best: Option<KMeansResult> = None;
    for _ in 0..restarts {
        let run = run_once(x, k, rng);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn run_once<R: Rng>(x: ArrayView2<'_, f64>, k: usize, rng: &mut R) -> KMeansResult {
    let (n, d) = (x.nrows(), x.ncols());
    let mut centers = Array2::zeros((k, d));
    centers.row_mut(0).assign(&x.row(rng.random_range(0..n)));

    // Farthest-point seeding; ties break toward the lowest row index.
    let mut nearest = vec![f64::INFINITY; n];
    for c in 1..k {
        for (i, dist) in nearest.iter_mut().enumerate() {
            let to_new = sq_dist(x, i, &centers, c - 1);
            if to_new < *dist {
                *dist = to_new;
            }
        }
        let far = nearest
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite distances"))
            .map(|(i, _)| i)
            .expect("nonempty data");
        centers.row_mut(c).assign(&x.row(far));
    }

    let mut assignments = vec![0usize; n];
    for _ in 0..MAX_ITERS {
        let mut changed = false;
        for i in 0..n {
            let mut best_c = 0;
            let mut best_d = f64::INFINITY;
            for c in 0..k {
                let dist = sq_dist(x, i, &centers, c);
                if dist < best_d {
                    best_d = dist;
                    best_c = c;
                }
            }
            if assignments[i] != best_c {
                assignments[i] = best_c;
                changed = true;
            }
        }
        if !changed {
            break;
        }

        centers.fill(0.0);
        let mut counts = vec![0usize; k];
        for (i, &c) in assignments.iter().enumerate() {
            let mut row = centers.row_mut(c);
            row += &x.row(i);
            counts[c] += 1;
        }
        for (c, &count) in counts.iter().enumerate() {
            if count > 0 {
                let mut row = centers.row_mut(c);
                row /= count as f64;
            }
        }
        // An emptied cluster restarts at the point farthest from its center.
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = sq_dist(x, a, &centers, assignments[a]);
                        let db = sq_dist(x, b, &centers, assignments[b]);
                        da.partial_cmp(&db).expect("finite distances")
                    })
                    .expect("nonempty data");
                centers.row_mut(c).assign(&x.row(far));
            }
        }
    }

    let inertia = (0..n).map(|i| sq_dist(x, i, &centers, assignments[i])).sum();
    KMeansResult {
        assignments,
        centers,
        inertia,
    }
}

fn sq_dist(x: ArrayView2<'_, f64>, i: usize, centers: &Array2<f64>, c: usize) -> f64 {
    x.row(i)
        .iter()
        .zip(centers.row(c))
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}
