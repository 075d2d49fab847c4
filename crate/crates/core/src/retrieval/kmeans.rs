//! Lloyd's k-means with k-means++ seeding.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 25;
pub const MOVEMENT_TOLERANCE: f64 = 1e-6;

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest centroid and its squared distance. Ties go to the
/// lower index.
pub fn nearest(centroids: &[Vec<f64>], x: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = squared_distance(c, x);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    pub iterations: usize,
}

fn plus_plus_init<R: Rng>(points: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.gen_range(0..points.len())].clone());
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let next = match WeightedIndex::new(&d2) {
            Ok(dist) => dist.sample(rng),
            // All remaining mass is zero: every point coincides with a centroid.
            Err(_) => rng.gen_range(0..points.len()),
        };
        centroids.push(points[next].clone());
        let c = centroids.last().expect("just pushed");
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(squared_distance(p, c));
        }
    }
    centroids
}

/// Cluster `points` into `k` groups.
///
/// Stops after [`MAX_ITERATIONS`] updates or when no centroid moves by
/// [`MOVEMENT_TOLERANCE`] or more. A centroid that loses all its points is
/// re-seeded with the point farthest from its current centroid.
pub fn kmeans<R: Rng>(points: &[Vec<f64>], k: usize, rng: &mut R) -> Result<KMeans> {
    if k == 0 {
        return Err(Error::Training("k must be at least 1".into()));
    }
    if points.len() < k {
        return Err(Error::Training(format!(
            "{} points cannot form {k} clusters",
            points.len()
        )));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::Training("points have mixed dimensions".into()));
    }

    let mut centroids = plus_plus_init(points, k, rng);
    let mut iterations = 0;

    for _ in 0..MAX_ITERATIONS {
        iterations += 1;
        let (assignments, mut dists): (Vec<usize>, Vec<f64>) =
            points.par_iter().map(|p| nearest(&centroids, p)).unzip();

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assignments) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(p) {
                *s += v;
            }
        }

        let mut taken = vec![false; points.len()];
        let mut next = Vec::with_capacity(k);
        for c in 0..k {
            if counts[c] > 0 {
                next.push(sums[c].iter().map(|s| s / counts[c] as f64).collect::<Vec<_>>());
                continue;
            }
            let far = (0..points.len())
                .filter(|&i| !taken[i])
                .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)))
                .expect("at least k points");
            taken[far] = true;
            dists[far] = 0.0;
            next.push(points[far].clone());
        }

        let movement = centroids
            .iter()
            .zip(&next)
            .map(|(a, b)| squared_distance(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = next;
        if movement < MOVEMENT_TOLERANCE {
            break;
        }
    }
    let assignments = points.par_iter().map(|p| nearest(&centroids, p).0).collect();
    Ok(KMeans {
        centroids,
        assignments,
        iterations,
    })
}
