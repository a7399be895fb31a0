//! Lloyd's k-means with k-means++ seeding and silhouette-based choice of k.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KMeansConfig {
    pub k_min: usize,
    pub k_max: usize,
    /// One restart per seed; the lowest objective wins, earlier seed on ties.
    pub seeds: Vec<u64>,
    pub max_iter: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            k_min: 2,
            k_max: 8,
            seeds: (0..10).collect(),
            max_iter: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    pub k: usize,
    pub centers: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    /// Sum of squared distances to assigned centers.
    pub inertia: f64,
    /// Objective after each assignment step.
    pub inertia_trace: Vec<f64>,
    /// Mean silhouette; absent when fewer than two clusters are non-empty.
    pub silhouette: Option<f64>,
    pub seed: u64,
}

impl ClusterResult {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = alloc::vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centers = Vec::with_capacity(k);
    centers.push(points[rng.random_range(0..points.len())].clone());
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = points.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..points.len())
        };
        centers.push(points[pick].clone());
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &centers[centers.len() - 1]));
        }
    }
    centers
}

/// Runs Lloyd iterations from the given centers until the assignment is a
/// fixpoint or `max_iter` is reached.
pub fn lloyd(points: &[Vec<f64>], mut centers: Vec<Vec<f64>>, max_iter: usize) -> (Vec<Vec<f64>>, Vec<usize>, Vec<f64>) {
    let k = centers.len();
    let dim = points[0].len();
    let mut assignments = alloc::vec![usize::MAX; points.len()];
    let mut trace = Vec::new();
    for _ in 0..max_iter.max(1) {
        let mut changed = false;
        let mut inertia = 0.0;
        let mut dists = Vec::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            let (j, d) = nearest(p, &centers);
            if assignments[i] != j {
                assignments[i] = j;
                changed = true;
            }
            inertia += d;
            dists.push(d);
        }
        trace.push(inertia);
        if !changed {
            break;
        }
        let mut sums = alloc::vec![alloc::vec![0.0; dim]; k];
        let mut counts = alloc::vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, x) in sums[a].iter_mut().zip(p) {
                *s += x;
            }
        }
        for j in 0..k {
            if counts[j] > 0 {
                centers[j] = sums[j].iter().map(|s| s / counts[j] as f64).collect();
            } else {
                // re-seed an empty cluster at the worst-served point
                let far = (0..points.len())
                    .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)))
                    .expect("non-empty input");
                centers[j] = points[far].clone();
                dists[far] = 0.0;
            }
        }
    }
    (centers, assignments, trace)
}

/// One k-means run seeded by k-means++ with `seed`.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, max_iter: usize) -> Result<ClusterResult> {
    if k == 0 || points.len() < k {
        return Err(Error::TooFewVectors { needed: k.max(1), got: points.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init = plus_plus_init(points, k, &mut rng);
    let (centers, assignments, trace) = lloyd(points, init, max_iter);
    let inertia = points
        .iter()
        .zip(&assignments)
        .map(|(p, &a)| sq_dist(p, &centers[a]))
        .sum();
    Ok(ClusterResult {
        k,
        centers,
        assignments,
        inertia,
        inertia_trace: trace,
        silhouette: None,
        seed,
    })
}

/// Best of one run per seed, with its silhouette filled in.
pub fn kmeans_best_of(points: &[Vec<f64>], k: usize, seeds: &[u64], max_iter: usize) -> Result<ClusterResult> {
    let mut best: Option<ClusterResult> = None;
    for &seed in seeds {
        let run = kmeans(points, k, seed, max_iter)?;
        if best.as_ref().map_or(true, |b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    let mut best = best.ok_or(Error::EmptyInput)?;
    best.silhouette = silhouette(points, &best.assignments, k);
    Ok(best)
}

/// Mean silhouette coefficient. Points alone in their cluster score 0;
/// points at zero distance from everything score 0.
pub fn silhouette(points: &[Vec<f64>], assignments: &[usize], k: usize) -> Option<f64> {
    let mut sizes = alloc::vec![0usize; k];
    for &a in assignments {
        sizes[a] += 1;
    }
    if sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return None;
    }
    let mut total = 0.0;
    let mut sums = alloc::vec![0.0; k];
    for (i, p) in points.iter().enumerate() {
        sums.iter_mut().for_each(|s| *s = 0.0);
        for (j, q) in points.iter().enumerate() {
            if i != j {
                sums[assignments[j]] += libm::sqrt(sq_dist(p, q));
            }
        }
        let own = assignments[i];
        if sizes[own] == 1 {
            continue;
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Some(total / points.len() as f64)
}

/// Clusters for every k in range and keeps the highest silhouette. When no k
/// yields a defined silhouette the smallest k is returned.
pub fn select_k(points: &[Vec<f64>], config: &KMeansConfig) -> Result<ClusterResult> {
    if config.k_min == 0 || config.k_max < config.k_min {
        return Err(Error::InvalidParams("empty k range".into()));
    }
    if points.len() < config.k_min {
        return Err(Error::TooFewVectors { needed: config.k_min, got: points.len() });
    }
    let mut fallback: Option<ClusterResult> = None;
    let mut best: Option<ClusterResult> = None;
    for k in config.k_min..=config.k_max.min(points.len()) {
        let run = kmeans_best_of(points, k, &config.seeds, config.max_iter)?;
        match run.silhouette {
            Some(s) => {
                if best.as_ref().map_or(true, |b| s > b.silhouette.unwrap()) {
                    best = Some(run);
                }
            }
            None => {
                if fallback.is_none() {
                    fallback = Some(run);
                }
            }
        }
    }
    best.or(fallback).ok_or(Error::EmptyInput)
}
