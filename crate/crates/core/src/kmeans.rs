//! Lloyd's k-means with k-means++ seeding and restarts, Euclidean or spherical (cosine).
//!
//! Points are `f64` rows of a row-major buffer. Spherical mode normalizes every point, keeps
//! centroids on the unit sphere and minimizes `sum(1 - cos)`; zero points carry no direction,
//! are pinned to centroid 0 and contribute nothing to the objective or the centroid updates.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Euclidean,
    Cosine,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iters: usize,
    /// Stop once the relative objective drop falls to this value or below.
    pub tol: f64,
    pub metric: Metric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// `k x dim` row-major. When the data holds fewer than `k` distinct points the first
    /// `effective_k` rows are those points and the rest repeat the last one.
    pub centroids: Vec<f64>,
    pub effective_k: usize,
    pub assignments: Vec<u32>,
    pub objective: f64,
    /// Objective after each assignment step of the winning restart.
    pub history: Vec<f64>,
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> bool {
    let norm = dot(v, v).sqrt();
    if norm == 0.0 {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    true
}

/// Per-point cost of `point` against `centroid` under `metric` (points pre-normalized for cosine).
fn cost(metric: Metric, point: &[f64], centroid: &[f64]) -> f64 {
    match metric {
        Metric::Euclidean => sq_dist(point, centroid),
        Metric::Cosine => 1.0 - dot(point, centroid),
    }
}

/// Index of the best centroid for `point`, lowest index on ties.
pub fn nearest(metric: Metric, point: &[f64], centroids: &[f64], dim: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.chunks_exact(dim).enumerate() {
        let s = cost(metric, point, c);
        if s < best.1 {
            best = (j, s);
        }
    }
    best
}

/// Working set: normalized copies for cosine, plus the indices that take part in fitting.
struct Prepared {
    points: Vec<f64>,
    active: Vec<usize>,
}

fn prepare(points: &[f64], dim: usize, metric: Metric) -> Prepared {
    let n = points.len() / dim;
    match metric {
        Metric::Euclidean => Prepared {
            points: points.to_vec(),
            active: (0..n).collect(),
        },
        Metric::Cosine => {
            let mut pts = points.to_vec();
            let active = pts
                .chunks_exact_mut(dim)
                .enumerate()
                .filter_map(|(i, row)| normalize(row).then_some(i))
                .collect();
            Prepared { points: pts, active }
        }
    }
}

fn key(row: &[f64]) -> Vec<u64> {
    row.iter().map(|v| if *v == 0.0 { 0 } else { v.to_bits() }).collect()
}

/// Distinct active rows in first-occurrence order, stopping once `limit` are found.
fn distinct_rows(p: &Prepared, dim: usize, limit: usize) -> Vec<usize> {
    let mut seen: HashMap<Vec<u64>, ()> = HashMap::new();
    let mut out = Vec::new();
    for &i in &p.active {
        if seen.insert(key(&p.points[i * dim..(i + 1) * dim]), ()).is_none() {
            out.push(i);
            if out.len() >= limit {
                break;
            }
        }
    }
    out
}

fn assign(
    p: &Prepared,
    dim: usize,
    metric: Metric,
    centroids: &[f64],
    assignments: &mut [u32],
    costs: &mut [f64],
) -> f64 {
    let mut total = 0.0;
    for &i in &p.active {
        let (j, c) = nearest(metric, &p.points[i * dim..(i + 1) * dim], centroids, dim);
        assignments[i] = j as u32;
        // cosine costs can dip a hair below zero from rounding
        let c = c.max(0.0);
        costs[i] = c;
        total += c;
    }
    total
}

fn kmeans_pp(p: &Prepared, dim: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let first = p.active[rng.random_range(0..p.active.len())];
    let mut centroids = p.points[first * dim..(first + 1) * dim].to_vec();
    let mut d2: Vec<f64> = p
        .active
        .iter()
        .map(|&i| sq_dist(&p.points[i * dim..(i + 1) * dim], &centroids))
        .collect();
    while centroids.len() < k * dim {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = d2.len() - 1;
            for (t, w) in d2.iter().enumerate() {
                acc += w;
                if acc > target && *w > 0.0 {
                    pick = t;
                    break;
                }
            }
            // rounding can leave `pick` on a zero-weight tail; back up to a real candidate
            while d2[pick] == 0.0 {
                pick -= 1;
            }
            pick
        } else {
            rng.random_range(0..d2.len())
        };
        let i = p.active[pick];
        let c = p.points[i * dim..(i + 1) * dim].to_vec();
        for (t, &a) in p.active.iter().enumerate() {
            d2[t] = d2[t].min(sq_dist(&p.points[a * dim..(a + 1) * dim], &c));
        }
        centroids.extend_from_slice(&c);
    }
    centroids
}

fn update(
    p: &Prepared,
    dim: usize,
    metric: Metric,
    assignments: &[u32],
    costs: &mut [f64],
    centroids: &mut [f64],
) {
    let k = centroids.len() / dim;
    let mut sums = vec![0.0; k * dim];
    let mut counts = vec![0usize; k];
    for &i in &p.active {
        let j = assignments[i] as usize;
        counts[j] += 1;
        for (s, v) in sums[j * dim..(j + 1) * dim]
            .iter_mut()
            .zip(&p.points[i * dim..(i + 1) * dim])
        {
            *s += v;
        }
    }
    for j in 0..k {
        if counts[j] == 0 {
            continue;
        }
        let sum = &mut sums[j * dim..(j + 1) * dim];
        match metric {
            Metric::Euclidean => sum.iter_mut().for_each(|s| *s /= counts[j] as f64),
            Metric::Cosine => {
                if !normalize(sum) {
                    // members cancel out; keep the previous direction
                    continue;
                }
            }
        }
        centroids[j * dim..(j + 1) * dim].copy_from_slice(sum);
    }
    // empty clusters take over the point farthest from its centroid
    for j in 0..k {
        if counts[j] > 0 {
            continue;
        }
        let far = p
            .active
            .iter()
            .copied()
            .fold(None::<usize>, |best, i| match best {
                Some(b) if costs[b] >= costs[i] => Some(b),
                _ => Some(i),
            })
            .expect("active set is non-empty");
        centroids[j * dim..(j + 1) * dim].copy_from_slice(&p.points[far * dim..(far + 1) * dim]);
        costs[far] = f64::NEG_INFINITY;
    }
}

fn run_once(p: &Prepared, dim: usize, cfg: &KMeansConfig, rng: &mut ChaCha8Rng) -> Clustering {
    let n = p.points.len() / dim;
    let mut centroids = kmeans_pp(p, dim, cfg.k, rng);
    let mut assignments = vec![0u32; n];
    let mut costs = vec![0.0; n];
    let mut history: Vec<f64> = Vec::new();
    for iter in 0..cfg.max_iters.max(1) {
        let obj = assign(p, dim, cfg.metric, &centroids, &mut assignments, &mut costs);
        if let Some(&prev) = history.last() {
            debug_assert!(
                obj <= prev + 1e-9 * prev.abs().max(1e-300),
                "objective rose from {prev} to {obj}"
            );
        }
        let converged = history
            .last()
            .is_some_and(|&prev| prev - obj <= cfg.tol * prev);
        history.push(obj);
        if obj == 0.0 || converged || iter + 1 == cfg.max_iters.max(1) {
            break;
        }
        update(p, dim, cfg.metric, &assignments, &mut costs, &mut centroids);
    }
    Clustering {
        centroids,
        effective_k: cfg.k,
        assignments,
        objective: *history.last().unwrap(),
        history,
    }
}

/// Clusters `points` (row-major, `dim` columns). `rng_for_restart(r)` supplies restart `r`'s
/// random stream; the lowest-objective restart wins, earliest on ties.
pub fn fit(
    points: &[f64],
    dim: usize,
    cfg: &KMeansConfig,
    restarts: usize,
    mut rng_for_restart: impl FnMut(usize) -> ChaCha8Rng,
) -> Clustering {
    assert!(dim > 0 && cfg.k > 0 && points.len().is_multiple_of(dim));
    let n = points.len() / dim;
    let p = prepare(points, dim, cfg.metric);
    let distinct = distinct_rows(&p, dim, cfg.k + 1);
    if distinct.len() <= cfg.k {
        // every distinct point becomes its own centroid
        let mut centroids: Vec<f64> = Vec::with_capacity(cfg.k * dim);
        for &i in &distinct {
            centroids.extend_from_slice(&p.points[i * dim..(i + 1) * dim]);
        }
        let effective_k = distinct.len().max(1);
        if distinct.is_empty() {
            centroids.resize(dim, 0.0);
        }
        let last = centroids[(effective_k - 1) * dim..].to_vec();
        while centroids.len() < cfg.k * dim {
            centroids.extend_from_slice(&last);
        }
        let mut assignments = vec![0u32; n];
        let mut costs = vec![0.0; n];
        let obj = assign(&p, dim, cfg.metric, &centroids[..effective_k * dim], &mut assignments, &mut costs);
        return Clustering {
            centroids,
            effective_k,
            assignments,
            objective: obj,
            history: vec![obj],
        };
    }
    let mut best: Option<Clustering> = None;
    for r in 0..restarts.max(1) {
        let mut rng = rng_for_restart(r);
        let run = run_once(&p, dim, cfg, &mut rng);
        if best.as_ref().is_none_or(|b| run.objective < b.objective) {
            best = Some(run);
        }
    }
    best.expect("at least one restart")
}

/// Sum of per-point costs for fixed centroids, zero points excluded under cosine.
pub fn objective(points: &[f64], dim: usize, metric: Metric, centroids: &[f64]) -> f64 {
    let p = prepare(points, dim, metric);
    p.active
        .iter()
        .map(|&i| nearest(metric, &p.points[i * dim..(i + 1) * dim], centroids, dim).1.max(0.0))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::Rng;

    fn cfg(k: usize, metric: Metric) -> KMeansConfig {
        KMeansConfig {
            k,
            max_iters: 50,
            tol: 0.0,
            metric,
        }
    }

    #[test]
    fn separated_blobs() {
        let mut rng = stream_rng(1, 0);
        let mut pts = Vec::new();
        for c in [[0.0, 0.0], [10.0, 10.0], [-10.0, 10.0]] {
            for _ in 0..30 {
                pts.push(c[0] + rng.random::<f64>() - 0.5);
                pts.push(c[1] + rng.random::<f64>() - 0.5);
            }
        }
        let out = fit(&pts, 2, &cfg(3, Metric::Euclidean), 4, |r| stream_rng(3, r as u64));
        for blob in 0..3 {
            let a = &out.assignments[blob * 30..(blob + 1) * 30];
            assert!(a.iter().all(|&x| x == a[0]));
        }
        assert!(out.objective < 90.0 * 0.5);
        assert!(out.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn fewer_distinct_than_k() {
        let pts = [1.0, 2.0, 1.0, 2.0, 3.0, 4.0];
        let out = fit(&pts, 2, &cfg(4, Metric::Euclidean), 2, |r| stream_rng(0, r as u64));
        assert_eq!(out.effective_k, 2);
        assert_eq!(out.centroids, vec![1.0, 2.0, 3.0, 4.0, 3.0, 4.0, 3.0, 4.0]);
        assert_eq!(out.assignments, vec![0, 0, 1]);
        assert_eq!(out.objective, 0.0);
    }

    #[test]
    fn cosine_ignores_scale_and_zeros() {
        let pts = [1.0, 0.0, 5.0, 0.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.5];
        let out = fit(&pts, 2, &cfg(2, Metric::Cosine), 2, |r| stream_rng(0, r as u64));
        assert_eq!(out.effective_k, 2);
        assert_eq!(out.objective, 0.0);
        assert_eq!(out.assignments[0], out.assignments[1]);
        assert_eq!(out.assignments[2], 0);
        assert_eq!(out.assignments[3], out.assignments[4]);
        for c in out.centroids.chunks(2) {
            assert!((dot(c, c) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn spherical_objective_never_rises() {
        let mut rng = stream_rng(5, 0);
        let pts: Vec<f64> = (0..400).map(|_| rng.random::<f64>() - 0.3).collect();
        let out = fit(&pts, 4, &cfg(7, Metric::Cosine), 3, |r| stream_rng(6, r as u64));
        assert!(out.history.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        for c in out.centroids.chunks(4) {
            assert!((dot(c, c) - 1.0).abs() < 1e-9);
        }
    }
}
