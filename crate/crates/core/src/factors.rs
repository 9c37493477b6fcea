//! Aggregation factors: how much `l` rounds of mean aggregation (self-loops included) shrink
//! node features (`C^f`) and independent per-node errors (`C^e`), and the ratio
//! `Ĉ_l = mean(C^e_l) / mean(C^f_l)` that bounds the tolerable quantization error.
//!
//! Two estimators are provided. [`factors_exact`] propagates the error covariance exactly:
//! with identity covariance at layer 0, `C^e_{i,l}` is the L2 norm of row `i` of `P^l`, where
//! `P = D̂⁻¹Â`. [`factors_mc`] pushes iid standard-normal draws through the same operator and
//! takes the per-node RMS.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::graph::CsrGraph;
use crate::rng::stream_rng;
use crate::scalar::Scalar;

/// Largest graph the exact estimator accepts by default.
pub const DEFAULT_EXACT_CAP: usize = 5000;

const MC_CHUNK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Exact,
    MonteCarlo,
}

/// Where the feature factor came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureModel {
    /// Propagated from the supplied feature matrix (rows scaled to unit norm).
    Empirical,
    /// No features given: the iid model, identical to the error factor.
    Iid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorReport {
    pub n: usize,
    pub layers: usize,
    /// `c_f[l][i]` for `l` in `0..=layers`.
    pub c_f: Vec<Vec<f64>>,
    pub c_e: Vec<Vec<f64>>,
    pub mean_c_f: Vec<f64>,
    pub mean_c_e: Vec<f64>,
    pub c_hat: Vec<f64>,
    pub estimator: Estimator,
    pub feature_model: FeatureModel,
    pub num_samples: Option<usize>,
}

impl FactorReport {
    fn assemble(
        c_f: Vec<Vec<f64>>,
        c_e: Vec<Vec<f64>>,
        estimator: Estimator,
        feature_model: FeatureModel,
        num_samples: Option<usize>,
    ) -> Self {
        let mean = |v: &Vec<f64>| v.iter().sum::<f64>() / v.len().max(1) as f64;
        let mean_c_f: Vec<f64> = c_f.iter().map(mean).collect();
        let mean_c_e: Vec<f64> = c_e.iter().map(mean).collect();
        let c_hat = mean_c_e.iter().zip(&mean_c_f).map(|(e, f)| e / f).collect();
        Self {
            n: c_e.first().map_or(0, Vec::len),
            layers: c_e.len() - 1,
            c_f,
            c_e,
            mean_c_f,
            mean_c_e,
            c_hat,
            estimator,
            feature_model,
            num_samples,
        }
    }

    /// `Ĉ_L` at the deepest layer.
    pub fn c_hat_final(&self) -> f64 {
        self.c_hat[self.layers]
    }

    /// The report.json document; `per_node` adds the full `c_f`/`c_e` arrays.
    pub fn to_json(&self, per_node: bool) -> serde_json::Value {
        let mut doc = json!({
            "n": self.n,
            "L": self.layers,
            "estimator": self.estimator,
            "feature_model": self.feature_model,
            "num_samples": self.num_samples,
            "mean_c_f": self.mean_c_f,
            "mean_c_e": self.mean_c_e,
            "c_hat": self.c_hat,
        });
        if per_node {
            doc["per_node"] = json!({ "c_f": self.c_f, "c_e": self.c_e });
        }
        doc
    }
}

fn check_graph(g: &CsrGraph) -> Result<()> {
    if !g.has_self_loops() {
        return Err(Error::MissingSelfLoops);
    }
    Ok(())
}

/// One mean-aggregation step over a row-major `n x width` block: `dst_i = mean_{j in N(i)} src_j`.
pub fn mean_aggregate(g: &CsrGraph, src: &[f64], dst: &mut [f64], width: usize) {
    debug_assert_eq!(src.len(), g.n() * width);
    dst.par_chunks_mut(width)
        .enumerate()
        .for_each(|(i, out)| {
            let nbrs = g.neighbors(i);
            out.fill(0.0);
            for &j in nbrs {
                let row = &src[j as usize * width..(j as usize + 1) * width];
                for (o, v) in out.iter_mut().zip(row) {
                    *o += v;
                }
            }
            let inv = 1.0 / nbrs.len().max(1) as f64;
            for o in out.iter_mut() {
                *o *= inv;
            }
        });
}

fn row_norms(block: &[f64], width: usize) -> Vec<f64> {
    block
        .chunks(width)
        .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect()
}

/// `C^f` from real features: rows scaled to unit norm, then aggregated layer by layer.
fn feature_factors<T: Scalar>(
    g: &CsrGraph,
    f: &FeatureMatrix<T>,
    layers: usize,
) -> Result<Vec<Vec<f64>>> {
    if f.n() != g.n() {
        return Err(Error::Shape(format!(
            "features have {} rows, graph has {} nodes",
            f.n(),
            g.n()
        )));
    }
    let d = f.d();
    let mut cur: Vec<f64> = Vec::with_capacity(f.n() * d);
    for i in 0..f.n() {
        let row: Vec<f64> = f.row(i).iter().map(|v| v.to_f64_lossy()).collect();
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        let scale = if norm > 0.0 { 1.0 / norm } else { 0.0 };
        cur.extend(row.iter().map(|v| v * scale));
    }
    let mut next = vec![0.0; cur.len()];
    let mut out = vec![row_norms(&cur, d)];
    for _ in 0..layers {
        mean_aggregate(g, &cur, &mut next, d);
        std::mem::swap(&mut cur, &mut next);
        out.push(row_norms(&cur, d));
    }
    Ok(out)
}

/// Norms of `e_i^T P^l` for `l = 0..=layers`, by scattering a row vector through the graph.
fn error_row_norms(g: &CsrGraph, i: usize, layers: usize, cur: &mut Vec<f64>, next: &mut Vec<f64>) -> Vec<f64> {
    let n = g.n();
    cur.clear();
    cur.resize(n, 0.0);
    next.clear();
    next.resize(n, 0.0);
    let mut active: Vec<u32> = vec![i as u32];
    let mut mark = vec![false; n];
    let mut sparse = true;
    cur[i] = 1.0;
    let mut norms = Vec::with_capacity(layers + 1);
    norms.push(1.0);
    for _ in 0..layers {
        if sparse {
            let mut grown = Vec::with_capacity(active.len() * 4);
            for &u in &active {
                let nbrs = g.neighbors(u as usize);
                let w = cur[u as usize] / nbrs.len() as f64;
                for &v in nbrs {
                    next[v as usize] += w;
                    if !mark[v as usize] {
                        mark[v as usize] = true;
                        grown.push(v);
                    }
                }
            }
            let mut sq = 0.0;
            for &u in &active {
                cur[u as usize] = 0.0;
            }
            grown.sort_unstable();
            for &v in &grown {
                mark[v as usize] = false;
                sq += next[v as usize] * next[v as usize];
            }
            norms.push(sq.sqrt());
            active = grown;
            sparse = active.len() * 8 < n;
        } else {
            next.fill(0.0);
            for u in 0..n {
                let x = cur[u];
                if x == 0.0 {
                    continue;
                }
                let nbrs = g.neighbors(u);
                let w = x / nbrs.len() as f64;
                for &v in nbrs {
                    next[v as usize] += w;
                }
            }
            norms.push(next.iter().map(|v| v * v).sum::<f64>().sqrt());
        }
        std::mem::swap(cur, next);
    }
    norms
}

fn transpose_layers(per_node: Vec<Vec<f64>>, layers: usize) -> Vec<Vec<f64>> {
    (0..=layers)
        .map(|l| per_node.iter().map(|v| v[l]).collect())
        .collect()
}

pub fn factors_exact<T: Scalar>(
    g: &CsrGraph,
    f: Option<&FeatureMatrix<T>>,
    layers: usize,
) -> Result<FactorReport> {
    factors_exact_capped(g, f, layers, DEFAULT_EXACT_CAP)
}

pub fn factors_exact_capped<T: Scalar>(
    g: &CsrGraph,
    f: Option<&FeatureMatrix<T>>,
    layers: usize,
    cap: usize,
) -> Result<FactorReport> {
    check_graph(g)?;
    if g.n() > cap {
        return Err(Error::TooLarge { n: g.n(), cap });
    }
    let per_node: Vec<Vec<f64>> = (0..g.n())
        .into_par_iter()
        .map_init(
            || (Vec::new(), Vec::new()),
            |(cur, next), i| error_row_norms(g, i, layers, cur, next),
        )
        .collect();
    let c_e = transpose_layers(per_node, layers);
    let (c_f, model) = match f {
        Some(f) => (feature_factors(g, f, layers)?, FeatureModel::Empirical),
        None => (c_e.clone(), FeatureModel::Iid),
    };
    Ok(FactorReport::assemble(c_f, c_e, Estimator::Exact, model, None))
}

/// Sum over one chunk of samples of the squared propagated values, indexed `[l][i]`.
fn mc_chunk(g: &CsrGraph, layers: usize, seed: u64, first: usize, count: usize) -> Vec<Vec<f64>> {
    let n = g.n();
    let mut cur = vec![0.0; n * count];
    for s in 0..count {
        let mut rng = stream_rng(seed, (first + s) as u64);
        for i in 0..n {
            cur[i * count + s] = StandardNormal.sample(&mut rng);
        }
    }
    let mut next = vec![0.0; n * count];
    let sumsq = |block: &[f64]| -> Vec<f64> {
        block.chunks(count).map(|r| r.iter().map(|v| v * v).sum()).collect()
    };
    let mut out = vec![sumsq(&cur)];
    for _ in 0..layers {
        mean_aggregate(g, &cur, &mut next, count);
        std::mem::swap(&mut cur, &mut next);
        out.push(sumsq(&cur));
    }
    out
}

/// Monte Carlo estimate. Sample `s` draws its `n` normals from its own stream derived from
/// `(seed, s)`, and chunk sums are reduced in a fixed order, so the result does not depend
/// on the thread count.
pub fn factors_mc<T: Scalar>(
    g: &CsrGraph,
    f: Option<&FeatureMatrix<T>>,
    layers: usize,
    num_samples: usize,
    seed: u64,
) -> Result<FactorReport> {
    check_graph(g)?;
    if num_samples < 2 {
        return Err(Error::InvalidParam("Monte Carlo needs at least 2 samples".into()));
    }
    let n = g.n();
    let chunks: Vec<(usize, usize)> = (0..num_samples)
        .step_by(MC_CHUNK)
        .map(|s| (s, MC_CHUNK.min(num_samples - s)))
        .collect();
    let partials: Vec<Vec<Vec<f64>>> = chunks
        .par_iter()
        .map(|&(first, count)| mc_chunk(g, layers, seed, first, count))
        .collect();
    let mut totals = vec![vec![0.0; n]; layers + 1];
    for part in &partials {
        for (t, p) in totals.iter_mut().zip(part) {
            for (a, b) in t.iter_mut().zip(p) {
                *a += b;
            }
        }
    }
    let c_e: Vec<Vec<f64>> = totals
        .into_iter()
        .map(|l| l.into_iter().map(|s| (s / num_samples as f64).sqrt()).collect())
        .collect();
    let (c_f, model) = match f {
        Some(f) => (feature_factors(g, f, layers)?, FeatureModel::Empirical),
        None => (c_e.clone(), FeatureModel::Iid),
    };
    Ok(FactorReport::assemble(
        c_f,
        c_e,
        Estimator::MonteCarlo,
        model,
        Some(num_samples),
    ))
}

/// Heuristic compression guidance from `Ĉ_L`, treating `δ ≈ 2^(-b/CR)` as an equality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrSuggestion {
    /// Tolerable per-node error norm, `epsilon / Ĉ_L`.
    pub delta_budget: f64,
    /// Largest CR with `2^(-b/CR) <= delta_budget`, capped at `b` (one bit per element).
    pub max_cr: f64,
    /// Scalar-quantizer width achieving that CR, `ceil(b / max_cr)`.
    pub sq_bits: u32,
    /// `b / sq_bits`, the CR the scalar quantizer actually delivers.
    pub sq_cr: f64,
    /// True when `sq_bits` exceeds the 8-bit scalar codec.
    pub exceeds_sq_range: bool,
}

pub fn suggest_cr(c_hat: f64, epsilon: f64, b: u32) -> Result<CrSuggestion> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParam(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(c_hat > 0.0) || !c_hat.is_finite() {
        return Err(Error::InvalidParam(format!("Ĉ_L must be positive, got {c_hat}")));
    }
    let delta_budget = epsilon / c_hat;
    let bits_needed = if delta_budget >= 1.0 {
        0.0
    } else {
        -delta_budget.log2()
    };
    let max_cr = if bits_needed == 0.0 {
        b as f64
    } else {
        (b as f64 / bits_needed).min(b as f64)
    };
    let sq_bits = ((b as f64 / max_cr).ceil() as u32).max(1);
    Ok(CrSuggestion {
        delta_budget,
        max_cr,
        sq_bits,
        sq_cr: b as f64 / sq_bits as f64,
        exceeds_sq_range: sq_bits > 8,
    })
}

impl FactorReport {
    pub fn suggest_cr(&self, epsilon: f64, b: u32) -> Result<CrSuggestion> {
        suggest_cr(self.c_hat_final(), epsilon, b)
    }
}
