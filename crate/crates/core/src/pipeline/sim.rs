//! Per-stage time and byte accounting for one training epoch under a bandwidth cost model.
//!
//! Every batch pays: sampling (`sample_cost_per_edge` per sampled edge), loading (bytes of every
//! frontier row missing from the static cache over `pcie_bytes_per_sec`), dequantization
//! (`dequant_cost_per_elem` per element of every frontier row, zero for raw features) and a
//! constant compute charge. Counts are accumulated as integers and converted to seconds once,
//! so equal workloads produce exactly proportional totals.

use serde::{Deserialize, Serialize};

use super::sampler::MiniBatch;
use crate::error::{Error, Result};
use crate::graph::CsrGraph;
use crate::scalar::Scalar;
use crate::sq::SqCodec;
use crate::vq::VqCodec;

/// What one stored feature row costs to move and to decode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "codec", rename_all = "snake_case")]
pub enum CodecCost {
    Full { rows: usize, d: usize, elem_bits: u32 },
    Sq { rows: usize, d: usize, k: u32 },
    Vq { rows: usize, d: usize, num_parts: usize, stored_code_bits: u32 },
}

impl CodecCost {
    pub fn full(rows: usize, d: usize, elem_bits: u32) -> Self {
        Self::Full { rows, d, elem_bits }
    }

    pub fn rows(&self) -> usize {
        match *self {
            Self::Full { rows, .. } | Self::Sq { rows, .. } | Self::Vq { rows, .. } => rows,
        }
    }

    pub fn d(&self) -> usize {
        match *self {
            Self::Full { d, .. } | Self::Sq { d, .. } | Self::Vq { d, .. } => d,
        }
    }

    /// `d * b / 8` raw, `ceil(d * k / 8)` for SQ, `num_parts * code bits / 8` for VQ.
    pub fn bytes_per_row(&self) -> f64 {
        match *self {
            Self::Full { d, elem_bits, .. } => (d as u64 * elem_bits as u64) as f64 / 8.0,
            Self::Sq { d, k, .. } => (d as u64 * k as u64).div_ceil(8) as f64,
            Self::Vq {
                num_parts,
                stored_code_bits,
                ..
            } => (num_parts as u64 * stored_code_bits as u64) as f64 / 8.0,
        }
    }

    pub fn dequant_elems_per_row(&self) -> usize {
        match *self {
            Self::Full { .. } => 0,
            Self::Sq { d, .. } | Self::Vq { d, .. } => d,
        }
    }
}

impl From<&SqCodec> for CodecCost {
    fn from(c: &SqCodec) -> Self {
        Self::Sq {
            rows: c.n(),
            d: c.d(),
            k: c.params.k,
        }
    }
}

impl<T: Scalar> From<&VqCodec<T>> for CodecCost {
    fn from(c: &VqCodec<T>) -> Self {
        Self::Vq {
            rows: c.n(),
            d: c.d(),
            num_parts: c.num_parts(),
            stored_code_bits: c.stored_code_bits(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CachePolicy {
    /// Highest-degree rows, fixed before the epoch (ties to the lower id).
    StaticDegree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheConfig {
    pub budget_bytes: u64,
    pub policy: CachePolicy,
}

impl CacheConfig {
    pub fn none() -> Self {
        Self::with_budget(0)
    }

    pub fn with_budget(budget_bytes: u64) -> Self {
        Self {
            budget_bytes,
            policy: CachePolicy::StaticDegree,
        }
    }

    /// Rows that fit: `floor(budget / bytes_per_row)`.
    pub fn capacity_rows(&self, bytes_per_row: f64) -> usize {
        if bytes_per_row <= 0.0 {
            return usize::MAX;
        }
        (self.budget_bytes as f64 / bytes_per_row).floor() as usize
    }
}

/// Which rows a static cache holds.
pub fn static_cache(g: &CsrGraph, capacity_rows: usize) -> Vec<bool> {
    let mut order: Vec<usize> = (0..g.n()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(g.degree(i)), i));
    let mut cached = vec![false; g.n()];
    for &i in order.iter().take(capacity_rows) {
        cached[i] = true;
    }
    cached
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostModel {
    pub pcie_bytes_per_sec: f64,
    pub sample_cost_per_edge: f64,
    pub dequant_cost_per_elem: f64,
    pub compute_cost_per_batch: f64,
}

impl Default for CostModel {
    /// Roughly a PCIe 3.0 x16 host link (12 GB/s effective), 0.2 ns per sampled edge and
    /// 5 ps per dequantized element. Compute is zero until [`CostModel::calibrated`] sets it.
    fn default() -> Self {
        Self {
            pcie_bytes_per_sec: 12e9,
            sample_cost_per_edge: 2e-10,
            dequant_cost_per_elem: 5e-12,
            compute_cost_per_batch: 0.0,
        }
    }
}

/// Share of the raw-feature baseline epoch spent loading in the default calibration.
pub const DEFAULT_LOAD_FRACTION: f64 = 0.85;

impl CostModel {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.pcie_bytes_per_sec,
            self.sample_cost_per_edge,
            self.dequant_cost_per_elem,
            self.compute_cost_per_batch,
        ];
        if fields.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || self.pcie_bytes_per_sec <= 0.0 {
            return Err(Error::InvalidParam(format!(
                "cost model needs non-negative finite costs and positive bandwidth: {self:?}"
            )));
        }
        Ok(())
    }

    /// Sets `compute_cost_per_batch` so that loading makes up `load_fraction` of the epoch
    /// for `baseline` on this workload. Fails when sampling and dequantization alone already
    /// push the load share below the target.
    pub fn calibrated(
        &self,
        g: &CsrGraph,
        batches: &[MiniBatch],
        baseline: &CodecCost,
        cache: &CacheConfig,
        load_fraction: f64,
    ) -> Result<Self> {
        if !(load_fraction > 0.0 && load_fraction <= 1.0) {
            return Err(Error::InvalidParam(format!(
                "load fraction {load_fraction} outside (0, 1]"
            )));
        }
        let probe = CostModel {
            compute_cost_per_batch: 0.0,
            ..*self
        };
        let r = simulate_epoch(g, batches, baseline, cache, &probe)?;
        let compute_total = r.load_s / load_fraction - r.epoch_s;
        if compute_total < 0.0 {
            return Err(Error::InvalidParam(format!(
                "loading is only {:.3} of the epoch before compute; cannot reach {load_fraction}",
                r.load_fraction()
            )));
        }
        Ok(CostModel {
            compute_cost_per_batch: compute_total / batches.len().max(1) as f64,
            ..*self
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub sample_s: f64,
    pub load_s: f64,
    pub dequant_s: f64,
    pub compute_s: f64,
    pub bytes_transferred: f64,
    pub cache_hit_rate: f64,
    pub epoch_s: f64,
    pub speedup_vs_baseline: f64,
}

impl SimReport {
    pub fn load_fraction(&self) -> f64 {
        self.load_s / self.epoch_s
    }
}

/// Identifies the sampled workload so reports from different runs can be matched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Workload {
    pub batches: usize,
    pub frontier_rows: u64,
    pub edges_sampled: u64,
}

impl Workload {
    pub fn of(batches: &[MiniBatch]) -> Self {
        Self {
            batches: batches.len(),
            frontier_rows: batches.iter().map(|b| b.nodes.len() as u64).sum(),
            edges_sampled: batches.iter().map(|b| b.edges_sampled).sum(),
        }
    }
}

fn check_dims(g: &CsrGraph, codec: &CodecCost) -> Result<()> {
    if codec.rows() != g.n() {
        return Err(Error::Shape(format!(
            "codec holds {} rows, graph has {} nodes",
            codec.rows(),
            g.n()
        )));
    }
    Ok(())
}

fn simulate_with_cache(
    batches: &[&MiniBatch],
    cached: &[bool],
    codec: &CodecCost,
    cost: &CostModel,
    bandwidth: f64,
) -> SimReport {
    let mut rows = 0u64;
    let mut misses = 0u64;
    let mut edges = 0u64;
    for b in batches {
        rows += b.nodes.len() as u64;
        misses += b.nodes.iter().filter(|&&v| !cached[v as usize]).count() as u64;
        edges += b.edges_sampled;
    }
    let bytes = misses as f64 * codec.bytes_per_row();
    let sample_s = edges as f64 * cost.sample_cost_per_edge;
    let load_s = bytes / bandwidth;
    let dequant_s = (rows * codec.dequant_elems_per_row() as u64) as f64 * cost.dequant_cost_per_elem;
    let compute_s = batches.len() as f64 * cost.compute_cost_per_batch;
    SimReport {
        sample_s,
        load_s,
        dequant_s,
        compute_s,
        bytes_transferred: bytes,
        cache_hit_rate: if rows == 0 {
            0.0
        } else {
            (rows - misses) as f64 / rows as f64
        },
        epoch_s: sample_s + load_s + dequant_s + compute_s,
        speedup_vs_baseline: 1.0,
    }
}

/// Simulates one epoch over `batches`. `speedup_vs_baseline` is 1 until [`super::report`] fills it.
pub fn simulate_epoch(
    g: &CsrGraph,
    batches: &[MiniBatch],
    codec: &CodecCost,
    cache: &CacheConfig,
    cost: &CostModel,
) -> Result<SimReport> {
    cost.validate()?;
    check_dims(g, codec)?;
    let cached = static_cache(g, cache.capacity_rows(codec.bytes_per_row()));
    let refs: Vec<&MiniBatch> = batches.iter().collect();
    Ok(simulate_with_cache(&refs, &cached, codec, cost, cost.pcie_bytes_per_sec))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiWorkerReport {
    pub workers: usize,
    /// Slowest worker's time.
    pub epoch_s: f64,
    pub per_worker: Vec<SimReport>,
}

/// `workers` trainers share the host link (each gets `1/workers` of the bandwidth), take batches
/// round-robin and each keep their own static cache of `cache.budget_bytes`.
pub fn simulate_workers(
    g: &CsrGraph,
    batches: &[MiniBatch],
    codec: &CodecCost,
    cache: &CacheConfig,
    cost: &CostModel,
    workers: usize,
) -> Result<MultiWorkerReport> {
    cost.validate()?;
    check_dims(g, codec)?;
    if workers == 0 {
        return Err(Error::InvalidParam("need at least one worker".into()));
    }
    let cached = static_cache(g, cache.capacity_rows(codec.bytes_per_row()));
    let bandwidth = cost.pcie_bytes_per_sec / workers as f64;
    let per_worker: Vec<SimReport> = (0..workers)
        .map(|w| {
            let mine: Vec<&MiniBatch> = batches.iter().skip(w).step_by(workers).collect();
            simulate_with_cache(&mine, &cached, codec, cost, bandwidth)
        })
        .collect();
    let epoch_s = per_worker.iter().map(|r| r.epoch_s).fold(0.0, f64::max);
    Ok(MultiWorkerReport {
        workers,
        epoch_s,
        per_worker,
    })
}
