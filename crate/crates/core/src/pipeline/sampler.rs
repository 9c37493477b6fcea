//! Layered fanout neighbor sampling.

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::CsrGraph;
use crate::rng::stream_rng;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Neighbor cap per layer, outermost hop last.
    pub fanouts: Vec<usize>,
    pub batch_size: usize,
    pub seed: u64,
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.fanouts.is_empty() || self.fanouts.contains(&0) {
            return Err(Error::InvalidParam(format!(
                "fanouts must be non-empty and positive, got {:?}",
                self.fanouts
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidParam("batch_size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiniBatch {
    pub seeds: Vec<u32>,
    /// Deduplicated, sorted union of the seeds and every sampled layer.
    pub nodes: Vec<u32>,
    /// Sampled (frontier node, neighbor) pairs over all layers.
    pub edges_sampled: u64,
}

/// Shuffles `train_ids` into batches, then for each layer samples up to `fanout` distinct
/// neighbors (self-loops excluded) of every node newly reached by the previous layer.
pub fn sample_batches(g: &CsrGraph, train_ids: &[u32], cfg: &SamplerConfig) -> Result<Vec<MiniBatch>> {
    cfg.validate()?;
    if train_ids.is_empty() {
        return Err(Error::InvalidParam("empty training set".into()));
    }
    if let Some(&bad) = train_ids.iter().find(|&&i| i as usize >= g.n()) {
        return Err(Error::RowOutOfRange {
            row: bad as usize,
            n: g.n(),
        });
    }
    let mut order = train_ids.to_vec();
    order.shuffle(&mut stream_rng(cfg.seed, 0));
    let mut seen = vec![false; g.n()];
    let mut batches = Vec::with_capacity(order.len().div_ceil(cfg.batch_size));
    for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
        let mut rng = stream_rng(cfg.seed, b as u64 + 1);
        let mut nodes: Vec<u32> = Vec::new();
        let mut frontier: Vec<u32> = Vec::new();
        for &s in chunk {
            if !seen[s as usize] {
                seen[s as usize] = true;
                nodes.push(s);
                frontier.push(s);
            }
        }
        let mut edges_sampled = 0u64;
        for &fanout in &cfg.fanouts {
            frontier.sort_unstable();
            let mut next = Vec::new();
            let mut reached = vec![];
            for &u in &frontier {
                let nbrs: Vec<u32> = g
                    .neighbors(u as usize)
                    .iter()
                    .copied()
                    .filter(|&v| v != u)
                    .collect();
                if nbrs.len() <= fanout {
                    reached.extend_from_slice(&nbrs);
                } else {
                    reached.extend(index::sample(&mut rng, nbrs.len(), fanout).into_iter().map(|k| nbrs[k]));
                }
            }
            edges_sampled += reached.len() as u64;
            for v in reached {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    nodes.push(v);
                }
                next.push(v);
            }
            next.sort_unstable();
            next.dedup();
            frontier = next;
        }
        for &v in &nodes {
            seen[v as usize] = false;
        }
        nodes.sort_unstable();
        batches.push(MiniBatch {
            seeds: chunk.to_vec(),
            nodes,
            edges_sampled,
        });
    }
    Ok(batches)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_graph, sample_nodes, GraphKind};

    fn cfg(fanouts: &[usize], batch_size: usize) -> SamplerConfig {
        SamplerConfig {
            fanouts: fanouts.to_vec(),
            batch_size,
            seed: 3,
        }
    }

    #[test]
    fn frontier_counting_bound() {
        let g = generate_graph(GraphKind::PreferentialAttachment { m: 8 }, 20000, 1, false).unwrap();
        let train = sample_nodes(g.n(), 1000, 2);
        let batches = sample_batches(&g, &train, &cfg(&[5, 10], 1000)).unwrap();
        assert_eq!(batches.len(), 1);
        assert!(batches[0].nodes.len() <= 1000 * (1 + 5 + 50));
        assert!(batches[0].edges_sampled <= 1000 * 5 + 5000 * 10);
    }

    #[test]
    fn saturates_on_complete_graph() {
        let g = generate_graph(GraphKind::Complete, 12, 0, true).unwrap();
        let batches = sample_batches(&g, &[4], &cfg(&[20], 1)).unwrap();
        assert_eq!(batches[0].nodes, (0..12).collect::<Vec<u32>>());
        assert_eq!(batches[0].edges_sampled, 11);
    }

    #[test]
    fn deterministic_and_partitioned() {
        let g = generate_graph(GraphKind::ErdosRenyi { p: 0.05 }, 300, 1, false).unwrap();
        let train: Vec<u32> = (0..100).collect();
        let a = sample_batches(&g, &train, &cfg(&[3, 4], 32)).unwrap();
        let b = sample_batches(&g, &train, &cfg(&[3, 4], 32)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
        let mut seeds: Vec<u32> = a.iter().flat_map(|m| m.seeds.clone()).collect();
        seeds.sort_unstable();
        assert_eq!(seeds, train);
        for m in &a {
            assert!(m.seeds.iter().all(|s| m.nodes.binary_search(s).is_ok()));
            assert!(m.nodes.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn errors() {
        let g = generate_graph(GraphKind::Path, 5, 0, false).unwrap();
        assert!(sample_batches(&g, &[], &cfg(&[2], 2)).is_err());
        assert!(sample_batches(&g, &[9], &cfg(&[2], 2)).is_err());
        assert!(sample_batches(&g, &[1], &cfg(&[], 2)).is_err());
        assert!(sample_batches(&g, &[1], &cfg(&[0], 2)).is_err());
        assert!(sample_batches(&g, &[1], &cfg(&[1], 0)).is_err());
    }
}
