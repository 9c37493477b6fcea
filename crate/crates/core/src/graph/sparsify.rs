//! Edge-deletion sparsifiers for structure studies.
//!
//! Each method keeps exactly `ceil(keep_fraction * |E|)` undirected edges; self-loops are never
//! deleted. Edges are scored by `min(deg(u), deg(v))`, and ties are ordered by a seeded shuffle.
//!
//! * RANDOM keeps a uniform sample.
//! * CENTRALIZED scores on the input graph once and deletes the lowest scores first, so the
//!   surviving edges concentrate on hubs.
//! * UNIFORM deletes greedily: each step removes the live edge with the highest score under the
//!   *current* degrees. A static ranking would strip hub-to-hub edges and leave hub-to-leaf
//!   edges behind; re-scoring drives the degree sequence toward flat instead.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use rand::seq::SliceRandom;

use super::CsrGraph;
use crate::error::{Error, Result};
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SparsifyVariant {
    Random,
    Centralized,
    Uniform,
}

impl FromStr for SparsifyVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "random" => Ok(Self::Random),
            "centralized" => Ok(Self::Centralized),
            "uniform" => Ok(Self::Uniform),
            other => Err(Error::InvalidParam(format!("unknown sparsify method {other:?}"))),
        }
    }
}

impl fmt::Display for SparsifyVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Random => "random",
            Self::Centralized => "centralized",
            Self::Uniform => "uniform",
        })
    }
}

/// Exact fraction so `ceil(keep * |E|)` never suffers binary rounding (0.1 is 1/10 here).
pub type KeepFraction = Ratio<u64>;

/// Parses `"0.25"`, `"1"` or `"3/10"` into an exact fraction.
pub fn parse_fraction(s: &str) -> Result<KeepFraction> {
    let bad = || Error::InvalidParam(format!("cannot parse fraction {s:?}"));
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let num: u64 = num.trim().parse().map_err(|_| bad())?;
        let den: u64 = den.trim().parse().map_err(|_| bad())?;
        if den == 0 {
            return Err(bad());
        }
        return Ok(Ratio::new(num, den));
    }
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if frac.len() > 18 || (int.is_empty() && frac.is_empty()) {
        return Err(bad());
    }
    let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
    let den = 10u64.pow(frac.len() as u32);
    let frac: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
    let num = int
        .checked_mul(den)
        .and_then(|v| v.checked_add(frac))
        .ok_or_else(bad)?;
    Ok(Ratio::new(num, den))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SparsifyMethod {
    pub variant: SparsifyVariant,
    pub keep_fraction: KeepFraction,
}

impl SparsifyMethod {
    pub fn new(variant: SparsifyVariant, keep_fraction: KeepFraction) -> Result<Self> {
        let m = Self {
            variant,
            keep_fraction,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.keep_fraction;
        if *k.numer() == 0 || k > Ratio::from_integer(1) {
            return Err(Error::InvalidParam(format!(
                "keep_fraction {k} outside (0, 1]"
            )));
        }
        Ok(())
    }

    /// `ceil(keep_fraction * edges)`.
    pub fn target_edges(&self, edges: usize) -> usize {
        let (num, den) = (*self.keep_fraction.numer() as u128, *self.keep_fraction.denom() as u128);
        (num * edges as u128).div_ceil(den) as usize
    }
}

/// Edge priority used by CENTRALIZED and UNIFORM.
pub fn edge_score(degrees: &[usize], (u, v): (u32, u32)) -> usize {
    degrees[u as usize].min(degrees[v as usize])
}

pub fn sparsify(g: &CsrGraph, method: SparsifyMethod, seed: u64) -> Result<CsrGraph> {
    method.validate()?;
    let mut edges = g.edges();
    let target = method.target_edges(edges.len());
    if target == edges.len() {
        return Ok(g.clone());
    }
    let mut rng = stream_rng(seed, 0x5BA2);
    edges.shuffle(&mut rng);
    let degrees = g.degrees();
    match method.variant {
        SparsifyVariant::Random => {}
        // stable sorts keep the shuffled order within a score
        SparsifyVariant::Centralized => edges.sort_by_key(|&e| Reverse(edge_score(&degrees, e))),
        SparsifyVariant::Uniform => {
            let mut alive = vec![true; edges.len()];
            for k in uniform_deletions(&edges, &degrees, target) {
                alive[k] = false;
            }
            let kept: Vec<_> = edges.iter().zip(&alive).filter(|(_, &a)| a).map(|(&e, _)| e).collect();
            return CsrGraph::from_edges(g.n(), &kept, g.has_self_loops());
        }
    }
    edges.truncate(target);
    CsrGraph::from_edges(g.n(), &edges, g.has_self_loops())
}

/// Deletion order for UNIFORM as indices into `edges`. Each step takes the live edge with the
/// largest current score; earlier position in `edges` wins ties.
fn uniform_deletions(edges: &[(u32, u32)], degrees: &[usize], target: usize) -> Vec<usize> {
    let mut deg = degrees.to_vec();
    // scores only fall, so a stale heap entry is detected on pop and re-queued
    let mut heap: BinaryHeap<(usize, Reverse<usize>)> = edges
        .iter()
        .enumerate()
        .map(|(k, &e)| (edge_score(&deg, e), Reverse(k)))
        .collect();
    let mut order = Vec::with_capacity(edges.len().saturating_sub(target));
    while edges.len() - order.len() > target {
        let (score, Reverse(k)) = heap.pop().expect("heap holds every live edge");
        let (u, v) = edges[k];
        let current = edge_score(&deg, (u, v));
        if current != score {
            heap.push((current, Reverse(k)));
            continue;
        }
        order.push(k);
        deg[u as usize] -= 1;
        deg[v as usize] -= 1;
    }
    order
}

/// Gini coefficient of a degree sequence (0 = perfectly even).
pub fn gini(values: &[usize]) -> f64 {
    let n = values.len();
    let total: u64 = values.iter().map(|&v| v as u64).sum();
    if n == 0 || total == 0 {
        return 0.0;
    }
    let mut sorted: Vec<u64> = values.iter().map(|&v| v as u64).collect();
    sorted.sort_unstable();
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, &v)| (2.0 * (i as f64 + 1.0) - n as f64 - 1.0) * v as f64)
        .sum();
    weighted / (n as f64 * total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_graph, GraphKind};

    fn method(variant: SparsifyVariant, keep: &str) -> SparsifyMethod {
        SparsifyMethod::new(variant, parse_fraction(keep).unwrap()).unwrap()
    }

    #[test]
    fn fractions_parse_exactly() {
        assert_eq!(parse_fraction("0.1").unwrap(), Ratio::new(1, 10));
        assert_eq!(parse_fraction("1").unwrap(), Ratio::from_integer(1));
        assert_eq!(parse_fraction(".5").unwrap(), Ratio::new(1, 2));
        assert_eq!(parse_fraction("3/10").unwrap(), Ratio::new(3, 10));
        assert!(parse_fraction("abc").is_err());
        assert!(parse_fraction("1/0").is_err());
        // 0.1 * 16000 is 1600.0000000000002 in binary floating point
        assert_eq!(method(SparsifyVariant::Random, "0.1").target_edges(16000), 1600);
        assert_eq!(method(SparsifyVariant::Random, "0.5").target_edges(5), 3);
    }

    #[test]
    fn keep_fraction_range() {
        for bad in ["0", "1.01", "2"] {
            assert!(SparsifyMethod::new(SparsifyVariant::Uniform, parse_fraction(bad).unwrap()).is_err());
        }
    }

    #[test]
    fn keep_all_is_identity() {
        let g = generate_graph(GraphKind::PreferentialAttachment { m: 3 }, 60, 2, true).unwrap();
        for v in [SparsifyVariant::Random, SparsifyVariant::Centralized, SparsifyVariant::Uniform] {
            assert_eq!(sparsify(&g, method(v, "1"), 9).unwrap(), g);
        }
    }

    #[test]
    fn preserves_nodes_symmetry_and_loops() {
        let g = generate_graph(GraphKind::PreferentialAttachment { m: 4 }, 300, 5, true).unwrap();
        for v in [SparsifyVariant::Random, SparsifyVariant::Centralized, SparsifyVariant::Uniform] {
            for keep in ["0.1", "0.33", "0.9"] {
                let m = method(v, keep);
                let s = sparsify(&g, m, 1).unwrap();
                s.validate().unwrap();
                assert_eq!(s.n(), g.n());
                assert!(s.has_self_loops());
                assert_eq!(s.num_edges(), m.target_edges(g.num_edges()));
                assert!(s.edges().iter().all(|&(a, b)| g.has_edge(a as usize, b as usize)));
                assert_eq!(s, sparsify(&g, m, 1).unwrap());
            }
        }
    }

    #[test]
    fn centralized_keeps_top_scores() {
        let g = generate_graph(GraphKind::PreferentialAttachment { m: 3 }, 200, 11, false).unwrap();
        let deg = g.degrees();
        let s = sparsify(&g, method(SparsifyVariant::Centralized, "0.3"), 4).unwrap();
        let kept = s.edges().iter().map(|&e| edge_score(&deg, e)).min().unwrap();
        let dropped = g
            .edges()
            .into_iter()
            .filter(|&(a, b)| !s.has_edge(a as usize, b as usize))
            .map(|e| edge_score(&deg, e))
            .max()
            .unwrap();
        assert!(kept >= dropped);
    }

    /// Replays the deletion order against a quadratic rescan of every live edge.
    #[test]
    fn uniform_deletes_current_maximum() {
        let g = generate_graph(GraphKind::PreferentialAttachment { m: 3 }, 120, 2, false).unwrap();
        let edges = g.edges();
        let order = uniform_deletions(&edges, &g.degrees(), edges.len() / 5);
        assert_eq!(order.len(), edges.len() - edges.len() / 5);
        let mut deg = g.degrees();
        let mut alive = vec![true; edges.len()];
        for &k in &order {
            assert!(alive[k]);
            let best = (0..edges.len())
                .filter(|&t| alive[t])
                .map(|t| edge_score(&deg, edges[t]))
                .max()
                .unwrap();
            assert_eq!(edge_score(&deg, edges[k]), best);
            let first_best = (0..edges.len())
                .find(|&t| alive[t] && edge_score(&deg, edges[t]) == best)
                .unwrap();
            assert_eq!(k, first_best);
            alive[k] = false;
            deg[edges[k].0 as usize] -= 1;
            deg[edges[k].1 as usize] -= 1;
        }
    }

    /// All 2-edge subsets of a 4-leaf star are tied, so every seed must land on one of the six.
    #[test]
    fn uniform_star_half() {
        let g = generate_graph(GraphKind::Star, 5, 0, false).unwrap();
        let all = g.edges();
        let mut subsets = Vec::new();
        for a in 0..all.len() {
            for b in a + 1..all.len() {
                subsets.push(vec![all[a], all[b]]);
            }
        }
        let mut seen = std::collections::HashSet::new();
        for seed in 0..40 {
            let s = sparsify(&g, method(SparsifyVariant::Uniform, "0.5"), seed).unwrap();
            let kept = s.edges();
            assert!(subsets.contains(&kept));
            assert!(s.degrees().iter().max() <= g.degrees().iter().max());
            seen.insert(kept);
        }
        assert!(seen.len() > 1, "tie-break should depend on the seed");
    }

    #[test]
    fn gini_basics() {
        assert_eq!(gini(&[3, 3, 3]), 0.0);
        assert!((gini(&[0, 0, 0, 4]) - 0.75).abs() < 1e-12);
        assert_eq!(gini(&[0, 0]), 0.0);
    }
}
