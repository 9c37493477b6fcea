//! Synthetic graph generators. All output is canonical and seeded.

use rand::seq::index;
use rand::Rng;

use super::CsrGraph;
use crate::error::{Error, Result};
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GraphKind {
    /// Node 0 joined to every other node.
    Star,
    Path,
    Complete,
    /// G(n, p).
    ErdosRenyi { p: f64 },
    /// Barabási–Albert growth: a seed clique on `m + 1` nodes, then every new node
    /// attaches to `m` distinct existing nodes chosen proportionally to degree.
    PreferentialAttachment { m: usize },
}

pub fn generate_graph(kind: GraphKind, n: usize, seed: u64, self_loops: bool) -> Result<CsrGraph> {
    if n == 0 {
        return Err(Error::InvalidParam("graph needs at least one node".into()));
    }
    let edges = match kind {
        GraphKind::Star => (1..n as u32).map(|v| (0, v)).collect(),
        GraphKind::Path => (1..n as u32).map(|v| (v - 1, v)).collect(),
        GraphKind::Complete => complete_edges(n),
        GraphKind::ErdosRenyi { p } => erdos_renyi(n, p, seed)?,
        GraphKind::PreferentialAttachment { m } => preferential_attachment(n, m, seed)?,
    };
    CsrGraph::from_edges(n, &edges, self_loops)
}

fn complete_edges(n: usize) -> Vec<(u32, u32)> {
    let mut edges = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for u in 0..n as u32 {
        for v in u + 1..n as u32 {
            edges.push((u, v));
        }
    }
    edges
}

/// Geometric skipping over the upper-triangle pair sequence, so cost is linear in the output.
fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Vec<(u32, u32)>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParam(format!(
            "edge probability {p} outside [0, 1]"
        )));
    }
    if p == 0.0 {
        return Ok(Vec::new());
    }
    if p == 1.0 {
        return Ok(complete_edges(n));
    }
    let mut rng = stream_rng(seed, 0xE5);
    let log_q = (1.0 - p).ln();
    let mut edges = Vec::new();
    let (mut v, mut w) = (1i64, -1i64);
    let n = n as i64;
    while v < n {
        let r: f64 = rng.random();
        w += 1 + ((1.0 - r).ln() / log_q).floor() as i64;
        while w >= v && v < n {
            w -= v;
            v += 1;
        }
        if v < n {
            edges.push((w as u32, v as u32));
        }
    }
    Ok(edges)
}

fn preferential_attachment(n: usize, m: usize, seed: u64) -> Result<Vec<(u32, u32)>> {
    if m == 0 {
        return Err(Error::InvalidParam("preferential attachment needs m >= 1".into()));
    }
    let core = (m + 1).min(n);
    let mut edges = complete_edges(core);
    // every endpoint occurrence, so a uniform pick is degree-proportional
    let mut endpoints: Vec<u32> = edges.iter().flat_map(|&(u, v)| [u, v]).collect();
    let mut rng = stream_rng(seed, 0xBA);
    let mut targets: Vec<u32> = Vec::with_capacity(m);
    for new in core..n {
        targets.clear();
        while targets.len() < m {
            let t = endpoints[rng.random_range(0..endpoints.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for &t in &targets {
            edges.push((t, new as u32));
            endpoints.push(t);
            endpoints.push(new as u32);
        }
    }
    Ok(edges)
}

/// Uniform random subset of `k` nodes, sorted. Helper for picking training seeds.
pub fn sample_nodes(n: usize, k: usize, seed: u64) -> Vec<u32> {
    let mut rng = stream_rng(seed, 0x5EED);
    let mut ids: Vec<u32> = index::sample(&mut rng, n, k.min(n))
        .into_iter()
        .map(|i| i as u32)
        .collect();
    ids.sort_unstable();
    ids
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_degrees() {
        let g = generate_graph(GraphKind::Star, 5, 0, false).unwrap();
        assert_eq!(g.degrees(), vec![4, 1, 1, 1, 1]);
    }

    #[test]
    fn path_edges() {
        let g = generate_graph(GraphKind::Path, 3, 0, false).unwrap();
        assert_eq!(g.edges(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn complete_with_loops() {
        let g = generate_graph(GraphKind::Complete, 4, 0, true).unwrap();
        assert_eq!(g.num_edges(), 6);
        assert!((0..4).all(|i| g.row_len(i) == 4));
    }

    #[test]
    fn single_node() {
        let g = generate_graph(GraphKind::PreferentialAttachment { m: 3 }, 1, 1, true).unwrap();
        assert_eq!(g.num_edges(), 0);
        assert_eq!(g.neighbors(0), &[0]);
        assert!(generate_graph(GraphKind::Path, 0, 0, false).is_err());
    }

    #[test]
    fn preferential_attachment_is_deterministic() {
        let kind = GraphKind::PreferentialAttachment { m: 4 };
        let a = generate_graph(kind, 1000, 7, false).unwrap();
        let b = generate_graph(kind, 1000, 7, false).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.num_edges(), 10 + 4 * (1000 - 5));
        assert!(a.degrees().iter().all(|&d| d >= 4));
        let c = generate_graph(kind, 1000, 8, false).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn erdos_renyi_density_and_errors() {
        let g = generate_graph(GraphKind::ErdosRenyi { p: 0.05 }, 400, 3, false).unwrap();
        let pairs = 400.0 * 399.0 / 2.0;
        let expected = 0.05 * pairs;
        let sd = (pairs * 0.05 * 0.95f64).sqrt();
        assert!((g.num_edges() as f64 - expected).abs() < 5.0 * sd);
        g.validate().unwrap();
        assert!(generate_graph(GraphKind::ErdosRenyi { p: 1.5 }, 4, 0, false).is_err());
        assert!(generate_graph(GraphKind::ErdosRenyi { p: -0.1 }, 4, 0, false).is_err());
        let full = generate_graph(GraphKind::ErdosRenyi { p: 1.0 }, 5, 0, false).unwrap();
        assert_eq!(full.num_edges(), 10);
    }
}
