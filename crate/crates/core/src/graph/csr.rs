//! Undirected graphs in canonical compressed-sparse-row form, and the CSRG1 file format.
//!
//! CSRG1 layout (little-endian): magic `"CSRG1\0\0\0"`, version `u32 = 1`, flags `u32`
//! (bit 0 = self-loops), `n u64`, `nnz u64`, `row_offsets` as `u64 x (n + 1)`,
//! `col_indices` as `u32 x nnz`.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::format::{checked_len, ByteReader, CSRG_MAGIC, FORMAT_VERSION};

const FLAG_SELF_LOOPS: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsrGraph {
    n: usize,
    row_offsets: Vec<u64>,
    col_indices: Vec<u32>,
    has_self_loops: bool,
}

impl CsrGraph {
    /// Builds the canonical graph from an undirected edge list. Duplicates and both
    /// orientations collapse to one edge; self-loops in the list are dropped and then
    /// re-added on every node when `self_loops` is set.
    pub fn from_edges(n: usize, edges: &[(u32, u32)], self_loops: bool) -> Result<Self> {
        if n > u32::MAX as usize {
            return Err(Error::InvalidGraph(format!("{n} nodes exceed u32 ids")));
        }
        let mut degree = vec![0u64; n];
        for &(u, v) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u}, {v}) out of range for {n} nodes"
                )));
            }
            if u != v {
                degree[u as usize] += 1;
                degree[v as usize] += 1;
            }
        }
        let mut adj: Vec<Vec<u32>> = degree
            .iter()
            .map(|&d| Vec::with_capacity(d as usize + self_loops as usize))
            .collect();
        for &(u, v) in edges {
            if u != v {
                adj[u as usize].push(v);
                adj[v as usize].push(u);
            }
        }
        if self_loops {
            for (i, row) in adj.iter_mut().enumerate() {
                row.push(i as u32);
            }
        }
        Ok(Self::from_adjacency(adj, self_loops))
    }

    fn from_adjacency(mut adj: Vec<Vec<u32>>, has_self_loops: bool) -> Self {
        let n = adj.len();
        let mut row_offsets = Vec::with_capacity(n + 1);
        row_offsets.push(0u64);
        let mut col_indices = Vec::new();
        for row in adj.iter_mut() {
            row.sort_unstable();
            row.dedup();
            col_indices.extend_from_slice(row);
            row_offsets.push(col_indices.len() as u64);
        }
        Self {
            n,
            row_offsets,
            col_indices,
            has_self_loops,
        }
    }

    /// Validates raw CSR arrays against every canonical-form invariant.
    pub fn from_raw(
        n: usize,
        row_offsets: Vec<u64>,
        col_indices: Vec<u32>,
        has_self_loops: bool,
    ) -> Result<Self> {
        let g = Self {
            n,
            row_offsets,
            col_indices,
            has_self_loops,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidGraph(m));
        if self.row_offsets.len() != self.n + 1 {
            return bad(format!(
                "{} row offsets for {} nodes",
                self.row_offsets.len(),
                self.n
            ));
        }
        if self.row_offsets[0] != 0 || self.row_offsets[self.n] != self.col_indices.len() as u64 {
            return bad("row offsets do not span the column array".into());
        }
        if self.row_offsets.windows(2).any(|w| w[0] > w[1]) {
            return bad("row offsets decrease".into());
        }
        for i in 0..self.n {
            let row = self.neighbors(i);
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return bad(format!("row {i} is not strictly increasing"));
            }
            if row.last().is_some_and(|&v| v as usize >= self.n) {
                return bad(format!("row {i} has a neighbor out of range"));
            }
            let has_loop = row.binary_search(&(i as u32)).is_ok();
            if has_loop != self.has_self_loops {
                return bad(format!("row {i} self-loop disagrees with flag"));
            }
            for &v in row {
                if v as usize != i && !self.has_edge(v as usize, i) {
                    return bad(format!("edge ({i}, {v}) has no reverse"));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_self_loops(&self) -> bool {
        self.has_self_loops
    }

    pub fn row_offsets(&self) -> &[u64] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[u32] {
        &self.col_indices
    }

    /// Stored entries, counting each undirected edge twice and each self-loop once.
    pub fn nnz(&self) -> usize {
        self.col_indices.len()
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.col_indices[self.row_offsets[i] as usize..self.row_offsets[i + 1] as usize]
    }

    /// Row length of `i`, self-loop included when present.
    pub fn row_len(&self, i: usize) -> usize {
        (self.row_offsets[i + 1] - self.row_offsets[i]) as usize
    }

    /// Number of distinct other nodes adjacent to `i`.
    pub fn degree(&self, i: usize) -> usize {
        self.row_len(i) - self.has_self_loops as usize
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n).map(|i| self.degree(i)).collect()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }

    /// Number of undirected non-self-loop edges.
    pub fn num_edges(&self) -> usize {
        (self.nnz() - if self.has_self_loops { self.n } else { 0 }) / 2
    }

    /// Undirected edges as `(u, v)` with `u < v`, in row-major order.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::with_capacity(self.num_edges());
        for u in 0..self.n {
            out.extend(
                self.neighbors(u)
                    .iter()
                    .filter(|&&v| v as usize > u)
                    .map(|&v| (u as u32, v)),
            );
        }
        out
    }

    pub fn with_self_loops(&self) -> Self {
        if self.has_self_loops {
            return self.clone();
        }
        Self::from_edges(self.n, &self.edges(), true).expect("edges of a valid graph")
    }

    pub fn without_self_loops(&self) -> Self {
        if !self.has_self_loops {
            return self.clone();
        }
        Self::from_edges(self.n, &self.edges(), false).expect("edges of a valid graph")
    }

    pub fn to_csrg_bytes(&self) -> Vec<u8> {
        let mut out =
            Vec::with_capacity(32 + 8 * self.row_offsets.len() + 4 * self.col_indices.len());
        out.extend_from_slice(&CSRG_MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        let flags = if self.has_self_loops { FLAG_SELF_LOOPS } else { 0 };
        out.extend_from_slice(&flags.to_le_bytes());
        out.extend_from_slice(&(self.n as u64).to_le_bytes());
        out.extend_from_slice(&(self.nnz() as u64).to_le_bytes());
        for o in &self.row_offsets {
            out.extend_from_slice(&o.to_le_bytes());
        }
        for c in &self.col_indices {
            out.extend_from_slice(&c.to_le_bytes());
        }
        out
    }

    pub fn from_csrg_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new("CSRG1", buf);
        r.magic(&CSRG_MAGIC)?;
        r.version()?;
        let flags = r.u32()?;
        if flags & !FLAG_SELF_LOOPS != 0 {
            return Err(r.corrupt(format!("unknown flags {flags:#x}")));
        }
        let n = r.u64()?;
        let nnz = r.u64()?;
        let offsets_len = checked_len("CSRG1", &[n.saturating_add(1), 8])?;
        let cols_len = checked_len("CSRG1", &[nnz, 4])?;
        let payload = r.payload(offsets_len.checked_add(cols_len).ok_or_else(|| {
            Error::CorruptHeader {
                format: "CSRG1",
                reason: "dimensions overflow".into(),
            }
        })?)?;
        let (offs, cols) = payload.split_at(offsets_len as usize);
        let row_offsets = offs
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let col_indices = cols
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::from_raw(
            n as usize,
            row_offsets,
            col_indices,
            flags & FLAG_SELF_LOOPS != 0,
        )
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_csrg_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csrg_bytes(&fs::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle_plus_tail() -> CsrGraph {
        CsrGraph::from_edges(4, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 2), (1, 1)], false).unwrap()
    }

    #[test]
    fn canonical_form() {
        let g = triangle_plus_tail();
        assert_eq!(g.row_offsets(), &[0, 2, 4, 7, 8]);
        assert_eq!(g.col_indices(), &[1, 2, 0, 2, 0, 1, 3, 2]);
        assert_eq!(g.num_edges(), 4);
        assert_eq!(g.edges(), vec![(0, 1), (0, 2), (1, 2), (2, 3)]);
        assert_eq!(g.degrees(), vec![2, 2, 3, 1]);
        g.validate().unwrap();
    }

    #[test]
    fn self_loop_toggle() {
        let g = triangle_plus_tail().with_self_loops();
        assert!(g.has_self_loops());
        assert_eq!(g.nnz(), 12);
        assert_eq!(g.num_edges(), 4);
        assert_eq!(g.degree(3), 1);
        assert_eq!(g.row_len(3), 2);
        assert_eq!(g.without_self_loops(), triangle_plus_tail());
    }

    #[test]
    fn csrg_round_trip_and_validation() {
        let g = triangle_plus_tail().with_self_loops();
        let bytes = g.to_csrg_bytes();
        assert_eq!(bytes.len(), 32 + 8 * 5 + 4 * 12);
        assert_eq!(CsrGraph::from_csrg_bytes(&bytes).unwrap(), g);

        let mut asym = bytes.clone();
        // drop the self-loop flag: rows still contain i
        asym[12] = 0;
        assert!(matches!(CsrGraph::from_csrg_bytes(&asym), Err(Error::InvalidGraph(_))));
        assert!(matches!(
            CsrGraph::from_csrg_bytes(&bytes[..bytes.len() - 1]),
            Err(Error::SizeMismatch { .. })
        ));
    }

    #[test]
    fn rejects_asymmetric_raw() {
        let err = CsrGraph::from_raw(2, vec![0, 1, 1], vec![1], false).unwrap_err();
        assert!(err.to_string().contains("reverse"));
        assert!(CsrGraph::from_edges(2, &[(0, 2)], false).is_err());
    }
}
