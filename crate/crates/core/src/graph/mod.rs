//! Graph storage, synthetic generators and sparsifiers.

mod csr;
mod generate;
mod sparsify;

pub use csr::CsrGraph;
pub use generate::{generate_graph, sample_nodes, GraphKind};
pub use sparsify::{
    edge_score, gini, parse_fraction, sparsify, KeepFraction, SparsifyMethod, SparsifyVariant,
};
