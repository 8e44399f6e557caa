use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::graph::{Graph, TermId};

/// Size statistics emitted as `{"triples": n, "nodes": n, "avg_neighbors": x}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub triples: usize,
    pub nodes: usize,
    pub avg_neighbors: f64,
}

/// Mean number of distinct adjacent nodes, treating every triple as an
/// undirected edge between subject and object. Self-loops do not make a
/// node its own neighbour. Returns 0 for the empty graph.
pub fn avg_neighbors(g: &Graph) -> f64 {
    let mut adj: HashMap<TermId, BTreeSet<TermId>> = HashMap::new();
    for [s, _, o] in g.scan_ids(None, None, None) {
        adj.entry(s).or_default();
        adj.entry(o).or_default();
        if s != o {
            adj.entry(s).or_default().insert(o);
            adj.entry(o).or_default().insert(s);
        }
    }
    if adj.is_empty() {
        return 0.0;
    }
    let total: usize = adj.values().map(BTreeSet::len).sum();
    total as f64 / adj.len() as f64
}

pub fn stats(g: &Graph) -> GraphStats {
    GraphStats {
        triples: g.len(),
        nodes: g.nodes().len(),
        avg_neighbors: avg_neighbors(g),
    }
}
