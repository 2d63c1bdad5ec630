use petgraph::unionfind::UnionFind;

use super::PersistenceVector;
use crate::connectome::Connectome;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

/// Undirected weighted graph as an edge list over vertices `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
}

impl WeightedGraph {
    pub fn new(n: usize, edges: Vec<Edge>) -> Result<Self> {
        for e in &edges {
            if e.u >= n || e.v >= n {
                return Err(Error::arg(format!("edge ({}, {}) outside {n} vertices", e.u, e.v)));
            }
            if e.u == e.v {
                return Err(Error::arg(format!("self-loop at {}", e.u)));
            }
            if !e.weight.is_finite() {
                return Err(Error::data(format!("non-finite weight on ({}, {})", e.u, e.v)));
            }
        }
        let edges = edges
            .into_iter()
            .map(|e| if e.u < e.v { e } else { Edge { u: e.v, v: e.u, weight: e.weight } })
            .collect();
        Ok(Self { n, edges })
    }

    /// The complete graph on all `P(P-1)/2` pairs of a connectome, zero weights included.
    pub fn complete(m: &Connectome) -> Self {
        let p = m.size();
        let mut edges = Vec::with_capacity(p * (p - 1) / 2);
        for u in 0..p {
            for v in (u + 1)..p {
                edges.push(Edge { u, v, weight: m.weight(u, v) });
            }
        }
        Self { n: p, edges }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }
}

/// Tree edges and the remaining (cycle-closing) edges of a maximum spanning tree.
#[derive(Debug, Clone, PartialEq)]
pub struct PghDecomposition {
    pub tree: Vec<Edge>,
    pub non_tree: Vec<Edge>,
}

/// Kruskal on descending weight; ties are broken by the lexicographic `(u, v)` index.
pub fn pgh_decomposition(g: &WeightedGraph) -> Result<PghDecomposition> {
    let mut order: Vec<usize> = (0..g.edges.len()).collect();
    order.sort_by(|&a, &b| {
        let (ea, eb) = (&g.edges[a], &g.edges[b]);
        eb.weight.total_cmp(&ea.weight).then((ea.u, ea.v).cmp(&(eb.u, eb.v)))
    });

    let mut uf = UnionFind::<usize>::new(g.n);
    let mut tree = Vec::with_capacity(g.n.saturating_sub(1));
    let mut non_tree = Vec::new();
    for k in order {
        let e = g.edges[k];
        if uf.union(e.u, e.v) {
            tree.push(e);
        } else {
            non_tree.push(e);
        }
    }

    if g.n > 0 && tree.len() + 1 < g.n {
        let labels = uf.into_labeling();
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for (vertex, root) in labels.into_iter().enumerate() {
            groups.entry(root).or_default().push(vertex);
        }
        let mut components: Vec<Vec<usize>> = groups.into_values().collect();
        components.sort();
        return Err(Error::Disconnected { components });
    }
    Ok(PghDecomposition { tree, non_tree })
}

pub fn maximum_spanning_tree(g: &WeightedGraph) -> Result<Vec<Edge>> {
    pgh_decomposition(g).map(|d| d.tree)
}

/// Sorted weights of the edges outside the maximum spanning tree of the complete graph.
pub fn pgh_persistence_vector(m: &Connectome) -> PersistenceVector {
    let d = pgh_decomposition(&WeightedGraph::complete(m)).expect("complete graphs are connected");
    PersistenceVector::new(d.non_tree.iter().map(|e| e.weight).collect()).expect("weights are finite")
}
