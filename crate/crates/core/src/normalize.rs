use std::collections::{BTreeMap, HashMap};

use num_rational::BigRational;
use num_traits::One;

use crate::error::Result;
use crate::graph::WeightedGraph;
use crate::prob::Prob;
use crate::unionfind::UnionFind;

/// Result of normalization: the reduced graph plus the map from original
/// vertices to the contraction class representative they ended up in.
pub struct Normalized {
    pub graph: WeightedGraph,
    classes: BTreeMap<String, String>,
}

impl Normalized {
    /// Representative vertex that `v` was merged into.
    pub fn class_of(&self, v: &str) -> Result<&str> {
        self.classes
            .get(v)
            .map(|s| s.as_str())
            .ok_or_else(|| crate::error::Error::UnknownVertex(v.to_string()))
    }
}

/// Merges two probabilities as parallel channels: the result is open when
/// either is, so complements multiply.
fn parallel_merge(a: &Prob, b: &Prob) -> Prob {
    let open = BigRational::one()
        - (BigRational::one() - a.as_ratio()) * (BigRational::one() - b.as_ratio());
    Prob::new(open).expect("parallel merge stays in [0,1]")
}

/// Rewrites a graph into a connectivity-equivalent form: weight-0 edges are
/// dropped, weight-1 edges are contracted (the smallest-index vertex of each
/// merged class keeps its name), and any parallel edges or vertex weights
/// brought together by a contraction are merged by complement product.
pub fn normalize(g: &WeightedGraph) -> Normalized {
    let n = g.vertex_count();
    let mut uf = UnionFind::new(n);
    for e in g.edges() {
        if e.weight.is_one() {
            uf.union(e.u as u32, e.v as u32);
        }
    }

    let mut rep_names = Vec::new();
    for i in 0..n {
        if uf.find(i as u32) == i as u32 {
            rep_names.push(g.vertex_name(i).to_string());
        }
    }
    let mut graph = WeightedGraph::new(rep_names).expect("distinct representative names");

    let mut classes = BTreeMap::new();
    for i in 0..n {
        let rep = uf.find(i as u32) as usize;
        classes.insert(
            g.vertex_name(i).to_string(),
            g.vertex_name(rep).to_string(),
        );
    }

    for i in 0..n {
        let rep = uf.find(i as u32) as usize;
        let rep_name = g.vertex_name(rep);
        let merged = parallel_merge(
            graph.vertex_weight(rep_name).expect("rep exists"),
            g.vertex_weight_at(i),
        );
        graph
            .set_vertex_weight(rep_name, merged)
            .expect("rep exists");
    }

    let mut slot: HashMap<(u32, u32), usize> = HashMap::new();
    let mut merged_edges: Vec<((u32, u32), Prob)> = Vec::new();
    for e in g.edges() {
        if e.weight.is_zero() || e.weight.is_one() {
            continue;
        }
        let ru = uf.find(e.u as u32);
        let rv = uf.find(e.v as u32);
        if ru == rv {
            continue;
        }
        let key = (ru.min(rv), ru.max(rv));
        match slot.get(&key) {
            Some(&i) => {
                let combined = parallel_merge(&merged_edges[i].1, &e.weight);
                merged_edges[i].1 = combined;
            }
            None => {
                slot.insert(key, merged_edges.len());
                merged_edges.push((key, e.weight.clone()));
            }
        }
    }
    for ((ru, rv), p) in merged_edges {
        graph
            .add_edge(
                g.vertex_name(ru as usize),
                g.vertex_name(rv as usize),
                p,
            )
            .expect("merged edges are loop-free and unique");
    }

    Normalized { graph, classes }
}
