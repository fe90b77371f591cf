use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::Prob;

/// An undirected simple graph with a probability weight on every edge and on
/// every vertex. Vertex weights default to 0 and are read as the weight of
/// that vertex's vertical edge once the graph is doubled into a bunkbed.
#[derive(Clone, PartialEq, Eq)]
pub struct WeightedGraph {
    names: Vec<String>,
    index: HashMap<String, usize>,
    edges: Vec<Edge>,
    edge_index: HashMap<(usize, usize), usize>,
    vertex_weights: Vec<Prob>,
}

#[derive(Clone, PartialEq, Eq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: Prob,
}

impl WeightedGraph {
    /// Creates a graph with the given vertices and no edges. Names must be
    /// distinct and nonempty.
    pub fn new<I, S>(vertices: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut names = Vec::new();
        let mut index = HashMap::new();
        for name in vertices {
            let name = name.into();
            if name.is_empty() {
                return Err(Error::GraphJson("empty vertex name".to_string()));
            }
            if index.insert(name.clone(), names.len()).is_some() {
                return Err(Error::DuplicateVertex(name));
            }
            names.push(name);
        }
        let n = names.len();
        Ok(WeightedGraph {
            names,
            index,
            edges: Vec::new(),
            edge_index: HashMap::new(),
            vertex_weights: vec![Prob::zero(); n],
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_names(&self) -> &[String] {
        &self.names
    }

    pub fn vertex_name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn vertex_index(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownVertex(name.to_string()))
    }

    pub fn has_vertex(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Adds an edge between two existing vertices. Loops and duplicates are
    /// rejected.
    pub fn add_edge(&mut self, u: &str, v: &str, weight: Prob) -> Result<()> {
        let ui = self.vertex_index(u)?;
        let vi = self.vertex_index(v)?;
        if ui == vi {
            return Err(Error::LoopEdge(u.to_string()));
        }
        let key = (ui.min(vi), ui.max(vi));
        if self.edge_index.contains_key(&key) {
            return Err(Error::DuplicateEdge {
                u: u.to_string(),
                v: v.to_string(),
            });
        }
        self.edge_index.insert(key, self.edges.len());
        self.edges.push(Edge {
            u: key.0,
            v: key.1,
            weight,
        });
        Ok(())
    }

    /// Replaces the weight of an existing edge.
    pub fn set_edge_weight(&mut self, u: &str, v: &str, weight: Prob) -> Result<()> {
        let ui = self.vertex_index(u)?;
        let vi = self.vertex_index(v)?;
        let key = (ui.min(vi), ui.max(vi));
        match self.edge_index.get(&key) {
            Some(&e) => {
                self.edges[e].weight = weight;
                Ok(())
            }
            None => Err(Error::UnknownEdge {
                u: u.to_string(),
                v: v.to_string(),
            }),
        }
    }

    pub fn set_vertex_weight(&mut self, v: &str, weight: Prob) -> Result<()> {
        let vi = self.vertex_index(v)?;
        self.vertex_weights[vi] = weight;
        Ok(())
    }

    pub fn vertex_weight(&self, v: &str) -> Result<&Prob> {
        Ok(&self.vertex_weights[self.vertex_index(v)?])
    }

    pub fn vertex_weight_at(&self, i: usize) -> &Prob {
        &self.vertex_weights[i]
    }

    pub fn has_edge(&self, u: &str, v: &str) -> Result<bool> {
        let ui = self.vertex_index(u)?;
        let vi = self.vertex_index(v)?;
        Ok(self.edge_index.contains_key(&(ui.min(vi), ui.max(vi))))
    }

    /// Weight of the pair `{u,v}`: the edge weight if the edge exists, and 0
    /// otherwise. Absent edges and weight-0 edges are indistinguishable to
    /// every probabilistic question, which is what makes this the right
    /// primitive for symmetry and hypothesis checks.
    pub fn pair_weight(&self, u: usize, v: usize) -> Prob {
        let key = (u.min(v), u.max(v));
        match self.edge_index.get(&key) {
            Some(&e) => self.edges[e].weight.clone(),
            None => Prob::zero(),
        }
    }

    pub fn pair_weight_by_name(&self, u: &str, v: &str) -> Result<Prob> {
        Ok(self.pair_weight(self.vertex_index(u)?, self.vertex_index(v)?))
    }

    pub fn edge_weight_index(&self, u: usize, v: usize) -> Option<usize> {
        self.edge_index.get(&(u.min(v), u.max(v))).copied()
    }

    /// Parses the JSON interchange format:
    ///
    /// ```json
    /// {
    ///   "vertices": ["a", "b"],
    ///   "edges": [{"u": "a", "v": "b", "p": "1/2"}],
    ///   "vertex_weights": {"a": "0", "b": "1/3"}
    /// }
    /// ```
    ///
    /// Every vertex must carry exactly one weight entry; probabilities are
    /// fraction or decimal strings and must lie in [0,1].
    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: GraphFile =
            serde_json::from_str(s).map_err(|e| Error::GraphJson(e.to_string()))?;
        file.into_graph()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&GraphFile::from_graph(self)).expect("graph serializes")
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(GraphFile::from_graph(self)).expect("graph serializes")
    }
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    vertices: Vec<String>,
    edges: Vec<EdgeFile>,
    vertex_weights: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct EdgeFile {
    u: String,
    v: String,
    p: String,
}

impl GraphFile {
    fn into_graph(self) -> Result<WeightedGraph> {
        let mut g = WeightedGraph::new(self.vertices)?;
        for e in &self.edges {
            let p: Prob = e.p.parse()?;
            g.add_edge(&e.u, &e.v, p)?;
        }
        for name in self.vertex_weights.keys() {
            if !g.has_vertex(name) {
                return Err(Error::StrayVertexWeight(name.clone()));
            }
        }
        for name in g.names.clone() {
            let raw = self
                .vertex_weights
                .get(&name)
                .ok_or_else(|| Error::MissingVertexWeight(name.clone()))?;
            g.set_vertex_weight(&name, raw.parse()?)?;
        }
        Ok(g)
    }

    fn from_graph(g: &WeightedGraph) -> Self {
        GraphFile {
            vertices: g.names.clone(),
            edges: g
                .edges
                .iter()
                .map(|e| EdgeFile {
                    u: g.names[e.u].clone(),
                    v: g.names[e.v].clone(),
                    p: e.weight.to_string(),
                })
                .collect(),
            vertex_weights: g
                .names
                .iter()
                .zip(&g.vertex_weights)
                .map(|(n, w)| (n.clone(), w.to_string()))
                .collect(),
        }
    }
}

/// The doubled graph: two copies of the base, vertex `x` becoming `x+` and
/// `x-`, with each base edge duplicated in both layers and each base vertex
/// weight becoming the weight of the vertical edge `x+`/`x-`.
///
/// Vertical edges with weight 0 are still recorded as edges so that the
/// doubled graph's structure does not depend on the weights.
#[derive(Clone, PartialEq, Eq)]
pub struct BunkbedGraph {
    base: WeightedGraph,
    graph: WeightedGraph,
}

pub fn plus_name(v: &str) -> String {
    format!("{v}+")
}

pub fn minus_name(v: &str) -> String {
    format!("{v}-")
}

pub fn build_bunkbed(base: &WeightedGraph) -> BunkbedGraph {
    let n = base.vertex_count();
    let mut names = Vec::with_capacity(2 * n);
    for v in base.vertex_names() {
        names.push(plus_name(v));
    }
    for v in base.vertex_names() {
        names.push(minus_name(v));
    }
    let mut graph = WeightedGraph::new(names).expect("doubled names are distinct");
    for e in base.edges() {
        let (u, v, p) = (base.vertex_name(e.u), base.vertex_name(e.v), &e.weight);
        graph
            .add_edge(&plus_name(u), &plus_name(v), p.clone())
            .expect("fresh edge");
        graph
            .add_edge(&minus_name(u), &minus_name(v), p.clone())
            .expect("fresh edge");
    }
    for (i, v) in base.vertex_names().iter().enumerate() {
        graph
            .add_edge(&plus_name(v), &minus_name(v), base.vertex_weight_at(i).clone())
            .expect("fresh edge");
    }
    BunkbedGraph {
        base: base.clone(),
        graph,
    }
}

impl BunkbedGraph {
    pub fn base(&self) -> &WeightedGraph {
        &self.base
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    /// Mutable access to the doubled graph, for experiments that break the
    /// mirror symmetry on purpose. `reflection_is_automorphism` reports
    /// whether the symmetry still holds afterwards.
    pub fn graph_mut(&mut self) -> &mut WeightedGraph {
        &mut self.graph
    }

    /// Index of `v+` in the doubled graph, given the base index of `v`.
    pub fn plus_index(&self, base_index: usize) -> usize {
        base_index
    }

    /// Index of `v-` in the doubled graph, given the base index of `v`.
    pub fn minus_index(&self, base_index: usize) -> usize {
        self.base.vertex_count() + base_index
    }

    /// The four marked vertices `[v-, v+, w-, w+]` for a base pair.
    pub fn marked_quadruple(&self, v: &str, w: &str) -> Result<[String; 4]> {
        if v == w {
            return Err(Error::IdenticalPair(v.to_string()));
        }
        self.base.vertex_index(v)?;
        self.base.vertex_index(w)?;
        Ok([minus_name(v), plus_name(v), minus_name(w), plus_name(w)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> WeightedGraph {
        let mut g = WeightedGraph::new(["a", "b", "c"]).unwrap();
        g.add_edge("a", "b", Prob::ratio(1, 2)).unwrap();
        g.add_edge("b", "c", Prob::ratio(1, 3)).unwrap();
        g.add_edge("a", "c", Prob::ratio(1, 4)).unwrap();
        g.set_vertex_weight("b", Prob::one()).unwrap();
        g
    }

    #[test]
    fn builder_validates() {
        assert!(WeightedGraph::new(["a", "a"]).is_err());
        let mut g = WeightedGraph::new(["a", "b"]).unwrap();
        assert!(g.add_edge("a", "a", Prob::zero()).is_err());
        assert!(g.add_edge("a", "x", Prob::zero()).is_err());
        g.add_edge("a", "b", Prob::ratio(1, 2)).unwrap();
        assert!(g.add_edge("b", "a", Prob::ratio(1, 3)).is_err());
    }

    #[test]
    fn pair_weight_reads_zero_for_absent_edges() {
        let g = triangle();
        assert_eq!(g.pair_weight_by_name("a", "b").unwrap(), Prob::ratio(1, 2));
        let mut h = WeightedGraph::new(["x", "y"]).unwrap();
        h.set_vertex_weight("x", Prob::ratio(1, 5)).unwrap();
        assert_eq!(h.pair_weight_by_name("x", "y").unwrap(), Prob::zero());
        assert!(h.pair_weight_by_name("x", "z").is_err());
    }

    #[test]
    fn json_round_trip() {
        let g = triangle();
        let s = g.to_json_string();
        let back = WeightedGraph::from_json_str(&s).unwrap();
        assert!(back == g);
    }

    #[test]
    fn json_contract_is_enforced() {
        let missing_weight = r#"{
            "vertices": ["a", "b"],
            "edges": [],
            "vertex_weights": {"a": "0"}
        }"#;
        assert!(matches!(
            WeightedGraph::from_json_str(missing_weight),
            Err(Error::MissingVertexWeight(_))
        ));

        let stray_weight = r#"{
            "vertices": ["a"],
            "edges": [],
            "vertex_weights": {"a": "0", "b": "1"}
        }"#;
        assert!(matches!(
            WeightedGraph::from_json_str(stray_weight),
            Err(Error::StrayVertexWeight(_))
        ));

        let out_of_range = r#"{
            "vertices": ["a", "b"],
            "edges": [{"u": "a", "v": "b", "p": "3/2"}],
            "vertex_weights": {"a": "0", "b": "0"}
        }"#;
        assert!(WeightedGraph::from_json_str(out_of_range).is_err());

        let example = r#"{
            "vertices": ["a", "b"],
            "edges": [{"u": "a", "v": "b", "p": "0.5"}],
            "vertex_weights": {"a": "1/3", "b": "0"}
        }"#;
        let g = WeightedGraph::from_json_str(example).unwrap();
        assert_eq!(g.pair_weight_by_name("a", "b").unwrap(), Prob::ratio(1, 2));
        assert_eq!(*g.vertex_weight("a").unwrap(), Prob::ratio(1, 3));
    }

    #[test]
    fn bunkbed_doubles_everything() {
        let g = triangle();
        let b = build_bunkbed(&g);
        let d = b.graph();
        assert_eq!(d.vertex_count(), 6);
        assert_eq!(d.edge_count(), 2 * 3 + 3);
        assert_eq!(d.pair_weight_by_name("a+", "b+").unwrap(), Prob::ratio(1, 2));
        assert_eq!(d.pair_weight_by_name("a-", "b-").unwrap(), Prob::ratio(1, 2));
        assert_eq!(d.pair_weight_by_name("b+", "b-").unwrap(), Prob::one());
        assert_eq!(d.pair_weight_by_name("a+", "a-").unwrap(), Prob::zero());
        assert!(d.has_edge("a+", "a-").unwrap());
        assert!(!d.has_edge("a+", "b-").unwrap());
        assert_eq!(
            b.marked_quadruple("a", "c").unwrap(),
            ["a-".to_string(), "a+".into(), "c-".into(), "c+".into()]
        );
        assert!(b.marked_quadruple("a", "a").is_err());
    }
}
