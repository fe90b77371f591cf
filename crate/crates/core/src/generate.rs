use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::prob::Prob;

/// A graph family plus its size parameters, parsed from spec strings like
/// `complete:4`, `complete_bipartite:2,3`, `complete_kpartite:3,2`,
/// `complete_minus_clique:5,2,pprime=1/3`, `cycle:5`, `hypercube:3`,
/// `petersen`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClassKind {
    Complete {
        n: usize,
    },
    CompleteBipartite {
        n1: usize,
        n2: usize,
    },
    CompleteKpartite {
        k: usize,
        m: usize,
    },
    /// K_n with the edges inside a distinguished s-set removed. The removed
    /// edges are kept in the edge list with weight 0; the edges inside the
    /// complement get `p_prime` (the horizontal weight when `None`), and the
    /// crossing edges get the horizontal weight.
    CompleteMinusClique {
        n: usize,
        s: usize,
        p_prime: Option<Prob>,
    },
    Cycle {
        n: usize,
    },
    Hypercube {
        d: usize,
    },
    Petersen,
}

impl ClassKind {
    pub fn parse(spec: &str) -> Result<Self> {
        let err = |reason: &str| Error::ClassSpec {
            spec: spec.to_string(),
            reason: reason.to_string(),
        };
        let (name, args) = match spec.split_once(':') {
            Some((name, args)) => (name, Some(args)),
            None => (spec, None),
        };
        let sizes = |args: Option<&str>, want: usize| -> Result<Vec<usize>> {
            let args = args.ok_or_else(|| err("missing size parameters"))?;
            let parts: Vec<&str> = args.split(',').collect();
            if parts.len() != want {
                return Err(err(&format!("expected {want} size parameters")));
            }
            parts
                .iter()
                .map(|p| {
                    p.trim()
                        .parse::<usize>()
                        .map_err(|_| err(&format!("size parameter {p:?} is not a number")))
                        .and_then(|n| {
                            if n == 0 {
                                Err(err("size parameters must be at least 1"))
                            } else {
                                Ok(n)
                            }
                        })
                })
                .collect()
        };
        match name {
            "complete" => {
                let s = sizes(args, 1)?;
                Ok(ClassKind::Complete { n: s[0] })
            }
            "complete_bipartite" => {
                let s = sizes(args, 2)?;
                Ok(ClassKind::CompleteBipartite { n1: s[0], n2: s[1] })
            }
            "complete_kpartite" => {
                let s = sizes(args, 2)?;
                Ok(ClassKind::CompleteKpartite { k: s[0], m: s[1] })
            }
            "complete_minus_clique" => {
                let args = args.ok_or_else(|| err("missing size parameters"))?;
                let parts: Vec<&str> = args.split(',').collect();
                if parts.len() != 2 && parts.len() != 3 {
                    return Err(err("expected n,s with an optional pprime=RAT"));
                }
                let nums = sizes(Some(&parts[..2].join(",")), 2)?;
                let (n, s) = (nums[0], nums[1]);
                if s > n {
                    return Err(err("clique size exceeds vertex count"));
                }
                let p_prime = match parts.get(2) {
                    None => None,
                    Some(part) => {
                        let value = part
                            .trim()
                            .strip_prefix("pprime=")
                            .ok_or_else(|| err("third parameter must be pprime=RAT"))?;
                        Some(value.parse::<Prob>()?)
                    }
                };
                Ok(ClassKind::CompleteMinusClique { n, s, p_prime })
            }
            "cycle" => {
                let s = sizes(args, 1)?;
                if s[0] < 3 {
                    return Err(err("a cycle needs at least 3 vertices"));
                }
                Ok(ClassKind::Cycle { n: s[0] })
            }
            "hypercube" => {
                let s = sizes(args, 1)?;
                Ok(ClassKind::Hypercube { d: s[0] })
            }
            "petersen" => {
                if args.is_some() {
                    return Err(err("petersen takes no size parameters"));
                }
                Ok(ClassKind::Petersen)
            }
            _ => Err(err("unknown class name")),
        }
    }
}

impl fmt::Display for ClassKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassKind::Complete { n } => write!(f, "complete:{n}"),
            ClassKind::CompleteBipartite { n1, n2 } => write!(f, "complete_bipartite:{n1},{n2}"),
            ClassKind::CompleteKpartite { k, m } => write!(f, "complete_kpartite:{k},{m}"),
            ClassKind::CompleteMinusClique { n, s, p_prime } => match p_prime {
                None => write!(f, "complete_minus_clique:{n},{s}"),
                Some(p) => write!(f, "complete_minus_clique:{n},{s},pprime={p}"),
            },
            ClassKind::Cycle { n } => write!(f, "cycle:{n}"),
            ClassKind::Hypercube { d } => write!(f, "hypercube:{d}"),
            ClassKind::Petersen => write!(f, "petersen"),
        }
    }
}

/// How vertical edge weights are assigned when a class instance is built.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VerticalSpec {
    /// Every vertex gets the same weight.
    Constant(Prob),
    /// Vertices in the set get weight 1, all others weight 0.
    Posts(BTreeSet<String>),
    /// One weight per vertex; the map must cover the vertex set exactly.
    Explicit(BTreeMap<String, Prob>),
}

/// A fully specified instance request: family, horizontal weight, verticals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassSpec {
    pub kind: ClassKind,
    pub p: Prob,
    pub vertical: VerticalSpec,
}

impl ClassSpec {
    /// The all-`p` model: horizontal and vertical weights all equal.
    pub fn uniform(kind: ClassKind, p: Prob) -> Self {
        let vertical = VerticalSpec::Constant(p.clone());
        ClassSpec { kind, p, vertical }
    }

    pub fn with_vertical(mut self, vertical: VerticalSpec) -> Self {
        self.vertical = vertical;
        self
    }
}

pub fn letter_names(n: usize) -> Vec<String> {
    if n <= 26 {
        (0..n)
            .map(|i| ((b'a' + i as u8) as char).to_string())
            .collect()
    } else {
        (0..n).map(|i| format!("v{i}")).collect()
    }
}

fn partite_names(class_sizes: &[usize]) -> Vec<String> {
    let mut names = Vec::new();
    for (c, &size) in class_sizes.iter().enumerate() {
        for j in 0..size {
            names.push(format!("V{}_{}", c + 1, j));
        }
    }
    names
}

/// The partite class of a generated vertex name, if it has one: `V3_1`
/// belongs to class 3. Vertices of non-partite families return `None`.
pub fn side_of(name: &str) -> Option<usize> {
    let rest = name.strip_prefix('V')?;
    let (class, idx) = rest.split_once('_')?;
    if idx.is_empty() || !idx.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    class.parse().ok()
}

/// Builds the requested instance. Edge lists are deterministic in both
/// content and order.
pub fn generate(spec: &ClassSpec) -> Result<WeightedGraph> {
    let p = &spec.p;
    let mut g = match &spec.kind {
        ClassKind::Complete { n } => {
            let names = letter_names(*n);
            let mut g = WeightedGraph::new(names.clone())?;
            for i in 0..*n {
                for j in i + 1..*n {
                    g.add_edge(&names[i], &names[j], p.clone())?;
                }
            }
            g
        }
        ClassKind::CompleteBipartite { n1, n2 } => {
            generate_partite(&[*n1, *n2], |cu, cv| {
                (cu != cv).then(|| p.clone())
            })?
        }
        ClassKind::CompleteKpartite { k, m } => {
            generate_partite(&vec![*m; *k], |cu, cv| {
                (cu != cv).then(|| p.clone())
            })?
        }
        ClassKind::CompleteMinusClique { n, s, p_prime } => {
            let inner = p_prime.clone().unwrap_or_else(|| p.clone());
            generate_partite(&[*s, *n - *s], |cu, cv| match (cu, cv) {
                (1, 1) => Some(Prob::zero()),
                (2, 2) => Some(inner.clone()),
                _ => Some(p.clone()),
            })?
        }
        ClassKind::Cycle { n } => {
            let names: Vec<String> = (0..*n).map(|i| format!("c{i}")).collect();
            let mut g = WeightedGraph::new(names.clone())?;
            for i in 0..*n {
                g.add_edge(&names[i], &names[(i + 1) % *n], p.clone())?;
            }
            g
        }
        ClassKind::Hypercube { d } => {
            let n = 1usize << *d;
            let names: Vec<String> = (0..n)
                .map(|i| format!("h{:0width$b}", i, width = *d))
                .collect();
            let mut g = WeightedGraph::new(names.clone())?;
            for i in 0..n {
                for b in 0..*d {
                    let j = i ^ (1 << b);
                    if i < j {
                        g.add_edge(&names[i], &names[j], p.clone())?;
                    }
                }
            }
            g
        }
        ClassKind::Petersen => {
            let names: Vec<String> = (0..10).map(|i| format!("p{i}")).collect();
            let mut g = WeightedGraph::new(names.clone())?;
            for i in 0..5 {
                g.add_edge(&names[i], &names[(i + 1) % 5], p.clone())?;
            }
            for i in 0..5 {
                g.add_edge(&names[i], &names[5 + i], p.clone())?;
            }
            for i in 0..5 {
                g.add_edge(&names[5 + i], &names[5 + (i + 2) % 5], p.clone())?;
            }
            g
        }
    };
    apply_vertical(&mut g, &spec.vertical)?;
    Ok(g)
}

/// Complete multipartite scaffold: one edge per cross-class or within-class
/// pair, weight chosen by the callback from the two class indices (1-based);
/// `None` omits the edge. Within-class pairs are only offered when the
/// callback is asked with `cu == cv`.
fn generate_partite(
    class_sizes: &[usize],
    weight: impl Fn(usize, usize) -> Option<Prob>,
) -> Result<WeightedGraph> {
    let names = partite_names(class_sizes);
    let mut class_of = Vec::new();
    for (c, &size) in class_sizes.iter().enumerate() {
        class_of.extend(std::iter::repeat(c + 1).take(size));
    }
    let mut g = WeightedGraph::new(names.clone())?;
    for i in 0..names.len() {
        for j in i + 1..names.len() {
            if let Some(p) = weight(class_of[i], class_of[j]) {
                g.add_edge(&names[i], &names[j], p)?;
            }
        }
    }
    Ok(g)
}

fn apply_vertical(g: &mut WeightedGraph, vertical: &VerticalSpec) -> Result<()> {
    match vertical {
        VerticalSpec::Constant(p) => {
            for name in g.vertex_names().to_vec() {
                g.set_vertex_weight(&name, p.clone())?;
            }
        }
        VerticalSpec::Posts(posts) => {
            for name in posts {
                g.vertex_index(name)?;
            }
            for name in g.vertex_names().to_vec() {
                let w = if posts.contains(&name) {
                    Prob::one()
                } else {
                    Prob::zero()
                };
                g.set_vertex_weight(&name, w)?;
            }
        }
        VerticalSpec::Explicit(map) => {
            for name in map.keys() {
                g.vertex_index(name)?;
            }
            for name in g.vertex_names().to_vec() {
                let w = map
                    .get(&name)
                    .ok_or_else(|| Error::MissingVertexWeight(name.clone()))?;
                g.set_vertex_weight(&name, w.clone())?;
            }
        }
    }
    Ok(())
}
