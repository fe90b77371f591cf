use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::{minus_name, plus_name, BunkbedGraph, WeightedGraph};
use crate::prob::Prob;

/// Checks whether a vertex permutation preserves vertex weights and all pair
/// weights. The permutation must be a bijection of the vertex set onto
/// itself, given as a name-to-name map.
pub fn is_weighted_automorphism(
    g: &WeightedGraph,
    perm: &BTreeMap<String, String>,
) -> Result<bool> {
    let n = g.vertex_count();
    if perm.len() != n {
        return Err(Error::NotABijection(format!(
            "{} entries for {} vertices",
            perm.len(),
            n
        )));
    }
    let mut image = vec![usize::MAX; n];
    let mut hit = vec![false; n];
    for (from, to) in perm {
        let fi = g.vertex_index(from)?;
        let ti = g.vertex_index(to)?;
        if hit[ti] {
            return Err(Error::NotABijection(format!(
                "{to:?} is the image of two vertices"
            )));
        }
        hit[ti] = true;
        image[fi] = ti;
    }
    for i in 0..n {
        if g.vertex_weight_at(i) != g.vertex_weight_at(image[i]) {
            return Ok(false);
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            if g.pair_weight(i, j) != g.pair_weight(image[i], image[j]) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Backtracking search for a weight-preserving automorphism extending the
/// pinned assignments. Candidates are pruned by a per-vertex signature
/// (vertex weight plus the multiset of incident pair weights).
fn automorphism_extending(g: &WeightedGraph, pinned: &[(usize, usize)]) -> bool {
    let n = g.vertex_count();
    let signatures: Vec<(Prob, Vec<Prob>)> = (0..n)
        .map(|i| {
            let mut incident: Vec<Prob> =
                (0..n).filter(|&j| j != i).map(|j| g.pair_weight(i, j)).collect();
            incident.sort();
            (g.vertex_weight_at(i).clone(), incident)
        })
        .collect();

    let mut image = vec![usize::MAX; n];
    let mut used = vec![false; n];
    let compatible = |image: &[usize], x: usize, y: usize| -> bool {
        if signatures[x] != signatures[y] {
            return false;
        }
        for x2 in 0..n {
            if image[x2] != usize::MAX && g.pair_weight(x, x2) != g.pair_weight(y, image[x2]) {
                return false;
            }
        }
        true
    };
    for &(x, y) in pinned {
        if used[y] || image[x] != usize::MAX || !compatible(&image, x, y) {
            return false;
        }
        image[x] = y;
        used[y] = true;
    }

    fn extend(
        g: &WeightedGraph,
        image: &mut [usize],
        used: &mut [bool],
        compatible: &dyn Fn(&[usize], usize, usize) -> bool,
        x: usize,
    ) -> bool {
        let n = image.len();
        let x = match (x..n).find(|&i| image[i] == usize::MAX) {
            Some(i) => i,
            None => return true,
        };
        for y in 0..n {
            if used[y] || !compatible(image, x, y) {
                continue;
            }
            image[x] = y;
            used[y] = true;
            if extend(g, image, used, compatible, x + 1) {
                return true;
            }
            image[x] = usize::MAX;
            used[y] = false;
        }
        false
    }
    extend(g, &mut image, &mut used, &compatible, 0)
}

/// Whether the pair `{v,w}` has the same weights toward every other vertex:
/// `p_{vu} = p_{wu}` for all `u` outside the pair, with absent edges read as
/// weight 0. The weights inside the pair (the `vw` edge and the two vertex
/// weights) are unconstrained.
pub fn twin_hypothesis(g: &WeightedGraph, v: &str, w: &str) -> Result<bool> {
    let vi = g.vertex_index(v)?;
    let wi = g.vertex_index(w)?;
    if vi == wi {
        return Err(Error::IdenticalPair(v.to_string()));
    }
    for u in 0..g.vertex_count() {
        if u == vi || u == wi {
            continue;
        }
        if g.pair_weight(vi, u) != g.pair_weight(wi, u) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Whether the adjacent pair `(v,w)` carries enough local symmetry: the `vw`
/// edge is present, and either one of the two vertex weights is 1, or every
/// neighbor `u` of `w` with vertex weight below 1 is reachable from `v` by a
/// weighted automorphism moving `{v,w}` onto `{u,w}`.
///
/// All edge weights must lie in [0,1); a weight-1 edge is a precondition
/// error (contract it away with `normalize` first).
pub fn adjacent_symmetry_hypothesis(g: &WeightedGraph, v: &str, w: &str) -> Result<bool> {
    let vi = g.vertex_index(v)?;
    let wi = g.vertex_index(w)?;
    if vi == wi {
        return Err(Error::IdenticalPair(v.to_string()));
    }
    for e in g.edges() {
        if e.weight.is_one() {
            return Err(Error::EdgeWeightNotBelowOne {
                u: g.vertex_name(e.u).to_string(),
                v: g.vertex_name(e.v).to_string(),
                weight: e.weight.to_string(),
            });
        }
    }
    if g.pair_weight(vi, wi).is_zero() {
        return Ok(false);
    }
    if g.vertex_weight_at(vi).is_one() || g.vertex_weight_at(wi).is_one() {
        return Ok(true);
    }
    for u in 0..g.vertex_count() {
        if u == vi || g.pair_weight(u, wi).is_zero() || g.vertex_weight_at(u).is_one() {
            continue;
        }
        let direct = automorphism_extending(g, &[(vi, u), (wi, wi)]);
        let swapped = direct || automorphism_extending(g, &[(vi, wi), (wi, u)]);
        if !swapped {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Whether swapping the two layers of a doubled graph preserves all weights.
/// True for every graph built by `build_bunkbed`; false once the layers have
/// been edited apart.
pub fn reflection_is_automorphism(b: &BunkbedGraph) -> bool {
    let mut perm = BTreeMap::new();
    for v in b.base().vertex_names() {
        perm.insert(plus_name(v), minus_name(v));
        perm.insert(minus_name(v), plus_name(v));
    }
    is_weighted_automorphism(b.graph(), &perm).expect("layer swap is a bijection")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, ClassKind, ClassSpec};
    use crate::graph::build_bunkbed;

    fn uniform(spec: &str, p: Prob) -> WeightedGraph {
        generate(&ClassSpec::uniform(ClassKind::parse(spec).unwrap(), p)).unwrap()
    }

    fn perm_of(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect()
    }

    #[test]
    fn cycle_rotation_is_an_automorphism() {
        let g = uniform("cycle:4", Prob::ratio(1, 2));
        let rot = perm_of(&[("c0", "c1"), ("c1", "c2"), ("c2", "c3"), ("c3", "c0")]);
        assert!(is_weighted_automorphism(&g, &rot).unwrap());
        let diagonal = perm_of(&[("c0", "c2"), ("c1", "c1"), ("c2", "c0"), ("c3", "c3")]);
        assert!(is_weighted_automorphism(&g, &diagonal).unwrap());
        let bad = perm_of(&[("c0", "c1"), ("c1", "c0"), ("c2", "c2"), ("c3", "c3")]);
        assert!(!is_weighted_automorphism(&g, &bad).unwrap());
    }

    #[test]
    fn asymmetric_weights_break_automorphisms() {
        let mut g = uniform("cycle:4", Prob::ratio(1, 2));
        g.set_edge_weight("c0", "c1", Prob::ratio(1, 3)).unwrap();
        let rot = perm_of(&[("c0", "c1"), ("c1", "c2"), ("c2", "c3"), ("c3", "c0")]);
        assert!(!is_weighted_automorphism(&g, &rot).unwrap());
        let reflect = perm_of(&[("c0", "c1"), ("c1", "c0"), ("c2", "c3"), ("c3", "c2")]);
        assert!(is_weighted_automorphism(&g, &reflect).unwrap());
        let mut h = g.clone();
        h.set_vertex_weight("c0", Prob::ratio(1, 5)).unwrap();
        assert!(!is_weighted_automorphism(&h, &reflect).unwrap());
    }

    #[test]
    fn non_bijections_are_rejected() {
        let g = uniform("cycle:3", Prob::ratio(1, 2));
        let short = perm_of(&[("c0", "c1"), ("c1", "c0")]);
        assert!(is_weighted_automorphism(&g, &short).is_err());
        let doubled = perm_of(&[("c0", "c1"), ("c1", "c1"), ("c2", "c2")]);
        assert!(is_weighted_automorphism(&g, &doubled).is_err());
        let stranger = perm_of(&[("c0", "c1"), ("c1", "c0"), ("cX", "c2")]);
        assert!(is_weighted_automorphism(&g, &stranger).is_err());
    }

    #[test]
    fn twins_in_partite_graphs() {
        let g = uniform("complete_bipartite:2,3", Prob::ratio(1, 2));
        assert!(twin_hypothesis(&g, "V2_0", "V2_1").unwrap());
        assert!(twin_hypothesis(&g, "V1_0", "V1_1").unwrap());
        assert!(!twin_hypothesis(&g, "V1_0", "V2_0").unwrap());
        assert!(twin_hypothesis(&g, "V1_0", "V1_0").is_err());

        let complete = uniform("complete:4", Prob::ratio(1, 2));
        assert!(twin_hypothesis(&complete, "a", "b").unwrap());

        let cycle = uniform("cycle:4", Prob::ratio(1, 2));
        assert!(!twin_hypothesis(&cycle, "c0", "c1").unwrap());
        assert!(twin_hypothesis(&cycle, "c0", "c2").unwrap());
    }

    #[test]
    fn twin_weights_inside_the_pair_are_free() {
        let mut g = uniform("complete_bipartite:1,2", Prob::ratio(1, 2));
        g.set_vertex_weight("V2_0", Prob::ratio(1, 3)).unwrap();
        g.set_vertex_weight("V2_1", Prob::ratio(2, 3)).unwrap();
        assert!(twin_hypothesis(&g, "V2_0", "V2_1").unwrap());
    }

    #[test]
    fn adjacent_symmetry_on_standard_families() {
        let complete = uniform("complete:4", Prob::ratio(1, 2));
        assert!(adjacent_symmetry_hypothesis(&complete, "a", "b").unwrap());

        let cycle = uniform("cycle:5", Prob::ratio(1, 2));
        assert!(adjacent_symmetry_hypothesis(&cycle, "c0", "c1").unwrap());
        assert!(!adjacent_symmetry_hypothesis(&cycle, "c0", "c2").unwrap());

        let bipartite = uniform("complete_bipartite:2,3", Prob::ratio(1, 2));
        assert!(adjacent_symmetry_hypothesis(&bipartite, "V1_0", "V2_0").unwrap());
        assert!(!adjacent_symmetry_hypothesis(&bipartite, "V1_0", "V1_1").unwrap());
    }

    #[test]
    fn adjacent_symmetry_via_vertex_weight_one() {
        let mut path = WeightedGraph::new(["a", "b", "c"]).unwrap();
        path.add_edge("a", "b", Prob::ratio(1, 2)).unwrap();
        path.add_edge("b", "c", Prob::ratio(1, 3)).unwrap();
        assert!(!adjacent_symmetry_hypothesis(&path, "a", "b").unwrap());
        path.set_vertex_weight("a", Prob::one()).unwrap();
        assert!(adjacent_symmetry_hypothesis(&path, "a", "b").unwrap());
        assert!(adjacent_symmetry_hypothesis(&path, "c", "b").unwrap());
    }

    #[test]
    fn weight_one_neighbors_are_exempt_from_symmetry() {
        let mut path = WeightedGraph::new(["a", "b", "c"]).unwrap();
        path.add_edge("a", "b", Prob::ratio(1, 2)).unwrap();
        path.add_edge("b", "c", Prob::ratio(1, 3)).unwrap();
        path.set_vertex_weight("c", Prob::one()).unwrap();
        assert!(adjacent_symmetry_hypothesis(&path, "a", "b").unwrap());
    }

    #[test]
    fn weight_one_edges_are_a_precondition_error() {
        let mut g = uniform("cycle:3", Prob::ratio(1, 2));
        g.set_edge_weight("c1", "c2", Prob::one()).unwrap();
        assert!(matches!(
            adjacent_symmetry_hypothesis(&g, "c0", "c1"),
            Err(Error::EdgeWeightNotBelowOne { .. })
        ));
    }

    #[test]
    fn reflection_holds_until_layers_are_edited() {
        let g = uniform("complete:3", Prob::ratio(1, 2));
        let mut b = build_bunkbed(&g);
        assert!(reflection_is_automorphism(&b));
        b.graph_mut()
            .set_edge_weight("a+", "b+", Prob::ratio(1, 3))
            .unwrap();
        assert!(!reflection_is_automorphism(&b));
    }
}
