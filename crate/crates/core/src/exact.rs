use std::collections::HashMap;
use std::time::{Duration, Instant};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{minus_name, plus_name, BunkbedGraph, WeightedGraph};
use crate::prob::Prob;
use crate::unionfind::UnionFind;

/// Chunk granularity for the parallel sweep: fixed so that results do not
/// depend on the worker count.
const CHUNK_BITS: u32 = 14;

#[derive(Clone, Debug)]
pub struct ExactOptions {
    /// Maximum number of free edges the engine will enumerate; `2^cap`
    /// configurations are visited.
    pub cap: usize,
}

impl Default for ExactOptions {
    fn default() -> Self {
        ExactOptions { cap: 30 }
    }
}

impl ExactOptions {
    pub fn with_cap(cap: usize) -> Self {
        ExactOptions { cap }
    }
}

/// Per-edge conditioning: an edge can be left to its weight, forced open
/// (probability 1) or forced closed (probability 0).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeState {
    Free,
    ForcedOpen,
    ForcedClosed,
}

/// A set of edge overrides, addressed by endpoint names. Later entries for
/// the same edge replace earlier ones.
#[derive(Clone, Debug, Default)]
pub struct EdgeStates {
    overrides: Vec<(String, String, EdgeState)>,
}

impl EdgeStates {
    pub fn new() -> Self {
        EdgeStates::default()
    }

    pub fn set(mut self, u: &str, v: &str, state: EdgeState) -> Self {
        self.overrides.push((u.to_string(), v.to_string(), state));
        self
    }

    pub fn force_open(self, u: &str, v: &str) -> Self {
        self.set(u, v, EdgeState::ForcedOpen)
    }

    pub fn force_closed(self, u: &str, v: &str) -> Self {
        self.set(u, v, EdgeState::ForcedClosed)
    }

    pub fn is_empty(&self) -> bool {
        self.overrides.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str, EdgeState)> {
        self.overrides.iter().map(|(u, v, s)| (u.as_str(), v.as_str(), *s))
    }

    /// Maps the overrides onto edge indices of `g`, later entries winning.
    fn resolve(&self, g: &WeightedGraph) -> Result<HashMap<usize, EdgeState>> {
        let mut map = HashMap::new();
        for (u, v, state) in self.entries() {
            let ui = g.vertex_index(u)?;
            let vi = g.vertex_index(v)?;
            let e = g
                .edge_weight_index(ui, vi)
                .ok_or_else(|| Error::UnknownEdge {
                    u: u.to_string(),
                    v: v.to_string(),
                })?;
            map.insert(e, state);
        }
        Ok(map)
    }
}

/// A conjunction of connectivity requirements: every `must_connect` pair in
/// one open cluster, every `must_separate` pair in different ones.
#[derive(Clone, Debug, Default)]
pub struct ConnectivityEvent {
    pub must_connect: Vec<(String, String)>,
    pub must_separate: Vec<(String, String)>,
}

impl ConnectivityEvent {
    pub fn new() -> Self {
        ConnectivityEvent::default()
    }

    /// The plain two-point event `a <-> b`.
    pub fn connection(a: &str, b: &str) -> Self {
        ConnectivityEvent::new().connect(a, b)
    }

    pub fn connect(mut self, a: &str, b: &str) -> Self {
        self.must_connect.push((a.to_string(), b.to_string()));
        self
    }

    pub fn separate(mut self, a: &str, b: &str) -> Self {
        self.must_separate.push((a.to_string(), b.to_string()));
        self
    }
}

#[derive(Clone, Debug)]
pub struct ExactResult {
    pub probability: Prob,
    /// Number of edge configurations the sweep visited; 0 when the answer
    /// was forced without enumeration.
    pub configurations: u64,
    pub elapsed: Duration,
}

struct ResolvedEvent {
    connect: Vec<(u32, u32)>,
    separate: Vec<(u32, u32)>,
}

fn resolve_event(g: &WeightedGraph, event: &ConnectivityEvent) -> Result<ResolvedEvent> {
    let pair = |a: &str, b: &str| -> Result<(u32, u32)> {
        let ai = g.vertex_index(a)? as u32;
        let bi = g.vertex_index(b)? as u32;
        Ok((ai.min(bi), ai.max(bi)))
    };
    let connect: Vec<(u32, u32)> = event
        .must_connect
        .iter()
        .map(|(a, b)| pair(a, b))
        .collect::<Result<_>>()?;
    let separate: Vec<(u32, u32)> = event
        .must_separate
        .iter()
        .map(|(a, b)| pair(a, b))
        .collect::<Result<_>>()?;
    for s in &separate {
        if connect.contains(s) {
            let name = |i: u32| g.vertex_name(i as usize).to_string();
            return Err(Error::ContradictoryEvent {
                u: name(s.0),
                v: name(s.1),
            });
        }
    }
    Ok(ResolvedEvent { connect, separate })
}

fn satisfies(uf: &mut UnionFind, ev: &ResolvedEvent) -> bool {
    for &(a, b) in &ev.connect {
        if !uf.connected(a, b) {
            return false;
        }
    }
    for &(a, b) in &ev.separate {
        if uf.connected(a, b) {
            return false;
        }
    }
    true
}

/// The random part of a conditioned model: the baseline forest of forced
/// connections plus the list of genuinely random edges.
struct Network {
    base: UnionFind,
    free_ends: Vec<(u32, u32)>,
    open_num: Vec<BigUint>,
    closed_num: Vec<BigUint>,
    denominator: BigUint,
}

fn resolve_network(
    g: &WeightedGraph,
    states: &EdgeStates,
    opts: &ExactOptions,
) -> Result<Network> {
    let overrides = states.resolve(g)?;
    let mut base = UnionFind::new(g.vertex_count());
    let mut free_ends = Vec::new();
    let mut open_num = Vec::new();
    let mut closed_num = Vec::new();
    let mut denominator = BigUint::one();
    for (i, e) in g.edges().iter().enumerate() {
        match overrides.get(&i).copied().unwrap_or(EdgeState::Free) {
            EdgeState::ForcedClosed => {}
            EdgeState::ForcedOpen => base.union(e.u as u32, e.v as u32),
            EdgeState::Free => {
                if e.weight.is_zero() {
                    continue;
                }
                if e.weight.is_one() {
                    base.union(e.u as u32, e.v as u32);
                    continue;
                }
                let num = e
                    .weight
                    .as_ratio()
                    .numer()
                    .to_biguint()
                    .expect("probability numerator is nonnegative");
                let den = e
                    .weight
                    .as_ratio()
                    .denom()
                    .to_biguint()
                    .expect("probability denominator is positive");
                open_num.push(num.clone());
                closed_num.push(&den - &num);
                denominator *= &den;
                free_ends.push((e.u as u32, e.v as u32));
            }
        }
    }
    let m = free_ends.len();
    let cap = opts.cap.min(63);
    if m > cap {
        return Err(Error::CapExceeded {
            free_edges: m,
            cap: opts.cap,
            configurations: format!("2^{m}"),
        });
    }
    Ok(Network {
        base,
        free_ends,
        open_num,
        closed_num,
        denominator,
    })
}

fn sweep_u128(net: &Network, events: &[ResolvedEvent], live: &[bool]) -> Vec<BigUint> {
    let m = net.free_ends.len();
    let open: Vec<u128> = net.open_num.iter().map(|n| n.to_u128().unwrap()).collect();
    let closed: Vec<u128> = net.closed_num.iter().map(|n| n.to_u128().unwrap()).collect();
    let total: u64 = 1 << m;
    let chunk: u64 = 1 << CHUNK_BITS.min(m as u32);
    let partials: Vec<Vec<u128>> = (0..total / chunk)
        .into_par_iter()
        .map(|ci| {
            let mut sums = vec![0u128; events.len()];
            let mut scratch = net.base.clone();
            for config in ci * chunk..(ci + 1) * chunk {
                scratch.copy_from(&net.base);
                for (i, &(u, v)) in net.free_ends.iter().enumerate() {
                    if config >> i & 1 == 1 {
                        scratch.union(u, v);
                    }
                }
                let mut weight = None;
                for (k, ev) in events.iter().enumerate() {
                    if live[k] && satisfies(&mut scratch, ev) {
                        let w = *weight.get_or_insert_with(|| {
                            let mut prod: u128 = 1;
                            for i in 0..m {
                                prod *= if config >> i & 1 == 1 { open[i] } else { closed[i] };
                            }
                            prod
                        });
                        sums[k] += w;
                    }
                }
            }
            sums
        })
        .collect();
    let mut totals = vec![0u128; events.len()];
    for part in partials {
        for (t, p) in totals.iter_mut().zip(part) {
            *t += p;
        }
    }
    totals.into_iter().map(BigUint::from).collect()
}

fn sweep_big(net: &Network, events: &[ResolvedEvent], live: &[bool]) -> Vec<BigUint> {
    let m = net.free_ends.len();
    let total: u64 = 1 << m;
    let chunk: u64 = 1 << CHUNK_BITS.min(m as u32);
    let partials: Vec<Vec<BigUint>> = (0..total / chunk)
        .into_par_iter()
        .map(|ci| {
            let mut sums = vec![BigUint::zero(); events.len()];
            let mut scratch = net.base.clone();
            for config in ci * chunk..(ci + 1) * chunk {
                scratch.copy_from(&net.base);
                for (i, &(u, v)) in net.free_ends.iter().enumerate() {
                    if config >> i & 1 == 1 {
                        scratch.union(u, v);
                    }
                }
                let mut weight: Option<BigUint> = None;
                for (k, ev) in events.iter().enumerate() {
                    if live[k] && satisfies(&mut scratch, ev) {
                        if weight.is_none() {
                            let mut prod = BigUint::one();
                            for i in 0..m {
                                prod *= if config >> i & 1 == 1 {
                                    &net.open_num[i]
                                } else {
                                    &net.closed_num[i]
                                };
                            }
                            weight = Some(prod);
                        }
                        sums[k] += weight.as_ref().unwrap();
                    }
                }
            }
            sums
        })
        .collect();
    let mut totals = vec![BigUint::zero(); events.len()];
    for part in partials {
        for (t, p) in totals.iter_mut().zip(part) {
            *t += p;
        }
    }
    totals
}

/// Exact probabilities of several events over one shared sweep of the edge
/// configurations. The answers are independent of edge order, chunking and
/// worker count; only the shared enumeration cost is saved.
pub fn event_probabilities(
    g: &WeightedGraph,
    events: &[ConnectivityEvent],
    states: &EdgeStates,
    opts: &ExactOptions,
) -> Result<Vec<ExactResult>> {
    let start = Instant::now();
    let resolved: Vec<ResolvedEvent> = events
        .iter()
        .map(|e| resolve_event(g, e))
        .collect::<Result<_>>()?;
    let mut net = resolve_network(g, states, opts)?;

    // An event whose separation requirement already fails on the forced
    // connections is impossible in every configuration.
    let live: Vec<bool> = resolved
        .iter()
        .map(|ev| ev.separate.iter().all(|&(a, b)| !net.base.connected(a, b)))
        .collect();

    let m = net.free_ends.len();
    let numerators = if live.iter().any(|&l| l) {
        if net.denominator.bits() <= 127 {
            sweep_u128(&net, &resolved, &live)
        } else {
            sweep_big(&net, &resolved, &live)
        }
    } else {
        vec![BigUint::zero(); resolved.len()]
    };

    let configurations = if live.iter().any(|&l| l) { 1u64 << m } else { 0 };
    let elapsed = start.elapsed();
    Ok(numerators
        .into_iter()
        .map(|num| {
            let ratio = BigRational::new(
                BigInt::from(num),
                BigInt::from(net.denominator.clone()),
            );
            ExactResult {
                probability: Prob::new(ratio).expect("event mass within total mass"),
                configurations,
                elapsed,
            }
        })
        .collect())
}

/// Exact probability of one connectivity event under the conditioned model.
pub fn event_probability(
    g: &WeightedGraph,
    event: &ConnectivityEvent,
    states: &EdgeStates,
    opts: &ExactOptions,
) -> Result<ExactResult> {
    Ok(event_probabilities(g, std::slice::from_ref(event), states, opts)?
        .pop()
        .expect("one event in, one result out"))
}

/// Exact probability that two vertices of the doubled graph connect.
pub fn connection_probability(
    b: &BunkbedGraph,
    a: &str,
    c: &str,
    opts: &ExactOptions,
) -> Result<ExactResult> {
    event_probability(
        b.graph(),
        &ConnectivityEvent::connection(a, c),
        &EdgeStates::new(),
        opts,
    )
}

#[derive(Clone, Debug)]
pub struct GapResult {
    /// P(v- <-> w-)
    pub same_layer: Prob,
    /// P(v- <-> w+)
    pub other_layer: Prob,
    /// same_layer - other_layer
    pub gap: BigRational,
    pub configurations: u64,
    pub elapsed: Duration,
}

/// The two connection probabilities from `v-` and their difference, computed
/// in one sweep.
pub fn bunkbed_gap(b: &BunkbedGraph, v: &str, w: &str, opts: &ExactOptions) -> Result<GapResult> {
    b.marked_quadruple(v, w)?;
    let events = [
        ConnectivityEvent::connection(&minus_name(v), &minus_name(w)),
        ConnectivityEvent::connection(&minus_name(v), &plus_name(w)),
    ];
    let mut res = event_probabilities(b.graph(), &events, &EdgeStates::new(), opts)?;
    let other = res.pop().expect("two results");
    let same = res.pop().expect("two results");
    Ok(GapResult {
        gap: same.probability.as_ratio() - other.probability.as_ratio(),
        same_layer: same.probability,
        other_layer: other.probability,
        configurations: other.configurations,
        elapsed: other.elapsed,
    })
}

#[derive(Clone, Debug)]
pub struct FourPointResult {
    /// P(v+ <-> w+), P(v- <-> w-), P(v+ <-> w-), P(v- <-> w+)
    pub terms: [Prob; 4],
    /// terms[0] + terms[1] - terms[2] - terms[3]
    pub value: BigRational,
    pub configurations: u64,
    pub elapsed: Duration,
}

fn signed_four(mut res: Vec<ExactResult>) -> FourPointResult {
    let t4 = res.pop().expect("four results");
    let t3 = res.pop().expect("four results");
    let t2 = res.pop().expect("four results");
    let t1 = res.pop().expect("four results");
    let value = t1.probability.as_ratio() + t2.probability.as_ratio()
        - t3.probability.as_ratio()
        - t4.probability.as_ratio();
    FourPointResult {
        terms: [t1.probability, t2.probability, t3.probability, t4.probability],
        value,
        configurations: t4.configurations,
        elapsed: t4.elapsed,
    }
}

/// The signed sum of the four plain connection probabilities between the
/// copies of `v` and the copies of `w`:
/// P(v+<->w+) + P(v-<->w-) - P(v+<->w-) - P(v-<->w+).
pub fn four_point_difference(
    b: &BunkbedGraph,
    v: &str,
    w: &str,
    opts: &ExactOptions,
) -> Result<FourPointResult> {
    b.marked_quadruple(v, w)?;
    let (vp, vm) = (plus_name(v), minus_name(v));
    let (wp, wm) = (plus_name(w), minus_name(w));
    let events = [
        ConnectivityEvent::connection(&vp, &wp),
        ConnectivityEvent::connection(&vm, &wm),
        ConnectivityEvent::connection(&vp, &wm),
        ConnectivityEvent::connection(&vm, &wp),
    ];
    let res = event_probabilities(b.graph(), &events, &EdgeStates::new(), opts)?;
    Ok(signed_four(res))
}

/// The four pattern events behind the signed sum: each one connects a copy
/// of `v` to a copy of `w` while the two vertical pairs stay separated.
pub fn pattern_events(v: &str, w: &str) -> [ConnectivityEvent; 4] {
    let (vp, vm) = (plus_name(v), minus_name(v));
    let (wp, wm) = (plus_name(w), minus_name(w));
    let base = |a: &str, b: &str| {
        ConnectivityEvent::connection(a, b)
            .separate(&vm, &vp)
            .separate(&wm, &wp)
    };
    [
        base(&vp, &wp),
        base(&vm, &wm),
        base(&vp, &wm),
        base(&vm, &wp),
    ]
}

/// Same signed sum restricted to the patterns where neither vertical pair is
/// connected. Equal to the four-point difference because configurations with
/// a connected vertical pair contribute symmetrically to both sides.
pub fn pattern_difference(
    b: &BunkbedGraph,
    v: &str,
    w: &str,
    opts: &ExactOptions,
) -> Result<FourPointResult> {
    pattern_difference_conditioned(b, v, w, &EdgeStates::new(), opts)
}

/// Pattern signed sum under extra edge conditioning.
pub fn pattern_difference_conditioned(
    b: &BunkbedGraph,
    v: &str,
    w: &str,
    states: &EdgeStates,
    opts: &ExactOptions,
) -> Result<FourPointResult> {
    b.marked_quadruple(v, w)?;
    let events = pattern_events(v, w);
    let res = event_probabilities(b.graph(), &events, states, opts)?;
    Ok(signed_four(res))
}

/// The graph with the overrides baked into the weights: forced-open edges
/// get weight 1, forced-closed edges weight 0.
pub fn conditioned(g: &WeightedGraph, states: &EdgeStates) -> Result<WeightedGraph> {
    let overrides = states.resolve(g)?;
    let mut out = g.clone();
    for (&i, &state) in &overrides {
        let e = &g.edges()[i];
        let (u, v) = (
            g.vertex_name(e.u).to_string(),
            g.vertex_name(e.v).to_string(),
        );
        match state {
            EdgeState::Free => {}
            EdgeState::ForcedOpen => out.set_edge_weight(&u, &v, Prob::one())?,
            EdgeState::ForcedClosed => out.set_edge_weight(&u, &v, Prob::zero())?,
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, ClassKind, ClassSpec};
    use crate::graph::build_bunkbed;

    fn k2_bunkbed() -> BunkbedGraph {
        let g = generate(&ClassSpec::uniform(
            ClassKind::Complete { n: 2 },
            Prob::ratio(1, 2),
        ))
        .unwrap();
        build_bunkbed(&g)
    }

    #[test]
    fn two_vertex_bunkbed_connection_probabilities() {
        let b = k2_bunkbed();
        let opts = ExactOptions::default();
        let same = connection_probability(&b, "a-", "b-", &opts).unwrap();
        assert_eq!(same.probability, Prob::ratio(9, 16));
        assert_eq!(same.configurations, 16);
        let cross = connection_probability(&b, "a-", "b+", &opts).unwrap();
        assert_eq!(cross.probability, Prob::ratio(7, 16));
    }

    #[test]
    fn two_vertex_bunkbed_gap_and_signed_sums() {
        let b = k2_bunkbed();
        let opts = ExactOptions::default();
        let gap = bunkbed_gap(&b, "a", "b", &opts).unwrap();
        assert_eq!(gap.same_layer, Prob::ratio(9, 16));
        assert_eq!(gap.other_layer, Prob::ratio(7, 16));
        assert_eq!(gap.gap, Prob::ratio(1, 8).as_ratio().clone());

        let four = four_point_difference(&b, "a", "b", &opts).unwrap();
        assert_eq!(four.value, Prob::ratio(1, 4).as_ratio().clone());

        let pattern = pattern_difference(&b, "a", "b", &opts).unwrap();
        assert_eq!(pattern.value, Prob::ratio(1, 4).as_ratio().clone());
        assert_eq!(pattern.terms[0], Prob::ratio(1, 8));
        assert_eq!(pattern.terms[1], Prob::ratio(1, 8));
        assert_eq!(pattern.terms[2], Prob::zero());
        assert_eq!(pattern.terms[3], Prob::zero());
    }

    #[test]
    fn series_and_parallel_probabilities() {
        let mut g = WeightedGraph::new(["a", "b", "c"]).unwrap();
        g.add_edge("a", "b", Prob::ratio(1, 2)).unwrap();
        g.add_edge("b", "c", Prob::ratio(1, 3)).unwrap();
        let opts = ExactOptions::default();
        let series = event_probability(
            &g,
            &ConnectivityEvent::connection("a", "c"),
            &EdgeStates::new(),
            &opts,
        )
        .unwrap();
        assert_eq!(series.probability, Prob::ratio(1, 6));

        g.add_edge("a", "c", Prob::ratio(1, 4)).unwrap();
        let direct = event_probability(
            &g,
            &ConnectivityEvent::connection("a", "c"),
            &EdgeStates::new(),
            &opts,
        )
        .unwrap();
        assert_eq!(direct.probability, Prob::ratio(3, 8));
    }

    #[test]
    fn forced_edges_condition_the_model() {
        let mut g = WeightedGraph::new(["a", "b", "c"]).unwrap();
        g.add_edge("a", "b", Prob::ratio(1, 2)).unwrap();
        g.add_edge("b", "c", Prob::ratio(1, 3)).unwrap();
        let opts = ExactOptions::default();

        let open = EdgeStates::new().force_open("a", "b");
        let r = event_probability(
            &g,
            &ConnectivityEvent::connection("a", "c"),
            &open,
            &opts,
        )
        .unwrap();
        assert_eq!(r.probability, Prob::ratio(1, 3));

        let closed = EdgeStates::new().force_closed("b", "c");
        let r = event_probability(
            &g,
            &ConnectivityEvent::connection("a", "c"),
            &closed,
            &opts,
        )
        .unwrap();
        assert_eq!(r.probability, Prob::zero());

        let missing = EdgeStates::new().force_open("a", "c");
        assert!(matches!(
            event_probability(&g, &ConnectivityEvent::connection("a", "c"), &missing, &opts),
            Err(Error::UnknownEdge { .. })
        ));
    }

    #[test]
    fn separation_events() {
        let mut g = WeightedGraph::new(["a", "b"]).unwrap();
        g.add_edge("a", "b", Prob::ratio(1, 3)).unwrap();
        let opts = ExactOptions::default();
        let ev = ConnectivityEvent::new().separate("a", "b");
        let r = event_probability(&g, &ev, &EdgeStates::new(), &opts).unwrap();
        assert_eq!(r.probability, Prob::ratio(2, 3));

        let forced = EdgeStates::new().force_open("a", "b");
        let r = event_probability(&g, &ev, &forced, &opts).unwrap();
        assert_eq!(r.probability, Prob::zero());
        assert_eq!(r.configurations, 0);

        let contradictory = ConnectivityEvent::connection("a", "b").separate("b", "a");
        assert!(matches!(
            event_probability(&g, &contradictory, &EdgeStates::new(), &opts),
            Err(Error::ContradictoryEvent { .. })
        ));
    }

    #[test]
    fn cap_is_enforced() {
        let g = generate(&ClassSpec::uniform(
            ClassKind::Complete { n: 4 },
            Prob::ratio(1, 2),
        ))
        .unwrap();
        let b = build_bunkbed(&g);
        let err = connection_probability(&b, "a-", "b-", &ExactOptions::with_cap(10));
        assert!(matches!(err, Err(Error::CapExceeded { free_edges: 16, .. })));
    }

    #[test]
    fn weight_one_and_zero_edges_do_not_enumerate() {
        let mut g = WeightedGraph::new(["a", "b", "c", "d"]).unwrap();
        g.add_edge("a", "b", Prob::one()).unwrap();
        g.add_edge("b", "c", Prob::ratio(1, 2)).unwrap();
        g.add_edge("c", "d", Prob::zero()).unwrap();
        let r = event_probability(
            &g,
            &ConnectivityEvent::connection("a", "c"),
            &EdgeStates::new(),
            &ExactOptions::default(),
        )
        .unwrap();
        assert_eq!(r.probability, Prob::ratio(1, 2));
        assert_eq!(r.configurations, 2);

        let r = event_probability(
            &g,
            &ConnectivityEvent::connection("a", "d"),
            &EdgeStates::new(),
            &ExactOptions::default(),
        )
        .unwrap();
        assert_eq!(r.probability, Prob::zero());
    }

    #[test]
    fn conditioned_rewrites_weights() {
        let mut g = WeightedGraph::new(["a", "b", "c"]).unwrap();
        g.add_edge("a", "b", Prob::ratio(1, 2)).unwrap();
        g.add_edge("b", "c", Prob::ratio(1, 3)).unwrap();
        let states = EdgeStates::new().force_open("a", "b").force_closed("b", "c");
        let h = conditioned(&g, &states).unwrap();
        assert_eq!(h.pair_weight_by_name("a", "b").unwrap(), Prob::one());
        assert_eq!(h.pair_weight_by_name("b", "c").unwrap(), Prob::zero());
        assert_eq!(g.pair_weight_by_name("a", "b").unwrap(), Prob::ratio(1, 2));
    }

    #[test]
    fn batched_events_agree_with_single_events() {
        let g = generate(&ClassSpec::uniform(
            ClassKind::Cycle { n: 4 },
            Prob::ratio(2, 5),
        ))
        .unwrap();
        let b = build_bunkbed(&g);
        let opts = ExactOptions::default();
        let events = [
            ConnectivityEvent::connection("c0-", "c2-"),
            ConnectivityEvent::connection("c0-", "c2+"),
            ConnectivityEvent::new().separate("c0-", "c0+"),
        ];
        let batched = event_probabilities(b.graph(), &events, &EdgeStates::new(), &opts).unwrap();
        for (ev, res) in events.iter().zip(&batched) {
            let single = event_probability(b.graph(), ev, &EdgeStates::new(), &opts).unwrap();
            assert_eq!(single.probability, res.probability);
        }
    }
}
