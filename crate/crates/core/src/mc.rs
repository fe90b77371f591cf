use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact::ConnectivityEvent;
use crate::graph::{minus_name, plus_name, BunkbedGraph, WeightedGraph};
use crate::unionfind::UnionFind;

/// Samples per RNG stream. Each chunk seeds its own ChaCha stream, so the
/// estimate is a pure function of (seed, sample count) no matter how many
/// workers run the chunks.
const CHUNK: u64 = 4096;

#[derive(Clone, Debug)]
pub struct McResult {
    pub estimate: f64,
    /// Binomial standard error `sqrt(est * (1 - est) / samples)`.
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct McGapResult {
    /// Estimate of P(v- <-> w-).
    pub same_layer: McResult,
    /// Estimate of P(v- <-> w+).
    pub other_layer: McResult,
    /// Paired estimate of the difference: both events are evaluated on each
    /// sampled configuration.
    pub gap: f64,
    /// Standard error of the paired difference, usually far below the
    /// difference of two independent estimates.
    pub paired_stderr: f64,
}

/// One exact Bernoulli draw with success probability `num/den`, comparing a
/// lazily extended uniform bit stream against the threshold. Consumes one
/// 64-bit draw except with probability about 2^-64.
fn bernoulli_u64(rng: &mut ChaCha8Rng, mut num: u64, den: u64) -> bool {
    debug_assert!(num < den);
    loop {
        let u = rng.next_u64();
        let lhs = (u as u128) * (den as u128);
        let rhs = (num as u128) << 64;
        if lhs + (den as u128) <= rhs {
            return true;
        }
        if lhs >= rhs {
            return false;
        }
        num = (rhs - lhs) as u64;
    }
}

fn bernoulli_big(rng: &mut ChaCha8Rng, num: &BigUint, den: &BigUint) -> bool {
    let mut num = num.clone();
    loop {
        let u = BigUint::from(rng.next_u64());
        let lhs = u * den;
        let rhs = &num << 64;
        if &lhs + den <= rhs {
            return true;
        }
        if lhs >= rhs {
            return false;
        }
        num = rhs - lhs;
    }
}

enum Sampler {
    Small { num: u64, den: u64 },
    Large { num: BigUint, den: BigUint },
}

impl Sampler {
    fn draw(&self, rng: &mut ChaCha8Rng) -> bool {
        match self {
            Sampler::Small { num, den } => bernoulli_u64(rng, *num, *den),
            Sampler::Large { num, den } => bernoulli_big(rng, num, den),
        }
    }
}

struct SampledNetwork {
    base: UnionFind,
    ends: Vec<(u32, u32)>,
    samplers: Vec<Sampler>,
}

fn resolve(g: &WeightedGraph) -> SampledNetwork {
    let mut base = UnionFind::new(g.vertex_count());
    let mut ends = Vec::new();
    let mut samplers = Vec::new();
    for e in g.edges() {
        if e.weight.is_zero() {
            continue;
        }
        if e.weight.is_one() {
            base.union(e.u as u32, e.v as u32);
            continue;
        }
        let num = e.weight.as_ratio().numer().to_biguint().expect("nonnegative");
        let den = e.weight.as_ratio().denom().to_biguint().expect("positive");
        let sampler = match (num.to_u64(), den.to_u64()) {
            (Some(num), Some(den)) => Sampler::Small { num, den },
            _ => Sampler::Large { num, den },
        };
        ends.push((e.u as u32, e.v as u32));
        samplers.push(sampler);
    }
    SampledNetwork {
        base,
        ends,
        samplers,
    }
}

struct ResolvedEvent {
    connect: Vec<(u32, u32)>,
    separate: Vec<(u32, u32)>,
}

fn resolve_event(g: &WeightedGraph, event: &ConnectivityEvent) -> Result<ResolvedEvent> {
    let pair = |a: &str, b: &str| -> Result<(u32, u32)> {
        Ok((g.vertex_index(a)? as u32, g.vertex_index(b)? as u32))
    };
    Ok(ResolvedEvent {
        connect: event
            .must_connect
            .iter()
            .map(|(a, b)| pair(a, b))
            .collect::<Result<_>>()?,
        separate: event
            .must_separate
            .iter()
            .map(|(a, b)| pair(a, b))
            .collect::<Result<_>>()?,
    })
}

fn satisfies(uf: &mut UnionFind, ev: &ResolvedEvent) -> bool {
    ev.connect.iter().all(|&(a, b)| uf.connected(a, b))
        && ev.separate.iter().all(|&(a, b)| !uf.connected(a, b))
}

/// Counts, for each sampled configuration, which of the given events hold.
/// Returns one hit count per event plus, for the first two events, the
/// off-diagonal counts needed for a paired difference.
fn sample_counts(
    g: &WeightedGraph,
    events: &[ConnectivityEvent],
    samples: u64,
    seed: u64,
) -> Result<(Vec<u64>, u64, u64)> {
    if samples == 0 {
        return Err(Error::NoSamples);
    }
    let net = resolve(g);
    let resolved: Vec<ResolvedEvent> = events
        .iter()
        .map(|e| resolve_event(g, e))
        .collect::<Result<_>>()?;
    let chunks = samples.div_ceil(CHUNK);
    let partials: Vec<(Vec<u64>, u64, u64)> = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(ci);
            let mut hits = vec![0u64; resolved.len()];
            let mut first_only = 0u64;
            let mut second_only = 0u64;
            let mut scratch = net.base.clone();
            let in_chunk = (samples - ci * CHUNK).min(CHUNK);
            for _ in 0..in_chunk {
                scratch.copy_from(&net.base);
                for (i, sampler) in net.samplers.iter().enumerate() {
                    if sampler.draw(&mut rng) {
                        let (u, v) = net.ends[i];
                        scratch.union(u, v);
                    }
                }
                let mut held = [false, false];
                for (k, ev) in resolved.iter().enumerate() {
                    if satisfies(&mut scratch, ev) {
                        hits[k] += 1;
                        if k < 2 {
                            held[k] = true;
                        }
                    }
                }
                if held[0] && !held[1] {
                    first_only += 1;
                }
                if held[1] && !held[0] {
                    second_only += 1;
                }
            }
            (hits, first_only, second_only)
        })
        .collect();
    let mut hits = vec![0u64; events.len()];
    let (mut first_only, mut second_only) = (0u64, 0u64);
    for (h, f, s) in partials {
        for (t, p) in hits.iter_mut().zip(h) {
            *t += p;
        }
        first_only += f;
        second_only += s;
    }
    Ok((hits, first_only, second_only))
}

fn result_from(hits: u64, samples: u64, seed: u64) -> McResult {
    let estimate = hits as f64 / samples as f64;
    let stderr = (estimate * (1.0 - estimate) / samples as f64).sqrt();
    McResult {
        estimate,
        stderr,
        samples,
        seed,
    }
}

/// Monte Carlo estimate of a connectivity event's probability.
pub fn mc_event_probability(
    g: &WeightedGraph,
    event: &ConnectivityEvent,
    samples: u64,
    seed: u64,
) -> Result<McResult> {
    let (hits, _, _) = sample_counts(g, std::slice::from_ref(event), samples, seed)?;
    Ok(result_from(hits[0], samples, seed))
}

/// Paired Monte Carlo estimate of the bunkbed gap: both connection events
/// are evaluated on each sampled configuration, so their common noise
/// cancels out of the difference.
pub fn mc_bunkbed_gap(
    b: &BunkbedGraph,
    v: &str,
    w: &str,
    samples: u64,
    seed: u64,
) -> Result<McGapResult> {
    b.marked_quadruple(v, w)?;
    let events = [
        ConnectivityEvent::connection(&minus_name(v), &minus_name(w)),
        ConnectivityEvent::connection(&minus_name(v), &plus_name(w)),
    ];
    let (hits, first_only, second_only) = sample_counts(b.graph(), &events, samples, seed)?;
    let n = samples as f64;
    let gap = (first_only as f64 - second_only as f64) / n;
    let disagree = (first_only + second_only) as f64 / n;
    let paired_stderr = ((disagree - gap * gap).max(0.0) / n).sqrt();
    Ok(McGapResult {
        same_layer: result_from(hits[0], samples, seed),
        other_layer: result_from(hits[1], samples, seed),
        gap,
        paired_stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, ClassKind, ClassSpec};
    use crate::graph::build_bunkbed;
    use crate::prob::Prob;

    fn k2_bunkbed() -> BunkbedGraph {
        let g = generate(&ClassSpec::uniform(
            ClassKind::Complete { n: 2 },
            Prob::ratio(1, 2),
        ))
        .unwrap();
        build_bunkbed(&g)
    }

    #[test]
    fn bernoulli_frequencies_match() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 40_000;
        let hits = (0..n).filter(|_| bernoulli_u64(&mut rng, 1, 3)).count();
        let freq = hits as f64 / n as f64;
        assert!((freq - 1.0 / 3.0).abs() < 0.012, "freq {freq}");
    }

    #[test]
    fn estimates_are_deterministic_for_a_seed() {
        let b = k2_bunkbed();
        let a = mc_bunkbed_gap(&b, "a", "b", 20_000, 42).unwrap();
        let c = mc_bunkbed_gap(&b, "a", "b", 20_000, 42).unwrap();
        assert_eq!(a.same_layer.estimate, c.same_layer.estimate);
        assert_eq!(a.gap, c.gap);
    }

    #[test]
    fn estimates_do_not_depend_on_worker_count() {
        let b = k2_bunkbed();
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| mc_bunkbed_gap(&b, "a", "b", 30_000, 9).unwrap())
        };
        let one = run(1);
        let four = run(4);
        assert_eq!(one.same_layer.estimate, four.same_layer.estimate);
        assert_eq!(one.other_layer.estimate, four.other_layer.estimate);
        assert_eq!(one.gap, four.gap);
    }

    #[test]
    fn estimates_are_calibrated() {
        let b = k2_bunkbed();
        let r = mc_bunkbed_gap(&b, "a", "b", 100_000, 3).unwrap();
        let same_err = (r.same_layer.estimate - 9.0 / 16.0).abs();
        assert!(same_err < 5.0 * r.same_layer.stderr.max(1e-9), "{same_err}");
        let other_err = (r.other_layer.estimate - 7.0 / 16.0).abs();
        assert!(other_err < 5.0 * r.other_layer.stderr.max(1e-9), "{other_err}");
        let gap_err = (r.gap - 0.125).abs();
        assert!(gap_err < 5.0 * r.paired_stderr, "{gap_err}");
        assert!(r.paired_stderr < r.same_layer.stderr + r.other_layer.stderr);
    }

    #[test]
    fn deterministic_graphs_have_zero_stderr() {
        let mut g = WeightedGraph::new(["a", "b", "c"]).unwrap();
        g.add_edge("a", "b", Prob::one()).unwrap();
        g.add_edge("b", "c", Prob::zero()).unwrap();
        let r = mc_event_probability(
            &g,
            &ConnectivityEvent::connection("a", "b"),
            5_000,
            0,
        )
        .unwrap();
        assert_eq!(r.estimate, 1.0);
        assert_eq!(r.stderr, 0.0);
        let r = mc_event_probability(
            &g,
            &ConnectivityEvent::connection("a", "c"),
            5_000,
            0,
        )
        .unwrap();
        assert_eq!(r.estimate, 0.0);
    }

    #[test]
    fn zero_samples_is_an_error() {
        let b = k2_bunkbed();
        assert!(matches!(
            mc_bunkbed_gap(&b, "a", "b", 0, 0),
            Err(Error::NoSamples)
        ));
    }
}
