use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::Zero;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{bunkbed_gap, ExactOptions};
use crate::generate::{generate, letter_names, side_of, ClassKind, ClassSpec};
use crate::graph::{build_bunkbed, WeightedGraph};
use crate::mc::mc_bunkbed_gap;
use crate::prob::Prob;
use crate::symmetry::{adjacent_symmetry_hypothesis, twin_hypothesis};

/// Sigma multiplier past which a negative sampled gap is treated as a
/// violation candidate and re-verified exactly.
pub const MC_FLAG_SIGMA: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    ClassSweep,
    Random,
    Exhaustive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairFilter {
    All,
    SameSide,
    CrossSide,
}

impl PairFilter {
    fn admits(&self, v: &str, w: &str) -> bool {
        match self {
            PairFilter::All => true,
            PairFilter::SameSide => matches!(
                (side_of(v), side_of(w)),
                (Some(a), Some(b)) if a == b
            ),
            PairFilter::CrossSide => matches!(
                (side_of(v), side_of(w)),
                (Some(a), Some(b)) if a != b
            ),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub mode: SearchMode,
    pub classes: Vec<String>,
    pub pairs: PairFilter,
    pub p_grid: Vec<String>,
    pub max_vertices: usize,
    pub instances: usize,
    pub seed: u64,
    pub edge_weights: Vec<String>,
    pub vertex_weights: Vec<String>,
    /// Instances whose doubled graph has at most this many free edges are
    /// checked exactly; larger ones are sampled.
    pub exact_cap: usize,
    pub mc_samples: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            mode: SearchMode::ClassSweep,
            classes: Vec::new(),
            pairs: PairFilter::All,
            p_grid: vec!["1/4".into(), "1/2".into(), "3/4".into()],
            max_vertices: 4,
            instances: 100,
            seed: 0,
            edge_weights: vec!["0".into(), "1/4".into(), "1/2".into(), "3/4".into()],
            vertex_weights: vec!["0".into(), "1/2".into(), "1".into()],
            exact_cap: 24,
            mc_samples: 200_000,
        }
    }
}

impl SearchConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let config: SearchConfig =
            serde_json::from_str(s).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p_grid.is_empty() {
            return Err(Error::InvalidConfig("p_grid must not be empty".into()));
        }
        for p in &self.p_grid {
            p.parse::<Prob>()?;
        }
        for w in self.edge_weights.iter().chain(&self.vertex_weights) {
            w.parse::<Prob>()?;
        }
        match self.mode {
            SearchMode::ClassSweep => {
                if self.classes.is_empty() {
                    return Err(Error::InvalidConfig(
                        "class-sweep mode needs at least one class".into(),
                    ));
                }
                for c in &self.classes {
                    ClassKind::parse(c)?;
                }
            }
            SearchMode::Random => {
                if self.instances == 0 {
                    return Err(Error::InvalidConfig("instances must be at least 1".into()));
                }
                if self.max_vertices == 0 {
                    return Err(Error::InvalidConfig("max_vertices must be at least 1".into()));
                }
                if self.edge_weights.is_empty() || self.vertex_weights.is_empty() {
                    return Err(Error::InvalidConfig("weight palettes must not be empty".into()));
                }
            }
            SearchMode::Exhaustive => {
                if self.max_vertices == 0 || self.max_vertices > 7 {
                    return Err(Error::InvalidConfig(
                        "exhaustive mode supports 1 to 7 vertices".into(),
                    ));
                }
            }
        }
        if self.mc_samples == 0 {
            return Err(Error::InvalidConfig("mc_samples must be at least 1".into()));
        }
        Ok(())
    }

    fn grid(&self) -> Result<Vec<Prob>> {
        self.p_grid.iter().map(|p| p.parse()).collect()
    }
}

/// One checked (instance, pair, p) with the gap that was computed for it.
#[derive(Clone, Debug, Serialize)]
pub struct GapRecord {
    pub instance: String,
    pub v: String,
    pub w: String,
    pub p: String,
    pub engine: String,
    pub gap: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
}

/// A negative gap confirmed by the exact engine, with its recomputation
/// transcript and the offending graph.
#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub record: GapRecord,
    pub exact_gap: String,
    pub same_layer: String,
    pub other_layer: String,
    pub configurations: u64,
    pub graph: serde_json::Value,
}

/// Which of the two verified hypotheses cover a pair, recorded per grid
/// value because a weight of 1 can void the adjacency-based one.
#[derive(Clone, Debug, Serialize)]
pub struct PairSummary {
    pub v: String,
    pub w: String,
    pub p: String,
    pub side: String,
    pub twin: bool,
    pub adjacent_symmetry: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassSummary {
    pub class: String,
    pub vertices: usize,
    pub checks: usize,
    pub pairs: Vec<PairSummary>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchReport {
    pub mode: SearchMode,
    pub instances_checked: usize,
    pub instances_by_size: BTreeMap<usize, usize>,
    pub checks: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_exact_gap: Option<GapRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_sampled_gap: Option<GapRecord>,
    pub violations: Vec<Violation>,
    /// How many sampled checks tripped the sigma threshold, including ones
    /// later cleared by exact recomputation.
    pub flags: usize,
    /// Sampled flags on instances too large for exact recomputation.
    pub unresolved_flags: Vec<GapRecord>,
    pub class_summaries: Vec<ClassSummary>,
    pub skipped: Vec<String>,
    pub pass: bool,
}

#[derive(Default)]
struct InstanceOutcome {
    size: usize,
    checks: usize,
    min_exact: Option<(BigRational, GapRecord)>,
    min_sampled: Option<(f64, GapRecord)>,
    violations: Vec<Violation>,
    flags: usize,
    unresolved: Vec<GapRecord>,
    summary: Option<ClassSummary>,
    skipped: Vec<String>,
}

fn fnv1a64(s: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in s.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn free_edge_count(g: &WeightedGraph) -> usize {
    g.edges()
        .iter()
        .filter(|e| !e.weight.is_zero() && !e.weight.is_one())
        .count()
}

fn check_pair(
    g: &WeightedGraph,
    instance: &str,
    v: &str,
    w: &str,
    p_label: &str,
    config: &SearchConfig,
    out: &mut InstanceOutcome,
) -> Result<()> {
    let b = build_bunkbed(g);
    let free = free_edge_count(b.graph());
    out.checks += 1;
    if free <= config.exact_cap {
        let res = match bunkbed_gap(&b, v, w, &ExactOptions::with_cap(config.exact_cap)) {
            Ok(res) => res,
            Err(e @ Error::CapExceeded { .. }) => {
                out.skipped.push(format!("{instance} pair ({v},{w}) p={p_label}: {e}"));
                return Ok(());
            }
            Err(e) => return Err(e),
        };
        let record = GapRecord {
            instance: instance.to_string(),
            v: v.to_string(),
            w: w.to_string(),
            p: p_label.to_string(),
            engine: "exact".to_string(),
            gap: res.gap.to_string(),
            stderr: None,
        };
        if out.min_exact.as_ref().is_none_or(|(m, _)| res.gap < *m) {
            out.min_exact = Some((res.gap.clone(), record.clone()));
        }
        if res.gap < BigRational::zero() {
            out.violations.push(Violation {
                exact_gap: res.gap.to_string(),
                same_layer: res.same_layer.to_string(),
                other_layer: res.other_layer.to_string(),
                configurations: res.configurations,
                graph: g.to_json_value(),
                record,
            });
        }
    } else {
        let seed = config.seed ^ fnv1a64(&format!("{instance}|{v}|{w}|{p_label}"));
        let res = mc_bunkbed_gap(&b, v, w, config.mc_samples, seed)?;
        let record = GapRecord {
            instance: instance.to_string(),
            v: v.to_string(),
            w: w.to_string(),
            p: p_label.to_string(),
            engine: "mc".to_string(),
            gap: res.gap.to_string(),
            stderr: Some(res.paired_stderr),
        };
        if out
            .min_sampled
            .as_ref()
            .is_none_or(|(m, _)| res.gap < *m)
        {
            out.min_sampled = Some((res.gap, record.clone()));
        }
        if res.gap < -MC_FLAG_SIGMA * res.paired_stderr {
            out.flags += 1;
            let recheck = ExactOptions::default();
            if free <= recheck.cap {
                let exact = bunkbed_gap(&b, v, w, &recheck)?;
                if exact.gap < BigRational::zero() {
                    out.violations.push(Violation {
                        exact_gap: exact.gap.to_string(),
                        same_layer: exact.same_layer.to_string(),
                        other_layer: exact.other_layer.to_string(),
                        configurations: exact.configurations,
                        graph: g.to_json_value(),
                        record,
                    });
                }
            } else {
                out.unresolved.push(record);
            }
        }
    }
    Ok(())
}

fn vertex_pairs(g: &WeightedGraph, filter: PairFilter) -> Vec<(String, String)> {
    let names = g.vertex_names();
    let mut pairs = Vec::new();
    for i in 0..names.len() {
        for j in i + 1..names.len() {
            if filter.admits(&names[i], &names[j]) {
                pairs.push((names[i].clone(), names[j].clone()));
            }
        }
    }
    pairs
}

fn side_label(v: &str, w: &str) -> String {
    match (side_of(v), side_of(w)) {
        (Some(a), Some(b)) if a == b => "same-side".to_string(),
        (Some(_), Some(_)) => "cross-side".to_string(),
        _ => "unlabeled".to_string(),
    }
}

fn class_instance(config: &SearchConfig, class: &str) -> Result<InstanceOutcome> {
    let kind = ClassKind::parse(class)?;
    let grid = config.grid()?;
    let mut out = InstanceOutcome::default();
    let mut pair_rows = Vec::new();
    let mut vertices = 0;
    for p in &grid {
        let g = generate(&ClassSpec::uniform(kind.clone(), p.clone()))?;
        vertices = g.vertex_count();
        let instance = format!("{kind}@p={p}");
        for (v, w) in vertex_pairs(&g, config.pairs) {
            pair_rows.push(PairSummary {
                side: side_label(&v, &w),
                twin: twin_hypothesis(&g, &v, &w).unwrap_or(false),
                adjacent_symmetry: adjacent_symmetry_hypothesis(&g, &v, &w).unwrap_or(false)
                    || adjacent_symmetry_hypothesis(&g, &w, &v).unwrap_or(false),
                v: v.clone(),
                w: w.clone(),
                p: p.to_string(),
            });
            check_pair(&g, &instance, &v, &w, &p.to_string(), config, &mut out)?;
        }
    }
    out.size = vertices;
    out.summary = Some(ClassSummary {
        class: class.to_string(),
        vertices,
        checks: out.checks,
        pairs: pair_rows,
    });
    Ok(out)
}

fn random_instance(config: &SearchConfig, index: usize) -> Result<InstanceOutcome> {
    let edge_palette: Vec<Prob> = config
        .edge_weights
        .iter()
        .map(|w| w.parse())
        .collect::<Result<_>>()?;
    let vertex_palette: Vec<Prob> = config
        .vertex_weights
        .iter()
        .map(|w| w.parse())
        .collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(index as u64 + 1);
    let n = 1 + (rng.next_u64() % config.max_vertices as u64) as usize;
    let names = letter_names(n);
    let mut g = WeightedGraph::new(names.clone())?;
    for i in 0..n {
        for j in i + 1..n {
            let w = &edge_palette[(rng.next_u64() % edge_palette.len() as u64) as usize];
            if !w.is_zero() {
                g.add_edge(&names[i], &names[j], w.clone())?;
            }
        }
    }
    for name in &names {
        let w = &vertex_palette[(rng.next_u64() % vertex_palette.len() as u64) as usize];
        g.set_vertex_weight(name, w.clone())?;
    }
    let mut out = InstanceOutcome {
        size: n,
        ..InstanceOutcome::default()
    };
    let instance = format!("random#{index}/n={n}");
    for (v, w) in vertex_pairs(&g, config.pairs) {
        check_pair(&g, &instance, &v, &w, "-", config, &mut out)?;
    }
    Ok(out)
}

/// All edge masks on `n` labeled vertices that are the smallest mask in
/// their permutation orbit, one per isomorphism class.
fn canonical_masks(n: usize) -> Vec<u64> {
    let bits = n * (n - 1) / 2;
    let slot = |i: usize, j: usize| -> usize {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        b * (b - 1) / 2 + a
    };
    let mut perms: Vec<Vec<usize>> = Vec::new();
    let mut idx: Vec<usize> = (0..n).collect();
    heap_permutations(&mut idx, &mut perms);
    let mut out = Vec::new();
    'mask: for mask in 0u64..1 << bits {
        for perm in &perms {
            let mut image = 0u64;
            for i in 0..n {
                for j in i + 1..n {
                    if mask >> slot(i, j) & 1 == 1 {
                        image |= 1 << slot(perm[i], perm[j]);
                    }
                }
            }
            if image < mask {
                continue 'mask;
            }
        }
        out.push(mask);
    }
    out
}

fn heap_permutations(idx: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    fn rec(k: usize, idx: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == 1 {
            out.push(idx.clone());
            return;
        }
        for i in 0..k {
            rec(k - 1, idx, out);
            if k % 2 == 0 {
                idx.swap(i, k - 1);
            } else {
                idx.swap(0, k - 1);
            }
        }
    }
    rec(idx.len(), idx, out);
}

fn exhaustive_instance(config: &SearchConfig, n: usize, mask: u64) -> Result<InstanceOutcome> {
    let grid = config.grid()?;
    let names = letter_names(n);
    let slot = |i: usize, j: usize| -> usize { j * (j - 1) / 2 + i };
    let mut out = InstanceOutcome {
        size: n,
        ..InstanceOutcome::default()
    };
    for p in &grid {
        let mut g = WeightedGraph::new(names.clone())?;
        for j in 0..n {
            for i in 0..j {
                if mask >> slot(i, j) & 1 == 1 {
                    g.add_edge(&names[i], &names[j], p.clone())?;
                }
            }
        }
        for name in &names {
            g.set_vertex_weight(name, p.clone())?;
        }
        let instance = format!("exhaustive/n={n}/mask={mask}@p={p}");
        for (v, w) in vertex_pairs(&g, config.pairs) {
            check_pair(&g, &instance, &v, &w, &p.to_string(), config, &mut out)?;
        }
    }
    Ok(out)
}

fn merge(mode: SearchMode, outcomes: Vec<InstanceOutcome>) -> SearchReport {
    let mut report = SearchReport {
        mode,
        instances_checked: outcomes.len(),
        instances_by_size: BTreeMap::new(),
        checks: 0,
        min_exact_gap: None,
        min_sampled_gap: None,
        violations: Vec::new(),
        flags: 0,
        unresolved_flags: Vec::new(),
        class_summaries: Vec::new(),
        skipped: Vec::new(),
        pass: true,
    };
    let mut min_exact: Option<BigRational> = None;
    let mut min_sampled: Option<f64> = None;
    for o in outcomes {
        *report.instances_by_size.entry(o.size).or_default() += 1;
        report.checks += o.checks;
        if let Some((value, record)) = o.min_exact {
            if min_exact.as_ref().is_none_or(|m| value < *m) {
                min_exact = Some(value);
                report.min_exact_gap = Some(record);
            }
        }
        if let Some((value, record)) = o.min_sampled {
            if min_sampled.is_none_or(|m| value < m) {
                min_sampled = Some(value);
                report.min_sampled_gap = Some(record);
            }
        }
        report.violations.extend(o.violations);
        report.flags += o.flags;
        report.unresolved_flags.extend(o.unresolved);
        report.class_summaries.extend(o.summary);
        report.skipped.extend(o.skipped);
    }
    report.pass = report.violations.is_empty();
    report
}

/// Sweeps one graph class across the grid, recording for every pair which
/// verified hypothesis covers it and that the gap is nonnegative.
pub fn verify_class(config: &SearchConfig, class: &str) -> Result<SearchReport> {
    Ok(merge(
        SearchMode::ClassSweep,
        vec![class_instance(config, class)?],
    ))
}

pub fn class_sweep(config: &SearchConfig) -> Result<SearchReport> {
    let outcomes: Vec<InstanceOutcome> = config
        .classes
        .par_iter()
        .map(|c| class_instance(config, c))
        .collect::<Result<_>>()?;
    Ok(merge(SearchMode::ClassSweep, outcomes))
}

/// Draws random weighted graphs from the palettes and checks every pair,
/// exactly when small enough, otherwise by sampling with exact
/// re-verification of flagged cases. Deterministic for a given config.
pub fn search_random(config: &SearchConfig) -> Result<SearchReport> {
    let outcomes: Vec<InstanceOutcome> = (0..config.instances)
        .into_par_iter()
        .map(|i| random_instance(config, i))
        .collect::<Result<_>>()?;
    Ok(merge(SearchMode::Random, outcomes))
}

/// Checks every isomorphism class of simple graphs on 1 to `max_vertices`
/// vertices, all pairs, every grid value, with exact gaps only.
pub fn search_exhaustive(config: &SearchConfig) -> Result<SearchReport> {
    let mut keys: Vec<(usize, u64)> = Vec::new();
    for n in 1..=config.max_vertices {
        for mask in canonical_masks(n) {
            keys.push((n, mask));
        }
    }
    let outcomes: Vec<InstanceOutcome> = keys
        .par_iter()
        .map(|&(n, mask)| exhaustive_instance(config, n, mask))
        .collect::<Result<_>>()?;
    Ok(merge(SearchMode::Exhaustive, outcomes))
}

pub fn run_search(config: &SearchConfig) -> Result<SearchReport> {
    config.validate()?;
    match config.mode {
        SearchMode::ClassSweep => class_sweep(config),
        SearchMode::Random => search_random(config),
        SearchMode::Exhaustive => search_exhaustive(config),
    }
}
