//! Command-line driver: generate graphs, query the exact and sampling
//! engines, certify gap polynomials, and run the proof pipelines and the
//! search harness. Exit codes: 0 clean, 1 when a report fails or a
//! violation is found, 2 on usage or input errors.

use std::fmt::Display;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use num_traits::Signed;
use serde_json::json;

use bunkbed_core::cluster::{
    verify_adjacent_decomposition, verify_twin_decomposition, AssertionRecord, ClusterOptions,
    Relation,
};
use bunkbed_core::exact::{
    bunkbed_gap, event_probability, ConnectivityEvent, EdgeStates, ExactOptions,
};
use bunkbed_core::generate::{generate, ClassKind, ClassSpec};
use bunkbed_core::graph::{build_bunkbed, WeightedGraph};
use bunkbed_core::mc::mc_bunkbed_gap;
use bunkbed_core::poly::{gap_polynomial, nonneg_on_unit_interval, NonnegVerdict, PolyOptions};
use bunkbed_core::search::{run_search, verify_class, SearchConfig, SearchReport};
use bunkbed_core::Prob;

#[derive(Parser)]
#[command(
    name = "bunkbed",
    version,
    about = "Exact and sampled verification of the bunkbed inequality on weighted graphs"
)]
struct Cli {
    /// Worker threads for the parallel engines (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output format; csv is available for check-class and class sweeps.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the output document to this file instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Args)]
#[command(group(ArgGroup::new("input").required(true).args(["graph", "class"])))]
struct InputArgs {
    /// Path to a graph JSON file.
    #[arg(long, value_name = "FILE")]
    graph: Option<PathBuf>,
    /// Class spec such as complete:4 or complete_minus_clique:5,2.
    #[arg(long, value_name = "SPEC")]
    class: Option<String>,
    /// Uniform weight for class instances; ignored with --graph.
    #[arg(long, default_value = "1/2", value_name = "RAT")]
    p: String,
}

#[derive(Args)]
struct PairArgs {
    /// Base vertex v.
    #[arg(long, value_name = "ID")]
    v: String,
    /// Base vertex w.
    #[arg(long, value_name = "ID")]
    w: String,
}

#[derive(Subcommand)]
enum Command {
    /// Emit a graph as JSON.
    Gen {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Exact probability of a connectivity event on the given graph.
    Exact {
        #[command(flatten)]
        input: InputArgs,
        /// Pair that must be connected, as "u,v"; repeatable.
        #[arg(long, value_name = "U,V")]
        connect: Vec<String>,
        /// Pair that must be separated, as "u,v"; repeatable.
        #[arg(long, value_name = "U,V")]
        separate: Vec<String>,
        /// Maximum number of free edges the engine may enumerate.
        #[arg(long)]
        cap: Option<usize>,
    },
    /// Exact bunkbed gap P(v- <-> w-) - P(v- <-> w+) of the doubled graph.
    Gap {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        cap: Option<usize>,
    },
    /// Sampled bunkbed gap with a paired estimator.
    Mc {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        pair: PairArgs,
        /// Number of sampled configurations.
        #[arg(long, default_value_t = 200_000)]
        samples: u64,
        /// Base seed for the deterministic sampler.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Gap polynomial in the shared edge weight, with a sign certificate.
    Poly {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        cap: Option<usize>,
    },
    /// Re-derive the adjacent-pair proof identities on an instance.
    #[command(name = "verify-thm1")]
    VerifyThm1 {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        cap: Option<usize>,
    },
    /// Re-derive the twin-pair proof identities on an instance.
    #[command(name = "verify-thm2")]
    VerifyThm2 {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        cap: Option<usize>,
    },
    /// Sweep one generated class over a weight grid.
    CheckClass {
        /// Class spec such as complete:4.
        #[arg(long, value_name = "SPEC")]
        class: String,
        /// Comma-separated weights to sweep; default 1/4,1/2,3/4.
        #[arg(long = "p-grid", value_name = "RAT,RAT,...")]
        p_grid: Option<String>,
        /// Samples per check when an instance is too large for enumeration.
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Free-edge budget for the exact engine.
        #[arg(long)]
        cap: Option<usize>,
        /// Restrict checked pairs: all, same-side, or cross-side.
        #[arg(long, value_name = "FILTER")]
        pairs: Option<String>,
    },
    /// Run the counterexample search harness.
    Search {
        /// JSON config file; replaces the individual flags.
        #[arg(long, value_name = "FILE", conflicts_with_all = [
            "mode", "class", "p_grid", "samples", "seed", "cap",
            "max_vertices", "instances", "pairs",
        ])]
        config: Option<PathBuf>,
        /// class-sweep, random, or exhaustive (the default is random).
        #[arg(long)]
        mode: Option<String>,
        /// Class spec for class-sweep mode; repeatable.
        #[arg(long, value_name = "SPEC")]
        class: Vec<String>,
        #[arg(long = "p-grid", value_name = "RAT,RAT,...")]
        p_grid: Option<String>,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        cap: Option<usize>,
        /// Largest base graph in random or exhaustive mode.
        #[arg(long = "max-vertices")]
        max_vertices: Option<usize>,
        /// Number of random instances.
        #[arg(long)]
        instances: Option<usize>,
        #[arg(long, value_name = "FILTER")]
        pairs: Option<String>,
    },
}

/// A completed run: whether every assertion held and no violation surfaced.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Outcome {
    Clean,
    Flagged,
}

/// A usage or input problem; the run produced no result document.
struct Failure(String);

fn input_err(e: impl Display) -> Failure {
    Failure(e.to_string())
}

fn exit_for(result: &Result<Outcome, Failure>) -> u8 {
    match result {
        Ok(Outcome::Clean) => 0,
        Ok(Outcome::Flagged) => 1,
        Err(_) => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(workers) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = run(&cli);
    if let Err(Failure(message)) = &result {
        eprintln!("error: {message}");
    }
    ExitCode::from(exit_for(&result))
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    let (document, outcome) = match &cli.command {
        Command::Gen { input } => run_gen(cli, input)?,
        Command::Exact {
            input,
            connect,
            separate,
            cap,
        } => run_exact(cli, input, connect, separate, *cap)?,
        Command::Gap { input, pair, cap } => run_gap(cli, input, pair, *cap)?,
        Command::Mc {
            input,
            pair,
            samples,
            seed,
        } => run_mc(cli, input, pair, *samples, *seed)?,
        Command::Poly { input, pair, cap } => run_poly(cli, input, pair, *cap)?,
        Command::VerifyThm1 { input, pair, cap } => {
            let g = load_input(input)?;
            let report = verify_adjacent_decomposition(&g, &pair.v, &pair.w, &cluster_options(*cap))
                .map_err(input_err)?;
            let outcome = outcome_of(report.pass);
            let doc = match cli.format {
                Format::Json => pretty(serde_json::to_value(&report).map_err(input_err)?),
                Format::Text => assertions_text(&report.assertions, report.pass),
                Format::Csv => return Err(no_csv()),
            };
            (doc, outcome)
        }
        Command::VerifyThm2 { input, pair, cap } => {
            let g = load_input(input)?;
            let report = verify_twin_decomposition(&g, &pair.v, &pair.w, &cluster_options(*cap))
                .map_err(input_err)?;
            let outcome = outcome_of(report.pass);
            let doc = match cli.format {
                Format::Json => pretty(serde_json::to_value(&report).map_err(input_err)?),
                Format::Text => assertions_text(&report.assertions, report.pass),
                Format::Csv => return Err(no_csv()),
            };
            (doc, outcome)
        }
        Command::CheckClass {
            class,
            p_grid,
            samples,
            seed,
            cap,
            pairs,
        } => {
            let config = build_config(
                "class-sweep",
                std::slice::from_ref(class),
                p_grid.as_deref(),
                *samples,
                *seed,
                *cap,
                None,
                None,
                pairs.as_deref(),
            )?;
            let report = verify_class(&config, class).map_err(input_err)?;
            render_report(cli, &report)?
        }
        Command::Search {
            config,
            mode,
            class,
            p_grid,
            samples,
            seed,
            cap,
            max_vertices,
            instances,
            pairs,
        } => {
            let config = match config {
                Some(path) => {
                    let text = fs::read_to_string(path)
                        .map_err(|e| Failure(format!("{}: {e}", path.display())))?;
                    SearchConfig::from_json_str(&text).map_err(input_err)?
                }
                None => build_config(
                    mode.as_deref().unwrap_or("random"),
                    class,
                    p_grid.as_deref(),
                    *samples,
                    *seed,
                    *cap,
                    *max_vertices,
                    *instances,
                    pairs.as_deref(),
                )?,
            };
            let report = run_search(&config).map_err(input_err)?;
            render_report(cli, &report)?
        }
    };
    emit(cli, &document)?;
    Ok(outcome)
}

fn outcome_of(pass: bool) -> Outcome {
    if pass {
        Outcome::Clean
    } else {
        Outcome::Flagged
    }
}

fn no_csv() -> Failure {
    Failure("csv output is only available for check-class and class-sweep search".to_string())
}

fn pretty(value: serde_json::Value) -> String {
    serde_json::to_string_pretty(&value).expect("documents serialize")
}

fn load_input(input: &InputArgs) -> Result<WeightedGraph, Failure> {
    match (&input.graph, &input.class) {
        (Some(path), None) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure(format!("{}: {e}", path.display())))?;
            WeightedGraph::from_json_str(&text)
                .map_err(|e| Failure(format!("{}: {e}", path.display())))
        }
        (None, Some(spec)) => {
            let kind = ClassKind::parse(spec).map_err(input_err)?;
            let p: Prob = input.p.parse().map_err(input_err)?;
            generate(&ClassSpec::uniform(kind, p)).map_err(input_err)
        }
        _ => unreachable!("clap enforces exactly one input source"),
    }
}

fn cluster_options(cap: Option<usize>) -> ClusterOptions {
    let mut opts = ClusterOptions::default();
    if let Some(cap) = cap {
        opts.exact = ExactOptions::with_cap(cap);
        opts.partition_cap = cap;
    }
    opts
}

fn exact_options(cap: Option<usize>) -> ExactOptions {
    match cap {
        Some(cap) => ExactOptions::with_cap(cap),
        None => ExactOptions::default(),
    }
}

fn parse_pair(text: &str) -> Result<(String, String), Failure> {
    match text.split_once(',') {
        Some((u, v)) if !u.trim().is_empty() && !v.trim().is_empty() => {
            Ok((u.trim().to_string(), v.trim().to_string()))
        }
        _ => Err(Failure(format!(
            "pair {text:?} is not of the form \"u,v\""
        ))),
    }
}

fn run_gen(cli: &Cli, input: &InputArgs) -> Result<(String, Outcome), Failure> {
    let g = load_input(input)?;
    let doc = match cli.format {
        Format::Json => g.to_json_string(),
        Format::Text => {
            let mut lines = vec![format!(
                "{} vertices, {} edges",
                g.vertex_count(),
                g.edge_count()
            )];
            for e in g.edges() {
                lines.push(format!(
                    "  {} -- {}  p = {}",
                    g.vertex_name(e.u),
                    g.vertex_name(e.v),
                    e.weight
                ));
            }
            for name in g.vertex_names() {
                lines.push(format!(
                    "  {name}  vertical p = {}",
                    g.vertex_weight(name).map_err(input_err)?
                ));
            }
            lines.join("\n")
        }
        Format::Csv => return Err(no_csv()),
    };
    Ok((doc, Outcome::Clean))
}

fn run_exact(
    cli: &Cli,
    input: &InputArgs,
    connect: &[String],
    separate: &[String],
    cap: Option<usize>,
) -> Result<(String, Outcome), Failure> {
    let g = load_input(input)?;
    let mut event = ConnectivityEvent::new();
    for pair in connect {
        let (u, v) = parse_pair(pair)?;
        event = event.connect(&u, &v);
    }
    for pair in separate {
        let (u, v) = parse_pair(pair)?;
        event = event.separate(&u, &v);
    }
    let res = event_probability(&g, &event, &EdgeStates::new(), &exact_options(cap))
        .map_err(input_err)?;
    let doc = match cli.format {
        Format::Json => pretty(json!({
            "probability": res.probability.to_string(),
            "configurations": res.configurations,
            "engine": "exact",
        })),
        Format::Text => format!(
            "probability = {} ({} configurations)",
            res.probability, res.configurations
        ),
        Format::Csv => return Err(no_csv()),
    };
    Ok((doc, Outcome::Clean))
}

fn run_gap(
    cli: &Cli,
    input: &InputArgs,
    pair: &PairArgs,
    cap: Option<usize>,
) -> Result<(String, Outcome), Failure> {
    let g = load_input(input)?;
    let b = build_bunkbed(&g);
    let res = bunkbed_gap(&b, &pair.v, &pair.w, &exact_options(cap)).map_err(input_err)?;
    let outcome = if res.gap.is_negative() {
        Outcome::Flagged
    } else {
        Outcome::Clean
    };
    let doc = match cli.format {
        Format::Json => pretty(json!({
            "v": pair.v,
            "w": pair.w,
            "same_layer": res.same_layer.to_string(),
            "other_layer": res.other_layer.to_string(),
            "gap": res.gap.to_string(),
            "configurations": res.configurations,
            "engine": "exact",
        })),
        Format::Text => format!(
            "P({0}- <-> {1}-) = {2}\nP({0}- <-> {1}+) = {3}\ngap = {4} ({5} configurations)",
            pair.v, pair.w, res.same_layer, res.other_layer, res.gap, res.configurations
        ),
        Format::Csv => return Err(no_csv()),
    };
    Ok((doc, outcome))
}

fn run_mc(
    cli: &Cli,
    input: &InputArgs,
    pair: &PairArgs,
    samples: u64,
    seed: u64,
) -> Result<(String, Outcome), Failure> {
    let g = load_input(input)?;
    let b = build_bunkbed(&g);
    let res = mc_bunkbed_gap(&b, &pair.v, &pair.w, samples, seed).map_err(input_err)?;
    let outcome = if res.gap < -4.0 * res.paired_stderr {
        Outcome::Flagged
    } else {
        Outcome::Clean
    };
    let doc = match cli.format {
        Format::Json => pretty(json!({
            "v": pair.v,
            "w": pair.w,
            "same_layer": {"estimate": res.same_layer.estimate, "stderr": res.same_layer.stderr},
            "other_layer": {"estimate": res.other_layer.estimate, "stderr": res.other_layer.stderr},
            "gap": res.gap,
            "paired_stderr": res.paired_stderr,
            "samples": samples,
            "seed": seed,
            "engine": "mc",
        })),
        Format::Text => format!(
            "P({0}- <-> {1}-) ~ {2:.6} +/- {3:.6}\nP({0}- <-> {1}+) ~ {4:.6} +/- {5:.6}\ngap ~ {6:.6} +/- {7:.6} ({8} samples, seed {9})",
            pair.v,
            pair.w,
            res.same_layer.estimate,
            res.same_layer.stderr,
            res.other_layer.estimate,
            res.other_layer.stderr,
            res.gap,
            res.paired_stderr,
            samples,
            seed
        ),
        Format::Csv => return Err(no_csv()),
    };
    Ok((doc, outcome))
}

fn run_poly(
    cli: &Cli,
    input: &InputArgs,
    pair: &PairArgs,
    cap: Option<usize>,
) -> Result<(String, Outcome), Failure> {
    let g = load_input(input)?;
    let opts = match cap {
        Some(cap) => PolyOptions::with_cap(cap),
        None => PolyOptions::default(),
    };
    let poly = gap_polynomial(&g, &pair.v, &pair.w, &opts).map_err(input_err)?;
    let verdict = nonneg_on_unit_interval(&poly);
    let outcome = match verdict {
        NonnegVerdict::Nonnegative => Outcome::Clean,
        _ => Outcome::Flagged,
    };
    let verdict_value = match &verdict {
        NonnegVerdict::Nonnegative => json!("nonnegative"),
        NonnegVerdict::NegativeAt(q) => json!({"negative_at": q.to_string()}),
        NonnegVerdict::Inconclusive => json!("inconclusive"),
    };
    let doc = match cli.format {
        Format::Json => pretty(json!({
            "v": pair.v,
            "w": pair.w,
            "degree": poly.degree(),
            "coefficients": poly.coefficient_strings(),
            "verdict": verdict_value,
        })),
        Format::Text => {
            let verdict_text = match &verdict {
                NonnegVerdict::Nonnegative => "nonnegative on [0,1]".to_string(),
                NonnegVerdict::NegativeAt(q) => format!("negative at {q}"),
                NonnegVerdict::Inconclusive => "inconclusive".to_string(),
            };
            format!(
                "degree {}; coefficients [{}]; {}",
                poly.degree(),
                poly.coefficient_strings().join(", "),
                verdict_text
            )
        }
        Format::Csv => return Err(no_csv()),
    };
    Ok((doc, outcome))
}

fn relation_symbol(relation: &Relation) -> &'static str {
    match relation {
        Relation::Eq => "==",
        Relation::Ge => ">=",
        Relation::ApproxEq => "~=",
        Relation::ApproxGe => ">~",
    }
}

fn assertions_text(assertions: &[AssertionRecord], pass: bool) -> String {
    let mut lines = Vec::with_capacity(assertions.len() + 1);
    for a in assertions {
        lines.push(format!(
            "{} {}: {} {} {}",
            if a.pass { "ok  " } else { "FAIL" },
            a.name,
            a.lhs,
            relation_symbol(&a.relation),
            a.rhs
        ));
    }
    lines.push(if pass { "pass".to_string() } else { "FAIL".to_string() });
    lines.join("\n")
}

#[allow(clippy::too_many_arguments)]
fn build_config(
    mode: &str,
    classes: &[String],
    p_grid: Option<&str>,
    samples: Option<u64>,
    seed: Option<u64>,
    cap: Option<usize>,
    max_vertices: Option<usize>,
    instances: Option<usize>,
    pairs: Option<&str>,
) -> Result<SearchConfig, Failure> {
    let mut obj = serde_json::Map::new();
    obj.insert("mode".to_string(), json!(mode));
    if !classes.is_empty() {
        obj.insert("classes".to_string(), json!(classes));
    }
    if let Some(grid) = p_grid {
        let values: Vec<&str> = grid.split(',').map(str::trim).collect();
        obj.insert("p_grid".to_string(), json!(values));
    }
    if let Some(samples) = samples {
        obj.insert("mc_samples".to_string(), json!(samples));
    }
    if let Some(seed) = seed {
        obj.insert("seed".to_string(), json!(seed));
    }
    if let Some(cap) = cap {
        obj.insert("exact_cap".to_string(), json!(cap));
    }
    if let Some(n) = max_vertices {
        obj.insert("max_vertices".to_string(), json!(n));
    }
    if let Some(n) = instances {
        obj.insert("instances".to_string(), json!(n));
    }
    if let Some(filter) = pairs {
        obj.insert("pairs".to_string(), json!(filter));
    }
    SearchConfig::from_json_str(&serde_json::Value::Object(obj).to_string()).map_err(input_err)
}

fn render_report(cli: &Cli, report: &SearchReport) -> Result<(String, Outcome), Failure> {
    let outcome = outcome_of(report.pass && report.unresolved_flags.is_empty());
    let doc = match cli.format {
        Format::Json => pretty(serde_json::to_value(report).map_err(input_err)?),
        Format::Csv => {
            if report.class_summaries.is_empty() {
                return Err(Failure(
                    "csv output needs class summaries; this report has none (use json)".to_string(),
                ));
            }
            let mut lines = vec!["class,p,v,w,side,twin,adjacent_symmetry".to_string()];
            for summary in &report.class_summaries {
                for pair in &summary.pairs {
                    lines.push(format!(
                        "{},{},{},{},{},{},{}",
                        summary.class,
                        pair.p,
                        pair.v,
                        pair.w,
                        pair.side,
                        pair.twin,
                        pair.adjacent_symmetry
                    ));
                }
            }
            lines.join("\n")
        }
        Format::Text => {
            let mut lines = vec![
                format!("instances checked: {}", report.instances_checked),
                format!("pair checks: {}", report.checks),
            ];
            if let Some(record) = &report.min_exact_gap {
                lines.push(format!(
                    "smallest exact gap: {} at {} pair {},{} p={}",
                    record.gap, record.instance, record.v, record.w, record.p
                ));
            }
            if let Some(record) = &report.min_sampled_gap {
                lines.push(format!(
                    "smallest sampled gap: {} at {} pair {},{} p={}",
                    record.gap, record.instance, record.v, record.w, record.p
                ));
            }
            lines.push(format!("violations: {}", report.violations.len()));
            lines.push(format!(
                "sigma flags: {} ({} unresolved)",
                report.flags,
                report.unresolved_flags.len()
            ));
            if !report.skipped.is_empty() {
                lines.push(format!("skipped: {}", report.skipped.len()));
            }
            lines.push(if report.pass && report.unresolved_flags.is_empty() {
                "pass".to_string()
            } else {
                "FAIL".to_string()
            });
            lines.join("\n")
        }
    };
    Ok((doc, outcome))
}

fn emit(cli: &Cli, document: &str) -> Result<(), Failure> {
    match &cli.out {
        Some(path) => fs::write(path, format!("{document}\n"))
            .map_err(|e| Failure(format!("{}: {e}", path.display()))),
        None => {
            println!("{document}");
            Ok(())
        }
    }
}
