//! `gsum`: summarize attributed graphs, sparsify summaries to a byte
//! budget, answer queries from summaries, and drive evaluation sweeps.
//!
//! Exit codes: 0 success, 1 usage, 2 I/O, 3 validation.

mod grid;
mod manifest;

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::rngs::StdRng;
use rand::SeedableRng;

use gsum_core::eval::{format_table, make_report, reports_to_csv, run_sweep};
use gsum_core::query::{
    adjacency_query, attribute_query, attribute_query_deterministic, centrality_query,
    degree_query, triangle_density_error, triangle_query,
};
use gsum_core::score::ScoreMode;
use gsum_core::sketch::SketchPolicy;
use gsum_core::sparsify::RankingKey;
use gsum_core::summarize::{summarize, SamplePolicy, SummarizerConfig};
use gsum_core::summary::Summary;
use gsum_core::{Error, Graph, Result, VertexId};

use manifest::RunManifest;

#[derive(Parser)]
#[command(name = "gsum", version, about = "Lossy summarization of attributed graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a summary with k supernodes (optionally sparsified to a byte
    /// budget) and write it with an evaluation report.
    Summarize(SummarizeArgs),
    /// Answer queries from a summary file, optionally with error columns
    /// against the original graph.
    Query(QueryArgs),
    /// Sweep a grid of configurations with repeats and emit a report table.
    Eval(EvalArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Exact,
    Sketch,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SketchPolicyArg {
    /// Keep neighbor sketches exact through signed corrections.
    Signed,
    /// Merge sketches by addition only and accept drift.
    Drift,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RankKeyArg {
    /// Order deletions by the exact l1 RE change.
    TrueDelta,
    /// Order by the conventional 2(pi - 1)e key.
    Printed,
}

#[derive(Args)]
struct SummarizeArgs {
    /// Edge-list file ('#' comments, whitespace-separated labels).
    #[arg(long)]
    input: PathBuf,
    /// Attribute TSV (vertex-label <TAB> attribute-string).
    #[arg(long)]
    attrs: Option<PathBuf>,
    /// Target supernode count.
    #[arg(long)]
    k: u32,
    /// Structure/attribute trade-off in [0, 1]; 1 = structure only.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Candidate sample-size policy: logn | 5logn | log2n | sqrtn.
    #[arg(long, default_value = "5logn")]
    sample: String,
    #[arg(long, value_enum, default_value_t = ModeArg::Sketch)]
    mode: ModeArg,
    /// Count-min sketch width (columns).
    #[arg(long, default_value_t = 200)]
    width: usize,
    /// Count-min sketch depth (rows).
    #[arg(long, default_value_t = 2)]
    depth: usize,
    #[arg(long, value_enum, default_value_t = SketchPolicyArg::Signed)]
    sketch_policy: SketchPolicyArg,
    /// Sparsify the finished summary down to this many bytes.
    #[arg(long)]
    target_bytes: Option<u64>,
    #[arg(long, value_enum, default_value_t = RankKeyArg::TrueDelta)]
    rank_key: RankKeyArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Summary output path, or '-' for stdout.
    #[arg(long)]
    out: String,
    /// Report path; defaults to <out>.report.json when writing to a file.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Emit one JSON line per merge iteration to this path ('-' for
    /// stdout).
    #[arg(long)]
    trace: Option<String>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    Degree,
    Centrality,
    Attribute,
    Adjacency,
    Triangles,
}

#[derive(Args)]
struct QueryArgs {
    /// Summary file produced by `gsum summarize`.
    #[arg(long)]
    summary: PathBuf,
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Comma-separated vertices for node queries. Dense indices, or
    /// original labels when --graph is given.
    #[arg(long)]
    nodes: Option<String>,
    /// Comma-separated u:v pairs for adjacency queries.
    #[arg(long)]
    pairs: Option<String>,
    /// Original graph for ground-truth error columns.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Attribute TSV for the original graph (attribute ground truth).
    #[arg(long)]
    attrs: Option<PathBuf>,
    /// Answer attribute queries with the majority class instead of
    /// sampling.
    #[arg(long)]
    deterministic: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON-lines output path, '-' for stdout.
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    attrs: Option<PathBuf>,
    /// Inline grid: `k=100,500 s=logn,5logn alpha=1 mode=sketch w=200 d=2`,
    /// or @FILE containing the same syntax.
    #[arg(long)]
    grid: String,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "-")]
    out: String,
    /// csv | json | table
    #[arg(long, default_value = "csv")]
    format: String,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                std::process::exit(0);
            }
            eprintln!("{e}");
            std::process::exit(1);
        }
    };
    let outcome = match cli.command {
        Command::Summarize(args) => cmd_summarize(args),
        Command::Query(args) => cmd_query(args),
        Command::Eval(args) => cmd_eval(args),
    };
    if let Err(e) = outcome {
        eprintln!("gsum: {e}");
        let code = match e {
            Error::Io(_) => 2,
            Error::Parse { .. } | Error::Invalid(_) | Error::Format(_) => 3,
        };
        std::process::exit(code);
    }
}

fn load_graph(input: &Path, attrs: Option<&Path>) -> Result<Graph> {
    let mut g = Graph::load_edge_list(File::open(input)?)?;
    if let Some(attrs) = attrs {
        g.load_attributes(File::open(attrs)?)?;
    }
    Ok(g)
}

fn open_sink(path: &str) -> Result<Box<dyn Write>> {
    if path == "-" {
        Ok(Box::new(std::io::stdout().lock()))
    } else {
        Ok(Box::new(File::create(path)?))
    }
}

fn dataset_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn cmd_summarize(args: SummarizeArgs) -> Result<()> {
    let graph = load_graph(&args.input, args.attrs.as_deref())?;
    let mut config = SummarizerConfig::new(args.k);
    config.alpha = args.alpha;
    config.sample_policy = SamplePolicy::parse(&args.sample)?;
    config.mode = match args.mode {
        ModeArg::Exact => ScoreMode::Exact,
        ModeArg::Sketch => ScoreMode::Sketch,
    };
    config.sketch_width = args.width;
    config.sketch_depth = args.depth;
    config.sketch_policy = match args.sketch_policy {
        SketchPolicyArg::Signed => SketchPolicy::SignedCorrection,
        SketchPolicyArg::Drift => SketchPolicy::Drift,
    };
    config.target_size_bits = args.target_bytes.map(|b| b * 8);
    config.sparsify_ranking = match args.rank_key {
        RankKeyArg::TrueDelta => RankingKey::TrueDelta,
        RankKeyArg::Printed => RankingKey::Printed,
    };
    config.seed = args.seed;

    let mut manifest = RunManifest::new(
        "summarize",
        args.seed,
        serde_json::json!({
            "k": args.k,
            "alpha": args.alpha,
            "sample": args.sample,
            "mode": format!("{:?}", args.mode).to_lowercase(),
            "width": args.width,
            "depth": args.depth,
            "sketch_policy": format!("{:?}", args.sketch_policy).to_lowercase(),
            "target_bytes": args.target_bytes,
            "rank_key": format!("{:?}", args.rank_key).to_lowercase(),
        }),
    );
    manifest.add_input(&args.input)?;
    if let Some(attrs) = &args.attrs {
        manifest.add_input(attrs)?;
    }

    let started = std::time::Instant::now();
    let (summary, trace) = summarize(&graph, &config)?;
    let elapsed = started.elapsed().as_secs_f64();

    if let Some(path) = &args.trace {
        let mut sink = open_sink(path)?;
        for rec in &trace.records {
            writeln!(
                sink,
                "{}",
                serde_json::json!({
                    "step": rec.step,
                    "pair": [rec.pair.0, rec.pair.1],
                    "combined": rec.score.combined,
                    "re_component": rec.score.re_component,
                    "attr_component": rec.score.attr_component,
                    "candidates": rec.candidates,
                    "elapsed_nanos": rec.elapsed_nanos,
                })
            )?;
        }
        sink.flush()?;
    }

    let dataset = dataset_id(&args.input);
    let report = make_report(&graph, &dataset, &config, &summary, elapsed)?;

    let manifest_line = manifest.to_json_line();
    let mut sink = open_sink(&args.out)?;
    summary.serialize(&mut sink, Some(&manifest_line))?;
    sink.flush()?;

    let report_json = serde_json::json!({
        "manifest": serde_json::from_str::<serde_json::Value>(&manifest_line).unwrap(),
        "report": report,
    });
    let report_path = match (&args.report, args.out.as_str()) {
        (Some(path), _) => Some(path.clone()),
        (None, "-") => None,
        (None, out) => Some(PathBuf::from(format!("{out}.report.json"))),
    };
    if let Some(path) = report_path {
        let mut f = File::create(&path)?;
        writeln!(f, "{}", serde_json::to_string_pretty(&report_json).unwrap())?;
        eprintln!(
            "gsum: k={} normalized RE {:.4e}, purity {:.3}, {:.1} KB, {:.3}s; report at {}",
            report.k,
            report.normalized_re,
            report.purity,
            report.storage_kb,
            elapsed,
            path.display()
        );
    } else {
        eprintln!(
            "gsum: k={} normalized RE {:.4e}, purity {:.3}, {:.1} KB, {:.3}s",
            report.k, report.normalized_re, report.purity, report.storage_kb, elapsed
        );
    }
    Ok(())
}

fn cmd_query(args: QueryArgs) -> Result<()> {
    let (summary, _manifest) = Summary::deserialize(File::open(&args.summary)?)?;
    let graph = match &args.graph {
        Some(path) => Some(load_graph(path, args.attrs.as_deref())?),
        None => None,
    };
    if let Some(g) = &graph {
        if g.vertex_count() as u32 != summary.vertex_count() {
            return Err(Error::invalid(format!(
                "graph has {} vertices but the summary covers {}",
                g.vertex_count(),
                summary.vertex_count()
            )));
        }
    }
    let resolve = |token: &str| -> Result<VertexId> {
        if let Some(g) = &graph {
            return g
                .vertex_by_label(token)
                .ok_or_else(|| Error::invalid(format!("unknown vertex label {token:?}")));
        }
        let idx: u32 = token
            .parse()
            .map_err(|_| Error::invalid(format!("unknown vertex label {token:?}")))?;
        if idx >= summary.vertex_count() {
            return Err(Error::invalid(format!("unknown vertex label {token:?}")));
        }
        Ok(VertexId(idx))
    };
    let parse_list = |field: &Option<String>, what: &str| -> Result<Vec<String>> {
        field
            .as_deref()
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.split(',').map(|t| t.trim().to_string()).collect())
            .ok_or_else(|| Error::invalid(format!("--{what} required for this query kind")))
    };

    let mut sink = open_sink(&args.out)?;
    let mut emit = |value: serde_json::Value| -> Result<()> {
        writeln!(sink, "{value}")?;
        Ok(())
    };
    match args.kind {
        KindArg::Degree | KindArg::Centrality | KindArg::Attribute => {
            let tokens = parse_list(&args.nodes, "nodes")?;
            let m = summary.original_edge_count();
            let mut rng = StdRng::seed_from_u64(args.seed);
            for token in tokens {
                let v = resolve(&token)?;
                let basis = summary.supernode_of(v);
                let record = match args.kind {
                    KindArg::Degree => {
                        let answer = degree_query(&summary, v);
                        let truth = graph.as_ref().map(|g| g.degree(v) as f64);
                        json_record("degree", &token, answer.into(), truth, basis, |a, t| a - t)
                    }
                    KindArg::Centrality => {
                        let answer = centrality_query(&summary, v, m)?;
                        let truth = graph
                            .as_ref()
                            .map(|g| g.degree(v) as f64 / (2.0 * m as f64));
                        json_record("centrality", &token, answer.into(), truth, basis, |a, t| {
                            a - t
                        })
                    }
                    KindArg::Attribute => {
                        let class = if args.deterministic {
                            attribute_query_deterministic(&summary, v)
                        } else {
                            attribute_query(&summary, v, &mut rng)
                        };
                        let label = summary.attr_labels()[class as usize].clone();
                        let truth = graph.as_ref().map(|g| {
                            g.attributes().label(g.attributes().value(v)).to_string()
                        });
                        let error = truth
                            .as_ref()
                            .map(|t| if *t == label { 0.0 } else { 1.0 });
                        serde_json::json!({
                            "kind": "attribute",
                            "node": token,
                            "answer": label,
                            "truth": truth,
                            "error": error,
                            "basis": [basis],
                        })
                    }
                    _ => unreachable!(),
                };
                emit(record)?;
            }
        }
        KindArg::Adjacency => {
            let tokens = parse_list(&args.pairs, "pairs")?;
            for token in tokens {
                let (a, b) = token
                    .split_once(':')
                    .ok_or_else(|| Error::invalid(format!("pair {token:?} is not u:v")))?;
                let (u, v) = (resolve(a.trim())?, resolve(b.trim())?);
                let answer = adjacency_query(&summary, u, v);
                let truth = graph.as_ref().map(|g| {
                    g.neighbors(u).iter().any(|e| e.to == v) as u8 as f64
                });
                emit(serde_json::json!({
                    "kind": "adjacency",
                    "pair": token,
                    "answer": answer,
                    "truth": truth,
                    "error": truth.map(|t| answer - t),
                    "basis": [summary.supernode_of(u), summary.supernode_of(v)],
                }))?;
            }
        }
        KindArg::Triangles => {
            let answer = triangle_query(&summary);
            let (truth, error) = match &graph {
                Some(g) => (
                    Some(g.count_triangles() as f64),
                    triangle_density_error(&summary, g),
                ),
                None => (None, None),
            };
            emit(serde_json::json!({
                "kind": "triangles",
                "answer": answer,
                "truth": truth,
                "error": error,
                "basis": [],
            }))?;
        }
    }
    sink.flush()?;
    Ok(())
}

fn json_record(
    kind: &str,
    token: &str,
    answer: f64,
    truth: Option<f64>,
    basis: u32,
    err: impl Fn(f64, f64) -> f64,
) -> serde_json::Value {
    serde_json::json!({
        "kind": kind,
        "node": token,
        "answer": answer,
        "truth": truth,
        "error": truth.map(|t| err(answer, t)),
        "basis": [basis],
    })
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let graph = load_graph(&args.input, args.attrs.as_deref())?;
    let spec = if let Some(path) = args.grid.strip_prefix('@') {
        std::fs::read_to_string(path)?
    } else {
        args.grid.clone()
    };
    let configs = grid::parse_grid(&spec, args.seed)?;
    if args.repeats == 0 {
        return Err(Error::invalid("--repeats must be at least 1"));
    }
    let mut manifest = RunManifest::new(
        "eval",
        args.seed,
        serde_json::json!({ "grid": spec.trim(), "repeats": args.repeats }),
    );
    manifest.add_input(&args.input)?;
    if let Some(attrs) = &args.attrs {
        manifest.add_input(attrs)?;
    }

    let dataset = dataset_id(&args.input);
    let points = run_sweep(&graph, &dataset, &configs, args.repeats);
    for point in &points {
        for err in &point.errors {
            eprintln!("gsum: point [{}] failed: {err}", point.config_label);
        }
    }
    let mut sink = open_sink(&args.out)?;
    match args.format.as_str() {
        "csv" => {
            let runs: Vec<_> = points.iter().flat_map(|p| p.runs.clone()).collect();
            write!(sink, "{}", reports_to_csv(&runs))?;
            eprintln!("gsum: manifest {}", manifest.to_json_line());
        }
        "json" => {
            let doc = serde_json::json!({ "manifest": manifest, "points": points });
            writeln!(sink, "{}", serde_json::to_string_pretty(&doc).unwrap())?;
        }
        "table" => {
            let runs: Vec<_> = points.iter().flat_map(|p| p.runs.clone()).collect();
            write!(sink, "{}", format_table(&runs))?;
            for p in &points {
                writeln!(
                    sink,
                    "[{}] mean RE {:.4e} (std {:.1e}), mean purity {:.3}, mean time {:.3}s (std {:.3})",
                    p.config_label,
                    p.mean_normalized_re,
                    p.std_normalized_re,
                    p.mean_purity,
                    p.mean_time_secs,
                    p.std_time_secs
                )?;
            }
            eprintln!("gsum: manifest {}", manifest.to_json_line());
        }
        other => return Err(Error::invalid(format!("unknown format {other:?}"))),
    }
    sink.flush()?;
    Ok(())
}
