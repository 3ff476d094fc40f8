//! Command-line front end: one experiment cell per `run`, a cross-product
//! grid per `sweep`. Settings resolve in three layers: built-in defaults,
//! then an optional TOML config file, then command-line flags.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use drag_sim::experiment::{run_experiment, run_sweep, ExperimentConfig, ScorerKind};
use drag_sim::lm::LmKind;
use drag_sim::placement::Placement;
use drag_sim::rag::CragVariant;
use drag_sim::routing::Scheme;

const SCHEMES: [&str; 5] = ["tarw", "rw", "fl", "crag", "norag"];
const PLACEMENTS: [&str; 2] = ["uniform", "by_topic"];
const CRAG_VARIANTS: [&str; 5] = ["full", "s070", "s050", "t070", "t050"];
const LM_KINDS: [&str; 2] = ["mock", "http"];
const SCORERS: [&str; 3] = ["oracle", "lexical", "embedding"];

#[derive(Parser)]
#[command(
    name = "drag",
    version,
    about = "Deterministic simulator for distributed retrieval-augmented generation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment cell and write traces, answers, and reports.
    Run(RunArgs),
    /// Run every cell of a parameter grid and write one summary CSV.
    Sweep(SweepArgs),
}

/// Flags shared by both subcommands; each overrides the config file.
#[derive(Args)]
struct CommonArgs {
    /// TOML config file applied before any flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset JSONL path.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Search hop budget.
    #[arg(long)]
    h_max: Option<usize>,
    /// Relevance threshold in [0, 1].
    #[arg(long)]
    theta: Option<f64>,
    /// Knowledge placement strategy.
    #[arg(long, value_parser = PLACEMENTS)]
    placement: Option<String>,
    /// Centralized-baseline knowledge subset.
    #[arg(long, value_parser = CRAG_VARIANTS)]
    crag_variant: Option<String>,
    /// Relevance scorer.
    #[arg(long, value_parser = SCORERS)]
    scorer: Option<String>,
    /// Language-model backend.
    #[arg(long, value_parser = LM_KINDS)]
    lm: Option<String>,
    /// Base URL of the HTTP language-model server.
    #[arg(long)]
    lm_url: Option<String>,
    /// Model name passed to the HTTP backend.
    #[arg(long)]
    model: Option<String>,
    /// Overlay seed.
    #[arg(long)]
    seed_topology: Option<u64>,
    /// Placement seed.
    #[arg(long)]
    seed_placement: Option<u64>,
    /// Walk seed.
    #[arg(long)]
    seed_walk: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Score answers on raw whitespace tokens instead of normalized ones.
    #[arg(long)]
    no_normalize: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Search scheme.
    #[arg(long, value_parser = SCHEMES)]
    scheme: Option<String>,
    /// Number of peers.
    #[arg(long)]
    peers: Option<usize>,
    /// Edges added per joining peer.
    #[arg(long)]
    connectivity: Option<usize>,
    /// Walk beam width.
    #[arg(long)]
    k: Option<usize>,
    /// Number of queries to issue.
    #[arg(long)]
    queries: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Search schemes, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = SCHEMES)]
    scheme: Vec<String>,
    /// Peer counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    peers: Vec<usize>,
    /// Connectivity values, comma separated.
    #[arg(long, value_delimiter = ',')]
    connectivity: Vec<usize>,
    /// Beam widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    k: Vec<usize>,
    /// Query counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    queries: Vec<usize>,
}

/// Config file shape: every key optional, unknown keys rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    dataset: Option<PathBuf>,
    scheme: Option<String>,
    peers: Option<usize>,
    connectivity: Option<usize>,
    k: Option<usize>,
    h_max: Option<usize>,
    theta: Option<f64>,
    placement: Option<String>,
    crag_variant: Option<String>,
    crag_top_j: Option<usize>,
    scorer: Option<String>,
    queries: Option<usize>,
    seed_topology: Option<u64>,
    seed_placement: Option<u64>,
    seed_walk: Option<u64>,
    normalize_tokens: Option<bool>,
    out_dir: Option<PathBuf>,
    lm: Option<FileLmConfig>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileLmConfig {
    kind: Option<String>,
    base_url: Option<String>,
    model_name: Option<String>,
    timeout_secs: Option<u64>,
    max_retries: Option<u32>,
    max_topics: Option<usize>,
    mock_seed: Option<u64>,
    topic_prompt: Option<String>,
    answer_prompt: Option<String>,
}

fn parse<T>(what: &str, raw: &str) -> Result<T>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    raw.parse().map_err(|e| anyhow::anyhow!("invalid {what} {raw:?}: {e}"))
}

fn apply_file(cfg: &mut ExperimentConfig, path: &PathBuf) -> Result<()> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    let file: FileConfig = toml::from_str(&text)
        .with_context(|| format!("cannot parse config file {}", path.display()))?;

    if let Some(v) = file.dataset {
        cfg.dataset = v;
    }
    if let Some(v) = file.scheme {
        cfg.scheme = parse::<Scheme>("scheme", &v)?;
    }
    if let Some(v) = file.peers {
        cfg.peers = v;
    }
    if let Some(v) = file.connectivity {
        cfg.connectivity = v;
    }
    if let Some(v) = file.k {
        cfg.k = v;
    }
    if let Some(v) = file.h_max {
        cfg.h_max = v;
    }
    if let Some(v) = file.theta {
        cfg.theta = v;
    }
    if let Some(v) = file.placement {
        cfg.placement = parse::<Placement>("placement", &v)?;
    }
    if let Some(v) = file.crag_variant {
        cfg.crag_variant = parse::<CragVariant>("crag_variant", &v)?;
    }
    if let Some(v) = file.crag_top_j {
        cfg.crag_top_j = v;
    }
    if let Some(v) = file.scorer {
        cfg.scorer = parse::<ScorerKind>("scorer", &v)?;
    }
    if let Some(v) = file.queries {
        cfg.queries = v;
    }
    if let Some(v) = file.seed_topology {
        cfg.seed_topology = v;
    }
    if let Some(v) = file.seed_placement {
        cfg.seed_placement = v;
    }
    if let Some(v) = file.seed_walk {
        cfg.seed_walk = v;
    }
    if let Some(v) = file.normalize_tokens {
        cfg.normalize_tokens = v;
    }
    if let Some(v) = file.out_dir {
        cfg.out_dir = v;
    }
    if let Some(lm) = file.lm {
        if let Some(v) = lm.kind {
            cfg.lm.kind = parse::<LmKind>("lm kind", &v)?;
        }
        if let Some(v) = lm.base_url {
            cfg.lm.base_url = v;
        }
        if let Some(v) = lm.model_name {
            cfg.lm.model_name = v;
        }
        if let Some(v) = lm.timeout_secs {
            cfg.lm.timeout_secs = v;
        }
        if let Some(v) = lm.max_retries {
            cfg.lm.max_retries = v;
        }
        if let Some(v) = lm.max_topics {
            cfg.lm.max_topics = v;
        }
        if let Some(v) = lm.mock_seed {
            cfg.lm.mock_seed = v;
        }
        if let Some(v) = lm.topic_prompt {
            cfg.lm.topic_prompt = v;
        }
        if let Some(v) = lm.answer_prompt {
            cfg.lm.answer_prompt = v;
        }
    }
    Ok(())
}

/// Defaults, then the config file, then shared flags.
fn base_config(common: &CommonArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &common.config {
        apply_file(&mut cfg, path)?;
    }
    if let Some(v) = &common.dataset {
        cfg.dataset = v.clone();
    }
    if let Some(v) = common.h_max {
        cfg.h_max = v;
    }
    if let Some(v) = common.theta {
        cfg.theta = v;
    }
    if let Some(v) = &common.placement {
        cfg.placement = parse::<Placement>("placement", v)?;
    }
    if let Some(v) = &common.crag_variant {
        cfg.crag_variant = parse::<CragVariant>("crag_variant", v)?;
    }
    if let Some(v) = &common.scorer {
        cfg.scorer = parse::<ScorerKind>("scorer", v)?;
    }
    if let Some(v) = &common.lm {
        cfg.lm.kind = parse::<LmKind>("lm kind", v)?;
    }
    if let Some(v) = &common.lm_url {
        cfg.lm.base_url = v.clone();
    }
    if let Some(v) = &common.model {
        cfg.lm.model_name = v.clone();
    }
    if let Some(v) = common.seed_topology {
        cfg.seed_topology = v;
    }
    if let Some(v) = common.seed_placement {
        cfg.seed_placement = v;
    }
    if let Some(v) = common.seed_walk {
        cfg.seed_walk = v;
    }
    if let Some(v) = &common.out_dir {
        cfg.out_dir = v.clone();
    }
    if common.no_normalize {
        cfg.normalize_tokens = false;
    }
    Ok(cfg)
}

fn run(args: &RunArgs) -> Result<()> {
    let mut cfg = base_config(&args.common)?;
    if let Some(v) = &args.scheme {
        cfg.scheme = parse::<Scheme>("scheme", v)?;
    }
    if let Some(v) = args.peers {
        cfg.peers = v;
    }
    if let Some(v) = args.connectivity {
        cfg.connectivity = v;
    }
    if let Some(v) = args.k {
        cfg.k = v;
    }
    if let Some(v) = args.queries {
        cfg.queries = v;
    }

    let artifacts = run_experiment(&cfg)?;
    println!("{}", artifacts.report);
    println!(
        "wrote traces.jsonl, answers.jsonl, report.json, report.csv to {}",
        cfg.out_dir.display()
    );
    Ok(())
}

/// One value per axis falls back to the base config so a sweep with no
/// multi-value flags degenerates to a single cell.
fn axis<T: Clone>(values: &[T], fallback: T) -> Vec<T> {
    if values.is_empty() {
        vec![fallback]
    } else {
        values.to_vec()
    }
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let base = base_config(&args.common)?;
    let schemes = {
        let parsed: Result<Vec<Scheme>> =
            args.scheme.iter().map(|s| parse::<Scheme>("scheme", s)).collect();
        axis(&parsed?, base.scheme)
    };
    let peers = axis(&args.peers, base.peers);
    let connectivity = axis(&args.connectivity, base.connectivity);
    let k = axis(&args.k, base.k);
    let queries = axis(&args.queries, base.queries);

    let mut cells = Vec::new();
    for &scheme in &schemes {
        for &n in &peers {
            for &m in &connectivity {
                for &beam in &k {
                    for &q in &queries {
                        cells.push(ExperimentConfig {
                            scheme,
                            peers: n,
                            connectivity: m,
                            k: beam,
                            queries: q,
                            ..base.clone()
                        });
                    }
                }
            }
        }
    }
    if cells.is_empty() {
        bail!("sweep grid is empty");
    }

    fs::create_dir_all(&base.out_dir)
        .with_context(|| format!("cannot create {}", base.out_dir.display()))?;
    let out_path = base.out_dir.join("sweep.csv");
    run_sweep(&cells, &out_path)?;
    println!("wrote {} sweep rows to {}", cells.len(), out_path.display());
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => run(&args),
        Command::Sweep(args) => sweep(&args),
    }
}
