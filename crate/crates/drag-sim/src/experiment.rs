//! Experiment harness: one configuration in, traces, answers, and a report
//! out.
//!
//! A run is fully determined by its configuration: three seeds fix the
//! topology, the knowledge placement, and the per-query randomness (origin
//! peers and walk decisions), so rerunning a configuration reproduces every
//! output byte for byte. Questions are drawn round-robin from the dataset
//! records; each query enters at a uniformly random origin and gets its own
//! RNG stream derived from the walk seed and the query index, which keeps
//! traces comparable across schemes run under the same seeds.
//!
//! [`run_experiment`] writes four artifacts into the output directory:
//! `traces.jsonl` and `answers.jsonl` (one JSON object per query each),
//! `report.json`, and a one-row `report.csv`. [`run_sweep`] executes a list
//! of configurations (in parallel under the `parallel` feature) and writes
//! one summary CSV with a row per cell; a failing cell becomes an error row
//! and the sweep carries on.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dataset::{self, DatasetError, DatasetRecord};
use crate::knowledge::{OracleIndex, Query, Scorer};
use crate::lm::{LmBackend, LmBackendConfig, LmError};
use crate::metrics::{aggregate, EvalError, MetricsReport, ReportConfig, CSV_HEADER};
use crate::placement::{place_knowledge, snippet_from_record, Placement};
use crate::rag::{answer_query_crag, answer_query_norag, Answer, CragVariant, World};
use crate::routing::{Scheme, SearchParams, SearchTrace};
use crate::topology::{PeerId, Topology, TopologyError};

/// Relevance scoring backend selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScorerKind {
    Oracle,
    Lexical,
    Embedding,
}

impl ScorerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScorerKind::Oracle => "oracle",
            ScorerKind::Lexical => "lexical",
            ScorerKind::Embedding => "embedding",
        }
    }
}

impl fmt::Display for ScorerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScorerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "oracle" => Ok(ScorerKind::Oracle),
            "lexical" => Ok(ScorerKind::Lexical),
            "embedding" => Ok(ScorerKind::Embedding),
            other => Err(format!(
                "unknown scorer {other:?}, expected oracle, lexical, or embedding"
            )),
        }
    }
}

/// Everything a run needs. See the module docs for the seed split.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    pub scheme: Scheme,
    pub peers: usize,
    pub connectivity: usize,
    pub k: usize,
    pub h_max: usize,
    pub theta: f64,
    pub placement: Placement,
    pub crag_variant: CragVariant,
    pub crag_top_j: usize,
    pub scorer: ScorerKind,
    pub lm: LmBackendConfig,
    pub queries: usize,
    pub seed_topology: u64,
    pub seed_placement: u64,
    pub seed_walk: u64,
    pub normalize_tokens: bool,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: PathBuf::from("data/demo.jsonl"),
            scheme: Scheme::Tarw,
            peers: 20,
            connectivity: 4,
            k: 4,
            h_max: 6,
            theta: 0.8,
            placement: Placement::Uniform,
            crag_variant: CragVariant::Full,
            crag_top_j: 1,
            scorer: ScorerKind::Oracle,
            lm: LmBackendConfig::default(),
            queries: 1000,
            seed_topology: 1,
            seed_placement: 2,
            seed_walk: 3,
            normalize_tokens: true,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let params = self.search_params();
        params.validate().map_err(HarnessError::Config)?;
        if self.queries == 0 {
            return Err(HarnessError::Config("queries must be at least 1".into()));
        }
        if self.peers == 0 {
            return Err(HarnessError::Config("need at least one peer".into()));
        }
        if self.crag_top_j == 0 {
            return Err(HarnessError::Config("crag_top_j must be at least 1".into()));
        }
        Ok(())
    }

    pub fn search_params(&self) -> SearchParams {
        SearchParams { scheme: self.scheme, h_max: self.h_max, k: self.k, theta: self.theta }
    }

    /// Configuration echo embedded in reports and sweep rows.
    pub fn report_config(&self) -> ReportConfig {
        ReportConfig {
            dataset: self.dataset.display().to_string(),
            llm: self.lm.describe(),
            peers: self.peers,
            connectivity: self.connectivity,
            k: self.k,
            h_max: self.h_max,
            theta: self.theta,
            placement: self.placement.to_string(),
            crag_variant: self.crag_variant.to_string(),
            seed_topology: self.seed_topology,
            seed_placement: self.seed_placement,
            seed_walk: self.seed_walk,
        }
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("bad configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Lm(#[from] LmError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Complete output of one run, in query execution order.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub traces: Vec<SearchTrace>,
    pub answers: Vec<Answer>,
    pub report: MetricsReport,
}

/// Derives a per-query seed from the walk seed; splitmix64 finalizer.
fn mix_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Reserved stream index for origin sampling.
const ORIGIN_STREAM: u64 = u64::MAX;

fn build_scorer(kind: ScorerKind, records: &[DatasetRecord]) -> Scorer {
    match kind {
        ScorerKind::Oracle => Scorer::Oracle(OracleIndex::from_records(records)),
        ScorerKind::Lexical => Scorer::Lexical,
        ScorerKind::Embedding => Scorer::Embedding,
    }
}

/// Issues every query of a run against one resolver, collecting traces,
/// answers, and the gold answers keyed by query id.
fn drive_queries<F>(
    cfg: &ExperimentConfig,
    records: &[DatasetRecord],
    mut answer_one: F,
) -> (Vec<SearchTrace>, Vec<Answer>, BTreeMap<String, String>)
where
    F: FnMut(&Query, &mut ChaCha8Rng) -> (Answer, SearchTrace),
{
    let mut origin_rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed_walk, ORIGIN_STREAM));
    let mut traces: Vec<SearchTrace> = Vec::with_capacity(cfg.queries);
    let mut answers: Vec<Answer> = Vec::with_capacity(cfg.queries);
    let mut golds: BTreeMap<String, String> = BTreeMap::new();
    for i in 0..cfg.queries {
        let record = &records[i % records.len()];
        let query = Query {
            query_id: format!("q{i:06}"),
            text: record.question.clone(),
            origin: PeerId(origin_rng.random_range(0..cfg.peers)),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed_walk, i as u64));
        let (answer, trace) = answer_one(&query, &mut rng);
        golds.insert(query.query_id.clone(), record.gold_answer.clone());
        answers.push(answer);
        traces.push(trace);
    }
    (traces, answers, golds)
}

/// Runs one configuration against already ingested records. No files are
/// touched; `dataset` and `out_dir` in the configuration only label the
/// report.
pub fn run_experiment_in_memory(
    cfg: &ExperimentConfig,
    records: &[DatasetRecord],
) -> Result<RunArtifacts, HarnessError> {
    cfg.validate()?;
    if records.is_empty() {
        return Err(HarnessError::Config("no dataset records".into()));
    }
    let lm = LmBackend::from_config(&cfg.lm, records)?;
    lm.health_check()?;
    let scorer = build_scorer(cfg.scorer, records);
    let params = cfg.search_params();

    let (traces, answers, golds) = if cfg.scheme.is_search() {
        let topology = Topology::generate_ba(cfg.peers, cfg.connectivity, cfg.seed_topology)?;
        let (stores, _gold_index) =
            place_knowledge(records, &topology, cfg.placement, cfg.seed_placement, &lm);
        let mut world = World::new(topology, stores, scorer, lm);
        drive_queries(cfg, records, |query, rng| world.answer_query(query, &params, rng))
    } else if cfg.scheme == Scheme::Crag {
        let kb = crate::rag::build_central_kb(
            records.iter().map(|r| snippet_from_record(r, &lm)),
            cfg.crag_variant,
            cfg.seed_placement,
        );
        drive_queries(cfg, records, |query, _rng| {
            answer_query_crag(query, &kb, &scorer, &lm, cfg.theta, cfg.crag_top_j)
        })
    } else {
        drive_queries(cfg, records, |query, _rng| answer_query_norag(query, &lm))
    };

    let report = aggregate(
        &traces,
        &answers,
        &golds,
        cfg.normalize_tokens,
        cfg.report_config(),
    )?;
    Ok(RunArtifacts { traces, answers, report })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.display().to_string(), source }
}

fn write_jsonl<T: serde::Serialize>(path: &Path, items: &[T]) -> Result<(), HarnessError> {
    let mut out = Vec::new();
    for item in items {
        let line = serde_json::to_string(item).expect("artifact serialization cannot fail");
        out.extend_from_slice(line.as_bytes());
        out.push(b'\n');
    }
    fs::write(path, out).map_err(io_err(path))
}

/// Writes traces.jsonl, answers.jsonl, report.json, and report.csv.
pub fn write_artifacts(artifacts: &RunArtifacts, out_dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    write_jsonl(&out_dir.join("traces.jsonl"), &artifacts.traces)?;
    write_jsonl(&out_dir.join("answers.jsonl"), &artifacts.answers)?;
    let report_path = out_dir.join("report.json");
    let mut report_json = serde_json::to_string_pretty(&artifacts.report)
        .expect("report serialization cannot fail");
    report_json.push('\n');
    fs::write(&report_path, report_json).map_err(io_err(&report_path))?;
    let csv_path = out_dir.join("report.csv");
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(CSV_HEADER).expect("in-memory csv write cannot fail");
    writer
        .write_record(artifacts.report.csv_record())
        .expect("in-memory csv write cannot fail");
    let bytes = writer.into_inner().expect("in-memory csv flush cannot fail");
    fs::write(&csv_path, bytes).map_err(io_err(&csv_path))?;
    Ok(())
}

/// Ingests the configured dataset, runs, and writes all artifacts into
/// `out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunArtifacts, HarnessError> {
    let records = dataset::ingest(&cfg.dataset)?;
    let artifacts = run_experiment_in_memory(cfg, &records)?;
    write_artifacts(&artifacts, &cfg.out_dir)?;
    Ok(artifacts)
}

/// Sweep summary row for a cell that did not complete: configuration echo,
/// blank metric columns, and the error message in the final column.
fn error_row(cfg: &ExperimentConfig, message: &str) -> Vec<String> {
    let c = cfg.report_config();
    let mut row = vec![
        cfg.scheme.to_string(),
        c.dataset,
        c.llm,
        c.peers.to_string(),
        c.connectivity.to_string(),
        c.k.to_string(),
        c.h_max.to_string(),
        c.theta.to_string(),
        c.placement,
        c.crag_variant,
        c.seed_topology.to_string(),
        c.seed_placement.to_string(),
        c.seed_walk.to_string(),
    ];
    row.extend(std::iter::repeat_n(String::new(), 10));
    row.push(message.to_string());
    row
}

#[cfg(feature = "parallel")]
fn map_cells<F>(cells: &[ExperimentConfig], run_cell: F) -> Vec<Vec<String>>
where
    F: Fn(&ExperimentConfig) -> Vec<String> + Send + Sync,
{
    use rayon::prelude::*;
    cells.par_iter().map(run_cell).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_cells<F>(cells: &[ExperimentConfig], run_cell: F) -> Vec<Vec<String>>
where
    F: Fn(&ExperimentConfig) -> Vec<String> + Send + Sync,
{
    cells.iter().map(run_cell).collect()
}

/// Runs every cell and writes one summary CSV to `out_path`. Cells run in
/// parallel when the `parallel` feature is on; row order always follows
/// cell order. A failing cell contributes an error row instead of sinking
/// the sweep.
pub fn run_sweep(cells: &[ExperimentConfig], out_path: &Path) -> Result<(), HarnessError> {
    let mut datasets: BTreeMap<&Path, Result<Vec<DatasetRecord>, String>> = BTreeMap::new();
    for cell in cells {
        datasets
            .entry(cell.dataset.as_path())
            .or_insert_with(|| dataset::ingest(&cell.dataset).map_err(|e| e.to_string()));
    }
    let rows = map_cells(cells, |cell| match &datasets[cell.dataset.as_path()] {
        Ok(records) => match run_experiment_in_memory(cell, records) {
            Ok(artifacts) => artifacts.report.csv_record(),
            Err(e) => error_row(cell, &e.to_string()),
        },
        Err(message) => error_row(cell, message),
    });
    if let Some(parent) = out_path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
    }
    let file = fs::File::create(out_path).map_err(io_err(out_path))?;
    let mut writer = csv::Writer::from_writer(std::io::BufWriter::new(file));
    writer
        .write_record(CSV_HEADER)
        .map_err(|e| HarnessError::Config(format!("csv write failed: {e}")))?;
    for row in rows {
        writer
            .write_record(&row)
            .map_err(|e| HarnessError::Config(format!("csv write failed: {e}")))?;
    }
    writer
        .flush()
        .map_err(|source| HarnessError::Io { path: out_path.display().to_string(), source })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::synthetic_records;
    use crate::lm::LmKind;

    fn base_cfg(scheme: Scheme, queries: usize) -> ExperimentConfig {
        ExperimentConfig {
            scheme,
            peers: 10,
            connectivity: 2,
            queries,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn flooding_the_whole_overlay_always_hits() {
        let records = synthetic_records(40, 8);
        let cfg = ExperimentConfig { h_max: 10, ..base_cfg(Scheme::Fl, 200) };
        let artifacts = run_experiment_in_memory(&cfg, &records).unwrap();
        assert_eq!(artifacts.report.hit_rate, 1.0);
        assert_eq!(artifacts.report.em, 1.0);
        assert_eq!(artifacts.traces.len(), 200);
    }

    #[test]
    fn norag_never_answers_correctly() {
        let records = synthetic_records(10, 2);
        let cfg = base_cfg(Scheme::Norag, 50);
        let artifacts = run_experiment_in_memory(&cfg, &records).unwrap();
        assert_eq!(artifacts.report.em, 0.0);
        assert_eq!(artifacts.report.hit_rate, 0.0);
        assert_eq!(artifacts.report.avg_messages, 0.0);
        assert!(artifacts.answers.iter().all(|a| a.used_snippets.is_empty()));
    }

    #[test]
    fn crag_full_answers_every_question() {
        let records = synthetic_records(25, 5);
        let cfg = base_cfg(Scheme::Crag, 100);
        let artifacts = run_experiment_in_memory(&cfg, &records).unwrap();
        assert_eq!(artifacts.report.hit_rate, 1.0);
        assert_eq!(artifacts.report.em, 1.0);
        assert_eq!(artifacts.report.avg_messages, 0.0);
    }

    #[test]
    fn reruns_are_bit_identical() {
        let records = synthetic_records(30, 6);
        let cfg = base_cfg(Scheme::Tarw, 120);
        let a = run_experiment_in_memory(&cfg, &records).unwrap();
        let b = run_experiment_in_memory(&cfg, &records).unwrap();
        let ser = |artifacts: &RunArtifacts| {
            (
                serde_json::to_string(&artifacts.traces).unwrap(),
                serde_json::to_string(&artifacts.answers).unwrap(),
                serde_json::to_string(&artifacts.report).unwrap(),
            )
        };
        assert_eq!(ser(&a), ser(&b));
    }

    #[test]
    fn walk_seed_actually_changes_walks() {
        let records = synthetic_records(30, 6);
        let cfg = base_cfg(Scheme::Rw, 120);
        let a = run_experiment_in_memory(&cfg, &records).unwrap();
        let b = run_experiment_in_memory(
            &ExperimentConfig { seed_walk: 99, ..cfg },
            &records,
        )
        .unwrap();
        assert_ne!(
            serde_json::to_string(&a.traces).unwrap(),
            serde_json::to_string(&b.traces).unwrap()
        );
    }

    #[test]
    fn unreachable_http_backend_fails_before_any_query() {
        let records = synthetic_records(5, 1);
        let mut cfg = base_cfg(Scheme::Tarw, 10);
        cfg.lm = LmBackendConfig {
            kind: LmKind::Http,
            base_url: "http://127.0.0.1:9".into(),
            ..LmBackendConfig::default()
        };
        match run_experiment_in_memory(&cfg, &records) {
            Err(HarnessError::Lm(LmError::Transport { .. })) => {}
            other => panic!("expected transport failure, got {other:?}"),
        }
    }

    #[test]
    fn config_validation_catches_nonsense() {
        let records = synthetic_records(5, 1);
        let cfg = ExperimentConfig { k: 0, ..base_cfg(Scheme::Tarw, 10) };
        assert!(matches!(
            run_experiment_in_memory(&cfg, &records),
            Err(HarnessError::Config(_))
        ));
        let cfg = ExperimentConfig { queries: 0, ..base_cfg(Scheme::Tarw, 10) };
        assert!(matches!(
            run_experiment_in_memory(&cfg, &records),
            Err(HarnessError::Config(_))
        ));
        let cfg = ExperimentConfig { theta: 1.5, ..base_cfg(Scheme::Tarw, 10) };
        assert!(matches!(
            run_experiment_in_memory(&cfg, &records),
            Err(HarnessError::Config(_))
        ));
    }

    #[test]
    fn run_writes_all_four_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let dataset_path = dir.path().join("data.jsonl");
        let records = synthetic_records(12, 3);
        let lines: Vec<String> =
            records.iter().map(|r| serde_json::to_string(r).unwrap()).collect();
        fs::write(&dataset_path, lines.join("\n") + "\n").unwrap();
        let cfg = ExperimentConfig {
            dataset: dataset_path,
            out_dir: dir.path().join("out"),
            ..base_cfg(Scheme::Tarw, 30)
        };
        let artifacts = run_experiment(&cfg).unwrap();
        for name in ["traces.jsonl", "answers.jsonl", "report.json", "report.csv"] {
            let path = cfg.out_dir.join(name);
            assert!(path.is_file(), "missing {name}");
        }
        let trace_lines =
            fs::read_to_string(cfg.out_dir.join("traces.jsonl")).unwrap();
        assert_eq!(trace_lines.lines().count(), 30);
        let first: serde_json::Value =
            serde_json::from_str(trace_lines.lines().next().unwrap()).unwrap();
        for field in [
            "query_id",
            "scheme",
            "messages_sent",
            "hops_to_hit",
            "visited",
            "outcome",
            "topic_fallback",
        ] {
            assert!(first.get(field).is_some(), "trace missing {field}");
        }
        let report: MetricsReport = serde_json::from_str(
            &fs::read_to_string(cfg.out_dir.join("report.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(report, artifacts.report);
    }

    #[test]
    fn sweep_writes_one_row_per_cell_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let dataset_path = dir.path().join("data.jsonl");
        let records = synthetic_records(12, 3);
        let lines: Vec<String> =
            records.iter().map(|r| serde_json::to_string(r).unwrap()).collect();
        fs::write(&dataset_path, lines.join("\n") + "\n").unwrap();
        let cells: Vec<ExperimentConfig> = [Scheme::Tarw, Scheme::Rw, Scheme::Fl, Scheme::Norag]
            .into_iter()
            .map(|scheme| ExperimentConfig {
                dataset: dataset_path.clone(),
                ..base_cfg(scheme, 20)
            })
            .collect();
        let out_path = dir.path().join("sweep.csv");
        run_sweep(&cells, &out_path).unwrap();
        let mut reader = csv::Reader::from_path(&out_path).unwrap();
        assert_eq!(
            reader.headers().unwrap().iter().collect::<Vec<_>>(),
            CSV_HEADER.to_vec()
        );
        let rows: Vec<csv::StringRecord> =
            reader.records().map(|r| r.unwrap()).collect();
        assert_eq!(rows.len(), 4);
        let schemes: Vec<&str> = rows.iter().map(|r| r.get(0).unwrap()).collect();
        assert_eq!(schemes, vec!["tarw", "rw", "fl", "norag"]);
        assert!(rows.iter().all(|r| r.get(23).unwrap().is_empty()));
    }

    #[test]
    fn sweep_rows_match_individual_runs() {
        let dir = tempfile::tempdir().unwrap();
        let dataset_path = dir.path().join("data.jsonl");
        let records = synthetic_records(15, 5);
        let lines: Vec<String> =
            records.iter().map(|r| serde_json::to_string(r).unwrap()).collect();
        fs::write(&dataset_path, lines.join("\n") + "\n").unwrap();
        let cells: Vec<ExperimentConfig> = [31u64, 32, 33]
            .into_iter()
            .map(|seed| ExperimentConfig {
                dataset: dataset_path.clone(),
                seed_walk: seed,
                ..base_cfg(Scheme::Tarw, 40)
            })
            .collect();
        let out_path = dir.path().join("sweep.csv");
        run_sweep(&cells, &out_path).unwrap();
        let mut reader = csv::Reader::from_path(&out_path).unwrap();
        let rows: Vec<csv::StringRecord> =
            reader.records().map(|r| r.unwrap()).collect();
        for (cell, row) in cells.iter().zip(&rows) {
            let single = run_experiment_in_memory(cell, &records).unwrap();
            let expect = single.report.csv_record();
            let got: Vec<String> = row.iter().map(str::to_string).collect();
            assert_eq!(got, expect);
        }
    }

    #[test]
    fn sweep_keeps_going_past_a_broken_cell() {
        let dir = tempfile::tempdir().unwrap();
        let dataset_path = dir.path().join("data.jsonl");
        let records = synthetic_records(8, 2);
        let lines: Vec<String> =
            records.iter().map(|r| serde_json::to_string(r).unwrap()).collect();
        fs::write(&dataset_path, lines.join("\n") + "\n").unwrap();
        let good = ExperimentConfig {
            dataset: dataset_path.clone(),
            ..base_cfg(Scheme::Tarw, 10)
        };
        // Connectivity as large as the peer count cannot build an overlay.
        let broken = ExperimentConfig { connectivity: 10, ..good.clone() };
        let missing = ExperimentConfig {
            dataset: dir.path().join("absent.jsonl"),
            ..good.clone()
        };
        let out_path = dir.path().join("sweep.csv");
        run_sweep(&[good, broken, missing], &out_path).unwrap();
        let mut reader = csv::Reader::from_path(&out_path).unwrap();
        let rows: Vec<csv::StringRecord> =
            reader.records().map(|r| r.unwrap()).collect();
        assert_eq!(rows.len(), 3);
        assert!(rows[0].get(23).unwrap().is_empty());
        assert!(rows[1].get(23).unwrap().contains("n=10"));
        assert!(!rows[2].get(23).unwrap().is_empty());
        assert_eq!(rows[1].get(14).unwrap(), "");
    }

    #[test]
    fn empty_sweep_still_writes_a_header() {
        let dir = tempfile::tempdir().unwrap();
        let out_path = dir.path().join("sweep.csv");
        run_sweep(&[], &out_path).unwrap();
        let text = fs::read_to_string(&out_path).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("scheme,"));
    }
}
