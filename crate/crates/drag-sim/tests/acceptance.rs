//! Acceptance checklist for the simulator, one numbered gate per test.
//!
//! Each test prints a single `[PASS]`/`[FAIL]` line (visible under
//! `cargo test --test acceptance -- --nocapture`) and then asserts, so a red
//! run always names the gate that failed and the measured value.

use std::fs;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use drag_sim::dataset::synthetic_records;
use drag_sim::experiment::{run_experiment, run_experiment_in_memory, ExperimentConfig};
use drag_sim::knowledge::{OracleIndex, PrivacyPolicy, Query, Scorer};
use drag_sim::lm::{LmBackend, MockLm};
use drag_sim::placement::{place_knowledge, snippet_from_record, Placement};
use drag_sim::rag::{answer_query_crag, build_central_kb, World};
use drag_sim::routing::{
    rw_search, tarw_search, ExpertiseCache, Scheme, SearchContext, SearchParams,
};
use drag_sim::topology::{PeerId, Topology};
use drag_sim::{token_metrics, CragVariant, TokenMetrics};

fn check(label: &str, pass: bool, detail: &str) {
    let status = if pass { "PASS" } else { "FAIL" };
    println!("[{status}] {label}: {detail}");
    assert!(pass, "{label}: {detail}");
}

fn within(label: &str, elapsed: Duration, budget: Duration) {
    check(
        label,
        elapsed <= budget,
        &format!("ran in {:.2}s (budget {:.0}s)", elapsed.as_secs_f64(), budget.as_secs_f64()),
    );
}

/// Shared settings for the 20-peer accuracy gates. The dataset path is an
/// echo label only; records are passed in memory.
fn small_world_cfg(scheme: Scheme) -> ExperimentConfig {
    ExperimentConfig {
        dataset: "synthetic-200x100".into(),
        scheme,
        peers: 20,
        connectivity: 4,
        queries: 2000,
        ..ExperimentConfig::default()
    }
}

/// Shared settings for the 100-peer message-cost gates.
fn large_world_cfg(scheme: Scheme) -> ExperimentConfig {
    ExperimentConfig {
        dataset: "synthetic-200x100".into(),
        scheme,
        peers: 100,
        connectivity: 4,
        queries: 10_000,
        placement: Placement::ByTopic,
        ..ExperimentConfig::default()
    }
}

// --- gate 1: token metrics versus an independent reference ----------------

/// Reference normalization written from scratch: per-char lowercase and
/// punctuation-to-space, manual split, article filter.
fn ref_tokens(text: &str, normalize: bool) -> Vec<String> {
    if !normalize {
        return text.split_whitespace().map(str::to_string).collect();
    }
    let mut cleaned = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            for lc in c.to_lowercase() {
                cleaned.push(lc);
            }
        } else {
            cleaned.push(' ');
        }
    }
    cleaned
        .split(' ')
        .filter(|t| !t.is_empty() && !matches!(*t, "a" | "an" | "the"))
        .map(str::to_string)
        .collect()
}

/// Reference scorer using a quadratic matched-token scan instead of count
/// maps. Formula shapes mirror the public contract so agreement is exact.
fn ref_metrics(prediction: &str, gold: &str, normalize: bool) -> TokenMetrics {
    let pred = ref_tokens(prediction, normalize);
    let gold = ref_tokens(gold, normalize);
    if pred.is_empty() && gold.is_empty() {
        return TokenMetrics { em: 1.0, f1: 1.0, precision: 1.0, recall: 1.0 };
    }
    let mut used = vec![false; gold.len()];
    let mut overlap = 0usize;
    for p in &pred {
        if let Some(j) = (0..gold.len()).find(|&j| !used[j] && gold[j] == *p) {
            used[j] = true;
            overlap += 1;
        }
    }
    let precision = if pred.is_empty() { 0.0 } else { overlap as f64 / pred.len() as f64 };
    let recall = if gold.is_empty() { 0.0 } else { overlap as f64 / gold.len() as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    let em = if pred == gold { 1.0 } else { 0.0 };
    TokenMetrics { em, f1, precision, recall }
}

#[test]
fn a01_token_metrics_match_brute_force_reference_exactly() {
    const VOCAB: [&str; 12] = [
        "The", "a", "an", "Cat", "dog", "42", "x7;", "blue,", "GREEN!", "runs", "paris", "rain",
    ];
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut mismatches = 0usize;
    for _ in 0..10_000 {
        let draw = |rng: &mut ChaCha8Rng| -> String {
            let len = rng.random_range(0..8);
            (0..len)
                .map(|_| VOCAB[rng.random_range(0..VOCAB.len())])
                .collect::<Vec<_>>()
                .join(" ")
        };
        let pred = draw(&mut rng);
        let gold = draw(&mut rng);
        let got = token_metrics(&pred, &gold);
        let want = ref_metrics(&pred, &gold, true);
        if got != want {
            mismatches += 1;
        }
        let got_raw = drag_sim::metrics::token_metrics_with(&pred, &gold, false);
        let want_raw = ref_metrics(&pred, &gold, false);
        if got_raw != want_raw {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    check(
        "01 metric reference agreement",
        mismatches == 0,
        &format!("{mismatches} mismatches over 10000 random pairs (exact f64 equality)"),
    );
    within("01 metric reference agreement (time)", elapsed, Duration::from_secs(5));
}

// --- gates 2-4: hit-rate ordering on the 20-peer world --------------------

#[test]
fn a02_flooding_with_full_hop_radius_hits_every_query() {
    let start = Instant::now();
    let records = synthetic_records(200, 100);
    let cfg = ExperimentConfig { h_max: 20, ..small_world_cfg(Scheme::Fl) };
    let report = run_experiment_in_memory(&cfg, &records).unwrap().report;
    let elapsed = start.elapsed();
    check(
        "02 flooding exhaustiveness",
        report.hit_rate == 1.0,
        &format!("hit_rate={:.4} over {} queries (need exactly 1.0)", report.hit_rate, cfg.queries),
    );
    within("02 flooding exhaustiveness (time)", elapsed, Duration::from_secs(30));
}

#[test]
fn a03_topic_aware_walk_stays_near_exhaustive_hit_rate() {
    let start = Instant::now();
    let records = synthetic_records(200, 100);
    let cfg = small_world_cfg(Scheme::Tarw);
    let report = run_experiment_in_memory(&cfg, &records).unwrap().report;
    let elapsed = start.elapsed();
    check(
        "03 topic-aware walk hit rate",
        report.hit_rate >= 0.95,
        &format!("hit_rate={:.4} (need >= 0.95)", report.hit_rate),
    );
    within("03 topic-aware walk hit rate (time)", elapsed, Duration::from_secs(60));
}

#[test]
fn a04_uniform_walk_collapses_and_trails_topic_aware_walk() {
    let records = synthetic_records(200, 100);
    let rw = run_experiment_in_memory(&small_world_cfg(Scheme::Rw), &records).unwrap().report;
    let tarw = run_experiment_in_memory(&small_world_cfg(Scheme::Tarw), &records).unwrap().report;
    let gap = tarw.hit_rate - rw.hit_rate;
    check(
        "04 uniform walk collapse",
        rw.hit_rate <= 0.50 && gap >= 0.30,
        &format!(
            "rw hit_rate={:.4} (need <= 0.50), topic-aware lead={:.4} (need >= 0.30)",
            rw.hit_rate, gap
        ),
    );
}

// --- gates 5-6: message economy on the 100-peer world ---------------------

#[test]
fn a05_topic_aware_walk_sends_well_under_flooding_message_cost() {
    let start = Instant::now();
    let records = synthetic_records(200, 100);
    let tarw = run_experiment_in_memory(&large_world_cfg(Scheme::Tarw), &records).unwrap().report;
    let fl = run_experiment_in_memory(&large_world_cfg(Scheme::Fl), &records).unwrap().report;
    let ratio = tarw.avg_messages / fl.avg_messages;
    let elapsed = start.elapsed();
    check(
        "05 message economy",
        ratio <= 0.8,
        &format!(
            "avg msgs walk={:.2} flood={:.2} ratio={:.3} (need <= 0.8)",
            tarw.avg_messages, fl.avg_messages, ratio
        ),
    );
    within("05 message economy (time)", elapsed, Duration::from_secs(600));
}

#[test]
fn a06_message_cost_decays_as_caches_warm() {
    let records = synthetic_records(200, 100);
    let artifacts = run_experiment_in_memory(&large_world_cfg(Scheme::Tarw), &records).unwrap();
    let msgs: Vec<f64> = artifacts.traces.iter().map(|t| t.messages_sent as f64).collect();
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let early = mean(&msgs[..500]);
    let late = mean(&msgs[msgs.len() - 500..]);
    check(
        "06 cache warm-up decay",
        early >= 1.1 * late,
        &format!("mean msgs first 500 = {early:.2}, last 500 = {late:.2} (need >= 1.1x)"),
    );
}

// --- gate 7: beam-one cold walk degenerates to the uniform walk -----------

#[test]
fn a07_cold_beam_one_walk_is_bit_identical_to_uniform_walk() {
    let start = Instant::now();
    let records = synthetic_records(60, 12);
    let mut compared = 0usize;
    for world_seed in 0..12u64 {
        let topology = Topology::generate_ba(30, 3, world_seed).unwrap();
        let lm = LmBackend::Mock(MockLm::new(&records, 0));
        let (stores, _) =
            place_knowledge(&records, &topology, Placement::Uniform, world_seed + 1, &lm);
        let scorer = Scorer::Oracle(OracleIndex::from_records(&records));
        let privacy = PrivacyPolicy::default();
        let ctx = SearchContext {
            topology: &topology,
            stores: &stores,
            scorer: &scorer,
            lm: &lm,
            privacy: &privacy,
        };
        for q in 0..20usize {
            let record = &records[q % records.len()];
            let query = Query {
                query_id: format!("q{q:04}"),
                text: record.question.clone(),
                origin: PeerId((q * 7 + world_seed as usize) % 30),
            };
            let walk_seed = 1000 + q as u64;
            let params = SearchParams { scheme: Scheme::Tarw, h_max: 6, k: 1, theta: 0.8 };
            let mut cold = ExpertiseCache::new(query.origin);
            let mut rng = ChaCha8Rng::seed_from_u64(walk_seed);
            let (beam_hit, beam_trace) = tarw_search(&ctx, &query, &params, &mut cold, &mut rng);

            let params = SearchParams { scheme: Scheme::Rw, ..params };
            let mut rng = ChaCha8Rng::seed_from_u64(walk_seed);
            let (rw_hit, rw_trace) = rw_search(&ctx, &query, &params, &mut rng);

            let relabeled = serde_json::to_string(&beam_trace)
                .unwrap()
                .replace("\"scheme\":\"tarw\"", "\"scheme\":\"rw\"");
            assert_eq!(relabeled, serde_json::to_string(&rw_trace).unwrap());
            assert_eq!(
                beam_hit.as_ref().map(|r| (r.peer, r.hops)),
                rw_hit.as_ref().map(|r| (r.peer, r.hops)),
            );
            compared += 1;
        }
    }
    let elapsed = start.elapsed();
    check(
        "07 beam-one degeneracy",
        compared == 240,
        &format!("{compared} trace pairs byte-identical after scheme relabel"),
    );
    within("07 beam-one degeneracy (time)", elapsed, Duration::from_secs(10));
}

// --- gate 8: single-peer world equals the centralized full KB -------------

#[test]
fn a08_single_peer_world_matches_centralized_full_kb() {
    let start = Instant::now();
    let records = synthetic_records(1000, 50);
    let lm = LmBackend::Mock(MockLm::new(&records, 0));
    let scorer = Scorer::Oracle(OracleIndex::from_records(&records));

    let topology = Topology::complete(1);
    let (stores, _) = place_knowledge(&records, &topology, Placement::Uniform, 2, &lm);
    let mut world = World::new(
        topology,
        stores,
        scorer.clone(),
        LmBackend::Mock(MockLm::new(&records, 0)),
    );
    let kb = build_central_kb(
        records.iter().map(|r| snippet_from_record(r, &lm)),
        CragVariant::Full,
        2,
    );

    let params = SearchParams::default();
    for (i, record) in records.iter().enumerate() {
        let query = Query {
            query_id: format!("q{i:06}"),
            text: record.question.clone(),
            origin: PeerId(0),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(i as u64);
        let (local, local_trace) = world.answer_query(&query, &params, &mut rng);
        let (central, central_trace) = answer_query_crag(&query, &kb, &scorer, &lm, 0.8, 1);
        assert_eq!(local.text, central.text, "answer text diverged on {}", query.query_id);
        assert_eq!(local.used_snippets, central.used_snippets);
        assert_eq!(local_trace.messages_sent, 0);
        assert_eq!(central_trace.messages_sent, 0);
    }
    let elapsed = start.elapsed();
    check(
        "08 single-peer consistency",
        true,
        "1000 queries: answers identical to the centralized full KB, zero messages",
    );
    within("08 single-peer consistency (time)", elapsed, Duration::from_secs(10));
}

// --- gate 9: subsampled central KB loses to the distributed corpus --------

#[test]
fn a09_subsampled_central_kb_caps_hit_rate_below_distributed_walk() {
    let records = synthetic_records(200, 100);
    let central_cfg = ExperimentConfig {
        crag_variant: CragVariant::S070,
        ..small_world_cfg(Scheme::Crag)
    };
    let central = run_experiment_in_memory(&central_cfg, &records).unwrap().report;
    let walk = run_experiment_in_memory(&small_world_cfg(Scheme::Tarw), &records).unwrap().report;
    check(
        "09 incomplete central KB ordering",
        central.hit_rate <= 0.72 && walk.hit_rate >= 0.95,
        &format!(
            "central(70% snippets) hit_rate={:.4} (need <= 0.72), distributed walk={:.4} (need >= 0.95)",
            central.hit_rate, walk.hit_rate
        ),
    );
}

// --- gate 10: determinism of the on-disk artifacts ------------------------

#[test]
fn a10_fixed_config_reruns_write_byte_identical_traces() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let dataset_path = dir.path().join("data.jsonl");
    let lines: Vec<String> = synthetic_records(100, 20)
        .iter()
        .map(|r| serde_json::to_string(r).unwrap())
        .collect();
    fs::write(&dataset_path, lines.join("\n") + "\n").unwrap();

    let mut runs = Vec::new();
    for label in ["first", "second"] {
        let cfg = ExperimentConfig {
            dataset: dataset_path.clone(),
            queries: 500,
            out_dir: dir.path().join(label),
            ..small_world_cfg(Scheme::Tarw)
        };
        run_experiment(&cfg).unwrap();
        runs.push(fs::read(cfg.out_dir.join("traces.jsonl")).unwrap());
    }
    let elapsed = start.elapsed();
    check(
        "10 rerun determinism",
        runs[0] == runs[1],
        &format!("traces.jsonl byte-identical across reruns ({} bytes)", runs[0].len()),
    );
    within("10 rerun determinism (time)", elapsed, Duration::from_secs(30));
}

// --- gate 11: generated overlays are structurally sound -------------------

#[test]
fn a11_generated_overlays_are_structurally_sound() {
    let start = Instant::now();
    let mut checked = 0usize;
    for i in 0..50usize {
        let n = 10 + (i * 7) % 140;
        let m = 1 + i % 6;
        let topology = Topology::generate_ba(n, m, i as u64).unwrap();
        assert_eq!(topology.edge_count(), (n - m) * m, "edge count for n={n} m={m} seed={i}");
        for u in topology.peers() {
            let neighbors = topology.neighbors(u).unwrap();
            assert!(!neighbors.contains(&u), "self loop at {u}");
            for &v in neighbors {
                assert!(topology.neighbors(v).unwrap().contains(&u), "asymmetric edge {u}-{v}");
            }
        }
        assert!(topology.is_connected(), "disconnected overlay for n={n} m={m} seed={i}");
        checked += 1;
    }
    let elapsed = start.elapsed();
    check(
        "11 overlay soundness",
        checked == 50,
        &format!("{checked} (n, m, seed) triples: edge count, symmetry, connectivity all hold"),
    );
    within("11 overlay soundness (time)", elapsed, Duration::from_secs(5));
}
