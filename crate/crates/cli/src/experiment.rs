//! Experiment orchestration: build the data and model once, then run every
//! configured engine over per-seed schedules, optionally across worker
//! threads, and emit records, aggregates, and a JSON summary.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use graphcp_core::engines::{evaluate_sequence, EngineConfig, EngineKind, SequenceOutcome};
use graphcp_core::eval::{
    aggregate_csv_row, avg_set_size, empirical_coverage, record_csv_row, singleton_hit_ratio,
    AGGREGATE_CSV_HEADER, RECORD_CSV_HEADER,
};
use graphcp_core::generators::sbm_homophilous;
use graphcp_core::graph::Graph;
use graphcp_core::model::{train, ProbSource};
use graphcp_core::rng::substream;
use graphcp_core::sequence::{edge_sequence, node_sequence, GraphView, SequenceKind};
use serde::Serialize;

use crate::config::{DataSource, ExperimentConfig};
use crate::external::FileProbSource;
use crate::ingest::load_graph;

/// Per-engine aggregate over the successful seeds.
#[derive(Debug, Clone, Serialize)]
pub struct EngineSummary {
    pub sequences: usize,
    pub mean_coverage: f64,
    pub std_coverage: f64,
    pub mean_deviation_pct: f64,
    pub avg_set_size: f64,
    pub singleton_hit: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inapplicable_fraction: Option<f64>,
}

/// The JSON summary: resolved config echo plus per-engine aggregates.
#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub config: ExperimentConfig,
    pub engines: BTreeMap<String, EngineSummary>,
    pub failed_seeds: Vec<(u64, String)>,
}

struct SeedResult {
    outcomes: Vec<(EngineKind, SequenceOutcome)>,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)).sqrt()
}

/// Stratified pinned split: `per_class` training nodes per class plus
/// `extra` validation nodes; the training nodes come first in the result.
pub fn stratified_pinned(graph: &Graph, per_class: usize, extra: usize, seed: u64) -> Vec<u32> {
    let k = graph.num_classes();
    let mut pinned = Vec::new();
    let mut taken = vec![false; graph.num_nodes()];
    for c in 0..k {
        let mut members: Vec<u32> = (0..graph.num_nodes() as u32)
            .filter(|&v| graph.label(v) as usize == c)
            .collect();
        rand::seq::SliceRandom::shuffle(&mut members[..], &mut substream(seed, &[c as u64]));
        for &v in members.iter().take(per_class) {
            pinned.push(v);
            taken[v as usize] = true;
        }
    }
    let mut rest: Vec<u32> = (0..graph.num_nodes() as u32)
        .filter(|&v| !taken[v as usize])
        .collect();
    rand::seq::SliceRandom::shuffle(&mut rest[..], &mut substream(seed, &[0xFF]));
    pinned.extend(rest.into_iter().take(extra));
    pinned
}

fn run_seed(
    graph: &Graph,
    pinned: &[u32],
    source: &(dyn ProbSource + Sync),
    config: &ExperimentConfig,
    seed: u64,
) -> Result<SeedResult> {
    let mut rng = substream(seed, &[0x5E]);
    let schedule = match config.sequence {
        SequenceKind::NodeInductive => {
            node_sequence(graph, pinned, config.calibration_size, &mut rng)?
        }
        SequenceKind::EdgeInductive => {
            edge_sequence(graph, pinned, config.calibration_size, &mut rng)?
        }
    };
    let policy = config.policy.resolve(schedule.len());
    let mut outcomes = Vec::new();
    for &engine in &config.engines {
        let engine_config = EngineConfig {
            engine,
            alpha: config.alpha,
            score: config.score,
            naps_k: config.naps_k,
            vote_k: config.vote_k,
            vote_subgraph_fraction: config.vote_subgraph_fraction,
            vote_combine: config.vote_combine,
            seed,
        };
        let outcome = evaluate_sequence(graph, &schedule, source, &engine_config, &policy)
            .with_context(|| format!("engine {} on seed {seed}", engine.name()))?;
        outcomes.push((engine, outcome));
    }
    Ok(SeedResult { outcomes })
}

/// Run the whole experiment. Failed seeds are reported and skipped; the run
/// fails only when every seed fails.
pub fn run_experiment(
    config: &ExperimentConfig,
    workers: usize,
    out_override: Option<PathBuf>,
) -> Result<RunSummary> {
    config.validate()?;

    let (graph, file_scores_dir) = match &config.data {
        DataSource::Synthetic {
            nodes,
            classes,
            p_in,
            p_out,
            feat_dim,
            feat_separation,
            graph_seed,
        } => {
            let mut rng = substream(*graph_seed, &[0x6A]);
            let graph = sbm_homophilous(
                *nodes,
                *classes,
                *p_in,
                *p_out,
                *feat_dim,
                *feat_separation,
                &mut rng,
            )?;
            (graph, None)
        }
        DataSource::Files {
            edges,
            features,
            labels,
            scores_dir,
        } => {
            let (graph, cleanup) = load_graph(edges, features, labels)?;
            if cleanup.self_loops > 0 || cleanup.duplicates > 0 {
                eprintln!(
                    "warning: dropped {} self-loops and {} duplicate edges",
                    cleanup.self_loops, cleanup.duplicates
                );
            }
            (graph, scores_dir.clone())
        }
    };

    let pinned = stratified_pinned(
        &graph,
        config.model.train_per_class,
        config.model.val_nodes,
        config.model.split_seed,
    );
    let train_count = config.model.train_per_class * graph.num_classes();

    let model;
    let file_source;
    let source: &(dyn ProbSource + Sync) = match file_scores_dir {
        Some(dir) => {
            file_source = FileProbSource::new(dir);
            &file_source
        }
        None => {
            let g0 = GraphView::induced(&graph, &pinned, 0)?;
            let train_nodes: Vec<u32> = pinned[..train_count.min(pinned.len())].to_vec();
            model = train(&g0, &train_nodes, &config.model.train_config())?.classifier;
            &model
        }
    };

    // seeds run across worker threads in contiguous chunks; results are
    // collected in seed order so emission is independent of the worker count
    let workers = workers.max(1).min(config.seeds.len());
    let chunk = config.seeds.len().div_ceil(workers);
    let results: Vec<(u64, Result<SeedResult>)> = std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for piece in config.seeds.chunks(chunk) {
            let graph = &graph;
            let pinned = &pinned;
            handles.push(scope.spawn(move || {
                piece
                    .iter()
                    .map(|&seed| (seed, run_seed(graph, pinned, source, config, seed)))
                    .collect::<Vec<_>>()
            }));
        }
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    });

    let mut seed_results = Vec::new();
    let mut failed_seeds = Vec::new();
    for (seed, result) in results {
        match result {
            Ok(r) => seed_results.push(r),
            Err(e) => {
                eprintln!("seed {seed} failed: {e:#}");
                failed_seeds.push((seed, format!("{e:#}")));
            }
        }
    }
    if seed_results.is_empty() {
        bail!("all {} seeds failed", config.seeds.len());
    }

    // per-engine aggregates over per-sequence metrics
    let mut engines = BTreeMap::new();
    for &engine in &config.engines {
        let mut coverages = Vec::new();
        let mut deviations = Vec::new();
        let mut sizes = Vec::new();
        let mut hits = Vec::new();
        let mut inapplicable = Vec::new();
        for sr in &seed_results {
            for (kind, outcome) in &sr.outcomes {
                if *kind != engine || outcome.records.is_empty() {
                    continue;
                }
                let cov = empirical_coverage(&outcome.records)?;
                coverages.push(cov);
                deviations.push((cov - (1.0 - config.alpha)).abs() * 100.0);
                sizes.push(avg_set_size(&outcome.records)?);
                hits.push(singleton_hit_ratio(&outcome.records)?);
                inapplicable.push(outcome.inapplicable_fraction());
            }
        }
        if coverages.is_empty() {
            continue;
        }
        engines.insert(
            engine.name().to_string(),
            EngineSummary {
                sequences: coverages.len(),
                mean_coverage: mean(&coverages),
                std_coverage: std_dev(&coverages),
                mean_deviation_pct: mean(&deviations),
                avg_set_size: mean(&sizes),
                singleton_hit: mean(&hits),
                inapplicable_fraction: (engine == EngineKind::Naps)
                    .then(|| mean(&inapplicable)),
            },
        );
    }

    let mut echo = config.clone();
    if let Some(out) = &out_override {
        echo.output_dir = Some(out.clone());
    }
    let summary = RunSummary {
        config: echo,
        engines,
        failed_seeds,
    };

    if let Some(dir) = summary.config.output_dir.clone() {
        emit_outputs(&dir, &seed_results, &summary)?;
    }
    Ok(summary)
}

fn emit_outputs(dir: &Path, seed_results: &[SeedResult], summary: &RunSummary) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut records = String::from(RECORD_CSV_HEADER);
    records.push('\n');
    let mut aggregates = String::from(AGGREGATE_CSV_HEADER);
    aggregates.push('\n');
    for sr in seed_results {
        for (_, outcome) in &sr.outcomes {
            for r in &outcome.records {
                records.push_str(&record_csv_row(r));
                records.push('\n');
            }
            for a in &outcome.timeline {
                aggregates.push_str(&aggregate_csv_row(a));
                aggregates.push('\n');
            }
        }
    }
    fs::write(dir.join("records.csv"), records).context("writing records.csv")?;
    fs::write(dir.join("aggregates.csv"), aggregates).context("writing aggregates.csv")?;
    let json = serde_json::to_string_pretty(summary)?;
    fs::write(dir.join("summary.json"), json).context("writing summary.json")?;
    Ok(())
}
