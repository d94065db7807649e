//! Command-line interface: `run` an experiment from a JSON config, `gen` a
//! synthetic dataset to files, or print theoretical coverage `laws` as CSV.

mod config;
mod experiment;
mod external;
mod ingest;

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use graphcp_core::generators::sbm_homophilous;
use graphcp_core::laws::{beta_coverage_cdf, nodeex_coverage_law};
use graphcp_core::rng::substream;

#[derive(Parser)]
#[command(name = "graphcp", about = "Conformal prediction on growing graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config file.
    Run {
        /// Path to the experiment config (JSON).
        config: PathBuf,
        /// Worker threads for concurrent seeds.
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Output directory (overrides the config's output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample a homophilous block-model graph and write it to files.
    Gen {
        #[arg(long)]
        nodes: usize,
        #[arg(long, default_value_t = 4)]
        classes: usize,
        #[arg(long)]
        p_in: f64,
        #[arg(long)]
        p_out: f64,
        #[arg(long, default_value_t = 8)]
        feat_dim: usize,
        #[arg(long, default_value_t = 1.0)]
        feat_sep: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print theoretical coverage curves (Beta and hypergeometric) as CSV.
    Laws {
        #[arg(long)]
        n_cal: usize,
        #[arg(long)]
        m_eval: usize,
        #[arg(long)]
        alpha: f64,
        /// Grid step over the coverage axis.
        #[arg(long, default_value_t = 0.01)]
        step: f64,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            config,
            workers,
            out,
        } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("reading config {}", config.display()))?;
            let parsed: config::ExperimentConfig =
                serde_json::from_str(&text).context("parsing config JSON")?;
            let summary = experiment::run_experiment(&parsed, workers, out)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(())
        }
        Command::Gen {
            nodes,
            classes,
            p_in,
            p_out,
            feat_dim,
            feat_sep,
            seed,
            out,
        } => {
            let mut rng = substream(seed, &[0x6A]);
            let graph =
                sbm_homophilous(nodes, classes, p_in, p_out, feat_dim, feat_sep, &mut rng)?;
            ingest::write_graph(&graph, &out)?;
            println!(
                "wrote {} nodes, {} edges, {} classes to {}",
                graph.num_nodes(),
                graph.num_edges(),
                graph.num_classes(),
                out.display()
            );
            Ok(())
        }
        Command::Laws {
            n_cal,
            m_eval,
            alpha,
            step,
        } => {
            anyhow::ensure!(step > 0.0 && step <= 1.0, "step must lie in (0, 1]");
            println!("beta,beta_law_cdf,nodeex_law_cdf");
            let mut level = 0.0f64;
            while level <= 1.0 + 1e-12 {
                let x = level.min(1.0);
                let beta_cdf = beta_coverage_cdf(n_cal, alpha, x)?;
                let hg_cdf = nodeex_coverage_law(n_cal, m_eval, alpha, x)?;
                println!("{x},{beta_cdf},{hg_cdf}");
                level += step;
            }
            Ok(())
        }
    }
}
