//! Command-line entry point: validate, explain, perturb, metrics, probe,
//! report.
//!
//! Exit codes: 0 success, 1 pipeline validation negative, 2 input error,
//! 3 training divergence, 4 infeasible perturbation budget.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cfkg::baselines::BaselineError;
use cfkg::optim::OptimError;

#[derive(Parser)]
#[command(name = "cfkg", version, about = "Counterfactual subgraph explainer over heterogeneous knowledge graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a node-id path against the five pipeline constraints.
    Validate {
        #[arg(long)]
        graph: PathBuf,
        /// Comma-separated node ids, or @FILE with one id per line.
        #[arg(long)]
        path: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train soft masks and extract the counterfactual subgraph.
    Explain {
        #[arg(long)]
        graph: PathBuf,
        /// Weights/train config JSON; defaults to the built-in case-study
        /// configuration when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Prompt text, or @FILE to read it from a file. Only used when the
        /// config enables prompt reweighting.
        #[arg(long)]
        prompt: Option<String>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate baseline perturbation masks budget-matched to a reference
    /// counterfactual.
    Perturb {
        #[arg(long)]
        graph: PathBuf,
        /// Directory holding the reference explain artifacts (masks.csv).
        #[arg(long)]
        reference: PathBuf,
        /// Strategy name or "all".
        #[arg(long, default_value = "all")]
        strategy: String,
        /// Repetitions per random strategy.
        #[arg(long, default_value_t = 2)]
        repetitions: usize,
        /// Attention CSV (node_id, mean_attention); required by the
        /// attention strategies.
        #[arg(long)]
        attention: Option<PathBuf>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score drift between model output texts named `<graph>_<model>.txt`.
    Metrics {
        #[arg(long)]
        outputs: PathBuf,
        /// Lexicon CSV (canonical_name, alias).
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Adapter shift probing and the three-signal alignment table.
    Probe {
        #[arg(long)]
        adapter: PathBuf,
        /// Embeddings CSV (token, v_0, ..., v_{d-1}).
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        attention: Option<PathBuf>,
        /// masks.csv from an explain run, for the mask-score signal.
        #[arg(long)]
        masks: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize the artifacts present in an output directory.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { graph, path, out } => commands::validate(&graph, &path, &out),
        Command::Explain {
            graph,
            config,
            prompt,
            seed,
            out,
        } => commands::explain(&graph, config.as_deref(), prompt.as_deref(), seed, &out),
        Command::Perturb {
            graph,
            reference,
            strategy,
            repetitions,
            attention,
            seed,
            out,
        } => commands::perturb(
            &graph,
            &reference,
            &strategy,
            repetitions,
            attention.as_deref(),
            seed,
            &out,
        ),
        Command::Metrics {
            outputs,
            lexicon,
            out,
        } => commands::metrics(&outputs, &lexicon, &out),
        Command::Probe {
            adapter,
            embeddings,
            attention,
            masks,
            out,
        } => commands::probe(
            &adapter,
            &embeddings,
            attention.as_deref(),
            masks.as_deref(),
            &out,
        ),
        Command::Report { out } => commands::report(&out),
    };

    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(classify(&err))
        }
    }
}

/// Map error kinds onto the exit-code contract.
fn classify(err: &anyhow::Error) -> u8 {
    if let Some(OptimError::Diverged { .. }) = err.downcast_ref::<OptimError>() {
        return 3;
    }
    if let Some(BaselineError::InfeasibleBudget { .. }) = err.downcast_ref::<BaselineError>() {
        return 4;
    }
    2
}
