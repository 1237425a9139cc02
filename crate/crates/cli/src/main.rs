//! `nli-disagree`: relabel, split, analyze, train and score NLI
//! disagreement data from the command line.
//!
//! Exit codes: 0 success, 1 validation or domain error, 2 I/O error.

mod analysis;
mod data;
mod io;
mod model;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nli_disagree::labels::{ConversionConfig, EmptySetFallback};

#[derive(Parser)]
#[command(name = "nli-disagree", version, about = "Annotation analytics for NLI disagreement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check input files and count records and problems.
    Validate(data::ValidateArgs),
    /// Build 4-way and multilabel gold labels from vote counts.
    Relabel(data::RelabelArgs),
    /// Stratified train/dev/test split of a labeled file.
    Split(data::SplitArgs),
    /// Write a linearly separable synthetic labeled file.
    Synth(data::SynthArgs),
    /// Krippendorff's alpha over taxonomy annotations.
    Agree(analysis::AgreeArgs),
    /// Category tables, convergence, entropy and plot data.
    Analyze(analysis::AnalyzeArgs),
    /// Train a linear baseline.
    Train(model::TrainArgs),
    /// Run a trained model over items.
    Predict(model::PredictArgs),
    /// Score predictions against gold labels, or compare two prediction files.
    Eval(model::EvalArgs),
}

/// Output directory, defaulting to `$NLI_DISAGREE_OUT`.
#[derive(Args, Debug, Clone)]
pub struct OutArgs {
    #[arg(long, env = "NLI_DISAGREE_OUT")]
    pub out: Option<PathBuf>,
}

/// Thresholds that turn probabilities into label sets.
#[derive(Args, Debug, Clone)]
pub struct ConversionArgs {
    /// Inclusive probability for a label to join a set (softmax outputs).
    #[arg(long, default_value_t = 0.2)]
    pub dist_threshold: f64,
    /// Strict probability for a label to join a set (sigmoid outputs).
    #[arg(long, default_value_t = 0.5)]
    pub sigmoid_threshold: f64,
    /// Keep every tied top label when no sigmoid clears the threshold.
    #[arg(long)]
    pub keep_ties: bool,
}

impl ConversionArgs {
    pub fn config(&self) -> anyhow::Result<ConversionConfig> {
        let cfg = ConversionConfig {
            dist_threshold: self.dist_threshold,
            sigmoid_threshold: self.sigmoid_threshold,
            empty_set_fallback: if self.keep_ties {
                EmptySetFallback::ArgmaxWithTies
            } else {
                EmptySetFallback::Argmax
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let io = err.chain().any(|cause| {
        cause.is::<std::io::Error>()
            || matches!(cause.downcast_ref::<nli_disagree::Error>(), Some(nli_disagree::Error::Io(_)))
    });
    if io {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            // usage mistakes are validation errors, not I/O
            return ExitCode::from(if err.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Validate(a) => data::validate(a),
        Command::Relabel(a) => data::relabel(a),
        Command::Split(a) => data::split(a),
        Command::Synth(a) => data::synth(a),
        Command::Agree(a) => analysis::agree(a),
        Command::Analyze(a) => analysis::analyze(a),
        Command::Train(a) => model::train(a),
        Command::Predict(a) => model::predict(a),
        Command::Eval(a) => model::eval(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
