use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod data;

use commands::*;

/// ActionVLAD experiment runner: synthetic data, codebook initialization,
/// two-stage training, evaluation and model analysis.
#[derive(Debug, Parser)]
#[command(name = "actionvlad", version)]
struct Cli {
    /// Run every command single-threaded.
    #[arg(long, global = true)]
    deterministic: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic sub-action dataset (AVF1 files + manifest).
    GenSynth(GenSynthArgs),
    /// Run k-means on training descriptors and write a codebook checkpoint.
    InitCodebook(InitCodebookArgs),
    /// Run training stage 1 (classifier only) or 2 (joint finetuning).
    Train(TrainArgs),
    /// Evaluate a checkpoint on one manifest split.
    ///
    /// Reports accuracy, per-class accuracy, the confusion matrix, and mAP /
    /// wAP. AP is the non-interpolated mean of precision at the rank of each
    /// positive video (one-vs-rest over class scores); wAP weights each
    /// class's AP by its number of videos.
    Eval(EvalArgs),
    /// Write the most likely codebook cell for every descriptor of every video.
    ExportAssignments(ExportAssignmentsArgs),
    /// Decompose a class score into per-word contributions for one video.
    WordContributions(WordContributionsArgs),
    /// Row-normalized difference of two evaluation reports' confusion matrices.
    ConfusionDiff(ConfusionDiffArgs),
    /// Fuse two per-video score files by weighted averaging.
    FuseScores(FuseScoresArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.deterministic {
        // Fails only if a global pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(1).build_global();
    }
    let result = match cli.command {
        Command::GenSynth(a) => gen_synth(a),
        Command::InitCodebook(a) => init_codebook(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::ExportAssignments(a) => export_assignments(a),
        Command::WordContributions(a) => word_contributions(a),
        Command::ConfusionDiff(a) => confusion_diff(a),
        Command::FuseScores(a) => fuse_scores(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(exit_code(e.category()))
        }
    }
}

fn exit_code(category: &str) -> u8 {
    match category {
        "invalid-argument" => 3,
        "io" => 4,
        "format" => 5,
        "checksum" => 6,
        "manifest" => 7,
        "shape" => 8,
        "non-finite" => 9,
        _ => 1,
    }
}
