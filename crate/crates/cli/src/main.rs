//! Command-line pipelines over the molecule diffusion engine: data
//! preparation, tokenization, peptide conversion, toy training, guided
//! generation, prediction, and evaluation. Identical configuration and seed
//! give byte-identical outputs.

mod commands;
mod errors;
mod io;

use clap::{Parser, Subcommand};

use errors::CliError;

#[derive(Parser)]
#[command(
    name = "moldiff",
    version,
    about = "Masked discrete diffusion over molecule strings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a vocabulary from a corpus or tokenize it with one.
    Tokenize(commands::mol::TokenizeArgs),
    /// Convert peptide specifications to SELFIES strings.
    ConvertPeptide(commands::mol::ConvertPeptideArgs),
    /// Normalize raw activity values and apply the label transform.
    PrepMic(commands::data::PrepMicArgs),
    /// Binarize interaction indices at the 0.5 cutoff.
    PrepSynergy(commands::data::PrepSynergyArgs),
    /// Fragment FASTA contigs with a sliding window.
    FragmentGenome(commands::data::FragmentGenomeArgs),
    /// Scale and store per-strain genome and text embeddings.
    IngestEmbeddings(commands::data::IngestEmbeddingsArgs),
    /// Train the toy denoiser on a SELFIES corpus.
    TrainToy(commands::model::TrainToyArgs),
    /// Unconditional generation.
    Sample(commands::model::SampleArgs),
    /// Predictor-guided three-stage generation.
    GuidedSample(commands::model::GuidedSampleArgs),
    /// Molecule-strain predictions through the fusion network.
    Predict(commands::model::PredictArgs),
    /// Regression or classification metrics from a predictions table.
    Eval(commands::data::EvalArgs),
    /// Maximum fingerprint similarity of generated molecules to a corpus.
    Novelty(commands::data::NoveltyArgs),
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Tokenize(args) => commands::mol::tokenize(args),
        Command::ConvertPeptide(args) => commands::mol::convert_peptide(args),
        Command::PrepMic(args) => commands::data::prep_mic(args),
        Command::PrepSynergy(args) => commands::data::prep_synergy(args),
        Command::FragmentGenome(args) => commands::data::fragment_genome(args),
        Command::IngestEmbeddings(args) => commands::data::ingest_embeddings(args),
        Command::TrainToy(args) => commands::model::train_toy_cmd(args),
        Command::Sample(args) => commands::model::sample_cmd(args),
        Command::GuidedSample(args) => commands::model::guided_sample_cmd(args),
        Command::Predict(args) => commands::model::predict_cmd(args),
        Command::Eval(args) => commands::data::eval_cmd(args),
        Command::Novelty(args) => commands::data::novelty_cmd(args),
    }
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error\t{}\t{}", e.kind(), e.message());
        std::process::exit(e.exit_code());
    }
}
