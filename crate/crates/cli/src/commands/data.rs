use std::fs;
use std::path::PathBuf;

use clap::Args;
use moldiff_core::chem::parse_smiles;
use moldiff_core::dataprep::{
    classification_metrics, fragment_contig, regression_metrics, tanimoto, token_fingerprint,
    Matrix, MicRecord, MicUnit, StrainContext, SynergyRecord,
};
use moldiff_core::selfies::selfies_to_smiles;
use serde::Serialize;

use crate::errors::CliError;
use crate::io::{init_out_dir, read_fasta, read_lines, Table};

#[derive(Args)]
pub struct PrepMicArgs {
    /// Table with columns: molecule (SELFIES), strain, mic (raw value with
    /// optional operator), unit (umol or ug/ml).
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct PrepMicConfig {
    input: String,
}

pub fn prep_mic(args: PrepMicArgs) -> Result<(), CliError> {
    let table = Table::read(&args.input)?;
    let mol_col = table.column("molecule")?;
    let strain_col = table.column("strain")?;
    let mic_col = table.column("mic")?;
    let unit_col = table.column("unit")?;
    init_out_dir(
        &args.out,
        &toml::to_string_pretty(&PrepMicConfig {
            input: args.input.display().to_string(),
        })
        .unwrap(),
    )?;
    let mut out = Table {
        header: vec![
            "molecule".to_string(),
            "strain".to_string(),
            "value_umol".to_string(),
            "label".to_string(),
            "converted_from_mass".to_string(),
        ],
        rows: Vec::new(),
    };
    for row in &table.rows {
        let unit = MicUnit::parse(&row[unit_col])?;
        // Mass units need the molecular weight, computed from the molecule
        // itself when it decodes in the supported subset.
        let mw = match unit {
            MicUnit::MicroGramPerMl => {
                let smiles = selfies_to_smiles(&row[mol_col])?;
                let graph = parse_smiles(&smiles).map_err(|e| CliError::Data(e.to_string()))?;
                Some(graph.molecular_weight())
            }
            MicUnit::MicroMolar => None,
        };
        let record = MicRecord::new(&row[mic_col], unit, mw)?;
        out.rows.push(vec![
            row[mol_col].clone(),
            row[strain_col].clone(),
            format!("{}", record.value_umol),
            format!("{}", record.label),
            record.converted_from_mass.to_string(),
        ]);
    }
    out.write(&args.out.join("labels.tsv"))?;
    println!("normalized {} records", out.rows.len());
    Ok(())
}

#[derive(Args)]
pub struct PrepSynergyArgs {
    /// Table with columns: molecule_a, molecule_b, fici.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn prep_synergy(args: PrepSynergyArgs) -> Result<(), CliError> {
    let table = Table::read(&args.input)?;
    let a_col = table.column("molecule_a")?;
    let b_col = table.column("molecule_b")?;
    let fici_col = table.column("fici")?;
    init_out_dir(
        &args.out,
        &toml::to_string_pretty(&PrepMicConfig {
            input: args.input.display().to_string(),
        })
        .unwrap(),
    )?;
    let mut out = Table {
        header: vec![
            "molecule_a".to_string(),
            "molecule_b".to_string(),
            "fici".to_string(),
            "label".to_string(),
        ],
        rows: Vec::new(),
    };
    for row in &table.rows {
        let fici: f64 = row[fici_col]
            .trim()
            .parse()
            .map_err(|_| CliError::Data(format!("bad fici {:?}", row[fici_col])))?;
        let record = SynergyRecord::new(&row[a_col], &row[b_col], fici);
        out.rows.push(vec![
            record.molecule_a,
            record.molecule_b,
            format!("{fici}"),
            record.label.to_string(),
        ]);
    }
    out.write(&args.out.join("synergy.tsv"))?;
    println!("binarized {} records", out.rows.len());
    Ok(())
}

#[derive(Args)]
pub struct FragmentGenomeArgs {
    /// FASTA file of contigs.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    pub step: usize,
    #[arg(long, default_value_t = 11_000)]
    pub window: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct FragmentConfig {
    input: String,
    step: usize,
    window: usize,
}

pub fn fragment_genome(args: FragmentGenomeArgs) -> Result<(), CliError> {
    let contigs = read_fasta(&args.input)?;
    init_out_dir(
        &args.out,
        &toml::to_string_pretty(&FragmentConfig {
            input: args.input.display().to_string(),
            step: args.step,
            window: args.window,
        })
        .unwrap(),
    )?;
    let mut out = Table {
        header: vec![
            "contig".to_string(),
            "start".to_string(),
            "end".to_string(),
            "sequence".to_string(),
        ],
        rows: Vec::new(),
    };
    for (id, seq) in &contigs {
        for frag in fragment_contig(id, seq, args.step, args.window)? {
            out.rows.push(vec![
                frag.contig_id.clone(),
                frag.start.to_string(),
                frag.end.to_string(),
                frag.sequence.clone(),
            ]);
        }
    }
    out.write(&args.out.join("fragments.tsv"))?;
    println!(
        "fragmented {} contigs into {} windows",
        contigs.len(),
        out.rows.len()
    );
    Ok(())
}

#[derive(Args)]
pub struct IngestEmbeddingsArgs {
    #[arg(long)]
    pub strain: String,
    /// Raw (unscaled) genome embedding matrix file.
    #[arg(long)]
    pub genome: PathBuf,
    /// Text embedding matrix file.
    #[arg(long)]
    pub text: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct IngestConfig {
    strain: String,
    genome: String,
    text: String,
}

pub fn ingest_embeddings(args: IngestEmbeddingsArgs) -> Result<(), CliError> {
    let meta_path = args.out.join(format!("{}.meta.tsv", args.strain));
    if meta_path.exists() {
        return Err(CliError::Data(format!(
            "strain {} already ingested; genome scaling must happen exactly once",
            args.strain
        )));
    }
    let genome = Matrix::read(std::io::BufReader::new(fs::File::open(&args.genome)?))?;
    let text = Matrix::read(std::io::BufReader::new(fs::File::open(&args.text)?))?;
    let ctx = StrainContext::ingest(&args.strain, genome, text)?;
    init_out_dir(
        &args.out,
        &toml::to_string_pretty(&IngestConfig {
            strain: args.strain.clone(),
            genome: args.genome.display().to_string(),
            text: args.text.display().to_string(),
        })
        .unwrap(),
    )?;
    let mut buf = Vec::new();
    ctx.genome.write(&mut buf)?;
    fs::write(args.out.join(format!("{}.genome.mat", args.strain)), buf)?;
    let mut buf = Vec::new();
    ctx.text.write(&mut buf)?;
    fs::write(args.out.join(format!("{}.text.mat", args.strain)), buf)?;
    let meta = Table {
        header: vec![
            "strain".to_string(),
            "genome_rows".to_string(),
            "text_rows".to_string(),
            "genome_scaled".to_string(),
        ],
        rows: vec![vec![
            args.strain.clone(),
            ctx.genome.rows().to_string(),
            ctx.text.rows().to_string(),
            ctx.genome_scaled().to_string(),
        ]],
    };
    meta.write(&meta_path)?;
    println!("ingested strain {}", args.strain);
    Ok(())
}

/// Load a previously ingested strain context.
pub fn load_strain(dir: &std::path::Path, strain: &str) -> Result<StrainContext, CliError> {
    let genome = Matrix::read(std::io::BufReader::new(fs::File::open(
        dir.join(format!("{strain}.genome.mat")),
    )?))?;
    let text = Matrix::read(std::io::BufReader::new(fs::File::open(
        dir.join(format!("{strain}.text.mat")),
    )?))?;
    Ok(StrainContext::from_scaled(strain, genome, text)?)
}

#[derive(Args)]
pub struct EvalArgs {
    /// Table with columns: prediction, label.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// regression or classification.
    #[arg(long)]
    pub mode: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct EvalConfig {
    input: String,
    mode: String,
}

pub fn eval_cmd(args: EvalArgs) -> Result<(), CliError> {
    if !matches!(args.mode.as_str(), "regression" | "classification") {
        return Err(CliError::Usage(format!(
            "mode must be regression or classification, got {:?}",
            args.mode
        )));
    }
    let table = Table::read(&args.input)?;
    let pred_col = table.column("prediction")?;
    let label_col = table.column("label")?;
    let preds: Vec<f64> = table
        .rows
        .iter()
        .map(|r| r[pred_col].parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Data("bad prediction value".to_string()))?;
    init_out_dir(
        &args.out,
        &toml::to_string_pretty(&EvalConfig {
            input: args.input.display().to_string(),
            mode: args.mode.clone(),
        })
        .unwrap(),
    )?;
    let mut out = Table {
        header: vec!["metric".to_string(), "value".to_string()],
        rows: Vec::new(),
    };
    match args.mode.as_str() {
        "regression" => {
            let labels: Vec<f64> = table
                .rows
                .iter()
                .map(|r| r[label_col].parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| CliError::Data("bad label value".to_string()))?;
            let m = regression_metrics(&preds, &labels)?;
            out.rows.push(vec!["r2".to_string(), format!("{}", m.r2)]);
            out.rows
                .push(vec!["pearson".to_string(), format!("{}", m.pearson)]);
            out.rows
                .push(vec!["spearman".to_string(), format!("{}", m.spearman)]);
        }
        "classification" => {
            let labels: Vec<u8> = table
                .rows
                .iter()
                .map(|r| r[label_col].parse::<u8>())
                .collect::<Result<_, _>>()
                .map_err(|_| CliError::Data("bad binary label".to_string()))?;
            let m = classification_metrics(&preds, &labels)?;
            out.rows
                .push(vec!["auroc".to_string(), format!("{}", m.auroc)]);
            out.rows
                .push(vec!["auprc".to_string(), format!("{}", m.auprc)]);
        }
        other => {
            return Err(CliError::Usage(format!(
                "mode must be regression or classification, got {other:?}"
            )))
        }
    }
    out.write(&args.out.join("metrics.tsv"))?;
    for row in &out.rows {
        println!("{}\t{}", row[0], row[1]);
    }
    Ok(())
}

#[derive(Args)]
pub struct NoveltyArgs {
    /// Generated molecules, one SELFIES per line.
    #[arg(long)]
    pub generated: PathBuf,
    /// Reference corpus, one SELFIES per line.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct NoveltyConfig {
    generated: String,
    corpus: String,
}

pub fn novelty_cmd(args: NoveltyArgs) -> Result<(), CliError> {
    let generated = read_lines(&args.generated)?;
    let corpus = read_lines(&args.corpus)?;
    let corpus_fps: Vec<_> = corpus
        .iter()
        .map(|s| token_fingerprint(s))
        .collect::<Result<_, _>>()?;
    init_out_dir(
        &args.out,
        &toml::to_string_pretty(&NoveltyConfig {
            generated: args.generated.display().to_string(),
            corpus: args.corpus.display().to_string(),
        })
        .unwrap(),
    )?;
    let mut out = Table {
        // Token-bigram fingerprints are a proxy; the scores order molecules
        // relative to one another and are not structural similarities.
        header: vec!["selfies".to_string(), "max_token_bigram_tanimoto".to_string()],
        rows: Vec::new(),
    };
    for s in &generated {
        let fp = token_fingerprint(s)?;
        let best = corpus_fps
            .iter()
            .map(|c| tanimoto(&fp, c))
            .fold(0.0, f64::max);
        out.rows.push(vec![s.clone(), format!("{best}")]);
    }
    out.write(&args.out.join("novelty.tsv"))?;
    println!("scored {} molecules against {} references", generated.len(), corpus.len());
    Ok(())
}
