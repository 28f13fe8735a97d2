use std::fs;
use std::path::PathBuf;

use clap::Args;
use moldiff_core::peplink::{BondKind, IntrachainBond, PeptideSpec, ResidueRegistry};
use moldiff_core::selfies::Vocabulary;
use serde::Serialize;

use crate::errors::CliError;
use crate::io::{init_out_dir, read_lines, Table};

#[derive(Args)]
pub struct TokenizeArgs {
    /// Corpus file, one SELFIES string per line.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Existing vocabulary file; built from the corpus when absent.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Maximum token count per sequence.
    #[arg(long, default_value_t = 1024)]
    pub max_len: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct TokenizeConfig {
    corpus: String,
    vocab: Option<String>,
    max_len: usize,
}

pub fn tokenize(args: TokenizeArgs) -> Result<(), CliError> {
    let lines = read_lines(&args.corpus)?;
    let vocab = match &args.vocab {
        Some(path) => {
            let file = fs::File::open(path)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            Vocabulary::load(std::io::BufReader::new(file))?
        }
        None => Vocabulary::build(lines.iter().map(String::as_str))?,
    }
    .with_max_len(args.max_len);
    let config = TokenizeConfig {
        corpus: args.corpus.display().to_string(),
        vocab: args.vocab.as_ref().map(|p| p.display().to_string()),
        max_len: args.max_len,
    };
    init_out_dir(&args.out, &toml::to_string_pretty(&config).unwrap())?;
    let mut vocab_file = Vec::new();
    vocab
        .save(&mut vocab_file)
        .map_err(|e| CliError::Data(e.to_string()))?;
    fs::write(args.out.join("vocab.txt"), vocab_file)?;
    let mut table = Table {
        header: vec!["selfies".to_string(), "length".to_string(), "ids".to_string()],
        rows: Vec::new(),
    };
    for line in &lines {
        let seq = vocab.tokenize(line)?;
        let ids: Vec<String> = seq.ids().iter().map(u32::to_string).collect();
        table.rows.push(vec![
            line.clone(),
            seq.len().to_string(),
            ids.join(","),
        ]);
    }
    table.write(&args.out.join("tokens.tsv"))?;
    println!(
        "tokenized {} sequences with K={} into {}",
        lines.len(),
        vocab.size(),
        args.out.display()
    );
    Ok(())
}

#[derive(Args)]
pub struct ConvertPeptideArgs {
    /// Table with columns: peptide (comma-separated residue codes),
    /// optional bonds (semicolon list of kind:a-b with 1-based sites),
    /// optional n_term / c_term ("-" for none).
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Residue registry file; the built-in registry when absent.
    #[arg(long)]
    pub registry: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_bonds(field: &str) -> Result<Vec<IntrachainBond>, CliError> {
    let mut bonds = Vec::new();
    for part in field.split(';') {
        let part = part.trim();
        if part.is_empty() || part == "-" {
            continue;
        }
        let (kind, sites) = part
            .split_once(':')
            .ok_or_else(|| CliError::Data(format!("bond {part:?} needs kind:a-b")))?;
        let (a, b) = sites
            .split_once('-')
            .ok_or_else(|| CliError::Data(format!("bond sites {sites:?} need a-b")))?;
        let parse_site = |s: &str| -> Result<usize, CliError> {
            let n: usize = s
                .trim()
                .parse()
                .map_err(|_| CliError::Data(format!("bad bond site {s:?}")))?;
            if n == 0 {
                return Err(CliError::Data("bond sites are 1-based".to_string()));
            }
            Ok(n - 1)
        };
        bonds.push(IntrachainBond {
            kind: BondKind::parse(kind).map_err(|e| CliError::Data(e.to_string()))?,
            site_a: parse_site(a)?,
            site_b: parse_site(b)?,
        });
    }
    Ok(bonds)
}

#[derive(Serialize)]
struct ConvertConfig {
    input: String,
    registry: Option<String>,
}

pub fn convert_peptide(args: ConvertPeptideArgs) -> Result<(), CliError> {
    let registry = match &args.registry {
        Some(path) => {
            let file = fs::File::open(path)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            ResidueRegistry::load(std::io::BufReader::new(file))?
        }
        None => ResidueRegistry::builtin(),
    };
    let table = Table::read(&args.input)?;
    let pep_col = table.column("peptide")?;
    let bonds_col = table.header.iter().position(|h| h == "bonds");
    let n_col = table.header.iter().position(|h| h == "n_term");
    let c_col = table.header.iter().position(|h| h == "c_term");
    let config = ConvertConfig {
        input: args.input.display().to_string(),
        registry: args.registry.as_ref().map(|p| p.display().to_string()),
    };
    init_out_dir(&args.out, &toml::to_string_pretty(&config).unwrap())?;
    let mut out = Table {
        header: vec!["peptide".to_string(), "selfies".to_string()],
        rows: Vec::new(),
    };
    let optional = |row: &[String], col: Option<usize>| -> Option<String> {
        col.map(|c| row[c].trim().to_string())
            .filter(|v| !v.is_empty() && v != "-")
    };
    for row in &table.rows {
        let codes: Vec<String> = row[pep_col]
            .split(',')
            .map(|c| c.trim().to_string())
            .filter(|c| !c.is_empty())
            .collect();
        let spec = PeptideSpec {
            residues: codes,
            bonds: match bonds_col {
                Some(c) => parse_bonds(&row[c])?,
                None => Vec::new(),
            },
            n_term: optional(row, n_col),
            c_term: optional(row, c_col),
        };
        let selfies = moldiff_core::peplink::peptide_to_selfies(&spec, &registry)?;
        out.rows.push(vec![row[pep_col].clone(), selfies]);
    }
    out.write(&args.out.join("peptides.tsv"))?;
    // Quarantine report travels with every conversion run.
    let mut quarantine = Table {
        header: vec!["code".to_string(), "reason".to_string()],
        rows: Vec::new(),
    };
    for q in registry.quarantined() {
        quarantine
            .rows
            .push(vec![q.code.clone(), q.reason.clone()]);
    }
    quarantine.write(&args.out.join("registry_quarantine.tsv"))?;
    println!(
        "converted {} peptides; {} registry records quarantined",
        out.rows.len(),
        registry.quarantined().len()
    );
    Ok(())
}
