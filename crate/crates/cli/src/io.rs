use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::errors::CliError;

/// A tab-separated table with a header row.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Table, CliError> {
        let file = fs::File::open(path)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let mut lines = BufReader::new(file).lines();
        let header_line = lines
            .next()
            .ok_or_else(|| CliError::Data(format!("{}: empty table", path.display())))??;
        let header: Vec<String> = header_line.split('\t').map(str::to_string).collect();
        let mut rows = Vec::new();
        for line in lines {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let row: Vec<String> = line.split('\t').map(str::to_string).collect();
            if row.len() != header.len() {
                return Err(CliError::Data(format!(
                    "{}: row has {} columns, header has {}",
                    path.display(),
                    row.len(),
                    header.len()
                )));
            }
            rows.push(row);
        }
        Ok(Table { header, rows })
    }

    pub fn column(&self, name: &str) -> Result<usize, CliError> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Data(format!("missing column {name:?}")))
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut out = String::new();
        out.push_str(&self.header.join("\t"));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join("\t"));
            out.push('\n');
        }
        fs::write(path, out)?;
        Ok(())
    }
}

/// Read non-empty lines of a text file.
pub fn read_lines(path: &Path) -> Result<Vec<String>, CliError> {
    let file =
        fs::File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut lines = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        let trimmed = line.trim();
        if !trimmed.is_empty() {
            lines.push(trimmed.to_string());
        }
    }
    Ok(lines)
}

/// Parse a FASTA file into (id, sequence) pairs.
pub fn read_fasta(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let mut contigs: Vec<(String, String)> = Vec::new();
    for line in read_lines(path)? {
        if let Some(name) = line.strip_prefix('>') {
            let id = name.split_whitespace().next().unwrap_or(name).to_string();
            contigs.push((id, String::new()));
        } else {
            match contigs.last_mut() {
                Some((_, seq)) => seq.push_str(&line),
                None => {
                    return Err(CliError::Data(
                        "FASTA sequence before any > header".to_string(),
                    ))
                }
            }
        }
    }
    if contigs.is_empty() {
        return Err(CliError::Data("empty FASTA".to_string()));
    }
    Ok(contigs)
}

/// Prepare the output directory: create it, write the version stamp and the
/// fully resolved run configuration next to the outputs.
pub fn init_out_dir(out: &Path, resolved_config_toml: &str) -> Result<(), CliError> {
    fs::create_dir_all(out)?;
    fs::write(out.join("VERSION"), concat!(env!("CARGO_PKG_VERSION"), "\n"))?;
    fs::write(out.join("resolved_config.toml"), resolved_config_toml)?;
    Ok(())
}

/// Resolve a value chain: flag beats config file beats default.
pub fn pick<T: Clone>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}
