use super::DataprepError;

/// Units accepted for raw activity values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MicUnit {
    /// Micromolar; the canonical unit.
    MicroMolar,
    /// Micrograms per milliliter; converted via the molecular weight.
    MicroGramPerMl,
}

impl MicUnit {
    pub fn parse(s: &str) -> Result<MicUnit, DataprepError> {
        let folded = s.trim().to_lowercase().replace('µ', "u");
        match folded.as_str() {
            "umol" | "um" | "umol/l" | "micromolar" => Ok(MicUnit::MicroMolar),
            "ug/ml" | "ug per ml" | "mg/l" => Ok(MicUnit::MicroGramPerMl),
            _ => Err(DataprepError::UnknownUnit(s.to_string())),
        }
    }
}

fn lex_number(s: &str) -> Option<(f64, &str)> {
    let s = s.trim_start();
    let mut end = 0;
    let bytes = s.as_bytes();
    let mut seen_digit = false;
    let mut seen_dot = false;
    while end < bytes.len() {
        match bytes[end] {
            b'0'..=b'9' => {
                seen_digit = true;
                end += 1;
            }
            b'.' if !seen_dot => {
                seen_dot = true;
                end += 1;
            }
            _ => break,
        }
    }
    if !seen_digit {
        return None;
    }
    let v: f64 = s[..end].parse().ok()?;
    Some((v, &s[end..]))
}

/// Normalize a raw activity value with an optional operator to a plain
/// number, following the label pre-processing rules:
///
/// * `>`, `>=` double the value; `>>` (or the typographic form) triples it;
/// * ranges `a-b`, `a->b`, `a->=b`, `a-=>b` average the endpoints;
/// * `a+-b` (or the plus-minus sign) keeps the central value `a`;
/// * any other operator keeps the value; a bare number parses as itself.
pub fn parse_mic(raw: &str) -> Result<f64, DataprepError> {
    let err = || DataprepError::UnparseableRecord(raw.to_string());
    let s = raw.trim().replace('\u{2265}', ">=").replace('\u{2264}', "<=");
    let s = s.replace('\u{226B}', ">>").replace('\u{00B1}', "+-");
    let s = s.trim();
    if s.is_empty() {
        return Err(err());
    }
    // Prefix operators, longest first.
    for (prefix, factor) in [(">>", 3.0), (">=", 2.0), (">", 2.0), ("<=", 1.0), ("<", 1.0)] {
        if let Some(rest) = s.strip_prefix(prefix) {
            let (v, tail) = lex_number(rest).ok_or_else(err)?;
            if !tail.trim().is_empty() {
                return Err(err());
            }
            return Ok(factor * v);
        }
    }
    let (a, tail) = lex_number(s).ok_or_else(err)?;
    let tail = tail.trim_start();
    if tail.is_empty() {
        return Ok(a);
    }
    // Central value with an uncertainty: keep the central value.
    if let Some(rest) = tail.strip_prefix("+-").or_else(|| tail.strip_prefix("+/-")) {
        let (_b, t2) = lex_number(rest).ok_or_else(err)?;
        if !t2.trim().is_empty() {
            return Err(err());
        }
        return Ok(a);
    }
    // Range forms: '-' optionally followed by '>', '>=', '=>'.
    if let Some(rest) = tail.strip_prefix('-') {
        let rest = rest.trim_start();
        let rest = ["->", ">=", "=>", ">"]
            .iter()
            .find_map(|op| rest.strip_prefix(op))
            .unwrap_or(rest);
        let (b, t2) = lex_number(rest).ok_or_else(err)?;
        if !t2.trim().is_empty() {
            return Err(err());
        }
        return Ok((a + b) / 2.0);
    }
    Err(err())
}

/// The activity label transform: -log10(value / 10).
pub fn mic_to_label(value_umol: f64) -> Result<f64, DataprepError> {
    if value_umol.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)
        || !value_umol.is_finite()
    {
        return Err(DataprepError::NonpositiveMic(value_umol));
    }
    Ok(-(value_umol / 10.0).log10())
}

/// One normalized activity measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct MicRecord {
    pub raw: String,
    pub value_umol: f64,
    pub label: f64,
    /// Whether a unit conversion using the molecular weight happened.
    pub converted_from_mass: bool,
}

impl MicRecord {
    /// Parse a raw value in the given unit; mass-per-volume units require a
    /// molecular weight (g/mol).
    pub fn new(raw: &str, unit: MicUnit, mw: Option<f64>) -> Result<MicRecord, DataprepError> {
        let parsed = parse_mic(raw)?;
        let (value_umol, converted) = match unit {
            MicUnit::MicroMolar => (parsed, false),
            MicUnit::MicroGramPerMl => {
                let mw = mw.ok_or_else(|| DataprepError::MissingWeight(raw.to_string()))?;
                // ug/mL equals mg/L; dividing by g/mol gives mmol/L, i.e.
                // 1000 umol/L.
                (parsed * 1000.0 / mw, true)
            }
        };
        Ok(MicRecord {
            raw: raw.to_string(),
            value_umol,
            label: mic_to_label(value_umol)?,
            converted_from_mass: converted,
        })
    }
}

/// Binarize an interaction index at the 0.5 cutoff: below is synergistic.
pub fn binarize_fici(fici: f64) -> u8 {
    if fici < 0.5 {
        1
    } else {
        0
    }
}

/// One binarized synergy measurement between two molecules on a strain.
#[derive(Debug, Clone, PartialEq)]
pub struct SynergyRecord {
    pub molecule_a: String,
    pub molecule_b: String,
    pub fici: f64,
    pub label: u8,
}

impl SynergyRecord {
    pub fn new(molecule_a: &str, molecule_b: &str, fici: f64) -> SynergyRecord {
        SynergyRecord {
            molecule_a: molecule_a.to_string(),
            molecule_b: molecule_b.to_string(),
            fici,
            label: binarize_fici(fici),
        }
    }
}
