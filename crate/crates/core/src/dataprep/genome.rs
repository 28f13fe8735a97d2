use super::{DataprepError, Matrix};

/// Genome embeddings are produced at magnitudes around 1e-15 and are lifted
/// by this factor exactly once during ingestion.
pub const GENOME_SCALE: f64 = 1e14;

/// One sliding-window fragment of a contig.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenomeFragment {
    pub contig_id: String,
    pub start: usize,
    pub end: usize,
    pub sequence: String,
}

impl GenomeFragment {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

/// Slide a window over the contig: starts at multiples of `step`, ends
/// truncated at the contig end, and a window is emitted only if it covers at
/// least one base beyond the previous window's end.
pub fn fragment_contig(
    contig_id: &str,
    seq: &str,
    step: usize,
    window: usize,
) -> Result<Vec<GenomeFragment>, DataprepError> {
    if window <= step {
        return Err(DataprepError::BadWindow { window, step });
    }
    if seq.is_empty() {
        return Err(DataprepError::EmptySequence);
    }
    let n = seq.len();
    let mut out = Vec::new();
    let mut prev_end = 0usize;
    let mut start = 0usize;
    while start < n {
        let end = (start + window).min(n);
        if end > prev_end {
            out.push(GenomeFragment {
                contig_id: contig_id.to_string(),
                start,
                end,
                sequence: seq[start..end].to_string(),
            });
            prev_end = end;
        }
        start += step;
    }
    Ok(out)
}

/// Mean over the per-base embedding rows of one fragment.
pub fn pool_fragment_embedding(per_base: &Matrix) -> Result<Vec<f64>, DataprepError> {
    if per_base.rows() == 0 {
        return Err(DataprepError::EmptyMatrix);
    }
    let mut mean = vec![0.0; per_base.cols()];
    for row in per_base.row_iter() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    let n = per_base.rows() as f64;
    for m in mean.iter_mut() {
        *m /= n;
    }
    Ok(mean)
}

/// Multiply every entry by the fixed scale factor. Not idempotent: the
/// ingestion pipeline must apply it exactly once, which `StrainContext`
/// enforces through its scaled flag.
pub fn scale_genome_embeddings(embedding: &Matrix) -> Result<Matrix, DataprepError> {
    let scaled = embedding.map(|v| v * GENOME_SCALE);
    if !scaled.is_finite() {
        return Err(DataprepError::OverflowToInfinity);
    }
    Ok(scaled)
}

/// Ingested pathogen context: the stacked fragment embeddings of the genome
/// and the per-token text embedding of the strain description.
#[derive(Debug, Clone, PartialEq)]
pub struct StrainContext {
    pub strain_id: String,
    pub genome: Matrix,
    pub text: Matrix,
    genome_scaled: bool,
}

impl StrainContext {
    /// Build from raw (unscaled) genome embeddings; the scale factor is
    /// applied here, once.
    pub fn ingest(
        strain_id: &str,
        raw_genome: Matrix,
        text: Matrix,
    ) -> Result<StrainContext, DataprepError> {
        if raw_genome.rows() == 0 || text.rows() == 0 {
            return Err(DataprepError::EmptyMatrix);
        }
        if !raw_genome.is_finite() || !text.is_finite() {
            return Err(DataprepError::OverflowToInfinity);
        }
        Ok(StrainContext {
            strain_id: strain_id.to_string(),
            genome: scale_genome_embeddings(&raw_genome)?,
            text,
            genome_scaled: true,
        })
    }

    /// Build from matrices that were already scaled upstream.
    pub fn from_scaled(
        strain_id: &str,
        genome: Matrix,
        text: Matrix,
    ) -> Result<StrainContext, DataprepError> {
        if genome.rows() == 0 || text.rows() == 0 {
            return Err(DataprepError::EmptyMatrix);
        }
        Ok(StrainContext {
            strain_id: strain_id.to_string(),
            genome,
            text,
            genome_scaled: true,
        })
    }

    pub fn genome_scaled(&self) -> bool {
        self.genome_scaled
    }
}
