//! Molecule-strain fusion: a single molecule query cross-attends over
//! genome-derived and text-derived key/value banks, the two context vectors
//! are concatenated, and task heads map the fused embedding to predictions.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dataprep::{Matrix, StrainContext};
use crate::denoiser::{load_tensors, save_tensors, DenoiserError, NamedTensor};
use crate::linalg::{dot, matvec, softmax_in_place};

#[derive(Debug, Error, PartialEq)]
pub enum FusionError {
    #[error("dimension mismatch: {what} is {got}, expected {want}")]
    DimensionMismatch {
        what: &'static str,
        got: usize,
        want: usize,
    },
    #[error("attention requires at least one key row")]
    EmptyKeys,
    #[error("ensemble requires at least one model")]
    EmptyEnsemble,
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}

/// Dimension chain of the fusion block. The fused width is twice the
/// attention width; default head shapes are 12294 -> 3073 -> 128 -> 1
/// with the synergy head reading 2 x 12294.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FusionDims {
    pub mol_dim: usize,
    pub genome_dim: usize,
    pub text_dim: usize,
    /// Attention width d_a; each context vector has this width.
    pub attn_dim: usize,
    pub head_hidden: Vec<usize>,
}

impl Default for FusionDims {
    fn default() -> Self {
        FusionDims {
            mol_dim: 768,
            genome_dim: 1024,
            text_dim: 1024,
            attn_dim: 6147,
            head_hidden: vec![3073, 128],
        }
    }
}

impl FusionDims {
    /// Width of the fused embedding: genome context plus text context.
    pub fn fused(&self) -> usize {
        2 * self.attn_dim
    }

    /// A small instance for tests.
    pub fn tiny() -> FusionDims {
        FusionDims {
            mol_dim: 4,
            genome_dim: 3,
            text_dim: 5,
            attn_dim: 4,
            head_hidden: vec![6, 3],
        }
    }

    /// Layer widths of a head reading `input` and ending in one scalar.
    pub fn head_shape(&self, input: usize) -> Vec<usize> {
        let mut shape = vec![input];
        shape.extend(&self.head_hidden);
        shape.push(1);
        shape
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeadKind {
    Mic,
    AbxClass,
    Synergy,
}

/// A plain MLP with ReLU hidden activations. Classification heads squash
/// the output through a sigmoid; the regression head stays linear.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
    pub sigmoid_output: bool,
}

impl Mlp {
    fn zeros(shape: &[usize], sigmoid_output: bool) -> Mlp {
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for w in shape.windows(2) {
            weights.push(Matrix::zeros(w[1], w[0]));
            biases.push(vec![0.0; w[1]]);
        }
        Mlp {
            weights,
            biases,
            sigmoid_output,
        }
    }

    pub fn input_len(&self) -> usize {
        self.weights[0].cols()
    }

    pub fn forward(&self, input: &[f64]) -> Result<f64, FusionError> {
        if input.len() != self.input_len() {
            return Err(FusionError::DimensionMismatch {
                what: "head input",
                got: input.len(),
                want: self.input_len(),
            });
        }
        let mut h = input.to_vec();
        let last = self.weights.len() - 1;
        for (i, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut next = vec![0.0; w.rows()];
            matvec(w.values(), &h, &mut next, w.rows(), w.cols());
            for (n, bias) in next.iter_mut().zip(b) {
                *n += bias;
                if i < last {
                    *n = n.max(0.0);
                }
            }
            h = next;
        }
        let out = h[0];
        Ok(if self.sigmoid_output {
            1.0 / (1.0 + (-out).exp())
        } else {
            out
        })
    }
}

/// All fusion parameters: the shared molecule query projection, per-bank
/// key/value projections, and the three task heads.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionParams {
    pub dims: FusionDims,
    pub w_query: Matrix,
    pub genome_key: Matrix,
    pub genome_value: Matrix,
    pub text_key: Matrix,
    pub text_value: Matrix,
    pub mic_head: Mlp,
    pub class_head: Mlp,
    pub synergy_head: Mlp,
}

impl FusionParams {
    pub fn zeros(dims: FusionDims) -> FusionParams {
        let fused = dims.fused();
        let params = FusionParams {
            w_query: Matrix::zeros(dims.attn_dim, dims.mol_dim),
            genome_key: Matrix::zeros(dims.attn_dim, dims.genome_dim),
            genome_value: Matrix::zeros(dims.attn_dim, dims.genome_dim),
            text_key: Matrix::zeros(dims.attn_dim, dims.text_dim),
            text_value: Matrix::zeros(dims.attn_dim, dims.text_dim),
            mic_head: Mlp::zeros(&dims.head_shape(fused), false),
            class_head: Mlp::zeros(&dims.head_shape(fused), true),
            synergy_head: Mlp::zeros(&dims.head_shape(2 * fused), true),
            dims,
        };
        params.assert_shapes();
        params
    }

    pub fn seeded(dims: FusionDims, seed: u64) -> FusionParams {
        let mut params = FusionParams::zeros(dims);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fill = |m: &mut Matrix| {
            let scale = 1.0 / (m.cols() as f64).sqrt();
            *m = m.map(|_| {
                let u1: f64 = 1.0 - rng.gen::<f64>();
                let u2: f64 = rng.gen();
                scale * (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
            });
        };
        fill(&mut params.w_query);
        fill(&mut params.genome_key);
        fill(&mut params.genome_value);
        fill(&mut params.text_key);
        fill(&mut params.text_value);
        for head in [
            &mut params.mic_head,
            &mut params.class_head,
            &mut params.synergy_head,
        ] {
            for w in head.weights.iter_mut() {
                fill(w);
            }
        }
        params
    }

    /// The synergy head must read exactly twice the fused width.
    fn assert_shapes(&self) {
        let fused = self.dims.fused();
        assert_eq!(self.mic_head.input_len(), fused);
        assert_eq!(self.class_head.input_len(), fused);
        assert_eq!(self.synergy_head.input_len(), 2 * fused);
    }

    pub fn head(&self, kind: HeadKind) -> &Mlp {
        match kind {
            HeadKind::Mic => &self.mic_head,
            HeadKind::AbxClass => &self.class_head,
            HeadKind::Synergy => &self.synergy_head,
        }
    }

    pub fn save<W: Write>(&self, w: W) -> Result<(), FusionError> {
        let d = &self.dims;
        let hidden: Vec<String> = d.head_hidden.iter().map(|h| h.to_string()).collect();
        let meta = vec![
            ("kind".to_string(), "fusion".to_string()),
            (
                "dims".to_string(),
                format!(
                    "{} {} {} {} {}",
                    d.mol_dim,
                    d.genome_dim,
                    d.text_dim,
                    d.attn_dim,
                    hidden.join(" ")
                ),
            ),
        ];
        let mut tensors = vec![
            matrix_tensor("w_query", &self.w_query),
            matrix_tensor("genome_key", &self.genome_key),
            matrix_tensor("genome_value", &self.genome_value),
            matrix_tensor("text_key", &self.text_key),
            matrix_tensor("text_value", &self.text_value),
        ];
        for (name, head) in [
            ("mic", &self.mic_head),
            ("class", &self.class_head),
            ("synergy", &self.synergy_head),
        ] {
            for (i, (wm, b)) in head.weights.iter().zip(&head.biases).enumerate() {
                tensors.push(matrix_tensor(&format!("{name}.w{i}"), wm));
                tensors.push(NamedTensor::vector(&format!("{name}.b{i}"), b.clone()));
            }
        }
        save_tensors(w, &meta, &tensors).map_err(checkpoint_err)
    }

    pub fn load<R: BufRead>(r: R) -> Result<FusionParams, FusionError> {
        let (meta, tensors) = load_tensors(r).map_err(checkpoint_err)?;
        if meta.get("kind").map(String::as_str) != Some("fusion") {
            return Err(FusionError::Checkpoint("not a fusion checkpoint".into()));
        }
        let nums: Vec<usize> = meta
            .get("dims")
            .ok_or_else(|| FusionError::Checkpoint("missing dims".into()))?
            .split_whitespace()
            .map(|p| p.parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| FusionError::Checkpoint("bad dims".into()))?;
        if nums.len() < 5 {
            return Err(FusionError::Checkpoint("dims needs 5+ fields".into()));
        }
        let dims = FusionDims {
            mol_dim: nums[0],
            genome_dim: nums[1],
            text_dim: nums[2],
            attn_dim: nums[3],
            head_hidden: nums[4..].to_vec(),
        };
        let mut params = FusionParams::zeros(dims);
        let find = |name: &str| -> Result<&NamedTensor, FusionError> {
            tensors
                .iter()
                .find(|t| t.name == name)
                .ok_or_else(|| FusionError::Checkpoint(format!("missing tensor {name}")))
        };
        let as_matrix = |t: &NamedTensor| Matrix::new(t.rows, t.cols, t.data.clone());
        params.w_query = as_matrix(find("w_query")?).map_err(|e| checkpoint_any(&e))?;
        params.genome_key = as_matrix(find("genome_key")?).map_err(|e| checkpoint_any(&e))?;
        params.genome_value =
            as_matrix(find("genome_value")?).map_err(|e| checkpoint_any(&e))?;
        params.text_key = as_matrix(find("text_key")?).map_err(|e| checkpoint_any(&e))?;
        params.text_value = as_matrix(find("text_value")?).map_err(|e| checkpoint_any(&e))?;
        for (name, head) in [
            ("mic", &mut params.mic_head),
            ("class", &mut params.class_head),
            ("synergy", &mut params.synergy_head),
        ] {
            for i in 0..head.weights.len() {
                let w = find(&format!("{name}.w{i}"))?;
                head.weights[i] = as_matrix(w).map_err(|e| checkpoint_any(&e))?;
                let b = find(&format!("{name}.b{i}"))?;
                head.biases[i] = b.data.clone();
            }
        }
        params.assert_shapes();
        Ok(params)
    }
}

fn matrix_tensor(name: &str, m: &Matrix) -> NamedTensor {
    NamedTensor::matrix(name, m.rows(), m.cols(), m.values().to_vec())
}

fn checkpoint_err(e: DenoiserError) -> FusionError {
    FusionError::Checkpoint(e.to_string())
}

fn checkpoint_any(e: &dyn std::fmt::Display) -> FusionError {
    FusionError::Checkpoint(e.to_string())
}

/// Scaled dot-product attention of a single projected query over key/value
/// rows, with the query added residually to the aggregated values.
pub fn cross_attention(
    q_proj: &[f64],
    keys: &Matrix,
    values: &Matrix,
) -> Result<Vec<f64>, FusionError> {
    if keys.rows() == 0 {
        return Err(FusionError::EmptyKeys);
    }
    if keys.rows() != values.rows() {
        return Err(FusionError::DimensionMismatch {
            what: "value rows",
            got: values.rows(),
            want: keys.rows(),
        });
    }
    let d_a = q_proj.len();
    if keys.cols() != d_a || values.cols() != d_a {
        return Err(FusionError::DimensionMismatch {
            what: "key/value width",
            got: keys.cols(),
            want: d_a,
        });
    }
    let scale = 1.0 / (d_a as f64).sqrt();
    let mut weights: Vec<f64> = (0..keys.rows())
        .map(|i| scale * dot(q_proj, keys.row(i)))
        .collect();
    softmax_in_place(&mut weights);
    let mut out = q_proj.to_vec();
    for (i, &w) in weights.iter().enumerate() {
        for (o, v) in out.iter_mut().zip(values.row(i)) {
            *o += w * v;
        }
    }
    Ok(out)
}

fn project_rows(w: &Matrix, rows: &Matrix) -> Matrix {
    let mut data = Vec::with_capacity(rows.rows() * w.rows());
    for r in rows.row_iter() {
        let mut out = vec![0.0; w.rows()];
        matvec(w.values(), r, &mut out, w.rows(), w.cols());
        data.extend(out);
    }
    Matrix::new(rows.rows(), w.rows(), data).expect("projection shape")
}

/// Fuse a molecule feature vector with one strain's context: the projected
/// query attends over the genome bank and the text bank, and the two
/// context vectors are concatenated.
pub fn fuse(
    mol_feat: &[f64],
    ctx: &StrainContext,
    params: &FusionParams,
) -> Result<Vec<f64>, FusionError> {
    let dims = &params.dims;
    if mol_feat.len() != dims.mol_dim {
        return Err(FusionError::DimensionMismatch {
            what: "molecule feature",
            got: mol_feat.len(),
            want: dims.mol_dim,
        });
    }
    if ctx.genome.cols() != dims.genome_dim {
        return Err(FusionError::DimensionMismatch {
            what: "genome embedding width",
            got: ctx.genome.cols(),
            want: dims.genome_dim,
        });
    }
    if ctx.text.cols() != dims.text_dim {
        return Err(FusionError::DimensionMismatch {
            what: "text embedding width",
            got: ctx.text.cols(),
            want: dims.text_dim,
        });
    }
    let mut q = vec![0.0; dims.attn_dim];
    matvec(
        params.w_query.values(),
        mol_feat,
        &mut q,
        dims.attn_dim,
        dims.mol_dim,
    );
    let genome_ctx = cross_attention(
        &q,
        &project_rows(&params.genome_key, &ctx.genome),
        &project_rows(&params.genome_value, &ctx.genome),
    )?;
    let text_ctx = cross_attention(
        &q,
        &project_rows(&params.text_key, &ctx.text),
        &project_rows(&params.text_value, &ctx.text),
    )?;
    let mut fused = genome_ctx;
    fused.extend(text_ctx);
    Ok(fused)
}

/// Run one task head on a fused embedding (or two concatenated embeddings
/// for the synergy head).
pub fn head_forward(
    input: &[f64],
    kind: HeadKind,
    params: &FusionParams,
) -> Result<f64, FusionError> {
    params.head(kind).forward(input)
}

/// Model input for a prediction: one molecule in context, or a pair for
/// synergy.
pub enum FusionInput<'a> {
    Single {
        mol: &'a [f64],
        ctx: &'a StrainContext,
    },
    Pair {
        mol_a: &'a [f64],
        mol_b: &'a [f64],
        ctx: &'a StrainContext,
    },
}

/// Full forward pass of one model.
pub fn predict(
    params: &FusionParams,
    kind: HeadKind,
    input: &FusionInput,
) -> Result<f64, FusionError> {
    match (kind, input) {
        (HeadKind::Synergy, FusionInput::Pair { mol_a, mol_b, ctx }) => {
            let mut fused = fuse(mol_a, ctx, params)?;
            fused.extend(fuse(mol_b, ctx, params)?);
            head_forward(&fused, kind, params)
        }
        (HeadKind::Synergy, FusionInput::Single { .. }) => Err(FusionError::DimensionMismatch {
            what: "synergy input",
            got: 1,
            want: 2,
        }),
        (_, FusionInput::Single { mol, ctx }) => {
            let fused = fuse(mol, ctx, params)?;
            head_forward(&fused, kind, params)
        }
        (_, FusionInput::Pair { .. }) => Err(FusionError::DimensionMismatch {
            what: "molecule inputs",
            got: 2,
            want: 1,
        }),
    }
}

/// Arithmetic mean of the member predictions.
pub fn ensemble_predict(
    models: &[FusionParams],
    kind: HeadKind,
    input: &FusionInput,
) -> Result<f64, FusionError> {
    if models.is_empty() {
        return Err(FusionError::EmptyEnsemble);
    }
    let mut total = 0.0;
    for m in models {
        total += predict(m, kind, input)?;
    }
    Ok(total / models.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(genome: Vec<Vec<f64>>, text: Vec<Vec<f64>>) -> StrainContext {
        StrainContext::from_scaled(
            "s",
            Matrix::from_rows(genome).unwrap(),
            Matrix::from_rows(text).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn single_row_attention_is_residual_plus_value() {
        let q = vec![0.3, -1.0, 2.0];
        let keys = Matrix::from_rows(vec![vec![5.0, 5.0, 5.0]]).unwrap();
        let values = Matrix::from_rows(vec![vec![1.0, 2.0, 3.0]]).unwrap();
        let out = cross_attention(&q, &keys, &values).unwrap();
        assert_eq!(out, vec![1.3, 1.0, 5.0]);
    }

    #[test]
    fn duplicated_rows_match_single_row() {
        let q = vec![0.5, 0.25];
        let k1 = Matrix::from_rows(vec![vec![1.0, 0.0]]).unwrap();
        let v1 = Matrix::from_rows(vec![vec![2.0, -1.0]]).unwrap();
        let k2 = Matrix::from_rows(vec![vec![1.0, 0.0]; 4]).unwrap();
        let v2 = Matrix::from_rows(vec![vec![2.0, -1.0]; 4]).unwrap();
        let a = cross_attention(&q, &k1, &v1).unwrap();
        let b = cross_attention(&q, &k2, &v2).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn two_row_hand_case() {
        // d_a = 1: scores are q*k; with q*k1 = 1, q*k2 = 0 the weights are
        // (e/(e+1), 1/(e+1)).
        let q = vec![1.0];
        let keys = Matrix::from_rows(vec![vec![1.0], vec![0.0]]).unwrap();
        let values = Matrix::from_rows(vec![vec![10.0], vec![20.0]]).unwrap();
        let out = cross_attention(&q, &keys, &values).unwrap();
        let e = std::f64::consts::E;
        let expect = 1.0 + (e * 10.0 + 20.0) / (e + 1.0);
        assert!((out[0] - expect).abs() < 1e-12);
    }

    #[test]
    fn attention_weights_sum_to_one() {
        // Verified through the aggregate: constant values of 1 must come
        // out as exactly 1 plus the query.
        let q = vec![0.1, 0.2, 0.3];
        let keys = Matrix::from_rows(vec![
            vec![1.0, -2.0, 0.5],
            vec![0.0, 1.0, 1.5],
            vec![3.0, 0.0, -1.0],
        ])
        .unwrap();
        let values = Matrix::from_rows(vec![vec![1.0; 3]; 3]).unwrap();
        let out = cross_attention(&q, &keys, &values).unwrap();
        for (o, qv) in out.iter().zip(&q) {
            assert!((o - qv - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_keys_rejected() {
        let q = vec![1.0];
        let keys = Matrix::new(0, 1, vec![]).unwrap();
        let values = Matrix::new(0, 1, vec![]).unwrap();
        assert_eq!(
            cross_attention(&q, &keys, &values).unwrap_err(),
            FusionError::EmptyKeys
        );
    }

    #[test]
    fn fuse_is_invariant_under_row_permutations() {
        let params = FusionParams::seeded(FusionDims::tiny(), 1);
        let mol = vec![0.2, -0.4, 0.6, 0.1];
        let genome = vec![
            vec![0.1, 0.2, 0.3],
            vec![-0.5, 0.1, 0.0],
            vec![0.7, -0.2, 0.4],
        ];
        let text = vec![vec![0.4, 0.1, -0.1, 0.2, 0.0], vec![0.0, 0.3, 0.2, -0.2, 0.1]];
        let base = fuse(&mol, &ctx(genome.clone(), text.clone()), &params).unwrap();
        let mut permuted_genome = genome.clone();
        permuted_genome.rotate_left(1);
        let permuted = fuse(&mol, &ctx(permuted_genome, text.clone()), &params).unwrap();
        for (a, b) in base.iter().zip(&permuted) {
            assert!((a - b).abs() < 1e-12);
        }
        let mut permuted_text = text.clone();
        permuted_text.swap(0, 1);
        let permuted = fuse(&mol, &ctx(genome, permuted_text), &params).unwrap();
        for (a, b) in base.iter().zip(&permuted) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_text_value_projection_leaves_only_the_residual() {
        // With a zero text value projection, the text half equals the
        // projected query regardless of the text rows.
        let dims = FusionDims::tiny();
        let mut params = FusionParams::seeded(dims.clone(), 5);
        params.text_value = Matrix::zeros(dims.attn_dim, dims.text_dim);
        let mol = vec![0.2, 0.3, -0.1, 0.4];
        let text_a = vec![vec![0.5, -0.5, 0.25, 0.0, 1.0]];
        let text_b = vec![vec![-9.0, 3.0, 0.7, 2.0, -1.0], vec![1.0; 5]];
        let genome = vec![vec![0.1, 0.2, 0.3]];
        let fa = fuse(&mol, &ctx(genome.clone(), text_a), &params).unwrap();
        let fb = fuse(&mol, &ctx(genome, text_b), &params).unwrap();
        let half = dims.attn_dim;
        assert_eq!(&fa[half..], &fb[half..], "text half must ignore values");
        // And that half is exactly the projected query.
        let mut q = vec![0.0; dims.attn_dim];
        crate::linalg::matvec(
            params.w_query.values(),
            &mol,
            &mut q,
            dims.attn_dim,
            dims.mol_dim,
        );
        for (a, b) in fa[half..].iter().zip(&q) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn fused_width_is_two_contexts() {
        let dims = FusionDims::tiny();
        let params = FusionParams::seeded(dims.clone(), 2);
        let mol = vec![1.0, 0.0, 0.0, 0.0];
        let fused = fuse(
            &mol,
            &ctx(vec![vec![0.1, 0.2, 0.3]], vec![vec![0.0; 5]]),
            &params,
        )
        .unwrap();
        assert_eq!(fused.len(), dims.fused());
    }

    #[test]
    fn fuse_matches_step_by_step_recomputation() {
        let dims = FusionDims::tiny();
        let params = FusionParams::seeded(dims.clone(), 3);
        let mol = vec![0.3, -0.1, 0.2, 0.5];
        let genome = vec![vec![0.2, -0.3, 0.1], vec![0.4, 0.0, -0.5]];
        let text = vec![vec![0.1, 0.1, -0.2, 0.3, 0.0]];
        let fused = fuse(&mol, &ctx(genome.clone(), text.clone()), &params).unwrap();
        // Independent recomputation with explicit loops.
        let proj = |w: &Matrix, x: &[f64]| -> Vec<f64> {
            (0..w.rows())
                .map(|r| w.row(r).iter().zip(x).map(|(a, b)| a * b).sum())
                .collect()
        };
        let q = proj(&params.w_query, &mol);
        let recomputed_half = |key_w: &Matrix, val_w: &Matrix, rows: &[Vec<f64>]| -> Vec<f64> {
            let scale = 1.0 / (dims.attn_dim as f64).sqrt();
            let scores: Vec<f64> = rows
                .iter()
                .map(|r| {
                    let k = proj(key_w, r);
                    scale * k.iter().zip(&q).map(|(a, b)| a * b).sum::<f64>()
                })
                .collect();
            let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
            let z: f64 = exps.iter().sum();
            let mut out = q.clone();
            for (e, r) in exps.iter().zip(rows) {
                let v = proj(val_w, r);
                for (o, vi) in out.iter_mut().zip(&v) {
                    *o += (e / z) * vi;
                }
            }
            out
        };
        let mut expect = recomputed_half(&params.genome_key, &params.genome_value, &genome);
        expect.extend(recomputed_half(&params.text_key, &params.text_value, &text));
        for (a, b) in fused.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_head_outputs_half_after_sigmoid() {
        let params = FusionParams::zeros(FusionDims::tiny());
        let fused = vec![0.7; params.dims.fused()];
        assert_eq!(
            head_forward(&fused, HeadKind::AbxClass, &params).unwrap(),
            0.5
        );
        assert_eq!(head_forward(&fused, HeadKind::Mic, &params).unwrap(), 0.0);
    }

    #[test]
    fn mic_head_final_layer_is_linear() {
        let mut params = FusionParams::seeded(FusionDims::tiny(), 4);
        let fused = vec![0.25; params.dims.fused()];
        let base = head_forward(&fused, HeadKind::Mic, &params).unwrap();
        // Doubling the final linear layer doubles the output.
        let last = params.mic_head.weights.len() - 1;
        params.mic_head.weights[last] = params.mic_head.weights[last].map(|v| 2.0 * v);
        params.mic_head.biases[last].iter_mut().for_each(|b| *b *= 2.0);
        let doubled = head_forward(&fused, HeadKind::Mic, &params).unwrap();
        assert!((doubled - 2.0 * base).abs() < 1e-9);
    }

    #[test]
    fn default_head_shapes() {
        let dims = FusionDims::default();
        assert_eq!(dims.fused(), 12_294);
        assert_eq!(dims.head_shape(dims.fused()), vec![12_294, 3_073, 128, 1]);
        assert_eq!(dims.head_shape(2 * dims.fused())[0], 24_588);
    }

    #[test]
    fn three_layer_hand_case() {
        let dims = FusionDims {
            mol_dim: 1,
            genome_dim: 1,
            text_dim: 1,
            attn_dim: 1,
            head_hidden: vec![2],
        };
        let mut params = FusionParams::zeros(dims);
        // Head: input 2 -> hidden 2 (ReLU) -> 1.
        params.mic_head.weights[0] =
            Matrix::from_rows(vec![vec![1.0, -1.0], vec![0.5, 0.5]]).unwrap();
        params.mic_head.biases[0] = vec![0.1, -0.2];
        params.mic_head.weights[1] = Matrix::from_rows(vec![vec![2.0, 3.0]]).unwrap();
        params.mic_head.biases[1] = vec![0.25];
        let input = vec![0.4, 0.6];
        let h0 = (0.4 - 0.6 + 0.1f64).max(0.0);
        let h1 = (0.2 + 0.3 - 0.2f64).max(0.0);
        let expect = 2.0 * h0 + 3.0 * h1 + 0.25;
        let got = head_forward(&input, HeadKind::Mic, &params).unwrap();
        assert!((got - expect).abs() < 1e-12);
    }

    #[test]
    fn ensemble_means_member_outputs() {
        let dims = FusionDims::tiny();
        let models: Vec<FusionParams> =
            (0..7).map(|s| FusionParams::seeded(dims.clone(), s)).collect();
        let mol = vec![0.1, 0.2, 0.3, 0.4];
        let c = ctx(vec![vec![0.1, 0.0, 0.2]], vec![vec![0.3, 0.1, 0.0, 0.0, 0.2]]);
        let input = FusionInput::Single { mol: &mol, ctx: &c };
        let mean = ensemble_predict(&models, HeadKind::Mic, &input).unwrap();
        let direct: f64 = models
            .iter()
            .map(|m| predict(m, HeadKind::Mic, &input).unwrap())
            .sum::<f64>()
            / 7.0;
        assert!((mean - direct).abs() < 1e-12);
        // Identical members reduce to one model.
        let single = ensemble_predict(&models[..1], HeadKind::Mic, &input).unwrap();
        let same = predict(&models[0], HeadKind::Mic, &input).unwrap();
        assert_eq!(single, same);
        assert_eq!(
            ensemble_predict(&[], HeadKind::Mic, &input).unwrap_err(),
            FusionError::EmptyEnsemble
        );
    }

    #[test]
    fn synergy_takes_a_pair() {
        let dims = FusionDims::tiny();
        let params = FusionParams::seeded(dims, 9);
        let mol_a = vec![0.1, 0.2, 0.3, 0.4];
        let mol_b = vec![0.4, 0.3, 0.2, 0.1];
        let c = ctx(vec![vec![0.1, 0.0, 0.2]], vec![vec![0.3, 0.1, 0.0, 0.0, 0.2]]);
        let pair = FusionInput::Pair {
            mol_a: &mol_a,
            mol_b: &mol_b,
            ctx: &c,
        };
        let p = predict(&params, HeadKind::Synergy, &pair).unwrap();
        assert!(p > 0.0 && p < 1.0);
        let single = FusionInput::Single { mol: &mol_a, ctx: &c };
        assert!(predict(&params, HeadKind::Synergy, &single).is_err());
    }

    #[test]
    fn checkpoint_roundtrip() {
        let params = FusionParams::seeded(FusionDims::tiny(), 11);
        let mut buf = Vec::new();
        params.save(&mut buf).unwrap();
        let loaded = FusionParams::load(buf.as_slice()).unwrap();
        assert_eq!(params, loaded);
    }
}
