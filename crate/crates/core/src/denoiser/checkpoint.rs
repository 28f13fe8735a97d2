//! Plain-text parameter checkpoints.
//!
//! Format, one item per line:
//!
//! ```text
//! MDCKPT 1
//! meta <key> <value...>
//! tensor <name> <rows> <cols>
//! <cols space-separated f64 values>     (repeated <rows> times)
//! ```
//!
//! Values are written in shortest round-trip decimal form.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use super::DenoiserError;

const MAGIC: &str = "MDCKPT 1";

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl NamedTensor {
    pub fn vector(name: &str, data: Vec<f64>) -> NamedTensor {
        NamedTensor {
            name: name.to_string(),
            rows: 1,
            cols: data.len(),
            data,
        }
    }

    pub fn matrix(name: &str, rows: usize, cols: usize, data: Vec<f64>) -> NamedTensor {
        debug_assert_eq!(rows * cols, data.len());
        NamedTensor {
            name: name.to_string(),
            rows,
            cols,
            data,
        }
    }
}

pub fn save_tensors<W: Write>(
    mut w: W,
    meta: &[(String, String)],
    tensors: &[NamedTensor],
) -> Result<(), DenoiserError> {
    let io = |e: std::io::Error| DenoiserError::Checkpoint(e.to_string());
    writeln!(w, "{MAGIC}").map_err(io)?;
    for (k, v) in meta {
        writeln!(w, "meta {k} {v}").map_err(io)?;
    }
    for t in tensors {
        if t.data.len() != t.rows * t.cols {
            return Err(DenoiserError::Checkpoint(format!(
                "tensor {} has {} values for shape {}x{}",
                t.name,
                t.data.len(),
                t.rows,
                t.cols
            )));
        }
        writeln!(w, "tensor {} {} {}", t.name, t.rows, t.cols).map_err(io)?;
        for r in 0..t.rows {
            let row = &t.data[r * t.cols..(r + 1) * t.cols];
            let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            writeln!(w, "{}", line.join(" ")).map_err(io)?;
        }
    }
    Ok(())
}

pub fn load_tensors<R: BufRead>(
    r: R,
) -> Result<(BTreeMap<String, String>, Vec<NamedTensor>), DenoiserError> {
    let bad = |msg: &str| DenoiserError::Checkpoint(msg.to_string());
    let mut lines = r.lines();
    let first = lines
        .next()
        .ok_or_else(|| bad("empty checkpoint"))?
        .map_err(|e| DenoiserError::Checkpoint(e.to_string()))?;
    if first.trim() != MAGIC {
        return Err(bad("bad magic line"));
    }
    let mut meta = BTreeMap::new();
    let mut tensors: Vec<NamedTensor> = Vec::new();
    let mut pending: Option<(String, usize, usize, Vec<f64>)> = None;
    for line in lines {
        let line = line.map_err(|e| DenoiserError::Checkpoint(e.to_string()))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix("meta ") {
            let (k, v) = rest
                .split_once(' ')
                .ok_or_else(|| bad("meta line needs key and value"))?;
            meta.insert(k.to_string(), v.to_string());
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix("tensor ") {
            if let Some((name, rows, cols, data)) = pending.take() {
                if data.len() != rows * cols {
                    return Err(bad(&format!("tensor {name} is incomplete")));
                }
                tensors.push(NamedTensor::matrix(&name, rows, cols, data));
            }
            let parts: Vec<&str> = rest.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(bad("tensor line needs name rows cols"));
            }
            let rows: usize = parts[1].parse().map_err(|_| bad("bad rows"))?;
            let cols: usize = parts[2].parse().map_err(|_| bad("bad cols"))?;
            pending = Some((parts[0].to_string(), rows, cols, Vec::with_capacity(rows * cols)));
            continue;
        }
        let Some((_, _, cols, data)) = pending.as_mut() else {
            return Err(bad("value line outside a tensor"));
        };
        let before = data.len();
        for tok in trimmed.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| bad("bad value"))?;
            data.push(v);
        }
        if data.len() - before != *cols {
            return Err(bad("row width mismatch"));
        }
    }
    if let Some((name, rows, cols, data)) = pending.take() {
        if data.len() != rows * cols {
            return Err(bad(&format!("tensor {name} is incomplete")));
        }
        tensors.push(NamedTensor::matrix(&name, rows, cols, data));
    }
    Ok((meta, tensors))
}

use super::toy::{Layout, ToyConfig, ToyDenoiser};

impl ToyDenoiser {
    pub fn save<W: Write>(&self, w: W) -> Result<(), DenoiserError> {
        let cfg = self.config();
        let meta = vec![
            ("kind".to_string(), "toy-denoiser".to_string()),
            (
                "config".to_string(),
                format!(
                    "{} {} {} {} {} {} {}",
                    cfg.vocab_size,
                    cfg.max_len,
                    cfg.dim,
                    cfg.layers,
                    cfg.ffn_dim,
                    cfg.mtr_hidden,
                    cfg.descriptor_len
                ),
            ),
        ];
        let tensors = vec![NamedTensor::vector("params", self.params().to_vec())];
        save_tensors(w, &meta, &tensors)
    }

    pub fn load<R: BufRead>(r: R) -> Result<ToyDenoiser, DenoiserError> {
        let (meta, tensors) = load_tensors(r)?;
        if meta.get("kind").map(String::as_str) != Some("toy-denoiser") {
            return Err(DenoiserError::Checkpoint(
                "checkpoint is not a toy denoiser".to_string(),
            ));
        }
        let config = meta
            .get("config")
            .ok_or_else(|| DenoiserError::Checkpoint("missing config meta".to_string()))?;
        let nums: Vec<usize> = config
            .split_whitespace()
            .map(|p| p.parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| DenoiserError::Checkpoint("bad config numbers".to_string()))?;
        if nums.len() != 7 {
            return Err(DenoiserError::Checkpoint("config needs 7 fields".to_string()));
        }
        let cfg = ToyConfig {
            vocab_size: nums[0] as u32,
            max_len: nums[1],
            dim: nums[2],
            layers: nums[3],
            ffn_dim: nums[4],
            mtr_hidden: nums[5],
            descriptor_len: nums[6],
        };
        let expected = Layout::of(&cfg).total;
        let params = tensors
            .iter()
            .find(|t| t.name == "params")
            .ok_or_else(|| DenoiserError::Checkpoint("missing params tensor".to_string()))?;
        if params.data.len() != expected {
            return Err(DenoiserError::Checkpoint(format!(
                "params length {} does not match config ({expected})",
                params.data.len()
            )));
        }
        let mut den = ToyDenoiser::zeros(cfg);
        den.params_mut().copy_from_slice(&params.data);
        Ok(den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tensor_roundtrip_is_exact() {
        let tensors = vec![
            NamedTensor::matrix("a", 2, 3, vec![1.0, -2.5, 3.25e-7, 0.1, 4.0, 1e300]),
            NamedTensor::vector("b", vec![0.1 + 0.2, f64::MIN_POSITIVE]),
        ];
        let meta = vec![("kind".to_string(), "test".to_string())];
        let mut buf = Vec::new();
        save_tensors(&mut buf, &meta, &tensors).unwrap();
        let (m2, t2) = load_tensors(buf.as_slice()).unwrap();
        assert_eq!(m2.get("kind").unwrap(), "test");
        assert_eq!(t2, tensors);
    }

    #[test]
    fn toy_denoiser_checkpoint_roundtrip() {
        let den = ToyDenoiser::seeded(ToyConfig::tiny(7, 6), 42);
        let mut buf = Vec::new();
        den.save(&mut buf).unwrap();
        let loaded = ToyDenoiser::load(buf.as_slice()).unwrap();
        assert_eq!(den.params(), loaded.params());
        assert_eq!(den.config(), loaded.config());
    }

    #[test]
    fn rejects_corrupt_checkpoints() {
        assert!(load_tensors("nonsense".as_bytes()).is_err());
        let truncated = "MDCKPT 1\ntensor a 2 2\n1 2\n";
        assert!(load_tensors(truncated.as_bytes()).is_err());
    }
}
