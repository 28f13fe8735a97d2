use crate::chem::Element;
use crate::selfies::{split_tokens, SelfiesError, SelfiesToken};

/// Descriptor vector length used for the regression targets.
pub const DESCRIPTOR_LEN: usize = 209;

/// A fixed-length real vector of computed molecular descriptors.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorVector {
    values: Vec<f64>,
}

impl DescriptorVector {
    pub fn new(values: Vec<f64>) -> DescriptorVector {
        DescriptorVector { values }
    }

    pub fn zeros(len: usize) -> DescriptorVector {
        DescriptorVector {
            values: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Token-derived descriptors: in order, total token count, per-element atom
/// token counts (C, N, O, S, P, F, Cl, Br, I, H), branch token count, ring
/// token count, and the heteroatom fraction among atom tokens; the rest of
/// the vector is zero padding up to `len`.
pub fn compute_descriptors(s: &str, len: usize) -> Result<DescriptorVector, SelfiesError> {
    let mut values = vec![0.0; len];
    let tokens = split_tokens(s)?;
    let mut atoms = 0u32;
    let mut hetero = 0u32;
    for raw in &tokens {
        let token = SelfiesToken::parse(raw)
            .ok_or_else(|| SelfiesError::UnsupportedToken((*raw).to_string()))?;
        match token {
            SelfiesToken::Atom { element, .. } => {
                atoms += 1;
                if element != Element::C {
                    hetero += 1;
                }
                let slot = 1 + Element::ALL
                    .iter()
                    .position(|&e| e == element)
                    .expect("element in subset");
                if slot < len {
                    values[slot] += 1.0;
                }
            }
            SelfiesToken::Branch { .. } => {
                if 11 < len {
                    values[11] += 1.0;
                }
            }
            SelfiesToken::Ring { .. } => {
                if 12 < len {
                    values[12] += 1.0;
                }
            }
        }
    }
    if !values.is_empty() {
        values[0] = tokens.len() as f64;
    }
    if 13 < len && atoms > 0 {
        values[13] = hetero as f64 / atoms as f64;
    }
    Ok(DescriptorVector::new(values))
}
