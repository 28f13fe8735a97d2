use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::DataprepError;

/// One (molecule, strain) measurement with its species group and label.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivityRecord {
    pub molecule: String,
    pub strain: String,
    pub species: String,
    pub label: f64,
}

/// One cross-validation fold over record indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub test_strains: BTreeSet<String>,
}

/// Partition strains into k groups per species and hold each group out in
/// turn: every record of a held-out strain lands only in that fold's test
/// set. Deterministic in the seed.
pub fn strain_wise_splits(
    records: &[ActivityRecord],
    k: usize,
    seed: u64,
) -> Result<Vec<Fold>, DataprepError> {
    let mut by_species: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for r in records {
        by_species
            .entry(r.species.as_str())
            .or_default()
            .insert(r.strain.as_str());
    }
    for (species, strains) in &by_species {
        if strains.len() < k {
            return Err(DataprepError::TooFewStrains(species.to_string(), k));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Assign each strain a group id in 0..k, round-robin after a shuffle.
    let mut group_of: BTreeMap<&str, usize> = BTreeMap::new();
    for strains in by_species.values() {
        let mut order: Vec<&str> = strains.iter().copied().collect();
        order.shuffle(&mut rng);
        for (i, s) in order.into_iter().enumerate() {
            group_of.insert(s, i % k);
        }
    }
    let mut folds = Vec::with_capacity(k);
    for fold_id in 0..k {
        let mut fold = Fold {
            train: Vec::new(),
            test: Vec::new(),
            test_strains: BTreeSet::new(),
        };
        for (i, r) in records.iter().enumerate() {
            if group_of[r.strain.as_str()] == fold_id {
                fold.test.push(i);
                fold.test_strains.insert(r.strain.clone());
            } else {
                fold.train.push(i);
            }
        }
        folds.push(fold);
    }
    Ok(folds)
}
