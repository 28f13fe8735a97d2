use std::collections::BTreeSet;

use crate::selfies::split_tokens;

use super::DataprepError;

/// The set of adjacent token pairs of a SELFIES string, used as a proxy
/// fingerprint for novelty scoring. Relative comparisons only; this is not a
/// structural fingerprint.
pub fn token_fingerprint(s: &str) -> Result<BTreeSet<(String, String)>, DataprepError> {
    let tokens = split_tokens(s)?;
    Ok(tokens
        .windows(2)
        .map(|w| (w[0].to_string(), w[1].to_string()))
        .collect())
}

/// Set similarity |a and b| / |a or b|, defined as 1 when both sets are
/// empty.
pub fn tanimoto<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let intersection = a.intersection(b).count();
    let union = a.len() + b.len() - intersection;
    intersection as f64 / union as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fp(s: &str) -> BTreeSet<(String, String)> {
        token_fingerprint(s).unwrap()
    }

    #[test]
    fn bigrams_of_short_strings() {
        let got = fp("[C][N][C]");
        let want: BTreeSet<(String, String)> = [
            ("[C]".to_string(), "[N]".to_string()),
            ("[N]".to_string(), "[C]".to_string()),
        ]
        .into_iter()
        .collect();
        assert_eq!(got, want);
        assert!(fp("[C]").is_empty());
        assert!(fp("").is_empty());
    }

    #[test]
    fn permutation_changes_the_set() {
        assert_ne!(fp("[C][N][O]"), fp("[N][C][O]"));
    }

    #[test]
    fn tanimoto_cases() {
        let a = fp("[C][N][C]");
        assert_eq!(tanimoto(&a, &a), 1.0);
        let empty: BTreeSet<(String, String)> = BTreeSet::new();
        assert_eq!(tanimoto(&empty, &empty), 1.0);
        assert_eq!(tanimoto(&a, &empty), 0.0);
        let x: BTreeSet<u32> = [1, 2].into_iter().collect();
        let y: BTreeSet<u32> = [2, 3].into_iter().collect();
        assert!((tanimoto(&x, &y) - 1.0 / 3.0).abs() < 1e-15);
        let z: BTreeSet<u32> = [4, 5].into_iter().collect();
        assert_eq!(tanimoto(&x, &z), 0.0);
    }

    #[test]
    fn tanimoto_properties() {
        let sets: Vec<BTreeSet<u32>> = vec![
            [1, 2, 3].into_iter().collect(),
            [2, 3, 4].into_iter().collect(),
            [9].into_iter().collect(),
            BTreeSet::new(),
        ];
        for a in &sets {
            for b in &sets {
                let t = tanimoto(a, b);
                assert!((0.0..=1.0).contains(&t));
                assert_eq!(t, tanimoto(b, a));
                if !a.is_empty() && t == 1.0 {
                    assert_eq!(a, b);
                }
            }
        }
    }
}
