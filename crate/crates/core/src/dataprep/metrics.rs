use super::DataprepError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionMetrics {
    pub r2: f64,
    pub pearson: f64,
    pub spearman: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassificationMetrics {
    pub auroc: f64,
    pub auprc: f64,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64, DataprepError> {
    let (ma, mb) = (mean(a), mean(b));
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return Err(DataprepError::DegenerateVariance("correlation undefined"));
    }
    Ok(cov / (va * vb).sqrt())
}

/// Mid-ranks (ties averaged), 1-based.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).expect("finite values"));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let rank = (i + 1 + j + 1) as f64 / 2.0;
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Coefficient of determination plus Pearson and Spearman correlations.
pub fn regression_metrics(
    preds: &[f64],
    labels: &[f64],
) -> Result<RegressionMetrics, DataprepError> {
    if preds.len() != labels.len() {
        return Err(DataprepError::LengthMismatch {
            left: preds.len(),
            right: labels.len(),
        });
    }
    if preds.len() < 2 {
        return Err(DataprepError::TooFewPoints(preds.len()));
    }
    let ml = mean(labels);
    let ss_tot: f64 = labels.iter().map(|y| (y - ml) * (y - ml)).sum();
    if ss_tot == 0.0 {
        return Err(DataprepError::DegenerateVariance("labels are constant"));
    }
    let ss_res: f64 = preds
        .iter()
        .zip(labels)
        .map(|(p, y)| (p - y) * (p - y))
        .sum();
    let r2 = 1.0 - ss_res / ss_tot;
    let pearson = pearson(preds, labels)?;
    let spearman = {
        let rp = ranks(preds);
        let rl = ranks(labels);
        pearson_of_ranks(&rp, &rl)?
    };
    Ok(RegressionMetrics {
        r2,
        pearson,
        spearman,
    })
}

fn pearson_of_ranks(a: &[f64], b: &[f64]) -> Result<f64, DataprepError> {
    pearson(a, b)
}

/// Rank-based area under the ROC curve (ties get half credit) and
/// step-interpolated area under the precision-recall curve.
pub fn classification_metrics(
    scores: &[f64],
    labels: &[u8],
) -> Result<ClassificationMetrics, DataprepError> {
    if scores.len() != labels.len() {
        return Err(DataprepError::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(DataprepError::SingleClass);
    }
    // AUROC from mid-ranks of the positive class.
    let r = ranks(scores);
    let rank_sum: f64 = r
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l == 1)
        .map(|(r, _)| r)
        .sum();
    let auroc =
        (rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0) / (n_pos as f64 * n_neg as f64);
    // AUPRC by descending-score sweep; tied scores move as one block.
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).expect("finite scores"));
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut prev_recall = 0.0;
    let mut auprc = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        for &k in &idx[i..=j] {
            if labels[k] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
        }
        let recall = tp as f64 / n_pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        auprc += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j + 1;
    }
    Ok(ClassificationMetrics { auroc, auprc })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn perfect_predictions() {
        let labels = [1.0, 2.0, 3.0, 4.0];
        let m = regression_metrics(&labels, &labels).unwrap();
        assert!((m.r2 - 1.0).abs() < 1e-12);
        assert!((m.pearson - 1.0).abs() < 1e-12);
        assert!((m.spearman - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_predictions_are_degenerate() {
        let labels = [1.0, 2.0, 3.0];
        let preds = [2.0, 2.0, 2.0];
        assert!(matches!(
            regression_metrics(&preds, &labels),
            Err(DataprepError::DegenerateVariance(_))
        ));
        assert!(matches!(
            regression_metrics(&labels, &[5.0, 5.0, 5.0]),
            Err(DataprepError::DegenerateVariance(_))
        ));
    }

    #[test]
    fn five_point_case_matches_direct_formulas() {
        let preds = [0.3, 1.2, 0.9, 2.5, 1.9];
        let labels = [0.5, 1.0, 1.1, 2.2, 2.4];
        let m = regression_metrics(&preds, &labels).unwrap();
        // Independent recomputation.
        let ml = labels.iter().sum::<f64>() / 5.0;
        let ss_tot: f64 = labels.iter().map(|y| (y - ml).powi(2)).sum();
        let ss_res: f64 = preds
            .iter()
            .zip(&labels)
            .map(|(p, y)| (p - y).powi(2))
            .sum();
        assert!((m.r2 - (1.0 - ss_res / ss_tot)).abs() < 1e-12);
        let mp = preds.iter().sum::<f64>() / 5.0;
        let cov: f64 = preds
            .iter()
            .zip(&labels)
            .map(|(p, y)| (p - mp) * (y - ml))
            .sum();
        let vp: f64 = preds.iter().map(|p| (p - mp).powi(2)).sum();
        assert!((m.pearson - cov / (vp * ss_tot).sqrt()).abs() < 1e-12);
        // Ranks of preds: 0.3,0.9,1.2,1.9,2.5 -> labels are co-monotone
        // except the (1.2, 0.9) swap against (1.0, 1.1).
        let rp = ranks(&preds);
        let rl = ranks(&labels);
        let spearman = pearson(&rp, &rl).unwrap();
        assert!((m.spearman - spearman).abs() < 1e-12);
    }

    #[test]
    fn auroc_of_perfect_separation_is_one() {
        let scores = [0.1, 0.2, 0.8, 0.9];
        let labels = [0, 0, 1, 1];
        let m = classification_metrics(&scores, &labels).unwrap();
        assert_eq!(m.auroc, 1.0);
        assert_eq!(m.auprc, 1.0);
    }

    #[test]
    fn four_point_case_matches_pair_counting() {
        let scores = [0.9, 0.4, 0.6, 0.2];
        let labels = [1, 0, 1, 0];
        let m = classification_metrics(&scores, &labels).unwrap();
        // Exhaustive pair counting over (positive, negative) pairs.
        let mut wins = 0.0;
        let mut total = 0.0;
        for (sp, lp) in scores.iter().zip(&labels) {
            if *lp != 1 {
                continue;
            }
            for (sn, ln) in scores.iter().zip(&labels) {
                if *ln != 0 {
                    continue;
                }
                total += 1.0;
                if sp > sn {
                    wins += 1.0;
                } else if sp == sn {
                    wins += 0.5;
                }
            }
        }
        assert!((m.auroc - wins / total).abs() < 1e-12);
        // Sweep by hand: thresholds at 0.9, 0.6, 0.4, 0.2 give precision
        // 1, 1, 2/3, 1/2 and recall 1/2, 1, 1, 1.
        let expect_auprc = 0.5 * 1.0 + 0.5 * 1.0;
        assert!((m.auprc - expect_auprc).abs() < 1e-12);
    }

    #[test]
    fn random_scores_give_half_auroc() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let n = 10_000;
        let scores: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let labels: Vec<u8> = (0..n).map(|_| rng.gen_bool(0.5) as u8).collect();
        let m = classification_metrics(&scores, &labels).unwrap();
        assert!((m.auroc - 0.5).abs() < 0.02, "auroc {}", m.auroc);
    }

    #[test]
    fn single_class_rejected() {
        assert!(matches!(
            classification_metrics(&[0.1, 0.2], &[1, 1]),
            Err(DataprepError::SingleClass)
        ));
    }

    #[test]
    fn tied_scores_get_half_credit() {
        let scores = [0.5, 0.5];
        let labels = [1, 0];
        let m = classification_metrics(&scores, &labels).unwrap();
        assert_eq!(m.auroc, 0.5);
    }
}
