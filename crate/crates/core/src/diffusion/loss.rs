use rand::Rng;

use crate::denoiser::{Denoiser, MtrHead};
use crate::selfies::{TokenSequence, MASK_ID};

use super::{forward_sample, DiffusionError, NoiseSchedule};

/// Weighting between the diffusion objective and the descriptor-regression
/// auxiliary objective, plus the Monte-Carlo sample count per example.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    /// Multiplier on the descriptor-regression loss.
    pub lambda: f64,
    /// Time draws per example in the Monte-Carlo loss estimate.
    pub t_samples: usize,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            lambda: 0.1,
            t_samples: 1,
        }
    }
}

/// One integrand evaluation of the diffusion loss at a fixed (x_t, t):
/// (1/t) * sum over masked positions of -ln p(x0_l). Unmasked positions
/// contribute zero because the denoiser copies them through with
/// probability one.
pub fn dlm_term(
    x0: &TokenSequence,
    xt: &TokenSequence,
    t: f64,
    den: &dyn Denoiser,
) -> Result<f64, DiffusionError> {
    if x0.len() != xt.len() {
        return Err(DiffusionError::DimensionMismatch {
            left: x0.len(),
            right: xt.len(),
        });
    }
    let out = den.predict(xt, t)?;
    out.check_contract(xt)?;
    let mut total = 0.0;
    for pos in 0..xt.len() {
        if xt.get(pos) != MASK_ID {
            continue;
        }
        let p = out.position(pos).prob(x0.get(pos));
        total += -p.ln();
    }
    Ok(total / t)
}

/// Monte-Carlo estimate of the negative evidence lower bound: expectation of
/// `dlm_term` over t ~ U(0,1] and the forward corruption at t.
pub fn dlm_loss<R: Rng>(
    x0: &TokenSequence,
    den: &dyn Denoiser,
    sched: &NoiseSchedule,
    cfg: &LossConfig,
    rng: &mut R,
) -> Result<f64, DiffusionError> {
    let draws = cfg.t_samples.max(1);
    let mut total = 0.0;
    for _ in 0..draws {
        // U(0,1]: complement of the half-open standard draw.
        let t = 1.0 - rng.gen::<f64>();
        let xt = forward_sample(x0, t, sched, rng)?;
        total += dlm_term(x0, &xt, t, den)?;
    }
    Ok(total / draws as f64)
}

/// Mean squared error between two equal-length vectors.
pub fn mse(pred: &[f64], target: &[f64]) -> Result<f64, DiffusionError> {
    if pred.len() != target.len() {
        return Err(DiffusionError::DimensionMismatch {
            left: pred.len(),
            right: target.len(),
        });
    }
    let n = pred.len();
    if n == 0 {
        return Ok(0.0);
    }
    Ok(pred
        .iter()
        .zip(target)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / n as f64)
}

/// Descriptor-regression loss: run the regression head on the feature vector
/// and take the mean squared error against the target descriptors.
pub fn mtr_loss(
    features: &[f64],
    targets: &[f64],
    head: &MtrHead,
) -> Result<f64, DiffusionError> {
    let pred = head.forward(features).map_err(DiffusionError::Denoiser)?;
    mse(&pred, targets)
}

/// Total training loss: diffusion term plus lambda times the regression term.
pub fn combined_loss(dlm: f64, mtr: f64, cfg: &LossConfig) -> f64 {
    dlm + cfg.lambda * mtr
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::denoiser::OracleDenoiser;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const K: u32 = 6;

    fn seq(ids: &[u32]) -> TokenSequence {
        TokenSequence::from(ids.to_vec())
    }

    #[test]
    fn point_mass_data_with_oracle_has_zero_loss() {
        let sched = NoiseSchedule::log_linear();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x0 = seq(&[3, 4, 5]);
        let oracle = OracleDenoiser::uniform(vec![x0.clone()], K).unwrap();
        let cfg = LossConfig {
            lambda: 0.1,
            t_samples: 200,
        };
        let loss = dlm_loss(&x0, &oracle, &sched, &cfg, &mut rng).unwrap();
        assert!(loss.abs() <= 1e-12, "loss {loss}");
    }

    #[test]
    fn single_masked_position_half_probability_term() {
        // t = 0.5, one masked position, denoiser assigns 0.5 to the truth:
        // term = (1/0.5) * ln 2 = 2 ln 2.
        let data = vec![seq(&[3, 3]), seq(&[3, 4])];
        let oracle = OracleDenoiser::uniform(data, K).unwrap();
        let x0 = seq(&[3, 4]);
        let xt = seq(&[3, MASK_ID]);
        let term = dlm_term(&x0, &xt, 0.5, &oracle).unwrap();
        assert!((term - 2.0 * std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn unmasked_positions_contribute_nothing() {
        let x0 = seq(&[3, 4]);
        let oracle = OracleDenoiser::uniform(vec![x0.clone()], K).unwrap();
        let term = dlm_term(&x0, &x0, 0.7, &oracle).unwrap();
        assert_eq!(term, 0.0);
    }

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mse(&[2.0, 3.0], &[1.0, 2.0]).unwrap(), 1.0);
        assert!(matches!(
            mse(&[1.0], &[1.0, 2.0]),
            Err(DiffusionError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn mse_random_case_matches_direct_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let pred: Vec<f64> = (0..5).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect();
        let target: Vec<f64> = (0..5).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect();
        let direct: f64 = (0..5).map(|i| (pred[i] - target[i]).powi(2)).sum::<f64>() / 5.0;
        assert!((mse(&pred, &target).unwrap() - direct).abs() < 1e-15);
    }

    #[test]
    fn mtr_loss_runs_the_head_then_mse() {
        use crate::denoiser::{ToyConfig, ToyDenoiser};
        let den = ToyDenoiser::seeded(ToyConfig::tiny(6, 4), 1);
        let features = vec![0.3; den.config().dim];
        let head = den.mtr_head();
        let pred = head.forward(&features).unwrap();
        // Exact targets give zero loss; shifting every target by one gives
        // exactly one.
        assert_eq!(mtr_loss(&features, &pred, &head).unwrap(), 0.0);
        let shifted: Vec<f64> = pred.iter().map(|p| p + 1.0).collect();
        assert!((mtr_loss(&features, &shifted, &head).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            mtr_loss(&features, &pred[..3], &head),
            Err(DiffusionError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn combined_loss_is_affine_in_mtr() {
        let zero = LossConfig {
            lambda: 0.0,
            t_samples: 1,
        };
        assert_eq!(combined_loss(1.5, 7.0, &zero), 1.5);
        let cfg = LossConfig::default();
        assert!((combined_loss(1.0, 2.0, &cfg) - 1.2).abs() < 1e-15);
        // Linearity in the regression term at fixed diffusion term.
        let a = combined_loss(1.0, 3.0, &cfg);
        let b = combined_loss(1.0, 5.0, &cfg);
        let c = combined_loss(1.0, 4.0, &cfg);
        assert!((a + b - 2.0 * c).abs() < 1e-15);
    }

    #[test]
    fn dlm_loss_is_nonnegative() {
        let sched = NoiseSchedule::log_linear();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let data = vec![seq(&[3, 4]), seq(&[4, 3]), seq(&[5, 5])];
        let oracle = OracleDenoiser::uniform(data.clone(), K).unwrap();
        let cfg = LossConfig {
            lambda: 0.1,
            t_samples: 50,
        };
        for x0 in &data {
            let loss = dlm_loss(x0, &oracle, &sched, &cfg, &mut rng).unwrap();
            assert!(loss >= 0.0);
        }
    }
}
