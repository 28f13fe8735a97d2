use rand::Rng;

use crate::denoiser::Denoiser;
use crate::selfies::{TokenSequence, MASK_ID};

use super::{DiffusionError, NoiseSchedule};

/// A normalized probability vector over the vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalDistribution {
    probs: Vec<f64>,
}

impl CategoricalDistribution {
    pub const SUM_TOLERANCE: f64 = 1e-9;

    pub fn new(probs: Vec<f64>) -> Result<CategoricalDistribution, DiffusionError> {
        if let Some(&p) = probs.iter().find(|&&p| p < 0.0 || !p.is_finite()) {
            return Err(DiffusionError::NegativeProbability(p));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(DiffusionError::NotNormalized(sum));
        }
        Ok(CategoricalDistribution { probs })
    }

    pub fn point_mass(id: u32, vocab_size: u32) -> CategoricalDistribution {
        let mut probs = vec![0.0; vocab_size as usize];
        probs[id as usize] = 1.0;
        CategoricalDistribution { probs }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, id: u32) -> f64 {
        self.probs[id as usize]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Inverse-CDF draw.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, &p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i as u32;
            }
        }
        // Guard against accumulated rounding at the tail.
        (self.probs.len() - 1) as u32
    }

    pub fn total_variation(&self, other: &CategoricalDistribution) -> f64 {
        0.5 * self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}

fn check_time(t: f64) -> Result<(), DiffusionError> {
    if t <= 0.0 || t > 1.0 || !t.is_finite() {
        return Err(DiffusionError::TimeOutOfRange(t));
    }
    Ok(())
}

fn check_pair(t_prev: f64, t: f64) -> Result<(), DiffusionError> {
    check_time(t)?;
    if !(0.0..1.0).contains(&t_prev) || t_prev >= t {
        return Err(DiffusionError::TimeOrder { t_prev, t });
    }
    Ok(())
}

/// Corrupt a clean sequence: each position independently keeps its token
/// with probability alpha(t) and becomes `[MASK]` otherwise.
pub fn forward_sample<R: Rng>(
    x0: &TokenSequence,
    t: f64,
    sched: &NoiseSchedule,
    rng: &mut R,
) -> Result<TokenSequence, DiffusionError> {
    check_time(t)?;
    if x0.contains_mask() {
        return Err(DiffusionError::MaskInInput);
    }
    let alpha = sched.alpha(t);
    let ids: Vec<u32> = x0
        .ids()
        .iter()
        .map(|&id| if rng.gen::<f64>() < alpha { id } else { MASK_ID })
        .collect();
    Ok(TokenSequence::from(ids))
}

/// The analytic single-token posterior q(x_{t_prev} | x_t, x_0): a point mass
/// at the observed token when it is unmasked, otherwise a two-point mixture
/// of `[MASK]` and the clean token.
pub fn posterior(
    xt_tok: u32,
    x0_tok: u32,
    t_prev: f64,
    t: f64,
    sched: &NoiseSchedule,
    vocab_size: u32,
) -> Result<CategoricalDistribution, DiffusionError> {
    check_pair(t_prev, t)?;
    if xt_tok != MASK_ID {
        return Ok(CategoricalDistribution::point_mass(xt_tok, vocab_size));
    }
    let a_prev = sched.alpha(t_prev);
    let a_t = sched.alpha(t);
    let denom = 1.0 - a_t;
    let mut probs = vec![0.0; vocab_size as usize];
    probs[MASK_ID as usize] = (1.0 - a_prev) / denom;
    probs[x0_tok as usize] += (a_prev - a_t) / denom;
    CategoricalDistribution::new(probs)
}

/// One ancestral reverse step: unmasked positions are copied, masked
/// positions stay masked with probability (1-alpha_prev)/(1-alpha_t) and are
/// otherwise filled from the denoiser distribution.
pub fn reverse_step<R: Rng>(
    xt: &TokenSequence,
    t_prev: f64,
    t: f64,
    den: &dyn Denoiser,
    sched: &NoiseSchedule,
    rng: &mut R,
) -> Result<TokenSequence, DiffusionError> {
    check_pair(t_prev, t)?;
    let out = den.predict(xt, t)?;
    out.check_contract(xt)?;
    let a_prev = sched.alpha(t_prev);
    let a_t = sched.alpha(t);
    let p_stay_masked = (1.0 - a_prev) / (1.0 - a_t);
    let mut next = xt.clone();
    for pos in 0..xt.len() {
        if xt.get(pos) != MASK_ID {
            continue;
        }
        if rng.gen::<f64>() < p_stay_masked {
            continue;
        }
        next.set(pos, out.position(pos).sample(rng));
    }
    Ok(next)
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
    fn forward_at_t1_masks_everything() {
        let sched = NoiseSchedule::log_linear();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x0 = seq(&[3, 4, 5, 3]);
        let xt = forward_sample(&x0, 1.0, &sched, &mut rng).unwrap();
        assert!(xt.ids().iter().all(|&id| id == MASK_ID));
    }

    #[test]
    fn forward_at_eps_rarely_masks() {
        let sched = NoiseSchedule::log_linear();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x0 = seq(&vec![3; 10_000]);
        let xt = forward_sample(&x0, sched.eps(), &sched, &mut rng).unwrap();
        let masked = xt.mask_positions().count();
        // Binomial(10000, 1e-3): far below 40 with overwhelming probability.
        assert!(masked < 40, "masked {masked} positions at t=eps");
    }

    #[test]
    fn forward_is_absorbing_over_a_million_positions() {
        let sched = NoiseSchedule::log_linear();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x0 = seq(&vec![3; 10_000]);
        for i in 1..=100 {
            let t = i as f64 / 100.0;
            let xt = forward_sample(&x0, t, &sched, &mut rng).unwrap();
            for (a, b) in xt.ids().iter().zip(x0.ids()) {
                assert!(*a == *b || *a == MASK_ID, "foreign token appeared");
            }
        }
    }

    /// Exact two-sided binomial test p-value for observing `obs` successes
    /// in n trials at success probability one half.
    fn binomial_two_sided_p(n: usize, obs: usize) -> f64 {
        let mut log_fact = vec![0.0f64; n + 1];
        for i in 1..=n {
            log_fact[i] = log_fact[i - 1] + (i as f64).ln();
        }
        let log_pmf = |k: usize| {
            log_fact[n] - log_fact[k] - log_fact[n - k] - n as f64 * std::f64::consts::LN_2
        };
        let dev = (obs as f64 - n as f64 / 2.0).abs();
        let mut p = 0.0;
        for k in 0..=n {
            if (k as f64 - n as f64 / 2.0).abs() >= dev {
                p += log_pmf(k).exp();
            }
        }
        p.min(1.0)
    }

    #[test]
    fn masked_counts_pass_binomial_test_over_100_trials() {
        // t = 0.5, L = 1000: the masked count is Binomial(1000, 0.5).
        let sched = NoiseSchedule::log_linear();
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let x0 = seq(&vec![3; 1000]);
        for trial in 0..100 {
            let xt = forward_sample(&x0, 0.5, &sched, &mut rng).unwrap();
            let masked = xt.mask_positions().count();
            let p = binomial_two_sided_p(1000, masked);
            assert!(
                p >= 0.001,
                "trial {trial}: masked {masked}, two-sided p {p}"
            );
        }
    }

    #[test]
    fn forward_rejects_bad_time_and_masked_input() {
        let sched = NoiseSchedule::log_linear();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x0 = seq(&[3]);
        assert!(matches!(
            forward_sample(&x0, 0.0, &sched, &mut rng),
            Err(DiffusionError::TimeOutOfRange(_))
        ));
        assert!(matches!(
            forward_sample(&x0, 1.5, &sched, &mut rng),
            Err(DiffusionError::TimeOutOfRange(_))
        ));
        assert!(matches!(
            forward_sample(&seq(&[MASK_ID]), 0.5, &sched, &mut rng),
            Err(DiffusionError::MaskInInput)
        ));
    }

    #[test]
    fn posterior_point_mass_on_unmasked() {
        let sched = NoiseSchedule::log_linear();
        let d = posterior(3, 4, 0.2, 0.5, &sched, K).unwrap();
        assert_eq!(d.prob(3), 1.0);
        assert_eq!(d.prob(4), 0.0);
    }

    #[test]
    fn posterior_mixture_matches_hand_values() {
        // alpha_prev = 0.6, alpha_t = 0.5 -> P(MASK) = 0.8, P(x0) = 0.2.
        let sched = NoiseSchedule::log_linear();
        let d = posterior(MASK_ID, 4, 0.4, 0.5, &sched, K).unwrap();
        assert!((d.prob(MASK_ID) - 0.8).abs() < 1e-12);
        assert!((d.prob(4) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn posterior_terminal_unmasking() {
        let sched = NoiseSchedule::log_linear();
        let d = posterior(MASK_ID, 4, 0.0, 0.5, &sched, K).unwrap();
        assert_eq!(d.prob(4), 1.0);
        assert_eq!(d.prob(MASK_ID), 0.0);
    }

    #[test]
    fn posterior_rejects_wrong_time_order() {
        let sched = NoiseSchedule::log_linear();
        assert!(matches!(
            posterior(MASK_ID, 4, 0.5, 0.5, &sched, K),
            Err(DiffusionError::TimeOrder { .. })
        ));
    }

    #[test]
    fn posterior_sums_to_one_on_grid() {
        let sched = NoiseSchedule::log_linear();
        for i in 1..20 {
            for j in 0..i {
                let t = i as f64 / 20.0;
                let t_prev = j as f64 / 20.0;
                let d = posterior(MASK_ID, 3, t_prev, t, &sched, K).unwrap();
                assert!((d.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn reverse_step_copies_unmasked_positions() {
        let sched = NoiseSchedule::log_linear();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let oracle = OracleDenoiser::uniform(vec![seq(&[3, 4])], K).unwrap();
        let xt = seq(&[3, 4]);
        let next = reverse_step(&xt, 0.25, 0.5, &oracle, &sched, &mut rng).unwrap();
        assert_eq!(next, xt);
    }

    #[test]
    fn reverse_step_terminal_point_mass() {
        // alpha_prev = 1 with a point-mass denoiser forces the clean token.
        let sched = NoiseSchedule::log_linear();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let oracle = OracleDenoiser::uniform(vec![seq(&[4, 4])], K).unwrap();
        let xt = seq(&[MASK_ID, MASK_ID]);
        let next = reverse_step(&xt, 0.0, 0.5, &oracle, &sched, &mut rng).unwrap();
        assert_eq!(next, seq(&[4, 4]));
    }

    #[test]
    fn reverse_step_mixture_frequencies() {
        // alpha_prev = 0.6, alpha_t = 0.5, denoiser uniform over 3 tokens:
        // P(MASK) = 0.8, each token 0.2/3. Checked over 1e5 draws.
        let sched = NoiseSchedule::log_linear();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let data = vec![seq(&[3]), seq(&[4]), seq(&[5])];
        let oracle = OracleDenoiser::uniform(data, K).unwrap();
        let xt = seq(&[MASK_ID]);
        let n = 100_000;
        let mut counts = [0u32; K as usize];
        for _ in 0..n {
            let next = reverse_step(&xt, 0.4, 0.5, &oracle, &sched, &mut rng).unwrap();
            counts[next.get(0) as usize] += 1;
        }
        let freq = |id: u32| counts[id as usize] as f64 / n as f64;
        assert!((freq(MASK_ID) - 0.8).abs() < 5e-3);
        for id in [3, 4, 5] {
            assert!((freq(id) - 0.2 / 3.0).abs() < 3e-3);
        }
    }

    #[test]
    fn categorical_sampling_matches_probs() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let d = CategoricalDistribution::new(vec![0.1, 0.2, 0.7]).unwrap();
        let mut counts = [0u32; 3];
        for _ in 0..100_000 {
            counts[d.sample(&mut rng) as usize] += 1;
        }
        for (i, &c) in counts.iter().enumerate() {
            assert!((c as f64 / 100_000.0 - d.prob(i as u32)).abs() < 5e-3);
        }
    }

    #[test]
    fn categorical_rejects_unnormalized() {
        assert!(matches!(
            CategoricalDistribution::new(vec![0.5, 0.6]),
            Err(DiffusionError::NotNormalized(_))
        ));
        assert!(matches!(
            CategoricalDistribution::new(vec![-0.1, 1.1]),
            Err(DiffusionError::NegativeProbability(_))
        ));
    }
}
