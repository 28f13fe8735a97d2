//! Full generation loops: plain, guided, and remasking, including the
//! three-stage schedule that freezes the noise level inside a remasking
//! window.

use num_traits::Num;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::denoiser::Denoiser;
use crate::diffusion::{DiffusionError, NoiseSchedule};
use crate::guidance::{
    guided_position_distribution, guided_reverse_step, GuidanceConfig, GuidanceError,
};
use crate::selfies::{TokenSequence, MASK_ID};

#[derive(Debug, Error, PartialEq)]
pub enum SamplerError {
    #[error("remask rate {0} outside [0, 1)")]
    RemaskRateOutOfRange(f64),
    #[error("remask weights negative: beta1 {beta1}, beta2 {beta2}")]
    NegativeWeight { beta1: f64, beta2: f64 },
    #[error("remask window invalid: need 0 < t_off < t_on < 1")]
    BadWindow,
    #[error("steps must be at least 2")]
    TooFewSteps,
    #[error("sequence length must be positive")]
    ZeroLength,
    #[error(transparent)]
    Guidance(#[from] GuidanceError),
    #[error(transparent)]
    Diffusion(#[from] DiffusionError),
}

/// Remasking window and rates. Inside [t_off, t_on] the noise schedule is
/// frozen at alpha(t_on) and generated tokens are given a chance to return
/// to `[MASK]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RemaskSchedule {
    pub t_on: f64,
    pub t_off: f64,
    /// Remask rate r_t applied inside the window.
    pub r_loop: f64,
    /// Fraction of generated tokens remasked per loop pass.
    pub loop_fraction: f64,
}

impl Default for RemaskSchedule {
    fn default() -> Self {
        RemaskSchedule {
            t_on: 0.55,
            t_off: 0.45,
            r_loop: 0.1,
            loop_fraction: 0.1,
        }
    }
}

impl RemaskSchedule {
    /// No remasking anywhere; the window still freezes nothing because both
    /// rates are zero.
    pub fn off() -> RemaskSchedule {
        RemaskSchedule {
            r_loop: 0.0,
            loop_fraction: 0.0,
            ..RemaskSchedule::default()
        }
    }

    pub fn validate(&self) -> Result<(), SamplerError> {
        if !(self.t_off > 0.0 && self.t_off < self.t_on && self.t_on < 1.0) {
            return Err(SamplerError::BadWindow);
        }
        if !(0.0..1.0).contains(&self.r_loop) || !(0.0..=1.0).contains(&self.loop_fraction) {
            return Err(SamplerError::RemaskRateOutOfRange(self.r_loop));
        }
        Ok(())
    }
}

/// Which stage of the three-stage schedule a time belongs to.
pub fn stage_of(t: f64, remask: &RemaskSchedule) -> u8 {
    if t > remask.t_on {
        1
    } else if t >= remask.t_off {
        2
    } else {
        3
    }
}

/// The masked-branch mixture weights of the remasking step:
/// beta1 = 1 - alpha_prev - r * alpha_t (stay masked),
/// beta2 = alpha_prev - (1 - r) * alpha_t (reveal a token).
/// Their sum is identically 1 - alpha_t.
pub fn remask_betas<T: Num + Copy>(alpha_prev: T, alpha_t: T, r: T) -> (T, T) {
    let one = T::one();
    let beta1 = one - alpha_prev - r * alpha_t;
    let beta2 = alpha_prev - (one - r) * alpha_t;
    (beta1, beta2)
}

fn checked_betas(alpha_prev: f64, alpha_t: f64, r: f64) -> Result<(f64, f64), SamplerError> {
    if !(0.0..1.0).contains(&r) {
        return Err(SamplerError::RemaskRateOutOfRange(r));
    }
    let (beta1, beta2) = remask_betas(alpha_prev, alpha_t, r);
    if beta1 < 0.0 || beta2 < 0.0 {
        return Err(SamplerError::NegativeWeight { beta1, beta2 });
    }
    Ok((beta1, beta2))
}

/// One remasking reverse step: unmasked tokens are independently remasked
/// with probability r_t, masked tokens stay masked with weight beta1 or are
/// filled from the denoiser with weight beta2.
pub fn remask_reverse_step<R: Rng>(
    xt: &TokenSequence,
    t_prev: f64,
    t: f64,
    den: &dyn Denoiser,
    sched: &NoiseSchedule,
    r_t: f64,
    rng: &mut R,
) -> Result<TokenSequence, SamplerError> {
    let alpha_prev = sched.alpha(t_prev);
    let alpha_t = sched.alpha(t);
    let (beta1, _beta2) = checked_betas(alpha_prev, alpha_t, r_t)?;
    let out = den.predict(xt, t).map_err(DiffusionError::Denoiser)?;
    out.check_contract(xt).map_err(DiffusionError::Denoiser)?;
    let p_stay = beta1 / (1.0 - alpha_t);
    let mut next = xt.clone();
    for pos in 0..xt.len() {
        if xt.get(pos) == MASK_ID {
            if rng.gen::<f64>() >= p_stay {
                next.set(pos, out.position(pos).sample(rng));
            }
        } else if rng.gen::<f64>() < r_t {
            next.set(pos, MASK_ID);
        }
    }
    Ok(next)
}

/// Sampler settings: 256 steps by default, stages one and three guided
/// by the first predictor at strength 15, stage two by the second
/// predictor at strength 15.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub steps: usize,
    pub len: usize,
    pub n_samples: usize,
    pub stage13_gammas: Vec<f64>,
    pub stage2_gammas: Vec<f64>,
    /// Worker threads for independent chains; results do not depend on it.
    pub jobs: usize,
}

impl SamplerConfig {
    pub fn new(len: usize) -> SamplerConfig {
        SamplerConfig {
            steps: 256,
            len,
            n_samples: 1,
            stage13_gammas: vec![15.0, 0.0],
            stage2_gammas: vec![0.0, 15.0],
            jobs: 1,
        }
    }

    pub fn validate(&self) -> Result<(), SamplerError> {
        if self.steps < 2 {
            return Err(SamplerError::TooFewSteps);
        }
        if self.len == 0 {
            return Err(SamplerError::ZeroLength);
        }
        Ok(())
    }
}

/// One record per step of the shared stage trace.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub t_prev: f64,
    pub stage: u8,
    pub alpha_prev: f64,
    pub alpha_t: f64,
    pub r: f64,
}

/// Side information from a sampling run: the stage trace (identical across
/// chains), its checksum, and raw predictor scores of the final samples.
#[derive(Debug, Clone)]
pub struct SampleReport {
    pub trace: Vec<StepRecord>,
    pub trace_checksum: String,
    /// `scores[predictor][sample]`, evaluated at the schedule's minimum time.
    pub predictor_scores: Vec<Vec<f64>>,
}

fn trace_checksum(trace: &[StepRecord]) -> String {
    let mut hasher = Sha256::new();
    for r in trace {
        hasher.update(
            format!(
                "{} {} {} {} {} {} {}\n",
                r.step, r.t, r.t_prev, r.stage, r.alpha_prev, r.alpha_t, r.r
            )
            .as_bytes(),
        );
    }
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[allow(clippy::too_many_arguments)]
fn run_chain(
    den: &dyn Denoiser,
    sched: &NoiseSchedule,
    stage13: &GuidanceConfig,
    stage2: &GuidanceConfig,
    remask: &RemaskSchedule,
    trace: &[StepRecord],
    len: usize,
    rng: &mut ChaCha8Rng,
) -> Result<TokenSequence, SamplerError> {
    let mut x = TokenSequence::masked(len);
    for rec in trace {
        match rec.stage {
            2 => {
                // Remask a fixed fraction of the generated tokens.
                let generated: Vec<usize> = x.content_positions().collect();
                let n_remask = (remask.loop_fraction * generated.len() as f64).ceil() as usize;
                if n_remask > 0 {
                    let mut picks = generated.clone();
                    picks.shuffle(rng);
                    for &pos in picks.iter().take(n_remask) {
                        x.set(pos, MASK_ID);
                    }
                }
                // Frozen-alpha refill with the stage-two strengths.
                let (beta1, _) = checked_betas(rec.alpha_prev, rec.alpha_t, rec.r)?;
                let p_stay = beta1 / (1.0 - rec.alpha_t);
                let out = den.predict(&x, rec.t).map_err(DiffusionError::Denoiser)?;
                out.check_contract(&x).map_err(DiffusionError::Denoiser)?;
                let mut next = x.clone();
                for pos in 0..next.len() {
                    if x.get(pos) != MASK_ID {
                        continue;
                    }
                    if rng.gen::<f64>() < p_stay {
                        continue;
                    }
                    let guided =
                        guided_position_distribution(&x, pos, out.position(pos), stage2, rec.t)?;
                    next.set(pos, guided.sample(rng));
                }
                x = next;
            }
            _ => {
                x = guided_reverse_step(&x, rec.t_prev, rec.t, den, sched, stage13, rng)?;
            }
        }
    }
    debug_assert!(!x.contains_mask());
    Ok(x)
}

/// Run the full three-stage generation loop and return the samples plus the
/// run report. Stage one (t from 1 to t_on) takes plain guided steps under
/// the stage-one strengths; stage two holds alpha at alpha(t_on), remasks a
/// fixed fraction of generated tokens per pass, and refills masked tokens at
/// rate r_loop under the stage-two strengths; stage three finishes like
/// stage one. The final sequences contain no special tokens.
pub fn sample<R: Rng>(
    den: &dyn Denoiser,
    sched: &NoiseSchedule,
    guidance: &GuidanceConfig,
    cfg: &SamplerConfig,
    remask: &RemaskSchedule,
    rng: &mut R,
) -> Result<(Vec<TokenSequence>, SampleReport), SamplerError> {
    cfg.validate()?;
    remask.validate()?;
    let stage13 = guidance.with_gammas(cfg.stage13_gammas.clone());
    let stage2 = guidance.with_gammas(cfg.stage2_gammas.clone());
    stage13.validate()?;
    stage2.validate()?;
    let steps = cfg.steps;
    let alpha_frozen = sched.alpha(remask.t_on);

    // The step grid is uniform in t; stage boundaries snap to it through the
    // comparisons in stage_of.
    let mut trace = Vec::with_capacity(steps);
    for i in 1..=steps {
        let t = 1.0 - (i - 1) as f64 / steps as f64;
        let t_prev = 1.0 - i as f64 / steps as f64;
        let stage = stage_of(t, remask);
        let (alpha_prev, alpha_t, r) = if stage == 2 {
            (alpha_frozen, alpha_frozen, remask.r_loop)
        } else {
            (sched.alpha(t_prev), sched.alpha(t), 0.0)
        };
        trace.push(StepRecord {
            step: i,
            t,
            t_prev,
            stage,
            alpha_prev,
            alpha_t,
            r,
        });
    }

    // Each chain gets its own generator seeded from the caller's source, so
    // the outputs are identical no matter how chains are scheduled.
    let mut chain_rngs: Vec<ChaCha8Rng> = (0..cfg.n_samples)
        .map(|_| ChaCha8Rng::from_rng(&mut *rng).expect("seeding cannot fail"))
        .collect();
    let jobs = cfg.jobs.max(1).min(cfg.n_samples.max(1));
    let mut samples: Vec<TokenSequence> = Vec::with_capacity(cfg.n_samples);
    if jobs <= 1 {
        for chain_rng in chain_rngs.iter_mut() {
            samples.push(run_chain(
                den, sched, &stage13, &stage2, remask, &trace, cfg.len, chain_rng,
            )?);
        }
    } else {
        let chunk = cfg.n_samples.div_ceil(jobs);
        let results: Vec<Result<Vec<TokenSequence>, SamplerError>> =
            std::thread::scope(|scope| {
                let stage13 = &stage13;
                let stage2 = &stage2;
                let trace = &trace;
                let mut handles = Vec::new();
                for chunk_rngs in chain_rngs.chunks_mut(chunk) {
                    handles.push(scope.spawn(move || {
                        let mut out = Vec::with_capacity(chunk_rngs.len());
                        for chain_rng in chunk_rngs.iter_mut() {
                            out.push(run_chain(
                                den, sched, stage13, stage2, remask, trace, cfg.len,
                                chain_rng,
                            )?);
                        }
                        Ok(out)
                    }));
                }
                handles.into_iter().map(|h| h.join().expect("no panic")).collect()
            });
        for r in results {
            samples.extend(r?);
        }
    }

    let eps = sched.eps();
    let predictor_scores = guidance
        .predictors
        .iter()
        .map(|p| samples.iter().map(|s| p.raw_score(s, eps)).collect())
        .collect();
    let trace_checksum = trace_checksum(&trace);
    Ok((
        samples,
        SampleReport {
            trace,
            trace_checksum,
            predictor_scores,
        },
    ))
}
