use std::fs;
use std::path::PathBuf;

use clap::Args;
use moldiff_core::denoiser::{
    compute_descriptors, train_toy, Denoiser, DescriptorVector, OracleDenoiser, ToyConfig,
    ToyDenoiser, TrainConfig,
};
use moldiff_core::diffusion::{LossConfig, NoiseSchedule};
use moldiff_core::fusion::{ensemble_predict, FusionInput, FusionParams, HeadKind};
use moldiff_core::guidance::{GuidanceConfig, GuidancePredictor, SigmaSchedule};
use moldiff_core::sampler::{sample, RemaskSchedule, SamplerConfig};
use moldiff_core::selfies::{TokenSequence, Vocabulary, CLS_ID};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::errors::CliError;
use crate::io::{init_out_dir, pick, read_lines, Table};

fn load_vocab(path: &PathBuf) -> Result<Vocabulary, CliError> {
    let file =
        fs::File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(Vocabulary::load(std::io::BufReader::new(file))?)
}

fn load_toy(path: &PathBuf) -> Result<ToyDenoiser, CliError> {
    let file =
        fs::File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(ToyDenoiser::load(std::io::BufReader::new(file))?)
}

#[derive(Args)]
pub struct TrainToyArgs {
    /// Corpus file, one SELFIES string per line.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Optional TOML config; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub ffn_dim: Option<usize>,
    #[arg(long)]
    pub mtr_hidden: Option<usize>,
    #[arg(long)]
    pub descriptor_len: Option<usize>,
    #[arg(long)]
    pub stage1_epochs: Option<usize>,
    #[arg(long)]
    pub stage2_epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub momentum: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub t_samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize, Deserialize, Default)]
struct TrainToyFile {
    dim: Option<usize>,
    layers: Option<usize>,
    ffn_dim: Option<usize>,
    mtr_hidden: Option<usize>,
    descriptor_len: Option<usize>,
    stage1_epochs: Option<usize>,
    stage2_epochs: Option<usize>,
    learning_rate: Option<f64>,
    momentum: Option<f64>,
    lambda: Option<f64>,
    t_samples: Option<usize>,
    seed: Option<u64>,
}

#[derive(Serialize)]
struct TrainToyResolved {
    corpus: String,
    dim: usize,
    layers: usize,
    ffn_dim: usize,
    mtr_hidden: usize,
    descriptor_len: usize,
    stage1_epochs: usize,
    stage2_epochs: usize,
    learning_rate: f64,
    momentum: f64,
    lambda: f64,
    t_samples: usize,
    seed: u64,
}

pub fn train_toy_cmd(args: TrainToyArgs) -> Result<(), CliError> {
    let file: TrainToyFile = match &args.config {
        Some(path) => toml::from_str(&fs::read_to_string(path)?)?,
        None => TrainToyFile::default(),
    };
    let resolved = TrainToyResolved {
        corpus: args.corpus.display().to_string(),
        dim: pick(args.dim, file.dim, 64),
        layers: pick(args.layers, file.layers, 2),
        ffn_dim: pick(args.ffn_dim, file.ffn_dim, 128),
        mtr_hidden: pick(args.mtr_hidden, file.mtr_hidden, 32),
        descriptor_len: pick(args.descriptor_len, file.descriptor_len, 209),
        stage1_epochs: pick(args.stage1_epochs, file.stage1_epochs, 60),
        stage2_epochs: pick(args.stage2_epochs, file.stage2_epochs, 20),
        learning_rate: pick(args.learning_rate, file.learning_rate, 0.05),
        momentum: pick(args.momentum, file.momentum, 0.9),
        lambda: pick(args.lambda, file.lambda, 0.1),
        t_samples: pick(args.t_samples, file.t_samples, 2),
        seed: pick(args.seed, file.seed, 0),
    };
    let lines = read_lines(&args.corpus)?;
    let vocab = Vocabulary::build(lines.iter().map(String::as_str))?;
    let mut corpus = Vec::with_capacity(lines.len());
    let mut targets: Vec<DescriptorVector> = Vec::with_capacity(lines.len());
    let mut max_len = 0usize;
    for line in &lines {
        let seq = vocab.tokenize(line)?;
        max_len = max_len.max(seq.len());
        corpus.push(seq);
        targets.push(compute_descriptors(line, resolved.descriptor_len)?);
    }
    let model_cfg = ToyConfig {
        vocab_size: vocab.size(),
        max_len: max_len + 1, // room for the CLS prefix
        dim: resolved.dim,
        layers: resolved.layers,
        ffn_dim: resolved.ffn_dim,
        mtr_hidden: resolved.mtr_hidden,
        descriptor_len: resolved.descriptor_len,
    };
    let train_cfg = TrainConfig {
        stage1_epochs: resolved.stage1_epochs,
        stage2_epochs: resolved.stage2_epochs,
        learning_rate: resolved.learning_rate,
        momentum: resolved.momentum,
        clip_norm: 5.0,
        loss: LossConfig {
            lambda: resolved.lambda,
            t_samples: resolved.t_samples,
        },
        seed: resolved.seed,
    };
    init_out_dir(&args.out, &toml::to_string_pretty(&resolved).unwrap())?;
    let (den, log) = train_toy(&corpus, &targets, model_cfg, &train_cfg)?;
    let mut buf = Vec::new();
    den.save(&mut buf)?;
    fs::write(args.out.join("checkpoint.txt"), buf)?;
    let mut vocab_buf = Vec::new();
    vocab
        .save(&mut vocab_buf)
        .map_err(|e| CliError::Data(e.to_string()))?;
    fs::write(args.out.join("vocab.txt"), vocab_buf)?;
    let mut log_table = Table {
        header: vec!["stage".to_string(), "epoch".to_string(), "mean_loss".to_string()],
        rows: Vec::new(),
    };
    for rec in &log.epochs {
        log_table.rows.push(vec![
            rec.stage.to_string(),
            rec.epoch.to_string(),
            format!("{}", rec.mean_loss),
        ]);
    }
    log_table.write(&args.out.join("train_log.tsv"))?;
    let final_loss = log.epochs.last().map(|r| r.mean_loss).unwrap_or(f64::NAN);
    println!(
        "trained {} epochs on {} sequences; final mean loss {final_loss:.4}",
        log.epochs.len(),
        corpus.len()
    );
    Ok(())
}

/// Shared generation flags for sample and guided-sample.
#[derive(Args)]
pub struct GenerationArgs {
    /// Toy denoiser checkpoint; mutually exclusive with --corpus.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Corpus file backing an enumeration oracle denoiser (sequences must
    /// share one length).
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Uniform smoothing weight of the corpus oracle at masked positions.
    #[arg(long)]
    pub smoothing: Option<f64>,
    /// Vocabulary file; required with --checkpoint, otherwise built from
    /// the corpus.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Optional TOML config; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub len: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub n_samples: Option<usize>,
    #[arg(long)]
    pub t_on: Option<f64>,
    #[arg(long)]
    pub t_off: Option<f64>,
    #[arg(long)]
    pub r_loop: Option<f64>,
    #[arg(long)]
    pub loop_fraction: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for independent chains; outputs are identical for
    /// any value.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize, Deserialize, Default)]
struct GenerationFile {
    len: Option<usize>,
    steps: Option<usize>,
    n_samples: Option<usize>,
    t_on: Option<f64>,
    t_off: Option<f64>,
    r_loop: Option<f64>,
    loop_fraction: Option<f64>,
    seed: Option<u64>,
    jobs: Option<usize>,
    gamma1: Option<f64>,
    gamma2: Option<f64>,
    target: Option<f64>,
    sigma_start: Option<f64>,
    sigma_end: Option<f64>,
    guide_token: Option<String>,
    guide_token2: Option<String>,
    candidate_cap: Option<usize>,
}

#[derive(Serialize, Clone)]
struct GenerationResolved {
    denoiser: String,
    len: usize,
    steps: usize,
    n_samples: usize,
    t_on: f64,
    t_off: f64,
    r_loop: f64,
    loop_fraction: f64,
    seed: u64,
    jobs: usize,
    gamma1: f64,
    gamma2: f64,
    target: f64,
    sigma_start: f64,
    sigma_end: f64,
    guide_token: String,
    guide_token2: String,
    candidate_cap: Option<usize>,
}

/// Corpus oracle with uniform smoothing over content tokens at masked
/// positions. The exact enumeration oracle rejects sequences outside its
/// dataset, which guided and remasked generation can produce; the blend
/// keeps every reachable state scorable while leaving unmasked positions as
/// exact copies.
struct SmoothedOracle {
    oracle: OracleDenoiser,
    content_ids: Vec<u32>,
    epsilon: f64,
}

impl Denoiser for SmoothedOracle {
    fn predict(
        &self,
        xt: &TokenSequence,
        t: f64,
    ) -> Result<moldiff_core::denoiser::DenoiserOutput, moldiff_core::denoiser::DenoiserError>
    {
        use moldiff_core::diffusion::CategoricalDistribution;
        let k = self.vocab_size();
        let uniform = 1.0 / self.content_ids.len() as f64;
        let base = match self.oracle.predict(xt, t) {
            Ok(out) => Some(out),
            Err(moldiff_core::denoiser::DenoiserError::NoConsistentSequence) => None,
            Err(e) => return Err(e),
        };
        let mut per_position = Vec::with_capacity(xt.len());
        for pos in 0..xt.len() {
            let tok = xt.get(pos);
            if tok != moldiff_core::selfies::MASK_ID {
                per_position.push(CategoricalDistribution::point_mass(tok, k));
                continue;
            }
            let mut probs = vec![0.0; k as usize];
            for &id in &self.content_ids {
                probs[id as usize] = self.epsilon * uniform;
            }
            if let Some(out) = &base {
                for id in 0..k {
                    probs[id as usize] += (1.0 - self.epsilon) * out.position(pos).prob(id);
                }
            } else {
                for &id in &self.content_ids {
                    probs[id as usize] += (1.0 - self.epsilon) * uniform;
                }
            }
            let sum: f64 = probs.iter().sum();
            for p in probs.iter_mut() {
                *p /= sum;
            }
            per_position.push(
                CategoricalDistribution::new(probs).expect("smoothed row normalized"),
            );
        }
        Ok(moldiff_core::denoiser::DenoiserOutput::new(per_position))
    }

    fn vocab_size(&self) -> u32 {
        self.oracle.vocab_size()
    }
}

struct LoadedDenoiser {
    den: Box<dyn Denoiser>,
    vocab: Vocabulary,
    default_len: Option<usize>,
}

fn load_denoiser(args: &GenerationArgs) -> Result<LoadedDenoiser, CliError> {
    match (&args.checkpoint, &args.corpus) {
        (Some(ckpt), None) => {
            let vocab_path = args.vocab.as_ref().ok_or_else(|| {
                CliError::Usage("--vocab is required with --checkpoint".to_string())
            })?;
            let vocab = load_vocab(vocab_path)?;
            let den = load_toy(ckpt)?;
            if den.vocab_size() != vocab.size() {
                return Err(CliError::Data(format!(
                    "checkpoint K={} does not match vocabulary K={}",
                    den.vocab_size(),
                    vocab.size()
                )));
            }
            Ok(LoadedDenoiser {
                den: Box::new(den),
                vocab,
                default_len: None,
            })
        }
        (None, Some(corpus_path)) => {
            let lines = read_lines(corpus_path)?;
            let vocab = match &args.vocab {
                Some(p) => load_vocab(p)?,
                None => Vocabulary::build(lines.iter().map(String::as_str))?,
            };
            let mut seqs = Vec::with_capacity(lines.len());
            for line in &lines {
                seqs.push(vocab.tokenize(line)?);
            }
            let len = seqs.first().map(TokenSequence::len);
            let oracle = OracleDenoiser::uniform(seqs, vocab.size())?;
            let den = SmoothedOracle {
                oracle,
                content_ids: vocab.content_ids().collect(),
                epsilon: args.smoothing.unwrap_or(0.02),
            };
            Ok(LoadedDenoiser {
                den: Box::new(den),
                vocab,
                default_len: len,
            })
        }
        _ => Err(CliError::Usage(
            "exactly one of --checkpoint or --corpus must be given".to_string(),
        )),
    }
}

fn run_generation(
    args: GenerationArgs,
    guided: Option<GuidedSampleExtra>,
) -> Result<(), CliError> {
    let file: GenerationFile = match &args.config {
        Some(path) => toml::from_str(&fs::read_to_string(path)?)?,
        None => GenerationFile::default(),
    };
    let loaded = load_denoiser(&args)?;
    let len = args
        .len
        .or(file.len)
        .or(loaded.default_len)
        .ok_or_else(|| CliError::Usage("--len is required with --checkpoint".to_string()))?;
    let extra = guided.unwrap_or_default();
    let resolved = GenerationResolved {
        denoiser: args
            .checkpoint
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| {
                format!("oracle:{}", args.corpus.as_ref().unwrap().display())
            }),
        len,
        steps: pick(args.steps, file.steps, 256),
        n_samples: pick(args.n_samples, file.n_samples, 16),
        t_on: pick(args.t_on, file.t_on, 0.55),
        t_off: pick(args.t_off, file.t_off, 0.45),
        r_loop: pick(args.r_loop, file.r_loop, 0.1),
        loop_fraction: pick(args.loop_fraction, file.loop_fraction, 0.1),
        seed: pick(args.seed, file.seed, 0),
        jobs: pick(args.jobs, file.jobs, 1),
        gamma1: pick(extra.gamma1, file.gamma1, 15.0),
        gamma2: pick(extra.gamma2, file.gamma2, 15.0),
        target: pick(extra.target, file.target, 1.0),
        sigma_start: pick(extra.sigma_start, file.sigma_start, 0.5),
        sigma_end: pick(extra.sigma_end, file.sigma_end, 0.2),
        guide_token: pick(extra.guide_token.clone(), file.guide_token, "[N]".to_string()),
        guide_token2: pick(
            extra.guide_token2.clone(),
            file.guide_token2.or(extra.guide_token),
            "[N]".to_string(),
        ),
        candidate_cap: extra.candidate_cap.or(file.candidate_cap),
    };
    let is_guided = extra.enabled;
    let guidance = if is_guided {
        let token_id = |token: &str| {
            loaded.vocab.id_of(token).ok_or_else(|| {
                CliError::Usage(format!("guide token {token} is not in the vocabulary"))
            })
        };
        let t1 = token_id(&resolved.guide_token)?;
        let t2 = token_id(&resolved.guide_token2)?;
        // Toy predictors over generated tokens: an activity regressor that
        // falls as the guide token gets denser, and a classifier that fires
        // when the second guide token is present at all.
        let activity = move |s: &TokenSequence, _t: f64| {
            let hits = s.ids().iter().filter(|&&id| id == t1).count();
            2.0 - 2.0 * hits as f64 / s.len() as f64
        };
        let contains = move |s: &TokenSequence, _t: f64| {
            if s.ids().contains(&t2) {
                0.9
            } else {
                0.1
            }
        };
        let mut cfg = GuidanceConfig::new(
            vec![
                GuidancePredictor::Regressor {
                    model: Box::new(activity),
                    target: resolved.target,
                    sigma: SigmaSchedule {
                        start: resolved.sigma_start,
                        end: resolved.sigma_end,
                    },
                },
                GuidancePredictor::Classifier(Box::new(contains)),
            ],
            vec![resolved.gamma1, 0.0],
        );
        cfg.candidate_cap = resolved.candidate_cap;
        cfg
    } else {
        GuidanceConfig::none()
    };
    let mut cfg = SamplerConfig::new(len);
    cfg.steps = resolved.steps;
    cfg.n_samples = resolved.n_samples;
    cfg.jobs = resolved.jobs;
    cfg.stage13_gammas = if is_guided {
        vec![resolved.gamma1, 0.0]
    } else {
        vec![]
    };
    cfg.stage2_gammas = if is_guided {
        vec![0.0, resolved.gamma2]
    } else {
        vec![]
    };
    let remask = RemaskSchedule {
        t_on: resolved.t_on,
        t_off: resolved.t_off,
        r_loop: resolved.r_loop,
        loop_fraction: resolved.loop_fraction,
    };
    init_out_dir(&args.out, &toml::to_string_pretty(&resolved).unwrap())?;
    let sched = NoiseSchedule::log_linear();
    let mut rng = ChaCha8Rng::seed_from_u64(resolved.seed);
    let (samples, report) = sample(
        loaded.den.as_ref(),
        &sched,
        &guidance,
        &cfg,
        &remask,
        &mut rng,
    )?;
    let mut selfies_lines = String::new();
    for s in &samples {
        selfies_lines.push_str(&loaded.vocab.detokenize(s)?);
        selfies_lines.push('\n');
    }
    fs::write(args.out.join("samples.selfies"), selfies_lines)?;
    // Sidecar table: predictor raw scores per sample plus the trace
    // checksum on every row.
    let mut header = vec!["sample".to_string()];
    for i in 0..report.predictor_scores.len() {
        header.push(format!("predictor{}", i + 1));
    }
    header.push("trace_checksum".to_string());
    let mut sidecar = Table {
        header,
        rows: Vec::new(),
    };
    for (i, _) in samples.iter().enumerate() {
        let mut row = vec![i.to_string()];
        for scores in &report.predictor_scores {
            row.push(format!("{}", scores[i]));
        }
        row.push(report.trace_checksum.clone());
        sidecar.rows.push(row);
    }
    sidecar.write(&args.out.join("report.tsv"))?;
    let mut trace = Table {
        header: vec![
            "step".to_string(),
            "t".to_string(),
            "t_prev".to_string(),
            "stage".to_string(),
            "alpha_prev".to_string(),
            "alpha_t".to_string(),
            "r".to_string(),
        ],
        rows: Vec::new(),
    };
    for rec in &report.trace {
        trace.rows.push(vec![
            rec.step.to_string(),
            format!("{}", rec.t),
            format!("{}", rec.t_prev),
            rec.stage.to_string(),
            format!("{}", rec.alpha_prev),
            format!("{}", rec.alpha_t),
            format!("{}", rec.r),
        ]);
    }
    trace.write(&args.out.join("trace.tsv"))?;
    println!(
        "generated {} samples into {} (trace {})",
        samples.len(),
        args.out.display(),
        &report.trace_checksum[..12]
    );
    Ok(())
}

#[derive(Default)]
struct GuidedSampleExtra {
    enabled: bool,
    gamma1: Option<f64>,
    gamma2: Option<f64>,
    target: Option<f64>,
    sigma_start: Option<f64>,
    sigma_end: Option<f64>,
    guide_token: Option<String>,
    guide_token2: Option<String>,
    candidate_cap: Option<usize>,
}

#[derive(Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub generation: GenerationArgs,
}

pub fn sample_cmd(args: SampleArgs) -> Result<(), CliError> {
    run_generation(args.generation, None)
}

#[derive(Args)]
pub struct GuidedSampleArgs {
    #[command(flatten)]
    pub generation: GenerationArgs,
    /// Strength of the activity regressor in stages one and three.
    #[arg(long)]
    pub gamma1: Option<f64>,
    /// Strength of the classifier in stage two.
    #[arg(long)]
    pub gamma2: Option<f64>,
    /// Target value for the regressor.
    #[arg(long)]
    pub target: Option<f64>,
    #[arg(long)]
    pub sigma_start: Option<f64>,
    #[arg(long)]
    pub sigma_end: Option<f64>,
    /// Token whose density the regressor rewards.
    #[arg(long)]
    pub guide_token: Option<String>,
    /// Token whose presence the classifier rewards.
    #[arg(long)]
    pub guide_token2: Option<String>,
    /// Score only the top-N candidates by base probability.
    #[arg(long)]
    pub candidate_cap: Option<usize>,
}

pub fn guided_sample_cmd(args: GuidedSampleArgs) -> Result<(), CliError> {
    let extra = GuidedSampleExtra {
        enabled: true,
        gamma1: args.gamma1,
        gamma2: args.gamma2,
        target: args.target,
        sigma_start: args.sigma_start,
        sigma_end: args.sigma_end,
        guide_token: args.guide_token,
        guide_token2: args.guide_token2,
        candidate_cap: args.candidate_cap,
    };
    run_generation(args.generation, Some(extra))
}

#[derive(Args)]
pub struct PredictArgs {
    /// Toy denoiser checkpoint used as the molecule feature extractor.
    #[arg(long)]
    pub denoiser: PathBuf,
    /// Vocabulary file matching the denoiser.
    #[arg(long)]
    pub vocab: PathBuf,
    /// Fusion parameter checkpoints; several form an ensemble.
    #[arg(long, required = true)]
    pub fusion: Vec<PathBuf>,
    /// Molecules table: column molecule (or molecule_a and molecule_b for
    /// the synergy head).
    #[arg(long)]
    pub molecules: PathBuf,
    /// Directory with ingested strain matrices.
    #[arg(long)]
    pub strain_dir: PathBuf,
    #[arg(long)]
    pub strain: String,
    /// mic, class, or synergy.
    #[arg(long, default_value = "mic")]
    pub head: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct PredictResolved {
    denoiser: String,
    fusion: Vec<String>,
    molecules: String,
    strain: String,
    head: String,
}

pub fn predict_cmd(args: PredictArgs) -> Result<(), CliError> {
    let head = match args.head.as_str() {
        "mic" => HeadKind::Mic,
        "class" => HeadKind::AbxClass,
        "synergy" => HeadKind::Synergy,
        other => {
            return Err(CliError::Usage(format!(
                "head must be mic, class, or synergy, got {other:?}"
            )))
        }
    };
    let vocab = load_vocab(&args.vocab)?;
    let den = load_toy(&args.denoiser)?;
    let models: Vec<FusionParams> = args
        .fusion
        .iter()
        .map(|p| -> Result<FusionParams, CliError> {
            let file = fs::File::open(p)
                .map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
            Ok(FusionParams::load(std::io::BufReader::new(file))?)
        })
        .collect::<Result<_, _>>()?;
    for m in &models {
        if m.dims.mol_dim != den.config().dim {
            return Err(CliError::Data(format!(
                "fusion expects molecule features of width {}, denoiser provides {}",
                m.dims.mol_dim,
                den.config().dim
            )));
        }
    }
    let ctx = super::data::load_strain(&args.strain_dir, &args.strain)?;
    let table = Table::read(&args.molecules)?;
    let sched = NoiseSchedule::log_linear();
    let features = |selfies: &str| -> Result<Vec<f64>, CliError> {
        let seq = vocab.tokenize(selfies)?.with_cls_prepended();
        debug_assert_eq!(seq.get(0), CLS_ID);
        Ok(den.extract_features(&seq, sched.eps())?)
    };
    init_out_dir(
        &args.out,
        &toml::to_string_pretty(&PredictResolved {
            denoiser: args.denoiser.display().to_string(),
            fusion: args.fusion.iter().map(|p| p.display().to_string()).collect(),
            molecules: args.molecules.display().to_string(),
            strain: args.strain.clone(),
            head: args.head.clone(),
        })
        .unwrap(),
    )?;
    let mut out = Table {
        header: vec![
            "molecule".to_string(),
            "strain".to_string(),
            "prediction".to_string(),
        ],
        rows: Vec::new(),
    };
    match head {
        HeadKind::Synergy => {
            let a_col = table.column("molecule_a")?;
            let b_col = table.column("molecule_b")?;
            for row in &table.rows {
                let fa = features(&row[a_col])?;
                let fb = features(&row[b_col])?;
                let input = FusionInput::Pair {
                    mol_a: &fa,
                    mol_b: &fb,
                    ctx: &ctx,
                };
                let pred = ensemble_predict(&models, head, &input)
                    .map_err(|e| CliError::Data(e.to_string()))?;
                out.rows.push(vec![
                    format!("{}+{}", row[a_col], row[b_col]),
                    args.strain.clone(),
                    format!("{pred}"),
                ]);
            }
        }
        _ => {
            let mol_col = table.column("molecule")?;
            for row in &table.rows {
                let f = features(&row[mol_col])?;
                let input = FusionInput::Single { mol: &f, ctx: &ctx };
                let pred = ensemble_predict(&models, head, &input)
                    .map_err(|e| CliError::Data(e.to_string()))?;
                out.rows.push(vec![
                    row[mol_col].clone(),
                    args.strain.clone(),
                    format!("{pred}"),
                ]);
            }
        }
    }
    out.write(&args.out.join("predictions.tsv"))?;
    println!("predicted {} rows with {} model(s)", out.rows.len(), models.len());
    Ok(())
}
