//! Preference alignment: Diffusion-DPO finetuning, positive/negative
//! SFT finetuning, the dynamic-reweighting gradient identity, and the
//! SFT-component decomposition of the DPO objective.
//!
//! The DPO logit follows the four-MSE form: with a shared step draw `t`
//! and independent noises for the winner and loser,
//!
//! ```text
//! logit = -beta * T * omega * (mse+_theta - mse+_ref - mse-_theta + mse-_ref)
//! loss  = -mean log sigmoid(logit)
//! ```

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

use crate::dataset::PreferencePair;
use crate::diffusion::{
    diffusion_loss, diffusion_loss_frozen, forward_noise, probe_mse, split_seed, LossEval,
    NoiseDraw, NoiseSchedule,
};
use crate::error::{Error, Result};
use crate::numerics::{
    adam_step, backward_from_cache, forward_cached, AdamConfig, ModelParams, OptimizerState, Vec2,
};

#[derive(Debug, Clone, Copy)]
pub struct AlignConfig {
    /// DPO inverse temperature. Toy-scale sweeps use {0.5, 1.0, 3.0};
    /// the large-scale presets from image-model training are 3000/5000.
    pub beta: f64,
    /// Per-step loss weight, constant 1 here.
    pub omega: f64,
    /// Zero steps is allowed and returns the input checkpoint.
    pub steps: usize,
    pub batch_pairs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub log_every: usize,
    /// Number of frozen (x, t, eps) probe triples per subset used for
    /// component tracking.
    pub probe_size: usize,
}

impl Default for AlignConfig {
    fn default() -> Self {
        Self {
            beta: 1.0,
            omega: 1.0,
            steps: 2000,
            batch_pairs: 64,
            learning_rate: 1e-3,
            seed: 0,
            log_every: 100,
            probe_size: 1024,
        }
    }
}

impl AlignConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) {
            return Err(Error::Invalid {
                what: "dpo beta",
                why: format!("{} must be positive", self.beta),
            });
        }
        if self.batch_pairs == 0 {
            return Err(Error::Invalid {
                what: "pair batch size",
                why: "must be >= 1".into(),
            });
        }
        Ok(())
    }
}

/// The `(t, eps+, eps-)` draw for one preference pair. The step index is
/// shared across all four MSE terms; the two noises are independent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairDraw {
    pub t: usize,
    pub eps_pos: Vec2,
    pub eps_neg: Vec2,
}

pub fn draw_pair_noise<R: Rng>(sched: &NoiseSchedule, rng: &mut R) -> PairDraw {
    PairDraw {
        t: rng.gen_range(1..=sched.len()),
        eps_pos: [rng.sample(StandardNormal), rng.sample(StandardNormal)],
        eps_neg: [rng.sample(StandardNormal), rng.sample(StandardNormal)],
    }
}

/// Per-pair record of the four MSE terms, the inner logit, and the
/// sigmoid gradient weight.
#[derive(Debug, Clone, Copy)]
pub struct DpoTraceRow {
    pub draw: PairDraw,
    pub mse_pos_theta: f64,
    pub mse_pos_ref: f64,
    pub mse_neg_theta: f64,
    pub mse_neg_ref: f64,
    pub logit: f64,
    /// sigmoid(-logit): the factor multiplying this pair's gradient.
    pub grad_weight: f64,
}

#[derive(Debug)]
pub struct DpoEval {
    pub loss: f64,
    pub grads: ModelParams,
    pub trace: Vec<DpoTraceRow>,
}

/// Numerically stable `log sigmoid` and `sigmoid`.
fn log_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `||eps - eps_params(x_t, t)||^2` plus optionally the gradient of that
/// squared error (scaled by `weight`) accumulated into `grads`.
fn pair_term(
    params: &ModelParams,
    x0: Vec2,
    t: usize,
    eps: Vec2,
    sched: &NoiseSchedule,
    weight: f64,
    grads: Option<&mut ModelParams>,
) -> f64 {
    let xt = forward_noise(x0, t, eps, sched).expect("pair draw t in range");
    let cache = forward_cached(params, xt, t, sched.len());
    let r = [cache.output[0] - eps[0], cache.output[1] - eps[1]];
    if let Some(grads) = grads {
        let upstream = [2.0 * weight * r[0], 2.0 * weight * r[1]];
        backward_from_cache(params, &cache, upstream, grads);
    }
    r[0] * r[0] + r[1] * r[1]
}

/// Diffusion-DPO loss over a batch of pairs with fresh draws.
pub fn dpo_loss<R: Rng>(
    params: &ModelParams,
    ref_params: &ModelParams,
    pairs: &[PreferencePair],
    cfg: &AlignConfig,
    sched: &NoiseSchedule,
    rng: &mut R,
) -> Result<DpoEval> {
    let draws: Vec<PairDraw> = pairs.iter().map(|_| draw_pair_noise(sched, rng)).collect();
    dpo_loss_frozen(params, ref_params, pairs, &draws, cfg, sched)
}

/// Diffusion-DPO loss with caller-provided draws. Gradients are taken
/// with respect to `params` only; `ref_params` stays frozen.
pub fn dpo_loss_frozen(
    params: &ModelParams,
    ref_params: &ModelParams,
    pairs: &[PreferencePair],
    draws: &[PairDraw],
    cfg: &AlignConfig,
    sched: &NoiseSchedule,
) -> Result<DpoEval> {
    cfg.validate()?;
    if pairs.is_empty() {
        return Err(Error::Empty { what: "pair batch" });
    }
    if pairs.len() != draws.len() {
        return Err(Error::MismatchedDraws {
            expected: pairs.len(),
            got: draws.len(),
        });
    }
    params.check_shape(ref_params)?;
    let beta_t_omega = cfg.beta * sched.len() as f64 * cfg.omega;
    let m = pairs.len() as f64;
    let mut grads = ModelParams::zeros(params.arch);
    let mut trace = Vec::with_capacity(pairs.len());
    let mut loss = 0.0;
    for (i, (pair, draw)) in pairs.iter().zip(draws).enumerate() {
        let mse_pos_ref = pair_term(ref_params, pair.x_pos, draw.t, draw.eps_pos, sched, 0.0, None);
        let mse_neg_ref = pair_term(ref_params, pair.x_neg, draw.t, draw.eps_neg, sched, 0.0, None);
        let mse_pos_theta = pair_term(params, pair.x_pos, draw.t, draw.eps_pos, sched, 0.0, None);
        let mse_neg_theta = pair_term(params, pair.x_neg, draw.t, draw.eps_neg, sched, 0.0, None);
        let inner = mse_pos_theta - mse_pos_ref - mse_neg_theta + mse_neg_ref;
        let logit = -beta_t_omega * inner;
        if !logit.is_finite() {
            return Err(Error::NonFiniteLogit { pair: i });
        }
        let grad_weight = sigmoid(-logit);
        loss += -log_sigmoid(logit) / m;
        // d loss / d theta = sigmoid(-logit) * beta*T*omega *
        //                    (grad mse+_theta - grad mse-_theta) / m
        let w = grad_weight * beta_t_omega / m;
        pair_term(params, pair.x_pos, draw.t, draw.eps_pos, sched, w, Some(&mut grads));
        pair_term(params, pair.x_neg, draw.t, draw.eps_neg, sched, -w, Some(&mut grads));
        trace.push(DpoTraceRow {
            draw: *draw,
            mse_pos_theta,
            mse_pos_ref,
            mse_neg_theta,
            mse_neg_ref,
            logit,
            grad_weight,
        });
    }
    Ok(DpoEval { loss, grads, trace })
}

/// One history record of a DPO run: batch loss plus the winner/loser
/// probe MSEs under frozen probe noise.
#[derive(Debug, Clone, Copy)]
pub struct DpoCheckpoint {
    pub step: usize,
    pub loss: f64,
    pub pos_component: f64,
    pub neg_component: f64,
}

pub struct DpoRun {
    pub params: ModelParams,
    pub history: Vec<DpoCheckpoint>,
}

/// Frozen probe triples for component tracking, drawn once per run so
/// the curves are comparable across checkpoints.
pub struct ComponentProbes {
    pub positive: Vec<(Vec2, NoiseDraw)>,
    pub negative: Vec<(Vec2, NoiseDraw)>,
}

pub fn build_probes(
    pairs: &[PreferencePair],
    size: usize,
    sched: &NoiseSchedule,
    seed: u64,
) -> ComponentProbes {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut positive = Vec::with_capacity(size);
    let mut negative = Vec::with_capacity(size);
    for _ in 0..size {
        let pair = pairs[rng.gen_range(0..pairs.len())];
        positive.push((
            pair.x_pos,
            NoiseDraw {
                t: rng.gen_range(1..=sched.len()),
                eps: [rng.sample(StandardNormal), rng.sample(StandardNormal)],
            },
        ));
        negative.push((
            pair.x_neg,
            NoiseDraw {
                t: rng.gen_range(1..=sched.len()),
                eps: [rng.sample(StandardNormal), rng.sample(StandardNormal)],
            },
        ));
    }
    ComponentProbes { positive, negative }
}

/// DPO finetuning from `base` with the pretrained model as the frozen
/// reference. Logs the winner/loser probe MSEs at fixed checkpoints; the
/// step-0 record is exact (`ln 2` loss, base-model MSEs).
pub fn train_dpo(
    base: &ModelParams,
    pairs: &[PreferencePair],
    cfg: &AlignConfig,
    sched: &NoiseSchedule,
) -> Result<DpoRun> {
    cfg.validate()?;
    if pairs.is_empty() {
        return Err(Error::Empty { what: "preference pairs" });
    }
    let probes = build_probes(pairs, cfg.probe_size, sched, split_seed(cfg.seed, 1));
    let mut rng = StdRng::seed_from_u64(split_seed(cfg.seed, 0));
    let mut params = base.clone();
    let mut opt = OptimizerState::new(AdamConfig::with_lr(cfg.learning_rate), &params);
    let mut history = vec![DpoCheckpoint {
        step: 0,
        loss: std::f64::consts::LN_2,
        pos_component: probe_mse(&params, &probes.positive, sched),
        neg_component: probe_mse(&params, &probes.negative, sched),
    }];
    let mut batch = Vec::with_capacity(cfg.batch_pairs);
    for step in 1..=cfg.steps {
        batch.clear();
        for _ in 0..cfg.batch_pairs {
            batch.push(pairs[rng.gen_range(0..pairs.len())]);
        }
        let eval = dpo_loss(&params, base, &batch, cfg, sched, &mut rng)?;
        if !eval.loss.is_finite() {
            return Err(Error::Diverged {
                step,
                loss: eval.loss,
            });
        }
        adam_step(&mut opt, &mut params, &eval.grads)?;
        if step == cfg.steps || step % cfg.log_every == 0 {
            history.push(DpoCheckpoint {
                step,
                loss: eval.loss,
                pos_component: probe_mse(&params, &probes.positive, sched),
                neg_component: probe_mse(&params, &probes.negative, sched),
            });
        }
    }
    Ok(DpoRun { params, history })
}

/// Standard diffusion loss restricted to a subset; identical machinery
/// to `diffusion_loss`, bit for bit.
pub fn sft_loss<R: Rng>(
    params: &ModelParams,
    subset: &[Vec2],
    sched: &NoiseSchedule,
    rng: &mut R,
) -> Result<LossEval> {
    diffusion_loss(params, subset, sched, rng)
}

pub struct SftRun {
    pub params: ModelParams,
    pub loss_history: Vec<(usize, f64)>,
}

/// Supervised finetuning on one label subset. Running on positives
/// yields the winner model, on negatives the loser model.
pub fn train_sft(
    base: &ModelParams,
    subset: &[Vec2],
    cfg: &AlignConfig,
    sched: &NoiseSchedule,
) -> Result<SftRun> {
    if subset.is_empty() {
        return Err(Error::Empty { what: "sft subset" });
    }
    let mut rng = StdRng::seed_from_u64(split_seed(cfg.seed, 0));
    let mut params = base.clone();
    let mut opt = OptimizerState::new(AdamConfig::with_lr(cfg.learning_rate), &params);
    let mut history = Vec::new();
    let mut batch = Vec::with_capacity(cfg.batch_pairs);
    for step in 1..=cfg.steps {
        batch.clear();
        for _ in 0..cfg.batch_pairs {
            batch.push(subset[rng.gen_range(0..subset.len())]);
        }
        let eval = sft_loss(&params, &batch, sched, &mut rng)?;
        if !eval.loss.is_finite() {
            return Err(Error::Diverged {
                step,
                loss: eval.loss,
            });
        }
        adam_step(&mut opt, &mut params, &eval.grads)?;
        if step == 1 || step == cfg.steps || step % cfg.log_every == 0 {
            history.push((step, eval.loss));
        }
    }
    Ok(SftRun {
        params,
        loss_history: history,
    })
}

/// `1 / (beta * sigmoid(logit))` where `logit` is the loser-minus-winner
/// log-ratio proxy. A sigmoid underflow is clamped at the smallest
/// positive normal so the factor stays finite.
pub fn reweight_factor(logit: f64, beta: f64) -> f64 {
    assert!(beta > 0.0, "reweight factor needs beta > 0");
    let s = sigmoid(logit).max(f64::MIN_POSITIVE);
    1.0 / (beta * s)
}

/// Gradient blocks of one residually parameterized DPO pair next to the
/// reweighted target they must reproduce.
#[derive(Debug)]
pub struct ReweightingCheck {
    /// Largest absolute entrywise deviation across both blocks and all
    /// pairs.
    pub max_deviation: f64,
    /// Largest gradient magnitude seen, to confirm the comparison is
    /// not vacuous.
    pub max_gradient: f64,
}

/// Check the dynamic-reweighting identity: with the finetuned model
/// split residually into a winner branch `theta_plus` and a loser branch
/// `theta_minus`, the per-pair DPO gradient scaled by
/// `reweight_factor` equals the pair's supervised gradients (winner
/// branch descends its diffusion loss, loser branch ascends its own).
/// The identity is algebraic once the same `(t, eps)` draws are shared,
/// so the deviation is pure floating-point noise.
#[allow(clippy::too_many_arguments)]
pub fn verify_reweighting_identity(
    theta_plus: &ModelParams,
    theta_minus: &ModelParams,
    ref_params: &ModelParams,
    pairs: &[PreferencePair],
    beta: f64,
    omega: f64,
    sched: &NoiseSchedule,
    draws: &[PairDraw],
) -> Result<ReweightingCheck> {
    if pairs.is_empty() {
        return Err(Error::Empty { what: "pair batch" });
    }
    if draws.len() != pairs.len() {
        return Err(Error::MismatchedDraws {
            expected: pairs.len(),
            got: draws.len(),
        });
    }
    theta_plus.check_shape(theta_minus)?;
    theta_plus.check_shape(ref_params)?;
    if !(beta > 0.0) {
        return Err(Error::Invalid {
            what: "dpo beta",
            why: format!("{beta} must be positive"),
        });
    }
    let beta_eff = beta * sched.len() as f64 * omega;
    let mut max_deviation = 0.0f64;
    let mut max_gradient = 0.0f64;
    for (pair, draw) in pairs.iter().zip(draws) {
        // DPO side, residual parameterization: winner branch theta_plus,
        // loser branch theta_minus, reference entering the logit only.
        let mse_pos = pair_term(theta_plus, pair.x_pos, draw.t, draw.eps_pos, sched, 0.0, None);
        let mse_neg = pair_term(theta_minus, pair.x_neg, draw.t, draw.eps_neg, sched, 0.0, None);
        let mse_pos_ref =
            pair_term(ref_params, pair.x_pos, draw.t, draw.eps_pos, sched, 0.0, None);
        let mse_neg_ref =
            pair_term(ref_params, pair.x_neg, draw.t, draw.eps_neg, sched, 0.0, None);
        let logit = -beta_eff * (mse_pos - mse_pos_ref - mse_neg + mse_neg_ref);
        if !logit.is_finite() {
            return Err(Error::NonFiniteLogit { pair: 0 });
        }
        let w = sigmoid(-logit) * beta_eff;
        let mut dpo_plus = ModelParams::zeros(theta_plus.arch);
        pair_term(theta_plus, pair.x_pos, draw.t, draw.eps_pos, sched, w, Some(&mut dpo_plus));
        let mut dpo_minus = ModelParams::zeros(theta_minus.arch);
        pair_term(theta_minus, pair.x_neg, draw.t, draw.eps_neg, sched, -w, Some(&mut dpo_minus));

        // The loser-minus-winner logit drives the reweighting factor.
        let factor = reweight_factor(-logit, beta_eff);

        // SFT side through the independent frozen-loss path.
        let (_, sft_plus) = diffusion_loss_frozen(
            theta_plus,
            &[pair.x_pos],
            &[NoiseDraw {
                t: draw.t,
                eps: draw.eps_pos,
            }],
            sched,
        )?;
        let (_, sft_minus) = diffusion_loss_frozen(
            theta_minus,
            &[pair.x_neg],
            &[NoiseDraw {
                t: draw.t,
                eps: draw.eps_neg,
            }],
            sched,
        )?;

        for i in 0..dpo_plus.len() {
            let reweighted = factor * dpo_plus.entry(i);
            let target = sft_plus.entry(i);
            max_deviation = max_deviation.max((reweighted - target).abs());
            max_gradient = max_gradient.max(target.abs());
        }
        for i in 0..dpo_minus.len() {
            let reweighted = factor * dpo_minus.entry(i);
            let target = -sft_minus.entry(i);
            max_deviation = max_deviation.max((reweighted - target).abs());
            max_gradient = max_gradient.max(target.abs());
        }
    }
    Ok(ReweightingCheck {
        max_deviation,
        max_gradient,
    })
}
