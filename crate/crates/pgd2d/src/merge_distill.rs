//! Weight-space merging, first-order residual measurement, and
//! distillation of guided predictions into a single checkpoint.
//!
//! Merging rests on the first-order view: to leading order
//! `f(theta0 + lambda*delta) ~ f(theta0) + lambda (f(theta0+delta) - f(theta0))`,
//! so a merged checkpoint can stand in for guided inference. The
//! curvature term grows quadratically in the perturbation, which
//! `linearization_residual` makes observable.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::diffusion::{
    draw_noise, forward_noise, split_seed, NoiseDraw, NoiseSchedule,
    TrainConfig,
};
use crate::error::{Error, Result};
use crate::guidance::GuidanceSpec;
use crate::numerics::{
    adam_step, backward_from_cache, forward_cached, AdamConfig, ModelParams, OptimizerState, Vec2,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MergeMode {
    PgdMerge,
    CpgdMerge,
}

impl MergeMode {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "pgd" | "pgd_merge" => Self::PgdMerge,
            "cpgd" | "cpgd_merge" => Self::CpgdMerge,
            other => {
                return Err(Error::Invalid {
                    what: "merge mode",
                    why: format!("`{other}` is not one of pgd|cpgd"),
                })
            }
        })
    }
}

/// `theta0 + alpha (theta_plus - theta0)`. The reduction points
/// `alpha = 0` and `alpha = 1` return the endpoint checkpoints
/// bit-for-bit.
pub fn merge_pgd(theta0: &ModelParams, theta_plus: &ModelParams, alpha: f64) -> Result<ModelParams> {
    theta0.check_shape(theta_plus)?;
    if !alpha.is_finite() {
        return Err(Error::Invalid {
            what: "merge coefficient",
            why: format!("{alpha} is not finite"),
        });
    }
    if alpha == 0.0 {
        return Ok(theta0.clone());
    }
    if alpha == 1.0 {
        return Ok(theta_plus.clone());
    }
    let mut out = theta0.clone();
    let delta = theta_plus.sub(theta0);
    out.add_scaled(&delta, alpha);
    Ok(out)
}

/// `theta0 + alpha (theta_plus - theta_minus)`.
pub fn merge_cpgd(
    theta0: &ModelParams,
    theta_plus: &ModelParams,
    theta_minus: &ModelParams,
    alpha: f64,
) -> Result<ModelParams> {
    theta0.check_shape(theta_plus)?;
    theta0.check_shape(theta_minus)?;
    if !alpha.is_finite() {
        return Err(Error::Invalid {
            what: "merge coefficient",
            why: format!("{alpha} is not finite"),
        });
    }
    if alpha == 0.0 || theta_plus == theta_minus {
        return Ok(theta0.clone());
    }
    let mut out = theta0.clone();
    let delta = theta_plus.sub(theta_minus);
    out.add_scaled(&delta, alpha);
    Ok(out)
}

/// Observable first-order gap of the merged model at probe points.
#[derive(Debug, Clone, Copy)]
pub struct ResidualReport {
    /// `max over probes of |f(theta0 + lambda*delta) - f(theta0) -
    /// lambda (f(theta0+delta) - f(theta0))|`.
    pub r_merge: f64,
    /// `max over probes of |f_guided(lambda) - f(theta0 + lambda*delta)|`,
    /// the guided-vs-merged output gap. Algebraically the same quantity
    /// as `r_merge`, computed through the guidance composition as a
    /// cross-check.
    pub r_guidance_gap: f64,
}

/// Measure the curvature-induced mismatch between guided inference and
/// the merged checkpoint along `delta`, maximized over probe points.
/// Exactly zero at `lambda = 1` and for perturbations confined to the
/// linear output head.
pub fn linearization_residual(
    theta0: &ModelParams,
    delta: &ModelParams,
    lambda: f64,
    probes: &[(Vec2, usize)],
    sched: &NoiseSchedule,
) -> Result<ResidualReport> {
    theta0.check_shape(delta)?;
    if probes.is_empty() {
        return Err(Error::Empty { what: "probe set" });
    }
    let total = sched.len();
    let theta_plus = theta0.add(delta);
    let merged = {
        let mut m = theta0.clone();
        m.add_scaled(delta, lambda);
        m
    };
    let mut r_merge = 0.0f64;
    let mut r_gap = 0.0f64;
    for &(x, t) in probes {
        sched.check_step(t)?;
        let f0 = forward_cached(theta0, x, t, total).output;
        let f1 = forward_cached(&theta_plus, x, t, total).output;
        let fm = forward_cached(&merged, x, t, total).output;
        let d1 = [fm[0] - f0[0], fm[1] - f0[1]];
        let d2 = [f1[0] - f0[0], f1[1] - f0[1]];
        let res = [d1[0] - lambda * d2[0], d1[1] - lambda * d2[1]];
        r_merge = r_merge.max((res[0] * res[0] + res[1] * res[1]).sqrt());

        let guided = crate::guidance::pgd_epsilon(f0, f1, lambda);
        let gap = [guided[0] - fm[0], guided[1] - fm[1]];
        r_gap = r_gap.max((gap[0] * gap[0] + gap[1] * gap[1]).sqrt());
    }
    Ok(ResidualReport {
        r_merge,
        r_guidance_gap: r_gap,
    })
}

/// Probe points drawn from noised data at mixed steps; residuals are
/// distribution-dependent, so the probes follow the sampling
/// distribution rather than a fixed grid.
pub fn noised_probes(
    data: &[Vec2],
    count: usize,
    sched: &NoiseSchedule,
    seed: u64,
) -> Vec<(Vec2, usize)> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let x0 = data[rng.gen_range(0..data.len())];
            let draw = draw_noise(sched, &mut rng);
            let xt = forward_noise(x0, draw.t, draw.eps, sched).expect("t in range");
            (xt, draw.t)
        })
        .collect()
}

/// Distillation loss: mean squared error between the student prediction
/// and the teacher's composed epsilon at noised dataset points, with the
/// matching analytic gradient.
pub fn distill_loss_frozen(
    student: &ModelParams,
    teacher: &GuidanceSpec,
    batch: &[Vec2],
    draws: &[NoiseDraw],
    sched: &NoiseSchedule,
) -> Result<(f64, ModelParams)> {
    if batch.is_empty() {
        return Err(Error::Empty { what: "batch" });
    }
    if batch.len() != draws.len() {
        return Err(Error::MismatchedDraws {
            expected: batch.len(),
            got: draws.len(),
        });
    }
    let teacher_eps = teacher.epsilon_fn(sched)?;
    let scale = 1.0 / batch.len() as f64;
    let mut grads = ModelParams::zeros(student.arch);
    let mut loss = 0.0;
    for (x0, draw) in batch.iter().zip(draws) {
        let xt = forward_noise(*x0, draw.t, draw.eps, sched)?;
        let target = crate::diffusion::EpsilonFn::epsilon(&teacher_eps, xt, draw.t);
        let cache = forward_cached(student, xt, draw.t, sched.len());
        let r = [cache.output[0] - target[0], cache.output[1] - target[1]];
        loss += scale * (r[0] * r[0] + r[1] * r[1]);
        let upstream = [2.0 * scale * r[0], 2.0 * scale * r[1]];
        backward_from_cache(student, &cache, upstream, &mut grads);
    }
    Ok((loss, grads))
}

pub struct DistillRun {
    pub params: ModelParams,
    pub loss_history: Vec<(usize, f64)>,
}

/// Offline distillation: teacher targets are computed at noised dataset
/// points, never at generated samples.
pub fn distill(
    student_init: &ModelParams,
    teacher: &GuidanceSpec,
    data: &[Vec2],
    cfg: &TrainConfig,
    sched: &NoiseSchedule,
) -> Result<DistillRun> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Empty { what: "dataset" });
    }
    teacher.validate(sched)?;
    let mut rng = StdRng::seed_from_u64(split_seed(cfg.seed, 0));
    let mut params = student_init.clone();
    let mut opt = OptimizerState::new(AdamConfig::with_lr(cfg.learning_rate), &params);
    let mut history = Vec::new();
    let mut batch = Vec::with_capacity(cfg.batch);
    for step in 1..=cfg.steps {
        batch.clear();
        for _ in 0..cfg.batch {
            batch.push(data[rng.gen_range(0..data.len())]);
        }
        let draws: Vec<NoiseDraw> = batch.iter().map(|_| draw_noise(sched, &mut rng)).collect();
        let (loss, grads) = distill_loss_frozen(&params, teacher, &batch, &draws, sched)?;
        if !loss.is_finite() {
            return Err(Error::Diverged { step, loss });
        }
        adam_step(&mut opt, &mut params, &grads)?;
        if step == 1 || step == cfg.steps || step % cfg.log_every == 0 {
            history.push((step, loss));
        }
    }
    Ok(DistillRun {
        params,
        loss_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{max_relative_deviation, numerical_gradient, tiny_arch};

    fn dyadic_params(fill: impl Fn(usize) -> f64) -> ModelParams {
        let mut p = ModelParams::zeros(tiny_arch());
        for i in 0..p.len() {
            *p.entry_mut(i) = fill(i);
        }
        p
    }

    #[test]
    fn merge_reduction_points_are_bitwise() {
        let mut rng = StdRng::seed_from_u64(60);
        let a = ModelParams::init(tiny_arch(), &mut rng);
        let b = ModelParams::init(tiny_arch(), &mut rng);
        assert_eq!(merge_pgd(&a, &b, 0.0).unwrap(), a);
        assert_eq!(merge_pgd(&a, &b, 1.0).unwrap(), b);
        assert_eq!(merge_cpgd(&a, &b, &b, 5.0).unwrap(), a);
        assert_eq!(merge_cpgd(&a, &b, &b, 0.0).unwrap(), a);
    }

    #[test]
    fn merge_is_exact_affine_on_dyadics() {
        // Dyadic entries make every fp operation exact, so alpha = 2
        // lands exactly on theta0 + 2 delta.
        let theta0 = dyadic_params(|i| 0.25 * (i % 9) as f64 - 0.5);
        let delta = dyadic_params(|i| 0.125 * (i % 5) as f64);
        let theta_plus = theta0.add(&delta);
        let merged = merge_pgd(&theta0, &theta_plus, 2.0).unwrap();
        let expect = theta0.add(&delta.scale(2.0));
        assert_eq!(merged, expect);

        // cpgd reduces to pgd when the loser branch is the base.
        let m1 = merge_cpgd(&theta0, &theta_plus, &theta0, 3.0).unwrap();
        let m2 = merge_pgd(&theta0, &theta_plus, 3.0).unwrap();
        assert_eq!(m1, m2);
    }

    #[test]
    fn merge_rejects_shape_mismatch_and_nan() {
        let a = ModelParams::zeros(tiny_arch());
        let b = ModelParams::zeros(crate::numerics::Architecture {
            embed_dim: 4,
            hidden_dim: 16,
        });
        assert!(merge_pgd(&a, &b, 1.0).is_err());
        assert!(merge_pgd(&a, &a, f64::NAN).is_err());
    }

    fn probe_grid(sched: &NoiseSchedule, seed: u64) -> Vec<(Vec2, usize)> {
        let mut rng = StdRng::seed_from_u64(seed);
        (0..24)
            .map(|_| {
                (
                    [rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)],
                    rng.gen_range(1..=sched.len()),
                )
            })
            .collect()
    }

    #[test]
    fn residual_is_exactly_zero_at_lambda_one() {
        let sched = NoiseSchedule::toy_default();
        let mut rng = StdRng::seed_from_u64(61);
        let theta0 = ModelParams::init(tiny_arch(), &mut rng);
        let mut delta = ModelParams::init(tiny_arch(), &mut rng);
        delta.map_in_place(|x| *x *= 0.05);
        let probes = probe_grid(&sched, 62);
        let rep = linearization_residual(&theta0, &delta, 1.0, &probes, &sched).unwrap();
        assert_eq!(rep.r_merge, 0.0);
        assert_eq!(rep.r_guidance_gap, 0.0);
    }

    #[test]
    fn head_only_perturbations_have_rounding_level_residual() {
        // The output is affine in (w3, b3), so the residual is pure fp
        // rounding noise, many orders below any full-network residual.
        let sched = NoiseSchedule::toy_default();
        let mut rng = StdRng::seed_from_u64(63);
        let theta0 = ModelParams::init(tiny_arch(), &mut rng);
        let mut delta = ModelParams::zeros(tiny_arch());
        for x in delta.w3.iter_mut().chain(delta.b3.iter_mut()) {
            *x = rng.gen_range(-0.5..0.5);
        }
        let probes = probe_grid(&sched, 64);
        let rep = linearization_residual(&theta0, &delta, 3.0, &probes, &sched).unwrap();
        assert!(rep.r_merge < 1e-12, "head-only residual {}", rep.r_merge);
    }

    #[test]
    fn residual_scales_quadratically_in_delta() {
        let sched = NoiseSchedule::toy_default();
        let mut rng = StdRng::seed_from_u64(65);
        let probes = probe_grid(&sched, 66);
        for trial in 0..10 {
            let theta0 = ModelParams::init(tiny_arch(), &mut rng);
            let mut delta = ModelParams::init(tiny_arch(), &mut rng);
            delta.map_in_place(|x| *x *= 0.02);
            let full = linearization_residual(&theta0, &delta, 3.0, &probes, &sched).unwrap();
            let half = linearization_residual(
                &theta0,
                &delta.scale(0.5),
                3.0,
                &probes,
                &sched,
            )
            .unwrap();
            let ratio = full.r_merge / half.r_merge;
            assert!(
                (3.5..=4.5).contains(&ratio),
                "trial {trial}: ratio {ratio} (full {} half {})",
                full.r_merge,
                half.r_merge
            );
        }
    }

    #[test]
    fn guidance_gap_equals_residual_formula() {
        let sched = NoiseSchedule::toy_default();
        let mut rng = StdRng::seed_from_u64(67);
        let theta0 = ModelParams::init(tiny_arch(), &mut rng);
        let mut delta = ModelParams::init(tiny_arch(), &mut rng);
        delta.map_in_place(|x| *x *= 0.05);
        let probes = probe_grid(&sched, 68);
        let rep = linearization_residual(&theta0, &delta, 2.5, &probes, &sched).unwrap();
        assert!(
            (rep.r_merge - rep.r_guidance_gap).abs() <= 1e-12 * (1.0 + rep.r_merge),
            "{} vs {}",
            rep.r_merge,
            rep.r_guidance_gap
        );
        assert!(rep.r_merge > 0.0);
    }

    #[test]
    fn self_distillation_is_a_fixed_point() {
        let sched = NoiseSchedule::toy_default();
        let base = ModelParams::init(tiny_arch(), &mut StdRng::seed_from_u64(69));
        let hold = ModelParams::zeros(tiny_arch());
        // w = 0 teacher collapses to the base model.
        let teacher = GuidanceSpec::pgd(&base, &hold, 0.0, &sched);
        let batch: Vec<Vec2> = vec![[1.0, 0.0], [0.0, -2.0], [3.0, 3.0]];
        let mut rng = StdRng::seed_from_u64(70);
        let draws: Vec<NoiseDraw> = batch.iter().map(|_| draw_noise(&sched, &mut rng)).collect();
        let (loss, grads) = distill_loss_frozen(&base, &teacher, &batch, &draws, &sched).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(grads.norm(), 0.0);
    }

    #[test]
    fn distill_gradient_matches_finite_differences() {
        let sched = NoiseSchedule::toy_default();
        let mut rng = StdRng::seed_from_u64(71);
        let base = ModelParams::init(tiny_arch(), &mut rng);
        let pos = ModelParams::init(tiny_arch(), &mut rng);
        let neg = ModelParams::init(tiny_arch(), &mut rng);
        let student = ModelParams::init(tiny_arch(), &mut rng);
        let teacher = GuidanceSpec::cpgd(&base, &pos, &neg, 2.0, &sched);
        let batch: Vec<Vec2> = (0..6)
            .map(|_| [rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)])
            .collect();
        let draws: Vec<NoiseDraw> = batch.iter().map(|_| draw_noise(&sched, &mut rng)).collect();
        let (_, grads) =
            distill_loss_frozen(&student, &teacher, &batch, &draws, &sched).unwrap();
        let num = numerical_gradient(
            &|q| {
                distill_loss_frozen(q, &teacher, &batch, &draws, &sched)
                    .unwrap()
                    .0
            },
            &student,
            1e-6,
        );
        let dev = max_relative_deviation(&grads, &num, 1e-6);
        assert!(dev < 1e-4, "relative deviation {dev}");
    }

    #[test]
    fn distillation_run_is_deterministic() {
        let sched = NoiseSchedule::toy_default();
        let mut rng = StdRng::seed_from_u64(72);
        let base = ModelParams::init(tiny_arch(), &mut rng);
        let tuned = ModelParams::init(tiny_arch(), &mut rng);
        let teacher = GuidanceSpec::pgd(&base, &tuned, 1.5, &sched);
        let data: Vec<Vec2> = (0..64)
            .map(|_| [rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)])
            .collect();
        let cfg = TrainConfig {
            steps: 30,
            batch: 16,
            learning_rate: 1e-3,
            seed: 73,
            log_every: 10,
        };
        let a = distill(&base, &teacher, &data, &cfg, &sched).unwrap();
        let b = distill(&base, &teacher, &data, &cfg, &sched).unwrap();
        assert_eq!(a.params, b.params);
    }
}
