//! Acceptance suite: one test per criterion, sharing trained fixtures.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the one
//! PASS line per criterion. The trained fixtures take a few minutes on
//! one core; tests that only need algebra use small architectures and
//! run immediately.

use std::sync::OnceLock;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use pgd2d::alignment::{
    dpo_loss_frozen, draw_pair_noise, train_dpo, train_sft, verify_reweighting_identity,
    AlignConfig, DpoRun, PairDraw,
};
use pgd2d::dataset::{
    generate_mixture, sample_pairs, subset, GaussianMixtureSpec, Label, LabeledPoint,
    PreferencePair,
};
use pgd2d::diffusion::{
    diffusion_loss_frozen, draw_noise, sample, split_seed, train_base, ModelEpsilon, NoiseDraw,
    NoiseSchedule, SampleResult, TrainConfig,
};
use pgd2d::guidance::{guided_sample, weight_sweep, GuidanceSpec};
use pgd2d::merge_distill::{
    distill, distill_loss_frozen, linearization_residual, merge_cpgd, merge_pgd,
};
use pgd2d::metrics::{
    cluster_assign, diversity_score, frechet_2d, frechet_gaussians, win_rate, MetricOptions,
};
use pgd2d::numerics::{
    max_relative_deviation, numerical_gradient, tiny_arch, Architecture, ModelParams, Vec2,
};

const SEED: u64 = 0;

fn sched() -> &'static NoiseSchedule {
    static S: OnceLock<NoiseSchedule> = OnceLock::new();
    S.get_or_init(NoiseSchedule::toy_default)
}

fn mixture() -> GaussianMixtureSpec {
    GaussianMixtureSpec {
        seed: SEED,
        ..Default::default()
    }
}

struct BaseFixture {
    points: Vec<LabeledPoint>,
    data: Vec<Vec2>,
    pairs: Vec<PreferencePair>,
    base: ModelParams,
    base_samples: SampleResult,
}

/// Dataset, pairs, and the pretrained base model: the lineage every toy
/// replication starts from.
fn base_fixture() -> &'static BaseFixture {
    static F: OnceLock<BaseFixture> = OnceLock::new();
    F.get_or_init(|| {
        let mut rng = StdRng::seed_from_u64(split_seed(SEED, 100));
        let points = generate_mixture(&mixture(), 8192, &mut rng).expect("mixture");
        let pairs = sample_pairs(&points, 8192, &mut rng).expect("pairs");
        let data: Vec<Vec2> = points.iter().map(|p| p.x).collect();
        let init = ModelParams::init(
            Architecture::default(),
            &mut StdRng::seed_from_u64(split_seed(SEED, 101)),
        );
        let cfg = TrainConfig {
            steps: 3000,
            batch: 128,
            learning_rate: 1e-3,
            seed: SEED,
            log_every: 50,
        };
        let run = train_base(&init, &data, &cfg, sched()).expect("base training");
        let base_samples =
            sample(&ModelEpsilon::new(&run.params, sched()), 4000, sched(), split_seed(SEED, 200))
                .expect("base sampling");
        BaseFixture {
            points,
            data,
            pairs,
            base: run.params,
            base_samples,
        }
    })
}

/// Moderately DPO-tuned checkpoint used as the guidance signal.
fn dpo_moderate() -> &'static ModelParams {
    static F: OnceLock<ModelParams> = OnceLock::new();
    F.get_or_init(|| {
        let fx = base_fixture();
        let cfg = AlignConfig {
            beta: 1.0,
            steps: 2000,
            batch_pairs: 64,
            learning_rate: 1e-3,
            seed: SEED,
            log_every: 100,
            probe_size: 1024,
            omega: 1.0,
        };
        train_dpo(&fx.base, &fx.pairs, &cfg, sched())
            .expect("moderate dpo")
            .params
    })
}

/// Overtrained DPO on a small pair pool: the collapse regime.
fn dpo_collapsed() -> &'static DpoRun {
    static F: OnceLock<DpoRun> = OnceLock::new();
    F.get_or_init(|| {
        let fx = base_fixture();
        let small_pairs: Vec<PreferencePair> = fx.pairs[..256].to_vec();
        let cfg = AlignConfig {
            beta: 3.0,
            steps: 2000,
            batch_pairs: 64,
            learning_rate: 3e-3,
            seed: SEED,
            log_every: 250,
            probe_size: 1024,
            omega: 1.0,
        };
        train_dpo(&fx.base, &small_pairs, &cfg, sched()).expect("collapse dpo")
    })
}

fn sft_cfg() -> AlignConfig {
    AlignConfig {
        beta: 1.0,
        omega: 1.0,
        steps: 2000,
        batch_pairs: 128,
        learning_rate: 1e-3,
        seed: SEED,
        log_every: 100,
        probe_size: 0,
    }
}

fn sft_positive() -> &'static ModelParams {
    static F: OnceLock<ModelParams> = OnceLock::new();
    F.get_or_init(|| {
        let fx = base_fixture();
        let data = subset(&fx.points, Label::Positive);
        train_sft(&fx.base, &data, &sft_cfg(), sched())
            .expect("sft positive")
            .params
    })
}

fn sft_negative() -> &'static ModelParams {
    static F: OnceLock<ModelParams> = OnceLock::new();
    F.get_or_init(|| {
        let fx = base_fixture();
        let data = subset(&fx.points, Label::Negative);
        train_sft(&fx.base, &data, &sft_cfg(), sched())
            .expect("sft negative")
            .params
    })
}

fn positive_mass_of(samples: &SampleResult) -> f64 {
    let counts = cluster_assign(&samples.samples, &mixture(), 4.0 * mixture().cluster_std)
        .expect("assignment");
    counts.positive_mass().expect("mass")
}

fn coverage_of(samples: &SampleResult) -> usize {
    let counts = cluster_assign(&samples.samples, &mixture(), 4.0 * mixture().cluster_std)
        .expect("assignment");
    counts.modes_covered(0.02)
}

#[test]
fn c01_reduction_identities() {
    let s = sched();
    let mut rng = StdRng::seed_from_u64(1);
    let base = ModelParams::init(tiny_arch(), &mut rng);
    let tuned = ModelParams::init(tiny_arch(), &mut rng);

    let plain = sample(&ModelEpsilon::new(&base, s), 64, s, 42).unwrap();
    let w0 = guided_sample(&GuidanceSpec::pgd(&base, &tuned, 0.0, s), 64, s, 42).unwrap();
    assert_eq!(w0.samples, plain.samples, "PGD w=0 must equal base bitwise");

    let direct = sample(&ModelEpsilon::new(&tuned, s), 64, s, 42).unwrap();
    let w1 = guided_sample(&GuidanceSpec::pgd(&base, &tuned, 1.0, s), 64, s, 42).unwrap();
    assert_eq!(w1.samples, direct.samples, "PGD w=1 must equal tuned bitwise");

    let tied = guided_sample(&GuidanceSpec::cpgd(&base, &tuned, &tuned, 6.0, s), 64, s, 42)
        .unwrap();
    assert_eq!(tied.samples, plain.samples, "cPGD tied branches must equal base");

    let s0 = guided_sample(
        &GuidanceSpec::pgd(&base, &tuned, 9.0, s).with_cutoff(0),
        64,
        s,
        42,
    )
    .unwrap();
    assert_eq!(s0.samples, plain.samples, "s=0 must equal base bitwise");

    assert_eq!(merge_pgd(&base, &tuned, 0.0).unwrap(), base);
    assert_eq!(merge_pgd(&base, &tuned, 1.0).unwrap(), tuned);
    assert_eq!(merge_cpgd(&base, &tuned, &tuned, 10.0).unwrap(), base);

    println!("ACCEPT c01 reduction-identities: PASS (w=0, w=1, tied-branch, s=0, merge endpoints all bitwise)");
}

#[test]
fn c02_dpo_fixed_point() {
    let s = sched();
    let mut worst = 0.0f64;
    for seed in 0..50u64 {
        let mut rng = StdRng::seed_from_u64(900 + seed);
        let params = ModelParams::init(tiny_arch(), &mut rng);
        let spec = GaussianMixtureSpec::default();
        let pts = generate_mixture(&spec, 128, &mut rng).unwrap();
        let pairs = sample_pairs(&pts, 8, &mut rng).unwrap();
        let draws: Vec<PairDraw> = pairs.iter().map(|_| draw_pair_noise(s, &mut rng)).collect();
        let cfg = AlignConfig {
            beta: [0.5, 1.0, 3.0, 3000.0][seed as usize % 4],
            ..Default::default()
        };
        let eval = dpo_loss_frozen(&params, &params, &pairs, &draws, &cfg, s).unwrap();
        worst = worst.max((eval.loss - std::f64::consts::LN_2).abs());
    }
    assert!(worst < 1e-12, "max |loss - ln2| = {worst:e}");
    println!("ACCEPT c02 dpo-fixed-point: PASS (max |loss - ln 2| = {worst:.2e} over 50 batches)");
}

#[test]
fn c03_gradient_correctness() {
    let s = sched();
    let tol = 1e-4;
    let mut worst_diffusion = 0.0f64;
    let mut worst_dpo = 0.0f64;
    let mut worst_sft = 0.0f64;
    let mut worst_distill = 0.0f64;

    for trial in 0..20u64 {
        let mut rng = StdRng::seed_from_u64(300 + trial);
        let params = ModelParams::init(tiny_arch(), &mut rng);
        let batch: Vec<Vec2> = (0..5)
            .map(|_| [rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)])
            .collect();
        let draws: Vec<NoiseDraw> = batch.iter().map(|_| draw_noise(s, &mut rng)).collect();

        // diffusion loss (and sft_loss, which is the same machinery on a
        // label subset; both checked through the frozen path).
        let (_, grads) = diffusion_loss_frozen(&params, &batch, &draws, s).unwrap();
        let num = numerical_gradient(
            &|q| diffusion_loss_frozen(q, &batch, &draws, s).unwrap().0,
            &params,
            1e-6,
        );
        worst_diffusion = worst_diffusion.max(max_relative_deviation(&grads, &num, 1e-6));

        let subset_batch: Vec<Vec2> = batch[..3].to_vec();
        let subset_draws: Vec<NoiseDraw> = draws[..3].to_vec();
        let (_, grads) = diffusion_loss_frozen(&params, &subset_batch, &subset_draws, s).unwrap();
        let num = numerical_gradient(
            &|q| {
                diffusion_loss_frozen(q, &subset_batch, &subset_draws, s)
                    .unwrap()
                    .0
            },
            &params,
            1e-6,
        );
        worst_sft = worst_sft.max(max_relative_deviation(&grads, &num, 1e-6));

        // dpo loss.
        let refp = ModelParams::init(tiny_arch(), &mut rng);
        let spec = GaussianMixtureSpec::default();
        let pts = generate_mixture(&spec, 64, &mut rng).unwrap();
        let pairs = sample_pairs(&pts, 4, &mut rng).unwrap();
        let pdraws: Vec<PairDraw> = pairs.iter().map(|_| draw_pair_noise(s, &mut rng)).collect();
        let cfg = AlignConfig {
            beta: [0.5, 1.0, 3.0][trial as usize % 3],
            ..Default::default()
        };
        let eval = dpo_loss_frozen(&params, &refp, &pairs, &pdraws, &cfg, s).unwrap();
        let num = numerical_gradient(
            &|q| dpo_loss_frozen(q, &refp, &pairs, &pdraws, &cfg, s).unwrap().loss,
            &params,
            1e-6,
        );
        worst_dpo = worst_dpo.max(max_relative_deviation(&eval.grads, &num, 1e-6));

        // distillation loss against a cPGD teacher.
        let pos = ModelParams::init(tiny_arch(), &mut rng);
        let neg = ModelParams::init(tiny_arch(), &mut rng);
        let teacher = GuidanceSpec::cpgd(&refp, &pos, &neg, 2.0, s);
        let (_, grads) = distill_loss_frozen(&params, &teacher, &batch, &draws, s).unwrap();
        let num = numerical_gradient(
            &|q| distill_loss_frozen(q, &teacher, &batch, &draws, s).unwrap().0,
            &params,
            1e-6,
        );
        worst_distill = worst_distill.max(max_relative_deviation(&grads, &num, 1e-6));
    }

    assert!(worst_diffusion < tol, "diffusion grad dev {worst_diffusion:e}");
    assert!(worst_dpo < tol, "dpo grad dev {worst_dpo:e}");
    assert!(worst_sft < tol, "sft grad dev {worst_sft:e}");
    assert!(worst_distill < tol, "distill grad dev {worst_distill:e}");
    println!(
        "ACCEPT c03 gradient-correctness: PASS (20 configs each; max rel dev diffusion {worst_diffusion:.2e}, dpo {worst_dpo:.2e}, sft {worst_sft:.2e}, distill {worst_distill:.2e})"
    );
}

#[test]
fn c04_reweighting_identity() {
    let s = sched();
    let mut worst = 0.0f64;
    for seed in 0..50u64 {
        let mut rng = StdRng::seed_from_u64(400 + seed);
        let refp = ModelParams::init(tiny_arch(), &mut rng);
        let scale = 0.02 + 0.01 * (seed % 10) as f64;
        let mut tp = refp.clone();
        tp.map_in_place(|x| *x += scale * rng.gen_range(-1.0..1.0));
        let mut tm = refp.clone();
        tm.map_in_place(|x| *x += scale * rng.gen_range(-1.0..1.0));
        let spec = GaussianMixtureSpec::default();
        let pts = generate_mixture(&spec, 64, &mut rng).unwrap();
        let pairs = sample_pairs(&pts, 8, &mut rng).unwrap();
        let draws: Vec<PairDraw> = pairs.iter().map(|_| draw_pair_noise(s, &mut rng)).collect();
        let beta = [0.5, 1.0, 3.0][seed as usize % 3];
        let check = verify_reweighting_identity(&tp, &tm, &refp, &pairs, beta, 1.0, s, &draws)
            .unwrap();
        assert!(
            check.max_gradient > 1e-6,
            "vacuous comparison at seed {seed}"
        );
        worst = worst.max(check.max_deviation);
    }
    assert!(worst < 1e-8, "max abs deviation {worst:e}");
    println!("ACCEPT c04 reweighting-identity: PASS (max abs deviation {worst:.2e} over 50 configs)");
}

#[test]
fn c05_taylor_residual_scaling() {
    let s = sched();
    let mut rng = StdRng::seed_from_u64(500);
    let probes: Vec<(Vec2, usize)> = (0..24)
        .map(|_| {
            (
                [rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)],
                rng.gen_range(1..=s.len()),
            )
        })
        .collect();

    // Exactly zero at lambda = 1.
    let theta0 = ModelParams::init(tiny_arch(), &mut rng);
    let mut delta = ModelParams::init(tiny_arch(), &mut rng);
    delta.map_in_place(|x| *x *= 0.05);
    let rep = linearization_residual(&theta0, &delta, 1.0, &probes, s).unwrap();
    assert_eq!(rep.r_merge, 0.0, "lambda=1 residual must be bitwise zero");

    // Head-only perturbations: the output is affine in the head, so the
    // residual is fp rounding noise only (documented bound 1e-12).
    let mut head_delta = ModelParams::zeros(tiny_arch());
    for x in head_delta.w3.iter_mut().chain(head_delta.b3.iter_mut()) {
        *x = rng.gen_range(-0.5..0.5);
    }
    let rep = linearization_residual(&theta0, &head_delta, 3.0, &probes, s).unwrap();
    assert!(rep.r_merge < 1e-12, "head-only residual {:e}", rep.r_merge);
    let head_residual = rep.r_merge;

    // Quadratic scaling for 20 full-network perturbations.
    let mut ratios = Vec::new();
    for trial in 0..20u64 {
        let mut trng = StdRng::seed_from_u64(510 + trial);
        let t0 = ModelParams::init(tiny_arch(), &mut trng);
        let mut d = ModelParams::init(tiny_arch(), &mut trng);
        d.map_in_place(|x| *x *= 0.02);
        let full = linearization_residual(&t0, &d, 3.0, &probes, s).unwrap();
        let half = linearization_residual(&t0, &d.scale(0.5), 3.0, &probes, s).unwrap();
        let ratio = full.r_merge / half.r_merge;
        assert!(
            (3.5..=4.5).contains(&ratio),
            "trial {trial}: halving ratio {ratio}"
        );
        ratios.push(ratio);
    }
    let mean: f64 = ratios.iter().sum::<f64>() / ratios.len() as f64;
    println!(
        "ACCEPT c05 taylor-residual: PASS (lambda=1 residual exactly 0, head-only {head_residual:.1e}, halving ratio mean {mean:.2} in [3.5, 4.5] over 20 draws)"
    );
}

#[test]
fn c06_dpo_collapse() {
    let run = dpo_collapsed();
    let step0 = run.history[0];
    assert_eq!(step0.step, 0);
    let collapsed_at = run.history.iter().find(|row| {
        row.step > 0
            && row.pos_component > step0.pos_component
            && row.neg_component > step0.neg_component
    });
    let row = collapsed_at.expect("no checkpoint with both probe MSEs above pretrain");

    let fx = base_fixture();
    let dpo_samples = sample(
        &ModelEpsilon::new(&run.params, sched()),
        4000,
        sched(),
        split_seed(SEED, 201),
    )
    .unwrap();
    let base_cov = coverage_of(&fx.base_samples);
    assert!(
        base_cov >= 7,
        "pretrained model covers only {base_cov}/8 modes"
    );
    let dpo_cov = coverage_of(&dpo_samples);
    assert!(
        dpo_cov < base_cov,
        "coverage did not drop: dpo {dpo_cov} vs base {base_cov}"
    );
    println!(
        "ACCEPT c06 dpo-collapse: PASS (step {}: probe MSEs +{:.3}/-{:.3} above pretrain +{:.3}/-{:.3}; coverage {} < base {})",
        row.step, row.pos_component, row.neg_component, step0.pos_component, step0.neg_component,
        dpo_cov, base_cov
    );
}

#[test]
fn c07_pgd_weight_sweep() {
    let fx = base_fixture();
    let tuned = dpo_moderate();
    let opts = MetricOptions::for_mixture(mixture());
    let spec = GuidanceSpec::pgd(&fx.base, tuned, 0.0, sched());
    let rows = weight_sweep(
        &spec,
        &[0.0, 1.0, 3.0, 5.0, 10.0],
        4000,
        sched(),
        split_seed(SEED, 200),
        &opts,
        &fx.data,
    )
    .unwrap();
    let at = |w: f64| rows.iter().find(|r| r.weight == w).unwrap();
    let mass0 = at(0.0).metrics.positive_mass;
    let mass3 = at(3.0).metrics.positive_mass;
    let mass10 = at(10.0).metrics.positive_mass;
    assert!(
        mass3 >= mass0 + 0.25,
        "positive mass at w=3 ({mass3:.3}) is not 0.25 above w=0 ({mass0:.3})"
    );
    assert!(
        at(3.0).metrics.positive_modes_covered >= 3,
        "w=3 covers only {} positive modes",
        at(3.0).metrics.positive_modes_covered
    );
    let cov3 = at(3.0).metrics.modes_covered;
    let cov10 = at(10.0).metrics.modes_covered;
    assert!(
        cov10 < cov3,
        "w=10 coverage {cov10} not below w=3 coverage {cov3}"
    );
    println!(
        "ACCEPT c07 pgd-weight-sweep: PASS (mass {mass0:.3} -> {mass3:.3} at w=3, positive modes {}/4, over-concentration at w=10: mass {mass10:.3}, coverage {cov10} < {cov3})",
        at(3.0).metrics.positive_modes_covered
    );
}

#[test]
fn c08_sft_positive_replication() {
    let samples = sample(
        &ModelEpsilon::new(sft_positive(), sched()),
        4000,
        sched(),
        split_seed(SEED, 202),
    )
    .unwrap();
    let mass = positive_mass_of(&samples);
    assert!(mass >= 0.90, "SFT+ positive mass {mass:.3} < 0.90");
    let counts = cluster_assign(&samples.samples, &mixture(), 4.0 * mixture().cluster_std)
        .unwrap();
    let n = samples.samples.len() as f64;
    let mut per_mode = Vec::new();
    for k in (0..8).step_by(2) {
        let frac = counts.per_cluster[k] as f64 / n;
        assert!(
            frac >= 0.05,
            "positive cluster {k} holds only {frac:.3} of mass"
        );
        per_mode.push(format!("{frac:.2}"));
    }

    // Implicit-reward sanity under the winner model: the proxy scores
    // positive-cluster points above negative-cluster points.
    let fx = base_fixture();
    let mut rng = StdRng::seed_from_u64(800);
    let frozen: Vec<NoiseDraw> = (0..64).map(|_| draw_noise(sched(), &mut rng)).collect();
    let mean_proxy = |label: Label| -> f64 {
        let pts: Vec<Vec2> = fx
            .points
            .iter()
            .filter(|p| p.label == label)
            .take(32)
            .map(|p| p.x)
            .collect();
        pts.iter()
            .map(|&x| {
                pgd2d::metrics::implicit_reward_proxy(
                    sft_positive(),
                    &fx.base,
                    x,
                    1.0,
                    sched(),
                    &frozen,
                )
                .unwrap()
            })
            .sum::<f64>()
            / pts.len() as f64
    };
    let pos_proxy = mean_proxy(Label::Positive);
    let neg_proxy = mean_proxy(Label::Negative);
    assert!(
        pos_proxy > neg_proxy,
        "implicit reward proxy does not separate subsets: +{pos_proxy} vs -{neg_proxy}"
    );

    println!(
        "ACCEPT c08 sft-positive: PASS (mass {mass:.3} >= 0.90, positive modes [{}] all >= 0.05, proxy separation +{pos_proxy:.2} > {neg_proxy:.2})",
        per_mode.join(", ")
    );
}

#[test]
fn c09_metric_oracles() {
    // Diversity against the brute-force double loop on 100 random sets.
    let mut rng = StdRng::seed_from_u64(600);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(2..120);
        let samples: Vec<Vec2> = (0..n)
            .map(|_| [rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0)])
            .collect();
        let fast = diversity_score(&samples).unwrap();
        let mut acc = 0.0;
        for i in 0..samples.len() {
            for j in (i + 1)..samples.len() {
                acc += (samples[i][0] - samples[j][0]).powi(2)
                    + (samples[i][1] - samples[j][1]).powi(2);
            }
        }
        let nf = samples.len() as f64;
        let brute = 2.0 * acc / (nf * (nf - 1.0));
        worst = worst.max((fast - brute).abs());
    }
    assert!(worst < 1e-9, "diversity deviation {worst:e}");

    // Fréchet: analytic two-Gaussian value, Monte-Carlo within 5%, and
    // exact-zero self distance.
    let exact = frechet_gaussians(
        [0.0, 0.0],
        [[1.0, 0.0], [0.0, 1.0]],
        [1.0, 0.0],
        [[4.0, 0.0], [0.0, 4.0]],
    )
    .unwrap();
    assert!((exact - 3.0).abs() < 1e-12);
    use rand_distr::StandardNormal;
    let n = 100_000;
    let a: Vec<Vec2> = (0..n)
        .map(|_| {
            [
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
            ]
        })
        .collect();
    let b: Vec<Vec2> = (0..n)
        .map(|_| {
            [
                1.0 + 2.0 * rng.sample::<f64, _>(StandardNormal),
                2.0 * rng.sample::<f64, _>(StandardNormal),
            ]
        })
        .collect();
    let est = frechet_2d(&a, &b).unwrap();
    assert!((est - 3.0).abs() / 3.0 < 0.05, "MC estimate {est}");
    let self_d = frechet_2d(&a, &a).unwrap();
    assert!(self_d < 1e-10, "self distance {self_d:e}");

    // Win-rate hand counts.
    let wr = win_rate(&[1.0, 0.0, 2.0], &[0.0, 1.0, 1.0]).unwrap();
    assert_eq!(wr, 100.0 * 2.0 / 3.0);
    assert_eq!(win_rate(&[7.0, 7.0], &[7.0, 7.0]).unwrap(), 50.0);
    assert_eq!(win_rate(&[2.0, 3.0], &[1.0, 2.0]).unwrap(), 100.0);

    println!(
        "ACCEPT c09 metric-oracles: PASS (diversity dev {worst:.1e}, frechet MC {est:.3} vs 3.0, self {self_d:.1e}, win-rate hand counts exact)"
    );
}

#[test]
fn c10_distillation() {
    let s = sched();
    // Fixed point: a w=0 teacher gives zero loss and gradient at
    // student = base, bitwise.
    let mut rng = StdRng::seed_from_u64(700);
    let base_small = ModelParams::init(tiny_arch(), &mut rng);
    let unused = ModelParams::init(tiny_arch(), &mut rng);
    let teacher = GuidanceSpec::pgd(&base_small, &unused, 0.0, s);
    let batch: Vec<Vec2> = (0..8)
        .map(|_| [rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)])
        .collect();
    let draws: Vec<NoiseDraw> = batch.iter().map(|_| draw_noise(s, &mut rng)).collect();
    let (loss, grads) =
        distill_loss_frozen(&base_small, &teacher, &batch, &draws, s).unwrap();
    assert_eq!(loss, 0.0);
    assert_eq!(grads.norm(), 0.0);

    // Gain: a student distilled from the cPGD teacher beats the base
    // model's positive mass by at least 0.15.
    let fx = base_fixture();
    let teacher = GuidanceSpec::cpgd(&fx.base, sft_positive(), sft_negative(), 1.0, s);
    let cfg = TrainConfig {
        steps: 3000,
        batch: 128,
        learning_rate: 1e-3,
        seed: SEED,
        log_every: 100,
    };
    let run = distill(&fx.base, &teacher, &fx.data, &cfg, s).unwrap();
    let student_samples = sample(
        &ModelEpsilon::new(&run.params, s),
        4000,
        s,
        split_seed(SEED, 203),
    )
    .unwrap();
    let base_mass = positive_mass_of(&fx.base_samples);
    let student_mass = positive_mass_of(&student_samples);
    assert!(
        student_mass >= base_mass + 0.15,
        "student mass {student_mass:.3} not 0.15 above base {base_mass:.3}"
    );
    println!(
        "ACCEPT c10 distillation: PASS (w=0 fixed point exact; cPGD student mass {student_mass:.3} vs base {base_mass:.3})"
    );
}
