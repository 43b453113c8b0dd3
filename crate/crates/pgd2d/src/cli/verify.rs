//! Fast identity/oracle battery behind the `verify` subcommand: the
//! algebraic reductions, fixed points, gradient oracles, and metric
//! oracles that must hold regardless of training state. Runs in seconds
//! on small architectures.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

use crate::alignment::{
    dpo_loss_frozen, draw_pair_noise, verify_reweighting_identity, AlignConfig, PairDraw,
};
use crate::dataset::{generate_mixture, sample_pairs, GaussianMixtureSpec, PreferencePair};
use crate::diffusion::{
    diffusion_loss_frozen, draw_noise, sample, ModelEpsilon, NoiseDraw, NoiseSchedule,
};
use crate::guidance::{guided_sample, GuidanceSpec};
use crate::merge_distill::{distill_loss_frozen, linearization_residual, merge_pgd};
use crate::metrics::{diversity_score, frechet_2d, frechet_gaussians, win_rate};
use crate::numerics::{
    max_relative_deviation, numerical_gradient, tiny_arch, ModelParams, Vec2,
};

pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &'static str, pass: bool, detail: String) -> CheckResult {
    CheckResult { name, pass, detail }
}

fn toy_pairs(n: usize, seed: u64) -> Vec<PreferencePair> {
    let spec = GaussianMixtureSpec::default();
    let mut rng = StdRng::seed_from_u64(seed);
    let pts = generate_mixture(&spec, 256, &mut rng).unwrap();
    sample_pairs(&pts, n, &mut rng).unwrap()
}

pub fn run_battery() -> Vec<CheckResult> {
    let mut results = Vec::new();
    let sched = NoiseSchedule::toy_default();
    let mut rng = StdRng::seed_from_u64(0xCAFE);
    let base = ModelParams::init(tiny_arch(), &mut rng);
    let tuned = ModelParams::init(tiny_arch(), &mut rng);
    let neg = ModelParams::init(tiny_arch(), &mut rng);

    // Reduction identities: w=0 / s=0 / tied-branch / merge endpoints.
    {
        let plain = sample(&ModelEpsilon::new(&base, &sched), 16, &sched, 5).unwrap();
        let w0 = guided_sample(&GuidanceSpec::pgd(&base, &tuned, 0.0, &sched), 16, &sched, 5)
            .unwrap();
        let s0 = guided_sample(
            &GuidanceSpec::pgd(&base, &tuned, 7.0, &sched).with_cutoff(0),
            16,
            &sched,
            5,
        )
        .unwrap();
        let w1 = guided_sample(&GuidanceSpec::pgd(&base, &tuned, 1.0, &sched), 16, &sched, 5)
            .unwrap();
        let direct = sample(&ModelEpsilon::new(&tuned, &sched), 16, &sched, 5).unwrap();
        let tied = guided_sample(&GuidanceSpec::cpgd(&base, &neg, &neg, 3.0, &sched), 16, &sched, 5)
            .unwrap();
        let pass = w0.samples == plain.samples
            && s0.samples == plain.samples
            && w1.samples == direct.samples
            && tied.samples == plain.samples
            && merge_pgd(&base, &tuned, 0.0).unwrap() == base
            && merge_pgd(&base, &tuned, 1.0).unwrap() == tuned;
        results.push(check(
            "reduction-identities",
            pass,
            "w=0/s=0/tied-branch/merge endpoints bitwise".into(),
        ));
    }

    // DPO fixed point at the reference policy.
    {
        let mut worst = 0.0f64;
        for seed in 0..5u64 {
            let params = ModelParams::init(tiny_arch(), &mut StdRng::seed_from_u64(seed));
            let pairs = toy_pairs(8, 40 + seed);
            let mut r = StdRng::seed_from_u64(50 + seed);
            let draws: Vec<PairDraw> =
                pairs.iter().map(|_| draw_pair_noise(&sched, &mut r)).collect();
            let cfg = AlignConfig {
                beta: 3.0,
                ..Default::default()
            };
            let eval = dpo_loss_frozen(&params, &params, &pairs, &draws, &cfg, &sched).unwrap();
            worst = worst.max((eval.loss - std::f64::consts::LN_2).abs());
        }
        results.push(check(
            "dpo-fixed-point",
            worst < 1e-12,
            format!("max |loss - ln 2| = {worst:.2e}"),
        ));
    }

    // Analytic gradients against central finite differences.
    {
        let mut worst = 0.0f64;
        let mut r = StdRng::seed_from_u64(60);
        let params = ModelParams::init(tiny_arch(), &mut r);
        let batch: Vec<Vec2> = (0..4)
            .map(|_| [r.gen_range(-4.0..4.0), r.gen_range(-4.0..4.0)])
            .collect();
        let draws: Vec<NoiseDraw> = batch.iter().map(|_| draw_noise(&sched, &mut r)).collect();
        let (_, g) = diffusion_loss_frozen(&params, &batch, &draws, &sched).unwrap();
        let n = numerical_gradient(
            &|q| diffusion_loss_frozen(q, &batch, &draws, &sched).unwrap().0,
            &params,
            1e-6,
        );
        worst = worst.max(max_relative_deviation(&g, &n, 1e-6));

        let refp = ModelParams::init(tiny_arch(), &mut r);
        let pairs = toy_pairs(4, 61);
        let pdraws: Vec<PairDraw> =
            pairs.iter().map(|_| draw_pair_noise(&sched, &mut r)).collect();
        let cfg = AlignConfig {
            beta: 1.0,
            ..Default::default()
        };
        let eval = dpo_loss_frozen(&params, &refp, &pairs, &pdraws, &cfg, &sched).unwrap();
        let n = numerical_gradient(
            &|q| {
                dpo_loss_frozen(q, &refp, &pairs, &pdraws, &cfg, &sched)
                    .unwrap()
                    .loss
            },
            &params,
            1e-6,
        );
        worst = worst.max(max_relative_deviation(&eval.grads, &n, 1e-6));

        let teacher = GuidanceSpec::cpgd(&base, &tuned, &neg, 2.0, &sched);
        let (_, g) = distill_loss_frozen(&params, &teacher, &batch, &draws, &sched).unwrap();
        let n = numerical_gradient(
            &|q| {
                distill_loss_frozen(q, &teacher, &batch, &draws, &sched)
                    .unwrap()
                    .0
            },
            &params,
            1e-6,
        );
        worst = worst.max(max_relative_deviation(&g, &n, 1e-6));
        results.push(check(
            "gradient-oracles",
            worst < 1e-4,
            format!("max relative deviation {worst:.2e}"),
        ));
    }

    // Dynamic-reweighting identity.
    {
        let mut worst = 0.0f64;
        for seed in 0..5u64 {
            let mut r = StdRng::seed_from_u64(70 + seed);
            let refp = ModelParams::init(tiny_arch(), &mut r);
            let mut tp = refp.clone();
            tp.map_in_place(|x| *x += 0.08 * r.gen_range(-1.0..1.0));
            let mut tm = refp.clone();
            tm.map_in_place(|x| *x += 0.08 * r.gen_range(-1.0..1.0));
            let pairs = toy_pairs(8, 80 + seed);
            let draws: Vec<PairDraw> =
                pairs.iter().map(|_| draw_pair_noise(&sched, &mut r)).collect();
            let beta = [0.5, 1.0, 3.0][seed as usize % 3];
            let c = verify_reweighting_identity(&tp, &tm, &refp, &pairs, beta, 1.0, &sched, &draws)
                .unwrap();
            worst = worst.max(c.max_deviation);
        }
        results.push(check(
            "reweighting-identity",
            worst < 1e-8,
            format!("max abs deviation {worst:.2e}"),
        ));
    }

    // First-order residual: exact zero at lambda = 1, quadratic scaling.
    {
        let mut r = StdRng::seed_from_u64(90);
        let probes: Vec<(Vec2, usize)> = (0..16)
            .map(|_| {
                (
                    [r.gen_range(-4.0..4.0), r.gen_range(-4.0..4.0)],
                    r.gen_range(1..=sched.len()),
                )
            })
            .collect();
        let mut delta = ModelParams::init(tiny_arch(), &mut r);
        delta.map_in_place(|x| *x *= 0.02);
        let at_one = linearization_residual(&base, &delta, 1.0, &probes, &sched).unwrap();
        let full = linearization_residual(&base, &delta, 3.0, &probes, &sched).unwrap();
        let half =
            linearization_residual(&base, &delta.scale(0.5), 3.0, &probes, &sched).unwrap();
        let ratio = full.r_merge / half.r_merge;
        let pass = at_one.r_merge == 0.0 && (3.5..=4.5).contains(&ratio);
        results.push(check(
            "taylor-residual",
            pass,
            format!("residual(1)={}, halving ratio {ratio:.2}", at_one.r_merge),
        ));
    }

    // Metric oracles: diversity brute force, Fréchet analytic case,
    // win-rate hand counts.
    {
        let mut r = StdRng::seed_from_u64(91);
        let samples: Vec<Vec2> = (0..60)
            .map(|_| [r.gen_range(-5.0..5.0), r.gen_range(-5.0..5.0)])
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
        let div_ok = (fast - brute).abs() < 1e-9;

        let exact = frechet_gaussians(
            [0.0, 0.0],
            [[1.0, 0.0], [0.0, 1.0]],
            [1.0, 0.0],
            [[4.0, 0.0], [0.0, 4.0]],
        )
        .unwrap();
        let self_d = frechet_2d(&samples, &samples).unwrap();
        let frechet_ok = (exact - 3.0).abs() < 1e-12 && self_d < 1e-10;

        let wr = win_rate(&[1.0, 0.0, 2.0], &[0.0, 1.0, 1.0]).unwrap();
        let win_ok = (wr - 100.0 * 2.0 / 3.0).abs() < 1e-12
            && win_rate(&[1.0, 1.0], &[1.0, 1.0]).unwrap() == 50.0;
        results.push(check(
            "metric-oracles",
            div_ok && frechet_ok && win_ok,
            format!("diversity dev {:.1e}, frechet self {self_d:.1e}", (fast - brute).abs()),
        ));
    }

    // Forward-noise marginal moments (quick Monte Carlo).
    {
        let mut r = StdRng::seed_from_u64(92);
        let x0 = [1.0, -1.0];
        let t = 50;
        let n = 20_000;
        let mut var_acc = [0.0f64; 2];
        let mut mean_acc = [0.0f64; 2];
        let mut all = Vec::with_capacity(n);
        for _ in 0..n {
            let eps = [r.sample(StandardNormal), r.sample(StandardNormal)];
            let o = crate::diffusion::forward_noise(x0, t, eps, &sched).unwrap();
            mean_acc[0] += o[0];
            mean_acc[1] += o[1];
            all.push(o);
        }
        mean_acc[0] /= n as f64;
        mean_acc[1] /= n as f64;
        for o in &all {
            var_acc[0] += (o[0] - mean_acc[0]).powi(2);
            var_acc[1] += (o[1] - mean_acc[1]).powi(2);
        }
        let want = 1.0 - sched.alpha_bar(t);
        let dev = ((var_acc[0] / (n - 1) as f64) - want).abs() / want;
        results.push(check(
            "forward-marginal",
            dev < 0.05,
            format!("variance deviation {:.1}%", 100.0 * dev),
        ));
    }

    results
}
