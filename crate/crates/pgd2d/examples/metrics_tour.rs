//! The evaluation toolkit on synthetic data: cluster occupancy,
//! pairwise-distance diversity, closed-form 2D Fréchet distance, win
//! rate, and the implicit-reward proxy.
//!
//! ```bash
//! cargo run --release --example metrics_tour
//! ```

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

use pgd2d::dataset::GaussianMixtureSpec;
use pgd2d::diffusion::{draw_noise, NoiseDraw, NoiseSchedule};
use pgd2d::metrics::{
    cluster_assign, diversity_score, frechet_2d, frechet_gaussians, implicit_reward_proxy,
    win_rate,
};
use pgd2d::numerics::{tiny_arch, ModelParams, Vec2};

fn main() -> pgd2d::Result<()> {
    let mixture = GaussianMixtureSpec::default();
    let mut rng = StdRng::seed_from_u64(3);

    // Occupancy of a hand-made blob near cluster 0 plus stragglers.
    let mut samples: Vec<Vec2> = (0..300)
        .map(|_| {
            let m = mixture.cluster_mean(0);
            [m[0] + 0.2 * rng.gen_range(-1.0..1.0), m[1] + 0.2 * rng.gen_range(-1.0..1.0)]
        })
        .collect();
    samples.extend((0..60).map(|_| {
        let m = mixture.cluster_mean(3);
        [m[0] + 0.2 * rng.gen_range(-1.0..1.0), m[1] + 0.2 * rng.gen_range(-1.0..1.0)]
    }));
    samples.push([0.0, 0.0]); // an outlier at the origin
    let counts = cluster_assign(&samples, &mixture, 4.0 * mixture.cluster_std)?;
    println!(
        "occupancy: positive mass {:.3}, negative mass {:.3}, outliers {:.3}",
        counts.positive_mass()?,
        counts.negative_mass()?,
        counts.outlier_mass()?
    );

    println!("diversity of the blob: {:.3}", diversity_score(&samples)?);

    // Fréchet distance: the analytic two-Gaussian case next to its
    // Monte-Carlo estimate.
    let analytic = frechet_gaussians(
        [0.0, 0.0],
        [[1.0, 0.0], [0.0, 1.0]],
        [1.0, 0.0],
        [[4.0, 0.0], [0.0, 4.0]],
    )?;
    let a: Vec<Vec2> = (0..50_000)
        .map(|_| [rng.sample(StandardNormal), rng.sample(StandardNormal)])
        .collect();
    let b: Vec<Vec2> = (0..50_000)
        .map(|_| {
            [
                1.0 + 2.0 * rng.sample::<f64, _>(StandardNormal),
                2.0 * rng.sample::<f64, _>(StandardNormal),
            ]
        })
        .collect();
    println!(
        "frechet N(0,I) vs N((1,0),4I): analytic {analytic:.4}, estimated {:.4}",
        frechet_2d(&a, &b)?
    );

    // Win rate with ties counting one half.
    let wr = win_rate(&[1.0, 0.0, 2.0], &[0.0, 1.0, 1.0])?;
    println!("win rate of (1,0,2) over (0,1,1): {wr:.2}%");

    // Implicit-reward proxy: positive for points the model fits better
    // than the reference does.
    let sched = NoiseSchedule::toy_default();
    let model = ModelParams::init(tiny_arch(), &mut rng);
    let reference = ModelParams::init(tiny_arch(), &mut rng);
    let frozen: Vec<NoiseDraw> = (0..64).map(|_| draw_noise(&sched, &mut rng)).collect();
    let x0 = mixture.cluster_mean(0);
    let reward = implicit_reward_proxy(&model, &reference, x0, 1.0, &sched, &frozen)?;
    let self_reward = implicit_reward_proxy(&model, &model, x0, 1.0, &sched, &frozen)?;
    println!("implicit reward proxy at cluster 0: {reward:.3} (vs self: {self_reward})");
    Ok(())
}
