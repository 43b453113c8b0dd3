//! Overtrain Diffusion-DPO on a small preference set and watch both the
//! winner- and loser-subset probe losses climb past their pretrain
//! values: the likelihood of *everything* is driven down, and sampling
//! collapses onto a few modes.
//!
//! Runs the full toy scale (a couple of minutes in release mode):
//!
//! ```bash
//! cargo run --release --example dpo_collapse
//! ```

use rand::rngs::StdRng;
use rand::SeedableRng;

use pgd2d::alignment::{train_dpo, AlignConfig};
use pgd2d::dataset::{generate_mixture, sample_pairs, GaussianMixtureSpec};
use pgd2d::diffusion::{sample, train_base, ModelEpsilon, NoiseSchedule, TrainConfig};
use pgd2d::metrics::cluster_assign;
use pgd2d::numerics::{Architecture, ModelParams};

fn main() -> pgd2d::Result<()> {
    let sched = NoiseSchedule::toy_default();
    let mixture = GaussianMixtureSpec::default();
    let mut rng = StdRng::seed_from_u64(0);
    let points = generate_mixture(&mixture, 8192, &mut rng)?;
    let data: Vec<_> = points.iter().map(|p| p.x).collect();
    // A deliberately small pool of preference pairs: the overfitting
    // regime where DPO collapse shows up quickly.
    let pairs = sample_pairs(&points, 256, &mut rng)?;

    let init = ModelParams::init(Architecture::default(), &mut StdRng::seed_from_u64(1));
    println!("pretraining base model (3000 steps)...");
    let base = train_base(
        &init,
        &data,
        &TrainConfig { steps: 3000, batch: 128, learning_rate: 1e-3, seed: 0, log_every: 1000 },
        &sched,
    )?
    .params;

    let cfg = AlignConfig {
        beta: 3.0,
        steps: 2000,
        batch_pairs: 64,
        learning_rate: 3e-3,
        seed: 0,
        log_every: 250,
        probe_size: 1024,
        omega: 1.0,
    };
    println!("DPO on {} pairs, beta = {} ...", pairs.len(), cfg.beta);
    let run = train_dpo(&base, &pairs, &cfg, &sched)?;

    println!("\n step   dpo-loss   winner-probe-mse   loser-probe-mse");
    let pretrain = run.history[0];
    for row in &run.history {
        let marks = format!(
            "{}{}",
            if row.pos_component > pretrain.pos_component { " +up" } else { "" },
            if row.neg_component > pretrain.neg_component { " -up" } else { "" },
        );
        println!(
            "{:>5}  {:>9.3}   {:>16.4}   {:>15.4}{marks}",
            row.step, row.loss, row.pos_component, row.neg_component
        );
    }
    println!("(+up / -up: probe MSE above its pretrain value — the model is");
    println!("losing likelihood on that subset)");

    let base_cov = coverage(&base, &sched, &mixture)?;
    let dpo_cov = coverage(&run.params, &sched, &mixture)?;
    println!("\nmode coverage: base {base_cov}/8, overtrained DPO {dpo_cov}/8");
    Ok(())
}

fn coverage(
    params: &ModelParams,
    sched: &NoiseSchedule,
    mixture: &GaussianMixtureSpec,
) -> pgd2d::Result<usize> {
    let result = sample(&ModelEpsilon::new(params, sched), 4000, sched, 99)?;
    let counts = cluster_assign(&result.samples, mixture, 4.0 * mixture.cluster_std)?;
    Ok(counts.modes_covered(0.02))
}
