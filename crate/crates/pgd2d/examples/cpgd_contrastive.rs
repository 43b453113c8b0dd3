//! Contrastive guidance: finetune one model on positive clusters and an
//! independent one on negative clusters, then steer the base model with
//! the difference of their predictions. Includes the partial-step
//! schedule that guides only the high-noise steps.
//!
//! ```bash
//! cargo run --release --example cpgd_contrastive
//! ```

use rand::rngs::StdRng;
use rand::SeedableRng;

use pgd2d::alignment::{train_sft, AlignConfig};
use pgd2d::dataset::{generate_mixture, subset, GaussianMixtureSpec, Label};
use pgd2d::diffusion::{train_base, NoiseSchedule, TrainConfig};
use pgd2d::guidance::{guided_sample, GuidanceSpec};
use pgd2d::metrics::{compute_run_metrics, MetricOptions};
use pgd2d::numerics::{Architecture, ModelParams};

fn main() -> pgd2d::Result<()> {
    let sched = NoiseSchedule::toy_default();
    let mixture = GaussianMixtureSpec { seed: 7, ..Default::default() };
    let points = generate_mixture(&mixture, 4096, &mut StdRng::seed_from_u64(7))?;
    let data: Vec<_> = points.iter().map(|p| p.x).collect();

    let arch = Architecture { embed_dim: 16, hidden_dim: 64 };
    let init = ModelParams::init(arch, &mut StdRng::seed_from_u64(8));
    println!("pretraining base model...");
    let base = train_base(
        &init,
        &data,
        &TrainConfig { steps: 1500, batch: 128, learning_rate: 1e-3, seed: 7, log_every: 500 },
        &sched,
    )?
    .params;

    let sft_cfg = AlignConfig { steps: 1000, batch_pairs: 128, seed: 7, ..Default::default() };
    println!("SFT on the positive subset, then independently on the negative subset...");
    let positive = train_sft(&base, &subset(&points, Label::Positive), &sft_cfg, &sched)?.params;
    let negative = train_sft(&base, &subset(&points, Label::Negative), &sft_cfg, &sched)?.params;

    let opts = MetricOptions::for_mixture(mixture);
    println!("\n  variant                  pos-mass   modes   diversity");
    for (name, spec) in [
        ("base (w=0)", GuidanceSpec::cpgd(&base, &positive, &negative, 0.0, &sched)),
        ("cPGD w=0.5", GuidanceSpec::cpgd(&base, &positive, &negative, 0.5, &sched)),
        ("cPGD w=1.0", GuidanceSpec::cpgd(&base, &positive, &negative, 1.0, &sched)),
    ] {
        let result = guided_sample(&spec, 2000, &sched, 99)?;
        let m = compute_run_metrics(&result, &opts, &data)?;
        println!(
            "  {name:<24} {:>8.3}   {:>5}   {:>9.2}",
            m.positive_mass, m.modes_covered, m.diversity
        );
    }

    // Partial-step guidance: spend the extra model calls only on the
    // first s (highest-noise) reverse steps.
    println!("\n  cutoff s (of 100)        pos-mass   modes   extra-calls");
    for s in [0, 50, 70, 100] {
        let spec = GuidanceSpec::cpgd(&base, &positive, &negative, 1.0, &sched).with_cutoff(s);
        let result = guided_sample(&spec, 2000, &sched, 99)?;
        let m = compute_run_metrics(&result, &opts, &data)?;
        println!(
            "  s = {s:<4}                 {:>8.3}   {:>5}   {:>11}",
            m.positive_mass,
            m.modes_covered,
            2 * s,
        );
    }
    println!("\nin this 2D toy the preference shift builds up as the guided");
    println!("window extends toward low noise; intermediate cutoffs trade");
    println!("alignment strength against compute while retaining most of");
    println!("the mode coverage.");
    Ok(())
}
