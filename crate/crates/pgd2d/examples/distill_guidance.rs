//! Compress contrastive guidance into a single student checkpoint by
//! regressing the student's noise prediction onto the teacher's
//! composed prediction at noised dataset points (offline: no sampling
//! during distillation).
//!
//! ```bash
//! cargo run --release --example distill_guidance
//! ```

use rand::rngs::StdRng;
use rand::SeedableRng;

use pgd2d::alignment::{train_sft, AlignConfig};
use pgd2d::dataset::{generate_mixture, subset, GaussianMixtureSpec, Label};
use pgd2d::diffusion::{sample, train_base, ModelEpsilon, NoiseSchedule, TrainConfig};
use pgd2d::guidance::{guided_sample, GuidanceSpec};
use pgd2d::metrics::cluster_assign;
use pgd2d::merge_distill::distill;
use pgd2d::numerics::{Architecture, ModelParams, Vec2};

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
    println!("SFT branches for the teacher...");
    let positive = train_sft(&base, &subset(&points, Label::Positive), &sft_cfg, &sched)?.params;
    let negative = train_sft(&base, &subset(&points, Label::Negative), &sft_cfg, &sched)?.params;
    let teacher = GuidanceSpec::cpgd(&base, &positive, &negative, 1.0, &sched);

    println!("distilling the teacher into one student checkpoint...");
    let run = distill(
        &base,
        &teacher,
        &data,
        &TrainConfig { steps: 1500, batch: 128, learning_rate: 1e-3, seed: 7, log_every: 300 },
        &sched,
    )?;
    for (step, loss) in &run.loss_history {
        println!("  step {step:>5}  distill loss {loss:.5}");
    }

    let mass = |samples: &[Vec2]| -> pgd2d::Result<f64> {
        cluster_assign(samples, &mixture, 4.0 * mixture.cluster_std)?.positive_mass()
    };
    let base_s = sample(&ModelEpsilon::new(&base, &sched), 2000, &sched, 99)?;
    let teacher_s = guided_sample(&teacher, 2000, &sched, 99)?;
    let student_s = sample(&ModelEpsilon::new(&run.params, &sched), 2000, &sched, 99)?;
    println!("\npositive-cluster mass at equal sample budgets:");
    println!("  base model        {:.3}", mass(&base_s.samples)?);
    println!("  cPGD teacher      {:.3} (two extra model calls per step)", mass(&teacher_s.samples)?);
    println!("  distilled student {:.3} (single model)", mass(&student_s.samples)?);
    Ok(())
}
