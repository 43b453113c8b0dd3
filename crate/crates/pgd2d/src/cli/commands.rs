//! Subcommand implementations. Every command is deterministic given the
//! resolved config and writes a frozen copy of that config plus the
//! checksums of the files it touched into the output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::rngs::StdRng;
use rand::SeedableRng;

use crate::alignment::{train_dpo, train_sft};
use crate::dataset::{
    fmt_f64, generate_mixture, load_dataset, load_pairs, sample_pairs, save_dataset, save_pairs,
    subset, Label,
};
use crate::diffusion::{draw_noise, split_seed, NoiseDraw, NoiseSchedule, SampleResult};
use crate::error::{Error, Result};
use crate::guidance::{guided_sample, weight_sweep, GuidanceMode, GuidanceSpec};
use crate::merge_distill::{distill, merge_cpgd, merge_pgd, MergeMode};
use crate::metrics::{
    compute_run_metrics, frechet_2d, implicit_reward_proxy, win_rate, MetricOptions, RunMetrics,
};
use crate::numerics::{load_params, save_params, ModelParams, Provenance, Vec2};

use super::config::{file_checksum, Config, TOOL_VERSION};
use super::svg::scatter_svg;

fn provenance_comment(cfg: &Config) -> String {
    format!("# pgd2d {TOOL_VERSION} config=fnv1a:{:016x}", cfg.checksum())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(path, text)?;
    Ok(())
}

/// Freeze the resolved config and the checksums of this command's input
/// and output files into the output directory.
fn record_run(cfg: &Config, command: &str, files: &[(&str, &Path)]) -> Result<()> {
    let out_dir = cfg.out_dir();
    fs::create_dir_all(&out_dir)?;
    write_text(&out_dir.join("config.resolved"), &cfg.resolved_text())?;
    let mut listing = String::new();
    let _ = writeln!(listing, "# pgd2d {TOOL_VERSION} {command} file checksums");
    for (role, path) in files {
        let _ = writeln!(
            listing,
            "{role} {} fnv1a:{:016x}",
            path.display(),
            file_checksum(path)?
        );
    }
    write_text(&out_dir.join("checksums.txt"), &listing)?;
    Ok(())
}

fn load_checkpoint(path: &Path) -> Result<ModelParams> {
    require_file(path)?;
    load_params(path)
}

fn require_file(path: &Path) -> Result<()> {
    if !path.exists() {
        return Err(Error::Checkpoint {
            path: path.display().to_string(),
            why: "not found; run the producing stage first".into(),
        });
    }
    Ok(())
}

pub fn save_samples(path: &Path, comment: &str, samples: &[Vec2]) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "{comment}");
    out.push_str("x,y\n");
    for s in samples {
        let _ = writeln!(out, "{},{}", fmt_f64(s[0]), fmt_f64(s[1]));
    }
    write_text(path, &out)
}

pub fn load_samples(path: &Path) -> Result<Vec<Vec2>> {
    let text = fs::read_to_string(path)?;
    let mut samples = Vec::new();
    let mut saw_header = false;
    for (idx, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if !saw_header {
            if trimmed != "x,y" {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    line: idx + 1,
                    why: "expected header `x,y`".into(),
                });
            }
            saw_header = true;
            continue;
        }
        let (a, b) = trimmed.split_once(',').ok_or_else(|| Error::Parse {
            path: path.display().to_string(),
            line: idx + 1,
            why: "expected two fields".into(),
        })?;
        let parse = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Parse {
                path: path.display().to_string(),
                line: idx + 1,
                why: format!("bad coordinate `{s}`"),
            })
        };
        samples.push([parse(a)?, parse(b)?]);
    }
    if !saw_header {
        return Err(Error::Parse {
            path: path.display().to_string(),
            line: 1,
            why: "missing header".into(),
        });
    }
    Ok(samples)
}

fn loss_csv(comment: &str, history: &[(usize, f64)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{comment}");
    out.push_str("step,loss\n");
    for (step, loss) in history {
        let _ = writeln!(out, "{step},{loss}");
    }
    out
}

/// Generate the dataset and pairs, train the base model, and write the
/// checkpoint plus the loss curve.
pub fn cmd_pretrain(cfg: &Config) -> Result<()> {
    let out_dir = cfg.out_dir();
    let sched = cfg.schedule()?;
    if !sched.near_prior_terminal() {
        eprintln!(
            "warning: schedule terminal signal is not near the prior (1 - abar_T = {})",
            1.0 - sched.alpha_bar(sched.len())
        );
    }
    let mixture = cfg.mixture()?;
    let seed = cfg.u64_val("seed")?;
    let mut rng = StdRng::seed_from_u64(split_seed(seed, 100));
    let points = generate_mixture(&mixture, cfg.usize_val("data.n")?, &mut rng)?;
    let pairs = sample_pairs(&points, cfg.usize_val("data.pairs")?, &mut rng)?;
    let dataset_path = out_dir.join("dataset.csv");
    save_dataset(&dataset_path, &points)?;
    let pairs_path = out_dir.join("pairs.csv");
    save_pairs(&pairs_path, &pairs)?;

    // Dump the derived schedule arrays for inspection.
    let mut sched_csv = String::new();
    let _ = writeln!(sched_csv, "{}", provenance_comment(cfg));
    sched_csv.push_str("t,beta,alpha,alpha_bar,posterior_var\n");
    for t in 1..=sched.len() {
        let _ = writeln!(
            sched_csv,
            "{t},{},{},{},{}",
            sched.beta(t),
            sched.alpha(t),
            sched.alpha_bar(t),
            sched.posterior_variance(t)
        );
    }
    write_text(&out_dir.join("schedule.csv"), &sched_csv)?;

    let arch = cfg.architecture()?;
    let init = ModelParams::init(arch, &mut StdRng::seed_from_u64(split_seed(seed, 101)));
    let data: Vec<Vec2> = points.iter().map(|p| p.x).collect();
    let run = crate::diffusion::train_base(&init, &data, &cfg.base_train()?, &sched)?;

    let ckpt_path = out_dir.join("base.ckpt");
    save_params(
        &ckpt_path,
        &run.params,
        Some(Provenance {
            kind: "pretrain".into(),
            coefficient: None,
            sources: vec![],
        }),
    )?;
    write_text(
        &out_dir.join("base_loss.csv"),
        &loss_csv(&provenance_comment(cfg), &run.loss_history),
    )?;
    record_run(
        cfg,
        "pretrain",
        &[
            ("out", dataset_path.as_path()),
            ("out", pairs_path.as_path()),
            ("out", ckpt_path.as_path()),
        ],
    )?;
    println!(
        "pretrain: {} points, {} steps, final loss {:.4} -> {}",
        data.len(),
        run.loss_history.last().map(|r| r.0).unwrap_or(0),
        run.loss_history.last().map(|r| r.1).unwrap_or(f64::NAN),
        ckpt_path.display()
    );
    Ok(())
}

/// DPO-finetune the base checkpoint on the stored preference pairs and
/// log the winner/loser probe components.
pub fn cmd_dpo(cfg: &Config) -> Result<()> {
    let out_dir = cfg.out_dir();
    let sched = cfg.schedule()?;
    let base_path = cfg.path_or_default("guide.base", "base.ckpt");
    let base = load_checkpoint(&base_path)?;
    let pairs_path = out_dir.join("pairs.csv");
    require_file(&pairs_path)?;
    let pairs = load_pairs(&pairs_path)?;
    let run = train_dpo(&base, &pairs, &cfg.align()?, &sched)?;

    let ckpt_path = out_dir.join("dpo.ckpt");
    save_params(
        &ckpt_path,
        &run.params,
        Some(Provenance {
            kind: "dpo".into(),
            coefficient: Some(cfg.f64_val("align.beta")?),
            sources: vec![format!("fnv1a:{:016x}", file_checksum(&base_path)?)],
        }),
    )?;
    let mut components = String::new();
    let _ = writeln!(components, "{}", provenance_comment(cfg));
    components.push_str("step,loss,pos_component,neg_component\n");
    for row in &run.history {
        let _ = writeln!(
            components,
            "{},{},{},{}",
            row.step, row.loss, row.pos_component, row.neg_component
        );
    }
    let comp_path = out_dir.join("dpo_components.csv");
    write_text(&comp_path, &components)?;
    record_run(
        cfg,
        "dpo",
        &[
            ("in", base_path.as_path()),
            ("in", pairs_path.as_path()),
            ("out", ckpt_path.as_path()),
            ("out", comp_path.as_path()),
        ],
    )?;
    let last = run.history.last().expect("history has the step-0 record");
    println!(
        "dpo: beta={} steps={} final loss {:.4} components (+{:.4}, -{:.4}) -> {}",
        cfg.f64_val("align.beta")?,
        cfg.usize_val("align.steps")?,
        last.loss,
        last.pos_component,
        last.neg_component,
        ckpt_path.display()
    );
    Ok(())
}

/// SFT-finetune the base checkpoint on one label subset.
pub fn cmd_sft(cfg: &Config) -> Result<()> {
    let out_dir = cfg.out_dir();
    let sched = cfg.schedule()?;
    let label = match cfg.str_val("sft.label") {
        "positive" => Label::Positive,
        "negative" => Label::Negative,
        other => {
            return Err(Error::Invalid {
                what: "sft label",
                why: format!("`{other}` is not positive|negative"),
            })
        }
    };
    let base_path = cfg.path_or_default("guide.base", "base.ckpt");
    let base = load_checkpoint(&base_path)?;
    let dataset_path = out_dir.join("dataset.csv");
    require_file(&dataset_path)?;
    let points = load_dataset(&dataset_path)?;
    let data = subset(&points, label);
    let run = train_sft(&base, &data, &cfg.sft()?, &sched)?;

    let name = match label {
        Label::Positive => "sft_positive",
        Label::Negative => "sft_negative",
    };
    let ckpt_path = out_dir.join(format!("{name}.ckpt"));
    save_params(
        &ckpt_path,
        &run.params,
        Some(Provenance {
            kind: name.into(),
            coefficient: None,
            sources: vec![format!("fnv1a:{:016x}", file_checksum(&base_path)?)],
        }),
    )?;
    let loss_path = out_dir.join(format!("{name}_loss.csv"));
    write_text(
        &loss_path,
        &loss_csv(&provenance_comment(cfg), &run.loss_history),
    )?;
    record_run(
        cfg,
        "sft",
        &[
            ("in", base_path.as_path()),
            ("in", dataset_path.as_path()),
            ("out", ckpt_path.as_path()),
            ("out", loss_path.as_path()),
        ],
    )?;
    println!(
        "sft: label={} subset={} steps={} -> {}",
        cfg.str_val("sft.label"),
        data.len(),
        cfg.usize_val("sft.steps")?,
        ckpt_path.display()
    );
    Ok(())
}

/// Resolve the guidance spec from config, loading whichever model slots
/// the mode requires.
struct LoadedGuidance {
    base: ModelParams,
    tuned: Option<ModelParams>,
    positive: Option<ModelParams>,
    negative: Option<ModelParams>,
    mode: GuidanceMode,
    weight: f64,
    cutoff: usize,
    inputs: Vec<PathBuf>,
}

impl LoadedGuidance {
    fn from_config(cfg: &Config, sched: &NoiseSchedule) -> Result<Self> {
        let mode = GuidanceMode::parse(cfg.str_val("guide.mode"))?;
        let base_path = cfg.path_or_default("guide.base", "base.ckpt");
        let base = load_checkpoint(&base_path)?;
        let mut inputs = vec![base_path];
        let mut tuned = None;
        let mut positive = None;
        let mut negative = None;
        match mode {
            GuidanceMode::None => {}
            GuidanceMode::Cfg | GuidanceMode::Pgd => {
                let p = cfg.path_or_default("guide.tuned", "dpo.ckpt");
                tuned = Some(load_checkpoint(&p)?);
                inputs.push(p);
            }
            GuidanceMode::Cpgd => {
                let p = cfg.path_or_default("guide.positive", "sft_positive.ckpt");
                positive = Some(load_checkpoint(&p)?);
                inputs.push(p);
                let n = cfg.path_or_default("guide.negative", "sft_negative.ckpt");
                negative = Some(load_checkpoint(&n)?);
                inputs.push(n);
            }
        }
        Ok(Self {
            base,
            tuned,
            positive,
            negative,
            mode,
            weight: cfg.f64_val("guide.w")?,
            cutoff: cfg.guidance_cutoff(sched)?,
            inputs,
        })
    }

    fn spec(&self) -> GuidanceSpec<'_> {
        GuidanceSpec {
            mode: self.mode,
            weight: self.weight,
            cutoff: self.cutoff,
            base: &self.base,
            tuned: self.tuned.as_ref(),
            positive: self.positive.as_ref(),
            negative: self.negative.as_ref(),
        }
    }
}

/// Sample under the configured guidance and write the sample CSV (and
/// optionally an SVG scatter).
pub fn cmd_sample(cfg: &Config) -> Result<()> {
    let out_dir = cfg.out_dir();
    let sched = cfg.schedule()?;
    let loaded = LoadedGuidance::from_config(cfg, &sched)?;
    let n = cfg.usize_val("sample.n")?;
    let seed = cfg.u64_val("seed")?;
    let result = guided_sample(&loaded.spec(), n, &sched, split_seed(seed, 200))?;
    if result.failures > 0 {
        eprintln!("warning: {} non-finite trajectories dropped", result.failures);
    }
    let sample_path = out_dir.join(cfg.str_val("sample.out"));
    save_samples(&sample_path, &provenance_comment(cfg), &result.samples)?;

    let mut files: Vec<(&str, &Path)> = vec![("out", sample_path.as_path())];
    for p in &loaded.inputs {
        files.push(("in", p.as_path()));
    }
    let svg_path = sample_path.with_extension("svg");
    if cfg.bool_val("sample.svg")? {
        let mixture = cfg.mixture()?;
        let radius = 4.0 * mixture.cluster_std;
        let extent = mixture.radius + 2.0;
        write_text(
            &svg_path,
            &scatter_svg(&result.samples, &mixture, radius, extent),
        )?;
        files.push(("out", svg_path.as_path()));
    }
    record_run(cfg, "sample", &files)?;
    println!(
        "sample: mode={} w={} n={} failures={} -> {}",
        loaded.mode.as_str(),
        loaded.weight,
        result.samples.len(),
        result.failures,
        sample_path.display()
    );
    Ok(())
}

fn metrics_csv_rows(comment: &str, rows: &[(String, RunMetrics)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{comment}");
    let _ = writeln!(out, "w,{}", RunMetrics::CSV_HEADER);
    for (label, m) in rows {
        let _ = writeln!(out, "{label},{}", m.csv_row());
    }
    out
}

/// Sweep the guidance weight over `sweep.weights`, reusing the same seed
/// per weight, and write one metrics row per weight.
pub fn cmd_sweep(cfg: &Config) -> Result<()> {
    let out_dir = cfg.out_dir();
    let sched = cfg.schedule()?;
    let loaded = LoadedGuidance::from_config(cfg, &sched)?;
    let weights = cfg.sweep_weights()?;
    let mixture = cfg.mixture()?;
    let opts = MetricOptions::for_mixture(mixture);
    let dataset_path = out_dir.join("dataset.csv");
    require_file(&dataset_path)?;
    let reference: Vec<Vec2> = load_dataset(&dataset_path)?.iter().map(|p| p.x).collect();
    let rows = weight_sweep(
        &loaded.spec(),
        &weights,
        cfg.usize_val("sample.n")?,
        &sched,
        split_seed(cfg.u64_val("seed")?, 200),
        &opts,
        &reference,
    )?;
    let labeled: Vec<(String, RunMetrics)> = rows
        .iter()
        .map(|r| (format!("{}", r.weight), r.metrics.clone()))
        .collect();
    let sweep_path = out_dir.join(cfg.str_val("sweep.out"));
    write_text(
        &sweep_path,
        &metrics_csv_rows(&provenance_comment(cfg), &labeled),
    )?;
    let mut svg_paths = Vec::new();
    if cfg.bool_val("sample.svg")? {
        let radius = 4.0 * mixture.cluster_std;
        let extent = mixture.radius + 2.0;
        for row in &rows {
            let path = out_dir.join(format!("sweep_w{}.svg", row.weight));
            write_text(
                &path,
                &scatter_svg(&row.samples.samples, &mixture, radius, extent),
            )?;
            svg_paths.push(path);
        }
    }
    let mut files: Vec<(&str, &Path)> =
        vec![("out", sweep_path.as_path()), ("in", dataset_path.as_path())];
    for p in &loaded.inputs {
        files.push(("in", p.as_path()));
    }
    for p in &svg_paths {
        files.push(("out", p.as_path()));
    }
    record_run(cfg, "sweep", &files)?;
    println!("sweep: mode={} weights={weights:?} -> {}", loaded.mode.as_str(), sweep_path.display());
    for row in &rows {
        println!(
            "  w={:<5} positive_mass={:.3} coverage={} diversity={:.2} frechet={:.3}",
            row.weight,
            row.metrics.positive_mass,
            row.metrics.modes_covered,
            row.metrics.diversity,
            row.metrics.frechet
        );
    }
    Ok(())
}

/// Merge checkpoints in weight space and write the merged checkpoint
/// with a provenance sidecar.
pub fn cmd_merge(cfg: &Config) -> Result<()> {
    let out_dir = cfg.out_dir();
    let mode = MergeMode::parse(cfg.str_val("merge.mode"))?;
    let alpha = cfg.f64_val("merge.alpha")?;
    let base_path = cfg.path_or_default("guide.base", "base.ckpt");
    let base = load_checkpoint(&base_path)?;
    let (merged, kind, mut sources) = match mode {
        MergeMode::PgdMerge => {
            let tuned_path = cfg.path_or_default("guide.tuned", "dpo.ckpt");
            let tuned = load_checkpoint(&tuned_path)?;
            (
                merge_pgd(&base, &tuned, alpha)?,
                "pgd_merge",
                vec![base_path.clone(), tuned_path],
            )
        }
        MergeMode::CpgdMerge => {
            let pos_path = cfg.path_or_default("guide.positive", "sft_positive.ckpt");
            let neg_path = cfg.path_or_default("guide.negative", "sft_negative.ckpt");
            let pos = load_checkpoint(&pos_path)?;
            let neg = load_checkpoint(&neg_path)?;
            (
                merge_cpgd(&base, &pos, &neg, alpha)?,
                "cpgd_merge",
                vec![base_path.clone(), pos_path, neg_path],
            )
        }
    };
    let source_sums: Result<Vec<String>> = sources
        .iter()
        .map(|p| Ok(format!("fnv1a:{:016x}", file_checksum(p)?)))
        .collect();
    let merged_path = out_dir.join(cfg.str_val("merge.out"));
    save_params(
        &merged_path,
        &merged,
        Some(Provenance {
            kind: kind.into(),
            coefficient: Some(alpha),
            sources: source_sums?,
        }),
    )?;
    sources.push(merged_path.clone());
    let files: Vec<(&str, &Path)> = sources
        .iter()
        .enumerate()
        .map(|(i, p)| {
            (
                if i + 1 == sources.len() { "out" } else { "in" },
                p.as_path(),
            )
        })
        .collect();
    record_run(cfg, "merge", &files)?;
    println!("merge: {kind} alpha={alpha} -> {}", merged_path.display());
    Ok(())
}

/// Distill the configured guidance teacher into a single checkpoint.
pub fn cmd_distill(cfg: &Config) -> Result<()> {
    let out_dir = cfg.out_dir();
    let sched = cfg.schedule()?;
    let loaded = LoadedGuidance::from_config(cfg, &sched)?;
    let dataset_path = out_dir.join("dataset.csv");
    require_file(&dataset_path)?;
    let data: Vec<Vec2> = load_dataset(&dataset_path)?.iter().map(|p| p.x).collect();
    let run = distill(
        &loaded.base,
        &loaded.spec(),
        &data,
        &cfg.distill_train()?,
        &sched,
    )?;
    let source_sums: Result<Vec<String>> = loaded
        .inputs
        .iter()
        .map(|p| Ok(format!("fnv1a:{:016x}", file_checksum(p)?)))
        .collect();
    let ckpt_path = out_dir.join("distilled.ckpt");
    save_params(
        &ckpt_path,
        &run.params,
        Some(Provenance {
            kind: format!("distill_{}", loaded.mode.as_str()),
            coefficient: Some(loaded.weight),
            sources: source_sums?,
        }),
    )?;
    let loss_path = out_dir.join("distill_loss.csv");
    write_text(
        &loss_path,
        &loss_csv(&provenance_comment(cfg), &run.loss_history),
    )?;
    let mut files: Vec<(&str, &Path)> = vec![
        ("out", ckpt_path.as_path()),
        ("out", loss_path.as_path()),
        ("in", dataset_path.as_path()),
    ];
    for p in &loaded.inputs {
        files.push(("in", p.as_path()));
    }
    record_run(cfg, "distill", &files)?;
    println!(
        "distill: teacher={} w={} steps={} final loss {:.6} -> {}",
        loaded.mode.as_str(),
        loaded.weight,
        cfg.usize_val("distill.steps")?,
        run.loss_history.last().map(|r| r.1).unwrap_or(f64::NAN),
        ckpt_path.display()
    );
    Ok(())
}

/// Compare two sample files: per-file metrics, the Fréchet distance
/// between them, and (when scoring checkpoints are configured) the
/// implicit-reward win rate of A over B.
pub fn cmd_eval(cfg: &Config) -> Result<()> {
    let out_dir = cfg.out_dir();
    let path_a = PathBuf::from(cfg.str_val("eval.a"));
    let path_b = PathBuf::from(cfg.str_val("eval.b"));
    if cfg.str_val("eval.a").is_empty() || cfg.str_val("eval.b").is_empty() {
        return Err(Error::Invalid {
            what: "eval inputs",
            why: "eval.a and eval.b must name sample CSVs".into(),
        });
    }
    require_file(&path_a)?;
    let a = load_samples(&path_a)?;
    require_file(&path_b)?;
    let b = load_samples(&path_b)?;
    let mixture = cfg.mixture()?;
    let opts = MetricOptions::for_mixture(mixture);
    let fake = |samples: Vec<Vec2>| SampleResult {
        samples,
        failures: 0,
    };
    // Per-set metrics use the other set as the Fréchet reference, which
    // makes the distance column symmetric across the two rows.
    let ma = compute_run_metrics(&fake(a.clone()), &opts, &b)?;
    let mb = compute_run_metrics(&fake(b.clone()), &opts, &a)?;
    let frechet_ab = frechet_2d(&a, &b)?;

    let model_path = cfg.str_val("eval.model");
    let ref_path = cfg.str_val("eval.ref");
    let rate = if !model_path.is_empty() && !ref_path.is_empty() {
        let model = load_checkpoint(Path::new(model_path))?;
        let reference = load_checkpoint(Path::new(ref_path))?;
        let sched = cfg.schedule()?;
        let beta = cfg.f64_val("eval.beta")?;
        let mut rng = StdRng::seed_from_u64(split_seed(cfg.u64_val("seed")?, 300));
        let frozen: Vec<NoiseDraw> = (0..cfg.usize_val("eval.probe")?)
            .map(|_| draw_noise(&sched, &mut rng))
            .collect();
        let score = |xs: &[Vec2]| -> Result<Vec<f64>> {
            xs.iter()
                .map(|&x| implicit_reward_proxy(&model, &reference, x, beta, &sched, &frozen))
                .collect()
        };
        Some(win_rate(&score(&a)?, &score(&b)?)?)
    } else {
        None
    };

    let mut out = String::new();
    let _ = writeln!(out, "{}", provenance_comment(cfg));
    let _ = writeln!(out, "set,{},frechet_ab,win_rate", RunMetrics::CSV_HEADER);
    let rate_a = rate.map(|r| r.to_string()).unwrap_or_default();
    let rate_b = rate.map(|r| (100.0 - r).to_string()).unwrap_or_default();
    let _ = writeln!(out, "a,{},{frechet_ab},{rate_a}", ma.csv_row());
    let _ = writeln!(out, "b,{},{frechet_ab},{rate_b}", mb.csv_row());
    let eval_path = out_dir.join("eval.csv");
    write_text(&eval_path, &out)?;
    record_run(
        cfg,
        "eval",
        &[
            ("in", path_a.as_path()),
            ("in", path_b.as_path()),
            ("out", eval_path.as_path()),
        ],
    )?;
    println!(
        "eval: frechet(a,b)={frechet_ab:.6} positive_mass a={:.3} b={:.3}{}",
        ma.positive_mass,
        mb.positive_mass,
        match rate {
            Some(r) => format!(" win_rate(a>b)={r:.1}%"),
            None => String::new(),
        }
    );
    Ok(())
}

/// Run the fast identity/oracle battery and fail on any broken check.
pub fn cmd_verify(_cfg: &Config) -> Result<()> {
    let results = super::verify::run_battery();
    let mut failed = 0usize;
    for r in &results {
        println!(
            "{} {} {}",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.detail
        );
        if !r.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        return Err(Error::Invalid {
            what: "verification battery",
            why: format!("{failed} of {} checks failed", results.len()),
        });
    }
    println!("verify: {} checks passed", results.len());
    Ok(())
}
