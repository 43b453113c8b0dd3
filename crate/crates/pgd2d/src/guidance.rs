//! CFG-style composition of epsilon predictions: plain CFG, PGD, cPGD,
//! partial-step schedules, and weight sweeps.
//!
//! All compositions return the reduction points exactly (`w = 0` gives
//! the reference prediction bit-for-bit, `w = 1` the tuned one), so
//! guided sampling at a reduction point is bit-identical to sampling the
//! underlying model. Guidance never consumes randomness.

use crate::diffusion::{sample, EpsilonFn, ModelEpsilon, NoiseSchedule, SampleResult};
use crate::error::{Error, Result};
use crate::metrics::{compute_run_metrics, MetricOptions, RunMetrics};
use crate::numerics::{ModelParams, Vec2};

/// `eps_u + w (eps_c - eps_u)`, the classifier-free-guidance combination.
pub fn cfg_epsilon(eps_u: Vec2, eps_c: Vec2, w: f64) -> Vec2 {
    if w == 0.0 {
        return eps_u;
    }
    if w == 1.0 {
        return eps_c;
    }
    [
        eps_u[0] + w * (eps_c[0] - eps_u[0]),
        eps_u[1] + w * (eps_c[1] - eps_u[1]),
    ]
}

/// Preference guidance: reference prediction pushed toward the tuned
/// model. Identical algebra to `cfg_epsilon`; kept separate so call
/// sites document intent.
pub fn pgd_epsilon(eps_ref: Vec2, eps_tuned: Vec2, w: f64) -> Vec2 {
    cfg_epsilon(eps_ref, eps_tuned, w)
}

/// Contrastive guidance: `eps_ref + w (eps_pos - eps_neg)`. With the
/// loser branch tied to the reference this reduces to single-branch
/// guidance, and the reduction is returned through the same code path
/// so the equality is exact.
pub fn cpgd_epsilon(eps_ref: Vec2, eps_pos: Vec2, eps_neg: Vec2, w: f64) -> Vec2 {
    if eps_neg == eps_ref {
        return pgd_epsilon(eps_ref, eps_pos, w);
    }
    if w == 0.0 || eps_pos == eps_neg {
        return eps_ref;
    }
    [
        eps_ref[0] + w * (eps_pos[0] - eps_neg[0]),
        eps_ref[1] + w * (eps_pos[1] - eps_neg[1]),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuidanceMode {
    None,
    Cfg,
    Pgd,
    Cpgd,
}

impl GuidanceMode {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "none" => Self::None,
            "cfg" => Self::Cfg,
            "pgd" => Self::Pgd,
            "cpgd" => Self::Cpgd,
            other => {
                return Err(Error::Invalid {
                    what: "guidance mode",
                    why: format!("`{other}` is not one of none|cfg|pgd|cpgd"),
                })
            }
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Cfg => "cfg",
            Self::Pgd => "pgd",
            Self::Cpgd => "cpgd",
        }
    }
}

/// Guidance configuration plus the participating model slots.
///
/// `cutoff` is the partial-step budget `s`: guidance is active only for
/// the first `s` reverse iterations, which are the highest-noise steps
/// (`t > T - s`). `s = T` guides every step.
pub struct GuidanceSpec<'a> {
    pub mode: GuidanceMode,
    pub weight: f64,
    pub cutoff: usize,
    pub base: &'a ModelParams,
    pub tuned: Option<&'a ModelParams>,
    pub positive: Option<&'a ModelParams>,
    pub negative: Option<&'a ModelParams>,
}

impl<'a> GuidanceSpec<'a> {
    /// Unguided sampling from the base model.
    pub fn none(base: &'a ModelParams, sched: &NoiseSchedule) -> Self {
        Self {
            mode: GuidanceMode::None,
            weight: 0.0,
            cutoff: sched.len(),
            base,
            tuned: None,
            positive: None,
            negative: None,
        }
    }

    pub fn pgd(
        base: &'a ModelParams,
        tuned: &'a ModelParams,
        weight: f64,
        sched: &NoiseSchedule,
    ) -> Self {
        Self {
            mode: GuidanceMode::Pgd,
            weight,
            cutoff: sched.len(),
            base,
            tuned: Some(tuned),
            positive: None,
            negative: None,
        }
    }

    pub fn cpgd(
        base: &'a ModelParams,
        positive: &'a ModelParams,
        negative: &'a ModelParams,
        weight: f64,
        sched: &NoiseSchedule,
    ) -> Self {
        Self {
            mode: GuidanceMode::Cpgd,
            weight,
            cutoff: sched.len(),
            base,
            tuned: None,
            positive: Some(positive),
            negative: Some(negative),
        }
    }

    pub fn with_cutoff(mut self, cutoff: usize) -> Self {
        self.cutoff = cutoff;
        self
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    /// Reject specs whose mode needs a model slot that is absent, and
    /// invalid weights or cutoffs, before any sampling happens.
    pub fn validate(&self, sched: &NoiseSchedule) -> Result<()> {
        if !(self.weight >= 0.0 && self.weight.is_finite()) {
            return Err(Error::Invalid {
                what: "guidance weight",
                why: format!("{} must be finite and >= 0", self.weight),
            });
        }
        if self.cutoff > sched.len() {
            return Err(Error::Invalid {
                what: "partial-step cutoff",
                why: format!("{} exceeds schedule length {}", self.cutoff, sched.len()),
            });
        }
        match self.mode {
            GuidanceMode::None => Ok(()),
            GuidanceMode::Cfg | GuidanceMode::Pgd => {
                if self.tuned.is_none() {
                    return Err(Error::MissingModelSlot {
                        mode: self.mode.as_str(),
                        slot: "tuned",
                    });
                }
                Ok(())
            }
            GuidanceMode::Cpgd => {
                if self.positive.is_none() {
                    return Err(Error::MissingModelSlot {
                        mode: "cpgd",
                        slot: "positive",
                    });
                }
                if self.negative.is_none() {
                    return Err(Error::MissingModelSlot {
                        mode: "cpgd",
                        slot: "negative",
                    });
                }
                Ok(())
            }
        }
    }

    /// View this spec as an epsilon function over `sched`.
    pub fn epsilon_fn(&'a self, sched: &'a NoiseSchedule) -> Result<GuidedEpsilon<'a>> {
        self.validate(sched)?;
        Ok(GuidedEpsilon { spec: self, sched })
    }
}

/// Epsilon function applying the configured composition inside the
/// active window and falls back to the reference prediction outside it.
pub struct GuidedEpsilon<'a> {
    spec: &'a GuidanceSpec<'a>,
    sched: &'a NoiseSchedule,
}

impl EpsilonFn for GuidedEpsilon<'_> {
    fn epsilon(&self, x: Vec2, t: usize) -> Vec2 {
        let spec = self.spec;
        let base = ModelEpsilon::new(spec.base, self.sched);
        let eps_ref = base.epsilon(x, t);
        // First `cutoff` reverse iterations run t = T, T-1, ...: active
        // iff t > T - cutoff.
        let active = t + spec.cutoff > self.sched.len();
        if !active || spec.mode == GuidanceMode::None {
            return eps_ref;
        }
        match spec.mode {
            GuidanceMode::None => eps_ref,
            GuidanceMode::Cfg | GuidanceMode::Pgd => {
                let tuned = ModelEpsilon::new(spec.tuned.expect("validated"), self.sched);
                pgd_epsilon(eps_ref, tuned.epsilon(x, t), spec.weight)
            }
            GuidanceMode::Cpgd => {
                let pos = ModelEpsilon::new(spec.positive.expect("validated"), self.sched);
                let neg = ModelEpsilon::new(spec.negative.expect("validated"), self.sched);
                cpgd_epsilon(eps_ref, pos.epsilon(x, t), neg.epsilon(x, t), spec.weight)
            }
        }
    }
}

/// Sample `n` trajectories under the configured composition. With identical
/// seeds, `mode = none` and `pgd` at `w = 0` produce bit-identical
/// samples: the composition consumes no randomness.
pub fn guided_sample(
    spec: &GuidanceSpec,
    n: usize,
    sched: &NoiseSchedule,
    seed: u64,
) -> Result<SampleResult> {
    let eps = spec.epsilon_fn(sched)?;
    sample(&eps, n, sched, seed)
}

/// One row of a weight sweep. The sampled points are kept so callers
/// can render or post-process them without re-running the sampler.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub weight: f64,
    pub metrics: RunMetrics,
    pub samples: SampleResult,
}

/// Run the composition at each weight with the same seed so curves are
/// comparable, and compute run metrics against `reference` samples.
#[allow(clippy::too_many_arguments)]
pub fn weight_sweep(
    spec: &GuidanceSpec,
    weights: &[f64],
    n: usize,
    sched: &NoiseSchedule,
    seed: u64,
    opts: &MetricOptions,
    reference: &[Vec2],
) -> Result<Vec<SweepRow>> {
    if weights.is_empty() {
        return Err(Error::Empty { what: "weight list" });
    }
    let mut rows = Vec::with_capacity(weights.len());
    for &w in weights {
        let run = GuidanceSpec {
            mode: spec.mode,
            weight: w,
            cutoff: spec.cutoff,
            base: spec.base,
            tuned: spec.tuned,
            positive: spec.positive,
            negative: spec.negative,
        };
        let result = guided_sample(&run, n, sched, seed)?;
        let metrics = compute_run_metrics(&result, opts, reference)?;
        rows.push(SweepRow {
            weight: w,
            metrics,
            samples: result,
        });
    }
    Ok(rows)
}
