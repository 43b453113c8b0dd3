//! Plain-text experiment configuration: `key = value` lines with
//! sectioned keys, overridable from the command line. Diffable and
//! seed-friendly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::alignment::AlignConfig;
use crate::dataset::GaussianMixtureSpec;
use crate::diffusion::{NoiseSchedule, TrainConfig};
use crate::error::{Error, Result};
use crate::numerics::Architecture;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Resolved key-value configuration. Every key has a default, so the
/// frozen copy written next to outputs is always complete.
#[derive(Debug, Clone)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

const DEFAULTS: &[(&str, &str)] = &[
    ("seed", "0"),
    ("out.dir", "out"),
    ("data.n", "8192"),
    ("data.clusters", "8"),
    ("data.radius", "4.0"),
    ("data.std", "0.3"),
    ("data.pairs", "8192"),
    ("schedule.steps", "100"),
    ("schedule.beta_start", "1e-4"),
    ("schedule.beta_end", "0.2"),
    ("model.hidden", "128"),
    ("model.embed", "32"),
    ("train.base.steps", "3000"),
    ("train.base.batch", "128"),
    ("train.base.lr", "1e-3"),
    // Toy-scale inverse temperatures are 0.5/1.0/3.0; the large-scale
    // presets from image-model finetuning are 3000/5000.
    ("align.beta", "1.0"),
    ("align.omega", "1.0"),
    ("align.steps", "2000"),
    ("align.batch", "64"),
    ("align.lr", "1e-3"),
    ("align.probe", "1024"),
    ("align.log_every", "100"),
    ("sft.label", "positive"),
    ("sft.steps", "2000"),
    ("sft.batch", "128"),
    ("sft.lr", "1e-3"),
    ("guide.mode", "pgd"),
    ("guide.w", "3.0"),
    // "full" means every reverse step; an integer s guides only the
    // first s (highest-noise) steps.
    ("guide.cutoff", "full"),
    ("guide.base", ""),
    ("guide.tuned", ""),
    ("guide.positive", ""),
    ("guide.negative", ""),
    ("sample.n", "4000"),
    ("sample.out", "samples.csv"),
    ("sample.svg", "false"),
    ("sweep.weights", "0,1,3,5,10"),
    ("sweep.out", "sweep.csv"),
    ("merge.mode", "pgd"),
    ("merge.alpha", "3.0"),
    ("merge.out", "merged.ckpt"),
    ("distill.steps", "3000"),
    ("distill.batch", "128"),
    ("distill.lr", "1e-3"),
    ("eval.a", ""),
    ("eval.b", ""),
    ("eval.model", ""),
    ("eval.ref", ""),
    ("eval.beta", "1.0"),
    ("eval.probe", "64"),
];

impl Default for Config {
    fn default() -> Self {
        let entries = DEFAULTS
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        Self { entries }
    }
}

impl Config {
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path)?;
        for (idx, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (k, v) = trimmed.split_once('=').ok_or_else(|| Error::Parse {
                path: path.display().to_string(),
                line: idx + 1,
                why: format!("expected `key = value`, got `{trimmed}`"),
            })?;
            self.set_checked(k.trim(), v.trim(), Some((path, idx + 1)))?;
        }
        Ok(())
    }

    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment.split_once('=').ok_or_else(|| Error::Invalid {
            what: "override",
            why: format!("expected key=value, got `{assignment}`"),
        })?;
        self.set_checked(k.trim(), v.trim(), None)
    }

    fn set_checked(&mut self, key: &str, value: &str, at: Option<(&Path, usize)>) -> Result<()> {
        if !self.entries.contains_key(key) {
            let why = format!("unknown config key `{key}`");
            return Err(match at {
                Some((path, line)) => Error::Parse {
                    path: path.display().to_string(),
                    line,
                    why,
                },
                None => Error::Invalid {
                    what: "override",
                    why,
                },
            });
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) {
        assert!(
            self.entries.contains_key(key),
            "set of unknown config key `{key}`"
        );
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn str_val(&self, key: &str) -> &str {
        self.entries
            .get(key)
            .unwrap_or_else(|| panic!("unknown config key `{key}`"))
    }

    fn typed<T: std::str::FromStr>(&self, key: &str, what: &'static str) -> Result<T> {
        self.str_val(key).parse().map_err(|_| Error::Invalid {
            what,
            why: format!("`{key} = {}` does not parse", self.str_val(key)),
        })
    }

    pub fn usize_val(&self, key: &str) -> Result<usize> {
        self.typed(key, "integer config value")
    }

    pub fn u64_val(&self, key: &str) -> Result<u64> {
        self.typed(key, "integer config value")
    }

    pub fn f64_val(&self, key: &str) -> Result<f64> {
        self.typed(key, "numeric config value")
    }

    pub fn bool_val(&self, key: &str) -> Result<bool> {
        match self.str_val(key) {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            other => Err(Error::Invalid {
                what: "boolean config value",
                why: format!("`{key} = {other}`"),
            }),
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(self.str_val("out.dir"))
    }

    /// Path-valued key; empty values fall back to `<out.dir>/<default>`.
    pub fn path_or_default(&self, key: &str, default_name: &str) -> PathBuf {
        let v = self.str_val(key);
        if v.is_empty() {
            self.out_dir().join(default_name)
        } else {
            PathBuf::from(v)
        }
    }

    pub fn mixture(&self) -> Result<GaussianMixtureSpec> {
        Ok(GaussianMixtureSpec {
            clusters: self.usize_val("data.clusters")?,
            radius: self.f64_val("data.radius")?,
            cluster_std: self.f64_val("data.std")?,
            seed: self.u64_val("seed")?,
        })
    }

    pub fn schedule(&self) -> Result<NoiseSchedule> {
        NoiseSchedule::linear(
            self.usize_val("schedule.steps")?,
            self.f64_val("schedule.beta_start")?,
            self.f64_val("schedule.beta_end")?,
        )
    }

    pub fn architecture(&self) -> Result<Architecture> {
        Ok(Architecture {
            embed_dim: self.usize_val("model.embed")?,
            hidden_dim: self.usize_val("model.hidden")?,
        })
    }

    pub fn base_train(&self) -> Result<TrainConfig> {
        Ok(TrainConfig {
            steps: self.usize_val("train.base.steps")?,
            batch: self.usize_val("train.base.batch")?,
            learning_rate: self.f64_val("train.base.lr")?,
            seed: self.u64_val("seed")?,
            log_every: 50,
        })
    }

    pub fn align(&self) -> Result<AlignConfig> {
        Ok(AlignConfig {
            beta: self.f64_val("align.beta")?,
            omega: self.f64_val("align.omega")?,
            steps: self.usize_val("align.steps")?,
            batch_pairs: self.usize_val("align.batch")?,
            learning_rate: self.f64_val("align.lr")?,
            seed: self.u64_val("seed")?,
            log_every: self.usize_val("align.log_every")?,
            probe_size: self.usize_val("align.probe")?,
        })
    }

    pub fn sft(&self) -> Result<AlignConfig> {
        Ok(AlignConfig {
            beta: 1.0,
            omega: 1.0,
            steps: self.usize_val("sft.steps")?,
            batch_pairs: self.usize_val("sft.batch")?,
            learning_rate: self.f64_val("sft.lr")?,
            seed: self.u64_val("seed")?,
            log_every: self.usize_val("align.log_every")?,
            probe_size: 0,
        })
    }

    pub fn distill_train(&self) -> Result<TrainConfig> {
        Ok(TrainConfig {
            steps: self.usize_val("distill.steps")?,
            batch: self.usize_val("distill.batch")?,
            learning_rate: self.f64_val("distill.lr")?,
            seed: self.u64_val("seed")?,
            log_every: 50,
        })
    }

    pub fn guidance_cutoff(&self, sched: &NoiseSchedule) -> Result<usize> {
        let v = self.str_val("guide.cutoff");
        if v == "full" {
            return Ok(sched.len());
        }
        v.parse().map_err(|_| Error::Invalid {
            what: "partial-step cutoff",
            why: format!("`guide.cutoff = {v}` (integer or `full`)"),
        })
    }

    pub fn sweep_weights(&self) -> Result<Vec<f64>> {
        let raw = self.str_val("sweep.weights");
        let mut weights = Vec::new();
        for part in raw.split(',') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            weights.push(part.parse().map_err(|_| Error::Invalid {
                what: "sweep weights",
                why: format!("`{part}` in `{raw}`"),
            })?);
        }
        if weights.is_empty() {
            return Err(Error::Empty { what: "weight list" });
        }
        Ok(weights)
    }

    /// Canonical text of the resolved configuration.
    pub fn resolved_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# pgd2d {TOOL_VERSION} resolved config");
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// FNV-1a over the resolved text: the checksum stamped into every
    /// emitted CSV.
    pub fn checksum(&self) -> u64 {
        fnv1a64(self.resolved_text().as_bytes())
    }
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

pub fn file_checksum(path: &Path) -> Result<u64> {
    Ok(fnv1a64(&fs::read(path)?))
}
