//! The labeled 8-Gaussians dataset and preference pairs.
//!
//! Cluster means sit at angles `k * 2pi / count` on a circle, counter-
//! clockwise starting from angle 0. Even-indexed clusters are labeled
//! positive, odd-indexed negative.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numerics::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn of_cluster(cluster: usize) -> Label {
        if cluster % 2 == 0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Label::Positive => "positive",
            Label::Negative => "negative",
        }
    }
}

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct GaussianMixtureSpec {
    pub clusters: usize,
    pub radius: f64,
    pub cluster_std: f64,
    pub seed: u64,
}

impl Default for GaussianMixtureSpec {
    /// Well-separated defaults: inter-mean distance is roughly 10x the
    /// cluster standard deviation.
    fn default() -> Self {
        Self {
            clusters: 8,
            radius: 4.0,
            cluster_std: 0.3,
            seed: 0,
        }
    }
}

impl GaussianMixtureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.clusters == 0 || self.clusters % 2 != 0 {
            return Err(Error::Invalid {
                what: "cluster count",
                why: format!("{} is not a positive even number", self.clusters),
            });
        }
        if !(self.radius > 0.0) {
            return Err(Error::Invalid {
                what: "ring radius",
                why: format!("{} must be positive", self.radius),
            });
        }
        if !(self.cluster_std > 0.0) {
            return Err(Error::Invalid {
                what: "cluster std",
                why: format!("{} must be positive", self.cluster_std),
            });
        }
        Ok(())
    }

    pub fn cluster_mean(&self, k: usize) -> Vec2 {
        let angle = std::f64::consts::TAU * k as f64 / self.clusters as f64;
        [self.radius * angle.cos(), self.radius * angle.sin()]
    }

    pub fn cluster_means(&self) -> Vec<Vec2> {
        (0..self.clusters).map(|k| self.cluster_mean(k)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledPoint {
    pub x: Vec2,
    pub cluster: usize,
    pub label: Label,
}

/// A preferred / dispreferred sample pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreferencePair {
    pub x_pos: Vec2,
    pub x_neg: Vec2,
}

/// Draw `n` points i.i.d.: cluster uniform, then an isotropic Gaussian
/// around the cluster mean. Deterministic given the rng stream.
pub fn generate_mixture<R: Rng>(
    spec: &GaussianMixtureSpec,
    n: usize,
    rng: &mut R,
) -> Result<Vec<LabeledPoint>> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::Empty { what: "sample count" });
    }
    let means = spec.cluster_means();
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let cluster = rng.gen_range(0..spec.clusters);
        let e0: f64 = rng.sample(StandardNormal);
        let e1: f64 = rng.sample(StandardNormal);
        let mean = means[cluster];
        points.push(LabeledPoint {
            x: [mean[0] + spec.cluster_std * e0, mean[1] + spec.cluster_std * e1],
            cluster,
            label: Label::of_cluster(cluster),
        });
    }
    Ok(points)
}

/// Pair an independent uniformly drawn positive point with an
/// independent uniformly drawn negative point, `m` times.
pub fn sample_pairs<R: Rng>(
    points: &[LabeledPoint],
    m: usize,
    rng: &mut R,
) -> Result<Vec<PreferencePair>> {
    let positives: Vec<&LabeledPoint> =
        points.iter().filter(|p| p.label == Label::Positive).collect();
    let negatives: Vec<&LabeledPoint> =
        points.iter().filter(|p| p.label == Label::Negative).collect();
    if positives.is_empty() {
        return Err(Error::MissingLabel { label: "positive" });
    }
    if negatives.is_empty() {
        return Err(Error::MissingLabel { label: "negative" });
    }
    let mut pairs = Vec::with_capacity(m);
    for _ in 0..m {
        let p = positives[rng.gen_range(0..positives.len())];
        let n = negatives[rng.gen_range(0..negatives.len())];
        pairs.push(PreferencePair {
            x_pos: p.x,
            x_neg: n.x,
        });
    }
    Ok(pairs)
}

/// Subset of raw coordinates carrying the given label.
pub fn subset(points: &[LabeledPoint], label: Label) -> Vec<Vec2> {
    points.iter().filter(|p| p.label == label).map(|p| p.x).collect()
}

/// 17 significant digits, enough for f64 values to round-trip exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_points(out: &mut String, points: &[LabeledPoint]) {
    out.push_str("x,y,cluster,label\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(p.x[0]),
            fmt_f64(p.x[1]),
            p.cluster,
            p.label.as_str()
        );
    }
}

pub fn save_dataset(path: &Path, points: &[LabeledPoint]) -> Result<()> {
    let mut out = String::new();
    write_points(&mut out, points);
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Parse a dataset CSV. Comment lines starting with `#` are skipped;
/// malformed rows are rejected with their line number.
pub fn load_dataset(path: &Path) -> Result<Vec<LabeledPoint>> {
    let file = fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut points = Vec::new();
    let mut saw_header = false;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if !saw_header {
            if trimmed != "x,y,cluster,label" {
                return Err(parse_err(path, lineno, "expected header `x,y,cluster,label`"));
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 4 {
            return Err(parse_err(path, lineno, "expected 4 fields"));
        }
        let x = parse_field::<f64>(path, lineno, fields[0], "x")?;
        let y = parse_field::<f64>(path, lineno, fields[1], "y")?;
        let cluster = parse_field::<usize>(path, lineno, fields[2], "cluster")?;
        let label = match fields[3] {
            "positive" => Label::Positive,
            "negative" => Label::Negative,
            other => {
                return Err(parse_err(path, lineno, &format!("unknown label `{other}`")));
            }
        };
        if label != Label::of_cluster(cluster) {
            return Err(parse_err(
                path,
                lineno,
                &format!("label {} contradicts cluster {cluster}", fields[3]),
            ));
        }
        points.push(LabeledPoint {
            x: [x, y],
            cluster,
            label,
        });
    }
    if !saw_header {
        return Err(parse_err(path, 1, "missing header"));
    }
    Ok(points)
}

pub fn write_pairs(out: &mut String, pairs: &[PreferencePair]) {
    out.push_str("xp,yp,xn,yn\n");
    for p in pairs {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(p.x_pos[0]),
            fmt_f64(p.x_pos[1]),
            fmt_f64(p.x_neg[0]),
            fmt_f64(p.x_neg[1])
        );
    }
}

pub fn save_pairs(path: &Path, pairs: &[PreferencePair]) -> Result<()> {
    let mut out = String::new();
    write_pairs(&mut out, pairs);
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn load_pairs(path: &Path) -> Result<Vec<PreferencePair>> {
    let file = fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut pairs = Vec::new();
    let mut saw_header = false;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if !saw_header {
            if trimmed != "xp,yp,xn,yn" {
                return Err(parse_err(path, lineno, "expected header `xp,yp,xn,yn`"));
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 4 {
            return Err(parse_err(path, lineno, "expected 4 fields"));
        }
        pairs.push(PreferencePair {
            x_pos: [
                parse_field(path, lineno, fields[0], "xp")?,
                parse_field(path, lineno, fields[1], "yp")?,
            ],
            x_neg: [
                parse_field(path, lineno, fields[2], "xn")?,
                parse_field(path, lineno, fields[3], "yn")?,
            ],
        });
    }
    if !saw_header {
        return Err(parse_err(path, 1, "missing header"));
    }
    Ok(pairs)
}

fn parse_err(path: &Path, line: usize, why: &str) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        why: why.to_string(),
    }
}

fn parse_field<T: std::str::FromStr>(
    path: &Path,
    line: usize,
    field: &str,
    name: &str,
) -> Result<T> {
    field
        .parse()
        .map_err(|_| parse_err(path, line, &format!("bad {name} value `{field}`")))
}
