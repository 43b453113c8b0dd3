//! 2D analogues of the evaluation suite: cluster occupancy, diversity,
//! Fréchet distance between fitted Gaussians, and win rate.

use crate::dataset::GaussianMixtureSpec;
use crate::diffusion::{probe_mse, NoiseDraw, NoiseSchedule, SampleResult};
use crate::error::{Error, Result};
use crate::numerics::{ModelParams, Vec2};

/// Per-cluster occupancy counts plus the outlier bucket.
#[derive(Debug, Clone)]
pub struct ClusterCounts {
    pub per_cluster: Vec<usize>,
    pub outliers: usize,
    pub total: usize,
}

/// Assign each sample to its nearest cluster mean if within
/// `outlier_radius` (an absolute distance; the conventional choice is
/// `4 * cluster_std`), otherwise count it as an outlier.
pub fn cluster_assign(
    samples: &[Vec2],
    spec: &GaussianMixtureSpec,
    outlier_radius: f64,
) -> Result<ClusterCounts> {
    if !(outlier_radius > 0.0) {
        return Err(Error::Invalid {
            what: "outlier radius",
            why: format!("{outlier_radius} must be positive"),
        });
    }
    let means = spec.cluster_means();
    let mut per_cluster = vec![0usize; spec.clusters];
    let mut outliers = 0usize;
    for &x in samples {
        let mut best = 0usize;
        let mut best_d2 = f64::INFINITY;
        for (k, m) in means.iter().enumerate() {
            let d2 = (x[0] - m[0]).powi(2) + (x[1] - m[1]).powi(2);
            if d2 < best_d2 {
                best_d2 = d2;
                best = k;
            }
        }
        if best_d2.sqrt() <= outlier_radius {
            per_cluster[best] += 1;
        } else {
            outliers += 1;
        }
    }
    Ok(ClusterCounts {
        per_cluster,
        outliers,
        total: samples.len(),
    })
}

impl ClusterCounts {
    /// Fraction of all samples (outliers included in the denominator)
    /// landing in even-indexed clusters.
    pub fn positive_mass(&self) -> Result<f64> {
        if self.total == 0 {
            return Err(Error::Empty { what: "sample set" });
        }
        let pos: usize = self.per_cluster.iter().step_by(2).sum();
        Ok(pos as f64 / self.total as f64)
    }

    pub fn negative_mass(&self) -> Result<f64> {
        if self.total == 0 {
            return Err(Error::Empty { what: "sample set" });
        }
        let neg: usize = self.per_cluster.iter().skip(1).step_by(2).sum();
        Ok(neg as f64 / self.total as f64)
    }

    pub fn outlier_mass(&self) -> Result<f64> {
        if self.total == 0 {
            return Err(Error::Empty { what: "sample set" });
        }
        Ok(self.outliers as f64 / self.total as f64)
    }

    /// Number of clusters holding at least `threshold` of the samples.
    pub fn modes_covered(&self, threshold: f64) -> usize {
        let min = threshold * self.total as f64;
        self.per_cluster.iter().filter(|&&c| c as f64 >= min).count()
    }

    /// Same, restricted to even-indexed (positive) clusters.
    pub fn positive_modes_covered(&self, threshold: f64) -> usize {
        let min = threshold * self.total as f64;
        self.per_cluster
            .iter()
            .step_by(2)
            .filter(|&&c| c as f64 >= min)
            .count()
    }
}

/// Mean pairwise squared distance `2/(n(n-1)) * sum_{i<j} |x_i - x_j|^2`,
/// computed through the moment identity
/// `sum_{i<j} |x_i-x_j|^2 = n * sum |x_i|^2 - |sum x_i|^2`.
pub fn diversity_score(samples: &[Vec2]) -> Result<f64> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::Invalid {
            what: "sample set",
            why: format!("diversity needs >= 2 samples, got {n}"),
        });
    }
    let nf = n as f64;
    let mut sum = [0.0f64; 2];
    let mut sq = 0.0f64;
    for x in samples {
        sum[0] += x[0];
        sum[1] += x[1];
        sq += x[0] * x[0] + x[1] * x[1];
    }
    let pair_sum = nf * sq - (sum[0] * sum[0] + sum[1] * sum[1]);
    Ok(2.0 * pair_sum / (nf * (nf - 1.0)))
}

/// Sample mean and covariance (unbiased, +1e-8 I regularization).
fn fit_gaussian(samples: &[Vec2]) -> Result<([f64; 2], [[f64; 2]; 2])> {
    let n = samples.len();
    if n < 3 {
        return Err(Error::Invalid {
            what: "sample set",
            why: format!("Fréchet fit needs >= 3 samples, got {n}"),
        });
    }
    let nf = n as f64;
    let mut mu = [0.0f64; 2];
    for x in samples {
        mu[0] += x[0];
        mu[1] += x[1];
    }
    mu[0] /= nf;
    mu[1] /= nf;
    let mut c = [[0.0f64; 2]; 2];
    for x in samples {
        let d = [x[0] - mu[0], x[1] - mu[1]];
        c[0][0] += d[0] * d[0];
        c[0][1] += d[0] * d[1];
        c[1][1] += d[1] * d[1];
    }
    let denom = nf - 1.0;
    c[0][0] = c[0][0] / denom + 1e-8;
    c[0][1] /= denom;
    c[1][0] = c[0][1];
    c[1][1] = c[1][1] / denom + 1e-8;
    Ok((mu, c))
}

/// Closed-form 2D Fréchet distance between Gaussians fitted to the two
/// sample sets:
/// `|mu_a - mu_b|^2 + tr(Sa) + tr(Sb) - 2 sqrt(tr(Sa Sb) + 2 sqrt(det Sa det Sb))`,
/// using the 2x2 trace/determinant identity for `tr((Sa Sb)^{1/2})`.
pub fn frechet_2d(samples_a: &[Vec2], samples_b: &[Vec2]) -> Result<f64> {
    let (mu_a, ca) = fit_gaussian(samples_a)?;
    let (mu_b, cb) = fit_gaussian(samples_b)?;
    frechet_gaussians(mu_a, ca, mu_b, cb)
}

/// Fréchet distance between explicit Gaussian moments.
pub fn frechet_gaussians(
    mu_a: [f64; 2],
    ca: [[f64; 2]; 2],
    mu_b: [f64; 2],
    cb: [[f64; 2]; 2],
) -> Result<f64> {
    let dmu = (mu_a[0] - mu_b[0]).powi(2) + (mu_a[1] - mu_b[1]).powi(2);
    let tr_a = ca[0][0] + ca[1][1];
    let tr_b = cb[0][0] + cb[1][1];
    // tr(Sa Sb) for symmetric 2x2 matrices.
    let tr_ab = ca[0][0] * cb[0][0]
        + ca[1][1] * cb[1][1]
        + 2.0 * ca[0][1] * cb[0][1];
    let det_a = ca[0][0] * ca[1][1] - ca[0][1] * ca[0][1];
    let det_b = cb[0][0] * cb[1][1] - cb[0][1] * cb[0][1];
    let det_prod = (det_a * det_b).max(0.0);
    let inner = tr_ab + 2.0 * det_prod.sqrt();
    if !(inner >= 0.0) || !inner.is_finite() {
        return Err(Error::DegenerateCovariance { value: inner });
    }
    // Nonnegative up to rounding; clamp tiny negatives from cancellation.
    Ok((dmu + tr_a + tr_b - 2.0 * inner.sqrt()).max(0.0))
}

/// `100 * mean[a > b]`, ties counting one half.
pub fn win_rate(scores_a: &[f64], scores_b: &[f64]) -> Result<f64> {
    if scores_a.len() != scores_b.len() {
        return Err(Error::LengthMismatch {
            left: scores_a.len(),
            right: scores_b.len(),
        });
    }
    if scores_a.is_empty() {
        return Err(Error::Empty { what: "score lists" });
    }
    let mut wins = 0.0;
    for (a, b) in scores_a.iter().zip(scores_b) {
        if a > b {
            wins += 1.0;
        } else if a == b {
            wins += 0.5;
        }
    }
    Ok(100.0 * wins / scores_a.len() as f64)
}

/// Diffusion proxy of the implicit reward `beta log pi/pi_ref`:
/// `beta * T * mean over frozen (t, eps) of [mse_ref - mse_theta]`.
/// The prompt-level normalizer cancels in paired comparisons and is
/// dropped, so absolute values are only meaningful relative to each
/// other.
pub fn implicit_reward_proxy(
    params: &ModelParams,
    ref_params: &ModelParams,
    x0: Vec2,
    beta: f64,
    sched: &NoiseSchedule,
    frozen: &[NoiseDraw],
) -> Result<f64> {
    if frozen.is_empty() {
        return Err(Error::Empty { what: "frozen noise set" });
    }
    let probes: Vec<(Vec2, NoiseDraw)> = frozen.iter().map(|d| (x0, *d)).collect();
    let mse_theta = probe_mse(params, &probes, sched);
    let mse_ref = probe_mse(ref_params, &probes, sched);
    Ok(beta * sched.len() as f64 * (mse_ref - mse_theta))
}

/// Knobs shared by every metric computation.
#[derive(Debug, Clone)]
pub struct MetricOptions {
    pub mixture: GaussianMixtureSpec,
    /// Absolute assignment radius; defaults to `4 * cluster_std`.
    pub outlier_radius: f64,
    /// Occupancy fraction for a cluster to count as covered.
    pub coverage_threshold: f64,
}

impl MetricOptions {
    pub fn for_mixture(mixture: GaussianMixtureSpec) -> Self {
        Self {
            outlier_radius: 4.0 * mixture.cluster_std,
            coverage_threshold: 0.02,
            mixture,
        }
    }
}

/// Summary row for one sampling run.
#[derive(Debug, Clone)]
pub struct RunMetrics {
    pub positive_mass: f64,
    pub negative_mass: f64,
    pub outlier_mass: f64,
    pub modes_covered: usize,
    pub positive_modes_covered: usize,
    pub diversity: f64,
    pub frechet: f64,
    pub n_samples: usize,
    pub failures: usize,
}

impl RunMetrics {
    pub const CSV_HEADER: &'static str = "positive_mass,negative_mass,outlier_mass,modes_covered,positive_modes_covered,diversity,frechet,n_samples,failures";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.positive_mass,
            self.negative_mass,
            self.outlier_mass,
            self.modes_covered,
            self.positive_modes_covered,
            self.diversity,
            self.frechet,
            self.n_samples,
            self.failures
        )
    }
}

/// Cluster occupancy, diversity, and Fréchet distance of a sampling run
/// against reference samples (typically held-out dataset points).
pub fn compute_run_metrics(
    result: &SampleResult,
    opts: &MetricOptions,
    reference: &[Vec2],
) -> Result<RunMetrics> {
    let counts = cluster_assign(&result.samples, &opts.mixture, opts.outlier_radius)?;
    Ok(RunMetrics {
        positive_mass: counts.positive_mass()?,
        negative_mass: counts.negative_mass()?,
        outlier_mass: counts.outlier_mass()?,
        modes_covered: counts.modes_covered(opts.coverage_threshold),
        positive_modes_covered: counts.positive_modes_covered(opts.coverage_threshold),
        diversity: diversity_score(&result.samples)?,
        frechet: frechet_2d(&result.samples, reference)?,
        n_samples: result.samples.len(),
        failures: result.failures,
    })
}
