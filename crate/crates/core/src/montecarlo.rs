//! Empirical counting of degenerate subsets.
//!
//! Exhaustive mode enumerates every unordered triple or quadruple `i < j < l
//! (< m)` and is the oracle for everything else. Sampled mode draws uniform
//! `k`-subsets with replacement across draws and reports the scaled
//! degenerate fraction with a 95% Wilson interval.
//!
//! Both modes evaluate subsets with indices in ascending order through the
//! same kernels as [`crate::geometry`], so a subset is classified identically
//! by either route. Work is split with rayon; counts combine by integer
//! addition and sampled draws are keyed by chunk index, so results do not
//! depend on the thread count.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytics::subset_count;
use crate::error::{Error, Result};
use crate::geometry::{check_nonneg, expect_dim, tetra_det, triangle_cross_norm, PointCloud};
use crate::rng::SeededRng;
use crate::samplers::{
    add_noise, quantize, sample_uniform_hypercube, NoiseModel, QuantizationGrid,
};

pub const DEFAULT_COLLINEAR_CAP: usize = 500;
pub const DEFAULT_COPLANAR_CAP: usize = 120;

/// Two-sided 95% standard normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Draws per random sub-stream in sampled mode.
const SAMPLE_CHUNK: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SubsetKind {
    Collinear,
    Coplanar,
}

impl SubsetKind {
    pub fn from_size(k: usize) -> Result<Self> {
        match k {
            3 => Ok(SubsetKind::Collinear),
            4 => Ok(SubsetKind::Coplanar),
            _ => Err(Error::invalid(format!(
                "subset size must be 3 or 4, got {k}"
            ))),
        }
    }

    pub fn size(self) -> usize {
        match self {
            SubsetKind::Collinear => 3,
            SubsetKind::Coplanar => 4,
        }
    }

    pub fn default_cap(self) -> usize {
        match self {
            SubsetKind::Collinear => DEFAULT_COLLINEAR_CAP,
            SubsetKind::Coplanar => DEFAULT_COPLANAR_CAP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CountMode {
    Exhaustive,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountResult {
    pub kind: SubsetKind,
    pub epsilon: f64,
    pub degenerate_count: f64,
    pub total_subsets: f64,
    pub mode: CountMode,
    pub ci_low: f64,
    pub ci_high: f64,
    pub samples_used: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct ComparisonParams {
    pub n: u64,
    pub dim: u32,
    pub k: u32,
    pub epsilon: f64,
    pub quantization: Option<[f64; 3]>,
    pub sigma: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub params: ComparisonParams,
    pub analytic_expectation: f64,
    pub empirical: CountResult,
    /// `empirical / analytic`; `None` when the analytic value is zero.
    pub ratio: Option<f64>,
    pub ratio_undefined: bool,
    /// The analytic value falls outside the empirical 95% interval.
    pub discrepancy: bool,
}

fn validate_cloud(cloud: &PointCloud, kind: SubsetKind, epsilon: f64) -> Result<Vec<[f64; 3]>> {
    expect_dim(3, cloud.dim())?;
    check_nonneg("epsilon", epsilon)?;
    let _ = kind;
    cloud.to_xyz()
}

fn collinear_hits(pts: &[[f64; 3]], epsilon: f64) -> u64 {
    let n = pts.len();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut hits = 0u64;
            for j in i + 1..n {
                for l in j + 1..n {
                    if triangle_cross_norm(&pts[i], &pts[j], &pts[l]) < epsilon {
                        hits += 1;
                    }
                }
            }
            hits
        })
        .sum()
}

fn coplanar_hits(pts: &[[f64; 3]], epsilon: f64) -> u64 {
    let n = pts.len();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut hits = 0u64;
            for j in i + 1..n {
                for l in j + 1..n {
                    for m in l + 1..n {
                        if tetra_det(&pts[i], &pts[j], &pts[l], &pts[m]).abs() < epsilon {
                            hits += 1;
                        }
                    }
                }
            }
            hits
        })
        .sum()
}

/// Exact count of degenerate `kind` subsets; refuses clouds larger than `cap`.
pub fn count_exhaustive(
    cloud: &PointCloud,
    kind: SubsetKind,
    epsilon: f64,
    cap: usize,
) -> Result<CountResult> {
    let pts = validate_cloud(cloud, kind, epsilon)?;
    let n = pts.len();
    if n > cap {
        return Err(Error::CapExceeded {
            n,
            k: kind.size(),
            cap,
        });
    }
    let hits = match kind {
        SubsetKind::Collinear => collinear_hits(&pts, epsilon),
        SubsetKind::Coplanar => coplanar_hits(&pts, epsilon),
    };
    let count = hits as f64;
    Ok(CountResult {
        kind,
        epsilon,
        degenerate_count: count,
        total_subsets: subset_count(n as u64, kind.size() as u64)?,
        mode: CountMode::Exhaustive,
        ci_low: count,
        ci_high: count,
        samples_used: 0,
    })
}

/// Unordered triples with collinearity residual `< epsilon`.
pub fn count_collinear_exhaustive(cloud: &PointCloud, epsilon: f64) -> Result<CountResult> {
    count_exhaustive(cloud, SubsetKind::Collinear, epsilon, DEFAULT_COLLINEAR_CAP)
}

/// Unordered quadruples with coplanarity residual `< epsilon`.
pub fn count_coplanar_exhaustive(cloud: &PointCloud, epsilon: f64) -> Result<CountResult> {
    count_exhaustive(cloud, SubsetKind::Coplanar, epsilon, DEFAULT_COPLANAR_CAP)
}

/// 95% Wilson score interval for `hits` successes in `trials`.
pub fn wilson_interval(hits: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = hits as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // The exact interval always contains p; rounding must not break that.
    let low = (center - half).max(0.0).min(p);
    let high = (center + half).min(1.0).max(p);
    (low, high)
}

fn draw_subset(rng: &mut impl Rng, n: usize, k: usize, out: &mut [usize; 4]) {
    let mut filled = 0;
    while filled < k {
        let c = rng.random_range(0..n);
        if !out[..filled].contains(&c) {
            out[filled] = c;
            filled += 1;
        }
    }
    out[..k].sort_unstable();
}

/// Estimates the number of degenerate `k`-subsets from `num_samples`
/// uniformly drawn subsets.
pub fn count_degenerate_sampled(
    cloud: &PointCloud,
    k: usize,
    epsilon: f64,
    num_samples: u64,
    rng: &SeededRng,
) -> Result<CountResult> {
    let kind = SubsetKind::from_size(k)?;
    let pts = validate_cloud(cloud, kind, epsilon)?;
    let n = pts.len();
    if n < k {
        return Err(Error::invalid(format!("need at least {k} points, got {n}")));
    }
    if num_samples == 0 {
        return Err(Error::invalid("num_samples must be at least 1"));
    }

    let chunks = num_samples.div_ceil(SAMPLE_CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut stream = rng.stream("subset-sample", c);
            let draws = SAMPLE_CHUNK.min(num_samples - c * SAMPLE_CHUNK);
            let mut idx = [0usize; 4];
            let mut hits = 0u64;
            for _ in 0..draws {
                draw_subset(&mut stream, n, k, &mut idx);
                let degenerate = match kind {
                    SubsetKind::Collinear => {
                        triangle_cross_norm(&pts[idx[0]], &pts[idx[1]], &pts[idx[2]]) < epsilon
                    }
                    SubsetKind::Coplanar => {
                        tetra_det(&pts[idx[0]], &pts[idx[1]], &pts[idx[2]], &pts[idx[3]]).abs()
                            < epsilon
                    }
                };
                hits += u64::from(degenerate);
            }
            hits
        })
        .sum();

    let total = subset_count(n as u64, k as u64)?;
    let fraction = hits as f64 / num_samples as f64;
    let (lo, hi) = wilson_interval(hits, num_samples);
    Ok(CountResult {
        kind,
        epsilon,
        degenerate_count: fraction * total,
        total_subsets: total,
        mode: CountMode::Sampled,
        ci_low: lo * total,
        ci_high: hi * total,
        samples_used: num_samples,
    })
}

pub fn compare_analytic_empirical(
    params: ComparisonParams,
    analytic: f64,
    empirical: CountResult,
) -> Result<ComparisonReport> {
    check_nonneg("analytic expectation", analytic)?;
    let ratio = (analytic > 0.0).then(|| empirical.degenerate_count / analytic);
    let discrepancy = analytic < empirical.ci_low || analytic > empirical.ci_high;
    Ok(ComparisonReport {
        params,
        analytic_expectation: analytic,
        ratio_undefined: ratio.is_none(),
        ratio,
        empirical,
        discrepancy,
    })
}

/// Paired raw-vs-processed experiment over many seeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmplificationConfig {
    pub n_points: usize,
    pub epsilon: f64,
    pub grid: QuantizationGrid,
    /// Noise added after quantization.
    pub noise: NoiseModel,
    pub repetitions: u32,
    pub kind: SubsetKind,
    pub cap: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairedCount {
    pub repetition: u32,
    pub raw: u64,
    pub processed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmplificationReport {
    pub kind: SubsetKind,
    pub pairs: Vec<PairedCount>,
    pub mean_raw: f64,
    pub mean_processed: f64,
    /// `Σ processed / Σ raw`; `None` when no raw subset was degenerate.
    pub measured_ratio: Option<f64>,
    /// Delta-method 95% interval for the ratio of means.
    pub ratio_ci: Option<(f64, f64)>,
    pub processed_ge_raw: u32,
}

/// For each repetition `r`: draw `n` uniform points from `rng.child("mc-rep", r)`,
/// quantize, add post-quantization noise, and count degenerate subsets in the
/// raw and processed clouds exhaustively.
pub fn amplification_experiment(
    config: &AmplificationConfig,
    rng: &SeededRng,
) -> Result<AmplificationReport> {
    check_nonneg("epsilon", config.epsilon)?;
    if config.repetitions == 0 {
        return Err(Error::invalid("repetitions must be at least 1"));
    }
    if config.n_points < config.kind.size() {
        return Err(Error::invalid(format!(
            "need at least {} points, got {}",
            config.kind.size(),
            config.n_points
        )));
    }
    if config.n_points > config.cap {
        return Err(Error::CapExceeded {
            n: config.n_points,
            k: config.kind.size(),
            cap: config.cap,
        });
    }

    let pairs = (0..config.repetitions)
        .into_par_iter()
        .map(|r| {
            let rep = rng.child("mc-rep", u64::from(r));
            let raw = sample_uniform_hypercube(config.n_points, 3, &rep)?;
            let quantized = quantize(&raw, &config.grid)?;
            let processed = add_noise(&quantized, &config.noise, &rep.child("post-noise", 0));
            let count = |c: &PointCloud| {
                count_exhaustive(c, config.kind, config.epsilon, config.cap)
                    .map(|res| res.degenerate_count as u64)
            };
            Ok(PairedCount {
                repetition: r,
                raw: count(&raw)?,
                processed: count(&processed)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(summarize_pairs(config.kind, pairs))
}

fn summarize_pairs(kind: SubsetKind, pairs: Vec<PairedCount>) -> AmplificationReport {
    let reps = pairs.len() as f64;
    let sum_raw: f64 = pairs.iter().map(|p| p.raw as f64).sum();
    let sum_processed: f64 = pairs.iter().map(|p| p.processed as f64).sum();
    let mean_raw = sum_raw / reps;
    let mean_processed = sum_processed / reps;
    let measured_ratio = (sum_raw > 0.0).then(|| sum_processed / sum_raw);

    let ratio_ci = measured_ratio.and_then(|ratio| {
        if pairs.len() < 2 {
            return None;
        }
        let ss: f64 = pairs
            .iter()
            .map(|p| {
                let d = p.processed as f64 - ratio * p.raw as f64;
                d * d
            })
            .sum();
        let se = (ss / (reps - 1.0) / reps).sqrt() / mean_raw;
        Some((ratio - Z95 * se, ratio + Z95 * se))
    });

    AmplificationReport {
        kind,
        processed_ge_raw: pairs.iter().filter(|p| p.processed >= p.raw).count() as u32,
        pairs,
        mean_raw,
        mean_processed,
        measured_ratio,
        ratio_ci,
    }
}
