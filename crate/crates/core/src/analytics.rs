//! Closed-form degeneracy probabilities and expected counts.
//!
//! Probabilities are clamped to `[0, 1]`; expected counts are never clamped.
//! Power laws are evaluated directly in `f64` whenever every intermediate is a
//! normal finite number, which keeps exact ratios such as
//! `E(2N)/E(N) = 4` intact, and fall back to log space otherwise.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::check_nonneg;

/// Parameters of the uniform-random model: `N` points in `[0,1]^d`,
/// subsets of size `k`, tolerance `ε`, proportionality constant `C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RandomModelParams {
    pub n_points: u64,
    pub dim: u32,
    pub subset_size: u32,
    pub epsilon: f64,
    pub proportionality: f64,
}

impl RandomModelParams {
    /// Validated parameters with `C = 1`.
    pub fn new(n_points: u64, dim: u32, subset_size: u32, epsilon: f64) -> Result<Self> {
        Self::with_constant(n_points, dim, subset_size, epsilon, 1.0)
    }

    pub fn with_constant(
        n_points: u64,
        dim: u32,
        subset_size: u32,
        epsilon: f64,
        proportionality: f64,
    ) -> Result<Self> {
        let p = Self {
            n_points,
            dim,
            subset_size,
            epsilon,
            proportionality,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::invalid("dimension d must be at least 1"));
        }
        if self.subset_size == 0 || u64::from(self.subset_size) > self.n_points {
            return Err(Error::invalid(format!(
                "subset size k = {} must satisfy 1 <= k <= N = {}",
                self.subset_size, self.n_points
            )));
        }
        check_nonneg("epsilon", self.epsilon)?;
        if !(self.proportionality.is_finite() && self.proportionality > 0.0) {
            return Err(Error::invalid(
                "proportionality constant C must be positive",
            ));
        }
        Ok(())
    }
}

/// Parameters of the structured-environment model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StructuredModelParams {
    /// `A_plane`
    pub plane_area: f64,
    /// `δ`
    pub shell_thickness: f64,
    /// `R`
    pub cyl_radius: f64,
    /// `h`
    pub cyl_height: f64,
    /// `r`
    pub sphere_radius: f64,
    pub dim: u32,
}

impl StructuredModelParams {
    pub fn validate(&self) -> Result<()> {
        check_nonneg("plane area", self.plane_area)?;
        check_nonneg("shell thickness delta", self.shell_thickness)?;
        for (name, v) in [
            ("cylinder radius R", self.cyl_radius),
            ("cylinder height h", self.cyl_height),
            ("sphere radius r", self.sphere_radius),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.dim == 0 {
            return Err(Error::invalid("dimension d must be at least 1"));
        }
        Ok(())
    }

    /// `π R² h`.
    pub fn total_volume(&self) -> f64 {
        PI * self.cyl_radius * self.cyl_radius * self.cyl_height
    }

    /// `d · r^(d−1)`.
    pub fn sphere_area(&self) -> f64 {
        f64::from(self.dim) * self.sphere_radius.powi(self.dim as i32 - 1)
    }
}

/// Postulated multipliers from random to quantized expected counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmplificationFactors {
    pub collinear: f64,
    pub coplanar: f64,
}

impl Default for AmplificationFactors {
    fn default() -> Self {
        Self {
            collinear: 10.0,
            coplanar: 3.0,
        }
    }
}

impl AmplificationFactors {
    pub fn new(collinear: f64, coplanar: f64) -> Result<Self> {
        for (name, v) in [("collinear", collinear), ("coplanar", coplanar)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!(
                    "{name} amplification must be positive, got {v}"
                )));
            }
        }
        Ok(Self {
            collinear,
            coplanar,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpectationRow {
    pub n: u64,
    pub collinear_random: f64,
    pub collinear_quantized: f64,
    pub coplanar_random: f64,
    pub coplanar_quantized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectationTable {
    pub eps_collinear: f64,
    pub eps_coplanar: f64,
    pub amplification: AmplificationFactors,
    pub rows: Vec<ExpectationRow>,
}

fn clamp_probability(p: f64) -> f64 {
    p.clamp(0.0, 1.0)
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::invalid(format!("probability {p} is outside [0, 1]")))
    }
}

/// `ln k!`, exact summation of logs (k is small in every caller).
fn ln_factorial(k: u32) -> f64 {
    (2..=k).map(|i| f64::from(i).ln()).sum()
}

/// `k!` as `f64`; infinite past 170.
fn factorial(k: u32) -> f64 {
    (2..=k).fold(1.0, |acc, i| acc * f64::from(i))
}

/// `scale · N^exponent / divisor` with a log-space fallback.
fn scaled_power(scale: f64, n: u64, exponent: i32, ln_divisor: f64, divisor: f64) -> f64 {
    if scale == 0.0 {
        return 0.0;
    }
    let nf = n as f64;
    let pow = nf.powi(exponent);
    if pow.is_normal() && divisor.is_normal() {
        let value = scale * pow / divisor;
        if value.is_normal() {
            return value;
        }
    }
    (scale.ln() + f64::from(exponent) * nf.ln() - ln_divisor).exp()
}

/// `min(1, C·ε / N^(d−k))`.
pub fn single_subset_probability(params: &RandomModelParams) -> Result<f64> {
    params.validate()?;
    let exponent = params.subset_size as i32 - params.dim as i32;
    let raw = scaled_power(
        params.proportionality * params.epsilon,
        params.n_points,
        exponent,
        0.0,
        1.0,
    );
    Ok(clamp_probability(raw))
}

/// `C·ε·N^(2k−d) / k!`, the asymptotic expected number of degenerate
/// `k`-subsets. Not clamped.
pub fn expected_degenerate_subsets(params: &RandomModelParams) -> Result<f64> {
    params.validate()?;
    let k = params.subset_size;
    let exponent = 2 * k as i32 - params.dim as i32;
    Ok(scaled_power(
        params.proportionality * params.epsilon,
        params.n_points,
        exponent,
        ln_factorial(k),
        factorial(k),
    ))
}

/// `ε N² / 6`, expected collinear triples in the unit cube.
///
/// Note that the general form with `k = d = 3` evaluates to `ε N³ / 6`; this
/// is the closed form used for the random-vs-quantized tables.
pub fn expected_collinear(n: u64, epsilon: f64) -> Result<f64> {
    if n < 3 {
        return Err(Error::invalid(format!(
            "collinear expectation needs N >= 3, got {n}"
        )));
    }
    check_nonneg("epsilon", epsilon)?;
    Ok(scaled_power(epsilon, n, 2, 6f64.ln(), 6.0))
}

/// `ε N / 24`, expected coplanar quadruples in the unit cube.
///
/// As with [`expected_collinear`], this differs from the general form at
/// `k = 4, d = 3` (`ε N⁵ / 24`).
pub fn expected_coplanar(n: u64, epsilon: f64) -> Result<f64> {
    if n < 4 {
        return Err(Error::invalid(format!(
            "coplanar expectation needs N >= 4, got {n}"
        )));
    }
    check_nonneg("epsilon", epsilon)?;
    Ok(scaled_power(epsilon, n, 1, 24f64.ln(), 24.0))
}

/// `ln C(n, k)`.
pub fn ln_subset_count(n: u64, k: u64) -> Result<f64> {
    if k > n {
        return Err(Error::invalid(format!("subset size {k} exceeds N = {n}")));
    }
    let k = k.min(n - k);
    Ok((1..=k)
        .map(|i| ((n - k + i) as f64).ln() - (i as f64).ln())
        .sum())
}

/// Binomial coefficient `C(n, k)` as `f64`.
///
/// Exact integer arithmetic while the value fits in `u128` (correctly rounded
/// on conversion), log space beyond that.
pub fn subset_count(n: u64, k: u64) -> Result<f64> {
    if k > n {
        return Err(Error::invalid(format!("subset size {k} exceeds N = {n}")));
    }
    let k_small = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k_small {
        // acc = C(n - k_small + i - 1, i - 1); the product below is divisible by i.
        match acc.checked_mul(u128::from(n - k_small + i)) {
            Some(v) => acc = v / u128::from(i),
            None => return Ok(ln_subset_count(n, k)?.exp()),
        }
    }
    Ok(acc as f64)
}

/// Large-`N` approximation `N^k / k!`.
pub fn subset_count_asymptotic(n: u64, k: u32) -> f64 {
    scaled_power(1.0, n, k as i32, ln_factorial(k), factorial(k))
}

/// `1 − ∏ (1 − p_i)^{m_i}` evaluated as `−expm1(Σ m_i · ln1p(−p_i))`.
///
/// Returns exactly 1 when some `p_i = 1` with `m_i > 0`.
pub fn overall_probability(terms: &[(f64, f64)]) -> Result<f64> {
    let mut log_survival = 0.0;
    let mut certain = false;
    for &(p, m) in terms {
        check_probability(p)?;
        if !(m.is_finite() && m >= 0.0) {
            return Err(Error::invalid(format!(
                "multiplicity {m} must be finite and non-negative"
            )));
        }
        if m == 0.0 {
            continue;
        }
        if p == 1.0 {
            certain = true;
        } else {
            log_survival += m * (-p).ln_1p();
        }
    }
    if certain {
        return Ok(1.0);
    }
    Ok(clamp_probability(-log_survival.exp_m1()))
}

/// `1 − exp(−Σ P_k)`.
pub fn overall_probability_exp_approx(sum_pk: f64) -> Result<f64> {
    if sum_pk.is_nan() || sum_pk < 0.0 {
        return Err(Error::invalid(format!(
            "probability sum must be non-negative, got {sum_pk}"
        )));
    }
    Ok(clamp_probability(-(-sum_pk).exp_m1()))
}

/// `min(1, A_plane · δ / (π R² h))`.
pub fn structured_coplanar_probability(params: &StructuredModelParams) -> Result<f64> {
    params.validate()?;
    Ok(clamp_probability(
        params.plane_area * params.shell_thickness / params.total_volume(),
    ))
}

/// `min(1, δ · d · r^(d−1) / (π R² h))`.
pub fn near_spherical_probability(params: &StructuredModelParams) -> Result<f64> {
    params.validate()?;
    Ok(clamp_probability(
        params.shell_thickness * params.sphere_area() / params.total_volume(),
    ))
}

/// `1 − ∏ (1 − P_i)` over independent degeneracy sources.
pub fn composite_degeneracy_probability(factors: &[f64]) -> Result<f64> {
    let terms: Vec<(f64, f64)> = factors.iter().map(|&p| (p, 1.0)).collect();
    overall_probability(&terms)
}

/// `(A_collinear · base_collinear, A_coplanar · base_coplanar)`.
pub fn amplified_expected_counts(
    base_collinear: f64,
    base_coplanar: f64,
    amp: &AmplificationFactors,
) -> Result<(f64, f64)> {
    check_nonneg("collinear base count", base_collinear)?;
    check_nonneg("coplanar base count", base_coplanar)?;
    Ok((amp.collinear * base_collinear, amp.coplanar * base_coplanar))
}

/// One row per `N`: random and amplified expectations for collinear triples
/// (tolerance `eps_collinear`) and coplanar quadruples (`eps_coplanar`).
pub fn build_expectation_table(
    n_values: &[u64],
    eps_collinear: f64,
    eps_coplanar: f64,
    amp: &AmplificationFactors,
) -> Result<ExpectationTable> {
    let amp = AmplificationFactors::new(amp.collinear, amp.coplanar)?;
    let rows = n_values
        .iter()
        .map(|&n| {
            if n < 4 {
                return Err(Error::invalid(format!("table rows need N >= 4, got {n}")));
            }
            let collinear_random = expected_collinear(n, eps_collinear)?;
            let coplanar_random = expected_coplanar(n, eps_coplanar)?;
            let (collinear_quantized, coplanar_quantized) =
                amplified_expected_counts(collinear_random, coplanar_random, &amp)?;
            Ok(ExpectationRow {
                n,
                collinear_random,
                collinear_quantized,
                coplanar_random,
                coplanar_quantized,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExpectationTable {
        eps_collinear,
        eps_coplanar,
        amplification: amp,
        rows,
    })
}
