//! Numerical checks for entropy reduction, order preservation and slope
//! preservation, plus executable forms of the two entropy lemmas behind them.

use rand::Rng;
use serde::Serialize;

use crate::dist::{entropy, SortedDistribution, TransformedDistribution};
use crate::error::{Error, Result};
use crate::solver::{attainable_range_of, tempered_entropy};
use crate::transforms::{self, TransformSpec};

/// Slack allowed on the "entropy did not go up" side.
pub const ENTROPY_TOLERANCE: f64 = 1e-9;
/// Smallest entropy drop counted as a strict decrease.
pub const STRICT_DECREASE: f64 = 1e-12;
/// Elementwise distance under which a transform is treated as the identity.
pub const IDENTITY_TOLERANCE: f64 = 1e-12;
pub const ORDER_TOLERANCE: f64 = 1e-12;
pub const SLOPE_TOLERANCE: f64 = 1e-8;
/// Step for the central differences in [`verify_temperature_monotonicity`].
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyCheck {
    pub before: f64,
    pub after: f64,
    /// Passed: no increase beyond tolerance, and either a strict drop or the identity.
    pub reduced: bool,
    pub strictly_reduced: bool,
    pub identity: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderCheck {
    /// `max over i < j of max(0, after[j] - after[i])`.
    pub worst_violation: f64,
    /// Ranks `(i, j)` attaining the worst violation, if any is positive.
    pub worst_pair: Option<(usize, usize)>,
    pub preserved: bool,
}

/// Least-squares fit `ln(after_i) ≈ a·ln(before_i) + b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    pub a: f64,
    pub b: f64,
    pub max_residual: f64,
    /// Number of ranks in the shared support the fit ran over.
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeCheck {
    pub fit: SlopeFit,
    pub preserved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub spec: String,
    pub entropy_before: f64,
    pub entropy_after: f64,
    pub entropy_reduced: bool,
    pub strictly_reduced: bool,
    pub identity: bool,
    pub worst_order_violation: f64,
    pub order_preserved: bool,
    pub slope_fit: SlopeFit,
    pub slope_preserved: bool,
}

impl PropertyReport {
    pub fn all_hold(&self) -> bool {
        self.entropy_reduced && self.order_preserved && self.slope_preserved
    }
}

fn same_len(before: &SortedDistribution, after: &TransformedDistribution) -> Result<()> {
    if before.len() == after.len() {
        Ok(())
    } else {
        Err(Error::LengthMismatch {
            left: before.len(),
            right: after.len(),
        })
    }
}

pub fn check_entropy_reduction(
    before: &SortedDistribution,
    after: &TransformedDistribution,
) -> Result<EntropyCheck> {
    same_len(before, after)?;
    let h_before = before.entropy();
    let h_after = after.entropy();
    let identity = before
        .probs()
        .iter()
        .zip(after.weights())
        .all(|(p, q)| (p - q).abs() <= IDENTITY_TOLERANCE);
    let strictly_reduced = h_before - h_after > STRICT_DECREASE;
    Ok(EntropyCheck {
        before: h_before,
        after: h_after,
        reduced: h_after <= h_before + ENTROPY_TOLERANCE && (strictly_reduced || identity),
        strictly_reduced,
        identity,
    })
}

/// `before` is sorted, so order preservation reduces to the transformed
/// weights being non-increasing in rank.
pub fn check_order_preservation(
    before: &SortedDistribution,
    after: &TransformedDistribution,
) -> Result<OrderCheck> {
    same_len(before, after)?;
    let w = after.weights();
    let mut worst = 0.0;
    let mut worst_pair = None;
    let mut suffix_max = f64::NEG_INFINITY;
    let mut suffix_arg = 0;
    for i in (0..w.len()).rev() {
        if suffix_max - w[i] > worst {
            worst = suffix_max - w[i];
            worst_pair = Some((i, suffix_arg));
        }
        if w[i] > suffix_max {
            suffix_max = w[i];
            suffix_arg = i;
        }
    }
    Ok(OrderCheck {
        worst_violation: worst,
        worst_pair,
        preserved: worst <= ORDER_TOLERANCE,
    })
}

/// Equal triple log-ratios on the surviving support are equivalent to
/// `ln(after)` being affine in `ln(before)` there, which is checked by a
/// least-squares fit. Subnormal entries are left out: their logarithms carry
/// only a few significant bits.
pub fn check_slope_preservation(
    before: &SortedDistribution,
    after: &TransformedDistribution,
) -> Result<SlopeCheck> {
    same_len(before, after)?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = before
        .probs()
        .iter()
        .zip(after.weights())
        .filter(|(p, q)| **p >= f64::MIN_POSITIVE && **q >= f64::MIN_POSITIVE)
        .map(|(p, q)| (p.ln(), q.ln()))
        .unzip();
    let fit = affine_fit(&xs, &ys);
    Ok(SlopeCheck {
        preserved: fit.max_residual <= SLOPE_TOLERANCE,
        fit,
    })
}

fn affine_fit(xs: &[f64], ys: &[f64]) -> SlopeFit {
    let n = xs.len();
    if n < 3 {
        return SlopeFit {
            a: 1.0,
            b: 0.0,
            max_residual: 0.0,
            points: n,
        };
    }
    let mean_x = xs.iter().sum::<f64>() / n as f64;
    let mean_y = ys.iter().sum::<f64>() / n as f64;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    // all x tied: no slope to speak of, fit a constant
    let a = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let b = mean_y - a * mean_x;
    let max_residual = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - (a * x + b)).abs())
        .fold(0.0, f64::max);
    SlopeFit {
        a,
        b,
        max_residual,
        points: n,
    }
}

/// Applies `spec` once and runs all three checks on the result.
pub fn full_report<R: Rng + ?Sized>(
    spec: &TransformSpec,
    dist: &SortedDistribution,
    rng: &mut R,
) -> Result<PropertyReport> {
    let after = transforms::apply(spec, dist, rng)?;
    report_for(spec.to_string(), dist, &after)
}

/// Runs all three checks on an already transformed distribution.
pub fn report_for(
    label: String,
    before: &SortedDistribution,
    after: &TransformedDistribution,
) -> Result<PropertyReport> {
    let e = check_entropy_reduction(before, after)?;
    let o = check_order_preservation(before, after)?;
    let s = check_slope_preservation(before, after)?;
    Ok(PropertyReport {
        spec: label,
        entropy_before: e.before,
        entropy_after: e.after,
        entropy_reduced: e.reduced,
        strictly_reduced: e.strictly_reduced,
        identity: e.identity,
        worst_order_violation: o.worst_violation,
        order_preserved: o.preserved,
        slope_fit: s.fit,
        slope_preserved: s.preserved,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationTrace {
    /// Entropy after removing 0, 1, 2, ... tail tokens, computed directly.
    pub entropies: Vec<f64>,
    /// `H(before removal) - H(after removal)` per step, in a cancellation-free form.
    pub drops: Vec<f64>,
    pub holds: bool,
}

/// Removes the least probable token and renormalizes, repeatedly, down to a
/// single token; checks that every removal strictly lowers the entropy.
///
/// Runs on the positive support. With `x` the renormalized mass of the removed
/// token and `H'` the entropy of what is left, the drop equals
/// `-x ln x - (1-x) ln(1-x) - x H'`, which stays accurate when `x` is far too
/// small for a direct difference of entropies to resolve.
pub fn verify_truncation_lemma(dist: &SortedDistribution) -> TruncationTrace {
    let support = &dist.probs()[..dist.support_size()];
    let normalized = |k: usize| -> Vec<f64> {
        let total: f64 = support[..k].iter().sum();
        support[..k].iter().map(|p| p / total).collect()
    };

    let mut entropies = vec![entropy(&normalized(support.len()))];
    let mut drops = Vec::new();
    for k in (1..support.len()).rev() {
        let total: f64 = support[..=k].iter().sum();
        let x = support[k] / total;
        let rest = entropy(&normalized(k));
        let drop = -x * x.ln() - (1.0 - x) * (-x).ln_1p() - x * rest;
        drops.push(drop);
        entropies.push(rest);
    }
    let direct_monotone = entropies.windows(2).all(|w| w[1] <= w[0] + STRICT_DECREASE);
    TruncationTrace {
        holds: direct_monotone && drops.iter().all(|&d| d > 0.0),
        entropies,
        drops,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityTrace {
    pub temperatures: Vec<f64>,
    pub entropies: Vec<f64>,
    /// Central difference quotients of `H(T)` at each grid point.
    pub slopes: Vec<f64>,
    pub holds: bool,
}

/// Checks that the entropy of the tempered distribution strictly increases
/// along an ascending temperature grid and has a positive central difference
/// quotient at every grid point.
pub fn verify_temperature_monotonicity(
    dist: &SortedDistribution,
    grid: &[f64],
) -> Result<MonotonicityTrace> {
    let (h_min, h_max) = attainable_range_of(dist.probs());
    if h_max - h_min <= 0.0 {
        return Err(Error::UniformInput);
    }
    if grid.is_empty() || grid.iter().any(|&t| !(t > FD_STEP) || !t.is_finite()) {
        return Err(Error::Config(format!(
            "temperature grid must be nonempty with every T > {FD_STEP}"
        )));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("temperature grid must be strictly ascending".into()));
    }
    let probs = dist.probs();
    let entropies: Vec<f64> = grid.iter().map(|&t| tempered_entropy(probs, t)).collect();
    let slopes: Vec<f64> = grid
        .iter()
        .map(|&t| {
            (tempered_entropy(probs, t + FD_STEP) - tempered_entropy(probs, t - FD_STEP))
                / (2.0 * FD_STEP)
        })
        .collect();
    let holds = entropies.windows(2).all(|w| w[1] > w[0]) && slopes.iter().all(|&s| s > 0.0);
    Ok(MonotonicityTrace {
        temperatures: grid.to_vec(),
        entropies,
        slopes,
        holds,
    })
}
