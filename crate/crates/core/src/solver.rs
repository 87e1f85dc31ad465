//! Temperature search for a requested entropy.
//!
//! For a fixed distribution the entropy of `p^(1/t)` (renormalized) is
//! strictly increasing in `t` unless `p` is uniform on its support, so the
//! temperature hitting a target entropy can be found by bisection. The search
//! runs on `ln t` because useful temperatures span many orders of magnitude.

use crate::dist::SortedDistribution;
use crate::error::{Error, Result};

/// Two entries closer than this count as tied for the maximum.
pub const MAX_TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop once `|H - E|` is at most this many nats.
    pub entropy_tol: f64,
    /// Stop once the bracket is narrower than this.
    pub width_tol: f64,
    pub max_iterations: usize,
    /// Initial bracket `[t_lo, t_hi]`, widened geometrically as needed.
    pub initial_bracket: (f64, f64),
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            entropy_tol: 1e-6,
            width_tol: 1e-12,
            max_iterations: 200,
            initial_bracket: (1e-4, 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SolverResult {
    pub t_star: f64,
    pub achieved_entropy: f64,
    pub iterations: usize,
    pub bracket: (f64, f64),
}

/// Entropy limits of `p^(1/t)` as `t → 0⁺` and `t → ∞`.
///
/// The lower limit is `ln m` for `m` entries tied with the maximum, the upper
/// limit `ln s` for a positive support of size `s`.
pub fn attainable_entropy_range(dist: &SortedDistribution) -> (f64, f64) {
    attainable_range_of(dist.probs())
}

pub(crate) fn attainable_range_of(probs: &[f64]) -> (f64, f64) {
    let max = probs.iter().copied().fold(0.0, f64::max);
    let ties = probs
        .iter()
        .filter(|&&p| p > 0.0 && (max - p).abs() <= MAX_TIE_TOLERANCE)
        .count();
    let support = probs.iter().filter(|&&p| p > 0.0).count();
    ((ties.max(1) as f64).ln(), (support.max(1) as f64).ln())
}

/// `ln p_i / t` for the positive entries, with their log-sum-exp.
fn scaled_logs(probs: &[f64], t: f64) -> (Vec<f64>, f64) {
    let logs: Vec<f64> = probs
        .iter()
        .map(|&p| if p > 0.0 { p.ln() / t } else { f64::NEG_INFINITY })
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logs
        .iter()
        .filter(|l| l.is_finite())
        .map(|&l| (l - max).exp())
        .sum();
    (logs, max + sum.ln())
}

/// Normalized `p^(1/t)`; zero entries stay zero. Any `t > 0` is accepted.
pub fn temper(probs: &[f64], t: f64) -> Vec<f64> {
    let (logs, lse) = scaled_logs(probs, t);
    logs.iter()
        .map(|&l| if l.is_finite() { (l - lse).exp() } else { 0.0 })
        .collect()
}

/// Entropy of `temper(probs, t)` evaluated in log space.
pub fn tempered_entropy(probs: &[f64], t: f64) -> f64 {
    let (logs, lse) = scaled_logs(probs, t);
    let h: f64 = logs
        .iter()
        .filter(|l| l.is_finite())
        .map(|&l| {
            let neg_log_q = lse - l;
            (-neg_log_q).exp() * neg_log_q
        })
        .sum();
    h.max(0.0)
}

pub fn solve_temperature(dist: &SortedDistribution, target: f64) -> Result<SolverResult> {
    solve_temperature_with(dist.probs(), target, &SolverOptions::default())
}

pub fn solve_temperature_with(
    probs: &[f64],
    target: f64,
    opts: &SolverOptions,
) -> Result<SolverResult> {
    let (h_min, h_max) = attainable_range_of(probs);
    if !(target > h_min && target < h_max) {
        return Err(Error::EntropyUnreachable {
            target,
            min: h_min,
            max: h_max,
        });
    }

    let entropy_at = |t: f64| tempered_entropy(probs, t);
    let done = |t: f64, h: f64, iterations: usize, bracket: (f64, f64)| SolverResult {
        t_star: t,
        achieved_entropy: h,
        iterations,
        bracket,
    };

    let (mut lo, mut hi) = opts.initial_bracket;
    let mut iterations = 0;

    let mut h_hi = entropy_at(hi);
    if (h_hi - target).abs() <= opts.entropy_tol {
        return Ok(done(hi, h_hi, iterations, (lo.min(hi), hi)));
    }
    while h_hi < target {
        iterations += 1;
        if iterations > opts.max_iterations {
            return Err(Error::NoConvergence {
                iterations,
                gap: target - h_hi,
            });
        }
        lo = hi;
        hi *= 2.0;
        h_hi = entropy_at(hi);
        if (h_hi - target).abs() <= opts.entropy_tol {
            return Ok(done(hi, h_hi, iterations, (lo, hi)));
        }
    }
    let mut h_lo = entropy_at(lo);
    if (h_lo - target).abs() <= opts.entropy_tol {
        return Ok(done(lo, h_lo, iterations, (lo, hi)));
    }
    while h_lo > target {
        iterations += 1;
        if iterations > opts.max_iterations {
            return Err(Error::NoConvergence {
                iterations,
                gap: h_lo - target,
            });
        }
        hi = lo;
        lo *= 0.5;
        h_lo = entropy_at(lo);
        if (h_lo - target).abs() <= opts.entropy_tol {
            return Ok(done(lo, h_lo, iterations, (lo, hi)));
        }
    }

    // invariant: H(lo) < target < H(hi)
    loop {
        iterations += 1;
        let mid = (lo * hi).sqrt();
        let h = entropy_at(mid);
        let gap = (h - target).abs();
        if gap <= opts.entropy_tol {
            return Ok(done(mid, h, iterations, (lo, hi)));
        }
        if h < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= opts.width_tol || iterations >= opts.max_iterations {
            return Err(Error::NoConvergence { iterations, gap });
        }
    }
}
