//! Distribution transforms applied before each sampling step.
//!
//! Each `apply_*` function takes a [`SortedDistribution`] and returns rank-aligned
//! weights. The stochastic transforms draw from a caller-supplied rng and are
//! deterministic given its state.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dist::{SortedDistribution, TransformedDistribution};
use crate::error::{Error, Result};
use crate::solver::{self, SolverOptions};

/// Give up on a mask-all realization after this many fully masked draws.
const MASK_ALL_MAX_REDRAWS: usize = 1_000_000;

/// A transform name together with its hyperparameters.
///
/// The text form is `name:KEY=value[,KEY=value]`, e.g. `top_k:K=30` or
/// `tempered_top_k:K=500,T=0.8`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TransformSpec {
    TopK { k: usize },
    Nucleus { p: f64 },
    Tempered { t: f64 },
    TemperedTopK { k: usize, t: f64 },
    TargetEntropy { e: f64 },
    RandomMask { r: f64 },
    RandomMaskAll { r: f64 },
    NoisedTopK { k: usize, w: f64 },
    RandomTopK { m: usize },
    MaxEntropy { e: f64 },
}

impl TransformSpec {
    /// The grammar tag, also used as the family name in sweep output.
    pub fn family(&self) -> &'static str {
        match self {
            TransformSpec::TopK { .. } => "top_k",
            TransformSpec::Nucleus { .. } => "nucleus",
            TransformSpec::Tempered { .. } => "tempered",
            TransformSpec::TemperedTopK { .. } => "tempered_top_k",
            TransformSpec::TargetEntropy { .. } => "target_entropy",
            TransformSpec::RandomMask { .. } => "random_mask",
            TransformSpec::RandomMaskAll { .. } => "random_mask_all",
            TransformSpec::NoisedTopK { .. } => "noised_top_k",
            TransformSpec::RandomTopK { .. } => "random_top_k",
            TransformSpec::MaxEntropy { .. } => "max_entropy",
        }
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(
            self,
            TransformSpec::RandomMask { .. }
                | TransformSpec::RandomMaskAll { .. }
                | TransformSpec::NoisedTopK { .. }
                | TransformSpec::RandomTopK { .. }
        )
    }

    /// Range checks that do not depend on the vocabulary size.
    pub fn validate(&self) -> Result<()> {
        match *self {
            TransformSpec::TopK { k } => check_k("K", k),
            TransformSpec::Nucleus { p } => check_unit("P", p),
            TransformSpec::Tempered { t } => check_unit("T", t),
            TransformSpec::TemperedTopK { k, t } => {
                check_k("K", k)?;
                check_unit("T", t)
            }
            TransformSpec::TargetEntropy { e } | TransformSpec::MaxEntropy { e } => {
                if e > 0.0 && e.is_finite() {
                    Ok(())
                } else {
                    Err(Error::out_of_range("E", e, "0 < E <= ln|V|"))
                }
            }
            TransformSpec::RandomMask { r } => check_unit("R", r),
            TransformSpec::RandomMaskAll { r } => {
                if r > 0.0 && r < 1.0 {
                    Ok(())
                } else {
                    Err(Error::out_of_range("R", r, "0 < R < 1 (R = 1 masks every token)"))
                }
            }
            TransformSpec::NoisedTopK { k, w } => {
                check_k("K", k)?;
                if (0.0..=1.0).contains(&w) {
                    Ok(())
                } else {
                    Err(Error::out_of_range("W", w, "0 <= W <= 1"))
                }
            }
            TransformSpec::RandomTopK { m } => check_k("M", m),
        }
    }

    /// Range checks against a vocabulary of `vocab` tokens.
    pub fn validate_for(&self, vocab: usize) -> Result<()> {
        self.validate()?;
        match *self {
            TransformSpec::TopK { k }
            | TransformSpec::TemperedTopK { k, .. }
            | TransformSpec::NoisedTopK { k, .. } => check_k_le("K", k, vocab),
            TransformSpec::RandomTopK { m } => {
                if m < vocab {
                    Ok(())
                } else {
                    Err(Error::out_of_range("M", m as f64, format!("1 <= M < |V| = {vocab}")))
                }
            }
            TransformSpec::TargetEntropy { e } | TransformSpec::MaxEntropy { e } => {
                check_entropy_target(e, vocab)
            }
            _ => Ok(()),
        }
    }
}

fn check_k(name: &'static str, k: usize) -> Result<()> {
    if k >= 1 {
        Ok(())
    } else {
        Err(Error::out_of_range(name, k as f64, format!("{name} >= 1")))
    }
}

fn check_k_le(name: &'static str, k: usize, vocab: usize) -> Result<()> {
    if (1..=vocab).contains(&k) {
        Ok(())
    } else {
        Err(Error::out_of_range(name, k as f64, format!("1 <= {name} <= |V| = {vocab}")))
    }
}

fn check_unit(name: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x <= 1.0 {
        Ok(())
    } else {
        Err(Error::out_of_range(name, x, format!("0 < {name} <= 1")))
    }
}

fn check_entropy_target(e: f64, vocab: usize) -> Result<()> {
    let ceiling = (vocab as f64).ln();
    // `ln|V|` itself is allowed, so leave room for rounding in the caller's value
    if e > 0.0 && e <= ceiling + 1e-12 {
        Ok(())
    } else {
        Err(Error::out_of_range("E", e, format!("0 < E <= ln|V| = {ceiling}")))
    }
}

impl fmt::Display for TransformSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.family())?;
        match *self {
            TransformSpec::TopK { k } => write!(f, "K={k}"),
            TransformSpec::Nucleus { p } => write!(f, "P={p}"),
            TransformSpec::Tempered { t } => write!(f, "T={t}"),
            TransformSpec::TemperedTopK { k, t } => write!(f, "K={k},T={t}"),
            TransformSpec::TargetEntropy { e } | TransformSpec::MaxEntropy { e } => {
                write!(f, "E={e}")
            }
            TransformSpec::RandomMask { r } | TransformSpec::RandomMaskAll { r } => {
                write!(f, "R={r}")
            }
            TransformSpec::NoisedTopK { k, w } => write!(f, "K={k},W={w}"),
            TransformSpec::RandomTopK { m } => write!(f, "M={m}"),
        }
    }
}

impl FromStr for TransformSpec {
    type Err = Error;

    fn from_str(input: &str) -> Result<Self> {
        let fail = |reason: String| Error::SpecParse {
            input: input.to_string(),
            reason,
        };
        let (name, params) = input
            .trim()
            .split_once(':')
            .ok_or_else(|| fail("expected `name:KEY=value`".into()))?;

        let mut pairs: Vec<(String, &str)> = Vec::new();
        for part in params.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| fail(format!("expected KEY=value, got {part:?}")))?;
            let key = key.trim().to_ascii_uppercase();
            if pairs.iter().any(|(k, _)| *k == key) {
                return Err(fail(format!("duplicate key {key}")));
            }
            pairs.push((key, value.trim()));
        }

        let mut take = |key: &str| -> Result<&str> {
            let pos = pairs
                .iter()
                .position(|(k, _)| k == key)
                .ok_or_else(|| fail(format!("missing {key}")))?;
            Ok(pairs.remove(pos).1)
        };
        let int = |s: &str| s.parse::<usize>().map_err(|e| fail(format!("{s:?}: {e}")));
        let real = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| fail(format!("{s:?} is not a finite number")))
        };

        let spec = match name.trim() {
            "top_k" => TransformSpec::TopK { k: int(take("K")?)? },
            "nucleus" => TransformSpec::Nucleus { p: real(take("P")?)? },
            "tempered" => TransformSpec::Tempered { t: real(take("T")?)? },
            "tempered_top_k" => TransformSpec::TemperedTopK {
                k: int(take("K")?)?,
                t: real(take("T")?)?,
            },
            "target_entropy" => TransformSpec::TargetEntropy { e: real(take("E")?)? },
            "random_mask" => TransformSpec::RandomMask { r: real(take("R")?)? },
            "random_mask_all" => TransformSpec::RandomMaskAll { r: real(take("R")?)? },
            "noised_top_k" => TransformSpec::NoisedTopK {
                k: int(take("K")?)?,
                w: real(take("W")?)?,
            },
            "random_top_k" => TransformSpec::RandomTopK { m: int(take("M")?)? },
            "max_entropy" => TransformSpec::MaxEntropy { e: real(take("E")?)? },
            other => return Err(fail(format!("unknown transform {other:?}"))),
        };
        if let Some((key, _)) = pairs.first() {
            return Err(fail(format!("unexpected key {key}")));
        }
        spec.validate()?;
        Ok(spec)
    }
}

impl Serialize for TransformSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TransformSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Keeps the `k` most probable ranks and renormalizes.
pub fn apply_top_k(dist: &SortedDistribution, k: usize) -> Result<TransformedDistribution> {
    check_k_le("K", k, dist.len())?;
    Ok(top_k_unchecked(dist, k))
}

fn top_k_unchecked(dist: &SortedDistribution, k: usize) -> TransformedDistribution {
    let mut weights = vec![0.0; dist.len()];
    weights[..k].copy_from_slice(&dist.probs()[..k]);
    TransformedDistribution::from_unnormalized(weights, dist.shared_perm())
}

/// Keeps rank `i` iff the mass strictly before it is below `p`.
pub fn apply_nucleus(dist: &SortedDistribution, p: f64) -> Result<TransformedDistribution> {
    check_unit("P", p)?;
    let mut weights = vec![0.0; dist.len()];
    let mut before = 0.0;
    for (w, &q) in weights.iter_mut().zip(dist.probs()) {
        if before >= p {
            break;
        }
        *w = q;
        before += q;
    }
    Ok(TransformedDistribution::from_unnormalized(weights, dist.shared_perm()))
}

/// Scales log probabilities by `1/t`, `0 < t <= 1`.
pub fn apply_tempered(dist: &SortedDistribution, t: f64) -> Result<TransformedDistribution> {
    check_unit("T", t)?;
    Ok(tempered_unchecked(dist, t))
}

fn tempered_unchecked(dist: &SortedDistribution, t: f64) -> TransformedDistribution {
    if t == 1.0 {
        return dist.to_transformed();
    }
    TransformedDistribution::from_unnormalized(solver::temper(dist.probs(), t), dist.shared_perm())
}

pub fn apply_tempered_top_k(
    dist: &SortedDistribution,
    k: usize,
    t: f64,
) -> Result<TransformedDistribution> {
    check_k_le("K", k, dist.len())?;
    check_unit("T", t)?;
    let mut weights = vec![0.0; dist.len()];
    if t == 1.0 {
        weights[..k].copy_from_slice(&dist.probs()[..k]);
    } else {
        weights[..k].copy_from_slice(&solver::temper(&dist.probs()[..k], t));
    }
    Ok(TransformedDistribution::from_unnormalized(weights, dist.shared_perm()))
}

/// Tempers with whatever temperature yields entropy `e`, possibly `t > 1`.
pub fn apply_target_entropy(dist: &SortedDistribution, e: f64) -> Result<TransformedDistribution> {
    check_entropy_target(e, dist.len())?;
    retemper_to(dist, e)
}

/// Like [`apply_target_entropy`] but only ever lowers the entropy.
pub fn apply_max_entropy(dist: &SortedDistribution, e: f64) -> Result<TransformedDistribution> {
    check_entropy_target(e, dist.len())?;
    if dist.entropy() <= e {
        return Ok(dist.to_transformed());
    }
    retemper_to(dist, e)
}

fn retemper_to(dist: &SortedDistribution, e: f64) -> Result<TransformedDistribution> {
    let opts = SolverOptions::default();
    if (dist.entropy() - e).abs() <= opts.entropy_tol {
        return Ok(dist.to_transformed());
    }
    let solved = solver::solve_temperature_with(dist.probs(), e, &opts)?;
    Ok(TransformedDistribution::from_unnormalized(
        solver::temper(dist.probs(), solved.t_star),
        dist.shared_perm(),
    ))
}

/// Masks each rank except the first independently with probability `r`.
pub fn apply_random_mask<R: Rng + ?Sized>(
    dist: &SortedDistribution,
    r: f64,
    rng: &mut R,
) -> Result<TransformedDistribution> {
    check_unit("R", r)?;
    let mut weights = dist.probs().to_vec();
    for w in weights.iter_mut().skip(1) {
        let u: f64 = rng.random();
        if u <= r {
            *w = 0.0;
        }
    }
    Ok(TransformedDistribution::from_unnormalized(weights, dist.shared_perm()))
}

/// Masks every rank, including the first, with probability `r`. A draw that
/// masks all positive mass is discarded and redrawn.
pub fn apply_random_mask_all<R: Rng + ?Sized>(
    dist: &SortedDistribution,
    r: f64,
    rng: &mut R,
) -> Result<TransformedDistribution> {
    TransformSpec::RandomMaskAll { r }.validate()?;
    let mut weights = vec![0.0; dist.len()];
    for _ in 0..MASK_ALL_MAX_REDRAWS {
        let mut kept = 0.0;
        for (w, &p) in weights.iter_mut().zip(dist.probs()) {
            let u: f64 = rng.random();
            *w = if u > r { p } else { 0.0 };
            kept += *w;
        }
        if kept > 0.0 {
            return Ok(TransformedDistribution::from_unnormalized(weights, dist.shared_perm()));
        }
    }
    Err(Error::out_of_range(
        "R",
        r,
        format!("every mask in {MASK_ALL_MAX_REDRAWS} draws removed all mass"),
    ))
}

/// Applies a fixed keep/mask realization (`true` keeps the rank).
pub fn apply_mask(dist: &SortedDistribution, keep: &[bool]) -> Result<TransformedDistribution> {
    if keep.len() != dist.len() {
        return Err(Error::LengthMismatch {
            left: dist.len(),
            right: keep.len(),
        });
    }
    let weights: Vec<f64> = dist
        .probs()
        .iter()
        .zip(keep)
        .map(|(&p, &k)| if k { p } else { 0.0 })
        .collect();
    if weights.iter().sum::<f64>() <= 0.0 {
        return Err(Error::NotADistribution("mask removes all mass".into()));
    }
    Ok(TransformedDistribution::from_unnormalized(weights, dist.shared_perm()))
}

/// Uniform draw from the sorted `k`-simplex: normalized unit exponentials,
/// sorted descending.
pub fn sorted_simplex_noise<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    let mut noise: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = noise.iter().sum();
    if total > 0.0 {
        noise.iter_mut().for_each(|x| *x /= total);
    } else {
        noise.iter_mut().for_each(|x| *x = 1.0 / k as f64);
    }
    noise.sort_by(|a, b| b.total_cmp(a));
    noise
}

/// Mixes the top-`k` distribution with a sorted simplex noise draw.
pub fn apply_noised_top_k<R: Rng + ?Sized>(
    dist: &SortedDistribution,
    k: usize,
    w: f64,
    rng: &mut R,
) -> Result<TransformedDistribution> {
    TransformSpec::NoisedTopK { k, w }.validate_for(dist.len())?;
    let noise = sorted_simplex_noise(k, rng);
    apply_noised_top_k_with(dist, k, w, &noise)
}

/// Noised top-`k` with an explicit noise realization.
pub fn apply_noised_top_k_with(
    dist: &SortedDistribution,
    k: usize,
    w: f64,
    noise: &[f64],
) -> Result<TransformedDistribution> {
    TransformSpec::NoisedTopK { k, w }.validate_for(dist.len())?;
    if noise.len() != k {
        return Err(Error::LengthMismatch {
            left: k,
            right: noise.len(),
        });
    }
    let top = top_k_unchecked(dist, k);
    let mut weights = top.weights().to_vec();
    for (x, &n) in weights.iter_mut().zip(noise) {
        *x = (1.0 - w) * *x + w * n;
    }
    Ok(TransformedDistribution::from_unnormalized(weights, dist.shared_perm()))
}

/// `k = floor(1 + m·u)`, `u ~ U[0, 1)`, clamped to `[1, m]`.
pub fn draw_random_k<R: Rng + ?Sized>(m: usize, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    ((1.0 + m as f64 * u).floor() as usize).clamp(1, m)
}

pub fn apply_random_top_k<R: Rng + ?Sized>(
    dist: &SortedDistribution,
    m: usize,
    rng: &mut R,
) -> Result<TransformedDistribution> {
    TransformSpec::RandomTopK { m }.validate_for(dist.len())?;
    let k = draw_random_k(m, rng);
    Ok(top_k_unchecked(dist, k))
}

/// Dispatches on `spec`; only the stochastic transforms touch `rng`.
pub fn apply<R: Rng + ?Sized>(
    spec: &TransformSpec,
    dist: &SortedDistribution,
    rng: &mut R,
) -> Result<TransformedDistribution> {
    match *spec {
        TransformSpec::TopK { k } => apply_top_k(dist, k),
        TransformSpec::Nucleus { p } => apply_nucleus(dist, p),
        TransformSpec::Tempered { t } => apply_tempered(dist, t),
        TransformSpec::TemperedTopK { k, t } => apply_tempered_top_k(dist, k, t),
        TransformSpec::TargetEntropy { e } => apply_target_entropy(dist, e),
        TransformSpec::RandomMask { r } => apply_random_mask(dist, r, rng),
        TransformSpec::RandomMaskAll { r } => apply_random_mask_all(dist, r, rng),
        TransformSpec::NoisedTopK { k, w } => apply_noised_top_k(dist, k, w, rng),
        TransformSpec::RandomTopK { m } => apply_random_top_k(dist, m, rng),
        TransformSpec::MaxEntropy { e } => apply_max_entropy(dist, e),
    }
}
