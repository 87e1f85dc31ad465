//! Next-token distributions in rank order.
//!
//! Every transform works on a [`SortedDistribution`]: the probability vector
//! sorted in descending order together with the rank → token id permutation.
//! Transforms produce a [`TransformedDistribution`] whose weights stay aligned
//! with the source ranks, so zeroed entries remain in place and rank `i` of the
//! output can always be compared with rank `i` of the input.

use std::cmp::Ordering;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};

pub type TokenId = u32;

/// Tolerance on the total mass of a constructed distribution.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Tolerance accepted by [`SortedDistribution::from_probs`] before renormalizing.
pub const INPUT_SUM_TOLERANCE: f64 = 1e-6;

/// A probability vector sorted in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedDistribution {
    probs: Vec<f64>,
    perm: Arc<[TokenId]>,
}

/// Output of a transform: rank-aligned weights, not necessarily descending.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedDistribution {
    weights: Vec<f64>,
    perm: Arc<[TokenId]>,
}

impl SortedDistribution {
    /// Softmax of raw model scores, sorted descending.
    pub fn from_logits(logits: &[f64]) -> Result<Self> {
        if logits.is_empty() {
            return Err(Error::NotADistribution("empty logits vector".into()));
        }
        if let Some((index, &value)) = logits.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteLogit { index, value });
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
        let total: f64 = exp.iter().sum();
        Ok(Self::sort_normalized(exp.into_iter().map(|e| e / total).collect()))
    }

    /// Sorts an (approximately) normalized probability vector.
    pub fn from_probs(probs: &[f64]) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::NotADistribution("empty probability vector".into()));
        }
        if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| !(**p >= 0.0) || !p.is_finite()) {
            return Err(Error::NotADistribution(format!("entry {i} is {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > INPUT_SUM_TOLERANCE {
            return Err(Error::NotADistribution(format!("entries sum to {total}")));
        }
        Ok(Self::sort_normalized(probs.iter().map(|p| p / total).collect()))
    }

    /// Builds a distribution from an already-sorted vector and its permutation.
    pub fn from_sorted_parts(probs: Vec<f64>, perm: Vec<TokenId>) -> Result<Self> {
        if probs.is_empty() || probs.len() != perm.len() {
            return Err(Error::LengthMismatch {
                left: probs.len(),
                right: perm.len(),
            });
        }
        if probs.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::NotADistribution("negative or non-finite entry".into()));
        }
        if probs.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::NotADistribution("entries are not in descending order".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::NotADistribution(format!("entries sum to {total}")));
        }
        let mut seen = vec![false; perm.len()];
        for &t in &perm {
            match seen.get_mut(t as usize) {
                Some(s) if !*s => *s = true,
                _ => return Err(Error::NotADistribution("perm is not a permutation".into())),
            }
        }
        Ok(Self {
            probs,
            perm: perm.into(),
        })
    }

    fn sort_normalized(unsorted: Vec<f64>) -> Self {
        let mut order: Vec<TokenId> = (0..unsorted.len() as TokenId).collect();
        order.sort_by(|&a, &b| {
            unsorted[b as usize]
                .partial_cmp(&unsorted[a as usize])
                .unwrap_or(Ordering::Equal)
                .then(a.cmp(&b))
        });
        let probs = order.iter().map(|&i| unsorted[i as usize]).collect();
        Self {
            probs,
            perm: order.into(),
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn perm(&self) -> &[TokenId] {
        &self.perm
    }

    pub(crate) fn shared_perm(&self) -> Arc<[TokenId]> {
        Arc::clone(&self.perm)
    }

    /// Vocabulary size `|V|`.
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn entropy(&self) -> f64 {
        entropy(&self.probs)
    }

    /// Number of strictly positive entries.
    pub fn support_size(&self) -> usize {
        self.probs.iter().take_while(|&&p| p > 0.0).count()
    }

    /// The identity transform of this distribution.
    pub fn to_transformed(&self) -> TransformedDistribution {
        TransformedDistribution {
            weights: self.probs.clone(),
            perm: self.shared_perm(),
        }
    }
}

impl TransformedDistribution {
    /// Normalizes unnormalized rank-aligned mass. The caller guarantees a
    /// positive total.
    pub(crate) fn from_unnormalized(mut weights: Vec<f64>, perm: Arc<[TokenId]>) -> Self {
        debug_assert_eq!(weights.len(), perm.len());
        let total: f64 = weights.iter().sum();
        debug_assert!(total > 0.0 && total.is_finite(), "degenerate mass {total}");
        for w in &mut weights {
            *w /= total;
        }
        Self { weights, perm }
    }

    /// Builds a transformed distribution from explicit weights (e.g. a fixed
    /// mask or noise realization) aligned with `source`'s ranks.
    pub fn from_weights(source: &SortedDistribution, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != source.len() {
            return Err(Error::LengthMismatch {
                left: source.len(),
                right: weights.len(),
            });
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::NotADistribution("negative or non-finite weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > INPUT_SUM_TOLERANCE {
            return Err(Error::NotADistribution(format!("weights sum to {total}")));
        }
        Ok(Self::from_unnormalized(weights, source.shared_perm()))
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn perm(&self) -> &[TokenId] {
        &self.perm
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn entropy(&self) -> f64 {
        entropy(&self.weights)
    }

    /// Weight assigned to a token id (not a rank).
    pub fn token_weight(&self, token: TokenId) -> Option<f64> {
        self.perm
            .iter()
            .position(|&t| t == token)
            .map(|rank| self.weights[rank])
    }

    /// Re-sorts the weights so the result can be fed to another transform.
    pub fn into_sorted(self) -> SortedDistribution {
        let mut ranks: Vec<usize> = (0..self.weights.len()).collect();
        ranks.sort_by(|&a, &b| {
            self.weights[b]
                .partial_cmp(&self.weights[a])
                .unwrap_or(Ordering::Equal)
                .then(self.perm[a].cmp(&self.perm[b]))
        });
        SortedDistribution {
            probs: ranks.iter().map(|&r| self.weights[r]).collect(),
            perm: ranks.iter().map(|&r| self.perm[r]).collect::<Vec<_>>().into(),
        }
    }

    /// Draws a token by inverse CDF over the rank weights.
    ///
    /// Consumes exactly one `f64` from `rng`.
    pub fn sample_token<R: Rng + ?Sized>(&self, rng: &mut R) -> TokenId {
        self.perm[self.sample_rank(rng)]
    }

    pub fn sample_rank<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let total: f64 = self.weights.iter().sum();
        let target = u * total;
        let mut cum = 0.0;
        let mut last_positive = 0;
        for (rank, &w) in self.weights.iter().enumerate() {
            if w > 0.0 {
                cum += w;
                last_positive = rank;
                if cum > target {
                    return rank;
                }
            }
        }
        // rounding left `target` just above the accumulated mass
        last_positive
    }
}

/// Shannon entropy in nats with `0 ln 0 = 0`.
pub fn entropy(p: &[f64]) -> f64 {
    let h: f64 = p
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.ln())
        .sum();
    h.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn from_logits_examples() {
        let d = SortedDistribution::from_logits(&[0.0, 0.0]).unwrap();
        assert_eq!(d.probs(), &[0.5, 0.5]);
        assert_eq!(d.perm(), &[0, 1]);

        let d = SortedDistribution::from_logits(&[4f64.ln(), 1f64.ln()]).unwrap();
        assert_abs_diff_eq!(d.probs()[0], 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(d.probs()[1], 0.2, epsilon = 1e-15);

        let d = SortedDistribution::from_logits(&[1.0; 4]).unwrap();
        assert_eq!(d.probs(), &[0.25; 4]);
        assert_eq!(d.perm(), &[0, 1, 2, 3]);
    }

    #[test]
    fn from_logits_rejects_non_finite() {
        let err = SortedDistribution::from_logits(&[0.0, f64::NAN]).unwrap_err();
        assert!(matches!(err, Error::NonFiniteLogit { index: 1, .. }));
        assert!(SortedDistribution::from_logits(&[f64::INFINITY]).is_err());
        assert!(SortedDistribution::from_logits(&[]).is_err());
    }

    #[test]
    fn from_logits_large_values_are_stable() {
        let d = SortedDistribution::from_logits(&[1000.0, 1000.0, -1000.0]).unwrap();
        assert_abs_diff_eq!(d.probs()[0], 0.5, epsilon = 1e-15);
        assert_eq!(d.probs()[2], 0.0);
    }

    #[test]
    fn from_probs_examples() {
        let d = SortedDistribution::from_probs(&[0.1, 0.9]).unwrap();
        assert_eq!(d.probs(), &[0.9, 0.1]);
        assert_eq!(d.perm(), &[1, 0]);

        let d = SortedDistribution::from_probs(&[0.25; 4]).unwrap();
        assert_eq!(d.probs(), &[0.25; 4]);

        let d = SortedDistribution::from_probs(&[0.2, 0.5, 0.3]).unwrap();
        assert_eq!(d.probs(), &[0.5, 0.3, 0.2]);
        assert_eq!(d.perm(), &[1, 2, 0]);
    }

    #[test]
    fn from_probs_rejects_bad_input() {
        assert!(matches!(
            SortedDistribution::from_probs(&[-0.1, 1.1]),
            Err(Error::NotADistribution(_))
        ));
        assert!(matches!(
            SortedDistribution::from_probs(&[0.5, 0.4]),
            Err(Error::NotADistribution(_))
        ));
        assert!(SortedDistribution::from_probs(&[f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn from_probs_renormalizes_within_tolerance() {
        let d = SortedDistribution::from_probs(&[0.5 + 4e-7, 0.5]).unwrap();
        let total: f64 = d.probs().iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn entropy_examples() {
        assert_abs_diff_eq!(entropy(&[0.25; 4]), 4f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(4f64.ln(), 1.386294, epsilon = 1e-6);
        assert_eq!(entropy(&[1.0, 0.0, 0.0]), 0.0);
        assert_abs_diff_eq!(entropy(&[0.5, 0.25, 0.25]), 1.5 * 2f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(1.5 * 2f64.ln(), 1.039721, epsilon = 1e-6);
    }

    #[test]
    fn from_sorted_parts_validates() {
        assert!(SortedDistribution::from_sorted_parts(vec![0.6, 0.4], vec![1, 0]).is_ok());
        assert!(SortedDistribution::from_sorted_parts(vec![0.4, 0.6], vec![1, 0]).is_err());
        assert!(SortedDistribution::from_sorted_parts(vec![0.6, 0.4], vec![1, 1]).is_err());
        assert!(SortedDistribution::from_sorted_parts(vec![0.6, 0.4], vec![0]).is_err());
    }

    #[test]
    fn sample_degenerate() {
        // a two-rank slice of a larger vocabulary
        let t = TransformedDistribution {
            weights: vec![1.0, 0.0],
            perm: vec![7, 3].into(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            assert_eq!(t.sample_token(&mut rng), 7);
        }
    }

    #[test]
    fn sample_frequencies_half_half() {
        let d = SortedDistribution::from_probs(&[0.5, 0.5]).unwrap().to_transformed();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 1_000_000;
        let hits = (0..n).filter(|_| d.sample_token(&mut rng) == 0).count();
        let freq = hits as f64 / n as f64;
        assert!((freq - 0.5).abs() <= 0.005, "freq {freq}");
    }

    #[test]
    fn sample_is_deterministic_per_seed() {
        let d = SortedDistribution::from_probs(&[0.1, 0.2, 0.3, 0.4]).unwrap().to_transformed();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..200).map(|_| d.sample_token(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
        assert_ne!(draw(9), draw(10));
    }

    #[test]
    fn into_sorted_restores_order() {
        let d = SortedDistribution::from_probs(&[0.1, 0.2, 0.7]).unwrap();
        let t = TransformedDistribution::from_weights(&d, vec![0.2, 0.0, 0.8]).unwrap();
        let s = t.into_sorted();
        assert_eq!(s.probs(), &[0.8, 0.2, 0.0]);
        assert_eq!(s.perm(), &[0, 2, 1]);
    }
}
