//! Count-based n-gram model with stupid backoff.
//!
//! The score of `w` after a context is the relative frequency of `w` at the
//! longest context suffix where `w` was observed, times `δ` for every level
//! backed off from the longest suffix seen in training. Scores are normalized
//! per query and mixed with a small uniform mass so that every token of the
//! vocabulary keeps positive probability.

use std::collections::HashMap;

use crate::dist::{SortedDistribution, TokenId};
use crate::error::{Error, Result};
use crate::lm::vocab::Vocabulary;
use crate::lm::LanguageModel;

pub const MAX_ORDER: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NgramConfig {
    pub order: usize,
    /// Backoff factor `δ`, `0 < δ < 1`.
    pub discount: f64,
    /// Uniform mass mixed into every distribution, `0 < λ < 1`.
    pub smoothing: f64,
}

impl Default for NgramConfig {
    fn default() -> Self {
        Self {
            order: 4,
            discount: 0.4,
            smoothing: 1e-6,
        }
    }
}

impl NgramConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_ORDER).contains(&self.order) {
            return Err(Error::Config(format!("n-gram order must be 1..={MAX_ORDER}, got {}", self.order)));
        }
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return Err(Error::Config(format!("discount must be in (0, 1), got {}", self.discount)));
        }
        if !(self.smoothing > 0.0 && self.smoothing < 1.0) {
            return Err(Error::Config(format!("smoothing must be in (0, 1), got {}", self.smoothing)));
        }
        Ok(())
    }
}

/// Continuation counts of one context, sorted by token id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Continuations {
    pub(crate) total: u64,
    pub(crate) next: Vec<(TokenId, u64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NgramModel {
    pub(crate) config: NgramConfig,
    pub(crate) vocab: Vocabulary,
    pub(crate) unigram: Vec<u64>,
    pub(crate) unigram_total: u64,
    pub(crate) contexts: HashMap<Box<[TokenId]>, Continuations>,
    /// Token ids by descending unigram count, ties by ascending id.
    by_unigram: Vec<TokenId>,
}

/// Trains a model over already-encoded sequences.
///
/// Sequences are used as given: append [`crate::lm::EOS`] beforehand if
/// sentence ends should be learned.
pub fn train_ngram(corpus: &[Vec<TokenId>], vocab: Vocabulary, config: NgramConfig) -> Result<NgramModel> {
    config.validate()?;
    if corpus.iter().all(Vec::is_empty) {
        return Err(Error::EmptyCorpus);
    }
    let v = vocab.len();
    let mut unigram = vec![0u64; v];
    let mut raw: HashMap<Box<[TokenId]>, HashMap<TokenId, u64>> = HashMap::new();
    for seq in corpus {
        for (i, &tok) in seq.iter().enumerate() {
            if tok as usize >= v {
                return Err(Error::UnknownToken(tok));
            }
            unigram[tok as usize] += 1;
            for len in 1..config.order.min(i + 1) {
                let ctx = &seq[i - len..i];
                let entry = match raw.get_mut(ctx) {
                    Some(e) => e,
                    None => raw.entry(ctx.into()).or_default(),
                };
                *entry.entry(tok).or_insert(0) += 1;
            }
        }
    }
    let contexts = raw
        .into_iter()
        .map(|(ctx, counts)| {
            let mut next: Vec<(TokenId, u64)> = counts.into_iter().collect();
            next.sort_unstable();
            let total = next.iter().map(|(_, c)| c).sum();
            (ctx, Continuations { total, next })
        })
        .collect();
    Ok(NgramModel::from_parts(config, vocab, unigram, contexts))
}

impl NgramModel {
    /// A model with no vocabulary beyond the reserved tokens and no counts.
    pub fn empty(config: NgramConfig) -> Self {
        Self::from_parts(config, Vocabulary::default(), vec![0, 0], HashMap::new())
    }

    pub(crate) fn from_parts(
        config: NgramConfig,
        vocab: Vocabulary,
        unigram: Vec<u64>,
        contexts: HashMap<Box<[TokenId]>, Continuations>,
    ) -> Self {
        let unigram_total = unigram.iter().sum();
        let mut by_unigram: Vec<TokenId> = (0..unigram.len() as TokenId).collect();
        by_unigram.sort_by(|&a, &b| unigram[b as usize].cmp(&unigram[a as usize]).then(a.cmp(&b)));
        Self {
            config,
            vocab,
            unigram,
            unigram_total,
            contexts,
            by_unigram,
        }
    }

    pub fn config(&self) -> &NgramConfig {
        &self.config
    }

    pub fn order(&self) -> usize {
        self.config.order
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn is_empty(&self) -> bool {
        self.unigram_total == 0
    }

    pub fn context_count(&self) -> usize {
        self.contexts.len()
    }

    fn check_context(&self, context: &[TokenId]) -> Result<()> {
        if self.is_empty() {
            return Err(Error::EmptyModel);
        }
        match context.iter().find(|&&t| t as usize >= self.vocab.len()) {
            Some(&t) => Err(Error::UnknownToken(t)),
            None => Ok(()),
        }
    }

    /// Length of the longest suffix of `context` observed as a context.
    fn matched_len(&self, context: &[TokenId]) -> usize {
        let max = (self.config.order - 1).min(context.len());
        (1..=max)
            .rev()
            .find(|&len| self.contexts.contains_key(&context[context.len() - len..]))
            .unwrap_or(0)
    }

    /// Unnormalized stupid-backoff score of `token` after `context`.
    pub fn score(&self, token: TokenId, context: &[TokenId]) -> Result<f64> {
        self.check_context(context)?;
        if token as usize >= self.vocab.len() {
            return Err(Error::UnknownToken(token));
        }
        let longest = self.matched_len(context);
        let mut factor = 1.0;
        for len in (1..=longest).rev() {
            let cont = &self.contexts[&context[context.len() - len..]];
            if let Ok(i) = cont.next.binary_search_by_key(&token, |&(t, _)| t) {
                return Ok(factor * cont.next[i].1 as f64 / cont.total as f64);
            }
            factor *= self.config.discount;
        }
        Ok(factor * self.unigram[token as usize] as f64 / self.unigram_total as f64)
    }

    /// Next-token distribution over the whole vocabulary.
    pub fn distribution(&self, context: &[TokenId]) -> Result<SortedDistribution> {
        self.check_context(context)?;
        let v = self.vocab.len();
        let longest = self.matched_len(context);
        let delta = self.config.discount;

        let base = delta.powi(longest as i32) / self.unigram_total as f64;
        let mut scores: Vec<f64> = self.unigram.iter().map(|&c| c as f64 * base).collect();
        let mut overridden = vec![false; v];
        let mut touched: Vec<TokenId> = Vec::new();
        for len in 1..=longest {
            let cont = &self.contexts[&context[context.len() - len..]];
            let factor = delta.powi((longest - len) as i32) / cont.total as f64;
            for &(tok, count) in &cont.next {
                scores[tok as usize] = count as f64 * factor;
                if !overridden[tok as usize] {
                    overridden[tok as usize] = true;
                    touched.push(tok);
                }
            }
        }

        let total: f64 = scores.iter().sum();
        let keep = (1.0 - self.config.smoothing) / total;
        let floor = self.config.smoothing / v as f64;
        let prob = |tok: TokenId| scores[tok as usize] * keep + floor;

        // untouched tokens keep unigram order, so only the touched ones need sorting
        touched.sort_by(|&a, &b| prob(b).total_cmp(&prob(a)).then(a.cmp(&b)));
        let mut probs = Vec::with_capacity(v);
        let mut perm = Vec::with_capacity(v);
        let mut rest = self.by_unigram.iter().copied().filter(|&t| !overridden[t as usize]).peekable();
        let mut hot = touched.iter().copied().peekable();
        loop {
            let next = match (hot.peek(), rest.peek()) {
                (Some(&h), Some(&r)) => {
                    let (ph, pr) = (prob(h), prob(r));
                    if ph > pr || (ph == pr && h < r) {
                        hot.next()
                    } else {
                        rest.next()
                    }
                }
                (Some(_), None) => hot.next(),
                (None, Some(_)) => rest.next(),
                (None, None) => break,
            };
            let tok = next.expect("peeked");
            probs.push(prob(tok));
            perm.push(tok);
        }
        // the mixture sums to one up to rounding; fix the last bits
        let sum: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= sum);
        SortedDistribution::from_sorted_parts(probs, perm)
    }
}

impl LanguageModel for NgramModel {
    fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    fn next_distribution(&self, context: &[TokenId]) -> Result<SortedDistribution> {
        self.distribution(context)
    }
}
