//! Quality and diversity metrics over batches of token sequences.
//!
//! * corpus-BLEU: mean sentence BLEU of each generated sequence against a
//!   reference batch (quality);
//! * self-BLEU: corpus-BLEU of a batch against itself, each candidate
//!   excluded from its own references (lower means more diverse);
//! * n-gram entropy: entropy of the pooled n-gram frequencies (diversity).
//!
//! Reference n-gram counts are built once per batch in a [`ReferenceIndex`]
//! and shared by every candidate. Per-candidate scores are computed in
//! parallel and summed in sentence order, so results do not depend on the
//! number of threads.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::TokenId;
use crate::error::{Error, Result};

pub const MAX_BLEU_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BleuConfig {
    /// Highest n-gram order, 1 to 4.
    pub max_n: usize,
    /// Numerator used for a zero match count at orders 2 and up. Zero disables
    /// smoothing.
    pub smoothing_eps: f64,
}

impl Default for BleuConfig {
    fn default() -> Self {
        Self {
            max_n: 4,
            smoothing_eps: 0.1,
        }
    }
}

impl BleuConfig {
    pub fn with_max_n(max_n: usize) -> Self {
        Self {
            max_n,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(1..=MAX_BLEU_ORDER).contains(&self.max_n) {
            return Err(Error::Config(format!("BLEU max_n must be 1..=4, got {}", self.max_n)));
        }
        if !(self.smoothing_eps >= 0.0) {
            return Err(Error::Config("BLEU smoothing must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Generated,
    Reference,
}

/// A nonempty batch of nonempty token sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    sequences: Vec<Vec<TokenId>>,
    pub provenance: Provenance,
    pub seed: Option<u64>,
    pub label: Option<String>,
}

impl SampleBatch {
    pub fn new(sequences: Vec<Vec<TokenId>>, provenance: Provenance) -> Result<Self> {
        if sequences.is_empty() {
            return Err(Error::EmptyInput("sample batch has no sequences"));
        }
        if sequences.iter().any(Vec::is_empty) {
            return Err(Error::EmptyInput("sample batch contains an empty sequence"));
        }
        Ok(Self {
            sequences,
            provenance,
            seed: None,
            label: None,
        })
    }

    pub fn sequences(&self) -> &[Vec<TokenId>] {
        &self.sequences
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn into_sequences(self) -> Vec<Vec<TokenId>> {
        self.sequences
    }
}

/// An n-gram of at most four tokens packed into one word.
type Key = u128;

fn pack(gram: &[TokenId]) -> Key {
    gram.iter().fold(0, |acc, &t| (acc << 32) | t as Key)
}

/// The two largest per-reference counts of one n-gram.
#[derive(Debug, Clone, Copy)]
struct TopCounts {
    best: u32,
    owner: usize,
    second: u32,
}

impl TopCounts {
    fn excluding(&self, who: Option<usize>) -> u32 {
        if who == Some(self.owner) {
            self.second
        } else {
            self.best
        }
    }
}

/// Reference-side n-gram statistics shared across candidates.
#[derive(Debug, Clone)]
pub struct ReferenceIndex {
    max_n: usize,
    /// `tables[n - 1]` maps an n-gram to its largest counts in any one reference.
    tables: Vec<HashMap<Key, TopCounts>>,
    lengths: Vec<usize>,
    length_counts: BTreeMap<usize, usize>,
}

impl ReferenceIndex {
    pub fn new<S: AsRef<[TokenId]>>(refs: &[S], max_n: usize) -> Result<Self> {
        BleuConfig::with_max_n(max_n).validate()?;
        if refs.is_empty() {
            return Err(Error::EmptyInput("reference batch is empty"));
        }
        let mut tables: Vec<HashMap<Key, TopCounts>> = vec![HashMap::new(); max_n];
        let mut local: HashMap<Key, u32> = HashMap::new();
        let mut lengths = Vec::with_capacity(refs.len());
        let mut length_counts = BTreeMap::new();
        for (owner, r) in refs.iter().enumerate() {
            let r = r.as_ref();
            lengths.push(r.len());
            *length_counts.entry(r.len()).or_insert(0) += 1;
            for (n, table) in (1..=max_n).zip(tables.iter_mut()) {
                local.clear();
                for gram in r.windows(n) {
                    *local.entry(pack(gram)).or_insert(0) += 1;
                }
                for (&key, &count) in &local {
                    let top = table.entry(key).or_insert(TopCounts {
                        best: 0,
                        owner: usize::MAX,
                        second: 0,
                    });
                    if count > top.best {
                        top.second = top.best;
                        top.best = count;
                        top.owner = owner;
                    } else if count > top.second {
                        top.second = count;
                    }
                }
            }
        }
        Ok(Self {
            max_n,
            tables,
            lengths,
            length_counts,
        })
    }

    pub fn len(&self) -> usize {
        self.lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lengths.is_empty()
    }

    /// Reference length closest to `c`, shorter on ties, optionally ignoring
    /// reference `exclude`.
    fn closest_length(&self, c: usize, exclude: Option<usize>) -> Option<usize> {
        let skip = exclude.map(|i| self.lengths[i]);
        let usable = |(&len, &count): (&usize, &usize)| {
            let count = if Some(len) == skip { count - 1 } else { count };
            (count > 0).then_some(len)
        };
        let below = self.length_counts.range(..=c).rev().find_map(usable);
        let above = self.length_counts.range(c + 1..).find_map(usable);
        match (below, above) {
            (Some(b), Some(a)) => Some(if c - b <= a - c { b } else { a }),
            (b, a) => b.or(a),
        }
    }

    /// Sentence BLEU of `candidate`, leaving reference `exclude` out.
    pub fn score(&self, candidate: &[TokenId], exclude: Option<usize>, cfg: &BleuConfig) -> Result<f64> {
        if candidate.is_empty() {
            return Err(Error::EmptyInput("candidate is empty"));
        }
        if cfg.max_n > self.max_n {
            return Err(Error::Config(format!(
                "index built for max_n={} but scoring asked for {}",
                self.max_n, cfg.max_n
            )));
        }
        let r = self
            .closest_length(candidate.len(), exclude)
            .ok_or(Error::EmptyInput("no references left after exclusion"))?;

        let c = candidate.len();
        let orders = cfg.max_n.min(c);
        let mut log_sum = 0.0;
        let mut local: HashMap<Key, u32> = HashMap::new();
        for n in 1..=orders {
            local.clear();
            for gram in candidate.windows(n) {
                *local.entry(pack(gram)).or_insert(0) += 1;
            }
            let table = &self.tables[n - 1];
            let matched: u32 = local
                .iter()
                .map(|(key, &count)| {
                    table
                        .get(key)
                        .map_or(0, |top| count.min(top.excluding(exclude)))
                })
                .sum();
            let total = (c - n + 1) as f64;
            let numerator = if matched > 0 {
                matched as f64
            } else if n >= 2 && cfg.smoothing_eps > 0.0 {
                cfg.smoothing_eps
            } else {
                return Ok(0.0);
            };
            log_sum += (numerator / total).ln();
        }
        let brevity = (1.0 - r as f64 / c as f64).min(0.0);
        Ok((log_sum / orders as f64 + brevity).exp())
    }

    /// Mean sentence BLEU of every sequence in `gen` against this index.
    pub fn corpus_bleu<G: AsRef<[TokenId]> + Sync>(&self, gen: &[G], cfg: &BleuConfig) -> Result<f64> {
        cfg.validate()?;
        if gen.is_empty() {
            return Err(Error::EmptyInput("generated batch is empty"));
        }
        let scores = gen
            .par_iter()
            .map(|g| self.score(g.as_ref(), None, cfg))
            .collect::<Result<Vec<f64>>>()?;
        Ok(mean_in_order(scores))
    }
}

pub fn sentence_bleu(candidate: &[TokenId], refs: &SampleBatch, cfg: &BleuConfig) -> Result<f64> {
    cfg.validate()?;
    ReferenceIndex::new(refs.sequences(), cfg.max_n)?.score(candidate, None, cfg)
}

fn mean_in_order(scores: Vec<f64>) -> f64 {
    let n = scores.len() as f64;
    scores.into_iter().sum::<f64>() / n
}

/// Mean sentence BLEU of every generated sequence against `refs`.
pub fn corpus_bleu<G, R>(gen: &[G], refs: &[R], cfg: &BleuConfig) -> Result<f64>
where
    G: AsRef<[TokenId]> + Sync,
    R: AsRef<[TokenId]>,
{
    cfg.validate()?;
    if gen.is_empty() {
        return Err(Error::EmptyInput("generated batch is empty"));
    }
    ReferenceIndex::new(refs, cfg.max_n)?.corpus_bleu(gen, cfg)
}

/// corpus-BLEU of a batch against itself with each candidate removed from its
/// own reference set.
pub fn self_bleu<G>(gen: &[G], cfg: &BleuConfig) -> Result<f64>
where
    G: AsRef<[TokenId]> + Sync,
{
    cfg.validate()?;
    if gen.len() < 2 {
        return Err(Error::EmptyInput("self-BLEU needs at least two sequences"));
    }
    let index = ReferenceIndex::new(gen, cfg.max_n)?;
    let scores = gen
        .par_iter()
        .enumerate()
        .map(|(i, g)| index.score(g.as_ref(), Some(i), cfg))
        .collect::<Result<Vec<f64>>>()?;
    Ok(mean_in_order(scores))
}

/// Entropy in nats of the pooled n-gram frequencies of a batch.
pub fn ngram_entropy<G: AsRef<[TokenId]>>(gen: &[G], n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Config("n-gram order must be at least 1".into()));
    }
    let mut counts: HashMap<&[TokenId], u64> = HashMap::new();
    for s in gen {
        for gram in s.as_ref().windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    if counts.is_empty() {
        return Err(Error::NoNgrams(n));
    }
    let mut values: Vec<u64> = counts.into_values().collect();
    values.sort_unstable();
    let total = values.iter().sum::<u64>() as f64;
    let h: f64 = values
        .iter()
        .map(|&c| {
            let r = c as f64 / total;
            -r * r.ln()
        })
        .sum();
    Ok(h.max(0.0))
}
