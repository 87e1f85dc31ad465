use rand::Rng;

use crate::dist::TokenId;
use crate::error::{Error, Result};
use crate::lm::{LanguageModel, EOS};
use crate::transforms::{self, TransformSpec};

/// Completion length window and retry budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenerateOptions {
    pub min_len: usize,
    pub max_len: usize,
    pub max_attempts: usize,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        Self {
            min_len: 40,
            max_len: 50,
            max_attempts: 100,
        }
    }
}

/// Samples a completion of `prefix` token by token through `spec`.
///
/// A completion ends at `[EOS]` (not included) or after `max_len` tokens.
/// Completions shorter than `min_len` are discarded and regenerated. Returns
/// the prefix followed by the accepted completion.
pub fn generate<M, R>(
    model: &M,
    prefix: &[TokenId],
    spec: &TransformSpec,
    rng: &mut R,
    opts: &GenerateOptions,
) -> Result<Vec<TokenId>>
where
    M: LanguageModel + ?Sized,
    R: Rng + ?Sized,
{
    if prefix.is_empty() {
        return Err(Error::EmptyInput("generation prefix is empty"));
    }
    if opts.min_len > opts.max_len {
        return Err(Error::Config(format!(
            "min_len {} exceeds max_len {}",
            opts.min_len, opts.max_len
        )));
    }
    spec.validate_for(model.vocab_size())?;

    let mut seq = Vec::with_capacity(prefix.len() + opts.max_len);
    for _ in 0..opts.max_attempts {
        seq.clear();
        seq.extend_from_slice(prefix);
        while seq.len() - prefix.len() < opts.max_len {
            let dist = model.next_distribution(&seq)?;
            let token = transforms::apply(spec, &dist, rng)?.sample_token(rng);
            if token == EOS {
                break;
            }
            seq.push(token);
        }
        if seq.len() - prefix.len() >= opts.min_len {
            return Ok(seq);
        }
    }
    Err(Error::RetryExhausted {
        attempts: opts.max_attempts,
        min_len: opts.min_len,
        max_len: opts.max_len,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lm::ngram::{train_ngram, NgramConfig, NgramModel};
    use crate::lm::vocab::{Tokenizer, Vocabulary};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const CHAIN: &str = "one two three four five six seven eight nine ten eleven twelve";

    fn chain_model(lines: &[&str]) -> NgramModel {
        let vocab = Vocabulary::build(Tokenizer::Whitespace, lines.iter().copied());
        let corpus: Vec<Vec<TokenId>> = lines
            .iter()
            .map(|l| {
                let mut ids = vocab.encode(l).unwrap();
                ids.push(EOS);
                ids
            })
            .collect();
        train_ngram(&corpus, vocab, NgramConfig::default()).unwrap()
    }

    #[test]
    fn greedy_reproduces_deterministic_chain() {
        let m = chain_model(&[CHAIN]);
        let prefix = m.vocab().encode("one two").unwrap();
        let opts = GenerateOptions {
            min_len: 1,
            max_len: 50,
            max_attempts: 1,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = generate(&m, &prefix, &TransformSpec::TopK { k: 1 }, &mut rng, &opts).unwrap();
        assert_eq!(m.vocab().decode(&out), CHAIN);
    }

    #[test]
    fn same_seed_same_output() {
        let m = chain_model(&["a b c a b d", "b c a d d a", "c a b b a c"]);
        let prefix = m.vocab().encode("a").unwrap();
        let opts = GenerateOptions {
            min_len: 3,
            max_len: 8,
            max_attempts: 100,
        };
        let spec = TransformSpec::Tempered { t: 1.0 };
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..20)
                .map(|_| generate(&m, &prefix, &spec, &mut rng, &opts).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(11), run(11));
        for s in run(11) {
            let completion = s.len() - prefix.len();
            assert!((3..=8).contains(&completion));
            assert!(s.iter().all(|&t| (t as usize) < m.vocab().len()));
        }
    }

    #[test]
    fn retries_exhaust_on_impossible_window() {
        let m = chain_model(&["a b"]);
        let prefix = m.vocab().encode("a").unwrap();
        let opts = GenerateOptions {
            min_len: 5,
            max_len: 6,
            max_attempts: 10,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = generate(&m, &prefix, &TransformSpec::TopK { k: 1 }, &mut rng, &opts).unwrap_err();
        assert!(matches!(err, Error::RetryExhausted { attempts: 10, .. }));
    }

    #[test]
    fn rejects_bad_arguments() {
        let m = chain_model(&["a b"]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let spec = TransformSpec::TopK { k: 1 };
        assert!(generate(&m, &[], &spec, &mut rng, &GenerateOptions::default()).is_err());
        let bad = GenerateOptions {
            min_len: 5,
            max_len: 4,
            max_attempts: 1,
        };
        assert!(generate(&m, &[2], &spec, &mut rng, &bad).is_err());
        let too_big = TransformSpec::TopK { k: 99 };
        assert!(generate(&m, &[2], &too_big, &mut rng, &GenerateOptions::default()).is_err());
    }
}
