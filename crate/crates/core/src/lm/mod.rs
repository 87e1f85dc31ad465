//! Language models that supply the per-step next-token distribution.

mod generate;
pub mod ngram;
pub mod persist;
pub mod replay;
pub mod vocab;

use crate::dist::{SortedDistribution, TokenId};
use crate::error::Result;

pub use generate::{generate, GenerateOptions};
pub use ngram::{train_ngram, NgramConfig, NgramModel};
pub use persist::{load_model, save_model};
pub use replay::{LogitsReplay, ReplayRecord};
pub use vocab::{Tokenizer, Vocabulary, EOS, PAD};

pub trait LanguageModel: Send + Sync {
    fn vocab_size(&self) -> usize;

    /// Distribution of the token following `context`.
    fn next_distribution(&self, context: &[TokenId]) -> Result<SortedDistribution>;
}
