//! Pre-recorded logits from an external model.
//!
//! JSON lines: a header `{"vocab_size": N}` followed by records
//! `{"context": [ids], "logits": [reals]}`. Queries must match a recorded
//! context exactly.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dist::{SortedDistribution, TokenId};
use crate::error::{Error, Result};
use crate::lm::LanguageModel;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    vocab_size: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ReplayRecord {
    pub context: Vec<TokenId>,
    pub logits: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LogitsReplay {
    vocab_size: usize,
    records: HashMap<Vec<TokenId>, SortedDistribution>,
}

impl LogitsReplay {
    pub fn from_records(vocab_size: usize, records: Vec<ReplayRecord>) -> Result<Self> {
        if vocab_size == 0 {
            return Err(Error::Data("replay vocab_size must be positive".into()));
        }
        let mut map = HashMap::with_capacity(records.len());
        for (i, rec) in records.into_iter().enumerate() {
            if rec.logits.len() != vocab_size {
                return Err(Error::Data(format!(
                    "record {i}: {} logits for vocab_size {vocab_size}",
                    rec.logits.len()
                )));
            }
            if let Some(&t) = rec.context.iter().find(|&&t| t as usize >= vocab_size) {
                return Err(Error::UnknownToken(t));
            }
            let dist = SortedDistribution::from_logits(&rec.logits)?;
            if map.insert(rec.context.clone(), dist).is_some() {
                return Err(Error::Data(format!("record {i}: duplicate context {:?}", rec.context)));
            }
        }
        Ok(Self {
            vocab_size,
            records: map,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header: Header = serde_json::from_str(
            lines
                .next()
                .ok_or_else(|| Error::Data("replay file is empty".into()))?,
        )?;
        let records = lines
            .map(serde_json::from_str)
            .collect::<std::result::Result<Vec<ReplayRecord>, _>>()?;
        Self::from_records(header.vocab_size, records)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    /// Writes the header and records in the replay format.
    pub fn write_records<W: Write>(w: &mut W, vocab_size: usize, records: &[ReplayRecord]) -> Result<()> {
        serde_json::to_writer(&mut *w, &Header { vocab_size })?;
        writeln!(w)?;
        for r in records {
            serde_json::to_writer(&mut *w, r)?;
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

impl LanguageModel for LogitsReplay {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn next_distribution(&self, context: &[TokenId]) -> Result<SortedDistribution> {
        self.records
            .get(context)
            .cloned()
            .ok_or_else(|| Error::ReplayMiss(context.to_vec()))
    }
}
