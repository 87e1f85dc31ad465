use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dist::TokenId;
use crate::error::{Error, Result};

pub const EOS: TokenId = 0;
pub const PAD: TokenId = 1;
pub const EOS_TOKEN: &str = "[EOS]";
pub const PAD_TOKEN: &str = "[PAD]";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tokenizer {
    /// Tokens are maximal runs of non-whitespace.
    #[default]
    #[serde(alias = "word")]
    Whitespace,
    /// Every Unicode scalar, spaces included, is a token.
    #[serde(alias = "char")]
    Character,
}

impl Tokenizer {
    pub fn split<'a>(&self, line: &'a str) -> Vec<&'a str> {
        match self {
            Tokenizer::Whitespace => line.split_whitespace().collect(),
            Tokenizer::Character => {
                let line = line.trim();
                line.char_indices()
                    .map(|(i, c)| &line[i..i + c.len_utf8()])
                    .collect()
            }
        }
    }

    pub fn join(&self, tokens: &[&str]) -> String {
        match self {
            Tokenizer::Whitespace => tokens.join(" "),
            Tokenizer::Character => tokens.concat(),
        }
    }

    pub(crate) fn code(&self) -> u8 {
        match self {
            Tokenizer::Whitespace => 0,
            Tokenizer::Character => 1,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Tokenizer::Whitespace),
            1 => Some(Tokenizer::Character),
            _ => None,
        }
    }
}

impl std::str::FromStr for Tokenizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "whitespace" | "word" => Ok(Tokenizer::Whitespace),
            "character" | "char" => Ok(Tokenizer::Character),
            other => Err(Error::Config(format!("unknown tokenizer {other:?}"))),
        }
    }
}

/// Bijection between token strings and ids. Ids 0 and 1 are always
/// `[EOS]` and `[PAD]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    tokenizer: Tokenizer,
    tokens: Vec<String>,
    ids: HashMap<String, TokenId>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::new(Tokenizer::default())
    }
}

impl Vocabulary {
    pub fn new(tokenizer: Tokenizer) -> Self {
        let mut v = Self {
            tokenizer,
            tokens: Vec::new(),
            ids: HashMap::new(),
        };
        v.insert(EOS_TOKEN);
        v.insert(PAD_TOKEN);
        v
    }

    /// Vocabulary of every token in `lines`, ids assigned in first-seen order.
    pub fn build<'a, I>(tokenizer: Tokenizer, lines: I) -> Self
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut v = Self::new(tokenizer);
        for line in lines {
            for tok in tokenizer.split(line) {
                v.insert(tok);
            }
        }
        v
    }

    pub(crate) fn from_tokens(tokenizer: Tokenizer, tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < 2 || tokens[EOS as usize] != EOS_TOKEN || tokens[PAD as usize] != PAD_TOKEN {
            return Err(Error::FormatVersionMismatch("vocabulary lacks reserved tokens".into()));
        }
        let mut ids = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if ids.insert(t.clone(), i as TokenId).is_some() {
                return Err(Error::FormatVersionMismatch(format!("duplicate token {t:?}")));
            }
        }
        Ok(Self { tokenizer, tokens, ids })
    }

    pub fn insert(&mut self, token: &str) -> TokenId {
        if let Some(&id) = self.ids.get(token) {
            return id;
        }
        let id = self.tokens.len() as TokenId;
        self.tokens.push(token.to_string());
        self.ids.insert(token.to_string(), id);
        id
    }

    pub fn tokenizer(&self) -> Tokenizer {
        self.tokenizer
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    /// True when only the reserved tokens are present.
    pub fn is_empty(&self) -> bool {
        self.tokens.len() <= 2
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Encodes a line; fails on tokens outside the vocabulary.
    pub fn encode(&self, line: &str) -> Result<Vec<TokenId>> {
        self.tokenizer
            .split(line)
            .into_iter()
            .map(|t| {
                self.id(t)
                    .ok_or_else(|| Error::Data(format!("token {t:?} is not in the vocabulary")))
            })
            .collect()
    }

    pub fn decode(&self, ids: &[TokenId]) -> String {
        let toks: Vec<&str> = ids
            .iter()
            .map(|&i| self.token(i).unwrap_or("[UNK]"))
            .collect();
        self.tokenizer.join(&toks)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reserved_ids() {
        let v = Vocabulary::build(Tokenizer::Whitespace, ["a b", "b c"]);
        assert_eq!(v.id(EOS_TOKEN), Some(EOS));
        assert_eq!(v.id(PAD_TOKEN), Some(PAD));
        assert_eq!(v.len(), 5);
        assert_eq!(v.encode("c a").unwrap(), vec![4, 2]);
        assert_eq!(v.decode(&[2, 3, 4]), "a b c");
        assert!(v.encode("zzz").is_err());
    }

    #[test]
    fn character_tokens() {
        let v = Vocabulary::build(Tokenizer::Character, ["ab a"]);
        assert_eq!(v.len(), 5);
        let ids = v.encode(" ab a ").unwrap();
        assert_eq!(ids.len(), 4);
        assert_eq!(v.decode(&ids), "ab a");
    }

    #[test]
    fn from_tokens_checks_reserved() {
        assert!(Vocabulary::from_tokens(Tokenizer::Whitespace, vec!["x".into(), "y".into()]).is_err());
        let v = Vocabulary::from_tokens(
            Tokenizer::Whitespace,
            vec![EOS_TOKEN.into(), PAD_TOKEN.into(), "x".into()],
        )
        .unwrap();
        assert_eq!(v.id("x"), Some(2));
    }
}
