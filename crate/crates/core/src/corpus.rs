//! Plain-text corpus handling: one sentence per line.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dist::TokenId;
use crate::error::{Error, Result};
use crate::lm::Vocabulary;

const SENTENCE_END: [char; 3] = ['.', '!', '?'];
const CLOSING_QUOTES: [char; 3] = ['"', '”', '’'];
const PUNCTUATION: &str = ".,;:!?\"()[]{}—–_“”‘’*";

/// Reads a UTF-8 corpus with one sentence per line, skipping blank lines.
pub fn read_lines(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let text = fs::read_to_string(path)?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

/// Turns running prose into lowercase sentences, one per entry, with
/// punctuation split off as separate whitespace-delimited tokens.
pub fn prepare_sentences(raw: &str) -> Vec<String> {
    let mut sentences = Vec::new();
    let mut current = String::new();
    let flush = |current: &mut String, out: &mut Vec<String>| {
        let s = current.split_whitespace().collect::<Vec<_>>().join(" ");
        if !s.is_empty() {
            out.push(s);
        }
        current.clear();
    };

    let mut chars = raw.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '\n' || c == '\r' {
            // a blank line closes the paragraph and with it any open sentence
            if chars.peek() == Some(&'\n') || chars.peek() == Some(&'\r') {
                flush(&mut current, &mut sentences);
            }
            current.push(' ');
            continue;
        }
        if PUNCTUATION.contains(c) {
            current.push(' ');
            current.push(c);
            current.push(' ');
        } else {
            current.extend(c.to_lowercase());
        }
        if SENTENCE_END.contains(&c) {
            // closing quotes stay with the sentence they end
            while let Some(&q) = chars.peek().filter(|q| CLOSING_QUOTES.contains(q)) {
                current.push(' ');
                current.push(q);
                chars.next();
            }
            if chars.peek().is_none_or(|n| n.is_whitespace()) {
                flush(&mut current, &mut sentences);
            }
        }
    }
    flush(&mut current, &mut sentences);
    sentences
}

/// One line of a sample file. Token ids win when both fields are present.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Vec<TokenId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

/// Reads a JSON-lines sample file. `{"text": ...}` records need a vocabulary
/// to be tokenized.
pub fn read_samples(path: impl AsRef<Path>, vocab: Option<&Vocabulary>) -> Result<Vec<Vec<TokenId>>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: SampleRecord = serde_json::from_str(line)?;
        let ids = match (rec.tokens, rec.text, vocab) {
            (Some(ids), _, _) => ids,
            (None, Some(t), Some(v)) => v.encode(&t)?,
            (None, Some(_), None) => {
                return Err(Error::Data(format!(
                    "{}:{}: text record but no vocabulary to tokenize it",
                    path.display(),
                    i + 1
                )))
            }
            (None, None, _) => {
                return Err(Error::Data(format!(
                    "{}:{}: record has neither tokens nor text",
                    path.display(),
                    i + 1
                )))
            }
        };
        out.push(ids);
    }
    Ok(out)
}

/// Writes sequences as JSON lines, adding decoded text when a vocabulary is
/// given.
pub fn write_samples<S: AsRef<[TokenId]>>(
    path: impl AsRef<Path>,
    seqs: &[S],
    vocab: Option<&Vocabulary>,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for s in seqs {
        let rec = SampleRecord {
            tokens: Some(s.as_ref().to_vec()),
            text: vocab.map(|v| v.decode(s.as_ref())),
        };
        serde_json::to_writer(&mut w, &rec)?;
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_sentences_and_punctuation() {
        let raw = "Call me Ishmael. Some years ago—never mind how long\nprecisely—having little.\n\nCHAPTER 2\n\nThe Carpet-Bag";
        let s = prepare_sentences(raw);
        assert_eq!(
            s,
            vec![
                "call me ishmael .",
                "some years ago — never mind how long precisely — having little .",
                "chapter 2",
                "the carpet-bag",
            ]
        );
    }

    #[test]
    fn keeps_decimal_points_inside_sentences() {
        let s = prepare_sentences("It cost 3.5 dollars! Yes?");
        assert_eq!(s, vec!["it cost 3 . 5 dollars !", "yes ?"]);
    }

    #[test]
    fn closing_quotes_end_with_their_sentence() {
        let s = prepare_sentences("\"The same!\" cried Stubb. \u{201c}Aye?\u{201d} Then");
        assert_eq!(s, vec!["\" the same ! \"", "cried stubb .", "\u{201c} aye ? \u{201d}", "then"]);
    }

    #[test]
    fn read_lines_skips_blanks() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.txt");
        fs::write(&p, "a b\n\n  c  \n").unwrap();
        assert_eq!(read_lines(&p).unwrap(), vec!["a b", "c"]);
    }

    #[test]
    fn sample_files_round_trip() {
        use crate::lm::Tokenizer;
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.jsonl");
        let vocab = Vocabulary::build(Tokenizer::Whitespace, ["x y z"]);
        let seqs = vec![vocab.encode("x y").unwrap(), vocab.encode("z").unwrap()];
        write_samples(&p, &seqs, Some(&vocab)).unwrap();
        assert_eq!(read_samples(&p, None).unwrap(), seqs);

        fs::write(&p, "{\"text\": \"z x\"}\n\n{\"tokens\": [0]}\n").unwrap();
        assert_eq!(read_samples(&p, Some(&vocab)).unwrap(), vec![vocab.encode("z x").unwrap(), vec![0]]);
        assert!(read_samples(&p, None).is_err());
        fs::write(&p, "{}\n").unwrap();
        assert!(read_samples(&p, Some(&vocab)).is_err());
    }
}
