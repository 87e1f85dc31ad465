//! Binary container for [`NgramModel`].
//!
//! Layout, little endian:
//!
//! ```text
//! "SLAB1" | u32 format version
//! u32 order | f64 discount | f64 smoothing | u8 tokenizer
//! u32 vocab size | per token: u32 byte length, UTF-8 bytes
//! per token: u64 unigram count
//! u64 context count | per context (sorted by ids):
//!     u8 length | u32 ids | u32 continuation count | per continuation: u32 id, u64 count
//! "END!"
//! ```

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::dist::TokenId;
use crate::error::{Error, Result};
use crate::lm::ngram::{Continuations, NgramConfig, NgramModel};
use crate::lm::vocab::{Tokenizer, Vocabulary};

pub const MAGIC: &[u8; 5] = b"SLAB1";
pub const FORMAT_VERSION: u32 = 1;
const TRAILER: &[u8; 4] = b"END!";

pub fn save_model(model: &NgramModel, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_model(model, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<NgramModel> {
    let mut r = BufReader::new(File::open(path)?);
    read_model(&mut r)
}

pub fn write_model<W: Write>(model: &NgramModel, w: &mut W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(FORMAT_VERSION)?;
    let cfg = model.config();
    w.write_u32::<LittleEndian>(cfg.order as u32)?;
    w.write_f64::<LittleEndian>(cfg.discount)?;
    w.write_f64::<LittleEndian>(cfg.smoothing)?;
    w.write_u8(model.vocab.tokenizer().code())?;

    w.write_u32::<LittleEndian>(model.vocab.len() as u32)?;
    for tok in model.vocab.tokens() {
        w.write_u32::<LittleEndian>(tok.len() as u32)?;
        w.write_all(tok.as_bytes())?;
    }
    for &c in &model.unigram {
        w.write_u64::<LittleEndian>(c)?;
    }

    let mut keys: Vec<&Box<[TokenId]>> = model.contexts.keys().collect();
    keys.sort();
    w.write_u64::<LittleEndian>(keys.len() as u64)?;
    for key in keys {
        let cont = &model.contexts[key];
        w.write_u8(key.len() as u8)?;
        for &t in key.iter() {
            w.write_u32::<LittleEndian>(t)?;
        }
        w.write_u32::<LittleEndian>(cont.next.len() as u32)?;
        for &(t, c) in &cont.next {
            w.write_u32::<LittleEndian>(t)?;
            w.write_u64::<LittleEndian>(c)?;
        }
    }
    w.write_all(TRAILER)?;
    Ok(())
}

fn corrupt(e: io::Error) -> Error {
    if e.kind() == io::ErrorKind::UnexpectedEof {
        Error::FormatVersionMismatch("file is truncated".into())
    } else {
        Error::Io(e)
    }
}

pub fn read_model<R: Read>(r: &mut R) -> Result<NgramModel> {
    read_inner(r).map_err(|e| match e {
        Error::Io(io) => corrupt(io),
        other => other,
    })
}

fn read_inner<R: Read>(r: &mut R) -> Result<NgramModel> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::FormatVersionMismatch("missing SLAB1 magic".into()));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != FORMAT_VERSION {
        return Err(Error::FormatVersionMismatch(format!(
            "format version {version}, expected {FORMAT_VERSION}"
        )));
    }
    let config = NgramConfig {
        order: r.read_u32::<LittleEndian>()? as usize,
        discount: r.read_f64::<LittleEndian>()?,
        smoothing: r.read_f64::<LittleEndian>()?,
    };
    config
        .validate()
        .map_err(|e| Error::FormatVersionMismatch(e.to_string()))?;
    let tokenizer = Tokenizer::from_code(r.read_u8()?)
        .ok_or_else(|| Error::FormatVersionMismatch("unknown tokenizer code".into()))?;

    let v = r.read_u32::<LittleEndian>()? as usize;
    let mut tokens = Vec::with_capacity(v.min(1 << 20));
    for _ in 0..v {
        let len = r.read_u32::<LittleEndian>()? as usize;
        let mut buf = vec![0u8; len];
        r.read_exact(&mut buf)?;
        tokens.push(
            String::from_utf8(buf).map_err(|_| Error::FormatVersionMismatch("token is not UTF-8".into()))?,
        );
    }
    let vocab = Vocabulary::from_tokens(tokenizer, tokens)?;
    let mut unigram = Vec::with_capacity(v);
    for _ in 0..v {
        unigram.push(r.read_u64::<LittleEndian>()?);
    }

    let n_ctx = r.read_u64::<LittleEndian>()?;
    let mut contexts = HashMap::new();
    for _ in 0..n_ctx {
        let len = r.read_u8()? as usize;
        let mut key = Vec::with_capacity(len);
        for _ in 0..len {
            key.push(r.read_u32::<LittleEndian>()?);
        }
        let n = r.read_u32::<LittleEndian>()? as usize;
        let mut next = Vec::with_capacity(n.min(1 << 20));
        for _ in 0..n {
            let t = r.read_u32::<LittleEndian>()?;
            if t as usize >= v {
                return Err(Error::FormatVersionMismatch(format!("token id {t} out of range")));
            }
            next.push((t, r.read_u64::<LittleEndian>()?));
        }
        let total = next.iter().map(|(_, c)| c).sum();
        contexts.insert(key.into_boxed_slice(), Continuations { total, next });
    }
    let mut trailer = [0u8; 4];
    r.read_exact(&mut trailer)?;
    if &trailer != TRAILER {
        return Err(Error::FormatVersionMismatch("bad trailer".into()));
    }
    Ok(NgramModel::from_parts(config, vocab, unigram, contexts))
}
