//! Quality-diversity sweeps: generate a batch per transform setting, score it,
//! and collect one row per setting plus a gold row from held-out text.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus;
use crate::dist::TokenId;
use crate::error::{Error, Result};
use crate::lm::{
    self, generate, GenerateOptions, LanguageModel, LogitsReplay, NgramConfig, Tokenizer, Vocabulary, EOS,
};
use crate::metrics::{self, BleuConfig, ReferenceIndex};
use crate::transforms::TransformSpec;

pub const GIGAWORD_SPLIT: [f64; 3] = [0.80, 0.15, 0.05];
pub const WIKITEXT_SPLIT: [f64; 3] = [0.97, 0.015, 0.015];
pub const DESK_SAMPLES: usize = 1_000;
pub const PAPER_SAMPLES: usize = 10_000;

pub const CSV_HEADER: &str =
    "family,spec,quality_corpus_bleu,diversity_self_bleu,diversity_ngram_entropy,n_samples,seed";

/// Contiguous train / validation / test split in corpus order.
///
/// Split sizes are the floors of `fraction * len`, except that the last
/// nonzero split absorbs what is left when the fractions sum to 1.
pub fn split_corpus<T: Clone>(corpus: &[T], fractions: [f64; 3]) -> Result<(Vec<T>, Vec<T>, Vec<T>)> {
    let sum: f64 = fractions.iter().sum();
    if fractions.iter().any(|f| !(*f >= 0.0) || !f.is_finite()) || sum > 1.0 + 1e-9 {
        return Err(Error::Config(format!(
            "split fractions must be non-negative and sum to at most 1, got {fractions:?}"
        )));
    }
    let n = corpus.len();
    // rounding guards against 0.8 * 100 landing on 79.999...
    let size = |f: f64| ((f * n as f64) + 1e-9).floor() as usize;
    let train = size(fractions[0]);
    let valid = size(fractions[1]);
    let test = if (sum - 1.0).abs() <= 1e-9 {
        n - train - valid
    } else {
        size(fractions[2])
    };
    if valid == 0 || test == 0 {
        return Err(Error::Config(format!(
            "split {fractions:?} of {n} lines leaves an empty validation or test split"
        )));
    }
    Ok((
        corpus[..train].to_vec(),
        corpus[train..train + valid].to_vec(),
        corpus[train + valid..train + valid + test].to_vec(),
    ))
}

/// What a row was generated with.
#[derive(Debug, Clone, PartialEq)]
pub enum Setting {
    Transform(TransformSpec),
    Gold,
}

impl Setting {
    pub fn family(&self) -> &'static str {
        match self {
            Setting::Transform(s) => s.family(),
            Setting::Gold => "gold",
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Setting::Transform(s) => s.fmt(f),
            Setting::Gold => f.write_str("gold"),
        }
    }
}

impl FromStr for Setting {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "gold" {
            Ok(Setting::Gold)
        } else {
            s.parse().map(Setting::Transform)
        }
    }
}

/// One row of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct QDPoint {
    pub setting: Setting,
    pub quality: f64,
    pub diversity_self_bleu: f64,
    pub diversity_ngram_entropy: f64,
    pub n_samples: usize,
    pub seed: u64,
}

/// Transform rows in grid order followed by the gold row.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QDTable {
    pub rows: Vec<QDPoint>,
    pub gold: Option<QDPoint>,
}

impl QDTable {
    /// All rows in output order.
    pub fn iter(&self) -> impl Iterator<Item = &QDPoint> {
        self.rows.iter().chain(self.gold.iter())
    }

    pub fn family<'a>(&'a self, family: &'a str) -> impl Iterator<Item = &'a QDPoint> + 'a {
        self.rows.iter().filter(move |r| r.setting.family() == family)
    }
}

/// Scores a held-out human batch the same way generated batches are scored.
pub fn gold_row<R, H>(refs: &[R], held_out: &[H], bleu: &BleuConfig, entropy_n: usize, seed: u64) -> Result<QDPoint>
where
    R: AsRef<[TokenId]>,
    H: AsRef<[TokenId]> + Sync,
{
    if refs.is_empty() || held_out.is_empty() {
        return Err(Error::EmptyInput("gold row needs references and held-out text"));
    }
    Ok(QDPoint {
        setting: Setting::Gold,
        quality: metrics::corpus_bleu(held_out, refs, bleu)?,
        diversity_self_bleu: metrics::self_bleu(held_out, bleu)?,
        diversity_ngram_entropy: metrics::ngram_entropy(held_out, entropy_n)?,
        n_samples: held_out.len(),
        seed,
    })
}

pub fn export_table(table: &QDTable, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_table(table, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Floats use the shortest representation that parses back to the same bits.
pub fn write_table<W: Write>(table: &QDTable, w: W) -> Result<()> {
    let mut csv = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    csv.write_record(CSV_HEADER.split(','))?;
    for p in table.iter() {
        csv.write_record([
            p.setting.family().to_string(),
            p.setting.to_string(),
            p.quality.to_string(),
            p.diversity_self_bleu.to_string(),
            p.diversity_ngram_entropy.to_string(),
            p.n_samples.to_string(),
            p.seed.to_string(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

pub fn load_table(path: impl AsRef<Path>) -> Result<QDTable> {
    read_table(File::open(path)?)
}

pub fn read_table<R: std::io::Read>(r: R) -> Result<QDTable> {
    let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header: Vec<String> = csv.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != CSV_HEADER {
        return Err(Error::Data(format!("unexpected table header {header:?}")));
    }
    let mut table = QDTable::default();
    for rec in csv.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).ok_or_else(|| Error::Data(format!("short row {rec:?}")));
        let num = |i: usize| -> Result<f64> {
            field(i)?
                .parse()
                .map_err(|_| Error::Data(format!("bad number in row {rec:?}")))
        };
        let int = |i: usize| -> Result<u64> {
            field(i)?
                .parse()
                .map_err(|_| Error::Data(format!("bad integer in row {rec:?}")))
        };
        let point = QDPoint {
            setting: field(1)?.parse()?,
            quality: num(2)?,
            diversity_self_bleu: num(3)?,
            diversity_ngram_entropy: num(4)?,
            n_samples: int(5)? as usize,
            seed: int(6)?,
        };
        if point.setting.family() != field(0)? {
            return Err(Error::Data(format!("family column disagrees with spec in {rec:?}")));
        }
        match point.setting {
            Setting::Gold if table.gold.is_some() => return Err(Error::Data("more than one gold row".into())),
            Setting::Gold => table.gold = Some(point),
            _ if table.gold.is_some() => return Err(Error::Data("gold row must come last".into())),
            _ => table.rows.push(point),
        }
    }
    Ok(table)
}

/// Seed for one grid entry. Derived from the spec text rather than its grid
/// position so dropping or reordering entries leaves other rows unchanged.
pub fn config_seed(base: u64, spec: &TransformSpec) -> u64 {
    // FNV-1a, stable across platforms and releases
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in spec.to_string().bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    base ^ h
}

/// Token sequences used to evaluate a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalData {
    /// Validation sequences that generated text is scored against.
    pub refs: Vec<Vec<TokenId>>,
    /// Test sequences; their first `prefix_len` tokens seed generation.
    pub test: Vec<Vec<TokenId>>,
}

impl EvalData {
    /// Keeps sequences long enough for a prefix plus a minimum-length
    /// completion and truncates them to the maximum length.
    pub fn new(
        validation: Vec<Vec<TokenId>>,
        test: Vec<Vec<TokenId>>,
        params: &SweepParams,
    ) -> Result<Self> {
        let shape = |seqs: Vec<Vec<TokenId>>, what: &str| -> Result<Vec<Vec<TokenId>>> {
            let out: Vec<_> = seqs
                .into_iter()
                .filter(|s| s.len() >= params.prefix_len + params.min_len)
                .map(|mut s| {
                    s.truncate(params.prefix_len + params.max_len);
                    s
                })
                .take(params.n_samples)
                .collect();
            if out.is_empty() {
                return Err(Error::Data(format!(
                    "no {what} sequence has at least {} tokens",
                    params.prefix_len + params.min_len
                )));
            }
            Ok(out)
        };
        Ok(Self {
            refs: shape(validation, "validation")?,
            test: shape(test, "test")?,
        })
    }

    fn prefix(&self, i: usize, prefix_len: usize) -> &[TokenId] {
        &self.test[i % self.test.len()][..prefix_len]
    }
}

fn default_samples() -> usize {
    DESK_SAMPLES
}
fn default_prefix_len() -> usize {
    10
}
fn default_min_len() -> usize {
    40
}
fn default_max_len() -> usize {
    50
}
fn default_max_attempts() -> usize {
    100
}
fn default_entropy_n() -> usize {
    3
}

/// Generation and scoring parameters shared by every grid entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepParams {
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default = "default_prefix_len")]
    pub prefix_len: usize,
    #[serde(default = "default_min_len")]
    pub min_len: usize,
    #[serde(default = "default_max_len")]
    pub max_len: usize,
    #[serde(default = "default_max_attempts")]
    pub max_attempts: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub bleu: BleuConfig,
    #[serde(default = "default_entropy_n")]
    pub entropy_n: usize,
    /// Worker threads; all available cores when absent.
    #[serde(default)]
    pub threads: Option<usize>,
}

impl Default for SweepParams {
    fn default() -> Self {
        Self {
            n_samples: DESK_SAMPLES,
            prefix_len: default_prefix_len(),
            min_len: default_min_len(),
            max_len: default_max_len(),
            max_attempts: default_max_attempts(),
            seed: 0,
            bleu: BleuConfig::default(),
            entropy_n: default_entropy_n(),
            threads: None,
        }
    }
}

impl SweepParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 2 {
            return Err(Error::Config("n_samples must be at least 2".into()));
        }
        if self.prefix_len == 0 {
            return Err(Error::Config("prefix_len must be at least 1".into()));
        }
        if self.min_len > self.max_len || self.max_len == 0 {
            return Err(Error::Config(format!(
                "length window [{}, {}] is empty",
                self.min_len, self.max_len
            )));
        }
        if self.max_attempts == 0 {
            return Err(Error::Config("max_attempts must be at least 1".into()));
        }
        if self.entropy_n == 0 {
            return Err(Error::Config("entropy_n must be at least 1".into()));
        }
        if !(1..=metrics::MAX_BLEU_ORDER).contains(&self.bleu.max_n) || !(self.bleu.smoothing_eps >= 0.0) {
            return Err(Error::Config(format!("bad BLEU settings {:?}", self.bleu)));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        Ok(())
    }

    fn generate_options(&self) -> GenerateOptions {
        GenerateOptions {
            min_len: self.min_len,
            max_len: self.max_len,
            max_attempts: self.max_attempts,
        }
    }
}

/// Runs `f` on a pool with the requested thread count.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Generates the batch for one grid entry. Sample `i` continues prefix
/// `i mod |test|` and draws from stream `i` of the entry's generator, so the
/// batch does not depend on scheduling.
pub fn generate_batch<M: LanguageModel + ?Sized>(
    model: &M,
    data: &EvalData,
    spec: &TransformSpec,
    params: &SweepParams,
) -> Result<Vec<Vec<TokenId>>> {
    let seed = config_seed(params.seed, spec);
    let opts = params.generate_options();
    (0..params.n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            generate(model, data.prefix(i, params.prefix_len), spec, &mut rng, &opts)
        })
        .collect()
}

fn score_entry<M: LanguageModel + ?Sized>(
    model: &M,
    data: &EvalData,
    index: &ReferenceIndex,
    spec: &TransformSpec,
    params: &SweepParams,
) -> Result<QDPoint> {
    let batch = generate_batch(model, data, spec, params)?;
    Ok(QDPoint {
        setting: Setting::Transform(spec.clone()),
        quality: index.corpus_bleu(&batch, &params.bleu)?,
        diversity_self_bleu: metrics::self_bleu(&batch, &params.bleu)?,
        diversity_ngram_entropy: metrics::ngram_entropy(&batch, params.entropy_n)?,
        n_samples: batch.len(),
        seed: config_seed(params.seed, spec),
    })
}

/// Outcome of a sweep that may have stopped early. `table` holds every row
/// completed before the first failing grid entry.
#[derive(Debug)]
pub struct SweepRun {
    pub table: QDTable,
    pub error: Option<Error>,
}

impl SweepRun {
    pub fn into_result(self) -> Result<QDTable> {
        match self.error {
            None => Ok(self.table),
            Some(e) => Err(e),
        }
    }
}

/// Sweeps `grid` on an already loaded model and evaluation data.
pub fn run_grid<M: LanguageModel + ?Sized>(
    model: &M,
    data: &EvalData,
    grid: &[TransformSpec],
    params: &SweepParams,
) -> SweepRun {
    let fail = |e| SweepRun {
        table: QDTable::default(),
        error: Some(e),
    };
    if grid.is_empty() {
        return fail(Error::Config("sweep grid is empty".into()));
    }
    if let Err(e) = params.validate() {
        return fail(e);
    }
    for spec in grid {
        if let Err(e) = spec.validate_for(model.vocab_size()) {
            return fail(e);
        }
    }
    let work = || -> Result<(ReferenceIndex, Vec<Result<QDPoint>>)> {
        let index = ReferenceIndex::new(&data.refs, params.bleu.max_n)?;
        let rows = grid
            .par_iter()
            .map(|spec| score_entry(model, data, &index, spec, params))
            .collect();
        Ok((index, rows))
    };
    let (index, results) = match with_threads(params.threads, work).and_then(|r| r) {
        Ok(x) => x,
        Err(e) => return fail(e),
    };

    let mut table = QDTable::default();
    for r in results {
        match r {
            Ok(p) => table.rows.push(p),
            Err(e) => return SweepRun { table, error: Some(e) },
        }
    }
    let held_out = &data.test;
    let gold = with_threads(params.threads, || {
        Ok(QDPoint {
            setting: Setting::Gold,
            quality: index.corpus_bleu(held_out, &params.bleu)?,
            diversity_self_bleu: metrics::self_bleu(held_out, &params.bleu)?,
            diversity_ngram_entropy: metrics::ngram_entropy(held_out, params.entropy_n)?,
            n_samples: held_out.len(),
            seed: params.seed,
        })
    })
    .and_then(|r| r);
    match gold {
        Ok(g) => table.gold = Some(g),
        Err(e) => return SweepRun { table, error: Some(e) },
    }
    SweepRun { table, error: None }
}

fn default_order() -> usize {
    NgramConfig::default().order
}

/// Model trained on the train split of the sweep corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainParams {
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default)]
    pub tokenizer: Tokenizer,
    #[serde(default)]
    pub discount: Option<f64>,
    #[serde(default)]
    pub smoothing: Option<f64>,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            order: default_order(),
            tokenizer: Tokenizer::default(),
            discount: None,
            smoothing: None,
        }
    }
}

impl TrainParams {
    pub fn ngram_config(&self) -> NgramConfig {
        let d = NgramConfig::default();
        NgramConfig {
            order: self.order,
            discount: self.discount.unwrap_or(d.discount),
            smoothing: self.smoothing.unwrap_or(d.smoothing),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSource {
    /// A saved n-gram model.
    Path(PathBuf),
    /// Recorded logits; evaluation data must then be token-id sample files.
    Replay(PathBuf),
    Train(TrainParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Split {
    Preset(SplitPreset),
    Fractions([f64; 3]),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitPreset {
    Gigaword,
    Wikitext,
}

impl Default for Split {
    fn default() -> Self {
        Split::Preset(SplitPreset::Gigaword)
    }
}

impl Split {
    pub fn fractions(&self) -> [f64; 3] {
        match self {
            Split::Preset(SplitPreset::Gigaword) => GIGAWORD_SPLIT,
            Split::Preset(SplitPreset::Wikitext) => WIKITEXT_SPLIT,
            Split::Fractions(f) => *f,
        }
    }
}

/// Where evaluation text comes from: a single corpus that is split, or
/// separate validation and test files.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSource {
    #[serde(default)]
    pub corpus: Option<PathBuf>,
    /// Treat the corpus as running prose and split it into sentences first.
    #[serde(default)]
    pub prose: bool,
    #[serde(default)]
    pub split: Split,
    #[serde(default)]
    pub validation: Option<PathBuf>,
    #[serde(default)]
    pub test: Option<PathBuf>,
}

/// A complete sweep description, as read from `sweep.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub model: ModelSource,
    #[serde(default)]
    pub data: DataSource,
    pub grid: Vec<TransformSpec>,
    #[serde(flatten)]
    pub params: SweepParams,
}

impl SweepConfig {
    /// Parses a config file, resolving relative paths against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let mut cfg = Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut cfg.model {
            ModelSource::Path(p) | ModelSource::Replay(p) => resolve(p),
            ModelSource::Train(_) => {}
        }
        for p in [&mut cfg.data.corpus, &mut cfg.data.validation, &mut cfg.data.test]
            .into_iter()
            .flatten()
        {
            resolve(p);
        }
        Ok(cfg)
    }

    /// Parses a config, rejecting unknown top-level keys.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let known = serde_json::to_value(SweepParams::default())?;
        if let (Some(obj), Some(known)) = (value.as_object(), known.as_object()) {
            if let Some(k) = obj
                .keys()
                .find(|k| !["model", "data", "grid"].contains(&k.as_str()) && !known.contains_key(*k))
            {
                return Err(Error::Config(format!("unknown config field {k:?}")));
            }
        }
        serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))
    }

    /// Switches to the sample counts used for the published curves.
    pub fn paper_scale(mut self) -> Self {
        self.params.n_samples = PAPER_SAMPLES;
        self
    }
}

/// A loaded model with its vocabulary when it has one.
pub struct LoadedModel {
    pub model: Box<dyn LanguageModel>,
    pub vocab: Option<Vocabulary>,
}

fn corpus_lines(path: &Path, prose: bool) -> Result<Vec<String>> {
    let lines = if prose {
        corpus::prepare_sentences(&fs::read_to_string(path)?)
    } else {
        corpus::read_lines(path)?
    };
    if lines.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(lines)
}

/// Encodes lines, dropping those with tokens outside the vocabulary.
fn encode_known(vocab: &Vocabulary, lines: &[String]) -> Vec<Vec<TokenId>> {
    lines.iter().filter_map(|l| vocab.encode(l).ok()).collect()
}

fn read_eval_file(path: &Path, vocab: Option<&Vocabulary>) -> Result<Vec<Vec<TokenId>>> {
    let is_jsonl = path.extension().is_some_and(|e| e == "jsonl" || e == "json");
    match (is_jsonl, vocab) {
        (true, _) => corpus::read_samples(path, vocab),
        (false, Some(v)) => Ok(encode_known(v, &corpus::read_lines(path)?)),
        (false, None) => Err(Error::Config(format!(
            "{} is plain text but the model has no vocabulary; use a .jsonl token file",
            path.display()
        ))),
    }
}

/// Loads or trains the model and builds the evaluation data.
pub fn prepare(config: &SweepConfig) -> Result<(LoadedModel, EvalData)> {
    config.params.validate()?;
    let data = &config.data;
    let split_lines = match &data.corpus {
        Some(p) => Some(split_corpus(&corpus_lines(p, data.prose)?, data.split.fractions())?),
        None => None,
    };

    let loaded = match &config.model {
        ModelSource::Path(p) => {
            let m = lm::load_model(p)?;
            let vocab = m.vocab().clone();
            LoadedModel {
                model: Box::new(m),
                vocab: Some(vocab),
            }
        }
        ModelSource::Replay(p) => LoadedModel {
            model: Box::new(LogitsReplay::load(p)?),
            vocab: None,
        },
        ModelSource::Train(tp) => {
            let (train, valid, test) = split_lines
                .as_ref()
                .ok_or_else(|| Error::Config("training a model needs data.corpus".into()))?;
            // the vocabulary covers every split so held-out text always encodes
            let all = train.iter().chain(valid).chain(test).map(String::as_str);
            let vocab = Vocabulary::build(tp.tokenizer, all);
            let seqs: Vec<Vec<TokenId>> = train
                .iter()
                .map(|l| {
                    let mut ids = vocab.encode(l)?;
                    ids.push(EOS);
                    Ok(ids)
                })
                .collect::<Result<_>>()?;
            let m = lm::train_ngram(&seqs, vocab.clone(), tp.ngram_config())?;
            LoadedModel {
                model: Box::new(m),
                vocab: Some(vocab),
            }
        }
    };

    let vocab = loaded.vocab.as_ref();
    let (validation, test) = match (&data.validation, &data.test, &split_lines) {
        (Some(v), Some(t), _) => (read_eval_file(v, vocab)?, read_eval_file(t, vocab)?),
        (None, None, Some((_, v, t))) => {
            let vocab = vocab.ok_or_else(|| {
                Error::Config("a text corpus needs a model with a vocabulary".into())
            })?;
            (encode_known(vocab, v), encode_known(vocab, t))
        }
        _ => {
            return Err(Error::Config(
                "data needs either a corpus or both validation and test files".into(),
            ))
        }
    };
    let eval = EvalData::new(validation, test, &config.params)?;
    Ok((loaded, eval))
}

/// Loads everything the config names and runs its grid.
pub fn run_sweep_partial(config: &SweepConfig) -> SweepRun {
    match prepare(config) {
        Ok((loaded, data)) => run_grid(loaded.model.as_ref(), &data, &config.grid, &config.params),
        Err(e) => SweepRun {
            table: QDTable::default(),
            error: Some(e),
        },
    }
}

pub fn run_sweep(config: &SweepConfig) -> Result<QDTable> {
    run_sweep_partial(config).into_result()
}
