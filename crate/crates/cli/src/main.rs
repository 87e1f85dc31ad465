use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use samplab_core::corpus;
use samplab_core::lm::{self, LanguageModel, LogitsReplay, NgramConfig, Tokenizer, Vocabulary, EOS};
use samplab_core::metrics::{self, BleuConfig};
use samplab_core::properties;
use samplab_core::sweep::{self, EvalData, SweepConfig, SweepParams};
use samplab_core::{Error, Result, SortedDistribution, TokenId, TransformSpec};

#[derive(Parser)]
#[command(name = "samplab", version, about = "Token-sampling transforms and quality-diversity sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split running prose into one lowercase sentence per line.
    PrepareCorpus {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a stupid-backoff n-gram model.
    TrainLm(TrainArgs),
    /// Sample completions of corpus prefixes through a transform.
    Generate(GenerateArgs),
    /// Corpus-BLEU, self-BLEU and n-gram entropy of a sample file.
    Evaluate(EvaluateArgs),
    /// Run a quality-diversity sweep and write the table as CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Use 10,000 samples per setting.
        #[arg(long)]
        paper_scale: bool,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Apply a transform to a distribution and report the three properties.
    CheckProperties {
        #[arg(long)]
        spec: TransformSpec,
        #[command(flatten)]
        dist: DistArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Find the temperature that gives a distribution a target entropy.
    SolveTemperature {
        #[command(flatten)]
        dist: DistArgs,
        /// Target entropy in nats.
        #[arg(long)]
        target: f64,
    },
}

#[derive(Args)]
struct TrainArgs {
    /// One sentence per line, or running prose with `--prose`.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = 4)]
    order: usize,
    #[arg(long)]
    out: PathBuf,
    /// `word` or `char`.
    #[arg(long, default_value = "word")]
    tokenizer: Tokenizer,
    #[arg(long)]
    prose: bool,
    #[arg(long)]
    discount: Option<f64>,
    #[arg(long)]
    smoothing: Option<f64>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, conflicts_with = "replay", required_unless_present = "replay")]
    model: Option<PathBuf>,
    /// Recorded logits instead of an n-gram model.
    #[arg(long)]
    replay: Option<PathBuf>,
    #[arg(long)]
    spec: TransformSpec,
    /// Prefix source: text lines, or a .jsonl sample file.
    #[arg(long)]
    prompts: PathBuf,
    #[arg(long, default_value_t = 10)]
    prefix_len: usize,
    #[arg(long, default_value_t = 40)]
    min_len: usize,
    #[arg(long, default_value_t = 50)]
    max_len: usize,
    #[arg(long, default_value_t = 100)]
    n_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    gen: PathBuf,
    #[arg(long)]
    refs: PathBuf,
    /// Vocabulary source for `{"text": ...}` records.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    max_n: usize,
    #[arg(long, default_value_t = 0.1)]
    smoothing: f64,
    #[arg(long, default_value_t = 3)]
    entropy_n: usize,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct DistArgs {
    /// Comma-separated probabilities.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    probs: Option<Vec<f64>>,
    /// Comma-separated logits.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    logits: Option<Vec<f64>>,
}

impl DistArgs {
    fn load(&self) -> Result<SortedDistribution> {
        match (&self.probs, &self.logits) {
            (Some(p), _) => SortedDistribution::from_probs(p),
            (_, Some(l)) => SortedDistribution::from_logits(l),
            _ => Err(Error::Config("give --probs or --logits".into())),
        }
    }
}

/// 2 for bad configuration or arguments, 3 for model and data problems, 4 for
/// metric failures.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::SpecParse { .. }
        | Error::HyperparamOutOfRange { .. }
        | Error::EntropyUnreachable { .. }
        | Error::NotADistribution(_)
        | Error::NonFiniteLogit { .. }
        | Error::LengthMismatch { .. }
        | Error::UniformInput => 2,
        Error::EmptyInput(_) | Error::NoNgrams(_) => 4,
        _ => 3,
    }
}

fn print_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => fs::write(p, text + "\n")?,
        None => {
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{text}")?;
        }
    }
    Ok(())
}

fn prepare_corpus(input: &Path, out: &Path) -> Result<()> {
    let sentences = corpus::prepare_sentences(&fs::read_to_string(input)?);
    if sentences.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    fs::write(out, sentences.join("\n") + "\n")?;
    eprintln!("wrote {} sentences to {}", sentences.len(), out.display());
    Ok(())
}

fn train(args: &TrainArgs) -> Result<()> {
    let lines = if args.prose {
        corpus::prepare_sentences(&fs::read_to_string(&args.corpus)?)
    } else {
        corpus::read_lines(&args.corpus)?
    };
    let defaults = NgramConfig::default();
    let config = NgramConfig {
        order: args.order,
        discount: args.discount.unwrap_or(defaults.discount),
        smoothing: args.smoothing.unwrap_or(defaults.smoothing),
    };
    config.validate()?;
    let vocab = Vocabulary::build(args.tokenizer, lines.iter().map(String::as_str));
    let seqs = lines
        .iter()
        .map(|l| {
            let mut ids = vocab.encode(l)?;
            ids.push(EOS);
            Ok(ids)
        })
        .collect::<Result<Vec<_>>>()?;
    let model = lm::train_ngram(&seqs, vocab, config)?;
    lm::save_model(&model, &args.out)?;
    eprintln!(
        "trained order-{} model: {} tokens in vocabulary, {} contexts",
        model.order(),
        model.vocab().len(),
        model.context_count()
    );
    Ok(())
}

fn read_prompts(path: &Path, vocab: Option<&Vocabulary>) -> Result<Vec<Vec<TokenId>>> {
    if path.extension().is_some_and(|e| e == "jsonl") {
        return corpus::read_samples(path, vocab);
    }
    let vocab = vocab.ok_or_else(|| Error::Config("text prompts need a model with a vocabulary".into()))?;
    // prompts with unknown tokens cannot be fed to the model
    Ok(corpus::read_lines(path)?
        .iter()
        .filter_map(|l| vocab.encode(l).ok())
        .collect())
}

fn run_generate(args: &GenerateArgs) -> Result<()> {
    if args.n_samples == 0 {
        return Err(Error::Config("n_samples must be at least 1".into()));
    }
    let (model, vocab): (Box<dyn LanguageModel>, Option<Vocabulary>) = match (&args.model, &args.replay) {
        (Some(m), _) => {
            let m = lm::load_model(m)?;
            let v = m.vocab().clone();
            (Box::new(m), Some(v))
        }
        (None, Some(r)) => (Box::new(LogitsReplay::load(r)?), None),
        (None, None) => return Err(Error::Config("give --model or --replay".into())),
    };
    let prefixes: Vec<Vec<TokenId>> = read_prompts(&args.prompts, vocab.as_ref())?
        .into_iter()
        .filter(|p| p.len() >= args.prefix_len)
        .map(|mut p| {
            p.truncate(args.prefix_len);
            p
        })
        .collect();
    if prefixes.is_empty() {
        return Err(Error::Data(format!(
            "no prompt in {} has {} tokens",
            args.prompts.display(),
            args.prefix_len
        )));
    }
    let params = SweepParams {
        n_samples: args.n_samples,
        prefix_len: args.prefix_len,
        min_len: args.min_len,
        max_len: args.max_len,
        seed: args.seed,
        threads: args.threads,
        ..SweepParams::default()
    };
    let data = EvalData {
        refs: Vec::new(),
        test: prefixes,
    };
    let samples = sweep::with_threads(params.threads, || {
        sweep::generate_batch(model.as_ref(), &data, &args.spec, &params)
    })??;
    corpus::write_samples(&args.out, &samples, vocab.as_ref())?;
    eprintln!("wrote {} samples to {}", samples.len(), args.out.display());
    Ok(())
}

#[derive(Serialize)]
struct Counts {
    gen: usize,
    refs: usize,
}

#[derive(Serialize)]
struct Evaluation {
    corpus_bleu: f64,
    self_bleu: f64,
    ngram_entropy: f64,
    counts: Counts,
}

fn run_evaluate(args: &EvaluateArgs) -> Result<()> {
    let vocab = match &args.model {
        Some(m) => Some(lm::load_model(m)?.vocab().clone()),
        None => None,
    };
    let gen = corpus::read_samples(&args.gen, vocab.as_ref())?;
    let refs = corpus::read_samples(&args.refs, vocab.as_ref())?;
    let cfg = BleuConfig {
        max_n: args.max_n,
        smoothing_eps: args.smoothing,
    };
    let report = Evaluation {
        corpus_bleu: metrics::corpus_bleu(&gen, &refs, &cfg)?,
        self_bleu: metrics::self_bleu(&gen, &cfg)?,
        ngram_entropy: metrics::ngram_entropy(&gen, args.entropy_n)?,
        counts: Counts {
            gen: gen.len(),
            refs: refs.len(),
        },
    };
    print_json(&report, args.out.as_deref())
}

fn run_sweep(config: &Path, out: &Path, paper_scale: bool, threads: Option<usize>) -> Result<()> {
    let mut cfg = SweepConfig::load(config)?;
    if paper_scale {
        cfg = cfg.paper_scale();
    }
    if threads.is_some() {
        cfg.params.threads = threads;
    }
    let run = sweep::run_sweep_partial(&cfg);
    // completed rows are kept even when a later setting fails
    sweep::export_table(&run.table, out)?;
    let table = run.into_result()?;
    eprintln!("wrote {} rows to {}", table.iter().count(), out.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::PrepareCorpus { input, out } => prepare_corpus(&input, &out),
        Command::TrainLm(args) => train(&args),
        Command::Generate(args) => run_generate(&args),
        Command::Evaluate(args) => run_evaluate(&args),
        Command::Sweep {
            config,
            out,
            paper_scale,
            threads,
        } => run_sweep(&config, &out, paper_scale, threads),
        Command::CheckProperties { spec, dist, seed } => {
            let d = dist.load()?;
            spec.validate_for(d.len())?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            print_json(&properties::full_report(&spec, &d, &mut rng)?, None)
        }
        Command::SolveTemperature { dist, target } => {
            print_json(&samplab_core::solve_temperature(&dist.load()?, target)?, None)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
