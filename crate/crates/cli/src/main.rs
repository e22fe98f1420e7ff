//! `psdembed`: count, train, evaluate and diagnose PSD word embeddings.

mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use psdembed::corpus::for_each_document;
use psdembed::eval::{analogy_eval, similarity_eval, AnalogyDataset, EmbeddingTable, EvalReport, SimilarityDataset};
use psdembed::genmodel::{model_perplexity_report, pint, trigram_joint, ModelHandle};
use psdembed::io::{load_counts, load_vocab, load_word2vec, save_counts, save_vocab, save_word2vec};
use psdembed::psd_solver::svd_trap_demo;
use psdembed::{count_cooccurrences, plan_blocks, train_blockwise, CorpusStats, Document, TrainOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use config::{Dataset, DatasetKind, PipelineConfig};

#[derive(Debug, Parser)]
#[command(name = "psdembed", version, about = "PSD low-rank word embeddings from co-occurrence counts")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// TOML pipeline configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    workspace: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Jelinek-Mercer smoothing weight.
    #[arg(long, global = true)]
    kappa: Option<f64>,
    /// Fraction of observed bigrams given full weight.
    #[arg(long, global = true)]
    cut_fraction: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the vocabulary and windowed co-occurrence counts.
    Count(CountArgs),
    /// Fit embeddings from the counts in the workspace.
    Train(TrainArgs),
    /// Score embeddings on similarity and analogy benchmarks.
    Evaluate(EvaluateArgs),
    /// Show how truncated SVD mangles a matrix with a negative eigenvalue.
    SvdTrap,
    /// Likelihood and trigram interaction report for trained embeddings.
    Diagnose(DiagnoseArgs),
    /// Print the effective configuration as TOML.
    Config,
}

#[derive(Debug, Args)]
struct CountArgs {
    /// Corpus files; documents are separated by blank lines.
    corpus: Vec<PathBuf>,
    #[arg(long)]
    min_count: Option<u64>,
    #[arg(long)]
    max_vocab: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    core_size: Option<usize>,
    #[arg(long)]
    block_size: Option<usize>,
    /// Ignore any checkpoint left by an earlier run.
    #[arg(long)]
    fresh: bool,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Embeddings in word2vec text format (default: the workspace output).
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Similarity dataset as NAME=PATH; repeatable. Replaces configured datasets.
    #[arg(long, value_name = "NAME=PATH")]
    similarity: Vec<String>,
    /// Analogy dataset as NAME=PATH; repeatable. Replaces configured datasets.
    #[arg(long, value_name = "NAME=PATH")]
    analogy: Vec<String>,
    #[arg(long)]
    label: Option<String>,
}

#[derive(Debug, Args)]
struct DiagnoseArgs {
    /// Documents to score (default: configured held-out or training corpus).
    paths: Vec<PathBuf>,
    #[arg(long)]
    sample_docs: Option<usize>,
    #[arg(long)]
    pint_words: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = format!("{e:#}").replace('\n', " ");
            eprintln!("error[{}]: {message}", error_class(&e));
            ExitCode::FAILURE
        }
    }
}

/// Stable class of the innermost library error, for scripts.
fn error_class(e: &anyhow::Error) -> &'static str {
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<psdembed::Error>() {
            return err.class();
        }
        if cause.downcast_ref::<toml::de::Error>().is_some() {
            return "config";
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return "io";
        }
    }
    "config"
}

fn resolve(cli: &Cli) -> anyhow::Result<PipelineConfig> {
    let mut cfg = match &cli.global.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    let g = &cli.global;
    set(&mut cfg.workspace, g.workspace.clone());
    set(&mut cfg.seed, g.seed);
    set(&mut cfg.threads, g.threads);
    set(&mut cfg.stats.kappa, g.kappa);
    set(&mut cfg.stats.cut_fraction, g.cut_fraction);
    match &cli.command {
        Command::Count(a) => {
            if !a.corpus.is_empty() {
                cfg.corpus.paths = a.corpus.clone();
            }
            set(&mut cfg.corpus.min_count, a.min_count);
            set(&mut cfg.corpus.max_vocab, a.max_vocab);
            set(&mut cfg.corpus.window, a.window);
        }
        Command::Train(a) => {
            set(&mut cfg.solver.rank, a.rank);
            set(&mut cfg.solver.iterations, a.iterations);
            set(&mut cfg.solver.core_size, a.core_size);
            set(&mut cfg.solver.block_size, a.block_size);
        }
        Command::Evaluate(a) => {
            set(&mut cfg.evaluate.label, a.label.clone());
            if !a.similarity.is_empty() || !a.analogy.is_empty() {
                cfg.evaluate.datasets = dataset_flags(&a.similarity, DatasetKind::Similarity)?
                    .into_iter()
                    .chain(dataset_flags(&a.analogy, DatasetKind::Analogy)?)
                    .collect();
            }
        }
        Command::Diagnose(a) => {
            if !a.paths.is_empty() {
                cfg.diagnose.paths = a.paths.clone();
            }
            set(&mut cfg.diagnose.sample_docs, a.sample_docs);
            set(&mut cfg.diagnose.pint_words, a.pint_words);
        }
        Command::SvdTrap | Command::Config => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn dataset_flags(specs: &[String], kind: DatasetKind) -> anyhow::Result<Vec<Dataset>> {
    specs
        .iter()
        .map(|s| {
            let (name, path) = s.split_once('=').ok_or_else(|| anyhow!("expected NAME=PATH, got {s:?}"))?;
            Ok(Dataset {
                name: name.to_string(),
                kind,
                path: path.into(),
            })
        })
        .collect()
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = resolve(&cli)?;
    if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global()?;
    }
    match &cli.command {
        Command::Count(_) => cmd_count(&cfg),
        Command::Train(a) => cmd_train(&cfg, a.fresh),
        Command::Evaluate(a) => cmd_evaluate(&cfg, a.embeddings.as_deref()),
        Command::SvdTrap => {
            print!("{}", svd_trap_demo()?);
            Ok(())
        }
        Command::Diagnose(_) => cmd_diagnose(&cfg),
        Command::Config => {
            print!("{}", cfg.dump()?);
            Ok(())
        }
    }
}

fn create_workspace(cfg: &PipelineConfig) -> anyhow::Result<()> {
    fs::create_dir_all(&cfg.workspace).with_context(|| format!("{}", cfg.workspace.display()))
}

fn cmd_count(cfg: &PipelineConfig) -> anyhow::Result<()> {
    if cfg.corpus.paths.is_empty() {
        bail!("no corpus paths given");
    }
    let (vocab, docs) = psdembed::corpus::load_corpus(
        &cfg.corpus.paths,
        &cfg.tokenizer(),
        cfg.corpus.min_count,
        cfg.corpus.max_vocab,
    )?;
    let tokens: usize = docs.iter().map(|d| d.tokens.len()).sum();
    log::info!("{} documents, {tokens} in-vocabulary tokens, {} words", docs.len(), vocab.len());
    let counts = count_cooccurrences(&docs, vocab.len(), cfg.corpus.window)?;
    log::info!("{} distinct bigrams", counts.num_pairs());
    create_workspace(cfg)?;
    save_vocab(cfg.vocab_path(), &vocab)?;
    save_counts(cfg.counts_path(), &counts)?;
    Ok(())
}

fn load_stats(cfg: &PipelineConfig) -> anyhow::Result<(psdembed::Vocabulary, CorpusStats)> {
    let vocab = load_vocab(cfg.vocab_path())?;
    let counts = load_counts(cfg.counts_path(), &vocab)?;
    if counts.window() != cfg.corpus.window {
        log::warn!("counts use window {}, config says {}", counts.window(), cfg.corpus.window);
    }
    let stats = CorpusStats::new(&counts, cfg.stats.kappa, cfg.stats.cut_fraction)?;
    Ok((vocab, stats))
}

fn cmd_train(cfg: &PipelineConfig, fresh: bool) -> anyhow::Result<()> {
    let (vocab, stats) = load_stats(cfg)?;
    let w = vocab.len();
    let plan = plan_blocks(w, cfg.solver.core_size.min(w), cfg.solver.block_size)?;
    let schedule = cfg.schedule(plan.core_size())?;
    let checkpoint = cfg.checkpoint_path();
    if fresh && checkpoint.exists() {
        fs::remove_file(&checkpoint).with_context(|| format!("{}", checkpoint.display()))?;
    }
    log::info!(
        "{w} words: core {}, {} noncore block(s), C_cut {:.3e}",
        plan.core_size(),
        plan.noncore().len(),
        stats.weights().c_cut()
    );
    let out = train_blockwise(
        &stats,
        &plan,
        &schedule,
        &cfg.bcd(),
        &TrainOptions {
            checkpoint: Some(&checkpoint),
            words: Some(vocab.words()),
        },
    )?;
    match &out.trajectory {
        Some(t) => {
            let mut text = String::from("iteration\tweighted_error\n");
            for (k, e) in t.iter().enumerate() {
                text.push_str(&format!("{}\t{e}\n", k + 1));
            }
            write_file(&cfg.trajectory_path(), &text)?;
            if t.windows(2).any(|p| p[1] > p[0] * (1.0 + 1e-9)) {
                log::warn!("weighted error increased during BCD: {t:?}");
            }
        }
        None => log::info!("core restored from checkpoint"),
    }
    save_word2vec(cfg.embeddings_path(), vocab.words(), &out.embeddings)?;
    log::info!("wrote {}", cfg.embeddings_path().display());
    Ok(())
}

fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("{}", path.display()))
}

fn cmd_evaluate(cfg: &PipelineConfig, embeddings: Option<&Path>) -> anyhow::Result<()> {
    if cfg.evaluate.datasets.is_empty() {
        bail!("no evaluation datasets configured");
    }
    let path = embeddings.map_or_else(|| cfg.embeddings_path(), Path::to_path_buf);
    let (words, emb) = load_word2vec(&path)?;
    let table = EmbeddingTable::new(words, &emb)?;
    let mut entries = Vec::new();
    for d in &cfg.evaluate.datasets {
        let entry = match d.kind {
            DatasetKind::Similarity => similarity_eval(&table, &SimilarityDataset::load(&d.name, &d.path)?),
            DatasetKind::Analogy => analogy_eval(&table, &AnalogyDataset::load(&d.name, &d.path)?),
        }
        .with_context(|| format!("dataset {}", d.name))?;
        entries.push(entry);
    }
    let report = EvalReport { entries }.to_markdown(&cfg.evaluate.label);
    print!("{report}");
    create_workspace(cfg)?;
    write_file(&cfg.report_path(), &report)
}

fn cmd_diagnose(cfg: &PipelineConfig) -> anyhow::Result<()> {
    let (vocab, stats) = load_stats(cfg)?;
    let (words, emb) = load_word2vec(cfg.embeddings_path())?;
    if words.as_slice() != vocab.words() {
        bail!("{} does not match the workspace vocabulary", cfg.embeddings_path().display());
    }
    let model = ModelHandle::new(&emb, &stats, cfg.corpus.window)?;

    let paths = if cfg.diagnose.paths.is_empty() { &cfg.corpus.paths } else { &cfg.diagnose.paths };
    if paths.is_empty() {
        bail!("no documents to score: pass paths or set diagnose.paths / corpus.paths");
    }
    let mut docs: Vec<(String, Document)> = Vec::new();
    for p in paths {
        let mut line = 0;
        for_each_document(std::slice::from_ref(p), &cfg.tokenizer(), |tokens| {
            line += 1;
            let d = vocab.encode(&tokens);
            if !d.tokens.is_empty() {
                docs.push((format!("{}:{line}", p.display()), d));
            }
        })?;
    }
    let n = cfg.diagnose.sample_docs;
    if n > 0 && docs.len() > n {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut keep = rand::seq::index::sample(&mut rng, docs.len(), n).into_vec();
        keep.sort_unstable();
        docs = keep.into_iter().map(|i| std::mem::take(&mut docs[i])).collect();
    }

    let report = model_perplexity_report(&docs, &model)?;
    let sample: Vec<Document> = docs.into_iter().map(|(_, d)| d).collect();
    let k = cfg.diagnose.pint_words.min(vocab.len());
    let interaction = pint(&trigram_joint(&sample, k)?)?;

    let mut out = std::io::stdout().lock();
    writeln!(out, "documents\t{}", report.documents.len())?;
    writeln!(out, "tokens\t{}", report.total_tokens())?;
    writeln!(out, "perplexity_with_residuals\t{:.4}", report.perplexity_residual())?;
    writeln!(out, "perplexity_without_residuals\t{:.4}", report.perplexity_plain())?;
    writeln!(out, "pint_expectation_top{k}\t{:.6}", interaction.expectation)?;
    let mut strongest = interaction.values.clone();
    strongest.sort_by(|a, b| b.3.abs().total_cmp(&a.3.abs()).then((a.0, a.1, a.2).cmp(&(b.0, b.1, b.2))));
    for (x1, x2, y, v) in strongest.iter().take(10) {
        let w = |i: usize| vocab.word(i as u32);
        writeln!(out, "pint\t{} {} {}\t{v:.6}", w(*x1), w(*x2), w(*y))?;
    }
    create_workspace(cfg)?;
    write_file(&cfg.diagnose_path(), &report.to_string())
}
