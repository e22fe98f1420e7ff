use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use psdembed::blockwise::DEFAULT_BLOCK_SIZE;
use psdembed::stats::{DEFAULT_CUT_FRACTION, DEFAULT_KAPPA};
use psdembed::{BcdConfig, RegularizationSchedule, TokenizerOptions};
use serde::{Deserialize, Serialize};

/// Everything a pipeline run depends on. Loaded from TOML, then patched by
/// command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Seed for every sampled quantity (document sampling in `diagnose`).
    pub seed: u64,
    /// Worker threads; 0 picks the machine default.
    pub threads: usize,
    /// Directory holding the vocabulary, counts, checkpoint and outputs.
    pub workspace: PathBuf,
    pub corpus: CorpusConfig,
    pub stats: StatsConfig,
    pub solver: SolverConfig,
    pub evaluate: EvaluateConfig,
    pub diagnose: DiagnoseConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusConfig {
    pub paths: Vec<PathBuf>,
    pub min_count: u64,
    pub max_vocab: usize,
    /// Left context width `c`.
    pub window: usize,
    pub lowercase: bool,
    pub drop_numbers: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsConfig {
    pub kappa: f64,
    pub cut_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MuSchedule {
    Tiered,
    None,
    Bands,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MuBand {
    /// First frequency rank past this band.
    pub until: usize,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub rank: usize,
    pub iterations: usize,
    pub init_scale: f64,
    /// Relative improvement below which BCD stops early; 0 disables.
    pub convergence_tol: f64,
    pub core_size: usize,
    pub block_size: usize,
    pub mu_schedule: MuSchedule,
    /// Used when `mu_schedule = "bands"`; ranks past the last band reuse its `mu`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mu_bands: Vec<MuBand>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetKind {
    Similarity,
    Analogy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dataset {
    pub name: String,
    pub kind: DatasetKind,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateConfig {
    /// Row label of the report table.
    pub label: String,
    #[serde(default)]
    pub datasets: Vec<Dataset>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnoseConfig {
    /// Documents sampled for the likelihood report; 0 keeps all.
    pub sample_docs: usize,
    /// Most frequent words kept for the trigram interaction table.
    pub pint_words: usize,
    /// Held-out documents to score; empty reuses the training corpus.
    #[serde(default)]
    pub paths: Vec<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let bcd = BcdConfig::default();
        PipelineConfig {
            seed: 0,
            threads: 0,
            workspace: PathBuf::from("psdembed-work"),
            corpus: CorpusConfig {
                paths: Vec::new(),
                min_count: 100,
                max_vocab: 10_000,
                window: 3,
                lowercase: true,
                drop_numbers: false,
            },
            stats: StatsConfig {
                kappa: DEFAULT_KAPPA,
                cut_fraction: DEFAULT_CUT_FRACTION,
            },
            solver: SolverConfig {
                rank: bcd.rank,
                iterations: bcd.iterations,
                init_scale: bcd.init_scale,
                convergence_tol: bcd.convergence_tol,
                core_size: 5000,
                block_size: DEFAULT_BLOCK_SIZE,
                mu_schedule: MuSchedule::Tiered,
                mu_bands: Vec::new(),
            },
            evaluate: EvaluateConfig {
                label: "PSD".into(),
                datasets: Vec::new(),
            },
            diagnose: DiagnoseConfig {
                sample_docs: 1000,
                pint_words: 20,
                paths: Vec::new(),
            },
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("{}", path.display()))?;
        Self::parse(&text).with_context(|| format!("{}", path.display()))
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn dump(&self) -> anyhow::Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        let c = &self.corpus;
        if c.window == 0 {
            bail!("corpus.window must be at least 1");
        }
        if c.max_vocab == 0 {
            bail!("corpus.max_vocab must be at least 1");
        }
        let s = &self.stats;
        if !(0.0..=1.0).contains(&s.kappa) {
            bail!("stats.kappa must lie in [0, 1], got {}", s.kappa);
        }
        if !(s.cut_fraction > 0.0 && s.cut_fraction <= 1.0) {
            bail!("stats.cut_fraction must lie in (0, 1], got {}", s.cut_fraction);
        }
        self.bcd().validate()?;
        let v = &self.solver;
        if v.core_size == 0 || v.block_size == 0 {
            bail!("solver.core_size and solver.block_size must be positive");
        }
        if v.core_size < v.rank {
            bail!("solver.core_size ({}) is smaller than solver.rank ({})", v.core_size, v.rank);
        }
        if v.mu_schedule == MuSchedule::Bands && v.mu_bands.is_empty() {
            bail!("solver.mu_schedule = \"bands\" needs solver.mu_bands");
        }
        self.schedule(v.core_size)?;
        if self.diagnose.pint_words == 0 {
            bail!("diagnose.pint_words must be at least 1");
        }
        Ok(())
    }

    pub fn tokenizer(&self) -> TokenizerOptions {
        TokenizerOptions {
            lowercase: self.corpus.lowercase,
            drop_numbers: self.corpus.drop_numbers,
        }
    }

    pub fn bcd(&self) -> BcdConfig {
        BcdConfig {
            rank: self.solver.rank,
            iterations: self.solver.iterations,
            init_scale: self.solver.init_scale,
            convergence_tol: self.solver.convergence_tol,
        }
    }

    /// The ridge schedule for a core of `core_size` words.
    pub fn schedule(&self, core_size: usize) -> anyhow::Result<RegularizationSchedule> {
        Ok(match self.solver.mu_schedule {
            MuSchedule::Tiered => RegularizationSchedule::tiered(core_size),
            MuSchedule::None => RegularizationSchedule::none(),
            MuSchedule::Bands => {
                RegularizationSchedule::from_bands(self.solver.mu_bands.iter().map(|b| (b.until, b.mu)).collect())?
            }
        })
    }

    pub fn vocab_path(&self) -> PathBuf {
        self.workspace.join("vocab.tsv")
    }

    pub fn counts_path(&self) -> PathBuf {
        self.workspace.join("counts.tsv")
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.workspace.join("checkpoint.bin")
    }

    pub fn trajectory_path(&self) -> PathBuf {
        self.workspace.join("trajectory.tsv")
    }

    pub fn embeddings_path(&self) -> PathBuf {
        self.workspace.join("embeddings.txt")
    }

    pub fn report_path(&self) -> PathBuf {
        self.workspace.join("report.md")
    }

    pub fn diagnose_path(&self) -> PathBuf {
        self.workspace.join("diagnose.tsv")
    }
}
