//! Online blockwise regression.
//!
//! The most frequent `core_size` words are embedded jointly with the BCD
//! solver. Every other word is then regressed, one group at a time, against
//! the fixed core embeddings by weighted ridge regression on the
//! symmetrized core-by-group strip. Interactions among noncore words are
//! dropped.

use std::fs::{File, OpenOptions};
use std::io::{BufReader, BufWriter, Seek, Write};
use std::ops::Range;
use std::path::Path;

use faer::{Mat, MatRef, Side};
use faer::linalg::solvers::Solve;
use rayon::prelude::*;

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::io::DenseBlock;
use crate::psd_solver::{bcd_solve, BcdConfig, SymmetricMatrix};
use crate::stats::CorpusStats;

/// Default number of words per noncore group.
pub const DEFAULT_BLOCK_SIZE: usize = 50_000;

/// Columns of a strip materialized at once, bounding memory independently
/// of the group size.
const STRIP_CHUNK: usize = 1024;

/// Partition of `[0, W)` into the core prefix and consecutive noncore groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPlan {
    groups: Vec<Range<usize>>,
    block_size: usize,
}

pub fn plan_blocks(vocab_size: usize, core_size: usize, block_size: usize) -> Result<BlockPlan> {
    if core_size == 0 || core_size > vocab_size {
        return Err(Error::InvalidParameter(format!(
            "core size {core_size} must lie in [1, {vocab_size}]"
        )));
    }
    if block_size == 0 {
        return Err(Error::InvalidParameter("block size must be at least 1".into()));
    }
    let mut groups = vec![0..core_size];
    let mut start = core_size;
    while start < vocab_size {
        let end = (start + block_size).min(vocab_size);
        groups.push(start..end);
        start = end;
    }
    Ok(BlockPlan { groups, block_size })
}

impl BlockPlan {
    pub fn groups(&self) -> &[Range<usize>] {
        &self.groups
    }

    pub fn core(&self) -> Range<usize> {
        self.groups[0].clone()
    }

    pub fn core_size(&self) -> usize {
        self.groups[0].len()
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn noncore(&self) -> &[Range<usize>] {
        &self.groups[1..]
    }

    pub fn vocab_size(&self) -> usize {
        self.groups.last().map_or(0, |g| g.end)
    }
}

/// Tikhonov weight `mu` per word rank, as a step function over rank bands.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularizationSchedule {
    /// `(end, mu)`: ranks below `end` not covered by an earlier band get `mu`.
    bands: Vec<(usize, f64)>,
}

/// Tier boundaries of the reference layout (core, then three bands).
const TIER_LAYOUT: [usize; 4] = [25_000, 80_000, 130_000, 180_000];
const TIER_MU: [f64; 3] = [2.0, 4.0, 8.0];

impl RegularizationSchedule {
    /// `mu = 0` everywhere.
    pub fn none() -> Self {
        RegularizationSchedule { bands: Vec::new() }
    }

    /// `mu = 0` on the core, then 2, 4 and 8 on bands whose boundaries scale
    /// with the core size like 25k / 80k / 130k / 180k. Ranks past the last
    /// band keep `mu = 8`.
    pub fn tiered(core_size: usize) -> Self {
        let scale = core_size as f64 / TIER_LAYOUT[0] as f64;
        let mut bands = vec![(core_size, 0.0)];
        for (k, &mu) in TIER_MU.iter().enumerate() {
            let end = if k + 1 == TIER_MU.len() {
                usize::MAX
            } else {
                (TIER_LAYOUT[k + 1] as f64 * scale).round() as usize
            };
            bands.push((end.max(core_size), mu));
        }
        RegularizationSchedule { bands }
    }

    pub fn from_bands(bands: Vec<(usize, f64)>) -> Result<Self> {
        for w in bands.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidParameter("band ends must increase".into()));
            }
            if w[1].1 < w[0].1 {
                return Err(Error::InvalidParameter(
                    "mu must not decrease with rank".into(),
                ));
            }
        }
        if bands.iter().any(|&(_, mu)| !(mu >= 0.0) || !mu.is_finite()) {
            return Err(Error::InvalidParameter("mu must be finite and non-negative".into()));
        }
        Ok(RegularizationSchedule { bands })
    }

    pub fn bands(&self) -> &[(usize, f64)] {
        &self.bands
    }

    pub fn mu(&self, rank: usize) -> f64 {
        self.bands
            .iter()
            .find(|&&(end, _)| rank < end)
            .or(self.bands.last())
            .map_or(0.0, |&(_, mu)| mu)
    }
}

/// Minimizer of `sum_a f[a] (g[a] - v_a^T v)^2 + mu |v|^2` where `v_a` are
/// the columns of `v1` (`N x |S1|`).
pub fn ridge_solve_word(
    v1: MatRef<'_, f64>,
    g_bar: &[f64],
    f_bar: &[f64],
    mu: f64,
    word: &str,
) -> Result<Vec<f64>> {
    let (n, m) = (v1.nrows(), v1.ncols());
    if g_bar.len() != m || f_bar.len() != m {
        return Err(Error::Shape(format!(
            "ridge system for {word:?}: {m} core columns, {} targets, {} weights",
            g_bar.len(),
            f_bar.len()
        )));
    }
    if !(mu >= 0.0) || f_bar.iter().any(|&f| !(f >= 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "ridge system for {word:?} needs non-negative mu and weights"
        )));
    }
    let scaled = Mat::from_fn(n, m, |k, a| v1[(k, a)] * f_bar[a].sqrt());
    let mut gram = &scaled * scaled.transpose();
    let mut rhs = Mat::from_fn(n, 1, |k, _| {
        (0..m).map(|a| v1[(k, a)] * f_bar[a] * g_bar[a]).sum::<f64>()
    });
    let diag_max = (0..n).map(|k| gram[(k, k)]).fold(0.0f64, f64::max);
    for k in 0..n {
        gram[(k, k)] += mu;
    }
    let singular = || Error::Singular { word: word.to_owned() };
    let llt = gram.llt(Side::Lower).map_err(|_| singular())?;
    if mu == 0.0 {
        // Cholesky can succeed on a numerically rank-deficient matrix.
        let l = llt.L();
        let min_pivot = (0..n).map(|k| l[(k, k)] * l[(k, k)]).fold(f64::INFINITY, f64::min);
        if !(min_pivot > 1e-12 * diag_max) {
            return Err(singular());
        }
    }
    llt.solve_in_place(rhs.as_mut());
    let v: Vec<f64> = (0..n).map(|k| rhs[(k, 0)]).collect();
    if v.iter().any(|x| !x.is_finite()) {
        return Err(singular());
    }
    Ok(v)
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub embeddings: EmbeddingMatrix,
    /// BCD weighted-error trajectory of the core solve; `None` when the core
    /// was restored from a checkpoint.
    pub trajectory: Option<Vec<f64>>,
}

/// Factor checkpoint: one [`DenseBlock`] per finished group, rows `0..N`
/// and columns the group's word range.
struct Checkpoint {
    file: BufWriter<File>,
    vocab_size: usize,
    kappa: f64,
    c_cut: f64,
}

impl Checkpoint {
    /// Opens `path`, keeping every intact leading record that matches the
    /// plan and discarding anything after it.
    fn open(
        path: &Path,
        plan: &BlockPlan,
        stats: &CorpusStats,
        rank: usize,
    ) -> Result<(Checkpoint, Vec<Mat<f64>>)> {
        let vocab_size = stats.vocab_size();
        let kappa = stats.bigrams().kappa();
        let c_cut = stats.weights().c_cut();
        let mut done = Vec::new();
        let mut keep = 0u64;
        if path.exists() {
            let mut r = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
            while done.len() < plan.groups().len() {
                let block = match DenseBlock::read_from(&mut r) {
                    Ok(Some(b)) => b,
                    Ok(None) => break,
                    Err(e) => {
                        log::warn!("{}: dropping damaged checkpoint tail ({e})", path.display());
                        break;
                    }
                };
                let expected = &plan.groups()[done.len()];
                let matches = block.rows == (0..rank)
                    && block.cols == *expected
                    && block.vocab_size == vocab_size
                    && block.kappa.to_bits() == kappa.to_bits()
                    && block.c_cut.to_bits() == c_cut.to_bits();
                if !matches {
                    return Err(Error::InvalidParameter(format!(
                        "{}: checkpoint does not belong to this configuration",
                        path.display()
                    )));
                }
                keep += block.encoded_len();
                done.push(block.data);
            }
        }
        let mut file = OpenOptions::new()
            .create(true)
            .write(true)
            .truncate(false)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        file.set_len(keep).map_err(|e| Error::io(path, e))?;
        file.seek(std::io::SeekFrom::End(0)).map_err(|e| Error::io(path, e))?;
        if !done.is_empty() {
            log::info!("{}: resuming after {} finished groups", path.display(), done.len());
        }
        Ok((
            Checkpoint {
                file: BufWriter::new(file),
                vocab_size,
                kappa,
                c_cut,
            },
            done,
        ))
    }

    fn append(&mut self, cols: Range<usize>, factor: &Mat<f64>) -> Result<()> {
        let block = DenseBlock {
            rows: 0..factor.nrows(),
            cols,
            vocab_size: self.vocab_size,
            kappa: self.kappa,
            c_cut: self.c_cut,
            data: factor.clone(),
        };
        let io = |e| Error::io("<checkpoint>", e);
        block.write_to(&mut self.file).map_err(io)?;
        self.file.flush().map_err(io)?;
        self.file.get_ref().sync_data().map_err(io)
    }
}

/// Embeds the core with BCD on its symmetrized block (weights halved to
/// `[0, 1]`).
pub fn solve_core(stats: &CorpusStats, core: Range<usize>, cfg: &BcdConfig) -> Result<(Mat<f64>, Vec<f64>)> {
    let (g_bar, mut f_bar) = stats.symmetric_block(core)?;
    let n = f_bar.nrows();
    for j in 0..n {
        for i in 0..n {
            f_bar[(i, j)] *= 0.5;
        }
    }
    let g = SymmetricMatrix::new(g_bar)?;
    let sol = bcd_solve(&g, f_bar.as_ref(), cfg)?;
    Ok((sol.factor.into_inner(), sol.trajectory))
}

/// Embeds one noncore group against fixed core embeddings `v1`.
pub fn solve_group(
    stats: &CorpusStats,
    v1: MatRef<'_, f64>,
    core: Range<usize>,
    group: Range<usize>,
    schedule: &RegularizationSchedule,
    words: Option<&[String]>,
) -> Result<Mat<f64>> {
    let n = v1.nrows();
    let mut out = Mat::zeros(n, group.len());
    let mut start = group.start;
    while start < group.end {
        let end = (start + STRIP_CHUNK).min(group.end);
        let (g_bar, f_bar) = stats.strip(core.clone(), start..end)?;
        let cols: Vec<Vec<f64>> = (start..end)
            .into_par_iter()
            .map(|word| -> Result<Vec<f64>> {
                let b = word - start;
                let bigrams = stats.bigrams();
                let observed = (core.clone()).any(|i| bigrams.count(i, word) > 0.0)
                    || bigrams.has_observed_in(word, &core);
                if !observed {
                    return Ok(vec![0.0; n]);
                }
                let g: Vec<f64> = (0..g_bar.nrows()).map(|a| g_bar[(a, b)]).collect();
                let f: Vec<f64> = (0..f_bar.nrows()).map(|a| f_bar[(a, b)]).collect();
                let name = words.map_or_else(|| format!("#{word}"), |w| w[word].clone());
                ridge_solve_word(v1, &g, &f, schedule.mu(word), &name)
            })
            .collect::<Result<_>>()?;
        for (b, v) in cols.iter().enumerate() {
            for (k, &x) in v.iter().enumerate() {
                out[(k, start - group.start + b)] = x;
            }
        }
        start = end;
    }
    Ok(out)
}

/// Options for [`train_blockwise`] besides the plan and schedule.
#[derive(Debug, Clone, Default)]
pub struct TrainOptions<'a> {
    /// Append finished groups here and resume from it if present.
    pub checkpoint: Option<&'a Path>,
    /// Word strings, used to name words in errors.
    pub words: Option<&'a [String]>,
}

/// Core solve followed by one ridge pass per noncore group.
pub fn train_blockwise(
    stats: &CorpusStats,
    plan: &BlockPlan,
    schedule: &RegularizationSchedule,
    cfg: &BcdConfig,
    opts: &TrainOptions<'_>,
) -> Result<TrainOutput> {
    if plan.vocab_size() != stats.vocab_size() {
        return Err(Error::Shape(format!(
            "plan covers {} words, statistics have {}",
            plan.vocab_size(),
            stats.vocab_size()
        )));
    }
    cfg.validate()?;
    let (mut ckpt, mut done) = match opts.checkpoint {
        Some(p) => {
            let (c, d) = Checkpoint::open(p, plan, stats, cfg.rank)?;
            (Some(c), d)
        }
        None => (None, Vec::new()),
    };

    let core = plan.core();
    let mut trajectory = None;
    if done.is_empty() {
        log::info!("core solve: {} words, rank {}", core.len(), cfg.rank);
        let (v1, traj) = solve_core(stats, core.clone(), cfg)?;
        log::info!("core weighted error trajectory: {traj:?}");
        trajectory = Some(traj);
        if let Some(c) = ckpt.as_mut() {
            c.append(core.clone(), &v1)?;
        }
        done.push(v1);
    }

    for (k, group) in plan.groups().iter().enumerate().skip(1) {
        if k < done.len() {
            continue;
        }
        log::info!("group {k}/{}: words {}..{}", plan.groups().len() - 1, group.start, group.end);
        let vk = solve_group(stats, done[0].as_ref(), core.clone(), group.clone(), schedule, opts.words)?;
        if let Some(c) = ckpt.as_mut() {
            c.append(group.clone(), &vk)?;
        }
        done.push(vk);
    }

    let n = cfg.rank;
    let mut emb = EmbeddingMatrix::zeros(n, stats.vocab_size());
    for (group, v) in plan.groups().iter().zip(&done) {
        for (b, word) in group.clone().enumerate() {
            let dst = emb.vector_mut(word);
            for (k, x) in dst.iter_mut().enumerate() {
                *x = v[(k, b)];
            }
        }
    }
    Ok(TrainOutput {
        embeddings: emb,
        trajectory,
    })
}
