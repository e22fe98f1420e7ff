//! Smoothed bigram statistics, residual weights and the PMI regression target.
//!
//! Nothing here materializes a full `W x W` matrix unless asked to; dense
//! blocks are assembled on demand for the row and column ranges a solver
//! needs. All logarithms are natural.

use std::ops::Range;

use faer::{Mat, MatRef};

use crate::corpus::{CooccurrenceCounts, WordId};
use crate::error::{Error, Result};

/// Default smoothing weight for Jelinek-Mercer interpolation.
pub const DEFAULT_KAPPA: f64 = 0.02;
/// Default fraction of observed bigrams whose weight saturates at 1.
pub const DEFAULT_CUT_FRACTION: f64 = 0.0002;

/// Unigram probabilities `u`, estimated from token frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct UnigramDist {
    probs: Vec<f64>,
}

impl UnigramDist {
    pub fn from_counts(counts: &CooccurrenceCounts) -> Result<Self> {
        Self::from_token_counts(counts.unigram_counts())
    }

    pub fn from_token_counts(counts: &[f64]) -> Result<Self> {
        let total: f64 = counts.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidParameter(
                "unigram counts sum to zero".into(),
            ));
        }
        Ok(UnigramDist {
            probs: counts.iter().map(|&c| c / total).collect(),
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, i: usize) -> f64 {
        self.probs[i]
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Counts in compressed-row form, columns sorted within each row.
#[derive(Debug, Clone)]
struct SparseRows {
    offsets: Vec<usize>,
    cols: Vec<WordId>,
    vals: Vec<f64>,
}

impl SparseRows {
    fn from_counts(counts: &CooccurrenceCounts) -> Self {
        let w = counts.vocab_size();
        let pairs = counts.sorted_pairs();
        let mut offsets = vec![0usize; w + 1];
        for &(i, _, _) in &pairs {
            offsets[i as usize + 1] += 1;
        }
        for k in 0..w {
            offsets[k + 1] += offsets[k];
        }
        SparseRows {
            offsets,
            cols: pairs.iter().map(|p| p.1).collect(),
            vals: pairs.iter().map(|p| p.2).collect(),
        }
    }

    fn row(&self, i: usize) -> (&[WordId], &[f64]) {
        let r = self.offsets[i]..self.offsets[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    /// Entries of row `i` whose column falls in `cols`.
    fn row_in(&self, i: usize, cols: &Range<usize>) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (c, v) = self.row(i);
        let lo = c.partition_point(|&j| (j as usize) < cols.start);
        let hi = c.partition_point(|&j| (j as usize) < cols.end);
        c[lo..hi]
            .iter()
            .zip(&v[lo..hi])
            .map(|(&j, &x)| (j as usize, x))
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        match c.binary_search(&(j as WordId)) {
            Ok(k) => v[k],
            Err(_) => 0.0,
        }
    }

    fn nnz(&self) -> usize {
        self.vals.len()
    }
}

/// Smoothed joint distribution `H = (1 - kappa) X / total + kappa u u^T`.
#[derive(Debug, Clone)]
pub struct SmoothedBigrams {
    rows: SparseRows,
    total_pairs: f64,
    unigram: UnigramDist,
    kappa: f64,
}

impl SmoothedBigrams {
    pub fn new(counts: &CooccurrenceCounts, unigram: UnigramDist, kappa: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&kappa) {
            return Err(Error::InvalidParameter(format!(
                "kappa must lie in [0, 1], got {kappa}"
            )));
        }
        if unigram.len() != counts.vocab_size() {
            return Err(Error::Shape(format!(
                "unigram length {} vs vocabulary {}",
                unigram.len(),
                counts.vocab_size()
            )));
        }
        if kappa < 1.0 && !(counts.total_pairs() > 0.0) {
            return Err(Error::NoObservedBigrams);
        }
        Ok(SmoothedBigrams {
            rows: SparseRows::from_counts(counts),
            total_pairs: counts.total_pairs(),
            unigram,
            kappa,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.unigram.len()
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn unigram(&self) -> &UnigramDist {
        &self.unigram
    }

    pub fn num_observed(&self) -> usize {
        self.rows.nnz()
    }

    fn empirical(&self, x: f64) -> f64 {
        if self.kappa == 1.0 {
            0.0
        } else {
            (1.0 - self.kappa) * x / self.total_pairs
        }
    }

    fn backoff(&self, i: usize, j: usize) -> f64 {
        self.kappa * self.unigram.get(i) * self.unigram.get(j)
    }

    /// Smoothed `P(s_i, s_j)` with `s_i` the context and `s_j` the focus word.
    pub fn joint(&self, i: usize, j: usize) -> f64 {
        self.empirical(self.rows.get(i, j)) + self.backoff(i, j)
    }

    /// Raw count `x_ij`.
    pub fn count(&self, i: usize, j: usize) -> f64 {
        self.rows.get(i, j)
    }

    /// Observed (nonzero count) pairs of row `i` with their smoothed joints.
    pub fn observed_in_row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (c, v) = self.rows.row(i);
        c.iter()
            .zip(v)
            .map(move |(&j, &x)| (j as usize, self.empirical(x) + self.backoff(i, j as usize)))
    }

    /// Whether row `i` has an observed pair with a column in `cols`.
    pub fn has_observed_in(&self, i: usize, cols: &Range<usize>) -> bool {
        self.rows.row_in(i, cols).next().is_some()
    }

    /// Dense block of `H` for the given row and column ranges.
    pub fn block(&self, rows: Range<usize>, cols: Range<usize>) -> Mat<f64> {
        let u = self.unigram.probs();
        let mut h = Mat::from_fn(rows.len(), cols.len(), |a, b| {
            self.kappa * u[rows.start + a] * u[cols.start + b]
        });
        for (a, i) in rows.clone().enumerate() {
            for (j, x) in self.rows.row_in(i, &cols) {
                h[(a, j - cols.start)] += self.empirical(x);
            }
        }
        h
    }

    /// The whole `W x W` matrix. Only sensible for small vocabularies.
    pub fn dense(&self) -> Mat<f64> {
        let w = self.vocab_size();
        self.block(0..w, 0..w)
    }
}

/// GloVe-style residual weights: `f(h) = min(1, sqrt(h) / c_cut)` off the
/// diagonal, `0` on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightMatrix {
    c_cut: f64,
}

impl WeightMatrix {
    pub fn from_cutoff(c_cut: f64) -> Result<Self> {
        if !(c_cut > 0.0) || !c_cut.is_finite() {
            return Err(Error::InvalidParameter(format!("c_cut must be positive, got {c_cut}")));
        }
        Ok(WeightMatrix { c_cut })
    }

    /// Picks `c_cut` so that the top `cut_fraction` of observed off-diagonal
    /// bigrams (ranked by smoothed joint) saturate at weight 1.
    pub fn calibrate(bigrams: &SmoothedBigrams, cut_fraction: f64) -> Result<Self> {
        if !(cut_fraction > 0.0 && cut_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "cut_fraction must lie in (0, 1), got {cut_fraction}"
            )));
        }
        let mut hs: Vec<f64> = (0..bigrams.vocab_size())
            .flat_map(|i| {
                bigrams
                    .observed_in_row(i)
                    .filter(move |&(j, _)| j != i)
                    .map(|(_, h)| h)
            })
            .collect();
        if hs.is_empty() {
            return Err(Error::NoObservedBigrams);
        }
        let rank = saturation_rank(hs.len(), cut_fraction);
        let (_, kth, _) = hs.select_nth_unstable_by(rank - 1, |a, b| b.total_cmp(a));
        Self::from_cutoff(kth.sqrt())
    }

    pub fn c_cut(&self) -> f64 {
        self.c_cut
    }

    pub fn weight(&self, i: usize, j: usize, h: f64) -> f64 {
        if i == j {
            0.0
        } else {
            (h.sqrt() / self.c_cut).min(1.0)
        }
    }

    /// Dense block of `f(H)`.
    pub fn block(&self, bigrams: &SmoothedBigrams, rows: Range<usize>, cols: Range<usize>) -> Mat<f64> {
        let h = bigrams.block(rows.clone(), cols.clone());
        self.block_from_joint(h.as_ref(), rows, cols)
    }

    pub fn block_from_joint(&self, h: MatRef<'_, f64>, rows: Range<usize>, cols: Range<usize>) -> Mat<f64> {
        Mat::from_fn(rows.len(), cols.len(), |a, b| {
            self.weight(rows.start + a, cols.start + b, h[(a, b)])
        })
    }
}

/// 1-based rank of the last saturated bigram among `n` observed ones.
pub fn saturation_rank(n: usize, cut_fraction: f64) -> usize {
    ((cut_fraction * n as f64).ceil() as usize).clamp(1, n)
}

/// The PMI target `G*` and the smoothed conditional matrix `B*`, read
/// lazily from the smoothed joints.
#[derive(Debug, Clone, Copy)]
pub struct PmiTarget<'a> {
    bigrams: &'a SmoothedBigrams,
}

impl<'a> PmiTarget<'a> {
    pub fn new(bigrams: &'a SmoothedBigrams) -> Result<Self> {
        if let Some(i) = bigrams.unigram().probs().iter().position(|&p| !(p > 0.0)) {
            return Err(Error::Unsmoothed { row: i, col: i });
        }
        let w = bigrams.vocab_size();
        if bigrams.kappa() == 0.0 && bigrams.num_observed() < w * w {
            let (row, col) = (0..w)
                .flat_map(|i| (0..w).map(move |j| (i, j)))
                .find(|&(i, j)| bigrams.count(i, j) == 0.0)
                .unwrap_or((0, 0));
            return Err(Error::Unsmoothed { row, col });
        }
        Ok(PmiTarget { bigrams })
    }

    pub fn bigrams(&self) -> &'a SmoothedBigrams {
        self.bigrams
    }

    /// `B*_ij = P(s_j | s_i)`.
    pub fn conditional(&self, i: usize, j: usize) -> f64 {
        self.bigrams.joint(i, j) / self.bigrams.unigram().get(i)
    }

    /// `G*_ij = log B*_ij - log u_j`.
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.conditional(i, j).ln() - self.bigrams.unigram().get(j).ln()
    }

    pub fn block(&self, rows: Range<usize>, cols: Range<usize>) -> Result<Mat<f64>> {
        let h = self.bigrams.block(rows.clone(), cols.clone());
        self.block_from_joint(h.as_ref(), rows, cols)
    }

    pub fn block_from_joint(
        &self,
        h: MatRef<'_, f64>,
        rows: Range<usize>,
        cols: Range<usize>,
    ) -> Result<Mat<f64>> {
        let u = self.bigrams.unigram().probs();
        let mut g = Mat::zeros(rows.len(), cols.len());
        for b in 0..cols.len() {
            let j = cols.start + b;
            for a in 0..rows.len() {
                let i = rows.start + a;
                let hij = h[(a, b)];
                if !(hij > 0.0) {
                    return Err(Error::Unsmoothed { row: i, col: j });
                }
                g[(a, b)] = (hij / u[i]).ln() - u[j].ln();
            }
        }
        Ok(g)
    }
}

/// Merges the two directions of a bigram block: `f_bar = f_ij + f_ji^T`
/// and `g_bar` is the `f`-weighted mean of `g_ij` and `g_ji^T` (0 where both
/// weights vanish). `g_ij`/`f_ij` are `r x c`; `g_ji`/`f_ji` are `c x r`.
pub fn symmetrize(
    g_ij: MatRef<'_, f64>,
    g_ji: MatRef<'_, f64>,
    f_ij: MatRef<'_, f64>,
    f_ji: MatRef<'_, f64>,
) -> Result<(Mat<f64>, Mat<f64>)> {
    let (r, c) = (g_ij.nrows(), g_ij.ncols());
    let conforming = f_ij.nrows() == r
        && f_ij.ncols() == c
        && g_ji.nrows() == c
        && g_ji.ncols() == r
        && f_ji.nrows() == c
        && f_ji.ncols() == r;
    if !conforming {
        return Err(Error::Shape(format!(
            "symmetrize: G_ij {}x{}, G_ji {}x{}, f_ij {}x{}, f_ji {}x{}",
            r,
            c,
            g_ji.nrows(),
            g_ji.ncols(),
            f_ij.nrows(),
            f_ij.ncols(),
            f_ji.nrows(),
            f_ji.ncols()
        )));
    }
    let mut g_bar = Mat::zeros(r, c);
    let mut f_bar = Mat::zeros(r, c);
    for b in 0..c {
        for a in 0..r {
            let (w1, w2) = (f_ij[(a, b)], f_ji[(b, a)]);
            let w = w1 + w2;
            f_bar[(a, b)] = w;
            g_bar[(a, b)] = if w2 == 0.0 && w1 > 0.0 {
                g_ij[(a, b)]
            } else if w1 == 0.0 && w2 > 0.0 {
                g_ji[(b, a)]
            } else if w > 0.0 {
                (g_ij[(a, b)] * w1 + g_ji[(b, a)] * w2) / w
            } else {
                0.0
            };
        }
    }
    Ok((g_bar, f_bar))
}

/// Everything the solvers read from a corpus: smoothed joints and weights.
#[derive(Debug, Clone)]
pub struct CorpusStats {
    bigrams: SmoothedBigrams,
    weights: WeightMatrix,
}

impl CorpusStats {
    pub fn new(counts: &CooccurrenceCounts, kappa: f64, cut_fraction: f64) -> Result<Self> {
        let unigram = UnigramDist::from_counts(counts)?;
        let bigrams = SmoothedBigrams::new(counts, unigram, kappa)?;
        let weights = WeightMatrix::calibrate(&bigrams, cut_fraction)?;
        let stats = CorpusStats { bigrams, weights };
        stats.pmi()?;
        Ok(stats)
    }

    pub fn from_parts(bigrams: SmoothedBigrams, weights: WeightMatrix) -> Result<Self> {
        let stats = CorpusStats { bigrams, weights };
        stats.pmi()?;
        Ok(stats)
    }

    pub fn bigrams(&self) -> &SmoothedBigrams {
        &self.bigrams
    }

    pub fn weights(&self) -> &WeightMatrix {
        &self.weights
    }

    pub fn unigram(&self) -> &UnigramDist {
        self.bigrams.unigram()
    }

    pub fn vocab_size(&self) -> usize {
        self.bigrams.vocab_size()
    }

    pub fn pmi(&self) -> Result<PmiTarget<'_>> {
        PmiTarget::new(&self.bigrams)
    }

    /// `(G*, f(H))` for one block.
    pub fn target_block(&self, rows: Range<usize>, cols: Range<usize>) -> Result<(Mat<f64>, Mat<f64>)> {
        let h = self.bigrams.block(rows.clone(), cols.clone());
        let g = self.pmi()?.block_from_joint(h.as_ref(), rows.clone(), cols.clone())?;
        let f = self.weights.block_from_joint(h.as_ref(), rows, cols);
        Ok((g, f))
    }

    /// Symmetrized `(G_bar, f_bar)` for a diagonal block (`range x range`).
    pub fn symmetric_block(&self, range: Range<usize>) -> Result<(Mat<f64>, Mat<f64>)> {
        let (g, f) = self.target_block(range.clone(), range)?;
        // The mirror of a diagonal block is the block itself.
        symmetrize(g.as_ref(), g.as_ref(), f.as_ref(), f.as_ref())
    }

    /// Symmetrized `(G_bar, f_bar)` for the strip `rows x cols` merged with
    /// its mirror `cols x rows`. Output is `rows.len() x cols.len()`.
    pub fn strip(&self, rows: Range<usize>, cols: Range<usize>) -> Result<(Mat<f64>, Mat<f64>)> {
        let (g_rc, f_rc) = self.target_block(rows.clone(), cols.clone())?;
        let (g_cr, f_cr) = self.target_block(cols, rows)?;
        symmetrize(g_rc.as_ref(), g_cr.as_ref(), f_rc.as_ref(), f_cr.as_ref())
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use super::*;

    fn toy_counts() -> CooccurrenceCounts {
        let mut pairs = HashMap::new();
        pairs.insert((0, 1), 4.0);
        pairs.insert((1, 0), 2.0);
        pairs.insert((0, 2), 1.0);
        pairs.insert((2, 2), 3.0);
        CooccurrenceCounts::from_parts(pairs, vec![5.0, 3.0, 2.0], 2).unwrap()
    }

    fn mat_sum(m: &Mat<f64>) -> f64 {
        let mut s = 0.0;
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                s += m[(i, j)];
            }
        }
        s
    }

    #[test]
    fn unigram_ratios() {
        let u = UnigramDist::from_token_counts(&[3.0, 1.0]).unwrap();
        assert_eq!(u.probs(), [0.75, 0.25]);
        assert_eq!(UnigramDist::from_token_counts(&[5.0]).unwrap().probs(), [1.0]);
        assert_eq!(UnigramDist::from_token_counts(&[2.0, 2.0]).unwrap().probs(), [0.5, 0.5]);
        assert!(UnigramDist::from_token_counts(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn kappa_zero_is_empirical_and_one_is_independent() {
        let counts = toy_counts();
        let u = UnigramDist::from_counts(&counts).unwrap();
        let h0 = SmoothedBigrams::new(&counts, u.clone(), 0.0).unwrap();
        assert_eq!(h0.joint(0, 1), 0.4);
        assert_eq!(h0.joint(1, 2), 0.0);
        let h1 = SmoothedBigrams::new(&counts, u.clone(), 1.0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((h1.joint(i, j) - u.get(i) * u.get(j)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn kappa_outside_unit_interval_is_rejected() {
        let counts = toy_counts();
        let u = UnigramDist::from_counts(&counts).unwrap();
        assert!(SmoothedBigrams::new(&counts, u.clone(), -0.1).is_err());
        assert!(SmoothedBigrams::new(&counts, u, 1.5).is_err());
    }

    #[test]
    fn smoothing_preserves_mass() {
        let counts = toy_counts();
        for kappa in [0.0, 0.02, 0.5, 1.0] {
            let u = UnigramDist::from_counts(&counts).unwrap();
            let h = SmoothedBigrams::new(&counts, u, kappa).unwrap();
            assert!((mat_sum(&h.dense()) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn block_matches_pointwise_joint() {
        let counts = toy_counts();
        let u = UnigramDist::from_counts(&counts).unwrap();
        let h = SmoothedBigrams::new(&counts, u, 0.3).unwrap();
        let b = h.block(1..3, 0..2);
        for a in 0..2 {
            for c in 0..2 {
                assert_eq!(b[(a, c)], h.joint(1 + a, c));
            }
        }
    }

    #[test]
    fn weight_rule() {
        let f = WeightMatrix::from_cutoff(0.1).unwrap();
        assert_eq!(f.weight(3, 3, 0.5), 0.0);
        assert_eq!(f.weight(0, 1, 0.02), 1.0);
        assert_eq!(f.weight(0, 1, 0.01), 1.0);
        assert!((f.weight(0, 1, 0.01 / 4.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn calibration_needs_observations() {
        let counts = CooccurrenceCounts::from_parts(HashMap::new(), vec![1.0, 1.0], 1).unwrap();
        let u = UnigramDist::from_counts(&counts).unwrap();
        let h = SmoothedBigrams::new(&counts, u, 1.0).unwrap();
        assert!(matches!(WeightMatrix::calibrate(&h, 0.1), Err(Error::NoObservedBigrams)));
    }

    #[test]
    fn calibration_saturates_top_fraction() {
        let counts = toy_counts();
        let u = UnigramDist::from_counts(&counts).unwrap();
        let h = SmoothedBigrams::new(&counts, u, 0.0).unwrap();
        // off-diagonal observed: (0,1)=.4, (1,0)=.2, (0,2)=.1 -> rank ceil(.34*3)=2
        let f = WeightMatrix::calibrate(&h, 0.34).unwrap();
        assert!((f.c_cut() - 0.2f64.sqrt()).abs() < 1e-15);
        assert_eq!(f.weight(0, 1, h.joint(0, 1)), 1.0);
        assert_eq!(f.weight(1, 0, h.joint(1, 0)), 1.0);
        assert!(f.weight(0, 2, h.joint(0, 2)) < 1.0);
    }

    #[test]
    fn pmi_of_independent_words_is_zero() {
        let counts = toy_counts();
        let u = UnigramDist::from_counts(&counts).unwrap();
        let h = SmoothedBigrams::new(&counts, u, 1.0).unwrap();
        let g = PmiTarget::new(&h).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!(g.value(i, j).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn pmi_direct_formula() {
        // u = (.5, .5); x_01 = 1 only, kappa = 0 would leave zeros, so
        // check the formula through the block path with all pairs observed.
        let mut pairs = HashMap::new();
        pairs.insert((0, 0), 0.5);
        pairs.insert((0, 1), 2.0);
        pairs.insert((1, 0), 1.0);
        pairs.insert((1, 1), 0.5);
        let counts = CooccurrenceCounts::from_parts(pairs, vec![1.0, 1.0], 1).unwrap();
        let u = UnigramDist::from_counts(&counts).unwrap();
        let h = SmoothedBigrams::new(&counts, u, 0.0).unwrap();
        assert_eq!(h.joint(0, 1), 0.5);
        let g = PmiTarget::new(&h).unwrap();
        assert!((g.value(0, 1) - 2f64.ln()).abs() < 1e-15);
        let gb = g.block(0..2, 0..2).unwrap();
        assert!((gb[(0, 1)] - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn pmi_asymmetry_is_log_joint_ratio() {
        let counts = toy_counts();
        let u = UnigramDist::from_counts(&counts).unwrap();
        let h = SmoothedBigrams::new(&counts, u, 0.02).unwrap();
        let g = PmiTarget::new(&h).unwrap();
        let lhs = g.value(0, 1) - g.value(1, 0);
        let rhs = h.joint(0, 1).ln() - h.joint(1, 0).ln();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn pmi_requires_smoothing() {
        let counts = toy_counts();
        let u = UnigramDist::from_counts(&counts).unwrap();
        let h = SmoothedBigrams::new(&counts, u, 0.0).unwrap();
        assert!(matches!(PmiTarget::new(&h), Err(Error::Unsmoothed { .. })));
    }

    #[test]
    fn symmetrize_examples() {
        let g = Mat::from_fn(2, 3, |i, j| (i * 3 + j) as f64);
        let f = Mat::from_fn(2, 3, |i, j| 0.1 * (1 + i + j) as f64);
        let (gb, fb) = symmetrize(g.as_ref(), g.transpose(), f.as_ref(), f.transpose()).unwrap();
        // Symmetric input: g_ji = g_ij^T, f_ji = f_ij^T.
        for i in 0..2 {
            for j in 0..3 {
                assert!((gb[(i, j)] - g[(i, j)]).abs() < 1e-14);
                assert!((fb[(i, j)] - 2.0 * f[(i, j)]).abs() < 1e-15);
            }
        }
        // One-sided evidence.
        let zeros = Mat::<f64>::zeros(3, 2);
        let other = Mat::from_fn(3, 2, |i, j| 100.0 + (i + j) as f64);
        let (gb, fb) = symmetrize(g.as_ref(), other.as_ref(), f.as_ref(), zeros.as_ref()).unwrap();
        assert_eq!(gb, g);
        assert_eq!(fb, f);
        // Weighted mean.
        let (gb, fb) = symmetrize(
            Mat::from_fn(1, 1, |_, _| 1.0).as_ref(),
            Mat::from_fn(1, 1, |_, _| 3.0).as_ref(),
            Mat::from_fn(1, 1, |_, _| 1.0).as_ref(),
            Mat::from_fn(1, 1, |_, _| 1.0).as_ref(),
        )
        .unwrap();
        assert_eq!(gb[(0, 0)], 2.0);
        assert_eq!(fb[(0, 0)], 2.0);
    }

    #[test]
    fn symmetrize_zero_weights_give_zero() {
        let g = Mat::from_fn(2, 2, |_, _| 5.0);
        let z = Mat::<f64>::zeros(2, 2);
        let (gb, fb) = symmetrize(g.as_ref(), g.as_ref(), z.as_ref(), z.as_ref()).unwrap();
        assert_eq!(gb, z);
        assert_eq!(fb, z);
    }

    #[test]
    fn symmetrize_rejects_bad_shapes() {
        let a = Mat::<f64>::zeros(2, 3);
        let b = Mat::<f64>::zeros(2, 3);
        assert!(matches!(
            symmetrize(a.as_ref(), b.as_ref(), a.as_ref(), b.as_ref()),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn strip_matches_manual_symmetrization() {
        let counts = toy_counts();
        let stats = CorpusStats::new(&counts, 0.05, 0.3).unwrap();
        let (gb, fb) = stats.strip(0..1, 1..3).unwrap();
        let pmi = stats.pmi().unwrap();
        let h = stats.bigrams();
        for (b, j) in (1..3).enumerate() {
            let f1 = stats.weights().weight(0, j, h.joint(0, j));
            let f2 = stats.weights().weight(j, 0, h.joint(j, 0));
            let want = (pmi.value(0, j) * f1 + pmi.value(j, 0) * f2) / (f1 + f2);
            assert!((gb[(0, b)] - want).abs() < 1e-12);
            assert!((fb[(0, b)] - (f1 + f2)).abs() < 1e-15);
        }
    }

    #[test]
    fn diagonal_block_is_symmetrized() {
        let counts = toy_counts();
        let stats = CorpusStats::new(&counts, 0.05, 0.3).unwrap();
        let (gb, fb) = stats.symmetric_block(0..3).unwrap();
        let pmi = stats.pmi().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(gb[(i, j)], gb[(j, i)]);
                assert_eq!(fb[(i, j)], fb[(j, i)]);
            }
        }
        let h = stats.bigrams();
        let f1 = stats.weights().weight(0, 1, h.joint(0, 1));
        let f2 = stats.weights().weight(1, 0, h.joint(1, 0));
        assert!(pmi.value(0, 1) != pmi.value(1, 0));
        let want = (pmi.value(0, 1) * f1 + pmi.value(1, 0) * f2) / (f1 + f2);
        assert!((gb[(0, 1)] - want).abs() < 1e-12);
    }
}
