//! The generative link functions: bigram joints, window conditionals,
//! document log-likelihood, and the pointwise interaction diagnostic.
//!
//! Residuals `a_ij = G*_ij - v_i^T v_j` are computed on demand from the
//! statistics; nothing here builds a dense `W x W` matrix.

use std::fmt;

use crate::corpus::{Document, Vocabulary, WordId};
use crate::embedding::{dot, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::stats::{CorpusStats, PmiTarget};

/// Read-only view of residuals `a_ij = G*_ij - v_i^T v_j`.
#[derive(Debug, Clone, Copy)]
pub struct ResidualView<'a> {
    pmi: PmiTarget<'a>,
    embeddings: &'a EmbeddingMatrix,
}

impl<'a> ResidualView<'a> {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pmi.value(i, j) - self.embeddings.dot(i, j)
    }
}

/// Embeddings plus the statistics they were trained on.
#[derive(Debug, Clone, Copy)]
pub struct ModelHandle<'a> {
    embeddings: &'a EmbeddingMatrix,
    stats: &'a CorpusStats,
    pmi: PmiTarget<'a>,
    window: usize,
}

impl<'a> ModelHandle<'a> {
    pub fn new(embeddings: &'a EmbeddingMatrix, stats: &'a CorpusStats, window: usize) -> Result<Self> {
        if embeddings.len() != stats.vocab_size() {
            return Err(Error::Shape(format!(
                "{} embeddings for a vocabulary of {}",
                embeddings.len(),
                stats.vocab_size()
            )));
        }
        if window == 0 {
            return Err(Error::InvalidParameter("window must be at least 1".into()));
        }
        Ok(ModelHandle {
            embeddings,
            stats,
            pmi: stats.pmi()?,
            window,
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn vocab_size(&self) -> usize {
        self.embeddings.len()
    }

    pub fn unigram(&self, i: usize) -> f64 {
        self.stats.unigram().get(i)
    }

    pub fn residuals(&self) -> ResidualView<'a> {
        ResidualView {
            pmi: self.pmi,
            embeddings: self.embeddings,
        }
    }

    fn check(&self, ids: &[WordId]) -> Result<()> {
        match ids.iter().find(|&&i| i as usize >= self.vocab_size()) {
            Some(bad) => Err(Error::InvalidParameter(format!(
                "word id {bad} outside vocabulary of size {}",
                self.vocab_size()
            ))),
            None => Ok(()),
        }
    }

    /// `P(s_i, s_j) = exp(v_j^T v_i + a_ij) u_i u_j`, context `i`, focus `j`.
    pub fn bigram_joint(&self, i: WordId, j: WordId, use_residuals: bool) -> Result<f64> {
        self.check(&[i, j])?;
        let (i, j) = (i as usize, j as usize);
        let a = if use_residuals { self.residuals().get(i, j) } else { 0.0 };
        Ok(bigram_link(self.embeddings.dot(i, j), a, self.unigram(i), self.unigram(j)))
    }

    fn window_log_score(&self, focus: usize, context: &[WordId], use_residuals: bool) -> f64 {
        let vf = self.embeddings.vector(focus);
        let residuals = self.residuals();
        let mut s = self.unigram(focus).ln();
        for &c in context {
            s += dot(vf, self.embeddings.vector(c as usize));
            if use_residuals {
                s += residuals.get(c as usize, focus);
            }
        }
        s
    }

    /// `P(w_c | w_0..w_{c-1}) = u_c exp(v_c^T sum_i v_i + sum_i a_{i c})`,
    /// unnormalized over the vocabulary.
    pub fn window_conditional(&self, focus: WordId, context: &[WordId], use_residuals: bool) -> Result<f64> {
        self.check_window(focus, context)?;
        Ok(self.window_log_score(focus as usize, context, use_residuals).exp())
    }

    /// Like [`Self::window_conditional`] but renormalized over every focus word.
    /// Costs `O(W)` per call.
    pub fn window_conditional_normalized(
        &self,
        focus: WordId,
        context: &[WordId],
        use_residuals: bool,
    ) -> Result<f64> {
        self.check_window(focus, context)?;
        let z: f64 = (0..self.vocab_size())
            .map(|w| self.window_log_score(w, context, use_residuals).exp())
            .sum();
        Ok(self.window_log_score(focus as usize, context, use_residuals).exp() / z)
    }

    fn check_window(&self, focus: WordId, context: &[WordId]) -> Result<()> {
        if context.len() > self.window {
            return Err(Error::InvalidParameter(format!(
                "context of {} words exceeds window {}",
                context.len(),
                self.window
            )));
        }
        self.check(&[focus])?;
        self.check(context)
    }

    /// `sum_t log u_t + v_t^T sum_k v_k + sum_k a_kt` over windows clipped
    /// at the document start.
    pub fn document_log_likelihood(&self, doc: &[WordId], use_residuals: bool) -> Result<f64> {
        self.check(doc)?;
        Ok(doc
            .iter()
            .enumerate()
            .map(|(t, &w)| {
                let ctx = &doc[t.saturating_sub(self.window)..t];
                self.window_log_score(w as usize, ctx, use_residuals)
            })
            .sum())
    }
}

/// `exp(inner + a) u_i u_j`.
pub fn bigram_link(inner: f64, a: f64, u_i: f64, u_j: f64) -> f64 {
    (inner + a).exp() * u_i * u_j
}

/// Maps tokens to ids, failing with every out-of-vocabulary token.
pub fn encode_strict<S: AsRef<str>>(vocab: &Vocabulary, tokens: &[S]) -> Result<Document> {
    let mut missing = Vec::new();
    let mut ids = Vec::with_capacity(tokens.len());
    for t in tokens {
        match vocab.id(t.as_ref()) {
            Some(i) => ids.push(i),
            None => {
                if !missing.iter().any(|m: &String| m == t.as_ref()) {
                    missing.push(t.as_ref().to_owned());
                }
            }
        }
    }
    if missing.is_empty() {
        Ok(Document { tokens: ids })
    } else {
        Err(Error::OutOfVocabulary { tokens: missing })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocumentScore {
    pub id: String,
    pub tokens: usize,
    pub ll_residual: f64,
    pub ll_plain: f64,
}

/// Per-document log-likelihoods with and without residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct PerplexityReport {
    pub documents: Vec<DocumentScore>,
}

impl PerplexityReport {
    pub fn total_tokens(&self) -> usize {
        self.documents.iter().map(|d| d.tokens).sum()
    }

    /// `exp(-LL / tokens)` with residuals.
    pub fn perplexity_residual(&self) -> f64 {
        let ll: f64 = self.documents.iter().map(|d| d.ll_residual).sum();
        (-ll / self.total_tokens() as f64).exp()
    }

    /// `exp(-LL / tokens)` without residuals.
    pub fn perplexity_plain(&self) -> f64 {
        let ll: f64 = self.documents.iter().map(|d| d.ll_plain).sum();
        (-ll / self.total_tokens() as f64).exp()
    }
}

impl fmt::Display for PerplexityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "doc\ttokens\tll_residual\tll_plain")?;
        for d in &self.documents {
            writeln!(f, "{}\t{}\t{:.6}\t{:.6}", d.id, d.tokens, d.ll_residual, d.ll_plain)?;
        }
        writeln!(
            f,
            "# tokens={} perplexity_residual={:.4} perplexity_plain={:.4}",
            self.total_tokens(),
            self.perplexity_residual(),
            self.perplexity_plain()
        )
    }
}

pub fn model_perplexity_report(docs: &[(String, Document)], model: &ModelHandle<'_>) -> Result<PerplexityReport> {
    let documents: Vec<DocumentScore> = docs
        .iter()
        .filter(|(_, d)| !d.tokens.is_empty())
        .map(|(id, d)| {
            Ok(DocumentScore {
                id: id.clone(),
                tokens: d.tokens.len(),
                ll_residual: model.document_log_likelihood(&d.tokens, true)?,
                ll_plain: model.document_log_likelihood(&d.tokens, false)?,
            })
        })
        .collect::<Result<_>>()?;
    if documents.is_empty() {
        return Err(Error::InvalidParameter("no non-empty documents to score".into()));
    }
    Ok(PerplexityReport { documents })
}

/// A joint distribution `P(x1, x2, y)` over finite alphabets.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigramJoint {
    dims: [usize; 3],
    p: Vec<f64>,
}

impl TrigramJoint {
    pub fn new(dims: [usize; 3], p: Vec<f64>) -> Result<Self> {
        if dims.iter().product::<usize>() != p.len() || p.is_empty() {
            return Err(Error::Shape(format!("{} probabilities for dims {dims:?}", p.len())));
        }
        if p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidParameter("probabilities must be finite and non-negative".into()));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("joint sums to {total}, not 1")));
        }
        Ok(TrigramJoint { dims, p })
    }

    /// Normalizes non-negative counts.
    pub fn from_counts(dims: [usize; 3], counts: Vec<f64>) -> Result<Self> {
        let total: f64 = counts.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidParameter("no trigram mass".into()));
        }
        Self::new(dims, counts.into_iter().map(|c| c / total).collect())
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn get(&self, x1: usize, x2: usize, y: usize) -> f64 {
        self.p[(x1 * self.dims[1] + x2) * self.dims[2] + y]
    }

    fn outcomes(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let [a, b, c] = self.dims;
        (0..a).flat_map(move |i| (0..b).flat_map(move |j| (0..c).map(move |k| (i, j, k))))
    }

    /// Marginal over the axes flagged `true` in `keep`, indexed densely.
    fn marginal(&self, keep: [bool; 3]) -> (Vec<f64>, impl Fn(usize, usize, usize) -> usize) {
        let d = self.dims;
        let size = |k: usize| if keep[k] { d[k] } else { 1 };
        let (s0, s1, s2) = (size(0), size(1), size(2));
        let index = move |i: usize, j: usize, k: usize| {
            let i = if keep[0] { i } else { 0 };
            let j = if keep[1] { j } else { 0 };
            let k = if keep[2] { k } else { 0 };
            (i * s1 + j) * s2 + k
        };
        let mut m = vec![0.0; s0 * s1 * s2];
        for (i, j, k) in self.outcomes() {
            m[index(i, j, k)] += self.get(i, j, k);
        }
        (m, index)
    }

    fn entropy(&self, keep: [bool; 3]) -> f64 {
        let (m, _) = self.marginal(keep);
        -m.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>()
    }
}

/// Per-outcome pointwise interaction information and its expectation.
#[derive(Debug, Clone, PartialEq)]
pub struct PintReport {
    /// `(x1, x2, y, PInt)` for every outcome with positive probability.
    pub values: Vec<(usize, usize, usize, f64)>,
    pub expectation: f64,
}

/// `PInt = log P(x1)P(x2)P(y)P(x1,x2,y) / (P(x1,x2)P(x1,y)P(x2,y))` over the
/// support of `joint`.
pub fn pint(joint: &TrigramJoint) -> Result<PintReport> {
    let (p1, i1) = joint.marginal([true, false, false]);
    let (p2, i2) = joint.marginal([false, true, false]);
    let (py, iy) = joint.marginal([false, false, true]);
    let (p12, i12) = joint.marginal([true, true, false]);
    let (p1y, i1y) = joint.marginal([true, false, true]);
    let (p2y, i2y) = joint.marginal([false, true, true]);
    let mut values = Vec::new();
    let mut expectation = 0.0;
    for (a, b, c) in joint.outcomes() {
        let p = joint.get(a, b, c);
        if p == 0.0 {
            continue;
        }
        let num = p1[i1(a, b, c)] * p2[i2(a, b, c)] * py[iy(a, b, c)] * p;
        let den = p12[i12(a, b, c)] * p1y[i1y(a, b, c)] * p2y[i2y(a, b, c)];
        if !(num > 0.0 && den > 0.0) {
            return Err(Error::Undefined(format!("zero marginal at outcome ({a}, {b}, {c})")));
        }
        let v = num.ln() - den.ln();
        values.push((a, b, c, v));
        expectation += p * v;
    }
    Ok(PintReport { values, expectation })
}

/// `I(y; x1, x2) - I(y; x1) - I(y; x2)` from entropies.
pub fn interaction_information(joint: &TrigramJoint) -> f64 {
    let h = |k| joint.entropy(k);
    let (t, f) = (true, false);
    let i_y_12 = h([f, f, t]) + h([t, t, f]) - h([t, t, t]);
    let i_y_1 = h([f, f, t]) + h([t, f, f]) - h([t, f, t]);
    let i_y_2 = h([f, f, t]) + h([f, t, f]) - h([f, t, t]);
    i_y_12 - i_y_1 - i_y_2
}

/// Empirical joint of consecutive `(w_{t-2}, w_{t-1}, w_t)` restricted to
/// the `k` most frequent words.
pub fn trigram_joint(docs: &[Document], k: usize) -> Result<TrigramJoint> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let mut counts = vec![0.0; k * k * k];
    for d in docs {
        for w in d.tokens.windows(3) {
            let (a, b, c) = (w[0] as usize, w[1] as usize, w[2] as usize);
            if a < k && b < k && c < k {
                counts[(a * k + b) * k + c] += 1.0;
            }
        }
    }
    TrigramJoint::from_counts([k, k, k], counts)
}
