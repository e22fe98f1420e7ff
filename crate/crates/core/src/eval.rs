//! Word similarity (Spearman) and analogy (3CosAdd / 3CosMul) benchmarks.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use faer::Mat;
use rayon::prelude::*;

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};

/// Additive constant in the 3CosMul denominator.
pub const COSMUL_EPSILON: f64 = 0.001;

/// Average ranks (1-based), ties sharing the mean of their positions.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut k = 0;
    while k < order.len() {
        let mut e = k + 1;
        while e < order.len() && xs[order[e]] == xs[order[k]] {
            e += 1;
        }
        let r = (k + e + 1) as f64 / 2.0;
        for &i in &order[k..e] {
            ranks[i] = r;
        }
        k = e;
    }
    ranks
}

/// Spearman's rank correlation: Pearson correlation of average ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Shape(format!("{} vs {} values", xs.len(), ys.len())));
    }
    if xs.len() < 2 {
        return Err(Error::Undefined("Spearman correlation needs at least two pairs".into()));
    }
    if xs.iter().chain(ys).any(|x| x.is_nan()) {
        return Err(Error::InvalidParameter("NaN in ranked values".into()));
    }
    let (rx, ry) = (average_ranks(xs), average_ranks(ys));
    let n = xs.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (da, db) = (a - mean, b - mean);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Undefined("zero rank variance".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityDataset {
    pub name: String,
    pub pairs: Vec<(String, String, f64)>,
}

impl SimilarityDataset {
    /// `word1 word2 score` per line, whitespace or tab separated. Lines
    /// starting with `#` and repeated unordered pairs are skipped.
    pub fn parse(name: &str, text: &str) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut pairs = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() < 3 {
                return Err(Error::parse(name, no + 1, "expected `word1 word2 score`"));
            }
            let score: f64 = f[2]
                .parse()
                .ok()
                .filter(|s: &f64| s.is_finite())
                .ok_or_else(|| Error::parse(name, no + 1, format!("bad score {:?}", f[2])))?;
            let (a, b) = (f[0].to_lowercase(), f[1].to_lowercase());
            let key = if a <= b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
            if seen.insert(key) {
                pairs.push((a, b, score));
            }
        }
        Ok(SimilarityDataset { name: name.to_owned(), pairs })
    }

    pub fn load(name: &str, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(name, &text)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalogyDataset {
    pub name: String,
    /// `(a, a*, b, b*)`: `a` is to `a*` as `b` is to `b*`.
    pub questions: Vec<[String; 4]>,
}

impl AnalogyDataset {
    /// Whitespace-separated quadruples; `:` section headers and questions
    /// with repeated words are skipped.
    pub fn parse(name: &str, text: &str) -> Result<Self> {
        let mut questions = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with(':') || line.starts_with('#') {
                continue;
            }
            let f: Vec<String> = line.split_whitespace().map(str::to_lowercase).collect();
            let q: [String; 4] = f
                .try_into()
                .map_err(|_| Error::parse(name, no + 1, "expected four words"))?;
            let distinct: HashSet<&String> = q.iter().collect();
            if distinct.len() == 4 {
                questions.push(q);
            }
        }
        Ok(AnalogyDataset { name: name.to_owned(), questions })
    }

    pub fn load(name: &str, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(name, &text)
    }
}

/// Unit-normalized embeddings with a word index.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    words: Vec<String>,
    index: HashMap<String, usize>,
    unit: EmbeddingMatrix,
}

impl EmbeddingTable {
    pub fn new(words: Vec<String>, embeddings: &EmbeddingMatrix) -> Result<Self> {
        if words.len() != embeddings.len() {
            return Err(Error::Shape(format!(
                "{} words for {} embeddings",
                words.len(),
                embeddings.len()
            )));
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            index.entry(w.clone()).or_insert(i);
        }
        Ok(EmbeddingTable {
            words,
            index,
            unit: embeddings.normalized(),
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words[id]
    }

    pub fn cosine(&self, i: usize, j: usize) -> f64 {
        self.unit.dot(i, j)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalogyMethod {
    Add,
    Mul,
}

/// Scores of every candidate given its cosines to `b`, `a` and `a*`.
fn analogy_score(method: AnalogyMethod, cb: f64, ca: f64, cs: f64) -> f64 {
    match method {
        AnalogyMethod::Add => cb - ca + cs,
        AnalogyMethod::Mul => {
            let p = |c: f64| (c + 1.0) / 2.0;
            p(cb) * p(cs) / (p(ca) + COSMUL_EPSILON)
        }
    }
}

/// Best candidate, excluding the question words; lowest id wins ties.
fn best_candidate(
    method: AnalogyMethod,
    exclude: [usize; 3],
    cos: impl Fn(usize) -> (f64, f64, f64),
    n: usize,
) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for x in 0..n {
        if exclude.contains(&x) {
            continue;
        }
        let (cb, ca, cs) = cos(x);
        let s = analogy_score(method, cb, ca, cs);
        if best.map_or(true, |(_, bs)| s > bs) {
            best = Some((x, s));
        }
    }
    best.map(|(x, _)| x)
}

/// Answers `a : a* :: b : ?`. `None` when a question word is out of
/// vocabulary or no candidate remains.
pub fn analogy_answer(
    table: &EmbeddingTable,
    a: &str,
    a_star: &str,
    b: &str,
    method: AnalogyMethod,
) -> Option<usize> {
    let (ia, is, ib) = (table.id(a)?, table.id(a_star)?, table.id(b)?);
    best_candidate(
        method,
        [ia, is, ib],
        |x| (table.cosine(x, ib), table.cosine(x, ia), table.cosine(x, is)),
        table.len(),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub enum Score {
    Similarity { rho: f64 },
    Analogy { add: f64, mul: f64 },
}

/// One benchmark result.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalEntry {
    pub dataset: String,
    pub score: Score,
    pub total: usize,
    pub scored: usize,
}

impl EvalEntry {
    pub fn skipped(&self) -> usize {
        self.total - self.scored
    }

    pub fn coverage(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.scored as f64 / self.total as f64
        }
    }

    pub fn skipped_fraction(&self) -> f64 {
        1.0 - self.coverage()
    }
}

pub fn similarity_eval(table: &EmbeddingTable, data: &SimilarityDataset) -> Result<EvalEntry> {
    let mut model = Vec::new();
    let mut human = Vec::new();
    for (a, b, s) in &data.pairs {
        if let (Some(i), Some(j)) = (table.id(a), table.id(b)) {
            model.push(table.cosine(i, j));
            human.push(*s);
        }
    }
    if model.len() < 2 {
        return Err(Error::Undefined(format!(
            "{}: {} of {} pairs in vocabulary (coverage {:.3})",
            data.name,
            model.len(),
            data.pairs.len(),
            model.len() as f64 / data.pairs.len().max(1) as f64
        )));
    }
    Ok(EvalEntry {
        dataset: data.name.clone(),
        score: Score::Similarity { rho: spearman(&model, &human)? },
        total: data.pairs.len(),
        scored: model.len(),
    })
}

/// Questions scored per batched matrix product.
const ANALOGY_BATCH: usize = 256;

pub fn analogy_eval(table: &EmbeddingTable, data: &AnalogyDataset) -> Result<EvalEntry> {
    let scorable: Vec<[usize; 4]> = data
        .questions
        .iter()
        .filter_map(|q| {
            Some([table.id(&q[0])?, table.id(&q[1])?, table.id(&q[2])?, table.id(&q[3])?])
        })
        .collect();
    if scorable.is_empty() {
        return Err(Error::Undefined(format!(
            "{}: no question has all four words in vocabulary",
            data.name
        )));
    }
    let unit = &table.unit;
    let e = unit.to_columns();
    let et = e.transpose();
    let correct: Vec<(usize, usize)> = scorable
        .par_chunks(ANALOGY_BATCH)
        .map(|batch| {
            // Columns 3k, 3k+1, 3k+2 hold b, a, a* of question k.
            let q = Mat::from_fn(unit.dim(), 3 * batch.len(), |d, c| {
                let [a, s, b, _] = batch[c / 3];
                unit.vector([b, a, s][c % 3])[d]
            });
            let sims = et * &q;
            let mut hits = (0, 0);
            for (k, &[a, s, b, want]) in batch.iter().enumerate() {
                let cos = |x: usize| (sims[(x, 3 * k)], sims[(x, 3 * k + 1)], sims[(x, 3 * k + 2)]);
                if best_candidate(AnalogyMethod::Add, [a, s, b], cos, table.len()) == Some(want) {
                    hits.0 += 1;
                }
                if best_candidate(AnalogyMethod::Mul, [a, s, b], cos, table.len()) == Some(want) {
                    hits.1 += 1;
                }
            }
            hits
        })
        .collect();
    let add: usize = correct.iter().map(|h| h.0).sum();
    let mul: usize = correct.iter().map(|h| h.1).sum();
    let n = scorable.len() as f64;
    Ok(EvalEntry {
        dataset: data.name.clone(),
        score: Score::Analogy {
            add: add as f64 / n,
            mul: mul as f64 / n,
        },
        total: data.questions.len(),
        scored: scorable.len(),
    })
}

/// A row of benchmark results for one embedding set.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub entries: Vec<EvalEntry>,
}

impl EvalReport {
    fn cell(e: &EvalEntry) -> String {
        match e.score {
            Score::Similarity { rho } => format!("{rho:.3}"),
            Score::Analogy { add, mul } => format!("{add:.3} / {mul:.3}"),
        }
    }

    /// Datasets as columns; one score row and one coverage row.
    pub fn to_markdown(&self, label: &str) -> String {
        let mut s = String::new();
        let _ = write!(s, "| Method |");
        for e in &self.entries {
            let _ = write!(s, " {} |", e.dataset);
        }
        let _ = write!(s, "\n|---|");
        for _ in &self.entries {
            let _ = write!(s, "---|");
        }
        let _ = write!(s, "\n| {label} |");
        for e in &self.entries {
            let _ = write!(s, " {} |", Self::cell(e));
        }
        let _ = write!(s, "\n| coverage |");
        for e in &self.entries {
            let _ = write!(s, " {}/{} |", e.scored, e.total);
        }
        s.push('\n');
        s
    }

    pub fn to_tsv(&self, label: &str) -> String {
        let mut s = String::from("method");
        for e in &self.entries {
            s.push('\t');
            s.push_str(&e.dataset);
        }
        s.push('\n');
        s.push_str(label);
        for e in &self.entries {
            s.push('\t');
            s.push_str(&Self::cell(e));
        }
        s.push_str("\ncoverage");
        for e in &self.entries {
            let _ = write!(s, "\t{:.4}", e.coverage());
        }
        s.push('\n');
        s
    }
}
