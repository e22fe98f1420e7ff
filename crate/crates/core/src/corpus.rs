//! Tokenization, vocabulary construction and windowed co-occurrence counting.
//!
//! A document is a run of non-blank lines; blank lines and file boundaries
//! separate documents. Context windows look only to the left of the focus
//! word and never cross a document boundary. Out-of-vocabulary tokens are
//! dropped before windowing, so contexts close over the gap they leave.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Word identifier: the rank of the word in the frequency-sorted vocabulary.
pub type WordId = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizerOptions {
    pub lowercase: bool,
    /// Drop tokens made only of ASCII digits.
    pub drop_numbers: bool,
}

impl Default for TokenizerOptions {
    fn default() -> Self {
        TokenizerOptions {
            lowercase: true,
            drop_numbers: false,
        }
    }
}

/// Splits text on runs of non-alphanumeric characters.
pub fn tokenize(text: &str, opts: &TokenizerOptions) -> Vec<String> {
    let mut out = Vec::new();
    for piece in text.split(|c: char| !c.is_alphanumeric()) {
        if piece.is_empty() {
            continue;
        }
        if opts.drop_numbers && piece.bytes().all(|b| b.is_ascii_digit()) {
            continue;
        }
        if opts.lowercase {
            out.push(piece.to_lowercase());
        } else {
            out.push(piece.to_owned());
        }
    }
    out
}

/// Like [`tokenize`] but validates the encoding first.
pub fn tokenize_bytes(bytes: &[u8], opts: &TokenizerOptions) -> Result<Vec<String>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Decode {
        offset: e.valid_up_to(),
    })?;
    Ok(tokenize(text, opts))
}

/// Frequency-ordered vocabulary. Ids are ranks: id 0 is the most frequent word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, WordId>,
}

impl Vocabulary {
    /// Builds a vocabulary from a token stream, keeping words seen at least
    /// `min_count` times and truncating to the `max_size` most frequent.
    pub fn build<I, S>(tokens: I, min_count: u64, max_size: usize) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut counter = WordCounter::default();
        counter.add(tokens);
        counter.into_vocabulary(min_count, max_size)
    }

    /// Rebuilds a vocabulary from words already in rank order, checking the
    /// ordering invariant.
    pub fn from_ranked(words: Vec<String>, counts: Vec<u64>) -> Result<Self> {
        if words.len() != counts.len() {
            return Err(Error::Shape(format!(
                "{} words but {} counts",
                words.len(),
                counts.len()
            )));
        }
        if words.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        for k in 1..words.len() {
            let ordered = counts[k - 1] > counts[k]
                || (counts[k - 1] == counts[k] && words[k - 1] < words[k]);
            if !ordered {
                return Err(Error::InvalidParameter(format!(
                    "vocabulary not in rank order at {:?} ({}) / {:?} ({})",
                    words[k - 1],
                    counts[k - 1],
                    words[k],
                    counts[k]
                )));
            }
        }
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as WordId))
            .collect();
        Ok(Vocabulary {
            words,
            counts,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn id(&self, word: &str) -> Option<WordId> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: WordId) -> &str {
        &self.words[id as usize]
    }

    /// Maps tokens to ids, dropping out-of-vocabulary tokens.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Document {
        Document {
            tokens: tokens
                .iter()
                .filter_map(|t| self.id(t.as_ref()))
                .collect(),
        }
    }

    /// Keeps the `size` most frequent words.
    pub fn truncated(&self, size: usize) -> Vocabulary {
        let size = size.min(self.len());
        Vocabulary {
            words: self.words[..size].to_vec(),
            counts: self.counts[..size].to_vec(),
            index: self.words[..size]
                .iter()
                .enumerate()
                .map(|(i, w)| (w.clone(), i as WordId))
                .collect(),
        }
    }
}

/// Streaming word-frequency accumulator; shards merge associatively.
#[derive(Debug, Clone, Default)]
pub struct WordCounter {
    counts: HashMap<String, u64>,
    tokens: u64,
}

impl WordCounter {
    pub fn add<I, S>(&mut self, tokens: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        for t in tokens {
            let t = t.as_ref();
            self.tokens += 1;
            if let Some(c) = self.counts.get_mut(t) {
                *c += 1;
            } else {
                self.counts.insert(t.to_owned(), 1);
            }
        }
    }

    pub fn merge(&mut self, other: WordCounter) {
        self.tokens += other.tokens;
        for (w, c) in other.counts {
            *self.counts.entry(w).or_insert(0) += c;
        }
    }

    pub fn total_tokens(&self) -> u64 {
        self.tokens
    }

    pub fn into_vocabulary(self, min_count: u64, max_size: usize) -> Result<Vocabulary> {
        if min_count == 0 {
            return Err(Error::InvalidParameter("min_count must be at least 1".into()));
        }
        if self.tokens == 0 {
            return Err(Error::EmptyCorpus);
        }
        let mut entries: Vec<(String, u64)> = self
            .counts
            .into_iter()
            .filter(|&(_, c)| c >= min_count)
            .collect();
        entries.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        entries.truncate(max_size);
        if entries.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let (words, counts) = entries.into_iter().unzip();
        Vocabulary::from_ranked(words, counts)
    }
}

/// A document as a sequence of in-vocabulary word ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Document {
    pub tokens: Vec<WordId>,
}

/// Sparse context-by-focus counts `x[i][j]`: how often word `i` occurs
/// within `window` positions before word `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CooccurrenceCounts {
    pairs: HashMap<(WordId, WordId), f64>,
    total_pairs: f64,
    unigram_counts: Vec<f64>,
    window: usize,
}

impl CooccurrenceCounts {
    pub fn new(vocab_size: usize, window: usize) -> Self {
        CooccurrenceCounts {
            pairs: HashMap::new(),
            total_pairs: 0.0,
            unigram_counts: vec![0.0; vocab_size],
            window,
        }
    }

    /// Assembles counts from parts, validating ids and non-negativity.
    pub fn from_parts(
        pairs: HashMap<(WordId, WordId), f64>,
        unigram_counts: Vec<f64>,
        window: usize,
    ) -> Result<Self> {
        let w = unigram_counts.len();
        let mut total = 0.0;
        for (&(i, j), &x) in &pairs {
            if i as usize >= w || j as usize >= w {
                return Err(Error::InvalidParameter(format!(
                    "pair ({i}, {j}) outside vocabulary of size {w}"
                )));
            }
            if !(x >= 0.0) || !x.is_finite() {
                return Err(Error::InvalidParameter(format!("count {x} at ({i}, {j})")));
            }
            total += x;
        }
        if unigram_counts.iter().any(|&c| !(c >= 0.0) || !c.is_finite()) {
            return Err(Error::InvalidParameter("negative or non-finite unigram count".into()));
        }
        Ok(CooccurrenceCounts {
            pairs,
            total_pairs: total,
            unigram_counts,
            window,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.unigram_counts.len()
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn total_pairs(&self) -> f64 {
        self.total_pairs
    }

    pub fn unigram_counts(&self) -> &[f64] {
        &self.unigram_counts
    }

    pub fn get(&self, context: WordId, focus: WordId) -> f64 {
        self.pairs.get(&(context, focus)).copied().unwrap_or(0.0)
    }

    pub fn num_pairs(&self) -> usize {
        self.pairs.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (WordId, WordId, f64)> + '_ {
        self.pairs.iter().map(|(&(i, j), &x)| (i, j, x))
    }

    /// Pairs in (context, focus) order.
    pub fn sorted_pairs(&self) -> Vec<(WordId, WordId, f64)> {
        let mut v: Vec<_> = self.iter().collect();
        v.sort_unstable_by_key(|&(i, j, _)| (i, j));
        v
    }

    /// Adds one document's windows.
    pub fn add_document(&mut self, doc: &Document) {
        let w = self.window;
        for (t, &focus) in doc.tokens.iter().enumerate() {
            self.unigram_counts[focus as usize] += 1.0;
            for &context in &doc.tokens[t.saturating_sub(w)..t] {
                *self.pairs.entry((context, focus)).or_insert(0.0) += 1.0;
                self.total_pairs += 1.0;
            }
        }
    }

    pub fn merge(&mut self, other: CooccurrenceCounts) -> Result<()> {
        if other.window != self.window || other.vocab_size() != self.vocab_size() {
            return Err(Error::Shape(format!(
                "cannot merge counts (W={}, c={}) into (W={}, c={})",
                other.vocab_size(),
                other.window,
                self.vocab_size(),
                self.window
            )));
        }
        for (k, x) in other.pairs {
            *self.pairs.entry(k).or_insert(0.0) += x;
        }
        for (a, b) in self.unigram_counts.iter_mut().zip(other.unigram_counts) {
            *a += b;
        }
        self.total_pairs += other.total_pairs;
        Ok(())
    }
}

/// Counts windowed co-occurrences over `docs`, in parallel over shards.
pub fn count_cooccurrences(
    docs: &[Document],
    vocab_size: usize,
    window: usize,
) -> Result<CooccurrenceCounts> {
    if window == 0 {
        return Err(Error::InvalidParameter("window must be at least 1".into()));
    }
    if let Some(bad) = docs
        .iter()
        .flat_map(|d| d.tokens.iter())
        .find(|&&t| t as usize >= vocab_size)
    {
        return Err(Error::InvalidParameter(format!(
            "token id {bad} outside vocabulary of size {vocab_size}"
        )));
    }
    // Counts are integer-valued f64, so shard sums are exact and the
    // merge order does not matter.
    docs.par_chunks(1024)
        .map(|shard| {
            let mut counts = CooccurrenceCounts::new(vocab_size, window);
            for d in shard {
                counts.add_document(d);
            }
            Ok(counts)
        })
        .try_reduce(
            || CooccurrenceCounts::new(vocab_size, window),
            |mut a, b| {
                a.merge(b)?;
                Ok(a)
            },
        )
}

/// Reads blank-line separated documents from one file.
pub struct DocumentReader<R> {
    reader: R,
    source: PathBuf,
    offset: usize,
    line: Vec<u8>,
    done: bool,
}

impl DocumentReader<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(DocumentReader::new(BufReader::new(file), path))
    }
}

impl<R: BufRead> DocumentReader<R> {
    pub fn new(reader: R, source: impl Into<PathBuf>) -> Self {
        DocumentReader {
            reader,
            source: source.into(),
            offset: 0,
            line: Vec::new(),
            done: false,
        }
    }
}

impl<R: BufRead> Iterator for DocumentReader<R> {
    type Item = Result<String>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let mut doc = String::new();
        loop {
            self.line.clear();
            let n = match self.reader.read_until(b'\n', &mut self.line) {
                Ok(n) => n,
                Err(e) => {
                    self.done = true;
                    return Some(Err(Error::io(&self.source, e)));
                }
            };
            if n == 0 {
                self.done = true;
                return if doc.is_empty() { None } else { Some(Ok(doc)) };
            }
            let text = match std::str::from_utf8(&self.line) {
                Ok(t) => t,
                Err(e) => {
                    self.done = true;
                    return Some(Err(Error::Decode {
                        offset: self.offset + e.valid_up_to(),
                    }));
                }
            };
            self.offset += n;
            if text.trim().is_empty() {
                if !doc.is_empty() {
                    return Some(Ok(doc));
                }
            } else {
                doc.push_str(text);
            }
        }
    }
}

/// Reads every document of every path, tokenized.
pub fn for_each_document<P, F>(paths: &[P], opts: &TokenizerOptions, mut f: F) -> Result<()>
where
    P: AsRef<Path>,
    F: FnMut(Vec<String>),
{
    for p in paths {
        for doc in DocumentReader::open(p)? {
            let doc = doc?;
            f(tokenize(&doc, opts));
        }
    }
    Ok(())
}

/// Two passes over the corpus: vocabulary, then encoded documents.
pub fn load_corpus<P: AsRef<Path>>(
    paths: &[P],
    opts: &TokenizerOptions,
    min_count: u64,
    max_size: usize,
) -> Result<(Vocabulary, Vec<Document>)> {
    let mut counter = WordCounter::default();
    for_each_document(paths, opts, |tokens| counter.add(tokens))?;
    let vocab = counter.into_vocabulary(min_count, max_size)?;
    let mut docs = Vec::new();
    for_each_document(paths, opts, |tokens| {
        let d = vocab.encode(&tokens);
        if !d.tokens.is_empty() {
            docs.push(d);
        }
    })?;
    Ok((vocab, docs))
}
