//! On-disk formats: count and vocabulary TSV, word2vec text embeddings and
//! the binary dense block used for matrix blocks and factor checkpoints.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::ops::Range;
use std::path::Path;

use faer::Mat;

use crate::corpus::{CooccurrenceCounts, Vocabulary, WordId};
use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn lines<'a, R: BufRead + 'a>(reader: R, path: &'a Path) -> impl Iterator<Item = Result<(usize, String)>> + 'a {
    reader
        .lines()
        .enumerate()
        .map(move |(k, l)| l.map(|l| (k + 1, l)).map_err(|e| Error::io(path, e)))
}

/// Writes `#W=.. c=.. total=..` then `i\tj\tcount` lines in (i, j) order.
pub fn write_counts<W: Write>(mut out: W, counts: &CooccurrenceCounts) -> std::io::Result<()> {
    writeln!(
        out,
        "#W={} c={} total={}",
        counts.vocab_size(),
        counts.window(),
        counts.total_pairs()
    )?;
    for (i, j, x) in counts.sorted_pairs() {
        writeln!(out, "{i}\t{j}\t{x}")?;
    }
    out.flush()
}

pub fn save_counts(path: impl AsRef<Path>, counts: &CooccurrenceCounts) -> Result<()> {
    let path = path.as_ref();
    write_counts(create(path)?, counts).map_err(|e| Error::io(path, e))
}

/// Reads a counts file; unigram counts come from the matching vocabulary.
pub fn load_counts(path: impl AsRef<Path>, vocab: &Vocabulary) -> Result<CooccurrenceCounts> {
    let path = path.as_ref();
    let ctx = path.display().to_string();
    let mut it = lines(open(path)?, path);
    let (_, header) = it
        .next()
        .transpose()?
        .ok_or_else(|| Error::parse(&ctx, 1, "missing header"))?;
    let mut w = None;
    let mut c = None;
    let mut total = None;
    for field in header
        .strip_prefix('#')
        .ok_or_else(|| Error::parse(&ctx, 1, "header must start with '#'"))?
        .split_whitespace()
    {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| Error::parse(&ctx, 1, format!("bad header field {field:?}")))?;
        let bad = |_| Error::parse(&ctx, 1, format!("bad header value {field:?}"));
        match k {
            "W" => w = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?),
            "c" => c = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?),
            "total" => total = Some(v.parse::<f64>().map_err(|e| bad(e.to_string()))?),
            _ => return Err(Error::parse(&ctx, 1, format!("unknown header field {k:?}"))),
        }
    }
    let (Some(w), Some(c), Some(total)) = (w, c, total) else {
        return Err(Error::parse(&ctx, 1, "header needs W, c and total"));
    };
    if w != vocab.len() {
        return Err(Error::Shape(format!(
            "{ctx}: counts for W={w} but vocabulary has {} words",
            vocab.len()
        )));
    }
    let mut pairs = HashMap::new();
    for line in it {
        let (no, line) = line?;
        if line.is_empty() {
            continue;
        }
        let mut f = line.split('\t');
        let (Some(i), Some(j), Some(x), None) = (f.next(), f.next(), f.next(), f.next()) else {
            return Err(Error::parse(&ctx, no, "expected i<TAB>j<TAB>count"));
        };
        let i: WordId = i.parse().map_err(|_| Error::parse(&ctx, no, "bad row id"))?;
        let j: WordId = j.parse().map_err(|_| Error::parse(&ctx, no, "bad column id"))?;
        let x: f64 = x.parse().map_err(|_| Error::parse(&ctx, no, "bad count"))?;
        if pairs.insert((i, j), x).is_some() {
            return Err(Error::parse(&ctx, no, format!("duplicate pair ({i}, {j})")));
        }
    }
    let unigrams = vocab.counts().iter().map(|&n| n as f64).collect();
    let counts = CooccurrenceCounts::from_parts(pairs, unigrams, c)?;
    if (counts.total_pairs() - total).abs() > 1e-9 * total.max(1.0) {
        return Err(Error::parse(
            &ctx,
            1,
            format!("header total {total} but pairs sum to {}", counts.total_pairs()),
        ));
    }
    Ok(counts)
}

pub fn write_vocab<W: Write>(mut out: W, vocab: &Vocabulary) -> std::io::Result<()> {
    for (w, n) in vocab.words().iter().zip(vocab.counts()) {
        writeln!(out, "{w}\t{n}")?;
    }
    out.flush()
}

pub fn save_vocab(path: impl AsRef<Path>, vocab: &Vocabulary) -> Result<()> {
    let path = path.as_ref();
    write_vocab(create(path)?, vocab).map_err(|e| Error::io(path, e))
}

pub fn load_vocab(path: impl AsRef<Path>) -> Result<Vocabulary> {
    let path = path.as_ref();
    let ctx = path.display().to_string();
    let mut words = Vec::new();
    let mut counts = Vec::new();
    for line in lines(open(path)?, path) {
        let (no, line) = line?;
        if line.is_empty() {
            continue;
        }
        let (w, n) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(&ctx, no, "expected word<TAB>count"))?;
        words.push(w.to_owned());
        counts.push(n.parse().map_err(|_| Error::parse(&ctx, no, "bad count"))?);
    }
    Vocabulary::from_ranked(words, counts)
}

/// word2vec text format: `W N` then `word v1 .. vN` per line.
pub fn write_word2vec<W: Write, S: AsRef<str>>(
    mut out: W,
    words: &[S],
    emb: &EmbeddingMatrix,
) -> Result<()> {
    if words.len() != emb.len() {
        return Err(Error::Shape(format!(
            "{} words for {} embeddings",
            words.len(),
            emb.len()
        )));
    }
    let io = |e| Error::io("<embeddings>", e);
    writeln!(out, "{} {}", emb.len(), emb.dim()).map_err(io)?;
    let mut line = String::new();
    for (i, w) in words.iter().enumerate() {
        line.clear();
        line.push_str(w.as_ref());
        for x in emb.vector(i) {
            line.push(' ');
            line.push_str(&x.to_string());
        }
        line.push('\n');
        out.write_all(line.as_bytes()).map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn save_word2vec<S: AsRef<str>>(path: impl AsRef<Path>, words: &[S], emb: &EmbeddingMatrix) -> Result<()> {
    let path = path.as_ref();
    write_word2vec(create(path)?, words, emb).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        e => e,
    })
}

pub fn load_word2vec(path: impl AsRef<Path>) -> Result<(Vec<String>, EmbeddingMatrix)> {
    let path = path.as_ref();
    let ctx = path.display().to_string();
    let mut it = lines(open(path)?, path);
    let (_, header) = it
        .next()
        .transpose()?
        .ok_or_else(|| Error::parse(&ctx, 1, "missing header"))?;
    let mut h = header.split_whitespace();
    let (Some(w), Some(n), None) = (h.next(), h.next(), h.next()) else {
        return Err(Error::parse(&ctx, 1, "header must be `W N`"));
    };
    let w: usize = w.parse().map_err(|_| Error::parse(&ctx, 1, "bad word count"))?;
    let n: usize = n.parse().map_err(|_| Error::parse(&ctx, 1, "bad dimension"))?;
    if n == 0 {
        return Err(Error::parse(&ctx, 1, "dimension must be positive"));
    }
    let mut words = Vec::with_capacity(w);
    let mut data = Vec::with_capacity(w * n);
    for line in it {
        let (no, line) = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut f = line.split_whitespace();
        let word = f.next().expect("non-empty line");
        words.push(word.to_owned());
        let before = data.len();
        for x in f {
            data.push(x.parse::<f64>().map_err(|_| Error::parse(&ctx, no, format!("bad value {x:?}")))?);
        }
        if data.len() - before != n {
            return Err(Error::parse(&ctx, no, format!("expected {n} values, got {}", data.len() - before)));
        }
    }
    if words.len() != w {
        return Err(Error::parse(&ctx, 1, format!("header promises {w} words, found {}", words.len())));
    }
    Ok((words, EmbeddingMatrix::from_vec(n, data)?))
}

const BLOCK_MAGIC: &[u8; 4] = b"PSDB";
const BLOCK_VERSION: u32 = 1;

/// A dense `f64` block of a `W x W` matrix (or of an `N x W` factor), with
/// enough metadata to check it belongs to the same statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseBlock {
    pub rows: Range<usize>,
    pub cols: Range<usize>,
    pub vocab_size: usize,
    pub kappa: f64,
    pub c_cut: f64,
    pub data: Mat<f64>,
}

impl DenseBlock {
    /// Serialized size in bytes.
    pub fn encoded_len(&self) -> u64 {
        (4 + 4 + 5 * 8 + 2 * 8 + 8 * self.rows.len() * self.cols.len()) as u64
    }

    pub fn write_to<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        assert_eq!((self.data.nrows(), self.data.ncols()), (self.rows.len(), self.cols.len()));
        let mut buf = Vec::with_capacity(self.encoded_len() as usize);
        buf.extend_from_slice(BLOCK_MAGIC);
        buf.extend_from_slice(&BLOCK_VERSION.to_le_bytes());
        for x in [self.rows.start, self.rows.end, self.cols.start, self.cols.end, self.vocab_size] {
            buf.extend_from_slice(&(x as u64).to_le_bytes());
        }
        buf.extend_from_slice(&self.kappa.to_le_bytes());
        buf.extend_from_slice(&self.c_cut.to_le_bytes());
        for i in 0..self.data.nrows() {
            for j in 0..self.data.ncols() {
                buf.extend_from_slice(&self.data[(i, j)].to_le_bytes());
            }
        }
        out.write_all(&buf)
    }

    /// Reads one block; `Ok(None)` at a clean end of input.
    pub fn read_from<R: Read>(input: &mut R) -> Result<Option<DenseBlock>> {
        let bad = |m: &str| Error::parse("dense block", 0, m);
        let mut head = [0u8; 8];
        match read_full(input, &mut head)? {
            0 => return Ok(None),
            8 => {}
            _ => return Err(bad("truncated header")),
        }
        if &head[..4] != BLOCK_MAGIC {
            return Err(bad("bad magic"));
        }
        let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
        if version != BLOCK_VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let mut meta = [0u8; 56];
        if read_full(input, &mut meta)? != meta.len() {
            return Err(bad("truncated header"));
        }
        let word = |k: usize| u64::from_le_bytes(meta[8 * k..8 * k + 8].try_into().unwrap());
        let rows = word(0) as usize..word(1) as usize;
        let cols = word(2) as usize..word(3) as usize;
        let vocab_size = word(4) as usize;
        let kappa = f64::from_bits(word(5));
        let c_cut = f64::from_bits(word(6));
        if rows.start > rows.end || cols.start > cols.end {
            return Err(bad("inverted range"));
        }
        let (r, c) = (rows.len(), cols.len());
        let n = r.checked_mul(c).and_then(|n| n.checked_mul(8)).ok_or_else(|| bad("block too large"))?;
        let mut payload = vec![0u8; n];
        if read_full(input, &mut payload)? != n {
            return Err(bad("truncated payload"));
        }
        let data = Mat::from_fn(r, c, |i, j| {
            let k = 8 * (i * c + j);
            f64::from_le_bytes(payload[k..k + 8].try_into().unwrap())
        });
        Ok(Some(DenseBlock {
            rows,
            cols,
            vocab_size,
            kappa,
            c_cut,
            data,
        }))
    }
}

fn read_full<R: Read>(input: &mut R, buf: &mut [u8]) -> Result<usize> {
    let mut got = 0;
    while got < buf.len() {
        match input.read(&mut buf[got..]) {
            Ok(0) => break,
            Ok(k) => got += k,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(Error::io("<dense block>", e)),
        }
    }
    Ok(got)
}
