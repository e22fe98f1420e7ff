//! Seeded inputs shared by the benchmarks.

use psdembed::faer::Mat;
use psdembed::{count_cooccurrences, CooccurrenceCounts, Document, SymmetricMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Symmetric matrix with standard-uniform entries in `[-1, 1]`.
pub fn random_symmetric(n: usize, seed: u64) -> SymmetricMatrix {
    let mut r = rng(seed);
    let mut m = Mat::<f64>::zeros(n, n);
    for j in 0..n {
        for i in j..n {
            let x = r.random_range(-1.0..1.0);
            m[(i, j)] = x;
            m[(j, i)] = x;
        }
    }
    SymmetricMatrix::new(m).expect("symmetric by construction")
}

/// Symmetric weights in `[0, 1]` with a zero diagonal.
pub fn random_weights(n: usize, seed: u64) -> Mat<f64> {
    let mut r = rng(seed);
    let mut w = Mat::<f64>::zeros(n, n);
    for j in 0..n {
        for i in j + 1..n {
            let x = r.random_range(0.0..1.0);
            w[(i, j)] = x;
            w[(j, i)] = x;
        }
    }
    w
}

/// Zipf-distributed documents over `vocab` ids.
pub fn zipf_documents(vocab: usize, docs: usize, len: usize, seed: u64) -> Vec<Document> {
    let mut r = rng(seed);
    let weights: Vec<f64> = (1..=vocab).map(|k| 1.0 / k as f64).collect();
    let total: f64 = weights.iter().sum();
    let mut cdf = Vec::with_capacity(vocab);
    let mut acc = 0.0;
    for w in &weights {
        acc += w / total;
        cdf.push(acc);
    }
    (0..docs)
        .map(|_| Document {
            tokens: (0..len)
                .map(|_| {
                    let x: f64 = r.random();
                    cdf.partition_point(|&c| c < x).min(vocab - 1) as u32
                })
                .collect(),
        })
        .collect()
}

pub fn zipf_counts(vocab: usize, docs: usize, len: usize, window: usize, seed: u64) -> CooccurrenceCounts {
    count_cooccurrences(&zipf_documents(vocab, docs, len, seed), vocab, window).expect("valid ids")
}
