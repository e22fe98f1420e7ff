//! Seeded fixtures and independent reference computations for the
//! integration tests. Nothing here calls the solver code it checks.

#![allow(dead_code)]

use std::path::PathBuf;

use psdembed::faer::Mat;
use psdembed::Document;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_symmetric(r: &mut impl Rng, n: usize) -> Mat<f64> {
    let mut m = Mat::<f64>::zeros(n, n);
    for j in 0..n {
        for i in j..n {
            let x: f64 = r.random_range(-1.0..1.0);
            m[(i, j)] = x;
            m[(j, i)] = x;
        }
    }
    m
}

pub fn random_weights(r: &mut impl Rng, n: usize) -> Mat<f64> {
    let mut w = Mat::<f64>::zeros(n, n);
    for j in 0..n {
        for i in j..n {
            let x: f64 = r.random_range(0.0..=1.0);
            w[(i, j)] = x;
            w[(j, i)] = x;
        }
    }
    w
}

pub fn normal(r: &mut impl Rng) -> f64 {
    // Box-Muller.
    let u1: f64 = r.random_range(f64::EPSILON..1.0);
    let u2: f64 = r.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// `sum_ij w_ij (g_ij - x_ij)^2` with plain loops.
pub fn weighted_sq(g: &Mat<f64>, x: &Mat<f64>, w: Option<&Mat<f64>>) -> f64 {
    let mut s = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let d = g[(i, j)] - x[(i, j)];
            s += w.map_or(1.0, |w| w[(i, j)]) * d * d;
        }
    }
    s
}

/// `B^T B` for `B` stored as `k x n`.
pub fn gram(b: &Mat<f64>) -> Mat<f64> {
    let (k, n) = (b.nrows(), b.ncols());
    Mat::from_fn(n, n, |i, j| (0..k).map(|r| b[(r, i)] * b[(r, j)]).sum())
}

/// Minimizes `sum w (g - B^T B)^2` over `B` (`k x n`) by gradient descent
/// with backtracking and several random restarts. Returns the best value.
pub fn factor_descent(g: &Mat<f64>, w: Option<&Mat<f64>>, k: usize, restarts: usize, iters: usize, seed: u64) -> f64 {
    let n = g.nrows();
    let mut r = rng(seed);
    let mut best = f64::INFINITY;
    for _ in 0..restarts {
        let mut b = Mat::from_fn(k, n, |_, _| 0.5 * normal(&mut r));
        let mut f = weighted_sq(g, &gram(&b), w);
        let mut step = 0.1;
        for _ in 0..iters {
            let x = gram(&b);
            // d/dB sum w (g - B^T B)^2 = -2 B (R + R^T), R = w o (g - B^T B)
            let res = Mat::from_fn(n, n, |i, j| w.map_or(1.0, |w| w[(i, j)]) * (g[(i, j)] - x[(i, j)]));
            let grad = Mat::from_fn(k, n, |a, j| {
                -2.0 * (0..n).map(|i| b[(a, i)] * (res[(i, j)] + res[(j, i)])).sum::<f64>()
            });
            let gnorm: f64 = (0..k).flat_map(|a| (0..n).map(move |j| (a, j))).map(|(a, j)| grad[(a, j)].powi(2)).sum();
            if gnorm < 1e-30 {
                break;
            }
            loop {
                let cand = Mat::from_fn(k, n, |a, j| b[(a, j)] - step * grad[(a, j)]);
                let fc = weighted_sq(g, &gram(&cand), w);
                if fc <= f - 0.5 * step * gnorm {
                    b = cand;
                    f = fc;
                    step *= 1.5;
                    break;
                }
                step *= 0.5;
                if step < 1e-20 {
                    break;
                }
            }
            if step < 1e-20 {
                break;
            }
        }
        best = best.min(f);
    }
    best
}

/// Objective `sum_a f_a (g_a - v_a^T v)^2 + mu |v|^2`; `v1` is `n x m`.
pub fn ridge_objective(v1: &Mat<f64>, g: &[f64], f: &[f64], mu: f64, v: &[f64]) -> f64 {
    let mut s = 0.0;
    for a in 0..v1.ncols() {
        let p: f64 = (0..v1.nrows()).map(|k| v1[(k, a)] * v[k]).sum();
        s += f[a] * (g[a] - p).powi(2);
    }
    s + mu * v.iter().map(|x| x * x).sum::<f64>()
}

/// Nesterov-accelerated gradient descent with adaptive restart on the
/// ridge objective. Step `1/L` from a power-iteration bound on the Hessian.
pub fn ridge_descent(v1: &Mat<f64>, g: &[f64], f: &[f64], mu: f64) -> Vec<f64> {
    let (n, m) = (v1.nrows(), v1.ncols());
    let hess = |v: &[f64]| -> Vec<f64> {
        // 2 (V diag(f) V^T + mu I) v
        let mut out = vec![0.0; n];
        for a in 0..m {
            let p: f64 = (0..n).map(|k| v1[(k, a)] * v[k]).sum();
            for k in 0..n {
                out[k] += 2.0 * f[a] * v1[(k, a)] * p;
            }
        }
        for k in 0..n {
            out[k] += 2.0 * mu * v[k];
        }
        out
    };
    let lin: Vec<f64> = (0..n)
        .map(|k| -2.0 * (0..m).map(|a| f[a] * v1[(k, a)] * g[a]).sum::<f64>())
        .collect();
    let grad = |v: &[f64]| -> Vec<f64> { hess(v).iter().zip(&lin).map(|(h, l)| h + l).collect() };
    let mut x = vec![1.0; n];
    let mut lmax = 0.0;
    for _ in 0..500 {
        let y = hess(&x);
        let norm = y.iter().map(|t| t * t).sum::<f64>().sqrt();
        lmax = norm / x.iter().map(|t| t * t).sum::<f64>().sqrt();
        x = y.iter().map(|t| t / norm).collect();
    }
    let step = 1.0 / (1.05 * lmax);
    let mut v = vec![0.0; n];
    let mut y = v.clone();
    let mut t = 1.0f64;
    let mut fv = ridge_objective(v1, g, f, mu, &v);
    for _ in 0..2_000_000 {
        let gy = grad(&y);
        let next: Vec<f64> = y.iter().zip(&gy).map(|(a, b)| a - step * b).collect();
        let fn_ = ridge_objective(v1, g, f, mu, &next);
        if fn_ > fv {
            // restart momentum
            t = 1.0;
            y = v.clone();
            continue;
        }
        let tn = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        y = next.iter().zip(&v).map(|(a, b)| a + (t - 1.0) / tn * (a - b)).collect();
        v = next;
        t = tn;
        fv = fn_;
        let gn = grad(&v).iter().map(|x| x * x).sum::<f64>().sqrt();
        if gn < 1e-13 * (1.0 + lin.iter().map(|x| x * x).sum::<f64>().sqrt()) {
            break;
        }
    }
    v
}

/// Shannon entropy of a probability table.
pub fn entropy(p: impl IntoIterator<Item = f64>) -> f64 {
    -p.into_iter().filter(|&x| x > 0.0).map(|x| x * x.ln()).sum::<f64>()
}

/// Mutual informations of a 3-way table `p[x1][x2][y]`, via entropies.
pub fn interaction_from_entropies(p: &[Vec<Vec<f64>>]) -> f64 {
    let (a, b, c) = (p.len(), p[0].len(), p[0][0].len());
    let mut p1 = vec![0.0; a];
    let mut p2 = vec![0.0; b];
    let mut py = vec![0.0; c];
    let mut p12 = vec![0.0; a * b];
    let mut p1y = vec![0.0; a * c];
    let mut p2y = vec![0.0; b * c];
    for i in 0..a {
        for j in 0..b {
            for k in 0..c {
                let x = p[i][j][k];
                p1[i] += x;
                p2[j] += x;
                py[k] += x;
                p12[i * b + j] += x;
                p1y[i * c + k] += x;
                p2y[j * c + k] += x;
            }
        }
    }
    let all = entropy(p.iter().flatten().flatten().copied());
    let mi_y_12 = entropy(py.clone()) + entropy(p12) - all;
    let mi_y_1 = entropy(py.clone()) + entropy(p1) - entropy(p1y);
    let mi_y_2 = entropy(py) + entropy(p2) - entropy(p2y);
    mi_y_12 - mi_y_1 - mi_y_2
}

/// Synthetic topical corpus: every document draws from a mixture of a
/// Zipfian background and one of `topics` topic distributions, each
/// concentrated on its own slice of the vocabulary.
pub fn topical_corpus(vocab: usize, topics: usize, docs: usize, len: usize, seed: u64) -> Vec<Document> {
    let mut r = rng(seed);
    let zipf: Vec<f64> = (1..=vocab).map(|k| 1.0 / (k as f64).powf(1.05)).collect();
    let cdf = |w: &[f64]| {
        let total: f64 = w.iter().sum();
        let mut acc = 0.0;
        w.iter()
            .map(|x| {
                acc += x / total;
                acc
            })
            .collect::<Vec<f64>>()
    };
    let background = cdf(&zipf);
    // Topic t favors words with id % topics == t (spread across ranks).
    let topic_cdfs: Vec<Vec<f64>> = (0..topics)
        .map(|t| {
            let w: Vec<f64> = (0..vocab)
                .map(|i| if i % topics == t { zipf[i].sqrt() } else { 0.0 })
                .collect();
            cdf(&w)
        })
        .collect();
    let draw = |c: &[f64], x: f64| c.partition_point(|&p| p < x).min(vocab - 1) as u32;
    (0..docs)
        .map(|_| {
            let t1 = r.random_range(0..topics);
            let t2 = r.random_range(0..topics);
            let tokens = (0..len)
                .map(|_| {
                    let x: f64 = r.random();
                    match r.random_range(0..10) {
                        0..=3 => draw(&background, x),
                        4..=7 => draw(&topic_cdfs[t1], x),
                        _ => draw(&topic_cdfs[t2], x),
                    }
                })
                .collect();
            Document { tokens }
        })
        .collect()
}

/// Workspace data directory, overridable with `PSDEMBED_DATA`.
pub fn data_dir() -> PathBuf {
    std::env::var_os("PSDEMBED_DATA")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data"))
}

/// Relabels ids so that id order is frequency order (ties by old id), as
/// a vocabulary built from the same tokens would.
pub fn rerank(docs: &mut [Document], vocab: usize) {
    let mut freq = vec![0u64; vocab];
    for d in docs.iter() {
        for &t in &d.tokens {
            freq[t as usize] += 1;
        }
    }
    let mut order: Vec<usize> = (0..vocab).collect();
    order.sort_by(|&a, &b| freq[b].cmp(&freq[a]).then(a.cmp(&b)));
    let mut new_id = vec![0u32; vocab];
    for (rank, &old) in order.iter().enumerate() {
        new_id[old] = rank as u32;
    }
    for d in docs.iter_mut() {
        for t in d.tokens.iter_mut() {
            *t = new_id[*t as usize];
        }
    }
}
