mod common;

use common::*;
use proptest::prelude::*;
use psdembed::eval::{analogy_answer, spearman, AnalogyMethod, EmbeddingTable};
use psdembed::faer::Mat;
use psdembed::stats::{SmoothedBigrams, UnigramDist};
use psdembed::{count_cooccurrences, psd_approximate, Document, EmbeddingMatrix, SymmetricMatrix};

fn docs_strategy(vocab: u32) -> impl Strategy<Value = Vec<Document>> {
    prop::collection::vec(prop::collection::vec(0..vocab, 0..12), 0..15)
        .prop_map(|ds| ds.into_iter().map(|tokens| Document { tokens }).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn window_slots_are_conserved(docs in docs_strategy(9), c in 1usize..5) {
        let counts = count_cooccurrences(&docs, 9, c).unwrap();
        let slots: usize = docs.iter().map(|d| (0..d.tokens.len()).map(|t| t.min(c)).sum::<usize>()).sum();
        prop_assert_eq!(counts.total_pairs(), slots as f64);
        let summed: f64 = counts.iter().map(|(_, _, x)| x).sum();
        prop_assert_eq!(summed, slots as f64);
    }

    #[test]
    fn counting_ignores_document_order(docs in docs_strategy(7), seed in any::<u64>()) {
        let mut shuffled = docs.clone();
        let mut r = rng(seed);
        use rand::seq::SliceRandom;
        shuffled.shuffle(&mut r);
        prop_assert_eq!(count_cooccurrences(&docs, 7, 2).unwrap(), count_cooccurrences(&shuffled, 7, 2).unwrap());
    }

    #[test]
    fn shard_merge_equals_concatenation(docs in docs_strategy(7), split in 0usize..16) {
        let split = split.min(docs.len());
        let mut a = count_cooccurrences(&docs[..split], 7, 3).unwrap();
        let b = count_cooccurrences(&docs[split..], 7, 3).unwrap();
        a.merge(b).unwrap();
        prop_assert_eq!(a, count_cooccurrences(&docs, 7, 3).unwrap());
    }

    #[test]
    fn spearman_ignores_monotone_transforms(
        pairs in prop::collection::vec((-50i32..50, -50i32..50), 3..30),
    ) {
        let xs: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
        let ys: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
        let Ok(rho) = spearman(&xs, &ys) else { return Ok(()) };
        let tx: Vec<f64> = xs.iter().map(|x| (x / 10.0).exp()).collect();
        let ty: Vec<f64> = ys.iter().map(|y| y * y * y + 3.0).collect();
        prop_assert!((spearman(&tx, &ty).unwrap() - rho).abs() < 1e-12);
        prop_assert!((-1.0..=1.0).contains(&rho));
    }

    #[test]
    fn analogies_ignore_positive_rescaling(seed in any::<u64>(), scale in 0.01f64..100.0) {
        let mut r = rng(seed);
        let (w, d) = (9, 3);
        let raw: Vec<f64> = (0..w * d).map(|_| normal(&mut r)).collect();
        let words: Vec<String> = (0..w).map(|i| format!("w{i}")).collect();
        let a = EmbeddingTable::new(words.clone(), &EmbeddingMatrix::from_vec(d, raw.clone()).unwrap()).unwrap();
        let scaled = raw.iter().map(|x| x * scale).collect();
        let b = EmbeddingTable::new(words, &EmbeddingMatrix::from_vec(d, scaled).unwrap()).unwrap();
        for m in [AnalogyMethod::Add, AnalogyMethod::Mul] {
            prop_assert_eq!(analogy_answer(&a, "w0", "w1", "w2", m), analogy_answer(&b, "w0", "w1", "w2", m));
        }
    }

    #[test]
    fn smoothing_keeps_mass_and_interpolates_monotonically(docs in docs_strategy(6)) {
        let Ok(counts) = count_cooccurrences(&docs, 6, 2) else { return Ok(()) };
        let Ok(u) = UnigramDist::from_counts(&counts) else { return Ok(()) };
        if counts.total_pairs() == 0.0 {
            return Ok(());
        }
        let mut prev = vec![f64::INFINITY; 36];
        for kappa in [0.0, 0.1, 0.3, 0.6, 0.9, 1.0] {
            let h = SmoothedBigrams::new(&counts, u.clone(), kappa).unwrap();
            let d = h.dense();
            let mut total = 0.0;
            for i in 0..6 {
                for j in 0..6 {
                    total += d[(i, j)];
                    let gap = (d[(i, j)] - u.get(i) * u.get(j)).abs();
                    prop_assert!(gap <= prev[i * 6 + j] + 1e-15);
                    prev[i * 6 + j] = gap;
                }
            }
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
        prop_assert!(prev.iter().all(|&g| g < 1e-15));
    }

    #[test]
    fn projection_is_psd_and_consistent(seed in any::<u64>(), n in 2usize..9, rank in 1usize..6) {
        let mut r = rng(seed);
        let g = random_symmetric(&mut r, n);
        let f = psd_approximate(&SymmetricMatrix::new(g).unwrap(), rank).unwrap();
        prop_assert_eq!(f.rank(), rank);
        prop_assert!(f.eigenvalues().iter().all(|&l| l >= 0.0));
        let x = f.gram();
        // PSD: z^T X z >= 0 for random directions.
        for _ in 0..20 {
            let z: Vec<f64> = (0..n).map(|_| normal(&mut r)).collect();
            let q: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| z[i] * x[(i, j)] * z[j]).sum();
            prop_assert!(q >= -1e-9);
        }
        let v = f.factor();
        let vtv = Mat::from_fn(n, n, |i, j| (0..rank).map(|k| v[(k, i)] * v[(k, j)]).sum::<f64>());
        let diff = weighted_sq(&vtv, &x, None).sqrt();
        let norm = weighted_sq(&x, &Mat::zeros(n, n), None).sqrt();
        prop_assert!(diff <= 1e-9 * norm.max(f64::MIN_POSITIVE));
    }

    #[test]
    fn symmetric_joint_gives_symmetric_pmi(seed in any::<u64>()) {
        use std::collections::HashMap;
        use rand::Rng;
        let mut r = rng(seed);
        let mut pairs = HashMap::new();
        for i in 0..5u32 {
            for j in i..5u32 {
                let x = r.random_range(0..4) as f64;
                if x > 0.0 {
                    pairs.insert((i, j), x);
                    pairs.insert((j, i), x);
                }
            }
        }
        if pairs.is_empty() {
            return Ok(());
        }
        // Unigram equal to the row marginal keeps H symmetric with matching u.
        let mut uni = vec![0.0; 5];
        for (&(i, _), &x) in &pairs {
            uni[i as usize] += x;
        }
        if uni.iter().any(|&x| x == 0.0) {
            return Ok(());
        }
        let counts = psdembed::CooccurrenceCounts::from_parts(pairs, uni, 1).unwrap();
        let u = UnigramDist::from_counts(&counts).unwrap();
        let h = SmoothedBigrams::new(&counts, u, 0.1).unwrap();
        let pmi = psdembed::stats::PmiTarget::new(&h).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                prop_assert!((pmi.value(i, j) - pmi.value(j, i)).abs() < 1e-12);
            }
        }
    }
}
