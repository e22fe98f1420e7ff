//! Word embeddings as a weighted low-rank positive-semidefinite
//! approximation of a smoothed PMI matrix.
//!
//! The pipeline runs [`corpus`] (tokenize, vocabulary, windowed counts) into
//! [`stats`] (smoothed joints, weights, PMI target), solves the core block
//! with [`psd_solver`] and the remaining words with [`blockwise`] ridge
//! regression. [`genmodel`] scores text under the fitted model and [`eval`]
//! runs similarity and analogy benchmarks.

pub mod blockwise;
pub mod corpus;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod genmodel;
pub mod io;
pub mod psd_solver;
pub mod stats;

pub use blockwise::{plan_blocks, ridge_solve_word, train_blockwise, BlockPlan, RegularizationSchedule, TrainOptions};
pub use corpus::{count_cooccurrences, tokenize, CooccurrenceCounts, Document, TokenizerOptions, Vocabulary, WordId};
pub use embedding::EmbeddingMatrix;
pub use error::{Error, Result};
pub use psd_solver::{bcd_solve, psd_approximate, BcdConfig, PsdFactor, SymmetricMatrix};
pub use stats::CorpusStats;

pub use faer;
