//! Optimal relative-error CUR decompositions.
//!
//! The crate is `no_std` + `alloc` when built without the default `std`
//! feature. Dense kernels (gemm, QR, SVD, symmetric eigen) are delegated to
//! `faer` running sequentially, so results are bit-identical across runs.
//!
//! Layers, bottom-up:
//! - [`matrix`]: dense/sparse storage, the [`Matrix`] access trait, exact
//!   factorizations and pseudo-inverse helpers.
//! - [`sketch`]: sparse subspace embeddings and sign (JL) sketches.
//! - [`approx_svd`]: deterministic, randomized and input-sparsity rank-k
//!   factor producers.
//! - [`select`]: leverage sampling and dual-set (BSS) sparsification.
//! - [`adaptive`]: adaptive residual sampling, sketched and derandomized.
//! - [`subspace`]: rank-k approximation restricted to a column span, and the
//!   rank-constrained intersection matrix.
//! - [`cur`]: the three end-to-end pipelines and [`cur::evaluate`].

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod adaptive;
pub mod approx_svd;
pub mod audit;
pub mod cur;
pub mod error;
pub(crate) mod math;
pub mod matrix;
pub mod select;
pub mod sketch;
pub mod subspace;

pub use error::{Error, Result};
pub use matrix::{DenseMatrix, Matrix, SparseMatrix};

/// Seeded generator used throughout the crate and its tests.
pub type SeededRng = rand_chacha::ChaCha8Rng;

/// Builds the crate's seeded generator.
pub fn rng_from_seed(seed: u64) -> SeededRng {
    use rand::SeedableRng;
    SeededRng::seed_from_u64(seed)
}
