//! Seeded random test instances.

use optcur_core::{rng_from_seed, DenseMatrix, SparseMatrix};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// `m x n` with i.i.d. standard normal entries.
pub fn gaussian(m: usize, n: usize, seed: u64) -> DenseMatrix {
    let mut rng = rng_from_seed(seed);
    DenseMatrix::from_fn(m, n, |_, _| StandardNormal.sample(&mut rng))
}

/// `L·R` with Gaussian factors of inner dimension `rank`.
pub fn exact_rank(m: usize, n: usize, rank: usize, seed: u64) -> DenseMatrix {
    let l = gaussian(m, rank, seed);
    let r = gaussian(rank, n, seed ^ 0x5151_5151);
    l.matmul(&r).expect("inner dimensions agree")
}

/// Rank-`rank` Gaussian signal plus `noise` times a Gaussian matrix.
pub fn low_rank_plus_noise(m: usize, n: usize, rank: usize, noise: f64, seed: u64) -> DenseMatrix {
    let signal = exact_rank(m, n, rank, seed);
    let e = gaussian(m, n, seed ^ 0xa3a3_a3a3);
    signal.add(&e.scale(noise)).expect("shapes agree")
}

/// Sparse `m x n` with about `density·m·n` stored entries: `rank` outer
/// products supported on `m/50 x n/50` random blocks, and the remaining
/// budget filled with `0.1·N(0, 1)` noise at uniform positions.
pub fn sparse_low_rank_plus_noise(m: usize, n: usize, rank: usize, density: f64, seed: u64) -> SparseMatrix {
    let mut rng = rng_from_seed(seed);
    let target = (density * (m * n) as f64).round() as usize;
    let (bm, bn) = ((m / 50).max(1), (n / 50).max(1));
    let mut trip = Vec::with_capacity(target.max(rank * bm * bn));
    for _ in 0..rank {
        let rows = rand::seq::index::sample(&mut rng, m, bm).into_vec();
        let cols = rand::seq::index::sample(&mut rng, n, bn).into_vec();
        let x: Vec<f64> = rows.iter().map(|_| StandardNormal.sample(&mut rng)).collect();
        let y: Vec<f64> = cols.iter().map(|_| StandardNormal.sample(&mut rng)).collect();
        for (&i, xi) in rows.iter().zip(&x) {
            for (&j, yj) in cols.iter().zip(&y) {
                trip.push((i, j, xi * yj));
            }
        }
    }
    for _ in trip.len()..target {
        let x: f64 = StandardNormal.sample(&mut rng);
        trip.push((rng.random_range(0..m), rng.random_range(0..n), 0.1 * x));
    }
    SparseMatrix::from_triplets(m, n, &trip).expect("indices in range")
}

/// Sparse `m x n`, each of `density·m·n` entries placed uniformly at random
/// with a `0.1·N(0, 1)` value.
pub fn sparse_gaussian(m: usize, n: usize, density: f64, seed: u64) -> SparseMatrix {
    sparse_low_rank_plus_noise(m, n, 0, density, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use optcur_core::matrix::linalg::numerical_rank;

    #[test]
    fn exact_rank_has_that_rank() {
        assert_eq!(numerical_rank(&exact_rank(30, 20, 4, 1)).unwrap(), 4);
    }

    #[test]
    fn seeds_reproduce() {
        assert_eq!(gaussian(5, 4, 9), gaussian(5, 4, 9));
        assert_ne!(gaussian(5, 4, 9), gaussian(5, 4, 10));
        assert_eq!(sparse_gaussian(50, 40, 0.05, 3), sparse_gaussian(50, 40, 0.05, 3));
    }

    #[test]
    fn sparse_fill_is_close_to_density() {
        let a = sparse_gaussian(400, 300, 0.005, 2);
        let nnz = a.nnz() as f64;
        assert!((nnz - 600.0).abs() <= 10.0, "nnz = {nnz}");
        let b = sparse_low_rank_plus_noise(2000, 1500, 5, 0.005, 2);
        let fill = b.nnz() as f64 / 3e6;
        assert!((0.0049..=0.0051).contains(&fill), "fill = {fill}");
    }
}
