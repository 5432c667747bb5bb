//! The audit counter is process-wide, so these checks live in their own
//! binary and run in sequence from one test.

use optcur_core::cur::{decompose, CurConfig, Fidelity, Variant};
use optcur_core::sketch::jlt_rows;
use optcur_core::{audit, rng_from_seed, DenseMatrix, SparseMatrix};
use rand::Rng;

fn sparse(m: usize, n: usize, nnz: usize, seed: u64) -> SparseMatrix {
    let mut rng = rng_from_seed(seed);
    let mut trip: Vec<(usize, usize, f64)> =
        (0..nnz).map(|_| (rng.random_range(0..m), rng.random_range(0..n), rng.random_range(-1.0..1.0))).collect();
    // A rank-2 block so the top of the spectrum is well separated.
    for b in 0..2 {
        for i in (b * 40)..(b * 40 + 30) {
            for j in (b * 30)..(b * 30 + 20) {
                trip.push((i, j, 5.0));
            }
        }
    }
    SparseMatrix::from_triplets(m, n, &trip).unwrap()
}

#[test]
fn audit_tracks_dense_buffers_and_sparse_path_stays_small() {
    audit::reset();
    let z = DenseMatrix::zeros(300, 200);
    assert!(audit::peak() >= 300 * 200);
    drop(z);
    audit::reset();
    assert_eq!(audit::peak(), 0);

    let (m, n) = (1200, 900);
    let a = sparse(m, n, 5000, 1);
    let cfg = CurConfig::new(2, 0.5, Variant::Sparse).with_fidelity(Fidelity::Heuristic).with_seed(3);
    audit::reset();
    let d = decompose(&a, &cfg).unwrap();
    let peak = audit::peak();
    assert!(peak > 0);
    assert!(peak < m * n, "largest dense buffer {peak} elements");
    // The widest buffers are sign-sketch products with O(log n) columns.
    let width = jlt_rows(m.max(n), 1.0);
    assert!(peak <= m.max(n) * width, "largest dense buffer {peak} > {} x {width}", m.max(n));
    assert_eq!(d.c.nrows(), m);
}
