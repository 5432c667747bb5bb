//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Numeric arguments restrict the run to those criteria, e.g.
//! `cargo test --test acceptance -- 4 5`.

use std::time::{Duration, Instant};

use optcur::brute::brute_force_best_columns;
use optcur::generate::{exact_rank, gaussian, low_rank_plus_noise, sparse_low_rank_plus_noise};
use optcur::mtx::format_dense;
use optcur::gen_adversarial;
use optcur_core::adaptive::{adaptive_cols_sparse, adaptive_rows_d, column_basis, residual_col_norms};
use optcur_core::cur::{bss_column_seed, decompose, evaluate_with_opt, CurConfig, CurDecomposition, Fidelity, Variant};
use optcur_core::matrix::linalg::{numerical_rank, orthonormalize, pinv, singular_values, svd, tail_energy, truncate};
use optcur_core::select::{bss_sampling, bss_sparse_columns};
use optcur_core::subspace::rank_constrained_u;
use optcur_core::{audit, rng_from_seed, DenseMatrix, Matrix, SparseMatrix};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// `‖X − Y‖_F²`.
fn diff_sq(x: &DenseMatrix, y: &DenseMatrix) -> f64 {
    x.sub(y).unwrap().frobenius_sq()
}

/// `‖A − A_k‖_F²` from a full SVD.
fn opt_sq(a: &DenseMatrix, k: usize) -> f64 {
    singular_values(a).unwrap()[k..].iter().map(|s| s * s).sum()
}

/// `‖A − CUR‖_F²` with the product formed densely.
fn cur_err(a: &DenseMatrix, d: &CurDecomposition) -> f64 {
    diff_sq(a, &d.c.matmul(&d.u).unwrap().matmul(&d.r).unwrap())
}

fn sigma_min(x: &DenseMatrix, k: usize) -> f64 {
    singular_values(x).unwrap()[k - 1]
}

fn criterion_1() -> Outcome {
    let cfg = CurConfig::new(2, 1.0, Variant::Deterministic);
    let (mut ok, mut worst) = (0, 0.0f64);
    for s in 0..20 {
        let a = low_rank_plus_noise(40, 40, 5, 0.1, 1000 + s);
        let d = decompose(&a, &cfg).unwrap();
        assert_eq!((d.c.ncols(), d.r.nrows()), (28, 28));
        let ratio = cur_err(&a, &d) / opt_sq(&a, 2);
        worst = worst.max(ratio);
        if ratio <= 9.0 * (1.0 + 1e-9) {
            ok += 1;
        }
    }
    outcome(ok == 20, format!("{ok}/20 runs with ‖A−CUR‖² ≤ 9·opt², worst ratio {worst:.4}"))
}

fn criterion_2() -> Outcome {
    let (mut ok, mut worst) = (0, 0.0f64);
    for s in 0..50 {
        let a = low_rank_plus_noise(200, 150, 8, 0.2, 2000 + s);
        let sel = bss_column_seed(&a, 4, 16).unwrap();
        let c1 = a.columns(&sel.indices);
        let err = diff_sq(&a, &c1.matmul(&pinv(&c1).unwrap().matmul(&a).unwrap()).unwrap());
        let ratio = err / opt_sq(&a, 4);
        worst = worst.max(ratio);
        if ratio <= 10.0 {
            ok += 1;
        }
    }
    outcome(ok == 50, format!("{ok}/50 runs with ‖A−C₁C₁†A‖² ≤ 10·opt², worst ratio {worst:.4}"))
}

fn criterion_3() -> Outcome {
    let mut rng = rng_from_seed(3);
    let (mut ok, mut min_margin) = (0, f64::INFINITY);
    for s in 0..100 {
        let k = rng.random_range(1..=6);
        let n = rng.random_range(4 * k..=300);
        let l = rng.random_range(1..=20);
        let r = rng.random_range(k + 1..=4 * k);
        let v = orthonormalize(&gaussian(n, k, 3000 + s)).unwrap();
        let a = gaussian(n, l, 4000 + s);
        let sel = bss_sampling(&v, &a, r).unwrap();
        let sk = sigma_min(&v.tr_matmul(&sel.s_matrix()).unwrap(), k);
        let floor = 1.0 - (k as f64 / r as f64).sqrt();
        let frob = sel.sample_rows(&a).frobenius_sq();
        min_margin = min_margin.min(sk - floor);
        if sel.nonzero_count() <= r && sk >= floor && frob <= a.frobenius_sq() {
            ok += 1;
        }
    }
    outcome(ok == 100, format!("{ok}/100 instances meet both bounds, min spectral margin {min_margin:.3e}"))
}

fn criterion_4() -> Outcome {
    let cfg = CurConfig::new(2, 0.9, Variant::Linear);
    let plan = cfg.plan(4000, 4000).unwrap();
    let a = low_rank_plus_noise(4000, 4000, 5, 0.05, 4000);
    let opt2 = tail_energy(&a, 2).unwrap();
    let bound = 1.0 + 20.0 * 0.9;
    let (mut ok, mut ratios) = (0, Vec::new());
    for seed in 0..10 {
        let d = decompose(&a, &cfg.clone().with_seed(seed)).unwrap();
        let ratio = evaluate_with_opt(&a, &d, opt2).unwrap().ratio.unwrap();
        ratios.push(ratio);
        if ratio <= bound {
            ok += 1;
        }
    }
    drop(a);
    let exact = exact_rank(4000, 4000, 2, 4001);
    let total = exact.frobenius_sq();
    let (mut exact_ok, mut exact_runs, mut worst_rel) = (0, 0, 0.0f64);
    for seed in 0..10 {
        if let Ok(d) = decompose(&exact, &cfg.clone().with_seed(seed)) {
            exact_runs += 1;
            let rel = (evaluate_with_opt(&exact, &d, 0.0).unwrap().err2 / total).sqrt();
            worst_rel = worst_rel.max(rel);
            if rel <= 1e-8 {
                exact_ok += 1;
            }
        }
    }
    let worst = ratios.iter().cloned().fold(0.0, f64::max);
    outcome(
        ok >= 4 && exact_runs > 0 && exact_ok == exact_runs,
        format!(
            "c = r = {}: {ok}/10 seeds within {bound}·opt² (worst ratio {worst:.4}); exact rank 2: {exact_ok}/{exact_runs} \
             with relative error ≤ 1e-8 (worst {worst_rel:.2e})",
            plan.c()
        ),
    )
}

fn criterion_5() -> Outcome {
    let (m, n) = (2000, 1500);
    let cfg = CurConfig::new(5, 0.5, Variant::Sparse).with_fidelity(Fidelity::Heuristic);
    let mut ok_a = 0;
    let mut worst = 0.0f64;
    let mut fill = 0.0f64;
    for seed in 0..100 {
        let a = sparse_low_rank_plus_noise(m, n, 5, 0.005, 5000 + seed);
        fill = fill.max(a.nnz() as f64 / (m * n) as f64);
        let opt2 = tail_energy(&a, 5).unwrap();
        let d = decompose(&a, &cfg.clone().with_seed(seed)).unwrap();
        let ratio = evaluate_with_opt(&a, &d, opt2).unwrap().ratio.unwrap();
        worst = worst.max(ratio);
        if ratio <= 2.0 {
            ok_a += 1;
        }
    }

    let mut rng = rng_from_seed(55);
    let (mut spectral_ok, mut frob_ok) = (0, 0);
    let (nv, k, r, l) = (60, 3, 12, 400);
    for s in 0..100 {
        let v = orthonormalize(&gaussian(nv, k, 5200 + s)).unwrap();
        let a = gaussian(nv, l, 5300 + s);
        let sel = bss_sparse_columns(&v, &a.transpose(), r, 0.5, &mut rng).unwrap();
        if sigma_min(&v.tr_matmul(&sel.s_matrix()).unwrap(), k) >= 1.0 - (k as f64 / r as f64).sqrt() {
            spectral_ok += 1;
        }
        if sel.sample_rows(&a).frobenius_sq() <= 3.0 * a.frobenius_sq() {
            frob_ok += 1;
        }
    }

    let mut floor_ok = 0;
    for s in 0..100 {
        let a = low_rank_plus_noise(300, 200, 6, 0.1, 5400 + s);
        let v = a.columns(&[0, 1, 2, 3]);
        let q = column_basis(&v).unwrap();
        let truth = residual_col_norms(&a, &q).unwrap();
        let total: f64 = truth.iter().sum();
        let draw = adaptive_cols_sparse(&a, &v, 10, &mut rng).unwrap();
        if draw.distribution.p.iter().zip(&truth).all(|(p, t)| *p >= t / total / 3.0) {
            floor_ok += 1;
        }
    }

    let a = sparse_low_rank_plus_noise(m, n, 5, 0.005, 5999);
    audit::reset();
    let d = decompose(&a, &cfg.clone().with_seed(7)).unwrap();
    let peak = audit::peak();
    drop(d);

    let pass = ok_a >= 80 && spectral_ok == 100 && frob_ok >= 95 && floor_ok >= 99 && peak < m * n;
    outcome(
        pass,
        format!(
            "(a) fill ≤ {:.2}%: {ok_a}/100 seeds with ratio ≤ 2 (worst {worst:.3}); (b) spectral {spectral_ok}/100, \
             Frobenius ≤ 3 {frob_ok}/100, adaptive floor {floor_ok}/100; (c) largest dense buffer {peak} < m·n = {}",
            100.0 * fill,
            m * n
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = rng_from_seed(6);
    let (mut ok, mut worst) = (0, 0.0f64);
    for s in 0..20 {
        let a = gaussian(12, 10, 6000 + s);
        let cols: Vec<usize> = (0..3).map(|_| rng.random_range(0..10)).collect();
        let v = a.columns(&cols);
        let rho = numerical_rank(&v).unwrap() as f64;
        let r1 = a.rows_at(&[rng.random_range(0..12), rng.random_range(0..12)]);
        let vva = v.matmul(&pinv(&v).unwrap().matmul(&a).unwrap()).unwrap();
        let ar1 = a.matmul(&pinv(&r1).unwrap().matmul(&r1).unwrap()).unwrap();
        let bound = diff_sq(&a, &vva) + (4.0 * rho / 4.0) * diff_sq(&a, &ar1);
        let out = adaptive_rows_d(&a, &v, &r1, 4).unwrap();
        let r = r1.vstack(&a.rows_at(&out.indices)).unwrap();
        let err = diff_sq(&a, &vva.matmul(&pinv(&r).unwrap().matmul(&r).unwrap()).unwrap());
        worst = worst.max(err / bound);
        if out.indices.len() == 4 && err <= bound {
            ok += 1;
        }
    }
    outcome(ok == 20, format!("{ok}/20 instances within the bound, worst error/bound {worst:.4}"))
}

fn criterion_7() -> Outcome {
    let mut rng = rng_from_seed(7);
    let mut ok = 0;
    for s in 0..50 {
        let (m, n) = (rng.random_range(8..=16), rng.random_range(8..=16));
        let k = rng.random_range(1..=3);
        let (c, r) = (rng.random_range(k..=6), rng.random_range(k..=6));
        let a = gaussian(m, n, 7000 + s);
        let cols: Vec<usize> = (0..c).map(|_| rng.random_range(0..n)).collect();
        let rows: Vec<usize> = (0..r).map(|_| rng.random_range(0..m)).collect();
        let (cm, rm) = (a.columns(&cols), a.rows_at(&rows));
        let u = rank_constrained_u(&a, &cm, &rm, k).unwrap();
        let err = |u: &DenseMatrix| diff_sq(&a, &cm.matmul(u).unwrap().matmul(&rm).unwrap());
        let best = err(&u);
        let f = svd(&u).unwrap();
        let base = truncate(&f, k.min(f.rank().max(1))).unwrap();
        let mut beaten = false;
        for t in 0..1000 {
            let x = DenseMatrix::from_fn(c, k, |_, _| rng.random_range(-1.0..1.0));
            let y = DenseMatrix::from_fn(r, k, |_, _| rng.random_range(-1.0..1.0));
            let cand = if t % 2 == 0 {
                x.matmul_tr(&y).unwrap()
            } else {
                // A small rank-k perturbation inside the rank-k set.
                let tf = svd(&base.add(&x.matmul_tr(&y).unwrap().scale(1e-4)).unwrap()).unwrap();
                truncate(&tf, k).unwrap()
            };
            if err(&cand) < best * (1.0 - 1e-12) {
                beaten = true;
            }
        }
        if !beaten && numerical_rank(&u).unwrap() <= k {
            ok += 1;
        }
    }
    outcome(ok == 50, format!("{ok}/50 instances unbeaten by 1000 rank-k competitors with rank(U) ≤ k"))
}

fn criterion_8() -> Outcome {
    // The estimate ℓ(1 + 2α²/k) is off by α², so α must be small for 1e-9.
    let alpha = 1e-5;
    let mut spectrum_err = 0.0f64;
    let mut opt_err = 0.0f64;
    for (n, k) in [(4, 1), (5, 2), (8, 3)] {
        let inst = gen_adversarial(n, k, alpha).unwrap();
        let d = inst.a.to_dense();
        let sv = singular_values(&d).unwrap();
        let a2k = alpha * alpha / k as f64;
        for (i, s) in sv.iter().enumerate() {
            let want = if i < 2 * k {
                n as f64 + a2k
            } else if i < inst.t - k {
                a2k
            } else {
                0.0
            };
            spectrum_err = spectrum_err.max((s * s - want).abs());
        }
        let opt2 = opt_sq(&d, k);
        let ell = (n * k) as f64;
        opt_err = opt_err.max((opt2 - ell * (1.0 + 2.0 * a2k)).abs() / opt2);
    }
    let inst = gen_adversarial(4, 1, alpha).unwrap();
    let d = inst.a.to_dense();
    let best = brute_force_best_columns(&d, 1, 1).unwrap();
    let ratio = best.error / opt_sq(&d, 1);
    let threshold = 1.0 + 1.0 / 2.0 - 0.5;
    let pass = spectrum_err <= 1e-9 && opt_err <= 1e-9 && ratio >= threshold - 1e-12;
    outcome(
        pass,
        format!(
            "spectrum error {spectrum_err:.1e}, opt² relative error {opt_err:.1e}, best 1-column ratio {ratio:.12} \
             vs {threshold} over {} subsets",
            best.visited
        ),
    )
}

fn artifacts(d: &CurDecomposition) -> String {
    let idx = |v: &[usize]| v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",");
    format!(
        "{}{}{}{}|{}",
        format_dense(&d.c),
        format_dense(&d.u),
        format_dense(&d.r),
        idx(&d.columns.indices),
        idx(&d.rows.indices)
    )
}

fn criterion_9() -> Outcome {
    let dense = low_rank_plus_noise(120, 100, 4, 0.05, 9000);
    let sparse: SparseMatrix = sparse_low_rank_plus_noise(300, 250, 4, 0.02, 9001);
    let det = low_rank_plus_noise(40, 40, 5, 0.1, 9002);
    let runs: [(&str, &dyn Matrix, CurConfig); 3] = [
        ("linear", &dense, CurConfig::new(3, 0.5, Variant::Linear).with_fidelity(Fidelity::Heuristic)),
        ("sparse", &sparse, CurConfig::new(3, 0.5, Variant::Sparse).with_fidelity(Fidelity::Heuristic)),
        ("deterministic", &det, CurConfig::new(2, 1.0, Variant::Deterministic)),
    ];
    let mut same = Vec::new();
    for (name, a, cfg) in runs {
        let cfg = cfg.with_seed(99);
        let x = artifacts(&decompose(a, &cfg).unwrap());
        let y = artifacts(&decompose(a, &cfg).unwrap());
        same.push((name, x == y));
    }
    let pass = same.iter().all(|(_, s)| *s);
    let detail = same.iter().map(|(n, s)| format!("{n}: {}", if *s { "identical" } else { "differs" })).collect::<Vec<_>>();
    outcome(pass, detail.join(", "))
}

type Criterion = (usize, &'static str, Duration, fn() -> Outcome);

fn main() {
    let min = |m: u64| Duration::from_secs(60 * m);
    let criteria: [Criterion; 9] = [
        (1, "deterministic CUR within 9·opt²", min(10), criterion_1),
        (2, "deterministic column seed within 10·opt²", min(1), criterion_2),
        (3, "dual-set sparsification bounds", min(1), criterion_3),
        (4, "linear-time CUR at proven constants", min(15), criterion_4),
        (5, "input-sparsity CUR and its components", min(10), criterion_5),
        (6, "derandomized adaptive rows bound", min(2), criterion_6),
        (7, "rank-constrained U optimality", min(1), criterion_7),
        (8, "lower-bound instance", min(1), criterion_8),
        (9, "byte-identical artifacts per seed", min(10), criterion_9),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, budget, run) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        let took = start.elapsed();
        let pass = out.pass && took <= budget;
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {id} ({name}): {} [{:.1}s of {}s]",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            took.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
