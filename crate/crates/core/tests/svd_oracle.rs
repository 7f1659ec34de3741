//! Cross-checks of the power-iteration SVD against the independent Jacobi
//! oracle in `common`.

mod common;

use common::{cosine, jacobi_svd};
use tmc_core::matrix::{frobenius_norm, DenseMatrix};
use tmc_core::svd::{low_rank_gaussian, spectral_norm, truncated_svd};

#[test]
fn seeded_20x15_top3_matches_oracle() {
    let a = low_rank_gaussian(20, 15, 15, 2024).unwrap();
    let basis = truncated_svd(&a, 3, 1e-8, 2000).unwrap();
    let (sig, right) = jacobi_svd(&a);
    for i in 0..3 {
        assert!(
            (basis.singular_values[i] - sig[i]).abs() <= 1e-6 * sig[0],
            "sigma_{i}: {} vs oracle {}",
            basis.singular_values[i],
            sig[i]
        );
        let c = cosine(&basis.right_vectors[i], &right[i]).abs();
        assert!(c >= 1.0 - 1e-6, "vector {i} cos = {c}");
    }
}

#[test]
fn seeded_10x10_spectral_norm_matches_oracle() {
    let a = low_rank_gaussian(10, 10, 10, 7).unwrap();
    let (sig, _) = jacobi_svd(&a);
    let s = spectral_norm(&a);
    assert!((s - sig[0]).abs() <= 1e-8 * sig[0], "{s} vs {}", sig[0]);
}

#[test]
fn wide_matrix_matches_oracle() {
    let a = low_rank_gaussian(12, 30, 12, 5).unwrap();
    let basis = truncated_svd(&a, 2, 1e-8, 2000).unwrap();
    let (sig, right) = jacobi_svd(&a);
    for i in 0..2 {
        assert!((basis.singular_values[i] - sig[i]).abs() <= 1e-6 * sig[0]);
        assert!(cosine(&basis.right_vectors[i], &right[i]).abs() >= 1.0 - 1e-6);
    }
}

#[test]
fn oracle_self_consistency_reconstruction() {
    // the oracle itself must reproduce the matrix: A = sum sigma_i u_i v_i^T
    let a = low_rank_gaussian(9, 9, 4, 3).unwrap();
    let (sig, right) = jacobi_svd(&a);
    // u_i = A v_i / sigma_i; check ||A - U S V^T||_F tiny
    let mut recon = DenseMatrix::zeros(9, 9);
    for (d, v) in right.iter().enumerate() {
        if sig[d] <= 1e-12 {
            continue;
        }
        let mut u = vec![0.0; 9];
        for (i, ui) in u.iter_mut().enumerate() {
            let row = a.row(i);
            *ui = row.iter().zip(v).map(|(x, y)| x * y).sum::<f64>() / sig[d];
        }
        for i in 0..9 {
            for j in 0..9 {
                recon.set(i, j, recon.get(i, j) + sig[d] * u[i] * v[j]);
            }
        }
    }
    let mut diff = a.clone();
    for i in 0..9 {
        for j in 0..9 {
            diff.set(i, j, a.get(i, j) - recon.get(i, j));
        }
    }
    assert!(frobenius_norm(&diff) <= 1e-10 * frobenius_norm(&a));
}
