//! Truncated SVD by block power iteration, spectral norm, seeded low-rank generator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{CoreError, Result};
use crate::matrix::{frobenius_norm, DenseMatrix};

/// Top-k singular triples of a matrix.
///
/// Left/right vectors are unit length and pairwise orthogonal; singular
/// values are non-negative and sorted non-increasing. Each vector is oriented
/// so that its largest-magnitude right-vector entry is positive.
#[derive(Debug, Clone)]
pub struct SingularBasis {
    pub k: usize,
    /// k vectors of length n_rows.
    pub left_vectors: Vec<Vec<f64>>,
    pub singular_values: Vec<f64>,
    /// k vectors of length n_cols.
    pub right_vectors: Vec<Vec<f64>>,
}

impl SingularBasis {
    /// Basis for the transposed matrix: left and right swap roles.
    pub fn transposed(&self) -> SingularBasis {
        SingularBasis {
            k: self.k,
            left_vectors: self.right_vectors.clone(),
            singular_values: self.singular_values.clone(),
            right_vectors: self.left_vectors.clone(),
        }
    }
}

/// Fixed seed for the power-iteration start block; the routine takes no seed
/// parameter, so determinism comes from a constant.
const INIT_SEED: u64 = 0x5eed_c0de_2024_0001;

fn seeded_normal_block(n_rows: usize, k: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = DenseMatrix::zeros(n_rows, k);
    for i in 0..n_rows {
        let row = out.row_mut(i);
        for v in row {
            *v = StandardNormal.sample(&mut rng);
        }
    }
    out
}

/// Modified Gram-Schmidt on the columns of `v` (applied twice), replacing any
/// collapsed column with a fresh seeded vector so the block keeps full rank.
fn orthonormalize_columns(v: &mut DenseMatrix, refill_seed: u64) {
    let n = v.n_rows();
    let k = v.n_cols();
    let mut col = vec![0.0; n];
    for j in 0..k {
        for i in 0..n {
            col[i] = v.get(i, j);
        }
        for _pass in 0..2 {
            for p in 0..j {
                let mut dot = 0.0;
                for i in 0..n {
                    dot += col[i] * v.get(i, p);
                }
                for i in 0..n {
                    col[i] -= dot * v.get(i, p);
                }
            }
        }
        let mut norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-150 {
            // deflated to nothing; restart this column from noise
            let mut rng = ChaCha8Rng::seed_from_u64(refill_seed ^ (j as u64).wrapping_mul(0x9e37));
            for c in col.iter_mut() {
                *c = StandardNormal.sample(&mut rng);
            }
            for p in 0..j {
                let mut dot = 0.0;
                for i in 0..n {
                    dot += col[i] * v.get(i, p);
                }
                for i in 0..n {
                    col[i] -= dot * v.get(i, p);
                }
            }
            norm = col.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
        }
        for i in 0..n {
            v.set(i, j, col[i] / norm);
        }
    }
}

/// Cyclic Jacobi eigendecomposition of a small symmetric matrix.
/// Returns eigenvalues (descending) and eigenvectors as columns.
pub(crate) fn jacobi_eigh(a: &DenseMatrix) -> (Vec<f64>, DenseMatrix) {
    let k = a.n_rows();
    let mut m = a.clone();
    let mut v = DenseMatrix::zeros(k, k);
    for i in 0..k {
        v.set(i, i, 1.0);
    }
    let scale = frobenius_norm(a).max(1e-300);
    for _sweep in 0..60 {
        let mut off = 0.0;
        for p in 0..k {
            for q in (p + 1)..k {
                off += m.get(p, q).abs();
            }
        }
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..k {
            for q in (p + 1)..k {
                let apq = m.get(p, q);
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = 0.5 * (aqq - app) / apq;
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for i in 0..k {
                    let mip = m.get(i, p);
                    let miq = m.get(i, q);
                    m.set(i, p, c * mip - s * miq);
                    m.set(i, q, s * mip + c * miq);
                }
                for i in 0..k {
                    let mpi = m.get(p, i);
                    let mqi = m.get(q, i);
                    m.set(p, i, c * mpi - s * mqi);
                    m.set(q, i, s * mpi + c * mqi);
                }
                for i in 0..k {
                    let vip = v.get(i, p);
                    let viq = v.get(i, q);
                    v.set(i, p, c * vip - s * viq);
                    v.set(i, q, s * vip + c * viq);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a_, &b_| m.get(b_, b_).partial_cmp(&m.get(a_, a_)).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| m.get(i, i)).collect();
    let mut vecs = DenseMatrix::zeros(k, k);
    for (new_j, &old_j) in order.iter().enumerate() {
        for i in 0..k {
            vecs.set(i, new_j, v.get(i, old_j));
        }
    }
    (vals, vecs)
}

/// Top-k singular triples via block power iteration on A^T A with per-sweep
/// Gram-Schmidt and Rayleigh-Ritz extraction.
///
/// Converged when every triple satisfies `||A^T u - sigma v|| <= tol * sigma_1`
/// (triples with sigma below 1e-12 * sigma_1 count as converged). Hitting
/// `max_iter` returns `NoConvergence` carrying the best iterate.
pub fn truncated_svd(
    a: &DenseMatrix,
    k: usize,
    tol: f64,
    max_iter: usize,
) -> Result<SingularBasis> {
    if a.is_empty() {
        return Err(CoreError::EmptyMatrix);
    }
    let min_dim = a.n_rows().min(a.n_cols());
    if k == 0 || k > min_dim {
        return Err(CoreError::InvalidRank {
            rank: k,
            n_rows: a.n_rows(),
            n_cols: a.n_cols(),
        });
    }
    if frobenius_norm(a) == 0.0 {
        return Err(CoreError::ZeroMatrix);
    }
    // iterate in the smaller dimension
    if a.n_cols() > a.n_rows() {
        let t = a.transpose();
        return match truncated_svd(&t, k, tol, max_iter) {
            Ok(b) => Ok(b.transposed()),
            Err(CoreError::NoConvergence {
                iterations,
                residual,
                best,
            }) => Err(CoreError::NoConvergence {
                iterations,
                residual,
                best: Box::new(best.transposed()),
            }),
            Err(e) => Err(e),
        };
    }

    let m = a.n_cols();
    let mut v = seeded_normal_block(m, k, INIT_SEED);
    orthonormalize_columns(&mut v, INIT_SEED ^ 0xabcd);

    let mut last_residual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    let mut ritz: Option<(Vec<f64>, DenseMatrix)> = None;

    while iterations < max_iter {
        iterations += 1;
        let w = a.matmul_block(&v); // n x k
        let z = a.matmul_t_block(&w); // m x k  (= A^T A V)
        // Ritz extraction is per-sweep overhead; checking every few sweeps
        // is enough for the convergence test
        let check = iterations % 3 == 0 || iterations == max_iter || iterations == 1;
        if !check {
            v = z;
            orthonormalize_columns(&mut v, INIT_SEED ^ iterations as u64);
            continue;
        }
        // Rayleigh-Ritz on span(V): K = V^T Z
        let mut kmat = DenseMatrix::zeros(k, k);
        for i in 0..m {
            let vr = v.row(i);
            let zr = z.row(i);
            for p in 0..k {
                let vp = vr[p];
                if vp == 0.0 {
                    continue;
                }
                let dst = kmat.row_mut(p);
                for (d, &zq) in dst.iter_mut().zip(zr.iter()) {
                    *d += vp * zq;
                }
            }
        }
        // symmetrize against roundoff
        for p in 0..k {
            for q in (p + 1)..k {
                let s = 0.5 * (kmat.get(p, q) + kmat.get(q, p));
                kmat.set(p, q, s);
                kmat.set(q, p, s);
            }
        }
        let (lambda, pmat) = jacobi_eigh(&kmat);
        let sigma1 = lambda[0].max(0.0).sqrt();
        // residual per Ritz pair: || Z p_i - lambda_i V p_i || / sigma_i
        let mut max_rel = 0.0f64;
        for i in 0..k {
            let li = lambda[i].max(0.0);
            let si = li.sqrt();
            if si <= 1e-12 * sigma1.max(1e-300) {
                continue;
            }
            let mut sq = 0.0;
            for r in 0..m {
                let mut zp = 0.0;
                let mut vp = 0.0;
                let zr = z.row(r);
                let vr = v.row(r);
                for c in 0..k {
                    zp += zr[c] * pmat.get(c, i);
                    vp += vr[c] * pmat.get(c, i);
                }
                let d = zp - li * vp;
                sq += d * d;
            }
            let rel = sq.sqrt() / si / sigma1.max(1e-300);
            max_rel = max_rel.max(rel);
        }
        last_residual = max_rel;
        ritz = Some((lambda, pmat));
        if max_rel <= tol {
            converged = true;
            break;
        }
        v = z;
        orthonormalize_columns(&mut v, INIT_SEED ^ iterations as u64);
    }

    let (_, pmat) = ritz.expect("at least one sweep");
    // rotate V into Ritz vectors, then recover U and sigma from A V.
    let mut vstar = DenseMatrix::zeros(m, k);
    for r in 0..m {
        let vr = v.row(r);
        let dst = vstar.row_mut(r);
        for (i, d) in dst.iter_mut().enumerate() {
            let mut acc = 0.0;
            for c in 0..k {
                acc += vr[c] * pmat.get(c, i);
            }
            *d = acc;
        }
    }
    orthonormalize_columns(&mut vstar, INIT_SEED ^ 0x77);
    let av = a.matmul_block(&vstar); // n x k
    let n = a.n_rows();
    let mut triples: Vec<(f64, Vec<f64>, Vec<f64>)> = Vec::with_capacity(k);
    for i in 0..k {
        let mut u: Vec<f64> = (0..n).map(|r| av.get(r, i)).collect();
        let sigma = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut vcol: Vec<f64> = (0..m).map(|r| vstar.get(r, i)).collect();
        if sigma > 1e-300 {
            for x in &mut u {
                *x /= sigma;
            }
        } else {
            u.fill(0.0);
        }
        // orient: largest-magnitude entry of v positive
        let mut best = 0usize;
        for (j, x) in vcol.iter().enumerate() {
            if x.abs() > vcol[best].abs() {
                best = j;
            }
        }
        if vcol[best] < 0.0 {
            for x in &mut vcol {
                *x = -*x;
            }
            for x in &mut u {
                *x = -*x;
            }
        }
        triples.push((sigma, u, vcol));
    }
    triples.sort_by(|a_, b_| b_.0.partial_cmp(&a_.0).unwrap());
    let basis = SingularBasis {
        k,
        left_vectors: triples.iter().map(|t| t.1.clone()).collect(),
        singular_values: triples.iter().map(|t| t.0).collect(),
        right_vectors: triples.into_iter().map(|t| t.2).collect(),
    };
    if converged {
        Ok(basis)
    } else {
        Err(CoreError::NoConvergence {
            iterations,
            residual: last_residual,
            best: Box::new(basis),
        })
    }
}

/// Like [`truncated_svd`] but accepts the best iterate when the sweep budget
/// runs out. Directions stay useful even when the tail of a clustered
/// spectrum refuses to settle.
pub fn truncated_svd_lenient(
    a: &DenseMatrix,
    k: usize,
    tol: f64,
    max_iter: usize,
) -> Result<SingularBasis> {
    match truncated_svd(a, k, tol, max_iter) {
        Ok(b) => Ok(b),
        Err(CoreError::NoConvergence { best, .. }) => Ok(*best),
        Err(e) => Err(e),
    }
}

/// First singular value; 0 for the zero matrix.
pub fn spectral_norm(a: &DenseMatrix) -> f64 {
    if a.is_empty() || frobenius_norm(a) == 0.0 {
        return 0.0;
    }
    match truncated_svd(a, 1, 1e-9, 3000) {
        Ok(b) => b.singular_values[0],
        Err(CoreError::NoConvergence { best, .. }) => best.singular_values[0],
        Err(_) => 0.0,
    }
}

/// A B^T with A (n x r), B (m x r) filled with seeded standard normal draws.
pub fn low_rank_gaussian(n: usize, m: usize, r: usize, seed: u64) -> Result<DenseMatrix> {
    if r > n.min(m) {
        return Err(CoreError::InvalidRank {
            rank: r,
            n_rows: n,
            n_cols: m,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = DenseMatrix::zeros(n, r);
    for i in 0..n {
        for v in a.row_mut(i) {
            *v = StandardNormal.sample(&mut rng);
        }
    }
    let mut b = DenseMatrix::zeros(m, r);
    for i in 0..m {
        for v in b.row_mut(i) {
            *v = StandardNormal.sample(&mut rng);
        }
    }
    let mut out = DenseMatrix::zeros(n, m);
    for i in 0..n {
        let ar = a.row(i);
        let dst = out.row_mut(i);
        for j in 0..m {
            let br = b.row(j);
            let mut acc = 0.0;
            for (x, y) in ar.iter().zip(br.iter()) {
                acc += x * y;
            }
            dst[j] = acc;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(values: &[f64]) -> DenseMatrix {
        let n = values.len();
        let mut m = DenseMatrix::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    #[test]
    fn diagonal_top_singular_triple() {
        let a = diag(&[3.0, 2.0, 1.0]);
        let b = truncated_svd(&a, 1, 1e-8, 1000).unwrap();
        assert!((b.singular_values[0] - 3.0).abs() < 1e-8);
        assert!((b.right_vectors[0][0].abs() - 1.0).abs() < 1e-6);
        // sign convention: largest entry positive
        assert!(b.right_vectors[0][0] > 0.0);
    }

    #[test]
    fn all_ones_rank1() {
        let a = DenseMatrix::new(4, 4, vec![1.0; 16]).unwrap();
        let b = truncated_svd(&a, 1, 1e-8, 1000).unwrap();
        assert!((b.singular_values[0] - 4.0).abs() < 1e-8);
        for &v in &b.right_vectors[0] {
            assert!((v - 0.5).abs() < 1e-7);
        }
    }

    #[test]
    fn zero_matrix_rejected() {
        let a = DenseMatrix::zeros(3, 3);
        assert!(matches!(
            truncated_svd(&a, 1, 1e-8, 100),
            Err(CoreError::ZeroMatrix)
        ));
        assert_eq!(spectral_norm(&a), 0.0);
    }

    #[test]
    fn spectral_norm_diag() {
        assert!((spectral_norm(&diag(&[3.0, 2.0, 1.0])) - 3.0).abs() < 1e-9);
    }

    #[test]
    fn low_rank_gaussian_rank_and_determinism() {
        let a = low_rank_gaussian(5, 5, 5, 7).unwrap();
        let b = truncated_svd_lenient(&a, 5, 1e-8, 2000).unwrap();
        assert!(b.singular_values[4] > 1e-8 * b.singular_values[0]);

        let c = low_rank_gaussian(100, 100, 3, 11).unwrap();
        let s = truncated_svd_lenient(&c, 4, 1e-8, 3000).unwrap();
        assert!(s.singular_values[3] / s.singular_values[0] < 1e-10);

        let d1 = low_rank_gaussian(20, 30, 2, 99).unwrap();
        let d2 = low_rank_gaussian(20, 30, 2, 99).unwrap();
        assert_eq!(d1, d2);
        assert!(low_rank_gaussian(3, 3, 4, 0).is_err());
    }

    #[test]
    fn rank1_spectral_equals_frobenius() {
        let a = low_rank_gaussian(12, 9, 1, 5).unwrap();
        let f = crate::matrix::frobenius_norm(&a);
        let s = spectral_norm(&a);
        assert!((s - f).abs() <= 1e-8 * f);
    }

    #[test]
    fn orthonormality_and_reconstruction() {
        let a = low_rank_gaussian(20, 15, 3, 42).unwrap();
        let b = truncated_svd(&a, 3, 1e-8, 2000).unwrap();
        for i in 0..3 {
            let ni: f64 = b.right_vectors[i].iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((ni - 1.0).abs() < 1e-8);
            for j in (i + 1)..3 {
                let dot: f64 = b.right_vectors[i]
                    .iter()
                    .zip(&b.right_vectors[j])
                    .map(|(x, y)| x * y)
                    .sum();
                assert!(dot.abs() < 1e-6);
                let dotu: f64 = b.left_vectors[i]
                    .iter()
                    .zip(&b.left_vectors[j])
                    .map(|(x, y)| x * y)
                    .sum();
                assert!(dotu.abs() < 1e-6);
            }
        }
        // exact rank-3 matrix reconstructs
        let mut recon = DenseMatrix::zeros(20, 15);
        for d in 0..3 {
            for i in 0..20 {
                for j in 0..15 {
                    let v = recon.get(i, j)
                        + b.singular_values[d] * b.left_vectors[d][i] * b.right_vectors[d][j];
                    recon.set(i, j, v);
                }
            }
        }
        let mut diff = 0.0;
        for i in 0..20 {
            for j in 0..15 {
                let d = recon.get(i, j) - a.get(i, j);
                diff += d * d;
            }
        }
        assert!(diff.sqrt() <= 1e-6 * crate::matrix::frobenius_norm(&a));
    }
}
