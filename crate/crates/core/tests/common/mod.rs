//! Shared test support: an independent full-SVD oracle (one-sided Jacobi)
//! and small statistics helpers.
//!
//! The oracle deliberately shares no code with the library's power-iteration
//! SVD; it exists to check that implementation from a second route.

use tmc_core::matrix::DenseMatrix;

/// Full SVD by one-sided Jacobi rotations on columns.
///
/// Returns (singular values descending, right singular vectors as rows).
/// Accuracy is limited only by the rotation threshold, which is driven to
/// machine precision; suitable as a reference for matrices up to a few
/// hundred columns.
pub fn jacobi_svd(a: &DenseMatrix) -> (Vec<f64>, Vec<Vec<f64>>) {
    // work on B = A with columns rotated; if wide, transpose first so the
    // rotation space is the smaller side
    let transposed = a.n_cols() > a.n_rows();
    let work = if transposed { a.transpose() } else { a.clone() };
    let n = work.n_rows();
    let m = work.n_cols();

    // column-major copy for cheap column access
    let mut cols: Vec<Vec<f64>> = (0..m)
        .map(|j| (0..n).map(|i| work.get(i, j)).collect())
        .collect();
    let mut v: Vec<Vec<f64>> = (0..m)
        .map(|j| {
            let mut e = vec![0.0; m];
            e[j] = 1.0;
            e
        })
        .collect();

    let eps = 1e-15;
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..m {
            for q in (p + 1)..m {
                let alpha: f64 = cols[p].iter().map(|x| x * x).sum();
                let beta: f64 = cols[q].iter().map(|x| x * x).sum();
                let gamma: f64 = cols[p].iter().zip(&cols[q]).map(|(x, y)| x * y).sum();
                if gamma.abs() <= eps * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..n {
                    let xp = cols[p][i];
                    let xq = cols[q][i];
                    cols[p][i] = c * xp - s * xq;
                    cols[q][i] = s * xp + c * xq;
                }
                for i in 0..m {
                    let vp = v[p][i];
                    let vq = v[q][i];
                    v[p][i] = c * vp - s * vq;
                    v[q][i] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut triples: Vec<(f64, Vec<f64>)> = cols
        .into_iter()
        .zip(v)
        .map(|(col, vec)| {
            let sigma = col.iter().map(|x| x * x).sum::<f64>().sqrt();
            (sigma, vec)
        })
        .collect();
    triples.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let sigmas: Vec<f64> = triples.iter().map(|t| t.0).collect();
    let mut right: Vec<Vec<f64>> = triples.into_iter().map(|t| t.1).collect();

    if transposed {
        // we decomposed A^T; A's right vectors are the left vectors of A^T,
        // i.e. work * v_j / sigma_j
        let mut mapped = Vec::with_capacity(right.len());
        for (j, vec) in right.iter().enumerate() {
            let sigma = sigmas[j];
            let mut u = vec![0.0; work.n_rows()];
            if sigma > 1e-300 {
                for (i, item) in u.iter_mut().enumerate() {
                    let row = work.row(i);
                    let mut acc = 0.0;
                    for (x, y) in row.iter().zip(vec.iter()) {
                        acc += x * y;
                    }
                    *item = acc / sigma;
                }
            }
            mapped.push(u);
        }
        right = mapped;
    }
    (sigmas, right)
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb).max(1e-300)
}

pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty());
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
