//! Low-rank completion of one observed matrix: alternating least squares on
//! an X Y^T factorization with ridge damping, plus spectrum-gap rank
//! estimation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{CoreError, Result};
use crate::matrix::DenseMatrix;
use crate::observed::{fill_zeros, ObservedMatrix};
use crate::svd::truncated_svd_lenient;

#[derive(Debug, Clone)]
pub enum RankChoice {
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone)]
pub struct CompletionConfig {
    pub rank: RankChoice,
    /// Cap for automatic rank estimation.
    pub max_rank: usize,
    /// Stop when the relative change of the observed-set residual drops below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CompletionConfig {
    fn default() -> Self {
        Self {
            rank: RankChoice::Auto,
            max_rank: 50,
            tol: 1e-5,
            max_iter: 500,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompletionOutput {
    pub estimate: DenseMatrix,
    pub used_rank: usize,
    pub iterations: usize,
    /// ||P_Omega(est - M)||_F / ||M_Omega||_F at the last sweep.
    pub final_residual: f64,
    /// Residual after each sweep; non-increasing.
    pub residual_history: Vec<f64>,
    /// Rows/columns with no observed entries; their estimates carry no data.
    pub unobserved_rows: Vec<usize>,
    pub unobserved_cols: Vec<usize>,
}

/// Rank of the largest relative gap sigma_i / sigma_{i+1} in the spectrum of
/// the zero-filled matrix rescaled by the observation fraction. Returns a
/// value in [1, max_rank].
pub fn estimate_rank(m: &ObservedMatrix, max_rank: usize) -> Result<usize> {
    if m.n_observed() == 0 {
        return Err(CoreError::EmptyObservation);
    }
    let density = m.observed_fraction();
    let mut a = fill_zeros(m);
    a.scale(1.0 / density);
    let k = (max_rank + 1).min(m.n_rows().min(m.n_cols()));
    if k <= 1 {
        return Ok(1);
    }
    // gap detection only needs the Ritz values to settle, not full-precision
    // singular vectors; a short budget keeps this cheap on large inputs
    let basis = truncated_svd_lenient(&a, k, 1e-4, 30)?;
    let s = &basis.singular_values;
    let mut best_i = 1usize;
    let mut best_ratio = 0.0f64;
    for i in 1..k {
        let ratio = if s[i] > 1e-300 {
            s[i - 1] / s[i]
        } else if s[i - 1] > 1e-300 {
            f64::INFINITY
        } else {
            0.0
        };
        if ratio > best_ratio {
            best_ratio = ratio;
            best_i = i;
        }
    }
    Ok(best_i.min(max_rank).max(1))
}

/// Alternating least squares. Each sweep solves every row factor given the
/// column factors and then the reverse, fitting observed entries only, with
/// ridge damping 1e-6 times the mean squared observed value.
pub fn complete(m: &ObservedMatrix, cfg: &CompletionConfig, seed: u64) -> Result<CompletionOutput> {
    if m.n_observed() == 0 {
        return Err(CoreError::EmptyObservation);
    }
    let (n, mm) = (m.n_rows(), m.n_cols());
    let min_dim = n.min(mm);
    let rank = match cfg.rank {
        RankChoice::Fixed(r) => r,
        RankChoice::Auto => estimate_rank(m, cfg.max_rank.min(min_dim.saturating_sub(1).max(1)))?,
    };
    if rank > min_dim {
        return Err(CoreError::RankTooLarge {
            rank,
            limit: min_dim,
        });
    }
    let rank = rank.max(1);

    // per-row and per-column observation lists
    let mut row_obs: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut col_obs: Vec<Vec<(usize, f64)>> = vec![Vec::new(); mm];
    let mut mean_sq = 0.0;
    for &(i, j, v) in m.entries() {
        row_obs[i].push((j, v));
        col_obs[j].push((i, v));
        mean_sq += v * v;
    }
    mean_sq /= m.n_observed() as f64;
    let lambda = 1e-6 * mean_sq.max(1e-300);
    let norm_obs = (mean_sq * m.n_observed() as f64).sqrt();

    let unobserved_rows: Vec<usize> = (0..n).filter(|&i| row_obs[i].is_empty()).collect();
    let unobserved_cols: Vec<usize> = (0..mm).filter(|&j| col_obs[j].is_empty()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y = DenseMatrix::zeros(mm, rank);
    for j in 0..mm {
        for v in y.row_mut(j) {
            *v = StandardNormal.sample(&mut rng);
        }
    }
    let mut x = DenseMatrix::zeros(n, rank);

    let mut gram = vec![0.0; rank * rank];
    let mut rhs = vec![0.0; rank];
    let mut history: Vec<f64> = Vec::new();
    let mut final_residual = f64::INFINITY;
    let mut iterations = 0;
    let mut snapshot: Option<(DenseMatrix, DenseMatrix)> = None;

    for sweep in 0..cfg.max_iter {
        iterations = sweep + 1;
        solve_side(&mut x, &y, &row_obs, lambda, rank, &mut gram, &mut rhs);
        solve_side(&mut y, &x, &col_obs, lambda, rank, &mut gram, &mut rhs);

        let mut sq = 0.0;
        for (i, obs) in row_obs.iter().enumerate() {
            let xr = x.row(i);
            for &(j, v) in obs {
                let yr = y.row(j);
                let mut pred = 0.0;
                for (a, b) in xr.iter().zip(yr.iter()) {
                    pred += a * b;
                }
                let d = pred - v;
                sq += d * d;
            }
        }
        let res = sq.sqrt() / norm_obs.max(1e-300);
        let prev = history.last().copied();
        if let Some(p) = prev {
            if res > p {
                // at the plateau the ridge term trades against the raw
                // residual by ~lambda-sized amounts; keep the best iterate so
                // the recorded residual never rises
                if let Some((xs, ys)) = snapshot.take() {
                    x = xs;
                    y = ys;
                }
                final_residual = p;
                break;
            }
        }
        history.push(res);
        final_residual = res;
        if let Some(p) = prev {
            if (p - res).abs() < cfg.tol * p.max(1e-300) {
                break;
            }
        }
        snapshot = Some((x.clone(), y.clone()));
    }

    // dense estimate X Y^T
    let mut estimate = DenseMatrix::zeros(n, mm);
    for i in 0..n {
        let xr = x.row(i);
        let dst = estimate.row_mut(i);
        for (j, d) in dst.iter_mut().enumerate() {
            let yr = y.row(j);
            let mut acc = 0.0;
            for (a, b) in xr.iter().zip(yr.iter()) {
                acc += a * b;
            }
            *d = acc;
        }
    }
    Ok(CompletionOutput {
        estimate,
        used_rank: rank,
        iterations,
        final_residual,
        residual_history: history,
        unobserved_rows,
        unobserved_cols,
    })
}

/// Solve (F_o^T F_o + lambda I) target_i = F_o^T b_i for each row i of
/// `target` over its observed entries; rows without observations keep their
/// current factors.
fn solve_side(
    target: &mut DenseMatrix,
    other: &DenseMatrix,
    obs: &[Vec<(usize, f64)>],
    lambda: f64,
    rank: usize,
    gram: &mut [f64],
    rhs: &mut [f64],
) {
    for (i, entries) in obs.iter().enumerate() {
        if entries.is_empty() {
            continue;
        }
        gram.fill(0.0);
        rhs.fill(0.0);
        for &(j, v) in entries {
            let f = other.row(j);
            for p in 0..rank {
                let fp = f[p];
                if fp == 0.0 {
                    continue;
                }
                let grow = &mut gram[p * rank..(p + 1) * rank];
                for (g, &fq) in grow[p..].iter_mut().zip(f[p..].iter()) {
                    *g += fp * fq;
                }
                rhs[p] += fp * v;
            }
        }
        // mirror the upper triangle and damp the diagonal
        for p in 0..rank {
            gram[p * rank + p] += lambda;
            for q in (p + 1)..rank {
                gram[q * rank + p] = gram[p * rank + q];
            }
        }
        cholesky_solve_in_place(gram, rhs, rank);
        target.row_mut(i).copy_from_slice(&rhs[..rank]);
    }
}

/// In-place Cholesky solve of a symmetric positive-definite system.
fn cholesky_solve_in_place(a: &mut [f64], b: &mut [f64], n: usize) {
    // factor: a = L L^T stored in the lower triangle
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= a[i * n + k] * a[j * n + k];
            }
            if i == j {
                a[i * n + j] = sum.max(1e-300).sqrt();
            } else {
                a[i * n + j] = sum / a[j * n + j];
            }
        }
    }
    // forward then back substitution
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= a[i * n + k] * b[k];
        }
        b[i] = sum / a[i * n + i];
    }
    for i in (0..n).rev() {
        let mut sum = b[i];
        for k in (i + 1)..n {
            sum -= a[k * n + i] * b[k];
        }
        b[i] = sum / a[i * n + i];
    }
}
