//! Singular-vector estimation from observed entries only, by stochastic
//! gradient descent on a rank-1 factor at a time with residual deflation
//! (the incremental scheme Funk used for the Netflix problem).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{CoreError, Result};
use crate::matrix::DenseMatrix;
use crate::observed::ObservedMatrix;
use crate::svd::SingularBasis;

#[derive(Debug, Clone)]
pub struct IncSvdConfig {
    /// Number of singular vectors to estimate.
    pub k: usize,
    pub learning_rate: f64,
    pub regularization: f64,
    /// Epoch budget per feature.
    pub max_epochs: usize,
    /// Stop a feature when the relative change in training RMSE drops below this.
    pub convergence_tol: f64,
}

impl Default for IncSvdConfig {
    fn default() -> Self {
        Self {
            k: 1,
            learning_rate: 0.01,
            regularization: 0.02,
            max_epochs: 200,
            convergence_tol: 1e-4,
        }
    }
}

impl IncSvdConfig {
    pub fn with_k(k: usize) -> Self {
        Self {
            k,
            ..Self::default()
        }
    }
}

/// Per-run training record, one RMSE series per feature.
#[derive(Debug, Clone)]
pub struct IncSvdDiagnostics {
    pub rmse_history: Vec<Vec<f64>>,
    pub converged: Vec<bool>,
}

/// Estimate the top-k singular triples of a partially observed matrix.
///
/// Features are trained one at a time against the residual of the previous
/// ones; the stacked factors are then orthonormalized and rotated into proper
/// singular form. Deterministic for a fixed seed. Features that exhaust their
/// epoch budget are reported through the diagnostics and a warning, not an
/// error.
pub fn estimate_singular_vectors(
    m: &ObservedMatrix,
    cfg: &IncSvdConfig,
    seed: u64,
) -> Result<SingularBasis> {
    estimate_with_diagnostics(m, cfg, seed).map(|(b, _)| b)
}

pub fn estimate_with_diagnostics(
    m: &ObservedMatrix,
    cfg: &IncSvdConfig,
    seed: u64,
) -> Result<(SingularBasis, IncSvdDiagnostics)> {
    assert!(cfg.k >= 1, "k must be at least 1");
    assert!(cfg.learning_rate > 0.0, "learning rate must be positive");
    assert!(cfg.regularization >= 0.0, "regularization must be non-negative");
    if m.n_observed() == 0 {
        return Err(CoreError::EmptyObservation);
    }
    let (n, mm) = (m.n_rows(), m.n_cols());
    if cfg.k > n.min(mm) {
        return Err(CoreError::InvalidRank {
            rank: cfg.k,
            n_rows: n,
            n_cols: mm,
        });
    }
    if m.n_observed() < cfg.k * (n + mm) {
        log::warn!(
            "incremental SVD: only {} observed entries for k={} on {}x{}; estimates may be poor",
            m.n_observed(),
            cfg.k,
            n,
            mm
        );
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..m.n_observed()).collect();
    order.shuffle(&mut rng);
    let entries = m.entries();
    let mut resid: Vec<f64> = order.iter().map(|&t| entries[t].2).collect();
    let idx: Vec<(usize, usize)> = order.iter().map(|&t| (entries[t].0, entries[t].1)).collect();

    // SGD step sizes assume unit-scale data; train on values normalized by
    // their RMS and restore the scale through the left factors afterwards.
    let rms = (resid.iter().map(|v| v * v).sum::<f64>() / resid.len() as f64)
        .sqrt()
        .max(1e-300);
    for v in &mut resid {
        *v /= rms;
    }

    let lr = cfg.learning_rate;
    let reg = cfg.regularization;
    let mut p_factors: Vec<Vec<f64>> = Vec::with_capacity(cfg.k);
    let mut q_factors: Vec<Vec<f64>> = Vec::with_capacity(cfg.k);
    let mut histories = Vec::with_capacity(cfg.k);
    let mut converged_flags = Vec::with_capacity(cfg.k);

    for feature in 0..cfg.k {
        let mut p: Vec<f64> = (0..n).map(|_| 0.1 + 1e-3 * sample_normal(&mut rng)).collect();
        let mut q: Vec<f64> = (0..mm).map(|_| 0.1 + 1e-3 * sample_normal(&mut rng)).collect();
        let mut prev_rmse: Option<f64> = None;
        let mut history = Vec::new();
        let mut converged = false;
        let mut snapshot: Option<(Vec<f64>, Vec<f64>)> = None;
        let mut cur_lr = lr;
        for _epoch in 0..cfg.max_epochs {
            for (t, &(i, j)) in idx.iter().enumerate() {
                let e = resid[t] - p[i] * q[j];
                let pi = p[i];
                p[i] += cur_lr * (e * q[j] - reg * pi);
                q[j] += cur_lr * (e * pi - reg * q[j]);
            }
            let mut sq = 0.0;
            for (t, &(i, j)) in idx.iter().enumerate() {
                let e = resid[t] - p[i] * q[j];
                sq += e * e;
            }
            let rmse = (sq / resid.len() as f64).sqrt();
            if let Some(prev) = prev_rmse {
                if rmse > prev * (1.0 + 1e-9) {
                    // the epoch overshot the basin floor: rewind it and retry
                    // with a smaller step, so the recorded RMSE series stays
                    // non-increasing; give up once the step is tiny
                    if let Some((ps, qs)) = snapshot.clone() {
                        p = ps;
                        q = qs;
                    }
                    cur_lr *= 0.5;
                    if cur_lr < lr / 64.0 {
                        converged = true;
                        break;
                    }
                    continue;
                }
                history.push(rmse);
                if (prev - rmse).abs() < cfg.convergence_tol * prev.max(1e-300) {
                    converged = true;
                    break;
                }
            } else {
                history.push(rmse);
            }
            prev_rmse = Some(rmse);
            snapshot = Some((p.clone(), q.clone()));
        }
        if !converged {
            log::warn!(
                "incremental SVD: feature {} hit the epoch budget ({}) without stabilizing",
                feature,
                cfg.max_epochs
            );
        }
        for (t, &(i, j)) in idx.iter().enumerate() {
            resid[t] -= p[i] * q[j];
        }
        histories.push(history);
        converged_flags.push(converged);
        p_factors.push(p);
        q_factors.push(q);
    }

    for p in &mut p_factors {
        for x in p.iter_mut() {
            *x *= rms;
        }
    }
    let basis = factors_to_basis(n, mm, &p_factors, &q_factors);
    Ok((
        basis,
        IncSvdDiagnostics {
            rmse_history: histories,
            converged: converged_flags,
        },
    ))
}

fn sample_normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Rotate stacked rank-1 factors P Q^T into singular form: QR both sides,
/// then an exact small-matrix SVD of R_p R_q^T.
fn factors_to_basis(
    n: usize,
    m: usize,
    p_factors: &[Vec<f64>],
    q_factors: &[Vec<f64>],
) -> SingularBasis {
    let k = p_factors.len();
    let (qp, rp) = thin_qr(n, k, p_factors);
    let (qq, rq) = thin_qr(m, k, q_factors);
    // B = R_p R_q^T (k x k)
    let mut b = DenseMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            let mut acc = 0.0;
            for t in 0..k {
                acc += rp.get(i, t) * rq.get(j, t);
            }
            b.set(i, j, acc);
        }
    }
    let (sig, w, z) = small_svd(&b);
    let mut left = Vec::with_capacity(k);
    let mut right = Vec::with_capacity(k);
    for d in 0..k {
        let mut u = vec![0.0; n];
        for t in 0..k {
            let wtd = w.get(t, d);
            if wtd == 0.0 {
                continue;
            }
            for (ui, &qpi) in u.iter_mut().zip(qp[t].iter()) {
                *ui += wtd * qpi;
            }
        }
        let mut v = vec![0.0; m];
        for t in 0..k {
            let ztd = z.get(t, d);
            if ztd == 0.0 {
                continue;
            }
            for (vi, &qqi) in v.iter_mut().zip(qq[t].iter()) {
                *vi += ztd * qqi;
            }
        }
        // orient by the right vector's largest-magnitude entry
        let mut best = 0usize;
        for (j, x) in v.iter().enumerate() {
            if x.abs() > v[best].abs() {
                best = j;
            }
        }
        if v[best] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
            u.iter_mut().for_each(|x| *x = -*x);
        }
        left.push(u);
        right.push(v);
    }
    SingularBasis {
        k,
        left_vectors: left,
        singular_values: sig,
        right_vectors: right,
    }
}

/// Thin QR via modified Gram-Schmidt (two passes). Returns Q columns and R.
fn thin_qr(n: usize, k: usize, cols: &[Vec<f64>]) -> (Vec<Vec<f64>>, DenseMatrix) {
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut r = DenseMatrix::zeros(k, k);
    for (j, col) in cols.iter().enumerate() {
        let mut v = col.clone();
        for _ in 0..2 {
            for (p, qp) in q.iter().enumerate() {
                let dot: f64 = v.iter().zip(qp.iter()).map(|(a, b)| a * b).sum();
                r.set(p, j, r.get(p, j) + dot);
                for (vi, &qi) in v.iter_mut().zip(qp.iter()) {
                    *vi -= dot * qi;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        r.set(j, j, norm);
        if norm > 1e-300 {
            v.iter_mut().for_each(|x| *x /= norm);
        } else {
            // degenerate direction; keep a zero column so sigma comes out 0
            v = vec![0.0; n];
        }
        q.push(v);
    }
    (q, r)
}

/// SVD of a small k x k matrix through the symmetric eigenproblem of B^T B.
fn small_svd(b: &DenseMatrix) -> (Vec<f64>, DenseMatrix, DenseMatrix) {
    let k = b.n_rows();
    let mut btb = DenseMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            let mut acc = 0.0;
            for t in 0..k {
                acc += b.get(t, i) * b.get(t, j);
            }
            btb.set(i, j, acc);
        }
    }
    let (vals, z) = crate::svd::jacobi_eigh(&btb);
    let sig: Vec<f64> = vals.iter().map(|&l| l.max(0.0).sqrt()).collect();
    // W(:, d) = B z_d / sigma_d
    let mut w = DenseMatrix::zeros(k, k);
    for d in 0..k {
        if sig[d] <= 1e-300 {
            continue;
        }
        for i in 0..k {
            let mut acc = 0.0;
            for t in 0..k {
                acc += b.get(i, t) * z.get(t, d);
            }
            w.set(i, d, acc / sig[d]);
        }
    }
    (sig, w, z)
}
