//! SVP: discover low-rank submatrices by projecting normalized rows and
//! columns onto leading singular vectors and 2-partitioning the projections.
//! Includes the separation diagnostics pi, gamma, delta and the
//! multi-submatrix peeling loop.

use crate::error::{CoreError, Result};
use crate::incsvd::{estimate_singular_vectors, IncSvdConfig};
use crate::matrix::DenseMatrix;
use crate::observed::{complement_of, fill_zeros, restrict, ObservedMatrix, SubmatrixDescriptor};
use crate::svd::{spectral_norm, truncated_svd_lenient, SingularBasis};

/// Per-row projection magnitudes; each value lies in [0, 1].
#[derive(Debug, Clone)]
pub struct ProjectionVector {
    pub values: Vec<f64>,
}

/// Measured separation between a candidate submatrix and its complement.
///
/// `delta_rows` is the projection gap of the paper's analysis; `delta_cols`
/// mirrors it on the transpose.
#[derive(Debug, Clone, Copy)]
pub struct SeparationReport {
    /// ||S||^2 / ||T||^2 with T the complement block.
    pub pi: f64,
    /// max_j |<s1, t_j>| over the complement's leading right singular vectors,
    /// computed on the full-width row submatrices.
    pub gamma: f64,
    pub delta_rows: f64,
    pub delta_cols: f64,
}

/// Which singular-vector estimator feeds the projections.
#[derive(Debug, Clone)]
pub enum Estimator {
    /// Exact truncated SVD; requires a fully observed matrix.
    Exact,
    /// Funk-style SGD on observed entries.
    Incremental(IncSvdConfig),
    /// Exact truncated SVD of the zero-filled matrix.
    ZeroFill,
}

#[derive(Debug, Clone)]
pub struct SvpConfig {
    /// How many leading singular vectors the projections aggregate.
    pub n_vectors: usize,
    /// Accept a submatrix only when both row and column gaps exceed this.
    pub delta_threshold: f64,
    /// Stop after this many submatrices; `None` leaves the loop bounded only
    /// by the delta threshold.
    pub max_submatrices: Option<usize>,
    pub estimator: Estimator,
    /// Tolerance/budget for the internal SVD; directions saturate long before
    /// full singular-value accuracy, so these run looser than the defaults.
    pub svd_tol: f64,
    pub svd_max_iter: usize,
    /// Seed for the incremental estimator.
    pub seed: u64,
}

impl Default for SvpConfig {
    fn default() -> Self {
        Self {
            n_vectors: 3,
            delta_threshold: 0.2,
            max_submatrices: None,
            estimator: Estimator::ZeroFill,
            svd_tol: 1e-6,
            svd_max_iter: 300,
            seed: 42,
        }
    }
}

impl SvpConfig {
    pub fn with_vectors(n_vectors: usize) -> Self {
        Self {
            n_vectors,
            ..Self::default()
        }
    }
}

/// p_i = || ( |<v_d, row_i / ||row_i|| >| )_d ||_2 / sqrt(k); zero rows map to 0.
pub fn project(a: &DenseMatrix, basis: &SingularBasis) -> Result<ProjectionVector> {
    for v in &basis.right_vectors {
        if v.len() != a.n_cols() {
            return Err(CoreError::DimensionMismatch {
                expected: a.n_cols(),
                got: v.len(),
            });
        }
    }
    Ok(project_rows(a, &basis.right_vectors))
}

fn project_rows(a: &DenseMatrix, vectors: &[Vec<f64>]) -> ProjectionVector {
    let k = vectors.len();
    let mut values = Vec::with_capacity(a.n_rows());
    for i in 0..a.n_rows() {
        let row = a.row(i);
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            values.push(0.0);
            continue;
        }
        let mut sq = 0.0;
        for v in vectors {
            let mut dot = 0.0;
            for (x, y) in row.iter().zip(v.iter()) {
                dot += x * y;
            }
            sq += (dot / norm) * (dot / norm);
        }
        values.push((sq / k as f64).sqrt().min(1.0));
    }
    ProjectionVector { values }
}

/// Column-side projections in one row-major pass, avoiding a transpose.
fn project_cols(a: &DenseMatrix, vectors: &[Vec<f64>]) -> ProjectionVector {
    let k = vectors.len();
    let m = a.n_cols();
    let mut norms_sq = vec![0.0; m];
    let mut dots = vec![0.0; k * m];
    for i in 0..a.n_rows() {
        let row = a.row(i);
        for (j, &x) in row.iter().enumerate() {
            norms_sq[j] += x * x;
        }
        for (d, v) in vectors.iter().enumerate() {
            let vi = v[i];
            if vi == 0.0 {
                continue;
            }
            let dst = &mut dots[d * m..(d + 1) * m];
            for (t, &x) in dst.iter_mut().zip(row.iter()) {
                *t += vi * x;
            }
        }
    }
    let mut values = Vec::with_capacity(m);
    for j in 0..m {
        let norm = norms_sq[j].sqrt();
        if norm == 0.0 {
            values.push(0.0);
            continue;
        }
        let mut sq = 0.0;
        for d in 0..k {
            let p = dots[d * m + j] / norm;
            sq += p * p;
        }
        values.push((sq / k as f64).sqrt().min(1.0));
    }
    ProjectionVector { values }
}

/// Exact 1-D 2-means: sort, scan every split point, take the minimum
/// within-cluster sum of squares. Returns (high, low) index sets, `high`
/// being the cluster with the larger mean. WCSS ties go to the split with
/// the smaller high cluster.
pub fn partition_projections(p: &ProjectionVector) -> Result<(Vec<usize>, Vec<usize>)> {
    let n = p.values.len();
    if n == 0 {
        return Err(CoreError::EmptyMatrix);
    }
    let (min, max) = p
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if max - min < 1e-12 {
        return Err(CoreError::DegeneratePartition);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| p.values[a].partial_cmp(&p.values[b]).unwrap().then(a.cmp(&b)));
    let mut prefix = vec![0.0; n + 1];
    let mut prefix2 = vec![0.0; n + 1];
    for (t, &i) in order.iter().enumerate() {
        prefix[t + 1] = prefix[t] + p.values[i];
        prefix2[t + 1] = prefix2[t] + p.values[i] * p.values[i];
    }
    let mut best_w = f64::INFINITY;
    let mut best_t = 1usize;
    for t in 1..n {
        let (sl, sl2) = (prefix[t], prefix2[t]);
        let (sh, sh2) = (prefix[n] - sl, prefix2[n] - sl2);
        let w = (sl2 - sl * sl / t as f64) + (sh2 - sh * sh / (n - t) as f64);
        // strictly better, or an exact tie resolved toward the smaller high cluster
        if w < best_w || (w == best_w && (n - t) < (n - best_t)) {
            best_w = w;
            best_t = t;
        }
    }
    let mut high: Vec<usize> = order[best_t..].to_vec();
    let mut low: Vec<usize> = order[..best_t].to_vec();
    high.sort_unstable();
    low.sort_unstable();
    Ok((high, low))
}

/// Mean absolute projection of the normalized S-rows minus that of the
/// normalized T-rows on the first basis vector.
pub fn delta_gap(
    m: &DenseMatrix,
    row_split: (&[usize], &[usize]),
    basis: &SingularBasis,
) -> Result<f64> {
    let (rs, rt) = row_split;
    if rs.is_empty() || rt.is_empty() {
        return Err(CoreError::EmptySplit);
    }
    let v1 = basis
        .right_vectors
        .first()
        .ok_or(CoreError::EmptyMatrix)?;
    if v1.len() != m.n_cols() {
        return Err(CoreError::DimensionMismatch {
            expected: m.n_cols(),
            got: v1.len(),
        });
    }
    let mean_abs = |rows: &[usize]| -> f64 {
        let mut acc = 0.0;
        for &i in rows {
            let row = m.row(i);
            let mut dot = 0.0;
            let mut norm_sq = 0.0;
            for (x, y) in row.iter().zip(v1.iter()) {
                dot += x * y;
                norm_sq += x * x;
            }
            if norm_sq > 0.0 {
                acc += dot.abs() / norm_sq.sqrt();
            }
        }
        acc / rows.len() as f64
    };
    Ok(mean_abs(rs) - mean_abs(rt))
}

fn estimate_basis(m: &ObservedMatrix, cfg: &SvpConfig) -> Result<SingularBasis> {
    let k = cfg.n_vectors.min(m.n_rows().min(m.n_cols()));
    match &cfg.estimator {
        Estimator::Exact => {
            if !m.is_fully_observed() {
                return Err(CoreError::NotFullyObserved {
                    observed: m.n_observed(),
                    total: m.n_rows() * m.n_cols(),
                });
            }
            truncated_svd_lenient(&fill_zeros(m), k, cfg.svd_tol, cfg.svd_max_iter)
        }
        Estimator::ZeroFill => {
            truncated_svd_lenient(&fill_zeros(m), k, cfg.svd_tol, cfg.svd_max_iter)
        }
        Estimator::Incremental(inc) => {
            let mut inc = inc.clone();
            inc.k = k;
            estimate_singular_vectors(m, &inc, cfg.seed)
        }
    }
}

/// One round of SVP on rows and (independently) on columns of the transpose.
///
/// Projections and gaps are evaluated on the zero-filled matrix, which
/// coincides with the exact computation when everything is observed.
pub fn svp_discover(
    m: &ObservedMatrix,
    cfg: &SvpConfig,
) -> Result<(SubmatrixDescriptor, SeparationReport)> {
    let (d, dr, dc, _) = svp_discover_inner(m, cfg)?;
    let dense = fill_zeros(m);
    let (pi, gamma) = pi_gamma(&dense, &d)?;
    Ok((
        d,
        SeparationReport {
            pi,
            gamma,
            delta_rows: dr,
            delta_cols: dc,
        },
    ))
}

fn svp_discover_inner(
    m: &ObservedMatrix,
    cfg: &SvpConfig,
) -> Result<(SubmatrixDescriptor, f64, f64, SingularBasis)> {
    if m.n_observed() == 0 {
        return Err(CoreError::EmptyObservation);
    }
    let basis = estimate_basis(m, cfg)?;
    let dense = fill_zeros(m);
    let k = basis.k;

    let p_rows = project_rows(&dense, &basis.right_vectors[..k]);
    let (row_high, row_low) = match partition_projections(&p_rows) {
        Err(CoreError::DegeneratePartition) => return Err(CoreError::NoSubmatrixFound),
        other => other?,
    };
    let p1_rows = project_rows(&dense, &basis.right_vectors[..1]);
    let delta_rows = mean_at(&p1_rows.values, &row_high) - mean_at(&p1_rows.values, &row_low);

    let p_cols = project_cols(&dense, &basis.left_vectors[..k]);
    let (col_high, col_low) = match partition_projections(&p_cols) {
        Err(CoreError::DegeneratePartition) => return Err(CoreError::NoSubmatrixFound),
        other => other?,
    };
    let p1_cols = project_cols(&dense, &basis.left_vectors[..1]);
    let delta_cols = mean_at(&p1_cols.values, &col_high) - mean_at(&p1_cols.values, &col_low);

    let d = SubmatrixDescriptor::new(row_high, col_high)?;
    Ok((d, delta_rows, delta_cols, basis))
}

fn mean_at(values: &[f64], idx: &[usize]) -> f64 {
    idx.iter().map(|&i| values[i]).sum::<f64>() / idx.len().max(1) as f64
}

/// pi on the blocks S = M(R,C), T = M(R̄,C̄); gamma on the full-width row
/// submatrices M(R,:), M(R̄,:) so the singular vectors live in one space.
fn pi_gamma(m: &DenseMatrix, d: &SubmatrixDescriptor) -> Result<(f64, f64)> {
    let (rbar, cbar) = d.complement(m.n_rows(), m.n_cols());
    if rbar.is_empty() || cbar.is_empty() {
        return Err(CoreError::EmptyComplement);
    }
    let s_block = m.submatrix(d.rows(), d.cols());
    let t_block = m.submatrix(&rbar, &cbar);
    let s_norm = spectral_norm(&s_block);
    let t_norm = spectral_norm(&t_block);
    let pi = if t_norm > 0.0 {
        (s_norm / t_norm).powi(2)
    } else {
        f64::INFINITY
    };

    let all_cols: Vec<usize> = (0..m.n_cols()).collect();
    let s_rows = m.submatrix(d.rows(), &all_cols);
    let t_rows = m.submatrix(&rbar, &all_cols);
    let s1 = truncated_svd_lenient(&s_rows, 1, 1e-6, 500)?;
    let q_cap = 10usize.min(t_rows.n_rows().min(t_rows.n_cols()));
    let t_basis = truncated_svd_lenient(&t_rows, q_cap, 1e-6, 500)?;
    // examine only vectors above the numerical-rank cutoff
    let sigma1 = t_basis.singular_values.first().copied().unwrap_or(0.0);
    let mut gamma: f64 = 0.0;
    for (j, tvec) in t_basis.right_vectors.iter().enumerate() {
        if t_basis.singular_values[j] <= 1e-8 * sigma1 {
            break;
        }
        let dot: f64 = s1.right_vectors[0]
            .iter()
            .zip(tvec.iter())
            .map(|(x, y)| x * y)
            .sum();
        gamma = gamma.max(dot.abs());
    }
    Ok((pi, gamma.min(1.0)))
}

/// Measured separation parameters of a descriptor inside a dense matrix.
pub fn separation_params(m: &DenseMatrix, d: &SubmatrixDescriptor) -> Result<SeparationReport> {
    d.validate_for(m.n_rows(), m.n_cols())?;
    let (rbar, cbar) = d.complement(m.n_rows(), m.n_cols());
    if rbar.is_empty() || cbar.is_empty() {
        return Err(CoreError::EmptyComplement);
    }
    let (pi, gamma) = pi_gamma(m, d)?;
    let basis = truncated_svd_lenient(m, 1, 1e-6, 500)?;
    let delta_rows = delta_gap(m, (d.rows(), &rbar), &basis)?;
    let mt = m.transpose();
    let delta_cols = delta_gap(&mt, (d.cols(), &cbar), &basis.transposed())?;
    Ok(SeparationReport {
        pi,
        gamma,
        delta_rows,
        delta_cols,
    })
}

/// Peel submatrices until the projection gap falls under the threshold.
///
/// Each accepted descriptor is removed (rows and columns) and the loop
/// recurses on the complement; local indices are translated back to the host
/// coordinates. The returned descriptors are pairwise disjoint.
pub fn discover_all(m: &ObservedMatrix, cfg: &SvpConfig) -> Result<Vec<SubmatrixDescriptor>> {
    let mut found = Vec::new();
    let mut current = m.clone();
    let mut row_map: Vec<usize> = (0..m.n_rows()).collect();
    let mut col_map: Vec<usize> = (0..m.n_cols()).collect();
    loop {
        if let Some(maxn) = cfg.max_submatrices {
            if found.len() >= maxn {
                break;
            }
        }
        if current.n_rows() < 2 || current.n_cols() < 2 || current.n_observed() == 0 {
            break;
        }
        let (d, delta_rows, delta_cols, _) = match svp_discover_inner(&current, cfg) {
            Ok(r) => r,
            Err(CoreError::NoSubmatrixFound) | Err(CoreError::DegeneratePartition) => break,
            Err(e) => return Err(e),
        };
        if delta_rows <= cfg.delta_threshold || delta_cols <= cfg.delta_threshold {
            break;
        }
        let global = SubmatrixDescriptor::new(
            d.rows().iter().map(|&i| row_map[i]).collect(),
            d.cols().iter().map(|&j| col_map[j]).collect(),
        )?;
        found.push(global);
        let rlo = complement_of(d.rows(), current.n_rows());
        let clo = complement_of(d.cols(), current.n_cols());
        if rlo.is_empty() || clo.is_empty() {
            break;
        }
        let keep = SubmatrixDescriptor::new(rlo.clone(), clo.clone())?;
        current = restrict(&current, &keep)?;
        row_map = rlo.iter().map(|&i| row_map[i]).collect();
        col_map = clo.iter().map(|&j| col_map[j]).collect();
    }
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observed::ObservedMatrix;

    fn basis_from_vectors(right: Vec<Vec<f64>>, left: Vec<Vec<f64>>) -> SingularBasis {
        SingularBasis {
            k: right.len(),
            singular_values: vec![1.0; right.len()],
            left_vectors: left,
            right_vectors: right,
        }
    }

    #[test]
    fn project_parallel_and_orthogonal_rows() {
        // rows parallel to v1 -> p = 1; row orthogonal -> p = 0
        let a = DenseMatrix::new(3, 2, vec![2.0, 0.0, -5.0, 0.0, 0.0, 3.0]).unwrap();
        let basis = basis_from_vectors(vec![vec![1.0, 0.0]], vec![vec![1.0, 0.0, 0.0]]);
        let p = project(&a, &basis).unwrap();
        assert!((p.values[0] - 1.0).abs() < 1e-12);
        assert!((p.values[1] - 1.0).abs() < 1e-12);
        assert!(p.values[2].abs() < 1e-12);
    }

    #[test]
    fn project_zero_row_is_zero() {
        let a = DenseMatrix::new(2, 2, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        let basis = basis_from_vectors(vec![vec![1.0, 0.0]], vec![vec![1.0, 0.0]]);
        let p = project(&a, &basis).unwrap();
        assert_eq!(p.values[0], 0.0);
    }

    #[test]
    fn two_block_rank1_projection_dichotomy() {
        // S-rows parallel to x on rows 0-4, T-rows parallel to y on rows 5-9, x ⟂ y
        let mut rows = Vec::new();
        for i in 0..5 {
            rows.push(vec![(i + 1) as f64, 0.0, 0.0]);
        }
        for i in 0..5 {
            rows.push(vec![0.0, -((i + 1) as f64), 0.0]);
        }
        let a = DenseMatrix::from_rows(&rows).unwrap();
        let v1 = vec![0.8, 0.6, 0.0];
        let basis = basis_from_vectors(vec![v1.clone()], vec![vec![0.0; 10]]);
        let p = project(&a, &basis).unwrap();
        for i in 0..5 {
            assert!((p.values[i] - 0.8).abs() < 1e-12);
        }
        for i in 5..10 {
            assert!((p.values[i] - 0.6).abs() < 1e-12);
        }
    }

    #[test]
    fn partition_trivial_cases() {
        let p = ProjectionVector {
            values: vec![0.9, 0.9, 0.1, 0.1],
        };
        let (high, low) = partition_projections(&p).unwrap();
        assert_eq!(high, vec![0, 1]);
        assert_eq!(low, vec![2, 3]);

        let p = ProjectionVector {
            values: vec![0.5, 0.5, 0.5],
        };
        assert!(matches!(
            partition_projections(&p),
            Err(CoreError::DegeneratePartition)
        ));
    }

    #[test]
    fn partition_matches_exhaustive_scan() {
        let values = vec![0.95, 0.9, 0.88, 0.3, 0.25, 0.2, 0.15];
        let p = ProjectionVector {
            values: values.clone(),
        };
        let (high, _) = partition_projections(&p).unwrap();
        assert_eq!(high, vec![0, 1, 2]);

        // brute force over every sorted split agrees
        let mut sorted = values.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let wcss = |xs: &[f64]| -> f64 {
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            xs.iter().map(|x| (x - mean) * (x - mean)).sum()
        };
        let mut best = f64::INFINITY;
        let mut best_t = 0;
        for t in 1..sorted.len() {
            let w = wcss(&sorted[..t]) + wcss(&sorted[t..]);
            if w < best {
                best = w;
                best_t = t;
            }
        }
        assert_eq!(sorted.len() - best_t, high.len());
    }

    #[test]
    fn delta_gap_extremes() {
        // S-rows parallel to v1, T-rows orthogonal -> delta = 1
        let a = DenseMatrix::new(4, 2, vec![3.0, 0.0, 1.0, 0.0, 0.0, 2.0, 0.0, -7.0]).unwrap();
        let basis = basis_from_vectors(vec![vec![1.0, 0.0]], vec![vec![0.0; 4]]);
        let d = delta_gap(&a, (&[0, 1], &[2, 3]), &basis).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
        // identical distributions -> delta ~ 0
        let b = DenseMatrix::new(4, 2, vec![1.0, 1.0, 2.0, 2.0, 1.0, 1.0, 2.0, 2.0]).unwrap();
        let basis2 = basis_from_vectors(
            vec![vec![std::f64::consts::FRAC_1_SQRT_2; 2]],
            vec![vec![0.0; 4]],
        );
        let d2 = delta_gap(&b, (&[0, 1], &[2, 3]), &basis2).unwrap();
        assert!(d2.abs() < 1e-12);
        assert!(matches!(
            delta_gap(&b, (&[], &[0]), &basis2),
            Err(CoreError::EmptySplit)
        ));
    }

    #[test]
    fn exact_estimator_requires_full_observation() {
        let m = crate::svd::low_rank_gaussian(10, 10, 2, 1).unwrap();
        let mo = crate::observed::mask_uniform(&m, 0.5, 2);
        let cfg = SvpConfig {
            estimator: Estimator::Exact,
            ..SvpConfig::with_vectors(1)
        };
        assert!(matches!(
            svp_discover(&mo, &cfg),
            Err(CoreError::NotFullyObserved { .. })
        ));
    }

    #[test]
    fn planted_two_block_toy_recovered_exactly() {
        // rank-1 blocks on disjoint row/col supports with different strength
        let mut m = DenseMatrix::zeros(10, 8);
        for i in 0..4 {
            for j in 0..3 {
                m.set(i, j, 6.0 * ((i + 1) as f64) * ((j + 1) as f64));
            }
        }
        for i in 4..10 {
            for j in 3..8 {
                m.set(i, j, 0.5 * ((i - 3) as f64) * ((j - 2) as f64));
            }
        }
        let mo = ObservedMatrix::from_dense(&m);
        let cfg = SvpConfig {
            estimator: Estimator::Exact,
            ..SvpConfig::with_vectors(1)
        };
        let (d, report) = svp_discover(&mo, &cfg).unwrap();
        assert_eq!(d.rows(), &[0, 1, 2, 3]);
        assert_eq!(d.cols(), &[0, 1, 2]);
        assert!(report.delta_rows > 0.2);
        assert!(report.pi > 1.0);
    }

    #[test]
    fn discover_all_respects_max_submatrices() {
        let m = crate::svd::low_rank_gaussian(30, 30, 2, 3).unwrap();
        let mo = ObservedMatrix::from_dense(&m);
        let cfg = SvpConfig {
            max_submatrices: Some(0),
            ..Default::default()
        };
        let out = discover_all(&mo, &cfg).unwrap();
        assert!(out.is_empty());
    }
}
