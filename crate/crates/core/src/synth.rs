//! Seeded synthetic benchmark instances: a low-rank Gaussian background with
//! planted lower-rank submatrices at a controlled spectral-energy ratio pi.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{CoreError, Result};
use crate::matrix::DenseMatrix;
use crate::observed::SubmatrixDescriptor;
use crate::svd::{jacobi_eigh, low_rank_gaussian, spectral_norm};

/// How a planted block is drawn before scaling.
///
/// `TruncatedGaussian` keeps the top-l singular directions of an i.i.d.
/// Gaussian block, so the block's leading singular values are nearly equal
/// and every block row carries signal; `GaussianProduct` multiplies two
/// Gaussian factors, which spreads the block spectrum and leaves a fraction
/// of rows with almost no energy on the leading direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockModel {
    TruncatedGaussian,
    GaussianProduct,
}

/// Reference norm for the pi scaling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleReference {
    /// ||M(complement rows, complement cols)|| — the complement block.
    Complement,
    /// Spectral norm of the whole matrix with this plant's block zeroed.
    Rest,
}

#[derive(Debug, Clone)]
pub enum Placement {
    Random,
    At { rows: Vec<usize>, cols: Vec<usize> },
}

#[derive(Debug, Clone)]
pub struct PlantSpec {
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    pub pi_target: f64,
    pub placement: Placement,
    pub block: BlockModel,
    pub scale_ref: ScaleReference,
}

impl PlantSpec {
    pub fn new(rows: usize, cols: usize, rank: usize, pi_target: f64) -> Self {
        Self {
            rows,
            cols,
            rank,
            pi_target,
            placement: Placement::Random,
            block: BlockModel::TruncatedGaussian,
            scale_ref: ScaleReference::Complement,
        }
    }

    pub fn scaled_against(mut self, r: ScaleReference) -> Self {
        self.scale_ref = r;
        self
    }

    pub fn with_block(mut self, b: BlockModel) -> Self {
        self.block = b;
        self
    }
}

#[derive(Debug, Clone)]
pub struct SynthInstance {
    pub matrix: DenseMatrix,
    pub truth: Vec<SubmatrixDescriptor>,
    pub background_rank: usize,
    /// pi of each plant against its scaling reference, measured at scaling time.
    pub achieved_pi: Vec<f64>,
}

/// Background plus plants, overwritten in place and then scaled to their pi
/// targets in plant order. Deterministic per seed.
pub fn generate(
    n: usize,
    m: usize,
    background_rank: usize,
    plants: &[PlantSpec],
    seed: u64,
) -> Result<SynthInstance> {
    for p in plants {
        if p.pi_target <= 0.0 {
            return Err(CoreError::UnachievablePi(p.pi_target));
        }
        if p.rank > p.rows.min(p.cols) || p.rank == 0 {
            return Err(CoreError::InvalidRank {
                rank: p.rank,
                n_rows: p.rows,
                n_cols: p.cols,
            });
        }
    }
    let mut matrix = low_rank_gaussian(n, m, background_rank, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);

    let mut used_rows = vec![false; n];
    let mut used_cols = vec![false; m];
    let mut truth = Vec::with_capacity(plants.len());
    for p in plants {
        let (rows, cols) = match &p.placement {
            Placement::At { rows, cols } => {
                let d = SubmatrixDescriptor::new(rows.clone(), cols.clone())?;
                d.validate_for(n, m)?;
                if d.rows().len() != p.rows || d.cols().len() != p.cols {
                    return Err(CoreError::DimensionMismatch {
                        expected: p.rows,
                        got: d.rows().len(),
                    });
                }
                (d.rows().to_vec(), d.cols().to_vec())
            }
            Placement::Random => {
                let free_rows: Vec<usize> = (0..n).filter(|&i| !used_rows[i]).collect();
                let free_cols: Vec<usize> = (0..m).filter(|&j| !used_cols[j]).collect();
                if free_rows.len() < p.rows || free_cols.len() < p.cols {
                    return Err(CoreError::OverlapError);
                }
                let mut fr = free_rows;
                let (chosen_r, _) = fr.partial_shuffle(&mut rng, p.rows);
                let mut rows: Vec<usize> = chosen_r.to_vec();
                rows.sort_unstable();
                let mut fc = free_cols;
                let (chosen_c, _) = fc.partial_shuffle(&mut rng, p.cols);
                let mut cols: Vec<usize> = chosen_c.to_vec();
                cols.sort_unstable();
                (rows, cols)
            }
        };
        for &i in &rows {
            if used_rows[i] {
                return Err(CoreError::OverlapError);
            }
            used_rows[i] = true;
        }
        for &j in &cols {
            if used_cols[j] {
                return Err(CoreError::OverlapError);
            }
            used_cols[j] = true;
        }
        let block = match p.block {
            BlockModel::GaussianProduct => {
                gaussian_product_block(p.rows, p.cols, p.rank, &mut rng)
            }
            BlockModel::TruncatedGaussian => {
                truncated_gaussian_block(p.rows, p.cols, p.rank, &mut rng)
            }
        };
        for (li, &gi) in rows.iter().enumerate() {
            for (lj, &gj) in cols.iter().enumerate() {
                matrix.set(gi, gj, block.get(li, lj));
            }
        }
        truth.push(SubmatrixDescriptor::new(rows, cols)?);
    }

    // scale each plant to its pi target, in plant order
    let mut achieved_pi = Vec::with_capacity(plants.len());
    for (p, d) in plants.iter().zip(truth.iter()) {
        let block = matrix.submatrix(d.rows(), d.cols());
        let block_norm = spectral_norm(&block);
        let ref_norm = match p.scale_ref {
            ScaleReference::Complement => {
                let (rbar, cbar) = d.complement(n, m);
                if rbar.is_empty() || cbar.is_empty() {
                    return Err(CoreError::EmptyComplement);
                }
                spectral_norm(&matrix.submatrix(&rbar, &cbar))
            }
            ScaleReference::Rest => {
                let mut rest = matrix.clone();
                for &gi in d.rows() {
                    for &gj in d.cols() {
                        rest.set(gi, gj, 0.0);
                    }
                }
                spectral_norm(&rest)
            }
        };
        if block_norm == 0.0 || ref_norm == 0.0 {
            return Err(CoreError::ZeroMatrix);
        }
        let factor = p.pi_target.sqrt() * ref_norm / block_norm;
        for &gi in d.rows() {
            for &gj in d.cols() {
                matrix.set(gi, gj, matrix.get(gi, gj) * factor);
            }
        }
        achieved_pi.push((factor * block_norm / ref_norm).powi(2));
    }

    Ok(SynthInstance {
        matrix,
        truth,
        background_rank,
        achieved_pi,
    })
}

fn gaussian_product_block(
    rows: usize,
    cols: usize,
    rank: usize,
    rng: &mut ChaCha8Rng,
) -> DenseMatrix {
    let mut a = DenseMatrix::zeros(rows, rank);
    for i in 0..rows {
        for v in a.row_mut(i) {
            *v = StandardNormal.sample(rng);
        }
    }
    let mut b = DenseMatrix::zeros(cols, rank);
    for i in 0..cols {
        for v in b.row_mut(i) {
            *v = StandardNormal.sample(rng);
        }
    }
    let mut out = DenseMatrix::zeros(rows, cols);
    for i in 0..rows {
        let ar = a.row(i);
        let dst = out.row_mut(i);
        for j in 0..cols {
            let br = b.row(j);
            let mut acc = 0.0;
            for (x, y) in ar.iter().zip(br.iter()) {
                acc += x * y;
            }
            dst[j] = acc;
        }
    }
    out
}

/// Exact top-`rank` truncation of an i.i.d. Gaussian block, computed through
/// the eigendecomposition of G^T G (the block dimensions are small).
fn truncated_gaussian_block(
    rows: usize,
    cols: usize,
    rank: usize,
    rng: &mut ChaCha8Rng,
) -> DenseMatrix {
    let mut g = DenseMatrix::zeros(rows, cols);
    for i in 0..rows {
        for v in g.row_mut(i) {
            *v = StandardNormal.sample(rng);
        }
    }
    // eigenvectors of G^T G give the right singular vectors
    let mut gtg = DenseMatrix::zeros(cols, cols);
    for i in 0..rows {
        let row = g.row(i);
        for p in 0..cols {
            let gp = row[p];
            if gp == 0.0 {
                continue;
            }
            let dst = gtg.row_mut(p);
            for (d, &gq) in dst.iter_mut().zip(row.iter()) {
                *d += gp * gq;
            }
        }
    }
    let (_, vecs) = jacobi_eigh(&gtg);
    // project each row of G onto the top-rank right singular directions
    let mut out = DenseMatrix::zeros(rows, cols);
    for i in 0..rows {
        let row = g.row(i);
        for d in 0..rank {
            let mut coef = 0.0;
            for j in 0..cols {
                coef += row[j] * vecs.get(j, d);
            }
            let dst = out.row_mut(i);
            for (j, o) in dst.iter_mut().enumerate() {
                *o += coef * vecs.get(j, d);
            }
        }
    }
    out
}
