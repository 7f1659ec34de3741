//! Partially observed matrices, masking, descriptors, triplet-file IO.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{CoreError, Result};
use crate::matrix::DenseMatrix;

/// Matrix known only on an explicit observed-index set.
///
/// Entries are kept sorted by (row, col) with no duplicates.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedMatrix {
    n_rows: usize,
    n_cols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl ObservedMatrix {
    pub fn new(n_rows: usize, n_cols: usize, mut entries: Vec<(usize, usize, f64)>) -> Result<Self> {
        entries.sort_unstable_by_key(|&(i, j, _)| (i, j));
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 && w[0].1 == w[1].1 {
                return Err(CoreError::DuplicateEntry {
                    row: w[0].0,
                    col: w[0].1,
                });
            }
        }
        for &(i, j, v) in &entries {
            if i >= n_rows || j >= n_cols {
                return Err(CoreError::IndexOutOfRange {
                    index: if i >= n_rows { i } else { j },
                    limit: if i >= n_rows { n_rows } else { n_cols },
                });
            }
            if !v.is_finite() {
                return Err(CoreError::NonFinite { row: i, col: j });
            }
        }
        Ok(Self {
            n_rows,
            n_cols,
            entries,
        })
    }

    pub fn from_dense(m: &DenseMatrix) -> Self {
        let mut entries = Vec::with_capacity(m.n_rows() * m.n_cols());
        for i in 0..m.n_rows() {
            for j in 0..m.n_cols() {
                entries.push((i, j, m.get(i, j)));
            }
        }
        Self {
            n_rows: m.n_rows(),
            n_cols: m.n_cols(),
            entries,
        }
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn n_observed(&self) -> usize {
        self.entries.len()
    }

    pub fn is_fully_observed(&self) -> bool {
        self.entries.len() == self.n_rows * self.n_cols
    }

    pub fn observed_fraction(&self) -> f64 {
        if self.n_rows * self.n_cols == 0 {
            0.0
        } else {
            self.entries.len() as f64 / (self.n_rows * self.n_cols) as f64
        }
    }
}

/// Row set and column set identifying a submatrix of a host matrix.
///
/// Indices are stored sorted and unique.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubmatrixDescriptor {
    rows: Vec<usize>,
    cols: Vec<usize>,
}

impl SubmatrixDescriptor {
    pub fn new(mut rows: Vec<usize>, mut cols: Vec<usize>) -> Result<Self> {
        rows.sort_unstable();
        rows.dedup();
        cols.sort_unstable();
        cols.dedup();
        if rows.is_empty() || cols.is_empty() {
            return Err(CoreError::EmptyDescriptor);
        }
        Ok(Self { rows, cols })
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    pub fn validate_for(&self, n_rows: usize, n_cols: usize) -> Result<()> {
        if let Some(&r) = self.rows.last() {
            if r >= n_rows {
                return Err(CoreError::IndexOutOfRange {
                    index: r,
                    limit: n_rows,
                });
            }
        }
        if let Some(&c) = self.cols.last() {
            if c >= n_cols {
                return Err(CoreError::IndexOutOfRange {
                    index: c,
                    limit: n_cols,
                });
            }
        }
        Ok(())
    }

    pub fn contains_cell(&self, row: usize, col: usize) -> bool {
        self.rows.binary_search(&row).is_ok() && self.cols.binary_search(&col).is_ok()
    }

    /// Complement row/column sets within a host of the given dimensions.
    pub fn complement(&self, n_rows: usize, n_cols: usize) -> (Vec<usize>, Vec<usize>) {
        let rows = complement_of(&self.rows, n_rows);
        let cols = complement_of(&self.cols, n_cols);
        (rows, cols)
    }

    pub fn n_cells(&self) -> usize {
        self.rows.len() * self.cols.len()
    }
}

pub(crate) fn complement_of(sorted: &[usize], n: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(n.saturating_sub(sorted.len()));
    let mut it = sorted.iter().peekable();
    for i in 0..n {
        if it.peek() == Some(&&i) {
            it.next();
        } else {
            out.push(i);
        }
    }
    out
}

/// Keep exactly round(fraction * n * m) entries of `m`, chosen uniformly
/// without replacement; retained values are copied exactly.
pub fn mask_uniform(m: &DenseMatrix, observed_fraction: f64, seed: u64) -> ObservedMatrix {
    assert!(
        (0.0..=1.0).contains(&observed_fraction),
        "fraction must be within [0, 1]"
    );
    let total = m.n_rows() * m.n_cols();
    let keep = (observed_fraction * total as f64).round() as usize;
    let mut cells: Vec<usize> = (0..total).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (chosen, _) = cells.partial_shuffle(&mut rng, keep);
    let mut kept: Vec<usize> = chosen.to_vec();
    kept.sort_unstable();
    let entries: Vec<(usize, usize, f64)> = kept
        .into_iter()
        .map(|c| {
            let i = c / m.n_cols();
            let j = c % m.n_cols();
            (i, j, m.get(i, j))
        })
        .collect();
    ObservedMatrix {
        n_rows: m.n_rows(),
        n_cols: m.n_cols(),
        entries,
    }
}

/// Observed entries inside the descriptor, reindexed to local coordinates.
pub fn restrict(m: &ObservedMatrix, d: &SubmatrixDescriptor) -> Result<ObservedMatrix> {
    d.validate_for(m.n_rows, m.n_cols)?;
    let mut row_map = vec![usize::MAX; m.n_rows];
    for (local, &global) in d.rows().iter().enumerate() {
        row_map[global] = local;
    }
    let mut col_map = vec![usize::MAX; m.n_cols];
    for (local, &global) in d.cols().iter().enumerate() {
        col_map[global] = local;
    }
    let entries: Vec<(usize, usize, f64)> = m
        .entries
        .iter()
        .filter_map(|&(i, j, v)| {
            let (li, lj) = (row_map[i], col_map[j]);
            (li != usize::MAX && lj != usize::MAX).then_some((li, lj, v))
        })
        .collect();
    Ok(ObservedMatrix {
        n_rows: d.rows().len(),
        n_cols: d.cols().len(),
        entries,
    })
}

/// Set observed values inside the descriptor to zero; the index set is unchanged.
pub fn zero_out(m: &ObservedMatrix, d: &SubmatrixDescriptor) -> Result<ObservedMatrix> {
    d.validate_for(m.n_rows, m.n_cols)?;
    let mut out = m.clone();
    for e in &mut out.entries {
        if d.contains_cell(e.0, e.1) {
            e.2 = 0.0;
        }
    }
    Ok(out)
}

/// Delete observed entries inside the descriptor from the index set.
pub fn delete_entries(m: &ObservedMatrix, d: &SubmatrixDescriptor) -> Result<ObservedMatrix> {
    d.validate_for(m.n_rows, m.n_cols)?;
    let mut out = m.clone();
    out.entries.retain(|e| !d.contains_cell(e.0, e.1));
    Ok(out)
}

/// Dense matrix with observed values in place and zeros elsewhere.
pub fn fill_zeros(m: &ObservedMatrix) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(m.n_rows, m.n_cols);
    for &(i, j, v) in &m.entries {
        out.set(i, j, v);
    }
    out
}

/// Triplet file: header `n_rows,n_cols`, then `i,j,value` per observed entry.
pub fn write_triplets(m: &ObservedMatrix, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{},{}", m.n_rows, m.n_cols)?;
    for &(i, j, v) in &m.entries {
        writeln!(w, "{},{},{}", i, j, v)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_triplets(path: &Path) -> Result<ObservedMatrix> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines().enumerate();
    let parse_err = |line: usize, message: String| CoreError::Parse {
        path: path.display().to_string(),
        line,
        message,
    };
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file".into()))?;
    let header = header?;
    let mut dims = header.split(',');
    let n_rows: usize = dims
        .next()
        .and_then(|t| t.trim().parse().ok())
        .ok_or_else(|| parse_err(1, "bad header".into()))?;
    let n_cols: usize = dims
        .next()
        .and_then(|t| t.trim().parse().ok())
        .ok_or_else(|| parse_err(1, "bad header".into()))?;
    let mut entries = Vec::new();
    for (ln, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let bad = || parse_err(ln + 1, format!("bad triplet: {line}"));
        let i: usize = parts
            .next()
            .and_then(|t| t.trim().parse().ok())
            .ok_or_else(bad)?;
        let j: usize = parts
            .next()
            .and_then(|t| t.trim().parse().ok())
            .ok_or_else(bad)?;
        let v: f64 = parts
            .next()
            .and_then(|t| t.trim().parse().ok())
            .ok_or_else(bad)?;
        entries.push((i, j, v));
    }
    ObservedMatrix::new(n_rows, n_cols, entries)
}

/// Descriptor file: `rows: i1 i2 ...` and `cols: j1 j2 ...` lines.
pub fn write_descriptor(d: &SubmatrixDescriptor, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "rows:")?;
    for r in d.rows() {
        write!(w, " {}", r)?;
    }
    writeln!(w)?;
    write!(w, "cols:")?;
    for c in d.cols() {
        write!(w, " {}", c)?;
    }
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn read_descriptor(path: &Path) -> Result<SubmatrixDescriptor> {
    let reader = BufReader::new(File::open(path)?);
    let mut rows = None;
    let mut cols = None;
    for (ln, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (key, rest) = line.split_once(':').ok_or_else(|| CoreError::Parse {
            path: path.display().to_string(),
            line: ln + 1,
            message: "expected `rows:` or `cols:` line".into(),
        })?;
        let idx: std::result::Result<Vec<usize>, _> =
            rest.split_whitespace().map(|t| t.parse::<usize>()).collect();
        let idx = idx.map_err(|e| CoreError::Parse {
            path: path.display().to_string(),
            line: ln + 1,
            message: e.to_string(),
        })?;
        match key.trim() {
            "rows" => rows = Some(idx),
            "cols" => cols = Some(idx),
            other => {
                return Err(CoreError::Parse {
                    path: path.display().to_string(),
                    line: ln + 1,
                    message: format!("unknown key `{other}`"),
                })
            }
        }
    }
    match (rows, cols) {
        (Some(r), Some(c)) => SubmatrixDescriptor::new(r, c),
        _ => Err(CoreError::Parse {
            path: path.display().to_string(),
            line: 0,
            message: "missing rows or cols line".into(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svd::low_rank_gaussian;

    #[test]
    fn mask_full_and_empty() {
        let m = low_rank_gaussian(6, 5, 2, 1).unwrap();
        let full = mask_uniform(&m, 1.0, 3);
        assert_eq!(full.n_observed(), 30);
        for &(i, j, v) in full.entries() {
            assert_eq!(v, m.get(i, j));
        }
        let empty = mask_uniform(&m, 0.0, 3);
        assert_eq!(empty.n_observed(), 0);
    }

    #[test]
    fn mask_exact_count_and_determinism() {
        let m = low_rank_gaussian(100, 100, 3, 2).unwrap();
        let a = mask_uniform(&m, 0.3, 17);
        assert_eq!(a.n_observed(), 3000);
        let b = mask_uniform(&m, 0.3, 17);
        assert_eq!(a, b);
        // agrees with M on the observed set
        let dense = fill_zeros(&a);
        for &(i, j, _) in a.entries() {
            assert_eq!(dense.get(i, j), m.get(i, j));
        }
    }

    #[test]
    fn mask_spreads_uniformly() {
        // each quadrant of a 100x100 grid should hold roughly a quarter of
        // the sample, and per-row counts should never collapse to all-or-nothing
        let m = low_rank_gaussian(100, 100, 2, 4).unwrap();
        let a = mask_uniform(&m, 0.3, 99);
        let mut quad = [0usize; 4];
        let mut row_counts = vec![0usize; 100];
        for &(i, j, _) in a.entries() {
            quad[(i >= 50) as usize * 2 + (j >= 50) as usize] += 1;
            row_counts[i] += 1;
        }
        for &q in &quad {
            assert!(
                (q as f64 - 750.0).abs() < 150.0,
                "quadrant counts skewed: {quad:?}"
            );
        }
        let (lo, hi) = row_counts
            .iter()
            .fold((usize::MAX, 0), |(l, h), &c| (l.min(c), h.max(c)));
        assert!(lo > 5 && hi < 60, "row counts degenerate: {lo}..{hi}");
    }

    #[test]
    fn restrict_hand_case() {
        // 4x4 with 8 known entries; d = rows {0,2} x cols {1,3}
        let entries = vec![
            (0, 1, 1.0),
            (0, 2, 2.0),
            (1, 0, 3.0),
            (1, 3, 4.0),
            (2, 1, 5.0),
            (2, 3, 6.0),
            (3, 0, 7.0),
            (3, 2, 8.0),
        ];
        let m = ObservedMatrix::new(4, 4, entries).unwrap();
        let d = SubmatrixDescriptor::new(vec![0, 2], vec![1, 3]).unwrap();
        let r = restrict(&m, &d).unwrap();
        assert_eq!(r.n_rows(), 2);
        assert_eq!(r.n_cols(), 2);
        assert_eq!(
            r.entries(),
            &[(0, 0, 1.0), (1, 0, 5.0), (1, 1, 6.0)]
        );
    }

    #[test]
    fn restrict_full_is_identity() {
        let m = low_rank_gaussian(5, 4, 2, 3).unwrap();
        let mo = mask_uniform(&m, 0.6, 5);
        let d = SubmatrixDescriptor::new((0..5).collect(), (0..4).collect()).unwrap();
        assert_eq!(restrict(&mo, &d).unwrap(), mo);
    }

    #[test]
    fn restrict_disjoint_is_empty_with_shape() {
        let m = ObservedMatrix::new(3, 3, vec![(0, 0, 1.0)]).unwrap();
        let d = SubmatrixDescriptor::new(vec![1, 2], vec![1, 2]).unwrap();
        let r = restrict(&m, &d).unwrap();
        assert_eq!(r.n_observed(), 0);
        assert_eq!((r.n_rows(), r.n_cols()), (2, 2));
    }

    #[test]
    fn zero_out_hand_case() {
        let entries = vec![
            (0, 0, 1.0),
            (1, 0, 2.0),
            (1, 1, 3.0),
            (1, 2, 4.0),
            (2, 2, 5.0),
        ];
        let m = ObservedMatrix::new(3, 3, entries).unwrap();
        let d = SubmatrixDescriptor::new(vec![1], vec![0, 1, 2]).unwrap();
        let z = zero_out(&m, &d).unwrap();
        assert_eq!(z.n_observed(), 5); // |Omega| preserved
        assert_eq!(
            z.entries(),
            &[
                (0, 0, 1.0),
                (1, 0, 0.0),
                (1, 1, 0.0),
                (1, 2, 0.0),
                (2, 2, 5.0)
            ]
        );
        // disjoint descriptor leaves input unchanged
        let d2 = SubmatrixDescriptor::new(vec![0], vec![1]).unwrap();
        assert_eq!(zero_out(&m, &d2).unwrap(), m);
    }

    #[test]
    fn fill_zeros_cases() {
        let m = low_rank_gaussian(5, 5, 2, 9).unwrap();
        let full = ObservedMatrix::from_dense(&m);
        assert_eq!(fill_zeros(&full), m);
        let empty = ObservedMatrix::new(2, 2, vec![]).unwrap();
        assert_eq!(fill_zeros(&empty), DenseMatrix::zeros(2, 2));
        let half = mask_uniform(&m, 0.5, 4);
        let dense = fill_zeros(&half);
        for &(i, j, v) in half.entries().iter().take(3) {
            assert_eq!(dense.get(i, j), v);
        }
    }

    #[test]
    fn triplet_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.triplet");
        let m = low_rank_gaussian(7, 6, 2, 12).unwrap();
        let mo = mask_uniform(&m, 0.4, 8);
        write_triplets(&mo, &p).unwrap();
        assert_eq!(read_triplets(&p).unwrap(), mo);
    }

    #[test]
    fn descriptor_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.desc");
        let d = SubmatrixDescriptor::new(vec![4, 1, 9], vec![0, 3]).unwrap();
        assert_eq!(d.rows(), &[1, 4, 9]); // sorted
        write_descriptor(&d, &p).unwrap();
        assert_eq!(read_descriptor(&p).unwrap(), d);
    }
}
