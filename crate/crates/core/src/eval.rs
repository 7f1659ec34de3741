//! Metrics (relative error, F-score), the rank-1 spectral oracle, and the
//! experiment sweep runner.

use std::fmt::Write as _;
use std::time::Instant;

use crate::completion::{complete, CompletionConfig};
use crate::error::{CoreError, Result};
use crate::matrix::DenseMatrix;
use crate::observed::{mask_uniform, SubmatrixDescriptor};
use crate::pipeline::TargetedConfig;
use crate::synth::{generate, PlantSpec};

/// ||truth - estimate||_F^2 / ||truth||_F^2
pub fn rel_err(truth: &DenseMatrix, estimate: &DenseMatrix) -> Result<f64> {
    if truth.n_rows() != estimate.n_rows() || truth.n_cols() != estimate.n_cols() {
        return Err(CoreError::DimensionMismatch {
            expected: truth.n_rows() * truth.n_cols(),
            got: estimate.n_rows() * estimate.n_cols(),
        });
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, b) in truth.values().iter().zip(estimate.values()) {
        num += (a - b) * (a - b);
        den += a * a;
    }
    if den == 0.0 {
        return Err(CoreError::ZeroMatrix);
    }
    Ok(num / den)
}

/// rel_err restricted to the cells of a descriptor.
pub fn rel_err_over(
    truth: &DenseMatrix,
    estimate: &DenseMatrix,
    d: &SubmatrixDescriptor,
) -> Result<f64> {
    d.validate_for(truth.n_rows(), truth.n_cols())?;
    rel_err(
        &truth.submatrix(d.rows(), d.cols()),
        &estimate.submatrix(d.rows(), d.cols()),
    )
}

/// Precision/recall F-score on the cell sets R x C of the two descriptors.
pub fn f_score(truth: &SubmatrixDescriptor, found: &SubmatrixDescriptor) -> f64 {
    let inter_rows = intersection_size(truth.rows(), found.rows());
    let inter_cols = intersection_size(truth.cols(), found.cols());
    let inter = (inter_rows * inter_cols) as f64;
    if inter == 0.0 {
        return 0.0;
    }
    let precision = inter / found.n_cells() as f64;
    let recall = inter / truth.n_cells() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Row-only and column-only F-scores, for diagnosing which side went wrong.
pub fn f_score_per_axis(truth: &SubmatrixDescriptor, found: &SubmatrixDescriptor) -> (f64, f64) {
    let axis = |t: &[usize], f: &[usize]| -> f64 {
        let inter = intersection_size(t, f) as f64;
        if inter == 0.0 {
            return 0.0;
        }
        let p = inter / f.len() as f64;
        let r = inter / t.len() as f64;
        2.0 * p * r / (p + r)
    };
    (
        axis(truth.rows(), found.rows()),
        axis(truth.cols(), found.cols()),
    )
}

fn intersection_size(a: &[usize], b: &[usize]) -> usize {
    let mut i = 0;
    let mut j = 0;
    let mut count = 0;
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

/// Both roots of lambda = (sigma^2 + tau^2 +- sqrt((sigma^2 - tau^2)^2 +
/// 4 sigma^2 tau^2 gamma^2)) / 2 — the squared spectral norm of a matrix
/// built from two rank-1 blocks whose right vectors meet at angle
/// arccos(gamma).
pub fn rank1_lambda_oracle(sigma: f64, tau: f64, gamma: f64) -> (f64, f64) {
    let s2 = sigma * sigma;
    let t2 = tau * tau;
    let disc = ((s2 - t2) * (s2 - t2) + 4.0 * s2 * t2 * gamma * gamma).sqrt();
    (0.5 * (s2 + t2 + disc), 0.5 * (s2 + t2 - disc))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweptVariable {
    Density,
    SubRank,
    SubSize,
    BackRank,
    Pi,
}

impl SweptVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweptVariable::Density => "density",
            SweptVariable::SubRank => "subrank",
            SweptVariable::SubSize => "subsize",
            SweptVariable::BackRank => "backrank",
            SweptVariable::Pi => "pi",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Methods {
    Plain,
    Targeted,
    Both,
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub n: usize,
    pub m: usize,
    pub background_rank: usize,
    pub plants: Vec<PlantSpec>,
    pub variable: SweptVariable,
    pub grid: Vec<f64>,
    pub seeds: usize,
    pub methods: Methods,
    /// Observed fraction when density is not the swept variable.
    pub density: f64,
    pub targeted: TargetedConfig,
    pub completion: CompletionConfig,
}

/// One sweep measurement; empty options mean "not applicable here".
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub swept_var: &'static str,
    pub value: f64,
    pub seed: u64,
    pub method: &'static str,
    pub relerr_m: Option<f64>,
    pub relerr_s: Vec<Option<f64>>,
    pub fscore_s: Vec<Option<f64>>,
    pub time_discover_s: f64,
    pub time_complete_s: f64,
    pub error: Option<String>,
}

pub const SWEEP_CSV_HEADER: &str = "swept_var,value,seed,method,relerr_M,relerr_S1,relerr_S2,relerr_S3,fscore_S1,fscore_S2,fscore_S3,time_discover_s,time_complete_s";

pub fn sweep_rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    out.push_str(SWEEP_CSV_HEADER);
    out.push('\n');
    let fmt_opt = |o: Option<f64>| o.map(|v| format!("{v}")).unwrap_or_default();
    for r in rows {
        let mut s_fields = String::new();
        for i in 0..3 {
            let _ = write!(
                s_fields,
                ",{}",
                fmt_opt(r.relerr_s.get(i).copied().flatten())
            );
        }
        for i in 0..3 {
            let _ = write!(
                s_fields,
                ",{}",
                fmt_opt(r.fscore_s.get(i).copied().flatten())
            );
        }
        let _ = writeln!(
            out,
            "{},{},{},{},{}{},{},{}",
            r.swept_var,
            r.value,
            r.seed,
            r.method,
            fmt_opt(r.relerr_m),
            s_fields,
            r.time_discover_s,
            r.time_complete_s,
        );
    }
    out
}

/// Run the grid x seeds x methods protocol: generate, mask, complete,
/// score against the generator's ground truth. Failures land in the row's
/// `error` field instead of aborting the sweep. Rows come out sorted by
/// (grid position, seed, method).
pub fn run_sweep(spec: &SweepSpec, seed: u64) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for (gi, &value) in spec.grid.iter().enumerate() {
        for s in 0..spec.seeds {
            let inst_seed = seed
                .wrapping_add(1000 * gi as u64)
                .wrapping_add(7 * s as u64);
            let mut plants = spec.plants.clone();
            let mut background_rank = spec.background_rank;
            let mut density = spec.density;
            match spec.variable {
                SweptVariable::Density => density = value,
                SweptVariable::SubRank => {
                    for p in &mut plants {
                        p.rank = value.round() as usize;
                    }
                }
                SweptVariable::SubSize => {
                    for p in &mut plants {
                        p.rows = value.round() as usize;
                        p.cols = value.round() as usize;
                    }
                }
                SweptVariable::BackRank => background_rank = value.round() as usize,
                SweptVariable::Pi => {
                    for p in &mut plants {
                        p.pi_target = value;
                    }
                }
            }
            let inst = match generate(spec.n, spec.m, background_rank, &plants, inst_seed) {
                Ok(i) => i,
                Err(e) => {
                    rows.push(error_row(spec, value, inst_seed, "generate", e.to_string()));
                    continue;
                }
            };
            let mo = mask_uniform(&inst.matrix, density, inst_seed ^ 0x00ff);
            if matches!(spec.methods, Methods::Plain | Methods::Both) {
                rows.push(run_plain(spec, &inst.matrix, &inst.truth, &mo, value, inst_seed));
            }
            if matches!(spec.methods, Methods::Targeted | Methods::Both) {
                rows.push(run_targeted(
                    spec,
                    &inst.matrix,
                    &inst.truth,
                    &mo,
                    value,
                    inst_seed,
                ));
            }
        }
    }
    Ok(rows)
}

fn error_row(
    spec: &SweepSpec,
    value: f64,
    seed: u64,
    method: &'static str,
    error: String,
) -> SweepRow {
    SweepRow {
        swept_var: spec.variable.name(),
        value,
        seed,
        method,
        relerr_m: None,
        relerr_s: vec![None; 3],
        fscore_s: vec![None; 3],
        time_discover_s: 0.0,
        time_complete_s: 0.0,
        error: Some(error),
    }
}

fn run_plain(
    spec: &SweepSpec,
    truth_matrix: &DenseMatrix,
    truth: &[SubmatrixDescriptor],
    mo: &crate::observed::ObservedMatrix,
    value: f64,
    seed: u64,
) -> SweepRow {
    let t0 = Instant::now();
    match complete(mo, &spec.completion, seed) {
        Ok(out) => {
            let dt = t0.elapsed().as_secs_f64();
            let relerr_m = rel_err(truth_matrix, &out.estimate).ok();
            let relerr_s = truth
                .iter()
                .map(|d| rel_err_over(truth_matrix, &out.estimate, d).ok())
                .collect();
            SweepRow {
                swept_var: spec.variable.name(),
                value,
                seed,
                method: "plain",
                relerr_m,
                relerr_s,
                fscore_s: vec![None; 3],
                time_discover_s: 0.0,
                time_complete_s: dt,
                error: None,
            }
        }
        Err(e) => error_row(spec, value, seed, "plain", e.to_string()),
    }
}

fn run_targeted(
    spec: &SweepSpec,
    truth_matrix: &DenseMatrix,
    truth: &[SubmatrixDescriptor],
    mo: &crate::observed::ObservedMatrix,
    value: f64,
    seed: u64,
) -> SweepRow {
    let t0 = Instant::now();
    let disc = crate::svp::discover_all(mo, &spec.targeted.svp);
    let time_discover_s = t0.elapsed().as_secs_f64();
    let descriptors = match disc {
        Ok(d) => d,
        Err(e) => return error_row(spec, value, seed, "targeted", e.to_string()),
    };
    let t1 = Instant::now();
    match crate::pipeline::complete_with_descriptors(mo, &spec.targeted, seed, descriptors.clone())
    {
        Ok(out) => {
            let time_complete_s = t1.elapsed().as_secs_f64();
            let relerr_m = rel_err(truth_matrix, &out.estimate).ok();
            let relerr_s = truth
                .iter()
                .map(|d| rel_err_over(truth_matrix, &out.estimate, d).ok())
                .collect();
            let fscore_s = truth
                .iter()
                .map(|t| {
                    descriptors
                        .iter()
                        .map(|f| f_score(t, f))
                        .fold(None, |acc: Option<f64>, v| {
                            Some(acc.map_or(v, |a| a.max(v)))
                        })
                })
                .collect();
            SweepRow {
                swept_var: spec.variable.name(),
                value,
                seed,
                method: "targeted",
                relerr_m,
                relerr_s,
                fscore_s,
                time_discover_s,
                time_complete_s,
                error: None,
            }
        }
        Err(e) => error_row(spec, value, seed, "targeted", e.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn rel_err_examples() {
        let t = mat(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert_eq!(rel_err(&t, &t).unwrap(), 0.0);
        let zero = DenseMatrix::zeros(2, 2);
        assert_eq!(rel_err(&t, &zero).unwrap(), 1.0);
        let e = mat(&[&[1.0, 0.0], &[0.0, 0.0]]);
        assert_eq!(rel_err(&t, &e).unwrap(), 0.5);
        assert!(rel_err(&zero, &t).is_err());
    }

    #[test]
    fn rel_err_over_examples() {
        let t = mat(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let d = SubmatrixDescriptor::new(vec![0, 1], vec![0]).unwrap();
        assert_eq!(rel_err_over(&t, &t, &d).unwrap(), 0.0);
        let mut z = t.clone();
        z.set(0, 0, 0.0);
        z.set(1, 0, 0.0);
        assert_eq!(rel_err_over(&t, &z, &d).unwrap(), 1.0);
    }

    #[test]
    fn rel_err_permutation_invariant() {
        let t = mat(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let e = mat(&[&[1.5, 2.0], &[3.0, 5.0]]);
        let tp = mat(&[&[4.0, 3.0], &[2.0, 1.0]]);
        let ep = mat(&[&[5.0, 3.0], &[2.0, 1.5]]);
        assert!((rel_err(&t, &e).unwrap() - rel_err(&tp, &ep).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn f_score_examples() {
        let t = SubmatrixDescriptor::new(vec![0, 1], vec![0, 1]).unwrap();
        assert_eq!(f_score(&t, &t), 1.0);
        let disjoint = SubmatrixDescriptor::new(vec![2, 3], vec![2, 3]).unwrap();
        assert_eq!(f_score(&t, &disjoint), 0.0);
        // found covers truth plus an equal number of extra cells: Pr=0.5, Rcl=1
        let double = SubmatrixDescriptor::new(vec![0, 1], vec![0, 1, 2, 3]).unwrap();
        assert!((f_score(&t, &double) - 2.0 / 3.0).abs() < 1e-15);
        // symmetric
        assert_eq!(f_score(&t, &double), f_score(&double, &t));
        let (fr, fc) = f_score_per_axis(&t, &double);
        assert_eq!(fr, 1.0);
        assert!((fc - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn lambda_oracle_trivial_cases() {
        let (lp, lm) = rank1_lambda_oracle(2.0, 3.0, 0.0);
        assert_eq!(lp, 9.0);
        assert_eq!(lm, 4.0);
        let (lp, lm) = rank1_lambda_oracle(2.0, 2.0, 1.0);
        assert!((lp - 8.0).abs() < 1e-12);
        assert!(lm.abs() < 1e-12);
    }

    #[test]
    fn lambda_oracle_vieta() {
        let cases = [(1.3, 0.7, 0.4), (2.0, 1.9, 0.05), (0.5, 3.0, 0.99)];
        for (s, t, g) in cases {
            let (lp, lm) = rank1_lambda_oracle(s, t, g);
            let sum = s * s + t * t;
            let prod = s * s * t * t * (1.0 - g * g);
            assert!((lp + lm - sum).abs() <= 1e-10 * sum.abs());
            assert!((lp * lm - prod).abs() <= 1e-10 * prod.abs().max(1e-30));
        }
    }

    #[test]
    fn sweep_csv_header_layout() {
        let row = SweepRow {
            swept_var: "density",
            value: 0.5,
            seed: 1,
            method: "plain",
            relerr_m: Some(0.25),
            relerr_s: vec![Some(0.1), None, None],
            fscore_s: vec![None, None, None],
            time_discover_s: 0.0,
            time_complete_s: 1.5,
            error: None,
        };
        let csv = sweep_rows_to_csv(&[row]);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), SWEEP_CSV_HEADER);
        assert_eq!(lines.next().unwrap(), "density,0.5,1,plain,0.25,0.1,,,,,,0,1.5");
    }
}
