//! The three-step targeted pipeline: discover submatrices, separate them,
//! complete each component and the remainder, reassemble the estimate.

use crate::completion::{complete, CompletionConfig, CompletionOutput};
use crate::error::Result;
use crate::matrix::DenseMatrix;
use crate::observed::{delete_entries, restrict, zero_out, ObservedMatrix, SubmatrixDescriptor};
use crate::svp::{discover_all, SvpConfig};

/// How discovered blocks are removed from the remainder before completing it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeparationMode {
    /// Replace observed values inside each block with zeros (they stay observed).
    ZeroFill,
    /// Drop those entries from the observed set entirely.
    Delete,
}

#[derive(Debug, Clone)]
pub struct TargetedConfig {
    pub svp: SvpConfig,
    pub completion: CompletionConfig,
    pub separation_mode: SeparationMode,
}

impl Default for TargetedConfig {
    fn default() -> Self {
        Self {
            svp: SvpConfig::default(),
            completion: CompletionConfig::default(),
            separation_mode: SeparationMode::ZeroFill,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TargetedResult {
    pub estimate: DenseMatrix,
    pub descriptors: Vec<SubmatrixDescriptor>,
    /// One entry per discovered submatrix, in descriptor order, then the remainder.
    pub per_component: Vec<CompletionOutput>,
}

/// Discover, separate, complete each component, reassemble.
///
/// Submatrix i is completed with seed `seed + i`; the remainder uses
/// `seed + n_descriptors`, so an empty discovery degrades to a plain
/// `complete` call with the original seed, bit for bit. Cells inside a
/// descriptor take that component's estimate; every other cell, including the
/// cross blocks sharing only rows or only columns with a descriptor, takes
/// the remainder estimate. Observed entries are not forced back into the
/// output.
pub fn targeted_complete(
    m: &ObservedMatrix,
    cfg: &TargetedConfig,
    seed: u64,
) -> Result<TargetedResult> {
    let descriptors = discover_all(m, &cfg.svp)?;
    complete_with_descriptors(m, cfg, seed, descriptors)
}

/// The completion and assembly stages alone, for callers that already ran
/// (and timed) discovery.
pub fn complete_with_descriptors(
    m: &ObservedMatrix,
    cfg: &TargetedConfig,
    seed: u64,
    descriptors: Vec<SubmatrixDescriptor>,
) -> Result<TargetedResult> {
    let mut per_component = Vec::with_capacity(descriptors.len() + 1);
    let mut block_outputs: Vec<CompletionOutput> = Vec::with_capacity(descriptors.len());
    for (idx, d) in descriptors.iter().enumerate() {
        let sub = restrict(m, d)?;
        let out = complete(&sub, &cfg.completion, seed + idx as u64)?;
        block_outputs.push(out);
    }

    let mut remainder = m.clone();
    for d in &descriptors {
        remainder = match cfg.separation_mode {
            SeparationMode::ZeroFill => zero_out(&remainder, d)?,
            SeparationMode::Delete => delete_entries(&remainder, d)?,
        };
    }
    let remainder_out = complete(&remainder, &cfg.completion, seed + descriptors.len() as u64)?;

    let mut estimate = remainder_out.estimate.clone();
    for (d, out) in descriptors.iter().zip(block_outputs.iter()) {
        for (li, &gi) in d.rows().iter().enumerate() {
            for (lj, &gj) in d.cols().iter().enumerate() {
                estimate.set(gi, gj, out.estimate.get(li, lj));
            }
        }
    }
    per_component.extend(block_outputs);
    per_component.push(remainder_out);

    Ok(TargetedResult {
        estimate,
        descriptors,
        per_component,
    })
}
