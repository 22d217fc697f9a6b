//! Block-parallel reduction runs.
//!
//! Block `b` of a run draws its data and all of its shots from stream `b`
//! of the run seed, so outcomes are identical for any thread count and the
//! same blocks are reused across parameter values that share a seed.

use rayon::prelude::*;

use crate::analysis::{effective_papr, level_resolvable, EmpiricalDistribution};
use crate::error::Result;
use crate::rng::block_rng;
use crate::selector::{SelectorParams, SignSelector};
use crate::waveform::{cf_to_papr_db, OfdmConfig, Synthesizer};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockOutcome {
    pub block_id: usize,
    /// Crest factor with all signs `+1`.
    pub cf_unreduced: f64,
    /// Crest factor after sign selection.
    pub cf_reduced: f64,
}

impl BlockOutcome {
    pub fn papr_unreduced_db(&self) -> f64 {
        cf_to_papr_db(self.cf_unreduced)
    }

    pub fn papr_reduced_db(&self) -> f64 {
        cf_to_papr_db(self.cf_reduced)
    }
}

/// Runs the descent on `num_blocks` random blocks. Output is ordered by block id.
pub fn run_reduction(
    config: &OfdmConfig,
    params: &SelectorParams,
    num_blocks: usize,
    seed: u64,
) -> Result<Vec<BlockOutcome>> {
    let synth = Synthesizer::new(config);
    let n = config.n();
    let ones = vec![1i8; n];
    (0..num_blocks)
        .into_par_iter()
        .map_init(
            || SignSelector::from_synthesizer(synth.clone()),
            |selector, b| {
                let mut rng = block_rng(seed, b as u64);
                let block = config.constellation().sample_block(n, &mut rng)?;
                let cf_unreduced = selector.estimator().crest_factor(&block, &ones)?;
                let result = selector.select(&block, params, &mut rng)?;
                Ok(BlockOutcome {
                    block_id: b,
                    cf_unreduced,
                    cf_reduced: result.final_cf,
                })
            },
        )
        .collect()
}

/// Effective PAPRs of a run at one CCDF level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReductionSummary {
    pub level: f64,
    pub unreduced_db: f64,
    pub reduced_db: f64,
    pub samples: usize,
}

impl ReductionSummary {
    pub fn reduction_db(&self) -> f64 {
        self.unreduced_db - self.reduced_db
    }
}

pub fn unreduced_distribution(outcomes: &[BlockOutcome]) -> Result<EmpiricalDistribution> {
    EmpiricalDistribution::new(outcomes.iter().map(BlockOutcome::papr_unreduced_db).collect())
}

pub fn reduced_distribution(outcomes: &[BlockOutcome]) -> Result<EmpiricalDistribution> {
    EmpiricalDistribution::new(outcomes.iter().map(BlockOutcome::papr_reduced_db).collect())
}

/// Effective PAPR before and after selection; a capacity error when the
/// run has fewer than `10 / level` blocks.
pub fn summarize(outcomes: &[BlockOutcome], level: f64) -> Result<ReductionSummary> {
    let before = unreduced_distribution(outcomes)?;
    let after = reduced_distribution(outcomes)?;
    Ok(ReductionSummary {
        level,
        unreduced_db: effective_papr(&before, level)?,
        reduced_db: effective_papr(&after, level)?,
        samples: outcomes.len(),
    })
}

/// Like [`summarize`], but falls back to the sample maximum when `level`
/// is not resolvable; the returned summary then carries `level = 0`.
pub fn summarize_or_max(outcomes: &[BlockOutcome], level: f64) -> Result<ReductionSummary> {
    if level_resolvable(outcomes.len(), level) {
        return summarize(outcomes, level);
    }
    let before = unreduced_distribution(outcomes)?;
    let after = reduced_distribution(outcomes)?;
    Ok(ReductionSummary {
        level: 0.0,
        unreduced_db: before.max(),
        reduced_db: after.max(),
        samples: outcomes.len(),
    })
}
