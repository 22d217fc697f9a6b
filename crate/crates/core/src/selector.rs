//! Sign selection: sequential conditional-expectation descent, exhaustive
//! search, a random selected-mapping baseline, and rate-loss bookkeeping.
//!
//! The descent decides `x_m, x_{m+1}, .., x_{n-1}` in index order. At step
//! `j` it compares `z_j^+` and `z_j^-` (the conditional expectations of the
//! crest factor with `x_j` fixed to `+1` or `-1`) and keeps the smaller one;
//! ties go to `+1`. The signs `x_0 .. x_{m-1}` stay at `+1`. Because
//! `z_j = (z_j^+ + z_j^-) / 2`, exact expectations make the sequence
//! `z_m >= z_{m+1} >= .. >= z_n = f(x*)` non-increasing.

use num_complex::Complex64;
use rand::{Rng, RngCore};

use crate::constellation::{Constellation, DataBlock};
use crate::error::{Error, Result};
use crate::estimator::{ConditionalEstimator, ShotPairing};
use crate::waveform::{cf_to_papr_db, crest_factor, OfdmConfig, SignVector, Synthesizer};

/// Largest `n` accepted by [`exhaustive_best_signs`].
pub const MAX_EXHAUSTIVE_N: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceStep {
    /// Subcarrier index `j` being decided.
    pub index: usize,
    pub z_plus: f64,
    pub z_minus: f64,
    pub chosen: i8,
}

/// Per-decision record of one descent run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SelectionTrace {
    /// Estimate of `z_m` before any decision, `(z_m^+ + z_m^-) / 2` of the first step.
    pub initial: Option<f64>,
    pub steps: Vec<TraceStep>,
}

impl SelectionTrace {
    /// `z_m, z_{m+1}, .., z_n` as seen by the run: the initial estimate
    /// followed by the chosen candidate of each step.
    pub fn z_sequence(&self) -> Vec<f64> {
        self.initial
            .into_iter()
            .chain(self.steps.iter().map(|s| if s.chosen > 0 { s.z_plus } else { s.z_minus }))
            .collect()
    }

    /// Rebuilds the sign vector from the recorded decisions.
    pub fn replay(&self, n: usize) -> SignVector {
        let mut signs = vec![1i8; n];
        for step in &self.steps {
            signs[step.index] = if step.z_plus <= step.z_minus { 1 } else { -1 };
        }
        SignVector::new(signs).expect("replayed entries are +-1")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub signs: SignVector,
    pub trace: SelectionTrace,
    pub final_cf: f64,
    pub final_papr_db: f64,
}

/// Descent parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelectorParams {
    /// Shots per candidate estimate, `q`.
    pub shots: usize,
    /// First decided index, `m` (`1` decides every sign but `x_0`).
    pub start_index: usize,
    pub pairing: ShotPairing,
}

impl SelectorParams {
    pub fn new(shots: usize, start_index: usize) -> Self {
        SelectorParams {
            shots,
            start_index,
            pairing: ShotPairing::Common,
        }
    }
}

/// Reusable selection state for one configuration. One per worker thread.
#[derive(Debug, Clone)]
pub struct SignSelector {
    estimator: ConditionalEstimator,
}

impl SignSelector {
    pub fn new(config: &OfdmConfig) -> Self {
        SignSelector {
            estimator: ConditionalEstimator::new(config),
        }
    }

    pub fn from_synthesizer(synth: Synthesizer) -> Self {
        SignSelector {
            estimator: ConditionalEstimator::from_synthesizer(synth),
        }
    }

    pub fn estimator(&mut self) -> &mut ConditionalEstimator {
        &mut self.estimator
    }

    /// Monte Carlo descent.
    pub fn select<R: RngCore + ?Sized>(
        &mut self,
        block: &DataBlock,
        params: &SelectorParams,
        rng: &mut R,
    ) -> Result<SelectionResult> {
        if params.shots == 0 {
            return Err(Error::InvalidConfig("shot count q must be at least 1".into()));
        }
        self.descend(block, params.start_index, |est, blk, prefix| {
            est.paired(blk, prefix, params.shots, params.pairing, rng)
        })
    }

    /// Descent driven by exact conditional expectations.
    pub fn select_exact(&mut self, block: &DataBlock, start_index: usize) -> Result<SelectionResult> {
        self.descend(block, start_index, |est, blk, prefix| est.exact_paired(blk, prefix))
    }

    /// Descent with a caller-supplied candidate oracle returning `(z_j^+, z_j^-)`
    /// for the prefix `x_0 .. x_{j-1}`.
    pub fn descend<F>(&mut self, block: &DataBlock, start_index: usize, mut oracle: F) -> Result<SelectionResult>
    where
        F: FnMut(&mut ConditionalEstimator, &DataBlock, &[i8]) -> Result<(f64, f64)>,
    {
        let n = self.estimator.synthesizer().n();
        if block.len() != n {
            return Err(Error::InvalidConfig(format!(
                "block length {} does not match n = {n}",
                block.len()
            )));
        }
        if start_index < 1 || start_index >= n {
            return Err(Error::InvalidConfig(format!(
                "start index m must satisfy 1 <= m <= n - 1, got m = {start_index}, n = {n}"
            )));
        }
        let mut signs = vec![1i8; start_index];
        signs.reserve(n - start_index);
        let mut trace = SelectionTrace::default();
        for j in start_index..n {
            let (z_plus, z_minus) = oracle(&mut self.estimator, block, &signs)?;
            if trace.initial.is_none() {
                trace.initial = Some(0.5 * (z_plus + z_minus));
            }
            let chosen = if z_plus <= z_minus { 1 } else { -1 };
            trace.steps.push(TraceStep {
                index: j,
                z_plus,
                z_minus,
                chosen,
            });
            signs.push(chosen);
        }
        finish(self.estimator.synthesizer(), block, SignVector::new(signs)?, trace)
    }
}

fn finish(
    synth: &Synthesizer,
    block: &DataBlock,
    signs: SignVector,
    trace: SelectionTrace,
) -> Result<SelectionResult> {
    let signal = synth.synthesize(block, &signs)?;
    let final_cf = crest_factor(&signal, synth.avg_power())?;
    Ok(SelectionResult {
        signs,
        trace,
        final_cf,
        final_papr_db: cf_to_papr_db(final_cf),
    })
}

/// Conditional-expectation descent with `q`-shot estimates, deciding signs
/// `m .. n-1`.
pub fn select_signs<R: RngCore + ?Sized>(
    block: &DataBlock,
    config: &OfdmConfig,
    q: usize,
    m: usize,
    rng: &mut R,
) -> Result<SelectionResult> {
    SignSelector::new(config).select(block, &SelectorParams::new(q, m), rng)
}

/// Descent with exact conditional expectations (small `n` only).
pub fn select_signs_exact(block: &DataBlock, config: &OfdmConfig, m: usize) -> Result<SelectionResult> {
    SignSelector::new(config).select_exact(block, m)
}

/// Lowest crest factor among the candidate sign vectors; ties keep the
/// earliest candidate.
pub fn best_of_candidates<I>(block: &DataBlock, config: &OfdmConfig, candidates: I) -> Result<SelectionResult>
where
    I: IntoIterator<Item = SignVector>,
{
    let synth = Synthesizer::new(config);
    let mut ws = synth.workspace();
    let mut best: Option<(f64, SignVector)> = None;
    for cand in candidates {
        if cand.len() != config.n() || block.len() != config.n() {
            return Err(Error::InvalidConfig(format!(
                "candidate of length {} for n = {}",
                cand.len(),
                config.n()
            )));
        }
        let cf = synth.crest_factor_of(block, cand.as_slice(), &mut ws);
        if best.as_ref().is_none_or(|(b, _)| cf < *b) {
            best = Some((cf, cand));
        }
    }
    let (_, signs) = best.ok_or_else(|| Error::InvalidConfig("no candidates".into()))?;
    finish(&synth, block, signs, SelectionTrace::default())
}

/// Global minimizer of the crest factor over all `2^(n-1)` sign vectors
/// with `x_0 = +1`.
pub fn exhaustive_best_signs(block: &DataBlock, config: &OfdmConfig) -> Result<SelectionResult> {
    let n = config.n();
    if n > MAX_EXHAUSTIVE_N {
        return Err(Error::Capacity(format!(
            "exhaustive search over n = {n} exceeds the limit of {MAX_EXHAUSTIVE_N}"
        )));
    }
    best_of_candidates(
        block,
        config,
        (0u64..1 << (n - 1)).map(|bits| SignVector::from_bits(bits << 1, n)),
    )
}

/// Best of `k` uniformly random sign vectors with `x_0 = +1`.
pub fn slm_random_baseline<R: Rng + ?Sized>(
    block: &DataBlock,
    config: &OfdmConfig,
    k: usize,
    rng: &mut R,
) -> Result<SelectionResult> {
    if k == 0 {
        return Err(Error::InvalidConfig("candidate count K must be at least 1".into()));
    }
    let n = config.n();
    let candidates: Vec<SignVector> = (0..k)
        .map(|_| {
            let mut v: Vec<i8> = (0..n).map(|_| if rng.gen::<bool>() { -1 } else { 1 }).collect();
            v[0] = 1;
            SignVector::new(v).expect("+-1 entries")
        })
        .collect();
    best_of_candidates(block, config, candidates)
}

/// Rate loss in bits per complex symbol when the signs of symbols
/// `m .. n-1` are discarded at the receiver: `(n - m) / n`.
pub fn rate_loss(m: usize, n: usize) -> Result<f64> {
    if n == 0 || m > n {
        return Err(Error::Domain(format!(
            "rate loss needs 0 <= m <= n and n > 0, got m = {m}, n = {n}"
        )));
    }
    Ok((n - m) as f64 / n as f64)
}

/// Element-wise `x_k c_k`.
pub fn apply_signs(block: &DataBlock, signs: &SignVector) -> Result<DataBlock> {
    if block.len() != signs.len() {
        return Err(Error::InvalidConfig("block and sign lengths differ".into()));
    }
    Ok(DataBlock::from_symbols(
        block
            .symbols()
            .iter()
            .zip(signs.as_slice())
            .map(|(&c, &s)| c * f64::from(s))
            .collect(),
    ))
}

/// Sign-discarding detection: maps each received symbol to its canonical
/// representative.
pub fn decode_discarding_signs(received: &DataBlock, constellation: &Constellation) -> Result<Vec<Complex64>> {
    received
        .symbols()
        .iter()
        .map(|&c| constellation.canonical_representative(c))
        .collect()
}

/// True iff sign-discarding detection of `transmitted` recovers the
/// canonical form of `data`.
pub fn symbols_transparent(data: &DataBlock, transmitted: &DataBlock, constellation: &Constellation) -> bool {
    if data.len() != transmitted.len() {
        return false;
    }
    match (
        decode_discarding_signs(data, constellation),
        decode_discarding_signs(transmitted, constellation),
    ) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    }
}

/// True iff a receiver that discards symbol signs recovers `block` after
/// the transmitter applied `signs`.
pub fn verify_sign_transparency(block: &DataBlock, signs: &SignVector, constellation: &Constellation) -> bool {
    match apply_signs(block, signs) {
        Ok(tx) => symbols_transparent(block, &tx, constellation),
        Err(_) => false,
    }
}
