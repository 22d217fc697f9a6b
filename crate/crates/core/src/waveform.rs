//! Oversampled OFDM symbol synthesis and peak metrics.
//!
//! The symbol duration is normalized to one, so sample `i` of an `L`-times
//! oversampled symbol sits at `t = i / (L n)`:
//!
//! ```text
//! s[i] = 1/sqrt(n) * sum_k x_k c_k exp(j 2 pi k i / (L n)),   i = 0 .. L n - 1
//! ```
//!
//! This is a zero-padded inverse DFT of length `L n`; [`Synthesizer`] caches
//! the FFT plan and the carrier roots so that the estimator can evaluate
//! millions of candidate signals.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::constellation::{Constellation, ConstellationKind, DataBlock};
use crate::error::{Error, Result};

pub const DEFAULT_OVERSAMPLING: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct OfdmConfig {
    n: usize,
    oversampling: usize,
    constellation: Constellation,
}

impl OfdmConfig {
    pub fn new(n: usize, oversampling: usize, kind: ConstellationKind) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidConfig(format!(
                "subcarrier count must be at least 2, got {n}"
            )));
        }
        if oversampling < 1 {
            return Err(Error::InvalidConfig(
                "oversampling factor must be at least 1".into(),
            ));
        }
        Ok(OfdmConfig {
            n,
            oversampling,
            constellation: Constellation::new(kind),
        })
    }

    /// `n` subcarriers at the default oversampling factor of 4.
    pub fn with_defaults(n: usize, kind: ConstellationKind) -> Result<Self> {
        Self::new(n, DEFAULT_OVERSAMPLING, kind)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn oversampling(&self) -> usize {
        self.oversampling
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    /// Number of time samples per symbol, `L n`.
    pub fn grid_len(&self) -> usize {
        self.n * self.oversampling
    }
}

/// Per-subcarrier signs, each `+1` or `-1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SignVector(Vec<i8>);

impl SignVector {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if let Some(bad) = signs.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::Domain(format!("sign entries must be +-1, got {bad}")));
        }
        Ok(SignVector(signs))
    }

    pub fn ones(n: usize) -> Self {
        SignVector(vec![1; n])
    }

    /// Sign vector whose entry `k` is `-1` iff bit `k` of `bits` is set.
    pub fn from_bits(bits: u64, n: usize) -> Self {
        debug_assert!(n <= 64);
        SignVector((0..n).map(|k| if bits >> k & 1 == 1 { -1 } else { 1 }).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn negated(&self) -> Self {
        SignVector(self.0.iter().map(|&s| -s).collect())
    }
}

impl std::ops::Index<usize> for SignVector {
    type Output = i8;

    fn index(&self, k: usize) -> &i8 {
        &self.0[k]
    }
}

/// `L n` complex samples of one OFDM symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal(Vec<Complex64>);

impl SampledSignal {
    pub fn samples(&self) -> &[Complex64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }
}

/// Cached transform state for one [`OfdmConfig`]. Immutable and shareable
/// between threads; callers bring their own [`Workspace`].
#[derive(Clone)]
pub struct Synthesizer {
    n: usize,
    grid_len: usize,
    fft: Arc<dyn Fft<f64>>,
    // exp(j 2 pi r / (L n)) for r in 0..L n
    roots: Vec<Complex64>,
    avg_power: f64,
}

impl std::fmt::Debug for Synthesizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Synthesizer")
            .field("n", &self.n)
            .field("grid_len", &self.grid_len)
            .finish()
    }
}

/// Scratch buffers for a [`Synthesizer`].
#[derive(Debug, Clone)]
pub struct Workspace {
    pub(crate) buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Synthesizer {
    pub fn new(config: &OfdmConfig) -> Self {
        let grid_len = config.grid_len();
        let fft = FftPlanner::new().plan_fft_inverse(grid_len);
        let step = 2.0 * std::f64::consts::PI / grid_len as f64;
        let roots = (0..grid_len)
            .map(|r| Complex64::from_polar(1.0, step * r as f64))
            .collect();
        Synthesizer {
            n: config.n(),
            grid_len,
            fft,
            roots,
            avg_power: config.constellation().avg_power(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn grid_len(&self) -> usize {
        self.grid_len
    }

    pub fn avg_power(&self) -> f64 {
        self.avg_power
    }

    pub fn workspace(&self) -> Workspace {
        Workspace {
            buf: vec![Complex64::default(); self.grid_len],
            scratch: vec![Complex64::default(); self.fft.get_inplace_scratch_len()],
        }
    }

    /// Unscaled transform: `ws.buf[i] = sum_k weighted[k] exp(j 2 pi k i / (L n))`.
    pub fn transform(&self, weighted: &[Complex64], ws: &mut Workspace) {
        debug_assert_eq!(weighted.len(), self.n);
        ws.buf[..self.n].copy_from_slice(weighted);
        ws.buf[self.n..].fill(Complex64::default());
        self.fft.process_with_scratch(&mut ws.buf, &mut ws.scratch);
    }

    /// Like [`transform`](Self::transform) but fills the active bins through a
    /// callback, avoiding an intermediate copy.
    pub(crate) fn transform_with(&self, ws: &mut Workspace, fill: impl FnOnce(&mut [Complex64])) {
        fill(&mut ws.buf[..self.n]);
        ws.buf[self.n..].fill(Complex64::default());
        self.fft.process_with_scratch(&mut ws.buf, &mut ws.scratch);
    }

    /// Unscaled carrier `k` sampled on the grid: `exp(j 2 pi k i / (L n))`.
    pub fn carrier(&self, k: usize, out: &mut [Complex64]) {
        debug_assert_eq!(out.len(), self.grid_len);
        let mut r = 0usize;
        for v in out.iter_mut() {
            *v = self.roots[r];
            r += k;
            if r >= self.grid_len {
                r %= self.grid_len;
            }
        }
    }

    /// Crest factor from the peak of an unscaled transform output.
    #[inline]
    pub fn cf_from_peak_power(&self, unscaled_peak_power: f64) -> f64 {
        (unscaled_peak_power / (self.n as f64 * self.avg_power)).sqrt()
    }

    /// Crest factor of `signs ∘ block`, where `signs` may be any real weights.
    pub fn crest_factor_of(&self, block: &DataBlock, signs: &[i8], ws: &mut Workspace) -> f64 {
        let c = block.symbols();
        self.transform_with(ws, |bins| {
            for ((b, &s), &ck) in bins.iter_mut().zip(signs).zip(c) {
                *b = if s > 0 { ck } else { -ck };
            }
        });
        self.cf_from_peak_power(peak_power(&ws.buf))
    }

    pub fn synthesize(&self, block: &DataBlock, signs: &SignVector) -> Result<SampledSignal> {
        check_lengths(block, signs, self.n)?;
        let weighted = weighted_symbols(block, signs);
        let mut ws = self.workspace();
        self.transform(&weighted, &mut ws);
        let scale = 1.0 / (self.n as f64).sqrt();
        Ok(SampledSignal(ws.buf.iter().map(|v| v * scale).collect()))
    }
}

fn check_lengths(block: &DataBlock, signs: &SignVector, n: usize) -> Result<()> {
    if block.len() != n || signs.len() != n {
        return Err(Error::InvalidConfig(format!(
            "block length {} and sign length {} must both equal n = {n}",
            block.len(),
            signs.len()
        )));
    }
    Ok(())
}

fn weighted_symbols(block: &DataBlock, signs: &SignVector) -> Vec<Complex64> {
    block
        .symbols()
        .iter()
        .zip(signs.as_slice())
        .map(|(&c, &s)| c * f64::from(s))
        .collect()
}

/// Synthesizes the oversampled symbol with an FFT of length `L n`.
pub fn synthesize(block: &DataBlock, signs: &SignVector, config: &OfdmConfig) -> Result<SampledSignal> {
    Synthesizer::new(config).synthesize(block, signs)
}

/// Same samples as [`synthesize`], evaluated as a direct carrier sum.
/// `O(L n²)`; kept as a cross-check for the FFT path.
pub fn synthesize_direct(
    block: &DataBlock,
    signs: &SignVector,
    config: &OfdmConfig,
) -> Result<SampledSignal> {
    let n = config.n();
    check_lengths(block, signs, n)?;
    let grid_len = config.grid_len();
    let scale = 1.0 / (n as f64).sqrt();
    let weighted = weighted_symbols(block, signs);
    let samples = (0..grid_len)
        .map(|i| {
            let sum: Complex64 = weighted
                .iter()
                .enumerate()
                .map(|(k, &a)| {
                    let phase = 2.0 * std::f64::consts::PI * ((k * i) % grid_len) as f64 / grid_len as f64;
                    a * Complex64::from_polar(1.0, phase)
                })
                .sum();
            sum * scale
        })
        .collect();
    Ok(SampledSignal(samples))
}

/// Largest `|v|²` in a slice.
#[inline]
pub fn peak_power(samples: &[Complex64]) -> f64 {
    samples.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max)
}

/// Peak-to-average power ratio (linear): `max |s|² / p_a`.
pub fn papr(signal: &SampledSignal, avg_power: f64) -> Result<f64> {
    if !(avg_power > 0.0) {
        return Err(Error::Domain(format!(
            "average power must be positive, got {avg_power}"
        )));
    }
    if signal.is_empty() {
        return Err(Error::Domain("empty signal".into()));
    }
    Ok(peak_power(signal.samples()) / avg_power)
}

pub fn papr_db(signal: &SampledSignal, avg_power: f64) -> Result<f64> {
    papr(signal, avg_power).map(to_db)
}

/// Crest factor, `sqrt(PAPR)`; the quantity the sign selector minimizes.
pub fn crest_factor(signal: &SampledSignal, avg_power: f64) -> Result<f64> {
    papr(signal, avg_power).map(f64::sqrt)
}

/// Power ratio to dB.
#[inline]
pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Crest factor to PAPR in dB.
#[inline]
pub fn cf_to_papr_db(cf: f64) -> f64 {
    20.0 * cf.log10()
}
