//! Conditional expectation of the crest factor given a fixed sign prefix.
//!
//! For a block `c` and decided signs `x_0 .. x_{j-1}`, the target is
//!
//! ```text
//! z_j = E[ f(X, c) | X_0..X_{j-1} = prefix ],   X_j .. X_{n-1} i.i.d. uniform +-1
//! ```
//!
//! [`ConditionalEstimator`] evaluates it by a `q`-shot sample average (the
//! estimator used by the selector) or by full enumeration of the free signs
//! (the reference used in tests and exact-oracle runs).

use num_complex::Complex64;
use rand::RngCore;

use crate::constellation::DataBlock;
use crate::error::{Error, Result};
use crate::waveform::{peak_power, OfdmConfig, Synthesizer, Workspace};

/// Largest number of free signs [`exact_conditional_cf`] will enumerate.
pub const MAX_EXACT_FREE_SIGNS: usize = 22;

/// How the `+1` and `-1` candidates of one decision share random completions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShotPairing {
    /// Both candidates are evaluated on the same `q` completions.
    #[default]
    Common,
    /// Each candidate draws its own `q` completions.
    Independent,
}

/// A block together with the signs already decided for its first `j` subcarriers.
#[derive(Debug, Clone, Copy)]
pub struct ConditionalQuery<'a> {
    block: &'a DataBlock,
    prefix: &'a [i8],
    config: &'a OfdmConfig,
}

impl<'a> ConditionalQuery<'a> {
    pub fn new(block: &'a DataBlock, prefix: &'a [i8], config: &'a OfdmConfig) -> Result<Self> {
        validate(block, prefix, config.n())?;
        Ok(ConditionalQuery {
            block,
            prefix,
            config,
        })
    }

    pub fn block(&self) -> &'a DataBlock {
        self.block
    }

    pub fn prefix(&self) -> &'a [i8] {
        self.prefix
    }

    pub fn config(&self) -> &'a OfdmConfig {
        self.config
    }

    /// Number of decided signs, `j`.
    pub fn decided(&self) -> usize {
        self.prefix.len()
    }
}

fn validate(block: &DataBlock, prefix: &[i8], n: usize) -> Result<()> {
    if block.len() != n {
        return Err(Error::InvalidConfig(format!(
            "block length {} does not match n = {n}",
            block.len()
        )));
    }
    if prefix.len() > n {
        return Err(Error::InvalidConfig(format!(
            "prefix length {} exceeds n = {n}",
            prefix.len()
        )));
    }
    if prefix.iter().any(|&s| s != 1 && s != -1) {
        return Err(Error::Domain("prefix entries must be +-1".into()));
    }
    Ok(())
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    /// Standard error of the mean; zero when fewer than two shots or no
    /// randomness remained.
    pub std_err: f64,
    pub shots: usize,
}

/// Reusable evaluation state for one configuration: cached transform plus
/// scratch. Not shareable between threads; create one per worker.
#[derive(Debug, Clone)]
pub struct ConditionalEstimator {
    synth: Synthesizer,
    ws: Workspace,
    prefix_bins: Vec<Complex64>,
    carrier: Vec<Complex64>,
}

/// Feeds uniform random signs from 64-bit words.
struct SignBits<'r, R: RngCore + ?Sized> {
    rng: &'r mut R,
    word: u64,
    left: u32,
}

impl<'r, R: RngCore + ?Sized> SignBits<'r, R> {
    fn new(rng: &'r mut R) -> Self {
        SignBits { rng, word: 0, left: 0 }
    }

    #[inline]
    fn next_negative(&mut self) -> bool {
        if self.left == 0 {
            self.word = self.rng.next_u64();
            self.left = 64;
        }
        let bit = self.word & 1 == 1;
        self.word >>= 1;
        self.left -= 1;
        bit
    }
}

impl ConditionalEstimator {
    pub fn new(config: &OfdmConfig) -> Self {
        Self::from_synthesizer(Synthesizer::new(config))
    }

    pub fn from_synthesizer(synth: Synthesizer) -> Self {
        let ws = synth.workspace();
        ConditionalEstimator {
            prefix_bins: Vec::with_capacity(synth.n()),
            carrier: vec![Complex64::default(); synth.grid_len()],
            synth,
            ws,
        }
    }

    pub fn synthesizer(&self) -> &Synthesizer {
        &self.synth
    }

    fn check(&self, block: &DataBlock, prefix: &[i8]) -> Result<()> {
        validate(block, prefix, self.synth.n())
    }

    fn load_prefix(&mut self, block: &DataBlock, prefix: &[i8]) {
        self.prefix_bins.clear();
        self.prefix_bins.extend(
            block
                .symbols()
                .iter()
                .zip(prefix)
                .map(|(&c, &s)| if s > 0 { c } else { -c }),
        );
    }

    /// Crest factor of a fully specified sign vector.
    pub fn crest_factor(&mut self, block: &DataBlock, signs: &[i8]) -> Result<f64> {
        self.check(block, signs)?;
        if signs.len() != block.len() {
            return Err(Error::InvalidConfig("sign vector must cover every subcarrier".into()));
        }
        Ok(self.synth.crest_factor_of(block, signs, &mut self.ws))
    }

    /// One shot: crest factor with the loaded prefix, bin `j` set to `fixed`
    /// when given, and bins from `first_random` on drawn at random.
    fn shot<R: RngCore + ?Sized>(
        &mut self,
        block: &DataBlock,
        first_random: usize,
        fixed: Option<i8>,
        bits: &mut SignBits<'_, R>,
    ) -> f64 {
        let c = block.symbols();
        let j = self.prefix_bins.len();
        let prefix_bins = &self.prefix_bins;
        self.synth.transform_with(&mut self.ws, |bins| {
            bins[..j].copy_from_slice(prefix_bins);
            if let Some(s) = fixed {
                bins[j] = if s > 0 { c[j] } else { -c[j] };
            }
            for k in first_random..bins.len() {
                bins[k] = if bits.next_negative() { -c[k] } else { c[k] };
            }
        });
        self.synth.cf_from_peak_power(peak_power(&self.ws.buf))
    }

    /// `q`-shot sample average of `z_j`, with its standard error.
    pub fn estimate<R: RngCore + ?Sized>(
        &mut self,
        block: &DataBlock,
        prefix: &[i8],
        q: usize,
        rng: &mut R,
    ) -> Result<Estimate> {
        self.check(block, prefix)?;
        if q == 0 {
            return Err(Error::InvalidConfig("shot count q must be at least 1".into()));
        }
        if prefix.len() == block.len() {
            let f = self.synth.crest_factor_of(block, prefix, &mut self.ws);
            return Ok(Estimate {
                mean: f,
                std_err: 0.0,
                shots: q,
            });
        }
        self.load_prefix(block, prefix);
        let mut bits = SignBits::new(rng);
        let first_random = prefix.len();
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..q {
            let f = self.shot(block, first_random, None, &mut bits);
            sum += f;
            sum_sq += f * f;
        }
        Ok(summarize(sum, sum_sq, q))
    }

    /// Estimates of `z_j^+` and `z_j^-` for the decision on `x_j`, where
    /// `j = prefix.len()`.
    pub fn paired<R: RngCore + ?Sized>(
        &mut self,
        block: &DataBlock,
        prefix: &[i8],
        q: usize,
        pairing: ShotPairing,
        rng: &mut R,
    ) -> Result<(f64, f64)> {
        self.check(block, prefix)?;
        let n = block.len();
        let j = prefix.len();
        if j >= n {
            return Err(Error::InvalidConfig(format!(
                "no undecided sign left (j = {j}, n = {n})"
            )));
        }
        if q == 0 {
            return Err(Error::InvalidConfig("shot count q must be at least 1".into()));
        }
        self.load_prefix(block, prefix);

        // Last decision: nothing random remains.
        if j == n - 1 {
            let mut bits = SignBits::new(rng);
            let plus = self.shot(block, n, Some(1), &mut bits);
            let minus = self.shot(block, n, Some(-1), &mut bits);
            return Ok((plus, minus));
        }

        let mut bits = SignBits::new(rng);
        match pairing {
            ShotPairing::Common => {
                let cj = block.symbols()[j];
                self.synth.carrier(j, &mut self.carrier);
                for v in self.carrier.iter_mut() {
                    *v = (*v * cj).conj();
                }
                let cj_power = cj.norm_sqr();
                let (mut sum_plus, mut sum_minus) = (0.0, 0.0);
                for _ in 0..q {
                    // bin j stays empty; the two candidates differ by +-c_j times carrier j
                    let c = block.symbols();
                    let prefix_bins = &self.prefix_bins;
                    self.synth.transform_with(&mut self.ws, |bins| {
                        bins[..j].copy_from_slice(prefix_bins);
                        bins[j] = Complex64::default();
                        for k in j + 1..bins.len() {
                            bins[k] = if bits.next_negative() { -c[k] } else { c[k] };
                        }
                    });
                    let (mut peak_plus, mut peak_minus) = (0.0f64, 0.0f64);
                    for (b, v) in self.ws.buf.iter().zip(&self.carrier) {
                        let base = b.norm_sqr();
                        // Re(b * conj(c_j e_j))
                        let cross = 2.0 * (b.re * v.re - b.im * v.im);
                        peak_plus = peak_plus.max(base + cross);
                        peak_minus = peak_minus.max(base - cross);
                    }
                    sum_plus += self.synth.cf_from_peak_power(peak_plus + cj_power);
                    sum_minus += self.synth.cf_from_peak_power(peak_minus + cj_power);
                }
                Ok((sum_plus / q as f64, sum_minus / q as f64))
            }
            ShotPairing::Independent => {
                let mut sum_plus = 0.0;
                for _ in 0..q {
                    sum_plus += self.shot(block, j + 1, Some(1), &mut bits);
                }
                let mut sum_minus = 0.0;
                for _ in 0..q {
                    sum_minus += self.shot(block, j + 1, Some(-1), &mut bits);
                }
                Ok((sum_plus / q as f64, sum_minus / q as f64))
            }
        }
    }

    /// Exact `z_j` by enumerating all `2^(n-j)` completions.
    pub fn exact(&mut self, block: &DataBlock, prefix: &[i8]) -> Result<f64> {
        self.check(block, prefix)?;
        let n = block.len();
        let free = n - prefix.len();
        if free > MAX_EXACT_FREE_SIGNS {
            return Err(Error::Capacity(format!(
                "exact enumeration of {free} free signs exceeds the limit of {MAX_EXACT_FREE_SIGNS}"
            )));
        }
        self.load_prefix(block, prefix);
        let j = prefix.len();
        let c = block.symbols();
        let mut acc = CompensatedSum::default();
        for pattern in 0u64..(1u64 << free) {
            let prefix_bins = &self.prefix_bins;
            self.synth.transform_with(&mut self.ws, |bins| {
                bins[..j].copy_from_slice(prefix_bins);
                for (offset, k) in (j..n).enumerate() {
                    bins[k] = if pattern >> offset & 1 == 1 { -c[k] } else { c[k] };
                }
            });
            acc.add(self.synth.cf_from_peak_power(peak_power(&self.ws.buf)));
        }
        Ok(acc.total() / (1u64 << free) as f64)
    }

    /// Exact `z_j^+` and `z_j^-`.
    pub fn exact_paired(&mut self, block: &DataBlock, prefix: &[i8]) -> Result<(f64, f64)> {
        self.check(block, prefix)?;
        if prefix.len() >= block.len() {
            return Err(Error::InvalidConfig("no undecided sign left".into()));
        }
        let mut ext = Vec::with_capacity(prefix.len() + 1);
        ext.extend_from_slice(prefix);
        ext.push(1);
        let plus = self.exact(block, &ext)?;
        *ext.last_mut().unwrap() = -1;
        let minus = self.exact(block, &ext)?;
        Ok((plus, minus))
    }
}

fn summarize(sum: f64, sum_sq: f64, q: usize) -> Estimate {
    let qf = q as f64;
    let mean = sum / qf;
    let std_err = if q > 1 {
        let var = ((sum_sq - sum * mean) / (qf - 1.0)).max(0.0);
        (var / qf).sqrt()
    } else {
        0.0
    };
    Estimate {
        mean,
        std_err,
        shots: q,
    }
}

/// Neumaier summation; the enumeration oracle sums up to 2^22 terms.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `q`-shot sample average of the conditional crest factor.
pub fn estimate_conditional_cf<R: RngCore + ?Sized>(
    query: &ConditionalQuery<'_>,
    q: usize,
    rng: &mut R,
) -> Result<f64> {
    ConditionalEstimator::new(query.config)
        .estimate(query.block, query.prefix, q, rng)
        .map(|e| e.mean)
}

/// Conditional crest factor by exhaustive enumeration of the free signs.
pub fn exact_conditional_cf(query: &ConditionalQuery<'_>) -> Result<f64> {
    ConditionalEstimator::new(query.config).exact(query.block, query.prefix)
}

/// `(z_j^+, z_j^-)` estimates on common random completions.
pub fn paired_candidate_estimates<R: RngCore + ?Sized>(
    query: &ConditionalQuery<'_>,
    q: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    ConditionalEstimator::new(query.config).paired(
        query.block,
        query.prefix,
        q,
        ShotPairing::Common,
        rng,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::ConstellationKind;
    use crate::rng::seeded;
    use crate::waveform::{crest_factor, synthesize, SignVector};

    fn setup(n: usize, kind: ConstellationKind, seed: u64) -> (OfdmConfig, DataBlock) {
        let cfg = OfdmConfig::with_defaults(n, kind).unwrap();
        let block = cfg.constellation().sample_block(n, &mut seeded(seed)).unwrap();
        (cfg, block)
    }

    #[test]
    fn full_prefix_is_deterministic() {
        let (cfg, block) = setup(8, ConstellationKind::Qam16, 1);
        let x = SignVector::from_bits(0b1010_0110, 8);
        let f = crest_factor(&synthesize(&block, &x, &cfg).unwrap(), 10.0).unwrap();
        let q = ConditionalQuery::new(&block, x.as_slice(), &cfg).unwrap();
        for shots in [1, 7] {
            let e = estimate_conditional_cf(&q, shots, &mut seeded(0)).unwrap();
            assert!((e - f).abs() < 1e-12);
        }
        assert!((exact_conditional_cf(&q).unwrap() - f).abs() < 1e-12);
    }

    #[test]
    fn last_decision_is_exact() {
        let (cfg, block) = setup(8, ConstellationKind::Qam16, 2);
        let prefix = [1, -1, 1, 1, -1, -1, 1];
        let q = ConditionalQuery::new(&block, &prefix, &cfg).unwrap();
        let (p, m) = paired_candidate_estimates(&q, 3, &mut seeded(4)).unwrap();
        let mut est = ConditionalEstimator::new(&cfg);
        let mut full = prefix.to_vec();
        full.push(1);
        assert!((p - est.crest_factor(&block, &full).unwrap()).abs() < 1e-12);
        full[7] = -1;
        assert!((m - est.crest_factor(&block, &full).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn paired_mean_is_the_union_estimate() {
        // with common completions, (z+ + z-)/2 is the 2q-shot average over the
        // union of evaluated sign vectors; recompute it shot by shot
        let (cfg, block) = setup(12, ConstellationKind::Qam16, 3);
        let prefix = [1, 1, -1, 1];
        let mut est = ConditionalEstimator::new(&cfg);
        let (p, m) = est
            .paired(&block, &prefix, 9, ShotPairing::Common, &mut seeded(5))
            .unwrap();

        // the estimator consumes one continuous bit stream, LSB first
        let mut rng = seeded(5);
        let words: Vec<u64> = (0..2).map(|_| rng.next_u64()).collect();
        let mut bit = 0usize;
        let mut union = Vec::new();
        for _ in 0..9 {
            let mut x = prefix.to_vec();
            x.push(1);
            for _ in 5..12 {
                x.push(if words[bit / 64] >> (bit % 64) & 1 == 1 { -1 } else { 1 });
                bit += 1;
            }
            union.push(est.crest_factor(&block, &x).unwrap());
            x[4] = -1;
            union.push(est.crest_factor(&block, &x).unwrap());
        }
        let mean = union.iter().sum::<f64>() / union.len() as f64;
        assert!(((p + m) / 2.0 - mean).abs() < 1e-12);
    }

    #[test]
    fn exact_midpoint_identity() {
        for seed in 0..20 {
            let (cfg, block) = setup(10, ConstellationKind::Qam16, seed);
            let mut est = ConditionalEstimator::new(&cfg);
            let mut rng = seeded(100 + seed);
            let prefix: Vec<i8> = (0..(seed as usize % 9))
                .map(|_| if rng.next_u32() & 1 == 1 { -1 } else { 1 })
                .collect();
            let z = est.exact(&block, &prefix).unwrap();
            let (p, m) = est.exact_paired(&block, &prefix).unwrap();
            assert!((z - (p + m) / 2.0).abs() < 1e-12, "seed {seed}");
        }
    }

    #[test]
    fn qpsk_all_equal_n4_regression() {
        // Brute force over the 16 sign vectors, summing crest factors of the
        // direct carrier sums.
        let cfg = OfdmConfig::with_defaults(4, ConstellationKind::Qpsk).unwrap();
        let c = num_complex::Complex64::new(1.0, 1.0);
        let block = DataBlock::from_symbols(vec![c; 4]);
        let mut total = 0.0;
        for bits in 0..16u64 {
            let x = SignVector::from_bits(bits, 4);
            let s = crate::waveform::synthesize_direct(&block, &x, &cfg).unwrap();
            total += crest_factor(&s, 2.0).unwrap();
        }
        let brute = total / 16.0;
        let q = ConditionalQuery::new(&block, &[], &cfg).unwrap();
        let z0 = exact_conditional_cf(&q).unwrap();
        assert!((z0 - brute).abs() < 1e-12);
        assert!((z0 - 1.537_370_360_793_896_2).abs() < 1e-12, "{z0:.17}");
    }

    #[test]
    fn guards() {
        let (cfg, block) = setup(24, ConstellationKind::Qpsk, 1);
        let q = ConditionalQuery::new(&block, &[1], &cfg).unwrap();
        assert!(matches!(exact_conditional_cf(&q), Err(Error::Capacity(_))));
        assert!(ConditionalQuery::new(&block, &[1, 0], &cfg).is_err());
        let long = vec![1i8; 25];
        assert!(ConditionalQuery::new(&block, &long, &cfg).is_err());
        let q = ConditionalQuery::new(&block, &[], &cfg).unwrap();
        assert!(estimate_conditional_cf(&q, 0, &mut seeded(0)).is_err());
        let full = vec![1i8; 24];
        let mut est = ConditionalEstimator::new(&cfg);
        assert!(est.paired(&block, &full, 4, ShotPairing::Common, &mut seeded(0)).is_err());
    }

    #[test]
    fn monte_carlo_agrees_with_enumeration() {
        let (cfg, block) = setup(10, ConstellationKind::Qam16, 7);
        let mut est = ConditionalEstimator::new(&cfg);
        let exact = est.exact(&block, &[]).unwrap();
        let mc = est.estimate(&block, &[], 10_000, &mut seeded(8)).unwrap();
        assert!((mc.mean - exact).abs() < 3.0 * mc.std_err, "{mc:?} vs {exact}");

        let prefix = [1, -1, -1, 1, 1];
        let (ep, em) = est.exact_paired(&block, &prefix).unwrap();
        for pairing in [ShotPairing::Common, ShotPairing::Independent] {
            // standard error of the difference from 40 replications of q = 250
            let diffs: Vec<f64> = (0..40)
                .map(|r| {
                    let (p, m) = est
                        .paired(&block, &prefix, 250, pairing, &mut seeded(1000 + r))
                        .unwrap();
                    p - m
                })
                .collect();
            let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
            let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (diffs.len() - 1) as f64;
            let se = (var / diffs.len() as f64).sqrt();
            assert!((mean - (ep - em)).abs() < 3.0 * se, "{pairing:?}: {mean} vs {}", ep - em);
        }
    }
}
