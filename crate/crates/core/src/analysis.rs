//! Statistical characterization of crest-factor distributions: empirical
//! CCDFs, effective PAPR read-off, the full expectation `mu`, samples of the
//! partial expectation `Z_m`, and the bounded-differences (McDiarmid) tail.

use rand::Rng;
use rayon::prelude::*;

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::estimator::ConditionalEstimator;
use crate::rng::block_rng;
use crate::waveform::{cf_to_papr_db, OfdmConfig};

/// Default CCDF level for the effective PAPR.
pub const DEFAULT_CCDF_LEVEL: f64 = 1e-3;

/// Samples needed per unit of tail probability before a quantile is read off.
pub const MIN_TAIL_EXCEEDANCES: f64 = 10.0;

/// Sorted sample with empirical CDF/CCDF queries.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    sorted: Vec<f64>,
}

/// Builds the empirical distribution of `values`.
pub fn empirical_ccdf(values: &[f64]) -> Result<EmpiricalDistribution> {
    EmpiricalDistribution::new(values.to_vec())
}

impl EmpiricalDistribution {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("empirical distribution of an empty sample".into()));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Domain("sample contains NaN".into()));
        }
        values.sort_by(f64::total_cmp);
        Ok(EmpiricalDistribution { sorted: values })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted_values(&self) -> &[f64] {
        &self.sorted
    }

    /// Fraction of the sample strictly greater than `v`.
    pub fn ccdf(&self, v: f64) -> f64 {
        let at_or_below = self.sorted.partition_point(|&x| x <= v);
        (self.sorted.len() - at_or_below) as f64 / self.sorted.len() as f64
    }

    /// Fraction of the sample at or below `v`.
    pub fn cdf(&self, v: f64) -> f64 {
        1.0 - self.ccdf(v)
    }

    pub fn min(&self) -> f64 {
        self.sorted[0]
    }

    pub fn max(&self) -> f64 {
        self.sorted[self.sorted.len() - 1]
    }

    pub fn mean(&self) -> f64 {
        self.sorted.iter().sum::<f64>() / self.sorted.len() as f64
    }

    /// Sample standard deviation (`n - 1` denominator).
    pub fn std_dev(&self) -> f64 {
        let n = self.sorted.len();
        if n < 2 {
            return 0.0;
        }
        let mean = self.mean();
        let ss: f64 = self.sorted.iter().map(|v| (v - mean).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    }

    /// Linear-interpolated quantile, `p` in `[0, 1]`.
    pub fn quantile(&self, p: f64) -> f64 {
        let pos = p.clamp(0.0, 1.0) * (self.sorted.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = (lo + 1).min(self.sorted.len() - 1);
        let w = pos - lo as f64;
        self.sorted[lo] + w * (self.sorted[hi] - self.sorted[lo])
    }

    pub fn interquartile_range(&self) -> f64 {
        self.quantile(0.75) - self.quantile(0.25)
    }

    /// Value at which the CCDF crosses `level`, interpolated linearly in
    /// `(value, ln CCDF)` between neighbouring order statistics. No
    /// resolvability check.
    pub fn tail_point(&self, level: f64) -> f64 {
        let n = self.sorted.len();
        let nf = n as f64;
        // order statistic i (0-based) has CCDF (n - 1 - i) / n when untied
        let t = (nf * (1.0 - level) - 1.0).clamp(0.0, (n - 1) as f64);
        let lo = t.floor() as usize;
        let hi = (lo + 1).min(n - 1);
        let (v_lo, v_hi) = (self.sorted[lo], self.sorted[hi]);
        if hi == lo || v_lo == v_hi {
            return v_lo;
        }
        let p_lo = (n - 1 - lo) as f64 / nf;
        let p_hi = (n - 1 - hi) as f64 / nf;
        let level = level.clamp(p_hi, p_lo);
        let w = if p_hi > 0.0 {
            (p_lo.ln() - level.ln()) / (p_lo.ln() - p_hi.ln())
        } else {
            (p_lo - level) / (p_lo - p_hi)
        };
        v_lo + w * (v_hi - v_lo)
    }
}

fn check_level(level: f64) -> Result<()> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!("CCDF level must lie in (0, 1), got {level}")));
    }
    Ok(())
}

/// True when `samples` suffice to read off the `level` tail point.
pub fn level_resolvable(samples: usize, level: f64) -> bool {
    samples as f64 * level >= MIN_TAIL_EXCEEDANCES * (1.0 - 1e-9)
}

/// The value whose CCDF equals `level` (for PAPR samples in dB, the
/// effective PAPR in dB). Refuses to extrapolate: at least `10 / level`
/// samples are required.
pub fn effective_papr(dist: &EmpiricalDistribution, level: f64) -> Result<f64> {
    check_level(level)?;
    if !level_resolvable(dist.len(), level) {
        return Err(Error::Capacity(format!(
            "{} samples cannot resolve CCDF level {level}; need at least {}",
            dist.len(),
            (MIN_TAIL_EXCEEDANCES / level).ceil()
        )));
    }
    Ok(dist.tail_point(level))
}

/// Approximate standard error of [`effective_papr`], from the binomial
/// spread of the exceedance count mapped through the empirical quantile.
pub fn effective_papr_stderr(dist: &EmpiricalDistribution, level: f64) -> Result<f64> {
    check_level(level)?;
    let delta = (level * (1.0 - level) / dist.len() as f64).sqrt();
    let lower = dist.tail_point((level + delta).min(1.0 - 1e-12));
    let upper = dist.tail_point((level - delta).max(f64::MIN_POSITIVE));
    Ok(0.5 * (upper - lower))
}

/// Mean with standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub samples: usize,
}

const MU_CHUNK: usize = 1024;

/// Monte Carlo estimate of the full expectation `mu = E[f(X, C)]` over
/// i.i.d. data blocks and sign vectors.
pub fn estimate_mu(config: &OfdmConfig, num_samples: usize, seed: u64) -> Result<MeanEstimate> {
    if num_samples == 0 {
        return Err(Error::InvalidConfig("need at least one sample".into()));
    }
    let n = config.n();
    let chunks = num_samples.div_ceil(MU_CHUNK);
    let partials: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map_init(
            || ConditionalEstimator::new(config),
            |est, chunk| {
                let mut rng = block_rng(seed, chunk as u64);
                let count = MU_CHUNK.min(num_samples - chunk * MU_CHUNK);
                let mut signs = vec![1i8; n];
                let (mut s, mut ss) = (0.0, 0.0);
                for _ in 0..count {
                    let block = config.constellation().sample_block(n, &mut rng)?;
                    for x in signs.iter_mut() {
                        *x = if rng.gen::<bool>() { -1 } else { 1 };
                    }
                    let f = est.crest_factor(&block, &signs)?;
                    s += f;
                    ss += f * f;
                }
                Ok((s, ss))
            },
        )
        .collect::<Result<_>>()?;
    let (sum, sum_sq) = partials.iter().fold((0.0, 0.0), |(a, b), (s, ss)| (a + s, b + ss));
    let nf = num_samples as f64;
    let mean = sum / nf;
    let var = if num_samples > 1 {
        ((sum_sq - sum * mean) / (nf - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(MeanEstimate {
        mean,
        std_err: (var / nf).sqrt(),
        samples: num_samples,
    })
}

/// How each `Z_m` sample is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartialExpectation {
    /// `q`-shot sample average.
    Shots(usize),
    /// Full enumeration of the free signs (small `n - m` only).
    Exact,
}

/// Samples of the partial expectation `Z_m`: for each of `num_blocks`
/// random blocks (block `b` drawn from stream `b` of `seed`), the
/// conditional expected crest factor with `x_0 .. x_{m-1} = +1`.
pub fn estimate_partial_expectation_samples(
    config: &OfdmConfig,
    m: usize,
    num_blocks: usize,
    method: PartialExpectation,
    seed: u64,
) -> Result<Vec<f64>> {
    let n = config.n();
    if m >= n {
        return Err(Error::InvalidConfig(format!(
            "fixed prefix length m = {m} must be below n = {n}"
        )));
    }
    if method == PartialExpectation::Shots(0) {
        return Err(Error::InvalidConfig("shot count q must be at least 1".into()));
    }
    let prefix = vec![1i8; m];
    (0..num_blocks)
        .into_par_iter()
        .map_init(
            || ConditionalEstimator::new(config),
            |est, b| {
                let mut rng = block_rng(seed, b as u64);
                let block = config.constellation().sample_block(n, &mut rng)?;
                match method {
                    PartialExpectation::Shots(q) => est.estimate(&block, &prefix, q, &mut rng).map(|e| e.mean),
                    PartialExpectation::Exact => est.exact(&block, &prefix),
                }
            },
        )
        .collect()
}

/// One-sided bounded-differences tail: `P(Z_0 - mu >= alpha) <= exp(-2 alpha² p_a / d²)`.
///
/// Changing one data symbol moves the crest factor by at most
/// `d / sqrt(n p_a)`; summing the squared bounds over `n` symbols leaves
/// `d² / p_a`, so `n` drops out.
pub fn mcdiarmid_tail(alpha: f64, constellation: &Constellation) -> Result<f64> {
    if !(alpha >= 0.0) {
        return Err(Error::Domain(format!("alpha must be non-negative, got {alpha}")));
    }
    Ok((-2.0 * alpha * alpha / constellation.distance_power_ratio()).exp())
}

/// Deviation `alpha` at which [`mcdiarmid_tail`] equals `prob`.
pub fn mcdiarmid_alpha(prob: f64, constellation: &Constellation) -> Result<f64> {
    if !(prob > 0.0 && prob <= 1.0) {
        return Err(Error::Domain(format!("probability must lie in (0, 1], got {prob}")));
    }
    Ok((constellation.distance_power_ratio() * (1.0 / prob).ln() / 2.0).sqrt())
}

/// PAPR (dB) corresponding to a crest factor of `mu + alpha`.
pub fn bound_papr_db(mu: f64, alpha: f64) -> Result<f64> {
    if !(mu >= 0.0 && alpha >= 0.0) {
        return Err(Error::Domain(format!(
            "mu and alpha must be non-negative, got {mu}, {alpha}"
        )));
    }
    Ok(cf_to_papr_db(mu + alpha))
}

/// Bound curve anchored at `mu`: `min(1, exp(-2 (gamma - mu)² p_a / d²))`
/// for crest factor `gamma >= mu`, and `1` below `mu`.
pub fn mcdiarmid_ccdf(gamma_cf: f64, mu: f64, constellation: &Constellation) -> f64 {
    if gamma_cf <= mu {
        1.0
    } else {
        (-2.0 * (gamma_cf - mu).powi(2) / constellation.distance_power_ratio()).exp().min(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub mu: f64,
    pub alpha: f64,
    pub tail_prob: f64,
    pub papr_bound_db: f64,
}

/// Probabilistic PAPR bound at tail probability `prob` around `mu`.
pub fn bound_report(mu: f64, prob: f64, constellation: &Constellation) -> Result<BoundReport> {
    let alpha = mcdiarmid_alpha(prob, constellation)?;
    Ok(BoundReport {
        mu,
        alpha,
        tail_prob: prob,
        papr_bound_db: bound_papr_db(mu, alpha)?,
    })
}
