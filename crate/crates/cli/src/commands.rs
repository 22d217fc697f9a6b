//! Subcommand implementations. Each one is a pure function of its settings
//! and writes CSV to the given sink; progress goes to stderr.

use std::io::Write;

use anyhow::{bail, Result};
use papr_core::analysis::{
    bound_report, effective_papr, effective_papr_stderr, empirical_ccdf, estimate_mu,
    estimate_partial_expectation_samples, mcdiarmid_ccdf, EmpiricalDistribution, PartialExpectation,
};
use papr_core::experiment::{
    reduced_distribution, run_reduction, summarize, summarize_or_max, unreduced_distribution, BlockOutcome,
};
use papr_core::rng::block_rng;
use papr_core::selector::slm_random_baseline;
use papr_core::waveform::cf_to_papr_db;
use papr_core::{ConditionalEstimator, OfdmConfig};
use rayon::prelude::*;

use crate::settings::Settings;

pub const REDUCE_HEADER: [&str; 3] = ["block_id", "papr0_db", "papr1_db"];
pub const CCDF_HEADER: [&str; 3] = ["curve", "gamma_db", "ccdf"];
pub const SWEEP_HEADER: [&str; 4] = ["param", "value", "eff_papr_db", "stderr_db"];
pub const BOUND_HEADER: [&str; 4] = ["mu", "alpha", "level", "bound_db"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Method {
    /// Conditional-expectation sign descent
    Descent,
    /// Best of K random sign vectors
    Slm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepParam {
    Q,
    M,
    N,
}

impl SweepParam {
    fn name(self) -> &'static str {
        match self {
            SweepParam::Q => "q",
            SweepParam::M => "m",
            SweepParam::N => "n",
        }
    }
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn outcomes(settings: &Settings, method: Method) -> Result<Vec<BlockOutcome>> {
    let config = settings.ofdm()?;
    match method {
        Method::Descent => {
            let params = settings.selector()?;
            Ok(run_reduction(&config, &params, settings.blocks, settings.seed)?)
        }
        Method::Slm => slm_outcomes(&config, settings.slm_k, settings.blocks, settings.seed),
    }
}

fn slm_outcomes(config: &OfdmConfig, k: usize, blocks: usize, seed: u64) -> Result<Vec<BlockOutcome>> {
    let n = config.n();
    let ones = vec![1i8; n];
    let out = (0..blocks)
        .into_par_iter()
        .map_init(
            || ConditionalEstimator::new(config),
            |est, b| -> papr_core::Result<BlockOutcome> {
                let mut rng = block_rng(seed, b as u64);
                let block = config.constellation().sample_block(n, &mut rng)?;
                let cf_unreduced = est.crest_factor(&block, &ones)?;
                let r = slm_random_baseline(&block, config, k, &mut rng)?;
                Ok(BlockOutcome {
                    block_id: b,
                    cf_unreduced,
                    cf_reduced: r.final_cf,
                })
            },
        )
        .collect::<papr_core::Result<Vec<_>>>()?;
    Ok(out)
}

pub fn reduce(settings: &Settings, method: Method, sink: &mut dyn Write) -> Result<()> {
    eprintln!(
        "reduce: n={} mod={} L={} q={} m={} blocks={} seed={}",
        settings.n, settings.kind, settings.oversample, settings.shots, settings.start_index, settings.blocks, settings.seed
    );
    let outcomes = outcomes(settings, method)?;
    let summary = if settings.level_explicit {
        summarize(&outcomes, settings.level)?
    } else {
        summarize_or_max(&outcomes, settings.level)?
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(REDUCE_HEADER)?;
    for o in &outcomes {
        w.write_record([o.block_id.to_string(), fmt(o.papr_unreduced_db()), fmt(o.papr_reduced_db())])?;
    }
    w.write_record(["summary".to_string(), fmt(summary.unreduced_db), fmt(summary.reduced_db)])?;
    w.flush()?;
    if summary.level > 0.0 {
        eprintln!(
            "effective PAPR at {}: {:.3} dB -> {:.3} dB (reduction {:.3} dB)",
            summary.level,
            summary.unreduced_db,
            summary.reduced_db,
            summary.reduction_db()
        );
    } else {
        eprintln!(
            "too few blocks for level {}; summary row holds sample maxima ({:.3} dB -> {:.3} dB)",
            settings.level, summary.unreduced_db, summary.reduced_db
        );
    }
    Ok(())
}

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let start = (lo / step).floor() as i64;
    let stop = (hi / step).ceil() as i64;
    (start..=stop).map(|i| i as f64 * step).collect()
}

pub fn ccdf(settings: &Settings, z_indices: &[usize], grid_step: f64, sink: &mut dyn Write) -> Result<()> {
    if !(grid_step > 0.0) {
        bail!("--grid-step must be positive");
    }
    let config = settings.ofdm()?;
    for &m in z_indices {
        if m >= settings.n {
            bail!("--z-index {m} must be below n = {}", settings.n);
        }
    }
    eprintln!(
        "ccdf: n={} mod={} q={} m={} blocks={} z-index={:?}",
        settings.n, settings.kind, settings.shots, settings.start_index, settings.blocks, z_indices
    );
    let outcomes = run_reduction(&config, &settings.selector()?, settings.blocks, settings.seed)?;
    // X ∘ C is distributed like C, so the unreduced crest factors sample f(X, C)
    let mu = outcomes.iter().map(|o| o.cf_unreduced).sum::<f64>() / outcomes.len() as f64;

    let mut curves: Vec<(String, EmpiricalDistribution)> = vec![
        ("unreduced".into(), unreduced_distribution(&outcomes)?),
        (format!("reduced_m{}", settings.start_index), reduced_distribution(&outcomes)?),
    ];
    for &m in z_indices {
        let z = estimate_partial_expectation_samples(
            &config,
            m,
            settings.blocks,
            PartialExpectation::Shots(settings.shots),
            settings.seed,
        )?;
        let db: Vec<f64> = z.iter().map(|&v| cf_to_papr_db(v)).collect();
        curves.push((format!("z{m}"), empirical_ccdf(&db)?));
    }
    let lo = curves.iter().map(|(_, d)| d.min()).fold(f64::INFINITY, f64::min);
    let hi = curves.iter().map(|(_, d)| d.max()).fold(f64::NEG_INFINITY, f64::max);
    let points = grid(lo, hi, grid_step);

    let mut w = csv::Writer::from_writer(sink);
    w.write_record(CCDF_HEADER)?;
    for (name, dist) in &curves {
        for &g in &points {
            w.write_record([name.clone(), fmt(g), fmt(dist.ccdf(g))])?;
        }
    }
    let constellation = config.constellation();
    for &g in &points {
        let gamma_cf = 10f64.powf(g / 20.0);
        w.write_record(["mcdiarmid".to_string(), fmt(g), fmt(mcdiarmid_ccdf(gamma_cf, mu, constellation))])?;
    }
    w.flush()?;
    Ok(())
}

pub fn bound(settings: &Settings, sink: &mut dyn Write) -> Result<()> {
    let config = settings.ofdm()?;
    eprintln!(
        "bound: n={} mod={} L={} samples={} level={}",
        settings.n, settings.kind, settings.oversample, settings.blocks, settings.level
    );
    let mu = estimate_mu(&config, settings.blocks, settings.seed)?;
    let report = bound_report(mu.mean, settings.level, config.constellation())?;
    eprintln!("mu = {:.4} +- {:.4}", mu.mean, mu.std_err);
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(BOUND_HEADER)?;
    w.write_record([fmt(report.mu), fmt(report.alpha), fmt(settings.level), fmt(report.papr_bound_db)])?;
    w.flush()?;
    Ok(())
}

pub fn sweep(settings: &Settings, param: SweepParam, values: &[usize], sink: &mut dyn Write) -> Result<()> {
    if values.is_empty() {
        bail!("--values must list at least one value");
    }
    if !(settings.level < 1.0) {
        bail!("--level must lie in (0, 1) for effective PAPR");
    }
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(SWEEP_HEADER)?;
    for &v in values {
        let mut s = settings.clone();
        match param {
            SweepParam::Q => s.shots = v,
            SweepParam::M => s.start_index = v,
            SweepParam::N => s.n = v,
        }
        if s.shots == 0 {
            bail!("q = 0 in sweep values");
        }
        eprintln!("sweep: {}={v} ({} blocks)", param.name(), s.blocks);
        let outcomes = outcomes(&s, Method::Descent)?;
        let reduced = reduced_distribution(&outcomes)?;
        let unreduced = unreduced_distribution(&outcomes)?;
        let eff = effective_papr(&reduced, s.level)?;
        let eff0 = effective_papr(&unreduced, s.level)?;
        w.write_record([
            param.name().to_string(),
            v.to_string(),
            fmt(eff),
            fmt(effective_papr_stderr(&reduced, s.level)?),
        ])?;
        w.write_record([
            format!("{}_baseline", param.name()),
            v.to_string(),
            fmt(eff0),
            fmt(effective_papr_stderr(&unreduced, s.level)?),
        ])?;
        eprintln!("  effective PAPR {eff0:.3} dB -> {eff:.3} dB (reduction {:.3} dB)", eff0 - eff);
    }
    w.flush()?;
    Ok(())
}
