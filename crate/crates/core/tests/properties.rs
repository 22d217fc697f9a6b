//! Property tests for the waveform, estimator and selector invariants.

use papr_core::analysis::empirical_ccdf;
use papr_core::rng::seeded;
use papr_core::selector::{exhaustive_best_signs, select_signs, select_signs_exact};
use papr_core::waveform::{crest_factor, papr, synthesize, synthesize_direct};
use papr_core::{Complex64, ConditionalEstimator, ConstellationKind, DataBlock, OfdmConfig, SignVector};
use proptest::prelude::*;

fn kind_strategy() -> impl Strategy<Value = ConstellationKind> {
    prop::sample::select(ConstellationKind::ALL.to_vec())
}

fn instance(n: usize, kind: ConstellationKind, seed: u64) -> (OfdmConfig, DataBlock) {
    let cfg = OfdmConfig::with_defaults(n, kind).unwrap();
    let block = cfg.constellation().sample_block(n, &mut seeded(seed)).unwrap();
    (cfg, block)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn negation_leaves_papr_unchanged(n in 2usize..80, kind in kind_strategy(), seed: u64, bits: u64) {
        let (cfg, block) = instance(n, kind, seed);
        let x = SignVector::from_bits(bits, n.min(64));
        let x = if n > 64 {
            let mut v = x.as_slice().to_vec();
            v.resize(n, 1);
            SignVector::new(v).unwrap()
        } else {
            x
        };
        let pa = cfg.constellation().avg_power();
        let a = papr(&synthesize(&block, &x, &cfg).unwrap(), pa).unwrap();
        let b = papr(&synthesize(&block, &x.negated(), &cfg).unwrap(), pa).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn parseval(n in 2usize..100, l in 1usize..9, kind in kind_strategy(), seed: u64) {
        let cfg = OfdmConfig::new(n, l, kind).unwrap();
        let block = cfg.constellation().sample_block(n, &mut seeded(seed)).unwrap();
        let s = synthesize(&block, &SignVector::ones(n), &cfg).unwrap();
        let time_avg = s.samples().iter().map(|v| v.norm_sqr()).sum::<f64>() / s.len() as f64;
        let freq = block.symbols().iter().map(|c| c.norm_sqr()).sum::<f64>() / n as f64;
        prop_assert!((time_avg / freq - 1.0).abs() < 1e-12);
    }

    #[test]
    fn finer_grids_never_lower_the_peak(n in 2usize..64, kind in kind_strategy(), seed: u64, bits: u64) {
        let x = SignVector::from_bits(bits, n);
        let mut prev = 0.0;
        for l in [1usize, 2, 4, 8] {
            let cfg = OfdmConfig::new(n, l, kind).unwrap();
            let block = cfg.constellation().sample_block(n, &mut seeded(seed)).unwrap();
            let p = papr(&synthesize(&block, &x, &cfg).unwrap(), 1.0).unwrap();
            prop_assert!(p >= prev * (1.0 - 1e-12), "L={}: {} < {}", l, p, prev);
            prev = p;
        }
    }

    #[test]
    fn crest_factor_at_least_one(n in 2usize..128, kind in kind_strategy(), seed: u64) {
        let (cfg, block) = instance(n, kind, seed);
        let s = synthesize(&block, &SignVector::ones(n), &cfg).unwrap();
        // peak >= mean power, and the mean power of a block relative to p_a
        // is its own symbol-energy average
        let energy = block.symbols().iter().map(|c| c.norm_sqr()).sum::<f64>() / n as f64;
        let cf = crest_factor(&s, energy).unwrap();
        prop_assert!(cf >= 1.0 - 1e-12);
    }

    #[test]
    fn fft_agrees_with_direct_sum(n in 2usize..40, l in 1usize..6, seed: u64, bits: u64) {
        let cfg = OfdmConfig::new(n, l, ConstellationKind::Qam64).unwrap();
        let block = cfg.constellation().sample_block(n, &mut seeded(seed)).unwrap();
        let x = SignVector::from_bits(bits, n);
        let a = synthesize(&block, &x, &cfg).unwrap();
        let b = synthesize_direct(&block, &x, &cfg).unwrap();
        for (u, v) in a.samples().iter().zip(b.samples()) {
            prop_assert!((u - v).norm() < 1e-10);
        }
    }

    #[test]
    fn exact_midpoint_identity(n in 2usize..11, seed: u64, j_frac in 0.0f64..1.0, bits: u64) {
        let (cfg, block) = instance(n, ConstellationKind::Qam16, seed);
        let j = ((n as f64) * j_frac) as usize;
        let prefix: Vec<i8> = SignVector::from_bits(bits, j).as_slice().to_vec();
        let mut est = ConditionalEstimator::new(&cfg);
        let z = est.exact(&block, &prefix).unwrap();
        let (p, m) = est.exact_paired(&block, &prefix).unwrap();
        prop_assert!((z - 0.5 * (p + m)).abs() < 1e-12);
    }

    #[test]
    fn trace_replay_and_determinism(n in 4usize..40, q in 1usize..12, m_frac in 0.0f64..1.0, seed: u64) {
        let (cfg, block) = instance(n, ConstellationKind::Qam16, seed);
        let m = 1 + ((n - 2) as f64 * m_frac) as usize;
        let a = select_signs(&block, &cfg, q, m, &mut seeded(seed ^ 1)).unwrap();
        let b = select_signs(&block, &cfg, q, m, &mut seeded(seed ^ 1)).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.trace.replay(n), a.signs.clone());
        prop_assert!(a.signs.as_slice()[..m].iter().all(|&s| s == 1));
    }

    #[test]
    fn ccdf_is_a_tail_function(values in prop::collection::vec(-50.0f64..50.0, 1..200), probes in prop::collection::vec(-60.0f64..60.0, 1..20)) {
        let d = empirical_ccdf(&values).unwrap();
        let mut probes = probes;
        probes.sort_by(f64::total_cmp);
        let mut prev = 1.0;
        for p in probes {
            let c = d.ccdf(p);
            prop_assert!((0.0..=1.0).contains(&c));
            prop_assert!(c <= prev);
            let brute = values.iter().filter(|&&v| v > p).count() as f64 / values.len() as f64;
            prop_assert_eq!(c, brute);
            prev = c;
        }
    }
}

#[test]
fn exact_descent_is_monotone_and_bounded() {
    for seed in 0..30 {
        let n = 6 + (seed as usize % 7);
        let (cfg, block) = instance(n, ConstellationKind::Qam16, seed);
        let m = 1 + seed as usize % (n - 1);
        let r = select_signs_exact(&block, &cfg, m).unwrap();
        let z = r.trace.z_sequence();
        for w in z.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "seed {seed}: {z:?}");
        }
        assert!((z.last().unwrap() - r.final_cf).abs() < 1e-12);
        let opt = exhaustive_best_signs(&block, &cfg).unwrap();
        assert!(opt.final_cf <= r.final_cf + 1e-12);
    }
}

#[test]
fn scaling_the_constellation_leaves_crest_factor_unchanged() {
    let (cfg, block) = instance(32, ConstellationKind::Qam16, 8);
    let gamma = 0.3162;
    let scaled = DataBlock::from_symbols(block.symbols().iter().map(|c| c * gamma).collect());
    let x = SignVector::from_bits(0x5a5a_1234, 32);
    let pa = cfg.constellation().avg_power();
    let a = crest_factor(&synthesize(&block, &x, &cfg).unwrap(), pa).unwrap();
    let b = crest_factor(&synthesize(&scaled, &x, &cfg).unwrap(), pa * gamma * gamma).unwrap();
    assert!((a - b).abs() < 1e-12);
}

#[test]
fn single_active_carrier_papr() {
    let cfg = OfdmConfig::with_defaults(16, ConstellationKind::Qam16).unwrap();
    let mut sym = vec![Complex64::default(); 16];
    sym[0] = Complex64::new(3.0, 3.0);
    let block = DataBlock::from_symbols(sym);
    let p = papr(&synthesize(&block, &SignVector::ones(16), &cfg).unwrap(), 10.0).unwrap();
    // |c_0|² / (n p_a) on a constant envelope
    assert!((p - 18.0 / 16.0 / 10.0).abs() < 1e-14);
}
