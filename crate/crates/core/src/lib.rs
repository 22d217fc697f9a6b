//! PAPR reduction of OFDM symbols by sign selection.
//!
//! Each subcarrier symbol `c_k` may be transmitted as `+c_k` or `-c_k`. The
//! selector decides the signs one at a time, each time keeping the sign with
//! the lower conditional expectation of the crest factor over the signs not
//! yet decided. A receiver that ignores symbol signs needs no side
//! information.
//!
//! Modules, bottom up:
//!
//! * [`constellation`]: symmetric QAM grids and random data blocks
//! * [`waveform`]: oversampled symbol synthesis, PAPR and crest factor
//! * [`estimator`]: conditional expected crest factor, sampled or enumerated
//! * [`selector`]: the descent, exhaustive search, random SLM, rate loss
//! * [`analysis`]: CCDFs, effective PAPR, `mu`, `Z_m` samples, McDiarmid bound
//! * [`experiment`]: block-parallel reduction runs

pub mod analysis;
pub mod constellation;
pub mod error;
pub mod estimator;
pub mod experiment;
pub mod rng;
pub mod selector;
pub mod waveform;

pub use constellation::{Constellation, ConstellationKind, DataBlock};
pub use error::{Error, Result};
pub use estimator::{ConditionalEstimator, ConditionalQuery, Estimate, ShotPairing};
pub use selector::{SelectionResult, SelectionTrace, SelectorParams, SignSelector};
pub use waveform::{OfdmConfig, SampledSignal, SignVector, Synthesizer};

pub use num_complex::Complex64;
