//! Square-grid symmetric constellations and random data blocks.
//!
//! Points live on the unnormalized odd-integer grid (QPSK is `±1 ± j`).
//! Every metric downstream is scale invariant, and integer coordinates are
//! exactly representable, which keeps membership tests exact.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstellationKind {
    Qpsk,
    Qam16,
    Qam64,
    Qam256,
}

impl ConstellationKind {
    pub const ALL: [ConstellationKind; 4] = [
        ConstellationKind::Qpsk,
        ConstellationKind::Qam16,
        ConstellationKind::Qam64,
        ConstellationKind::Qam256,
    ];

    /// Number of points.
    pub fn order(self) -> usize {
        match self {
            ConstellationKind::Qpsk => 4,
            ConstellationKind::Qam16 => 16,
            ConstellationKind::Qam64 => 64,
            ConstellationKind::Qam256 => 256,
        }
    }

    /// Points per axis of the square grid.
    fn side(self) -> usize {
        match self {
            ConstellationKind::Qpsk => 2,
            ConstellationKind::Qam16 => 4,
            ConstellationKind::Qam64 => 8,
            ConstellationKind::Qam256 => 16,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ConstellationKind::Qpsk => "qpsk",
            ConstellationKind::Qam16 => "qam16",
            ConstellationKind::Qam64 => "qam64",
            ConstellationKind::Qam256 => "qam256",
        }
    }
}

impl fmt::Display for ConstellationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ConstellationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qpsk" | "qam4" | "4qam" => Ok(ConstellationKind::Qpsk),
            "qam16" | "16qam" => Ok(ConstellationKind::Qam16),
            "qam64" | "64qam" => Ok(ConstellationKind::Qam64),
            "qam256" | "256qam" => Ok(ConstellationKind::Qam256),
            other => Err(Error::InvalidConfig(format!("unknown modulation '{other}'"))),
        }
    }
}

/// A constellation closed under negation, with its average power and
/// largest inter-point distance.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    kind: ConstellationKind,
    points: Vec<Complex64>,
    avg_power: f64,
    max_norm_sqr: f64,
}

impl Constellation {
    pub fn new(kind: ConstellationKind) -> Self {
        let side = kind.side();
        let levels: Vec<f64> = (0..side).map(|i| (2 * i) as f64 - (side - 1) as f64).collect();
        let points: Vec<Complex64> = levels
            .iter()
            .flat_map(|&re| levels.iter().map(move |&im| Complex64::new(re, im)))
            .collect();
        let avg_power = points.iter().map(|c| c.norm_sqr()).sum::<f64>() / points.len() as f64;
        let max_norm_sqr = points.iter().map(|c| c.norm_sqr()).fold(0.0, f64::max);
        Constellation {
            kind,
            points,
            avg_power,
            max_norm_sqr,
        }
    }

    pub fn kind(&self) -> ConstellationKind {
        self.kind
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Mean of `|c|²` over the points (`p_a`).
    pub fn avg_power(&self) -> f64 {
        self.avg_power
    }

    /// Twice the largest point magnitude (`d`).
    pub fn max_distance(&self) -> f64 {
        2.0 * self.max_norm_sqr.sqrt()
    }

    /// `d² / p_a`, the only constellation statistic the concentration bound needs.
    pub fn distance_power_ratio(&self) -> f64 {
        4.0 * self.max_norm_sqr / self.avg_power
    }

    pub fn contains(&self, symbol: Complex64) -> bool {
        self.points.contains(&symbol)
    }

    /// Draws `n` i.i.d. uniform symbols.
    pub fn sample_block<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<DataBlock> {
        if n < 2 {
            return Err(Error::InvalidConfig(format!(
                "block length must be at least 2, got {n}"
            )));
        }
        let symbols = (0..n)
            .map(|_| self.points[rng.gen_range(0..self.points.len())])
            .collect();
        Ok(DataBlock { symbols })
    }

    /// Representative of the pair `{c, -c}`: the member with positive real
    /// part, or positive imaginary part when the real part is zero.
    pub fn canonical_representative(&self, symbol: Complex64) -> Result<Complex64> {
        if !self.contains(symbol) {
            return Err(Error::Domain(format!(
                "{symbol} is not a {} point",
                self.kind
            )));
        }
        Ok(canonical(symbol))
    }
}

fn canonical(c: Complex64) -> Complex64 {
    if c.re > 0.0 || (c.re == 0.0 && c.im > 0.0) {
        c
    } else {
        -c
    }
}

/// One OFDM block of data symbols, one per subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct DataBlock {
    symbols: Vec<Complex64>,
}

impl DataBlock {
    /// Builds a block from explicit symbols, checking membership.
    pub fn new(symbols: Vec<Complex64>, constellation: &Constellation) -> Result<Self> {
        if symbols.len() < 2 {
            return Err(Error::InvalidConfig(format!(
                "block length must be at least 2, got {}",
                symbols.len()
            )));
        }
        if let Some(bad) = symbols.iter().find(|&&c| !constellation.contains(c)) {
            return Err(Error::Domain(format!(
                "{bad} is not a {} point",
                constellation.kind()
            )));
        }
        Ok(DataBlock { symbols })
    }

    /// Builds a block without constellation membership checks. Useful for
    /// single-tone and other synthetic test signals.
    pub fn from_symbols(symbols: Vec<Complex64>) -> Self {
        DataBlock { symbols }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[Complex64] {
        &self.symbols
    }
}
