//! Run settings: command-line flags over config-file values over defaults.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use papr_core::analysis::DEFAULT_CCDF_LEVEL;
use papr_core::{ConstellationKind, OfdmConfig, SelectorParams, ShotPairing};
use serde::Deserialize;

/// Flags shared by every subcommand. All optional so that config-file
/// values can fill the gaps.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Flags {
    /// Flat TOML file whose keys mirror these flags
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Number of subcarriers
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Modulation: qpsk, qam16, qam64 or qam256
    #[arg(long = "mod", global = true)]
    #[serde(rename = "mod")]
    pub modulation: Option<String>,
    /// Oversampling factor L
    #[arg(long, global = true)]
    pub oversample: Option<usize>,
    /// Shots q per candidate estimate
    #[arg(long, global = true)]
    pub shots: Option<usize>,
    /// First decided sign index m (1 decides all but x_0)
    #[arg(long, global = true)]
    pub start_index: Option<usize>,
    /// Number of random OFDM blocks (samples for `bound`)
    #[arg(long, global = true)]
    pub blocks: Option<usize>,
    /// CCDF level for the effective PAPR (tail probability for `bound`)
    #[arg(long, global = true)]
    pub level: Option<f64>,
    /// Run seed
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output CSV path (stdout when absent)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Evaluate both sign candidates on common random completions
    #[arg(long, global = true, action = clap::ArgAction::Set)]
    pub paired_shots: Option<bool>,
    /// Candidates for the random SLM baseline (`--method slm`)
    #[arg(long, global = true)]
    pub slm_k: Option<usize>,
}

impl Flags {
    fn or(self, fallback: Flags) -> Flags {
        Flags {
            config: self.config.or(fallback.config),
            n: self.n.or(fallback.n),
            modulation: self.modulation.or(fallback.modulation),
            oversample: self.oversample.or(fallback.oversample),
            shots: self.shots.or(fallback.shots),
            start_index: self.start_index.or(fallback.start_index),
            blocks: self.blocks.or(fallback.blocks),
            level: self.level.or(fallback.level),
            seed: self.seed.or(fallback.seed),
            out: self.out.or(fallback.out),
            threads: self.threads.or(fallback.threads),
            paired_shots: self.paired_shots.or(fallback.paired_shots),
            slm_k: self.slm_k.or(fallback.slm_k),
        }
    }
}

pub fn load_config_file(path: &Path) -> Result<Flags> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config file {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing config file {}", path.display()))
}

/// Fully resolved settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub n: usize,
    pub kind: ConstellationKind,
    pub oversample: usize,
    pub shots: usize,
    pub start_index: usize,
    pub blocks: usize,
    pub level: f64,
    /// Whether the level came from a flag or the config file.
    pub level_explicit: bool,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub pairing: ShotPairing,
    pub slm_k: usize,
}

pub const DEFAULT_N: usize = 64;
pub const DEFAULT_OVERSAMPLE: usize = 4;
pub const DEFAULT_SHOTS: usize = 100;
pub const DEFAULT_START_INDEX: usize = 1;
pub const DEFAULT_BLOCKS: usize = 10_000;
pub const DEFAULT_SLM_K: usize = 64;

impl Settings {
    pub fn resolve(flags: Flags) -> Result<Settings> {
        let file = match &flags.config {
            Some(path) => load_config_file(path)?,
            None => Flags::default(),
        };
        let f = flags.or(file);
        let kind: ConstellationKind = f
            .modulation
            .as_deref()
            .unwrap_or("qam16")
            .parse()
            .map_err(anyhow::Error::from)?;
        let Some(seed) = f.seed else {
            bail!("a seed is required (--seed or `seed` in the config file)");
        };
        let settings = Settings {
            n: f.n.unwrap_or(DEFAULT_N),
            kind,
            oversample: f.oversample.unwrap_or(DEFAULT_OVERSAMPLE),
            shots: f.shots.unwrap_or(DEFAULT_SHOTS),
            start_index: f.start_index.unwrap_or(DEFAULT_START_INDEX),
            blocks: f.blocks.unwrap_or(DEFAULT_BLOCKS),
            level: f.level.unwrap_or(DEFAULT_CCDF_LEVEL),
            level_explicit: f.level.is_some(),
            seed,
            out: f.out,
            threads: f.threads,
            pairing: if f.paired_shots.unwrap_or(true) {
                ShotPairing::Common
            } else {
                ShotPairing::Independent
            },
            slm_k: f.slm_k.unwrap_or(DEFAULT_SLM_K),
        };
        settings.validate()?;
        Ok(settings)
    }

    fn validate(&self) -> Result<()> {
        self.ofdm()?;
        if self.shots == 0 {
            bail!("--shots must be at least 1");
        }
        if self.blocks == 0 {
            bail!("--blocks must be at least 1");
        }
        if self.slm_k == 0 {
            bail!("--slm-k must be at least 1");
        }
        if self.threads == Some(0) {
            bail!("--threads must be at least 1");
        }
        if !(self.level > 0.0 && self.level <= 1.0) {
            bail!("--level must lie in (0, 1], got {}", self.level);
        }
        Ok(())
    }

    pub fn ofdm(&self) -> Result<OfdmConfig> {
        Ok(OfdmConfig::new(self.n, self.oversample, self.kind)?)
    }

    pub fn selector(&self) -> Result<SelectorParams> {
        if self.start_index < 1 || self.start_index >= self.n {
            bail!(
                "--start-index must satisfy 1 <= m <= n - 1 (m = {}, n = {})",
                self.start_index,
                self.n
            );
        }
        Ok(SelectorParams {
            shots: self.shots,
            start_index: self.start_index,
            pairing: self.pairing,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn defaults_apply() {
        let s = Settings::resolve(Flags {
            seed: Some(1),
            ..Flags::default()
        })
        .unwrap();
        assert_eq!(s.n, 64);
        assert_eq!(s.kind, ConstellationKind::Qam16);
        assert_eq!(s.oversample, 4);
        assert_eq!(s.shots, 100);
        assert_eq!(s.start_index, 1);
        assert_eq!(s.level, 1e-3);
        assert!(!s.level_explicit);
        assert_eq!(s.pairing, ShotPairing::Common);
    }

    #[test]
    fn seed_is_mandatory() {
        assert!(Settings::resolve(Flags::default()).is_err());
    }

    #[test]
    fn flags_override_file_override_defaults() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "n = 32\nmod = \"qpsk\"\nshots = 7\nseed = 5\nstart-index = 4").unwrap();
        let s = Settings::resolve(Flags {
            config: Some(file.path().to_path_buf()),
            shots: Some(9),
            ..Flags::default()
        })
        .unwrap();
        assert_eq!(s.n, 32);
        assert_eq!(s.kind, ConstellationKind::Qpsk);
        assert_eq!(s.shots, 9);
        assert_eq!(s.seed, 5);
        assert_eq!(s.start_index, 4);
        assert_eq!(s.oversample, 4);
    }

    #[test]
    fn rejects_bad_values() {
        let base = Flags {
            seed: Some(1),
            ..Flags::default()
        };
        assert!(Settings::resolve(Flags { n: Some(1), ..base.clone() }).is_err());
        assert!(Settings::resolve(Flags { modulation: Some("8psk".into()), ..base.clone() }).is_err());
        assert!(Settings::resolve(Flags { level: Some(0.0), ..base.clone() }).is_err());
        let s = Settings::resolve(Flags { start_index: Some(64), ..base }).unwrap();
        assert!(s.selector().is_err());
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "subcarriers = 32").unwrap();
        assert!(load_config_file(file.path()).is_err());
    }
}
