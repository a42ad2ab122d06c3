use std::path::Path;

use anyhow::Context;
use ddval_core::DEFAULT_K;
use ddval_fl::FlConfig;
use ddval_synth::{DistributionMode, SynthConfig};
use serde::{Deserialize, Serialize};

/// Everything needed to reproduce any experiment, read from a TOML file.
/// Each seed in `seeds` drives both data generation and training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seeds: Vec<u64>,
    pub k: usize,
    pub synth: SynthConfig,
    pub fl: FlConfig,
    pub value: ValueSettings,
    pub compare: CompareSettings,
    pub scale: ScaleSettings,
    pub ledger: LedgerSettings,
    pub gas: GasSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seeds: (0..12).collect(),
            k: DEFAULT_K,
            synth: SynthConfig::default(),
            fl: FlConfig::default(),
            value: ValueSettings::default(),
            compare: CompareSettings::default(),
            scale: ScaleSettings::default(),
            ledger: LedgerSettings::default(),
            gas: GasSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValueSettings {
    /// Per-client flip probabilities; `None` uses 0.05 per client index.
    pub flip_fractions: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSettings {
    pub n_clients: usize,
    /// Training points per client.
    pub n_points: usize,
    pub modes: Vec<DistributionMode>,
}

impl Default for CompareSettings {
    fn default() -> Self {
        Self {
            n_clients: 3,
            n_points: 2000,
            modes: vec![DistributionMode::Iid, DistributionMode::NonIid],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScaleSettings {
    /// Total training points for the DDVal timings, ascending.
    pub point_counts: Vec<usize>,
    /// Client counts for the OR and SaFE timings, ascending.
    pub client_counts: Vec<usize>,
    /// Points per client in the client-count sweep.
    pub points_per_client: usize,
    pub repeats: usize,
    /// Training rounds of the single run whose history OR replays.
    pub rounds: usize,
}

impl Default for ScaleSettings {
    fn default() -> Self {
        Self {
            point_counts: vec![4000, 8000, 16000, 32000],
            client_counts: vec![2, 4, 6, 8],
            points_per_client: 200,
            repeats: 3,
            rounds: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LedgerSettings {
    pub peers: usize,
    pub points_per_peer: usize,
    pub window: usize,
    pub max_rounds: usize,
    /// Fund deposited by the first depositor, in token base units.
    pub fund: u64,
    pub timeout_ms: u64,
}

impl Default for LedgerSettings {
    fn default() -> Self {
        Self {
            peers: 3,
            points_per_peer: 2000,
            window: 10,
            max_rounds: 200,
            fund: 1_000_000_000,
            timeout_ms: 60_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GasSettings {
    pub institutions: usize,
    pub gas_price_gwei: f64,
    pub eth_usd: f64,
}

impl Default for GasSettings {
    fn default() -> Self {
        Self {
            institutions: 3,
            gas_price_gwei: 33.0,
            eth_usd: 1859.0,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Synthetic-data settings for one seed.
    pub fn synth_for(&self, seed: u64) -> SynthConfig {
        SynthConfig {
            seed,
            ..self.synth.clone()
        }
    }

    pub fn fl_for(&self, seed: u64) -> FlConfig {
        FlConfig {
            seed,
            ..self.fl.clone()
        }
    }
}

/// Parses a seed list such as `1,2,5` or `0..12` (end exclusive), or a mix.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, String> {
    let mut seeds = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: u64 = a.trim().parse().map_err(|e| format!("bad seed {a:?}: {e}"))?;
            let b: u64 = b.trim().parse().map_err(|e| format!("bad seed {b:?}: {e}"))?;
            if a >= b {
                return Err(format!("empty seed range {part}"));
            }
            seeds.extend(a..b);
        } else {
            seeds.push(part.parse().map_err(|e| format!("bad seed {part:?}: {e}"))?);
        }
    }
    if seeds.is_empty() {
        return Err("no seeds given".into());
    }
    Ok(seeds)
}
