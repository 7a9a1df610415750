//! Scenario configuration: one JSON document per scenario, with file
//! references resolved against the config file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use beamtrain::codebook::{dft_codebook, UlaConfig, DEFAULT_SPACING};
use beamtrain::montecarlo::OracleModel;
use beamtrain::oracle::default_detection_threshold;
use beamtrain::strategies::{FallbackPolicy, GroupingSpec, StrategyConfig, Thresholds};
use beamtrain::BeamPmf;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const DEFAULT_HISTORY_PATH: &str = "./beam_history.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ScenarioConfig {
    pub tx_pmf: PmfSource,
    pub rx_pmf: PmfSource,
    #[serde(default)]
    pub strategy: StrategyKind,
    /// Absent means pure ranked search (both thresholds 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Thresholds>,
    #[serde(default)]
    pub fallback_policy: FallbackPolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hierarchy: Option<HierarchyConfig>,
    /// Exhaustive search only: stop at the first linked pair.
    #[serde(default)]
    pub stop_at_first: bool,
    #[serde(default)]
    pub oracle: OracleKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrays: Option<ArrayConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection: Option<DetectionConfig>,
    #[serde(default)]
    pub mc: McConfig,
    /// Strategies for `compare`; empty means exhaustive plus the configured one.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub compare: Vec<StrategyConfig>,
    #[serde(default)]
    pub history: HistoryConfig,
}

/// A PMF given inline or as a path to a JSON file holding the same object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PmfSource {
    Path(PathBuf),
    Inline(InlinePmf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlinePmf {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Exhaustive,
    Ml,
    #[default]
    Mars,
    Hybrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct HierarchyConfig {
    /// Tx grouping levels, coarsest first.
    pub tx_groups: Vec<GroupingSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rx_groups: Vec<GroupingSpec>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleKind {
    #[default]
    Index,
    Physical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ArrayConfig {
    pub ntx: usize,
    pub nrx: usize,
    #[serde(default = "default_spacing")]
    pub spacing: f64,
}

fn default_spacing() -> f64 {
    DEFAULT_SPACING
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DetectionConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_variance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct McConfig {
    #[serde(default = "default_trials")]
    pub n_trials: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_trials() -> u64 {
    100_000
}

fn default_seed() -> u64 {
    42
}

impl Default for McConfig {
    fn default() -> Self {
        Self { n_trials: default_trials(), seed: default_seed() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct HistoryConfig {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "default_history_path")]
    pub path: PathBuf,
    /// Pseudo-count added to every beam when deriving a PMF.
    #[serde(default = "default_smoothing")]
    pub smoothing: f64,
}

fn default_history_path() -> PathBuf {
    PathBuf::from(DEFAULT_HISTORY_PATH)
}

fn default_smoothing() -> f64 {
    1.0
}

impl Default for HistoryConfig {
    fn default() -> Self {
        Self { enabled: false, path: default_history_path(), smoothing: default_smoothing() }
    }
}

/// Parses JSON, naming the offending field on failure.
pub fn parse_json<T: DeserializeOwned>(text: &str, origin: &Path) -> CliResult<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        CliError::Config(format!("{}: field `{field}`: {}", origin.display(), e.inner()))
    })
}

/// A config with its PMFs loaded and validated.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub base_dir: PathBuf,
    pub tx: BeamPmf,
    pub rx: BeamPmf,
}

impl Scenario {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(CliError::io(path))?;
        let config: ScenarioConfig = parse_json(&text, path)?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_config(config, base_dir)
    }

    pub fn from_config(config: ScenarioConfig, base_dir: PathBuf) -> CliResult<Self> {
        let tx = load_pmf(&config.tx_pmf, &base_dir, "txPmf", "T")?;
        let rx = load_pmf(&config.rx_pmf, &base_dir, "rxPmf", "R")?;
        let scenario = Self { config, base_dir, tx, rx };
        scenario.validate()?;
        Ok(scenario)
    }

    fn validate(&self) -> CliResult<()> {
        let c = &self.config;
        if c.oracle == OracleKind::Physical {
            if let Some(a) = c.arrays {
                if a.ntx != self.tx.len() {
                    return Err(CliError::Config(format!(
                        "field `arrays.ntx`: {} elements but txPmf has {} beams",
                        a.ntx,
                        self.tx.len()
                    )));
                }
                if a.nrx != self.rx.len() {
                    return Err(CliError::Config(format!(
                        "field `arrays.nrx`: {} elements but rxPmf has {} beams",
                        a.nrx,
                        self.rx.len()
                    )));
                }
            }
        }
        if c.mc.n_trials == 0 {
            return Err(CliError::Config("field `mc.nTrials`: must be positive".into()));
        }
        if !(c.history.smoothing >= 0.0 && c.history.smoothing.is_finite()) {
            return Err(CliError::Config("field `history.smoothing`: must be a finite non-negative number".into()));
        }
        Ok(())
    }

    /// Resolves a path from the config against the config's directory.
    pub fn resolve_path(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn history_path(&self) -> PathBuf {
        self.resolve_path(&self.config.history.path)
    }

    pub fn effective_thresholds(&self) -> Thresholds {
        self.config.thresholds.unwrap_or(Thresholds { tx: 1.0, rx: 1.0 })
    }

    /// The strategy selected by `strategy` and its companion fields.
    pub fn strategy(&self) -> CliResult<StrategyConfig> {
        let c = &self.config;
        let hierarchy = |kind: &str| {
            c.hierarchy
                .as_ref()
                .filter(|h| !h.tx_groups.is_empty())
                .ok_or_else(|| CliError::Config(format!("field `hierarchy.txGroups`: required for strategy `{kind}`")))
        };
        Ok(match c.strategy {
            StrategyKind::Exhaustive => StrategyConfig::Exhaustive { stop_at_first: c.stop_at_first },
            StrategyKind::Ml => {
                let h = hierarchy("ml")?;
                StrategyConfig::Ml { tx_groups: h.tx_groups.clone(), rx_groups: h.rx_groups.clone() }
            }
            StrategyKind::Mars => {
                StrategyConfig::Mars { thresholds: self.effective_thresholds(), fallback: c.fallback_policy }
            }
            StrategyKind::Hybrid => StrategyConfig::Hybrid { tx_groups: hierarchy("hybrid")?.tx_groups.clone() },
        })
    }

    /// Named strategies for a comparison run; duplicate names get a suffix.
    pub fn comparison(&self) -> CliResult<Vec<(String, StrategyConfig)>> {
        let list = if self.config.compare.is_empty() {
            let own = self.strategy()?;
            let exhaustive = StrategyConfig::Exhaustive { stop_at_first: false };
            if own == exhaustive {
                vec![
                    exhaustive,
                    StrategyConfig::Mars {
                        thresholds: Thresholds { tx: 1.0, rx: 1.0 },
                        fallback: FallbackPolicy::PureRankedRemainder,
                    },
                ]
            } else {
                vec![exhaustive, own]
            }
        } else {
            self.config.compare.clone()
        };
        let mut named: Vec<(String, StrategyConfig)> = Vec::with_capacity(list.len());
        for s in list {
            let base = s.name();
            let mut name = base.to_string();
            let mut k = 2;
            while named.iter().any(|(n, _)| *n == name) {
                name = format!("{base}{k}");
                k += 1;
            }
            named.push((name, s));
        }
        Ok(named)
    }

    pub fn oracle_model(&self) -> CliResult<OracleModel> {
        let c = &self.config;
        Ok(match c.oracle {
            OracleKind::Index => OracleModel::Index,
            OracleKind::Physical => {
                let (ntx, nrx, spacing) = match c.arrays {
                    Some(a) => (a.ntx, a.nrx, a.spacing),
                    None => (self.tx.len(), self.rx.len(), DEFAULT_SPACING),
                };
                let detection = c.detection.unwrap_or_default();
                OracleModel::Physical {
                    tx_codebook: dft_codebook(&UlaConfig::new(ntx, spacing)?),
                    rx_codebook: dft_codebook(&UlaConfig::new(nrx, spacing)?),
                    threshold: detection.threshold.unwrap_or_else(|| default_detection_threshold(ntx, nrx)),
                    noise_variance: detection.noise_variance,
                }
            }
        })
    }
}

fn load_pmf(source: &PmfSource, base_dir: &Path, field: &str, prefix: &str) -> CliResult<BeamPmf> {
    let (inline, origin) = match source {
        PmfSource::Inline(p) => (p.clone(), None),
        PmfSource::Path(p) => {
            let path = if p.is_absolute() { p.clone() } else { base_dir.join(p) };
            let text = fs::read_to_string(&path)
                .map_err(|e| CliError::Config(format!("field `{field}`: cannot read {}: {e}", path.display())))?;
            (parse_json::<InlinePmf>(&text, &path)?, Some(path))
        }
    };
    let pmf = match inline.labels {
        Some(labels) => BeamPmf::new(labels, inline.probs),
        None => BeamPmf::with_prefix(prefix, inline.probs),
    };
    pmf.map_err(|e| match origin {
        Some(path) => CliError::Config(format!("field `{field}` ({}): {e}", path.display())),
        None => CliError::Config(format!("field `{field}`: {e}")),
    })
}
