//! Beam probability mass functions and the statistics built on them.
//!
//! A [`BeamPmf`] assigns each labeled beam the probability that it closes the
//! link. Everything downstream (rankings, broad-beam aggregation, cumulative
//! cuts, entropy) is a pure function of a validated PMF.
//!
//! Entropies are computed in base 10 so that, for example, nine equiprobable
//! beams have entropy `log10(9) ≈ 0.954`.

mod hierarchy;
mod history;

pub use hierarchy::{aggregate, contiguous_grouping, min_entropy_grouping, BeamHierarchy, Grouping};
pub use history::{empirical_pmf, BeamHistory};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance applied to the probability sum of every PMF.
pub const PMF_SUM_TOLERANCE: f64 = 1e-9;

/// Slack used when comparing cumulative probability against a threshold.
pub(crate) const CUMULATIVE_EPS: f64 = 1e-9;

/// Probability mass function over an ordered set of labeled beams.
///
/// Labels keep their given (angular) order; ranking is a separate view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPmf", into = "RawPmf")]
pub struct BeamPmf {
    labels: Vec<String>,
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawPmf {
    labels: Vec<String>,
    probs: Vec<f64>,
}

impl TryFrom<RawPmf> for BeamPmf {
    type Error = Error;

    fn try_from(raw: RawPmf) -> Result<Self> {
        BeamPmf::new(raw.labels, raw.probs)
    }
}

impl From<BeamPmf> for RawPmf {
    fn from(pmf: BeamPmf) -> Self {
        RawPmf { labels: pmf.labels, probs: pmf.probs }
    }
}

impl BeamPmf {
    pub fn new(labels: Vec<String>, probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidPmf("PMF must contain at least one beam".into()));
        }
        if labels.len() != probs.len() {
            return Err(Error::InvalidPmf(format!("{} labels but {} probabilities", labels.len(), probs.len())));
        }
        for (label, &p) in labels.iter().zip(&probs) {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::InvalidPmf(format!("probability of {label} is {p}, expected a value in (0, 1]")));
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PMF_SUM_TOLERANCE {
            return Err(Error::InvalidPmf(format!("probabilities sum to {sum}, expected 1")));
        }
        let mut seen = std::collections::HashSet::with_capacity(labels.len());
        for label in &labels {
            if !seen.insert(label.as_str()) {
                return Err(Error::InvalidPmf(format!("duplicate label {label}")));
            }
        }
        Ok(Self { labels, probs })
    }

    /// Builds a PMF labeled `{prefix}1..{prefix}N`.
    pub fn with_prefix(prefix: &str, probs: Vec<f64>) -> Result<Self> {
        let labels = (1..=probs.len()).map(|i| format!("{prefix}{i}")).collect();
        Self::new(labels, probs)
    }

    pub fn uniform(prefix: &str, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidPmf("PMF must contain at least one beam".into()));
        }
        Self::with_prefix(prefix, vec![1.0 / n as f64; n])
    }

    /// Normalizes non-negative weights into a PMF. Zero weights are rejected
    /// since every beam must keep non-zero probability.
    pub fn from_weights(labels: Vec<String>, weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !total.is_finite() || total <= 0.0 {
            return Err(Error::InvalidPmf(format!("weights sum to {total}")));
        }
        Self::new(labels, weights.iter().map(|w| w / total).collect())
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, index: usize) -> f64 {
        self.probs[index]
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Shannon entropy in base 10.
    pub fn entropy(&self) -> f64 {
        entropy_in(&self.probs, f64::log10)
    }

    /// Entropy normalized by its maximum `log(N)`; independent of log base.
    pub fn relative_entropy(&self) -> Result<f64> {
        relative_entropy_in(&self.probs, f64::log10)
    }

    pub fn rank(&self) -> Ranking {
        Ranking::of(self)
    }

    /// Probabilities in descending rank order.
    pub fn ranked_probs(&self) -> Vec<f64> {
        self.rank().order.iter().map(|&i| self.probs[i]).collect()
    }
}

/// `-Σ p·log(p)` for any logarithm.
pub fn entropy_in(probs: &[f64], log: impl Fn(f64) -> f64) -> f64 {
    let h: f64 = probs.iter().filter(|&&p| p > 0.0).map(|&p| -p * log(p)).sum();
    // A single certain beam gives -0.0.
    h.max(0.0)
}

pub fn relative_entropy_in(probs: &[f64], log: impl Fn(f64) -> f64) -> Result<f64> {
    if probs.len() < 2 {
        return Err(Error::UndefinedRelativeEntropy);
    }
    let max = log(probs.len() as f64);
    Ok(entropy_in(probs, &log) / max)
}

/// Beams sorted by descending probability; ties go to the lower index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ranking {
    /// Beam indices, best first.
    pub order: Vec<usize>,
    /// `ranks[i]` is the 1-based rank of beam `i`.
    pub ranks: Vec<usize>,
}

impl Ranking {
    pub fn of(pmf: &BeamPmf) -> Self {
        Self::from_probs(pmf.probs())
    }

    pub fn from_probs(probs: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..probs.len()).collect();
        // sort_by is stable, so equal probabilities keep ascending index order
        order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]));
        let mut ranks = vec![0; probs.len()];
        for (pos, &beam) in order.iter().enumerate() {
            ranks[beam] = pos + 1;
        }
        Self { order, ranks }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

pub fn rank(pmf: &BeamPmf) -> Ranking {
    Ranking::of(pmf)
}

/// Number of top-ranked beams needed for their cumulative probability to
/// reach `threshold`.
pub fn cumulative_cut(ranking: &Ranking, pmf: &BeamPmf, threshold: f64) -> usize {
    let mut cumulative = 0.0;
    for (k, &beam) in ranking.order.iter().enumerate() {
        cumulative += pmf.prob(beam);
        if reached(cumulative, threshold) {
            return k + 1;
        }
    }
    ranking.len()
}

#[inline]
pub(crate) fn reached(cumulative: f64, threshold: f64) -> bool {
    cumulative >= threshold - CUMULATIVE_EPS
}
