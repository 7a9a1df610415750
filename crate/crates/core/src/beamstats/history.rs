//! Running tallies of which Tx and Rx beams closed the link.

use serde::{Deserialize, Serialize};

use super::BeamPmf;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BeamHistory {
    pub tx_labels: Vec<String>,
    pub rx_labels: Vec<String>,
    pub tx_counts: Vec<u64>,
    pub rx_counts: Vec<u64>,
    pub total_observations: u64,
}

impl BeamHistory {
    pub fn new(tx_labels: Vec<String>, rx_labels: Vec<String>) -> Self {
        let (ntx, nrx) = (tx_labels.len(), rx_labels.len());
        Self { tx_labels, rx_labels, tx_counts: vec![0; ntx], rx_counts: vec![0; nrx], total_observations: 0 }
    }

    /// Empty history over the beams of two PMFs.
    pub fn for_pmfs(tx: &BeamPmf, rx: &BeamPmf) -> Self {
        Self::new(tx.labels().to_vec(), rx.labels().to_vec())
    }

    /// Records one successful beam training outcome.
    pub fn record(&mut self, tx: usize, rx: usize) -> Result<()> {
        if tx >= self.tx_counts.len() {
            return Err(Error::IndexOutOfRange { index: tx, len: self.tx_counts.len() });
        }
        if rx >= self.rx_counts.len() {
            return Err(Error::IndexOutOfRange { index: rx, len: self.rx_counts.len() });
        }
        self.tx_counts[tx] += 1;
        self.rx_counts[rx] += 1;
        self.total_observations += 1;
        Ok(())
    }

    /// Adds per-beam tallies gathered elsewhere (e.g. a Monte Carlo batch).
    pub fn absorb(&mut self, tx_counts: &[u64], rx_counts: &[u64]) -> Result<()> {
        if tx_counts.len() != self.tx_counts.len() {
            return Err(Error::DimensionMismatch { expected: self.tx_counts.len(), actual: tx_counts.len() });
        }
        if rx_counts.len() != self.rx_counts.len() {
            return Err(Error::DimensionMismatch { expected: self.rx_counts.len(), actual: rx_counts.len() });
        }
        let added: u64 = tx_counts.iter().sum();
        if added != rx_counts.iter().sum::<u64>() {
            return Err(Error::InvalidConfig("Tx and Rx tallies disagree on the number of observations".into()));
        }
        for (c, a) in self.tx_counts.iter_mut().zip(tx_counts) {
            *c += a;
        }
        for (c, a) in self.rx_counts.iter_mut().zip(rx_counts) {
            *c += a;
        }
        self.total_observations += added;
        Ok(())
    }

    pub fn is_consistent(&self) -> bool {
        self.tx_labels.len() == self.tx_counts.len()
            && self.rx_labels.len() == self.rx_counts.len()
            && self.tx_counts.iter().sum::<u64>() == self.total_observations
            && self.rx_counts.iter().sum::<u64>() == self.total_observations
    }

    pub fn tx_pmf(&self, smoothing: f64) -> Result<BeamPmf> {
        empirical_pmf(&self.tx_labels, &self.tx_counts, smoothing)
    }

    pub fn rx_pmf(&self, smoothing: f64) -> Result<BeamPmf> {
        empirical_pmf(&self.rx_labels, &self.rx_counts, smoothing)
    }
}

/// Additive-smoothed frequencies: `(count + s) / (total + N·s)`.
pub fn empirical_pmf(labels: &[String], counts: &[u64], smoothing: f64) -> Result<BeamPmf> {
    if !smoothing.is_finite() || smoothing < 0.0 {
        return Err(Error::InvalidPmf(format!("smoothing must be >= 0, got {smoothing}")));
    }
    if labels.len() != counts.len() {
        return Err(Error::DimensionMismatch { expected: labels.len(), actual: counts.len() });
    }
    let total: u64 = counts.iter().sum();
    if total == 0 && smoothing == 0.0 {
        return Err(Error::NoData);
    }
    let denom = total as f64 + counts.len() as f64 * smoothing;
    let probs = counts.iter().map(|&c| (c as f64 + smoothing) / denom).collect();
    BeamPmf::new(labels.to_vec(), probs)
}
