//! Link tests: the only way a search strategy learns about the channel.
//!
//! A test takes a set of Tx beams and a set of Rx beams. Single-beam sets are
//! ordinary narrow-beam tests; larger sets stand for a broad beam covering
//! those fine beams.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::codebook::{rssi, Codebook, SparseChannel};
use crate::error::{Error, Result};

/// Outcome of a single link test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub linked: bool,
    /// Received signal strength; `1.0`/`0.0` for the index oracle.
    pub rssi: f64,
}

pub trait ChannelOracle {
    /// Tests a (possibly broad) Tx beam against a (possibly broad) Rx beam.
    fn test_group(&mut self, tx: &[usize], rx: &[usize]) -> Probe;

    /// Number of tests performed so far.
    fn test_count(&self) -> usize;

    fn test(&mut self, tx: usize, rx: usize) -> bool {
        self.test_group(&[tx], &[rx]).linked
    }
}

/// Noiseless oracle that knows the ground-truth beam pairs of a realization.
/// A test succeeds iff some true pair lies inside the tested sets.
#[derive(Debug, Clone)]
pub struct IndexOracle {
    truths: Vec<(usize, usize)>,
    tests: usize,
}

impl IndexOracle {
    pub fn new(tx: usize, rx: usize) -> Self {
        Self::with_paths(vec![(tx, rx)])
    }

    /// Several resolvable paths, one `(tx, rx)` beam pair each.
    pub fn with_paths(truths: Vec<(usize, usize)>) -> Self {
        Self { truths, tests: 0 }
    }

    pub fn truths(&self) -> &[(usize, usize)] {
        &self.truths
    }
}

impl ChannelOracle for IndexOracle {
    fn test_group(&mut self, tx: &[usize], rx: &[usize]) -> Probe {
        self.tests += 1;
        let linked = self.truths.iter().any(|(t, r)| tx.contains(t) && rx.contains(r));
        Probe { linked, rssi: if linked { 1.0 } else { 0.0 } }
    }

    fn test_count(&self) -> usize {
        self.tests
    }
}

/// Default detection threshold: half the full-array amplitude `√(N_TX·N_RX)`.
pub fn default_detection_threshold(ntx: usize, nrx: usize) -> f64 {
    0.5 * ((ntx * nrx) as f64).sqrt()
}

/// Oracle that beamforms over a [`SparseChannel`] and compares RSSI against a
/// detection threshold.
///
/// Broad beams carry less gain, so for a test over `|tx|·|rx|` fine beams the
/// threshold is divided by `√(|tx|·|rx|)`.
#[derive(Debug, Clone)]
pub struct PhysicalOracle {
    channel: SparseChannel,
    tx_codebook: Codebook,
    rx_codebook: Codebook,
    threshold: f64,
    noise: Option<(Normal<f64>, ChaCha8Rng)>,
    tests: usize,
}

impl PhysicalOracle {
    pub fn new(channel: SparseChannel, tx_codebook: Codebook, rx_codebook: Codebook, threshold: f64) -> Result<Self> {
        if threshold.is_nan() || threshold <= 0.0 {
            return Err(Error::InvalidConfig(format!("detection threshold must be > 0, got {threshold}")));
        }
        if tx_codebook.array().num_elements != channel.tx_array.num_elements {
            return Err(Error::DimensionMismatch {
                expected: channel.tx_array.num_elements,
                actual: tx_codebook.array().num_elements,
            });
        }
        if rx_codebook.array().num_elements != channel.rx_array.num_elements {
            return Err(Error::DimensionMismatch {
                expected: channel.rx_array.num_elements,
                actual: rx_codebook.array().num_elements,
            });
        }
        Ok(Self { channel, tx_codebook, rx_codebook, threshold, noise: None, tests: 0 })
    }

    /// Adds circular complex Gaussian noise of the given variance to every
    /// receiver output.
    pub fn with_noise(mut self, variance: f64, seed: u64) -> Result<Self> {
        if variance.is_nan() || variance < 0.0 {
            return Err(Error::InvalidConfig(format!("noise variance must be >= 0, got {variance}")));
        }
        let normal = Normal::new(0.0, (variance / 2.0).sqrt()).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        self.noise = Some((normal, ChaCha8Rng::seed_from_u64(seed)));
        Ok(self)
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }
}

impl ChannelOracle for PhysicalOracle {
    fn test_group(&mut self, tx: &[usize], rx: &[usize]) -> Probe {
        self.tests += 1;
        let wt = self.tx_codebook.broad_beam(tx);
        let wr = self.rx_codebook.broad_beam(rx);
        let mut y = self.channel.response(&wt, &wr).expect("codebooks are checked against the channel at construction");
        if let Some((normal, rng)) = &mut self.noise {
            y += Complex64::new(normal.sample(rng), normal.sample(rng));
        }
        let strength = y.norm();
        let threshold = self.threshold / ((tx.len() * rx.len()) as f64).sqrt();
        Probe { linked: strength >= threshold, rssi: strength }
    }

    fn test_count(&self) -> usize {
        self.tests
    }
}

/// RSSI of every fine beam pair, `[tx][rx]`.
pub fn rssi_table(channel: &SparseChannel, tx: &Codebook, rx: &Codebook) -> Result<Vec<Vec<f64>>> {
    tx.beams().iter().map(|t| rx.beams().iter().map(|r| rssi(channel, t, r)).collect()).collect()
}
