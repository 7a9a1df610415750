//! Seeded Monte Carlo evaluation of search strategies.
//!
//! Trial `i` of a run with seed `s` draws from ChaCha8 keyed by
//! `seed_from_u64(s)` on stream `i`, so every trial can be reproduced on its
//! own and the results do not depend on how trials are spread over threads.
//! Realizations are drawn by inverse CDF over label order: Tx first, then Rx,
//! one uniform `f64` each.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beamstats::BeamPmf;
use crate::codebook::{Codebook, SparseChannel};
use crate::error::{Error, Result};
use crate::oracle::{ChannelOracle, IndexOracle, PhysicalOracle};
use crate::strategies::{FailedPairMemory, SearchStrategy};

/// Ground-truth beam pair of one channel realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Realization {
    pub true_tx_beam: usize,
    pub true_rx_beam: usize,
}

#[derive(Debug, Clone)]
pub struct RealizationSampler {
    tx_cdf: Vec<f64>,
    rx_cdf: Vec<f64>,
}

fn cdf(pmf: &BeamPmf) -> Vec<f64> {
    pmf.probs()
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect()
}

fn invert(cdf: &[f64], u: f64) -> usize {
    // the last entry may fall a hair short of 1.0
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

impl RealizationSampler {
    pub fn new(tx: &BeamPmf, rx: &BeamPmf) -> Self {
        Self { tx_cdf: cdf(tx), rx_cdf: cdf(rx) }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Realization {
        let tx = invert(&self.tx_cdf, rng.random());
        let rx = invert(&self.rx_cdf, rng.random());
        Realization { true_tx_beam: tx, true_rx_beam: rx }
    }
}

pub fn sample_realization<R: Rng + ?Sized>(tx: &BeamPmf, rx: &BeamPmf, rng: &mut R) -> Realization {
    RealizationSampler::new(tx, rx).sample(rng)
}

/// Generator for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// How each realization is turned into a channel oracle.
#[derive(Debug, Clone)]
pub enum OracleModel {
    Index,
    /// A single unit-gain path on the grid directions of the true beams,
    /// observed through the codebooks.
    Physical {
        tx_codebook: Codebook,
        rx_codebook: Codebook,
        threshold: f64,
        noise_variance: Option<f64>,
    },
}

impl OracleModel {
    fn oracle(&self, r: Realization, noise_seed: u64) -> Result<Box<dyn ChannelOracle>> {
        Ok(match self {
            OracleModel::Index => Box::new(IndexOracle::new(r.true_tx_beam, r.true_rx_beam)),
            OracleModel::Physical { tx_codebook, rx_codebook, threshold, noise_variance } => {
                let channel = SparseChannel::on_grid(tx_codebook, rx_codebook, r.true_tx_beam, r.true_rx_beam)?;
                let oracle = PhysicalOracle::new(channel, tx_codebook.clone(), rx_codebook.clone(), *threshold)?;
                match noise_variance {
                    Some(v) => Box::new(oracle.with_noise(*v, noise_seed)?),
                    None => Box::new(oracle),
                }
            }
        })
    }

    fn check(&self, tx: &BeamPmf, rx: &BeamPmf) -> Result<()> {
        if let OracleModel::Physical { tx_codebook, rx_codebook, .. } = self {
            if tx_codebook.len() != tx.len() {
                return Err(Error::DimensionMismatch { expected: tx_codebook.len(), actual: tx.len() });
            }
            if rx_codebook.len() != rx.len() {
                return Err(Error::DimensionMismatch { expected: rx_codebook.len(), actual: rx.len() });
            }
        }
        Ok(())
    }
}

/// Aggregated outcome of a batch of trials.
///
/// `histogram` counts successful trials by test count; failed trials are
/// counted in `failures` only, so `Σ histogram + failures = n_trials`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrialStats {
    pub n_trials: u64,
    pub failures: u64,
    pub histogram: BTreeMap<usize, u64>,
    /// Mean test count over successful trials.
    pub mean_tests: f64,
    /// Fraction of all trials identified within `k` tests.
    pub success_within_k: BTreeMap<usize, f64>,
    /// Identified Tx beams, per beam.
    pub tx_hits: Vec<u64>,
    pub rx_hits: Vec<u64>,
}

#[derive(Debug, Clone, Default)]
struct Tally {
    trials: u64,
    failures: u64,
    histogram: BTreeMap<usize, u64>,
    tx_hits: Vec<u64>,
    rx_hits: Vec<u64>,
}

impl Tally {
    fn new(ntx: usize, nrx: usize) -> Self {
        Self { tx_hits: vec![0; ntx], rx_hits: vec![0; nrx], ..Default::default() }
    }

    fn record(&mut self, tests: usize, found: Option<(usize, usize)>) {
        self.trials += 1;
        match found {
            Some((t, r)) => {
                *self.histogram.entry(tests).or_insert(0) += 1;
                self.tx_hits[t] += 1;
                self.rx_hits[r] += 1;
            }
            None => self.failures += 1,
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.trials += other.trials;
        self.failures += other.failures;
        for (k, v) in other.histogram {
            *self.histogram.entry(k).or_insert(0) += v;
        }
        for (a, b) in self.tx_hits.iter_mut().zip(other.tx_hits) {
            *a += b;
        }
        for (a, b) in self.rx_hits.iter_mut().zip(other.rx_hits) {
            *a += b;
        }
        self
    }

    fn into_stats(self) -> TrialStats {
        TrialStats::from_parts(self.trials, self.failures, self.histogram, self.tx_hits, self.rx_hits)
    }
}

impl TrialStats {
    fn from_parts(
        n_trials: u64,
        failures: u64,
        histogram: BTreeMap<usize, u64>,
        tx_hits: Vec<u64>,
        rx_hits: Vec<u64>,
    ) -> Self {
        let successes: u64 = histogram.values().sum();
        let weighted: u128 = histogram.iter().map(|(&k, &c)| k as u128 * c as u128).sum();
        let mean_tests = if successes == 0 { f64::NAN } else { weighted as f64 / successes as f64 };
        let max = histogram.keys().next_back().copied().unwrap_or(0);
        let mut success_within_k = BTreeMap::new();
        let mut cumulative = 0u64;
        for k in 1..=max {
            cumulative += histogram.get(&k).copied().unwrap_or(0);
            success_within_k.insert(k, cumulative as f64 / n_trials as f64);
        }
        Self { n_trials, failures, histogram, mean_tests, success_within_k, tx_hits, rx_hits }
    }

    /// Fraction of trials that needed exactly `k` tests.
    pub fn fraction_at(&self, k: usize) -> f64 {
        self.histogram.get(&k).copied().unwrap_or(0) as f64 / self.n_trials as f64
    }

    pub fn within(&self, k: usize) -> f64 {
        match self.success_within_k.range(..=k).next_back() {
            Some((_, &f)) => f,
            None => 0.0,
        }
    }

    /// Combines two batches run over disjoint trial ranges.
    pub fn merge(&self, other: &TrialStats) -> TrialStats {
        let mut histogram = self.histogram.clone();
        for (&k, &v) in &other.histogram {
            *histogram.entry(k).or_insert(0) += v;
        }
        let add = |a: &[u64], b: &[u64]| a.iter().zip(b).map(|(x, y)| x + y).collect();
        TrialStats::from_parts(
            self.n_trials + other.n_trials,
            self.failures + other.failures,
            histogram,
            add(&self.tx_hits, &other.tx_hits),
            add(&self.rx_hits, &other.rx_hits),
        )
    }

    /// `tests,count,cumulativeFraction` with one row per observed test count.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tests,count,cumulativeFraction\n");
        let mut cumulative = 0u64;
        for (&k, &count) in &self.histogram {
            cumulative += count;
            let _ = writeln!(out, "{k},{count},{:.6}", cumulative as f64 / self.n_trials as f64);
        }
        out
    }
}

fn validate(n_trials: u64) -> Result<()> {
    if n_trials == 0 {
        return Err(Error::InvalidConfig("at least one trial is required".into()));
    }
    Ok(())
}

fn check_dims(strategy: &dyn SearchStrategy, tx: &BeamPmf, rx: &BeamPmf) -> Result<()> {
    let (ntx, nrx) = strategy.dimensions();
    if ntx != tx.len() {
        return Err(Error::DimensionMismatch { expected: ntx, actual: tx.len() });
    }
    if nrx != rx.len() {
        return Err(Error::DimensionMismatch { expected: nrx, actual: rx.len() });
    }
    Ok(())
}

/// Runs trials `first..first + n_trials`.
pub fn run_trial_range(
    strategy: &dyn SearchStrategy,
    model: &OracleModel,
    tx: &BeamPmf,
    rx: &BeamPmf,
    first: u64,
    n_trials: u64,
    seed: u64,
) -> Result<TrialStats> {
    let tallies = run_shared(&[strategy], model, tx, rx, first, n_trials, seed)?;
    Ok(tallies.into_iter().next().expect("one strategy").into_stats())
}

pub fn run_trials(
    strategy: &dyn SearchStrategy,
    model: &OracleModel,
    tx: &BeamPmf,
    rx: &BeamPmf,
    n_trials: u64,
    seed: u64,
) -> Result<TrialStats> {
    run_trial_range(strategy, model, tx, rx, 0, n_trials, seed)
}

/// Every strategy sees the same realization in each trial.
fn run_shared(
    strategies: &[&dyn SearchStrategy],
    model: &OracleModel,
    tx: &BeamPmf,
    rx: &BeamPmf,
    first: u64,
    n_trials: u64,
    seed: u64,
) -> Result<Vec<Tally>> {
    validate(n_trials)?;
    model.check(tx, rx)?;
    for s in strategies {
        check_dims(*s, tx, rx)?;
    }
    let sampler = RealizationSampler::new(tx, rx);
    let empty = || -> Vec<Tally> { strategies.iter().map(|_| Tally::new(tx.len(), rx.len())).collect() };
    (first..first + n_trials)
        .into_par_iter()
        .try_fold(empty, |mut tallies, trial| {
            let mut rng = trial_rng(seed, trial);
            let realization = sampler.sample(&mut rng);
            let noise_seed = rng.next_u64();
            for (strategy, tally) in strategies.iter().zip(tallies.iter_mut()) {
                let mut oracle = model.oracle(realization, noise_seed)?;
                let result = strategy.search(oracle.as_mut(), &mut FailedPairMemory::new());
                tally.record(result.tests_used, result.found_pair);
            }
            Ok::<_, Error>(tallies)
        })
        .try_reduce(empty, |a, b| Ok(a.into_iter().zip(b).map(|(x, y)| x.merge(y)).collect()))
}

/// Runs `f` on a dedicated pool of `threads` workers; `None` uses rayon's
/// default (all cores).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ComparisonEntry {
    pub name: String,
    pub stats: TrialStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Comparison {
    pub entries: Vec<ComparisonEntry>,
    /// `savings[a][b]`: percent of tests strategy `a` saves against `b`.
    pub savings: Vec<Vec<f64>>,
}

impl Comparison {
    pub fn entry(&self, name: &str) -> Option<&ComparisonEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// `100·(1 − mean(a)/mean(b))`
    pub fn savings_of(&self, a: &str, against: &str) -> Option<f64> {
        let (a, b) = (self.entry(a)?, self.entry(against)?);
        Some(savings_percent(a.stats.mean_tests, b.stats.mean_tests))
    }
}

pub fn savings_percent(mean: f64, baseline: f64) -> f64 {
    100.0 * (1.0 - mean / baseline)
}

/// Runs every strategy on one shared realization stream.
pub fn compare_strategies(
    strategies: &[(String, &dyn SearchStrategy)],
    model: &OracleModel,
    tx: &BeamPmf,
    rx: &BeamPmf,
    n_trials: u64,
    seed: u64,
) -> Result<Comparison> {
    if strategies.len() < 2 {
        return Err(Error::InvalidConfig("comparison needs at least two strategies".into()));
    }
    let refs: Vec<&dyn SearchStrategy> = strategies.iter().map(|(_, s)| *s).collect();
    let tallies = run_shared(&refs, model, tx, rx, 0, n_trials, seed)?;
    let entries: Vec<ComparisonEntry> = strategies
        .iter()
        .zip(tallies)
        .map(|((name, _), t)| ComparisonEntry { name: name.clone(), stats: t.into_stats() })
        .collect();
    let savings = entries
        .iter()
        .map(|a| entries.iter().map(|b| savings_percent(a.stats.mean_tests, b.stats.mean_tests)).collect())
        .collect();
    Ok(Comparison { entries, savings })
}
