//! Beam search strategies over a [`ChannelOracle`].
//!
//! Every strategy is a deterministic function of the oracle answers and its
//! own configuration. Fine-beam pairs that failed are written to a
//! [`FailedPairMemory`] and are never submitted again while that memory
//! lives, which is what makes repeated searches (several paths of one
//! channel) cheaper than the first.

mod analysis;
mod exhaustive;
mod hybrid;
mod mars;
mod multilevel;

pub use analysis::{
    expected_tests_bruteforce, mean_tests, op_operator, pure_mars_expected_tests, success_probabilities, ExpectedCost,
};
pub use exhaustive::ExhaustiveSearch;
pub use hybrid::HybridSearch;
pub use mars::{FallbackPolicy, MarsSearch, Thresholds};
pub use multilevel::{MlHierarchySpec, MlSearch};

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::beamstats::{contiguous_grouping, min_entropy_grouping, BeamPmf, Grouping};
use crate::error::{Error, Result};
use crate::oracle::{ChannelOracle, Probe};

/// Fine (tx, rx) beam pairs already known not to close the link.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FailedPairMemory {
    pairs: HashSet<(usize, usize)>,
}

impl FailedPairMemory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contains(&self, tx: usize, rx: usize) -> bool {
        self.pairs.contains(&(tx, rx))
    }

    pub fn insert(&mut self, tx: usize, rx: usize) -> bool {
        self.pairs.insert((tx, rx))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn clear(&mut self) {
        self.pairs.clear();
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestRecord {
    pub tx: Vec<usize>,
    pub rx: Vec<usize>,
    pub linked: bool,
    pub rssi: f64,
}

impl TestRecord {
    pub fn is_fine(&self) -> bool {
        self.tx.len() == 1 && self.rx.len() == 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SearchResult {
    pub found_pair: Option<(usize, usize)>,
    pub tests_used: usize,
    pub test_log: Vec<TestRecord>,
}

pub trait SearchStrategy: Send + Sync {
    fn name(&self) -> &str;

    /// Beam counts `(N_TX, N_RX)` the strategy was built for.
    fn dimensions(&self) -> (usize, usize);

    fn search(&self, oracle: &mut dyn ChannelOracle, memory: &mut FailedPairMemory) -> SearchResult;
}

/// Bookkeeping shared by the strategies: runs tests, keeps the log and the
/// failed-pair memory in sync.
pub(crate) struct Session<'a> {
    oracle: &'a mut dyn ChannelOracle,
    memory: &'a mut FailedPairMemory,
    log: Vec<TestRecord>,
}

impl<'a> Session<'a> {
    pub(crate) fn new(oracle: &'a mut dyn ChannelOracle, memory: &'a mut FailedPairMemory) -> Self {
        Self { oracle, memory, log: Vec::new() }
    }

    pub(crate) fn is_known_failed(&self, tx: usize, rx: usize) -> bool {
        self.memory.contains(tx, rx)
    }

    /// Tests one fine pair. Returns `None` without testing when the pair is in
    /// memory.
    pub(crate) fn pair(&mut self, tx: usize, rx: usize) -> Option<Probe> {
        if self.memory.contains(tx, rx) {
            return None;
        }
        let probe = self.oracle.test_group(&[tx], &[rx]);
        if !probe.linked {
            self.memory.insert(tx, rx);
        }
        self.log.push(TestRecord { tx: vec![tx], rx: vec![rx], linked: probe.linked, rssi: probe.rssi });
        Some(probe)
    }

    /// Tests a broad beam pair; single-beam sets go through [`Self::pair`].
    pub(crate) fn group(&mut self, tx: &[usize], rx: &[usize]) -> Option<Probe> {
        if tx.len() == 1 && rx.len() == 1 {
            return self.pair(tx[0], rx[0]);
        }
        let probe = self.oracle.test_group(tx, rx);
        self.log.push(TestRecord { tx: tx.to_vec(), rx: rx.to_vec(), linked: probe.linked, rssi: probe.rssi });
        Some(probe)
    }

    pub(crate) fn finish(self, found_pair: Option<(usize, usize)>) -> SearchResult {
        SearchResult { found_pair, tests_used: self.log.len(), test_log: self.log }
    }
}

/// Runs `strategy` repeatedly against the same oracle, sharing one memory, to
/// identify up to `count` paths. Each identified pair is added to the memory
/// so later searches skip it along with every failed pair.
pub fn find_paths(
    strategy: &dyn SearchStrategy,
    oracle: &mut dyn ChannelOracle,
    memory: &mut FailedPairMemory,
    count: usize,
) -> Vec<SearchResult> {
    let mut results = Vec::with_capacity(count);
    for _ in 0..count {
        let result = strategy.search(oracle, memory);
        let found = result.found_pair;
        results.push(result);
        match found {
            Some((t, r)) => {
                memory.insert(t, r);
            }
            None => break,
        }
    }
    results
}

/// How a strategy obtains its broad-beam grouping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GroupingSpec {
    /// Equal contiguous blocks.
    Count(usize),
    Explicit(Grouping),
}

impl GroupingSpec {
    /// Resolves to a concrete grouping. With a bare count, `lowest_entropy`
    /// picks the best cyclic shift; otherwise blocks start at beam 0.
    pub fn resolve(&self, pmf: &BeamPmf, lowest_entropy: bool) -> Result<Grouping> {
        match self {
            GroupingSpec::Count(k) if lowest_entropy => min_entropy_grouping(pmf, *k),
            GroupingSpec::Count(k) => contiguous_grouping(pmf.len(), *k, 0),
            GroupingSpec::Explicit(g) if g.num_beams() == pmf.len() => Ok(g.clone()),
            GroupingSpec::Explicit(g) => Err(Error::InvalidGrouping(format!(
                "grouping covers {} beams but the PMF has {}",
                g.num_beams(),
                pmf.len()
            ))),
        }
    }
}

/// Serializable strategy description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase", deny_unknown_fields)]
pub enum StrategyConfig {
    #[serde(rename_all = "camelCase")]
    Exhaustive {
        #[serde(default)]
        stop_at_first: bool,
    },
    #[serde(rename_all = "camelCase")]
    Ml {
        tx_groups: Vec<GroupingSpec>,
        #[serde(default)]
        rx_groups: Vec<GroupingSpec>,
    },
    #[serde(rename_all = "camelCase")]
    Mars {
        #[serde(default)]
        thresholds: Thresholds,
        #[serde(default)]
        fallback: FallbackPolicy,
    },
    #[serde(rename_all = "camelCase")]
    Hybrid { tx_groups: Vec<GroupingSpec> },
}

impl StrategyConfig {
    pub fn name(&self) -> &'static str {
        match self {
            StrategyConfig::Exhaustive { .. } => "exhaustive",
            StrategyConfig::Ml { .. } => "ml",
            StrategyConfig::Mars { .. } => "mars",
            StrategyConfig::Hybrid { .. } => "hybrid",
        }
    }

    pub fn build(&self, tx: &BeamPmf, rx: &BeamPmf) -> Result<Box<dyn SearchStrategy>> {
        Ok(match self {
            StrategyConfig::Exhaustive { stop_at_first } => {
                Box::new(ExhaustiveSearch::new(tx.len(), rx.len(), !stop_at_first)?)
            }
            StrategyConfig::Ml { tx_groups, rx_groups } => {
                let levels = |specs: &[GroupingSpec], pmf: &BeamPmf| -> Result<Vec<Grouping>> {
                    specs.iter().map(|s| s.resolve(pmf, false)).collect()
                };
                let spec = MlHierarchySpec::new(tx.len(), levels(tx_groups, tx)?, rx.len(), levels(rx_groups, rx)?)?;
                Box::new(MlSearch::new(spec))
            }
            StrategyConfig::Mars { thresholds, fallback } => Box::new(MarsSearch::new(tx, rx, *thresholds, *fallback)?),
            StrategyConfig::Hybrid { tx_groups } => {
                if tx_groups.is_empty() {
                    return Err(Error::InvalidConfig("hybrid search needs at least one grouping level".into()));
                }
                let mut levels = Vec::with_capacity(tx_groups.len());
                for spec in tx_groups {
                    // deeper levels refine the previous one, so only the
                    // first level may pick a shifted grouping
                    levels.push(spec.resolve(tx, levels.is_empty())?);
                }
                Box::new(HybridSearch::new(tx, rx, levels)?)
            }
        })
    }
}

#[cfg(test)]
pub(crate) mod testing {
    use super::*;
    use crate::oracle::IndexOracle;

    pub fn run(strategy: &dyn SearchStrategy, tx: usize, rx: usize) -> SearchResult {
        let mut oracle = IndexOracle::new(tx, rx);
        let mut memory = FailedPairMemory::new();
        let result = strategy.search(&mut oracle, &mut memory);
        assert_eq!(oracle.test_count(), result.tests_used);
        result
    }

    /// No fine pair or broad pair appears twice in a log.
    pub fn has_no_repeats(result: &SearchResult) -> bool {
        let mut seen = HashSet::new();
        result.test_log.iter().all(|r| seen.insert((r.tx.clone(), r.rx.clone())))
    }
}
