//! Expected search cost: the closed form for ranked search and a brute-force
//! enumeration over every realization.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{FailedPairMemory, SearchStrategy};
use crate::beamstats::BeamPmf;
use crate::error::{Error, Result};
use crate::oracle::IndexOracle;

fn check_ranked(p: &[f64]) -> Result<()> {
    match p.windows(2).position(|w| w[1] > w[0]) {
        Some(i) => Err(Error::NotRanked(i + 1)),
        None => Ok(()),
    }
}

/// Kronecker product of two descending PMFs: entry `k` is the probability
/// that ranked search succeeds exactly at test `k + 1`.
pub fn success_probabilities(outer: &[f64], inner: &[f64]) -> Result<Vec<f64>> {
    check_ranked(outer)?;
    check_ranked(inner)?;
    Ok(outer.iter().flat_map(|o| inner.iter().map(move |i| o * i)).collect())
}

/// Kronecker product weighted by 1-based position. `outer` is the side
/// searched in the outer loop (Rx unless the roles were swapped).
pub fn op_operator(outer: &[f64], inner: &[f64]) -> Result<Vec<f64>> {
    Ok(success_probabilities(outer, inner)?.into_iter().enumerate().map(|(i, k)| k * (i + 1) as f64).collect())
}

pub fn mean_tests(x: &[f64]) -> f64 {
    x.iter().sum()
}

/// Closed-form mean test count of pure ranked search, applying the same role
/// swap as [`super::MarsSearch`].
pub fn pure_mars_expected_tests(tx: &BeamPmf, rx: &BeamPmf) -> Result<f64> {
    let (outer, inner) = if rx.entropy() > tx.entropy() { (tx, rx) } else { (rx, tx) };
    Ok(mean_tests(&op_operator(&outer.ranked_probs(), &inner.ranked_probs())?))
}

/// Exact distribution of a strategy's test count under independent Tx/Rx
/// PMFs, from running it once on every realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExpectedCost {
    /// `Σ P(realization)·testsUsed` over all realizations.
    pub mean: f64,
    /// Probability of each test count.
    pub distribution: BTreeMap<usize, f64>,
    /// Probability mass of realizations the strategy failed to identify.
    pub failure_probability: f64,
}

impl ExpectedCost {
    /// Probability of finishing successfully within `k` tests.
    pub fn prob_within(&self, k: usize) -> f64 {
        self.distribution.range(..=k).map(|(_, p)| p).sum()
    }
}

pub fn expected_tests_bruteforce(strategy: &dyn SearchStrategy, tx: &BeamPmf, rx: &BeamPmf) -> ExpectedCost {
    let mut mean = 0.0;
    let mut failure_probability = 0.0;
    let mut distribution = BTreeMap::new();
    for r in 0..rx.len() {
        for t in 0..tx.len() {
            let p = tx.prob(t) * rx.prob(r);
            let mut oracle = IndexOracle::new(t, r);
            let result = strategy.search(&mut oracle, &mut FailedPairMemory::new());
            mean += p * result.tests_used as f64;
            if result.found_pair == Some((t, r)) {
                *distribution.entry(result.tests_used).or_insert(0.0) += p;
            } else {
                failure_probability += p;
            }
        }
    }
    ExpectedCost { mean, distribution, failure_probability }
}
