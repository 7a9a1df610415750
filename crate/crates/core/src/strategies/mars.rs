//! Memory-assisted statistically-ranked (MarS) search.
//!
//! The lower-entropy side is the outer loop. For each outer beam, in rank
//! order, inner beams are tried in rank order until their cumulative
//! probability reaches the inner threshold; then the next outer beam is
//! taken, until the outer cumulative probability reaches its own threshold.
//! Whatever is still untested after that is covered by the fallback policy.

use serde::{Deserialize, Serialize};

use super::{FailedPairMemory, SearchResult, SearchStrategy, Session};
use crate::beamstats::{min_entropy_grouping, reached, BeamPmf, Grouping, Ranking};
use crate::error::{Error, Result};
use crate::oracle::ChannelOracle;

/// Cumulative-probability cut-offs per side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    pub tx: f64,
    pub rx: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { tx: 0.75, rx: 0.75 }
    }
}

/// What to do once both cumulative thresholds have been reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "policy", rename_all = "camelCase")]
pub enum FallbackPolicy {
    /// Keep going through the remaining pairs in Kronecker rank order.
    #[default]
    PureRankedRemainder,
    /// For each outer beam, split the untested inner beams into contiguous
    /// broad beams and search them hierarchically.
    #[serde(rename_all = "camelCase")]
    MlOverRemainder { num_groups: usize },
}

#[derive(Debug, Clone)]
struct Side {
    order: Vec<usize>,
    probs: Vec<f64>,
    labels: Vec<String>,
    threshold: f64,
}

impl Side {
    fn new(pmf: &BeamPmf, threshold: f64) -> Self {
        Self { order: Ranking::of(pmf).order, probs: pmf.probs().to_vec(), labels: pmf.labels().to_vec(), threshold }
    }
}

#[derive(Debug, Clone)]
pub struct MarsSearch {
    outer: Side,
    inner: Side,
    /// True when Tx is the outer side.
    tx_outer: bool,
    fallback: FallbackPolicy,
}

impl MarsSearch {
    /// Swaps Tx into the outer loop when the Rx PMF has higher entropy.
    pub fn new(tx: &BeamPmf, rx: &BeamPmf, thresholds: Thresholds, fallback: FallbackPolicy) -> Result<Self> {
        for (side, t) in [("Tx", thresholds.tx), ("Rx", thresholds.rx)] {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::InvalidConfig(format!("{side} threshold must be in (0, 1], got {t}")));
            }
        }
        if let FallbackPolicy::MlOverRemainder { num_groups } = fallback {
            if num_groups < 2 {
                return Err(Error::InvalidConfig("fallback needs at least two broad beams".into()));
            }
        }
        let tx_outer = rx.entropy() > tx.entropy();
        let (tx_side, rx_side) = (Side::new(tx, thresholds.tx), Side::new(rx, thresholds.rx));
        let (outer, inner) = if tx_outer { (tx_side, rx_side) } else { (rx_side, tx_side) };
        Ok(Self { outer, inner, tx_outer, fallback })
    }

    /// Plain ranked search over the full Kronecker order.
    pub fn pure(tx: &BeamPmf, rx: &BeamPmf) -> Result<Self> {
        Self::new(tx, rx, Thresholds { tx: 1.0, rx: 1.0 }, FallbackPolicy::PureRankedRemainder)
    }

    pub fn tx_is_outer(&self) -> bool {
        self.tx_outer
    }

    fn pair(&self, outer: usize, inner: usize) -> (usize, usize) {
        if self.tx_outer {
            (outer, inner)
        } else {
            (inner, outer)
        }
    }

    fn try_pair(&self, session: &mut Session, outer: usize, inner: usize) -> Option<(usize, usize)> {
        let (tx, rx) = self.pair(outer, inner);
        session.pair(tx, rx).filter(|p| p.linked).map(|_| (tx, rx))
    }

    fn ranked_remainder(&self, session: &mut Session) -> Option<(usize, usize)> {
        for &o in &self.outer.order {
            for &i in &self.inner.order {
                if let Some(found) = self.try_pair(session, o, i) {
                    return Some(found);
                }
            }
        }
        None
    }

    fn ml_remainder(&self, session: &mut Session, num_groups: usize) -> Option<(usize, usize)> {
        for &o in &self.outer.order {
            let open: Vec<usize> = (0..self.inner.probs.len())
                .filter(|&i| {
                    let (tx, rx) = self.pair(o, i);
                    !session.is_known_failed(tx, rx)
                })
                .collect();
            if open.is_empty() {
                continue;
            }
            for group in self.remainder_groups(&open, num_groups) {
                if group.len() > 1 {
                    let members: Vec<usize> = group.clone();
                    let probe =
                        if self.tx_outer { session.group(&[o], &members) } else { session.group(&members, &[o]) };
                    if !probe.is_some_and(|p| p.linked) {
                        continue;
                    }
                }
                for i in self.ranked(&group) {
                    if let Some(found) = self.try_pair(session, o, i) {
                        return Some(found);
                    }
                }
            }
        }
        None
    }

    /// Contiguous broad beams over `open` (inner beams in label order),
    /// ordered by descending probability mass.
    fn remainder_groups(&self, open: &[usize], num_groups: usize) -> Vec<Vec<usize>> {
        if open.len() <= num_groups {
            return self.ranked(open).into_iter().map(|i| vec![i]).collect();
        }
        let weights: Vec<f64> = open.iter().map(|&i| self.inner.probs[i]).collect();
        let labels = open.iter().map(|&i| self.inner.labels[i].clone()).collect();
        let local = BeamPmf::from_weights(labels, &weights)
            .ok()
            .filter(|_| open.len().is_multiple_of(num_groups))
            .and_then(|pmf| min_entropy_grouping(&pmf, num_groups).ok())
            .unwrap_or_else(|| near_equal_blocks(open.len(), num_groups));
        let mut groups: Vec<Vec<usize>> = local.groups().iter().map(|g| g.iter().map(|&k| open[k]).collect()).collect();
        let mass = |g: &Vec<usize>| g.iter().map(|&i| self.inner.probs[i]).sum::<f64>();
        groups.sort_by(|a, b| mass(b).total_cmp(&mass(a)));
        groups
    }

    fn ranked(&self, beams: &[usize]) -> Vec<usize> {
        self.inner.order.iter().copied().filter(|i| beams.contains(i)).collect()
    }
}

/// `n` indices in `k` contiguous blocks whose sizes differ by at most one.
fn near_equal_blocks(n: usize, k: usize) -> Grouping {
    let (base, extra) = (n / k, n % k);
    let mut start = 0;
    let groups = (0..k)
        .map(|g| {
            let len = base + usize::from(g < extra);
            let block = (start..start + len).collect();
            start += len;
            block
        })
        .collect();
    Grouping::new(groups, n).expect("blocks partition 0..n")
}

impl SearchStrategy for MarsSearch {
    fn name(&self) -> &str {
        "mars"
    }

    fn dimensions(&self) -> (usize, usize) {
        let (o, i) = (self.outer.probs.len(), self.inner.probs.len());
        if self.tx_outer {
            (o, i)
        } else {
            (i, o)
        }
    }

    fn search(&self, oracle: &mut dyn ChannelOracle, memory: &mut FailedPairMemory) -> SearchResult {
        let mut session = Session::new(oracle, memory);
        let last_inner = self.inner.order.len() - 1;
        let last_outer = self.outer.order.len() - 1;
        let mut outer_cum = 0.0;
        for (oi, &o) in self.outer.order.iter().enumerate() {
            outer_cum += self.outer.probs[o];
            let mut inner_cum = 0.0;
            for (ii, &i) in self.inner.order.iter().enumerate() {
                inner_cum += self.inner.probs[i];
                if let Some(found) = self.try_pair(&mut session, o, i) {
                    return session.finish(Some(found));
                }
                if ii == last_inner || reached(inner_cum, self.inner.threshold) {
                    break;
                }
            }
            if oi == last_outer || reached(outer_cum, self.outer.threshold) {
                break;
            }
        }
        let found = match self.fallback {
            FallbackPolicy::PureRankedRemainder => self.ranked_remainder(&mut session),
            FallbackPolicy::MlOverRemainder { num_groups } => self.ml_remainder(&mut session, num_groups),
        };
        session.finish(found)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamstats::fixtures::{arb_pmf, table1_tx, table2_rx, table5_tx};
    use crate::oracle::IndexOracle;
    use crate::strategies::testing::{has_no_repeats, run};
    use proptest::prelude::*;

    #[test]
    fn table_three_first_tests() {
        let s = MarsSearch::new(&table1_tx(), &table2_rx(), Thresholds::default(), FallbackPolicy::default()).unwrap();
        assert!(!s.tx_is_outer());
        assert_eq!(run(&s, 4, 1).tests_used, 1);
        assert_eq!(run(&s, 3, 1).tests_used, 2);
        // (T5, R1): Rx rank 2, Tx rank 1
        assert_eq!(run(&s, 4, 0).tests_used, 10);
    }

    #[test]
    fn kronecker_position_formula_for_every_realization() {
        let (tx, rx) = (table1_tx(), table2_rx());
        let s = MarsSearch::new(&tx, &rx, Thresholds::default(), FallbackPolicy::default()).unwrap();
        let (tr, rr) = (tx.rank(), rx.rank());
        for t in 0..9 {
            for r in 0..3 {
                let res = run(&s, t, r);
                assert_eq!(res.tests_used, (rr.ranks[r] - 1) * 9 + tr.ranks[t]);
                assert_eq!(res.found_pair, Some((t, r)));
                assert!(res.test_log.last().unwrap().linked);
            }
        }
    }

    #[test]
    fn table_five_t4_r2_takes_five() {
        let s = MarsSearch::new(&table5_tx(), &table2_rx(), Thresholds::default(), FallbackPolicy::default()).unwrap();
        let res = run(&s, 3, 1);
        assert_eq!(res.tests_used, 5);
        let txs: Vec<usize> = res.test_log.iter().map(|r| r.tx[0]).collect();
        assert_eq!(txs, vec![4, 7, 5, 0, 3]);
    }

    #[test]
    fn swaps_when_rx_is_more_random() {
        // Rx uniform over 4, Tx peaked over 2
        let tx = BeamPmf::with_prefix("T", vec![0.9, 0.1]).unwrap();
        let rx = BeamPmf::uniform("R", 4).unwrap();
        let s = MarsSearch::pure(&tx, &rx).unwrap();
        assert!(s.tx_is_outer());
        // Tx outer: (T1,R1),(T1,R2),(T1,R3)...
        assert_eq!(run(&s, 0, 2).tests_used, 3);
        assert_eq!(run(&s, 1, 0).tests_used, 5);
    }

    #[test]
    fn threshold_walks_second_rx_before_fallback() {
        // Rx threshold 0.9 needs R2 and R1; each Rx stops after T5, T4.
        let th = Thresholds { tx: 0.75, rx: 0.9 };
        let s = MarsSearch::new(&table1_tx(), &table2_rx(), th, FallbackPolicy::default()).unwrap();
        // (T6, R2) is first reached in the fallback after 4 threshold tests
        assert_eq!(run(&s, 5, 1).tests_used, 5);
        assert_eq!(run(&s, 4, 0).tests_used, 3);
        assert_eq!(run(&s, 3, 0).tests_used, 4);
    }

    #[test]
    fn ml_fallback_finds_everything() {
        let (tx, rx) = (table5_tx(), table2_rx());
        let s = MarsSearch::new(&tx, &rx, Thresholds::default(), FallbackPolicy::MlOverRemainder { num_groups: 2 })
            .unwrap();
        for t in 0..9 {
            for r in 0..3 {
                let res = run(&s, t, r);
                assert_eq!(res.found_pair, Some((t, r)));
                assert!(has_no_repeats(&res));
            }
        }
        // (T9, R1): 5 threshold tests, 2 failed broad beams under R2, then
        // T1-T5 fails, T6-T9 links and T8, T6, T7, T9 are tried in rank order
        let pure = MarsSearch::new(&tx, &rx, Thresholds::default(), FallbackPolicy::default()).unwrap();
        assert_eq!(run(&s, 8, 0).tests_used, 13);
        assert_eq!(run(&pure, 8, 0).tests_used, 18);
    }

    #[test]
    fn invalid_parameters() {
        let (tx, rx) = (table1_tx(), table2_rx());
        let bad = Thresholds { tx: 0.0, rx: 0.5 };
        assert!(MarsSearch::new(&tx, &rx, bad, FallbackPolicy::default()).is_err());
        let bad = Thresholds { tx: 0.5, rx: 1.5 };
        assert!(MarsSearch::new(&tx, &rx, bad, FallbackPolicy::default()).is_err());
        let fb = FallbackPolicy::MlOverRemainder { num_groups: 1 };
        assert!(MarsSearch::new(&tx, &rx, Thresholds::default(), fb).is_err());
    }

    #[test]
    fn exhausted_search_reports_no_pair() {
        let s = MarsSearch::pure(&table1_tx(), &table2_rx()).unwrap();
        let mut oracle = IndexOracle::with_paths(vec![]);
        let res = s.search(&mut oracle, &mut FailedPairMemory::new());
        assert_eq!(res.found_pair, None);
        assert_eq!(res.tests_used, 27);
    }

    #[test]
    fn near_equal_blocks_sizes() {
        let g = near_equal_blocks(7, 3);
        assert_eq!(g.groups(), [vec![0, 1, 2], vec![3, 4], vec![5, 6]]);
    }

    fn thresholds() -> impl Strategy<Value = Thresholds> {
        (0.05f64..=1.0, 0.05f64..=1.0).prop_map(|(tx, rx)| Thresholds { tx, rx })
    }

    fn fallback() -> impl Strategy<Value = FallbackPolicy> {
        prop_oneof![
            Just(FallbackPolicy::PureRankedRemainder),
            (2usize..5).prop_map(|num_groups| FallbackPolicy::MlOverRemainder { num_groups }),
        ]
    }

    proptest! {
        #[test]
        fn every_realization_is_found_without_repeats(
            tx in arb_pmf(10), rx in arb_pmf(6), th in thresholds(), fb in fallback(),
            t in 0usize..10, r in 0usize..6,
        ) {
            let (t, r) = (t % tx.len(), r % rx.len());
            let s = MarsSearch::new(&tx, &rx, th, fb).unwrap();
            let res = run(&s, t, r);
            prop_assert_eq!(res.found_pair, Some((t, r)));
            prop_assert!(has_no_repeats(&res));
            prop_assert!(res.tests_used <= 2 * tx.len() * rx.len());
        }

        #[test]
        fn memory_never_costs_more_on_the_second_path(
            tx in arb_pmf(8), rx in arb_pmf(5), th in thresholds(),
            a in (0usize..8, 0usize..5), b in (0usize..8, 0usize..5),
        ) {
            let a = (a.0 % tx.len(), a.1 % rx.len());
            let b = (b.0 % tx.len(), b.1 % rx.len());
            prop_assume!(a != b);
            let s = MarsSearch::new(&tx, &rx, th, FallbackPolicy::PureRankedRemainder).unwrap();
            let mut oracle = IndexOracle::with_paths(vec![a, b]);
            let mut memory = FailedPairMemory::new();
            let first = s.search(&mut oracle, &mut memory);
            let found = first.found_pair.unwrap();
            memory.insert(found.0, found.1);
            let with_memory = s.search(&mut oracle, &mut memory);
            // same second search, forgetting everything but the found pair
            let mut fresh = FailedPairMemory::new();
            fresh.insert(found.0, found.1);
            let without = s.search(&mut IndexOracle::with_paths(vec![a, b]), &mut fresh);
            prop_assert_eq!(with_memory.found_pair, without.found_pair);
            prop_assert!(with_memory.tests_used <= without.tests_used);
            prop_assert_eq!(with_memory.tests_used + first.tests_used - 1, without.tests_used);
        }
    }
}
