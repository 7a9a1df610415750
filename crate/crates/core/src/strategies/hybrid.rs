//! Hybrid search: multi-level broad beams, each level tested in ranked order.

use super::{FailedPairMemory, SearchResult, SearchStrategy, Session};
use crate::beamstats::{BeamPmf, Grouping, Ranking};
use crate::error::{Error, Result};
use crate::oracle::ChannelOracle;

/// A node of the Tx beam tree: a set of fine beams and its ranked children.
#[derive(Debug, Clone)]
struct Node {
    beams: Vec<usize>,
    children: Vec<Node>,
}

/// Multi-level Tx search with statistically-ranked order at every level.
///
/// Level 1 walks the ranked broad Tx beams for each ranked Rx beam. After a
/// level-ℓ link, only the linked group's children are searched, ranked by
/// conditional probability, keeping the Rx beam that linked. The final level
/// tests fine beams and stops at the first link.
#[derive(Debug, Clone)]
pub struct HybridSearch {
    roots: Vec<Node>,
    rx_order: Vec<usize>,
    ntx: usize,
    nrx: usize,
    levels: usize,
}

impl HybridSearch {
    /// `levels` are Tx partitions, coarsest first, each refining the previous.
    pub fn new(tx: &BeamPmf, rx: &BeamPmf, levels: Vec<Grouping>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidConfig("hybrid search needs at least one grouping level".into()));
        }
        for (i, level) in levels.iter().enumerate() {
            if level.num_beams() != tx.len() {
                return Err(Error::InvalidGrouping(format!(
                    "level {} covers {} beams but the Tx PMF has {}",
                    i + 1,
                    level.num_beams(),
                    tx.len()
                )));
            }
            if i > 0 && !level.refines(&levels[i - 1]) {
                return Err(Error::InvalidGrouping(format!("level {} does not refine level {i}", i + 1)));
            }
        }
        let all: Vec<usize> = (0..tx.len()).collect();
        let roots = build_children(&all, &levels, tx.probs());
        Ok(Self { roots, rx_order: Ranking::of(rx).order, ntx: tx.len(), nrx: rx.len(), levels: levels.len() + 1 })
    }

    /// Number of levels `L`, fine level included.
    pub fn num_levels(&self) -> usize {
        self.levels
    }

    fn descend(&self, session: &mut Session, node: &Node, rx: usize) -> Option<(usize, usize)> {
        if let [tx] = node.beams[..] {
            return session.pair(tx, rx).filter(|p| p.linked).map(|_| (tx, rx));
        }
        if !session.group(&node.beams, &[rx]).is_some_and(|p| p.linked) {
            return None;
        }
        node.children.iter().find_map(|child| self.descend(session, child, rx))
    }
}

/// Children of `parent` at the next level, ranked by probability mass.
fn build_children(parent: &[usize], levels: &[Grouping], probs: &[f64]) -> Vec<Node> {
    let (groups, deeper): (Vec<Vec<usize>>, &[Grouping]) = match levels.split_first() {
        Some((level, rest)) => {
            (level.groups().iter().filter(|g| g.iter().all(|b| parent.contains(b))).cloned().collect(), rest)
        }
        None => (parent.iter().map(|&b| vec![b]).collect(), &[]),
    };
    // a group identical to its parent adds no information; skip that level
    if groups.len() == 1 && groups[0].len() == parent.len() && !deeper.is_empty() {
        return build_children(parent, deeper, probs);
    }
    let mut nodes: Vec<Node> = groups
        .into_iter()
        .map(|beams| {
            let children = if beams.len() > 1 { build_children(&beams, deeper, probs) } else { Vec::new() };
            Node { beams, children }
        })
        .collect();
    let masses: Vec<f64> = nodes.iter().map(|n| n.beams.iter().map(|&b| probs[b]).sum()).collect();
    let order = Ranking::from_probs(&masses).order;
    let mut slots: Vec<Option<Node>> = nodes.drain(..).map(Some).collect();
    order.into_iter().map(|i| slots[i].take().expect("ranking is a permutation")).collect()
}

impl SearchStrategy for HybridSearch {
    fn name(&self) -> &str {
        "hybrid"
    }

    fn dimensions(&self) -> (usize, usize) {
        (self.ntx, self.nrx)
    }

    fn search(&self, oracle: &mut dyn ChannelOracle, memory: &mut FailedPairMemory) -> SearchResult {
        let mut session = Session::new(oracle, memory);
        for &rx in &self.rx_order {
            for root in &self.roots {
                if let Some(found) = self.descend(&mut session, root, rx) {
                    return session.finish(Some(found));
                }
            }
        }
        session.finish(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamstats::contiguous_grouping;
    use crate::beamstats::fixtures::{arb_pmf, table2_rx, table5_tx};
    use crate::strategies::testing::{has_no_repeats, run};
    use proptest::prelude::*;

    fn table_five_hybrid() -> HybridSearch {
        HybridSearch::new(&table5_tx(), &table2_rx(), vec![contiguous_grouping(9, 3, 0).unwrap()]).unwrap()
    }

    #[test]
    fn t4_r2_takes_four_tests() {
        let res = run(&table_five_hybrid(), 3, 1);
        assert_eq!(res.tests_used, 4);
        assert_eq!(res.found_pair, Some((3, 1)));
        let trace: Vec<(Vec<usize>, bool)> = res.test_log.iter().map(|r| (r.tx.clone(), r.linked)).collect();
        assert_eq!(trace, vec![(vec![3, 4, 5], true), (vec![4], false), (vec![5], false), (vec![3], true)]);
        assert!(res.test_log.iter().all(|r| r.rx == [1]));
    }

    #[test]
    fn no_realization_finishes_before_level_count() {
        let s = table_five_hybrid();
        assert_eq!(s.num_levels(), 2);
        for t in 0..9 {
            for r in 0..3 {
                let res = run(&s, t, r);
                assert!(res.tests_used >= 2);
                assert_eq!(res.found_pair, Some((t, r)));
                assert!(has_no_repeats(&res));
            }
        }
    }

    #[test]
    fn three_level_tree() {
        let tx = BeamPmf::uniform("T", 8).unwrap();
        let rx = BeamPmf::uniform("R", 1).unwrap();
        let levels = vec![contiguous_grouping(8, 2, 0).unwrap(), contiguous_grouping(8, 4, 0).unwrap()];
        let s = HybridSearch::new(&tx, &rx, levels).unwrap();
        assert_eq!(s.num_levels(), 3);
        // binary descent: T1 is found on the first try at each level
        assert_eq!(run(&s, 0, 0).tests_used, 3);
        // T8: level 1 fails once, level 2 fails once, level 3 fails once
        assert_eq!(run(&s, 7, 0).tests_used, 6);
    }

    #[test]
    fn rejects_bad_levels() {
        let (tx, rx) = (table5_tx(), table2_rx());
        assert!(HybridSearch::new(&tx, &rx, vec![]).is_err());
        assert!(HybridSearch::new(&tx, &rx, vec![contiguous_grouping(6, 3, 0).unwrap()]).is_err());
        let levels = vec![contiguous_grouping(9, 3, 0).unwrap(), contiguous_grouping(9, 3, 1).unwrap()];
        assert!(HybridSearch::new(&tx, &rx, levels).is_err());
    }

    proptest! {
        #[test]
        fn at_least_l_tests_and_correct(
            tx in arb_pmf(12), rx in arb_pmf(4), groups in 2usize..=4, t in 0usize..12, r in 0usize..4,
        ) {
            let n = tx.len();
            prop_assume!(n % groups == 0 && n / groups >= 2);
            let (t, r) = (t % n, r % rx.len());
            let s = HybridSearch::new(&tx, &rx, vec![contiguous_grouping(n, groups, 0).unwrap()]).unwrap();
            let res = run(&s, t, r);
            prop_assert!(res.tests_used >= s.num_levels());
            prop_assert_eq!(res.found_pair, Some((t, r)));
            prop_assert!(has_no_repeats(&res));
        }
    }
}
