//! Classic multi-level search: broad beams first, every combination at each
//! level, then descend into the winning sector.

use serde::{Deserialize, Serialize};

use super::{FailedPairMemory, SearchResult, SearchStrategy, Session};
use crate::beamstats::Grouping;
use crate::error::{Error, Result};
use crate::oracle::ChannelOracle;

/// Per-side list of broad-beam partitions, coarsest first. The fine beams form
/// an implicit final level on each side. A side with fewer partitions than
/// the other stays at its selected fine beam for the remaining levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MlHierarchySpec {
    pub ntx: usize,
    pub nrx: usize,
    pub tx_levels: Vec<Grouping>,
    pub rx_levels: Vec<Grouping>,
}

impl MlHierarchySpec {
    pub fn new(ntx: usize, tx_levels: Vec<Grouping>, nrx: usize, rx_levels: Vec<Grouping>) -> Result<Self> {
        if ntx == 0 || nrx == 0 {
            return Err(Error::InvalidConfig("multi-level search needs at least one beam per side".into()));
        }
        check_levels(&tx_levels, ntx, "Tx")?;
        check_levels(&rx_levels, nrx, "Rx")?;
        Ok(Self { ntx, nrx, tx_levels, rx_levels })
    }

    /// Number of levels `L`, counting the fine level.
    pub fn num_levels(&self) -> usize {
        self.tx_levels.len().max(self.rx_levels.len()) + 1
    }
}

fn check_levels(levels: &[Grouping], n: usize, side: &str) -> Result<()> {
    for (i, level) in levels.iter().enumerate() {
        if level.num_beams() != n {
            return Err(Error::InvalidGrouping(format!(
                "{side} level {} covers {} beams, expected {n}",
                i + 1,
                level.num_beams()
            )));
        }
        if i > 0 && !level.refines(&levels[i - 1]) {
            return Err(Error::InvalidGrouping(format!("{side} level {} does not refine level {i}", i + 1)));
        }
    }
    Ok(())
}

/// Beam sets tested on one side at `level`, inside the selected parent set.
fn candidates(levels: &[Grouping], n: usize, level: usize, parent: Option<&[usize]>) -> Vec<Vec<usize>> {
    let within = |g: &[usize]| parent.is_none_or(|p| g.iter().all(|b| p.contains(b)));
    if level < levels.len() {
        levels[level].groups().iter().filter(|g| within(g)).cloned().collect()
    } else {
        match parent {
            Some(p) => p.iter().map(|&b| vec![b]).collect(),
            None => (0..n).map(|b| vec![b]).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MlSearch {
    spec: MlHierarchySpec,
}

impl MlSearch {
    pub fn new(spec: MlHierarchySpec) -> Self {
        Self { spec }
    }

    pub fn spec(&self) -> &MlHierarchySpec {
        &self.spec
    }
}

impl SearchStrategy for MlSearch {
    fn name(&self) -> &str {
        "ml"
    }

    fn dimensions(&self) -> (usize, usize) {
        (self.spec.ntx, self.spec.nrx)
    }

    fn search(&self, oracle: &mut dyn ChannelOracle, memory: &mut FailedPairMemory) -> SearchResult {
        let spec = &self.spec;
        let mut session = Session::new(oracle, memory);
        let mut tx_sel: Option<Vec<usize>> = None;
        let mut rx_sel: Option<Vec<usize>> = None;
        for level in 0..spec.num_levels() {
            let tx_cands = candidates(&spec.tx_levels, spec.ntx, level, tx_sel.as_deref());
            let rx_cands = candidates(&spec.rx_levels, spec.nrx, level, rx_sel.as_deref());
            let mut best: Option<(usize, usize, f64)> = None;
            for (ri, rx) in rx_cands.iter().enumerate() {
                for (ti, tx) in tx_cands.iter().enumerate() {
                    let Some(probe) = session.group(tx, rx) else { continue };
                    if probe.linked && best.is_none_or(|(_, _, s)| probe.rssi > s) {
                        best = Some((ti, ri, probe.rssi));
                    }
                }
            }
            let Some((ti, ri, _)) = best else {
                return session.finish(None);
            };
            tx_sel = Some(tx_cands[ti].clone());
            rx_sel = Some(rx_cands[ri].clone());
        }
        let found = match (tx_sel.as_deref(), rx_sel.as_deref()) {
            (Some([t]), Some([r])) => Some((*t, *r)),
            _ => None,
        };
        session.finish(found)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamstats::contiguous_grouping;
    use crate::strategies::testing::{has_no_repeats, run};

    fn two_level() -> MlSearch {
        MlSearch::new(MlHierarchySpec::new(9, vec![contiguous_grouping(9, 3, 0).unwrap()], 3, vec![]).unwrap())
    }

    #[test]
    fn twelve_tests_for_every_realization() {
        let s = two_level();
        assert_eq!(s.spec().num_levels(), 2);
        for t in 0..9 {
            for r in 0..3 {
                let res = run(&s, t, r);
                assert_eq!(res.tests_used, 12, "realization ({t},{r})");
                assert_eq!(res.found_pair, Some((t, r)));
                assert!(has_no_repeats(&res));
            }
        }
    }

    #[test]
    fn trace_for_t5_r2() {
        let res = run(&two_level(), 4, 1);
        let linked: Vec<_> = res.test_log.iter().filter(|r| r.linked).collect();
        assert_eq!(linked.len(), 2);
        assert_eq!((linked[0].tx.as_slice(), linked[0].rx.as_slice()), (&[3, 4, 5][..], &[1][..]));
        assert_eq!((linked[1].tx.as_slice(), linked[1].rx.as_slice()), (&[4][..], &[1][..]));
        assert_eq!(res.found_pair, Some((4, 1)));
    }

    #[test]
    fn single_level_is_exhaustive() {
        let s = MlSearch::new(MlHierarchySpec::new(9, vec![], 3, vec![]).unwrap());
        assert_eq!(run(&s, 8, 2).tests_used, 27);
    }

    #[test]
    fn both_sides_hierarchical() {
        // 8 Tx in 2 groups, 4 Rx in 2 groups: 2·2 + 4·2 = 12 tests
        let s = MlSearch::new(
            MlHierarchySpec::new(
                8,
                vec![contiguous_grouping(8, 2, 0).unwrap()],
                4,
                vec![contiguous_grouping(4, 2, 0).unwrap()],
            )
            .unwrap(),
        );
        for t in 0..8 {
            for r in 0..4 {
                let res = run(&s, t, r);
                assert_eq!(res.tests_used, 12);
                assert_eq!(res.found_pair, Some((t, r)));
            }
        }
    }

    #[test]
    fn rejects_non_refining_levels() {
        let coarse = contiguous_grouping(8, 2, 0).unwrap();
        let shifted = contiguous_grouping(8, 4, 1).unwrap();
        assert!(MlHierarchySpec::new(8, vec![coarse, shifted], 1, vec![]).is_err());
        assert!(MlHierarchySpec::new(8, vec![contiguous_grouping(9, 3, 0).unwrap()], 1, vec![]).is_err());
    }
}
