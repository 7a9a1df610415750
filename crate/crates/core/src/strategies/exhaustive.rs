use super::{FailedPairMemory, SearchResult, SearchStrategy, Session};
use crate::error::{Error, Result};
use crate::oracle::ChannelOracle;

/// Tests every (tx, rx) pair, Rx outer and Tx inner, both in label order.
///
/// In full-sweep mode every pair is tested and the strongest linked pair
/// wins; otherwise the search stops at the first link.
#[derive(Debug, Clone)]
pub struct ExhaustiveSearch {
    ntx: usize,
    nrx: usize,
    full_sweep: bool,
}

impl ExhaustiveSearch {
    pub fn new(ntx: usize, nrx: usize, full_sweep: bool) -> Result<Self> {
        if ntx == 0 || nrx == 0 {
            return Err(Error::InvalidConfig("exhaustive search needs at least one beam per side".into()));
        }
        Ok(Self { ntx, nrx, full_sweep })
    }
}

impl SearchStrategy for ExhaustiveSearch {
    fn name(&self) -> &str {
        "exhaustive"
    }

    fn dimensions(&self) -> (usize, usize) {
        (self.ntx, self.nrx)
    }

    fn search(&self, oracle: &mut dyn ChannelOracle, memory: &mut FailedPairMemory) -> SearchResult {
        let mut session = Session::new(oracle, memory);
        let mut best: Option<((usize, usize), f64)> = None;
        for rx in 0..self.nrx {
            for tx in 0..self.ntx {
                let Some(probe) = session.pair(tx, rx) else { continue };
                if !probe.linked {
                    continue;
                }
                if !self.full_sweep {
                    return session.finish(Some((tx, rx)));
                }
                if best.is_none_or(|(_, s)| probe.rssi > s) {
                    best = Some(((tx, rx), probe.rssi));
                }
            }
        }
        session.finish(best.map(|(pair, _)| pair))
    }
}
