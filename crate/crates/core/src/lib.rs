//! Beam training for sparse MIMO links using beam statistics.
//!
//! The crate is organised around five pieces:
//!
//! - [`beamstats`]: beam PMFs, entropy, rankings, broad-beam hierarchies and
//!   beam history.
//! - [`codebook`]: ULA steering vectors, DFT codebooks, sparse channels and
//!   RSSI.
//! - [`oracle`]: the link test abstraction searched by every strategy.
//! - [`strategies`]: exhaustive, multi-level, statistically-ranked (MarS) and
//!   hybrid searches plus analytical expected-cost tools.
//! - [`montecarlo`]: seeded trial batches and strategy comparison.

pub mod beamstats;
pub mod codebook;
pub mod error;
pub mod montecarlo;
pub mod oracle;
pub mod strategies;

pub use beamstats::{BeamHierarchy, BeamHistory, BeamPmf, Grouping, Ranking};
pub use error::{Error, Result};
