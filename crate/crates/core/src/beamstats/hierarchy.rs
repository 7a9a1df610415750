//! Broad-beam aggregation: fine beams grouped into level-1 broad beams with
//! per-group conditional PMFs.

use serde::{Deserialize, Serialize};

use super::BeamPmf;
use crate::error::{Error, Result};

/// A partition of beam indices `0..n` into non-empty groups.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<usize>>", into = "Vec<Vec<usize>>")]
pub struct Grouping {
    groups: Vec<Vec<usize>>,
    n: usize,
}

impl TryFrom<Vec<Vec<usize>>> for Grouping {
    type Error = Error;

    fn try_from(groups: Vec<Vec<usize>>) -> Result<Self> {
        let n = groups.iter().map(Vec::len).sum();
        Grouping::new(groups, n)
    }
}

impl From<Grouping> for Vec<Vec<usize>> {
    fn from(g: Grouping) -> Self {
        g.groups
    }
}

impl Grouping {
    /// Validates that `groups` partitions `0..n`.
    pub fn new(groups: Vec<Vec<usize>>, n: usize) -> Result<Self> {
        let mut seen = vec![false; n];
        for group in &groups {
            if group.is_empty() {
                return Err(Error::InvalidGrouping("empty group".into()));
            }
            for &beam in group {
                if beam >= n {
                    return Err(Error::InvalidGrouping(format!("beam index {beam} out of range for {n} beams")));
                }
                if std::mem::replace(&mut seen[beam], true) {
                    return Err(Error::InvalidGrouping(format!("beam index {beam} appears in more than one group")));
                }
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidGrouping(format!("beam index {missing} is not covered")));
        }
        Ok(Self { groups, n })
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn num_beams(&self) -> usize {
        self.n
    }

    /// Index of the group holding `beam`.
    pub fn group_of(&self, beam: usize) -> Option<usize> {
        self.groups.iter().position(|g| g.contains(&beam))
    }

    /// True when every group of `self` lies inside a single group of `coarser`.
    pub fn refines(&self, coarser: &Grouping) -> bool {
        self.n == coarser.n
            && self.groups.iter().all(|g| {
                let parent = coarser.group_of(g[0]);
                parent.is_some() && g.iter().all(|&b| coarser.group_of(b) == parent)
            })
    }
}

/// Equal-size contiguous blocks, cyclically shifted so the first group starts
/// at beam `shift`.
pub fn contiguous_grouping(n: usize, num_groups: usize, shift: usize) -> Result<Grouping> {
    if num_groups == 0 || n == 0 || !n.is_multiple_of(num_groups) {
        return Err(Error::InvalidGrouping(format!("{num_groups} groups do not divide {n} beams")));
    }
    let size = n / num_groups;
    let groups = (0..num_groups).map(|g| (0..size).map(|k| (shift + g * size + k) % n).collect()).collect();
    Grouping::new(groups, n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BeamHierarchy {
    pub grouping: Grouping,
    pub broad_pmf: BeamPmf,
    pub conditionals: Vec<BeamPmf>,
}

impl BeamHierarchy {
    pub fn groups(&self) -> &[Vec<usize>] {
        self.grouping.groups()
    }
}

/// Merges fine beams into broad beams. The broad probability of a group is the
/// sum of its members; each member's conditional probability is its share of
/// that sum.
pub fn aggregate(pmf: &BeamPmf, grouping: &Grouping) -> Result<BeamHierarchy> {
    if grouping.num_beams() != pmf.len() {
        return Err(Error::InvalidGrouping(format!(
            "grouping covers {} beams but the PMF has {}",
            grouping.num_beams(),
            pmf.len()
        )));
    }
    let masses: Vec<f64> = grouping.groups().iter().map(|g| g.iter().map(|&b| pmf.prob(b)).sum()).collect();
    // rounding can push a mass just past 1
    let total: f64 = masses.iter().sum();
    let masses: Vec<f64> = masses.iter().map(|m| m / total).collect();
    let prefix = label_prefix(pmf.labels());
    let broad_labels = (1..=masses.len()).map(|g| format!("{prefix}0{g}")).collect();
    let broad_pmf = BeamPmf::new(broad_labels, masses.clone())?;
    let conditionals = grouping
        .groups()
        .iter()
        .zip(&masses)
        .map(|(g, &mass)| {
            let labels = g.iter().map(|&b| pmf.label(b).to_string()).collect();
            let probs: Vec<f64> = g.iter().map(|&b| pmf.prob(b) / mass).collect();
            // Renormalize once more so rounding in `mass` cannot trip validation.
            let total: f64 = probs.iter().sum();
            BeamPmf::new(labels, probs.iter().map(|p| p / total).collect())
        })
        .collect::<Result<_>>()?;
    Ok(BeamHierarchy { grouping: grouping.clone(), broad_pmf, conditionals })
}

/// Among all cyclic shifts of equal-size contiguous blocks, the grouping whose
/// broad PMF has the lowest entropy. Ties keep the smallest shift.
pub fn min_entropy_grouping(pmf: &BeamPmf, num_groups: usize) -> Result<Grouping> {
    let n = pmf.len();
    let first = contiguous_grouping(n, num_groups, 0)?;
    let size = n / num_groups;
    let broad_entropy = |g: &Grouping| -> f64 {
        let masses: Vec<f64> = g.groups().iter().map(|grp| grp.iter().map(|&b| pmf.prob(b)).sum()).collect();
        super::entropy_in(&masses, f64::log10)
    };
    let mut best_entropy = broad_entropy(&first);
    let mut best = first;
    for shift in 1..size {
        let candidate = contiguous_grouping(n, num_groups, shift)?;
        let h = broad_entropy(&candidate);
        if h < best_entropy {
            best_entropy = h;
            best = candidate;
        }
    }
    Ok(best)
}

/// Leading non-digit characters shared by every label ("T" for T1..T9).
fn label_prefix(labels: &[String]) -> String {
    let first: String = labels[0].chars().take_while(|c| !c.is_ascii_digit()).collect();
    if !first.is_empty() && labels.iter().all(|l| l.starts_with(&first)) {
        first
    } else {
        "G".to_string()
    }
}
