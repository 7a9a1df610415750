//! Report types and their JSON, CSV and text renderings.

use std::fmt::Write;

use beamtrain::montecarlo::{Comparison, TrialStats};
use beamtrain::{BeamPmf, Grouping, Ranking};
use clap::ValueEnum;
use serde::Serialize;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
    Csv,
}

pub trait Report: Serialize {
    fn csv(&self) -> String;
    fn text(&self) -> String;

    fn render(&self, format: Format) -> String {
        match format {
            Format::Json => serde_json::to_string_pretty(self).expect("report serializes") + "\n",
            Format::Csv => self.csv(),
            Format::Text => self.text(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BeamRow {
    pub beam: String,
    pub probability: f64,
    pub rank: usize,
}

pub fn beam_rows(pmf: &BeamPmf) -> Vec<BeamRow> {
    let ranking = Ranking::of(pmf);
    (0..pmf.len())
        .map(|i| BeamRow { beam: pmf.label(i).to_string(), probability: pmf.prob(i), rank: ranking.ranks[i] })
        .collect()
}

fn write_beam_table(out: &mut String, rows: &[BeamRow], indent: &str) {
    let width = rows.iter().map(|r| r.beam.len()).max().unwrap_or(4).max(4);
    let _ = writeln!(out, "{indent}{:<width$}  probability  rank", "beam");
    for r in rows {
        let _ = writeln!(out, "{indent}{:<width$}  {:>11.6}  {:>4}", r.beam, r.probability, r.rank);
    }
}

// ---- entropy ----

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SideEntropy {
    pub side: String,
    pub entropy: f64,
    /// Undefined for a single-beam side.
    pub relative_entropy: Option<f64>,
    pub beams: Vec<BeamRow>,
}

impl SideEntropy {
    pub fn of(side: &str, pmf: &BeamPmf) -> Self {
        Self {
            side: side.to_string(),
            entropy: pmf.entropy(),
            relative_entropy: pmf.relative_entropy().ok(),
            beams: beam_rows(pmf),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EntropyReport {
    pub sides: Vec<SideEntropy>,
}

impl Report for EntropyReport {
    fn csv(&self) -> String {
        let mut out = String::from("side,beam,probability,rank,entropy,relativeEntropy\n");
        for s in &self.sides {
            let rel = s.relative_entropy.map(|r| format!("{r:.6}")).unwrap_or_default();
            for b in &s.beams {
                let _ = writeln!(out, "{},{},{:.6},{},{:.6},{rel}", s.side, b.beam, b.probability, b.rank, s.entropy);
            }
        }
        out
    }

    fn text(&self) -> String {
        let mut out = String::new();
        for s in &self.sides {
            let rel = s.relative_entropy.map(|r| format!("{r:.4}")).unwrap_or_else(|| "undefined".into());
            let _ = writeln!(out, "{}: entropy {:.4}, relative entropy {rel}", s.side, s.entropy);
            write_beam_table(&mut out, &s.beams, "  ");
            out.push('\n');
        }
        out
    }
}

// ---- analyze ----

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SuccessRow {
    pub tests: usize,
    pub probability: f64,
    pub cumulative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CutRow {
    pub side: String,
    pub threshold: f64,
    /// Number of top-ranked beams whose mass reaches the threshold.
    pub beams: usize,
    pub cumulative_probability: f64,
    pub ranked: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AnalyzeReport {
    /// Side searched in the outer loop of ranked search.
    pub outer_side: String,
    /// Mean test count of pure ranked search.
    pub mean_tests: f64,
    pub success: Vec<SuccessRow>,
    pub cuts: Vec<CutRow>,
    /// Exact mean of the configured strategy over every realization.
    pub strategy: String,
    pub strategy_expected_tests: f64,
    pub strategy_failure_probability: f64,
}

impl Report for AnalyzeReport {
    fn csv(&self) -> String {
        let mut out = String::from("tests,probability,cumulative\n");
        for r in &self.success {
            let _ = writeln!(out, "{},{:.6},{:.6}", r.tests, r.probability, r.cumulative);
        }
        out
    }

    fn text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "ranked search, {} outer: mean tests m = {:.4}", self.outer_side, self.mean_tests);
        let _ = writeln!(
            out,
            "{} over all realizations: expected tests {:.4}",
            self.strategy, self.strategy_expected_tests
        );
        if self.strategy_failure_probability > 0.0 {
            let _ = writeln!(out, "  failure probability {:.6}", self.strategy_failure_probability);
        }
        out.push('\n');
        let _ = writeln!(out, "tests  probability  cumulative");
        for r in &self.success {
            let _ = writeln!(out, "{:>5}  {:>11.6}  {:>10.6}", r.tests, r.probability, r.cumulative);
        }
        out.push('\n');
        for c in &self.cuts {
            let _ = writeln!(
                out,
                "{} threshold {:.4}: top {} beams, mass {:.6} [{}]",
                c.side,
                c.threshold,
                c.beams,
                c.cumulative_probability,
                c.ranked.join(", ")
            );
        }
        out
    }
}

// ---- hierarchy ----

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConditionalTable {
    pub broad_beam: String,
    pub entropy: f64,
    pub beams: Vec<BeamRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SideHierarchy {
    pub side: String,
    pub grouping: Grouping,
    pub broad_entropy: f64,
    pub broad: Vec<BeamRow>,
    pub conditionals: Vec<ConditionalTable>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct HierarchyReport {
    pub sides: Vec<SideHierarchy>,
}

impl Report for HierarchyReport {
    fn csv(&self) -> String {
        let mut out = String::from("side,level,parent,beam,probability,rank\n");
        for s in &self.sides {
            for b in &s.broad {
                let _ = writeln!(out, "{},1,,{},{:.6},{}", s.side, b.beam, b.probability, b.rank);
            }
            for c in &s.conditionals {
                for b in &c.beams {
                    let _ = writeln!(out, "{},2,{},{},{:.6},{}", s.side, c.broad_beam, b.beam, b.probability, b.rank);
                }
            }
        }
        out
    }

    fn text(&self) -> String {
        let mut out = String::new();
        for s in &self.sides {
            let _ = writeln!(out, "{}: broad beams, entropy {:.4}", s.side, s.broad_entropy);
            write_beam_table(&mut out, &s.broad, "  ");
            for c in &s.conditionals {
                let _ = writeln!(out, "\n  conditional on {} (entropy {:.4})", c.broad_beam, c.entropy);
                write_beam_table(&mut out, &c.beams, "    ");
            }
            out.push('\n');
        }
        out
    }
}

// ---- simulate ----

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SimulationReport {
    pub strategy: String,
    pub seed: u64,
    pub n_trials: u64,
    pub oracle: String,
    /// Exact mean over every realization, for the index oracle only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_tests: Option<f64>,
    pub stats: TrialStats,
}

impl Report for SimulationReport {
    fn csv(&self) -> String {
        self.stats.to_csv()
    }

    fn text(&self) -> String {
        let s = &self.stats;
        let mut out = String::new();
        let _ = writeln!(out, "{}: {} trials, seed {}, {} oracle", self.strategy, s.n_trials, self.seed, self.oracle);
        let _ = write!(out, "mean tests {:.4}", s.mean_tests);
        if let Some(e) = self.expected_tests {
            let _ = write!(out, " (exact {e:.4})");
        }
        let _ = writeln!(out, ", failures {}", s.failures);
        let _ = writeln!(out, "\ntests    count  fraction  cumulative");
        let mut cumulative = 0;
        for (&k, &c) in &s.histogram {
            cumulative += c;
            let _ = writeln!(
                out,
                "{k:>5}  {c:>7}  {:>8.6}  {:>10.6}",
                c as f64 / s.n_trials as f64,
                cumulative as f64 / s.n_trials as f64
            );
        }
        out
    }
}

// ---- compare ----

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CompareReport {
    pub seed: u64,
    pub n_trials: u64,
    pub oracle: String,
    pub comparison: Comparison,
}

impl Report for CompareReport {
    fn csv(&self) -> String {
        let entries = &self.comparison.entries;
        let mut out = String::from("strategy,meanTests,failures");
        for e in entries {
            let _ = write!(out, ",savingsVs_{}", e.name);
        }
        out.push('\n');
        for (e, row) in entries.iter().zip(&self.comparison.savings) {
            let _ = write!(out, "{},{:.6},{}", e.name, e.stats.mean_tests, e.stats.failures);
            for s in row {
                let _ = write!(out, ",{s:.6}");
            }
            out.push('\n');
        }
        out
    }

    fn text(&self) -> String {
        let entries = &self.comparison.entries;
        let width = entries.iter().map(|e| e.name.len()).max().unwrap_or(8).max(8);
        let mut out = String::new();
        let _ = writeln!(out, "{} trials, seed {}, {} oracle\n", self.n_trials, self.seed, self.oracle);
        let _ = writeln!(out, "{:<width$}  mean tests  failures", "strategy");
        for e in entries {
            let _ = writeln!(out, "{:<width$}  {:>10.4}  {:>8}", e.name, e.stats.mean_tests, e.stats.failures);
        }
        out.push('\n');
        for (a, row) in entries.iter().zip(&self.comparison.savings) {
            for (b, s) in entries.iter().zip(row) {
                if a.name != b.name {
                    let _ = writeln!(out, "{} saves {s:.2}% vs {}", a.name, b.name);
                }
            }
        }
        out
    }
}
