//! Command implementations. Each returns a report; the caller renders it.

use std::fs;
use std::path::Path;

use beamtrain::beamstats::{aggregate, cumulative_cut};
use beamtrain::montecarlo::{compare_strategies, run_trials, with_threads, OracleModel, TrialStats};
use beamtrain::strategies::{
    expected_tests_bruteforce, mean_tests, op_operator, success_probabilities, SearchStrategy,
};
use beamtrain::{BeamHistory, BeamPmf, Ranking};
use log::info;

use crate::config::{OracleKind, Scenario};
use crate::error::{CliError, CliResult};
use crate::history::HistoryFile;
use crate::report::{
    beam_rows, AnalyzeReport, CompareReport, ConditionalTable, CutRow, EntropyReport, Format, HierarchyReport, Report,
    SideEntropy, SideHierarchy, SimulationReport, SuccessRow,
};
use beamtrain::strategies::GroupingSpec;

/// Run-time overrides shared by the Monte Carlo commands.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub threads: Option<usize>,
}

impl RunOptions {
    fn resolve(&self, scenario: &Scenario) -> CliResult<(u64, u64)> {
        let n = self.trials.unwrap_or(scenario.config.mc.n_trials);
        if n == 0 {
            return Err(CliError::Config("--trials must be positive".into()));
        }
        if self.threads == Some(0) {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        Ok((n, self.seed.unwrap_or(scenario.config.mc.seed)))
    }
}

pub fn entropy(scenario: &Scenario) -> EntropyReport {
    EntropyReport { sides: vec![SideEntropy::of("tx", &scenario.tx), SideEntropy::of("rx", &scenario.rx)] }
}

/// Entropy of the PMFs implied by a saved history.
pub fn entropy_from_history(path: &Path, smoothing: f64) -> CliResult<EntropyReport> {
    let file = HistoryFile::read(path)?;
    let (tx, rx) = (file.history.tx_pmf(smoothing)?, file.history.rx_pmf(smoothing)?);
    Ok(EntropyReport { sides: vec![SideEntropy::of("tx", &tx), SideEntropy::of("rx", &rx)] })
}

fn cut_row(side: &str, pmf: &BeamPmf, threshold: f64) -> CutRow {
    let ranking = Ranking::of(pmf);
    let beams = cumulative_cut(&ranking, pmf, threshold);
    let top = &ranking.order[..beams];
    CutRow {
        side: side.to_string(),
        threshold,
        beams,
        cumulative_probability: top.iter().map(|&b| pmf.prob(b)).sum(),
        ranked: top.iter().map(|&b| pmf.label(b).to_string()).collect(),
    }
}

pub fn analyze(scenario: &Scenario) -> CliResult<AnalyzeReport> {
    let (tx, rx) = (&scenario.tx, &scenario.rx);
    let tx_outer = rx.entropy() > tx.entropy();
    let (outer, inner) = if tx_outer { (tx, rx) } else { (rx, tx) };
    let (outer_p, inner_p) = (outer.ranked_probs(), inner.ranked_probs());
    let mut cumulative = 0.0;
    let success = success_probabilities(&outer_p, &inner_p)?
        .into_iter()
        .enumerate()
        .map(|(k, p)| {
            cumulative += p;
            SuccessRow { tests: k + 1, probability: p, cumulative }
        })
        .collect();
    let thresholds = scenario.effective_thresholds();
    let strategy = scenario.strategy()?;
    let cost = expected_tests_bruteforce(strategy.build(tx, rx)?.as_ref(), tx, rx);
    Ok(AnalyzeReport {
        outer_side: if tx_outer { "tx" } else { "rx" }.to_string(),
        mean_tests: mean_tests(&op_operator(&outer_p, &inner_p)?),
        success,
        cuts: vec![cut_row("tx", tx, thresholds.tx), cut_row("rx", rx, thresholds.rx)],
        strategy: strategy.name().to_string(),
        strategy_expected_tests: cost.mean,
        strategy_failure_probability: cost.failure_probability,
    })
}

fn side_hierarchy(side: &str, pmf: &BeamPmf, spec: &GroupingSpec) -> CliResult<SideHierarchy> {
    let h = aggregate(pmf, &spec.resolve(pmf, true)?)?;
    let conditionals = h
        .conditionals
        .iter()
        .enumerate()
        .map(|(g, c)| ConditionalTable {
            broad_beam: h.broad_pmf.label(g).to_string(),
            entropy: c.entropy(),
            beams: beam_rows(c),
        })
        .collect();
    Ok(SideHierarchy {
        side: side.to_string(),
        broad_entropy: h.broad_pmf.entropy(),
        broad: beam_rows(&h.broad_pmf),
        grouping: h.grouping,
        conditionals,
    })
}

/// Broad-beam PMF and conditionals for the first configured grouping level,
/// or for `groups` equal blocks when given.
pub fn hierarchy(scenario: &Scenario, groups: Option<usize>) -> CliResult<HierarchyReport> {
    let configured = scenario.config.hierarchy.as_ref();
    let tx_spec = match (groups, configured.and_then(|h| h.tx_groups.first())) {
        (Some(k), _) => GroupingSpec::Count(k),
        (None, Some(spec)) => spec.clone(),
        (None, None) => {
            return Err(CliError::Config(
                "field `hierarchy.txGroups`: required by `hierarchy` unless --groups is given".into(),
            ))
        }
    };
    let mut sides = vec![side_hierarchy("tx", &scenario.tx, &tx_spec)?];
    if let Some(spec) = configured.and_then(|h| h.rx_groups.first()) {
        sides.push(side_hierarchy("rx", &scenario.rx, spec)?);
    }
    Ok(HierarchyReport { sides })
}

fn oracle_name(scenario: &Scenario) -> String {
    match scenario.config.oracle {
        OracleKind::Index => "index".into(),
        OracleKind::Physical => "physical".into(),
    }
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(CliError::io(path))
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(CliError::io(dir))
}

fn update_history(scenario: &Scenario, stats: &[&TrialStats]) -> CliResult<()> {
    let path = scenario.history_path();
    let mut history = match HistoryFile::read_if_exists(&path)? {
        Some(f) => f.history,
        None => BeamHistory::for_pmfs(&scenario.tx, &scenario.rx),
    };
    if history.tx_labels != scenario.tx.labels() || history.rx_labels != scenario.rx.labels() {
        return Err(CliError::Config(format!(
            "field `history.path`: {} tracks different beams than the configured PMFs",
            path.display()
        )));
    }
    for s in stats {
        history.absorb(&s.tx_hits, &s.rx_hits)?;
    }
    info!("history now holds {} observations at {}", history.total_observations, path.display());
    HistoryFile::new(history).write(&path)
}

fn exhausted(stats: &[&TrialStats]) -> CliResult<()> {
    let failures: u64 = stats.iter().map(|s| s.failures).sum();
    let trials: u64 = stats.iter().map(|s| s.n_trials).sum();
    if failures > 0 {
        return Err(CliError::Exhausted { failures, trials });
    }
    Ok(())
}

/// Runs the configured strategy and writes `simulation.json` and
/// `histogram.csv` into `out_dir`.
pub fn simulate(scenario: &Scenario, out_dir: &Path, opts: RunOptions) -> CliResult<SimulationReport> {
    let (n_trials, seed) = opts.resolve(scenario)?;
    let config = scenario.strategy()?;
    let strategy = config.build(&scenario.tx, &scenario.rx)?;
    let model = scenario.oracle_model()?;
    info!("simulating {} for {n_trials} trials (seed {seed})", config.name());
    let stats = with_threads(opts.threads, || {
        run_trials(strategy.as_ref(), &model, &scenario.tx, &scenario.rx, n_trials, seed)
    })??;
    let expected_tests = matches!(model, OracleModel::Index)
        .then(|| expected_tests_bruteforce(strategy.as_ref(), &scenario.tx, &scenario.rx).mean);
    let report = SimulationReport {
        strategy: config.name().to_string(),
        seed,
        n_trials,
        oracle: oracle_name(scenario),
        expected_tests,
        stats,
    };
    ensure_dir(out_dir)?;
    write_file(&out_dir.join("simulation.json"), &report.render(Format::Json))?;
    write_file(&out_dir.join("histogram.csv"), &report.stats.to_csv())?;
    if scenario.config.history.enabled {
        update_history(scenario, &[&report.stats])?;
    }
    exhausted(&[&report.stats])?;
    Ok(report)
}

/// Runs every comparison strategy on shared realizations and writes
/// `comparison.json`, `comparison.csv` and one `histogram_<name>.csv` each.
pub fn compare(scenario: &Scenario, out_dir: &Path, opts: RunOptions) -> CliResult<CompareReport> {
    let (n_trials, seed) = opts.resolve(scenario)?;
    let model = scenario.oracle_model()?;
    let built: Vec<(String, Box<dyn SearchStrategy>)> = scenario
        .comparison()?
        .into_iter()
        .map(|(name, c)| Ok((name, c.build(&scenario.tx, &scenario.rx)?)))
        .collect::<CliResult<_>>()?;
    let refs: Vec<(String, &dyn SearchStrategy)> = built.iter().map(|(n, s)| (n.clone(), s.as_ref())).collect();
    info!("comparing {} strategies over {n_trials} trials (seed {seed})", refs.len());
    let comparison =
        with_threads(opts.threads, || compare_strategies(&refs, &model, &scenario.tx, &scenario.rx, n_trials, seed))??;
    let report = CompareReport { seed, n_trials, oracle: oracle_name(scenario), comparison };
    ensure_dir(out_dir)?;
    write_file(&out_dir.join("comparison.json"), &report.render(Format::Json))?;
    write_file(&out_dir.join("comparison.csv"), &report.csv())?;
    for e in &report.comparison.entries {
        write_file(&out_dir.join(format!("histogram_{}.csv", e.name)), &e.stats.to_csv())?;
    }
    let stats: Vec<&TrialStats> = report.comparison.entries.iter().map(|e| &e.stats).collect();
    if scenario.config.history.enabled {
        // every strategy sees the same realizations, so one batch is enough
        update_history(scenario, &stats[..1])?;
    }
    exhausted(&stats)?;
    Ok(report)
}
