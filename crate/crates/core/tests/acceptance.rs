//! Acceptance suite. Each check prints one PASS/FAIL line; run with
//! `cargo test -p beamtrain --test acceptance -- --nocapture --test-threads=1`
//! to see them in order.

use std::collections::HashSet;

use beamtrain::beamstats::{aggregate, contiguous_grouping, BeamPmf};
use beamtrain::codebook::{dft_codebook, inner, rssi, SparseChannel, UlaConfig};
use beamtrain::montecarlo::{compare_strategies, run_trials, with_threads, OracleModel};
use beamtrain::oracle::IndexOracle;
use beamtrain::strategies::{
    expected_tests_bruteforce, mean_tests, op_operator, ExhaustiveSearch, FailedPairMemory, FallbackPolicy,
    HybridSearch, MarsSearch, MlHierarchySpec, MlSearch, SearchResult, SearchStrategy, Thresholds,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MC_TRIALS: u64 = 1_000_000;
const MC_SEED: u64 = 42;

fn table1_tx() -> BeamPmf {
    BeamPmf::with_prefix("T", vec![0.012, 0.02, 0.05, 0.19, 0.57, 0.1, 0.04, 0.01, 0.008]).unwrap()
}

fn table2_rx() -> BeamPmf {
    BeamPmf::with_prefix("R", vec![0.2, 0.75, 0.05]).unwrap()
}

fn table5_tx() -> BeamPmf {
    BeamPmf::with_prefix("T", vec![0.13, 0.072, 0.05, 0.12, 0.25, 0.14, 0.08, 0.15, 0.008]).unwrap()
}

fn mars(tx: &BeamPmf, rx: &BeamPmf) -> MarsSearch {
    MarsSearch::new(tx, rx, Thresholds::default(), FallbackPolicy::PureRankedRemainder).unwrap()
}

fn two_level_ml() -> MlSearch {
    MlSearch::new(MlHierarchySpec::new(9, vec![contiguous_grouping(9, 3, 0).unwrap()], 3, vec![]).unwrap())
}

fn table5_hybrid() -> HybridSearch {
    HybridSearch::new(&table5_tx(), &table2_rx(), vec![contiguous_grouping(9, 3, 0).unwrap()]).unwrap()
}

fn run_one(strategy: &dyn SearchStrategy, tx: usize, rx: usize) -> SearchResult {
    strategy.search(&mut IndexOracle::new(tx, rx), &mut FailedPairMemory::new())
}

/// Records one line per check and fails the test at the end if any failed.
struct Report {
    criterion: &'static str,
    failures: Vec<String>,
}

impl Report {
    fn new(criterion: &'static str) -> Self {
        Self { criterion, failures: Vec::new() }
    }

    fn check(&mut self, what: &str, ok: bool, detail: String) {
        println!("[{}] {} {what}: {detail}", self.criterion, if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failures.push(format!("{what}: {detail}"));
        }
    }

    fn near(&mut self, what: &str, got: f64, want: f64, tol: f64) {
        self.check(what, (got - want).abs() <= tol, format!("{got:.6} (want {want} ± {tol})"));
    }

    fn finish(self) {
        assert!(self.failures.is_empty(), "{} failed:\n{}", self.criterion, self.failures.join("\n"));
    }
}

#[test]
fn criterion_1_entropy_pins() {
    let mut r = Report::new("AC1");
    r.near("entropy(skewed 9-beam Tx)", table1_tx().entropy(), 0.59, 0.005);
    r.near("entropy(3-beam Rx)", table2_rx().entropy(), 0.30, 0.005);
    r.near("entropy(spread 9-beam Tx)", table5_tx().entropy(), 0.87, 0.005);
    let broad = aggregate(&table5_tx(), &contiguous_grouping(9, 3, 0).unwrap()).unwrap().broad_pmf;
    r.near("entropy(spread Tx, 3 broad beams)", broad.entropy(), 0.448, 0.005);
    r.near("relative_entropy(spread 9-beam Tx)", table5_tx().relative_entropy().unwrap(), 0.912, 0.005);
    r.finish();
}

#[test]
fn criterion_2_analytical_cost() {
    let mut r = Report::new("AC2");
    let (tx, rx) = (table1_tx(), table2_rx());
    let m = mean_tests(&op_operator(&rx.ranked_probs(), &tx.ranked_probs()).unwrap());
    r.near("mean_tests(op(Rx, skewed Tx))", m, 4.7, 0.05);
    let brute = expected_tests_bruteforce(&mars(&tx, &rx), &tx, &rx).mean;
    r.near("expected_tests_bruteforce(pure MarS) vs op", brute, m, 1e-9);
    r.finish();
}

#[test]
fn criterion_3_monte_carlo_reproduction() {
    let mut r = Report::new("AC3");
    let (tx, rx) = (table1_tx(), table2_rx());
    let start = std::time::Instant::now();
    let stats = run_trials(&mars(&tx, &rx), &OracleModel::Index, &tx, &rx, MC_TRIALS, MC_SEED).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    r.near("P(1 test)", stats.fraction_at(1), 0.4275, 0.003);
    r.near("P(2 tests)", stats.fraction_at(2), 0.1425, 0.002);
    r.near("meanTests", stats.mean_tests, 4.7, 0.05);
    r.check("no failed trials", stats.failures == 0, format!("{} failures", stats.failures));
    r.check("runtime under 60 s", elapsed < 60.0, format!("{elapsed:.2} s for {MC_TRIALS} trials"));
    r.finish();
}

#[test]
fn criterion_4_baseline_counts_and_savings() {
    let mut r = Report::new("AC4");
    let (tx, rx) = (table1_tx(), table2_rx());
    let exhaustive = ExhaustiveSearch::new(9, 3, true).unwrap();
    let ml = two_level_ml();
    let pairs: Vec<(usize, usize)> = (0..9).flat_map(|t| (0..3).map(move |r| (t, r))).collect();
    let exh_counts: HashSet<usize> = pairs.iter().map(|&(t, q)| run_one(&exhaustive, t, q).tests_used).collect();
    r.check(
        "exhaustive full sweep = 27 for all realizations",
        exh_counts == HashSet::from([27]),
        format!("{exh_counts:?}"),
    );
    let ml_counts: HashSet<usize> = pairs.iter().map(|&(t, q)| run_one(&ml, t, q).tests_used).collect();
    r.check("two-level ML = 12 for all realizations", ml_counts == HashSet::from([12]), format!("{ml_counts:?}"));

    let m = mars(&tx, &rx);
    let strategies: Vec<(String, &dyn SearchStrategy)> =
        vec![("exhaustive".into(), &exhaustive), ("ml".into(), &ml), ("mars".into(), &m)];
    let c = compare_strategies(&strategies, &OracleModel::Index, &tx, &rx, MC_TRIALS, MC_SEED).unwrap();
    r.near("savings MarS vs exhaustive (%)", c.savings_of("mars", "exhaustive").unwrap(), 82.6, 0.3);
    r.near("savings MarS vs ML (%)", c.savings_of("mars", "ml").unwrap(), 60.8, 0.5);
    r.finish();
}

#[test]
fn criterion_5_hybrid_worked_example() {
    let mut r = Report::new("AC5");
    let hybrid = table5_hybrid();
    let h = run_one(&hybrid, 3, 1);
    r.check(
        "hybrid (T4,R2) tests",
        h.tests_used == 4 && h.found_pair == Some((3, 1)),
        format!("{} tests", h.tests_used),
    );
    let m = run_one(&mars(&table5_tx(), &table2_rx()), 3, 1);
    r.check("MarS (T4,R2) tests", m.tests_used == 5 && m.found_pair == Some((3, 1)), format!("{} tests", m.tests_used));

    // mass resolved through the first broad test (T02, R2) and its cost
    let (tx, rx) = (table5_tx(), table2_rx());
    let mass: f64 = [3, 4, 5].iter().map(|&t| tx.prob(t) * rx.prob(1)).sum();
    let worst = [3, 4, 5].iter().map(|&t| run_one(&hybrid, t, 1).tests_used).max().unwrap();
    r.check(
        "P(T02,R2) = 0.3825, all within 4 tests",
        (mass - 0.3825).abs() < 1e-12 && worst <= 4,
        format!("mass {mass:.6}, worst {worst} tests"),
    );
    r.finish();
}

#[test]
fn criterion_5_hybrid_probability_within_four_tests() {
    let mut r = Report::new("AC5");
    let (tx, rx) = (table5_tx(), table2_rx());
    let cost = expected_tests_bruteforce(&table5_hybrid(), &tx, &rx);
    r.near("brute force P(hybrid testsUsed <= 4)", cost.prob_within(4), 0.3825, 1e-12);
    r.finish();
}

#[test]
fn criterion_6_physical_layer() {
    let mut r = Report::new("AC6");
    let (txa, rxa) = (UlaConfig::half_wavelength(9).unwrap(), UlaConfig::half_wavelength(3).unwrap());
    let (tcb, rcb) = (dft_codebook(&txa), dft_codebook(&rxa));
    let mut worst_gain_err: f64 = 0.0;
    for t in 0..9 {
        for q in 0..3 {
            let ch = SparseChannel::on_grid(&tcb, &rcb, t, q).unwrap();
            let g = rssi(&ch, tcb.beam(t), rcb.beam(q)).unwrap().powi(2);
            worst_gain_err = worst_gain_err.max((g - 27.0).abs());
        }
    }
    r.check("aligned RSSI² = 27", worst_gain_err < 1e-9, format!("max error {worst_gain_err:e}"));

    let mut gram_err: f64 = 0.0;
    for n in 1..=64 {
        let cb = dft_codebook(&UlaConfig::half_wavelength(n).unwrap());
        for (i, a) in cb.beams().iter().enumerate() {
            for (j, b) in cb.beams().iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                gram_err = gram_err.max((inner(a, b) - Complex64::new(want, 0.0)).norm());
            }
        }
    }
    r.check("codebook Gramian = I (N = 1..64)", gram_err < 1e-9, format!("max error {gram_err:e}"));

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut parseval_err: f64 = 0.0;
    for _ in 0..200 {
        let ntx = rng.random_range(1..=16);
        let nrx = rng.random_range(1..=8);
        let mpcs = (0..rng.random_range(1..=4))
            .map(|_| beamtrain::codebook::Mpc {
                tx_angle: rng.random_range(-1.5..1.5),
                rx_angle: rng.random_range(-1.5..1.5),
                gain: Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)),
            })
            .collect();
        let ch = SparseChannel::new(
            mpcs,
            UlaConfig::half_wavelength(ntx).unwrap(),
            UlaConfig::half_wavelength(nrx).unwrap(),
        )
        .unwrap();
        let (tc, rc) = (dft_codebook(&ch.tx_array), dft_codebook(&ch.rx_array));
        let energy: f64 =
            tc.beams().iter().flat_map(|t| rc.beams().iter().map(|q| rssi(&ch, t, q).unwrap().powi(2))).sum();
        parseval_err = parseval_err.max((energy - ch.frobenius_norm_sq()).abs());
    }
    r.check("Parseval energy (200 channels)", parseval_err < 1e-6, format!("max error {parseval_err:e}"));
    r.finish();
}

fn random_pmf(rng: &mut ChaCha8Rng, prefix: &str, n: usize) -> BeamPmf {
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
    let labels = (1..=n).map(|i| format!("{prefix}{i}")).collect();
    BeamPmf::from_weights(labels, &w).unwrap()
}

fn random_strategy(rng: &mut ChaCha8Rng, tx: &BeamPmf, rx: &BeamPmf) -> Box<dyn SearchStrategy> {
    let n = tx.len();
    let divisor = (2..n).find(|d| n.is_multiple_of(*d));
    match rng.random_range(0..4) {
        0 => Box::new(ExhaustiveSearch::new(n, rx.len(), rng.random()).unwrap()),
        1 if divisor.is_some() => Box::new(MlSearch::new(
            MlHierarchySpec::new(n, vec![contiguous_grouping(n, divisor.unwrap(), 0).unwrap()], rx.len(), vec![])
                .unwrap(),
        )),
        2 if divisor.is_some() => {
            Box::new(HybridSearch::new(tx, rx, vec![contiguous_grouping(n, divisor.unwrap(), 0).unwrap()]).unwrap())
        }
        _ => {
            let th = Thresholds { tx: rng.random_range(0.05..=1.0), rx: rng.random_range(0.05..=1.0) };
            let fb = if rng.random() {
                FallbackPolicy::PureRankedRemainder
            } else {
                FallbackPolicy::MlOverRemainder { num_groups: rng.random_range(2..=4) }
            };
            Box::new(MarsSearch::new(tx, rx, th, fb).unwrap())
        }
    }
}

#[test]
fn criterion_7_property_suites() {
    let mut r = Report::new("AC7");
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    let mut repeats = 0;
    let mut wrong = 0;
    for _ in 0..10_000 {
        let (ntx, nrx) = (rng.random_range(1..=16), rng.random_range(1..=8));
        let (tx, rx) = (random_pmf(&mut rng, "T", ntx), random_pmf(&mut rng, "R", nrx));
        let strategy = random_strategy(&mut rng, &tx, &rx);
        let (t, q) = (rng.random_range(0..ntx), rng.random_range(0..nrx));
        let res = run_one(strategy.as_ref(), t, q);
        let mut seen = HashSet::new();
        if !res.test_log.iter().all(|e| seen.insert((e.tx.clone(), e.rx.clone()))) {
            repeats += 1;
        }
        if res.found_pair != Some((t, q)) {
            wrong += 1;
        }
    }
    r.check("no repeated test in 10^4 random scenarios", repeats == 0, format!("{repeats} logs with repeats"));
    r.check("index oracle returns the true pair", wrong == 0, format!("{wrong} wrong results"));

    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (ntx, nrx) = (rng.random_range(1..=16), rng.random_range(1..=8));
        let (tx, rx) = (random_pmf(&mut rng, "T", ntx), random_pmf(&mut rng, "R", nrx));
        let brute = expected_tests_bruteforce(&MarsSearch::pure(&tx, &rx).unwrap(), &tx, &rx).mean;
        let closed = beamtrain::strategies::pure_mars_expected_tests(&tx, &rx).unwrap();
        worst = worst.max((brute - closed).abs());
    }
    r.check("analytical = brute force on 100 random PMF pairs", worst < 1e-9, format!("max error {worst:e}"));

    let mut below = 0;
    for _ in 0..1_000 {
        let groups = rng.random_range(2..=4);
        let size = rng.random_range(2..=4);
        let n = groups * size;
        let nrx = rng.random_range(1..=8);
        let (tx, rx) = (random_pmf(&mut rng, "T", n), random_pmf(&mut rng, "R", nrx));
        let hybrid = HybridSearch::new(&tx, &rx, vec![contiguous_grouping(n, groups, 0).unwrap()]).unwrap();
        for t in 0..n {
            for q in 0..rx.len() {
                if run_one(&hybrid, t, q).tests_used < hybrid.num_levels() {
                    below += 1;
                }
            }
        }
    }
    r.check("hybrid testsUsed >= L", below == 0, format!("{below} realizations below L"));

    let (tx, rx) = (table1_tx(), table2_rx());
    let m = mars(&tx, &rx);
    let csv = |threads| {
        with_threads(Some(threads), || run_trials(&m, &OracleModel::Index, &tx, &rx, 200_000, MC_SEED))
            .unwrap()
            .unwrap()
            .to_csv()
    };
    let (a, b, c) = (csv(1), csv(4), csv(4));
    r.check("byte-identical CSV across runs and thread counts", a == b && b == c, format!("{} bytes", a.len()));
    r.finish();
}
