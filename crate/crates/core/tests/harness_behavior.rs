//! Harness protocol tests: ground truth, error accounting, determinism,
//! unit-order invariance, and the sampling oracle.

use interleave_lab_core::analytic::{
    error_probability, method_stats, AnalyticScenario, EvaluationMethod,
};
use interleave_lab_core::clickmodel::ClickModelSpec;
use interleave_lab_core::dataset::{
    enumerate_pairs, generate_synthetic, parse_letor, RankerPair, SyntheticConfig,
};
use interleave_lab_core::harness::{
    error_indicator, ground_truth, monte_carlo_error, run_rq1, run_rq2, Checkpoints,
    ExperimentConfig, HarnessError, Rq1Runner, Rq2Runner,
};
use interleave_lab_core::ranking::{Preference, DEFAULT_MAX_GRADE};
use interleave_lab_core::streams::derive_rng;

fn small_synthetic() -> Vec<interleave_lab_core::dataset::QueryRecord> {
    generate_synthetic(&SyntheticConfig {
        queries: 12,
        features: 3,
        group_size: 6,
        ..SyntheticConfig::default()
    })
}

fn quick_config(click_model: ClickModelSpec) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(click_model);
    cfg.impressions = 120;
    cfg.repeats = 2;
    cfg.seed = 5;
    cfg.rq2_query_samples = 40;
    cfg
}

#[test]
fn ground_truth_prefers_the_larger_mean_ndcg() {
    // feature 1 sorts docs with high grades on top, feature 2 the reverse;
    // the groups are disjoint so the pair is displayable
    let text = "\
2 qid:1 1:0.9 2:0.1 #docid=a1
1 qid:1 1:0.8 2:0.2 #docid=a2
0 qid:1 1:0.1 2:0.9 #docid=b1
0 qid:1 1:0.2 2:0.8 #docid=b2
2 qid:2 1:0.9 2:0.1 #docid=c1
1 qid:2 1:0.8 2:0.2 #docid=c2
1 qid:2 1:0.1 2:0.9 #docid=d1
0 qid:2 1:0.2 2:0.8 #docid=d2
";
    let dataset = parse_letor(text, DEFAULT_MAX_GRADE).unwrap();
    let pair = RankerPair { feature_a: 1, feature_b: 2, cutoff: 2 };
    assert_eq!(ground_truth(&pair, &dataset), Preference::PreferA);
    let flipped = RankerPair { feature_a: 2, feature_b: 1, cutoff: 2 };
    assert_eq!(ground_truth(&flipped, &dataset), Preference::PreferB);
}

#[test]
fn ground_truth_is_undecidable_for_identical_rankers() {
    let dataset = small_synthetic();
    // comparing a feature against itself: rankings always overlap, so no
    // query is displayable and the truth is undecidable
    let pair = RankerPair { feature_a: 1, feature_b: 1, cutoff: 5 };
    assert_eq!(ground_truth(&pair, &dataset), Preference::Tie);
}

#[test]
fn error_indicator_table() {
    use Preference::*;
    assert_eq!(error_indicator(PreferA, PreferA).unwrap(), 0.0);
    assert_eq!(error_indicator(PreferB, PreferB).unwrap(), 0.0);
    assert_eq!(error_indicator(PreferB, PreferA).unwrap(), 1.0);
    assert_eq!(error_indicator(PreferA, PreferB).unwrap(), 1.0);
    assert_eq!(error_indicator(Tie, PreferA).unwrap(), 0.5);
    assert_eq!(error_indicator(Tie, PreferB).unwrap(), 0.5);
    assert_eq!(error_indicator(PreferA, Tie), Err(HarnessError::UndecidableTruth));
}

#[test]
fn rq1_single_impression_single_repeat_yields_one_row_per_method() {
    let dataset = small_synthetic();
    let pairs = [RankerPair { feature_a: 1, feature_b: 2, cutoff: 5 }];
    let mut cfg = quick_config(ClickModelSpec::navigational());
    cfg.impressions = 1;
    cfg.repeats = 1;
    let report = run_rq1(cfg, &dataset, &pairs).unwrap();
    assert_eq!(report.checkpoints, vec![1]);
    assert_eq!(report.rows.len(), 2);
    assert!(report.rows.iter().all(|r| r.impression == 1 && r.n_pairs == 1));
}

#[test]
fn rq1_reports_are_deterministic_and_unit_order_invariant() {
    let dataset = small_synthetic();
    let pairs = enumerate_pairs(&[1, 2, 3], 5).unwrap();
    let cfg = quick_config(ClickModelSpec::navigational());

    let sequential = run_rq1(cfg.clone(), &dataset, &pairs).unwrap();
    let repeated = run_rq1(cfg.clone(), &dataset, &pairs).unwrap();
    assert_eq!(sequential, repeated);

    // running units in reverse order must assemble to the same report
    let runner = Rq1Runner::new(cfg, &dataset, &pairs).unwrap();
    let units: Vec<_> = (0..runner.unit_count()).rev().map(|u| runner.run_unit(u)).collect();
    let reversed = runner.assemble(units);
    assert_eq!(sequential, reversed);
}

#[test]
fn rq1_error_rates_fall_with_impressions_on_clean_data() {
    let dataset = small_synthetic();
    let pairs = enumerate_pairs(&[1, 3], 5).unwrap();
    let mut cfg = quick_config(ClickModelSpec::navigational());
    cfg.impressions = 600;
    cfg.repeats = 4;
    let report = run_rq1(cfg, &dataset, &pairs).unwrap();
    for method in [EvaluationMethod::AbTesting, EvaluationMethod::Interleaving] {
        let first = report.rows.iter().find(|r| r.method == method).unwrap();
        let last = report.final_error_rate(method).unwrap();
        assert!((0.0..=1.0).contains(&last));
        assert!(
            last <= first.error_rate,
            "{method}: error at the end ({last}) above the start ({})",
            first.error_rate
        );
    }
}

#[test]
fn rq1_checkpoints_are_log_spaced_and_end_at_the_budget() {
    let dataset = small_synthetic();
    let pairs = [RankerPair { feature_a: 1, feature_b: 2, cutoff: 5 }];
    let mut cfg = quick_config(ClickModelSpec::perfect());
    cfg.impressions = 1000;
    cfg.repeats = 1;
    cfg.checkpoints = Checkpoints::LogSpaced(20);
    let report = run_rq1(cfg, &dataset, &pairs).unwrap();
    assert_eq!(*report.checkpoints.first().unwrap(), 1);
    assert_eq!(*report.checkpoints.last().unwrap(), 1000);
    assert!(report.checkpoints.windows(2).all(|w| w[0] < w[1]));
    assert!(report.checkpoints.len() >= 18 && report.checkpoints.len() <= 21);
}

#[test]
fn rq2_excludes_zero_difference_queries_and_bins_the_rest() {
    // query 1: equal grades on both sides (zero nDCG difference, excluded);
    // query 2: decisive difference
    let text = "\
1 qid:1 1:0.9 2:0.1 #docid=a1
1 qid:1 1:0.1 2:0.9 #docid=b1
2 qid:2 1:0.9 2:0.1 #docid=c1
0 qid:2 1:0.1 2:0.9 #docid=d1
";
    let dataset = parse_letor(text, DEFAULT_MAX_GRADE).unwrap();
    let pairs = [RankerPair { feature_a: 1, feature_b: 2, cutoff: 1 }];
    let mut cfg = quick_config(ClickModelSpec::navigational());
    cfg.cutoff = 1;
    cfg.impressions = 50;
    cfg.rq2_query_samples = 200;
    let report = run_rq2(cfg, &dataset, &pairs).unwrap();
    assert!(report.zero_diff_skips > 0, "equal-nDCG query was not excluded");
    assert_eq!(report.ineligible_skips, 0);
    // one row per (method, bin)
    assert_eq!(report.rows.len(), 2 * report.bin_edges.len());
    let il = report.bins_for(EvaluationMethod::Interleaving).unwrap();
    let populated: u64 = il.iter().map(|b| b.count).sum();
    assert!(populated > 0);
}

#[test]
fn rq2_perfect_model_shows_no_meaningful_method_gap() {
    let dataset = generate_synthetic(&SyntheticConfig::default());
    let pairs = enumerate_pairs(&[1, 3, 5], 5).unwrap();
    let mut cfg = quick_config(ClickModelSpec::perfect());
    cfg.impressions = 1000;
    cfg.repeats = 2;
    cfg.rq2_query_samples = 150;
    let report = run_rq2(cfg, &dataset, &pairs).unwrap();
    let ab = report.bins_for(EvaluationMethod::AbTesting).unwrap();
    let il = report.bins_for(EvaluationMethod::Interleaving).unwrap();
    for (bin, (lo, hi)) in report.bin_edges.iter().enumerate() {
        if ab[bin].count < 20 {
            continue;
        }
        let gap = ab[bin].mean() - il[bin].mean();
        let se = (ab[bin].standard_error().powi(2) + il[bin].standard_error().powi(2)).sqrt();
        let allowance = (3.0 * se).max(0.05);
        assert!(
            gap.abs() <= allowance,
            "perfect model bin [{lo}, {hi}): gap {gap} beyond {allowance}"
        );
    }
}

#[test]
fn rq2_reports_are_deterministic_and_unit_order_invariant() {
    let dataset = small_synthetic();
    let pairs = enumerate_pairs(&[1, 2, 3], 5).unwrap();
    let cfg = quick_config(ClickModelSpec::navigational());

    let sequential = run_rq2(cfg.clone(), &dataset, &pairs).unwrap();
    let runner = Rq2Runner::new(cfg, &dataset, &pairs).unwrap();
    let units: Vec<_> = (0..runner.unit_count()).rev().map(|u| runner.run_unit(u)).collect();
    let reversed = runner.assemble(units);
    assert_eq!(sequential, reversed);
}

#[test]
fn config_validation_rejects_bad_knobs_and_uncovered_grades() {
    let dataset = small_synthetic();
    let pairs = [RankerPair { feature_a: 1, feature_b: 2, cutoff: 5 }];

    let mut cfg = quick_config(ClickModelSpec::perfect());
    cfg.impressions = 0;
    assert!(matches!(
        run_rq1(cfg, &dataset, &pairs),
        Err(HarnessError::Config(_))
    ));

    let mut cfg = quick_config(ClickModelSpec::perfect());
    cfg.rq2_bins = vec![0.0];
    assert!(matches!(run_rq2(cfg, &dataset, &pairs), Err(HarnessError::Config(_))));

    // tables covering only grades 0..=1 cannot simulate grade-2 documents
    let narrow = ClickModelSpec::new("narrow", vec![0.0, 0.5], vec![0.0, 0.0]).unwrap();
    let cfg = quick_config(narrow);
    assert!(matches!(run_rq1(cfg, &dataset, &pairs), Err(HarnessError::Config(_))));
}

#[test]
fn no_valid_pairs_is_reported() {
    let dataset = small_synthetic();
    let pairs = [RankerPair { feature_a: 1, feature_b: 1, cutoff: 5 }];
    let cfg = quick_config(ClickModelSpec::perfect());
    assert!(matches!(run_rq1(cfg, &dataset, &pairs), Err(HarnessError::NoValidPairs)));
}

// ── Sampling oracle ─────────────────────────────────────────────────

#[test]
fn monte_carlo_single_trial_is_zero_or_one() {
    let scenario = AnalyticScenario::new(0.9, 0.3, 1.0, 100).unwrap();
    let mut rng = derive_rng(77, &[]);
    for _ in 0..20 {
        let p =
            monte_carlo_error(&scenario, EvaluationMethod::Interleaving, 1, &mut rng).unwrap();
        assert!(p == 0.0 || p == 1.0, "single-trial estimate {p}");
    }
}

#[test]
fn monte_carlo_equal_relevances_hover_around_one_half() {
    // large n keeps the tie mass of the discrete difference negligible
    let scenario = AnalyticScenario::new(0.5, 0.5, 0.3, 200_000).unwrap();
    let trials = 100_000u64;
    for method in [EvaluationMethod::AbTesting, EvaluationMethod::Interleaving] {
        let mut rng = derive_rng(78, &[method as u64]);
        let p = monte_carlo_error(&scenario, method, trials, &mut rng).unwrap();
        let se = (0.25 / trials as f64).sqrt();
        assert!((p - 0.5).abs() <= 3.0 * se, "{method}: {p}");
    }
}

#[test]
fn monte_carlo_matches_the_exact_discrete_probability_at_small_n() {
    // at n=1000 the click probabilities are so small that the discrete
    // difference carries visible tie mass: the exact P(A <= B) is 0.066572,
    // noticeably above the normal-approximation value 0.051722
    let scenario = AnalyticScenario::new(1.0, 0.2, 100.0, 1000).unwrap();
    let trials = 100_000u64;
    let mut rng = derive_rng(79, &[]);
    let mc =
        monte_carlo_error(&scenario, EvaluationMethod::Interleaving, trials, &mut rng).unwrap();
    let exact = 0.0665719581;
    let se = (exact * (1.0 - exact) / trials as f64).sqrt();
    assert!((mc - exact).abs() <= 4.0 * se, "mc {mc} vs exact {exact}");

    let stats = method_stats(&scenario, EvaluationMethod::Interleaving);
    let closed = error_probability(stats.delta(), stats.var_sum).unwrap();
    assert!((closed - 0.051722).abs() < 1e-6);
    assert!(mc > closed, "the tie mass pushes the sampled rate above the closed form");
}

#[test]
fn monte_carlo_validates_inputs() {
    let scenario = AnalyticScenario::new(0.9, 0.3, 1.0, 100).unwrap();
    let mut rng = derive_rng(80, &[]);
    assert!(matches!(
        monte_carlo_error(&scenario, EvaluationMethod::AbTesting, 0, &mut rng),
        Err(HarnessError::Config(_))
    ));
}
