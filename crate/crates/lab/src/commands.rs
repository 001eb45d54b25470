//! Command implementations: `analyze`, `check`, `simulate rq1|rq2`, and
//! `selftest`.

use std::path::{Path, PathBuf};

use interleave_lab_core::analytic::{
    check_constant_case, check_relevance_aware_case, normal_cdf, sweep_grid, AnalyticScenario,
    EvaluationMethod,
};
use interleave_lab_core::clickmodel::{simulate_cascade, ClickModelSpec};
use interleave_lab_core::comparison::{
    assign_ab_arm, interleave_ima, score_impression, Team,
};
use interleave_lab_core::dataset::enumerate_pairs;
use interleave_lab_core::harness::{Checkpoints, ExperimentConfig, Rq1Runner, Rq2Runner};
use interleave_lab_core::ranking::{ClickVector, RankedItem, Ranking, RelevanceGrade};
use interleave_lab_core::streams::derive_rng;
use rand::Rng;

use crate::config::{parse_list, ConfigMap};
use crate::csvout::{rq1_csv, rq2_csv, sweep_csv, write_atomic};
use crate::dataio::load_dataset;
use crate::manifest::RunManifest;
use crate::parallel::{default_workers, run_units};
use crate::CliError;

pub const DEFAULT_SEED: u64 = 42;
pub const SEED_ENV_VAR: &str = "INTERLEAVE_LAB_SEED";

fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV_VAR) {
        Ok(raw) => raw.parse::<u64>().map(Some).map_err(|_| {
            CliError::Validation(format!("{SEED_ENV_VAR}: cannot parse seed `{raw}`"))
        }),
        Err(_) => Ok(None),
    }
}

/// Seed precedence: flag, then config, then environment, then the default.
fn resolve_seed(flag: Option<u64>, config: &ConfigMap) -> Result<u64, CliError> {
    Ok(flag
        .or(config.get_parsed::<u64>("seed")?)
        .or(env_seed()?)
        .unwrap_or(DEFAULT_SEED))
}

fn load_config(path: Option<&Path>) -> Result<ConfigMap, CliError> {
    match path {
        Some(path) => ConfigMap::load(path),
        None => Ok(ConfigMap::empty()),
    }
}

// ── analyze ─────────────────────────────────────────────────────────

pub struct AnalyzeOptions {
    pub alpha: Option<String>,
    pub grid_step: Option<f64>,
    pub n: Option<u64>,
    pub out: Option<PathBuf>,
    pub config: Option<PathBuf>,
}

pub fn analyze(options: &AnalyzeOptions) -> Result<(), CliError> {
    let config = load_config(options.config.as_deref())?;
    let alphas: Vec<f64> = match &options.alpha {
        Some(raw) => parse_list(raw).map_err(CliError::Validation)?,
        None => config.get_list("analyze.alpha")?.unwrap_or_else(|| vec![1.0, 100.0]),
    };
    let grid_step = options
        .grid_step
        .or(config.get_parsed("analyze.grid_step")?)
        .unwrap_or(0.02);
    let n = options.n.or(config.get_parsed("analyze.n")?).unwrap_or(10_000);
    let out = options
        .out
        .clone()
        .or(config.get("analyze.out").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("sweep.csv"));
    if alphas.is_empty() {
        return Err(CliError::Validation("--alpha needs at least one value".into()));
    }

    let points = sweep_grid(&alphas, grid_step, n)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    write_atomic(&out, &sweep_csv(&points))?;

    let mut manifest = RunManifest::new("analyze");
    manifest.set(
        "analyze.alpha",
        alphas.iter().map(f64::to_string).collect::<Vec<_>>().join(","),
    );
    manifest.set("analyze.grid_step", grid_step);
    manifest.set("analyze.n", n);
    manifest.set("analyze.out", out.display());
    manifest.outputs.push(out.clone());
    manifest.write_next_to(&out)?;

    println!(
        "analyze: {} scenarios ({} alphas, grid step {grid_step}, n = {n}) -> {}",
        points.len(),
        alphas.len(),
        out.display()
    );
    Ok(())
}

// ── check ───────────────────────────────────────────────────────────

pub struct CheckOptions {
    pub draws: Option<u64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub config: Option<PathBuf>,
}

pub fn check(options: &CheckOptions) -> Result<(), CliError> {
    let config = load_config(options.config.as_deref())?;
    let draws = options.draws.or(config.get_parsed("check.draws")?).unwrap_or(10_000);
    let seed = resolve_seed(options.seed, &config)?;
    if draws == 0 {
        return Err(CliError::Validation("--draws must be >= 1".into()));
    }

    let mut report = String::new();
    report.push_str(&format!("theorem checks: {draws} draws per case, seed {seed}\n"));

    let mut rng = derive_rng(seed, &[0xc0]);
    let mut constant_failures = 0u64;
    for _ in 0..draws {
        let c = f64::from(rng.gen_range(1..=1000u32)) / 1000.0;
        let er_a = rng.gen();
        let er_b = rng.gen();
        let n = 1 + rng.gen_range(0..1_000_000u64);
        if let Err(e) = check_constant_case(c, er_a, er_b, n) {
            constant_failures += 1;
            if constant_failures <= 5 {
                report.push_str(&format!(
                    "  constant case failed at c={c} er_a={er_a} er_b={er_b} n={n}: {e}\n"
                ));
            }
        }
    }
    report.push_str(&format!(
        "constant examination: {}/{draws} equal-efficiency checks passed\n",
        draws - constant_failures
    ));

    let mut rng = derive_rng(seed, &[0xc1]);
    let mut aware_failures = 0u64;
    for _ in 0..draws {
        let er_b = 0.001 + 0.997 * rng.gen::<f64>();
        let er_a = er_b + (1.0 - er_b - 1e-9) * (0.001 + 0.999 * rng.gen::<f64>());
        let alpha = 0.001 + 199.999 * rng.gen::<f64>();
        let n = 1 + rng.gen_range(0..1_000_000u64);
        let scenario = AnalyticScenario::new(er_a, er_b, alpha, n)
            .map_err(|e| CliError::Validation(e.to_string()))?;
        if let Err(e) = check_relevance_aware_case(&scenario) {
            aware_failures += 1;
            if aware_failures <= 5 {
                report.push_str(&format!(
                    "  relevance-aware case failed at er_a={er_a} er_b={er_b} alpha={alpha} n={n}: {e}\n"
                ));
            }
        }
    }
    report.push_str(&format!(
        "relevance-aware examination: {}/{draws} strict-gain checks passed\n",
        draws - aware_failures
    ));

    print!("{report}");
    if let Some(out) = &options.out {
        write_atomic(out, &report)?;
        let mut manifest = RunManifest::new("check");
        manifest.set("check.draws", draws);
        manifest.set("seed", seed);
        manifest.set("check.out", out.display());
        manifest.outputs.push(out.clone());
        manifest.write_next_to(out)?;
    }

    if constant_failures + aware_failures > 0 {
        return Err(CliError::Validation(format!(
            "{} theorem checks failed",
            constant_failures + aware_failures
        )));
    }
    Ok(())
}

// ── simulate ────────────────────────────────────────────────────────

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResearchQuestion {
    Rq1,
    Rq2,
}

pub struct SimulateOptions {
    pub question: ResearchQuestion,
    pub dataset: Option<PathBuf>,
    pub synthetic: bool,
    pub click_model: Option<String>,
    pub impressions: Option<u64>,
    pub repeats: Option<u32>,
    pub cutoff: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub features: Option<String>,
    pub rq2_samples: Option<usize>,
    pub rq2_bins: Option<String>,
    pub log_every_impression: bool,
    pub config: Option<PathBuf>,
}

fn click_model_from(name: &str, config: &ConfigMap) -> Result<ClickModelSpec, CliError> {
    match name {
        "perfect" => Ok(ClickModelSpec::perfect()),
        "navigational" => Ok(ClickModelSpec::navigational()),
        "file" => {
            let click = config
                .get_list::<f64>("click_model.click_probs")?
                .ok_or_else(|| {
                    CliError::Validation(
                        "--click-model file needs click_model.click_probs in the config".into(),
                    )
                })?;
            let stop = config
                .get_list::<f64>("click_model.stop_probs")?
                .ok_or_else(|| {
                    CliError::Validation(
                        "--click-model file needs click_model.stop_probs in the config".into(),
                    )
                })?;
            let label = config.get("click_model.name").unwrap_or("custom").to_string();
            ClickModelSpec::new(label, click, stop)
                .map_err(|e| CliError::Validation(e.to_string()))
        }
        other => Err(CliError::Validation(format!(
            "unknown click model `{other}` (expected perfect, navigational, or file)"
        ))),
    }
}

pub fn simulate(options: &SimulateOptions) -> Result<(), CliError> {
    let config = load_config(options.config.as_deref())?;
    let seed = resolve_seed(options.seed, &config)?;

    let dataset_path = options
        .dataset
        .clone()
        .or_else(|| config.get("dataset.path").map(PathBuf::from));
    let synthetic = options.synthetic
        || (dataset_path.is_none() && config.get("dataset.synthetic") == Some("true"));
    let loaded = load_dataset(dataset_path.as_deref(), synthetic, &config)?;

    let model_name = options
        .click_model
        .clone()
        .or_else(|| config.get("click_model.selector").map(String::from))
        .unwrap_or_else(|| "navigational".to_string());
    let click_model = click_model_from(&model_name, &config)?;

    let cutoff = options
        .cutoff
        .or(config.get_parsed("dataset.cutoff")?)
        .unwrap_or(5);
    let features = match &options.features {
        Some(raw) => parse_list::<u32>(raw).map_err(CliError::Validation)?,
        None => loaded.features.clone(),
    };
    let pairs =
        enumerate_pairs(&features, cutoff).map_err(|e| CliError::Validation(e.to_string()))?;

    let mut cfg = ExperimentConfig::new(click_model);
    cfg.seed = seed;
    cfg.cutoff = cutoff;
    cfg.impressions = options
        .impressions
        .or(config.get_parsed("simulate.impressions")?)
        .unwrap_or(1000);
    cfg.repeats = options.repeats.or(config.get_parsed("simulate.repeats")?).unwrap_or(10);
    cfg.rq2_query_samples = options
        .rq2_samples
        .or(config.get_parsed("rq2.samples")?)
        .unwrap_or(1000);
    if let Some(raw) = options
        .rq2_bins
        .as_deref()
        .or(config.get("rq2.bins"))
    {
        cfg.rq2_bins = parse_list(raw).map_err(CliError::Validation)?;
    }
    if options.log_every_impression {
        cfg.checkpoints = Checkpoints::EveryImpression;
    }

    let workers = options
        .workers
        .or(config.get_parsed("workers")?)
        .unwrap_or_else(default_workers);
    let out = options
        .out
        .clone()
        .or_else(|| config.get("simulate.out").map(PathBuf::from))
        .unwrap_or_else(|| {
            PathBuf::from(match options.question {
                ResearchQuestion::Rq1 => "rq1.csv",
                ResearchQuestion::Rq2 => "rq2.csv",
            })
        });

    let mut manifest = RunManifest::new(match options.question {
        ResearchQuestion::Rq1 => "simulate.rq1",
        ResearchQuestion::Rq2 => "simulate.rq2",
    });
    manifest.set("seed", seed);
    manifest.set("workers", workers);
    if let Some(path) = &dataset_path {
        manifest.set("dataset.path", path.display());
    } else {
        manifest.set("dataset.synthetic", "true");
        for (key, value) in config.iter().filter(|(k, _)| k.starts_with("synthetic.")) {
            manifest.set(key, value);
        }
    }
    if let Some(max_grade) = config.get("dataset.max_grade") {
        manifest.set("dataset.max_grade", max_grade);
    }
    manifest.set("dataset.cutoff", cutoff);
    manifest.set(
        "dataset.features",
        features.iter().map(u32::to_string).collect::<Vec<_>>().join(","),
    );
    manifest.set("click_model.selector", &model_name);
    if model_name == "file" {
        for key in ["click_model.name", "click_model.click_probs", "click_model.stop_probs"] {
            if let Some(value) = config.get(key) {
                manifest.set(key, value);
            }
        }
    }
    manifest.set("simulate.impressions", cfg.impressions);
    manifest.set("simulate.repeats", cfg.repeats);
    manifest.set("simulate.out", out.display());
    manifest.outputs.push(out.clone());

    let validation = |e: interleave_lab_core::harness::HarnessError| {
        CliError::Validation(e.to_string())
    };
    match options.question {
        ResearchQuestion::Rq1 => {
            let runner = Rq1Runner::new(cfg, &loaded.records, &pairs).map_err(validation)?;
            let units = run_units(runner.unit_count(), workers, |unit| runner.run_unit(unit));
            let report = runner.assemble(units);
            write_atomic(&out, &rq1_csv(&loaded.label, &report))?;
            manifest.write_next_to(&out)?;
            for (pair, reason) in &report.skipped_pairs {
                eprintln!("skipped pair {pair}: {reason}");
            }
            println!(
                "simulate rq1: dataset {} ({} pairs, {} repeats, {} impressions) -> {}",
                loaded.label,
                report.n_pairs,
                report.repeats,
                report.impressions,
                out.display()
            );
            for method in [EvaluationMethod::AbTesting, EvaluationMethod::Interleaving] {
                if let Some(rate) = report.final_error_rate(method) {
                    println!("  final error rate {method}: {rate:.4}");
                }
            }
        }
        ResearchQuestion::Rq2 => {
            manifest.set("rq2.samples", cfg.rq2_query_samples);
            manifest.set(
                "rq2.bins",
                cfg.rq2_bins.iter().map(f64::to_string).collect::<Vec<_>>().join(","),
            );
            let runner = Rq2Runner::new(cfg, &loaded.records, &pairs).map_err(validation)?;
            let units = run_units(runner.unit_count(), workers, |unit| runner.run_unit(unit));
            let report = runner.assemble(units);
            write_atomic(&out, &rq2_csv(&loaded.label, &report))?;
            manifest.write_next_to(&out)?;
            for (pair, reason) in &report.skipped_pairs {
                eprintln!("skipped pair {pair}: {reason}");
            }
            println!(
                "simulate rq2: dataset {} ({} pairs, {} samples x {} repeats, {} zero-diff skips) -> {}",
                loaded.label,
                report.n_pairs,
                report.rows.iter().map(|r| r.n_samples).sum::<u64>() / 2,
                report.repeats,
                report.zero_diff_skips,
                out.display()
            );
        }
    }
    Ok(())
}

// ── selftest ────────────────────────────────────────────────────────

pub struct SelftestOptions {
    pub seed: Option<u64>,
}

struct SelftestReport {
    failures: u32,
}

impl SelftestReport {
    fn record(&mut self, name: &str, outcome: Result<(), String>) {
        match outcome {
            Ok(()) => println!("PASS {name}"),
            Err(detail) => {
                self.failures += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
}

fn check_within(name: &str, got: f64, want: f64, tolerance: f64) -> Result<(), String> {
    if (got - want).abs() <= tolerance {
        Ok(())
    } else {
        Err(format!("{name}: {got} vs {want} (tolerance {tolerance})"))
    }
}

/// Runs the built-in property battery; exits nonzero if anything fails.
pub fn selftest(options: &SelftestOptions) -> Result<(), CliError> {
    let seed = resolve_seed(options.seed, &ConfigMap::empty())?;
    println!("selftest: seed {seed}");
    let mut report = SelftestReport { failures: 0 };

    report.record("normal cdf spot values", {
        check_within("phi(0)", normal_cdf(0.0), 0.5, 1e-15)
            .and(check_within("phi(-1.96)", normal_cdf(-1.96), 0.024997895148220435, 1e-12))
            .and(check_within("phi(1)", normal_cdf(1.0), 0.8413447460685429, 1e-12))
    });

    report.record("constant examination keeps the methods equal", {
        let mut rng = derive_rng(seed, &[1]);
        let mut outcome = Ok(());
        for _ in 0..2000 {
            let c = f64::from(rng.gen_range(1..=1000u32)) / 1000.0;
            let (er_a, er_b) = (rng.gen(), rng.gen());
            let n = 1 + rng.gen_range(0..1_000_000u64);
            if let Err(e) = check_constant_case(c, er_a, er_b, n) {
                outcome = Err(e.to_string());
                break;
            }
        }
        outcome
    });

    report.record("relevance-aware examination strictly favors interleaving", {
        let mut rng = derive_rng(seed, &[2]);
        let mut outcome = Ok(());
        for _ in 0..2000 {
            let er_b = 0.001 + 0.997 * rng.gen::<f64>();
            let er_a = er_b + (1.0 - er_b - 1e-9) * (0.001 + 0.999 * rng.gen::<f64>());
            let alpha = 0.001 + 199.999 * rng.gen::<f64>();
            let scenario =
                AnalyticScenario::new(er_a, er_b, alpha, 1 + rng.gen_range(0..1_000_000u64))
                    .expect("sampled within the domain");
            if let Err(e) = check_relevance_aware_case(&scenario) {
                outcome = Err(e.to_string());
                break;
            }
        }
        outcome
    });

    let ranking_a = Ranking::new(
        "selftest",
        (0..5)
            .map(|i| RankedItem { doc_id: format!("a{i}"), grade: RelevanceGrade(2) })
            .collect(),
    );
    let ranking_b = Ranking::new(
        "selftest",
        (0..5)
            .map(|i| RankedItem { doc_id: format!("b{i}"), grade: RelevanceGrade(0) })
            .collect(),
    );

    report.record("per-position team marginal is a fair coin", {
        let mut rng = derive_rng(seed, &[3]);
        let generations = 50_000;
        let mut counts = [0u32; 5];
        for _ in 0..generations {
            let interleaved = interleave_ima(&ranking_a, &ranking_b, 5, &mut rng).unwrap();
            for (position, entry) in interleaved.entries().iter().enumerate() {
                if entry.team == Team::A {
                    counts[position] += 1;
                }
            }
        }
        counts
            .iter()
            .enumerate()
            .try_for_each(|(position, &count)| {
                let freq = f64::from(count) / f64::from(generations);
                check_within(&format!("position {}", position + 1), freq, 0.5, 0.012)
            })
    });

    report.record("arm assignment is a fair coin", {
        let mut rng = derive_rng(seed, &[4]);
        let draws = 50_000;
        let arm_a = (0..draws).filter(|_| assign_ab_arm(&mut rng) == Team::A).count();
        check_within("arm A frequency", arm_a as f64 / f64::from(draws), 0.5, 0.012)
    });

    report.record("team-independent clicks leave no bias", {
        let mut team_rng = derive_rng(seed, &[5]);
        let mut click_rng = derive_rng(seed, &[6]);
        let impressions = 50_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..impressions {
            let interleaved =
                interleave_ima(&ranking_a, &ranking_b, 5, &mut team_rng).unwrap();
            let positions: Vec<usize> =
                (1..=5).filter(|_| click_rng.gen::<bool>()).collect();
            let clicks = ClickVector::new(positions, 5).unwrap();
            let score = score_impression(&interleaved, &clicks).unwrap();
            let diff = score.score_a - score.score_b;
            sum += diff;
            sum_sq += diff * diff;
        }
        let n = f64::from(impressions);
        let mean = sum / n;
        let se = (((sum_sq - sum * sum / n) / (n - 1.0)) / n).sqrt();
        if mean.abs() <= 3.0 * se {
            Ok(())
        } else {
            Err(format!("mean score difference {mean} exceeds 3 se {}", 3.0 * se))
        }
    });

    report.record("cascade forced paths", {
        let mut rng = derive_rng(seed, &[7]);
        let nav = ClickModelSpec::navigational();
        let perfect = ClickModelSpec::perfect();
        let highly = [RelevanceGrade(2); 3];
        let none = [RelevanceGrade(0); 3];
        let mut outcome = Ok(());
        for _ in 0..500 {
            let clicks = simulate_cascade(highly.iter().copied(), &nav, &mut rng);
            if clicks.positions() != [1] {
                outcome = Err(format!("navigational on (2,2,2) clicked {:?}", clicks.positions()));
                break;
            }
            let clicks = simulate_cascade(highly.iter().copied(), &perfect, &mut rng);
            if clicks.positions() != [1, 2, 3] {
                outcome = Err(format!("perfect on (2,2,2) clicked {:?}", clicks.positions()));
                break;
            }
            let clicks = simulate_cascade(none.iter().copied(), &nav, &mut rng);
            if clicks.click_count() != 0 {
                outcome = Err("navigational clicked an irrelevant item".into());
                break;
            }
        }
        outcome
    });

    report.record("score conservation within two ulps", {
        let mut worst: f64 = 0.0;
        for length in 1usize..=64 {
            for clicks_a in 0..=length {
                for clicks_b in 0..=(length - clicks_a) {
                    let sum = clicks_a as f64 / length as f64 + clicks_b as f64 / length as f64;
                    let total = (clicks_a + clicks_b) as f64 / length as f64;
                    worst = worst.max((sum - total).abs());
                }
            }
        }
        if worst <= 2.0 * f64::EPSILON {
            Ok(())
        } else {
            Err(format!("worst drift {worst:e}"))
        }
    });

    if report.failures > 0 {
        return Err(CliError::Validation(format!("{} selftest checks failed", report.failures)));
    }
    println!("selftest: all checks passed");
    Ok(())
}
