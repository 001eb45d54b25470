//! Experiment harness: dataset-driven comparisons of interleaving and A/B
//! testing under simulated clicks, and a sampling oracle for the
//! closed-form engine.
//!
//! Work is organized into independent units (one per ranker pair and
//! repeat), each owning random streams derived from the experiment seed and
//! the unit's indices. Units can run sequentially or in parallel; report
//! assembly is a deterministic ordered reduction, so the same configuration
//! always produces the same report.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::analytic::{method_stats, AnalyticError, AnalyticScenario, EvaluationMethod};
use crate::clickmodel::{simulate_cascade, ClickModelSpec};
use crate::comparison::{
    assign_ab_arm, interleave_ima, score_ab_impression, score_impression,
    EvaluationAccumulator, Team,
};
use crate::dataset::{ndcg, rank_by_feature, DatasetError, QueryRecord, RankerPair};
use crate::ranking::{Preference, Ranking};
use crate::streams::derive_rng;

const STREAM_RQ1_QUERY: u64 = 0x11;
const STREAM_RQ1_TEAM: u64 = 0x12;
const STREAM_RQ1_CLICK_IL: u64 = 0x13;
const STREAM_RQ1_ARM: u64 = 0x14;
const STREAM_RQ1_CLICK_AB: u64 = 0x15;
const STREAM_RQ2_SAMPLES: u64 = 0x21;
const STREAM_RQ2_TEAM: u64 = 0x22;
const STREAM_RQ2_CLICK_IL: u64 = 0x23;
const STREAM_RQ2_ARM: u64 = 0x24;
const STREAM_RQ2_CLICK_AB: u64 = 0x25;

/// Harness-layer failures.
#[derive(Clone, Debug, PartialEq)]
pub enum HarnessError {
    Config(String),
    NoValidPairs,
    UndecidableTruth,
    Domain(AnalyticError),
    Dataset(DatasetError),
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::Config(msg) => write!(f, "invalid configuration: {msg}"),
            HarnessError::NoValidPairs => write!(f, "no ranker pair is usable on this dataset"),
            HarnessError::UndecidableTruth => {
                write!(f, "ground truth is undecidable (equal mean quality)")
            }
            HarnessError::Domain(e) => write!(f, "{e}"),
            HarnessError::Dataset(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for HarnessError {}

impl From<AnalyticError> for HarnessError {
    fn from(e: AnalyticError) -> Self {
        HarnessError::Domain(e)
    }
}

impl From<DatasetError> for HarnessError {
    fn from(e: DatasetError) -> Self {
        HarnessError::Dataset(e)
    }
}

/// Where along the impression axis RQ1 records error rates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Checkpoints {
    /// About this many checkpoints, log-spaced from 1 to the impression
    /// budget (the final impression is always included).
    LogSpaced(usize),
    EveryImpression,
}

/// Knobs of one simulated experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub click_model: ClickModelSpec,
    pub methods: Vec<EvaluationMethod>,
    pub impressions: u64,
    pub repeats: u32,
    pub cutoff: usize,
    pub seed: u64,
    pub rq2_query_samples: usize,
    /// Ascending bin edges over the per-query nDCG difference magnitude.
    pub rq2_bins: Vec<f64>,
    pub checkpoints: Checkpoints,
}

impl ExperimentConfig {
    pub fn new(click_model: ClickModelSpec) -> Self {
        ExperimentConfig {
            click_model,
            methods: [EvaluationMethod::AbTesting, EvaluationMethod::Interleaving].to_vec(),
            impressions: 1000,
            repeats: 10,
            cutoff: 5,
            seed: 0,
            rq2_query_samples: 1000,
            rq2_bins: [0.0, 0.05, 0.2, 0.35, 0.5, 1.0].to_vec(),
            checkpoints: Checkpoints::LogSpaced(20),
        }
    }

    fn validate(&self, dataset: &[QueryRecord]) -> Result<(), HarnessError> {
        let err = |msg: &str| Err(HarnessError::Config(msg.into()));
        if self.impressions == 0 {
            return err("impressions must be >= 1");
        }
        if self.repeats == 0 {
            return err("repeats must be >= 1");
        }
        if self.cutoff == 0 {
            return err("cutoff must be >= 1");
        }
        if self.methods.is_empty() {
            return err("at least one method must be enabled");
        }
        if self.rq2_query_samples == 0 {
            return err("rq2 query sample count must be >= 1");
        }
        if self.rq2_bins.len() < 2 || self.rq2_bins.windows(2).any(|w| w[0] >= w[1]) {
            return err("rq2 bins need at least two strictly ascending edges");
        }
        if self.rq2_bins[0] < 0.0 {
            return err("rq2 bin edges must be non-negative");
        }
        let max_grade =
            dataset.iter().flat_map(|q| q.docs.iter()).map(|d| d.grade.value()).max();
        if let Some(max_grade) = max_grade {
            if max_grade > self.click_model.max_grade() {
                return Err(HarnessError::Config(format!(
                    "click model `{}` covers grades up to {} but the dataset has grade {}",
                    self.click_model.name(),
                    self.click_model.max_grade(),
                    max_grade
                )));
            }
        }
        Ok(())
    }
}

/// Per-pair counts of queries the simulation cannot display.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct QuerySkipTally {
    pub too_few_docs: u64,
    pub missing_feature: u64,
    pub overlapping_rankings: u64,
    /// Eligible queries whose ideal gain is zero (kept, but worth seeing).
    pub zero_idcg: u64,
}

impl QuerySkipTally {
    fn add(&mut self, other: &QuerySkipTally) {
        self.too_few_docs += other.too_few_docs;
        self.missing_feature += other.missing_feature;
        self.overlapping_rankings += other.overlapping_rankings;
        self.zero_idcg += other.zero_idcg;
    }
}

/// Why a ranker pair was dropped from an experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairSkipReason {
    NoEligibleQueries,
    UndecidableTruth,
}

impl fmt::Display for PairSkipReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PairSkipReason::NoEligibleQueries => write!(f, "no eligible queries"),
            PairSkipReason::UndecidableTruth => write!(f, "undecidable ground truth"),
        }
    }
}

struct PreparedQuery {
    ranking_a: Ranking,
    ranking_b: Ranking,
    ndcg_a: f64,
    ndcg_b: f64,
}

struct PreparedPair {
    truth: Preference,
    queries: Vec<PreparedQuery>,
    /// Dataset query index -> position in `queries`, when eligible.
    by_query_index: Vec<Option<usize>>,
    tally: QuerySkipTally,
}

fn rankings_overlap(a: &Ranking, b: &Ranking) -> bool {
    b.items.iter().any(|item| a.items.iter().any(|other| other.doc_id == item.doc_id))
}

/// Builds the displayable per-query rankings of a pair and its ground
/// truth. A query is eligible when both features are present, it has at
/// least `cutoff` documents, and the two top-`cutoff` rankings share no
/// document (team attribution must stay unambiguous).
fn prepare_pair(
    pair: &RankerPair,
    dataset: &[QueryRecord],
) -> Result<PreparedPair, PairSkipReason> {
    let mut queries = Vec::new();
    let mut by_query_index = Vec::with_capacity(dataset.len());
    let mut tally = QuerySkipTally::default();
    let mut sum_a = 0.0;
    let mut sum_b = 0.0;

    for record in dataset {
        if record.docs.len() < pair.cutoff {
            tally.too_few_docs += 1;
            by_query_index.push(None);
            continue;
        }
        let rankings = rank_by_feature(record, pair.feature_a, pair.cutoff)
            .and_then(|a| rank_by_feature(record, pair.feature_b, pair.cutoff).map(|b| (a, b)));
        let (ranking_a, ranking_b) = match rankings {
            Ok(pair_rankings) => pair_rankings,
            Err(_) => {
                tally.missing_feature += 1;
                by_query_index.push(None);
                continue;
            }
        };
        if rankings_overlap(&ranking_a, &ranking_b) {
            tally.overlapping_rankings += 1;
            by_query_index.push(None);
            continue;
        }
        let ideal = record.grades();
        let ndcg_a = ndcg(&ranking_a, &ideal, pair.cutoff).expect("cutoff == ranking length");
        let ndcg_b = ndcg(&ranking_b, &ideal, pair.cutoff).expect("cutoff == ranking length");
        if ndcg_a == 0.0 && ndcg_b == 0.0 {
            tally.zero_idcg += 1;
        }
        sum_a += ndcg_a;
        sum_b += ndcg_b;
        by_query_index.push(Some(queries.len()));
        queries.push(PreparedQuery { ranking_a, ranking_b, ndcg_a, ndcg_b });
    }

    if queries.is_empty() {
        return Err(PairSkipReason::NoEligibleQueries);
    }
    let truth = if sum_a > sum_b {
        Preference::PreferA
    } else if sum_a < sum_b {
        Preference::PreferB
    } else {
        return Err(PairSkipReason::UndecidableTruth);
    };
    Ok(PreparedPair { truth, queries, by_query_index, tally })
}

/// Dataset-level ground truth of a pair: the ranker with the strictly
/// larger mean nDCG over the queries usable for the comparison. `Tie`
/// means undecidable.
pub fn ground_truth(pair: &RankerPair, dataset: &[QueryRecord]) -> Preference {
    match prepare_pair(pair, dataset) {
        Ok(prepared) => prepared.truth,
        Err(_) => Preference::Tie,
    }
}

/// Error cost of an inferred verdict against a decided truth: 0 for a
/// match, 1 for the opposite preference, 0.5 for a tie verdict.
pub fn error_indicator(inferred: Preference, truth: Preference) -> Result<f64, HarnessError> {
    if truth == Preference::Tie {
        return Err(HarnessError::UndecidableTruth);
    }
    Ok(match inferred {
        Preference::Tie => 0.5,
        _ if inferred == truth => 0.0,
        _ => 1.0,
    })
}

fn compute_checkpoints(impressions: u64, spec: &Checkpoints) -> Vec<u64> {
    match spec {
        Checkpoints::EveryImpression => (1..=impressions).collect(),
        Checkpoints::LogSpaced(count) => {
            let count = (*count).max(1);
            let mut points = Vec::with_capacity(count + 1);
            if count == 1 {
                points.push(impressions);
            } else {
                let exponent = libm::log(impressions as f64);
                for k in 0..count {
                    let t = libm::exp(exponent * k as f64 / (count - 1) as f64);
                    points.push((libm::round(t) as u64).clamp(1, impressions));
                }
            }
            points.push(impressions);
            points.sort_unstable();
            points.dedup();
            points
        }
    }
}

/// Error-rate trajectory of one method within one unit.
#[derive(Clone, Debug, PartialEq)]
pub struct MethodSeries {
    pub method: EvaluationMethod,
    /// One indicator per checkpoint.
    pub indicators: Vec<f64>,
}

/// Outcome of one (pair, repeat) unit of the impression-budget experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct Rq1Unit {
    pub pair_index: usize,
    pub repeat: u32,
    pub series: Vec<MethodSeries>,
}

/// One aggregated report row of the impression-budget experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct Rq1Row {
    pub method: EvaluationMethod,
    pub impression: u64,
    pub error_rate: f64,
    pub n_pairs: usize,
}

/// Aggregated impression-budget experiment results.
#[derive(Clone, Debug, PartialEq)]
pub struct Rq1Report {
    pub click_model: String,
    pub seed: u64,
    pub repeats: u32,
    pub impressions: u64,
    pub n_pairs: usize,
    pub checkpoints: Vec<u64>,
    /// Sorted by (method name, impression).
    pub rows: Vec<Rq1Row>,
    pub units: Vec<Rq1Unit>,
    pub skipped_pairs: Vec<(RankerPair, PairSkipReason)>,
    pub query_tally: QuerySkipTally,
}

impl Rq1Report {
    /// Unit-level indicators of one method at the final checkpoint.
    pub fn final_indicators(&self, method: EvaluationMethod) -> Vec<f64> {
        self.units
            .iter()
            .filter_map(|unit| {
                unit.series
                    .iter()
                    .find(|s| s.method == method)
                    .and_then(|s| s.indicators.last().copied())
            })
            .collect()
    }

    /// Mean error rate of one method at the final checkpoint.
    pub fn final_error_rate(&self, method: EvaluationMethod) -> Option<f64> {
        self.rows
            .iter()
            .filter(|r| r.method == method)
            .max_by_key(|r| r.impression)
            .map(|r| r.error_rate)
    }
}

/// Prepared impression-budget experiment, split into independent
/// (pair, repeat) units for optional parallel execution.
pub struct Rq1Runner {
    cfg: ExperimentConfig,
    pairs: Vec<PreparedPair>,
    skipped: Vec<(RankerPair, PairSkipReason)>,
    checkpoints: Vec<u64>,
}

impl Rq1Runner {
    pub fn new(
        cfg: ExperimentConfig,
        dataset: &[QueryRecord],
        pairs: &[RankerPair],
    ) -> Result<Self, HarnessError> {
        cfg.validate(dataset)?;
        let mut prepared = Vec::new();
        let mut skipped = Vec::new();
        for pair in pairs {
            match prepare_pair(pair, dataset) {
                Ok(p) => prepared.push(p),
                Err(reason) => skipped.push((*pair, reason)),
            }
        }
        if prepared.is_empty() {
            return Err(HarnessError::NoValidPairs);
        }
        let checkpoints = compute_checkpoints(cfg.impressions, &cfg.checkpoints);
        Ok(Rq1Runner { cfg, pairs: prepared, skipped, checkpoints })
    }

    pub fn unit_count(&self) -> usize {
        self.pairs.len() * self.cfg.repeats as usize
    }

    pub fn checkpoints(&self) -> &[u64] {
        &self.checkpoints
    }

    /// Runs one (pair, repeat) unit. Pure given the unit index; units may
    /// execute on any thread in any order.
    pub fn run_unit(&self, unit: usize) -> Rq1Unit {
        let repeats = self.cfg.repeats as usize;
        let pair_index = unit / repeats;
        let repeat = (unit % repeats) as u32;
        let prepared = &self.pairs[pair_index];
        let cfg = &self.cfg;
        let tags = |stream: u64| [stream, pair_index as u64, repeat as u64];

        let mut query_rng = derive_rng(cfg.seed, &tags(STREAM_RQ1_QUERY));
        let mut il = MethodState::new(cfg, STREAM_RQ1_TEAM, STREAM_RQ1_CLICK_IL, &tags);
        let mut ab = MethodState::new(cfg, STREAM_RQ1_ARM, STREAM_RQ1_CLICK_AB, &tags);

        let run_il = cfg.methods.contains(&EvaluationMethod::Interleaving);
        let run_ab = cfg.methods.contains(&EvaluationMethod::AbTesting);

        let mut il_series = Vec::with_capacity(self.checkpoints.len());
        let mut ab_series = Vec::with_capacity(self.checkpoints.len());
        let mut next_checkpoint = 0usize;

        for t in 1..=cfg.impressions {
            let query = &prepared.queries[query_rng.gen_range(0..prepared.queries.len())];
            if run_il {
                il.observe_interleaved(query, cfg);
            }
            if run_ab {
                ab.observe_ab(query, cfg);
            }
            if next_checkpoint < self.checkpoints.len() && self.checkpoints[next_checkpoint] == t {
                next_checkpoint += 1;
                if run_il {
                    il_series.push(il.indicator(prepared.truth));
                }
                if run_ab {
                    ab_series.push(ab.indicator(prepared.truth));
                }
            }
        }

        let mut series = Vec::new();
        for &method in &cfg.methods {
            match method {
                EvaluationMethod::Interleaving => series.push(MethodSeries {
                    method,
                    indicators: core::mem::take(&mut il_series),
                }),
                EvaluationMethod::AbTesting => series.push(MethodSeries {
                    method,
                    indicators: core::mem::take(&mut ab_series),
                }),
            }
        }
        Rq1Unit { pair_index, repeat, series }
    }

    /// Deterministic ordered reduction of unit outcomes into the report.
    pub fn assemble(self, mut units: Vec<Rq1Unit>) -> Rq1Report {
        units.sort_by_key(|u| (u.pair_index, u.repeat));
        let mut rows = Vec::new();
        let mut methods = self.cfg.methods.clone();
        methods.sort_by_key(|m| m.as_str());
        for &method in &methods {
            for (ci, &impression) in self.checkpoints.iter().enumerate() {
                let mut sum = 0.0;
                let mut count = 0u64;
                for unit in &units {
                    if let Some(series) = unit.series.iter().find(|s| s.method == method) {
                        sum += series.indicators[ci];
                        count += 1;
                    }
                }
                rows.push(Rq1Row {
                    method,
                    impression,
                    error_rate: if count > 0 { sum / count as f64 } else { 0.0 },
                    n_pairs: self.pairs.len(),
                });
            }
        }
        let mut query_tally = QuerySkipTally::default();
        for pair in &self.pairs {
            query_tally.add(&pair.tally);
        }
        Rq1Report {
            click_model: self.cfg.click_model.name().into(),
            seed: self.cfg.seed,
            repeats: self.cfg.repeats,
            impressions: self.cfg.impressions,
            n_pairs: self.pairs.len(),
            checkpoints: self.checkpoints,
            rows,
            units,
            skipped_pairs: self.skipped,
            query_tally,
        }
    }
}

/// Accumulator plus the random streams of one method within a unit.
struct MethodState {
    acc: EvaluationAccumulator,
    selection_rng: rand_chacha::ChaCha8Rng,
    click_rng: rand_chacha::ChaCha8Rng,
}

impl MethodState {
    fn new(
        cfg: &ExperimentConfig,
        selection_stream: u64,
        click_stream: u64,
        tags: &impl Fn(u64) -> [u64; 3],
    ) -> Self {
        MethodState {
            acc: EvaluationAccumulator::new(),
            selection_rng: derive_rng(cfg.seed, &tags(selection_stream)),
            click_rng: derive_rng(cfg.seed, &tags(click_stream)),
        }
    }

    fn observe_interleaved(&mut self, query: &PreparedQuery, cfg: &ExperimentConfig) {
        let interleaved = interleave_ima(
            &query.ranking_a,
            &query.ranking_b,
            cfg.cutoff,
            &mut self.selection_rng,
        )
        .expect("prepared rankings are disjoint and long enough");
        let clicks = simulate_cascade(interleaved.grades(), &cfg.click_model, &mut self.click_rng);
        let score = score_impression(&interleaved, &clicks).expect("click vector matches display");
        self.acc.accumulate(score);
    }

    fn observe_ab(&mut self, query: &PreparedQuery, cfg: &ExperimentConfig) {
        let arm = assign_ab_arm(&mut self.selection_rng);
        let shown = match arm {
            Team::A => &query.ranking_a,
            Team::B => &query.ranking_b,
        };
        let clicks = simulate_cascade(shown.grades(), &cfg.click_model, &mut self.click_rng);
        self.acc.accumulate(score_ab_impression(arm, &clicks));
    }

    fn indicator(&self, truth: Preference) -> f64 {
        let inferred = self.acc.infer_preference().expect("at least one impression");
        error_indicator(inferred, truth).expect("truth is decided")
    }
}

/// Count, sum, and sum of squares of the indicators that landed in a bin.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BinAgg {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl BinAgg {
    fn push(&mut self, value: f64) {
        self.count += 1;
        self.sum += value;
        self.sum_sq += value * value;
    }

    fn add(&mut self, other: &BinAgg) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }

    /// Standard error of the mean.
    pub fn standard_error(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let variance = ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0);
        libm::sqrt(variance / n)
    }
}

/// Outcome of one (pair, repeat) unit of the relevance-gap experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct Rq2Unit {
    pub pair_index: usize,
    pub repeat: u32,
    /// Per method (in config order), per bin.
    pub bins: Vec<(EvaluationMethod, Vec<BinAgg>)>,
    pub zero_diff_skips: u64,
    pub ineligible_skips: u64,
}

/// One aggregated report row of the relevance-gap experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct Rq2Row {
    pub method: EvaluationMethod,
    pub ndcg_diff_lo: f64,
    pub ndcg_diff_hi: f64,
    pub error_rate: f64,
    pub n_samples: u64,
}

/// Aggregated relevance-gap experiment results.
#[derive(Clone, Debug, PartialEq)]
pub struct Rq2Report {
    pub click_model: String,
    pub seed: u64,
    pub repeats: u32,
    pub impressions: u64,
    pub n_pairs: usize,
    /// (lo, hi) per bin.
    pub bin_edges: Vec<(f64, f64)>,
    /// Sorted by (method name, bin).
    pub rows: Vec<Rq2Row>,
    /// Per method, aggregated over all units.
    pub method_bins: Vec<(EvaluationMethod, Vec<BinAgg>)>,
    pub zero_diff_skips: u64,
    pub ineligible_skips: u64,
    pub skipped_pairs: Vec<(RankerPair, PairSkipReason)>,
}

impl Rq2Report {
    pub fn bins_for(&self, method: EvaluationMethod) -> Option<&[BinAgg]> {
        self.method_bins.iter().find(|(m, _)| *m == method).map(|(_, b)| b.as_slice())
    }
}

/// Prepared relevance-gap experiment, split into (pair, repeat) units.
pub struct Rq2Runner {
    cfg: ExperimentConfig,
    pairs: Vec<PreparedPair>,
    skipped: Vec<(RankerPair, PairSkipReason)>,
    n_queries: usize,
}

impl Rq2Runner {
    pub fn new(
        cfg: ExperimentConfig,
        dataset: &[QueryRecord],
        pairs: &[RankerPair],
    ) -> Result<Self, HarnessError> {
        cfg.validate(dataset)?;
        let mut prepared = Vec::new();
        let mut skipped = Vec::new();
        for pair in pairs {
            match prepare_pair(pair, dataset) {
                Ok(p) => prepared.push(p),
                Err(reason) => skipped.push((*pair, reason)),
            }
        }
        if prepared.is_empty() {
            return Err(HarnessError::NoValidPairs);
        }
        Ok(Rq2Runner { cfg, pairs: prepared, skipped, n_queries: dataset.len() })
    }

    pub fn unit_count(&self) -> usize {
        self.pairs.len() * self.cfg.repeats as usize
    }

    fn bin_count(&self) -> usize {
        self.cfg.rq2_bins.len() - 1
    }

    fn bin_index(&self, diff: f64) -> usize {
        let edges = &self.cfg.rq2_bins;
        let mut idx = 0;
        for (i, &edge) in edges[..edges.len() - 1].iter().enumerate() {
            if diff >= edge {
                idx = i;
            }
        }
        idx
    }

    /// Runs one (pair, repeat) unit: replays the repeat's query samples
    /// against this pair, spending the full impression budget on each
    /// eligible sample.
    pub fn run_unit(&self, unit: usize) -> Rq2Unit {
        let repeats = self.cfg.repeats as usize;
        let pair_index = unit / repeats;
        let repeat = (unit % repeats) as u32;
        let prepared = &self.pairs[pair_index];
        let cfg = &self.cfg;

        // shared across pairs: every pair replays the same per-repeat samples
        let mut sample_rng = derive_rng(cfg.seed, &[STREAM_RQ2_SAMPLES, repeat as u64]);
        let samples: Vec<usize> =
            (0..cfg.rq2_query_samples).map(|_| sample_rng.gen_range(0..self.n_queries)).collect();

        let tags = |stream: u64| [stream, pair_index as u64, repeat as u64];
        let mut il = MethodState::new(cfg, STREAM_RQ2_TEAM, STREAM_RQ2_CLICK_IL, &tags);
        let mut ab = MethodState::new(cfg, STREAM_RQ2_ARM, STREAM_RQ2_CLICK_AB, &tags);
        let run_il = cfg.methods.contains(&EvaluationMethod::Interleaving);
        let run_ab = cfg.methods.contains(&EvaluationMethod::AbTesting);

        let mut il_bins = alloc::vec![BinAgg::default(); self.bin_count()];
        let mut ab_bins = alloc::vec![BinAgg::default(); self.bin_count()];
        let mut zero_diff_skips = 0u64;
        let mut ineligible_skips = 0u64;

        for &query_index in &samples {
            let Some(slot) = prepared.by_query_index[query_index] else {
                ineligible_skips += 1;
                continue;
            };
            let query = &prepared.queries[slot];
            let diff = query.ndcg_a - query.ndcg_b;
            if diff == 0.0 {
                zero_diff_skips += 1;
                continue;
            }
            let truth = if diff > 0.0 { Preference::PreferA } else { Preference::PreferB };
            let bin = self.bin_index(libm::fabs(diff));

            if run_il {
                il.acc = EvaluationAccumulator::new();
                for _ in 0..cfg.impressions {
                    il.observe_interleaved(query, cfg);
                }
                il_bins[bin].push(il.indicator(truth));
            }
            if run_ab {
                ab.acc = EvaluationAccumulator::new();
                for _ in 0..cfg.impressions {
                    ab.observe_ab(query, cfg);
                }
                ab_bins[bin].push(ab.indicator(truth));
            }
        }

        let mut bins = Vec::new();
        for &method in &cfg.methods {
            match method {
                EvaluationMethod::Interleaving => {
                    bins.push((method, core::mem::take(&mut il_bins)))
                }
                EvaluationMethod::AbTesting => bins.push((method, core::mem::take(&mut ab_bins))),
            }
        }
        Rq2Unit { pair_index, repeat, bins, zero_diff_skips, ineligible_skips }
    }

    /// Deterministic ordered reduction of unit outcomes into the report.
    pub fn assemble(self, mut units: Vec<Rq2Unit>) -> Rq2Report {
        units.sort_by_key(|u| (u.pair_index, u.repeat));
        let bin_count = self.bin_count();
        let mut methods = self.cfg.methods.clone();
        methods.sort_by_key(|m| m.as_str());

        let mut method_bins: Vec<(EvaluationMethod, Vec<BinAgg>)> = methods
            .iter()
            .map(|&m| (m, alloc::vec![BinAgg::default(); bin_count]))
            .collect();
        let mut zero_diff_skips = 0;
        let mut ineligible_skips = 0;
        for unit in &units {
            zero_diff_skips += unit.zero_diff_skips;
            ineligible_skips += unit.ineligible_skips;
            for (method, bins) in &unit.bins {
                let slot = method_bins
                    .iter_mut()
                    .find(|(m, _)| m == method)
                    .expect("method listed in config");
                for (agg, unit_agg) in slot.1.iter_mut().zip(bins) {
                    agg.add(unit_agg);
                }
            }
        }

        let bin_edges: Vec<(f64, f64)> =
            self.cfg.rq2_bins.windows(2).map(|w| (w[0], w[1])).collect();
        let mut rows = Vec::new();
        for (method, bins) in &method_bins {
            for (bin, agg) in bins.iter().enumerate() {
                rows.push(Rq2Row {
                    method: *method,
                    ndcg_diff_lo: bin_edges[bin].0,
                    ndcg_diff_hi: bin_edges[bin].1,
                    error_rate: agg.mean(),
                    n_samples: agg.count,
                });
            }
        }
        Rq2Report {
            click_model: self.cfg.click_model.name().into(),
            seed: self.cfg.seed,
            repeats: self.cfg.repeats,
            impressions: self.cfg.impressions,
            n_pairs: self.pairs.len(),
            bin_edges,
            rows,
            method_bins,
            zero_diff_skips,
            ineligible_skips,
            skipped_pairs: self.skipped,
        }
    }
}

/// Runs the impression-budget experiment sequentially.
pub fn run_rq1(
    cfg: ExperimentConfig,
    dataset: &[QueryRecord],
    pairs: &[RankerPair],
) -> Result<Rq1Report, HarnessError> {
    let runner = Rq1Runner::new(cfg, dataset, pairs)?;
    let units: Vec<Rq1Unit> = (0..runner.unit_count()).map(|u| runner.run_unit(u)).collect();
    Ok(runner.assemble(units))
}

/// Runs the relevance-gap experiment sequentially.
pub fn run_rq2(
    cfg: ExperimentConfig,
    dataset: &[QueryRecord],
    pairs: &[RankerPair],
) -> Result<Rq2Report, HarnessError> {
    let runner = Rq2Runner::new(cfg, dataset, pairs)?;
    let units: Vec<Rq2Unit> = (0..runner.unit_count()).map(|u| runner.run_unit(u)).collect();
    Ok(runner.assemble(units))
}

/// Sampling oracle for the closed-form error probability: draws the two
/// per-impression click sums as binomials at the model's expected scores
/// and counts how often the mean difference comes out at or below zero.
pub fn monte_carlo_error(
    scenario: &AnalyticScenario,
    method: EvaluationMethod,
    trials: u64,
    rng: &mut (impl Rng + ?Sized),
) -> Result<f64, HarnessError> {
    if trials == 0 {
        return Err(HarnessError::Config("trials must be >= 1".into()));
    }
    AnalyticScenario::new(scenario.er_a, scenario.er_b, scenario.alpha, scenario.n)?;
    let stats = method_stats(scenario, method);
    let binom_a = Binomial::new(scenario.n, stats.p_a)
        .map_err(|_| AnalyticError::ProbabilityOutOfRange(stats.p_a))?;
    let binom_b = Binomial::new(scenario.n, stats.p_b)
        .map_err(|_| AnalyticError::ProbabilityOutOfRange(stats.p_b))?;
    let mut at_or_below = 0u64;
    for _ in 0..trials {
        let clicks_a = binom_a.sample(rng);
        let clicks_b = binom_b.sample(rng);
        if clicks_a <= clicks_b {
            at_or_below += 1;
        }
    }
    Ok(at_or_below as f64 / trials as f64)
}
