//! Learning-to-rank datasets: parsing, feature-sorted rankings, ranker
//! pairs, and nDCG.
//!
//! The input format is the usual line-oriented one:
//!
//! ```text
//! <grade> qid:<query> <feature>:<value> ... [# docid=<id> ...]
//! ```
//!
//! A bundled synthetic generator produces datasets with the same structure,
//! built so that rankers sorted by different features draw their top items
//! from disjoint document groups of distinct quality.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::ranking::{RankedItem, Ranking, RelevanceGrade};
use crate::streams::derive_rng;

/// One document of a query: identifier, graded relevance, feature values.
#[derive(Clone, Debug, PartialEq)]
pub struct Document {
    pub doc_id: String,
    pub grade: RelevanceGrade,
    pub features: BTreeMap<u32, f64>,
}

/// All documents of one query.
#[derive(Clone, Debug, PartialEq)]
pub struct QueryRecord {
    pub query_id: String,
    pub docs: Vec<Document>,
}

impl QueryRecord {
    /// The query's grade multiset, used as the ideal pool for nDCG.
    pub fn grades(&self) -> Vec<RelevanceGrade> {
        self.docs.iter().map(|d| d.grade).collect()
    }

    /// Feature indices carried by this query's documents.
    pub fn feature_indices(&self) -> Vec<u32> {
        self.docs.first().map(|d| d.features.keys().copied().collect()).unwrap_or_default()
    }
}

/// An unordered pair of ranking features compared at a display cutoff.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RankerPair {
    pub feature_a: u32,
    pub feature_b: u32,
    pub cutoff: usize,
}

impl fmt::Display for RankerPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}-vs-f{}@{}", self.feature_a, self.feature_b, self.cutoff)
    }
}

/// Dataset-layer failures, each carrying enough context to locate the
/// offending line or query.
#[derive(Clone, Debug, PartialEq)]
pub enum DatasetError {
    MalformedLine { line: usize, reason: String },
    GradeOutOfRange { line: usize, grade: u32, max_grade: u8 },
    InconsistentFeatures { query_id: String },
    DuplicateDoc { query_id: String, doc_id: String },
    UnknownFeature(u32),
    TooFewDocs { have: usize, need: usize },
    TooFewFeatures,
    InvalidCutoff,
    CutoffTooLarge { cutoff: usize, len: usize },
}

impl fmt::Display for DatasetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetError::MalformedLine { line, reason } => {
                write!(f, "malformed line {line}: {reason}")
            }
            DatasetError::GradeOutOfRange { line, grade, max_grade } => {
                write!(f, "line {line}: grade {grade} exceeds max grade {max_grade}")
            }
            DatasetError::InconsistentFeatures { query_id } => {
                write!(f, "query {query_id}: documents carry different feature sets")
            }
            DatasetError::DuplicateDoc { query_id, doc_id } => {
                write!(f, "query {query_id}: duplicate document `{doc_id}`")
            }
            DatasetError::UnknownFeature(idx) => write!(f, "feature {idx} not in dataset"),
            DatasetError::TooFewDocs { have, need } => {
                write!(f, "query has {have} documents, need {need}")
            }
            DatasetError::TooFewFeatures => write!(f, "need at least two features to pair"),
            DatasetError::InvalidCutoff => write!(f, "cutoff must be >= 1"),
            DatasetError::CutoffTooLarge { cutoff, len } => {
                write!(f, "cutoff {cutoff} exceeds ranking length {len}")
            }
        }
    }
}

impl core::error::Error for DatasetError {}

fn parse_doc_id_from_comment(comment: &str) -> Option<String> {
    let mut tokens = comment.split_whitespace().peekable();
    while let Some(token) = tokens.next() {
        if let Some(rest) = token.strip_prefix("docid") {
            if let Some(value) = rest.strip_prefix('=') {
                if !value.is_empty() {
                    return Some(value.to_string());
                }
                // "docid=" followed by a spaced value
                if let Some(&next) = tokens.peek() {
                    return Some(next.to_string());
                }
            } else if rest.is_empty() {
                // "docid = VALUE" or "docid ="
                match (tokens.next(), tokens.peek()) {
                    (Some("="), Some(&value)) => return Some(value.to_string()),
                    (Some(eq), _) if eq.starts_with('=') && eq.len() > 1 => {
                        return Some(eq[1..].to_string());
                    }
                    _ => {}
                }
            }
        }
    }
    None
}

/// Parses line-oriented ranking data into per-query records.
///
/// Documents are grouped by query preserving first-appearance order; the
/// document id comes from a `docid=...` comment when present and is
/// synthesized as `<query>:<line>` otherwise. Every document of a query
/// must carry the same feature indices.
pub fn parse_letor(input: &str, max_grade: u8) -> Result<Vec<QueryRecord>, DatasetError> {
    let mut order: Vec<String> = Vec::new();
    let mut queries: BTreeMap<String, QueryRecord> = BTreeMap::new();

    for (idx, raw_line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let malformed = |reason: &str| DatasetError::MalformedLine {
            line: line_no,
            reason: reason.to_string(),
        };

        let (data, comment) = match raw_line.split_once('#') {
            Some((data, comment)) => (data, Some(comment)),
            None => (raw_line, None),
        };
        if data.trim().is_empty() {
            continue;
        }

        let mut tokens = data.split_whitespace();
        let grade: u32 = tokens
            .next()
            .ok_or_else(|| malformed("missing grade"))?
            .parse()
            .map_err(|_| malformed("grade is not a non-negative integer"))?;
        if grade > max_grade as u32 {
            return Err(DatasetError::GradeOutOfRange { line: line_no, grade, max_grade });
        }

        let qid_token = tokens.next().ok_or_else(|| malformed("missing qid field"))?;
        let query_id = qid_token
            .strip_prefix("qid:")
            .filter(|q| !q.is_empty())
            .ok_or_else(|| malformed("second field must be qid:<id>"))?
            .to_string();

        let mut features = BTreeMap::new();
        for token in tokens {
            let (feature, value) =
                token.split_once(':').ok_or_else(|| malformed("feature must be <index>:<value>"))?;
            let feature: u32 =
                feature.parse().map_err(|_| malformed("feature index is not an integer"))?;
            let value: f64 =
                value.parse().map_err(|_| malformed("feature value is not a number"))?;
            if !value.is_finite() {
                return Err(malformed("feature value is not finite"));
            }
            if features.insert(feature, value).is_some() {
                return Err(malformed("repeated feature index"));
            }
        }

        let doc_id = comment
            .and_then(parse_doc_id_from_comment)
            .unwrap_or_else(|| format!("{query_id}:{line_no}"));

        let record = queries.entry(query_id.clone()).or_insert_with(|| {
            order.push(query_id.clone());
            QueryRecord { query_id: query_id.clone(), docs: Vec::new() }
        });
        if let Some(first) = record.docs.first() {
            if !feature_keys_equal(&first.features, &features) {
                return Err(DatasetError::InconsistentFeatures { query_id });
            }
        }
        if record.docs.iter().any(|d| d.doc_id == doc_id) {
            return Err(DatasetError::DuplicateDoc { query_id, doc_id });
        }
        record.docs.push(Document {
            doc_id,
            grade: RelevanceGrade(grade as u8),
            features,
        });
    }

    Ok(order.into_iter().map(|q| queries.remove(&q).expect("query recorded")).collect())
}

fn feature_keys_equal(a: &BTreeMap<u32, f64>, b: &BTreeMap<u32, f64>) -> bool {
    a.len() == b.len() && a.keys().zip(b.keys()).all(|(x, y)| x == y)
}

/// Ranks a query's documents by one feature, descending, ties broken by
/// ascending doc id, and keeps the top `cutoff`.
pub fn rank_by_feature(
    query: &QueryRecord,
    feature: u32,
    cutoff: usize,
) -> Result<Ranking, DatasetError> {
    if cutoff == 0 {
        return Err(DatasetError::InvalidCutoff);
    }
    if query.docs.len() < cutoff {
        return Err(DatasetError::TooFewDocs { have: query.docs.len(), need: cutoff });
    }
    let mut scored: Vec<(&Document, f64)> = Vec::with_capacity(query.docs.len());
    for doc in &query.docs {
        let value = *doc.features.get(&feature).ok_or(DatasetError::UnknownFeature(feature))?;
        scored.push((doc, value));
    }
    scored.sort_by(|(da, va), (db, vb)| {
        vb.partial_cmp(va)
            .expect("finite feature values")
            .then_with(|| da.doc_id.cmp(&db.doc_id))
    });
    let items = scored
        .into_iter()
        .take(cutoff)
        .map(|(doc, _)| RankedItem { doc_id: doc.doc_id.clone(), grade: doc.grade })
        .collect();
    Ok(Ranking::new(query.query_id.clone(), items))
}

/// All unordered feature pairs, each once, with `feature_a < feature_b`.
pub fn enumerate_pairs(features: &[u32], cutoff: usize) -> Result<Vec<RankerPair>, DatasetError> {
    if cutoff == 0 {
        return Err(DatasetError::InvalidCutoff);
    }
    let distinct: BTreeSet<u32> = features.iter().copied().collect();
    if distinct.len() < 2 {
        return Err(DatasetError::TooFewFeatures);
    }
    let sorted: Vec<u32> = distinct.into_iter().collect();
    let mut pairs = Vec::with_capacity(sorted.len() * (sorted.len() - 1) / 2);
    for (i, &feature_a) in sorted.iter().enumerate() {
        for &feature_b in &sorted[i + 1..] {
            pairs.push(RankerPair { feature_a, feature_b, cutoff });
        }
    }
    Ok(pairs)
}

fn gain(grade: RelevanceGrade) -> f64 {
    libm::pow(2.0, grade.value() as f64) - 1.0
}

fn dcg<I: Iterator<Item = RelevanceGrade>>(grades: I) -> f64 {
    grades
        .enumerate()
        .map(|(i, g)| gain(g) / libm::log2(i as f64 + 2.0))
        .sum()
}

/// nDCG at `cutoff`: discounted gain of the ranking's prefix normalized by
/// the best arrangement of `ideal_grades`. Returns 0 when the ideal gain
/// is 0 (no relevant document available).
pub fn ndcg(
    ranking: &Ranking,
    ideal_grades: &[RelevanceGrade],
    cutoff: usize,
) -> Result<f64, DatasetError> {
    if cutoff > ranking.len() {
        return Err(DatasetError::CutoffTooLarge { cutoff, len: ranking.len() });
    }
    let mut ideal: Vec<RelevanceGrade> = ideal_grades.to_vec();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg = dcg(ideal.into_iter().take(cutoff));
    if idcg == 0.0 {
        return Ok(0.0);
    }
    Ok(dcg(ranking.grades().take(cutoff)) / idcg)
}

/// Shape and quality knobs of the bundled synthetic dataset.
///
/// Documents of each query are partitioned into one group per feature.
/// Feature `k` scores its own group's documents in `[1, 2]` and everything
/// else in `[0, off_group_ceiling]`, so the top of each feature ranking
/// stays inside its own group and any two feature rankings are disjoint.
/// Grade distributions interpolate linearly from `best_grades` (group 0)
/// to `worst_grades` (last group), giving the features a quality ladder.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticConfig {
    pub queries: usize,
    pub features: usize,
    pub group_size: usize,
    /// `[P(grade 0), P(grade 1), P(grade 2)]` of the best group.
    pub best_grades: [f64; 3],
    /// Same for the worst group.
    pub worst_grades: [f64; 3],
    /// Upper bound of off-group feature values; must stay below 1 so the
    /// top of every feature ranking stays inside its own group.
    pub off_group_ceiling: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            queries: 60,
            features: 6,
            group_size: 8,
            best_grades: [0.20, 0.50, 0.30],
            worst_grades: [0.50, 0.20, 0.30],
            off_group_ceiling: 0.5,
            seed: 7,
        }
    }
}

const SYNTH_STREAM: u64 = 0x53_59_4e;

fn grade_weights(config: &SyntheticConfig, group: usize) -> [f64; 3] {
    let groups = config.features;
    let t = if groups > 1 { group as f64 / (groups - 1) as f64 } else { 0.0 };
    let mut weights = [0.0; 3];
    for (w, (best, worst)) in weights
        .iter_mut()
        .zip(config.best_grades.iter().zip(config.worst_grades.iter()))
    {
        *w = best + (worst - best) * t;
    }
    weights
}

fn draw_grade(weights: &[f64; 3], rng: &mut (impl Rng + ?Sized)) -> RelevanceGrade {
    let x: f64 = rng.gen();
    if x < weights[0] {
        RelevanceGrade(0)
    } else if x < weights[0] + weights[1] {
        RelevanceGrade(1)
    } else {
        RelevanceGrade(2)
    }
}

/// Generates the synthetic dataset described on [`SyntheticConfig`].
pub fn generate_synthetic(config: &SyntheticConfig) -> Vec<QueryRecord> {
    let mut records = Vec::with_capacity(config.queries);
    for query_idx in 0..config.queries {
        let mut rng = derive_rng(config.seed, &[SYNTH_STREAM, query_idx as u64]);
        let mut docs = Vec::with_capacity(config.features * config.group_size);
        for group in 0..config.features {
            let weights = grade_weights(config, group);
            for member in 0..config.group_size {
                let grade = draw_grade(&weights, &mut rng);
                let mut features = BTreeMap::new();
                for feature in 0..config.features {
                    let value: f64 = if feature == group {
                        1.0 + rng.gen::<f64>()
                    } else {
                        config.off_group_ceiling * rng.gen::<f64>()
                    };
                    features.insert(feature as u32 + 1, value);
                }
                docs.push(Document {
                    doc_id: format!("q{query_idx:04}g{group}d{member:02}"),
                    grade,
                    features,
                });
            }
        }
        records.push(QueryRecord { query_id: format!("q{query_idx:04}"), docs });
    }
    records
}

/// Serializes records back to the line format, fit for writing a sample
/// dataset to disk.
pub fn to_letor_lines(records: &[QueryRecord]) -> String {
    let mut out = String::new();
    for record in records {
        for doc in &record.docs {
            out.push_str(&format!("{} qid:{}", doc.grade.value(), record.query_id));
            for (feature, value) in &doc.features {
                out.push_str(&format!(" {feature}:{value}"));
            }
            out.push_str(&format!(" # docid={}\n", doc.doc_id));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ranking::DEFAULT_MAX_GRADE;
    use alloc::vec;

    #[test]
    fn parses_the_standard_line_format() {
        let input = "2 qid:10 1:0.031 2:0.5 #docid=D103\n";
        let records = parse_letor(input, DEFAULT_MAX_GRADE).unwrap();
        assert_eq!(records.len(), 1);
        let q = &records[0];
        assert_eq!(q.query_id, "10");
        assert_eq!(q.docs.len(), 1);
        let doc = &q.docs[0];
        assert_eq!(doc.doc_id, "D103");
        assert_eq!(doc.grade, RelevanceGrade(2));
        assert_eq!(doc.features.get(&1), Some(&0.031));
        assert_eq!(doc.features.get(&2), Some(&0.5));
    }

    #[test]
    fn parses_spaced_docid_comments() {
        let input = "1 qid:7 1:1.0 # docid = GX008-86-4444840 inc = 1 prob = 0.08\n";
        let records = parse_letor(input, DEFAULT_MAX_GRADE).unwrap();
        assert_eq!(records[0].docs[0].doc_id, "GX008-86-4444840");
    }

    #[test]
    fn synthesizes_doc_ids_from_query_and_line() {
        let input = "0 qid:3 1:0.5\n1 qid:3 1:0.7\n";
        let records = parse_letor(input, DEFAULT_MAX_GRADE).unwrap();
        assert_eq!(records[0].docs[0].doc_id, "3:1");
        assert_eq!(records[0].docs[1].doc_id, "3:2");
    }

    #[test]
    fn rejects_grades_above_max() {
        let input = "7 qid:10 1:0.0\n";
        assert_eq!(
            parse_letor(input, DEFAULT_MAX_GRADE),
            Err(DatasetError::GradeOutOfRange { line: 1, grade: 7, max_grade: 2 })
        );
    }

    #[test]
    fn empty_input_parses_to_empty_list() {
        assert_eq!(parse_letor("", DEFAULT_MAX_GRADE), Ok(vec![]));
        assert_eq!(parse_letor("\n  \n", DEFAULT_MAX_GRADE), Ok(vec![]));
    }

    #[test]
    fn classifies_malformed_lines_with_their_number() {
        for (input, expect_line) in [
            ("x qid:1 1:0.5\n", 1),
            ("1 qid:1 1:0.5\n1 nope 1:0.5\n", 2),
            ("1 qid:1 1:abc\n", 1),
            ("1 qid:1 1:inf\n", 1),
        ] {
            match parse_letor(input, DEFAULT_MAX_GRADE) {
                Err(DatasetError::MalformedLine { line, .. }) => assert_eq!(line, expect_line),
                other => panic!("expected malformed-line error, got {other:?}"),
            }
        }
    }

    #[test]
    fn rejects_inconsistent_feature_sets_within_a_query() {
        let input = "1 qid:1 1:0.5 2:0.5\n1 qid:1 1:0.5\n";
        assert_eq!(
            parse_letor(input, DEFAULT_MAX_GRADE),
            Err(DatasetError::InconsistentFeatures { query_id: "1".into() })
        );
    }

    #[test]
    fn rejects_duplicate_doc_ids_within_a_query() {
        let input = "1 qid:1 1:0.5 #docid=D1\n2 qid:1 1:0.6 #docid=D1\n";
        assert_eq!(
            parse_letor(input, DEFAULT_MAX_GRADE),
            Err(DatasetError::DuplicateDoc { query_id: "1".into(), doc_id: "D1".into() })
        );
    }

    #[test]
    fn queries_preserve_first_appearance_order() {
        let input = "1 qid:20 1:0.5\n1 qid:5 1:0.5\n0 qid:20 1:0.1\n";
        let records = parse_letor(input, DEFAULT_MAX_GRADE).unwrap();
        let ids: Vec<&str> = records.iter().map(|r| r.query_id.as_str()).collect();
        assert_eq!(ids, vec!["20", "5"]);
        assert_eq!(records[0].docs.len(), 2);
    }

    fn query_with(values: &[(&str, u8, f64)]) -> QueryRecord {
        QueryRecord {
            query_id: "q".into(),
            docs: values
                .iter()
                .map(|(id, grade, value)| Document {
                    doc_id: (*id).into(),
                    grade: RelevanceGrade(*grade),
                    features: BTreeMap::from([(1u32, *value)]),
                })
                .collect(),
        }
    }

    #[test]
    fn ranks_by_feature_descending() {
        let q = query_with(&[("d2", 0, 0.1), ("d1", 2, 0.9)]);
        let ranking = rank_by_feature(&q, 1, 2).unwrap();
        let ids: Vec<&str> = ranking.items.iter().map(|i| i.doc_id.as_str()).collect();
        assert_eq!(ids, vec!["d1", "d2"]);
    }

    #[test]
    fn feature_ties_break_by_doc_id_ascending() {
        let q = query_with(&[("b", 0, 0.5), ("a", 1, 0.5), ("c", 2, 0.5)]);
        let ranking = rank_by_feature(&q, 1, 3).unwrap();
        let ids: Vec<&str> = ranking.items.iter().map(|i| i.doc_id.as_str()).collect();
        assert_eq!(ids, vec!["a", "b", "c"]);
    }

    #[test]
    fn rank_by_feature_checks_cutoff_and_feature() {
        let q = query_with(&[("a", 0, 0.5), ("b", 0, 0.4), ("c", 0, 0.3)]);
        assert_eq!(
            rank_by_feature(&q, 1, 5),
            Err(DatasetError::TooFewDocs { have: 3, need: 5 })
        );
        assert_eq!(rank_by_feature(&q, 9, 2), Err(DatasetError::UnknownFeature(9)));
    }

    #[test]
    fn pair_enumeration_counts_and_orders() {
        let pairs = enumerate_pairs(&[4, 1, 2, 3], 5).unwrap();
        assert_eq!(pairs.len(), 6);
        assert!(pairs.iter().all(|p| p.feature_a < p.feature_b));
        assert_eq!(pairs[0], RankerPair { feature_a: 1, feature_b: 2, cutoff: 5 });

        assert_eq!(enumerate_pairs(&[1, 2, 3, 4, 5], 5).unwrap().len(), 10);
        assert_eq!(enumerate_pairs(&[1], 5), Err(DatasetError::TooFewFeatures));
    }

    fn ranking_with_grades(grades: &[u8]) -> Ranking {
        Ranking::new(
            "q",
            grades
                .iter()
                .enumerate()
                .map(|(i, &g)| RankedItem { doc_id: format!("d{i}"), grade: RelevanceGrade(g) })
                .collect(),
        )
    }

    fn grades_of(values: &[u8]) -> Vec<RelevanceGrade> {
        values.iter().map(|&g| RelevanceGrade(g)).collect()
    }

    #[test]
    fn ideal_ordering_scores_exactly_one() {
        let r = ranking_with_grades(&[2, 1, 0, 0, 0]);
        let value = ndcg(&r, &grades_of(&[2, 1, 0, 0, 0]), 5).unwrap();
        assert_eq!(value, 1.0);
    }

    #[test]
    fn graded_ndcg_matches_hand_computation() {
        // DCG = 0 + 1/log2(3) + 3/2; IDCG = 3 + 1/log2(3)
        let r = ranking_with_grades(&[0, 1, 2]);
        let value = ndcg(&r, &grades_of(&[2, 1, 0]), 3).unwrap();
        let expected = (1.0 / 3f64.log2() + 1.5) / (3.0 + 1.0 / 3f64.log2());
        assert!((value - expected).abs() < 1e-12, "ndcg {value}");
        assert!((value - 0.5869).abs() < 1e-4, "ndcg {value} vs tabulated 0.5869");
    }

    #[test]
    fn all_irrelevant_scores_zero() {
        let r = ranking_with_grades(&[0, 0, 0]);
        assert_eq!(ndcg(&r, &grades_of(&[0, 0, 0]), 3).unwrap(), 0.0);
    }

    #[test]
    fn cutoff_beyond_ranking_is_an_error() {
        let r = ranking_with_grades(&[1, 1]);
        assert_eq!(
            ndcg(&r, &grades_of(&[1, 1]), 3),
            Err(DatasetError::CutoffTooLarge { cutoff: 3, len: 2 })
        );
    }

    #[test]
    fn synthetic_feature_rankings_are_disjoint_across_features() {
        let config = SyntheticConfig::default();
        let records = generate_synthetic(&config);
        assert_eq!(records.len(), config.queries);
        for record in records.iter().take(10) {
            for fa in 1..=config.features as u32 {
                for fb in fa + 1..=config.features as u32 {
                    let ra = rank_by_feature(record, fa, 5).unwrap();
                    let rb = rank_by_feature(record, fb, 5).unwrap();
                    let ids_a: BTreeSet<&str> =
                        ra.items.iter().map(|i| i.doc_id.as_str()).collect();
                    assert!(
                        rb.items.iter().all(|i| !ids_a.contains(i.doc_id.as_str())),
                        "features {fa} and {fb} overlap in query {}",
                        record.query_id
                    );
                }
            }
        }
    }

    #[test]
    fn synthetic_generation_is_deterministic() {
        let config = SyntheticConfig::default();
        assert_eq!(generate_synthetic(&config), generate_synthetic(&config));
    }

    #[test]
    fn synthetic_round_trips_through_the_line_format() {
        let config = SyntheticConfig { queries: 3, ..SyntheticConfig::default() };
        let records = generate_synthetic(&config);
        let text = to_letor_lines(&records);
        let reparsed = parse_letor(&text, DEFAULT_MAX_GRADE).unwrap();
        assert_eq!(records, reparsed);
    }
}
