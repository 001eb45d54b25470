//! Interleaved-comparison generation and scoring, plus the A/B counterpart.
//!
//! The interleaving scheme is positional: an independent fair coin at every
//! display position selects which input ranking contributes its item at that
//! position. Clicks are credited to the team that supplied the clicked item
//! and normalized by the display length, so each impression yields a pair of
//! per-item click scores. A/B impressions show one whole ranking and credit
//! every click to the shown arm, scored with the same normalization.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::ranking::{ClickVector, Preference, Ranking, RelevanceGrade};

/// Which input ranking supplied an item (or which arm an impression shows).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Team {
    A,
    B,
}

impl fmt::Display for Team {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Team::A => write!(f, "A"),
            Team::B => write!(f, "B"),
        }
    }
}

// top bit of one u32 draw: heads (0) selects A, tails selects B
#[inline]
fn coin(rng: &mut (impl Rng + ?Sized)) -> Team {
    if rng.next_u32() >> 31 == 0 {
        Team::A
    } else {
        Team::B
    }
}

/// One display position of an interleaved ranking.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InterleavedEntry<'r> {
    pub doc_id: &'r str,
    pub grade: RelevanceGrade,
    pub team: Team,
}

/// A positionally merged ranking with per-position team attribution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InterleavedRanking<'r> {
    entries: Vec<InterleavedEntry<'r>>,
}

impl<'r> InterleavedRanking<'r> {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[InterleavedEntry<'r>] {
        &self.entries
    }

    /// Team at a 1-based display position.
    pub fn team_at(&self, position: usize) -> Team {
        self.entries[position - 1].team
    }

    /// Grades in display order, for driving a click model.
    pub fn grades(&self) -> impl ExactSizeIterator<Item = RelevanceGrade> + '_ {
        self.entries.iter().map(|e| e.grade)
    }
}

/// Failures of the comparison-layer contracts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ComparisonError {
    RankingTooShort { len: usize, display_length: usize },
    OverlappingItems(String),
    LengthMismatch { clicks: usize, display: usize },
    NoImpressions,
}

impl fmt::Display for ComparisonError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ComparisonError::RankingTooShort { len, display_length } => {
                write!(f, "ranking of length {len} cannot fill display of length {display_length}")
            }
            ComparisonError::OverlappingItems(doc_id) => {
                write!(f, "input rankings share document `{doc_id}`")
            }
            ComparisonError::LengthMismatch { clicks, display } => write!(
                f,
                "click vector covers {clicks} positions but the display has {display}"
            ),
            ComparisonError::NoImpressions => write!(f, "no impressions accumulated"),
        }
    }
}

impl core::error::Error for ComparisonError {}

/// Builds an interleaved ranking of the given display length.
///
/// At each position an independent fair coin picks the team; the chosen
/// input ranking contributes the item it holds at that same position. The
/// inputs must not share documents, otherwise team attribution would be
/// ambiguous.
pub fn interleave_ima<'r>(
    a: &'r Ranking,
    b: &'r Ranking,
    display_length: usize,
    rng: &mut (impl Rng + ?Sized),
) -> Result<InterleavedRanking<'r>, ComparisonError> {
    if a.len() < display_length {
        return Err(ComparisonError::RankingTooShort { len: a.len(), display_length });
    }
    if b.len() < display_length {
        return Err(ComparisonError::RankingTooShort { len: b.len(), display_length });
    }
    let ids_a: BTreeSet<&str> = a.items.iter().map(|i| i.doc_id.as_str()).collect();
    for item in &b.items {
        if ids_a.contains(item.doc_id.as_str()) {
            return Err(ComparisonError::OverlappingItems(item.doc_id.clone()));
        }
    }

    let mut entries = Vec::with_capacity(display_length);
    for position in 0..display_length {
        let team = coin(rng);
        let source = match team {
            Team::A => &a.items[position],
            Team::B => &b.items[position],
        };
        entries.push(InterleavedEntry { doc_id: &source.doc_id, grade: source.grade, team });
    }
    Ok(InterleavedRanking { entries })
}

/// Picks the arm an A/B impression shows, with equal probability.
pub fn assign_ab_arm(rng: &mut (impl Rng + ?Sized)) -> Team {
    coin(rng)
}

/// Per-impression click scores of the two teams, each normalized by the
/// display length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImpressionScore {
    pub score_a: f64,
    pub score_b: f64,
}

impl ImpressionScore {
    pub const ZERO: ImpressionScore = ImpressionScore { score_a: 0.0, score_b: 0.0 };
}

/// Credits each click to the team holding the clicked position and divides
/// both click counts by the display length.
pub fn score_impression(
    ranking: &InterleavedRanking<'_>,
    clicks: &ClickVector,
) -> Result<ImpressionScore, ComparisonError> {
    if clicks.display_length() != ranking.len() {
        return Err(ComparisonError::LengthMismatch {
            clicks: clicks.display_length(),
            display: ranking.len(),
        });
    }
    if ranking.is_empty() {
        return Ok(ImpressionScore::ZERO);
    }
    let mut clicks_a = 0usize;
    let mut clicks_b = 0usize;
    for &position in clicks.positions() {
        match ranking.team_at(position) {
            Team::A => clicks_a += 1,
            Team::B => clicks_b += 1,
        }
    }
    let length = ranking.len() as f64;
    Ok(ImpressionScore { score_a: clicks_a as f64 / length, score_b: clicks_b as f64 / length })
}

/// Scores an A/B impression: every click goes to the shown arm.
pub fn score_ab_impression(arm: Team, clicks: &ClickVector) -> ImpressionScore {
    if clicks.display_length() == 0 {
        return ImpressionScore::ZERO;
    }
    let score = clicks.click_count() as f64 / clicks.display_length() as f64;
    match arm {
        Team::A => ImpressionScore { score_a: score, score_b: 0.0 },
        Team::B => ImpressionScore { score_a: 0.0, score_b: score },
    }
}

/// Running impression count and per-team score sums for one evaluation.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EvaluationAccumulator {
    n: u64,
    sum_a: f64,
    sum_b: f64,
}

impl EvaluationAccumulator {
    pub fn new() -> Self {
        EvaluationAccumulator::default()
    }

    pub fn accumulate(&mut self, score: ImpressionScore) {
        self.n += 1;
        self.sum_a += score.score_a;
        self.sum_b += score.score_b;
    }

    /// Combines two accumulators; merging is associative and commutative,
    /// so parallel shards can be reduced in any grouping.
    pub fn merge(&mut self, other: &EvaluationAccumulator) {
        self.n += other.n;
        self.sum_a += other.sum_a;
        self.sum_b += other.sum_b;
    }

    pub fn impressions(&self) -> u64 {
        self.n
    }

    pub fn sum_a(&self) -> f64 {
        self.sum_a
    }

    pub fn sum_b(&self) -> f64 {
        self.sum_b
    }

    pub fn mean_a(&self) -> f64 {
        self.sum_a / self.n as f64
    }

    pub fn mean_b(&self) -> f64 {
        self.sum_b / self.n as f64
    }

    /// Verdict from the mean scores seen so far.
    pub fn infer_preference(&self) -> Result<Preference, ComparisonError> {
        if self.n == 0 {
            return Err(ComparisonError::NoImpressions);
        }
        // sum comparison is equivalent to mean comparison at equal n and
        // avoids the rounding of two divisions
        Ok(if self.sum_a > self.sum_b {
            Preference::PreferA
        } else if self.sum_a < self.sum_b {
            Preference::PreferB
        } else {
            Preference::Tie
        })
    }
}
