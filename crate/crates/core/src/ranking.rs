//! Shared domain types: graded relevance, rankings, click vectors, verdicts.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Highest relevance grade accepted unless a dataset configures otherwise
/// (three levels: irrelevant 0, relevant 1, highly relevant 2).
pub const DEFAULT_MAX_GRADE: u8 = 2;

/// Graded relevance label of a single document.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RelevanceGrade(pub u8);

impl RelevanceGrade {
    pub fn value(self) -> u8 {
        self.0
    }
}

impl From<u8> for RelevanceGrade {
    fn from(value: u8) -> Self {
        RelevanceGrade(value)
    }
}

/// One document inside a ranking, carrying its relevance label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankedItem {
    pub doc_id: String,
    pub grade: RelevanceGrade,
}

/// An ordered list of distinct documents for one query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ranking {
    pub query_id: String,
    pub items: Vec<RankedItem>,
}

impl Ranking {
    pub fn new(query_id: impl Into<String>, items: Vec<RankedItem>) -> Self {
        Ranking { query_id: query_id.into(), items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Grades in display order.
    pub fn grades(&self) -> impl ExactSizeIterator<Item = RelevanceGrade> + '_ {
        self.items.iter().map(|item| item.grade)
    }
}

/// Violations of the ranking / click-vector invariants.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ValidationError {
    EmptyRanking,
    DuplicateItem(String),
    GradeOutOfRange { position: usize, grade: u8, max_grade: u8 },
    ClickOutOfBounds { position: usize, display_length: usize },
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationError::EmptyRanking => write!(f, "ranking has no items"),
            ValidationError::DuplicateItem(doc_id) => {
                write!(f, "duplicate document `{doc_id}` in ranking")
            }
            ValidationError::GradeOutOfRange { position, grade, max_grade } => write!(
                f,
                "grade {grade} at position {position} exceeds max grade {max_grade}"
            ),
            ValidationError::ClickOutOfBounds { position, display_length } => write!(
                f,
                "click at position {position} outside display of length {display_length}"
            ),
        }
    }
}

impl core::error::Error for ValidationError {}

/// Checks the ranking invariants: non-empty, distinct doc ids, grades within
/// `[0, max_grade]`. Returns the ranking unchanged when they hold.
pub fn validate_ranking(ranking: Ranking, max_grade: u8) -> Result<Ranking, ValidationError> {
    if ranking.items.is_empty() {
        return Err(ValidationError::EmptyRanking);
    }
    let mut seen = BTreeSet::new();
    for (idx, item) in ranking.items.iter().enumerate() {
        if item.grade.value() > max_grade {
            return Err(ValidationError::GradeOutOfRange {
                position: idx + 1,
                grade: item.grade.value(),
                max_grade,
            });
        }
        if !seen.insert(item.doc_id.as_str()) {
            return Err(ValidationError::DuplicateItem(item.doc_id.clone()));
        }
    }
    Ok(ranking)
}

/// Clicked positions (1-based) within one displayed ranking.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClickVector {
    positions: Vec<usize>,
    display_length: usize,
}

impl ClickVector {
    /// Builds a click vector, normalizing to sorted distinct positions.
    pub fn new(mut positions: Vec<usize>, display_length: usize) -> Result<Self, ValidationError> {
        positions.sort_unstable();
        positions.dedup();
        for &pos in &positions {
            if pos == 0 || pos > display_length {
                return Err(ValidationError::ClickOutOfBounds { position: pos, display_length });
            }
        }
        Ok(ClickVector { positions, display_length })
    }

    pub fn empty(display_length: usize) -> Self {
        ClickVector { positions: Vec::new(), display_length }
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn display_length(&self) -> usize {
        self.display_length
    }

    pub fn click_count(&self) -> usize {
        self.positions.len()
    }

    pub(crate) fn push_unchecked(&mut self, position: usize) {
        debug_assert!(position >= 1 && position <= self.display_length);
        debug_assert!(self.positions.last().is_none_or(|&last| last < position));
        self.positions.push(position);
    }
}

/// Outcome of comparing two rankers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Preference {
    PreferA,
    PreferB,
    Tie,
}

impl Preference {
    /// The opposite verdict; ties stay ties.
    pub fn flipped(self) -> Self {
        match self {
            Preference::PreferA => Preference::PreferB,
            Preference::PreferB => Preference::PreferA,
            Preference::Tie => Preference::Tie,
        }
    }
}

impl fmt::Display for Preference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preference::PreferA => write!(f, "prefer_a"),
            Preference::PreferB => write!(f, "prefer_b"),
            Preference::Tie => write!(f, "tie"),
        }
    }
}
