//! Cascade click-model simulation.
//!
//! The user scans a displayed ranking top-down. At each examined position
//! they click with a probability given by the item's relevance grade; after
//! a click they stop scanning (and leave the ranking) with a second
//! grade-dependent probability. Positions after a stop are never examined.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::ranking::{ClickVector, RelevanceGrade};

/// Per-grade click and stop probability tables of a cascade click model.
#[derive(Clone, Debug, PartialEq)]
pub struct ClickModelSpec {
    name: String,
    click_prob: Vec<f64>,
    stop_prob: Vec<f64>,
}

/// Invalid click-model tables.
#[derive(Clone, Debug, PartialEq)]
pub enum ClickModelError {
    EmptyTable,
    TableLengthMismatch { click: usize, stop: usize },
    InvalidProbability(f64),
}

impl fmt::Display for ClickModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClickModelError::EmptyTable => write!(f, "click model tables must cover grade 0"),
            ClickModelError::TableLengthMismatch { click, stop } => write!(
                f,
                "click table covers {click} grades but stop table covers {stop}"
            ),
            ClickModelError::InvalidProbability(p) => {
                write!(f, "probability {p} outside [0, 1]")
            }
        }
    }
}

impl core::error::Error for ClickModelError {}

impl ClickModelSpec {
    /// Builds a custom model from per-grade tables indexed by grade value.
    pub fn new(
        name: impl Into<String>,
        click_prob: Vec<f64>,
        stop_prob: Vec<f64>,
    ) -> Result<Self, ClickModelError> {
        if click_prob.is_empty() {
            return Err(ClickModelError::EmptyTable);
        }
        if click_prob.len() != stop_prob.len() {
            return Err(ClickModelError::TableLengthMismatch {
                click: click_prob.len(),
                stop: stop_prob.len(),
            });
        }
        for &p in click_prob.iter().chain(stop_prob.iter()) {
            if !(0.0..=1.0).contains(&p) || p.is_nan() {
                return Err(ClickModelError::InvalidProbability(p));
            }
        }
        Ok(ClickModelSpec { name: name.into(), click_prob, stop_prob })
    }

    /// The perfect user: examines everything, clicks by relevance, never
    /// stops early.
    pub fn perfect() -> Self {
        ClickModelSpec {
            name: String::from("perfect"),
            click_prob: [0.0, 0.5, 1.0].to_vec(),
            stop_prob: [0.0, 0.0, 0.0].to_vec(),
        }
    }

    /// The navigational user: looks for a single relevant item and leaves
    /// once satisfied, the more readily the more relevant the click.
    pub fn navigational() -> Self {
        ClickModelSpec {
            name: String::from("navigational"),
            click_prob: [0.0, 0.5, 1.0].to_vec(),
            stop_prob: [0.0, 0.5, 1.0].to_vec(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Highest grade the tables cover.
    pub fn max_grade(&self) -> u8 {
        (self.click_prob.len() - 1) as u8
    }

    /// Click probability for a grade. Panics if the grade is not covered.
    pub fn click_prob(&self, grade: RelevanceGrade) -> f64 {
        self.click_prob[grade.value() as usize]
    }

    /// Stop probability for a grade. Panics if the grade is not covered.
    pub fn stop_prob(&self, grade: RelevanceGrade) -> f64 {
        self.stop_prob[grade.value() as usize]
    }
}

/// Simulates one cascade scan over the displayed grades.
///
/// Every grade must be covered by the model's tables. The scan examines
/// positions in order; a stop decision is made only after a click, and
/// abandons all later positions.
pub fn simulate_cascade<I>(
    grades: I,
    spec: &ClickModelSpec,
    rng: &mut (impl Rng + ?Sized),
) -> ClickVector
where
    I: IntoIterator<Item = RelevanceGrade>,
    I::IntoIter: ExactSizeIterator,
{
    let grades = grades.into_iter();
    let mut clicks = ClickVector::empty(grades.len());
    for (idx, grade) in grades.enumerate() {
        if rng.gen_bool(spec.click_prob(grade)) {
            clicks.push_unchecked(idx + 1);
            if rng.gen_bool(spec.stop_prob(grade)) {
                break;
            }
        }
    }
    clicks
}
