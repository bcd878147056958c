//! Automotive eXperience Integrity Level: a letter derived from ease of
//! substitution, exposition and quality of experience, plus a configurable
//! mapping from letters to the real-valued scores the solvers consume.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EaseOfSubstitution {
    Easy,
    Medium,
    Difficult,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Exposition {
    Rare,
    Low,
    Medium,
    High,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum QualityOfExperience {
    Minimal,
    Low,
    Medium,
    High,
}

impl EaseOfSubstitution {
    pub const ALL: [Self; 3] = [Self::Easy, Self::Medium, Self::Difficult];
}

impl Exposition {
    pub const ALL: [Self; 4] = [Self::Rare, Self::Low, Self::Medium, Self::High];
}

impl QualityOfExperience {
    pub const ALL: [Self; 4] = [Self::Minimal, Self::Low, Self::Medium, Self::High];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AxilFactors {
    pub e1: EaseOfSubstitution,
    pub e2: Exposition,
    pub e3: QualityOfExperience,
}

impl AxilFactors {
    pub fn new(e1: EaseOfSubstitution, e2: Exposition, e3: QualityOfExperience) -> Self {
        AxilFactors { e1, e2, e3 }
    }

    /// All 48 factor combinations in table order.
    pub fn all() -> impl Iterator<Item = AxilFactors> {
        EaseOfSubstitution::ALL.into_iter().flat_map(|e1| {
            Exposition::ALL.into_iter().flat_map(move |e2| {
                QualityOfExperience::ALL
                    .into_iter()
                    .map(move |e3| AxilFactors { e1, e2, e3 })
            })
        })
    }
}

/// Priority letter, ordered `None < A < B < C < D`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AxilLevel {
    None,
    A,
    B,
    C,
    D,
}

impl AxilLevel {
    pub const ALL: [Self; 5] = [Self::None, Self::A, Self::B, Self::C, Self::D];

    fn rank(self) -> usize {
        self as usize
    }
}

impl fmt::Display for AxilLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AxilLevel::None => "-",
            AxilLevel::A => "A",
            AxilLevel::B => "B",
            AxilLevel::C => "C",
            AxilLevel::D => "D",
        };
        f.write_str(s)
    }
}

use AxilLevel::{None as N, A, B, C, D};

// [e1][e2][e3]
const TABLE: [[[AxilLevel; 4]; 4]; 3] = [
    // Easy
    [[N, N, N, N], [N, N, N, N], [N, N, N, A], [N, N, A, B]],
    // Medium
    [[N, N, N, N], [N, N, N, A], [N, N, A, B], [N, A, B, C]],
    // Difficult
    [[N, N, N, A], [N, N, A, B], [N, A, B, C], [A, B, C, D]],
];

pub fn derive_axil(f: AxilFactors) -> AxilLevel {
    TABLE[f.e1 as usize][f.e2 as usize][f.e3 as usize]
}

#[derive(Debug, Error, PartialEq)]
pub enum ScoreMapError {
    #[error("score for {0} is negative or not finite")]
    Invalid(AxilLevel),
    #[error("score for {upper} does not exceed the score for {lower}")]
    NotIncreasing { lower: AxilLevel, upper: AxilLevel },
}

/// Letter-to-score mapping, strictly increasing in letter order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScoreMap([f64; 5]);

impl ScoreMap {
    pub fn new(scores: [f64; 5]) -> Result<Self, ScoreMapError> {
        for (level, s) in AxilLevel::ALL.iter().zip(scores) {
            if !(s >= 0.0) || !s.is_finite() {
                return Err(ScoreMapError::Invalid(*level));
            }
        }
        for w in AxilLevel::ALL.windows(2) {
            if !(scores[w[1].rank()] > scores[w[0].rank()]) {
                return Err(ScoreMapError::NotIncreasing {
                    lower: w[0],
                    upper: w[1],
                });
            }
        }
        Ok(ScoreMap(scores))
    }

    pub fn score(&self, level: AxilLevel) -> f64 {
        self.0[level.rank()]
    }
}

impl Default for ScoreMap {
    /// `{-: 0, A: 1, B: 2, C: 4, D: 8}`.
    fn default() -> Self {
        ScoreMap([0.0, 1.0, 2.0, 4.0, 8.0])
    }
}

pub fn level_to_score(level: AxilLevel, mapping: &ScoreMap) -> f64 {
    mapping.score(level)
}
