//! Question model, the validated bank, and questionnaire selection.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::rng::{self, SeedRng};
use crate::{MAX_REVALIDATIONS, STANDARD_QUESTIONS};

/// One of the three temperament bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dimension {
    /// Harm avoidance, displayed as "Averse".
    HA,
    /// Novelty seeking, displayed as "Taker".
    NS,
    /// Reward dependence, displayed as "Dependent".
    RD,
}

impl Dimension {
    pub const ALL: [Dimension; 3] = [Dimension::HA, Dimension::NS, Dimension::RD];

    /// Fixed ranking used whenever bins tie: NS before RD before HA.
    pub const TIE_ORDER: [Dimension; 3] = [Dimension::NS, Dimension::RD, Dimension::HA];

    pub fn alias(self) -> &'static str {
        match self {
            Dimension::HA => "Averse",
            Dimension::NS => "Taker",
            Dimension::RD => "Dependent",
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Dimension::HA => "HA",
            Dimension::NS => "NS",
            Dimension::RD => "RD",
        }
    }

    /// Position in [`Dimension::TIE_ORDER`]; lower wins a tie.
    pub fn tie_rank(self) -> usize {
        match self {
            Dimension::NS => 0,
            Dimension::RD => 1,
            Dimension::HA => 2,
        }
    }

    /// Index used for one-hot labels, in the order (HA, RD, NS).
    pub fn label_index(self) -> usize {
        match self {
            Dimension::HA => 0,
            Dimension::RD => 1,
            Dimension::NS => 2,
        }
    }

    pub fn from_label_index(index: usize) -> Option<Dimension> {
        match index {
            0 => Some(Dimension::HA),
            1 => Some(Dimension::RD),
            2 => Some(Dimension::NS),
            _ => None,
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Dimension {
    type Err = ParseTypeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "HA" => Ok(Dimension::HA),
            "NS" => Ok(Dimension::NS),
            "RD" => Ok(Dimension::RD),
            other => Err(ParseTypeError(other.into())),
        }
    }
}

/// Unrecognized dimension or question-type token.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown question type or dimension `{0}`")]
pub struct ParseTypeError(pub String);

/// The cognitive tag of a question: an ordered pair of distinct dimensions.
/// A Yes answer grants the first dimension, a No answer the second.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QuestionType {
    #[serde(rename = "HA/NS")]
    HaNs,
    #[serde(rename = "RD/HA")]
    RdHa,
    #[serde(rename = "NS/RD")]
    NsRd,
    #[serde(rename = "NS/HA")]
    NsHa,
    #[serde(rename = "HA/RD")]
    HaRd,
    #[serde(rename = "RD/NS")]
    RdNs,
}

impl QuestionType {
    /// Canonical order: the three majors, then the three minors.
    pub const ALL: [QuestionType; 6] = [
        QuestionType::HaNs,
        QuestionType::RdHa,
        QuestionType::NsRd,
        QuestionType::NsHa,
        QuestionType::HaRd,
        QuestionType::RdNs,
    ];

    pub fn first(self) -> Dimension {
        self.pair().0
    }

    pub fn second(self) -> Dimension {
        self.pair().1
    }

    pub fn pair(self) -> (Dimension, Dimension) {
        use Dimension::*;
        match self {
            QuestionType::HaNs => (HA, NS),
            QuestionType::RdHa => (RD, HA),
            QuestionType::NsRd => (NS, RD),
            QuestionType::NsHa => (NS, HA),
            QuestionType::HaRd => (HA, RD),
            QuestionType::RdNs => (RD, NS),
        }
    }

    pub fn from_pair(first: Dimension, second: Dimension) -> Option<QuestionType> {
        QuestionType::ALL.into_iter().find(|t| t.pair() == (first, second))
    }

    pub fn is_major(self) -> bool {
        matches!(self, QuestionType::HaNs | QuestionType::RdHa | QuestionType::NsRd)
    }

    /// Position in [`QuestionType::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    /// Items of this type in a standard questionnaire: 6 per major, 4 per minor.
    pub fn quota(self) -> usize {
        if self.is_major() {
            6
        } else {
            4
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            QuestionType::HaNs => "HA/NS",
            QuestionType::RdHa => "RD/HA",
            QuestionType::NsRd => "NS/RD",
            QuestionType::NsHa => "NS/HA",
            QuestionType::HaRd => "HA/RD",
            QuestionType::RdNs => "RD/NS",
        }
    }
}

impl fmt::Display for QuestionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QuestionType {
    type Err = ParseTypeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        QuestionType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| ParseTypeError(s.into()))
    }
}

/// A dichotomous (Yes/No) item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub text: String,
    pub qtype: QuestionType,
}

impl Question {
    pub fn new(id: impl Into<String>, text: impl Into<String>, qtype: QuestionType) -> Self {
        Question {
            id: id.into(),
            text: text.into(),
            qtype,
        }
    }

    pub fn is_major(&self) -> bool {
        self.qtype.is_major()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BankError {
    #[error("question {index} has an empty id")]
    EmptyId { index: usize },
    #[error("question `{id}` has empty text")]
    EmptyText { id: String },
    #[error("duplicate question id `{id}`")]
    DuplicateId { id: String },
    #[error("question type {qtype} has {available} items, needs at least {required}")]
    Capacity {
        qtype: QuestionType,
        available: usize,
        required: usize,
    },
    #[error("no unused question of type {qtype} remains")]
    Exhausted { qtype: QuestionType },
}

/// An immutable, validated question database.
#[derive(Debug, Clone, PartialEq)]
pub struct QuestionBank {
    questions: Vec<Question>,
    by_type: [Vec<usize>; 6],
}

impl QuestionBank {
    /// Validates and indexes `questions`.
    ///
    /// Every type must hold its selection quota plus [`MAX_REVALIDATIONS`]
    /// items so a revalidation can always draw an unused same-type question.
    pub fn new(questions: Vec<Question>) -> Result<Self, BankError> {
        let mut seen = BTreeSet::new();
        let mut by_type: [Vec<usize>; 6] = Default::default();
        for (index, q) in questions.iter().enumerate() {
            if q.id.trim().is_empty() {
                return Err(BankError::EmptyId { index });
            }
            if q.text.trim().is_empty() {
                return Err(BankError::EmptyText { id: q.id.clone() });
            }
            if !seen.insert(q.id.as_str()) {
                return Err(BankError::DuplicateId { id: q.id.clone() });
            }
            by_type[q.qtype.index()].push(index);
        }
        for qtype in QuestionType::ALL {
            let available = by_type[qtype.index()].len();
            let required = qtype.quota() + MAX_REVALIDATIONS as usize;
            if available < required {
                return Err(BankError::Capacity {
                    qtype,
                    available,
                    required,
                });
            }
        }
        Ok(QuestionBank { questions, by_type })
    }

    /// A placeholder bank with `per_type` items of every type
    /// (ids `Q0001`, `Q0002`, ...).
    pub fn synthetic(per_type: usize) -> Result<Self, BankError> {
        let mut questions = Vec::with_capacity(per_type * 6);
        for k in 0..per_type {
            for qtype in QuestionType::ALL {
                let n = questions.len() + 1;
                questions.push(Question::new(
                    format!("Q{n:04}"),
                    format!("Placeholder situational item {} #{} ({})", n, k + 1, qtype),
                    qtype,
                ));
            }
        }
        QuestionBank::new(questions)
    }

    pub fn questions(&self) -> &[Question] {
        &self.questions
    }

    pub fn len(&self) -> usize {
        self.questions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.questions.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Question> {
        self.questions.iter().find(|q| q.id == id)
    }

    pub fn of_type(&self, qtype: QuestionType) -> impl Iterator<Item = &Question> + '_ {
        self.by_type[qtype.index()].iter().map(move |&i| &self.questions[i])
    }

    pub fn count_of(&self, qtype: QuestionType) -> usize {
        self.by_type[qtype.index()].len()
    }

    /// Picks the standard 30-item questionnaire for `seed`.
    ///
    /// Per type, the bank's items of that type are shuffled and the first
    /// `quota` taken (types visited in [`QuestionType::ALL`] order, all from
    /// one generator); the 30 picks are then shuffled together.
    pub fn select_questionnaire(&self, seed: u64) -> Result<Vec<Question>, BankError> {
        let mut rng = rng::seeded(seed);
        let mut picked = Vec::with_capacity(STANDARD_QUESTIONS);
        for qtype in QuestionType::ALL {
            let mut pool = self.by_type[qtype.index()].clone();
            let quota = qtype.quota();
            if pool.len() < quota {
                return Err(BankError::Capacity {
                    qtype,
                    available: pool.len(),
                    required: quota,
                });
            }
            rng::shuffle(&mut rng, &mut pool);
            picked.extend(pool[..quota].iter().map(|&i| self.questions[i].clone()));
        }
        rng::shuffle(&mut rng, &mut picked);
        Ok(picked)
    }

    /// Draws a question of `qtype` whose id is not in `exclude`.
    pub fn draw_revalidation(
        &self,
        qtype: QuestionType,
        exclude: &BTreeSet<String>,
        rng: &mut SeedRng,
    ) -> Result<Question, BankError> {
        let fresh: Vec<&Question> = self.of_type(qtype).filter(|q| !exclude.contains(&q.id)).collect();
        if fresh.is_empty() {
            return Err(BankError::Exhausted { qtype });
        }
        Ok(fresh[rng::below(rng, fresh.len())].clone())
    }
}

/// Selection seed for one user's session: the first eight bytes
/// (little-endian) of SHA-256(username || 0x00 || nonce as little-endian u64).
pub fn session_seed(username: &str, nonce: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(username.as_bytes());
    h.update([0u8]);
    h.update(nonce.to_le_bytes());
    let digest = h.finalize();
    let mut first = [0u8; 8];
    first.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(first)
}
