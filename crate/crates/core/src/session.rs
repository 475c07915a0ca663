//! The assessment state machine.
//!
//! A [`Session`] is event-sourced: every command (`submit_answer`,
//! `skip_question`) first decides a list of [`SessionEvent`]s against the
//! current state and the bank, then folds them in with [`Session::apply`].
//! Replaying the same events through [`Session::replay`] rebuilds an identical
//! session without access to the bank, because every event carries the facts
//! it introduced (latency, granted bin, drawn replacement question).

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::question::{BankError, Dimension, Question, QuestionBank, QuestionType};
use crate::rng;
use crate::{MAX_LATENCY_MS, MAX_REVALIDATIONS, MIN_LATENCY_MS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnswerValue {
    Yes,
    No,
}

/// Valence and arousal in `[-1, 1]`, recognizer confidence in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmotionSample {
    pub valence: f64,
    pub arousal: f64,
    pub confidence: f64,
}

impl EmotionSample {
    pub fn new(valence: f64, arousal: f64, confidence: f64) -> Result<Self, SessionError> {
        let s = EmotionSample {
            valence,
            arousal,
            confidence,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), SessionError> {
        let in_range = |v: f64, lo: f64, hi: f64| v.is_finite() && (lo..=hi).contains(&v);
        if in_range(self.valence, -1.0, 1.0) && in_range(self.arousal, -1.0, 1.0) && in_range(self.confidence, 0.0, 1.0)
        {
            Ok(())
        } else {
            Err(SessionError::EmotionRange(*self))
        }
    }
}

/// Outcome of one answered question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub question_id: String,
    pub qtype: QuestionType,
    pub answer: AnswerValue,
    pub latency_ms: u32,
    pub emotion: EmotionSample,
    pub granted: Dimension,
    /// Emotion was disqualified; the record counts for the risk profile but
    /// is left out of biometric and confidence aggregation.
    #[serde(default)]
    pub flagged: bool,
}

/// Yes grants the first dimension of the tag, No the second.
pub fn granted_dimension(qtype: QuestionType, answer: AnswerValue) -> Dimension {
    match answer {
        AnswerValue::Yes => qtype.first(),
        AnswerValue::No => qtype.second(),
    }
}

/// Reaction time between display and answer, clamped into `[200, 10000]` ms.
pub fn latency_between(displayed_at: u64, answered_at: u64) -> Result<u32, SessionError> {
    if answered_at < displayed_at {
        return Err(SessionError::Clock {
            displayed_at,
            answered_at,
        });
    }
    let raw = answered_at - displayed_at;
    Ok(raw.clamp(MIN_LATENCY_MS as u64, MAX_LATENCY_MS as u64) as u32)
}

/// Default confidence below which an emotion reading disqualifies its record.
pub const DEFAULT_CONFIDENCE_THRESHOLD: f64 = 0.5;

/// True iff `confidence < threshold` (strict).
pub fn is_emotion_disqualified(emotion: &EmotionSample, threshold: f64) -> bool {
    emotion.confidence < threshold
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub confidence_threshold: f64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            confidence_threshold: DEFAULT_CONFIDENCE_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionState {
    Active,
    Completed,
    Invalid,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SessionError {
    #[error("session is {0:?}, not active")]
    NotActive(SessionState),
    #[error("answered_at {answered_at} precedes displayed_at {displayed_at}")]
    Clock { displayed_at: u64, answered_at: u64 },
    #[error("emotion sample out of range: {0:?}")]
    EmotionRange(EmotionSample),
    #[error("session has no answer records")]
    Empty,
    #[error(transparent)]
    Bank(#[from] BankError),
    #[error("inconsistent event log: {0}")]
    Replay(String),
}

/// One entry of a session's append-only log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum SessionEvent {
    Start {
        session_id: String,
        username: String,
        seed: u64,
        config: SessionConfig,
        questionnaire: Vec<Question>,
    },
    Answer {
        question_id: String,
        answer: AnswerValue,
        displayed_at: u64,
        answered_at: u64,
        latency_ms: u32,
        emotion: EmotionSample,
        granted: Dimension,
        flagged: bool,
    },
    /// The just-answered question's emotion was rejected; `replacement` is
    /// appended to the end of the questionnaire (absent when the budget ran out).
    Disqualify {
        question_id: String,
        replacement: Option<Question>,
    },
    /// The current question was skipped and replaced in place.
    Skip {
        question_id: String,
        replacement: Option<Question>,
    },
    Complete,
    Invalidate,
}

/// What a command did, for callers that do not want to inspect events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionReport {
    pub state: SessionState,
    pub cursor: usize,
    pub total_questions: usize,
    pub revalidations: u32,
    pub granted: Option<Dimension>,
    pub latency_ms: Option<u32>,
    pub flagged: bool,
    /// Id of the question drawn by a revalidation, if any.
    pub replacement: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub report: TransitionReport,
    pub events: Vec<SessionEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub username: String,
    pub seed: u64,
    pub config: SessionConfig,
    pub questionnaire: Vec<Question>,
    pub cursor: usize,
    pub records: Vec<AnswerRecord>,
    pub revalidations: u32,
    pub state: SessionState,
    /// Ids skipped away from the questionnaire; never drawn again.
    pub retired: Vec<String>,
}

impl Session {
    /// Selects the questionnaire for `seed` and opens an active session.
    /// Returns the session together with its `Start` event.
    pub fn start(
        session_id: impl Into<String>,
        username: impl Into<String>,
        bank: &QuestionBank,
        seed: u64,
        config: SessionConfig,
    ) -> Result<(Session, SessionEvent), SessionError> {
        let questionnaire = bank.select_questionnaire(seed)?;
        let event = SessionEvent::Start {
            session_id: session_id.into(),
            username: username.into(),
            seed,
            config,
            questionnaire,
        };
        let session = Session::from_start(&event)?;
        Ok((session, event))
    }

    fn from_start(event: &SessionEvent) -> Result<Session, SessionError> {
        match event {
            SessionEvent::Start {
                session_id,
                username,
                seed,
                config,
                questionnaire,
            } => Ok(Session {
                session_id: session_id.clone(),
                username: username.clone(),
                seed: *seed,
                config: *config,
                questionnaire: questionnaire.clone(),
                cursor: 0,
                records: Vec::new(),
                revalidations: 0,
                state: SessionState::Active,
                retired: Vec::new(),
            }),
            other => Err(SessionError::Replay(format!(
                "log must begin with start, found {other:?}"
            ))),
        }
    }

    /// Rebuilds a session from its log.
    pub fn replay<'a, I>(events: I) -> Result<Session, SessionError>
    where
        I: IntoIterator<Item = &'a SessionEvent>,
    {
        let mut events = events.into_iter();
        let first = events.next().ok_or_else(|| SessionError::Replay("empty log".into()))?;
        let mut session = Session::from_start(first)?;
        for event in events {
            session.apply(event)?;
        }
        Ok(session)
    }

    pub fn current_question(&self) -> Result<&Question, SessionError> {
        self.ensure_active()?;
        Ok(&self.questionnaire[self.cursor])
    }

    pub fn is_active(&self) -> bool {
        self.state == SessionState::Active
    }

    fn ensure_active(&self) -> Result<(), SessionError> {
        if self.state == SessionState::Active {
            Ok(())
        } else {
            Err(SessionError::NotActive(self.state))
        }
    }

    /// Questions not yet answered, including the current one.
    pub fn pending(&self) -> usize {
        self.questionnaire.len() - self.cursor
    }

    fn used_ids(&self) -> BTreeSet<String> {
        self.questionnaire
            .iter()
            .map(|q| q.id.clone())
            .chain(self.retired.iter().cloned())
            .collect()
    }

    /// Draws the replacement for revalidation number `self.revalidations + 1`,
    /// or `None` when that revalidation exceeds the budget.
    fn draw_for_revalidation(
        &self,
        bank: &QuestionBank,
        qtype: QuestionType,
    ) -> Result<Option<Question>, SessionError> {
        if self.revalidations >= MAX_REVALIDATIONS {
            return Ok(None);
        }
        let mut rng = rng::seeded(rng::derive(self.seed, 1 + self.revalidations as u64));
        Ok(Some(bank.draw_revalidation(qtype, &self.used_ids(), &mut rng)?))
    }

    pub fn submit_answer(
        &mut self,
        bank: &QuestionBank,
        answer: AnswerValue,
        displayed_at: u64,
        answered_at: u64,
        emotion: EmotionSample,
    ) -> Result<Transition, SessionError> {
        self.ensure_active()?;
        let latency_ms = latency_between(displayed_at, answered_at)?;
        emotion.validate()?;

        let question = &self.questionnaire[self.cursor];
        let granted = granted_dimension(question.qtype, answer);
        let flagged = is_emotion_disqualified(&emotion, self.config.confidence_threshold);

        let mut events = vec![SessionEvent::Answer {
            question_id: question.id.clone(),
            answer,
            displayed_at,
            answered_at,
            latency_ms,
            emotion,
            granted,
            flagged,
        }];
        let mut replacement_id = None;
        let mut invalid = false;
        let mut appended = 0;
        if flagged {
            let replacement = self.draw_for_revalidation(bank, question.qtype)?;
            invalid = replacement.is_none();
            appended = usize::from(!invalid);
            replacement_id = replacement.as_ref().map(|q| q.id.clone());
            events.push(SessionEvent::Disqualify {
                question_id: question.id.clone(),
                replacement,
            });
        }
        if invalid {
            events.push(SessionEvent::Invalidate);
        } else if self.cursor + 1 == self.questionnaire.len() + appended {
            events.push(SessionEvent::Complete);
        }

        self.apply_all(&events)?;
        Ok(Transition {
            report: self.report(Some(granted), Some(latency_ms), flagged, replacement_id),
            events,
        })
    }

    pub fn skip_question(&mut self, bank: &QuestionBank) -> Result<Transition, SessionError> {
        self.ensure_active()?;
        let question = &self.questionnaire[self.cursor];
        let replacement = self.draw_for_revalidation(bank, question.qtype)?;
        let replacement_id = replacement.as_ref().map(|q| q.id.clone());
        let mut events = vec![SessionEvent::Skip {
            question_id: question.id.clone(),
            replacement: replacement.clone(),
        }];
        if replacement.is_none() {
            events.push(SessionEvent::Invalidate);
        }
        self.apply_all(&events)?;
        Ok(Transition {
            report: self.report(None, None, false, replacement_id),
            events,
        })
    }

    fn report(
        &self,
        granted: Option<Dimension>,
        latency_ms: Option<u32>,
        flagged: bool,
        replacement: Option<String>,
    ) -> TransitionReport {
        TransitionReport {
            state: self.state,
            cursor: self.cursor,
            total_questions: self.questionnaire.len(),
            revalidations: self.revalidations,
            granted,
            latency_ms,
            flagged,
            replacement,
        }
    }

    fn apply_all(&mut self, events: &[SessionEvent]) -> Result<(), SessionError> {
        // Decide-then-apply: on error the session must stay untouched.
        let mut next = self.clone();
        for e in events {
            next.apply(e)?;
        }
        *self = next;
        Ok(())
    }

    /// Folds one event into the session, checking it is consistent with the
    /// current state.
    pub fn apply(&mut self, event: &SessionEvent) -> Result<(), SessionError> {
        let mismatch = |what: &str| SessionError::Replay(format!("{what} does not match state"));
        match event {
            SessionEvent::Start { .. } => return Err(mismatch("second start")),
            _ => self.ensure_active()?,
        }
        match event {
            SessionEvent::Start { .. } => unreachable!(),
            SessionEvent::Answer {
                question_id,
                answer,
                latency_ms,
                emotion,
                granted,
                flagged,
                ..
            } => {
                let q = self
                    .questionnaire
                    .get(self.cursor)
                    .ok_or_else(|| mismatch("answer past end"))?;
                if &q.id != question_id || granted_dimension(q.qtype, *answer) != *granted {
                    return Err(mismatch("answer"));
                }
                self.records.push(AnswerRecord {
                    question_id: question_id.clone(),
                    qtype: q.qtype,
                    answer: *answer,
                    latency_ms: (*latency_ms).clamp(MIN_LATENCY_MS, MAX_LATENCY_MS),
                    emotion: *emotion,
                    granted: *granted,
                    flagged: *flagged,
                });
                self.cursor += 1;
            }
            SessionEvent::Disqualify {
                question_id,
                replacement,
            } => {
                let last = self.records.last().ok_or_else(|| mismatch("disqualify"))?;
                if &last.question_id != question_id {
                    return Err(mismatch("disqualify"));
                }
                self.revalidations += 1;
                if let Some(q) = replacement {
                    self.questionnaire.push(q.clone());
                }
            }
            SessionEvent::Skip {
                question_id,
                replacement,
            } => {
                if self.questionnaire.get(self.cursor).map(|q| &q.id) != Some(question_id) {
                    return Err(mismatch("skip"));
                }
                self.revalidations += 1;
                if let Some(q) = replacement {
                    let old = core::mem::replace(&mut self.questionnaire[self.cursor], q.clone());
                    self.retired.push(old.id);
                }
            }
            SessionEvent::Complete => {
                if self.cursor != self.questionnaire.len() {
                    return Err(mismatch("complete"));
                }
                self.state = SessionState::Completed;
            }
            SessionEvent::Invalidate => {
                if self.revalidations <= MAX_REVALIDATIONS {
                    return Err(mismatch("invalidate"));
                }
                self.state = SessionState::Invalid;
            }
        }
        Ok(())
    }

    /// Mean latency over every record, revalidation answers included.
    pub fn average_latency_ms(&self) -> Result<f64, SessionError> {
        average_latency_ms(&self.records)
    }
}

pub fn average_latency_ms(records: &[AnswerRecord]) -> Result<f64, SessionError> {
    if records.is_empty() {
        return Err(SessionError::Empty);
    }
    let total: u64 = records.iter().map(|r| r.latency_ms as u64).sum();
    Ok(total as f64 / records.len() as f64)
}
