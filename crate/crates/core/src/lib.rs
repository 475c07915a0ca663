//! Situational risk tolerance assessment, allocation-only core.
//!
//! A user answers 30 timed Yes/No questions, each tagged with an ordered
//! pair of temperament dimensions (harm avoidance, novelty seeking, reward
//! dependence). Answers fill three bins that give the risk profile; reaction
//! times give the thinking type and leadership score; facial valence-arousal
//! readings give the biometric type and recognizer confidence; revalidations
//! (skips and rejected emotion readings) lower truthfulness. The product of
//! these is the Individual Worthiness Index.
//!
//! Modules:
//!
//! - [`question`]: dimensions, question types, the validated bank, selection
//! - [`session`]: the event-sourced assessment state machine
//! - [`scoring`]: every sub-score and the index
//! - [`nn`]: a from-scratch perceptron trained with the delta rule
//! - [`emotion`]: recognizer contract and simulator
//! - [`cohort`]: synthetic labeled sessions
//!
//! The crate is `no_std` and needs only `alloc`; file formats, persistence
//! and the HTTP service live in the `srta` crate.

#![no_std]

extern crate alloc;

pub mod cohort;
pub mod emotion;
pub mod nn;
pub mod question;
pub mod rng;
pub mod scoring;
pub mod session;

/// Items in a standard questionnaire.
pub const STANDARD_QUESTIONS: usize = 30;
/// Revalidations a session may absorb; one more makes it invalid.
pub const MAX_REVALIDATIONS: u32 = 6;
/// Latency clamp bounds in milliseconds.
pub const MIN_LATENCY_MS: u32 = 200;
pub const MAX_LATENCY_MS: u32 = 10_000;

pub use question::{Dimension, Question, QuestionBank, QuestionType};
pub use scoring::{LatencyModel, LeadershipInputs, ResultBundle};
pub use session::{AnswerRecord, AnswerValue, EmotionSample, Session, SessionEvent, SessionState};
