//! Valence-arousal provider contract and a deterministic simulator.
//!
//! A real recognizer samples video as 13-frame snippets (about 400 ms) inside
//! 64-frame sequences (about 2 s) and reports one valence-arousal estimate per
//! snippet. [`EmotionProvider`] is that contract; [`SimulatedProvider`] fulfils
//! it from a persona table so sessions can be generated and tested offline.

use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::question::Question;
use crate::rng;
use crate::session::{AnswerValue, EmotionSample};

/// Capture geometry of the recognizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameWindow {
    pub frames_per_snippet: u32,
    pub snippet_span_ms: u64,
    pub sequence_length: u32,
    pub sequence_span_ms: u64,
}

impl FrameWindow {
    pub const STANDARD: FrameWindow = FrameWindow {
        frames_per_snippet: 13,
        snippet_span_ms: 400,
        sequence_length: 64,
        sequence_span_ms: 2000,
    };

    /// Time between consecutive frames of a sequence (31.25 ms).
    pub fn frame_interval_ms(&self) -> f64 {
        self.sequence_span_ms as f64 / self.sequence_length as f64
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmotionError {
    #[error("window of {span_ms} ms is shorter than one {min_ms} ms snippet")]
    WindowTooShort { span_ms: u64, min_ms: u64 },
    #[error("timeline is empty")]
    EmptyTimeline,
    #[error("timeline timestamps must be strictly increasing")]
    NotIncreasing,
    #[error("sample out of range at t = {t_ms} ms")]
    Range { t_ms: u64 },
}

/// One recognizer estimate; also the ingestion wire format
/// `{t_ms, valence, arousal, confidence}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimedSample {
    pub t_ms: u64,
    pub valence: f64,
    pub arousal: f64,
    pub confidence: f64,
}

impl TimedSample {
    pub fn sample(&self) -> EmotionSample {
        EmotionSample {
            valence: self.valence,
            arousal: self.arousal,
            confidence: self.confidence,
        }
    }
}

/// Estimates for one question window, strictly increasing in time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<TimedSample>", into = "Vec<TimedSample>")]
pub struct EmotionTimeline {
    samples: Vec<TimedSample>,
}

impl EmotionTimeline {
    pub fn new(samples: Vec<TimedSample>) -> Result<Self, EmotionError> {
        for s in &samples {
            if s.sample().validate().is_err() {
                return Err(EmotionError::Range { t_ms: s.t_ms });
            }
        }
        if samples.windows(2).any(|w| w[0].t_ms >= w[1].t_ms) {
            return Err(EmotionError::NotIncreasing);
        }
        Ok(EmotionTimeline { samples })
    }

    pub fn samples(&self) -> &[TimedSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

impl TryFrom<Vec<TimedSample>> for EmotionTimeline {
    type Error = EmotionError;

    fn try_from(samples: Vec<TimedSample>) -> Result<Self, Self::Error> {
        EmotionTimeline::new(samples)
    }
}

impl From<EmotionTimeline> for Vec<TimedSample> {
    fn from(t: EmotionTimeline) -> Self {
        t.samples
    }
}

/// Mean valence, arousal and confidence of a window.
pub fn aggregate_window(samples: &[TimedSample]) -> Result<EmotionSample, EmotionError> {
    if samples.is_empty() {
        return Err(EmotionError::EmptyTimeline);
    }
    let n = samples.len() as f64;
    let (v, a, c) = samples.iter().fold((0.0, 0.0, 0.0), |(v, a, c), s| {
        (v + s.valence, a + s.arousal, c + s.confidence)
    });
    Ok(EmotionSample {
        valence: (v / n).clamp(-1.0, 1.0),
        arousal: (a / n).clamp(-1.0, 1.0),
        confidence: (c / n).clamp(0.0, 1.0),
    })
}

/// Question display window on the client clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start_ms: u64,
    pub end_ms: u64,
}

/// Anything that turns a capture window into snippet-level estimates.
///
/// Implementations must return at least one sample per snippet span, keep all
/// values inside the [`EmotionSample`] ranges, and be callable concurrently.
pub trait EmotionProvider {
    fn estimate(&self, window: Window) -> Result<EmotionTimeline, EmotionError>;
}

/// Snippet start times covering `window`: `start, start + 400, ...` while
/// before `end`.
pub fn snippet_times(window: Window, geometry: &FrameWindow) -> Result<Vec<u64>, EmotionError> {
    let span = window.end_ms.saturating_sub(window.start_ms);
    if span < geometry.snippet_span_ms {
        return Err(EmotionError::WindowTooShort {
            span_ms: span,
            min_ms: geometry.snippet_span_ms,
        });
    }
    Ok((window.start_ms..window.end_ms)
        .step_by(geometry.snippet_span_ms as usize)
        .collect())
}

/// Emotional baseline of a simulated persona.
///
/// | disposition | valence | arousal |
/// |-------------|---------|---------|
/// | calm-positive | 0.5 | -0.3 |
/// | excited-positive | 0.6 | 0.5 |
/// | tense-negative | -0.4 | 0.6 |
/// | low-negative | -0.5 | -0.4 |
/// | neutral | 0.0 | 0.0 |
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Disposition {
    CalmPositive,
    ExcitedPositive,
    TenseNegative,
    LowNegative,
    Neutral,
}

impl Disposition {
    pub const ALL: [Disposition; 5] = [
        Disposition::CalmPositive,
        Disposition::ExcitedPositive,
        Disposition::TenseNegative,
        Disposition::LowNegative,
        Disposition::Neutral,
    ];

    /// Mean (valence, arousal).
    pub fn mean(self) -> (f64, f64) {
        match self {
            Disposition::CalmPositive => (0.5, -0.3),
            Disposition::ExcitedPositive => (0.6, 0.5),
            Disposition::TenseNegative => (-0.4, 0.6),
            Disposition::LowNegative => (-0.5, -0.4),
            Disposition::Neutral => (0.0, 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmotionPersona {
    pub disposition: Disposition,
    /// In `[0, 1]`; scales the Gaussian spread and the confidence penalty.
    pub noise: f64,
}

/// Standard deviation of valence/arousal noise at `noise = 1`.
pub const NOISE_SPREAD: f64 = 0.5;
/// Largest confidence penalty at `noise = 1`.
pub const MAX_CONFIDENCE_PENALTY: f64 = 0.6;

fn draw(persona: &EmotionPersona, seed: u64) -> EmotionSample {
    let noise = persona.noise.clamp(0.0, 1.0);
    let (mv, ma) = persona.disposition.mean();
    let mut rng = rng::seeded(seed);
    let gv: f64 = StandardNormal.sample(&mut rng);
    let ga: f64 = StandardNormal.sample(&mut rng);
    let penalty = noise * MAX_CONFIDENCE_PENALTY * rng::unit(&mut rng);
    EmotionSample {
        valence: (mv + noise * NOISE_SPREAD * gv).clamp(-1.0, 1.0),
        arousal: (ma + noise * NOISE_SPREAD * ga).clamp(-1.0, 1.0),
        confidence: (1.0 - penalty).clamp(0.0, 1.0),
    }
}

fn question_stream(question: &Question, answer: AnswerValue) -> u64 {
    let tag = match answer {
        AnswerValue::Yes => 1,
        AnswerValue::No => 2,
    };
    question.id.bytes().fold(tag, |h, b| rng::derive(h, b as u64))
}

/// Per-question emotion: the disposition mean plus `noise * 0.5 * N(0, 1)`
/// on each axis (clamped to `[-1, 1]`), confidence `1 - noise * 0.6 * U[0, 1)`.
/// A pure function of its arguments.
pub fn simulate_emotion(
    persona: &EmotionPersona,
    question: &Question,
    answer: AnswerValue,
    seed: u64,
) -> EmotionSample {
    draw(persona, rng::derive(seed, question_stream(question, answer)))
}

/// Simulator standing in for a video recognizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulatedProvider {
    pub persona: EmotionPersona,
    pub seed: u64,
    pub geometry: FrameWindow,
}

impl SimulatedProvider {
    pub fn new(persona: EmotionPersona, seed: u64) -> Self {
        SimulatedProvider {
            persona,
            seed,
            geometry: FrameWindow::STANDARD,
        }
    }
}

impl EmotionProvider for SimulatedProvider {
    fn estimate(&self, window: Window) -> Result<EmotionTimeline, EmotionError> {
        let samples = snippet_times(window, &self.geometry)?
            .into_iter()
            .map(|t| {
                let s = draw(&self.persona, rng::derive(self.seed, t));
                TimedSample {
                    t_ms: t,
                    valence: s.valence,
                    arousal: s.arousal,
                    confidence: s.confidence,
                }
            })
            .collect();
        EmotionTimeline::new(samples)
    }
}
