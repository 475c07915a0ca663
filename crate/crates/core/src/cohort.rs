//! Synthetic labeled cohorts.
//!
//! A [`Persona`] has a latent temperament (weights over the three bins), a
//! latency profile, an emotional disposition and a noise level. Its label is
//! the heaviest bin, ties broken NS > RD > HA. Answers invert the scoring
//! rule: on a question tagged `first/second` the persona says Yes with
//! probability `(1 - noise) * [first outranks second] + noise / 2`, so at
//! noise 0 every answer favors the higher-ranked bin and at noise 1 answers
//! are fair coin flips.

use alloc::vec::Vec;

use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::emotion::{simulate_emotion, Disposition, EmotionPersona};
use crate::nn::{encode_session, Dataset, NnError};
use crate::question::{BankError, Dimension, QuestionBank, QuestionType};
use crate::rng::{self, SeedRng};
use crate::scoring::{compute_result, LatencyModel, LeadershipInputs, ResultBundle, ScoreError};
use crate::session::{
    granted_dimension, is_emotion_disqualified, AnswerRecord, AnswerValue, Session, SessionConfig, SessionError,
    SessionEvent, SessionState,
};
use crate::{MAX_LATENCY_MS, MIN_LATENCY_MS};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CohortError {
    #[error(transparent)]
    Bank(#[from] BankError),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("cohort size must be at least 1")]
    EmptyCohort,
    #[error("noise {0} outside [0, 1]")]
    Noise(f64),
}

/// Latent temperament as a probability vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Temperament {
    pub ha: f64,
    pub ns: f64,
    pub rd: f64,
}

impl Temperament {
    pub fn weight(&self, d: Dimension) -> f64 {
        match d {
            Dimension::HA => self.ha,
            Dimension::NS => self.ns,
            Dimension::RD => self.rd,
        }
    }

    /// Bins from heaviest to lightest; equal weights keep NS > RD > HA.
    pub fn ranked(&self) -> [Dimension; 3] {
        let mut order = Dimension::TIE_ORDER;
        order.sort_by(|a, b| self.weight(*b).total_cmp(&self.weight(*a)));
        order
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Persona {
    pub temperament: Temperament,
    pub latency_mean_ms: f64,
    pub latency_sd_ms: f64,
    pub disposition: Disposition,
    pub noise: f64,
}

impl Persona {
    pub fn label(&self) -> Dimension {
        self.temperament.ranked()[0]
    }

    pub fn emotion(&self) -> EmotionPersona {
        EmotionPersona {
            disposition: self.disposition,
            noise: self.noise,
        }
    }

    /// Probability of answering Yes (granting `qtype.first()`).
    pub fn yes_probability(&self, qtype: QuestionType) -> f64 {
        let ranked = self.temperament.ranked();
        let pos = |d| ranked.iter().position(|&x| x == d).unwrap();
        let prefers_first = if pos(qtype.first()) < pos(qtype.second()) {
            1.0
        } else {
            0.0
        };
        let noise = self.noise.clamp(0.0, 1.0);
        (1.0 - noise) * prefers_first + noise * 0.5
    }
}

/// Pilot-population range of mean latency.
pub const PERSONA_LATENCY_RANGE_MS: (f64, f64) = (2000.0, 7000.0);
pub const PERSONA_LATENCY_SD_RANGE_MS: (f64, f64) = (300.0, 1500.0);
pub const PERSONA_NOISE_MAX: f64 = 0.3;

fn uniform(rng: &mut SeedRng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng::unit(rng)
}

/// Draws a persona: temperament from a flat Dirichlet (three Exp(1) draws,
/// normalized), mean latency uniform in [2000, 7000] ms, latency spread
/// uniform in [300, 1500] ms, a uniformly chosen disposition and noise
/// uniform in [0, 0.3].
pub fn sample_persona(rng: &mut SeedRng) -> Persona {
    let draws: [f64; 3] = core::array::from_fn(|_| Exp1.sample(rng));
    let total: f64 = draws.iter().sum();
    let temperament = Temperament {
        ha: draws[0] / total,
        ns: draws[1] / total,
        rd: draws[2] / total,
    };
    let latency_mean_ms = uniform(rng, PERSONA_LATENCY_RANGE_MS.0, PERSONA_LATENCY_RANGE_MS.1);
    let latency_sd_ms = uniform(rng, PERSONA_LATENCY_SD_RANGE_MS.0, PERSONA_LATENCY_SD_RANGE_MS.1);
    let disposition = Disposition::ALL[rng::below(rng, Disposition::ALL.len())];
    let noise = uniform(rng, 0.0, PERSONA_NOISE_MAX);
    Persona {
        temperament,
        latency_mean_ms,
        latency_sd_ms,
        disposition,
        noise,
    }
}

const ANSWER_STREAM: u64 = 0xa115;
const LATENCY_STREAM: u64 = 0x1a7e;
const EMOTION_STREAM: u64 = 0xe407;
const SKIP_STREAM: u64 = 0x5c1b;

struct Responder<'a> {
    persona: &'a Persona,
    answers: SeedRng,
    latencies: SeedRng,
    emotion_seed: u64,
}

impl<'a> Responder<'a> {
    fn new(persona: &'a Persona, seed: u64) -> Self {
        Responder {
            persona,
            answers: rng::seeded(rng::derive(seed, ANSWER_STREAM)),
            latencies: rng::seeded(rng::derive(seed, LATENCY_STREAM)),
            emotion_seed: rng::derive(seed, EMOTION_STREAM),
        }
    }

    fn answer(&mut self, qtype: QuestionType) -> AnswerValue {
        if rng::unit(&mut self.answers) < self.persona.yes_probability(qtype) {
            AnswerValue::Yes
        } else {
            AnswerValue::No
        }
    }

    /// Unclamped reaction time in ms (never negative).
    fn latency(&mut self) -> u64 {
        let z: f64 = StandardNormal.sample(&mut self.latencies);
        let ms = self.persona.latency_mean_ms + self.persona.latency_sd_ms * z;
        libm::round(ms.max(0.0)) as u64
    }
}

/// A generated standard session.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedSession {
    pub records: Vec<AnswerRecord>,
    pub label: Dimension,
}

/// Answers the 30-item questionnaire selected by `seed`. Emotions whose
/// confidence falls under the default threshold are flagged, but no
/// revalidation items are added.
pub fn generate_session(persona: &Persona, bank: &QuestionBank, seed: u64) -> Result<GeneratedSession, CohortError> {
    let questionnaire = bank.select_questionnaire(seed)?;
    let mut responder = Responder::new(persona, seed);
    let threshold = SessionConfig::default().confidence_threshold;
    let records = questionnaire
        .iter()
        .map(|q| {
            let answer = responder.answer(q.qtype);
            let latency = responder.latency();
            let emotion = simulate_emotion(&persona.emotion(), q, answer, responder.emotion_seed);
            AnswerRecord {
                question_id: q.id.clone(),
                qtype: q.qtype,
                answer,
                latency_ms: latency.clamp(MIN_LATENCY_MS as u64, MAX_LATENCY_MS as u64) as u32,
                emotion,
                granted: granted_dimension(q.qtype, answer),
                flagged: is_emotion_disqualified(&emotion, threshold),
            }
        })
        .collect();
    Ok(GeneratedSession {
        records,
        label: persona.label(),
    })
}

/// Encoded sessions with their labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    pub dataset: Dataset,
    pub labels: Vec<Dimension>,
    /// Rows per label in (HA, RD, NS) order.
    pub class_counts: [usize; 3],
}

/// Persona and session seeds for member `i` of a cohort.
pub fn member_seeds(seed: u64, i: u64) -> (u64, u64) {
    (rng::derive(seed, 2 * i), rng::derive(seed, 2 * i + 1))
}

/// Generates `n` sessions. Member `i` samples its persona from
/// `member_seeds(seed, i).0`, overrides its noise with `noise`, and answers
/// the questionnaire selected by `member_seeds(seed, i).1`.
pub fn generate_sessions(
    bank: &QuestionBank,
    n: usize,
    noise: f64,
    seed: u64,
) -> Result<Vec<GeneratedSession>, CohortError> {
    if n == 0 {
        return Err(CohortError::EmptyCohort);
    }
    if !(0.0..=1.0).contains(&noise) {
        return Err(CohortError::Noise(noise));
    }
    (0..n as u64)
        .map(|i| {
            let (persona_seed, session_seed) = member_seeds(seed, i);
            let mut persona = sample_persona(&mut rng::seeded(persona_seed));
            persona.noise = noise;
            generate_session(&persona, bank, session_seed)
        })
        .collect()
}

pub fn generate_cohort(bank: &QuestionBank, n: usize, noise: f64, seed: u64) -> Result<Cohort, CohortError> {
    let sessions = generate_sessions(bank, n, noise, seed)?;
    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut class_counts = [0usize; 3];
    for s in sessions {
        features.push(encode_session(&s.records)?);
        class_counts[s.label.label_index()] += 1;
        labels.push(s.label);
    }
    let dataset = Dataset::from_labels(features, &labels)?;
    Ok(Cohort {
        dataset,
        labels,
        class_counts,
    })
}

/// A full engine run driven by a persona.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedAssessment {
    pub persona: Persona,
    pub session: Session,
    pub events: Vec<SessionEvent>,
    /// `None` when the session ended invalid.
    pub result: Option<ResultBundle>,
}

/// Per-question skip probability at noise 1.
pub const SKIP_RATE_AT_FULL_NOISE: f64 = 0.05;

/// Runs one assessment through the session engine: a persona drawn from
/// `persona_seed` answers (or occasionally skips) each served question on a
/// simulated clock, with simulated emotions, until the session completes or
/// becomes invalid.
pub fn simulate_assessment(
    bank: &QuestionBank,
    persona_seed: u64,
    session_seed: u64,
    inputs: &LeadershipInputs,
    model: &LatencyModel,
) -> Result<SimulatedAssessment, CohortError> {
    let persona = sample_persona(&mut rng::seeded(persona_seed));
    let (mut session, start) = Session::start("simulated", "simulated", bank, session_seed, SessionConfig::default())?;
    let mut events = alloc::vec![start];
    let mut responder = Responder::new(&persona, session_seed);
    let mut skips = rng::seeded(rng::derive(session_seed, SKIP_STREAM));
    let mut clock = 0u64;

    while session.state == SessionState::Active {
        if rng::unit(&mut skips) < persona.noise * SKIP_RATE_AT_FULL_NOISE {
            events.extend(session.skip_question(bank)?.events);
            continue;
        }
        let question = session.current_question()?.clone();
        let answer = responder.answer(question.qtype);
        let displayed_at = clock;
        let answered_at = clock + responder.latency();
        let emotion = simulate_emotion(&persona.emotion(), &question, answer, responder.emotion_seed);
        events.extend(
            session
                .submit_answer(bank, answer, displayed_at, answered_at, emotion)?
                .events,
        );
        clock = answered_at + 1000;
    }

    let result = match session.state {
        SessionState::Completed => Some(compute_result(&session, inputs, model)?),
        _ => None,
    };
    Ok(SimulatedAssessment {
        persona,
        session,
        events,
        result,
    })
}
