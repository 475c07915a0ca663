//! Sub-scores and the Individual Worthiness Index.
//!
//! Everything here is a pure function of its arguments.

use alloc::collections::BTreeMap;
use alloc::string::String;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::question::Dimension;
use crate::session::{AnswerRecord, Session, SessionState};
use crate::{MAX_LATENCY_MS, MAX_REVALIDATIONS, STANDARD_QUESTIONS};

/// Theoretical ceiling of the raw index (6 x 5 x 4 with T = C = 1).
pub const IWI_MAX: f64 = 120.0;
/// Floor of the normalized index shown to users.
pub const IWI_PCT_FLOOR: f64 = 0.20;
/// Ceiling of the leadership score with six education and six job levels.
pub const LEADERSHIP_MAX: f64 = 120.0;
/// Mean latencies outside `[2000, 7000]` ms are marked unusual.
pub const UNUSUAL_BELOW_MS: f64 = 2000.0;
pub const UNUSUAL_ABOVE_MS: f64 = 7000.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoreError {
    #[error("no answer records to score")]
    EmptyRecords,
    #[error("every record is flagged; nothing left to aggregate")]
    AllFlagged,
    #[error("revalidation count {0} outside 0..=6")]
    Revalidations(u32),
    #[error("latency {0} ms must be positive and finite")]
    Latency(f64),
    #[error("{name} = {value} outside [{lo}, {hi}]")]
    Range {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("unknown emotion label `{0}`")]
    UnknownEmotion(String),
    #[error("session must be completed, it is {0:?}")]
    NotCompleted(SessionState),
}

fn check_range(name: &'static str, value: f64, lo: f64, hi: f64) -> Result<f64, ScoreError> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(value)
    } else {
        Err(ScoreError::Range { name, value, lo, hi })
    }
}

/// Risk profile: the two fullest bins and their social-valuation coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskProfile {
    pub primary: Dimension,
    pub secondary: Dimension,
    pub coefficient: u8,
    pub bin_counts: BTreeMap<Dimension, u32>,
}

/// Coefficient for an ordered (primary, secondary) pair.
///
/// | pair | label | coeff |
/// |------|-------|-------|
/// | HA, RD | Averse Dependent | 1 |
/// | HA, NS | Averse Taker | 2 |
/// | RD, HA | Dependent Averse | 3 |
/// | RD, NS | Dependent Taker | 4 |
/// | NS, HA | Taker Averse | 5 |
/// | NS, RD | Taker Dependent | 6 |
pub fn profile_coefficient(primary: Dimension, secondary: Dimension) -> Option<u8> {
    use Dimension::*;
    match (primary, secondary) {
        (HA, RD) => Some(1),
        (HA, NS) => Some(2),
        (RD, HA) => Some(3),
        (RD, NS) => Some(4),
        (NS, HA) => Some(5),
        (NS, RD) => Some(6),
        _ => None,
    }
}

impl RiskProfile {
    /// Ranks bins by count, ties broken NS > RD > HA.
    pub fn from_counts(bin_counts: BTreeMap<Dimension, u32>) -> RiskProfile {
        let mut ranked = Dimension::TIE_ORDER;
        let count = |d: &Dimension| bin_counts.get(d).copied().unwrap_or(0);
        // Stable sort keeps the tie order among equal counts.
        ranked.sort_by_key(|d| core::cmp::Reverse(count(d)));
        let (primary, secondary) = (ranked[0], ranked[1]);
        RiskProfile {
            primary,
            secondary,
            coefficient: profile_coefficient(primary, secondary).expect("distinct dimensions"),
            bin_counts,
        }
    }

    /// e.g. "Averse Dependent".
    pub fn label(&self) -> String {
        let mut s = String::from(self.primary.alias());
        s.push(' ');
        s.push_str(self.secondary.alias());
        s
    }
}

pub fn risk_profile(records: &[AnswerRecord]) -> Result<RiskProfile, ScoreError> {
    if records.is_empty() {
        return Err(ScoreError::EmptyRecords);
    }
    let mut counts: BTreeMap<Dimension, u32> = Dimension::ALL.iter().map(|&d| (d, 0)).collect();
    for r in records {
        *counts.entry(r.granted).or_default() += 1;
    }
    Ok(RiskProfile::from_counts(counts))
}

/// `30 / (30 + revalidations)`: 1.0 with no revalidations, 30/36 at six.
pub fn truthfulness(revalidations: u32) -> Result<f64, ScoreError> {
    if revalidations > MAX_REVALIDATIONS {
        return Err(ScoreError::Revalidations(revalidations));
    }
    let n = STANDARD_QUESTIONS as f64;
    Ok(n / (n + revalidations as f64))
}

/// Normal latency model behind the thinking-type bands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyModel {
    pub mu_ms: f64,
    pub sigma_ms: f64,
}

impl Default for LatencyModel {
    fn default() -> Self {
        LatencyModel {
            mu_ms: 3000.0,
            sigma_ms: 1000.0,
        }
    }
}

impl LatencyModel {
    pub fn new(mu_ms: f64, sigma_ms: f64) -> Result<Self, ScoreError> {
        if !(mu_ms.is_finite() && mu_ms > 0.0) {
            return Err(ScoreError::Latency(mu_ms));
        }
        check_range("sigma_ms", sigma_ms, f64::MIN_POSITIVE, f64::MAX)?;
        Ok(LatencyModel { mu_ms, sigma_ms })
    }

    /// The four interior band edges `mu - 1.5s, mu - 0.5s, mu + 0.5s, mu + 1.5s`
    /// (1500, 2500, 3500, 4500 ms for the default model).
    pub fn edges(&self) -> [f64; 4] {
        let (m, s) = (self.mu_ms, self.sigma_ms);
        [m - 1.5 * s, m - 0.5 * s, m + 0.5 * s, m + 1.5 * s]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Band {
    XS,
    S,
    M,
    L,
    XL,
}

impl Band {
    pub const ALL: [Band; 5] = [Band::XS, Band::S, Band::M, Band::L, Band::XL];

    pub fn coefficient(self) -> u8 {
        self as u8 + 1
    }

    pub fn name(self) -> &'static str {
        match self {
            Band::XS => "extra short",
            Band::S => "short",
            Band::M => "median",
            Band::L => "long",
            Band::XL => "extra long",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThinkingType {
    pub band: Band,
    pub coefficient: u8,
    pub unusual: bool,
}

/// Places a mean latency in one of five half-open bands, each one sigma
/// wide and centred on `mu` for M:
/// `XS < mu-1.5s <= S < mu-0.5s <= M < mu+0.5s <= L < mu+1.5s <= XL`.
/// XS and XL are open-ended, so every positive latency lands in a band.
pub fn thinking_type(avg_latency_ms: f64, model: &LatencyModel) -> Result<ThinkingType, ScoreError> {
    if !(avg_latency_ms.is_finite() && avg_latency_ms > 0.0) {
        return Err(ScoreError::Latency(avg_latency_ms));
    }
    let [to_s, to_m, to_l, to_xl] = model.edges();
    let band = if avg_latency_ms < to_s {
        Band::XS
    } else if avg_latency_ms < to_m {
        Band::S
    } else if avg_latency_ms < to_l {
        Band::M
    } else if avg_latency_ms < to_xl {
        Band::L
    } else {
        Band::XL
    };
    Ok(ThinkingType {
        band,
        coefficient: band.coefficient(),
        unusual: !(UNUSUAL_BELOW_MS..=UNUSUAL_ABOVE_MS).contains(&avg_latency_ms),
    })
}

/// The eight categorical emotion labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Emotion {
    Contempt,
    Disgust,
    Anger,
    Fear,
    Happiness,
    Sadness,
    Surprise,
    Neutral,
}

impl core::str::FromStr for Emotion {
    type Err = ScoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let e = match s.trim().to_ascii_lowercase().as_str() {
            "contempt" => Emotion::Contempt,
            "disgust" => Emotion::Disgust,
            "anger" => Emotion::Anger,
            "fear" => Emotion::Fear,
            "happiness" => Emotion::Happiness,
            "sadness" => Emotion::Sadness,
            "surprise" => Emotion::Surprise,
            "neutral" => Emotion::Neutral,
            _ => return Err(ScoreError::UnknownEmotion(s.into())),
        };
        Ok(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BiometricLabel {
    ContemptDisgust,
    AngerFear,
    HappinessSadness,
    SurpriseNeutral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BiometricType {
    pub category: u8,
    pub label: BiometricLabel,
}

impl BiometricType {
    pub fn from_label(label: BiometricLabel) -> BiometricType {
        let category = match label {
            BiometricLabel::ContemptDisgust => 1,
            BiometricLabel::AngerFear => 2,
            BiometricLabel::HappinessSadness => 3,
            BiometricLabel::SurpriseNeutral => 4,
        };
        BiometricType { category, label }
    }
}

/// Categorical method: each emotion pair shares one category.
pub fn biometric_type_categorical(emotion: Emotion) -> BiometricType {
    use Emotion::*;
    BiometricType::from_label(match emotion {
        Contempt | Disgust => BiometricLabel::ContemptDisgust,
        Anger | Fear => BiometricLabel::AngerFear,
        Happiness | Sadness => BiometricLabel::HappinessSadness,
        Surprise | Neutral => BiometricLabel::SurpriseNeutral,
    })
}

/// Continuous method: quadrants of the valence-arousal plane, with zero
/// belonging to the non-negative half-plane.
///
/// ```text
///            arousal >= 0
///   V<0: 2 (AngerFear)      | V>=0: 4 (SurpriseNeutral)
///   ------------------------+---------------------------
///   V<0: 1 (ContemptDisgust)| V>=0: 3 (HappinessSadness)
///            arousal < 0
/// ```
pub fn biometric_type_continuous(valence: f64, arousal: f64) -> Result<BiometricType, ScoreError> {
    check_range("valence", valence, -1.0, 1.0)?;
    check_range("arousal", arousal, -1.0, 1.0)?;
    let label = match (valence >= 0.0, arousal >= 0.0) {
        (false, false) => BiometricLabel::ContemptDisgust,
        (false, true) => BiometricLabel::AngerFear,
        (true, false) => BiometricLabel::HappinessSadness,
        (true, true) => BiometricLabel::SurpriseNeutral,
    };
    Ok(BiometricType::from_label(label))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeadershipInputs {
    pub education_level: u8,
    pub job_level: u8,
}

impl LeadershipInputs {
    pub fn new(education_level: u8, job_level: u8) -> Result<Self, ScoreError> {
        for (name, v) in [("education_level", education_level), ("job_level", job_level)] {
            check_range(name, v as f64, 1.0, 6.0)?;
        }
        Ok(LeadershipInputs {
            education_level,
            job_level,
        })
    }
}

/// `(latency / mu) * education * job`, clamped to `[0, 120]`.
pub fn leadership(avg_latency_ms: f64, inputs: &LeadershipInputs, model: &LatencyModel) -> Result<f64, ScoreError> {
    if !(avg_latency_ms > 0.0 && avg_latency_ms <= MAX_LATENCY_MS as f64) {
        return Err(ScoreError::Range {
            name: "avg_latency_ms",
            value: avg_latency_ms,
            lo: 0.0,
            hi: MAX_LATENCY_MS as f64,
        });
    }
    let inputs = LeadershipInputs::new(inputs.education_level, inputs.job_level)?;
    let raw = avg_latency_ms / model.mu_ms * inputs.education_level as f64 * inputs.job_level as f64;
    Ok(raw.clamp(0.0, LEADERSHIP_MAX))
}

fn unflagged(records: &[AnswerRecord]) -> impl Iterator<Item = &AnswerRecord> {
    records.iter().filter(|r| !r.flagged)
}

fn mean_unflagged(records: &[AnswerRecord], f: impl Fn(&AnswerRecord) -> f64) -> Result<f64, ScoreError> {
    let (sum, n) = unflagged(records).fold((0.0, 0usize), |(s, n), r| (s + f(r), n + 1));
    if n == 0 {
        return Err(ScoreError::AllFlagged);
    }
    Ok(sum / n as f64)
}

/// Mean recognizer confidence over records whose emotion was not disqualified.
pub fn session_confidence(records: &[AnswerRecord]) -> Result<f64, ScoreError> {
    mean_unflagged(records, |r| r.emotion.confidence)
}

/// Biometric type of a session: continuous method on mean valence and
/// arousal over unflagged records.
pub fn session_biometric_type(records: &[AnswerRecord]) -> Result<BiometricType, ScoreError> {
    let v = mean_unflagged(records, |r| r.emotion.valence)?;
    let a = mean_unflagged(records, |r| r.emotion.arousal)?;
    biometric_type_continuous(v.clamp(-1.0, 1.0), a.clamp(-1.0, 1.0))
}

/// `(rp * t) * tt * (bt * c)`.
pub fn iwi_raw(rp: f64, t: f64, tt: f64, bt: f64, c: f64) -> f64 {
    (rp * t) * tt * (bt * c)
}

/// Linear normalization onto `[0.20, 1.00]`.
pub fn iwi_pct(raw: f64) -> f64 {
    (raw / IWI_MAX).clamp(IWI_PCT_FLOOR, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultBundle {
    pub rp: RiskProfile,
    pub truthfulness: f64,
    pub airt: f64,
    pub avg_latency_ms: f64,
    pub tt: ThinkingType,
    pub leadership: f64,
    pub bt: BiometricType,
    pub confidence: f64,
    pub iwi_raw: f64,
    pub iwi_pct: f64,
}

impl ResultBundle {
    /// Assembles the bundle from already-computed parts.
    pub fn assemble(
        rp: RiskProfile,
        truthfulness: f64,
        avg_latency_ms: f64,
        tt: ThinkingType,
        leadership: f64,
        bt: BiometricType,
        confidence: f64,
    ) -> ResultBundle {
        let airt = rp.coefficient as f64 * truthfulness;
        let raw = iwi_raw(
            rp.coefficient as f64,
            truthfulness,
            tt.coefficient as f64,
            bt.category as f64,
            confidence,
        );
        ResultBundle {
            rp,
            truthfulness,
            airt,
            avg_latency_ms,
            tt,
            leadership,
            bt,
            confidence,
            iwi_raw: raw,
            iwi_pct: iwi_pct(raw),
        }
    }
}

pub fn compute_result(
    session: &Session,
    inputs: &LeadershipInputs,
    model: &LatencyModel,
) -> Result<ResultBundle, ScoreError> {
    if session.state != SessionState::Completed {
        return Err(ScoreError::NotCompleted(session.state));
    }
    let records = &session.records;
    let rp = risk_profile(records)?;
    let t = truthfulness(session.revalidations)?;
    let avg = crate::session::average_latency_ms(records).map_err(|_| ScoreError::EmptyRecords)?;
    let tt = thinking_type(avg, model)?;
    let ls = leadership(avg, inputs, model)?;
    let bt = session_biometric_type(records)?;
    let c = session_confidence(records)?;
    Ok(ResultBundle::assemble(rp, t, avg, tt, ls, bt, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::question::QuestionType;
    use crate::session::{AnswerValue, EmotionSample};
    use alloc::vec::Vec;

    fn counts(ha: u32, rd: u32, ns: u32) -> BTreeMap<Dimension, u32> {
        [(Dimension::HA, ha), (Dimension::RD, rd), (Dimension::NS, ns)]
            .into_iter()
            .collect()
    }

    fn record(granted: Dimension, confidence: f64, flagged: bool) -> AnswerRecord {
        AnswerRecord {
            question_id: "q".into(),
            qtype: QuestionType::HaNs,
            answer: AnswerValue::Yes,
            latency_ms: 3000,
            emotion: EmotionSample::new(0.2, 0.3, confidence).unwrap(),
            granted,
            flagged,
        }
    }

    #[test]
    fn profile_examples() {
        let p = RiskProfile::from_counts(counts(14, 10, 6));
        assert_eq!(
            (p.primary, p.secondary, p.coefficient),
            (Dimension::HA, Dimension::RD, 1)
        );
        assert_eq!(p.label(), "Averse Dependent");

        let p = RiskProfile::from_counts(counts(6, 12, 12));
        assert_eq!(
            (p.primary, p.secondary, p.coefficient),
            (Dimension::NS, Dimension::RD, 6)
        );

        let p = risk_profile(&[record(Dimension::NS, 1.0, false)]).unwrap();
        assert_eq!((p.primary, p.secondary), (Dimension::NS, Dimension::RD));
        assert_eq!(risk_profile(&[]), Err(ScoreError::EmptyRecords));
    }

    #[test]
    fn coefficient_table_is_a_bijection() {
        let mut seen = Vec::new();
        for p in Dimension::ALL {
            for s in Dimension::ALL {
                match profile_coefficient(p, s) {
                    Some(c) => {
                        assert_ne!(p, s);
                        seen.push(c);
                    }
                    None => assert_eq!(p, s),
                }
            }
        }
        seen.sort_unstable();
        assert_eq!(seen, [1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn truthfulness_values() {
        assert_eq!(truthfulness(0), Ok(1.0));
        assert!((truthfulness(6).unwrap() - 0.833_333).abs() < 1e-6);
        assert!((truthfulness(3).unwrap() - 30.0 / 33.0).abs() < 1e-15);
        assert_eq!(truthfulness(7), Err(ScoreError::Revalidations(7)));
        for r in 0..6 {
            assert!(truthfulness(r).unwrap() > truthfulness(r + 1).unwrap());
        }
    }

    #[test]
    fn thinking_type_examples() {
        let m = LatencyModel::default();
        let tt = |ms| thinking_type(ms, &m).unwrap();
        assert_eq!(tt(3000.0).band, Band::M);
        assert_eq!(tt(3000.0).coefficient, 3);
        assert_eq!(tt(1000.0).band, Band::XS);
        assert_eq!(tt(1000.0).coefficient, 1);
        assert!(tt(8000.0).unusual);
        assert_eq!(tt(8000.0).band, Band::XL);
        assert_eq!(tt(100.0).band, Band::XS);
        assert_eq!(tt(1500.0).band, Band::S);
        assert_eq!(tt(2500.0).band, Band::M);
        assert_eq!(tt(3500.0).band, Band::L);
        assert_eq!(tt(4500.0).band, Band::XL);
        assert_eq!(tt(4499.999).band, Band::L);
        assert!(!tt(2000.0).unusual);
        assert!(!tt(7000.0).unusual);
        assert!(tt(1999.0).unusual);
        assert!(thinking_type(0.0, &m).is_err());
        assert!(thinking_type(-5.0, &m).is_err());
    }

    #[test]
    fn categorical_biometrics() {
        let cat = |s: &str| biometric_type_categorical(s.parse().unwrap()).category;
        assert_eq!(cat("Disgust"), 1);
        assert_eq!(cat("Contempt"), 1);
        assert_eq!(cat("Fear"), 2);
        assert_eq!(cat("anger"), 2);
        assert_eq!(cat("Happiness"), 3);
        assert_eq!(cat("Sadness"), 3);
        assert_eq!(cat("Surprise"), 4);
        assert_eq!(cat("Neutral"), 4);
        assert!("Boredom".parse::<Emotion>().is_err());
    }

    #[test]
    fn continuous_biometrics() {
        let cat = |v, a| biometric_type_continuous(v, a).unwrap().category;
        assert_eq!(cat(-0.5, -0.5), 1);
        assert_eq!(cat(-0.5, 0.5), 2);
        assert_eq!(cat(0.8, -0.2), 3);
        assert_eq!(cat(0.0, 0.0), 4);
        assert!(biometric_type_continuous(1.5, 0.0).is_err());
    }

    #[test]
    fn leadership_examples() {
        let m = LatencyModel::default();
        let ls = |ms, e, j| {
            leadership(
                ms,
                &LeadershipInputs {
                    education_level: e,
                    job_level: j,
                },
                &m,
            )
        };
        assert!((ls(10_000.0, 6, 6).unwrap() - 120.0).abs() < 1e-12);
        assert_eq!(ls(3000.0, 1, 1), Ok(1.0));
        assert_eq!(ls(1500.0, 4, 2), Ok(4.0));
        assert!(ls(3000.0, 0, 1).is_err());
        assert!(ls(3000.0, 1, 7).is_err());
        assert!(ls(10_001.0, 1, 1).is_err());
        assert!(ls(0.0, 1, 1).is_err());
    }

    #[test]
    fn confidence_excludes_flagged() {
        let r = |c, f| record(Dimension::HA, c, f);
        assert_eq!(session_confidence(&[r(1.0, false), r(1.0, false)]), Ok(1.0));
        assert!((session_confidence(&[r(0.6, false), r(0.8, false)]).unwrap() - 0.7).abs() < 1e-15);
        assert_eq!(session_confidence(&[r(0.9, true), r(0.7, false)]), Ok(0.7));
        assert_eq!(session_confidence(&[r(0.9, true)]), Err(ScoreError::AllFlagged));
    }

    #[test]
    fn iwi_examples() {
        assert_eq!(iwi_raw(6.0, 1.0, 5.0, 4.0, 1.0), 120.0);
        assert_eq!(iwi_pct(120.0), 1.0);
        let raw = iwi_raw(1.0, 0.8333, 1.0, 1.0, 0.1);
        assert!((raw - 0.08333).abs() < 1e-12);
        assert_eq!(iwi_pct(raw), 0.20);
        assert_eq!(iwi_raw(3.0, 1.0, 3.0, 2.0, 0.5), 9.0);
        assert_eq!(iwi_pct(9.0), 0.20);
        assert_eq!(iwi_pct(60.0), 0.5);
    }
}
