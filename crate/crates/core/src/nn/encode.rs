use alloc::vec::Vec;

use alloc::collections::BTreeMap;

use super::{argmax, NnError};
use crate::question::{Dimension, QuestionType};
use crate::scoring::RiskProfile;
use crate::session::{granted_dimension, AnswerRecord, AnswerValue};
use crate::STANDARD_QUESTIONS;

/// One-hot question type (6), answer (+1 Yes / -1 No), valence, arousal.
pub const FEATURES_PER_QUESTION: usize = 9;
pub const INPUT_SIZE: usize = STANDARD_QUESTIONS * FEATURES_PER_QUESTION;

/// Flattens 30 standard records into 270 features.
///
/// Blocks are grouped by question type in `QuestionType::ALL` order (HA/NS,
/// RD/HA, NS/RD, NS/HA, HA/RD, RD/NS), keeping questionnaire order within a
/// type. With standard quotas every block position then carries a fixed type,
/// so a block's answer maps to one granted dimension.
pub fn encode_session(records: &[AnswerRecord]) -> Result<Vec<f64>, NnError> {
    if records.len() != STANDARD_QUESTIONS {
        return Err(NnError::RecordCount {
            expected: STANDARD_QUESTIONS,
            found: records.len(),
        });
    }
    let mut ordered: Vec<&AnswerRecord> = records.iter().collect();
    ordered.sort_by_key(|r| r.qtype.index());
    let mut out = Vec::with_capacity(INPUT_SIZE);
    for r in ordered {
        let mut onehot = [0.0; 6];
        onehot[r.qtype.index()] = 1.0;
        out.extend_from_slice(&onehot);
        out.push(match r.answer {
            AnswerValue::Yes => 1.0,
            AnswerValue::No => -1.0,
        });
        out.push(r.emotion.valence);
        out.push(r.emotion.arousal);
    }
    Ok(out)
}

/// Recovers each block's (type, answer) from an encoded row.
pub fn decode_blocks(features: &[f64]) -> Result<Vec<(QuestionType, AnswerValue)>, NnError> {
    if features.len() != INPUT_SIZE {
        return Err(NnError::Shape {
            expected: INPUT_SIZE,
            found: features.len(),
        });
    }
    Ok(features
        .chunks(FEATURES_PER_QUESTION)
        .map(|block| {
            let qtype = QuestionType::ALL[argmax(&block[..6])];
            let answer = if block[6] > 0.0 {
                AnswerValue::Yes
            } else {
                AnswerValue::No
            };
            (qtype, answer)
        })
        .collect())
}

/// Bin-counting label of an encoded row: the primary dimension of the
/// granted-dimension tally.
pub fn bin_count_label(features: &[f64]) -> Result<Dimension, NnError> {
    let mut counts: BTreeMap<Dimension, u32> = Dimension::ALL.iter().map(|&d| (d, 0)).collect();
    for (qtype, answer) in decode_blocks(features)? {
        *counts.entry(granted_dimension(qtype, answer)).or_default() += 1;
    }
    Ok(RiskProfile::from_counts(counts).primary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::question::{Dimension, QuestionType};
    use crate::session::{granted_dimension, EmotionSample};
    use alloc::vec;

    fn rec(qtype: QuestionType, answer: AnswerValue, v: f64, a: f64) -> AnswerRecord {
        AnswerRecord {
            question_id: "x".into(),
            qtype,
            answer,
            latency_ms: 3000,
            emotion: EmotionSample::new(v, a, 1.0).unwrap(),
            granted: granted_dimension(qtype, answer),
            flagged: false,
        }
    }

    #[test]
    fn first_block_layout() {
        let mut records = vec![rec(QuestionType::HaNs, AnswerValue::Yes, 0.0, 0.0)];
        records.extend((1..30).map(|_| rec(QuestionType::RdNs, AnswerValue::No, 0.2, -0.3)));
        let x = encode_session(&records).unwrap();
        assert_eq!(x.len(), 270);
        assert_eq!(&x[..9], &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(&x[9..18], &[0.0, 0.0, 0.0, 0.0, 0.0, 1.0, -1.0, 0.2, -0.3]);
    }

    #[test]
    fn all_no_blocks_end_minus_one_zero_zero() {
        let records: Vec<_> = (0..30)
            .map(|i| rec(QuestionType::ALL[i % 6], AnswerValue::No, 0.0, 0.0))
            .collect();
        let x = encode_session(&records).unwrap();
        for block in x.chunks(9) {
            assert_eq!(&block[6..], &[-1.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn blocks_grouped_by_type_stably() {
        let mut records = vec![rec(QuestionType::RdNs, AnswerValue::Yes, 0.1, 0.0)];
        records.push(rec(QuestionType::HaNs, AnswerValue::No, 0.2, 0.0));
        records.push(rec(QuestionType::RdNs, AnswerValue::No, 0.3, 0.0));
        records.extend((3..30).map(|_| rec(QuestionType::NsRd, AnswerValue::Yes, 0.0, 0.0)));
        let x = encode_session(&records).unwrap();
        assert_eq!(&x[..9], &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.2, 0.0]);
        assert_eq!(&x[252..261], &[0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.1, 0.0]);
        assert_eq!(&x[261..], &[0.0, 0.0, 0.0, 0.0, 0.0, 1.0, -1.0, 0.3, 0.0]);
    }

    #[test]
    fn wrong_length_rejected() {
        let records: Vec<_> = (0..29)
            .map(|_| rec(QuestionType::HaNs, AnswerValue::Yes, 0.0, 0.0))
            .collect();
        assert_eq!(
            encode_session(&records),
            Err(NnError::RecordCount {
                expected: 30,
                found: 29
            })
        );
    }

    #[test]
    fn prefix_is_injective_on_type_and_answer() {
        let mut seen = Vec::new();
        for t in QuestionType::ALL {
            for a in [AnswerValue::Yes, AnswerValue::No] {
                let records: Vec<_> = (0..30).map(|_| rec(t, a, 0.0, 0.0)).collect();
                let x = encode_session(&records).unwrap();
                let prefix = x[..7].to_vec();
                assert!(!seen.contains(&prefix));
                seen.push(prefix);
            }
        }
        assert_eq!(seen.len(), 12);
        let _ = Dimension::HA;
    }
}
