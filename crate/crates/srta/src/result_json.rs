//! The published JSON shape of a result: fixed field names, scores rounded
//! half-to-even to four decimals.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use srta_core::scoring::{Band, BiometricLabel};
use srta_core::{Dimension, ResultBundle};

const SCALE: f64 = 1e4;

/// Rounds the binary value, so `0.00015` (stored just below the tie) gives
/// `0.0001`.
pub fn round4(x: f64) -> f64 {
    (x * SCALE).round_ties_even() / SCALE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskProfileDoc {
    pub primary: Dimension,
    pub secondary: Dimension,
    pub label: String,
    pub coefficient: u8,
    pub bins: BTreeMap<Dimension, u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThinkingTypeDoc {
    pub band: Band,
    pub coefficient: u8,
    pub unusual: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiometricTypeDoc {
    pub category: u8,
    pub label: BiometricLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub risk_profile: RiskProfileDoc,
    pub truthfulness: f64,
    pub airt: f64,
    pub avg_latency_ms: f64,
    pub thinking_type: ThinkingTypeDoc,
    pub leadership: f64,
    pub biometric_type: BiometricTypeDoc,
    pub confidence: f64,
    pub iwi_raw: f64,
    pub iwi_pct: f64,
}

impl From<&ResultBundle> for ResultDocument {
    fn from(r: &ResultBundle) -> Self {
        ResultDocument {
            risk_profile: RiskProfileDoc {
                primary: r.rp.primary,
                secondary: r.rp.secondary,
                label: r.rp.label(),
                coefficient: r.rp.coefficient,
                bins: r.rp.bin_counts.clone(),
            },
            truthfulness: round4(r.truthfulness),
            airt: round4(r.airt),
            avg_latency_ms: round4(r.avg_latency_ms),
            thinking_type: ThinkingTypeDoc {
                band: r.tt.band,
                coefficient: r.tt.coefficient,
                unusual: r.tt.unusual,
            },
            leadership: round4(r.leadership),
            biometric_type: BiometricTypeDoc {
                category: r.bt.category,
                label: r.bt.label,
            },
            confidence: round4(r.confidence),
            iwi_raw: round4(r.iwi_raw),
            iwi_pct: round4(r.iwi_pct),
        }
    }
}

/// Pretty-printed document, newline-terminated.
pub fn to_json(r: &ResultBundle) -> String {
    let mut s = serde_json::to_string_pretty(&ResultDocument::from(r)).expect("document serializes");
    s.push('\n');
    s
}
