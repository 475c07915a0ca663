//! Question bank files: `id|type|M-or-m|text` lines or a JSON array.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use srta_core::question::BankError;
use srta_core::{Question, QuestionBank, QuestionType};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BankFileError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("record {index}: {message}")]
    Record { index: usize, message: String },
    #[error("invalid JSON bank: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Bank(#[from] BankError),
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// One entry of the JSON form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BankRecord {
    pub id: String,
    #[serde(rename = "type")]
    pub qtype: String,
    /// `"M"` for major types, `"m"` for minor.
    pub class: String,
    pub text: String,
}

fn check_class(qtype: QuestionType, class: &str) -> Result<(), String> {
    let expected = if qtype.is_major() { "M" } else { "m" };
    match class {
        "M" | "m" if class == expected => Ok(()),
        "M" | "m" => Err(format!("class `{class}` does not match {qtype}, expected `{expected}`")),
        other => Err(format!("class must be `M` or `m`, found `{other}`")),
    }
}

fn to_question(id: &str, qtype: &str, class: &str, text: &str) -> Result<Question, String> {
    let id = id.trim();
    if id.is_empty() {
        return Err("empty id".into());
    }
    let qtype: QuestionType = qtype
        .trim()
        .parse()
        .map_err(|_| format!("unknown question type `{}`", qtype.trim()))?;
    check_class(qtype, class.trim())?;
    let text = text.trim();
    if text.is_empty() {
        return Err(format!("question `{id}` has empty text"));
    }
    Ok(Question::new(id, text, qtype))
}

/// Tracks first-seen locations so duplicates are reported with both.
#[derive(Default)]
struct Ids(HashMap<String, usize>);

impl Ids {
    fn insert(&mut self, id: &str, at: usize) -> Result<(), String> {
        match self.0.insert(id.to_string(), at) {
            Some(first) => Err(format!("duplicate id `{id}` (first seen at {first})")),
            None => Ok(()),
        }
    }
}

/// Parses the line format. Blank lines and `#` comments are skipped; the
/// text field is everything after the third `|`.
pub fn parse_text(input: &str) -> Result<QuestionBank, BankFileError> {
    let mut questions = Vec::new();
    let mut ids = Ids::default();
    for (i, raw) in input.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let err = |message: String| BankFileError::Line { line, message };
        let fields: Vec<&str> = trimmed.splitn(4, '|').collect();
        let [id, qtype, class, text] = fields[..] else {
            return Err(err(format!("expected 4 `|`-separated fields, found {}", fields.len())));
        };
        let q = to_question(id, qtype, class, text).map_err(err)?;
        ids.insert(&q.id, line).map_err(err)?;
        questions.push(q);
    }
    Ok(QuestionBank::new(questions)?)
}

/// Parses the JSON array form; record numbers are 1-based.
pub fn parse_json(input: &str) -> Result<QuestionBank, BankFileError> {
    let records: Vec<BankRecord> = serde_json::from_str(input)?;
    let mut ids = Ids::default();
    let mut questions = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        let index = i + 1;
        let err = |message: String| BankFileError::Record { index, message };
        let q = to_question(&r.id, &r.qtype, &r.class, &r.text).map_err(err)?;
        ids.insert(&q.id, index).map_err(err)?;
        questions.push(q);
    }
    Ok(QuestionBank::new(questions)?)
}

/// Picks the JSON form when the first non-blank character is `[`.
pub fn parse(input: &str) -> Result<QuestionBank, BankFileError> {
    if input.trim_start().starts_with('[') {
        parse_json(input)
    } else {
        parse_text(input)
    }
}

pub fn load(path: &Path) -> Result<QuestionBank, BankFileError> {
    let input = std::fs::read_to_string(path).map_err(|source| BankFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse(&input)
}

fn class_of(q: &Question) -> &'static str {
    if q.is_major() {
        "M"
    } else {
        "m"
    }
}

/// Writes the line format. Line breaks inside text are folded to spaces.
pub fn to_text(bank: &QuestionBank) -> String {
    let mut out = String::from("# id|type|M-or-m|text\n");
    for q in bank.questions() {
        let text = q.text.replace(['\n', '\r'], " ");
        let _ = writeln!(out, "{}|{}|{}|{}", q.id, q.qtype, class_of(q), text);
    }
    out
}

pub fn to_json(bank: &QuestionBank) -> String {
    let records: Vec<BankRecord> = bank
        .questions()
        .iter()
        .map(|q| BankRecord {
            id: q.id.clone(),
            qtype: q.qtype.to_string(),
            class: class_of(q).to_string(),
            text: q.text.clone(),
        })
        .collect();
    serde_json::to_string_pretty(&records).expect("bank records serialize")
}
