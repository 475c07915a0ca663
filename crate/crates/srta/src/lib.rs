//! File formats, persistence, signed results and the HTTP service around
//! the `srta-core` assessment engine.

pub mod bank_file;
pub mod checkpoint;
pub mod cohort_csv;
pub mod commands;
pub mod config;
pub mod event_log;
pub mod qr;
pub mod result_json;
pub mod service;

use srta_core::QuestionBank;

/// The shipped 1,200-item synthetic bank in line format.
pub const SHIPPED_BANK: &str = include_str!("../../../data/bank.txt");

pub fn shipped_bank() -> QuestionBank {
    bank_file::parse_text(SHIPPED_BANK).expect("shipped bank is valid")
}
