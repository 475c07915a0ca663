//! Cohort export: a header row `label,x000..x269`, then one comma-separated
//! row per session with the label code (HA, NS, RD) and its features.

use std::io::{Read, Write};

use srta_core::cohort::Cohort;
use srta_core::nn::{Dataset, NnError, INPUT_SIZE};
use srta_core::Dimension;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CohortCsvError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("header: {0}")]
    Header(String),
    #[error("dataset: {0}")]
    Dataset(#[from] NnError),
}

pub fn header() -> Vec<String> {
    std::iter::once("label".to_string())
        .chain((0..INPUT_SIZE).map(|i| format!("x{i:03}")))
        .collect()
}

pub fn write<W: Write>(out: W, cohort: &Cohort) -> Result<(), CohortCsvError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header())?;
    for (row, label) in cohort.dataset.features().iter().zip(&cohort.labels) {
        // `Display` for f64 is the shortest string that parses back exactly.
        let fields = std::iter::once(label.code().to_string()).chain(row.iter().map(|x| x.to_string()));
        w.write_record(fields)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a cohort back; targets are rebuilt from the label column.
pub fn read<R: Read>(input: R) -> Result<(Dataset, Vec<Dimension>), CohortCsvError> {
    let mut r = csv::Reader::from_reader(input);
    let expected = header();
    let found: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if found != expected {
        return Err(CohortCsvError::Header(format!(
            "expected {} columns `label,x000..x{:03}`",
            expected.len(),
            INPUT_SIZE - 1
        )));
    }
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let row = i + 2;
        let rec = rec?;
        let err = |message: String| CohortCsvError::Row { row, message };
        let label: Dimension = match &rec[0] {
            "HA" => Dimension::HA,
            "NS" => Dimension::NS,
            "RD" => Dimension::RD,
            other => return Err(err(format!("unknown label `{other}`"))),
        };
        let x = rec
            .iter()
            .skip(1)
            .map(|f| f.parse::<f64>().map_err(|e| err(format!("`{f}`: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        features.push(x);
        labels.push(label);
    }
    let dataset = Dataset::from_labels(features, &labels)?;
    Ok((dataset, labels))
}
