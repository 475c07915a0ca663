//! The operations behind each CLI subcommand, returning serializable reports.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};
use srta_core::cohort::{generate_cohort, simulate_assessment, Cohort, Persona};
use srta_core::nn::{bin_count_label, evaluate, train, Dataset, EpochStats, Metrics, Mlp, StopReason};
use srta_core::{Dimension, LatencyModel, LeadershipInputs, QuestionBank, QuestionType, SessionState};

use crate::bank_file;
use crate::checkpoint::Checkpoint;
use crate::cohort_csv;
use crate::config::TrainSettings;
use crate::result_json::ResultDocument;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankSummary {
    pub questions: usize,
    pub per_type: BTreeMap<String, usize>,
}

pub fn summarize_bank(bank: &QuestionBank) -> BankSummary {
    BankSummary {
        questions: bank.len(),
        per_type: QuestionType::ALL
            .iter()
            .map(|&t| (t.to_string(), bank.count_of(t)))
            .collect(),
    }
}

pub fn validate_bank(path: &Path) -> Result<BankSummary, bank_file::BankFileError> {
    Ok(summarize_bank(&bank_file::load(path)?))
}

/// Loads `path`, or the shipped bank when absent.
pub fn bank_or_shipped(path: Option<&Path>) -> anyhow::Result<QuestionBank> {
    match path {
        Some(p) => bank_file::load(p).with_context(|| format!("bank {}", p.display())),
        None => Ok(crate::shipped_bank()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSummary {
    pub n: usize,
    pub noise: f64,
    pub seed: u64,
    pub features: usize,
    pub class_counts: BTreeMap<Dimension, usize>,
}

pub fn cohort_summary(c: &Cohort, noise: f64, seed: u64) -> CohortSummary {
    let mut class_counts: BTreeMap<Dimension, usize> = Dimension::ALL.iter().map(|&d| (d, 0)).collect();
    for l in &c.labels {
        *class_counts.entry(*l).or_default() += 1;
    }
    CohortSummary {
        n: c.labels.len(),
        noise,
        seed,
        features: c.dataset.features().first().map_or(0, Vec::len),
        class_counts,
    }
}

pub fn write_cohort(bank: &QuestionBank, n: usize, noise: f64, seed: u64, out: &Path) -> anyhow::Result<CohortSummary> {
    let cohort = generate_cohort(bank, n, noise, seed)?;
    let file = std::fs::File::create(out).with_context(|| format!("create {}", out.display()))?;
    cohort_csv::write(std::io::BufWriter::new(file), &cohort)?;
    Ok(cohort_summary(&cohort, noise, seed))
}

pub fn read_cohort(path: &Path) -> anyhow::Result<(Dataset, Vec<Dimension>)> {
    let file = std::fs::File::open(path).with_context(|| format!("open {}", path.display()))?;
    cohort_csv::read(std::io::BufReader::new(file)).with_context(|| format!("cohort {}", path.display()))
}

/// Share of `indices` whose bin-counting label matches the truth.
pub fn oracle_accuracy(data: &Dataset, labels: &[Dimension], indices: &[usize]) -> anyhow::Result<f64> {
    if indices.is_empty() {
        anyhow::bail!("no rows to score");
    }
    let mut hits = 0usize;
    for &i in indices {
        hits += usize::from(bin_count_label(&data.features()[i])? == labels[i]);
    }
    Ok(hits as f64 / indices.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub settings: TrainSettings,
    pub initial_val_mse: f64,
    pub epochs: Vec<EpochStats>,
    pub stop_reason: StopReason,
    pub best_epoch: usize,
    pub best_val_mse: f64,
    pub split_sizes: [usize; 3],
    pub test: Metrics,
    /// Bin-counting accuracy on the same test rows, the attainable ceiling.
    pub oracle_test_accuracy: f64,
}

pub fn train_on(
    data: &Dataset,
    labels: &[Dimension],
    settings: &TrainSettings,
) -> anyhow::Result<(TrainSummary, Checkpoint)> {
    let cfg = settings.train_config();
    let net = Mlp::new(&settings.layer_sizes(), settings.activation, cfg.seed)?;
    let report = train(net, data, &cfg)?;
    let test = evaluate(&report.net, data, &report.split.test)?;
    let oracle_test_accuracy = oracle_accuracy(data, labels, &report.split.test)?;
    let checkpoint = Checkpoint::from_net(&report.net, cfg.seed);
    let summary = TrainSummary {
        settings: settings.clone(),
        initial_val_mse: report.initial_val_mse,
        epochs: report.epochs,
        stop_reason: report.stop_reason,
        best_epoch: report.best_epoch,
        best_val_mse: report.best_val_mse,
        split_sizes: [
            report.split.train.len(),
            report.split.validation.len(),
            report.split.test.len(),
        ],
        test,
        oracle_test_accuracy,
    };
    Ok((summary, checkpoint))
}

pub fn load_settings(path: Option<&Path>) -> anyhow::Result<TrainSettings> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("read {}", p.display()))?;
            Ok(TrainSettings::parse(&text).with_context(|| format!("config {}", p.display()))?)
        }
        None => Ok(TrainSettings::default()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub rows: usize,
    pub metrics: Metrics,
    pub oracle_accuracy: f64,
}

pub fn eval_on(checkpoint: &Checkpoint, data: &Dataset, labels: &[Dimension]) -> anyhow::Result<EvalSummary> {
    let net = checkpoint.to_net()?;
    let all: Vec<usize> = (0..data.len()).collect();
    Ok(EvalSummary {
        rows: data.len(),
        metrics: evaluate(&net, data, &all)?,
        oracle_accuracy: oracle_accuracy(data, labels, &all)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub persona_seed: u64,
    pub session_seed: u64,
    pub persona: Persona,
    pub state: SessionState,
    pub records: usize,
    pub revalidations: u32,
    pub result: Option<ResultDocument>,
}

pub fn simulate(
    bank: &QuestionBank,
    persona_seed: u64,
    session_seed: u64,
    inputs: &LeadershipInputs,
) -> anyhow::Result<SimulationSummary> {
    let run = simulate_assessment(bank, persona_seed, session_seed, inputs, &LatencyModel::default())?;
    Ok(SimulationSummary {
        persona_seed,
        session_seed,
        persona: run.persona,
        state: run.session.state,
        records: run.session.records.len(),
        revalidations: run.session.revalidations,
        result: run.result.as_ref().map(ResultDocument::from),
    })
}
