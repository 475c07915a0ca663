use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use srta::checkpoint::Checkpoint;
use srta::commands;
use srta::qr::SigningKey;
use srta::result_json::ResultDocument;
use srta::service::{self, AppState, ServiceConfig};
use srta::{bank_file, result_json};
use srta_core::{LeadershipInputs, QuestionBank};

#[derive(Parser)]
#[command(name = "srta", version, about = "Situational risk tolerance assessment toolkit")]
struct Cli {
    /// Print one JSON document instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Question bank files.
    #[command(subcommand)]
    Bank(BankCommand),
    /// Synthetic cohorts.
    #[command(subcommand)]
    Cohort(CohortCommand),
    /// Train the classifier on a cohort CSV.
    Train {
        #[arg(long)]
        cohort: PathBuf,
        /// TOML training configuration; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_checkpoint: PathBuf,
    },
    /// Score a checkpoint on every row of a cohort CSV.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        cohort: PathBuf,
    },
    /// Run one synthetic assessment and print its result.
    Simulate {
        #[arg(long)]
        persona_seed: u64,
        /// Defaults to the persona seed.
        #[arg(long)]
        session_seed: Option<u64>,
        /// Bank file; the shipped bank when omitted.
        #[arg(long)]
        bank: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        education_level: u8,
        #[arg(long, default_value_t = 3)]
        job_level: u8,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = service::ENV_ADDR, default_value = service::DEFAULT_ADDR)]
        addr: SocketAddr,
        #[arg(long, env = service::ENV_DATA_DIR, default_value = "srta-data")]
        data_dir: PathBuf,
        /// Hex signing key; created when missing. Defaults to `<data-dir>/signing.key`.
        #[arg(long, env = service::ENV_KEY_FILE)]
        key_file: Option<PathBuf>,
        /// Directory of static assets served outside `/v1`.
        #[arg(long, env = service::ENV_STATIC_DIR)]
        static_dir: Option<PathBuf>,
        #[arg(long)]
        bank: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum BankCommand {
    /// Check a bank file and report per-type counts.
    Validate { file: PathBuf },
    /// Write a synthetic placeholder bank.
    Generate {
        #[arg(long, default_value_t = 200)]
        per_type: usize,
        #[arg(long, value_enum, default_value_t = BankFormat::Text)]
        format: BankFormat,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BankFormat {
    Text,
    Json,
}

#[derive(Subcommand)]
enum CohortCommand {
    /// Generate a labeled cohort and export it as CSV.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        noise: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        bank: Option<PathBuf>,
    },
}

fn print_json<T: Serialize>(value: &T) {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    // A closed pipe (`| head`) is not an error worth reporting.
    let _ = writeln!(std::io::stdout(), "{text}");
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let json = cli.json;
    match cli.command {
        Command::Bank(BankCommand::Validate { file }) => {
            let summary = commands::validate_bank(&file).with_context(|| format!("{}", file.display()))?;
            if json {
                print_json(&serde_json::json!({ "valid": true, "summary": summary }));
            } else {
                println!("{}: valid, {} questions", file.display(), summary.questions);
                for (t, n) in &summary.per_type {
                    println!("  {t}: {n}");
                }
            }
        }
        Command::Bank(BankCommand::Generate { per_type, format, out }) => {
            let bank = QuestionBank::synthetic(per_type)?;
            let text = match format {
                BankFormat::Text => bank_file::to_text(&bank),
                BankFormat::Json => bank_file::to_json(&bank) + "\n",
            };
            std::fs::write(&out, text).with_context(|| format!("write {}", out.display()))?;
            let summary = commands::summarize_bank(&bank);
            if json {
                print_json(&summary);
            } else {
                println!("wrote {} questions to {}", summary.questions, out.display());
            }
        }
        Command::Cohort(CohortCommand::Gen {
            n,
            noise,
            seed,
            out,
            bank,
        }) => {
            let bank = commands::bank_or_shipped(bank.as_deref())?;
            let summary = commands::write_cohort(&bank, n, noise, seed, &out)?;
            if json {
                print_json(&summary);
            } else {
                println!("wrote {} sessions to {}", summary.n, out.display());
                for (d, c) in &summary.class_counts {
                    println!("  {}: {c}", d.code());
                }
            }
        }
        Command::Train {
            cohort,
            config,
            out_checkpoint,
        } => {
            let settings = commands::load_settings(config.as_deref())?;
            let (data, labels) = commands::read_cohort(&cohort)?;
            let (summary, checkpoint) = commands::train_on(&data, &labels, &settings)?;
            checkpoint
                .save(&out_checkpoint)
                .with_context(|| format!("write {}", out_checkpoint.display()))?;
            if json {
                print_json(&summary);
            } else {
                println!("epoch 0 val_mse={:.6}", summary.initial_val_mse);
                for e in &summary.epochs {
                    println!(
                        "epoch {} train_mse={:.6} val_mse={:.6}",
                        e.epoch, e.train_mse, e.val_mse
                    );
                }
                println!(
                    "stopped: {:?} after {} epochs, best epoch {} (val_mse={:.6})",
                    summary.stop_reason,
                    summary.epochs.len(),
                    summary.best_epoch,
                    summary.best_val_mse
                );
                print_metrics("test", &summary.test);
                println!("oracle test accuracy: {:.4}", summary.oracle_test_accuracy);
                println!("checkpoint: {}", out_checkpoint.display());
            }
        }
        Command::Eval { checkpoint, cohort } => {
            let checkpoint = Checkpoint::load(&checkpoint).with_context(|| format!("{}", checkpoint.display()))?;
            let (data, labels) = commands::read_cohort(&cohort)?;
            let summary = commands::eval_on(&checkpoint, &data, &labels)?;
            if json {
                print_json(&summary);
            } else {
                println!("rows: {}", summary.rows);
                print_metrics("eval", &summary.metrics);
                println!("oracle accuracy: {:.4}", summary.oracle_accuracy);
            }
        }
        Command::Simulate {
            persona_seed,
            session_seed,
            bank,
            education_level,
            job_level,
        } => {
            let bank = commands::bank_or_shipped(bank.as_deref())?;
            let inputs = LeadershipInputs::new(education_level, job_level)?;
            let summary = commands::simulate(&bank, persona_seed, session_seed.unwrap_or(persona_seed), &inputs)?;
            if json {
                print_json(&summary);
            } else {
                println!(
                    "session {:?}: {} records, {} revalidations",
                    summary.state, summary.records, summary.revalidations
                );
                if let Some(r) = &summary.result {
                    print_result(r);
                }
            }
        }
        Command::Serve {
            addr,
            data_dir,
            key_file,
            static_dir,
            bank,
        } => {
            let bank = commands::bank_or_shipped(bank.as_deref())?;
            let key_file = key_file.unwrap_or_else(|| data_dir.join("signing.key"));
            let key = SigningKey::load_or_create(&key_file).with_context(|| format!("{}", key_file.display()))?;
            let mut config = ServiceConfig::new(data_dir, bank, key);
            config.static_dir = static_dir;
            let app = AppState::open(config)?;
            tokio::runtime::Runtime::new()?.block_on(service::serve(addr, app))?;
        }
    }
    Ok(())
}

fn print_metrics(name: &str, m: &srta_core::nn::Metrics) {
    println!("{name} accuracy: {:.4}", m.accuracy);
    println!("{name} macro F1: {:.4}", m.macro_f1);
    for (i, label) in ["HA", "RD", "NS"].iter().enumerate() {
        println!(
            "  {label}: precision {:.4} recall {:.4} F1 {:.4}",
            m.precision[i], m.recall[i], m.f1[i]
        );
    }
    println!("  confusion (rows truth HA/RD/NS): {:?}", m.confusion);
}

fn print_result(r: &ResultDocument) {
    let f = result_json::round4;
    println!(
        "risk profile: {} (RP {})",
        r.risk_profile.label, r.risk_profile.coefficient
    );
    println!("truthfulness: {}", f(r.truthfulness));
    println!("AIRT: {}", f(r.airt));
    println!(
        "thinking type: {:?} (TT {}, avg latency {} ms{})",
        r.thinking_type.band,
        r.thinking_type.coefficient,
        f(r.avg_latency_ms),
        if r.thinking_type.unusual { ", unusual" } else { "" }
    );
    println!("leadership: {}", f(r.leadership));
    println!(
        "biometric type: {:?} (BT {})",
        r.biometric_type.label, r.biometric_type.category
    );
    println!("confidence: {}", f(r.confidence));
    println!("IWI: {} raw, {}%", f(r.iwi_raw), f(r.iwi_pct * 100.0));
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json = cli.json;
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = format!("{e:#}");
            if json {
                print_json(&serde_json::json!({ "error": message }));
            }
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
