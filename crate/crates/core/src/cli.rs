//! The `mqrc` command line.
//!
//! Exit codes are shared by every subcommand: 0 verified, 1 verification
//! failure, 2 usage or input error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::correction::{StrategyRegistry, DEFAULT_STRATEGY};
use crate::error::Error;
use crate::files::{events_json, execute, execute_config, ConfigFile, TranscriptFile};
use crate::oracle::{
    collapse_table, derive_table, reference_table1, reference_table2, sweep, SweepConfig,
    DEFAULT_BRANCH_BOUND,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "mqrc",
    version,
    about = "Multiparty quantum remote control simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Execute one protocol run from a JSON config and check it against the oracle.
    Run {
        config: PathBuf,
        /// Write the transcript here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Correction strategy name.
        #[arg(long, default_value = DEFAULT_STRATEGY)]
        strategy: String,
    },
    /// Re-run a transcript with its recorded outcomes and compare events byte for byte.
    Replay {
        transcript: PathBuf,
        /// Write the regenerated transcript here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Enumerate every measurement branch over random scenarios of each shape.
    Verify {
        #[arg(long, default_value_t = 4)]
        max_controllers: usize,
        #[arg(long, default_value_t = 3)]
        max_ops: usize,
        #[arg(long, default_value_t = 50)]
        draws: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = DEFAULT_STRATEGY)]
        strategy: String,
        /// Use the deliberately broken correction rule (negative control).
        #[arg(long)]
        sabotage: bool,
    },
    /// Derive the two-controller and parity correction tables and compare
    /// them with the published ones.
    Table {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// List the registered correction strategies.
    Strategies,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    let registry = StrategyRegistry::default();
    let outcome = match cli.command {
        Command::Run {
            config,
            out: path,
            strategy,
        } => cmd_run(&registry, &config, path.as_deref(), &strategy, out),
        Command::Replay {
            transcript,
            out: path,
        } => cmd_replay(&registry, &transcript, path.as_deref(), out),
        Command::Verify {
            max_controllers,
            max_ops,
            draws,
            seed,
            strategy,
            sabotage,
        } => {
            let strategy = if sabotage {
                "sabotage"
            } else {
                strategy.as_str()
            };
            let sweep_config = SweepConfig {
                max_controllers,
                max_ops,
                draws,
                seed,
                bound: DEFAULT_BRANCH_BOUND,
            };
            cmd_verify(&registry, &sweep_config, strategy, out)
        }
        Command::Table { seed } => cmd_table(seed, out),
        Command::Strategies => {
            for s in registry.iter() {
                let _ = writeln!(out, "{:<18} {}", s.name(), s.description());
            }
            Ok(EXIT_OK)
        }
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn read(path: &std::path::Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn write_file(path: &std::path::Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn cmd_run(
    registry: &StrategyRegistry,
    config_path: &std::path::Path,
    out_path: Option<&std::path::Path>,
    strategy: &str,
    out: &mut dyn Write,
) -> Result<i32, Error> {
    let strategy = registry.get(strategy)?;
    let config = ConfigFile::from_json(&read(config_path)?)?;
    let exec = execute(&config, strategy.as_ref())?;
    let text = exec.file.to_json();
    let result = &exec.file.result;
    match out_path {
        Some(path) => {
            write_file(path, &text)?;
            let _ = writeln!(
                out,
                "outcomes {} correction {} overlap {:.12} {}",
                exec.file.forced_string(),
                result.correction,
                result.overlap,
                if result.pass { "PASS" } else { "FAIL" }
            );
        }
        None => {
            let _ = out.write_all(text.as_bytes());
        }
    }
    Ok(if result.pass { EXIT_OK } else { EXIT_FAIL })
}

fn cmd_replay(
    registry: &StrategyRegistry,
    transcript_path: &std::path::Path,
    out_path: Option<&std::path::Path>,
    out: &mut dyn Write,
) -> Result<i32, Error> {
    let original = TranscriptFile::from_json(&read(transcript_path)?)?;
    let strategy = registry.get(original.strategy().unwrap_or(DEFAULT_STRATEGY))?;
    let config = original.replay_config()?;
    let exec = execute_config(original.config.clone(), &config, strategy.as_ref())?;
    if let Some(path) = out_path {
        write_file(path, &exec.file.to_json())?;
    }
    let identical = events_json(&exec.file.events) == original.events_json();
    let _ = writeln!(
        out,
        "replayed {} events with outcomes {}: {}",
        exec.file.events.len(),
        original.forced_string(),
        if identical { "identical" } else { "DIFFERENT" }
    );
    Ok(if identical && exec.file.result.pass {
        EXIT_OK
    } else {
        EXIT_FAIL
    })
}

fn cmd_verify(
    registry: &StrategyRegistry,
    config: &SweepConfig,
    strategy: &str,
    out: &mut dyn Write,
) -> Result<i32, Error> {
    let strategy = registry.get(strategy)?;
    let reports = sweep(config, strategy.as_ref())?;
    let mut failed = 0;
    let mut branches = 0;
    for shape in &reports {
        branches += shape.branch_count();
        failed += shape.failed_branches();
        let _ = writeln!(
            out,
            "{}: {} configs, {} branches, min overlap {:.12}, {}",
            shape.shape,
            shape.reports.len(),
            shape.branch_count(),
            shape.min_overlap(),
            if shape.all_pass() { "pass" } else { "FAIL" }
        );
        for report in shape.reports.iter().filter(|r| !r.all_pass) {
            for b in report.failures() {
                let _ = writeln!(
                    out,
                    "  failing branch {} of {}: correction {} overlap {:.12}",
                    b.outcomes, report.summary, b.correction, b.overlap
                );
            }
        }
    }
    if failed == 0 {
        let _ = writeln!(
            out,
            "all branches pass ({} shapes, {branches} branches, strategy {})",
            reports.len(),
            strategy.name()
        );
        Ok(EXIT_OK)
    } else {
        let _ = writeln!(
            out,
            "{failed} of {branches} branches failed (strategy {})",
            strategy.name()
        );
        Ok(EXIT_FAIL)
    }
}

fn cmd_table(seed: u64, out: &mut dyn Write) -> Result<i32, Error> {
    let derived = derive_table(seed)?;
    let reference = reference_table1();
    let mut mismatches = Vec::new();
    let _ = writeln!(out, "Two controllers, MR_B = 0");
    let _ = writeln!(out, "U_A U_C MR_A MR_C U_b");
    for (row, want) in derived.iter().zip(&reference) {
        let ok = row == want;
        let _ = writeln!(out, "{row}{}", if ok { "" } else { "   MISMATCH" });
        if !ok {
            mismatches.push(format!("derived {row} expected {want}"));
        }
    }
    let collapsed = collapse_table(&derived)?;
    let _ = writeln!(out);
    let _ = writeln!(out, "Type parity, minus parity");
    let _ = writeln!(out, "C  MR  U_b");
    for (key, pauli) in &collapsed {
        let _ = writeln!(
            out,
            "{}  {}   {}",
            key.type_parity,
            key.minus_parity,
            pauli.symbol()
        );
    }
    if collapsed != reference_table2() {
        mismatches.push("parity table differs from the reference".into());
    }
    if mismatches.is_empty() {
        let _ = writeln!(out, "tables match");
        Ok(EXIT_OK)
    } else {
        for m in &mismatches {
            let _ = writeln!(out, "{m}");
        }
        Ok(EXIT_FAIL)
    }
}
