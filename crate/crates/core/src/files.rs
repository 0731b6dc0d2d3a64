//! JSON config and transcript files.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::correction::CorrectionStrategy;
use crate::error::{Error, Result};
use crate::oracle::oracle_state;
use crate::protocol::{
    run_with, Event, OperationSpec, ProtocolConfig, RunResult, Scenario, Target,
};
use crate::statevector::{MeasurementBasis, Outcome, OutcomeSource, Pauli};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetFile {
    pub alpha: Complex64,
    pub beta: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub target: TargetFile,
    pub controllers: Vec<Vec<OperationSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forced: Option<String>,
}

impl ConfigFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let target = Target::new(self.target.alpha, self.target.beta)?;
        Scenario::from_ops(target, self.controllers.clone())
    }

    /// Without `seed` or `forced`, outcomes are sampled with seed 0.
    pub fn to_config(&self) -> Result<ProtocolConfig> {
        let scenario = self.scenario()?;
        let outcomes = match (&self.forced, self.seed) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "seed and forced are mutually exclusive".into(),
                ))
            }
            (Some(forced), None) => parse_forced(forced, scenario.num_controllers())?,
            (None, seed) => OutcomeSource::sampled(seed.unwrap_or(0)),
        };
        Ok(scenario.with_outcomes(outcomes))
    }
}

/// Checks the `MR_B` then per-controller layout, e.g. `"0+-"` for N = 2.
pub fn parse_forced(forced: &str, num_controllers: usize) -> Result<OutcomeSource> {
    let source = OutcomeSource::forced_from_str(forced)?;
    let outcomes: Vec<Outcome> = forced.chars().filter_map(Outcome::from_symbol).collect();
    if outcomes.len() != num_controllers + 1 {
        return Err(Error::Config(format!(
            "forced string {forced:?} has {} outcomes, expected {}",
            outcomes.len(),
            num_controllers + 1
        )));
    }
    let layout_ok = outcomes.iter().enumerate().all(|(i, o)| {
        let want = if i == 0 {
            MeasurementBasis::Z
        } else {
            MeasurementBasis::X
        };
        o.basis() == want
    });
    if !layout_ok {
        return Err(Error::BadForcedString(forced.to_string()));
    }
    Ok(source)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub final_qb: Vec<Complex64>,
    pub correction: Pauli,
    pub oracle: Vec<Complex64>,
    pub overlap: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptFile {
    pub config: ConfigFile,
    pub events: Vec<Event>,
    pub result: ResultFile,
}

impl TranscriptFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("transcript serializes");
        s.push('\n');
        s
    }

    pub fn events_json(&self) -> String {
        events_json(&self.events)
    }

    /// Outcomes recorded in the measurement events, as a forced string.
    pub fn forced_string(&self) -> String {
        self.events
            .iter()
            .filter_map(|e| match e {
                Event::Measurement(m) => Some(m.outcome.symbol()),
                _ => None,
            })
            .collect()
    }

    /// Name of the correction strategy recorded in the transcript, if any.
    pub fn strategy(&self) -> Option<&str> {
        self.events.iter().find_map(|e| match e {
            Event::Correction { strategy, .. } => Some(strategy.as_str()),
            _ => None,
        })
    }

    /// The echoed config with its outcome source replaced by the recorded
    /// outcomes.
    pub fn replay_config(&self) -> Result<ProtocolConfig> {
        let mut config = self.config.clone();
        config.seed = None;
        config.forced = Some(self.forced_string());
        config.to_config()
    }
}

pub fn events_json(events: &[Event]) -> String {
    serde_json::to_string(events).expect("events serialize")
}

pub struct Execution {
    pub run: RunResult,
    pub file: TranscriptFile,
}

/// Runs `config_file`, checks the result against the oracle, and packages
/// everything as a transcript.
pub fn execute(config_file: &ConfigFile, strategy: &dyn CorrectionStrategy) -> Result<Execution> {
    let config = config_file.to_config()?;
    execute_config(config_file.clone(), &config, strategy)
}

pub fn execute_config(
    echo: ConfigFile,
    config: &ProtocolConfig,
    strategy: &dyn CorrectionStrategy,
) -> Result<Execution> {
    let run = run_with(config, strategy)?;
    let oracle = oracle_state(&config.scenario)?;
    let overlap = run.final_qb.overlap(&oracle)?;
    let file = TranscriptFile {
        config: echo,
        events: run.transcript.events.clone(),
        result: ResultFile {
            final_qb: run.final_qb.amplitudes().to_vec(),
            correction: run.correction,
            oracle: oracle.amplitudes().to_vec(),
            overlap,
            pass: overlap >= 1.0 - crate::statevector::COMPARISON_TOL,
        },
    };
    Ok(Execution { run, file })
}
