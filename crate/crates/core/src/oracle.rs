//! Ground truth for the protocol: the requested operations multiplied out as
//! a 2×2 matrix and applied straight to the target, compared against every
//! measurement branch of a protocol run.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::correction::CorrectionStrategy;
use crate::error::{Error, Result};
use crate::protocol::{
    correction_lookup, run_with, ControllerScript, CorrectionKey, OperationKind, OperationSpec,
    Scenario, Target,
};
use crate::statevector::{
    global_phase_equal, OneQubitGate, Outcome, OutcomeSource, Pauli, StateVector, COMPARISON_TOL,
};

/// Largest register (`N + 1` GHZ qubits) `exhaustive_verify` enumerates by default.
pub const DEFAULT_BRANCH_BOUND: usize = 8;

/// Product of every operation in chronological order, later operations on
/// the left: controller 1's first op is applied first.
pub fn compose_operations(scripts: &[ControllerScript]) -> Result<OneQubitGate> {
    scripts
        .iter()
        .flat_map(|s| &s.ops)
        .try_fold(OneQubitGate::identity(), |acc, op| Ok(op.gate()? * acc))
}

pub fn oracle_state(scenario: &Scenario) -> Result<StateVector> {
    let gate = compose_operations(scenario.scripts())?;
    let out = scenario.target().state().apply_one_qubit(&gate, 0)?;
    let norm = out.norm_sqr().sqrt();
    StateVector::new(out.amplitudes().iter().map(|a| a / norm).collect())
}

/// Every Pauli `P` with `P·pre` equal to `oracle` up to global phase.
pub fn matching_paulis(pre: &StateVector, oracle: &StateVector) -> Result<Vec<Pauli>> {
    let mut found = Vec::new();
    for p in Pauli::ALL {
        let corrected = pre.apply_one_qubit(&p.gate(), 0)?;
        if global_phase_equal(&corrected, oracle, COMPARISON_TOL)? {
            found.push(p);
        }
    }
    Ok(found)
}

pub fn unique_pauli(pre: &StateVector, oracle: &StateVector) -> Result<Pauli> {
    match matching_paulis(pre, oracle)?.as_slice() {
        [p] => Ok(*p),
        other => Err(Error::NoUniquePauli(other.len())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchReport {
    /// Forced outcomes, `MR_B` first, e.g. `"0+-"`.
    pub outcomes: String,
    pub mr_b: u8,
    pub key: CorrectionKey,
    pub correction: Pauli,
    /// The Pauli an unconstrained search finds for this branch, if unique.
    pub searched: Option<Pauli>,
    pub overlap: f64,
    pub pass: bool,
}

impl BranchReport {
    /// Whether `correction_lookup(key)` agrees with the searched Pauli.
    pub fn key_consistent(&self) -> bool {
        self.searched == Some(correction_lookup(self.key))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub summary: String,
    pub num_controllers: usize,
    pub strategy: String,
    pub branches: Vec<BranchReport>,
    pub all_pass: bool,
}

impl VerificationReport {
    pub fn failures(&self) -> impl Iterator<Item = &BranchReport> {
        self.branches.iter().filter(|b| !b.pass)
    }
}

/// All `2^(N+1)` forced-outcome strings in lexicographic order
/// (`0` before `1`, `+` before `-`).
pub fn branch_outcomes(num_controllers: usize) -> Vec<Vec<Outcome>> {
    let total = num_controllers + 1;
    (0..1usize << total)
        .map(|index| {
            (0..total)
                .map(|pos| {
                    let bit = (index >> (total - 1 - pos)) & 1 == 1;
                    match (pos, bit) {
                        (0, false) => Outcome::Zero,
                        (0, true) => Outcome::One,
                        (_, false) => Outcome::Plus,
                        (_, true) => Outcome::Minus,
                    }
                })
                .collect()
        })
        .collect()
}

pub fn summarize(scenario: &Scenario) -> String {
    let scripts: Vec<String> = scenario
        .scripts()
        .iter()
        .map(|s| {
            let ops: Vec<String> = s
                .ops
                .iter()
                .map(|o| format!("{}({:.4})", o.kind, o.theta))
                .collect();
            format!("A{}=[{}]", s.party, ops.join(","))
        })
        .collect();
    format!("N={} {}", scenario.num_controllers(), scripts.join(" "))
}

/// Runs `scenario` once per forced-outcome branch and checks each final `q_b`
/// against [`oracle_state`].
pub fn exhaustive_verify(
    scenario: &Scenario,
    strategy: &dyn CorrectionStrategy,
    bound: usize,
) -> Result<VerificationReport> {
    let qubits = scenario.num_controllers() + 1;
    if qubits > bound {
        return Err(Error::BoundExceeded { qubits, bound });
    }
    let oracle = oracle_state(scenario)?;
    let branches = branch_outcomes(scenario.num_controllers())
        .into_iter()
        .map(|outcomes| {
            let config = scenario
                .clone()
                .with_outcomes(OutcomeSource::forced(outcomes));
            let result = run_with(&config, strategy)?;
            let overlap = result.final_qb.overlap(&oracle)?;
            Ok(BranchReport {
                outcomes: result.transcript.forced_string(),
                mr_b: result.record.mr_b,
                key: result.key,
                correction: result.correction,
                searched: unique_pauli(&result.pre_correction, &oracle).ok(),
                overlap,
                pass: overlap >= 1.0 - COMPARISON_TOL,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let all_pass = branches.iter().all(|b| b.pass);
    Ok(VerificationReport {
        summary: summarize(scenario),
        num_controllers: scenario.num_controllers(),
        strategy: strategy.name().to_string(),
        branches,
        all_pass,
    })
}

/// One row of the two-controller correction table (`MR_B = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableRow {
    pub kind_a: OperationKind,
    pub kind_c: OperationKind,
    pub mr_a: Outcome,
    pub mr_c: Outcome,
    pub pauli: Pauli,
}

impl TableRow {
    pub fn key(&self) -> CorrectionKey {
        CorrectionKey::new(
            self.kind_a.bit() ^ self.kind_c.bit(),
            self.mr_a.bit() ^ self.mr_c.bit(),
        )
    }
}

impl fmt::Display for TableRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<3} {:<3} |{}> |{}>  {}",
            self.kind_a,
            self.kind_c,
            self.mr_a,
            self.mr_c,
            self.pauli.symbol()
        )
    }
}

const KIND_PAIRS: [(OperationKind, OperationKind); 4] = [
    (OperationKind::U0, OperationKind::U0),
    (OperationKind::U0, OperationKind::U1),
    (OperationKind::U1, OperationKind::U0),
    (OperationKind::U1, OperationKind::U1),
];

const SIGN_PAIRS: [(Outcome, Outcome); 4] = [
    (Outcome::Plus, Outcome::Plus),
    (Outcome::Plus, Outcome::Minus),
    (Outcome::Minus, Outcome::Plus),
    (Outcome::Minus, Outcome::Minus),
];

/// The published two-controller table, row for row.
pub fn reference_table1() -> Vec<TableRow> {
    use Pauli::*;
    let corrections = [[I, Z, Z, I], [X, IY, IY, X], [X, IY, IY, X], [I, Z, Z, I]];
    KIND_PAIRS
        .iter()
        .zip(corrections)
        .flat_map(|(&(kind_a, kind_c), paulis)| {
            SIGN_PAIRS
                .iter()
                .zip(paulis)
                .map(move |(&(mr_a, mr_c), pauli)| TableRow {
                    kind_a,
                    kind_c,
                    mr_a,
                    mr_c,
                    pauli,
                })
        })
        .collect()
}

/// The published parity table.
pub fn reference_table2() -> BTreeMap<CorrectionKey, Pauli> {
    [
        (CorrectionKey::new(0, 0), Pauli::I),
        (CorrectionKey::new(0, 1), Pauli::Z),
        (CorrectionKey::new(1, 0), Pauli::X),
        (CorrectionKey::new(1, 1), Pauli::IY),
    ]
    .into_iter()
    .collect()
}

/// Re-derives the two-controller table by simulation: for each operation
/// pair and sign pair (with `MR_B = 0`) it searches the four Paulis for the
/// one that maps the uncorrected `q_b` onto the oracle state.
pub fn derive_table(seed: u64) -> Result<Vec<TableRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(16);
    for (kind_a, kind_c) in KIND_PAIRS {
        let target = random_target(&mut rng, true);
        let theta_a = rng.gen_range(-TAU..TAU);
        let theta_c = rng.gen_range(-TAU..TAU);
        let scenario = Scenario::from_ops(
            target,
            vec![
                vec![OperationSpec::new(kind_a, theta_a)],
                vec![OperationSpec::new(kind_c, theta_c)],
            ],
        )?;
        let oracle = oracle_state(&scenario)?;
        for (mr_a, mr_c) in SIGN_PAIRS {
            let config =
                scenario
                    .clone()
                    .with_outcomes(OutcomeSource::forced([Outcome::Zero, mr_a, mr_c]));
            let result = run_with(&config, &crate::correction::ParityTable)?;
            let pauli = unique_pauli(&result.pre_correction, &oracle)?;
            rows.push(TableRow {
                kind_a,
                kind_c,
                mr_a,
                mr_c,
                pauli,
            });
        }
    }
    Ok(rows)
}

/// Groups rows by `(type_parity, minus_parity)`. Fails if one key maps to two
/// different Paulis.
pub fn collapse_table(rows: &[TableRow]) -> Result<BTreeMap<CorrectionKey, Pauli>> {
    let mut out = BTreeMap::new();
    for row in rows {
        if let Some(prev) = out.insert(row.key(), row.pauli) {
            if prev != row.pauli {
                return Err(Error::Config(format!(
                    "key ({}, {}) maps to both {prev} and {}",
                    row.key().type_parity,
                    row.key().minus_parity,
                    row.pauli
                )));
            }
        }
    }
    Ok(out)
}

/// Random normalized target; real amplitudes when `complex` is false.
pub fn random_target(rng: &mut impl Rng, complex: bool) -> Target {
    loop {
        let (alpha, beta) = if complex {
            (
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            )
        } else {
            (
                Complex64::new(rng.gen_range(-1.0..1.0), 0.0),
                Complex64::new(rng.gen_range(-1.0..1.0), 0.0),
            )
        };
        let norm = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        if norm < 1e-3 {
            continue;
        }
        if let Ok(t) = Target::new(alpha / norm, beta / norm) {
            return t;
        }
    }
}

/// A class of random scenarios: controller count, ops per controller, and
/// whether the target is complex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shape {
    pub controllers: usize,
    pub ops_per_controller: usize,
    pub complex_target: bool,
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "N={} ops={} target={}",
            self.controllers,
            self.ops_per_controller,
            if self.complex_target {
                "complex"
            } else {
                "real"
            }
        )
    }
}

/// Random operation kinds, angles in `[-2π, 2π)`.
pub fn random_scenario(rng: &mut impl Rng, shape: Shape) -> Result<Scenario> {
    let target = random_target(rng, shape.complex_target);
    let ops = (0..shape.controllers)
        .map(|_| {
            (0..shape.ops_per_controller)
                .map(|_| {
                    let kind = if rng.gen_bool(0.5) {
                        OperationKind::U1
                    } else {
                        OperationKind::U0
                    };
                    OperationSpec::new(kind, rng.gen_range(-TAU..TAU))
                })
                .collect()
        })
        .collect();
    Scenario::from_ops(target, ops)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepConfig {
    pub max_controllers: usize,
    pub max_ops: usize,
    pub draws: usize,
    pub seed: u64,
    pub bound: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            max_controllers: 4,
            max_ops: 3,
            draws: 50,
            seed: 0,
            bound: DEFAULT_BRANCH_BOUND,
        }
    }
}

impl SweepConfig {
    /// Every `(N, ops, real|complex)` up to the configured maxima.
    pub fn shapes(&self) -> Vec<Shape> {
        let mut shapes = Vec::new();
        for controllers in 1..=self.max_controllers {
            for ops_per_controller in 1..=self.max_ops {
                for complex_target in [false, true] {
                    shapes.push(Shape {
                        controllers,
                        ops_per_controller,
                        complex_target,
                    });
                }
            }
        }
        shapes
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeReport {
    pub shape: Shape,
    pub reports: Vec<VerificationReport>,
}

impl ShapeReport {
    pub fn branch_count(&self) -> usize {
        self.reports.iter().map(|r| r.branches.len()).sum()
    }

    pub fn failed_branches(&self) -> usize {
        self.reports.iter().map(|r| r.failures().count()).sum()
    }

    pub fn all_pass(&self) -> bool {
        self.reports.iter().all(|r| r.all_pass)
    }

    pub fn min_overlap(&self) -> f64 {
        self.reports
            .iter()
            .flat_map(|r| &r.branches)
            .map(|b| b.overlap)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Exhaustive verification of `draws` random scenarios for every shape.
/// Each shape gets its own generator seeded from `(seed, shape index)`.
pub fn sweep(config: &SweepConfig, strategy: &dyn CorrectionStrategy) -> Result<Vec<ShapeReport>> {
    if config.max_controllers + 1 > config.bound {
        return Err(Error::BoundExceeded {
            qubits: config.max_controllers + 1,
            bound: config.bound,
        });
    }
    config
        .shapes()
        .into_iter()
        .enumerate()
        .map(|(i, shape)| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(i as u64));
            let reports = (0..config.draws)
                .map(|_| {
                    let scenario = random_scenario(&mut rng, shape)?;
                    exhaustive_verify(&scenario, strategy, config.bound)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ShapeReport { shape, reports })
        })
        .collect()
}
