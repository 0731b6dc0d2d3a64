//! The multiparty remote-control protocol as party state machines.
//!
//! Register layout after preparation is `[q_a1, …, q_aN, q_b, B]`. Bob owns
//! `q_b` and `B`, controller `i` owns `q_ai`. Every gate and measurement goes
//! through [`Register`], which refuses to let a party touch a qubit it does
//! not hold.
//!
//! Message flow, in the total order the scheduler delivers it:
//!
//! 1. Bob entangles `B` into `q_b` with a CNOT, measures `B` in Z and
//!    broadcasts `MrB`.
//! 2. Controller 1 applies its script (angles negated when `MR_B = 1`),
//!    measures its qubit in X, reports the sign to Bob and forwards the XOR of
//!    its operation-kind bits to controller 2.
//! 3. Controller `i > 1` first flips its qubit with σx if the received
//!    cumulative parity is 1, then proceeds like controller 1. The last
//!    controller sends the cumulative parity to Bob instead.
//! 4. Bob applies the Pauli picked by his correction strategy to `q_b`.

use std::collections::VecDeque;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::correction::{CorrectionStrategy, ParityTable};
use crate::error::{Error, Result};
use crate::statevector::{
    MeasurementBasis, OneQubitGate, Outcome, OutcomeSource, Pauli, StateVector, COMPARISON_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OperationKind {
    U0,
    U1,
}

impl OperationKind {
    /// The type bit `C`: 0 for `U0`, 1 for `U1`.
    pub fn bit(self) -> u8 {
        match self {
            OperationKind::U0 => 0,
            OperationKind::U1 => 1,
        }
    }

    pub fn gate(self, theta: f64) -> Result<OneQubitGate> {
        match self {
            OperationKind::U0 => OneQubitGate::u0(theta),
            OperationKind::U1 => OneQubitGate::u1(theta),
        }
    }
}

impl fmt::Display for OperationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperationKind::U0 => f.pad("U0"),
            OperationKind::U1 => f.pad("U1"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperationSpec {
    pub kind: OperationKind,
    pub theta: f64,
}

impl OperationSpec {
    pub fn new(kind: OperationKind, theta: f64) -> Self {
        Self { kind, theta }
    }

    pub fn u0(theta: f64) -> Self {
        Self::new(OperationKind::U0, theta)
    }

    pub fn u1(theta: f64) -> Self {
        Self::new(OperationKind::U1, theta)
    }

    pub fn gate(&self) -> Result<OneQubitGate> {
        self.kind.gate(self.theta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerScript {
    /// 1-based controller index.
    pub party: usize,
    pub ops: Vec<OperationSpec>,
}

impl ControllerScript {
    pub fn new(party: usize, ops: Vec<OperationSpec>) -> Self {
        Self { party, ops }
    }

    /// A controller with nothing to do still takes part, as `[U0(0)]`.
    pub fn idle(party: usize) -> Self {
        Self::new(party, vec![OperationSpec::u0(0.0)])
    }

    /// XOR of the script's operation-kind bits.
    pub fn kind_parity(&self) -> u8 {
        self.ops.iter().fold(0, |acc, op| acc ^ op.kind.bit())
    }
}

/// Bob's target qubit `alpha|0⟩ + beta|1⟩`; complex amplitudes are allowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl Target {
    pub fn new(alpha: Complex64, beta: Complex64) -> Result<Self> {
        let finite = [alpha, beta]
            .iter()
            .all(|a| a.re.is_finite() && a.im.is_finite());
        if !finite {
            return Err(Error::NonFinite("target amplitudes"));
        }
        let norm = alpha.norm_sqr() + beta.norm_sqr();
        if (norm - 1.0).abs() > COMPARISON_TOL {
            return Err(Error::TargetNotNormalized(norm));
        }
        Ok(Self { alpha, beta })
    }

    pub fn real(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(Complex64::new(alpha, 0.0), Complex64::new(beta, 0.0))
    }

    pub fn state(&self) -> StateVector {
        StateVector::qubit(self.alpha, self.beta).expect("target validated at construction")
    }
}

/// Target plus controller scripts: everything except where outcomes come from.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    target: Target,
    scripts: Vec<ControllerScript>,
}

impl Scenario {
    pub fn new(target: Target, scripts: Vec<ControllerScript>) -> Result<Self> {
        if scripts.is_empty() {
            return Err(Error::NoControllers);
        }
        for (i, script) in scripts.iter().enumerate() {
            if script.party != i + 1 {
                return Err(Error::Config(format!(
                    "script at position {} is labelled controller {}",
                    i + 1,
                    script.party
                )));
            }
            if script.ops.is_empty() {
                return Err(Error::EmptyScript(script.party));
            }
            if script.ops.iter().any(|op| !op.theta.is_finite()) {
                return Err(Error::NonFinite("rotation angle"));
            }
        }
        Ok(Self { target, scripts })
    }

    /// Numbers the scripts 1..N in the given order.
    pub fn from_ops(target: Target, ops: Vec<Vec<OperationSpec>>) -> Result<Self> {
        let scripts = ops
            .into_iter()
            .enumerate()
            .map(|(i, ops)| ControllerScript::new(i + 1, ops))
            .collect();
        Self::new(target, scripts)
    }

    pub fn target(&self) -> &Target {
        &self.target
    }

    pub fn scripts(&self) -> &[ControllerScript] {
        &self.scripts
    }

    pub fn num_controllers(&self) -> usize {
        self.scripts.len()
    }

    /// One Z outcome for `B` plus one X outcome per controller.
    pub fn num_measurements(&self) -> usize {
        self.scripts.len() + 1
    }

    pub fn with_outcomes(self, outcomes: OutcomeSource) -> ProtocolConfig {
        ProtocolConfig {
            scenario: self,
            outcomes,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProtocolConfig {
    pub scenario: Scenario,
    pub outcomes: OutcomeSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Party {
    Bob,
    /// 1-based.
    Controller(usize),
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Party::Bob => f.write_str("Bob"),
            Party::Controller(i) => write!(f, "A{i}"),
        }
    }
}

impl std::str::FromStr for Party {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "Bob" {
            return Ok(Party::Bob);
        }
        s.strip_prefix('A')
            .and_then(|n| n.parse().ok())
            .filter(|&n| n >= 1)
            .map(Party::Controller)
            .ok_or_else(|| Error::Config(format!("unknown party {s:?}")))
    }
}

impl Serialize for Party {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Party {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QubitLabel {
    /// `q_ai`, 1-based.
    Controller(usize),
    /// Bob's GHZ share, which ends up holding the result.
    Qb,
    /// Bob's original target qubit, consumed in the first step.
    B,
}

impl QubitLabel {
    pub fn owner(self) -> Party {
        match self {
            QubitLabel::Controller(i) => Party::Controller(i),
            QubitLabel::Qb | QubitLabel::B => Party::Bob,
        }
    }
}

impl fmt::Display for QubitLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QubitLabel::Controller(i) => write!(f, "q_a{i}"),
            QubitLabel::Qb => f.write_str("q_b"),
            QubitLabel::B => f.write_str("B"),
        }
    }
}

impl std::str::FromStr for QubitLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "q_b" => Ok(QubitLabel::Qb),
            "B" => Ok(QubitLabel::B),
            _ => s
                .strip_prefix("q_a")
                .and_then(|n| n.parse().ok())
                .filter(|&n| n >= 1)
                .map(QubitLabel::Controller)
                .ok_or_else(|| Error::Config(format!("unknown qubit label {s:?}"))),
        }
    }
}

impl Serialize for QubitLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for QubitLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A state vector whose qubits carry owner labels. All access is checked
/// against the acting party.
#[derive(Debug, Clone, PartialEq)]
pub struct Register {
    state: StateVector,
    labels: Vec<QubitLabel>,
}

impl Register {
    pub fn new(state: StateVector, labels: Vec<QubitLabel>) -> Result<Self> {
        if state.num_qubits() != labels.len() {
            return Err(Error::DimensionMismatch {
                left: state.num_qubits(),
                right: labels.len(),
            });
        }
        Ok(Self { state, labels })
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }

    pub fn labels(&self) -> &[QubitLabel] {
        &self.labels
    }

    fn position(&self, actor: Party, label: QubitLabel) -> Result<usize> {
        if label.owner() != actor {
            return Err(Error::Locality {
                actor: actor.to_string(),
                qubit: label.to_string(),
            });
        }
        self.labels
            .iter()
            .position(|&l| l == label)
            .ok_or_else(|| Error::Config(format!("{label} is not in the register")))
    }

    pub fn apply(&self, actor: Party, label: QubitLabel, gate: &OneQubitGate) -> Result<Register> {
        let q = self.position(actor, label)?;
        Ok(Register {
            state: self.state.apply_one_qubit(gate, q)?,
            labels: self.labels.clone(),
        })
    }

    pub fn cnot(&self, actor: Party, control: QubitLabel, target: QubitLabel) -> Result<Register> {
        let c = self.position(actor, control)?;
        let t = self.position(actor, target)?;
        Ok(Register {
            state: self.state.apply_cnot(c, t)?,
            labels: self.labels.clone(),
        })
    }

    /// Measures and discards `label`.
    pub fn measure(
        &self,
        actor: Party,
        label: QubitLabel,
        basis: MeasurementBasis,
        source: &mut OutcomeSource,
    ) -> Result<(MeasurementRecord, Register)> {
        let q = self.position(actor, label)?;
        let m = self.state.measure(q, basis, source)?;
        let mut labels = self.labels.clone();
        labels.remove(q);
        let record = MeasurementRecord {
            party: actor,
            qubit: label,
            basis,
            outcome: m.outcome,
            probability: m.probability,
        };
        Ok((
            record,
            Register {
                state: m.post,
                labels,
            },
        ))
    }

    fn snapshot(&self, after: impl Into<String>) -> Event {
        Event::State {
            after: after.into(),
            register: self.labels.clone(),
            amplitudes: self.state.amplitudes().to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub party: Party,
    pub qubit: QubitLabel,
    pub basis: MeasurementBasis,
    pub outcome: Outcome,
    pub probability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ClassicalMessage {
    /// Bob's Z outcome on `B`, broadcast to every controller.
    MrB { bit: u8 },
    /// Cumulative type parity from controller `from` to `from + 1`.
    ParityForward { from: usize, to: usize, bit: u8 },
    /// A controller's X outcome, sent to Bob.
    MrReport { from: usize, sign: Outcome },
    /// Cumulative type parity from the last controller to Bob.
    ParityToBob { from: usize, bit: u8 },
}

impl ClassicalMessage {
    pub fn sender(&self) -> Party {
        match *self {
            ClassicalMessage::MrB { .. } => Party::Bob,
            ClassicalMessage::ParityForward { from, .. }
            | ClassicalMessage::MrReport { from, .. }
            | ClassicalMessage::ParityToBob { from, .. } => Party::Controller(from),
        }
    }

    fn recipients(&self, num_controllers: usize) -> Vec<Party> {
        match *self {
            ClassicalMessage::MrB { .. } => (1..=num_controllers).map(Party::Controller).collect(),
            ClassicalMessage::ParityForward { to, .. } => vec![Party::Controller(to)],
            ClassicalMessage::MrReport { .. } | ClassicalMessage::ParityToBob { .. } => {
                vec![Party::Bob]
            }
        }
    }
}

/// `(type_parity, minus_parity)`, indexing Bob's Pauli correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CorrectionKey {
    pub type_parity: u8,
    pub minus_parity: u8,
}

impl CorrectionKey {
    pub fn new(type_parity: u8, minus_parity: u8) -> Self {
        Self {
            type_parity: type_parity & 1,
            minus_parity: minus_parity & 1,
        }
    }

    /// `type_parity = MR_B ⊕ chained parity`, `minus_parity` as Bob received it.
    pub fn from_record(record: &BobRecord) -> Self {
        Self::new(record.mr_b ^ record.chained_parity, record.minus_parity())
    }
}

/// `(0,0)→I, (0,1)→σz, (1,0)→σx, (1,1)→iσy`.
pub fn correction_lookup(key: CorrectionKey) -> Pauli {
    match (key.type_parity, key.minus_parity) {
        (0, 0) => Pauli::I,
        (0, _) => Pauli::Z,
        (_, 0) => Pauli::X,
        _ => Pauli::IY,
    }
}

/// The classical information Bob holds when he corrects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BobRecord {
    pub mr_b: u8,
    /// Parity received from the last controller.
    pub chained_parity: u8,
    /// `MR_i` in controller order.
    pub reports: Vec<Outcome>,
}

impl BobRecord {
    pub fn minus_parity(&self) -> u8 {
        self.reports.iter().fold(0, |acc, o| acc ^ o.bit())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Event {
    State {
        after: String,
        register: Vec<QubitLabel>,
        amplitudes: Vec<Complex64>,
    },
    Message {
        message: ClassicalMessage,
    },
    Measurement(MeasurementRecord),
    Correction {
        pauli: Pauli,
        strategy: String,
        type_parity: u8,
        minus_parity: u8,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Transcript {
    pub events: Vec<Event>,
}

impl Transcript {
    /// Measurement outcomes in consumption order.
    pub fn outcomes(&self) -> Vec<Outcome> {
        self.events
            .iter()
            .filter_map(|e| match e {
                Event::Measurement(m) => Some(m.outcome),
                _ => None,
            })
            .collect()
    }

    pub fn forced_string(&self) -> String {
        self.outcomes().iter().map(|o| o.symbol()).collect()
    }

    pub fn messages(&self) -> impl Iterator<Item = &ClassicalMessage> {
        self.events.iter().filter_map(|e| match e {
            Event::Message { message } => Some(message),
            _ => None,
        })
    }

    pub fn measurements(&self) -> impl Iterator<Item = &MeasurementRecord> {
        self.events.iter().filter_map(|e| match e {
            Event::Measurement(m) => Some(m),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    /// `q_b` just before Bob's correction.
    pub pre_correction: StateVector,
    pub final_qb: StateVector,
    pub correction: Pauli,
    pub key: CorrectionKey,
    pub record: BobRecord,
    pub transcript: Transcript,
}

/// `GHZ(N+1) ⊗ (alpha|0⟩ + beta|1⟩)` over `[q_a1, …, q_aN, q_b, B]`.
pub fn bob_prepare(scenario: &Scenario) -> Register {
    let n = scenario.num_controllers();
    let ghz = StateVector::ghz(n + 1).expect("at least one controller");
    let mut labels: Vec<QubitLabel> = (1..=n).map(QubitLabel::Controller).collect();
    labels.push(QubitLabel::Qb);
    labels.push(QubitLabel::B);
    Register::new(ghz.tensor(&scenario.target().state()), labels).expect("sizes match")
}

#[derive(Debug, Clone, PartialEq)]
pub struct BobMeasureOutput {
    pub mr_b: u8,
    pub register: Register,
    pub broadcast: ClassicalMessage,
    pub measurement: MeasurementRecord,
    pub events: Vec<Event>,
}

/// CNOT from `q_b` onto `B`, then Z-measure and discard `B`.
pub fn bob_cnot_measure(
    register: &Register,
    source: &mut OutcomeSource,
) -> Result<BobMeasureOutput> {
    let entangled = register.cnot(Party::Bob, QubitLabel::Qb, QubitLabel::B)?;
    let (measurement, register) =
        entangled.measure(Party::Bob, QubitLabel::B, MeasurementBasis::Z, source)?;
    let mr_b = measurement.outcome.bit();
    let broadcast = ClassicalMessage::MrB { bit: mr_b };
    let events = vec![
        entangled.snapshot("Bob: CNOT(q_b -> B)"),
        Event::Measurement(measurement),
        register.snapshot("Bob: measured B"),
        Event::Message { message: broadcast },
    ];
    Ok(BobMeasureOutput {
        mr_b,
        register,
        broadcast,
        measurement,
        events,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerOutput {
    pub sign: Outcome,
    pub own_parity: u8,
    pub outgoing_parity: u8,
    pub register: Register,
    pub measurement: MeasurementRecord,
    pub events: Vec<Event>,
}

/// Controller `party`'s turn: optional σx flip, scripted rotations with the
/// angle sign set by `mr_b`, then an X measurement of its qubit.
pub fn controller_step(
    party: usize,
    register: &Register,
    mr_b: u8,
    incoming_parity: u8,
    script: &ControllerScript,
    source: &mut OutcomeSource,
) -> Result<ControllerOutput> {
    let actor = Party::Controller(party);
    let qubit = QubitLabel::Controller(party);
    let mut events = Vec::new();
    let mut reg = register.clone();
    if incoming_parity == 1 {
        reg = reg.apply(actor, qubit, &Pauli::X.gate())?;
        events.push(reg.snapshot(format!("{actor}: sigma_x")));
    }
    let sign = if mr_b == 0 { 1.0 } else { -1.0 };
    for op in &script.ops {
        reg = reg.apply(actor, qubit, &op.kind.gate(sign * op.theta)?)?;
        events.push(reg.snapshot(format!("{actor}: {}({})", op.kind, sign * op.theta)));
    }
    let (measurement, reg) = reg.measure(actor, qubit, MeasurementBasis::X, source)?;
    events.push(Event::Measurement(measurement));
    events.push(reg.snapshot(format!("{actor}: measured {qubit}")));
    let own_parity = script.kind_parity();
    Ok(ControllerOutput {
        sign: measurement.outcome,
        own_parity,
        outgoing_parity: incoming_parity ^ own_parity,
        register: reg,
        measurement,
        events,
    })
}

/// Applies `correction_lookup(key)` to the lone remaining qubit.
pub fn bob_correct(state: &StateVector, key: CorrectionKey) -> Result<StateVector> {
    apply_correction(state, correction_lookup(key))
}

fn apply_correction(state: &StateVector, pauli: Pauli) -> Result<StateVector> {
    if state.num_qubits() != 1 {
        return Err(Error::DimensionMismatch {
            left: state.num_qubits(),
            right: 1,
        });
    }
    state.apply_one_qubit(&pauli.gate(), 0)
}

/// Runs the protocol with the default parity-table correction.
pub fn run(config: &ProtocolConfig) -> Result<RunResult> {
    run_with(config, &ParityTable)
}

struct ControllerMachine<'a> {
    index: usize,
    script: &'a ControllerScript,
    mr_b: Option<u8>,
    incoming: Option<u8>,
    done: bool,
}

impl ControllerMachine<'_> {
    fn receive(&mut self, message: &ClassicalMessage) {
        match *message {
            ClassicalMessage::MrB { bit } => self.mr_b = Some(bit),
            ClassicalMessage::ParityForward { to, bit, .. } if to == self.index => {
                self.incoming = Some(bit)
            }
            _ => {}
        }
    }

    fn ready(&self) -> bool {
        !self.done && self.mr_b.is_some() && (self.index == 1 || self.incoming.is_some())
    }
}

struct BobMachine {
    mr_b: u8,
    reports: Vec<Option<Outcome>>,
    chained_parity: Option<u8>,
}

impl BobMachine {
    fn receive(&mut self, message: &ClassicalMessage) {
        match *message {
            ClassicalMessage::MrReport { from, sign } => self.reports[from - 1] = Some(sign),
            ClassicalMessage::ParityToBob { bit, .. } => self.chained_parity = Some(bit),
            _ => {}
        }
    }

    fn record(&self) -> Option<BobRecord> {
        Some(BobRecord {
            mr_b: self.mr_b,
            chained_parity: self.chained_parity?,
            reports: self.reports.iter().copied().collect::<Option<_>>()?,
        })
    }
}

/// Runs the protocol, delivering classical messages in FIFO order and letting
/// each party act as soon as it holds what it needs.
pub fn run_with(config: &ProtocolConfig, strategy: &dyn CorrectionStrategy) -> Result<RunResult> {
    let scenario = &config.scenario;
    let n = scenario.num_controllers();
    let mut source = config.outcomes.clone();
    if source.is_forced() && source.remaining() != scenario.num_measurements() {
        return Err(Error::Config(format!(
            "expected {} forced outcomes, got {}",
            scenario.num_measurements(),
            source.remaining()
        )));
    }

    let mut events = Vec::new();
    let prepared = bob_prepare(scenario);
    events.push(prepared.snapshot("Bob: prepare GHZ x target"));

    let bob_step = bob_cnot_measure(&prepared, &mut source)?;
    events.extend(bob_step.events);
    let mut register = bob_step.register;

    let mut bob = BobMachine {
        mr_b: bob_step.mr_b,
        reports: vec![None; n],
        chained_parity: None,
    };
    let mut controllers: Vec<ControllerMachine> = scenario
        .scripts()
        .iter()
        .map(|script| ControllerMachine {
            index: script.party,
            script,
            mr_b: None,
            incoming: None,
            done: false,
        })
        .collect();

    let mut queue: VecDeque<(Party, ClassicalMessage)> = bob_step
        .broadcast
        .recipients(n)
        .into_iter()
        .map(|to| (to, bob_step.broadcast))
        .collect();

    let mut corrected = None;
    while let Some((to, message)) = queue.pop_front() {
        match to {
            Party::Controller(i) => {
                let machine = &mut controllers[i - 1];
                machine.receive(&message);
                if !machine.ready() {
                    continue;
                }
                let out = controller_step(
                    i,
                    &register,
                    machine.mr_b.unwrap_or_default(),
                    machine.incoming.unwrap_or_default(),
                    machine.script,
                    &mut source,
                )?;
                machine.done = true;
                events.extend(out.events);
                register = out.register;
                let parity_msg = if i == n {
                    ClassicalMessage::ParityToBob {
                        from: i,
                        bit: out.outgoing_parity,
                    }
                } else {
                    ClassicalMessage::ParityForward {
                        from: i,
                        to: i + 1,
                        bit: out.outgoing_parity,
                    }
                };
                for msg in [
                    ClassicalMessage::MrReport {
                        from: i,
                        sign: out.sign,
                    },
                    parity_msg,
                ] {
                    events.push(Event::Message { message: msg });
                    queue.extend(msg.recipients(n).into_iter().map(|to| (to, msg)));
                }
            }
            Party::Bob => {
                bob.receive(&message);
                let Some(record) = bob.record() else { continue };
                let pre = register.state().clone();
                let pauli = strategy.choose(&record);
                let key = CorrectionKey::from_record(&record);
                register = register.apply(Party::Bob, QubitLabel::Qb, &pauli.gate())?;
                events.push(Event::Correction {
                    pauli,
                    strategy: strategy.name().to_string(),
                    type_parity: key.type_parity,
                    minus_parity: key.minus_parity,
                });
                events.push(register.snapshot("Bob: corrected q_b"));
                corrected = Some((pre, pauli, key, record));
            }
        }
    }

    if source.remaining() != 0 {
        return Err(Error::OutcomesUnused(source.remaining()));
    }
    let (pre_correction, correction, key, record) =
        corrected.expect("Bob corrects once every controller has reported");
    debug_assert_eq!(register.labels(), &[QubitLabel::Qb]);
    Ok(RunResult {
        pre_correction,
        final_qb: register.state().clone(),
        correction,
        key,
        record,
        transcript: Transcript { events },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevector::global_phase_equal;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() <= tol)
    }

    fn ghz_register(n_controllers: usize, alpha: Complex64, beta: Complex64) -> Register {
        // alpha|0…0⟩ + beta|1…1⟩ over [q_a1.., q_b]
        let len = 1 << (n_controllers + 1);
        let mut amps = vec![Complex64::new(0.0, 0.0); len];
        amps[0] = alpha;
        amps[len - 1] = beta;
        let mut labels: Vec<_> = (1..=n_controllers).map(QubitLabel::Controller).collect();
        labels.push(QubitLabel::Qb);
        Register::new(StateVector::new(amps).unwrap(), labels).unwrap()
    }

    #[test]
    fn prepare_layouts() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = Scenario::from_ops(
            Target::real(1.0, 0.0).unwrap(),
            vec![vec![OperationSpec::u0(0.0)]; 2],
        )
        .unwrap();
        let reg = bob_prepare(&s);
        let mut want = vec![c(0.0, 0.0); 16];
        want[0b0000] = c(h, 0.0);
        want[0b1110] = c(h, 0.0);
        assert!(close(reg.state().amplitudes(), &want, 1e-15));

        let (a, b) = (c(0.6, 0.0), c(0.0, 0.8));
        let s = Scenario::from_ops(
            Target::new(a, b).unwrap(),
            vec![vec![OperationSpec::u0(0.0)]],
        )
        .unwrap();
        let reg = bob_prepare(&s);
        assert_eq!(
            reg.labels(),
            &[QubitLabel::Controller(1), QubitLabel::Qb, QubitLabel::B]
        );
        let mut want = vec![c(0.0, 0.0); 8];
        want[0b000] = a * h;
        want[0b001] = b * h;
        want[0b110] = a * h;
        want[0b111] = b * h;
        assert!(close(reg.state().amplitudes(), &want, 1e-15));
    }

    #[test]
    fn locality_is_enforced() {
        let reg = ghz_register(2, c(0.6, 0.0), c(0.8, 0.0));
        let err = reg
            .apply(
                Party::Controller(1),
                QubitLabel::Controller(2),
                &Pauli::X.gate(),
            )
            .unwrap_err();
        assert!(matches!(err, Error::Locality { .. }));
        let err = reg
            .apply(Party::Bob, QubitLabel::Controller(1), &Pauli::X.gate())
            .unwrap_err();
        assert!(matches!(err, Error::Locality { .. }));
        assert!(reg
            .apply(Party::Controller(1), QubitLabel::Qb, &Pauli::X.gate())
            .is_err());
    }

    #[test]
    fn idle_controller_leaves_logical_state_alone() {
        let (a, b) = (c(0.6, 0.0), c(0.8, 0.0));
        let reg = ghz_register(1, a, b);
        for outcome in [Outcome::Plus, Outcome::Minus] {
            let out = controller_step(
                1,
                &reg,
                0,
                0,
                &ControllerScript::idle(1),
                &mut OutcomeSource::forced([outcome]),
            )
            .unwrap();
            assert_eq!(out.outgoing_parity, 0);
            let sign = if outcome == Outcome::Plus { 1.0 } else { -1.0 };
            assert!(close(
                out.register.state().amplitudes(),
                &[a, b * sign],
                1e-15
            ));
        }
    }

    #[test]
    fn lookup_table() {
        assert_eq!(correction_lookup(CorrectionKey::new(0, 0)), Pauli::I);
        assert_eq!(correction_lookup(CorrectionKey::new(0, 1)), Pauli::Z);
        assert_eq!(correction_lookup(CorrectionKey::new(1, 0)), Pauli::X);
        assert_eq!(correction_lookup(CorrectionKey::new(1, 1)), Pauli::IY);
    }

    #[test]
    fn bob_correct_examples() {
        let (a, b) = (c(0.6, 0.0), c(0.8, 0.0));
        let s = StateVector::qubit(a, b).unwrap();
        assert_eq!(bob_correct(&s, CorrectionKey::new(0, 0)).unwrap(), s);
        let z = bob_correct(&s, CorrectionKey::new(0, 1)).unwrap();
        assert!(close(z.amplitudes(), &[a, -b], 0.0));
        let two = StateVector::ghz(2).unwrap();
        assert!(bob_correct(&two, CorrectionKey::new(0, 0)).is_err());
    }

    #[test]
    fn single_idle_controller_restores_target() {
        let target = Target::new(c(0.6, 0.0), c(0.0, 0.8)).unwrap();
        for forced in ["0+", "0-", "1+", "1-"] {
            let cfg = Scenario::from_ops(target, vec![vec![OperationSpec::u0(0.0)]])
                .unwrap()
                .with_outcomes(OutcomeSource::forced_from_str(forced).unwrap());
            let r = run(&cfg).unwrap();
            assert!(
                global_phase_equal(&r.final_qb, &target.state(), 1e-9).unwrap(),
                "branch {forced}"
            );
        }
    }

    #[test]
    fn forced_length_mismatch() {
        let target = Target::real(0.6, 0.8).unwrap();
        let s = Scenario::from_ops(target, vec![vec![OperationSpec::u0(0.0)]; 2]).unwrap();
        for forced in ["0+", "0+++"] {
            let cfg = s
                .clone()
                .with_outcomes(OutcomeSource::forced_from_str(forced).unwrap());
            assert!(run(&cfg).is_err(), "{forced}");
        }
    }

    #[test]
    fn scenario_validation() {
        let t = Target::real(0.6, 0.8).unwrap();
        assert_eq!(Scenario::from_ops(t, vec![]), Err(Error::NoControllers));
        assert_eq!(
            Scenario::from_ops(t, vec![vec![]]),
            Err(Error::EmptyScript(1))
        );
        assert!(Target::real(0.6, 0.6).is_err());
        assert!(Scenario::new(t, vec![ControllerScript::idle(2)]).is_err());
    }

    #[test]
    fn labels_round_trip_as_strings() {
        for label in [QubitLabel::Controller(3), QubitLabel::Qb, QubitLabel::B] {
            assert_eq!(label.to_string().parse::<QubitLabel>().unwrap(), label);
        }
        for party in [Party::Bob, Party::Controller(12)] {
            assert_eq!(party.to_string().parse::<Party>().unwrap(), party);
        }
        assert!("A0".parse::<Party>().is_err());
    }
}
