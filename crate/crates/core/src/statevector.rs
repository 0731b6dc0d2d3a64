//! Dense state-vector simulation over small qubit registers.
//!
//! Qubit 0 is the leftmost symbol in ket notation and the basis index is the
//! big-endian integer of the bitstring, so `|011⟩` over three qubits is index 3.
//! Every operation returns a new value; measured qubits are removed from the
//! register.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for construction-time checks (unitarity, gate algebra).
pub const CONSTRUCTION_TOL: f64 = 1e-12;
/// Tolerance for normalization and end-to-end state comparisons.
pub const COMPARISON_TOL: f64 = 1e-9;
/// Forced outcomes at or below this Born probability are rejected.
pub const MIN_BRANCH_PROBABILITY: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Builds a state from raw amplitudes, checking length, finiteness and norm.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::BadLength(len));
        }
        if amplitudes
            .iter()
            .any(|a| !a.re.is_finite() || !a.im.is_finite())
        {
            return Err(Error::NonFinite("state amplitudes"));
        }
        let norm = norm_sqr(&amplitudes);
        if (norm - 1.0).abs() > COMPARISON_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self {
            num_qubits: len.trailing_zeros() as usize,
            amplitudes,
        })
    }

    /// Single-qubit state `alpha|0⟩ + beta|1⟩`.
    pub fn qubit(alpha: Complex64, beta: Complex64) -> Result<Self> {
        Self::new(vec![alpha, beta])
    }

    pub fn basis_state(num_qubits: usize, bits: &str) -> Result<Self> {
        if num_qubits == 0 {
            return Err(Error::EmptyRegister);
        }
        if bits.len() != num_qubits || !bits.bytes().all(|b| b == b'0' || b == b'1') {
            return Err(Error::InvalidBits(bits.to_string()));
        }
        let index = usize::from_str_radix(bits, 2).map_err(|_| Error::InvalidBits(bits.into()))?;
        let mut amplitudes = vec![ZERO; 1 << num_qubits];
        amplitudes[index] = ONE;
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    /// `(|0…0⟩ + |1…1⟩)/√2` over `num_qubits` qubits.
    pub fn ghz(num_qubits: usize) -> Result<Self> {
        if num_qubits < 2 {
            return Err(Error::TooFewQubits {
                min: 2,
                got: num_qubits,
            });
        }
        let mut amplitudes = vec![ZERO; 1 << num_qubits];
        amplitudes[0] = Complex64::new(FRAC_1_SQRT_2, 0.0);
        amplitudes[(1 << num_qubits) - 1] = Complex64::new(FRAC_1_SQRT_2, 0.0);
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, bits: &str) -> Option<Complex64> {
        if bits.len() != self.num_qubits {
            return None;
        }
        let index = if bits.is_empty() {
            0
        } else {
            usize::from_str_radix(bits, 2).ok()?
        };
        self.amplitudes.get(index).copied()
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amplitudes)
    }

    /// Register of `self`'s qubits followed by `right`'s.
    pub fn tensor(&self, right: &StateVector) -> StateVector {
        let mut amplitudes = Vec::with_capacity(self.amplitudes.len() * right.amplitudes.len());
        for l in &self.amplitudes {
            for r in &right.amplitudes {
                amplitudes.push(l * r);
            }
        }
        StateVector {
            num_qubits: self.num_qubits + right.num_qubits,
            amplitudes,
        }
    }

    fn mask(&self, qubit: usize) -> Result<usize> {
        if qubit >= self.num_qubits {
            return Err(Error::QubitOutOfRange {
                qubit,
                num_qubits: self.num_qubits,
            });
        }
        Ok(1 << (self.num_qubits - 1 - qubit))
    }

    pub fn apply_one_qubit(&self, gate: &OneQubitGate, qubit: usize) -> Result<StateVector> {
        let mask = self.mask(qubit)?;
        let m = gate.matrix();
        let mut amplitudes = self.amplitudes.clone();
        for i0 in (0..amplitudes.len()).filter(|i| i & mask == 0) {
            let i1 = i0 | mask;
            let (a0, a1) = (self.amplitudes[i0], self.amplitudes[i1]);
            amplitudes[i0] = m[0][0] * a0 + m[0][1] * a1;
            amplitudes[i1] = m[1][0] * a0 + m[1][1] * a1;
        }
        Ok(StateVector {
            num_qubits: self.num_qubits,
            amplitudes,
        })
    }

    pub fn apply_cnot(&self, control: usize, target: usize) -> Result<StateVector> {
        let cmask = self.mask(control)?;
        let tmask = self.mask(target)?;
        if control == target {
            return Err(Error::SameQubit(control));
        }
        let mut amplitudes = self.amplitudes.clone();
        for i in (0..amplitudes.len()).filter(|i| i & cmask != 0 && i & tmask == 0) {
            amplitudes.swap(i, i | tmask);
        }
        Ok(StateVector {
            num_qubits: self.num_qubits,
            amplitudes,
        })
    }

    /// Branch amplitudes of projecting `qubit` onto `outcome`, with the qubit
    /// removed. Not renormalized.
    fn project(&self, qubit: usize, outcome: Outcome) -> Result<Vec<Complex64>> {
        let mask = self.mask(qubit)?;
        let low = mask - 1;
        let half = self.amplitudes.len() / 2;
        let projected = (0..half)
            .map(|r| {
                // reinsert a zero bit at the measured position
                let i0 = ((r & !low) << 1) | (r & low);
                let (a0, a1) = (self.amplitudes[i0], self.amplitudes[i0 | mask]);
                match outcome {
                    Outcome::Zero => a0,
                    Outcome::One => a1,
                    Outcome::Plus => (a0 + a1) * FRAC_1_SQRT_2,
                    Outcome::Minus => (a0 - a1) * FRAC_1_SQRT_2,
                }
            })
            .collect();
        Ok(projected)
    }

    /// Born probability of `outcome` when measuring `qubit`.
    pub fn probability(&self, qubit: usize, outcome: Outcome) -> Result<f64> {
        Ok(norm_sqr(&self.project(qubit, outcome)?))
    }

    /// Projective measurement of `qubit` in `basis`. The measured qubit is
    /// removed from the returned post-measurement state.
    pub fn measure(
        &self,
        qubit: usize,
        basis: MeasurementBasis,
        source: &mut OutcomeSource,
    ) -> Result<Measurement> {
        let [first, second] = basis.outcomes();
        let p_first = self.probability(qubit, first)?;
        let outcome = source.next_outcome(basis, p_first)?;
        let branch = self.project(qubit, outcome)?;
        let probability = norm_sqr(&branch);
        if probability <= MIN_BRANCH_PROBABILITY {
            return Err(Error::ImpossibleOutcome {
                outcome,
                probability,
            });
        }
        debug_assert!(outcome == first || outcome == second);
        let scale = 1.0 / probability.sqrt();
        Ok(Measurement {
            outcome,
            probability,
            post: StateVector {
                num_qubits: self.num_qubits - 1,
                amplitudes: branch.into_iter().map(|a| a * scale).collect(),
            },
        })
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::DimensionMismatch {
                left: self.num_qubits,
                right: other.num_qubits,
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|⟨self|other⟩|`, the fidelity-style overlap magnitude.
    pub fn overlap(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm())
    }
}

/// True iff `a` and `b` agree up to a global phase: `|⟨a|b⟩| ≥ 1 − tol`.
pub fn global_phase_equal(a: &StateVector, b: &StateVector, tol: f64) -> Result<bool> {
    Ok(a.overlap(b)? >= 1.0 - tol)
}

fn norm_sqr(amplitudes: &[Complex64]) -> f64 {
    amplitudes.iter().map(|a| a.norm_sqr()).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub outcome: Outcome,
    pub probability: f64,
    pub post: StateVector,
}

/// A 2×2 unitary, checked at construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneQubitGate([[Complex64; 2]; 2]);

impl OneQubitGate {
    pub fn new(matrix: [[Complex64; 2]; 2]) -> Result<Self> {
        if matrix
            .iter()
            .flatten()
            .any(|a| !a.re.is_finite() || !a.im.is_finite())
        {
            return Err(Error::NonFinite("gate matrix"));
        }
        let gate = Self(matrix);
        let deviation = gate.unitarity_deviation();
        if deviation > CONSTRUCTION_TOL {
            return Err(Error::NotUnitary(deviation));
        }
        Ok(gate)
    }

    pub fn identity() -> Self {
        Self([[ONE, ZERO], [ZERO, ONE]])
    }

    /// `diag(e^{iθ}, e^{-iθ})`.
    pub fn u0(theta: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::NonFinite("rotation angle"));
        }
        Self::new([
            [Complex64::cis(theta), ZERO],
            [ZERO, Complex64::cis(-theta)],
        ])
    }

    /// `[[0, e^{iθ}], [−e^{-iθ}, 0]]`.
    pub fn u1(theta: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::NonFinite("rotation angle"));
        }
        Self::new([
            [ZERO, Complex64::cis(theta)],
            [-Complex64::cis(-theta), ZERO],
        ])
    }

    pub fn pauli(kind: Pauli) -> Self {
        let m = match kind {
            Pauli::I => [[ONE, ZERO], [ZERO, ONE]],
            Pauli::Z => [[ONE, ZERO], [ZERO, -ONE]],
            Pauli::X => [[ZERO, ONE], [ONE, ZERO]],
            Pauli::IY => [[ZERO, ONE], [-ONE, ZERO]],
        };
        Self(m)
    }

    pub fn matrix(&self) -> &[[Complex64; 2]; 2] {
        &self.0
    }

    pub fn dagger(&self) -> Self {
        let m = &self.0;
        Self([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    /// Matrix product `self · rhs` (apply `rhs` first).
    pub fn then_after(&self, rhs: &OneQubitGate) -> Self {
        let (a, b) = (&self.0, &rhs.0);
        let mut out = [[ZERO; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Self(out)
    }

    /// Largest entrywise deviation of `G†G` from the identity.
    pub fn unitarity_deviation(&self) -> f64 {
        self.dagger()
            .then_after(self)
            .max_deviation(&Self::identity())
    }

    pub fn max_deviation(&self, other: &OneQubitGate) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let m = &self.0;
        Self([[m[0][0] * c, m[0][1] * c], [m[1][0] * c, m[1][1] * c]])
    }
}

impl std::ops::Mul for OneQubitGate {
    type Output = OneQubitGate;

    fn mul(self, rhs: OneQubitGate) -> OneQubitGate {
        self.then_after(&rhs)
    }
}

/// Bob's correction set `{I, σz, σx, iσy}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    Z,
    X,
    #[serde(rename = "iY")]
    IY,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::Z, Pauli::X, Pauli::IY];

    pub fn gate(self) -> OneQubitGate {
        OneQubitGate::pauli(self)
    }

    pub fn label(self) -> &'static str {
        match self {
            Pauli::I => "I",
            Pauli::Z => "Z",
            Pauli::X => "X",
            Pauli::IY => "iY",
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Pauli::I => "I",
            Pauli::Z => "σz",
            Pauli::X => "σx",
            Pauli::IY => "iσy",
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MeasurementBasis {
    Z,
    X,
}

impl MeasurementBasis {
    pub fn outcomes(self) -> [Outcome; 2] {
        match self {
            MeasurementBasis::Z => [Outcome::Zero, Outcome::One],
            MeasurementBasis::X => [Outcome::Plus, Outcome::Minus],
        }
    }
}

impl fmt::Display for MeasurementBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeasurementBasis::Z => f.write_str("Z"),
            MeasurementBasis::X => f.write_str("X"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    Zero,
    One,
    Plus,
    Minus,
}

impl Outcome {
    pub fn basis(self) -> MeasurementBasis {
        match self {
            Outcome::Zero | Outcome::One => MeasurementBasis::Z,
            Outcome::Plus | Outcome::Minus => MeasurementBasis::X,
        }
    }

    /// 0 for `Zero`/`Plus`, 1 for `One`/`Minus`.
    pub fn bit(self) -> u8 {
        match self {
            Outcome::Zero | Outcome::Plus => 0,
            Outcome::One | Outcome::Minus => 1,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Outcome::Zero => '0',
            Outcome::One => '1',
            Outcome::Plus => '+',
            Outcome::Minus => '-',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            '0' => Some(Outcome::Zero),
            '1' => Some(Outcome::One),
            '+' => Some(Outcome::Plus),
            '-' => Some(Outcome::Minus),
            _ => None,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// Where measurement outcomes come from.
///
/// `Sampled` draws one `f64` in `[0, 1)` per measurement from a ChaCha8
/// stream seeded with `seed_from_u64(seed)` and picks the basis's first label
/// when the draw falls below that label's Born probability. `Forced` replays
/// an explicit list in consumption order.
#[derive(Debug, Clone)]
pub enum OutcomeSource {
    Sampled {
        seed: u64,
        rng: Box<ChaCha8Rng>,
    },
    Forced {
        outcomes: Vec<Outcome>,
        cursor: usize,
    },
}

impl OutcomeSource {
    pub fn sampled(seed: u64) -> Self {
        OutcomeSource::Sampled {
            seed,
            rng: Box::new(ChaCha8Rng::seed_from_u64(seed)),
        }
    }

    pub fn forced(outcomes: impl Into<Vec<Outcome>>) -> Self {
        OutcomeSource::Forced {
            outcomes: outcomes.into(),
            cursor: 0,
        }
    }

    /// Parses a string such as `"0++"`.
    pub fn forced_from_str(s: &str) -> Result<Self> {
        let outcomes = s
            .chars()
            .map(Outcome::from_symbol)
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::BadForcedString(s.to_string()))?;
        Ok(Self::forced(outcomes))
    }

    /// Number of forced outcomes not yet consumed; always 0 when sampling.
    pub fn remaining(&self) -> usize {
        match self {
            OutcomeSource::Sampled { .. } => 0,
            OutcomeSource::Forced { outcomes, cursor } => outcomes.len() - cursor,
        }
    }

    pub fn is_forced(&self) -> bool {
        matches!(self, OutcomeSource::Forced { .. })
    }

    fn next_outcome(&mut self, basis: MeasurementBasis, p_first: f64) -> Result<Outcome> {
        let [first, second] = basis.outcomes();
        match self {
            OutcomeSource::Sampled { rng, .. } => {
                let draw: f64 = rng.gen();
                Ok(if draw < p_first { first } else { second })
            }
            OutcomeSource::Forced { outcomes, cursor } => {
                let outcome = *outcomes
                    .get(*cursor)
                    .ok_or(Error::OutcomesExhausted(*cursor))?;
                if outcome.basis() != basis {
                    return Err(Error::BasisMismatch { outcome, basis });
                }
                *cursor += 1;
                Ok(outcome)
            }
        }
    }
}
