//! Exact-enough complex state vectors over at most three labeled qubits.
//!
//! Amplitude indices follow the label list with the first label as the most
//! significant bit, so a state on `(B, C, B')` stores `|bcb'⟩` at index
//! `4b + 2c + b'`.

use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance used for normalization and probability-sum checks.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Branches below this probability are treated as impossible.
const PROBABILITY_FLOOR: f64 = 1e-13;

const MAX_QUBITS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QubitLabel {
    B,
    C,
    /// The attacker's ancilla.
    BPrime,
}

impl fmt::Display for QubitLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QubitLabel::B => write!(f, "B"),
            QubitLabel::C => write!(f, "C"),
            QubitLabel::BPrime => write!(f, "B'"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MeasurementBasis {
    /// Computational basis `{|0⟩, |1⟩}`.
    Z,
    /// Hadamard basis `{|+⟩, |−⟩}`.
    X,
    /// The four Bell states on an ordered qubit pair.
    Bell,
}

impl MeasurementBasis {
    /// Number of qubits a single measurement in this basis addresses.
    pub fn arity(self) -> usize {
        match self {
            MeasurementBasis::Z | MeasurementBasis::X => 1,
            MeasurementBasis::Bell => 2,
        }
    }

    /// Result labels in a fixed order, paired with the eigenvector each one
    /// projects onto (over the target qubits, first target most significant).
    fn eigenvectors(self) -> Vec<(MeasuredValue, Vec<Complex64>)> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let c = |re: f64| Complex64::new(re, 0.0);
        match self {
            MeasurementBasis::Z => vec![
                (MeasuredValue::Zero, vec![c(1.0), c(0.0)]),
                (MeasuredValue::One, vec![c(0.0), c(1.0)]),
            ],
            MeasurementBasis::X => vec![
                (MeasuredValue::Plus, vec![c(h), c(h)]),
                (MeasuredValue::Minus, vec![c(h), c(-h)]),
            ],
            MeasurementBasis::Bell => MeasuredValue::BELL
                .iter()
                .map(|&v| (v, v.bell_amplitudes().map(c).to_vec()))
                .collect(),
        }
    }
}

/// The eigenvalue label a measurement reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasuredValue {
    Zero,
    One,
    Plus,
    Minus,
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl MeasuredValue {
    pub const BELL: [MeasuredValue; 4] = [
        MeasuredValue::PhiPlus,
        MeasuredValue::PhiMinus,
        MeasuredValue::PsiPlus,
        MeasuredValue::PsiMinus,
    ];

    pub fn basis(self) -> MeasurementBasis {
        match self {
            MeasuredValue::Zero | MeasuredValue::One => MeasurementBasis::Z,
            MeasuredValue::Plus | MeasuredValue::Minus => MeasurementBasis::X,
            _ => MeasurementBasis::Bell,
        }
    }

    /// Z results as classical bits; `None` for every other basis.
    pub fn as_bit(self) -> Option<u8> {
        match self {
            MeasuredValue::Zero => Some(0),
            MeasuredValue::One => Some(1),
            _ => None,
        }
    }

    pub fn from_bit(bit: u8) -> Self {
        if bit & 1 == 0 {
            MeasuredValue::Zero
        } else {
            MeasuredValue::One
        }
    }

    /// Real amplitudes of a Bell state over `|00⟩, |01⟩, |10⟩, |11⟩`.
    ///
    /// # Panics
    /// Panics when called on a single-qubit value.
    pub fn bell_amplitudes(self) -> [f64; 4] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            MeasuredValue::PhiPlus => [h, 0.0, 0.0, h],
            MeasuredValue::PhiMinus => [h, 0.0, 0.0, -h],
            MeasuredValue::PsiPlus => [0.0, h, h, 0.0],
            MeasuredValue::PsiMinus => [0.0, h, -h, 0.0],
            other => panic!("{other} is not a Bell state"),
        }
    }
}

impl fmt::Display for MeasuredValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MeasuredValue::Zero => "0",
            MeasuredValue::One => "1",
            MeasuredValue::Plus => "+",
            MeasuredValue::Minus => "-",
            MeasuredValue::PhiPlus => "phi+",
            MeasuredValue::PhiMinus => "phi-",
            MeasuredValue::PsiPlus => "psi+",
            MeasuredValue::PsiMinus => "psi-",
        };
        f.write_str(s)
    }
}

/// One recorded measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub basis: MeasurementBasis,
    pub targets: Vec<QubitLabel>,
    pub result: MeasuredValue,
    /// Born-rule probability of `result` in the state that was measured.
    pub probability: f64,
}

/// A possible measurement result together with the collapsed state.
#[derive(Debug, Clone)]
pub struct Branch {
    pub outcome: Outcome,
    pub state: StateVector,
}

/// Which entangled pair the source emits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceState {
    /// `(|+0⟩ + |−1⟩)/√2`
    Psi,
    /// `−(|+1⟩ − |−0⟩)/√2`
    Phi,
}

impl fmt::Display for SourceState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceState::Psi => f.write_str("psi"),
            SourceState::Phi => f.write_str("phi"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QStateError {
    #[error("qubit {0} is not part of this state")]
    UnknownLabel(QubitLabel),
    #[error("qubit {0} appears more than once")]
    DuplicateLabel(QubitLabel),
    #[error("control and target are both {0}")]
    IdenticalLabels(QubitLabel),
    #[error("{basis:?} measurement addresses {expected} qubit(s), got {got}")]
    ArityMismatch {
        basis: MeasurementBasis,
        expected: usize,
        got: usize,
    },
    #[error("state must hold between 1 and {MAX_QUBITS} qubits, got {0}")]
    QubitCount(usize),
    #[error("{labels} qubit(s) need {expected} amplitudes, got {got}")]
    Dimension { labels: usize, expected: usize, got: usize },
    #[error("state is not normalized (squared norm {0})")]
    NotNormalized(f64),
    #[error("states act on different qubits")]
    LabelMismatch,
}

pub type Result<T> = std::result::Result<T, QStateError>;

/// A normalized pure state on an ordered set of distinct qubits.
///
/// Values are immutable; every operation returns a new state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    labels: Vec<QubitLabel>,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn new(labels: Vec<QubitLabel>, amps: Vec<Complex64>) -> Result<Self> {
        check_labels(&labels)?;
        let expected = 1usize << labels.len();
        if amps.len() != expected {
            return Err(QStateError::Dimension {
                labels: labels.len(),
                expected,
                got: amps.len(),
            });
        }
        let state = StateVector { labels, amps };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(QStateError::NotNormalized(norm));
        }
        Ok(state)
    }

    /// Builds a state from real amplitudes.
    pub fn from_real(labels: Vec<QubitLabel>, amps: &[f64]) -> Result<Self> {
        Self::new(labels, amps.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    /// Computational basis state `|bits⟩`, one bit per label.
    pub fn basis_state(labels: Vec<QubitLabel>, bits: &[u8]) -> Result<Self> {
        if bits.len() != labels.len() {
            return Err(QStateError::Dimension {
                labels: labels.len(),
                expected: labels.len(),
                got: bits.len(),
            });
        }
        let index = bits.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize);
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << labels.len()];
        amps[index] = Complex64::new(1.0, 0.0);
        Self::new(labels, amps)
    }

    /// Single-qubit Z or X eigenstate.
    pub fn single(label: QubitLabel, value: MeasuredValue) -> Result<Self> {
        let basis = value.basis();
        if basis == MeasurementBasis::Bell {
            return Err(QStateError::ArityMismatch {
                basis,
                expected: 2,
                got: 1,
            });
        }
        let (_, vector) = basis
            .eigenvectors()
            .into_iter()
            .find(|(v, _)| *v == value)
            .expect("every single-qubit value has an eigenvector");
        Self::new(vec![label], vector)
    }

    /// Bell state on `(first, second)`.
    pub fn bell(first: QubitLabel, second: QubitLabel, value: MeasuredValue) -> Result<Self> {
        if value.basis() != MeasurementBasis::Bell {
            return Err(QStateError::ArityMismatch {
                basis: value.basis(),
                expected: 1,
                got: 2,
            });
        }
        Self::from_real(vec![first, second], &value.bell_amplitudes())
    }

    pub fn labels(&self) -> &[QubitLabel] {
        &self.labels
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn num_qubits(&self) -> usize {
        self.labels.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn position(&self, label: QubitLabel) -> Result<usize> {
        self.labels
            .iter()
            .position(|&l| l == label)
            .ok_or(QStateError::UnknownLabel(label))
    }

    /// Bit mask selecting `label` inside an amplitude index.
    fn mask(&self, label: QubitLabel) -> Result<usize> {
        let pos = self.position(label)?;
        Ok(1 << (self.labels.len() - 1 - pos))
    }

    /// `self ⊗ other`, with `other`'s qubits appended after ours.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        check_labels(&labels)?;
        let amps = self
            .amps
            .iter()
            .flat_map(|a| other.amps.iter().map(move |b| a * b))
            .collect();
        Ok(StateVector { labels, amps })
    }

    pub fn apply_hadamard(&self, q: QubitLabel) -> Result<StateVector> {
        let mask = self.mask(q)?;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut amps = self.amps.clone();
        for i in (0..amps.len()).filter(|i| i & mask == 0) {
            let (a0, a1) = (self.amps[i], self.amps[i | mask]);
            amps[i] = (a0 + a1) * h;
            amps[i | mask] = (a0 - a1) * h;
        }
        Ok(self.with_amps(amps))
    }

    pub fn apply_pauli_x(&self, q: QubitLabel) -> Result<StateVector> {
        let mask = self.mask(q)?;
        let amps = (0..self.amps.len()).map(|i| self.amps[i ^ mask]).collect();
        Ok(self.with_amps(amps))
    }

    /// Controlled-NOT in the computational basis.
    pub fn apply_cnot(&self, control: QubitLabel, target: QubitLabel) -> Result<StateVector> {
        if control == target {
            return Err(QStateError::IdenticalLabels(control));
        }
        let cmask = self.mask(control)?;
        let tmask = self.mask(target)?;
        let amps = (0..self.amps.len())
            .map(|i| {
                if i & cmask != 0 {
                    self.amps[i ^ tmask]
                } else {
                    self.amps[i]
                }
            })
            .collect();
        Ok(self.with_amps(amps))
    }

    /// Every result of a projective measurement with nonzero probability,
    /// together with the renormalized post-measurement state. Unmeasured
    /// qubits keep their conditional state.
    pub fn outcome_distribution(&self, basis: MeasurementBasis, targets: &[QubitLabel]) -> Result<Vec<Branch>> {
        if targets.len() != basis.arity() {
            return Err(QStateError::ArityMismatch {
                basis,
                expected: basis.arity(),
                got: targets.len(),
            });
        }
        if targets.len() == 2 && targets[0] == targets[1] {
            return Err(QStateError::IdenticalLabels(targets[0]));
        }
        let masks = targets.iter().map(|&t| self.mask(t)).collect::<Result<Vec<_>>>()?;
        let target_bits: usize = masks.iter().sum();
        // Scatter a target sub-index (first target most significant) into a full index.
        let spread = |t: usize| -> usize {
            masks
                .iter()
                .enumerate()
                .filter(|(j, _)| t >> (masks.len() - 1 - j) & 1 == 1)
                .map(|(_, &m)| m)
                .sum()
        };

        let mut branches = Vec::new();
        for (value, eigen) in basis.eigenvectors() {
            let mut projected = vec![Complex64::new(0.0, 0.0); self.amps.len()];
            let mut probability = 0.0;
            for rest in (0..self.amps.len()).filter(|r| r & target_bits == 0) {
                let overlap: Complex64 = eigen
                    .iter()
                    .enumerate()
                    .map(|(t, e)| e.conj() * self.amps[rest | spread(t)])
                    .sum();
                probability += overlap.norm_sqr();
                for (t, e) in eigen.iter().enumerate() {
                    projected[rest | spread(t)] = e * overlap;
                }
            }
            if probability <= PROBABILITY_FLOOR {
                continue;
            }
            let scale = 1.0 / probability.sqrt();
            let state = self.with_amps(projected.into_iter().map(|a| a * scale).collect());
            branches.push(Branch {
                outcome: Outcome {
                    basis,
                    targets: targets.to_vec(),
                    result: value,
                    probability,
                },
                state,
            });
        }
        Ok(branches)
    }

    /// Samples one result from [`outcome_distribution`](Self::outcome_distribution).
    pub fn measure<R: Rng + ?Sized>(
        &self,
        basis: MeasurementBasis,
        targets: &[QubitLabel],
        rng: &mut R,
    ) -> Result<(Outcome, StateVector)> {
        let mut branches = self.outcome_distribution(basis, targets)?;
        let draw: f64 = rng.random();
        let mut cumulative = 0.0;
        let last = branches.len() - 1;
        let mut chosen = last;
        for (i, branch) in branches.iter().enumerate() {
            cumulative += branch.outcome.probability;
            if draw < cumulative {
                chosen = i;
                break;
            }
        }
        let branch = branches.swap_remove(chosen);
        Ok((branch.outcome, branch.state))
    }

    /// The same state with its qubits listed in `order`.
    pub fn reordered(&self, order: &[QubitLabel]) -> Result<StateVector> {
        if order.len() != self.labels.len() {
            return Err(QStateError::LabelMismatch);
        }
        check_labels(order)?;
        let masks = order.iter().map(|&l| self.mask(l)).collect::<Result<Vec<_>>>()?;
        let n = order.len();
        let amps = (0..self.amps.len())
            .map(|new_index| {
                let old: usize = masks
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| new_index >> (n - 1 - j) & 1 == 1)
                    .map(|(_, &m)| m)
                    .sum();
                self.amps[old]
            })
            .collect();
        Ok(StateVector {
            labels: order.to_vec(),
            amps,
        })
    }

    /// `⟨self|other⟩`, aligning `other` to this state's qubit order.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        let aligned = other.reordered(&self.labels)?;
        Ok(self.amps.iter().zip(&aligned.amps).map(|(a, b)| a.conj() * b).sum())
    }

    fn with_amps(&self, amps: Vec<Complex64>) -> StateVector {
        StateVector {
            labels: self.labels.clone(),
            amps,
        }
    }
}

fn check_labels(labels: &[QubitLabel]) -> Result<()> {
    if labels.is_empty() || labels.len() > MAX_QUBITS {
        return Err(QStateError::QubitCount(labels.len()));
    }
    for (i, l) in labels.iter().enumerate() {
        if labels[..i].contains(l) {
            return Err(QStateError::DuplicateLabel(*l));
        }
    }
    Ok(())
}

/// The entangled pair the source hands out, on `(B, C)`.
pub fn make_source_state(which: SourceState) -> StateVector {
    let amps = match which {
        SourceState::Psi => [0.5, 0.5, 0.5, -0.5],
        SourceState::Phi => [0.5, -0.5, -0.5, -0.5],
    };
    StateVector::from_real(vec![QubitLabel::B, QubitLabel::C], &amps).expect("source amplitudes are normalized")
}

/// `|⟨a|b⟩|²`; 1 exactly when the states agree up to global phase.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr().min(1.0))
}
