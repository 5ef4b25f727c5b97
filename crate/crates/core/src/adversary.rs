//! Dishonest-insider attacks.
//!
//! Bob* already holds particle B and intercepts C after Alice sends it and
//! before Charlie receives it. Whatever he does happens at that single point;
//! the delivered state then continues through the honest round.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::CaseClass;
use crate::qstate::{MeasuredValue, MeasurementBasis, Outcome, QStateError, QubitLabel, StateVector};

/// Single-qubit basis the attacker may use on B or C.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PauliBasis {
    Z,
    X,
}

impl From<PauliBasis> for MeasurementBasis {
    fn from(b: PauliBasis) -> Self {
        match b {
            PauliBasis::Z => MeasurementBasis::Z,
            PauliBasis::X => MeasurementBasis::X,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "&'static str", try_from = "String")]
pub enum AttackStrategy {
    NoAttack,
    /// Measure B then C, each in its own basis, and resend C as found.
    MeasureBoth {
        basis_b: PauliBasis,
        basis_c: PauliBasis,
    },
    /// Project (B, C) onto the Bell basis and resend C.
    BellMeasure,
    /// Entangle C with a fresh `|0⟩` ancilla B' through CNOT(C → B').
    CnotEntangle,
}

impl AttackStrategy {
    pub const ZZ: AttackStrategy = AttackStrategy::MeasureBoth {
        basis_b: PauliBasis::Z,
        basis_c: PauliBasis::Z,
    };
    pub const XZ: AttackStrategy = AttackStrategy::MeasureBoth {
        basis_b: PauliBasis::X,
        basis_c: PauliBasis::Z,
    };
    pub const ZX: AttackStrategy = AttackStrategy::MeasureBoth {
        basis_b: PauliBasis::Z,
        basis_c: PauliBasis::X,
    };
    pub const XX: AttackStrategy = AttackStrategy::MeasureBoth {
        basis_b: PauliBasis::X,
        basis_c: PauliBasis::X,
    };

    /// Every strategy this crate implements, in report order.
    pub const BUILTIN: [AttackStrategy; 7] = [
        AttackStrategy::NoAttack,
        AttackStrategy::ZZ,
        AttackStrategy::XZ,
        AttackStrategy::BellMeasure,
        AttackStrategy::CnotEntangle,
        AttackStrategy::ZX,
        AttackStrategy::XX,
    ];

    /// Short name used on the command line and in reports.
    pub fn name(self) -> &'static str {
        use PauliBasis::*;
        match self {
            AttackStrategy::NoAttack => "none",
            AttackStrategy::MeasureBoth { basis_b: Z, basis_c: Z } => "zz",
            AttackStrategy::MeasureBoth { basis_b: X, basis_c: Z } => "xz",
            AttackStrategy::MeasureBoth { basis_b: Z, basis_c: X } => "zx",
            AttackStrategy::MeasureBoth { basis_b: X, basis_c: X } => "xx",
            AttackStrategy::BellMeasure => "bell",
            AttackStrategy::CnotEntangle => "cnot",
        }
    }

    /// Whether the attack leaves an ancilla in the delivered state.
    pub fn uses_ancilla(self) -> bool {
        matches!(self, AttackStrategy::CnotEntangle)
    }
}

impl fmt::Display for AttackStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl From<AttackStrategy> for &'static str {
    fn from(a: AttackStrategy) -> Self {
        a.name()
    }
}

impl TryFrom<String> for AttackStrategy {
    type Error = AdversaryError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl FromStr for AttackStrategy {
    type Err = AdversaryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        AttackStrategy::BUILTIN
            .into_iter()
            .find(|a| a.name() == lower)
            .ok_or_else(|| AdversaryError::UnknownStrategy(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Inference {
    pub charlie_bit: u8,
    pub confidence: f64,
}

/// What Bob* learned during one round.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AttackerKnowledge {
    /// Results of the interception measurement, in the order taken.
    pub observations: Vec<Outcome>,
    /// Z readout of the ancilla, taken after the publications in case I.
    pub ancilla: Option<Outcome>,
    /// Filled in for case-I rounds once Bob's own bit is known.
    pub inference: Option<Inference>,
}

impl AttackerKnowledge {
    fn observed(&self, target: QubitLabel) -> Option<&Outcome> {
        self.observations.iter().find(|o| o.targets.contains(&target))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdversaryError {
    #[error("attacks act on the fresh (B, C) source pair, got qubits {0:?}")]
    UnexpectedLabels(Vec<QubitLabel>),
    #[error("inference only applies to case I rounds, not case {0}")]
    NotCaseI(CaseClass),
    #[error("the ancilla must be measured before inferring Charlie's bit")]
    AncillaNotMeasured,
    #[error("knowledge does not match strategy {0}")]
    MissingObservation(AttackStrategy),
    #[error("unknown attack strategy {0:?}")]
    UnknownStrategy(String),
    #[error(transparent)]
    State(#[from] QStateError),
}

/// Intercepts the source pair and returns the state delivered onward.
pub fn apply_attack<R: Rng + ?Sized>(
    strategy: AttackStrategy,
    joint_state: &StateVector,
    rng: &mut R,
) -> Result<(StateVector, AttackerKnowledge), AdversaryError> {
    if joint_state.labels() != [QubitLabel::B, QubitLabel::C] {
        return Err(AdversaryError::UnexpectedLabels(joint_state.labels().to_vec()));
    }
    let mut knowledge = AttackerKnowledge::default();
    let state = match strategy {
        AttackStrategy::NoAttack => joint_state.clone(),
        AttackStrategy::MeasureBoth { basis_b, basis_c } => {
            let (ob, s) = joint_state.measure(basis_b.into(), &[QubitLabel::B], rng)?;
            let (oc, s) = s.measure(basis_c.into(), &[QubitLabel::C], rng)?;
            knowledge.observations.extend([ob, oc]);
            s
        }
        AttackStrategy::BellMeasure => {
            let (o, s) = joint_state.measure(MeasurementBasis::Bell, &[QubitLabel::B, QubitLabel::C], rng)?;
            knowledge.observations.push(o);
            s
        }
        AttackStrategy::CnotEntangle => joint_state
            .tensor(&StateVector::single(QubitLabel::BPrime, MeasuredValue::Zero)?)?
            .apply_cnot(QubitLabel::C, QubitLabel::BPrime)?,
    };
    Ok((state, knowledge))
}

/// Reads the ancilla in Z after the publications. A no-op for strategies
/// without an ancilla.
pub fn measure_ancilla<R: Rng + ?Sized>(
    strategy: AttackStrategy,
    state: &StateVector,
    knowledge: &mut AttackerKnowledge,
    rng: &mut R,
) -> Result<StateVector, AdversaryError> {
    if !strategy.uses_ancilla() {
        return Ok(state.clone());
    }
    let (o, s) = state.measure(MeasurementBasis::Z, &[QubitLabel::BPrime], rng)?;
    knowledge.ancilla = Some(o);
    Ok(s)
}

/// Bob*'s guess at Charlie's case-I bit, given his own published bit.
///
/// `None` means the attack carries no information about Charlie's bit.
pub fn infer_charlie_bit(
    strategy: AttackStrategy,
    knowledge: &AttackerKnowledge,
    case: CaseClass,
    bob_bit: u8,
) -> Result<Option<Inference>, AdversaryError> {
    if case != CaseClass::I {
        return Err(AdversaryError::NotCaseI(case));
    }
    let certain = |bit: u8| {
        Some(Inference {
            charlie_bit: bit,
            confidence: 1.0,
        })
    };
    let missing = || AdversaryError::MissingObservation(strategy);
    Ok(match strategy {
        AttackStrategy::NoAttack => None,
        AttackStrategy::MeasureBoth {
            basis_c: PauliBasis::X, ..
        } => None,
        AttackStrategy::MeasureBoth {
            basis_c: PauliBasis::Z, ..
        } => {
            let bit = knowledge
                .observed(QubitLabel::C)
                .and_then(|o| o.result.as_bit())
                .ok_or_else(missing)?;
            certain(bit)
        }
        AttackStrategy::BellMeasure => {
            let bell = knowledge.observed(QubitLabel::C).ok_or_else(missing)?.result;
            match bell {
                // φ± have equal bits, ψ± opposite bits.
                MeasuredValue::PhiPlus | MeasuredValue::PhiMinus => certain(bob_bit),
                MeasuredValue::PsiPlus | MeasuredValue::PsiMinus => certain(bob_bit ^ 1),
                _ => return Err(missing()),
            }
        }
        AttackStrategy::CnotEntangle => {
            let bit = knowledge
                .ancilla
                .as_ref()
                .ok_or(AdversaryError::AncillaNotMeasured)?
                .result
                .as_bit()
                .ok_or_else(missing)?;
            certain(bit)
        }
    })
}

/// The bit Bob* would claim for Charlie: the inference when there is one,
/// otherwise a blind guess equal to his own bit.
pub fn best_guess(inference: Option<Inference>, bob_bit: u8) -> u8 {
    inference.map_or(bob_bit, |i| i.charlie_bit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{fidelity, make_source_state, SourceState};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use MeasuredValue::*;
    use QubitLabel::*;

    const TOL: f64 = 1e-12;

    fn psi() -> StateVector {
        make_source_state(SourceState::Psi)
    }

    fn product(b: MeasuredValue, c: MeasuredValue) -> StateVector {
        StateVector::single(B, b)
            .unwrap()
            .tensor(&StateVector::single(C, c).unwrap())
            .unwrap()
    }

    /// Empirical branch frequencies of an attack, keyed by the delivered state.
    fn sample_branches(strategy: AttackStrategy, expected: &[StateVector]) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 20_000;
        let mut counts = vec![0usize; expected.len()];
        for _ in 0..n {
            let (s, _) = apply_attack(strategy, &psi(), &mut rng).unwrap();
            assert!((s.norm_sqr() - 1.0).abs() < TOL);
            let i = expected
                .iter()
                .position(|e| (fidelity(e, &s).unwrap() - 1.0).abs() < 1e-9)
                .unwrap_or_else(|| panic!("{strategy}: unexpected branch {s:?}"));
            counts[i] += 1;
        }
        counts.into_iter().map(|c| c as f64 / n as f64).collect()
    }

    fn assert_uniform(freqs: &[f64]) {
        let p = 1.0 / freqs.len() as f64;
        let se = (p * (1.0 - p) / 20_000.0).sqrt();
        for f in freqs {
            assert!((f - p).abs() <= 4.0 * se, "{freqs:?}");
        }
    }

    #[test]
    fn no_attack_is_transparent() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (s, k) = apply_attack(AttackStrategy::NoAttack, &psi(), &mut rng).unwrap();
        assert_eq!(s, psi());
        assert_eq!(k, AttackerKnowledge::default());
    }

    #[test]
    fn zz_collapses_to_four_product_states() {
        let branches = [
            product(Zero, Zero),
            product(Zero, One),
            product(One, Zero),
            product(One, One),
        ];
        assert_uniform(&sample_branches(AttackStrategy::ZZ, &branches));
    }

    #[test]
    fn xz_collapses_to_correlated_pairs() {
        // X on B then Z on C of (|+0⟩ + |−1⟩)/√2 leaves |+0⟩ or |−1⟩.
        let branches = [product(Plus, Zero), product(Minus, One)];
        assert_uniform(&sample_branches(AttackStrategy::XZ, &branches));
    }

    #[test]
    fn zx_branches_follow_outcome_distribution() {
        // Oracle: enumerate the two-step measurement with outcome_distribution.
        let mut oracle = Vec::new();
        for b in psi().outcome_distribution(MeasurementBasis::Z, &[B]).unwrap() {
            for c in b.state.outcome_distribution(MeasurementBasis::X, &[C]).unwrap() {
                oracle.push((c.state, b.outcome.probability * c.outcome.probability));
            }
        }
        assert_eq!(oracle.len(), 2);
        let states: Vec<_> = oracle.iter().map(|(s, _)| s.clone()).collect();
        assert!((fidelity(&states[0], &product(Zero, Plus)).unwrap() - 1.0).abs() < TOL);
        assert!((fidelity(&states[1], &product(One, Minus)).unwrap() - 1.0).abs() < TOL);
        let freqs = sample_branches(AttackStrategy::ZX, &states);
        for ((_, p), f) in oracle.iter().zip(freqs) {
            assert!((p - 0.5).abs() < TOL);
            assert!((f - p).abs() <= 4.0 * (p * (1.0 - p) / 20_000.0).sqrt());
        }
    }

    #[test]
    fn bell_attack_yields_phi_minus_or_psi_plus() {
        let branches = [
            StateVector::bell(B, C, PhiMinus).unwrap(),
            StateVector::bell(B, C, PsiPlus).unwrap(),
        ];
        assert_uniform(&sample_branches(AttackStrategy::BellMeasure, &branches));
    }

    #[test]
    fn cnot_attack_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (s, k) = apply_attack(AttackStrategy::CnotEntangle, &psi(), &mut rng).unwrap();
        let eq11 = StateVector::from_real(vec![B, C, BPrime], &[0.5, 0.0, 0.0, 0.5, 0.5, 0.0, 0.0, -0.5]).unwrap();
        assert!((fidelity(&s, &eq11).unwrap() - 1.0).abs() < TOL);
        assert!(k.observations.is_empty());
    }

    #[test]
    fn attack_rejects_foreign_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let single = StateVector::single(C, Zero).unwrap();
        assert!(matches!(
            apply_attack(AttackStrategy::ZZ, &single, &mut rng),
            Err(AdversaryError::UnexpectedLabels(_))
        ));
        let swapped = psi().reordered(&[C, B]).unwrap();
        assert!(apply_attack(AttackStrategy::NoAttack, &swapped, &mut rng).is_err());
    }

    fn bell_knowledge(v: MeasuredValue) -> AttackerKnowledge {
        AttackerKnowledge {
            observations: vec![Outcome {
                basis: MeasurementBasis::Bell,
                targets: vec![B, C],
                result: v,
                probability: 0.5,
            }],
            ..Default::default()
        }
    }

    #[test]
    fn bell_inference() {
        let k = bell_knowledge(PhiMinus);
        let inf = infer_charlie_bit(AttackStrategy::BellMeasure, &k, CaseClass::I, 0)
            .unwrap()
            .unwrap();
        assert_eq!(inf.charlie_bit, 0);
        assert_eq!(inf.confidence, 1.0);
        let k = bell_knowledge(PsiPlus);
        let inf = infer_charlie_bit(AttackStrategy::BellMeasure, &k, CaseClass::I, 0)
            .unwrap()
            .unwrap();
        assert_eq!(inf.charlie_bit, 1);
    }

    #[test]
    fn inference_outside_case_one_is_an_error() {
        let k = bell_knowledge(PhiMinus);
        assert_eq!(
            infer_charlie_bit(AttackStrategy::BellMeasure, &k, CaseClass::III, 0),
            Err(AdversaryError::NotCaseI(CaseClass::III))
        );
    }

    #[test]
    fn no_attack_and_x_on_c_give_no_inference() {
        let k = AttackerKnowledge::default();
        assert_eq!(
            infer_charlie_bit(AttackStrategy::NoAttack, &k, CaseClass::I, 1),
            Ok(None)
        );
        assert_eq!(infer_charlie_bit(AttackStrategy::XX, &k, CaseClass::I, 1), Ok(None));
        assert_eq!(best_guess(None, 1), 1);
    }

    #[test]
    fn cnot_inference_reads_the_ancilla() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (s, mut k) = apply_attack(AttackStrategy::CnotEntangle, &psi(), &mut rng).unwrap();
        assert_eq!(
            infer_charlie_bit(AttackStrategy::CnotEntangle, &k, CaseClass::I, 0),
            Err(AdversaryError::AncillaNotMeasured)
        );
        // Oracle: the only (C, B') patterns present are 00 and 11.
        for i in 0..8 {
            let c = (i >> 1) & 1;
            let bp = i & 1;
            if c != bp {
                assert!(s.amplitudes()[i].norm() < TOL);
            }
        }
        let s = measure_ancilla(AttackStrategy::CnotEntangle, &s, &mut k, &mut rng).unwrap();
        let anc = k.ancilla.as_ref().unwrap().result.as_bit().unwrap();
        let (oc, _) = s.measure(MeasurementBasis::Z, &[C], &mut rng).unwrap();
        assert_eq!(oc.result.as_bit().unwrap(), anc);
        let inf = infer_charlie_bit(AttackStrategy::CnotEntangle, &k, CaseClass::I, 0)
            .unwrap()
            .unwrap();
        assert_eq!(inf.charlie_bit, anc);
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in AttackStrategy::BUILTIN {
            assert_eq!(s.name().parse::<AttackStrategy>().unwrap(), s);
        }
        assert!("eve".parse::<AttackStrategy>().is_err());
    }
}
