//! The secret-sharing round engine.
//!
//! A run has two phases. In the transmission phase every round prepares a
//! source pair, lets the attacker (if any) intercept C, and lets Bob and
//! Charlie act on their particles. Alice only holds the returned particles in
//! [`QuantumMemory`] at that point. Once both parties have published their
//! actions (and, in the reorder variant, their orders) she restores the pairs
//! and runs her case-dependent measurement. Sifting, the error checks and key
//! assembly happen last.

mod party;
mod reorder;
mod rules;
mod streams;

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{self, AdversaryError, AttackStrategy, AttackerKnowledge};
use crate::qstate::{make_source_state, MeasurementBasis, Outcome, QStateError, QubitLabel, SourceState, StateVector};

pub use party::{act, choose_action, ActionKind, ClassicalPort, PartyAction};
pub use reorder::{Permutation, PermutationError};
pub use rules::ConsistencyRules;
pub use streams::{substream, Role, RoundStreams};

pub const DEFAULT_CHECK_FRACTION: f64 = 0.5;
pub const DEFAULT_ERROR_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CaseClass {
    I,
    II,
    III,
    IV,
}

impl CaseClass {
    pub const ALL: [CaseClass; 4] = [CaseClass::I, CaseClass::II, CaseClass::III, CaseClass::IV];
}

impl fmt::Display for CaseClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CaseClass::I => "I",
            CaseClass::II => "II",
            CaseClass::III => "III",
            CaseClass::IV => "IV",
        };
        f.write_str(s)
    }
}

/// Which operation Alice owes a round, from the two published actions.
pub fn classify_case(bob: PartyAction, charlie: PartyAction) -> CaseClass {
    match (bob.kind(), charlie.kind()) {
        (ActionKind::MeasResend, ActionKind::MeasResend) => CaseClass::I,
        (ActionKind::MeasResend, ActionKind::Reflect) => CaseClass::II,
        (ActionKind::Reflect, ActionKind::MeasResend) => CaseClass::III,
        (ActionKind::Reflect, ActionKind::Reflect) => CaseClass::IV,
    }
}

/// Key bit shared by a case-I round.
pub fn sift_key_bit(bob_bit: u8, charlie_bit: u8) -> u8 {
    (bob_bit ^ charlie_bit) & 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Consistent,
    Inconsistent,
    KeyCandidate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Basic,
    Reorder,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::Basic => f.write_str("basic"),
            Variant::Reorder => f.write_str("reorder"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub index: usize,
    pub bob: PartyAction,
    pub charlie: PartyAction,
    pub case: CaseClass,
    /// Alice's results with B first, then C (a single entry for case IV).
    pub alice_outcomes: Vec<Outcome>,
    pub verdict: Verdict,
    pub key_bit_alice: Option<u8>,
    pub attack_transcript: Option<AttackerKnowledge>,
}

impl RoundRecord {
    /// Alice's OPERATION1 pair versus the published bits. `None` outside case I.
    pub fn case_i_disagreement(&self) -> Option<bool> {
        if self.case != CaseClass::I {
            return None;
        }
        let alice: Vec<_> = self.alice_outcomes.iter().map(|o| o.result.as_bit()).collect();
        Some(alice != [self.bob.bit(), self.charlie.bit()])
    }

    /// Whether this round counts as an error for its case's check.
    pub fn is_error(&self) -> bool {
        match self.verdict {
            Verdict::Inconsistent => true,
            Verdict::Consistent => false,
            Verdict::KeyCandidate => self.case_i_disagreement() == Some(true),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub n_rounds: usize,
    pub source: SourceState,
    pub variant: Variant,
    /// Fraction of case-I rounds sacrificed for the disagreement check.
    pub check_fraction: f64,
    pub error_threshold: f64,
    pub seed: u64,
}

impl ProtocolConfig {
    pub fn new(n_rounds: usize, seed: u64) -> Self {
        ProtocolConfig {
            n_rounds,
            source: SourceState::Psi,
            variant: Variant::Basic,
            check_fraction: DEFAULT_CHECK_FRACTION,
            error_threshold: DEFAULT_ERROR_THRESHOLD,
            seed,
        }
    }

    pub fn with_source(mut self, source: SourceState) -> Self {
        self.source = source;
        self
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.n_rounds == 0 {
            return Err(ProtocolError::InvalidConfig("n_rounds must be at least 1".into()));
        }
        if !(self.check_fraction > 0.0 && self.check_fraction < 1.0) {
            return Err(ProtocolError::InvalidConfig(format!(
                "check_fraction must lie in (0, 1), got {}",
                self.check_fraction
            )));
        }
        if !(0.0..=1.0).contains(&self.error_threshold) {
            return Err(ProtocolError::InvalidConfig(format!(
                "error_threshold must lie in [0, 1], got {}",
                self.error_threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Party {
    Bob,
    Charlie,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AbortReason {
    /// One or more checked cases exceeded the threshold.
    ErrorRateExceeded {
        offending: Vec<(CaseClass, f64)>,
        threshold: f64,
    },
    /// Every case-I round was spent on the check.
    NoKeyRounds,
    InvalidOrder {
        party: Party,
        error: PermutationError,
    },
    /// A published order does not match the particles Alice received.
    OrderMismatch {
        party: Party,
    },
}

impl fmt::Display for AbortReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbortReason::ErrorRateExceeded { offending, threshold } => {
                write!(f, "error rate above threshold {threshold} in case")?;
                for (i, (case, rate)) in offending.iter().enumerate() {
                    let sep = if i == 0 { " " } else { ", " };
                    write!(f, "{sep}{case} ({rate:.6})")?;
                }
                Ok(())
            }
            AbortReason::NoKeyRounds => f.write_str("no case I rounds left after the check subset"),
            AbortReason::InvalidOrder { party, error } => {
                write!(f, "{party:?} published an invalid order: {error}")
            }
            AbortReason::OrderMismatch { party } => {
                write!(
                    f,
                    "{party:?} published an order that does not match the received particles"
                )
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    State(#[from] QStateError),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
}

/// A round between transmission and Alice's measurement.
#[derive(Debug, Clone)]
pub struct InFlight {
    pub index: usize,
    state: StateVector,
    pub bob: PartyAction,
    pub charlie: PartyAction,
    pub knowledge: AttackerKnowledge,
    streams: RoundStreams,
}

/// Particles Alice holds before the publications.
///
/// Pairs are kept by round index because they are jointly entangled; the
/// slot tables record which pair's particle arrived in which position.
#[derive(Debug)]
pub struct QuantumMemory {
    pairs: Vec<InFlight>,
    b_slots: Vec<usize>,
    c_slots: Vec<usize>,
}

impl QuantumMemory {
    /// Receive the B and C sequences as sent under the parties' private orders.
    pub fn receive(pairs: Vec<InFlight>, bob_order: &Permutation, charlie_order: &Permutation) -> Self {
        let indices: Vec<usize> = pairs.iter().map(|p| p.index).collect();
        QuantumMemory {
            b_slots: bob_order.scatter(indices.clone()),
            c_slots: charlie_order.scatter(indices),
            pairs,
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Undo the published orders and hand back the pairs in round order.
    pub fn restore(self, bob_order: &[usize], charlie_order: &[usize]) -> Result<Vec<InFlight>, AbortReason> {
        let n = self.pairs.len();
        let check = |party: Party, order: &[usize], slots: &[usize]| -> Result<(), AbortReason> {
            let perm = if order.len() == n {
                Permutation::from_slots(order.to_vec())
            } else {
                Err(PermutationError::Length {
                    expected: n,
                    got: order.len(),
                })
            }
            .map_err(|error| AbortReason::InvalidOrder { party, error })?;
            if (0..n).any(|i| slots[perm.slot_of(i)] != self.pairs[i].index) {
                return Err(AbortReason::OrderMismatch { party });
            }
            Ok(())
        };
        check(Party::Bob, bob_order, &self.b_slots)?;
        check(Party::Charlie, charlie_order, &self.c_slots)?;
        Ok(self.pairs)
    }
}

/// Source preparation, interception and both parties' actions for one round.
pub fn transmit(
    source: SourceState,
    attack: AttackStrategy,
    index: usize,
    mut streams: RoundStreams,
) -> Result<InFlight, ProtocolError> {
    let fresh = make_source_state(source);
    let (mut state, knowledge) = adversary::apply_attack(attack, &fresh, &mut streams.attacker)?;
    let bob_kind = choose_action(&mut streams.bob);
    let bob = act(
        bob_kind,
        ClassicalPort::new(&mut state, QubitLabel::B, &mut streams.bob),
    )?;
    let charlie_kind = choose_action(&mut streams.charlie);
    let charlie = act(
        charlie_kind,
        ClassicalPort::new(&mut state, QubitLabel::C, &mut streams.charlie),
    )?;
    Ok(InFlight {
        index,
        state,
        bob,
        charlie,
        knowledge,
        streams,
    })
}

/// Alice's case-dependent operation on a restored pair.
pub fn alice_process(
    flight: InFlight,
    rules: &ConsistencyRules,
    attack: AttackStrategy,
) -> Result<RoundRecord, ProtocolError> {
    use MeasurementBasis::{Bell, X, Z};
    use QubitLabel::{B, C};

    let InFlight {
        index,
        state,
        bob,
        charlie,
        mut knowledge,
        mut streams,
    } = flight;
    let case = classify_case(bob, charlie);
    let rng = &mut streams.alice;

    let measure_pair = |state: &StateVector, bb, cb, rng: &mut _| -> Result<_, ProtocolError> {
        let (ob, s) = state.measure(bb, &[B], rng)?;
        let (oc, s) = s.measure(cb, &[C], rng)?;
        Ok((ob, oc, s))
    };

    let (alice_outcomes, verdict, key_bit_alice) = match case {
        CaseClass::I => {
            let (ob, oc, post) = measure_pair(&state, Z, Z, rng)?;
            let b = ob.result.as_bit().expect("Z result");
            let c = oc.result.as_bit().expect("Z result");
            adversary::measure_ancilla(attack, &post, &mut knowledge, &mut streams.attacker)?;
            let bob_bit = bob.bit().expect("case I means Bob measured");
            knowledge.inference = adversary::infer_charlie_bit(attack, &knowledge, case, bob_bit)?;
            (vec![ob, oc], Verdict::KeyCandidate, Some(sift_key_bit(b, c)))
        }
        CaseClass::II => {
            let (ob, oc, _) = measure_pair(&state, Z, X, rng)?;
            let ok = rules.accepts_ii(ob.result, oc.result);
            (vec![ob, oc], consistency(ok), None)
        }
        CaseClass::III => {
            let (ob, oc, _) = measure_pair(&state, X, Z, rng)?;
            let ok = rules.accepts_iii(ob.result, oc.result);
            (vec![ob, oc], consistency(ok), None)
        }
        CaseClass::IV => {
            let (o, _) = state.apply_hadamard(B)?.measure(Bell, &[B, C], rng)?;
            let ok = rules.accepts_iv(o.result);
            (vec![o], consistency(ok), None)
        }
    };

    Ok(RoundRecord {
        index,
        bob,
        charlie,
        case,
        alice_outcomes,
        verdict,
        key_bit_alice,
        attack_transcript: (attack != AttackStrategy::NoAttack).then_some(knowledge),
    })
}

fn consistency(ok: bool) -> Verdict {
    if ok {
        Verdict::Consistent
    } else {
        Verdict::Inconsistent
    }
}

/// One full round in the basic ordering, on the streams derived from
/// `(cfg.seed, index)`.
pub fn run_round(cfg: &ProtocolConfig, attack: AttackStrategy, index: usize) -> Result<RoundRecord, ProtocolError> {
    let flight = transmit(cfg.source, attack, index, RoundStreams::derive(cfg.seed, index))?;
    alice_process(flight, ConsistencyRules::for_source(cfg.source), attack)
}

/// Sends the return sequences under the parties' private orders, then has
/// Alice undo the published orders.
pub fn apply_reorder_variant(
    in_flight: Vec<InFlight>,
    bob_order: &Permutation,
    charlie_order: &Permutation,
) -> Result<Vec<InFlight>, AbortReason> {
    let memory = QuantumMemory::receive(in_flight, bob_order, charlie_order);
    memory.restore(bob_order.as_slice(), charlie_order.as_slice())
}

/// Alice's key and nothing else.
#[derive(Debug, Clone, Copy)]
pub struct AliceView<'a> {
    pub key: &'a [u8],
}

/// One receiver's share and nothing else.
#[derive(Debug, Clone, Copy)]
pub struct ShareView<'a> {
    pub party: Party,
    pub share: &'a [u8],
}

/// Bob and Charlie combining their shares.
pub fn reconstruct_key(bob: ShareView<'_>, charlie: ShareView<'_>) -> Vec<u8> {
    bob.share
        .iter()
        .zip(charlie.share)
        .map(|(&b, &c)| sift_key_bit(b, c))
        .collect()
}

#[derive(Debug, Clone)]
pub struct ProtocolResult {
    pub config: ProtocolConfig,
    pub attack: AttackStrategy,
    pub rounds: Vec<RoundRecord>,
    /// `None` when a case saw no rounds (or no checked rounds for case I).
    pub case_error_rates: BTreeMap<CaseClass, Option<f64>>,
    /// Case-I round indices sacrificed for the check.
    pub check_indices: Vec<usize>,
    /// Case-I round indices that make up the key.
    pub key_indices: Vec<usize>,
    pub abort: Option<AbortReason>,
    final_key_alice: Vec<u8>,
    share_bob: Vec<u8>,
    share_charlie: Vec<u8>,
}

impl ProtocolResult {
    pub fn aborted(&self) -> bool {
        self.abort.is_some()
    }

    pub fn key_len(&self) -> usize {
        self.final_key_alice.len()
    }

    pub fn alice_view(&self) -> AliceView<'_> {
        AliceView {
            key: &self.final_key_alice,
        }
    }

    pub fn bob_view(&self) -> ShareView<'_> {
        ShareView {
            party: Party::Bob,
            share: &self.share_bob,
        }
    }

    pub fn charlie_view(&self) -> ShareView<'_> {
        ShareView {
            party: Party::Charlie,
            share: &self.share_charlie,
        }
    }

    /// Alice's key equals Bob's share XOR Charlie's share at every position.
    pub fn key_xor_consistent(&self) -> bool {
        self.final_key_alice.len() == self.share_bob.len()
            && reconstruct_key(self.bob_view(), self.charlie_view()) == self.final_key_alice
    }

    pub fn max_error_rate(&self) -> Option<f64> {
        self.case_error_rates.values().flatten().copied().reduce(f64::max)
    }
}

/// Runs every round, the checks and the key assembly.
pub fn run_protocol(cfg: &ProtocolConfig, attack: AttackStrategy) -> Result<ProtocolResult, ProtocolError> {
    let orders = match cfg.variant {
        Variant::Basic => None,
        Variant::Reorder => {
            let n = cfg.n_rounds;
            Some((
                Permutation::random(n, &mut substream(cfg.seed, Role::BobOrder, 0)),
                Permutation::random(n, &mut substream(cfg.seed, Role::CharlieOrder, 0)),
            ))
        }
    };
    run_with_orders(cfg, attack, orders)
}

/// [`run_protocol`] with explicit return orders; `None` sends in round order.
pub fn run_with_orders(
    cfg: &ProtocolConfig,
    attack: AttackStrategy,
    orders: Option<(Permutation, Permutation)>,
) -> Result<ProtocolResult, ProtocolError> {
    cfg.validate()?;
    let in_flight = (0..cfg.n_rounds)
        .into_par_iter()
        .map(|i| transmit(cfg.source, attack, i, RoundStreams::derive(cfg.seed, i)))
        .collect::<Result<Vec<_>, _>>()?;

    let restored = match &orders {
        None => Ok(in_flight),
        Some((bob, charlie)) => apply_reorder_variant(in_flight, bob, charlie),
    };
    let restored = match restored {
        Ok(r) => r,
        Err(reason) => return Ok(aborted_early(cfg, attack, reason)),
    };

    let rules = ConsistencyRules::for_source(cfg.source);
    let rounds = restored
        .into_par_iter()
        .map(|f| alice_process(f, rules, attack))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(finalize(cfg, attack, rounds))
}

fn aborted_early(cfg: &ProtocolConfig, attack: AttackStrategy, reason: AbortReason) -> ProtocolResult {
    ProtocolResult {
        config: cfg.clone(),
        attack,
        rounds: Vec::new(),
        case_error_rates: CaseClass::ALL.iter().map(|&c| (c, None)).collect(),
        check_indices: Vec::new(),
        key_indices: Vec::new(),
        abort: Some(reason),
        final_key_alice: Vec::new(),
        share_bob: Vec::new(),
        share_charlie: Vec::new(),
    }
}

fn finalize(cfg: &ProtocolConfig, attack: AttackStrategy, rounds: Vec<RoundRecord>) -> ProtocolResult {
    let mut case_error_rates = BTreeMap::new();
    for case in [CaseClass::II, CaseClass::III, CaseClass::IV] {
        let (total, errors) = rounds
            .iter()
            .filter(|r| r.case == case)
            .fold((0usize, 0usize), |(t, e), r| (t + 1, e + r.is_error() as usize));
        case_error_rates.insert(case, (total > 0).then(|| errors as f64 / total as f64));
    }

    let case_i: Vec<usize> = rounds
        .iter()
        .filter(|r| r.case == CaseClass::I)
        .map(|r| r.index)
        .collect();
    let n_check = ((cfg.check_fraction * case_i.len() as f64).ceil() as usize).min(case_i.len());
    let mut check_rng = substream(cfg.seed, Role::AliceCheck, 0);
    let mut picked = index::sample(&mut check_rng, case_i.len(), n_check).into_vec();
    picked.sort_unstable();
    let check_indices: Vec<usize> = picked.iter().map(|&k| case_i[k]).collect();
    let check_errors = check_indices.iter().filter(|&&i| rounds[i].is_error()).count();
    case_error_rates.insert(
        CaseClass::I,
        (n_check > 0).then(|| check_errors as f64 / n_check as f64),
    );

    let key_indices: Vec<usize> = case_i
        .iter()
        .copied()
        .filter(|i| check_indices.binary_search(i).is_err())
        .collect();

    let offending: Vec<(CaseClass, f64)> = [CaseClass::II, CaseClass::III, CaseClass::IV, CaseClass::I]
        .into_iter()
        .filter_map(|c| {
            case_error_rates[&c]
                .filter(|&r| r > cfg.error_threshold)
                .map(|r| (c, r))
        })
        .collect();
    let abort = if !offending.is_empty() {
        Some(AbortReason::ErrorRateExceeded {
            offending,
            threshold: cfg.error_threshold,
        })
    } else if key_indices.is_empty() {
        Some(AbortReason::NoKeyRounds)
    } else {
        None
    };

    let (final_key_alice, share_bob, share_charlie) = if abort.is_none() {
        let r = |i: usize| &rounds[i];
        (
            key_indices
                .iter()
                .map(|&i| r(i).key_bit_alice.expect("case I key bit"))
                .collect(),
            key_indices
                .iter()
                .map(|&i| r(i).bob.bit().expect("case I bit"))
                .collect(),
            key_indices
                .iter()
                .map(|&i| r(i).charlie.bit().expect("case I bit"))
                .collect(),
        )
    } else {
        (Vec::new(), Vec::new(), Vec::new())
    };

    ProtocolResult {
        config: cfg.clone(),
        attack,
        rounds,
        case_error_rates,
        check_indices,
        key_indices,
        abort,
        final_key_alice,
        share_bob,
        share_charlie,
    }
}
