//! Detection probabilities per case, exactly and by sampling.
//!
//! [`exact_case_rates`] walks every branch of (attack collapse) × (party
//! measurements) × (Alice's operation) in ℚ(√2) arithmetic and never touches
//! the floating-point simulator. [`montecarlo_case_rates`] estimates the same
//! quantities from [`run_protocol`] records, so the two can be checked
//! against each other.

pub mod exact;

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Rational64;
use num_traits::Zero;

use crate::adversary::{self, AttackStrategy, AttackerKnowledge, PauliBasis};
use crate::protocol::{run_protocol, CaseClass, ProtocolConfig, ProtocolError, ProtocolResult};
use crate::qstate::{MeasuredValue, MeasurementBasis, Outcome, QubitLabel, SourceState};
use exact::{ExactState, Surd};

use MeasurementBasis::{Bell, X, Z};
use QubitLabel::{BPrime, B, C};

/// Caveat attached to every exact report.
pub const ATTACKER_RESENDS_FAITHFULLY: &str =
    "case I rate assumes the attacker resends the collapsed eigenstate of C unchanged";

#[derive(Debug, Clone, PartialEq)]
pub struct ExactCaseReport {
    pub strategy: AttackStrategy,
    pub source: SourceState,
    /// Detection probability conditioned on each case.
    pub per_case: BTreeMap<CaseClass, Rational64>,
    /// Uniform average over the four cases.
    pub average: Rational64,
    /// Probability the attacker's claim about Charlie's case-I bit is right.
    pub leakage_case_i: Rational64,
}

impl ExactCaseReport {
    pub fn rates(&self) -> [Rational64; 4] {
        CaseClass::ALL.map(|c| self.per_case[&c])
    }
}

/// Result sets an undisturbed source can produce, found by enumeration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivedRules {
    pub case_ii: BTreeSet<(MeasuredValue, MeasuredValue)>,
    pub case_iii: BTreeSet<(MeasuredValue, MeasuredValue)>,
    pub case_iv: BTreeSet<MeasuredValue>,
}

pub fn exact_source(source: SourceState) -> ExactState {
    use MeasuredValue::{Minus, One, Plus, Zero};
    let h = Surd::inv_sqrt2();
    match source {
        // (|+0⟩ + |−1⟩)/√2
        SourceState::Psi => ExactState::product((B, Plus), (C, Zero))
            .plus(&ExactState::product((B, Minus), (C, One)))
            .scale(h),
        // −(|+1⟩ − |−0⟩)/√2
        SourceState::Phi => ExactState::product((B, Plus), (C, One))
            .plus(&ExactState::product((B, Minus), (C, Zero)).scale(-Surd::int(1)))
            .scale(-h),
    }
}

fn joint_support(
    state: &ExactState,
    first: (MeasurementBasis, QubitLabel),
    second: (MeasurementBasis, QubitLabel),
) -> BTreeSet<(MeasuredValue, MeasuredValue)> {
    let mut out = BTreeSet::new();
    for (a, s) in state.project(first.0, &[first.1]) {
        for (b, _) in s.project(second.0, &[second.1]) {
            out.insert((a, b));
        }
    }
    out
}

pub fn derive_rules(source: SourceState) -> DerivedRules {
    let s = exact_source(source);
    DerivedRules {
        case_ii: joint_support(&s, (Z, B), (X, C)),
        case_iii: joint_support(&s, (X, B), (Z, C)),
        case_iv: s
            .hadamard(B)
            .project(Bell, &[B, C])
            .into_iter()
            .map(|(v, _)| v)
            .collect(),
    }
}

fn outcome(basis: MeasurementBasis, targets: &[QubitLabel], result: MeasuredValue) -> Outcome {
    Outcome {
        basis,
        targets: targets.to_vec(),
        result,
        // Only the result matters to the inference rules.
        probability: f64::NAN,
    }
}

fn attack_branches(strategy: AttackStrategy, start: &ExactState) -> Vec<(ExactState, AttackerKnowledge)> {
    let basis = |b: PauliBasis| match b {
        PauliBasis::Z => Z,
        PauliBasis::X => X,
    };
    match strategy {
        AttackStrategy::NoAttack => vec![(start.clone(), AttackerKnowledge::default())],
        AttackStrategy::MeasureBoth { basis_b, basis_c } => {
            let (bb, bc) = (basis(basis_b), basis(basis_c));
            let mut out = Vec::new();
            for (vb, s) in start.project(bb, &[B]) {
                for (vc, s) in s.project(bc, &[C]) {
                    let k = AttackerKnowledge {
                        observations: vec![outcome(bb, &[B], vb), outcome(bc, &[C], vc)],
                        ..Default::default()
                    };
                    out.push((s, k));
                }
            }
            out
        }
        AttackStrategy::BellMeasure => start
            .project(Bell, &[B, C])
            .into_iter()
            .map(|(v, s)| {
                let k = AttackerKnowledge {
                    observations: vec![outcome(Bell, &[B, C], v)],
                    ..Default::default()
                };
                (s, k)
            })
            .collect(),
        AttackStrategy::CnotEntangle => {
            vec![(start.with_ancilla(BPrime).cnot(C, BPrime), AttackerKnowledge::default())]
        }
    }
}

/// Z-measure-resend if the party measures, otherwise pass through.
fn party_branches(state: &ExactState, particle: QubitLabel, measures: bool) -> Vec<(Option<u8>, ExactState)> {
    if !measures {
        return vec![(None, state.clone())];
    }
    state
        .project(Z, &[particle])
        .into_iter()
        .map(|(v, s)| (v.as_bit(), s))
        .collect()
}

struct CaseTotals {
    detected: Rational64,
    total: Rational64,
    leak_correct: Rational64,
}

fn enumerate_case(strategy: AttackStrategy, source: SourceState, case: CaseClass, rules: &DerivedRules) -> CaseTotals {
    let (bob_measures, charlie_measures) = match case {
        CaseClass::I => (true, true),
        CaseClass::II => (true, false),
        CaseClass::III => (false, true),
        CaseClass::IV => (false, false),
    };
    let mut t = CaseTotals {
        detected: Rational64::zero(),
        total: Rational64::zero(),
        leak_correct: Rational64::zero(),
    };
    for (after_attack, knowledge) in attack_branches(strategy, &exact_source(source)) {
        for (bob_bit, s) in party_branches(&after_attack, B, bob_measures) {
            for (charlie_bit, s) in party_branches(&s, C, charlie_measures) {
                match case {
                    CaseClass::I => {
                        let (bob_bit, charlie_bit) = (bob_bit.unwrap(), charlie_bit.unwrap());
                        for (vb, s) in s.project(Z, &[B]) {
                            for (vc, s) in s.project(Z, &[C]) {
                                let agrees = (vb.as_bit(), vc.as_bit()) == (Some(bob_bit), Some(charlie_bit));
                                // The attacker's ancilla readout splits the branch further.
                                let readouts: Vec<(Option<Outcome>, ExactState)> = if strategy.uses_ancilla() {
                                    s.project(Z, &[BPrime])
                                        .into_iter()
                                        .map(|(v, s)| (Some(outcome(Z, &[BPrime], v)), s))
                                        .collect()
                                } else {
                                    vec![(None, s)]
                                };
                                for (ancilla, leaf) in readouts {
                                    let w = leaf.weight();
                                    let mut k = knowledge.clone();
                                    k.ancilla = ancilla;
                                    let inference = adversary::infer_charlie_bit(strategy, &k, case, bob_bit)
                                        .expect("case I inference");
                                    if adversary::best_guess(inference, bob_bit) == charlie_bit {
                                        t.leak_correct += w;
                                    }
                                    if !agrees {
                                        t.detected += w;
                                    }
                                    t.total += w;
                                }
                            }
                        }
                    }
                    CaseClass::II | CaseClass::III => {
                        let (bb, cb, allowed) = if case == CaseClass::II {
                            (Z, X, &rules.case_ii)
                        } else {
                            (X, Z, &rules.case_iii)
                        };
                        for (vb, s) in s.project(bb, &[B]) {
                            for (vc, leaf) in s.project(cb, &[C]) {
                                let w = leaf.weight();
                                if !allowed.contains(&(vb, vc)) {
                                    t.detected += w;
                                }
                                t.total += w;
                            }
                        }
                    }
                    CaseClass::IV => {
                        for (v, leaf) in s.hadamard(B).project(Bell, &[B, C]) {
                            let w = leaf.weight();
                            if !rules.case_iv.contains(&v) {
                                t.detected += w;
                            }
                            t.total += w;
                        }
                    }
                }
            }
        }
    }
    t
}

/// Exact per-case detection probabilities, their average and the attacker's
/// case-I guessing accuracy.
pub fn exact_case_rates(strategy: AttackStrategy, source: SourceState) -> ExactCaseReport {
    let rules = derive_rules(source);
    let mut per_case = BTreeMap::new();
    let mut leakage_case_i = Rational64::zero();
    for case in CaseClass::ALL {
        let t = enumerate_case(strategy, source, case, &rules);
        assert_eq!(t.total, Rational64::from_integer(1), "branch weights must sum to one");
        if case == CaseClass::I {
            leakage_case_i = t.leak_correct;
        }
        per_case.insert(case, t.detected);
    }
    let average = per_case.values().copied().sum::<Rational64>() / Rational64::from_integer(4);
    ExactCaseReport {
        strategy,
        source,
        per_case,
        average,
        leakage_case_i,
    }
}

/// Counts behind one empirical rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RateEstimate {
    pub trials: usize,
    pub events: usize,
}

impl RateEstimate {
    /// `None` when no trials were observed.
    pub fn rate(&self) -> Option<f64> {
        (self.trials > 0).then(|| self.events as f64 / self.trials as f64)
    }

    /// Binomial standard error of the empirical rate.
    pub fn std_error(&self) -> Option<f64> {
        self.rate().map(|p| (p * (1.0 - p) / self.trials as f64).sqrt())
    }

    /// Whether the estimate lies within `sigmas` binomial standard errors of
    /// `reference`, using the reference probability for the spread.
    pub fn agrees_with(&self, reference: f64, sigmas: f64) -> Option<bool> {
        let rate = self.rate()?;
        let se = (reference * (1.0 - reference) / self.trials as f64).sqrt();
        Some((rate - reference).abs() <= sigmas * se + 1e-12)
    }
}

#[derive(Debug, Clone)]
pub struct EmpiricalCaseReport {
    pub strategy: AttackStrategy,
    pub config: ProtocolConfig,
    /// Errors per case. Case I counts disagreements over every case-I round,
    /// not only the sacrificed subset.
    pub per_case: BTreeMap<CaseClass, RateEstimate>,
    /// Correct attacker guesses over case-I rounds.
    pub leakage_case_i: RateEstimate,
}

impl EmpiricalCaseReport {
    pub fn from_result(result: &ProtocolResult) -> Self {
        let mut per_case: BTreeMap<CaseClass, RateEstimate> =
            CaseClass::ALL.iter().map(|&c| (c, RateEstimate::default())).collect();
        let mut leakage = RateEstimate::default();
        for r in &result.rounds {
            let e = per_case.get_mut(&r.case).expect("all cases present");
            e.trials += 1;
            e.events += r.is_error() as usize;
            if r.case == CaseClass::I {
                let bob_bit = r.bob.bit().expect("case I");
                let inference = r.attack_transcript.as_ref().and_then(|k| k.inference);
                leakage.trials += 1;
                leakage.events +=
                    (adversary::best_guess(inference, bob_bit) == r.charlie.bit().expect("case I")) as usize;
            }
        }
        EmpiricalCaseReport {
            strategy: result.attack,
            config: result.config.clone(),
            per_case,
            leakage_case_i: leakage,
        }
    }

    pub fn rates(&self) -> BTreeMap<CaseClass, Option<f64>> {
        self.per_case.iter().map(|(&c, e)| (c, e.rate())).collect()
    }

    /// Uniform average, undefined if any case is.
    pub fn average(&self) -> Option<f64> {
        let rates: Option<Vec<f64>> = self.per_case.values().map(RateEstimate::rate).collect();
        rates.map(|r| r.iter().sum::<f64>() / 4.0)
    }

    /// Per-case agreement with an exact report at `sigmas` standard errors.
    pub fn concordance(&self, exact: &ExactCaseReport, sigmas: f64) -> BTreeMap<CaseClass, Option<bool>> {
        self.per_case
            .iter()
            .map(|(&c, e)| (c, e.agrees_with(rational_to_f64(exact.per_case[&c]), sigmas)))
            .collect()
    }
}

pub fn rational_to_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Runs the protocol and tallies per-case error rates with standard errors.
pub fn montecarlo_case_rates(
    strategy: AttackStrategy,
    cfg: &ProtocolConfig,
) -> Result<EmpiricalCaseReport, ProtocolError> {
    Ok(EmpiricalCaseReport::from_result(&run_protocol(cfg, strategy)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::ConsistencyRules;

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    fn zero() -> Rational64 {
        r(0, 1)
    }

    #[test]
    fn rates_for_the_four_analysed_attacks() {
        let cases = [
            (AttackStrategy::ZZ, [zero(), r(1, 2), r(1, 2), r(3, 4)], r(7, 16)),
            (
                AttackStrategy::BellMeasure,
                [zero(), r(1, 2), r(1, 2), r(1, 2)],
                r(3, 8),
            ),
            (
                AttackStrategy::CnotEntangle,
                [zero(), r(1, 2), zero(), r(1, 2)],
                r(1, 4),
            ),
            (AttackStrategy::NoAttack, [zero(); 4], zero()),
        ];
        for (attack, rates, avg) in cases {
            let rep = exact_case_rates(attack, SourceState::Psi);
            assert_eq!(rep.rates(), rates, "{attack}");
            assert_eq!(rep.average, avg, "{attack}");
        }
    }

    // X on B and Z on C leave |+0⟩ or |−1⟩: case III is untouched and case IV
    // sees |00⟩ or |11⟩ after the Hadamard, each φ+ with probability 1/2.
    #[test]
    fn xz_attack_rates_follow_the_correlated_collapse() {
        let rep = exact_case_rates(AttackStrategy::XZ, SourceState::Psi);
        assert_eq!(rep.rates(), [zero(), r(1, 2), zero(), r(1, 2)]);
        assert_eq!(rep.average, r(1, 4));
    }

    #[test]
    fn unanalysed_attacks() {
        // Z⊗X: Z on B leaves C in |±⟩ matching B, so case II sees nothing.
        let zx = exact_case_rates(AttackStrategy::ZX, SourceState::Psi);
        assert_eq!(zx.rates(), [zero(), zero(), r(1, 2), r(1, 2)]);
        let xx = exact_case_rates(AttackStrategy::XX, SourceState::Psi);
        assert_eq!(xx.rates(), [zero(), r(1, 2), r(1, 2), r(3, 4)]);
        assert_eq!(xx.average, r(7, 16));
    }

    #[test]
    fn leakage_is_exact() {
        for attack in [
            AttackStrategy::ZZ,
            AttackStrategy::XZ,
            AttackStrategy::BellMeasure,
            AttackStrategy::CnotEntangle,
        ] {
            for source in [SourceState::Psi, SourceState::Phi] {
                assert_eq!(
                    exact_case_rates(attack, source).leakage_case_i,
                    r(1, 1),
                    "{attack} {source}"
                );
            }
        }
        for attack in [AttackStrategy::NoAttack, AttackStrategy::ZX, AttackStrategy::XX] {
            assert_eq!(
                exact_case_rates(attack, SourceState::Psi).leakage_case_i,
                r(1, 2),
                "{attack}"
            );
        }
    }

    #[test]
    fn reports_are_well_formed() {
        for attack in AttackStrategy::BUILTIN {
            for source in [SourceState::Psi, SourceState::Phi] {
                let rep = exact_case_rates(attack, source);
                let sum: Rational64 = rep.per_case.values().copied().sum();
                assert_eq!(rep.average, sum / 4);
                assert!(rep.per_case.values().all(|p| *p >= zero() && *p <= r(1, 1)));
                assert!(rep.leakage_case_i >= zero() && rep.leakage_case_i <= r(1, 1));
            }
        }
    }

    #[test]
    fn phi_source_honest_rates_are_zero() {
        let rep = exact_case_rates(AttackStrategy::NoAttack, SourceState::Phi);
        assert_eq!(rep.rates(), [zero(); 4]);
    }

    #[test]
    fn derived_rules_match_the_protocol_tables() {
        for source in [SourceState::Psi, SourceState::Phi] {
            let derived = derive_rules(source);
            let embedded = ConsistencyRules::for_source(source);
            assert_eq!(derived.case_ii, embedded.case_ii.into_iter().collect());
            assert_eq!(derived.case_iii, embedded.case_iii.into_iter().collect());
            assert_eq!(derived.case_iv, BTreeSet::from([embedded.case_iv]));
        }
    }

    #[test]
    fn montecarlo_tracks_the_oracle() {
        for source in [SourceState::Psi, SourceState::Phi] {
            for attack in AttackStrategy::BUILTIN {
                let cfg = ProtocolConfig::new(20_000, 77).with_source(source);
                let mc = montecarlo_case_rates(attack, &cfg).unwrap();
                let exact = exact_case_rates(attack, source);
                for (case, ok) in mc.concordance(&exact, 4.0) {
                    assert_eq!(
                        ok,
                        Some(true),
                        "{attack} {source} case {case}: {:?}",
                        mc.per_case[&case].rate()
                    );
                }
            }
        }
    }

    #[test]
    fn empty_cases_are_undefined() {
        let cfg = ProtocolConfig::new(2, 0);
        let mc = montecarlo_case_rates(AttackStrategy::NoAttack, &cfg).unwrap();
        let undefined = mc.per_case.values().filter(|e| e.rate().is_none()).count();
        assert!(undefined >= 2);
        assert_eq!(mc.average(), None);
        assert_eq!(RateEstimate::default().std_error(), None);
    }

    #[test]
    fn honest_montecarlo_is_exactly_zero() {
        let mc = montecarlo_case_rates(AttackStrategy::NoAttack, &ProtocolConfig::new(10_000, 3)).unwrap();
        assert!(mc.rates().values().all(|r| *r == Some(0.0)));
    }
}
