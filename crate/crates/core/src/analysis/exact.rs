//! Exact real amplitudes in ℚ(√2).
//!
//! Every state reachable from the two source pairs through Hadamard, CNOT and
//! Z/X/Bell projections has real amplitudes of the form `p + q√2` with `p, q`
//! rational, so squared norms of projected branches are exact rationals.

use std::ops::{Add, Mul, Neg, Sub};

use num_rational::Rational64;
use num_traits::{One, Zero};

use crate::qstate::{MeasuredValue, MeasurementBasis, QubitLabel};

/// `rational + radical·√2`
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Surd {
    pub rational: Rational64,
    pub radical: Rational64,
}

impl Surd {
    pub fn new(rational: Rational64, radical: Rational64) -> Self {
        Surd { rational, radical }
    }

    pub fn int(n: i64) -> Self {
        Surd::new(Rational64::from_integer(n), Rational64::zero())
    }

    /// `1/√2 = √2/2`
    pub fn inv_sqrt2() -> Self {
        Surd::new(Rational64::zero(), Rational64::new(1, 2))
    }

    pub fn is_zero(&self) -> bool {
        self.rational.is_zero() && self.radical.is_zero()
    }

    /// The value as a rational, if it has no √2 part.
    pub fn as_rational(&self) -> Option<Rational64> {
        self.radical.is_zero().then_some(self.rational)
    }

    pub fn to_f64(self) -> f64 {
        let r = |x: Rational64| *x.numer() as f64 / *x.denom() as f64;
        r(self.rational) + r(self.radical) * std::f64::consts::SQRT_2
    }
}

impl Zero for Surd {
    fn zero() -> Self {
        Surd::int(0)
    }
    fn is_zero(&self) -> bool {
        Surd::is_zero(self)
    }
}

impl One for Surd {
    fn one() -> Self {
        Surd::int(1)
    }
}

impl Add for Surd {
    type Output = Surd;
    fn add(self, o: Surd) -> Surd {
        Surd::new(self.rational + o.rational, self.radical + o.radical)
    }
}

impl Sub for Surd {
    type Output = Surd;
    fn sub(self, o: Surd) -> Surd {
        Surd::new(self.rational - o.rational, self.radical - o.radical)
    }
}

impl Neg for Surd {
    type Output = Surd;
    fn neg(self) -> Surd {
        Surd::new(-self.rational, -self.radical)
    }
}

impl Mul for Surd {
    type Output = Surd;
    fn mul(self, o: Surd) -> Surd {
        let two = Rational64::from_integer(2);
        Surd::new(
            self.rational * o.rational + two * self.radical * o.radical,
            self.rational * o.radical + self.radical * o.rational,
        )
    }
}

/// Unnormalized real state over labeled qubits. A projected branch keeps its
/// weight in the norm, so `weight()` is the joint branch probability.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactState {
    labels: Vec<QubitLabel>,
    amps: Vec<Surd>,
}

fn ket(value: MeasuredValue) -> Vec<Surd> {
    let h = Surd::inv_sqrt2();
    let (o, z) = (Surd::one(), Surd::zero());
    match value {
        MeasuredValue::Zero => vec![o, z],
        MeasuredValue::One => vec![z, o],
        MeasuredValue::Plus => vec![h, h],
        MeasuredValue::Minus => vec![h, -h],
        MeasuredValue::PhiPlus => vec![h, z, z, h],
        MeasuredValue::PhiMinus => vec![h, z, z, -h],
        MeasuredValue::PsiPlus => vec![z, h, h, z],
        MeasuredValue::PsiMinus => vec![z, h, -h, z],
    }
}

fn basis_values(basis: MeasurementBasis) -> &'static [MeasuredValue] {
    match basis {
        MeasurementBasis::Z => &[MeasuredValue::Zero, MeasuredValue::One],
        MeasurementBasis::X => &[MeasuredValue::Plus, MeasuredValue::Minus],
        MeasurementBasis::Bell => &MeasuredValue::BELL,
    }
}

impl ExactState {
    /// `|a⟩_first |b⟩_second` for single-qubit Z/X values.
    pub fn product(first: (QubitLabel, MeasuredValue), second: (QubitLabel, MeasuredValue)) -> Self {
        let a = ket(first.1);
        let b = ket(second.1);
        ExactState {
            labels: vec![first.0, second.0],
            amps: a.iter().flat_map(|&x| b.iter().map(move |&y| x * y)).collect(),
        }
    }

    pub fn labels(&self) -> &[QubitLabel] {
        &self.labels
    }

    pub fn amplitudes(&self) -> &[Surd] {
        &self.amps
    }

    pub fn scale(&self, k: Surd) -> Self {
        ExactState {
            labels: self.labels.clone(),
            amps: self.amps.iter().map(|&a| a * k).collect(),
        }
    }

    pub fn plus(&self, other: &ExactState) -> Self {
        assert_eq!(self.labels, other.labels);
        ExactState {
            labels: self.labels.clone(),
            amps: self.amps.iter().zip(&other.amps).map(|(&a, &b)| a + b).collect(),
        }
    }

    /// Appends `label` in `|0⟩`.
    pub fn with_ancilla(&self, label: QubitLabel) -> Self {
        let mut labels = self.labels.clone();
        labels.push(label);
        ExactState {
            labels,
            amps: self.amps.iter().flat_map(|&a| [a, Surd::zero()]).collect(),
        }
    }

    fn mask(&self, label: QubitLabel) -> usize {
        let pos = self
            .labels
            .iter()
            .position(|&l| l == label)
            .unwrap_or_else(|| panic!("qubit {label} missing from exact state"));
        1 << (self.labels.len() - 1 - pos)
    }

    pub fn hadamard(&self, q: QubitLabel) -> Self {
        let m = self.mask(q);
        let h = Surd::inv_sqrt2();
        let amps = (0..self.amps.len())
            .map(|i| {
                let (a0, a1) = (self.amps[i & !m], self.amps[i | m]);
                if i & m == 0 {
                    (a0 + a1) * h
                } else {
                    (a0 - a1) * h
                }
            })
            .collect();
        ExactState {
            labels: self.labels.clone(),
            amps,
        }
    }

    pub fn cnot(&self, control: QubitLabel, target: QubitLabel) -> Self {
        let (c, t) = (self.mask(control), self.mask(target));
        let amps = (0..self.amps.len())
            .map(|i| if i & c != 0 { self.amps[i ^ t] } else { self.amps[i] })
            .collect();
        ExactState {
            labels: self.labels.clone(),
            amps,
        }
    }

    /// Unnormalized projections onto each basis vector, dropping zero branches.
    pub fn project(&self, basis: MeasurementBasis, targets: &[QubitLabel]) -> Vec<(MeasuredValue, ExactState)> {
        assert_eq!(targets.len(), basis.arity());
        let masks: Vec<usize> = targets.iter().map(|&t| self.mask(t)).collect();
        let all: usize = masks.iter().sum();
        let k = masks.len();
        let spread = |t: usize| -> usize { (0..k).filter(|j| t >> (k - 1 - j) & 1 == 1).map(|j| masks[j]).sum() };

        basis_values(basis)
            .iter()
            .filter_map(|&value| {
                let e = ket(value);
                let mut amps = vec![Surd::zero(); self.amps.len()];
                for rest in (0..self.amps.len()).filter(|r| r & all == 0) {
                    let overlap = e
                        .iter()
                        .enumerate()
                        .fold(Surd::zero(), |acc, (t, &et)| acc + et * self.amps[rest | spread(t)]);
                    for (t, &et) in e.iter().enumerate() {
                        amps[rest | spread(t)] = et * overlap;
                    }
                }
                let branch = ExactState {
                    labels: self.labels.clone(),
                    amps,
                };
                (!branch.amps.iter().all(Surd::is_zero)).then_some((value, branch))
            })
            .collect()
    }

    /// Squared norm; always rational for the states this module builds.
    pub fn weight(&self) -> Rational64 {
        let total = self.amps.iter().fold(Surd::zero(), |acc, &a| acc + a * a);
        total
            .as_rational()
            .expect("squared norm of a real ℚ(√2) vector is rational here")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use MeasuredValue::*;
    use QubitLabel::*;

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    #[test]
    fn surd_arithmetic() {
        let h = Surd::inv_sqrt2();
        assert_eq!(h * h, Surd::new(r(1, 2), r(0, 1)));
        let x = Surd::new(r(1, 3), r(2, 5));
        let y = Surd::new(r(-1, 2), r(1, 7));
        let prod = (x * y).to_f64();
        assert!((prod - x.to_f64() * y.to_f64()).abs() < 1e-12);
        assert!((x - x).is_zero());
        assert_eq!(-(-x), x);
    }

    #[test]
    fn source_and_projections_are_exact() {
        let psi = ExactState::product((B, Plus), (C, Zero))
            .plus(&ExactState::product((B, Minus), (C, One)))
            .scale(Surd::inv_sqrt2());
        let halves: Vec<_> = psi.amplitudes().iter().map(|a| a.as_rational().unwrap()).collect();
        assert_eq!(halves, vec![r(1, 2), r(1, 2), r(1, 2), r(-1, 2)]);
        assert_eq!(psi.weight(), r(1, 1));

        let bell = psi.project(MeasurementBasis::Bell, &[B, C]);
        let got: Vec<_> = bell.iter().map(|(v, s)| (*v, s.weight())).collect();
        assert_eq!(got, vec![(PhiMinus, r(1, 2)), (PsiPlus, r(1, 2))]);

        let h = psi.hadamard(B);
        let phi = h.project(MeasurementBasis::Bell, &[B, C]);
        assert_eq!(phi.len(), 1);
        assert_eq!(phi[0].0, PhiPlus);
        assert_eq!(phi[0].1.weight(), r(1, 1));
        assert_eq!(h.hadamard(B), psi);
    }

    #[test]
    fn cnot_with_ancilla() {
        let psi = ExactState::product((B, Plus), (C, Zero))
            .plus(&ExactState::product((B, Minus), (C, One)))
            .scale(Surd::inv_sqrt2());
        let s = psi.with_ancilla(BPrime).cnot(C, BPrime);
        let amps: Vec<_> = s.amplitudes().iter().map(|a| a.as_rational().unwrap()).collect();
        let q = r(1, 2);
        let z = r(0, 1);
        assert_eq!(amps, vec![q, z, z, q, q, z, z, -q]);
        let z_on_ancilla = s.project(MeasurementBasis::Z, &[BPrime]);
        assert_eq!(
            z_on_ancilla.iter().map(|(_, b)| b.weight()).collect::<Vec<_>>(),
            vec![r(1, 2), r(1, 2)]
        );
    }
}
