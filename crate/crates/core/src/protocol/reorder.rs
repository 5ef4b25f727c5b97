//! Order rearrangement of the returned particle sequences.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum PermutationError {
    #[error("slot {slot} is out of range for {len} particles")]
    OutOfRange { slot: usize, len: usize },
    #[error("slot {0} is used twice")]
    Repeated(usize),
    #[error("expected an order over {expected} particles, got {got}")]
    Length { expected: usize, got: usize },
}

/// Bijection from a particle's original round index to the slot it is sent in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Permutation {
    slots: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation {
            slots: (0..n).collect(),
        }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut slots: Vec<usize> = (0..n).collect();
        slots.shuffle(rng);
        Permutation { slots }
    }

    /// Validates a published order.
    pub fn from_slots(slots: Vec<usize>) -> Result<Self, PermutationError> {
        let len = slots.len();
        let mut seen = vec![false; len];
        for &slot in &slots {
            if slot >= len {
                return Err(PermutationError::OutOfRange { slot, len });
            }
            if std::mem::replace(&mut seen[slot], true) {
                return Err(PermutationError::Repeated(slot));
            }
        }
        Ok(Permutation { slots })
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn slot_of(&self, index: usize) -> usize {
        self.slots[index]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.slots
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.slots.len()];
        for (i, &s) in self.slots.iter().enumerate() {
            inv[s] = i;
        }
        Permutation { slots: inv }
    }

    /// `self` after `other`: index → other's slot → self's slot.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        Permutation {
            slots: other.slots.iter().map(|&s| self.slots[s]).collect(),
        }
    }

    /// Lays out `items` in sending order.
    pub fn scatter<T>(&self, items: Vec<T>) -> Vec<T> {
        let mut out: Vec<Option<T>> = (0..items.len()).map(|_| None).collect();
        for (i, item) in items.into_iter().enumerate() {
            out[self.slots[i]] = Some(item);
        }
        out.into_iter()
            .map(|x| x.expect("bijection fills every slot"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_non_bijections() {
        assert_eq!(
            Permutation::from_slots(vec![0, 0, 1]),
            Err(PermutationError::Repeated(0))
        );
        assert_eq!(
            Permutation::from_slots(vec![0, 3, 1]),
            Err(PermutationError::OutOfRange { slot: 3, len: 3 })
        );
        assert!(Permutation::from_slots(vec![2, 0, 1]).is_ok());
    }

    #[test]
    fn scatter_places_items_in_slots() {
        let p = Permutation::from_slots(vec![2, 0, 1]).unwrap();
        assert_eq!(p.scatter(vec!['a', 'b', 'c']), vec!['b', 'c', 'a']);
        assert_eq!(p.inverse().scatter(p.scatter(vec![1, 2, 3])), vec![1, 2, 3]);
    }

    proptest! {
        #[test]
        fn inverse_composes_to_identity(n in 1usize..200, seed in any::<u64>()) {
            let p = Permutation::random(n, &mut ChaCha8Rng::seed_from_u64(seed));
            prop_assert!(Permutation::from_slots(p.as_slice().to_vec()).is_ok());
            prop_assert_eq!(p.inverse().compose(&p), Permutation::identity(n));
            prop_assert_eq!(p.compose(&p.inverse()), Permutation::identity(n));
        }
    }
}
