//! Per-round random substreams.
//!
//! Every party draws from its own ChaCha stream keyed by `(seed, role)` and
//! positioned by the round index, so rounds can run in any order (or in
//! parallel) and still reproduce bit-for-bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Role {
    Attacker = 1,
    Bob = 2,
    Charlie = 3,
    Alice = 4,
    AliceCheck = 5,
    BobOrder = 6,
    CharlieOrder = 7,
}

pub fn substream(seed: u64, role: Role, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(role as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// The private streams used while simulating one round.
#[derive(Debug, Clone)]
pub struct RoundStreams {
    pub attacker: ChaCha8Rng,
    pub bob: ChaCha8Rng,
    pub charlie: ChaCha8Rng,
    pub alice: ChaCha8Rng,
}

impl RoundStreams {
    pub fn derive(seed: u64, round: usize) -> Self {
        let i = round as u64;
        RoundStreams {
            attacker: substream(seed, Role::Attacker, i),
            bob: substream(seed, Role::Bob, i),
            charlie: substream(seed, Role::Charlie, i),
            alice: substream(seed, Role::Alice, i),
        }
    }
}
