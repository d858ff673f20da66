//! Deterministic per-role random streams.
//!
//! Each session derives one independent stream per role from a single 64-bit
//! seed, so enabling Eve does not perturb Alice's or Bob's draws.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    AliceBits,
    EveOutcomes,
    BobOutcomes,
    Loss,
    EveBases,
}

impl Role {
    fn stream(self) -> u64 {
        match self {
            Role::AliceBits => 0,
            Role::EveOutcomes => 1,
            Role::BobOutcomes => 2,
            Role::Loss => 3,
            Role::EveBases => 4,
        }
    }
}

pub fn role_rng(seed: u64, role: Role) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(role.stream());
    rng
}
