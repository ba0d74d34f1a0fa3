//! Seeded random substreams.
//!
//! One 64-bit base seed keys a ChaCha8 generator; every (trial, role) pair gets
//! its own stream id, so any trial can be regenerated in isolation and the
//! roles never share randomness.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Role {
    Placement = 0,
    Shadowing = 1,
    Fading = 2,
    SolverInit = 3,
    Allocation = 4,
    Example = 5,
}

const ROLE_BITS: u32 = 8;

pub fn substream(seed: u64, trial: u64, role: Role) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((trial << ROLE_BITS) | role as u64);
    rng
}
