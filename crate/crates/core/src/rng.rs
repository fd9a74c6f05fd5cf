//! Deterministic per-decision random streams.
//!
//! Every random decision in the simulator — one sensor corruption, one
//! message delivery, one derived trial seed — draws from a fresh ChaCha8
//! stream keyed by the run seed, a domain tag, and the numeric identity of
//! the decision. No stream is ever shared between decisions, so results do
//! not depend on the order agents are evaluated in, which is what lets
//! per-agent updates run in parallel bit-reproducibly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Which subsystem a stream belongs to; keeps draws independent even when
/// their numeric keys coincide.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum StreamDomain {
    /// Color sensing; keyed by agent id.
    Sense = 1,
    /// Message delivery; keyed by (frame, sender id, receiver id).
    Deliver = 2,
    /// Sweep trial seeds; keyed by (sweep point index, trial index).
    Trial = 3,
}

/// The ChaCha8 stream for one decision.
pub fn stream(seed: u64, domain: StreamDomain, a: u32, b: u32, c: u32) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8] = domain as u8;
    key[12..16].copy_from_slice(&a.to_le_bytes());
    key[16..20].copy_from_slice(&b.to_le_bytes());
    key[20..24].copy_from_slice(&c.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}
