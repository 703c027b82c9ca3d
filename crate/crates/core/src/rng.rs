//! Counter-based random streams.
//!
//! Every random draw in the simulator comes from a ChaCha8 stream addressed by
//! `(master_seed, stream_id, step)`:
//!
//! * the key is derived from `master_seed` (`SeedableRng::seed_from_u64`),
//! * the 64-bit ChaCha stream id is `stream_id`,
//! * the block counter starts at word `step << 32`, so each step owns a
//!   disjoint window of 2^32 words.
//!
//! Stream ids put a purpose tag in the top byte and the task index (usually
//! the trajectory index) in the low 56 bits, see [`stream_id`]. Since a task
//! never shares its stream, results do not depend on how tasks are scheduled
//! across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Purpose tags for [`stream_id`].
pub mod tag {
    pub const FORWARD: u8 = 0;
    pub const BACKWARD: u8 = 1;
    pub const UNITARY_FORWARD: u8 = 2;
    pub const UNITARY_REVERSE: u8 = 3;
    pub const RAW_RUN: u8 = 4;
    pub const ASSEMBLY: u8 = 5;
    pub const KMEANS: u8 = 6;
    pub const TRAINING: u8 = 7;
    pub const SAMPLING: u8 = 8;
    pub const MISC: u8 = 9;
}

const INDEX_BITS: u32 = 56;

pub fn stream_id(tag: u8, index: u64) -> u64 {
    debug_assert!(index < (1 << INDEX_BITS));
    ((tag as u64) << INDEX_BITS) | (index & ((1 << INDEX_BITS) - 1))
}

/// Stream for `(master_seed, stream, step)`.
pub fn stream(master_seed: u64, stream: u64, step: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng.set_word_pos((step as u128) << 32);
    rng
}

/// Shorthand for `stream(master_seed, stream_id(tag, index), step)`.
pub fn task_stream(master_seed: u64, tag: u8, index: u64, step: u64) -> SimRng {
    stream(master_seed, stream_id(tag, index), step)
}
