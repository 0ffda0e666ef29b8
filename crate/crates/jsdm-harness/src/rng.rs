//! Counter-based random streams: every (seed, draw, user) triple addresses a
//! fixed block of one ChaCha8 keystream, so results do not depend on the
//! order in which draws run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Keystream words reserved per user within a draw.
const USER_WORDS_LOG2: u32 = 40;

pub fn stream_rng(seed: u64, draw: u64, user: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(draw);
    rng.set_word_pos((user as u128) << USER_WORDS_LOG2);
    rng
}
