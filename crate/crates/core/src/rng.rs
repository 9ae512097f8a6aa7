//! Seedable, splittable random streams.
//!
//! Each simulation run gets its own ChaCha8 key derived from `(seed, run)`,
//! and each player draws from a separate ChaCha stream under that key. Two
//! runs with the same `(seed, run)` therefore see identical randomness, and
//! runs never share a stream.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The stream for `player` in run `run` under the base `seed`.
pub fn stream(seed: u64, run: u64, player: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(run)));
    rng.set_stream(player);
    rng
}

/// Per-player streams for one run.
#[derive(Debug, Clone)]
pub struct RunStreams {
    players: Vec<StreamRng>,
}

impl RunStreams {
    pub fn new(seed: u64, run: u64, num_players: usize) -> Self {
        Self {
            players: (0..num_players as u64).map(|p| stream(seed, run, p)).collect(),
        }
    }

    pub fn player(&mut self, i: usize) -> &mut StreamRng {
        &mut self.players[i]
    }

    pub fn len(&self) -> usize {
        self.players.len()
    }

    pub fn is_empty(&self) -> bool {
        self.players.is_empty()
    }
}
