//! Shared fixtures for the solver benchmarks.

use gamemetric::random::random_game;
use gamemetric::GameStructure;

/// Seeded random games with exactly `states` states, the first `count`
/// found scanning seeds upward from `seed`.
pub fn games_with_states(states: usize, count: usize, seed: u64) -> Vec<GameStructure> {
    (seed..)
        .map(random_game)
        .filter(|g| g.num_states() == states)
        .take(count)
        .collect()
}
