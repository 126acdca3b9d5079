//! Seeded random game structures for property tests and benchmarks.
//!
//! Games stay small (2 to 6 states, up to 3 moves per player) with the
//! reward in a variable named `r` over `[0, 1]`. Some states are cloned
//! from others, sometimes with an extra move that mixes existing ones, so
//! that kernels are not trivially the identity.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::game::{Distribution, GameKind, GameStructure, Interval, TURN_VAR};

pub const REWARD_VAR: &str = "r";

const LEVELS: [f64; 3] = [0.0, 0.5, 1.0];

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_dist(rng: &mut impl Rng, n: usize) -> Distribution {
    let support = rng.gen_range(1..=3.min(n));
    let mut states: Vec<usize> = (0..n).collect();
    states.shuffle(rng);
    let weights: Vec<u32> = (0..support).map(|_| rng.gen_range(1..=4)).collect();
    let total: u32 = weights.iter().sum();
    Distribution::new(
        states[..support]
            .iter()
            .zip(&weights)
            .map(|(&s, &w)| (s, w as f64 / total as f64))
            .collect(),
    )
}

fn mix(a: &Distribution, b: &Distribution, p: f64) -> Distribution {
    let mut entries: Vec<(usize, f64)> = a.entries().iter().map(|&(s, q)| (s, p * q)).collect();
    entries.extend(b.entries().iter().map(|&(s, q)| (s, (1.0 - p) * q)));
    Distribution::new(entries)
}

fn names(prefix: &str, k: usize) -> Vec<String> {
    (0..k).map(|i| format!("{prefix}{i}")).collect()
}

/// Who chooses at each state: `true` for player 1.
fn owners(rng: &mut impl Rng, kind: GameKind, n: usize) -> Vec<bool> {
    match kind {
        GameKind::Mdp1 => vec![true; n],
        GameKind::Mdp2 => vec![false; n],
        _ => (0..n).map(|_| rng.gen_bool(0.5)).collect(),
    }
}

/// A random MDP (either player) or turn-based game.
pub fn random_game(seed: u64) -> GameStructure {
    let mut rng = rng_for(seed);
    let kind = [GameKind::Mdp1, GameKind::Mdp2, GameKind::TurnBased][rng.gen_range(0..3)];
    let n = rng.gen_range(2..=6);
    let own = owners(&mut rng, kind, n);

    // Per-state move lists as distributions; cloned states copy a source.
    let mut dists: Vec<Vec<Distribution>> = Vec::with_capacity(n);
    let mut clone_of: Vec<Option<usize>> = vec![None; n];
    for s in 0..n {
        let source = (s > 0 && rng.gen_bool(0.35)).then(|| rng.gen_range(0..s));
        match source {
            Some(src) if own[src] == own[s] => {
                clone_of[s] = Some(src);
                let mut moves = dists[src].clone();
                if moves.len() >= 2 && moves.len() < 3 && rng.gen_bool(0.5) {
                    let p = rng.gen_range(1..=3) as f64 / 4.0;
                    moves.push(mix(&moves[0], &moves[1], p));
                }
                dists.push(moves);
            }
            _ => {
                let k = rng.gen_range(1..=3);
                dists.push((0..k).map(|_| random_dist(&mut rng, n)).collect());
            }
        }
    }

    // Clones usually keep their source's reward; sources come first.
    let mut r = vec![0.0; n];
    for s in 0..n {
        r[s] = match clone_of[s] {
            Some(src) if rng.gen_bool(0.8) => r[src],
            _ => LEVELS[rng.gen_range(0..3)],
        };
    }

    let mut g = GameStructure::new(Interval::new(0.0, 1.0), names("s", n)).expect("distinct names");
    g.set_variable(REWARD_VAR, r);
    if kind == GameKind::TurnBased {
        g.set_variable(TURN_VAR, own.iter().map(|&p1| if p1 { 0.0 } else { 1.0 }).collect());
    } else if rng.gen_bool(0.3) {
        g.set_variable("c", (0..n).map(|s| if s % 2 == 0 { 0.0 } else { 1.0 }).collect());
    }
    for (s, moves) in dists.into_iter().enumerate() {
        let labels = names("m", moves.len());
        let none = vec![crate::format::NO_CHOICE.to_string()];
        if own[s] {
            g.set_moves(s, labels, none);
            for (a, d) in moves.into_iter().enumerate() {
                g.set_transition(s, a, 0, d);
            }
        } else {
            g.set_moves(s, none, labels);
            for (b, d) in moves.into_iter().enumerate() {
                g.set_transition(s, 0, b, d);
            }
        }
    }
    debug_assert!(g.validate().is_empty());
    g
}

/// A random concurrent game: at least one state where both players have
/// two moves.
pub fn random_concurrent(seed: u64) -> GameStructure {
    let mut rng = rng_for(seed ^ 0x5eed_c0c0);
    let n = rng.gen_range(2..=4);
    let mut g = GameStructure::new(Interval::new(0.0, 1.0), names("s", n)).expect("distinct names");
    g.set_variable(REWARD_VAR, (0..n).map(|_| LEVELS[rng.gen_range(0..3)]).collect());
    let both = rng.gen_range(0..n);
    for s in 0..n {
        let (k1, k2) = if s == both { (2, 2) } else { (rng.gen_range(1..=2), rng.gen_range(1..=2)) };
        g.set_moves(s, names("a", k1), names("b", k2));
        for a in 0..k1 {
            for b in 0..k2 {
                g.set_transition(s, a, b, random_dist(&mut rng, n));
            }
        }
    }
    debug_assert!(g.validate().is_empty());
    g
}

/// The mismatch reachability game: at `s` both players pick one of two
/// moves; matching moves reach `goal`, mismatched ones reach `safe`.
/// Player 1 reaches the goal with probability exactly one half.
pub fn mismatch_game() -> GameStructure {
    let mut g = GameStructure::new(
        Interval::new(0.0, 1.0),
        vec!["s".into(), "goal".into(), "safe".into()],
    )
    .expect("distinct names");
    g.set_variable("q", vec![0.0, 1.0, 0.0]);
    g.set_moves(0, vec!["a".into(), "b".into()], vec!["a".into(), "b".into()]);
    for a in 0..2 {
        for b in 0..2 {
            g.set_transition(0, a, b, Distribution::point(if a == b { 1 } else { 2 }));
        }
    }
    g.set_transition(1, 0, 0, Distribution::point(1));
    g.set_transition(2, 0, 0, Distribution::point(2));
    g
}

/// A small concurrent reachability game for the variable `q`: 3 or 4
/// states, at most two moves per player, with an absorbing goal.
pub fn random_reachability(seed: u64) -> GameStructure {
    let mut rng = rng_for(seed ^ 0x00ac_4ab1e);
    let n = rng.gen_range(3..=4);
    let mut g = GameStructure::new(Interval::new(0.0, 1.0), names("s", n)).expect("distinct names");
    // State 0 is the goal; with four states the last one may be a sink.
    let sink = n == 4 && rng.gen_bool(0.5);
    g.set_variable("q", (0..n).map(|s| if s == 0 { 1.0 } else { 0.0 }).collect());
    g.set_transition(0, 0, 0, Distribution::point(0));
    let first_free = 1;
    let last_free = if sink { n - 2 } else { n - 1 };
    if sink {
        g.set_transition(n - 1, 0, 0, Distribution::point(n - 1));
    }
    for s in first_free..=last_free {
        let (k1, k2) = if s == 1 { (2, 2) } else { (rng.gen_range(1..=2), rng.gen_range(1..=2)) };
        g.set_moves(s, names("a", k1), names("b", k2));
        for a in 0..k1 {
            for b in 0..k2 {
                g.set_transition(s, a, b, random_dist(&mut rng, n));
            }
        }
    }
    debug_assert!(g.validate().is_empty());
    g
}
