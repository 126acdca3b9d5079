//! Game structures: states, observation variables, move sets and the
//! probabilistic transition function, plus the one-step quantities every
//! algorithm in the crate is built from.

use std::collections::HashMap;
use std::fmt;

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::format::{GameFile, TransEntry, NO_CHOICE};

/// Tolerance on probability sums.
pub const PROB_TOL: f64 = 1e-9;

/// Name of the variable that marks player ownership in turn-based games.
pub const TURN_VAR: &str = "turn";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Player {
    One,
    Two,
}

impl Player {
    pub fn opponent(self) -> Player {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GameKind {
    Mdp1,
    Mdp2,
    TurnBased,
    Concurrent,
}

impl fmt::Display for GameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GameKind::Mdp1 => "MDP1",
            GameKind::Mdp2 => "MDP2",
            GameKind::TurnBased => "TurnBased",
            GameKind::Concurrent => "Concurrent",
        })
    }
}

/// The value interval `[low, high]` every valuation lives in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

impl Interval {
    pub fn new(low: f64, high: f64) -> Self {
        Interval { low, high }
    }

    /// Width of the interval, the largest possible distance between states.
    pub fn width(&self) -> f64 {
        self.high - self.low
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.low && x <= self.high
    }
}

/// Sparse probability distribution over state indices, sorted by state.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Distribution(Vec<(usize, f64)>);

impl Distribution {
    /// Builds a distribution, merging repeated targets and dropping zeros.
    pub fn new(mut entries: Vec<(usize, f64)>) -> Self {
        entries.sort_by_key(|e| e.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (s, p) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == s => last.1 += p,
                _ => merged.push((s, p)),
            }
        }
        merged.retain(|e| e.1 != 0.0);
        Distribution(merged)
    }

    pub fn point(state: usize) -> Self {
        Distribution(vec![(state, 1.0)])
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.0
    }

    pub fn prob(&self, state: usize) -> f64 {
        self.0
            .binary_search_by_key(&state, |e| e.0)
            .map(|i| self.0[i].1)
            .unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.0.iter().map(|e| e.1).sum()
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().map(|e| e.0)
    }

    pub fn expect(&self, k: &[f64]) -> f64 {
        self.0.iter().map(|&(s, p)| p * k[s]).sum()
    }
}

/// An assignment of reals to states.
#[derive(Debug, Clone, PartialEq)]
pub struct Valuation(pub Vec<f64>);

impl Valuation {
    pub fn constant(n: usize, c: f64) -> Self {
        Valuation(vec![c; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn within(&self, interval: Interval) -> bool {
        self.0.iter().all(|&x| interval.contains(x))
    }

    pub fn max_abs_diff(&self, other: &Valuation) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<usize> for Valuation {
    type Output = f64;
    fn index(&self, s: usize) -> &f64 {
        &self.0[s]
    }
}

/// A probability distribution over the pure moves a player has at one
/// state; `weights[i]` belongs to the i-th move of that state's move list.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedMove {
    pub weights: Vec<f64>,
}

impl MixedMove {
    pub fn pure(moves: usize, index: usize) -> Self {
        let mut weights = vec![0.0; moves];
        weights[index] = 1.0;
        MixedMove { weights }
    }

    pub fn uniform(moves: usize) -> Self {
        MixedMove { weights: vec![1.0 / moves as f64; moves] }
    }

    /// Builds a mixed move from move names at `state`.
    pub fn named(game: &GameStructure, state: usize, player: Player, weights: &[(&str, f64)]) -> Result<Self> {
        let moves = game.moves(state, player);
        let mut w = vec![0.0; moves.len()];
        for &(name, p) in weights {
            let i = moves.iter().position(|m| m == name).ok_or_else(|| {
                Error::Contract(format!(
                    "move `{name}` is not available to {player:?} at `{}`",
                    game.state_name(state)
                ))
            })?;
            w[i] += p;
        }
        Ok(MixedMove { weights: w })
    }

    fn check(&self, moves: usize) -> Result<()> {
        if self.weights.len() != moves {
            return Err(Error::Contract(format!(
                "mixed move over {} moves, state offers {moves}",
                self.weights.len()
            )));
        }
        if self.weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::Contract("mixed move has a negative weight".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::Contract(format!("mixed move weights sum to {total}")));
        }
        Ok(())
    }
}

/// A distance candidate over state pairs. Pairs flagged divergent carry
/// `+inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricMatrix {
    n: usize,
    d: Vec<f64>,
    divergent: Vec<bool>,
}

impl MetricMatrix {
    pub fn zeros(n: usize) -> Self {
        MetricMatrix { n, d: vec![0.0; n * n], divergent: vec![false; n * n] }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for s in 0..n {
            for t in 0..n {
                m.d[s * n + t] = f(s, t);
            }
        }
        m
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, s: usize, t: usize) -> f64 {
        self.d[s * self.n + t]
    }

    #[inline]
    pub fn set(&mut self, s: usize, t: usize, value: f64) {
        self.d[s * self.n + t] = value;
    }

    pub fn is_divergent(&self, s: usize, t: usize) -> bool {
        self.divergent[s * self.n + t]
    }

    pub fn any_divergent(&self) -> bool {
        self.divergent.iter().any(|&b| b)
    }

    pub fn mark_divergent(&mut self, s: usize, t: usize) {
        self.divergent[s * self.n + t] = true;
        self.d[s * self.n + t] = f64::INFINITY;
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.n);
        for s in 0..self.n {
            for t in 0..self.n {
                m.d[t * self.n + s] = self.get(s, t);
                m.divergent[t * self.n + s] = self.is_divergent(s, t);
            }
        }
        m
    }

    /// Largest finite entrywise change; pairs that are divergent in either
    /// matrix are skipped.
    pub fn max_change(&self, other: &MetricMatrix) -> f64 {
        self.d
            .iter()
            .zip(&other.d)
            .filter(|(a, b)| a.is_finite() && b.is_finite())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_value(&self) -> f64 {
        self.d.iter().copied().fold(0.0, f64::max)
    }

    /// Pairs `(s, t)` with some `u` such that `d(s,t) > d(s,u) + d(u,t) + tol`.
    pub fn triangle_violations(&self, tol: f64) -> Vec<(usize, usize, usize)> {
        let n = self.n;
        let mut out = Vec::new();
        for s in 0..n {
            for t in 0..n {
                for u in 0..n {
                    if self.get(s, t) > self.get(s, u) + self.get(u, t) + tol {
                        out.push((s, t, u));
                    }
                }
            }
        }
        out
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.d.chunks(self.n.max(1))
    }
}

/// One problem found by [`GameStructure::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub location: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Variable {
    name: String,
    values: Vec<Option<f64>>,
}

/// A finite two-player game structure. Identifiers keep file order, so
/// every iteration over states, moves and variables is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct GameStructure {
    interval: Interval,
    states: Vec<String>,
    index: HashMap<String, usize>,
    variables: Vec<Variable>,
    moves1: Vec<Vec<String>>,
    moves2: Vec<Vec<String>>,
    // trans[s][a * |moves2(s)| + b]
    trans: Vec<Vec<Option<Distribution>>>,
}

impl GameStructure {
    /// Empty structure over `states`, every player with the single
    /// placeholder move and no transitions yet.
    pub fn new(interval: Interval, states: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(states.len());
        for (i, s) in states.iter().enumerate() {
            if index.insert(s.clone(), i).is_some() {
                return Err(Error::Parse(format!("states: duplicate state `{s}`")));
            }
        }
        let n = states.len();
        Ok(GameStructure {
            interval,
            states,
            index,
            variables: Vec::new(),
            moves1: vec![vec![NO_CHOICE.to_string()]; n],
            moves2: vec![vec![NO_CHOICE.to_string()]; n],
            trans: vec![vec![None]; n],
        })
    }

    /// Adds (or replaces) a variable with a value for every state.
    pub fn set_variable(&mut self, name: &str, values: Vec<f64>) {
        let values = values.into_iter().map(Some).collect();
        match self.variables.iter_mut().find(|v| v.name == name) {
            Some(v) => v.values = values,
            None => self.variables.push(Variable { name: name.to_string(), values }),
        }
    }

    /// Sets the move lists at `state`, clearing its transitions.
    pub fn set_moves(&mut self, state: usize, moves1: Vec<String>, moves2: Vec<String>) {
        let cells = moves1.len() * moves2.len();
        self.moves1[state] = moves1;
        self.moves2[state] = moves2;
        self.trans[state] = vec![None; cells];
    }

    pub fn set_transition(&mut self, state: usize, m1: usize, m2: usize, dist: Distribution) {
        let cols = self.moves2[state].len();
        self.trans[state][m1 * cols + m2] = Some(dist);
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file = GameFile::from_json(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_file(&file)
    }

    /// Resolves names in a parsed file. Dangling names are errors; semantic
    /// problems (bad sums, missing entries) are left for [`Self::validate`].
    pub fn from_file(file: &GameFile) -> Result<Self> {
        let interval = Interval::new(file.interval[0], file.interval[1]);
        let mut g = Self::new(interval, file.states.clone())?;
        let n = g.states.len();

        for (name, vals) in &file.variables {
            let mut values = vec![None; n];
            for (state, &v) in vals {
                let s = g.lookup(state).map_err(|_| {
                    Error::Parse(format!("variables.{name}: unknown state `{state}`"))
                })?;
                values[s] = Some(v);
            }
            g.variables.push(Variable { name: name.clone(), values });
        }

        for (key, map) in [("moves1", &file.moves1), ("moves2", &file.moves2)] {
            for (state, moves) in map {
                let s = g.lookup(state).map_err(|_| {
                    Error::Parse(format!("{key}: unknown state `{state}`"))
                })?;
                let slot = if key == "moves1" { &mut g.moves1[s] } else { &mut g.moves2[s] };
                *slot = moves.clone();
            }
        }
        for s in 0..n {
            g.trans[s] = vec![None; g.moves1[s].len() * g.moves2[s].len()];
        }

        for (i, entry) in file.trans.iter().enumerate() {
            let loc = format!("trans[{i}]");
            let s = g
                .lookup(&entry.state)
                .map_err(|_| Error::Parse(format!("{loc}: unknown state `{}`", entry.state)))?;
            let a = g.moves1[s].iter().position(|m| *m == entry.m1).ok_or_else(|| {
                Error::Parse(format!("{loc}: `{}` is not a player-1 move at `{}`", entry.m1, entry.state))
            })?;
            let b = g.moves2[s].iter().position(|m| *m == entry.m2).ok_or_else(|| {
                Error::Parse(format!("{loc}: `{}` is not a player-2 move at `{}`", entry.m2, entry.state))
            })?;
            let mut dist = Vec::with_capacity(entry.dist.len());
            for (target, &p) in &entry.dist {
                let t = g
                    .lookup(target)
                    .map_err(|_| Error::Parse(format!("{loc}: unknown target state `{target}`")))?;
                dist.push((t, p));
            }
            let cell = &mut g.trans[s][a * g.moves2[s].len() + b];
            if cell.is_some() {
                return Err(Error::Parse(format!(
                    "{loc}: duplicate transition for ({}, {}, {})",
                    entry.state, entry.m1, entry.m2
                )));
            }
            *cell = Some(Distribution::new(dist));
        }
        Ok(g)
    }

    /// Inverse of [`Self::from_file`].
    pub fn to_file(&self) -> GameFile {
        let name = |s: usize| self.states[s].clone();
        let variables = self
            .variables
            .iter()
            .map(|v| {
                let vals: IndexMap<String, f64> = v
                    .values
                    .iter()
                    .enumerate()
                    .filter_map(|(s, x)| x.map(|x| (name(s), x)))
                    .collect();
                (v.name.clone(), vals)
            })
            .collect();
        let moves = |lists: &Vec<Vec<String>>| {
            lists
                .iter()
                .enumerate()
                .map(|(s, m)| (name(s), m.clone()))
                .collect::<IndexMap<_, _>>()
        };
        let mut trans = Vec::new();
        for s in 0..self.states.len() {
            for (a, m1) in self.moves1[s].iter().enumerate() {
                for (b, m2) in self.moves2[s].iter().enumerate() {
                    if let Some(dist) = self.transition(s, a, b) {
                        trans.push(TransEntry {
                            state: name(s),
                            m1: m1.clone(),
                            m2: m2.clone(),
                            dist: dist.entries().iter().map(|&(t, p)| (name(t), p)).collect(),
                        });
                    }
                }
            }
        }
        GameFile {
            interval: [self.interval.low, self.interval.high],
            states: self.states.clone(),
            variables,
            moves1: moves(&self.moves1),
            moves2: moves(&self.moves2),
            trans,
        }
    }

    pub fn to_json(&self) -> String {
        self.to_file().to_json()
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    /// Width of the value interval.
    pub fn theta(&self) -> f64 {
        self.interval.width()
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn state_names(&self) -> &[String] {
        &self.states
    }

    pub fn state_name(&self, s: usize) -> &str {
        &self.states[s]
    }

    pub fn lookup(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownState(name.to_string()))
    }

    pub fn variable_names(&self) -> impl Iterator<Item = &str> {
        self.variables.iter().map(|v| v.name.as_str())
    }

    pub fn has_variable(&self, name: &str) -> bool {
        self.variables.iter().any(|v| v.name == name)
    }

    /// Per-state values of `name`; missing entries read as `NaN`.
    pub fn variable(&self, name: &str) -> Result<Valuation> {
        let var = self
            .variables
            .iter()
            .find(|v| v.name == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))?;
        Ok(Valuation(var.values.iter().map(|x| x.unwrap_or(f64::NAN)).collect()))
    }

    pub fn moves(&self, s: usize, player: Player) -> &[String] {
        match player {
            Player::One => &self.moves1[s],
            Player::Two => &self.moves2[s],
        }
    }

    pub fn num_moves(&self, s: usize, player: Player) -> usize {
        self.moves(s, player).len()
    }

    pub fn transition(&self, s: usize, m1: usize, m2: usize) -> Option<&Distribution> {
        self.trans[s][m1 * self.moves2[s].len() + m2].as_ref()
    }

    /// Transition of a validated structure; panics on a missing entry.
    pub fn dist(&self, s: usize, m1: usize, m2: usize) -> &Distribution {
        self.transition(s, m1, m2).unwrap_or_else(|| {
            panic!("missing transition at ({}, {m1}, {m2}); validate first", self.states[s])
        })
    }

    /// The player whose choice matters at `s`: player 2 when it has more than
    /// one move, player 1 otherwise.
    pub fn controller(&self, s: usize) -> Player {
        if self.moves2[s].len() > 1 {
            Player::Two
        } else {
            Player::One
        }
    }

    /// Distributions reachable by the controller's pure moves at a state
    /// where at most one player has a choice.
    pub fn controlled_dists(&self, s: usize) -> Vec<&Distribution> {
        match self.controller(s) {
            Player::One => (0..self.moves1[s].len()).map(|a| self.dist(s, a, 0)).collect(),
            Player::Two => (0..self.moves2[s].len()).map(|b| self.dist(s, 0, b)).collect(),
        }
    }

    /// Every problem with the structure; empty iff it is well formed.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |location: String, message: String| out.push(Violation { location, message });
        let iv = self.interval;
        if !(iv.low.is_finite() && iv.high.is_finite() && iv.low < iv.high) {
            push("interval".into(), format!("[{}, {}] is not a proper interval", iv.low, iv.high));
        }
        if self.states.is_empty() {
            push("states".into(), "no states".into());
        }
        for var in &self.variables {
            for (s, val) in var.values.iter().enumerate() {
                match val {
                    None => push(
                        format!("variables.{}", var.name),
                        format!("no value at state `{}`", self.states[s]),
                    ),
                    Some(x) if !iv.contains(*x) => push(
                        format!("variables.{}", var.name),
                        format!("value {x} at `{}` outside [{}, {}]", self.states[s], iv.low, iv.high),
                    ),
                    _ => {}
                }
            }
        }
        for s in 0..self.states.len() {
            let name = &self.states[s];
            for (key, moves) in [("moves1", &self.moves1[s]), ("moves2", &self.moves2[s])] {
                if moves.is_empty() {
                    push(format!("{key}.{name}"), "empty move set".into());
                }
                for (i, m) in moves.iter().enumerate() {
                    if moves[..i].contains(m) {
                        push(format!("{key}.{name}"), format!("duplicate move `{m}`"));
                    }
                }
            }
            for (a, m1) in self.moves1[s].iter().enumerate() {
                for (b, m2) in self.moves2[s].iter().enumerate() {
                    let loc = format!("trans({name}, {m1}, {m2})");
                    match self.transition(s, a, b) {
                        None => push(loc, "missing transition".into()),
                        Some(dist) => {
                            if dist.entries().iter().any(|e| !(e.1 >= 0.0)) {
                                push(loc.clone(), "negative probability".into());
                            }
                            let total = dist.total();
                            if (total - 1.0).abs() > PROB_TOL {
                                push(loc, format!("probabilities sum to {total}"));
                            }
                        }
                    }
                }
            }
        }

        match self.variables.iter().find(|v| v.name == TURN_VAR) {
            Some(turn) => {
                for (s, val) in turn.values.iter().enumerate() {
                    let Some(x) = *val else { continue };
                    let name = &self.states[s];
                    if x == iv.low {
                        if self.moves2[s].len() != 1 {
                            push(format!("state {name}"), "player-1 turn state gives player 2 a choice".into());
                        }
                    } else if x == iv.high {
                        if self.moves1[s].len() != 1 {
                            push(format!("state {name}"), "player-2 turn state gives player 1 a choice".into());
                        }
                    } else {
                        push(format!("variables.{TURN_VAR}"), format!("value {x} at `{name}` is neither interval endpoint"));
                    }
                }
            }
            None => {
                let alternating = (0..self.states.len())
                    .all(|s| self.moves1[s].len() == 1 || self.moves2[s].len() == 1);
                let mdp1 = self.moves2.iter().all(|m| m.len() == 1);
                let mdp2 = self.moves1.iter().all(|m| m.len() == 1);
                if alternating && !mdp1 && !mdp2 {
                    push(
                        "variables".into(),
                        format!("turn-based structure lacks a `{TURN_VAR}` variable"),
                    );
                }
            }
        }
        out
    }

    /// Fails with every violation when the structure is not well formed.
    pub fn ensure_valid(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(v.iter().map(ToString::to_string).collect()))
        }
    }

    /// Classifies a valid structure; degenerate structures resolve
    /// MDP1 > MDP2 > TurnBased > Concurrent.
    pub fn classify(&self) -> Result<GameKind> {
        self.ensure_valid()?;
        Ok(self.classify_unchecked())
    }

    pub(crate) fn classify_unchecked(&self) -> GameKind {
        if self.moves2.iter().all(|m| m.len() == 1) {
            GameKind::Mdp1
        } else if self.moves1.iter().all(|m| m.len() == 1) {
            GameKind::Mdp2
        } else if self.has_variable(TURN_VAR)
            && (0..self.states.len()).all(|s| self.moves1[s].len() == 1 || self.moves2[s].len() == 1)
        {
            GameKind::TurnBased
        } else {
            GameKind::Concurrent
        }
    }

    /// Largest difference over all variables between two states.
    pub fn prop_distance(&self, s: usize, t: usize) -> f64 {
        self.variables
            .iter()
            .filter_map(|v| match (v.values[s], v.values[t]) {
                (Some(a), Some(b)) => Some((a - b).abs()),
                _ => None,
            })
            .fold(0.0, f64::max)
    }

    pub fn prop_distance_by_name(&self, s: &str, t: &str) -> Result<f64> {
        Ok(self.prop_distance(self.lookup(s)?, self.lookup(t)?))
    }

    /// All pairwise propositional distances.
    pub fn prop_matrix(&self) -> MetricMatrix {
        MetricMatrix::from_fn(self.num_states(), |s, t| self.prop_distance(s, t))
    }

    /// Successor distribution under mixed moves, extended bilinearly.
    pub fn mixed_dist(&self, s: usize, x1: &MixedMove, x2: &MixedMove) -> Result<Distribution> {
        x1.check(self.moves1[s].len())?;
        x2.check(self.moves2[s].len())?;
        let mut acc = Vec::new();
        for (a, &w1) in x1.weights.iter().enumerate() {
            for (b, &w2) in x2.weights.iter().enumerate() {
                let w = w1 * w2;
                if w == 0.0 {
                    continue;
                }
                let dist = self.transition(s, a, b).ok_or_else(|| {
                    Error::Contract(format!("missing transition at `{}`", self.states[s]))
                })?;
                acc.extend(dist.entries().iter().map(|&(t, p)| (t, w * p)));
            }
        }
        Ok(Distribution::new(acc))
    }

    /// One-step expectation of `k` from `s` under the given mixed moves.
    pub fn expectation(&self, s: usize, x1: &MixedMove, x2: &MixedMove, k: &Valuation) -> Result<f64> {
        if k.len() != self.num_states() {
            return Err(Error::Contract("valuation size does not match the state count".into()));
        }
        Ok(self.mixed_dist(s, x1, x2)?.expect(k.values()))
    }

    /// Matrix of pure-move expectations `E_s^{a,b}(k)`; rows are player-1
    /// moves.
    pub fn expectation_matrix(&self, s: usize, k: &[f64]) -> Vec<Vec<f64>> {
        (0..self.moves1[s].len())
            .map(|a| (0..self.moves2[s].len()).map(|b| self.dist(s, a, b).expect(k)).collect())
            .collect()
    }

    /// States labelled differently from `s` only through variable values.
    pub fn prop_classes(&self) -> Vec<Vec<usize>> {
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for s in 0..self.num_states() {
            match classes.iter_mut().find(|c| self.prop_distance(c[0], s) == 0.0) {
                Some(c) => c.push(s),
                None => classes.push(vec![s]),
            }
        }
        classes
    }
}
