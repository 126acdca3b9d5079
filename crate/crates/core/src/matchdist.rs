//! One-step distances for MDPs and turn-based games.
//!
//! For a pair `(s, t)` the quantity `sup_{k in C(d)} pre1(k)(s) - pre1(k)(t)`
//! splits into an outer maximum over pure moves and an inner minimum over
//! mixed moves, and for each outer choice the inner problem is a
//! trans-shipping LP: ship the successor distribution of `s` into the
//! (mixed) successor distribution of `t` at edge cost `d`.
//!
//! Which side is pure and which is mixed depends on who controls each
//! state. Player 1 maximizes `pre1`, so at a player-1 state the pure move is
//! committed outside; at a player-2 state the opponent's mixture sits
//! inside the minimum. At `t` the roles flip because `pre1(k)(t)` is
//! subtracted.

use crate::error::{Error, Result};
use crate::game::{Distribution, GameKind, GameStructure, MetricMatrix, Player, PROB_TOL};
use crate::linprog::{self, LpOutcome, LpProblem, Sense};
use crate::metrics::{Partition, Relation};

/// One side of a comparison: a committed distribution, or the convex hull
/// of several that the minimizing side may mix.
#[derive(Debug, Clone)]
pub enum Side<'g> {
    Fixed(&'g Distribution),
    Mixed(Vec<&'g Distribution>),
}

impl<'g> Side<'g> {
    fn components(&self) -> &[&'g Distribution] {
        match self {
            Side::Fixed(d) => std::slice::from_ref(d),
            Side::Mixed(ds) => ds,
        }
    }

    fn support(&self) -> Vec<usize> {
        let mut states: Vec<usize> = self.components().iter().flat_map(|d| d.support()).collect();
        states.sort_unstable();
        states.dedup();
        states
    }
}

/// Checks that one-step LPs apply to `g` (valid and not concurrent).
pub fn ensure_supported(g: &GameStructure) -> Result<GameKind> {
    let kind = g.classify()?;
    if kind == GameKind::Concurrent {
        return Err(Error::Unsupported(
            "exact one-step distances need an MDP or a turn-based game".into(),
        ));
    }
    Ok(kind)
}

/// The outer choices for `(s, t)`, each paired with its inner problem.
///
/// For two player-1 states this is one entry per move at `s`, in move
/// order, each against the mixtures at `t`.
pub fn choices<'g>(g: &'g GameStructure, s: usize, t: usize) -> Vec<(Side<'g>, Side<'g>)> {
    let source: Vec<Side<'g>> = match g.controller(s) {
        Player::One => g.controlled_dists(s).into_iter().map(Side::Fixed).collect(),
        Player::Two => vec![Side::Mixed(g.controlled_dists(s))],
    };
    let target: Vec<Side<'g>> = match g.controller(t) {
        Player::One => vec![Side::Mixed(g.controlled_dists(t))],
        Player::Two => g.controlled_dists(t).into_iter().map(Side::Fixed).collect(),
    };
    let mut out = Vec::with_capacity(source.len() * target.len());
    for src in &source {
        for tgt in &target {
            out.push((src.clone(), tgt.clone()));
        }
    }
    out
}

/// Adds `sum_i w_i * dist_i(state)` (or the fixed mass) to a row; returns
/// the constant part moved to the right-hand side.
fn side_mass(
    side: &Side<'_>,
    weights: &[usize],
    state: usize,
    sign: f64,
    terms: &mut Vec<(usize, f64)>,
) -> f64 {
    match side {
        Side::Fixed(d) => d.prob(state),
        Side::Mixed(ds) => {
            for (w, d) in weights.iter().zip(ds) {
                let p = d.prob(state);
                if p != 0.0 {
                    terms.push((*w, -sign * p));
                }
            }
            0.0
        }
    }
}

fn add_weights(lp: &mut LpProblem, side: &Side<'_>, prefix: &str) -> Vec<usize> {
    match side {
        Side::Fixed(_) => Vec::new(),
        Side::Mixed(ds) => {
            let w: Vec<usize> = (0..ds.len()).map(|i| lp.add_var(format!("{prefix}{i}"))).collect();
            lp.add_constraint(w.iter().map(|&v| (v, 1.0)).collect(), Sense::Eq, 1.0);
            w
        }
    }
}

/// Trans-shipping LP shipping `source` into `target`. `edge` yields the cost
/// of an allowed edge, or `None` to leave it out.
fn transport_lp(
    source: &Side<'_>,
    target: &Side<'_>,
    mut edge: impl FnMut(usize, usize) -> Option<f64>,
) -> LpProblem {
    let mut lp = LpProblem::new();
    let ws = add_weights(&mut lp, source, "x");
    let wt = add_weights(&mut lp, target, "y");
    let xs = source.support();
    let ys = target.support();
    let mut out_edges: Vec<Vec<(usize, f64)>> = vec![Vec::new(); xs.len()];
    let mut in_edges: Vec<Vec<(usize, f64)>> = vec![Vec::new(); ys.len()];
    let mut objective = Vec::new();
    for (i, &x) in xs.iter().enumerate() {
        for (j, &y) in ys.iter().enumerate() {
            if let Some(c) = edge(x, y) {
                let v = lp.add_var(format!("l{x}_{y}"));
                out_edges[i].push((v, 1.0));
                in_edges[j].push((v, 1.0));
                if c != 0.0 {
                    objective.push((v, c));
                }
            }
        }
    }
    lp.set_objective(objective);
    for (i, &x) in xs.iter().enumerate() {
        let mut terms = std::mem::take(&mut out_edges[i]);
        let rhs = side_mass(source, &ws, x, 1.0, &mut terms);
        lp.add_constraint(terms, Sense::Eq, rhs);
    }
    for (j, &y) in ys.iter().enumerate() {
        let mut terms = std::mem::take(&mut in_edges[j]);
        let rhs = side_mass(target, &wt, y, 1.0, &mut terms);
        lp.add_constraint(terms, Sense::Eq, rhs);
    }
    lp
}

/// Minimum shipping cost between the two sides under costs `d`.
pub fn transport_cost(source: &Side<'_>, target: &Side<'_>, d: &MetricMatrix) -> Result<f64> {
    if let (Side::Fixed(mu), Side::Fixed(nu)) = (source, target) {
        if let [(x, _)] = mu.entries() {
            return Ok(nu.entries().iter().map(|&(y, p)| p * d.get(*x, y)).sum());
        }
        if let [(y, _)] = nu.entries() {
            return Ok(mu.entries().iter().map(|&(x, p)| p * d.get(x, *y)).sum());
        }
        if mu == nu {
            return Ok(0.0);
        }
    }
    let mut bad = None;
    let lp = transport_lp(source, target, |x, y| {
        let c = d.get(x, y);
        if !c.is_finite() {
            bad = Some((x, y));
        }
        Some(c)
    });
    if let Some((x, y)) = bad {
        return Err(Error::Numeric(format!("non-finite cost d({x}, {y})")));
    }
    match linprog::solve(&lp)? {
        LpOutcome::Optimal(sol) => Ok(sol.value.max(0.0)),
        other => Err(Error::Numeric(format!("trans-shipping LP ended {other:?}"))),
    }
}

/// True when `source` can be shipped into `target` along `relation` only.
pub fn transport_feasible(source: &Side<'_>, target: &Side<'_>, relation: &Relation) -> Result<bool> {
    let lp = transport_lp(source, target, |x, y| relation.contains(x, y).then_some(0.0));
    Ok(linprog::feasible(&lp)?.is_some())
}

/// Class-mass matching: can the target side cover the source's mass on
/// every block of `partition`?
pub fn class_mass_feasible(source: &Side<'_>, target: &Side<'_>, partition: &Partition) -> Result<bool> {
    let mass = |d: &Distribution, block: usize| -> f64 {
        d.entries()
            .iter()
            .filter(|e| partition.block_of(e.0) == block)
            .map(|e| e.1)
            .sum()
    };
    let mut blocks: Vec<usize> = source
        .support()
        .into_iter()
        .chain(target.support())
        .map(|s| partition.block_of(s))
        .collect();
    blocks.sort_unstable();
    blocks.dedup();

    if let (Side::Fixed(mu), Side::Fixed(nu)) = (source, target) {
        return Ok(blocks.iter().all(|&b| mass(nu, b) >= mass(mu, b) - PROB_TOL));
    }
    let mut lp = LpProblem::new();
    let ws = add_weights(&mut lp, source, "x");
    let wt = add_weights(&mut lp, target, "y");
    for &b in &blocks {
        let mut terms = Vec::new();
        let mut rhs = 0.0;
        match target {
            Side::Fixed(nu) => rhs -= mass(nu, b),
            Side::Mixed(ds) => terms.extend(wt.iter().zip(ds).map(|(&w, d)| (w, mass(d, b)))),
        }
        match source {
            Side::Fixed(mu) => rhs += mass(mu, b),
            Side::Mixed(ds) => terms.extend(ws.iter().zip(ds).map(|(&w, d)| (w, -mass(d, b)))),
        }
        lp.add_constraint(terms, Sense::Ge, rhs);
    }
    Ok(linprog::feasible(&lp)?.is_some())
}

/// `max` over outer choices of the inner trans-shipping minimum, without
/// the propositional part. Callers guarantee a supported structure.
pub(crate) fn lifted(g: &GameStructure, s: usize, t: usize, d: &MetricMatrix) -> Result<f64> {
    if s == t {
        return Ok(0.0);
    }
    let mut best = 0.0f64;
    for (src, tgt) in choices(g, s, t) {
        best = best.max(transport_cost(&src, &tgt, d)?);
    }
    Ok(best)
}

fn check_pair(g: &GameStructure, s: usize, t: usize) -> Result<()> {
    let n = g.num_states();
    if s >= n || t >= n {
        return Err(Error::Contract(format!("state index out of range ({s}, {t})")));
    }
    Ok(())
}

/// Trans-shipping value for one outer choice `a` (see [`choices`]): for two
/// player-1 states, `a` is the index of the move at `s`.
pub fn onestep_move(g: &GameStructure, s: usize, t: usize, d: &MetricMatrix, a: usize) -> Result<f64> {
    ensure_supported(g)?;
    check_pair(g, s, t)?;
    let all = choices(g, s, t);
    let (src, tgt) = all.get(a).ok_or_else(|| {
        Error::Contract(format!("choice {a} out of range ({} available)", all.len()))
    })?;
    transport_cost(src, tgt, d)
}

/// Propositional distance joined with the largest per-move trans-shipping
/// cost. For states of different players the `turn` variable already
/// forces the interval width.
pub fn onestep(g: &GameStructure, s: usize, t: usize, d: &MetricMatrix) -> Result<f64> {
    ensure_supported(g)?;
    check_pair(g, s, t)?;
    if s == t {
        return Ok(0.0);
    }
    Ok(g.prop_distance(s, t).max(lifted(g, s, t, d)?))
}

/// One feasibility system per outer choice; true iff all are feasible.
pub fn onebis_feasible(g: &GameStructure, s: usize, t: usize, partition: &Partition) -> Result<bool> {
    ensure_supported(g)?;
    check_pair(g, s, t)?;
    onebis_unchecked(g, s, t, partition)
}

pub(crate) fn onebis_unchecked(g: &GameStructure, s: usize, t: usize, partition: &Partition) -> Result<bool> {
    for (src, tgt) in choices(g, s, t) {
        if !class_mass_feasible(&src, &tgt, partition)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Simulation refinement step: every outer choice can be shipped along
/// `relation`.
pub(crate) fn sim_step_unchecked(g: &GameStructure, s: usize, t: usize, relation: &Relation) -> Result<bool> {
    for (src, tgt) in choices(g, s, t) {
        if !transport_feasible(&src, &tgt, relation)? {
            return Ok(false);
        }
    }
    Ok(true)
}
