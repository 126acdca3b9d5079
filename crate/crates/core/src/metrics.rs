//! Metric transformers, their Picard fixpoints, and the exact kernel
//! algorithms (simulation preorder, bisimulation partition).

use std::fmt;

use crate::error::{Error, Result};
use crate::game::{GameStructure, MetricMatrix};
use crate::matchdist;

/// Pairs above `theta * DIVERGENCE_FACTOR` are reported as divergent.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

/// Iterations between the growth-rate snapshots used to spot linearly
/// diverging pairs of the undiscounted total metric.
pub const DIVERGENCE_WINDOW: usize = 100;

/// Default iteration cap for undiscounted runs.
pub const UNDISCOUNTED_MAX_ITERS: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Base {
    Simulation,
    Bisimulation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Combine {
    /// `p ⊔ α·M`
    Max,
    /// `p + α·M`, the total-reward metric.
    Sum,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricKind {
    pub base: Base,
    pub combine: Combine,
    pub alpha: f64,
}

impl MetricKind {
    pub fn new(base: Base, combine: Combine, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Contract(format!("discount {alpha} outside (0, 1]")));
        }
        Ok(MetricKind { base, combine, alpha })
    }

    pub fn simulation() -> Self {
        MetricKind { base: Base::Simulation, combine: Combine::Max, alpha: 1.0 }
    }

    pub fn bisimulation() -> Self {
        MetricKind { base: Base::Bisimulation, combine: Combine::Max, alpha: 1.0 }
    }

    pub fn with_alpha(self, alpha: f64) -> Result<Self> {
        Self::new(self.base, self.combine, alpha)
    }

    /// The undiscounted total metric, which may be unbounded.
    pub fn may_diverge(&self) -> bool {
        self.combine == Combine::Sum && self.alpha == 1.0
    }

    fn combine(&self, p: f64, m: f64) -> f64 {
        match self.combine {
            Combine::Max => p.max(self.alpha * m),
            Combine::Sum => p + self.alpha * m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    IterationLimited,
    Divergent,
    HeuristicLowerBound,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Converged => "converged",
            Status::IterationLimited => "iteration-limited",
            Status::Divergent => "divergent",
            Status::HeuristicLowerBound => "heuristic-lower-bound",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixpointReport {
    pub status: Status,
    pub iterations: usize,
    /// Max-norm change of the last step over non-divergent pairs.
    pub last_change: f64,
    pub divergent_pairs: usize,
}

/// Equivalence classes of states, blocks ordered by smallest member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
}

impl Partition {
    pub fn new(mut blocks: Vec<Vec<usize>>, n: usize) -> Result<Self> {
        blocks.retain(|b| !b.is_empty());
        for b in blocks.iter_mut() {
            b.sort_unstable();
        }
        blocks.sort_by_key(|b| b[0]);
        let mut block_of = vec![usize::MAX; n];
        for (i, b) in blocks.iter().enumerate() {
            for &s in b {
                if s >= n || block_of[s] != usize::MAX {
                    return Err(Error::Contract(format!("state {s} repeated or out of range in partition")));
                }
                block_of[s] = i;
            }
        }
        if block_of.contains(&usize::MAX) {
            return Err(Error::Contract("partition does not cover every state".into()));
        }
        Ok(Partition { blocks, block_of })
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_of(&self, s: usize) -> usize {
        self.block_of[s]
    }

    pub fn same_block(&self, s: usize, t: usize) -> bool {
        self.block_of[s] == self.block_of[t]
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Groups states by an equivalence predicate, scanning in state order.
    pub fn from_equivalence(n: usize, mut equiv: impl FnMut(usize, usize) -> bool) -> Self {
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for s in 0..n {
            match blocks.iter_mut().find(|b| equiv(b[0], s)) {
                Some(b) => b.push(s),
                None => blocks.push(vec![s]),
            }
        }
        Partition::new(blocks, n).expect("grouping covers every state once")
    }
}

/// A set of ordered state pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    n: usize,
    bits: Vec<bool>,
}

impl Relation {
    pub fn empty(n: usize) -> Self {
        Relation { n, bits: vec![false; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut r = Self::empty(n);
        (0..n).for_each(|s| r.insert(s, s));
        r
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut r = Self::empty(n);
        for s in 0..n {
            for t in 0..n {
                r.bits[s * n + t] = f(s, t);
            }
        }
        r
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn contains(&self, s: usize, t: usize) -> bool {
        self.bits[s * self.n + t]
    }

    pub fn insert(&mut self, s: usize, t: usize) {
        self.bits[s * self.n + t] = true;
    }

    pub fn remove(&mut self, s: usize, t: usize) {
        self.bits[s * self.n + t] = false;
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n * self.n)
            .filter(|&i| self.bits[i])
            .map(|i| (i / self.n, i % self.n))
    }

    pub fn len(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_reflexive(&self) -> bool {
        (0..self.n).all(|s| self.contains(s, s))
    }

    pub fn is_transitive(&self) -> bool {
        self.pairs()
            .all(|(s, u)| (0..self.n).all(|t| !self.contains(u, t) || self.contains(s, t)))
    }
}

pub fn default_max_iters(theta: f64, tol: f64, alpha: f64) -> usize {
    if alpha >= 1.0 {
        UNDISCOUNTED_MAX_ITERS
    } else {
        let steps = ((theta / tol).ln() / (1.0 / alpha).ln()).ceil().max(1.0);
        10 * steps as usize
    }
}

/// One application of the transformer described by `kind`, where `lift`
/// computes the one-step term `M(s, t)` against `d`.
pub(crate) fn transform(
    n: usize,
    prop: &MetricMatrix,
    theta: f64,
    kind: MetricKind,
    d: &MetricMatrix,
    mut lift: impl FnMut(&MetricMatrix, usize, usize) -> Result<f64>,
) -> Result<MetricMatrix> {
    let mut h = MetricMatrix::zeros(n);
    for s in 0..n {
        for t in 0..n {
            if s == t {
                continue;
            }
            let p = prop.get(s, t);
            // Max-kind iterates never exceed theta, so a saturated
            // propositional distance decides the pair.
            let value = if kind.combine == Combine::Max && p >= theta {
                p
            } else {
                kind.combine(p, lift(d, s, t)?)
            };
            h.set(s, t, value);
        }
    }
    if kind.base == Base::Bisimulation {
        h = MetricMatrix::from_fn(n, |s, t| h.get(s, t).max(h.get(t, s)));
    }
    Ok(h)
}

/// Picard iteration from the zero metric.
pub(crate) fn picard(
    n: usize,
    prop: &MetricMatrix,
    theta: f64,
    kind: MetricKind,
    tol: f64,
    max_iters: usize,
    mut lift: impl FnMut(&MetricMatrix, usize, usize) -> Result<f64>,
) -> Result<(MetricMatrix, FixpointReport)> {
    if !(tol > 0.0) {
        return Err(Error::Contract(format!("tolerance {tol} must be positive")));
    }
    let watch_growth = kind.may_diverge();
    let cap = theta * DIVERGENCE_FACTOR;
    let mut d = MetricMatrix::zeros(n);
    let mut flagged = vec![false; n * n];
    let mut snapshots: Vec<MetricMatrix> = vec![d.clone()];
    let mut last_change = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iters {
        let next = transform(n, prop, theta, kind, &d, &mut lift)?;
        iterations += 1;
        last_change = 0.0;
        for s in 0..n {
            for t in 0..n {
                if !flagged[s * n + t] {
                    last_change = last_change.max((next.get(s, t) - d.get(s, t)).abs());
                }
            }
        }
        d = next;

        if watch_growth {
            for s in 0..n {
                for t in 0..n {
                    if d.get(s, t) > cap {
                        flagged[s * n + t] = true;
                    }
                }
            }
            if iterations % DIVERGENCE_WINDOW == 0 {
                snapshots.push(d.clone());
                if let [.., older, old, _] = snapshots.as_slice() {
                    let w = DIVERGENCE_WINDOW as f64;
                    for s in 0..n {
                        for t in 0..n {
                            let before = old.get(s, t) - older.get(s, t);
                            let recent = d.get(s, t) - old.get(s, t);
                            // Convergent pairs slow down geometrically; a pair
                            // still growing at its earlier rate is not settling.
                            if recent > w * tol && recent >= 0.9 * before {
                                flagged[s * n + t] = true;
                            }
                        }
                    }
                }
            }
        }

        if last_change < tol {
            converged = true;
            break;
        }
    }

    let mut divergent_pairs = 0;
    for s in 0..n {
        for t in 0..n {
            if flagged[s * n + t] {
                d.mark_divergent(s, t);
                divergent_pairs += 1;
            }
        }
    }
    let status = if divergent_pairs > 0 {
        Status::Divergent
    } else if converged {
        Status::Converged
    } else {
        Status::IterationLimited
    };
    Ok((d, FixpointReport { status, iterations, last_change, divergent_pairs }))
}

/// One application of the metric transformer for `kind`.
pub fn apply_transformer(g: &GameStructure, d: &MetricMatrix, kind: MetricKind) -> Result<MetricMatrix> {
    matchdist::ensure_supported(g)?;
    let n = g.num_states();
    if d.size() != n {
        return Err(Error::Contract("metric size does not match the state count".into()));
    }
    transform(n, &g.prop_matrix(), g.theta(), kind, d, |d, s, t| matchdist::lifted(g, s, t, d))
}

/// Least fixpoint of the transformer for `kind` by Picard iteration.
/// `max_iters = None` picks [`default_max_iters`].
pub fn fixpoint(
    g: &GameStructure,
    kind: MetricKind,
    tol: f64,
    max_iters: Option<usize>,
) -> Result<(MetricMatrix, FixpointReport)> {
    matchdist::ensure_supported(g)?;
    let max_iters = max_iters.unwrap_or_else(|| default_max_iters(g.theta(), tol, kind.alpha));
    picard(g.num_states(), &g.prop_matrix(), g.theta(), kind, tol, max_iters, |d, s, t| {
        matchdist::lifted(g, s, t, d)
    })
}

/// Greatest simulation relation: start from propositional equivalence and
/// drop pairs whose moves cannot be shipped along the current relation.
pub fn sim_kernel(g: &GameStructure) -> Result<Relation> {
    matchdist::ensure_supported(g)?;
    let n = g.num_states();
    let mut rel = Relation::from_fn(n, |s, t| g.prop_distance(s, t) == 0.0);
    loop {
        let mut next = rel.clone();
        for (s, t) in rel.pairs() {
            if s != t && !matchdist::sim_step_unchecked(g, s, t, &rel)? {
                next.remove(s, t);
            }
        }
        if next == rel {
            return Ok(rel);
        }
        rel = next;
    }
}

/// Bisimulation kernel by partition refinement with class-mass feasibility
/// checks in both directions.
pub fn bis_kernel(g: &GameStructure) -> Result<Partition> {
    matchdist::ensure_supported(g)?;
    let n = g.num_states();
    let mut part = Partition::new(g.prop_classes(), n)?;
    loop {
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for block in part.blocks() {
            let mut sub: Vec<Vec<usize>> = Vec::new();
            for &s in block {
                let mut placed = false;
                for b in sub.iter_mut() {
                    let rep = b[0];
                    if matchdist::onebis_unchecked(g, s, rep, &part)?
                        && matchdist::onebis_unchecked(g, rep, s, &part)?
                    {
                        b.push(s);
                        placed = true;
                        break;
                    }
                }
                if !placed {
                    sub.push(vec![s]);
                }
            }
            blocks.extend(sub);
        }
        let next = Partition::new(blocks, n)?;
        if next == part {
            return Ok(part);
        }
        part = next;
    }
}
