//! Concurrent games: a sampled lower-bound estimator for one-step distances,
//! the reduction from reachability to a distance, and a reachability oracle.
//!
//! For a fixed valuation `k` the one-step objective at `(s, t)` separates:
//! player 2's choices at `s` and at `t` act on different terms, so
//!
//! ```text
//! sup_x1 inf_y1 sup_y2 inf_x2 (E_s^{x1,x2}(k) - E_t^{y1,y2}(k)) = pre1(k)(s) - pre1(k)(t)
//! ```
//!
//! and each side is one matrix game. What remains hard is the supremum over
//! `k in C(d)`. The estimator searches it with structured candidates, seeded
//! random samples and coordinate ascent. Every candidate is feasible, so the
//! result never exceeds the true distance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::game::{GameStructure, MetricMatrix, Player, Valuation};
use crate::metrics::{self, FixpointReport, MetricKind, Status};
use crate::payoffs::state_pre;

/// Rounds of constraint clipping when projecting a valuation into `C(d)`.
pub const PROJECTION_ROUNDS: usize = 50;

/// Iteration cap and tolerance for [`reachability_value`].
pub const REACH_MAX_ITERS: usize = 100_000;
pub const REACH_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorParams {
    pub samples: usize,
    pub ascent_steps: usize,
    pub step_size: f64,
    pub seed: u64,
}

impl Default for EstimatorParams {
    fn default() -> Self {
        EstimatorParams { samples: 16, ascent_steps: 20, step_size: 0.125, seed: 0 }
    }
}

impl EstimatorParams {
    fn check(&self, theta: f64) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::Contract("estimator needs at least one sample".into()));
        }
        if !(self.step_size > 0.0 && self.step_size <= theta) {
            return Err(Error::Contract(format!(
                "step size {} outside (0, {theta}]",
                self.step_size
            )));
        }
        Ok(())
    }
}

/// Search state for one metric `d`.
struct Search<'a> {
    g: &'a GameStructure,
    d: &'a MetricMatrix,
    lo: f64,
    hi: f64,
}

impl<'a> Search<'a> {
    fn new(g: &'a GameStructure, d: &'a MetricMatrix) -> Self {
        let lo = g.interval().low;
        // Total metrics may exceed the interval width; widen the range so
        // that their valuations still fit.
        let mut width = g.theta();
        for s in 0..d.size() {
            for t in 0..d.size() {
                if !d.is_divergent(s, t) {
                    width = width.max(d.get(s, t));
                }
            }
        }
        Search { g, d, lo, hi: lo + width }
    }

    fn n(&self) -> usize {
        self.g.num_states()
    }

    fn objective(&self, s: usize, t: usize, k: &[f64]) -> Result<f64> {
        Ok(state_pre(self.g, s, k, Player::One)? - state_pre(self.g, t, k, Player::One)?)
    }

    /// Clips into range, then lowers entries until `k(u) - k(v) <= d(u, v)`.
    fn project(&self, k: &mut [f64]) {
        for x in k.iter_mut() {
            *x = x.clamp(self.lo, self.hi);
        }
        for _ in 0..PROJECTION_ROUNDS {
            let mut clean = true;
            for u in 0..k.len() {
                for v in 0..k.len() {
                    let cap = k[v] + self.d.get(u, v);
                    if u != v && k[u] > cap {
                        k[u] = cap;
                        clean = false;
                    }
                }
            }
            if clean {
                return;
            }
        }
    }

    /// Feasible range of `k(u)` with the other entries held fixed.
    fn range(&self, k: &[f64], u: usize) -> (f64, f64) {
        let (mut lo, mut hi) = (self.lo, self.hi);
        for v in 0..k.len() {
            if v != u {
                lo = lo.max(k[v] - self.d.get(v, u));
                hi = hi.min(k[v] + self.d.get(u, v));
            }
        }
        (lo, hi.max(lo))
    }

    /// Coordinate ascent from a feasible `k`; returns the final objective.
    fn ascend(&self, s: usize, t: usize, k: &mut [f64], steps: usize, step_size: f64) -> Result<f64> {
        let mut best = self.objective(s, t, k)?;
        let mut step = step_size;
        for _ in 0..steps {
            let mut improved = false;
            for u in 0..k.len() {
                let (lo, hi) = self.range(k, u);
                let here = k[u];
                let mut pick = here;
                for x in [lo, hi, here + step, here - step] {
                    let x = x.clamp(lo, hi);
                    if x == here {
                        continue;
                    }
                    k[u] = x;
                    let value = self.objective(s, t, k)?;
                    if value > best + 1e-12 {
                        best = value;
                        pick = x;
                        improved = true;
                    }
                }
                k[u] = pick;
            }
            if !improved {
                step /= 2.0;
                if step < 1e-9 {
                    break;
                }
            }
        }
        Ok(best)
    }

    /// Distance-shaped candidates: `lo + d(u, w)` and `hi - d(w, u)` for
    /// every `w`, which lie in `C(d)` whenever `d` obeys the triangle
    /// inequality (and are projected otherwise).
    fn structured(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        let width = self.hi - self.lo;
        let mut out = vec![vec![self.lo; n]];
        for w in 0..n {
            out.push((0..n).map(|u| self.lo + self.d.get(u, w).min(width)).collect());
            out.push((0..n).map(|u| self.hi - self.d.get(w, u).min(width)).collect());
        }
        out
    }

    fn sample(&self, seed: u64, index: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index as u64);
        (0..self.n()).map(|_| rng.gen_range(self.lo..=self.hi)).collect()
    }

    /// Best ascended candidate among `candidates`.
    fn best_of(
        &self,
        s: usize,
        t: usize,
        candidates: Vec<Vec<f64>>,
        params: &EstimatorParams,
    ) -> Result<(f64, Vec<f64>)> {
        let mut best = (0.0, vec![self.lo; self.n()]);
        for mut k in candidates {
            self.project(&mut k);
            let value = self.ascend(s, t, &mut k, params.ascent_steps, params.step_size)?;
            if value > best.0 {
                best = (value, k);
            }
        }
        Ok(best)
    }

    fn all_candidates(&self, params: &EstimatorParams) -> Vec<Vec<f64>> {
        let mut candidates = self.structured();
        candidates.extend((0..params.samples).map(|i| self.sample(params.seed, i)));
        candidates
    }
}

fn check_pair(g: &GameStructure, s: usize, t: usize, d: &MetricMatrix) -> Result<()> {
    let n = g.num_states();
    if s >= n || t >= n {
        return Err(Error::Contract(format!("state index out of range ({s}, {t})")));
    }
    if d.size() != n {
        return Err(Error::Contract("metric size does not match the state count".into()));
    }
    Ok(())
}

/// Lower bound on the one-step distance `p(s,t) ⊔ sup_{k in C(d)} (pre1(k)(s) - pre1(k)(t))`.
/// Works for every valid structure, so MDPs and turn-based games can be
/// used to cross-check against the exact LP computation.
pub fn estimate_onestep(
    g: &GameStructure,
    s: usize,
    t: usize,
    d: &MetricMatrix,
    params: &EstimatorParams,
) -> Result<f64> {
    g.ensure_valid()?;
    params.check(g.theta())?;
    check_pair(g, s, t, d)?;
    if s == t {
        return Ok(0.0);
    }
    let search = Search::new(g, d);
    let (lifted, _) = search.best_of(s, t, search.all_candidates(params), params)?;
    Ok(g.prop_distance(s, t).max(lifted))
}

/// Picard iteration with the estimator as the one-step operator. The first
/// sweep searches all candidates; later sweeps restart each pair from its
/// best valuation so far (still feasible, since `C(d)` only grows along the
/// iteration) together with the structured candidates. The report status is
/// [`Status::HeuristicLowerBound`] unless divergence was detected.
pub fn estimate_metric_concurrent(
    g: &GameStructure,
    kind: MetricKind,
    params: &EstimatorParams,
    tol: f64,
    max_iters: Option<usize>,
) -> Result<(MetricMatrix, FixpointReport)> {
    g.ensure_valid()?;
    params.check(g.theta())?;
    let n = g.num_states();
    let max_iters = max_iters.unwrap_or_else(|| metrics::default_max_iters(g.theta(), tol, kind.alpha));
    let mut warm: Vec<Option<(f64, Vec<f64>)>> = vec![None; n * n];
    let (d, mut report) = metrics::picard(n, &g.prop_matrix(), g.theta(), kind, tol, max_iters, |d, s, t| {
        let search = Search::new(g, d);
        let slot = &mut warm[s * n + t];
        let candidates = match slot {
            None => search.all_candidates(params),
            Some((_, k)) => {
                let mut c = search.structured();
                c.push(k.clone());
                c
            }
        };
        let found = search.best_of(s, t, candidates, params)?;
        // The true operator is monotone along the iteration, so keeping the
        // best value seen stays below it.
        if slot.as_ref().is_none_or(|(v, _)| found.0 >= *v) {
            *slot = Some(found);
        }
        Ok(slot.as_ref().expect("just set").0)
    })?;
    if report.status != Status::Divergent {
        report.status = Status::HeuristicLowerBound;
    }
    Ok((d, report))
}

fn goal_indicator(g: &GameStructure, q: &str) -> Result<Vec<bool>> {
    if !g.has_variable(q) {
        return Err(Error::UnknownVariable(q.to_string()));
    }
    g.variable(q)?
        .values()
        .iter()
        .enumerate()
        .map(|(s, &x)| {
            if x == 1.0 {
                Ok(true)
            } else if x == 0.0 {
                Ok(false)
            } else {
                Err(Error::Precondition(format!(
                    "`{q}` is {x} at `{}`; expected 0 or 1",
                    g.state_name(s)
                )))
            }
        })
        .collect()
}

fn check_goals_absorbing(g: &GameStructure, goals: &[bool]) -> Result<()> {
    for (s, _) in goals.iter().enumerate().filter(|(_, &q)| q) {
        let stays = (0..g.num_moves(s, Player::One))
            .all(|a| (0..g.num_moves(s, Player::Two)).all(|b| g.dist(s, a, b).prob(s) == 1.0));
        if !stays {
            return Err(Error::Precondition(format!(
                "goal state `{}` is not absorbing",
                g.state_name(s)
            )));
        }
    }
    Ok(())
}

/// Adds a fresh absorbing state `t'` (primed further if the name is taken)
/// where `q` is 0. Other variables take the interval's lower end there.
pub fn build_reduction(g: &GameStructure, q: &str) -> Result<GameStructure> {
    g.ensure_valid()?;
    let goals = goal_indicator(g, q)?;
    check_goals_absorbing(g, &goals)?;

    let mut name = String::from("t'");
    while g.lookup(&name).is_ok() {
        name.push('\'');
    }
    let mut file = g.to_file();
    file.states.push(name.clone());
    let low = g.interval().low;
    for (var, values) in file.variables.iter_mut() {
        values.insert(name.clone(), if var == q { 0.0 } else { low });
    }
    file.trans.push(crate::format::TransEntry {
        state: name.clone(),
        m1: crate::format::NO_CHOICE.into(),
        m2: crate::format::NO_CHOICE.into(),
        dist: [(name, 1.0)].into_iter().collect(),
    });
    let reduced = GameStructure::from_file(&file)?;
    reduced.ensure_valid()?;
    Ok(reduced)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReachabilityResult {
    pub value: Valuation,
    pub iterations: usize,
    pub converged: bool,
}

/// Optimal probability for player 1 to reach `q`: the least fixpoint of
/// `v -> q ⊔ pre1(v)` by value iteration from `q`.
pub fn reachability_value(g: &GameStructure, q: &str) -> Result<ReachabilityResult> {
    g.ensure_valid()?;
    let goals = goal_indicator(g, q)?;
    check_goals_absorbing(g, &goals)?;
    let n = g.num_states();
    let mut v: Vec<f64> = goals.iter().map(|&x| if x { 1.0 } else { 0.0 }).collect();
    for iterations in 1..=REACH_MAX_ITERS {
        let mut next = Vec::with_capacity(n);
        for s in 0..n {
            next.push(if goals[s] { 1.0 } else { state_pre(g, s, &v, Player::One)?.clamp(0.0, 1.0) });
        }
        let change = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        if change < REACH_TOL {
            return Ok(ReachabilityResult { value: Valuation(v), iterations, converged: true });
        }
    }
    Ok(ReachabilityResult { value: Valuation(v), iterations: REACH_MAX_ITERS, converged: false })
}

/// Concurrent-game kernel flag: pairs whose estimated distance is below
/// `tol`. Heuristic, since the estimate is only a lower bound.
pub fn heuristic_kernel(d: &MetricMatrix, tol: f64) -> Vec<(usize, usize)> {
    let n = d.size();
    (0..n)
        .flat_map(|s| (0..n).map(move |t| (s, t)))
        .filter(|&(s, t)| !d.is_divergent(s, t) && d.get(s, t) < tol)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Distribution;
    use crate::matchdist;
    use crate::random::{mismatch_game, random_game};

    #[test]
    fn identical_states_are_at_zero() {
        let g = mismatch_game();
        let d = MetricMatrix::zeros(3);
        assert_eq!(estimate_onestep(&g, 0, 0, &d, &EstimatorParams::default()).unwrap(), 0.0);
    }

    #[test]
    fn mismatch_reachability_is_one_half() {
        let r = reachability_value(&mismatch_game(), "q").unwrap();
        assert!(r.converged);
        assert!((r.value[0] - 0.5).abs() < 1e-12);
        assert_eq!(r.value[1], 1.0);
        assert_eq!(r.value[2], 0.0);
    }

    #[test]
    fn reduction_adds_an_absorbing_state() {
        let g = mismatch_game();
        let h = build_reduction(&g, "q").unwrap();
        assert_eq!(h.num_states(), 4);
        let t = h.lookup("t'").unwrap();
        assert_eq!(h.variable("q").unwrap()[t], 0.0);
        assert_eq!(h.dist(t, 0, 0).prob(t), 1.0);
        assert_eq!(h.classify().unwrap(), g.classify().unwrap());
    }

    #[test]
    fn reduction_needs_absorbing_goals() {
        let mut g = mismatch_game();
        g.set_transition(1, 0, 0, Distribution::new(vec![(1, 0.5), (2, 0.5)]));
        let err = build_reduction(&g, "q").unwrap_err();
        assert!(matches!(err, Error::Precondition(ref m) if m.contains("`goal`")), "{err}");
    }

    #[test]
    fn mismatch_estimate_against_the_fresh_state() {
        let h = build_reduction(&mismatch_game(), "q").unwrap();
        let t = h.lookup("t'").unwrap();
        // Distances of the reachability kernel: goal is 1 away from t'.
        let d = MetricMatrix::from_fn(4, |u, v| if u == 1 && v != 1 { 1.0 } else { 0.0 });
        let e = estimate_onestep(&h, 0, t, &d, &EstimatorParams::default()).unwrap();
        assert!(e >= 0.45 && e <= 0.5 + 1e-9, "{e}");
    }

    #[test]
    fn estimate_stays_below_exact_on_mdps() {
        for seed in 0..20 {
            let g = random_game(seed);
            let n = g.num_states();
            let (d, _) = metrics::fixpoint(&g, MetricKind::simulation(), 1e-6, None).unwrap();
            for s in 0..n {
                for t in 0..n {
                    let exact = matchdist::onestep(&g, s, t, &d).unwrap();
                    let est = estimate_onestep(&g, s, t, &d, &EstimatorParams::default()).unwrap();
                    assert!(est <= exact + 1e-6, "seed {seed} ({s},{t}): {est} > {exact}");
                    assert!(est >= g.prop_distance(s, t));
                }
            }
        }
    }
}
