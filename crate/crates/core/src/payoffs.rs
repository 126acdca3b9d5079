//! Discounted, average and total payoffs, and executable checks of the
//! bounds that the game metrics place on payoff differences.

use std::fmt;

use crate::error::{Error, Result};
use crate::game::{GameStructure, MetricMatrix, Player, Valuation};
use crate::linprog::{self, LpProblem, Sense};
use crate::metrics::{self, Base, Combine, MetricKind};

/// Default discount sequence for the average-payoff estimate.
pub const DEFAULT_ALPHAS: [f64; 3] = [0.9, 0.99, 0.999];

/// Slack allowed in every bound comparison.
pub const BOUND_TOL: f64 = 1e-6;

/// Horizon used for the n-step total-reward comparison.
pub const TOTAL_STEPS: usize = 50;

/// Tolerance for the metric fixpoints inside the bound suite.
pub const SUITE_METRIC_TOL: f64 = 1e-9;

const VALUE_TOL: f64 = 1e-10;
const GAME_TOL: f64 = 1e-7;
const NOISE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PayoffSpec {
    pub reward: String,
    pub alpha: f64,
    pub player: Player,
}

impl PayoffSpec {
    pub fn new(reward: impl Into<String>, alpha: f64, player: Player) -> Self {
        PayoffSpec { reward: reward.into(), alpha, player }
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        PayoffSpec { alpha, ..self.clone() }
    }
}

/// A zero-sum matrix game; rows belong to the maximizer.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixGame {
    rows: Vec<Vec<f64>>,
}

impl MatrixGame {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let width = rows.first().map_or(0, Vec::len);
        if width == 0 || rows.iter().any(|r| r.len() != width) {
            return Err(Error::Contract("matrix game must be a nonempty rectangle".into()));
        }
        if rows.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Contract("matrix game entries must be finite".into()));
        }
        Ok(MatrixGame { rows })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_cols(&self) -> usize {
        self.rows[0].len()
    }

    pub fn transpose(&self) -> Self {
        let rows = (0..self.num_cols())
            .map(|j| self.rows.iter().map(|r| r[j]).collect())
            .collect();
        MatrixGame { rows }
    }

    pub fn negate(&self) -> Self {
        MatrixGame { rows: self.rows.iter().map(|r| r.iter().map(|x| -x).collect()).collect() }
    }

    /// Expected payoff of a pair of mixed strategies.
    pub fn payoff(&self, row: &[f64], col: &[f64]) -> f64 {
        self.rows
            .iter()
            .zip(row)
            .map(|(r, &x)| x * r.iter().zip(col).map(|(m, &y)| m * y).sum::<f64>())
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameSolution {
    pub value: f64,
    pub row: Vec<f64>,
    pub col: Vec<f64>,
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

fn argmax(values: impl Iterator<Item = f64>) -> (usize, f64) {
    values
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, x)| if x > best.1 { (i, x) } else { best })
}

/// Pure saddle point, when one exists.
fn saddle(m: &MatrixGame) -> Option<GameSolution> {
    let (i, lower) = argmax(m.rows.iter().map(|r| r.iter().copied().fold(f64::INFINITY, f64::min)));
    let (j, neg_upper) =
        argmax((0..m.num_cols()).map(|j| -m.rows.iter().map(|r| r[j]).fold(f64::NEG_INFINITY, f64::max)));
    let upper = -neg_upper;
    (upper - lower <= 1e-12 * (1.0 + lower.abs())).then(|| GameSolution {
        value: lower,
        row: unit(m.num_rows(), i),
        col: unit(m.num_cols(), j),
    })
}

/// Optimal row strategy and value via `max v` s.t. every column pays at
/// least `v`.
fn row_lp(m: &MatrixGame) -> Result<(f64, Vec<f64>)> {
    let mut lp = LpProblem::new();
    let x: Vec<_> = (0..m.num_rows()).map(|i| lp.add_var(format!("x{i}"))).collect();
    let v = lp.add_bounded_var("v", f64::NEG_INFINITY, f64::INFINITY);
    lp.set_objective(vec![(v, -1.0)]);
    for j in 0..m.num_cols() {
        let mut terms: Vec<_> = x.iter().enumerate().map(|(i, &xi)| (xi, m.rows[i][j])).collect();
        terms.push((v, -1.0));
        lp.add_constraint(terms, Sense::Ge, 0.0);
    }
    lp.add_constraint(x.iter().map(|&xi| (xi, 1.0)).collect(), Sense::Eq, 1.0);
    let outcome = linprog::solve(&lp)?;
    let sol = outcome
        .optimal()
        .ok_or_else(|| Error::Numeric("matrix game LP has no optimum".into()))?;
    let strategy = x.iter().map(|&xi| sol.point[xi].max(0.0)).collect::<Vec<_>>();
    let total: f64 = strategy.iter().sum();
    Ok((sol.point[v], strategy.into_iter().map(|p| p / total).collect()))
}

/// Minimax value of `m` and optimal mixed strategies for both players.
pub fn matrix_game_value(m: &MatrixGame) -> Result<GameSolution> {
    if let Some(sol) = saddle(m) {
        return Ok(sol);
    }
    if m.num_rows() == 2 && m.num_cols() == 2 {
        let [a, b] = [m.rows[0][0], m.rows[0][1]];
        let [c, d] = [m.rows[1][0], m.rows[1][1]];
        // Without a saddle point both players mix and the denominator is
        // nonzero.
        let den = a - b - c + d;
        let p = (d - c) / den;
        let q = (d - b) / den;
        return Ok(GameSolution {
            value: (a * d - b * c) / den,
            row: vec![p, 1.0 - p],
            col: vec![q, 1.0 - q],
        });
    }
    let (value, row) = row_lp(m)?;
    // The column player's problem is the row problem of the negated
    // transpose.
    let (neg_value, col) = row_lp(&m.transpose().negate())?;
    if (value + neg_value).abs() > GAME_TOL * (1.0 + value.abs()) {
        return Err(Error::Numeric(format!("matrix game bounds disagree: {value} vs {}", -neg_value)));
    }
    Ok(GameSolution { value, row, col })
}

/// Value of the one-step game at `s` for `player` maximizing `k`.
pub(crate) fn state_pre(g: &GameStructure, s: usize, k: &[f64], player: Player) -> Result<f64> {
    let (n1, n2) = (g.num_moves(s, Player::One), g.num_moves(s, Player::Two));
    // Only one player chooses: the value is a max or a min over pure moves.
    if n1 == 1 || n2 == 1 {
        let values = (0..n1).flat_map(|a| (0..n2).map(move |b| (a, b)));
        let mut best: Option<f64> = None;
        let maximize = (player == Player::One) == (n2 == 1);
        for (a, b) in values {
            let e = g.dist(s, a, b).expect(k);
            best = Some(match best {
                None => e,
                Some(x) if maximize => x.max(e),
                Some(x) => x.min(e),
            });
        }
        return Ok(best.expect("every state has a move"));
    }
    let m = MatrixGame::new(g.expectation_matrix(s, k))?;
    let m = if player == Player::One { m } else { m.transpose() };
    Ok(matrix_game_value(&m)?.value)
}

/// One-step optimal expectation of `k` for `player`, state by state.
pub fn pre(g: &GameStructure, k: &Valuation, player: Player) -> Result<Valuation> {
    if k.len() != g.num_states() {
        return Err(Error::Contract("valuation size does not match the state count".into()));
    }
    (0..g.num_states())
        .map(|s| state_pre(g, s, k.values(), player))
        .collect::<Result<Vec<_>>>()
        .map(Valuation)
}

/// Reward vector seen by `player` (player 2 receives the negated reward).
fn reward_for(g: &GameStructure, reward: &str, player: Player) -> Result<Vec<f64>> {
    if !g.has_variable(reward) {
        return Err(Error::UnknownVariable(reward.to_string()));
    }
    let r = g.variable(reward)?;
    if r.values().iter().any(|x| !x.is_finite()) {
        return Err(Error::Contract(format!("reward `{reward}` is not defined at every state")));
    }
    Ok(match player {
        Player::One => r.0,
        Player::Two => r.0.into_iter().map(|x| -x).collect(),
    })
}

/// Discounted value by iterating `w <- (1-α)r + α·pre(w)` from `w = r`.
/// The loop stops once a step moves less than `tol·(1-α)`, which bounds
/// the remaining error by `tol`.
pub fn discounted_value(g: &GameStructure, spec: &PayoffSpec, tol: f64) -> Result<Valuation> {
    let alpha = spec.alpha;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Contract(format!("discount {alpha} outside (0, 1)")));
    }
    if !(tol > 0.0) {
        return Err(Error::Contract(format!("tolerance {tol} must be positive")));
    }
    g.ensure_valid()?;
    let r = reward_for(g, &spec.reward, spec.player)?;
    let scale = r.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    // Near 1 the step size can stall at rounding noise (ties between moves
    // flip back and forth), so the threshold never drops below that noise
    // and the contraction rate caps the iteration count.
    let threshold = (tol * (1.0 - alpha)).max(NOISE_FLOOR * scale);
    let cap = ((threshold / (2.0 * scale)).ln() / alpha.ln()).ceil() as usize * 2 + 100;
    let mut w = Valuation(r.clone());
    for _ in 0..cap {
        let p = pre(g, &w, spec.player)?;
        let next = Valuation(r.iter().zip(p.values()).map(|(ri, pi)| (1.0 - alpha) * ri + alpha * pi).collect());
        let change = next.max_abs_diff(&w);
        w = next;
        if change < threshold {
            break;
        }
    }
    Ok(w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AverageEstimate {
    /// Discounted value at the last (largest) discount.
    pub value: Valuation,
    /// Per-state spread of the discounted values across the sequence.
    pub spread: Vec<f64>,
    pub per_alpha: Vec<(f64, Valuation)>,
}

/// Average payoff approximated by discounted values as `α -> 1`. The
/// spread is an uncertainty indicator, not a bound.
pub fn average_value_estimate(
    g: &GameStructure,
    reward: &str,
    player: Player,
    alphas: &[f64],
) -> Result<AverageEstimate> {
    if alphas.is_empty() || alphas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Contract("discount sequence must be nonempty and increasing".into()));
    }
    let mut per_alpha = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let w = discounted_value(g, &PayoffSpec::new(reward, alpha, player), VALUE_TOL)?;
        per_alpha.push((alpha, w));
    }
    let n = g.num_states();
    let spread = (0..n)
        .map(|s| {
            let xs = per_alpha.iter().map(|(_, w)| w[s]);
            let hi = xs.clone().fold(f64::NEG_INFINITY, f64::max);
            let lo = xs.fold(f64::INFINITY, f64::min);
            hi - lo
        })
        .collect();
    let value = per_alpha.last().expect("nonempty").1.clone();
    Ok(AverageEstimate { value, spread, per_alpha })
}

/// The n-step total-reward values `T(1), ..., T(n)`, where
/// `T(n) = (1/n)·Σ_{i=1..n} u(i)` and `u(i) = r + pre(u(i-1))`, `u(0) = r`.
pub fn total_reward_iterates(g: &GameStructure, reward: &str, player: Player, n: usize) -> Result<Vec<Valuation>> {
    if n == 0 {
        return Err(Error::Contract("total reward needs at least one step".into()));
    }
    g.ensure_valid()?;
    let r = reward_for(g, reward, player)?;
    let mut u = Valuation(r.clone());
    let mut sum = vec![0.0; r.len()];
    let mut out = Vec::with_capacity(n);
    for i in 1..=n {
        let p = pre(g, &u, player)?;
        u = Valuation(r.iter().zip(p.values()).map(|(a, b)| a + b).collect());
        for (acc, x) in sum.iter_mut().zip(u.values()) {
            *acc += x;
        }
        out.push(Valuation(sum.iter().map(|x| x / i as f64).collect()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    /// Discounted payoff difference against the metric.
    DiscountedDifference,
    /// Average payoff difference against the metric, with uncertainty.
    AverageDifference,
    /// n-step total reward difference against the metric.
    TotalDifference,
    /// Discounted total metric against `Θ/(1-α)`.
    MetricCeiling,
    /// A discounted metric against its undiscounted counterpart.
    MetricOrder,
    /// Discounted payoff difference exceeding the discounted max-metric.
    /// Not a violation: the discounted max-metric is known not to bound
    /// discounted payoffs.
    DiscountedExceedsDiscountedMetric,
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundKind::DiscountedDifference => "discounted-difference",
            BoundKind::AverageDifference => "average-difference",
            BoundKind::TotalDifference => "total-difference",
            BoundKind::MetricCeiling => "metric-ceiling",
            BoundKind::MetricOrder => "metric-order",
            BoundKind::DiscountedExceedsDiscountedMetric => "discounted-exceeds-discounted-metric",
        })
    }
}

/// One comparison `lhs <= rhs` at the pair `(s, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundFinding {
    pub kind: BoundKind,
    pub metric: String,
    pub s: usize,
    pub t: usize,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundReport {
    pub checked: usize,
    pub violations: Vec<BoundFinding>,
    pub counterexamples: Vec<BoundFinding>,
}

impl BoundReport {
    fn merge(&mut self, other: BoundReport) {
        self.checked += other.checked;
        self.violations.extend(other.violations);
        self.counterexamples.extend(other.counterexamples);
    }

    fn compare(&mut self, finding: BoundFinding, slack: f64) {
        self.checked += 1;
        if finding.lhs > finding.rhs + slack {
            self.violations.push(finding);
        }
    }
}

pub fn metric_label(kind: MetricKind) -> String {
    let base = match kind.base {
        Base::Simulation => "sim",
        Base::Bisimulation => "bis",
    };
    let combine = match kind.combine {
        Combine::Max => "max",
        Combine::Sum => "sum",
    };
    format!("{base}/{combine}/alpha={}", kind.alpha)
}

/// Difference of `w` at `(s, t)` as bounded by a metric of `base`, and the
/// metric entry that bounds it.
fn difference(w: &[f64], metric: &MetricMatrix, base: Base, player: Player, s: usize, t: usize) -> (f64, f64) {
    let bound = match player {
        Player::One => metric.get(s, t),
        Player::Two => metric.get(t, s),
    };
    let diff = match base {
        Base::Simulation => w[s] - w[t],
        Base::Bisimulation => (w[s] - w[t]).abs(),
    };
    (diff, bound)
}

/// Checks every ordered pair against the payoff bounds that hold for a
/// metric of `kind`. `spec.alpha` is the discount of the payoff in the
/// undiscounted max case; the discounted kinds use their own discount.
pub fn check_bounds(
    g: &GameStructure,
    spec: &PayoffSpec,
    metric: &MetricMatrix,
    kind: MetricKind,
) -> Result<BoundReport> {
    let n = g.num_states();
    if metric.size() != n {
        return Err(Error::Contract("metric size does not match the state count".into()));
    }
    let label = metric_label(kind);
    let mut report = BoundReport::default();
    let pairwise = |report: &mut BoundReport, w: &[f64], slack: &dyn Fn(usize, usize) -> f64, bk: BoundKind| {
        for s in 0..n {
            for t in 0..n {
                let (lhs, rhs) = difference(w, metric, kind.base, spec.player, s, t);
                let finding = BoundFinding { kind: bk, metric: label.clone(), s, t, lhs, rhs };
                report.compare(finding, slack(s, t));
            }
        }
    };
    let plain = |_: usize, _: usize| BOUND_TOL;

    match (kind.combine, kind.alpha < 1.0) {
        (Combine::Max, false) => {
            let w = discounted_value(g, spec, VALUE_TOL)?;
            pairwise(&mut report, w.values(), &plain, BoundKind::DiscountedDifference);
            let avg = average_value_estimate(g, &spec.reward, spec.player, &DEFAULT_ALPHAS)?;
            let unc = |s: usize, t: usize| avg.spread[s] + avg.spread[t] + BOUND_TOL;
            pairwise(&mut report, avg.value.values(), &unc, BoundKind::AverageDifference);
        }
        (Combine::Max, true) => {
            let w = discounted_value(g, &spec.with_alpha(kind.alpha), VALUE_TOL)?;
            let mut probe = BoundReport::default();
            pairwise(&mut probe, w.values(), &plain, BoundKind::DiscountedExceedsDiscountedMetric);
            report.counterexamples = probe.violations;
        }
        (Combine::Sum, true) => {
            let ceiling = g.theta() / (1.0 - kind.alpha);
            for s in 0..n {
                for t in 0..n {
                    let finding = BoundFinding {
                        kind: BoundKind::MetricCeiling,
                        metric: label.clone(),
                        s,
                        t,
                        lhs: metric.get(s, t),
                        rhs: ceiling,
                    };
                    report.compare(finding, BOUND_TOL);
                }
            }
            let w = discounted_value(g, &spec.with_alpha(kind.alpha), VALUE_TOL)?;
            pairwise(&mut report, w.values(), &plain, BoundKind::DiscountedDifference);
        }
        (Combine::Sum, false) => {
            let avg = average_value_estimate(g, &spec.reward, spec.player, &DEFAULT_ALPHAS)?;
            let unc = |s: usize, t: usize| avg.spread[s] + avg.spread[t] + BOUND_TOL;
            pairwise(&mut report, avg.value.values(), &unc, BoundKind::AverageDifference);
            let totals = total_reward_iterates(g, &spec.reward, spec.player, TOTAL_STEPS)?;
            for tn in &totals {
                pairwise(&mut report, tn.values(), &plain, BoundKind::TotalDifference);
            }
        }
    }
    Ok(report)
}

/// Checks `lower <= upper` entrywise (divergent entries count as `+inf`).
pub fn check_metric_order(lower: &MetricMatrix, lower_kind: MetricKind, upper: &MetricMatrix) -> BoundReport {
    let mut report = BoundReport::default();
    let n = lower.size();
    for s in 0..n {
        for t in 0..n {
            let finding = BoundFinding {
                kind: BoundKind::MetricOrder,
                metric: metric_label(lower_kind),
                s,
                t,
                lhs: lower.get(s, t),
                rhs: upper.get(s, t),
            };
            report.compare(finding, BOUND_TOL);
        }
    }
    report
}

/// The metrics computed by [`bound_suite`], keyed by kind.
#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub bounds: BoundReport,
    pub metrics: Vec<(MetricKind, MetricMatrix, metrics::FixpointReport)>,
}

/// Every bound check for one game at discount `alpha`: payoff differences
/// against the undiscounted and discounted max-metrics (both bases) and the
/// simulation total metrics, plus the orderings between discounted and
/// undiscounted metrics.
pub fn bound_suite(g: &GameStructure, reward: &str, alpha: f64) -> Result<SuiteReport> {
    let spec = PayoffSpec::new(reward, alpha, Player::One);
    let kinds = [
        MetricKind::new(Base::Simulation, Combine::Max, 1.0)?,
        MetricKind::new(Base::Bisimulation, Combine::Max, 1.0)?,
        MetricKind::new(Base::Simulation, Combine::Max, alpha)?,
        MetricKind::new(Base::Bisimulation, Combine::Max, alpha)?,
        MetricKind::new(Base::Simulation, Combine::Sum, alpha)?,
        MetricKind::new(Base::Simulation, Combine::Sum, 1.0)?,
    ];
    let mut bounds = BoundReport::default();
    let mut computed = Vec::new();
    for kind in kinds {
        let (d, fp) = metrics::fixpoint(g, kind, SUITE_METRIC_TOL, None)?;
        bounds.merge(check_bounds(g, &spec, &d, kind)?);
        computed.push((kind, d, fp));
    }
    // Discounted metrics sit below their undiscounted counterparts.
    for (lo, hi) in [(2, 0), (3, 1), (4, 5)] {
        bounds.merge(check_metric_order(&computed[lo].1, computed[lo].0, &computed[hi].1));
    }
    Ok(SuiteReport { bounds, metrics: computed })
}
