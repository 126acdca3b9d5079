//! Small dense linear programs.
//!
//! Problems are stated over named variables with box bounds and `<=`, `=`,
//! `>=` rows, always as minimization. [`solve`] runs a two-phase tableau
//! simplex with Bland's rule, which cannot cycle and keeps the pivot sequence
//! a pure function of the input. Every LP built elsewhere in the crate has a
//! few dozen columns at most, so a dense tableau is the right tool.

use crate::error::{Error, Result};

/// Index of a variable inside an [`LpProblem`].
pub type VarId = usize;

/// Pivot elements and reduced costs smaller than this are treated as zero.
pub const PIVOT_TOL: f64 = 1e-9;

/// Tolerance used when verifying a returned point against the constraints.
pub const CHECK_TOL: f64 = 1e-7;

const MAX_PIVOTS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// A linear program `minimize c·x` subject to linear rows and per-variable
/// bounds (default `[0, +inf)`).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LpProblem {
    names: Vec<String>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    objective: Vec<(VarId, f64)>,
    constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub value: f64,
    pub point: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(&self) -> Option<&LpSolution> {
        match self {
            LpOutcome::Optimal(sol) => Some(sol),
            _ => None,
        }
    }
}

impl LpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a nonnegative variable.
    pub fn add_var(&mut self, name: impl Into<String>) -> VarId {
        self.add_bounded_var(name, 0.0, f64::INFINITY)
    }

    /// Adds a variable with explicit bounds; use infinities for open sides.
    pub fn add_bounded_var(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        self.names.push(name.into());
        self.lower.push(lower);
        self.upper.push(upper);
        self.names.len() - 1
    }

    pub fn set_objective(&mut self, terms: Vec<(VarId, f64)>) {
        self.objective = terms;
    }

    pub fn add_constraint(&mut self, terms: Vec<(VarId, f64)>, sense: Sense, rhs: f64) {
        self.constraints.push(Constraint { terms, sense, rhs });
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn var_name(&self, var: VarId) -> &str {
        &self.names[var]
    }

    pub fn bounds(&self, var: VarId) -> (f64, f64) {
        (self.lower[var], self.upper[var])
    }

    pub fn objective(&self) -> &[(VarId, f64)] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective_value(&self, point: &[f64]) -> f64 {
        self.objective.iter().map(|&(v, c)| c * point[v]).sum()
    }

    /// True when `point` satisfies every bound and row within `tol`.
    pub fn satisfies(&self, point: &[f64], tol: f64) -> bool {
        if point.len() != self.num_vars() {
            return false;
        }
        let bounds_ok = point
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&x, (&lo, &hi))| x >= lo - tol && x <= hi + tol);
        bounds_ok
            && self.constraints.iter().all(|c| {
                let lhs: f64 = c.terms.iter().map(|&(v, a)| a * point[v]).sum();
                match c.sense {
                    Sense::Le => lhs <= c.rhs + tol,
                    Sense::Ge => lhs >= c.rhs - tol,
                    Sense::Eq => (lhs - c.rhs).abs() <= tol,
                }
            })
    }

    fn check_well_formed(&self) -> Result<()> {
        let n = self.num_vars();
        for v in 0..n {
            let (lo, hi) = (self.lower[v], self.upper[v]);
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY
            {
                return Err(Error::MalformedLp(format!(
                    "variable `{}` has bounds [{lo}, {hi}]",
                    self.names[v]
                )));
            }
        }
        let check_terms = |terms: &[(VarId, f64)], what: &str| -> Result<()> {
            for &(v, a) in terms {
                if v >= n {
                    return Err(Error::MalformedLp(format!("{what} references undeclared variable #{v}")));
                }
                if !a.is_finite() {
                    return Err(Error::MalformedLp(format!(
                        "{what} has non-finite coefficient on `{}`",
                        self.names[v]
                    )));
                }
            }
            Ok(())
        };
        check_terms(&self.objective, "objective")?;
        for (i, c) in self.constraints.iter().enumerate() {
            check_terms(&c.terms, &format!("constraint {i}"))?;
            if !c.rhs.is_finite() {
                return Err(Error::MalformedLp(format!("constraint {i} has non-finite rhs")));
            }
        }
        Ok(())
    }
}

/// How an original variable is expressed through nonnegative tableau columns.
struct VarMap {
    offset: f64,
    cols: Vec<(usize, f64)>,
}

struct Tableau {
    rows: usize,
    width: usize, // columns + 1 (rhs last)
    a: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * self.width + c]
    }

    #[inline]
    fn rhs(&self, r: usize) -> f64 {
        self.a[r * self.width + self.width - 1]
    }

    fn pivot(&mut self, r: usize, c: usize, cost: &mut [f64]) {
        let w = self.width;
        let p = self.a[r * w + c];
        for j in 0..w {
            self.a[r * w + j] /= p;
        }
        self.a[r * w + c] = 1.0;
        let (before, rest) = self.a.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        let eliminate = |row: &mut [f64]| {
            let f = row[c];
            if f != 0.0 {
                for j in 0..w {
                    row[j] -= f * prow[j];
                }
                row[c] = 0.0;
            }
        };
        before.chunks_mut(w).for_each(eliminate);
        after.chunks_mut(w).for_each(eliminate);
        eliminate(cost);
        self.basis[r] = c;
    }

    /// Runs Bland-rule simplex on `cost` (reduced costs, rhs entry last) over
    /// columns `< allowed`. Returns false when unbounded.
    fn optimize(&mut self, cost: &mut [f64], allowed: usize) -> Result<bool> {
        for _ in 0..MAX_PIVOTS {
            let Some(enter) = (0..allowed).find(|&j| cost[j] < -PIVOT_TOL) else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, enter);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(r) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - 1e-12
                                || (ratio <= lratio + 1e-12 && self.basis[r] < self.basis[lr])
                            {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            match leave {
                None => return Ok(false),
                Some((r, _)) => self.pivot(r, enter, cost),
            }
        }
        Err(Error::Numeric("simplex pivot limit exceeded".into()))
    }

    fn remove_row(&mut self, r: usize) {
        let w = self.width;
        self.a.drain(r * w..(r + 1) * w);
        self.basis.remove(r);
        self.rows -= 1;
    }
}

enum Core {
    Optimal(Vec<f64>),
    Infeasible,
    Unbounded,
}

/// Solves `problem`. Infeasible and unbounded problems are ordinary outcomes;
/// only malformed input is an error.
pub fn solve(problem: &LpProblem) -> Result<LpOutcome> {
    problem.check_well_formed()?;
    Ok(match run(problem, true)? {
        Core::Optimal(point) => {
            let value = problem.objective_value(&point);
            LpOutcome::Optimal(LpSolution { value, point })
        }
        Core::Infeasible => LpOutcome::Infeasible,
        Core::Unbounded => LpOutcome::Unbounded,
    })
}

/// Phase-one only: returns a witness point when the constraint set is
/// nonempty. The objective is ignored.
pub fn feasible(problem: &LpProblem) -> Result<Option<Vec<f64>>> {
    problem.check_well_formed()?;
    Ok(match run(problem, false)? {
        Core::Optimal(point) => Some(point),
        Core::Infeasible => None,
        Core::Unbounded => unreachable!("phase one is bounded below"),
    })
}

fn run(problem: &LpProblem, optimize: bool) -> Result<Core> {
    let n = problem.num_vars();

    // Standard form: every column nonnegative.
    let mut maps = Vec::with_capacity(n);
    let mut std_cols = 0usize;
    let mut rows: Vec<(Vec<(usize, f64)>, Sense, f64)> = Vec::new();
    for v in 0..n {
        let (lo, hi) = problem.bounds(v);
        let map = if lo.is_finite() {
            let c = std_cols;
            std_cols += 1;
            if hi.is_finite() {
                rows.push((vec![(c, 1.0)], Sense::Le, hi - lo));
            }
            VarMap { offset: lo, cols: vec![(c, 1.0)] }
        } else if hi.is_finite() {
            let c = std_cols;
            std_cols += 1;
            VarMap { offset: hi, cols: vec![(c, -1.0)] }
        } else {
            let c = std_cols;
            std_cols += 2;
            VarMap { offset: 0.0, cols: vec![(c, 1.0), (c + 1, -1.0)] }
        };
        maps.push(map);
    }
    for c in problem.constraints() {
        let mut terms = Vec::with_capacity(c.terms.len());
        let mut rhs = c.rhs;
        for &(v, a) in &c.terms {
            rhs -= a * maps[v].offset;
            for &(col, s) in &maps[v].cols {
                terms.push((col, a * s));
            }
        }
        rows.push((terms, c.sense, rhs));
    }
    let mut cost_std = vec![0.0; std_cols];
    if optimize {
        for &(v, a) in problem.objective() {
            for &(col, s) in &maps[v].cols {
                cost_std[col] += a * s;
            }
        }
    }

    // Normalize rhs >= 0 and count auxiliary columns.
    for row in rows.iter_mut() {
        if row.2 < 0.0 {
            row.2 = -row.2;
            row.0.iter_mut().for_each(|t| t.1 = -t.1);
            row.1 = match row.1 {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
        }
    }
    let n_slack = rows.iter().filter(|r| r.1 != Sense::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Sense::Le).count();
    let art_start = std_cols + n_slack;
    let cols = art_start + n_art;
    let m = rows.len();
    let width = cols + 1;

    let mut tab = Tableau { rows: m, width, a: vec![0.0; m * width], basis: vec![0; m] };
    let mut slack = std_cols;
    let mut art = art_start;
    for (r, (terms, sense, rhs)) in rows.iter().enumerate() {
        for &(c, a) in terms {
            tab.a[r * width + c] += a;
        }
        tab.a[r * width + cols] = *rhs;
        match sense {
            Sense::Le => {
                tab.a[r * width + slack] = 1.0;
                tab.basis[r] = slack;
                slack += 1;
            }
            Sense::Ge => {
                tab.a[r * width + slack] = -1.0;
                slack += 1;
                tab.a[r * width + art] = 1.0;
                tab.basis[r] = art;
                art += 1;
            }
            Sense::Eq => {
                tab.a[r * width + art] = 1.0;
                tab.basis[r] = art;
                art += 1;
            }
        }
    }

    // Phase one: minimize the sum of artificials.
    if n_art > 0 {
        let mut cost = vec![0.0; width];
        for c in art_start..cols {
            cost[c] = 1.0;
        }
        for r in 0..m {
            if tab.basis[r] >= art_start {
                for j in 0..width {
                    cost[j] -= tab.at(r, j);
                }
            }
        }
        tab.optimize(&mut cost, cols)?;
        let infeasibility = -cost[cols];
        let scale = rows.iter().map(|r| r.2).fold(1.0, f64::max);
        if infeasibility > 1e-9 * scale {
            return Ok(Core::Infeasible);
        }
        // Drive remaining artificials out of the basis; drop redundant rows.
        let mut r = 0;
        while r < tab.rows {
            if tab.basis[r] >= art_start {
                match (0..art_start).find(|&j| tab.at(r, j).abs() > PIVOT_TOL) {
                    Some(j) => {
                        tab.pivot(r, j, &mut cost);
                        r += 1;
                    }
                    None => tab.remove_row(r),
                }
            } else {
                r += 1;
            }
        }
    }

    // Phase two over structural and slack columns.
    let mut cost = vec![0.0; width];
    cost[..std_cols].copy_from_slice(&cost_std);
    for r in 0..tab.rows {
        let cb = cost_std.get(tab.basis[r]).copied().unwrap_or(0.0);
        if cb != 0.0 {
            for j in 0..width {
                cost[j] -= cb * tab.at(r, j);
            }
        }
    }
    if optimize && !tab.optimize(&mut cost, art_start)? {
        return Ok(Core::Unbounded);
    }

    let mut x_std = vec![0.0; cols];
    for r in 0..tab.rows {
        x_std[tab.basis[r]] = tab.rhs(r).max(0.0);
    }
    let point = maps
        .iter()
        .map(|map| map.offset + map.cols.iter().map(|&(c, s)| s * x_std[c]).sum::<f64>())
        .collect();
    Ok(Core::Optimal(point))
}
