//! Dense two-phase simplex for the small design LPs.
//!
//! Problems are stated as `minimize c.x` subject to linear rows and `x >= 0`.
//! Pricing is Dantzig's rule, falling back to Bland's rule after a run of
//! degenerate pivots so the method cannot cycle. Every optimum is certified
//! afterwards against the original data: primal feasibility, dual
//! feasibility, complementary slackness and the duality gap must all hold to
//! [`CERTIFICATE_TOLERANCE`] (relative), otherwise the solve is reported as a
//! numerical failure rather than silently returned.

use crate::{Error, Result};

/// Relative tolerance on the optimality certificate.
pub const CERTIFICATE_TOLERANCE: f64 = 1e-8;

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-11;
const PHASE1_TOL: f64 = 1e-9;
const DEGENERATE_RUN: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(coeffs: Vec<f64>, relation: Relation, rhs: f64) -> Self {
        Self { coeffs, relation, rhs }
    }

    pub fn le(coeffs: Vec<f64>, rhs: f64) -> Self {
        Self::new(coeffs, Relation::Le, rhs)
    }

    pub fn ge(coeffs: Vec<f64>, rhs: f64) -> Self {
        Self::new(coeffs, Relation::Ge, rhs)
    }

    pub fn eq(coeffs: Vec<f64>, rhs: f64) -> Self {
        Self::new(coeffs, Relation::Eq, rhs)
    }
}

/// `minimize objective . x` subject to `constraints` and `x >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// One multiplier per constraint: `<= 0` for `Le` rows, `>= 0` for `Ge`.
    pub duals: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(self) -> Option<LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// Row-major `rows x (cols + 1)`; the last column is the right-hand side.
    a: Vec<f64>,
    /// Reduced costs, last entry is minus the objective value.
    cost: Vec<f64>,
    basis: Vec<usize>,
    /// Columns barred from entering (artificials in phase 2).
    barred: Vec<bool>,
}

impl Tableau {
    fn width(&self) -> usize {
        self.cols + 1
    }

    fn row(&self, r: usize) -> &[f64] {
        let w = self.width();
        &self.a[r * w..(r + 1) * w]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width();
        let inv = 1.0 / self.a[r * w + c];
        for v in &mut self.a[r * w..(r + 1) * w] {
            *v *= inv;
        }
        self.a[r * w + c] = 1.0;
        let pivot_row: Vec<f64> = self.row(r).to_vec();
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.a[i * w + c];
            if f != 0.0 {
                let row = &mut self.a[i * w..(i + 1) * w];
                for (v, &p) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
                row[c] = 0.0;
            }
        }
        let f = self.cost[c];
        if f != 0.0 {
            for (v, &p) in self.cost.iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
            self.cost[c] = 0.0;
        }
        self.basis[r] = c;
    }

    fn entering(&self, bland: bool) -> Option<usize> {
        let candidates = (0..self.cols).filter(|&j| !self.barred[j] && self.cost[j] < -COST_TOL);
        if bland {
            candidates.min()
        } else {
            candidates.min_by(|&i, &j| self.cost[i].total_cmp(&self.cost[j]))
        }
    }

    /// Minimum-ratio row; ties go to the larger pivot (or the smaller basic
    /// index under Bland's rule).
    fn leaving(&self, c: usize, bland: bool) -> Option<usize> {
        let w = self.width();
        let mut best: Option<(usize, f64)> = None;
        for r in 0..self.rows {
            let e = self.a[r * w + c];
            if e <= PIVOT_TOL {
                continue;
            }
            let ratio = self.a[r * w + self.cols].max(0.0) / e;
            best = match best {
                None => Some((r, ratio)),
                Some((br, bratio)) => {
                    let tie = (ratio - bratio).abs() <= 1e-12 * (1.0 + bratio);
                    let better = if tie {
                        if bland {
                            self.basis[r] < self.basis[br]
                        } else {
                            e > self.a[br * w + c]
                        }
                    } else {
                        ratio < bratio
                    };
                    if better {
                        Some((r, ratio))
                    } else {
                        Some((br, bratio))
                    }
                }
            };
        }
        best.map(|b| b.0)
    }

    /// Runs simplex iterations on the current cost row. Returns false when
    /// the objective is unbounded below.
    fn optimize(&mut self, iterations: &mut usize, limit: usize) -> Result<bool> {
        let mut degenerate = 0;
        loop {
            let bland = degenerate >= DEGENERATE_RUN;
            let Some(c) = self.entering(bland) else {
                return Ok(true);
            };
            let Some(r) = self.leaving(c, bland) else {
                return Ok(false);
            };
            let before = self.cost[self.cols];
            self.pivot(r, c);
            if (self.cost[self.cols] - before).abs() <= 1e-14 * (1.0 + before.abs()) {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            *iterations += 1;
            if *iterations > limit {
                return Err(Error::LpNumericalFailure(format!(
                    "no convergence after {limit} pivots"
                )));
            }
        }
    }
}

/// Solves the LP. `Infeasible` and `Unbounded` are clean verdicts; an
/// `Err(LpNumericalFailure)` means the solver could not certify its answer.
pub fn lp_solve(lp: &LinearProgram) -> Result<LpOutcome> {
    let n = lp.objective.len();
    let m = lp.constraints.len();
    if n == 0 {
        return Err(Error::InvalidParameter("LP without variables".into()));
    }
    for c in &lp.constraints {
        if c.coeffs.len() != n {
            return Err(Error::InvalidParameter(format!(
                "constraint has {} coefficients, expected {n}",
                c.coeffs.len()
            )));
        }
        if !c.rhs.is_finite() || c.coeffs.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("LP constraint"));
        }
    }
    if lp.objective.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("LP objective"));
    }

    // Normalise rows: non-negative right-hand side, unit largest entry.
    let mut scale = vec![1.0; m];
    let mut relations = Vec::with_capacity(m);
    for (i, c) in lp.constraints.iter().enumerate() {
        let size = c.coeffs.iter().fold(c.rhs.abs(), |acc, v| acc.max(v.abs()));
        let size = if size > 0.0 { size } else { 1.0 };
        let flip = c.rhs < 0.0;
        scale[i] = if flip { -1.0 / size } else { 1.0 / size };
        relations.push(match (c.relation, flip) {
            (Relation::Le, true) => Relation::Ge,
            (Relation::Ge, true) => Relation::Le,
            (r, _) => r,
        });
    }

    // Columns: structural, then one slack/surplus per inequality, then one
    // artificial per Ge/Eq row. `identity[i]` is the unit column of row i.
    let mut cols = n;
    let mut slack_col = vec![usize::MAX; m];
    for (i, rel) in relations.iter().enumerate() {
        if *rel != Relation::Eq {
            slack_col[i] = cols;
            cols += 1;
        }
    }
    let mut art_col = vec![usize::MAX; m];
    for (i, rel) in relations.iter().enumerate() {
        if *rel != Relation::Le {
            art_col[i] = cols;
            cols += 1;
        }
    }
    let w = cols + 1;
    let mut a = vec![0.0; m * w];
    let mut basis = vec![0; m];
    let mut identity = vec![0; m];
    for (i, c) in lp.constraints.iter().enumerate() {
        let row = &mut a[i * w..(i + 1) * w];
        for (v, &x) in row.iter_mut().zip(&c.coeffs) {
            *v = x * scale[i];
        }
        row[cols] = c.rhs * scale[i];
        match relations[i] {
            Relation::Le => {
                row[slack_col[i]] = 1.0;
                basis[i] = slack_col[i];
                identity[i] = slack_col[i];
            }
            Relation::Ge => {
                row[slack_col[i]] = -1.0;
                row[art_col[i]] = 1.0;
                basis[i] = art_col[i];
                identity[i] = art_col[i];
            }
            Relation::Eq => {
                row[art_col[i]] = 1.0;
                basis[i] = art_col[i];
                identity[i] = art_col[i];
            }
        }
    }
    let is_art: Vec<bool> = (0..cols).map(|j| art_col.contains(&j)).collect();
    let mut t = Tableau {
        rows: m,
        cols,
        a,
        cost: vec![0.0; w],
        basis,
        barred: vec![false; cols],
    };
    let limit = 50 * (m + cols) + 1000;
    let mut iterations = 0;

    // Phase 1: minimise the sum of artificials.
    if art_col.iter().any(|&c| c != usize::MAX) {
        for j in 0..cols {
            if is_art[j] {
                t.cost[j] = 1.0;
            }
        }
        for i in 0..m {
            if is_art[t.basis[i]] {
                let row = t.row(i).to_vec();
                t.cost.iter_mut().zip(&row).for_each(|(c, v)| *c -= v);
            }
        }
        if !t.optimize(&mut iterations, limit)? {
            return Err(Error::LpNumericalFailure("phase 1 reported unbounded".into()));
        }
        if -t.cost[cols] > PHASE1_TOL {
            return Ok(LpOutcome::Infeasible);
        }
        // Drive zero-level artificials out of the basis where possible; rows
        // where that fails are redundant and stay inert.
        for i in 0..m {
            if is_art[t.basis[i]] {
                let row = t.row(i);
                if let Some(c) = (0..cols)
                    .filter(|&j| !is_art[j])
                    .max_by(|&x, &y| row[x].abs().total_cmp(&row[y].abs()))
                    .filter(|&j| row[j].abs() > PIVOT_TOL)
                {
                    t.pivot(i, c);
                }
            }
        }
        t.barred = is_art.clone();
    }

    // Phase 2.
    t.cost = vec![0.0; w];
    t.cost[..n].copy_from_slice(&lp.objective);
    for i in 0..m {
        let cb = if t.basis[i] < n { lp.objective[t.basis[i]] } else { 0.0 };
        if cb != 0.0 {
            let row = t.row(i).to_vec();
            t.cost.iter_mut().zip(&row).for_each(|(c, v)| *c -= cb * v);
        }
    }
    for i in 0..m {
        t.cost[t.basis[i]] = 0.0;
    }
    if !t.optimize(&mut iterations, limit)? {
        return Ok(LpOutcome::Unbounded);
    }

    let mut x = vec![0.0; n];
    for i in 0..m {
        if t.basis[i] < n {
            x[t.basis[i]] = t.a[i * w + cols].max(0.0);
        }
    }
    let duals: Vec<f64> = (0..m).map(|i| -t.cost[identity[i]] * scale[i]).collect();
    let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    let solution = LpSolution { x, objective, duals, iterations };
    certify(lp, &solution)?;
    Ok(LpOutcome::Optimal(solution))
}

/// Checks the KKT conditions of a claimed optimum against the original LP.
pub fn certify(lp: &LinearProgram, s: &LpSolution) -> Result<()> {
    let tol = CERTIFICATE_TOLERANCE;
    let fail = |what: String| Err(Error::LpNumericalFailure(what));
    let xmax = s.x.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    if let Some(v) = s.x.iter().find(|&&v| v < -tol * xmax) {
        return fail(format!("negative variable {v}"));
    }
    let mut reduced = lp.objective.clone();
    let mut dual_obj = 0.0;
    for (i, (c, &y)) in lp.constraints.iter().zip(&s.duals).enumerate() {
        let activity: f64 = c.coeffs.iter().zip(&s.x).map(|(a, x)| a * x).sum();
        let size = c
            .coeffs
            .iter()
            .zip(&s.x)
            .fold(1.0 + c.rhs.abs(), |acc, (a, x)| acc.max((a * x).abs()));
        let resid = activity - c.rhs;
        let violated = match c.relation {
            Relation::Le => resid > tol * size,
            Relation::Ge => resid < -tol * size,
            Relation::Eq => resid.abs() > tol * size,
        };
        if violated {
            return fail(format!("row {i} violated by {resid}"));
        }
        let ymax = 1.0 + y.abs();
        let wrong_sign = match c.relation {
            Relation::Le => y > tol * ymax,
            Relation::Ge => y < -tol * ymax,
            Relation::Eq => false,
        };
        if wrong_sign {
            return fail(format!("row {i} multiplier {y} has the wrong sign"));
        }
        if (y * resid).abs() > tol * size * ymax {
            return fail(format!("row {i} complementary slackness {}", y * resid));
        }
        for (r, a) in reduced.iter_mut().zip(&c.coeffs) {
            *r -= y * a;
        }
        dual_obj += y * c.rhs;
    }
    let cmax = lp.objective.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    let ymax = s.duals.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    let dscale = cmax.max(ymax);
    for (j, (&r, &x)) in reduced.iter().zip(&s.x).enumerate() {
        if r < -tol * dscale {
            return fail(format!("reduced cost {r} of variable {j} is negative"));
        }
        if (r * x).abs() > tol * dscale * xmax {
            return fail(format!("variable {j} complementary slackness {}", r * x));
        }
    }
    let gap = (s.objective - dual_obj).abs();
    if gap > tol * (1.0 + s.objective.abs()) * dscale.max(xmax) {
        return fail(format!("duality gap {gap}"));
    }
    Ok(())
}
