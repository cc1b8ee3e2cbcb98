//! Degree-distribution design by EXIT-chart linear programming.
//!
//! The relay's code `X1(s)` carries the bin index and is designed alone at
//! `snr3`: its variable distribution maximises `sum_i lambda_i / i` (hence
//! the rate) subject to an open chart. The source code is two-level: `k1`
//! checks `h1` decodable at the relay (`snr1`) plus `k2` bin-index checks
//! `h2` which, together with `h1`, must be decodable at the destination
//! (`snr2`). For a fixed rate `r` and edge share `mu` of `h1` all
//! constraints are linear in `(lambda1, lambda2')`, so the best `r` is found
//! by bisection over feasibility LPs with a scan over `mu` inside.
//!
//! By default the two-level LP carries an edge-coupling equality that ties
//! `mu` to the number of `h2` edges implied by `k2 = n r0*`. Without it the
//! optimiser can return a `mu` that no finite code with that many bin-index
//! checks realises.

mod file;
mod lazy;
mod pipeline;

pub use file::{DesignFile, Metadata, DESIGN_FORMAT};
pub(crate) use file::content_hash;
pub use pipeline::{run_design, select_check_distribution, BackoffGap, Ceilings, DesignConfig, DesignOutcome};

use crate::channel::{bi_awgn_capacity, DEFAULT_CAPACITY_POINTS};
use crate::degree::DegreeDistribution;
use crate::exit::{
    openness_gap, CheckOutputTable, ExitChartSet, ProbabilityGrid, MAX_CHECK_DEGREE,
    MAX_VAR_DEGREE,
};
use crate::exit::initial_error_probability;
use crate::lp::Constraint;
use crate::{Error, Result};
use lazy::LazyProgram;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Default number of uniformly spaced `mu` values scanned per rate.
pub const DEFAULT_MU_GRID: usize = 21;
/// Default tolerance of the bisection on `r`.
pub const DEFAULT_R_TOL: f64 = 1e-4;

/// Relative excess of variables over checks required of the extra-check
/// subgraph, so that its rows are independent at finite length.
pub const H2_NODE_EXCESS: f64 = 0.05;
/// Elastic violation below which a feasibility LP counts as feasible.
const FEASIBILITY_TOL: f64 = 1e-10;
/// Openness rows are tightened by this much so that LP witnesses pass the
/// exact `is_open` test despite solver round-off.
const ROW_SLACK: f64 = 1e-9;
const GOLDEN_STEPS: usize = 30;

/// `1 - (sum_i rho_i / i) / (sum_i lambda_i / i)`.
pub fn design_rate(lambda: &DegreeDistribution, rho: &DegreeDistribution) -> f64 {
    1.0 - rho.inverse_mean() / lambda.inverse_mean()
}

/// Atomwise `mu * d1 + (1 - mu) * d2`.
pub fn combine_distributions(
    d1: &DegreeDistribution,
    d2: &DegreeDistribution,
    mu: f64,
) -> Result<DegreeDistribution> {
    DegreeDistribution::mix(d1, d2, mu)
}

/// Inputs of a design run: the three SNRs, the fixed check distributions
/// and the chart/LP knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSpec {
    pub snr1: f64,
    pub snr2: f64,
    pub snr3: f64,
    pub rho1: DegreeDistribution,
    pub rho2prime: DegreeDistribution,
    pub rho3: DegreeDistribution,
    pub max_var_degree: usize,
    pub margin: f64,
    pub grid_points: usize,
    pub grid_span: f64,
    /// Enforce the edge-coupling equality between `mu` and `r0*`.
    pub coupled: bool,
}

impl DesignSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, snr) in [("snr1", self.snr1), ("snr2", self.snr2), ("snr3", self.snr3)] {
            if !(snr >= 0.0 && snr.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} = {snr}")));
            }
        }
        if self.snr1 < self.snr2 {
            return Err(Error::InvalidParameter(format!(
                "relay SNR {} below destination SNR {}",
                self.snr1, self.snr2
            )));
        }
        if !(2..=MAX_VAR_DEGREE).contains(&self.max_var_degree) {
            return Err(Error::DegreeOutOfRange { degree: self.max_var_degree, max: MAX_VAR_DEGREE });
        }
        for rho in [&self.rho1, &self.rho2prime, &self.rho3] {
            rho.ensure_max_degree(MAX_CHECK_DEGREE)?;
        }
        if !(0.0..0.5).contains(&self.margin) {
            return Err(Error::InvalidParameter(format!("margin {}", self.margin)));
        }
        if self.grid_points == 0 || !(self.grid_span > 0.0 && self.grid_span < 1.0) {
            return Err(Error::InvalidParameter("bad grid descriptor".into()));
        }
        Ok(())
    }

    /// Design grid for a channel at `snr`.
    pub fn grid(&self, snr: f64) -> Result<ProbabilityGrid> {
        ProbabilityGrid::logarithmic(initial_error_probability(snr), self.grid_points, self.grid_span)
    }

    /// Candidate variable degrees `2..=max_var_degree`.
    pub fn var_degrees(&self) -> Vec<usize> {
        (2..=self.max_var_degree).collect()
    }
}

/// A single-code design: variable distribution, its check distribution and
/// the resulting rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleCodeDesign {
    pub lambda: DegreeDistribution,
    pub rho: DegreeDistribution,
    pub rate: f64,
}

/// The complete design: relay code `(lambda3, rho3)`, the `h1` part
/// `(lambda1, rho1)`, the bin-index part `(lambda2', rho2')` and their
/// combination `(lambda2, rho2)` with edge share `mu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoLevelDesign {
    pub lambda1: DegreeDistribution,
    pub lambda2prime: DegreeDistribution,
    pub lambda2: DegreeDistribution,
    pub lambda3: DegreeDistribution,
    pub rho1: DegreeDistribution,
    pub rho2prime: DegreeDistribution,
    pub rho2: DegreeDistribution,
    pub rho3: DegreeDistribution,
    pub mu: f64,
    pub r: f64,
    pub r0_star: f64,
}

impl TwoLevelDesign {
    /// Rate of the `h1` code alone.
    pub fn relay_code_rate(&self) -> f64 {
        design_rate(&self.lambda1, &self.rho1)
    }

    /// Rate bound through the destination: combined code rate plus `r0*`.
    pub fn destination_rate(&self) -> f64 {
        design_rate(&self.lambda2, &self.rho2) + self.r0_star
    }
}

/// Outcome of one feasibility LP.
#[derive(Debug, Clone, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    /// Smallest total relaxation of the rate and coupling rows that makes
    /// the system feasible; infinite when openness alone is impossible.
    pub violation: f64,
    pub lambda1: Option<DegreeDistribution>,
    pub lambda2prime: Option<DegreeDistribution>,
}

impl Feasibility {
    fn impossible() -> Self {
        Self { feasible: false, violation: f64::INFINITY, lambda1: None, lambda2prime: None }
    }
}

/// Smallest relative openness gap `1 - f(p)/p` of each design component on
/// fresh charts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpennessReport {
    pub relay_gap: f64,
    pub source_gap: f64,
    pub destination_gap: f64,
    pub required: f64,
}

impl OpennessReport {
    pub fn is_open(&self) -> bool {
        self.relay_gap >= self.required
            && self.source_gap >= self.required
            && self.destination_gap >= self.required
    }
}

/// One openness row per positive grid point:
/// `sum_blocks weight * sum_k x[offset + k] f_{d_k}(p) / p (+ t) <= rhs`.
fn openness_rows(
    charts: &ExitChartSet,
    degrees: &[usize],
    blocks: &[(usize, f64)],
    nvars: usize,
    margin_col: Option<usize>,
    rhs: f64,
) -> Result<Vec<Constraint>> {
    let columns: Vec<&[f64]> = degrees
        .iter()
        .map(|&d| charts.chart(d).ok_or(Error::MissingElementaryChart(d)))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (g, &p) in charts.grid.points().iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        let mut coeffs = vec![0.0; nvars];
        for &(offset, weight) in blocks {
            if weight == 0.0 {
                continue;
            }
            for (k, col) in columns.iter().enumerate() {
                coeffs[offset + k] += weight * col[g] / p;
            }
        }
        if let Some(t) = margin_col {
            coeffs[t] = 1.0;
        }
        rows.push(Constraint::le(coeffs, rhs));
    }
    Ok(rows)
}

fn unit_row(nvars: usize, range: std::ops::Range<usize>, value: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut coeffs = vec![0.0; nvars];
    for j in range.clone() {
        coeffs[j] = value(j - range.start);
    }
    coeffs
}

fn distribution_from(degrees: &[usize], x: &[f64]) -> Result<DegreeDistribution> {
    DegreeDistribution::from_weights(degrees.iter().copied().zip(x.iter().copied()), 0.0)
}

/// Rate-maximising variable distribution for the chart set's check
/// distribution, over the degrees present in the set.
pub fn optimize_single_code(charts: &ExitChartSet, margin: f64) -> Result<SingleCodeDesign> {
    let degrees: Vec<usize> = charts.degrees().collect();
    let n = degrees.len();
    let program = LazyProgram {
        objective: degrees.iter().map(|&d| -1.0 / d as f64).collect(),
        base: vec![Constraint::eq(vec![1.0; n], 1.0)],
        lazy: openness_rows(charts, &degrees, &[(0, 1.0)], n, None, 1.0 - margin - ROW_SLACK)?,
    };
    let Some(solution) = program.solve()? else {
        return Err(Error::Infeasible(format!(
            "no variable distribution over degrees {}..={} is open at snr {:.6} with check \
             distribution {} and margin {margin}",
            degrees[0],
            degrees[n - 1],
            charts.snr,
            charts.check_dist
        )));
    };
    let lambda = distribution_from(&degrees, &solution.x)?;
    let rate = design_rate(&lambda, &charts.check_dist);
    Ok(SingleCodeDesign { lambda, rho: charts.check_dist.clone(), rate })
}

fn uniform_grid(count: usize) -> Vec<f64> {
    let count = count.max(2);
    (0..count).map(|k| k as f64 / (count - 1) as f64).collect()
}

/// Golden-section minimisation of `score` on `[a, b]`, stopping early once
/// `done` accepts a value.
fn golden_minimize<T>(
    mut a: f64,
    mut b: f64,
    mut score: impl FnMut(f64) -> Result<(f64, T)>,
    done: impl Fn(f64) -> bool,
) -> Result<Option<(f64, f64, T)>> {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut best: Option<(f64, f64, T)> = None;
    let keep = |mu: f64, s: f64, t: T, best: &mut Option<(f64, f64, T)>| {
        if best.as_ref().is_none_or(|b| s < b.1) {
            *best = Some((mu, s, t));
        }
    };
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let (s1, t1) = score(x1)?;
    let mut f1 = s1;
    keep(x1, s1, t1, &mut best);
    let (s2, t2) = score(x2)?;
    let mut f2 = s2;
    keep(x2, s2, t2, &mut best);
    for _ in 0..GOLDEN_STEPS {
        if best.as_ref().is_some_and(|b| done(b.1)) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            let (s, t) = score(x1)?;
            f1 = s;
            keep(x1, s, t, &mut best);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            let (s, t) = score(x2)?;
            f2 = s;
            keep(x2, s, t, &mut best);
        }
    }
    Ok(best)
}

/// Holds a design spec together with lazily computed chart sets.
pub struct Designer {
    spec: DesignSpec,
    relay: OnceLock<ExitChartSet>,
    source: OnceLock<ExitChartSet>,
    dest_table: OnceLock<CheckOutputTable>,
    dest: Mutex<HashMap<Vec<(usize, u64)>, Arc<ExitChartSet>>>,
}

impl Designer {
    pub fn new(spec: DesignSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            spec,
            relay: OnceLock::new(),
            source: OnceLock::new(),
            dest_table: OnceLock::new(),
            dest: Mutex::new(HashMap::new()),
        })
    }

    pub fn spec(&self) -> &DesignSpec {
        &self.spec
    }

    /// Installs chart sets computed elsewhere (for instance during check
    /// selection). They must match the spec.
    pub fn seed_charts(&self, relay: Option<ExitChartSet>, source: Option<ExitChartSet>) -> Result<()> {
        let degrees = self.spec.var_degrees();
        let grid3 = self.spec.grid(self.spec.snr3)?;
        let grid1 = self.spec.grid(self.spec.snr1)?;
        let matches = |set: &ExitChartSet, snr: f64, rho: &DegreeDistribution, grid: &ProbabilityGrid| {
            set.snr == snr
                && &set.check_dist == rho
                && &set.grid == grid
                && set.degrees().eq(degrees.iter().copied())
        };
        if let Some(set) = relay {
            if !matches(&set, self.spec.snr3, &self.spec.rho3, &grid3) {
                return Err(Error::ConfigMismatch("relay charts do not match the spec".into()));
            }
            let _ = self.relay.set(set);
        }
        if let Some(set) = source {
            if !matches(&set, self.spec.snr1, &self.spec.rho1, &grid1) {
                return Err(Error::ConfigMismatch("source charts do not match the spec".into()));
            }
            let _ = self.source.set(set);
        }
        Ok(())
    }

    fn cached<'a>(
        cell: &'a OnceLock<ExitChartSet>,
        make: impl FnOnce() -> Result<ExitChartSet>,
    ) -> Result<&'a ExitChartSet> {
        if let Some(set) = cell.get() {
            return Ok(set);
        }
        let set = make()?;
        let _ = cell.set(set);
        Ok(cell.get().expect("just set"))
    }

    /// Charts at `snr3` for the relay code.
    pub fn relay_charts(&self) -> Result<&ExitChartSet> {
        Self::cached(&self.relay, || {
            ExitChartSet::compute(
                self.spec.snr3,
                &self.spec.rho3,
                &self.spec.grid(self.spec.snr3)?,
                &self.spec.var_degrees(),
            )
        })
    }

    /// Charts at `snr1` for the `h1` code.
    pub fn source_charts(&self) -> Result<&ExitChartSet> {
        Self::cached(&self.source, || {
            ExitChartSet::compute(
                self.spec.snr1,
                &self.spec.rho1,
                &self.spec.grid(self.spec.snr1)?,
                &self.spec.var_degrees(),
            )
        })
    }

    /// Charts at `snr2` for the combined check distribution at `mu`.
    pub fn destination_charts(&self, mu: f64) -> Result<Arc<ExitChartSet>> {
        let rho2 = combine_distributions(&self.spec.rho1, &self.spec.rho2prime, mu)?;
        let key: Vec<(usize, u64)> = rho2.atoms().iter().map(|&(d, f)| (d, f.to_bits())).collect();
        if let Some(set) = self.dest.lock().expect("chart cache poisoned").get(&key) {
            return Ok(Arc::clone(set));
        }
        let table = match self.dest_table.get() {
            Some(t) => t,
            None => {
                let mut degrees: Vec<usize> =
                    self.spec.rho1.degrees().chain(self.spec.rho2prime.degrees()).collect();
                degrees.sort_unstable();
                degrees.dedup();
                let t = CheckOutputTable::new(&self.spec.grid(self.spec.snr2)?, &degrees)?;
                let _ = self.dest_table.set(t);
                self.dest_table.get().expect("just set")
            }
        };
        let set = Arc::new(ExitChartSet::from_table(
            self.spec.snr2,
            table,
            &rho2,
            &self.spec.var_degrees(),
        )?);
        self.dest.lock().expect("chart cache poisoned").insert(key, Arc::clone(&set));
        Ok(set)
    }

    /// Rate-maximising relay code at `snr3`.
    pub fn optimize_single(&self) -> Result<SingleCodeDesign> {
        let design = optimize_single_code(self.relay_charts()?, self.spec.margin)?;
        if design.rate <= 0.0 {
            return Err(Error::Infeasible(format!(
                "best open relay code has non-positive rate {:.6}",
                design.rate
            )));
        }
        let ceiling = bi_awgn_capacity(self.spec.snr3, DEFAULT_CAPACITY_POINTS);
        if design.rate > ceiling {
            return Err(Error::LpNumericalFailure(format!(
                "relay design rate {} exceeds the binary-input capacity {ceiling}",
                design.rate
            )));
        }
        Ok(design)
    }

    /// Floor on `sum lambda2'_i / i`: the extra checks must touch more
    /// variables than there are extra checks, or they cannot be independent.
    fn h2_node_floor(&self) -> f64 {
        (1.0 + H2_NODE_EXCESS) * self.spec.rho2prime.inverse_mean()
    }

    fn coupling_target(&self, mu: f64, r0_star: f64) -> f64 {
        (1.0 - mu) * self.spec.rho2prime.inverse_mean() / (mu * r0_star)
    }

    /// Whether some `(lambda1, lambda2')` achieves rate `r` with edge share
    /// `mu`, given the bin-index rate `r0_star`.
    pub fn feasibility_check(&self, r: f64, mu: f64, r0_star: f64) -> Result<Feasibility> {
        if !(0.0..=1.0).contains(&mu) || !(r0_star >= 0.0) || !(r >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "feasibility check needs r >= 0, mu in [0, 1], r0* >= 0 (got {r}, {mu}, {r0_star})"
            )));
        }
        if r >= 1.0 {
            return Ok(Feasibility::impossible());
        }
        let coupled = self.spec.coupled;
        if coupled && ((r0_star > 0.0 && (mu == 0.0 || mu == 1.0)) || (r0_star == 0.0 && mu != 1.0)) {
            return Ok(Feasibility::impossible());
        }
        let degrees = self.spec.var_degrees();
        let d = degrees.len();
        let nvars = 2 * d + 1;
        let s = 2 * d;
        let inv = |k: usize| 1.0 / degrees[k] as f64;
        let c1 = self.spec.rho1.inverse_mean();
        let rho2 = combine_distributions(&self.spec.rho1, &self.spec.rho2prime, mu)?;
        let c2 = rho2.inverse_mean();

        let mut base = vec![
            Constraint::eq(unit_row(nvars, 0..d, |_| 1.0), 1.0),
            Constraint::eq(unit_row(nvars, d..2 * d, |_| 1.0), 1.0),
        ];
        let mut floor1 = unit_row(nvars, 0..d, inv);
        floor1[s] = 1.0;
        base.push(Constraint::ge(floor1, c1 / (1.0 - r)));
        let mut floor2 = vec![0.0; nvars];
        for k in 0..d {
            floor2[k] = mu * inv(k);
            floor2[d + k] = (1.0 - mu) * inv(k);
        }
        floor2[s] = 1.0;
        base.push(Constraint::ge(floor2, c2 / (1.0 - r + r0_star)));
        if coupled && r0_star > 0.0 {
            let target = self.coupling_target(mu, r0_star);
            let mut up = unit_row(nvars, 0..d, inv);
            up[s] = 1.0;
            base.push(Constraint::ge(up, target));
            let mut down = unit_row(nvars, 0..d, inv);
            down[s] = -1.0;
            base.push(Constraint::le(down, target));
            base.push(Constraint::le(
                unit_row(nvars, d..2 * d, inv),
                self.spec.rho2prime.inverse_mean() / r0_star,
            ));
        }
        if r0_star > 0.0 {
            let mut nodes = unit_row(nvars, d..2 * d, inv);
            nodes[s] = 1.0;
            base.push(Constraint::ge(nodes, self.h2_node_floor()));
        }
        let rhs = 1.0 - self.spec.margin - ROW_SLACK;
        let dest = self.destination_charts(mu)?;
        let mut lazy = openness_rows(self.source_charts()?, &degrees, &[(0, 1.0)], nvars, None, rhs)?;
        lazy.extend(openness_rows(&dest, &degrees, &[(0, mu), (d, 1.0 - mu)], nvars, None, rhs)?);
        let mut objective = vec![0.0; nvars];
        objective[s] = 1.0;
        let program = LazyProgram { objective, base, lazy };
        let Some(solution) = program.solve()? else {
            return Ok(Feasibility::impossible());
        };
        let violation = solution.objective.max(0.0);
        Ok(Feasibility {
            feasible: violation <= FEASIBILITY_TOL,
            violation,
            lambda1: Some(distribution_from(&degrees, &solution.x[..d])?),
            lambda2prime: Some(distribution_from(&degrees, &solution.x[d..2 * d])?),
        })
    }

    /// Scans `mu` (trying `hint` first) and refines around the least
    /// violated grid value. Returns the feasible `mu` and its witness.
    fn probe_rate(
        &self,
        r: f64,
        r0_star: f64,
        mu_grid: usize,
        hint: Option<f64>,
    ) -> Result<Option<(f64, Feasibility)>> {
        if let Some(mu) = hint {
            let f = self.feasibility_check(r, mu, r0_star)?;
            if f.feasible {
                return Ok(Some((mu, f)));
            }
        }
        let grid = uniform_grid(mu_grid);
        let mut best: Option<(usize, f64)> = None;
        for (k, &mu) in grid.iter().enumerate() {
            let f = self.feasibility_check(r, mu, r0_star)?;
            if f.feasible {
                return Ok(Some((mu, f)));
            }
            if best.is_none_or(|b| f.violation < b.1) {
                best = Some((k, f.violation));
            }
        }
        let Some((k, v)) = best else { return Ok(None) };
        if !v.is_finite() {
            return Ok(None);
        }
        let lo = grid[k.saturating_sub(1)];
        let hi = grid[(k + 1).min(grid.len() - 1)];
        let refined = golden_minimize(
            lo,
            hi,
            |mu| {
                let f = self.feasibility_check(r, mu, r0_star)?;
                Ok((f.violation, f))
            },
            |v| v <= FEASIBILITY_TOL,
        )?;
        Ok(refined.filter(|b| b.2.feasible).map(|(mu, _, f)| (mu, f)))
    }

    fn assemble(
        &self,
        relay: &SingleCodeDesign,
        mu: f64,
        lambda1: DegreeDistribution,
        lambda2prime: DegreeDistribution,
    ) -> Result<TwoLevelDesign> {
        let lambda2 = combine_distributions(&lambda1, &lambda2prime, mu)?;
        let rho2 = combine_distributions(&self.spec.rho1, &self.spec.rho2prime, mu)?;
        let r0_star = relay.rate;
        let r = design_rate(&lambda1, &self.spec.rho1)
            .min(design_rate(&lambda2, &rho2) + r0_star);
        let c1 = bi_awgn_capacity(self.spec.snr1, DEFAULT_CAPACITY_POINTS);
        let c2 = bi_awgn_capacity(self.spec.snr2, DEFAULT_CAPACITY_POINTS);
        if r > c1 || r - r0_star > c2 {
            return Err(Error::LpNumericalFailure(format!(
                "design rate {r} exceeds the binary-input ceilings ({c1}, {c2} + {r0_star})"
            )));
        }
        Ok(TwoLevelDesign {
            lambda1,
            lambda2prime,
            lambda2,
            lambda3: relay.lambda.clone(),
            rho1: self.spec.rho1.clone(),
            rho2prime: self.spec.rho2prime.clone(),
            rho2,
            rho3: relay.rho.clone(),
            mu,
            r,
            r0_star,
        })
    }

    /// Some design of rate exactly `r` for the given relay design, trying
    /// `mu_hint` first.
    pub fn design_at_rate(
        &self,
        relay: &SingleCodeDesign,
        r: f64,
        mu_grid: usize,
        mu_hint: Option<f64>,
    ) -> Result<Option<TwoLevelDesign>> {
        let Some((mu, f)) = self.probe_rate(r, relay.rate, mu_grid, mu_hint)? else {
            return Ok(None);
        };
        self.assemble(relay, mu, f.lambda1.expect("witness"), f.lambda2prime.expect("witness"))
            .map(Some)
    }

    /// Largest feasible `r` (within `r_tol`) for the given relay design.
    pub fn optimize_two_level(
        &self,
        relay: &SingleCodeDesign,
        mu_grid: usize,
        r_tol: f64,
    ) -> Result<TwoLevelDesign> {
        if !(r_tol > 0.0) {
            return Err(Error::InvalidParameter(format!("r tolerance {r_tol}")));
        }
        let r0 = relay.rate;
        let c1 = bi_awgn_capacity(self.spec.snr1, DEFAULT_CAPACITY_POINTS);
        let c2 = bi_awgn_capacity(self.spec.snr2, DEFAULT_CAPACITY_POINTS);
        let Some(mut witness) = self.probe_rate(0.0, r0, mu_grid, None)? else {
            return Err(Error::Infeasible(format!(
                "no pair of variable distributions is open at both snr1 = {:.6} and snr2 = {:.6} \
                 (check distributions {} / {}, r0* = {r0:.6})",
                self.spec.snr1, self.spec.snr2, self.spec.rho1, self.spec.rho2prime
            )));
        };
        let (mut lo, mut hi) = (0.0, c1.min(c2 + r0));
        while hi - lo > r_tol {
            let mid = 0.5 * (lo + hi);
            match self.probe_rate(mid, r0, mu_grid, Some(witness.0))? {
                Some(w) => {
                    lo = mid;
                    witness = w;
                }
                None => hi = mid,
            }
        }
        let (mu, f) = witness;
        self.assemble(relay, mu, f.lambda1.expect("witness"), f.lambda2prime.expect("witness"))
    }

    /// Confirms that each rate `fraction * design.r` is feasible too.
    pub fn check_downward_closure(
        &self,
        design: &TwoLevelDesign,
        fractions: &[f64],
        mu_grid: usize,
    ) -> Result<Vec<(f64, bool)>> {
        fractions
            .iter()
            .map(|&frac| {
                let r = frac * design.r;
                Ok((r, self.probe_rate(r, design.r0_star, mu_grid, Some(design.mu))?.is_some()))
            })
            .collect()
    }

    /// Openness gaps of all three components on freshly computed charts
    /// over a grid with twice the resolution of the design grid, against
    /// half the design margin.
    pub fn verify_openness(&self, design: &TwoLevelDesign) -> Result<OpennessReport> {
        let fine = |snr: f64| {
            ProbabilityGrid::logarithmic(
                initial_error_probability(snr),
                2 * self.spec.grid_points - 1,
                self.spec.grid_span,
            )
        };
        let gap = |snr: f64, lambda: &DegreeDistribution, rho: &DegreeDistribution| -> Result<f64> {
            let grid = fine(snr)?;
            let degrees: Vec<usize> = lambda.degrees().collect();
            let set = ExitChartSet::compute(snr, rho, &grid, &degrees)?;
            Ok(openness_gap(&crate::exit::combined_chart(lambda, &set)?, &grid))
        };
        Ok(OpennessReport {
            relay_gap: gap(self.spec.snr3, &design.lambda3, &design.rho3)?,
            source_gap: gap(self.spec.snr1, &design.lambda1, &design.rho1)?,
            destination_gap: gap(self.spec.snr2, &design.lambda2, &design.rho2)?,
            required: 0.5 * self.spec.margin,
        })
    }
}
