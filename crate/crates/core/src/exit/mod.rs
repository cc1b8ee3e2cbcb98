//! Probability-of-error EXIT charts.
//!
//! An elementary chart `f_i(p)` maps the error probability `p` of incoming
//! variable-to-check messages to the error probability of the messages a
//! degree-`i` variable node sends after one full iteration, at a fixed
//! channel SNR and check distribution. The chart of an irregular ensemble is
//! the edge-weighted combination `sum_i lambda_i f_i(p)`, and decoding
//! succeeds asymptotically when that chart lies strictly below the diagonal.
//!
//! The channel convention is unit-energy antipodal signalling with
//! `snr = A^2 / sigma^2`, so the channel LLR is `N(2 snr, 4 snr)`.

pub mod density;

use crate::degree::DegreeDistribution;
use crate::special::q_function;
use crate::{Error, Result};
use density::{check_output_pmfs, mix_pmfs, VariableKernel};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Default multiplicative openness margin.
pub const DEFAULT_MARGIN: f64 = 1e-4;
/// Default number of positive grid points.
pub const DEFAULT_GRID_POINTS: usize = 200;
/// Default ratio between the smallest positive grid point and `p0`.
pub const DEFAULT_GRID_SPAN: f64 = 1e-6;
/// Largest variable degree the chart engine accepts.
pub const MAX_VAR_DEGREE: usize = 100;
/// Largest check degree the chart engine accepts.
pub const MAX_CHECK_DEGREE: usize = 64;

/// Hard-decision error probability `Q(sqrt(snr))` of the channel.
pub fn initial_error_probability(snr: f64) -> f64 {
    if snr <= 0.0 {
        0.5
    } else {
        q_function(snr.sqrt())
    }
}

/// Ascending error probabilities on which charts are sampled; the last point
/// is the channel's own error probability `p0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct ProbabilityGrid {
    points: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridRepr {
    points: Vec<f64>,
    p0: f64,
}

impl TryFrom<GridRepr> for ProbabilityGrid {
    type Error = Error;

    fn try_from(r: GridRepr) -> Result<Self> {
        let grid = Self::new(r.points)?;
        if grid.p0() != r.p0 {
            return Err(Error::InvalidParameter("grid p0 does not match last point".into()));
        }
        Ok(grid)
    }
}

impl From<ProbabilityGrid> for GridRepr {
    fn from(g: ProbabilityGrid) -> Self {
        let p0 = g.p0();
        GridRepr { points: g.points, p0 }
    }
}

impl ProbabilityGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("empty probability grid".into()));
        }
        if !(points[0] >= 0.0) || !(points[points.len() - 1] <= 0.5) {
            return Err(Error::InvalidParameter("grid points must lie in [0, 0.5]".into()));
        }
        if points.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter("grid must be strictly ascending".into()));
        }
        Ok(Self { points })
    }

    /// `p = 0` followed by `count` log-spaced points on `[span * p0, p0]`.
    pub fn logarithmic(p0: f64, count: usize, span: f64) -> Result<Self> {
        if !(p0 >= 0.0 && p0 <= 0.5) || count == 0 || !(span > 0.0 && span < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "bad logarithmic grid (p0={p0}, count={count}, span={span})"
            )));
        }
        if p0 == 0.0 {
            return Self::new(vec![0.0]);
        }
        let mut points = vec![0.0];
        if count == 1 {
            points.push(p0);
        } else {
            let ln_lo = (p0 * span).ln();
            let step = -span.ln() / (count - 1) as f64;
            for k in 0..count - 1 {
                points.push((ln_lo + step * k as f64).exp());
            }
            points.push(p0);
        }
        Self::new(points)
    }

    /// Default grid for a channel at `snr`.
    pub fn for_snr(snr: f64) -> Self {
        Self::logarithmic(initial_error_probability(snr), DEFAULT_GRID_POINTS, DEFAULT_GRID_SPAN)
            .expect("default grid parameters are valid")
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn p0(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Check-node outputs on every grid point for every check degree up to a
/// bound. Charts for any check distribution over those degrees can be built
/// from one table.
pub struct CheckOutputTable {
    grid: ProbabilityGrid,
    check_degrees: Vec<usize>,
    /// `pmfs[point][k]` is the output density for `check_degrees[k]`.
    pmfs: Vec<Vec<Vec<f64>>>,
}

impl CheckOutputTable {
    pub fn new(grid: &ProbabilityGrid, check_degrees: &[usize]) -> Result<Self> {
        let mut degrees = check_degrees.to_vec();
        degrees.sort_unstable();
        degrees.dedup();
        for &d in &degrees {
            if !(2..=MAX_CHECK_DEGREE).contains(&d) {
                return Err(Error::DegreeOutOfRange { degree: d, max: MAX_CHECK_DEGREE });
            }
        }
        let pmfs = grid
            .points()
            .par_iter()
            .map(|&p| {
                if p == 0.0 {
                    Vec::new()
                } else {
                    check_output_pmfs(p, &degrees)
                }
            })
            .collect();
        Ok(Self { grid: grid.clone(), check_degrees: degrees, pmfs })
    }

    pub fn for_distribution(grid: &ProbabilityGrid, check_dist: &DegreeDistribution) -> Result<Self> {
        Self::new(grid, &check_dist.degrees().collect::<Vec<_>>())
    }

    pub fn grid(&self) -> &ProbabilityGrid {
        &self.grid
    }

    fn weights(&self, check_dist: &DegreeDistribution) -> Result<Vec<f64>> {
        for d in check_dist.degrees() {
            if self.check_degrees.binary_search(&d).is_err() {
                return Err(Error::InvalidParameter(format!(
                    "check degree {d} not tabulated"
                )));
            }
        }
        Ok(self.check_degrees.iter().map(|&d| check_dist.fraction(d)).collect())
    }
}

fn validate_var_degrees(var_degrees: &[usize]) -> Result<Vec<usize>> {
    let mut degrees = var_degrees.to_vec();
    degrees.sort_unstable();
    degrees.dedup();
    if degrees.is_empty() {
        return Err(Error::InvalidParameter("no variable degrees requested".into()));
    }
    for &d in &degrees {
        if !(2..=MAX_VAR_DEGREE).contains(&d) {
            return Err(Error::DegreeOutOfRange { degree: d, max: MAX_VAR_DEGREE });
        }
    }
    Ok(degrees)
}

/// Elementary charts at one SNR and check distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitChartSet {
    pub snr: f64,
    pub check_dist: DegreeDistribution,
    pub grid: ProbabilityGrid,
    pub charts: BTreeMap<usize, Vec<f64>>,
}

impl ExitChartSet {
    /// Charts for the given variable degrees.
    pub fn compute(
        snr: f64,
        check_dist: &DegreeDistribution,
        grid: &ProbabilityGrid,
        var_degrees: &[usize],
    ) -> Result<Self> {
        let table = CheckOutputTable::for_distribution(grid, check_dist)?;
        Self::from_table(snr, &table, check_dist, var_degrees)
    }

    /// Charts for every variable degree in `2..=max_var_degree`.
    pub fn compute_range(
        snr: f64,
        check_dist: &DegreeDistribution,
        grid: &ProbabilityGrid,
        max_var_degree: usize,
    ) -> Result<Self> {
        let degrees: Vec<usize> = (2..=max_var_degree).collect();
        Self::compute(snr, check_dist, grid, &degrees)
    }

    /// Charts from precomputed check outputs.
    pub fn from_table(
        snr: f64,
        table: &CheckOutputTable,
        check_dist: &DegreeDistribution,
        var_degrees: &[usize],
    ) -> Result<Self> {
        if !(snr >= 0.0 && snr.is_finite()) {
            return Err(Error::InvalidParameter(format!("snr {snr}")));
        }
        let degrees = validate_var_degrees(var_degrees)?;
        let weights = table.weights(check_dist)?;
        let kernel = VariableKernel::new(snr, *degrees.last().unwrap());
        let columns: Vec<Vec<f64>> = table
            .pmfs
            .par_iter()
            .map(|pmfs| {
                if pmfs.is_empty() {
                    vec![0.0; degrees.len()]
                } else {
                    kernel.error_probabilities(&mix_pmfs(pmfs, &weights), &degrees)
                }
            })
            .collect();
        let charts = degrees
            .iter()
            .enumerate()
            .map(|(j, &d)| (d, columns.iter().map(|c| c[j]).collect()))
            .collect();
        Ok(Self {
            snr,
            check_dist: check_dist.clone(),
            grid: table.grid.clone(),
            charts,
        })
    }

    pub fn chart(&self, var_degree: usize) -> Option<&[f64]> {
        self.charts.get(&var_degree).map(Vec::as_slice)
    }

    pub fn degrees(&self) -> impl Iterator<Item = usize> + '_ {
        self.charts.keys().copied()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let set: Self = serde_json::from_str(text)?;
        if set.charts.values().any(|c| c.len() != set.grid.len()) {
            return Err(Error::InvalidParameter("chart length differs from grid".into()));
        }
        Ok(set)
    }
}

/// Chart of a single variable degree.
pub fn elementary_exit_chart(
    snr: f64,
    var_degree: usize,
    check_dist: &DegreeDistribution,
    grid: &ProbabilityGrid,
) -> Result<Vec<f64>> {
    let set = ExitChartSet::compute(snr, check_dist, grid, &[var_degree])?;
    Ok(set.charts.into_values().next().unwrap())
}

/// Pointwise `sum_i lambda_i f_i(p)`.
pub fn combined_chart(lambda: &DegreeDistribution, charts: &ExitChartSet) -> Result<Vec<f64>> {
    let mut out = vec![0.0; charts.grid.len()];
    for &(d, w) in lambda.atoms() {
        let f = charts.chart(d).ok_or(Error::MissingElementaryChart(d))?;
        out.iter_mut().zip(f).for_each(|(o, v)| *o += w * v);
    }
    Ok(out)
}

/// True iff `chart(p) <= (1 - margin) p` at every positive grid point.
pub fn is_open(chart: &[f64], grid: &ProbabilityGrid, margin: f64) -> bool {
    chart
        .iter()
        .zip(grid.points())
        .filter(|(_, &p)| p > 0.0)
        .all(|(&f, &p)| f <= (1.0 - margin) * p)
}

/// Smallest relative gap `1 - chart(p) / p` over positive grid points.
pub fn openness_gap(chart: &[f64], grid: &ProbabilityGrid) -> f64 {
    chart
        .iter()
        .zip(grid.points())
        .filter(|(_, &p)| p > 0.0)
        .map(|(&f, &p)| 1.0 - f / p)
        .fold(f64::INFINITY, f64::min)
}

/// Openness of the ensemble `(lambda, check_dist)` on the default grid at
/// `snr`. Points are evaluated from `p0` downwards and the scan stops at the
/// first violation.
pub fn ensemble_is_open(
    lambda: &DegreeDistribution,
    check_dist: &DegreeDistribution,
    snr: f64,
    margin: f64,
) -> Result<bool> {
    let grid = ProbabilityGrid::for_snr(snr);
    let degrees = validate_var_degrees(&lambda.degrees().collect::<Vec<_>>())?;
    let check_degrees: Vec<usize> = check_dist.degrees().collect();
    for &d in &check_degrees {
        if d > MAX_CHECK_DEGREE {
            return Err(Error::DegreeOutOfRange { degree: d, max: MAX_CHECK_DEGREE });
        }
    }
    let check_weights: Vec<f64> = check_dist.atoms().iter().map(|a| a.1).collect();
    let var_weights: Vec<f64> = degrees.iter().map(|&d| lambda.fraction(d)).collect();
    let kernel = VariableKernel::new(snr, *degrees.last().unwrap());
    for &p in grid.points().iter().rev().filter(|&&p| p > 0.0) {
        let u = mix_pmfs(&check_output_pmfs(p, &check_degrees), &check_weights);
        let f: f64 = kernel
            .error_probabilities(&u, &degrees)
            .iter()
            .zip(&var_weights)
            .map(|(f, w)| f * w)
            .sum();
        if f > (1.0 - margin) * p {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Bisection (in log-SNR) for the smallest SNR at which the ensemble's chart
/// is open with the default margin. Returns the open end of the final
/// bracket, whose width is at most `tol` relative.
pub fn threshold_search(
    lambda: &DegreeDistribution,
    check_dist: &DegreeDistribution,
    snr_lo: f64,
    snr_hi: f64,
    tol: f64,
) -> Result<f64> {
    if !(snr_lo > 0.0 && snr_hi > snr_lo && tol > 0.0) {
        return Err(Error::BracketInvalid { lo: snr_lo, hi: snr_hi });
    }
    if ensemble_is_open(lambda, check_dist, snr_lo, DEFAULT_MARGIN)?
        || !ensemble_is_open(lambda, check_dist, snr_hi, DEFAULT_MARGIN)?
    {
        return Err(Error::BracketInvalid { lo: snr_lo, hi: snr_hi });
    }
    let (mut lo, mut hi) = (snr_lo, snr_hi);
    while hi / lo - 1.0 > tol {
        let mid = (lo * hi).sqrt();
        if ensemble_is_open(lambda, check_dist, mid, DEFAULT_MARGIN)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
