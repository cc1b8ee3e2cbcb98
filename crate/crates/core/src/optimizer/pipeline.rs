//! The full design flow from channel parameters to a two-level design.

use super::{
    optimize_single_code, DesignSpec, Designer, OpennessReport,
    SingleCodeDesign, TwoLevelDesign, DEFAULT_MU_GRID, DEFAULT_R_TOL,
};
use crate::channel::{bi_awgn_capacity, solve_optimal_alpha, OptimalSplit, RelayChannelParams, DEFAULT_CAPACITY_POINTS};
use crate::degree::{DegreeDistribution, DEFAULT_MAX_CHECK_DEGREE, DEFAULT_MAX_VAR_DEGREE};
use crate::exit::{CheckOutputTable, ExitChartSet, ProbabilityGrid, DEFAULT_GRID_POINTS, DEFAULT_GRID_SPAN, DEFAULT_MARGIN};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Knobs of a design run. Check distributions left unset are selected
/// automatically; `rho2prime` defaults to `rho1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignConfig {
    pub max_var_degree: usize,
    pub max_check_degree: usize,
    pub margin: f64,
    pub grid_points: usize,
    pub grid_span: f64,
    pub rho1: Option<DegreeDistribution>,
    pub rho2prime: Option<DegreeDistribution>,
    pub rho3: Option<DegreeDistribution>,
    pub mu_grid: usize,
    pub r_tol: f64,
    pub alpha_tol: f64,
    pub coupled: bool,
    /// Fractional rate backoff. When positive, each code is redesigned at
    /// the lowest SNR where its optimal rate still reaches `(1 - backoff)`
    /// times the optimum, which buys threshold gap for finite lengths.
    pub backoff: f64,
}

impl Default for DesignConfig {
    fn default() -> Self {
        Self {
            max_var_degree: DEFAULT_MAX_VAR_DEGREE,
            max_check_degree: DEFAULT_MAX_CHECK_DEGREE,
            margin: DEFAULT_MARGIN,
            grid_points: DEFAULT_GRID_POINTS,
            grid_span: DEFAULT_GRID_SPAN,
            rho1: None,
            rho2prime: None,
            rho3: None,
            mu_grid: DEFAULT_MU_GRID,
            r_tol: DEFAULT_R_TOL,
            alpha_tol: 1e-10,
            coupled: true,
            backoff: 0.0,
        }
    }
}

impl DesignConfig {
    pub fn validate(&self) -> Result<()> {
        if !(3..=crate::exit::MAX_CHECK_DEGREE).contains(&self.max_check_degree) {
            return Err(Error::InvalidParameter(format!(
                "max_check_degree {} outside [3, {}]",
                self.max_check_degree,
                crate::exit::MAX_CHECK_DEGREE
            )));
        }
        if self.mu_grid < 2 {
            return Err(Error::InvalidParameter("mu_grid needs at least the two endpoints".into()));
        }
        if !(0.0..1.0).contains(&self.backoff) {
            return Err(Error::InvalidParameter(format!("backoff {} outside [0, 1)", self.backoff)));
        }
        for rho in [&self.rho1, &self.rho2prime, &self.rho3].into_iter().flatten() {
            rho.ensure_max_degree(self.max_check_degree)?;
        }
        Ok(())
    }
}

/// Binary-input capacities at the three design SNRs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ceilings {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl Ceilings {
    pub fn new(snr1: f64, snr2: f64, snr3: f64) -> Self {
        let c = |s| bi_awgn_capacity(s, DEFAULT_CAPACITY_POINTS);
        Self { c1: c(snr1), c2: c(snr2), c3: c(snr3) }
    }

    /// `min(c1, c2 + r0)`: the binary-input bound on the source rate.
    pub fn source_bound(&self, r0: f64) -> f64 {
        self.c1.min(self.c2 + r0)
    }
}

/// How far below the channel SNRs a backed-off design was made, in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackoffGap {
    /// Common shift of `snr1` and `snr2`.
    pub source_db: f64,
    pub relay_db: f64,
}

const BACKOFF_TOL_DB: f64 = 0.05;

/// Everything a design run produces.
#[derive(Debug, Clone)]
pub struct DesignOutcome {
    pub split: OptimalSplit,
    /// Spec of the returned design; with backoff its SNRs sit below the
    /// channel's by `backoff_gap`.
    pub spec: DesignSpec,
    pub ceilings: Ceilings,
    /// Unbacked-off optimum `(r, r0*)`.
    pub optimum_r: f64,
    pub optimum_r0: f64,
    pub design: TwoLevelDesign,
    pub backoff_gap: Option<BackoffGap>,
    pub downward_closure: Vec<(f64, bool)>,
    pub verification: OpennessReport,
}

type Candidate = (f64, SingleCodeDesign, ExitChartSet);

/// Rate-optimal code for each check-concentrated average tried, keeping
/// the best.
struct CheckScan<'a> {
    snr: f64,
    table: CheckOutputTable,
    var_degrees: &'a [usize],
    max_check_degree: usize,
    margin: f64,
    best: Option<Candidate>,
}

impl<'a> CheckScan<'a> {
    fn new(snr: f64, grid: &ProbabilityGrid, var_degrees: &'a [usize], max_check_degree: usize, margin: f64) -> Result<Self> {
        let table = CheckOutputTable::new(grid, &(2..=max_check_degree).collect::<Vec<_>>())?;
        Ok(Self { snr, table, var_degrees, max_check_degree, margin, best: None })
    }

    /// Tries `avg`; true when it becomes the best so far.
    fn consider(&mut self, avg: f64) -> Result<bool> {
        if !(avg >= 3.0 && avg <= self.max_check_degree as f64) {
            return Ok(false);
        }
        let rho = DegreeDistribution::concentrated(avg)?;
        let charts = ExitChartSet::from_table(self.snr, &self.table, &rho, self.var_degrees)?;
        let design = match optimize_single_code(&charts, self.margin) {
            Ok(d) if d.rate > 0.0 => d,
            Ok(_) | Err(Error::Infeasible(_)) => return Ok(false),
            Err(e) => return Err(e),
        };
        if self.best.as_ref().is_some_and(|b| design.rate <= b.1.rate) {
            return Ok(false);
        }
        self.best = Some((avg, design, charts));
        Ok(true)
    }

    /// Quarter steps from the current best for as long as the rate improves.
    fn climb(&mut self) -> Result<()> {
        let Some(start) = self.best.as_ref().map(|b| b.0) else { return Ok(()) };
        for step in [0.25, -0.25] {
            let mut avg = start;
            while self.consider(avg + step)? {
                avg += step;
            }
        }
        Ok(())
    }

    fn finish(self) -> Result<(SingleCodeDesign, ExitChartSet)> {
        let (snr, max) = (self.snr, self.max_check_degree);
        self.best.map(|(_, d, c)| (d, c)).ok_or_else(|| {
            Error::Infeasible(format!(
                "no check-concentrated ensemble with check degree <= {max} is open at snr {snr:.6}"
            ))
        })
    }
}

/// Scans check-concentrated distributions (integer averages first, then
/// quarter steps from the best) and returns the one whose rate-optimal code
/// is fastest, together with its chart set.
pub fn select_check_distribution(
    snr: f64,
    grid: &ProbabilityGrid,
    var_degrees: &[usize],
    max_check_degree: usize,
    margin: f64,
) -> Result<(SingleCodeDesign, ExitChartSet)> {
    let mut scan = CheckScan::new(snr, grid, var_degrees, max_check_degree, margin)?;
    for avg in 3..=max_check_degree {
        scan.consider(avg as f64)?;
    }
    scan.climb()?;
    scan.finish()
}

/// As [`select_check_distribution`], but only climbs from the average
/// degree of `near`.
fn refine_check_distribution(
    near: &DegreeDistribution,
    snr: f64,
    grid: &ProbabilityGrid,
    var_degrees: &[usize],
    max_check_degree: usize,
    margin: f64,
) -> Result<SingleCodeDesign> {
    let mut scan = CheckScan::new(snr, grid, var_degrees, max_check_degree, margin)?;
    let start = (4.0 / near.inverse_mean()).round() / 4.0;
    if !scan.consider(start)? {
        // fall back to the integer averages when the start is closed
        for avg in 3..=max_check_degree {
            scan.consider(avg as f64)?;
        }
    }
    scan.climb()?;
    Ok(scan.finish()?.0)
}

/// Runs the complete design: optimal power split, check selection, relay
/// code, two-level source code, optional backoff, and re-verification.
pub fn run_design(params: &RelayChannelParams, config: &DesignConfig) -> Result<DesignOutcome> {
    config.validate()?;
    if params.p1() == 0.0 {
        return Err(Error::Infeasible(
            "relay inactive (P1 = 0): there is no bin-index code to design".into(),
        ));
    }
    let split = solve_optimal_alpha(params, config.alpha_tol)?;
    let snrs = split.snrs;
    let var_degrees: Vec<usize> = (2..=config.max_var_degree).collect();
    let grid = |snr: f64| {
        ProbabilityGrid::logarithmic(
            crate::exit::initial_error_probability(snr),
            config.grid_points,
            config.grid_span,
        )
    };

    let (rho3, relay_charts) = match &config.rho3 {
        Some(rho) => (rho.clone(), None),
        None => {
            let (d, c) = select_check_distribution(
                snrs.snr3,
                &grid(snrs.snr3)?,
                &var_degrees,
                config.max_check_degree,
                config.margin,
            )?;
            (d.rho, Some(c))
        }
    };
    let (rho1, source_charts) = match &config.rho1 {
        Some(rho) => (rho.clone(), None),
        None => {
            let (d, c) = select_check_distribution(
                snrs.snr1,
                &grid(snrs.snr1)?,
                &var_degrees,
                config.max_check_degree,
                config.margin,
            )?;
            (d.rho, Some(c))
        }
    };
    let rho2prime = config.rho2prime.clone().unwrap_or_else(|| rho1.clone());
    let spec = DesignSpec {
        snr1: snrs.snr1,
        snr2: snrs.snr2,
        snr3: snrs.snr3,
        rho1,
        rho2prime,
        rho3,
        max_var_degree: config.max_var_degree,
        margin: config.margin,
        grid_points: config.grid_points,
        grid_span: config.grid_span,
        coupled: config.coupled,
    };
    let designer = Designer::new(spec.clone())?;
    designer.seed_charts(relay_charts, source_charts)?;

    let relay = designer.optimize_single()?;
    let optimum = designer.optimize_two_level(&relay, config.mu_grid, config.r_tol)?;
    let downward_closure =
        designer.check_downward_closure(&optimum, &[0.5, 0.9], config.mu_grid)?;
    if let Some((r, _)) = downward_closure.iter().find(|c| !c.1) {
        return Err(Error::Infeasible(format!(
            "feasible rates are not downward closed: r = {r:.6} infeasible below the optimum {:.6}",
            optimum.r
        )));
    }

    let (design, spec, backoff_gap, verification) = if config.backoff > 0.0 {
        let keep = 1.0 - config.backoff;
        let relay_target = keep * relay.rate;
        let (relay_db, (relay_b, rho3)) = lowest_snr_meeting(
            capacity_gap_db(|db| bi_awgn_capacity(snrs.snr3 * db_scale(db), DEFAULT_CAPACITY_POINTS), relay_target),
            (relay.clone(), relay.rho.clone()),
            |db| {
                let snr3 = snrs.snr3 * db_scale(db);
                let design = match &config.rho3 {
                    Some(rho) => {
                        let spec = DesignSpec { snr3, rho3: rho.clone(), ..spec.clone() };
                        Designer::new(spec)?.optimize_single()?
                    }
                    None => refine_check_distribution(
                        &relay.rho,
                        snr3,
                        &grid(snr3)?,
                        &var_degrees,
                        config.max_check_degree,
                        config.margin,
                    )?,
                };
                Ok((design.rate >= relay_target).then(|| (design.clone(), design.rho)))
            },
        )?;
        let snr3 = snrs.snr3 * db_scale(relay_db);
        let target = keep * optimum.r;
        let hint = std::cell::Cell::new(Some(optimum.mu));
        let (source_db, (design, backed_spec)) = lowest_snr_meeting(
            capacity_gap_db(
                |db| Ceilings::new(snrs.snr1 * db_scale(db), snrs.snr2 * db_scale(db), snr3).source_bound(relay_b.rate),
                target,
            ),
            (optimum.clone(), spec.clone()),
            |db| {
                let (snr1, snr2) = (snrs.snr1 * db_scale(db), snrs.snr2 * db_scale(db));
                let rho1 = match &config.rho1 {
                    Some(rho) => rho.clone(),
                    None => {
                        refine_check_distribution(
                            &spec.rho1,
                            snr1,
                            &grid(snr1)?,
                            &var_degrees,
                            config.max_check_degree,
                            config.margin,
                        )?
                        .rho
                    }
                };
                let rho2prime = config.rho2prime.clone().unwrap_or_else(|| rho1.clone());
                let s = DesignSpec { snr1, snr2, snr3, rho1, rho2prime, rho3: rho3.clone(), ..spec.clone() };
                let found = Designer::new(s.clone())?.design_at_rate(&relay_b, target, config.mu_grid, hint.get())?;
                if let Some(d) = &found {
                    hint.set(Some(d.mu));
                }
                Ok(found.map(|d| (d, s)))
            },
        )?;
        let verification = Designer::new(backed_spec.clone())?.verify_openness(&design)?;
        (design, backed_spec, Some(BackoffGap { source_db, relay_db }), verification)
    } else {
        let verification = designer.verify_openness(&optimum)?;
        (optimum.clone(), spec, None, verification)
    };
    Ok(DesignOutcome {
        split,
        ceilings: Ceilings::new(snrs.snr1, snrs.snr2, snrs.snr3),
        spec,
        optimum_r: optimum.r,
        optimum_r0: optimum.r0_star,
        design,
        backoff_gap,
        downward_closure,
        verification,
    })
}

fn db_scale(db: f64) -> f64 {
    10f64.powf(-db / 10.0)
}

/// Largest SNR reduction at which `bound` still reaches `target`; no code
/// design can go deeper. `bound` must decrease with the reduction.
fn capacity_gap_db(bound: impl Fn(f64) -> f64, target: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    while bound(hi) >= target && hi < 64.0 {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        if bound(mid) >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Bisects on an SNR reduction in dB, up to `ceiling`, for the deepest one
/// where `attempt` still succeeds; `at_zero` is the known success at no
/// reduction. Infeasibility counts as failure.
fn lowest_snr_meeting<T>(ceiling: f64, at_zero: T, attempt: impl Fn(f64) -> Result<Option<T>>) -> Result<(f64, T)> {
    let run = |db: f64| match attempt(db) {
        Err(Error::Infeasible(_)) => Ok(None),
        other => other,
    };
    let mut best = at_zero;
    let (mut ok, mut bad) = (0.0, ceiling);
    while bad - ok > BACKOFF_TOL_DB {
        let mid = 0.5 * (ok + bad);
        match run(mid)? {
            Some(v) => {
                ok = mid;
                best = v;
            }
            None => bad = mid,
        }
    }
    Ok((ok, best))
}
