//! Row generation for LPs with many openness rows of which only a handful
//! bind at the optimum.

use crate::lp::{lp_solve, Constraint, LinearProgram, LpOutcome};
use crate::{Error, Result};

const SEED_STRIDE: usize = 8;
const VIOLATION_TOL: f64 = 1e-10;
const MAX_ROUNDS: usize = 100;

pub(crate) struct LazyProgram {
    pub objective: Vec<f64>,
    /// Rows always present.
    pub base: Vec<Constraint>,
    /// Rows added only once violated.
    pub lazy: Vec<Constraint>,
}

pub(crate) struct LazySolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

fn violation(c: &Constraint, x: &[f64]) -> f64 {
    let act: f64 = c.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
    let excess = match c.relation {
        crate::lp::Relation::Le => act - c.rhs,
        crate::lp::Relation::Ge => c.rhs - act,
        crate::lp::Relation::Eq => (act - c.rhs).abs(),
    };
    excess / (1.0 + c.rhs.abs())
}

impl LazyProgram {
    /// Optimum of the full program, or `None` when it is infeasible.
    pub fn solve(&self) -> Result<Option<LazySolution>> {
        let mut active: Vec<bool> = (0..self.lazy.len())
            .map(|k| k % SEED_STRIDE == 0 || k + 1 == self.lazy.len())
            .collect();
        for _ in 0..MAX_ROUNDS {
            let constraints: Vec<Constraint> = self
                .base
                .iter()
                .chain(self.lazy.iter().zip(&active).filter(|(_, &a)| a).map(|(c, _)| c))
                .cloned()
                .collect();
            let lp = LinearProgram { objective: self.objective.clone(), constraints };
            let solution = match lp_solve(&lp)? {
                LpOutcome::Infeasible => return Ok(None),
                LpOutcome::Unbounded => {
                    return Err(Error::LpNumericalFailure("design LP reported unbounded".into()))
                }
                LpOutcome::Optimal(s) => s,
            };
            let mut added = false;
            for (c, a) in self.lazy.iter().zip(active.iter_mut()) {
                if !*a && violation(c, &solution.x) > VIOLATION_TOL {
                    *a = true;
                    added = true;
                }
            }
            if !added {
                return Ok(Some(LazySolution { x: solution.x, objective: solution.objective }));
            }
        }
        Err(Error::LpNumericalFailure("row generation did not settle".into()))
    }
}
