//! Exact references for small instances: a dense bounded-variable simplex
//! for the LP relaxation, exhaustive binary enumeration, and an exact
//! integer search that eliminates row-private columns in closed form.

mod enumerate;
mod simplex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::ConstraintSpace;

pub use enumerate::{solve_brute_force, solve_integer_exact, BRUTE_FORCE_LIMIT};
pub use simplex::solve_lp_exact;

/// `min cᵀx` subject to `A x = b`, `0 ≤ x ≤ u`, with `A` in `{−1, 0, 1}`
/// and integer costs (any fixed unit).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenseLP {
    pub a: Vec<Vec<i8>>,
    pub b: Vec<i64>,
    pub costs: Vec<i64>,
    pub upper: Vec<i64>,
}

/// Optimal integral point and its objective in the instance's cost units.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub objective: i64,
    pub x: Vec<i64>,
    /// Simplex pivots (including bound flips) or enumerated leaves.
    pub work: u64,
}

impl DenseLP {
    /// The unwrapping program over a cycle constraint system.
    pub fn from_constraints(cs: &ConstraintSpace, arc_costs: &[i64], capacity: i64) -> Result<Self> {
        if arc_costs.len() != cs.num_arcs {
            return Err(Error::InvalidParameter(format!(
                "expected {} arc costs, got {}",
                cs.num_arcs,
                arc_costs.len()
            )));
        }
        Ok(DenseLP {
            a: cs.dense(),
            b: cs.rows.iter().map(|r| r.rhs).collect(),
            costs: arc_costs.to_vec(),
            upper: vec![capacity; cs.num_arcs],
        })
    }

    pub fn num_vars(&self) -> usize {
        self.costs.len()
    }

    pub fn num_rows(&self) -> usize {
        self.a.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.upper.len() != n || self.b.len() != self.a.len() {
            return Err(Error::InvalidParameter("inconsistent LP dimensions".into()));
        }
        for (i, row) in self.a.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidParameter(format!("row {i} has {} entries", row.len())));
            }
            if row.iter().any(|&v| !(-1..=1).contains(&v)) {
                return Err(Error::InvalidParameter(format!("row {i} leaves {{-1, 0, 1}}")));
            }
        }
        if self.upper.iter().any(|&u| u < 0) {
            return Err(Error::InvalidParameter("negative upper bound".into()));
        }
        Ok(())
    }

    pub fn objective(&self, x: &[i64]) -> i64 {
        self.costs.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    pub fn is_feasible(&self, x: &[i64]) -> bool {
        x.len() == self.num_vars()
            && x.iter().zip(&self.upper).all(|(&v, &u)| (0..=u).contains(&v))
            && self.a.iter().zip(&self.b).all(|(row, &b)| {
                row.iter().zip(x).map(|(&a, &v)| i64::from(a) * v).sum::<i64>() == b
            })
    }
}

/// Whether the LP optimum equals the integer optimum. The integer side is
/// exhaustive enumeration up to [`BRUTE_FORCE_LIMIT`] variables and the
/// exact search beyond. Both infeasible counts as tight.
pub fn verify_tight_relaxation(p: &DenseLP) -> Result<bool> {
    let lp = solve_lp_exact(p);
    let ip = if p.num_vars() <= BRUTE_FORCE_LIMIT {
        solve_brute_force(p)
    } else {
        solve_integer_exact(p, enumerate::DEFAULT_SEARCH_LIMIT)
    };
    match (lp, ip) {
        (Ok(a), Ok(b)) => Ok(a.objective == b.objective),
        (Err(Error::NoFeasibleSolution), Err(Error::NoFeasibleSolution)) => Ok(true),
        (Err(Error::NoFeasibleSolution), Ok(_)) | (Ok(_), Err(Error::NoFeasibleSolution)) => Ok(false),
        (Err(e), _) | (_, Err(e)) => Err(e),
    }
}
