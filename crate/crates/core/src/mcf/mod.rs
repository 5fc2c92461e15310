//! Minimum-cost flow on the face-dual networks of planar subgraphs.
//!
//! Conventions: every node carries a residue with
//! `inflow − outflow = residue`; arcs have integer costs (which may be
//! negative) and capacities. Both solvers see an equivalent problem with
//! nonnegative costs and no self-loops; negative-cost arcs are saturated up
//! front and replaced by their reverse.

mod cost_scaling;
mod dimacs;
mod dual;
mod maxflow;
mod simplex;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dimacs::{read_dimacs, write_dimacs};
pub use dual::{build_dual_network, extract_primal_flows, DualNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub capacity: i64,
    pub cost: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct McfProblem {
    pub residues: Vec<i64>,
    pub arcs: Vec<Arc>,
}

impl McfProblem {
    pub fn new(num_nodes: usize) -> Self {
        McfProblem {
            residues: vec![0; num_nodes],
            arcs: Vec::new(),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.residues.len()
    }

    pub fn add_arc(&mut self, from: usize, to: usize, capacity: i64, cost: i64) -> usize {
        self.arcs.push(Arc {
            from,
            to,
            capacity,
            cost,
        });
        self.arcs.len() - 1
    }

    /// `inflow − outflow − residue` per node.
    pub fn imbalance(&self, flows: &[i64]) -> Vec<i64> {
        let mut out: Vec<i64> = self.residues.iter().map(|&r| -r).collect();
        for (a, &f) in self.arcs.iter().zip(flows) {
            out[a.to] += f;
            out[a.from] -= f;
        }
        out
    }

    pub fn objective(&self, flows: &[i64]) -> i64 {
        self.arcs.iter().zip(flows).map(|(a, &f)| a.cost * f).sum()
    }

    /// Whether `flows` is within bounds and conserves flow at every node.
    pub fn is_feasible(&self, flows: &[i64]) -> bool {
        flows.len() == self.arcs.len()
            && self
                .arcs
                .iter()
                .zip(flows)
                .all(|(a, &f)| (0..=a.capacity).contains(&f))
            && self.imbalance(flows).iter().all(|&x| x == 0)
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_nodes();
        for (i, a) in self.arcs.iter().enumerate() {
            if a.from >= n || a.to >= n {
                return Err(Error::InvalidGraph(format!("arc {i} leaves the node range")));
            }
            if a.capacity < 0 {
                return Err(Error::InvalidGraph(format!("arc {i} has negative capacity")));
            }
        }
        let total: i64 = self.residues.iter().sum();
        if total != 0 {
            return Err(Error::ResidueImbalance(total));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SolverStats {
    /// Refine phases (cost scaling) or pivots (network simplex).
    pub iterations: u64,
    /// Pushes plus relabels (cost scaling) or degenerate pivots (simplex).
    pub operations: u64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSolution {
    pub flows: Vec<i64>,
    /// `Σ cost · flow` in the problem's cost units.
    pub objective: i64,
    /// Node potentials of the normalized problem; reduced costs are
    /// `cost + p(from) − p(to)` in units of `potential_scale` per cost unit.
    pub potentials: Vec<i64>,
    pub potential_scale: i64,
    pub stats: SolverStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum McfSolver {
    CostScaling { epsilon_factor: u32 },
    NetworkSimplex,
}

impl Default for McfSolver {
    fn default() -> Self {
        McfSolver::CostScaling { epsilon_factor: 8 }
    }
}

impl McfSolver {
    pub fn name(&self) -> &'static str {
        match self {
            McfSolver::CostScaling { .. } => "cost-scaling",
            McfSolver::NetworkSimplex => "simplex",
        }
    }

    pub fn solve(&self, p: &McfProblem) -> Result<FlowSolution> {
        match *self {
            McfSolver::CostScaling { epsilon_factor } => solve_cost_scaling(p, epsilon_factor),
            McfSolver::NetworkSimplex => solve_network_simplex(p),
        }
    }

    /// Like [`McfSolver::solve`], reusing `warm` where the backend can.
    pub fn solve_warm(&self, p: &McfProblem, warm: Option<&FlowSolution>) -> Result<FlowSolution> {
        match (*self, warm) {
            (McfSolver::CostScaling { epsilon_factor }, Some(w)) => {
                solve_cost_scaling_warm(p, epsilon_factor, w)
            }
            _ => self.solve(p),
        }
    }
}

/// Nonnegative-cost, loop-free equivalent of a problem.
struct Normalized {
    problem: McfProblem,
    /// Per original arc: index in `problem` (or `None` for dropped loops)
    /// and whether it was reversed.
    map: Vec<(Option<usize>, bool)>,
    base: Vec<i64>,
}

fn normalize(p: &McfProblem) -> Normalized {
    let mut q = McfProblem {
        residues: p.residues.clone(),
        arcs: Vec::with_capacity(p.arcs.len()),
    };
    let mut map = Vec::with_capacity(p.arcs.len());
    let mut base = vec![0; p.arcs.len()];
    for (i, a) in p.arcs.iter().enumerate() {
        if a.cost < 0 {
            base[i] = a.capacity;
        }
        if a.from == a.to {
            map.push((None, false));
            continue;
        }
        if a.cost < 0 {
            q.residues[a.to] -= a.capacity;
            q.residues[a.from] += a.capacity;
            map.push((Some(q.add_arc(a.to, a.from, a.capacity, -a.cost)), true));
        } else {
            map.push((Some(q.add_arc(a.from, a.to, a.capacity, a.cost)), false));
        }
    }
    Normalized {
        problem: q,
        map,
        base,
    }
}

impl Normalized {
    /// Original-space flows mapped into the normalized problem.
    fn apply(&self, flows: &[i64]) -> Vec<i64> {
        let mut out = vec![0; self.problem.arcs.len()];
        for ((&(idx, reversed), &b), &f) in self.map.iter().zip(&self.base).zip(flows) {
            match idx {
                Some(j) if reversed => out[j] = b - f,
                Some(j) => out[j] = f,
                None => {}
            }
        }
        out
    }

    fn restore(&self, flows: &[i64]) -> Vec<i64> {
        self.map
            .iter()
            .zip(&self.base)
            .map(|(&(idx, reversed), &b)| match idx {
                None => b,
                Some(j) if reversed => b - flows[j],
                Some(j) => flows[j],
            })
            .collect()
    }
}

/// `known_feasible` skips the max-flow check when the caller already holds
/// a feasible flow.
fn run(
    p: &McfProblem,
    known_feasible: bool,
    solver: impl FnOnce(&McfProblem, &Normalized) -> (Vec<i64>, Vec<i64>, i64, SolverStats),
) -> Result<FlowSolution> {
    let start = Instant::now();
    p.validate()?;
    let norm = normalize(p);
    if !known_feasible {
        maxflow::check_feasible(&norm.problem)?;
    }
    let (flows, potentials, potential_scale, mut stats) = solver(&norm.problem, &norm);
    let flows = norm.restore(&flows);
    stats.seconds = start.elapsed().as_secs_f64();
    debug_assert!(p.is_feasible(&flows));
    Ok(FlowSolution {
        objective: p.objective(&flows),
        flows,
        potentials,
        potential_scale,
        stats,
    })
}

/// Goldberg–Tarjan cost scaling with push-relabel refinement. `epsilon_factor`
/// (at least 2) divides ε between refine phases.
pub fn solve_cost_scaling(p: &McfProblem, epsilon_factor: u32) -> Result<FlowSolution> {
    if epsilon_factor < 2 {
        return Err(Error::InvalidParameter(format!(
            "epsilon factor must be at least 2, got {epsilon_factor}"
        )));
    }
    run(p, false, |q, _| cost_scaling::solve(q, i64::from(epsilon_factor), None))
}

/// [`solve_cost_scaling`] started from an earlier solution of a problem with
/// the same nodes, arcs, capacities and residues but different costs. Falls
/// back to a cold start when `warm` does not fit.
pub fn solve_cost_scaling_warm(
    p: &McfProblem,
    epsilon_factor: u32,
    warm: &FlowSolution,
) -> Result<FlowSolution> {
    let fits = warm.flows.len() == p.arcs.len()
        && warm.potentials.len() == p.num_nodes()
        && warm.potential_scale == p.num_nodes() as i64 + 1
        && p.is_feasible(&warm.flows);
    if !fits {
        return solve_cost_scaling(p, epsilon_factor);
    }
    if epsilon_factor < 2 {
        return Err(Error::InvalidParameter(format!(
            "epsilon factor must be at least 2, got {epsilon_factor}"
        )));
    }
    run(p, true, |q, norm| {
        let flows = norm.apply(&warm.flows);
        cost_scaling::solve(q, i64::from(epsilon_factor), Some((&flows, &warm.potentials)))
    })
}

/// Primal network simplex over strongly feasible spanning trees.
pub fn solve_network_simplex(p: &McfProblem) -> Result<FlowSolution> {
    run(p, false, |q, _| simplex::solve(q))
}
