use std::time::Instant;

use serde::{Deserialize, Serialize};
use unwrap_dd::decomp::{run_with_costs, RunReport};
use unwrap_dd::graph::{
    build_constraints, build_cycle_basis, build_decomposition, build_grid_graph, ArcLevel, TreeRule,
};
use unwrap_dd::mcf::McfSolver;
use unwrap_dd::oracle::{solve_lp_exact, DenseLP};
use unwrap_dd::phase::{compute_costs, inconsistency, integrate_flows, UnwrapResult, WrappedField, COST_UNITS};
use unwrap_dd::Result;

use crate::config::{ExperimentConfig, SolverChoice};

/// One unwrapped field with the numbers reported by every command.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Solved {
    pub solver: SolverChoice,
    pub arc_level: u8,
    pub objective: f64,
    pub iterations: usize,
    pub solver_seconds: f64,
    pub total_seconds: f64,
    pub converged: bool,
    /// Percentage, when the field carries ground truth.
    pub inconsistency: Option<f64>,
    pub result: UnwrapResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<RunReport>,
}

pub fn solve_field(
    f: &WrappedField,
    level: ArcLevel,
    solver: SolverChoice,
    config: &ExperimentConfig,
) -> Result<Solved> {
    let start = Instant::now();
    let level = if solver == SolverChoice::McfOnly {
        ArcLevel::Planar
    } else {
        level
    };
    let g = build_grid_graph(f.rows, f.cols, level)?;
    let costs = compute_costs(f, &g, config.cost_scheme)?;
    let mut solved = match solver {
        SolverChoice::Oracle => {
            let basis = build_cycle_basis(&g, &TreeRule::default())?;
            let cs = build_constraints(&g, &basis, &f.wrapped_gradients(&g))?;
            let arc_costs: Vec<i64> = costs.units().iter().flat_map(|&c| [c, c]).collect();
            let lp = DenseLP::from_constraints(&cs, &arc_costs, 1)?;
            let t = Instant::now();
            let sol = solve_lp_exact(&lp)?;
            let solver_seconds = t.elapsed().as_secs_f64();
            Solved {
                solver,
                arc_level: level.index(),
                objective: sol.objective as f64 / COST_UNITS as f64,
                iterations: sol.work as usize,
                solver_seconds,
                total_seconds: 0.0,
                converged: true,
                inconsistency: None,
                result: integrate_flows(f, &g, &basis, &sol.x)?,
                report: None,
            }
        }
        _ => {
            let backend = match solver {
                SolverChoice::Simplex => McfSolver::NetworkSimplex,
                _ => McfSolver::CostScaling {
                    epsilon_factor: config.epsilon_factor,
                },
            };
            let d = build_decomposition(&g, level)?;
            let out = run_with_costs(f, &g, &d, &costs, &config.decomp_config(backend))?;
            Solved {
                solver,
                arc_level: level.index(),
                objective: out.report.primal_objective,
                iterations: out.report.iterations.len(),
                solver_seconds: out.report.solver_seconds,
                total_seconds: 0.0,
                converged: !out.report.nonconvergence,
                inconsistency: None,
                result: out.result,
                report: Some(out.report),
            }
        }
    };
    solved.inconsistency = f
        .truth_n
        .as_ref()
        .map(|truth| inconsistency(&solved.result.n, truth));
    solved.total_seconds = start.elapsed().as_secs_f64();
    Ok(solved)
}
