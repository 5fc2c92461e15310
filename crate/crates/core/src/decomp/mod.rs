//! Projected subgradient ascent on the Lagrangian dual of a planar
//! decomposition.
//!
//! Every subgraph solves its own min-cost flow with cost shares `cᵏ` plus
//! multipliers `λᵏ`; the multipliers of each arc sum to zero across the
//! subgraphs that contain it, so the summed subproblem optima are a lower
//! bound on the full problem. Costs and multipliers are kept as integers in
//! units of `1 / COST_UNITS`, which makes the zero-sum projection exact.

mod schedule;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    arc_index, build_cycle_basis, build_constraints, check_coverage_condition, ConstraintSpace, CycleBasis,
    Decomposition, TreeRule, UnwrapGraph,
};
use crate::mcf::{build_dual_network, extract_primal_flows, DualNetwork, FlowSolution, McfSolver};
use crate::phase::{
    compute_costs, integrate_flows, CostModel, CostScheme, UnwrapResult, WrappedField, COST_UNITS,
};

pub use schedule::{relative_change, step_schedule, Phase, ScheduleAction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecompConfig {
    pub alpha0: f64,
    pub max_iterations: usize,
    /// Iterations between relative-change measurements of the best dual.
    pub window: usize,
    pub plateau_threshold: f64,
    pub convergence_threshold: f64,
    /// Smallest step size; convergence is only declared at or below it.
    pub min_step: f64,
    pub capacity: i64,
    pub solver: McfSolver,
    pub cost_scheme: CostScheme,
    /// Stop once a primal solution matches the best dual bound.
    pub stop_on_certificate: bool,
    /// Stop when the schedule reports convergence.
    pub stop_on_plateau: bool,
}

impl Default for DecompConfig {
    fn default() -> Self {
        DecompConfig {
            alpha0: 0.1,
            max_iterations: 2000,
            window: 50,
            plateau_threshold: 0.02,
            convergence_threshold: 0.001,
            min_step: 1e-4,
            capacity: 1,
            solver: McfSolver::default(),
            cost_scheme: CostScheme::Variance,
            stop_on_certificate: true,
            stop_on_plateau: true,
        }
    }
}

/// Per-subgraph cost shares, indexed by global arc (zero outside the
/// subgraph). For every arc the shares add up to the arc cost exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostShares {
    pub shares: Vec<Vec<i64>>,
}

impl CostShares {
    pub fn share(&self, k: usize, arc: usize) -> f64 {
        self.shares[k][arc] as f64 / COST_UNITS as f64
    }
}

/// Splits each edge cost evenly over the subgraphs containing the edge. Any
/// indivisible remainder goes one unit at a time to the lowest-indexed
/// subgraphs.
pub fn split_costs(costs: &CostModel, g: &UnwrapGraph, d: &Decomposition) -> CostShares {
    let units = costs.units();
    let mut shares = vec![vec![0i64; g.num_arcs()]; d.num_subgraphs()];
    for (e, &c) in units.iter().enumerate() {
        let members = d.membership(e);
        let m = members.len() as i64;
        let (q, r) = (c.div_euclid(m), c.rem_euclid(m));
        for (i, &k) in members.iter().enumerate() {
            let s = q + i64::from((i as i64) < r);
            shares[k][arc_index(e, true)] = s;
            shares[k][arc_index(e, false)] = s;
        }
    }
    CostShares { shares }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualState {
    /// `λᵏ` per subgraph and global arc, in cost units.
    pub lambda: Vec<Vec<i64>>,
    pub step_size: f64,
    pub phase: Phase,
    pub iteration: usize,
    pub best_dual: Option<i64>,
    pub dual_history: Vec<i64>,
    /// Iteration of the last step-size change (or 0).
    pub window_start: usize,
    pub phase_transition: Option<usize>,
}

impl DualState {
    pub fn new(num_subgraphs: usize, num_arcs: usize, alpha0: f64) -> Self {
        DualState {
            lambda: vec![vec![0; num_arcs]; num_subgraphs],
            step_size: alpha0,
            phase: Phase::Constant,
            iteration: 0,
            best_dual: None,
            dual_history: Vec::new(),
            window_start: 0,
            phase_transition: None,
        }
    }

    pub fn lambda(&self, k: usize, arc: usize) -> f64 {
        self.lambda[k][arc] as f64 / COST_UNITS as f64
    }

    /// Largest `|Σₖ λᵏ|` over arcs, in cost (not unit) terms.
    pub fn projection_residual(&self) -> f64 {
        let arcs = self.lambda.first().map_or(0, Vec::len);
        (0..arcs)
            .map(|a| self.lambda.iter().map(|l| l[a]).sum::<i64>().unsigned_abs())
            .max()
            .unwrap_or(0) as f64
            / COST_UNITS as f64
    }

    fn record(&mut self, dual: i64) {
        self.iteration += 1;
        self.dual_history.push(dual);
        self.best_dual = Some(self.best_dual.map_or(dual, |b| b.max(dual)));
    }
}

/// Mean-centred subgradient step: `λᵏ += α (δᵏ − mean over the arc's
/// subgraphs)`. Increments are rounded to whole units with the
/// largest-remainder rule so each arc's multipliers keep summing to zero.
pub fn update_duals(state: &mut DualState, g: &UnwrapGraph, d: &Decomposition, deltas: &[Vec<i64>]) {
    let scale = state.step_size * COST_UNITS as f64;
    let mut inc: Vec<(f64, usize)> = Vec::new();
    for e in 0..g.num_edges() {
        let members = d.membership(e);
        if members.len() < 2 {
            continue;
        }
        let m = members.len() as f64;
        for a in [arc_index(e, true), arc_index(e, false)] {
            let sum: i64 = members.iter().map(|&k| deltas[k][a]).sum();
            if members.iter().all(|&k| deltas[k][a] * members.len() as i64 == sum) {
                continue;
            }
            inc.clear();
            for (i, &k) in members.iter().enumerate() {
                inc.push((scale * (m * deltas[k][a] as f64 - sum as f64) / m, i));
            }
            let floors: Vec<i64> = inc.iter().map(|&(x, _)| x.floor() as i64).collect();
            let missing = -floors.iter().sum::<i64>();
            inc.sort_by(|x, y| {
                let fx = x.0 - x.0.floor();
                let fy = y.0 - y.0.floor();
                fy.total_cmp(&fx).then(x.1.cmp(&y.1))
            });
            let mut bump = vec![0i64; members.len()];
            for &(_, i) in inc.iter().take(missing.max(0) as usize) {
                bump[i] = 1;
            }
            for (i, &k) in members.iter().enumerate() {
                state.lambda[k][a] += floors[i] + bump[i];
            }
        }
    }
}

/// `Σₖ (cᵏ + λᵏ)ᵀ δᵏ` in cost units.
pub fn dual_objective(shares: &CostShares, state: &DualState, deltas: &[Vec<i64>]) -> i64 {
    deltas
        .iter()
        .enumerate()
        .map(|(k, delta)| {
            delta
                .iter()
                .enumerate()
                .filter(|(_, &x)| x != 0)
                .map(|(a, &x)| (shares.shares[k][a] + state.lambda[k][a]) * x)
                .sum::<i64>()
        })
        .sum()
}

/// Per-subgraph dual networks, built once and re-costed every iteration.
pub struct Subproblems {
    networks: Vec<DualNetwork>,
}

impl Subproblems {
    pub fn new(g: &UnwrapGraph, d: &Decomposition, wrapped: &[i64], capacity: i64) -> Result<Self> {
        let zero = vec![0; g.num_arcs()];
        let networks = d
            .subgraphs()
            .iter()
            .map(|sub| build_dual_network(g, sub, wrapped, &zero, capacity))
            .collect::<Result<_>>()?;
        Ok(Subproblems { networks })
    }

    pub fn network(&self, k: usize) -> &DualNetwork {
        &self.networks[k]
    }
}

/// Optimal `δᵏ` (per global arc) for costs `cᵏ + λᵏ`, with the network
/// solution it came from. `warm` is the previous solution of the same
/// subproblem, if any.
pub fn solve_subproblem(
    k: usize,
    subs: &Subproblems,
    shares: &CostShares,
    state: &DualState,
    solver: McfSolver,
    warm: Option<&FlowSolution>,
) -> Result<(Vec<i64>, FlowSolution)> {
    let mut net = subs.networks[k].clone();
    for (arc, &a) in net.problem.arcs.iter_mut().zip(&net.primal_arcs) {
        arc.cost = shares.shares[k][a] + state.lambda[k][a];
    }
    let sol = solver.solve_warm(&net.problem, warm)?;
    Ok((extract_primal_flows(&net, &sol), sol))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusSolution {
    /// Per global arc.
    pub delta: Vec<i64>,
    pub agreement_fraction: f64,
    /// `Σ c·δ` in cost units.
    pub primal_objective: i64,
}

/// Per edge, the common value when every copy agrees, otherwise the copy of
/// the lowest-indexed subgraph containing the edge.
pub fn extract_consensus(
    g: &UnwrapGraph,
    d: &Decomposition,
    deltas: &[Vec<i64>],
    arc_costs: &[i64],
) -> ConsensusSolution {
    let mut delta = vec![0; g.num_arcs()];
    let mut agreed = 0;
    for e in 0..g.num_edges() {
        let members = d.membership(e);
        let arcs = [arc_index(e, true), arc_index(e, false)];
        let first = members[0];
        if members
            .iter()
            .all(|&k| arcs.iter().all(|&a| deltas[k][a] == deltas[first][a]))
        {
            agreed += 1;
        }
        for a in arcs {
            delta[a] = deltas[first][a];
        }
    }
    let agreement_fraction = if g.num_edges() == 0 {
        1.0
    } else {
        agreed as f64 / g.num_edges() as f64
    };
    ConsensusSolution {
        primal_objective: objective(arc_costs, &delta),
        delta,
        agreement_fraction,
    }
}

fn objective(arc_costs: &[i64], delta: &[i64]) -> i64 {
    arc_costs.iter().zip(delta).map(|(c, x)| c * x).sum()
}

/// Potentials from tree edges only; back edges are not checked.
fn tree_potentials(g: &UnwrapGraph, basis: &CycleBasis, wrapped: &[i64], delta: &[i64]) -> Vec<i64> {
    let mut p = vec![0i64; g.num_vertices()];
    for &v in basis.tree_order() {
        if let Some((u, e)) = basis.parent(v) {
            let net = delta[arc_index(e, true)] - delta[arc_index(e, false)];
            let edge = g.edge(e);
            p[v] = if edge.tail == u {
                p[u] - wrapped[e] + net
            } else {
                p[u] + wrapped[e] - net
            };
        }
    }
    p
}

/// The cheapest full flow with the given potentials, or `None` when some
/// edge would need more than `capacity`.
fn flows_from_potentials(
    g: &UnwrapGraph,
    p: &[i64],
    wrapped: &[i64],
    arc_costs: &[i64],
    capacity: i64,
) -> Option<Vec<i64>> {
    let mut delta = vec![0; g.num_arcs()];
    for (e, edge) in g.edges().iter().enumerate() {
        let net = wrapped[e] - p[edge.tail] + p[edge.head];
        if net.abs() > capacity {
            return None;
        }
        let (f, b) = (arc_index(e, true), arc_index(e, false));
        if arc_costs[f] + arc_costs[b] < 0 {
            // Both directions pay to carry flow: saturate both.
            delta[f] = capacity.min(capacity + net);
            delta[b] = delta[f] - net;
        } else if net > 0 {
            delta[f] = net;
        } else {
            delta[b] = -net;
        }
    }
    Some(delta)
}

/// Feasible full solutions derived from one iteration's copies: the
/// consensus itself when it satisfies every cycle, and one solution per
/// subgraph from integrating that subgraph's copy along its own tree.
/// Returns the cheapest.
fn recover_primal(
    g: &UnwrapGraph,
    d: &Decomposition,
    full: &CycleBasis,
    cs: &ConstraintSpace,
    wrapped: &[i64],
    arc_costs: &[i64],
    capacity: i64,
    deltas: &[Vec<i64>],
    consensus: &ConsensusSolution,
) -> Option<(i64, Vec<i64>)> {
    let mut best: Option<(i64, Vec<i64>)> = None;
    let mut offer = |delta: Vec<i64>| {
        let c = objective(arc_costs, &delta);
        if best.as_ref().is_none_or(|(b, _)| c < *b) {
            best = Some((c, delta));
        }
    };
    // With any disagreement the consensus is integrated along the tree instead,
    // which reproduces it whenever it happens to be consistent.
    if consensus.agreement_fraction == 1.0 && cs.check(&consensus.delta).is_ok() {
        offer(consensus.delta.clone());
    } else {
        let p = tree_potentials(g, full, wrapped, &consensus.delta);
        if let Some(delta) = flows_from_potentials(g, &p, wrapped, arc_costs, capacity) {
            offer(delta);
        }
    }
    for (k, sub) in d.subgraphs().iter().enumerate() {
        let p = tree_potentials(g, sub.basis(), wrapped, &deltas[k]);
        if let Some(delta) = flows_from_potentials(g, &p, wrapped, arc_costs, capacity) {
            offer(delta);
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub dual: f64,
    pub best_dual: f64,
    pub alpha: f64,
    pub agreement: f64,
    pub best_primal: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// A primal solution matched the dual bound.
    Certified,
    /// The schedule's convergence threshold was met.
    Converged,
    IterationCap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: DecompConfig,
    pub rows: usize,
    pub cols: usize,
    pub arc_level: Option<u8>,
    pub num_subgraphs: usize,
    pub coverage_condition: bool,
    pub iterations: Vec<IterationRecord>,
    pub best_dual: f64,
    pub best_dual_units: i64,
    pub primal_objective: f64,
    pub primal_objective_units: i64,
    pub agreement_fraction: f64,
    pub termination: Termination,
    /// True when the iteration cap ended the run.
    pub nonconvergence: bool,
    pub phase_transition_iteration: Option<usize>,
    pub solver_seconds: f64,
    pub total_seconds: f64,
}

/// Output of a run: the integrated result, the report, and the final
/// arc flows and multipliers.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub result: UnwrapResult,
    pub report: RunReport,
    pub flows: Vec<i64>,
    pub state: DualState,
    pub last_deltas: Vec<Vec<i64>>,
}

/// Costs from `config.cost_scheme`, then [`run_with_costs`].
pub fn run(f: &WrappedField, g: &UnwrapGraph, d: &Decomposition, config: &DecompConfig) -> Result<RunOutcome> {
    let costs = compute_costs(f, g, config.cost_scheme)?;
    run_with_costs(f, g, d, &costs, config)
}

/// The full loop: split costs, alternate subproblem solves and multiplier
/// updates until a certificate, the schedule or the cap stops it, then
/// integrate the best primal solution found.
pub fn run_with_costs(
    f: &WrappedField,
    g: &UnwrapGraph,
    d: &Decomposition,
    costs: &CostModel,
    config: &DecompConfig,
) -> Result<RunOutcome> {
    let start = Instant::now();
    if config.window == 0 || config.max_iterations == 0 || !(config.alpha0 > 0.0) {
        return Err(Error::InvalidParameter(
            "window, iteration cap and step size must be positive".into(),
        ));
    }
    if costs.len() != g.num_edges() {
        return Err(Error::InvalidParameter(format!(
            "expected {} edge costs, got {}",
            g.num_edges(),
            costs.len()
        )));
    }
    let wrapped = f.wrapped_gradients(g);
    let full = build_cycle_basis(g, &TreeRule::default())?;
    let coverage = check_coverage_condition(d, &full);
    let cs = build_constraints(g, &full, &wrapped)?;
    let shares = split_costs(costs, g, d);
    let arc_costs: Vec<i64> = costs.units().iter().flat_map(|&c| [c, c]).collect();
    let subs = Subproblems::new(g, d, &wrapped, config.capacity)?;
    let mut state = DualState::new(d.num_subgraphs(), g.num_arcs(), config.alpha0);
    let mut records = Vec::new();
    let mut best_primal: Option<(i64, Vec<i64>)> = None;
    let mut solver_seconds = 0.0;
    let mut termination = Termination::IterationCap;
    let mut agreement = 0.0;
    let mut deltas = Vec::new();
    let mut previous: Vec<FlowSolution> = Vec::new();

    while state.iteration < config.max_iterations {
        let t = Instant::now();
        let solved: Vec<(Vec<i64>, FlowSolution)> = (0..d.num_subgraphs())
            .into_par_iter()
            .map(|k| solve_subproblem(k, &subs, &shares, &state, config.solver, previous.get(k)))
            .collect::<Result<_>>()?;
        solver_seconds += t.elapsed().as_secs_f64();
        let dual: i64 = solved.iter().map(|s| s.1.objective).sum();
        (deltas, previous) = solved.into_iter().unzip();
        debug_assert_eq!(dual, dual_objective(&shares, &state, &deltas));
        state.record(dual);

        let consensus = extract_consensus(g, d, &deltas, &arc_costs);
        agreement = consensus.agreement_fraction;
        if let Some((c, delta)) = recover_primal(
            g,
            d,
            &full,
            &cs,
            &wrapped,
            &arc_costs,
            config.capacity,
            &deltas,
            &consensus,
        ) {
            if best_primal.as_ref().is_none_or(|(b, _)| c < *b) {
                best_primal = Some((c, delta));
            }
        }
        let best_dual = state.best_dual.expect("recorded");
        records.push(IterationRecord {
            iter: state.iteration,
            dual: dual as f64 / COST_UNITS as f64,
            best_dual: best_dual as f64 / COST_UNITS as f64,
            alpha: state.step_size,
            agreement,
            best_primal: best_primal.as_ref().map(|(c, _)| *c as f64 / COST_UNITS as f64),
        });
        if config.stop_on_certificate && best_primal.as_ref().is_some_and(|(c, _)| *c == best_dual) {
            termination = Termination::Certified;
            break;
        }
        if state.iteration > state.window_start + config.window {
            let before = state.dual_history[..state.iteration - config.window]
                .iter()
                .copied()
                .max()
                .expect("window lies inside history");
            let change = relative_change(before, best_dual);
            let action = step_schedule(&mut state, change, config);
            if action == ScheduleAction::Terminate && config.stop_on_plateau {
                termination = Termination::Converged;
                break;
            }
        }
        update_duals(&mut state, g, d, &deltas);
    }

    let (primal_units, flows) = match best_primal {
        Some(p) => p,
        None => {
            return Err(Error::InvalidParameter(
                "no capacity-feasible primal solution was found; raise the capacity bound".into(),
            ))
        }
    };
    let result = integrate_flows(f, g, &full, &flows)?;
    let best_dual_units = state.best_dual.unwrap_or(0);
    let report = RunReport {
        config: config.clone(),
        rows: g.rows(),
        cols: g.cols(),
        arc_level: g.arc_level().map(|l| l.index()),
        num_subgraphs: d.num_subgraphs(),
        coverage_condition: coverage,
        iterations: records,
        best_dual: best_dual_units as f64 / COST_UNITS as f64,
        best_dual_units,
        primal_objective: primal_units as f64 / COST_UNITS as f64,
        primal_objective_units: primal_units,
        agreement_fraction: agreement,
        termination,
        nonconvergence: termination == Termination::IterationCap,
        phase_transition_iteration: state.phase_transition,
        solver_seconds,
        total_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(RunOutcome {
        result,
        report,
        flows,
        state,
        last_deltas: deltas,
    })
}

#[cfg(test)]
mod tests;
