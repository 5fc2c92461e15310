use std::collections::VecDeque;

use super::maxflow::Residual;
use super::{McfProblem, SolverStats};

/// Push-relabel refinement over ε-scaled costs. Costs are multiplied by
/// `n + 1`, so 1-optimality at the end is exact optimality. Expects a
/// feasible problem with nonnegative costs and no self-loops.
///
/// `warm` supplies a feasible flow and potentials (at the same scale) to
/// start from; the first ε is then their optimality violation.
pub(super) fn solve(
    p: &McfProblem,
    factor: i64,
    warm: Option<(&[i64], &[i64])>,
) -> (Vec<i64>, Vec<i64>, i64, SolverStats) {
    let n = p.num_nodes();
    let scale = n as i64 + 1;
    let mut r = Residual::new(n);
    let mut cost = Vec::with_capacity(2 * p.arcs.len());
    for a in &p.arcs {
        r.add(a.from, a.to, a.capacity);
        cost.push(a.cost * scale);
        cost.push(-a.cost * scale);
    }
    let mut excess: Vec<i64> = p.residues.iter().map(|&x| -x).collect();
    let mut pot = vec![0i64; n];
    let mut stats = SolverStats::default();

    let mut eps = match warm {
        None => cost.iter().copied().max().unwrap_or(0).max(1),
        Some((flows, potentials)) => {
            for (i, &f) in flows.iter().enumerate() {
                r.cap[2 * i] -= f;
                r.cap[2 * i + 1] += f;
                excess[p.arcs[i].from] -= f;
                excess[p.arcs[i].to] += f;
            }
            pot.copy_from_slice(potentials);
            let mut violation = 0;
            for v in 0..n {
                for &a in &r.out[v] {
                    if r.cap[a] > 0 {
                        violation = violation.max(-(cost[a] + pot[v] - pot[r.head[a]]));
                    }
                }
            }
            // The loop divides before refining; the warm pair is already
            // `violation`-optimal.
            violation.max(1)
        }
    };
    let mut current = vec![0usize; n];
    let mut active = VecDeque::new();
    let mut queued = vec![false; n];
    loop {
        eps = (eps / factor).max(1);
        stats.iterations += 1;
        // Saturate every residual arc with negative reduced cost.
        for v in 0..n {
            for &a in &r.out[v] {
                let w = r.head[a];
                if r.cap[a] > 0 && cost[a] + pot[v] - pot[w] < 0 {
                    let f = r.cap[a];
                    r.cap[a] = 0;
                    r.cap[a ^ 1] += f;
                    excess[v] -= f;
                    excess[w] += f;
                }
            }
        }
        current.fill(0);
        for v in 0..n {
            if excess[v] > 0 {
                active.push_back(v);
                queued[v] = true;
            }
        }
        while let Some(v) = active.pop_front() {
            queued[v] = false;
            // Discharge v.
            while excess[v] > 0 {
                if current[v] == r.out[v].len() {
                    let mut best = i64::MIN;
                    for &a in &r.out[v] {
                        if r.cap[a] > 0 {
                            best = best.max(pot[r.head[a]] - cost[a]);
                        }
                    }
                    // Feasibility guarantees a residual arc out of any node
                    // with positive excess.
                    debug_assert!(best > i64::MIN);
                    pot[v] = best - eps;
                    current[v] = 0;
                    stats.operations += 1;
                    continue;
                }
                let a = r.out[v][current[v]];
                let w = r.head[a];
                if r.cap[a] > 0 && cost[a] + pot[v] - pot[w] < 0 {
                    let f = excess[v].min(r.cap[a]);
                    r.cap[a] -= f;
                    r.cap[a ^ 1] += f;
                    excess[v] -= f;
                    excess[w] += f;
                    stats.operations += 1;
                    if excess[w] > 0 && !queued[w] {
                        active.push_back(w);
                        queued[w] = true;
                    }
                } else {
                    current[v] += 1;
                }
            }
        }
        if eps == 1 {
            break;
        }
    }
    let flows = (0..p.arcs.len()).map(|i| r.cap[2 * i + 1]).collect();
    (flows, pot, scale, stats)
}
