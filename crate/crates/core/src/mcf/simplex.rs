use std::collections::VecDeque;

use super::{McfProblem, SolverStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Tree,
    Lower,
    Upper,
}

struct Tree {
    parent: Vec<usize>,
    pred: Vec<usize>,
    depth: Vec<usize>,
    pi: Vec<i64>,
}

/// Primal network simplex with an artificial root joined to every node by a
/// big-M arc. Leaving arcs follow Cunningham's last-blocking rule so the
/// tree stays strongly feasible and degenerate pivots cannot cycle. Entering
/// arcs are the most violating (lowest index on ties). Expects a feasible
/// problem with nonnegative costs.
pub(super) fn solve(p: &McfProblem) -> (Vec<i64>, Vec<i64>, i64, SolverStats) {
    let n = p.num_nodes();
    let m = p.arcs.len();
    let root = n;
    let inf = i64::MAX / 4;
    let big_m = 1 + p
        .arcs
        .iter()
        .map(|a| a.cost.saturating_mul(a.capacity))
        .fold(0i64, i64::saturating_add);

    let mut from: Vec<usize> = p.arcs.iter().map(|a| a.from).collect();
    let mut to: Vec<usize> = p.arcs.iter().map(|a| a.to).collect();
    let mut cap: Vec<i64> = p.arcs.iter().map(|a| a.capacity).collect();
    let mut cost: Vec<i64> = p.arcs.iter().map(|a| a.cost).collect();
    let mut flow = vec![0i64; m];
    let mut state = vec![State::Lower; m];
    for (v, &res) in p.residues.iter().enumerate() {
        // Supply is outflow − inflow. Zero-flow artificials point away from
        // the root, as strong feasibility requires.
        let supply = -res;
        if supply > 0 {
            from.push(v);
            to.push(root);
        } else {
            from.push(root);
            to.push(v);
        }
        cap.push(inf);
        cost.push(big_m);
        flow.push(supply.abs());
        state.push(State::Tree);
    }
    let total = m + n;
    let mut tree_arcs: Vec<usize> = (m..total).collect();
    let mut slot = vec![usize::MAX; total];
    for (i, &a) in tree_arcs.iter().enumerate() {
        slot[a] = i;
    }

    let mut stats = SolverStats::default();
    let mut t = build_tree(n + 1, root, &from, &to, &cost, &tree_arcs);
    loop {
        // Pricing.
        let mut entering = None;
        let mut best = 0i64;
        for a in 0..total {
            let rc = cost[a] + t.pi[from[a]] - t.pi[to[a]];
            let violation = match state[a] {
                State::Lower if cap[a] > 0 => -rc,
                State::Upper => rc,
                _ => 0,
            };
            if violation > best {
                best = violation;
                entering = Some(a);
            }
        }
        let Some(e) = entering else {
            break;
        };
        stats.iterations += 1;

        let increase = state[e] == State::Lower;
        let (first, second) = if increase { (from[e], to[e]) } else { (to[e], from[e]) };
        // Cycle in traversal order: join down to `first`, the entering arc,
        // then `second` up to join. Entries are (arc, flow increases).
        let mut down = Vec::new();
        let mut up = Vec::new();
        let (mut x, mut y) = (first, second);
        while x != y {
            if t.depth[x] >= t.depth[y] {
                let a = t.pred[x];
                down.push((a, to[a] == x));
                x = t.parent[x];
            } else {
                let a = t.pred[y];
                up.push((a, from[a] == y));
                y = t.parent[y];
            }
        }
        let mut cycle: Vec<(usize, bool)> = down.into_iter().rev().collect();
        cycle.push((e, increase));
        cycle.extend(up);

        let residual = |a: usize, inc: bool| if inc { cap[a] - flow[a] } else { flow[a] };
        let mut delta = i64::MAX;
        let mut leaving = 0;
        for (i, &(a, inc)) in cycle.iter().enumerate() {
            let r = residual(a, inc);
            if r <= delta {
                delta = r;
                leaving = i;
            }
        }
        if delta == 0 {
            stats.operations += 1;
        }
        for &(a, inc) in &cycle {
            flow[a] += if inc { delta } else { -delta };
        }
        let l = cycle[leaving].0;
        if l == e {
            state[e] = if increase { State::Upper } else { State::Lower };
            continue;
        }
        state[l] = if flow[l] == 0 { State::Lower } else { State::Upper };
        state[e] = State::Tree;
        let s = slot[l];
        tree_arcs[s] = e;
        slot[e] = s;
        slot[l] = usize::MAX;
        t = build_tree(n + 1, root, &from, &to, &cost, &tree_arcs);
    }
    debug_assert!(flow[m..].iter().all(|&f| f == 0), "artificial flow left");
    flow.truncate(m);
    t.pi.truncate(n);
    (flow, t.pi, 1, stats)
}

fn build_tree(
    nodes: usize,
    root: usize,
    from: &[usize],
    to: &[usize],
    cost: &[i64],
    tree_arcs: &[usize],
) -> Tree {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    for &a in tree_arcs {
        adj[from[a]].push(a);
        adj[to[a]].push(a);
    }
    let mut t = Tree {
        parent: vec![usize::MAX; nodes],
        pred: vec![usize::MAX; nodes],
        depth: vec![0; nodes],
        pi: vec![0; nodes],
    };
    let mut seen = vec![false; nodes];
    seen[root] = true;
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        for &a in &adj[v] {
            let w = if from[a] == v { to[a] } else { from[a] };
            if seen[w] {
                continue;
            }
            seen[w] = true;
            t.parent[w] = v;
            t.pred[w] = a;
            t.depth[w] = t.depth[v] + 1;
            t.pi[w] = if from[a] == v { t.pi[v] + cost[a] } else { t.pi[v] - cost[a] };
            queue.push_back(w);
        }
    }
    t
}
