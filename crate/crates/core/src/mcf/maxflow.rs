use std::collections::VecDeque;

use super::McfProblem;
use crate::error::{Error, Result};

/// Residual graph with paired arcs: `2i` forward, `2i + 1` reverse.
pub(super) struct Residual {
    pub head: Vec<usize>,
    pub cap: Vec<i64>,
    pub out: Vec<Vec<usize>>,
}

impl Residual {
    pub fn new(num_nodes: usize) -> Self {
        Residual {
            head: Vec::new(),
            cap: Vec::new(),
            out: vec![Vec::new(); num_nodes],
        }
    }

    pub fn add(&mut self, from: usize, to: usize, cap: i64) -> usize {
        let id = self.head.len();
        self.head.push(to);
        self.cap.push(cap);
        self.out[from].push(id);
        self.head.push(from);
        self.cap.push(0);
        self.out[to].push(id + 1);
        id
    }
}

/// Dinic's blocking-flow max flow; returns the flow value.
fn dinic(r: &mut Residual, s: usize, t: usize) -> i64 {
    let n = r.out.len();
    let mut total = 0;
    let mut level = vec![usize::MAX; n];
    let mut next = vec![0usize; n];
    loop {
        level.fill(usize::MAX);
        level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for &a in &r.out[v] {
                let w = r.head[a];
                if r.cap[a] > 0 && level[w] == usize::MAX {
                    level[w] = level[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        if level[t] == usize::MAX {
            return total;
        }
        next.fill(0);
        loop {
            let pushed = augment(r, &level, &mut next, s, t, i64::MAX);
            if pushed == 0 {
                break;
            }
            total += pushed;
        }
    }
}

fn augment(r: &mut Residual, level: &[usize], next: &mut [usize], v: usize, t: usize, limit: i64) -> i64 {
    if v == t {
        return limit;
    }
    while next[v] < r.out[v].len() {
        let a = r.out[v][next[v]];
        let w = r.head[a];
        if r.cap[a] > 0 && level[w] == level[v] + 1 {
            let pushed = augment(r, level, next, w, t, limit.min(r.cap[a]));
            if pushed > 0 {
                r.cap[a] -= pushed;
                r.cap[a ^ 1] += pushed;
                return pushed;
            }
        }
        next[v] += 1;
    }
    0
}

/// Checks that the residues can be routed within the arc capacities. On
/// failure the error carries the source side of a minimum cut: the nodes
/// whose net excess exceeds the capacity leaving them.
pub(super) fn check_feasible(p: &McfProblem) -> Result<()> {
    let n = p.num_nodes();
    let (s, t) = (n, n + 1);
    let mut r = Residual::new(n + 2);
    for a in &p.arcs {
        r.add(a.from, a.to, a.capacity);
    }
    let mut supply = 0;
    for (v, &res) in p.residues.iter().enumerate() {
        if res < 0 {
            r.add(s, v, -res);
            supply -= res;
        } else if res > 0 {
            r.add(v, t, res);
        }
    }
    if dinic(&mut r, s, t) == supply {
        return Ok(());
    }
    let mut seen = vec![false; n + 2];
    seen[s] = true;
    let mut stack = vec![s];
    while let Some(v) = stack.pop() {
        for &a in &r.out[v] {
            let w = r.head[a];
            if r.cap[a] > 0 && !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    let cut: Vec<usize> = (0..n).filter(|&v| seen[v]).collect();
    let required = cut.iter().map(|&v| -p.residues[v]).sum();
    let capacity = p
        .arcs
        .iter()
        .filter(|a| seen[a.from] && !seen[a.to])
        .map(|a| a.capacity)
        .sum();
    Err(Error::Infeasible {
        cut,
        required,
        capacity,
    })
}
