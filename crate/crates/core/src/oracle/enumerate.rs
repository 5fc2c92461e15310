use std::collections::HashMap;

use super::{DenseLP, OracleSolution};
use crate::error::{Error, Result};

/// Largest variable count accepted by [`solve_brute_force`].
pub const BRUTE_FORCE_LIMIT: usize = 24;
pub(super) const DEFAULT_SEARCH_LIMIT: u64 = 1 << 32;

/// Exhaustive search over `{0, 1}^n` (variables with upper bound 0 stay 0),
/// visiting points in Gray-code order so each step flips one variable.
pub fn solve_brute_force(p: &DenseLP) -> Result<OracleSolution> {
    p.validate()?;
    let n = p.num_vars();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge(n, BRUTE_FORCE_LIMIT));
    }
    let columns: Vec<Vec<(usize, i64)>> = (0..n)
        .map(|j| {
            p.a.iter()
                .enumerate()
                .filter(|(_, row)| row[j] != 0)
                .map(|(r, row)| (r, i64::from(row[j])))
                .collect()
        })
        .collect();
    let mut residual: Vec<i64> = p.b.iter().map(|&b| -b).collect();
    let mut nonzero = residual.iter().filter(|&&r| r != 0).count();
    let mut x = vec![0i64; n];
    let mut cost = 0i64;
    let mut best: Option<(i64, Vec<i64>)> = (nonzero == 0).then(|| (0, x.clone()));
    for step in 1u64..(1u64 << n) {
        let j = step.trailing_zeros() as usize;
        if p.upper[j] == 0 {
            continue;
        }
        let delta = if x[j] == 0 { 1 } else { -1 };
        x[j] += delta;
        cost += delta * p.costs[j];
        for &(r, a) in &columns[j] {
            let before = residual[r] != 0;
            residual[r] += delta * a;
            match (before, residual[r] != 0) {
                (true, false) => nonzero -= 1,
                (false, true) => nonzero += 1,
                _ => {}
            }
        }
        if nonzero == 0 && best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, x.clone()));
        }
    }
    let (objective, x) = best.ok_or(Error::NoFeasibleSolution)?;
    Ok(OracleSolution {
        objective,
        x,
        work: 1 << n,
    })
}

/// Columns equal up to sign, merged: only their signed sum (`net`) enters
/// the constraints, and each net value has a cheapest realisation.
struct Class {
    pattern: Vec<(usize, i64)>,
    members: Vec<(usize, i64)>,
    lo: i64,
    /// Cheapest cost and member values per net value `lo + i`.
    options: Vec<Option<(i64, Vec<i64>)>>,
}

impl Class {
    fn min_cost(&self) -> i64 {
        self.options.iter().flatten().map(|o| o.0).min().unwrap_or(0)
    }
}

/// Cheapest way to make `Σ s_k x_k = net` for every reachable net, with
/// `0 ≤ x_k ≤ u_k`, by dynamic programming over members.
fn class_options(members: &[(usize, i64)], p: &DenseLP) -> (i64, Vec<Option<(i64, Vec<i64>)>>) {
    let mut table: HashMap<i64, (i64, Vec<i64>)> = HashMap::from([(0, (0, Vec::new()))]);
    for &(j, s) in members {
        let mut next: HashMap<i64, (i64, Vec<i64>)> = HashMap::new();
        for (&net, (cost, vals)) in &table {
            for v in 0..=p.upper[j] {
                let key = net + s * v;
                let c = cost + p.costs[j] * v;
                if next.get(&key).is_none_or(|e| c < e.0) {
                    let mut vals = vals.clone();
                    vals.push(v);
                    next.insert(key, (c, vals));
                }
            }
        }
        table = next;
    }
    let lo = *table.keys().min().unwrap_or(&0);
    let hi = *table.keys().max().unwrap_or(&0);
    let options = (lo..=hi).map(|k| table.remove(&k)).collect();
    (lo, options)
}

/// Per-row table of the cheapest private contribution `w`.
struct PrivateRow {
    lo: i64,
    /// Cost and the chosen net per private class, for `w = lo + i`.
    options: Vec<Option<(i64, Vec<i64>)>>,
    min_cost: i64,
}

fn private_row(classes: &[&Class], coef: &[i64]) -> PrivateRow {
    let mut table: HashMap<i64, (i64, Vec<i64>)> = HashMap::from([(0, (0, Vec::new()))]);
    for (class, &a) in classes.iter().zip(coef) {
        let mut next: HashMap<i64, (i64, Vec<i64>)> = HashMap::new();
        for (&w, (cost, nets)) in &table {
            for (i, opt) in class.options.iter().enumerate() {
                let Some((c, _)) = opt else { continue };
                let net = class.lo + i as i64;
                let key = w + a * net;
                let total = cost + c;
                if next.get(&key).is_none_or(|e| total < e.0) {
                    let mut nets = nets.clone();
                    nets.push(net);
                    next.insert(key, (total, nets));
                }
            }
        }
        table = next;
    }
    let lo = *table.keys().min().unwrap_or(&0);
    let hi = *table.keys().max().unwrap_or(&0);
    let options: Vec<_> = (lo..=hi).map(|k| table.remove(&k)).collect();
    let min_cost = options.iter().flatten().map(|o| o.0).min().unwrap_or(0);
    PrivateRow {
        lo,
        options,
        min_cost,
    }
}

/// Exact integer optimum by depth-first search with bounding.
///
/// Columns equal up to sign are merged into classes. Classes touching a
/// single row are solved in closed form per row by dynamic programming, so
/// the search only branches on the net values of classes shared by two or
/// more rows; for a fundamental-cycle system these are the tree edges that
/// lie on several cycles. Refuses instances whose branching space exceeds
/// `limit` leaves.
pub fn solve_integer_exact(p: &DenseLP, limit: u64) -> Result<OracleSolution> {
    p.validate()?;
    let (m, n) = (p.num_rows(), p.num_vars());

    // Group columns by pattern, normalising the sign so the first nonzero
    // entry is positive.
    let mut by_pattern: HashMap<Vec<(usize, i64)>, usize> = HashMap::new();
    let mut groups: Vec<(Vec<(usize, i64)>, Vec<(usize, i64)>)> = Vec::new();
    for j in 0..n {
        let mut pattern: Vec<(usize, i64)> = (0..m)
            .filter(|&r| p.a[r][j] != 0)
            .map(|r| (r, i64::from(p.a[r][j])))
            .collect();
        let sign = pattern.first().map_or(1, |&(_, v)| v);
        for e in &mut pattern {
            e.1 *= sign;
        }
        let id = *by_pattern.entry(pattern.clone()).or_insert_with(|| {
            groups.push((pattern, Vec::new()));
            groups.len() - 1
        });
        groups[id].1.push((j, sign));
    }
    let classes: Vec<Class> = groups
        .into_iter()
        .map(|(pattern, members)| {
            let (lo, options) = class_options(&members, p);
            Class {
                pattern,
                members,
                lo,
                options,
            }
        })
        .collect();

    // Private classes per row, and the shared classes to branch on.
    let mut private: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut shared = Vec::new();
    let mut fixed_cost = 0;
    for (c, class) in classes.iter().enumerate() {
        match class.pattern.len() {
            0 => fixed_cost += class.min_cost(),
            1 => private[class.pattern[0].0].push(c),
            _ => shared.push(c),
        }
    }
    let rows: Vec<PrivateRow> = (0..m)
        .map(|r| {
            let cls: Vec<&Class> = private[r].iter().map(|&c| &classes[c]).collect();
            let coef: Vec<i64> = private[r].iter().map(|&c| classes[c].pattern[0].1).collect();
            private_row(&cls, &coef)
        })
        .collect();

    // Branch order: repeatedly take a class from the open row with the
    // fewest unordered classes, so rows close early.
    let mut order = Vec::with_capacity(shared.len());
    let mut placed = vec![false; classes.len()];
    let mut remaining: Vec<usize> = vec![0; m];
    for &c in &shared {
        for &(r, _) in &classes[c].pattern {
            remaining[r] += 1;
        }
    }
    while order.len() < shared.len() {
        let row = (0..m)
            .filter(|&r| remaining[r] > 0)
            .min_by_key(|&r| (remaining[r], r))
            .expect("unplaced classes touch some row");
        let c = *shared
            .iter()
            .find(|&&c| !placed[c] && classes[c].pattern.iter().any(|&(r, _)| r == row))
            .expect("row has an unplaced class");
        placed[c] = true;
        order.push(c);
        for &(r, _) in &classes[c].pattern {
            remaining[r] -= 1;
        }
    }
    let space = order
        .iter()
        .map(|&c| classes[c].options.len() as u64)
        .try_fold(1u64, |acc, k| acc.checked_mul(k).filter(|&v| v <= limit));
    if space.is_none() {
        return Err(Error::TooLarge(
            order.len(),
            limit.ilog2() as usize,
        ));
    }

    // Rows close when their last shared class is assigned.
    let mut closes: Vec<Vec<usize>> = vec![Vec::new(); order.len()];
    let mut last = vec![None; m];
    for (depth, &c) in order.iter().enumerate() {
        for &(r, _) in &classes[c].pattern {
            last[r] = Some(depth);
        }
    }
    let mut initial_open_cost = 0;
    let mut closed_at_start = Vec::new();
    for r in 0..m {
        match last[r] {
            Some(d) => {
                closes[d].push(r);
                initial_open_cost += rows[r].min_cost;
            }
            None => closed_at_start.push(r),
        }
    }
    let mut suffix_min = vec![0i64; order.len() + 1];
    for d in (0..order.len()).rev() {
        suffix_min[d] = suffix_min[d + 1] + classes[order[d]].min_cost();
    }

    let mut search = Search {
        classes: &classes,
        rows: &rows,
        b: &p.b,
        order: &order,
        closes: &closes,
        suffix_min: &suffix_min,
        sums: vec![0; m],
        nets: vec![0; classes.len()],
        best: None,
        leaves: 0,
    };
    // Rows without shared classes are settled before branching.
    let mut base = fixed_cost;
    for &r in &closed_at_start {
        match rows[r].cost(p.b[r]) {
            Some(c) => base += c,
            None => return Err(Error::NoFeasibleSolution),
        }
    }
    search.dfs(0, base, initial_open_cost);
    let leaves = search.leaves;
    let (objective, nets) = search.best.ok_or(Error::NoFeasibleSolution)?;

    // Rebuild x: shared nets from the search, private nets from each row's
    // table, member values from each class's table.
    let mut nets = nets;
    for r in 0..m {
        let shared_sum: i64 = classes
            .iter()
            .enumerate()
            .filter(|(_, cl)| cl.pattern.len() > 1)
            .filter_map(|(c, cl)| {
                cl.pattern
                    .iter()
                    .find(|&&(rr, _)| rr == r)
                    .map(|&(_, a)| a * nets[c])
            })
            .sum();
        let w = p.b[r] - shared_sum;
        let (_, private_nets) = rows[r].option(w).expect("search only accepts reachable rows");
        for (&c, &net) in private[r].iter().zip(private_nets) {
            nets[c] = net;
        }
    }
    let mut x = vec![0i64; n];
    for (c, class) in classes.iter().enumerate() {
        let net = if class.pattern.is_empty() {
            // Any net; take the cheapest.
            (0..class.options.len())
                .filter(|&i| class.options[i].is_some())
                .min_by_key(|&i| class.options[i].as_ref().map(|o| o.0))
                .map_or(0, |i| class.lo + i as i64)
        } else {
            nets[c]
        };
        let (_, vals) = class.options[(net - class.lo) as usize]
            .as_ref()
            .expect("chosen net is reachable");
        for (&(j, _), &v) in class.members.iter().zip(vals) {
            x[j] = v;
        }
    }
    debug_assert!(p.is_feasible(&x));
    debug_assert_eq!(p.objective(&x), objective);
    Ok(OracleSolution {
        objective,
        x,
        work: leaves,
    })
}

impl PrivateRow {
    fn option(&self, w: i64) -> Option<&(i64, Vec<i64>)> {
        let i = w - self.lo;
        if i < 0 || i as usize >= self.options.len() {
            return None;
        }
        self.options[i as usize].as_ref()
    }

    fn cost(&self, w: i64) -> Option<i64> {
        self.option(w).map(|o| o.0)
    }
}

struct Search<'a> {
    classes: &'a [Class],
    rows: &'a [PrivateRow],
    b: &'a [i64],
    order: &'a [usize],
    closes: &'a [Vec<usize>],
    suffix_min: &'a [i64],
    /// Shared-class contribution per row so far.
    sums: Vec<i64>,
    nets: Vec<i64>,
    best: Option<(i64, Vec<i64>)>,
    leaves: u64,
}

impl Search<'_> {
    /// `cost` counts assigned classes and closed rows; `open` is the sum of
    /// the cheapest possible private cost of rows still open.
    fn dfs(&mut self, depth: usize, cost: i64, open: i64) {
        let bound = cost + open + self.suffix_min[depth];
        if self.best.as_ref().is_some_and(|(b, _)| bound >= *b) {
            return;
        }
        if depth == self.order.len() {
            self.leaves += 1;
            self.best = Some((cost, self.nets.clone()));
            return;
        }
        let c = self.order[depth];
        let class = &self.classes[c];
        for i in 0..class.options.len() {
            let Some((class_cost, _)) = &class.options[i] else {
                continue;
            };
            let net = class.lo + i as i64;
            for &(r, a) in &class.pattern {
                self.sums[r] += a * net;
            }
            let mut next_cost = cost + class_cost;
            let mut next_open = open;
            let mut feasible = true;
            for &r in &self.closes[depth] {
                match self.rows[r].cost(self.b[r] - self.sums[r]) {
                    Some(rc) => {
                        next_cost += rc;
                        next_open -= self.rows[r].min_cost;
                    }
                    None => {
                        feasible = false;
                        break;
                    }
                }
            }
            if feasible {
                self.nets[c] = net;
                self.dfs(depth + 1, next_cost, next_open);
            }
            for &(r, a) in &class.pattern {
                self.sums[r] -= a * net;
            }
        }
    }
}
