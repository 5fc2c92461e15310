use super::{DenseLP, OracleSolution};
use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-6;
const INTEGRALITY_TOL: f64 = 1e-7;
/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const STALL_LIMIT: u32 = 5000;

/// Dense tableau over the original columns followed by one artificial
/// column per row.
struct Tableau {
    m: usize,
    cols: usize,
    t: Vec<f64>,
    beta: Vec<f64>,
    basis: Vec<usize>,
    row_of: Vec<Option<usize>>,
    at_upper: Vec<bool>,
    upper: Vec<f64>,
    eligible: Vec<bool>,
    d: Vec<f64>,
    pivots: u64,
}

enum Step {
    Optimal,
    Unbounded,
    Moved { degenerate: bool },
}

impl Tableau {
    fn row(&self, r: usize) -> &[f64] {
        &self.t[r * self.cols..(r + 1) * self.cols]
    }

    fn value(&self, j: usize) -> f64 {
        match self.row_of[j] {
            Some(r) => self.beta[r],
            None if self.at_upper[j] => self.upper[j],
            None => 0.0,
        }
    }

    /// Reduced costs for `costs` against the current basis.
    fn price(&mut self, costs: &[f64]) {
        self.d = costs.to_vec();
        for r in 0..self.m {
            let cb = costs[self.basis[r]];
            if cb != 0.0 {
                let row = &self.t[r * self.cols..(r + 1) * self.cols];
                for (d, &v) in self.d.iter_mut().zip(row) {
                    *d -= cb * v;
                }
            }
        }
    }

    fn choose_entering(&self, bland: bool) -> Option<usize> {
        let mut best = None;
        let mut best_violation = COST_TOL;
        for j in 0..self.cols {
            if !self.eligible[j] || self.row_of[j].is_some() {
                continue;
            }
            let violation = if self.at_upper[j] { self.d[j] } else { -self.d[j] };
            if violation > best_violation {
                if bland {
                    return Some(j);
                }
                best_violation = violation;
                best = Some(j);
            }
        }
        best
    }

    fn step(&mut self, bland: bool) -> Step {
        let Some(j) = self.choose_entering(bland) else {
            return Step::Optimal;
        };
        // Increasing from the lower bound or decreasing from the upper.
        let s = if self.at_upper[j] { -1.0 } else { 1.0 };
        let mut theta = self.upper[j];
        let mut leave: Option<(usize, bool)> = None;
        for r in 0..self.m {
            let a = self.t[r * self.cols + j];
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let k = self.basis[r];
            // Basic value moves by −s·a per unit step.
            let rate = -s * a;
            let (limit, to_upper) = if rate < 0.0 {
                (self.beta[r] / -rate, false)
            } else if self.upper[k].is_finite() {
                ((self.upper[k] - self.beta[r]) / rate, true)
            } else {
                continue;
            };
            let limit = limit.max(0.0);
            if limit < theta - 1e-12 {
                theta = limit;
                leave = Some((r, to_upper));
            } else if limit <= theta + 1e-12 {
                // Ties: a bound flip wins, then the lowest basic index.
                if let Some((lr, _)) = leave {
                    if k < self.basis[lr] {
                        leave = Some((r, to_upper));
                    }
                }
            }
        }
        if !theta.is_finite() {
            return Step::Unbounded;
        }
        self.pivots += 1;
        for r in 0..self.m {
            let a = self.t[r * self.cols + j];
            if a != 0.0 {
                self.beta[r] -= s * theta * a;
            }
        }
        let degenerate = theta <= 1e-12;
        match leave {
            None => {
                self.at_upper[j] = !self.at_upper[j];
            }
            Some((r, to_upper)) => {
                let entering_value = if s > 0.0 { theta } else { self.upper[j] - theta };
                let k = self.basis[r];
                self.row_of[k] = None;
                self.at_upper[k] = to_upper;
                self.pivot(r, j);
                self.beta[r] = entering_value;
                self.at_upper[j] = false;
            }
        }
        Step::Moved { degenerate }
    }

    /// Makes column `j` basic in row `r`.
    fn pivot(&mut self, r: usize, j: usize) {
        let cols = self.cols;
        let piv = self.t[r * cols + j];
        let mut nz: Vec<(usize, f64)> = Vec::new();
        for c in 0..cols {
            let v = self.t[r * cols + c];
            if v != 0.0 {
                let v = v / piv;
                self.t[r * cols + c] = v;
                nz.push((c, v));
            }
        }
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * cols + j];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[i * cols..(i + 1) * cols];
            for &(c, v) in &nz {
                let x = row[c] - f * v;
                row[c] = if x.abs() < 1e-11 { 0.0 } else { x };
            }
            row[j] = 0.0;
        }
        let f = self.d[j];
        if f != 0.0 {
            for &(c, v) in &nz {
                self.d[c] -= f * v;
            }
            self.d[j] = 0.0;
        }
        self.basis[r] = j;
        self.row_of[j] = Some(r);
    }

    fn optimize(&mut self) -> Result<()> {
        let mut stall = 0;
        loop {
            match self.step(stall >= STALL_LIMIT) {
                Step::Optimal => return Ok(()),
                Step::Unbounded => return Err(Error::Unbounded),
                Step::Moved { degenerate: true } => stall += 1,
                Step::Moved { degenerate: false } => stall = 0,
            }
        }
    }
}

/// Two-phase bounded-variable primal simplex on a dense tableau. Entering
/// columns follow Dantzig's rule; after a run of degenerate pivots the
/// solver falls back to Bland's rule (lowest eligible index, ties in the
/// ratio test to the lowest basic index) until the objective moves again.
/// The optimal vertex must be integral within 1e-7 and is returned rounded.
pub fn solve_lp_exact(p: &DenseLP) -> Result<OracleSolution> {
    p.validate()?;
    let (m, n) = (p.num_rows(), p.num_vars());
    let cols = n + m;
    let mut t = vec![0.0; m * cols];
    let mut beta = vec![0.0; m];
    for (r, (row, &b)) in p.a.iter().zip(&p.b).enumerate() {
        let sign = if b < 0 { -1.0 } else { 1.0 };
        for (j, &v) in row.iter().enumerate() {
            t[r * cols + j] = sign * f64::from(v);
        }
        t[r * cols + n + r] = 1.0;
        beta[r] = sign * b as f64;
    }
    let mut upper: Vec<f64> = p.upper.iter().map(|&u| u as f64).collect();
    upper.extend(std::iter::repeat_n(f64::INFINITY, m));
    let mut row_of = vec![None; cols];
    for r in 0..m {
        row_of[n + r] = Some(r);
    }
    let mut tab = Tableau {
        m,
        cols,
        t,
        beta,
        basis: (n..cols).collect(),
        row_of,
        at_upper: vec![false; cols],
        upper,
        eligible: vec![true; cols],
        d: Vec::new(),
        pivots: 0,
    };

    // Phase I: minimise the sum of artificials.
    let mut phase1 = vec![0.0; cols];
    phase1[n..].fill(1.0);
    tab.price(&phase1);
    tab.optimize()?;
    let infeasibility: f64 = (n..cols).map(|j| tab.value(j)).sum();
    if infeasibility > 1e-6 {
        return Err(Error::NoFeasibleSolution);
    }
    // Drive remaining (zero) artificials out of the basis; rows where that
    // is impossible are redundant and dropped.
    let mut dropped = vec![false; m];
    for r in 0..m {
        if tab.basis[r] < n {
            continue;
        }
        let entering = (0..n).find(|&j| tab.row_of[j].is_none() && tab.row(r)[j].abs() > PIVOT_TOL);
        match entering {
            Some(j) => {
                let value = tab.value(j);
                let k = tab.basis[r];
                tab.row_of[k] = None;
                tab.pivot(r, j);
                tab.beta[r] = value;
                tab.at_upper[j] = false;
            }
            None => dropped[r] = true,
        }
    }
    for j in n..cols {
        tab.eligible[j] = false;
    }
    if dropped.iter().any(|&d| d) {
        tab = compact(tab, &dropped);
    }

    // Phase II.
    let mut costs: Vec<f64> = p.costs.iter().map(|&c| c as f64).collect();
    costs.extend(std::iter::repeat_n(0.0, tab.cols - n));
    tab.price(&costs);
    tab.optimize()?;

    let mut x = Vec::with_capacity(n);
    for j in 0..n {
        let v = tab.value(j);
        let rounded = v.round();
        if (v - rounded).abs() > INTEGRALITY_TOL {
            return Err(Error::NotIntegral { var: j, value: v });
        }
        x.push(rounded as i64);
    }
    Ok(OracleSolution {
        objective: p.objective(&x),
        x,
        work: tab.pivots,
    })
}

fn compact(tab: Tableau, dropped: &[bool]) -> Tableau {
    let keep: Vec<usize> = (0..tab.m).filter(|&r| !dropped[r]).collect();
    let mut t = Vec::with_capacity(keep.len() * tab.cols);
    for &r in &keep {
        t.extend_from_slice(tab.row(r));
    }
    let mut row_of = vec![None; tab.cols];
    let basis: Vec<usize> = keep.iter().map(|&r| tab.basis[r]).collect();
    for (i, &k) in basis.iter().enumerate() {
        row_of[k] = Some(i);
    }
    Tableau {
        m: keep.len(),
        cols: tab.cols,
        t,
        beta: keep.iter().map(|&r| tab.beta[r]).collect(),
        basis,
        row_of,
        at_upper: tab.at_upper,
        upper: tab.upper,
        eligible: tab.eligible,
        d: tab.d,
        pivots: tab.pivots,
    }
}
