use std::collections::HashMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{arc_index, CycleBasis, UnwrapGraph};
use crate::error::{Error, Result};

/// One cycle equation: `sum(coef * δ) = rhs` over arc variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintRow {
    pub entries: Vec<(usize, i8)>,
    pub rhs: i64,
}

/// The cycle constraint system over `2|E|` arc variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintSpace {
    pub num_arcs: usize,
    pub rows: Vec<ConstraintRow>,
}

impl ConstraintSpace {
    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn dense(&self) -> Vec<Vec<i8>> {
        self.rows
            .iter()
            .map(|row| {
                let mut dense = vec![0i8; self.num_arcs];
                for &(a, v) in &row.entries {
                    dense[a] += v;
                }
                dense
            })
            .collect()
    }

    /// `A·δ − b` per row.
    pub fn residuals(&self, flows: &[i64]) -> Vec<i64> {
        self.rows
            .iter()
            .map(|row| {
                row.entries
                    .iter()
                    .map(|&(a, v)| i64::from(v) * flows[a])
                    .sum::<i64>()
                    - row.rhs
            })
            .collect()
    }

    /// First violated row, if any.
    pub fn check(&self, flows: &[i64]) -> Result<()> {
        match self.residuals(flows).iter().position(|&r| r != 0) {
            None => Ok(()),
            Some(row) => Err(Error::InconsistentFlow {
                row,
                residual: self.residuals(flows)[row],
            }),
        }
    }
}

/// Sums the edge equations around every fundamental cycle. A step traversed
/// forward contributes `+δ_ij − δ_ji` and `+δ'_ij`; a backward step the
/// negation. `wrapped` holds `δ'` per edge in its canonical direction.
pub fn build_constraints(
    g: &UnwrapGraph,
    basis: &CycleBasis,
    wrapped: &[i64],
) -> Result<ConstraintSpace> {
    if wrapped.len() != g.num_edges() {
        return Err(Error::InvalidParameter(format!(
            "expected {} wrapped gradients, got {}",
            g.num_edges(),
            wrapped.len()
        )));
    }
    let rows = basis
        .cycles()
        .iter()
        .map(|cycle| {
            let mut entries = Vec::with_capacity(2 * cycle.steps.len());
            let mut rhs = 0;
            for s in &cycle.steps {
                let sign: i8 = if s.forward { 1 } else { -1 };
                entries.push((arc_index(s.edge, true), sign));
                entries.push((arc_index(s.edge, false), -sign));
                rhs += i64::from(sign) * wrapped[s.edge];
            }
            entries.sort_unstable_by_key(|&(a, _)| a);
            ConstraintRow { entries, rhs }
        })
        .collect();
    Ok(ConstraintSpace {
        num_arcs: g.num_arcs(),
        rows,
    })
}

/// Square submatrix whose determinant left `{-1, 0, 1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TuViolation {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub determinant: i64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TuReport {
    /// `(order, determinants evaluated)` for exhaustive orders.
    pub exhaustive: Vec<(usize, u64)>,
    /// `(order, determinants evaluated)` for sampled orders.
    pub sampled: Vec<(usize, u64)>,
    pub violation: Option<TuViolation>,
}

impl TuReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

/// Determinant check over square submatrices.
///
/// Orders `1..=exhaustive_order` are enumerated completely. Columns equal up
/// to sign (the `δ_ij`/`δ_ji` pairs) are collapsed to one representative and
/// zero columns dropped: any submatrix using two columns of a class or a
/// zero column is singular, and swapping a column for its negation only
/// flips the sign, so the enumeration still covers every submatrix.
/// `samples` lists `(order, count)` pairs drawn with a seeded generator.
pub fn check_total_unimodularity(
    cs: &ConstraintSpace,
    exhaustive_order: usize,
    samples: &[(usize, usize)],
    seed: u64,
) -> TuReport {
    let dense = cs.dense();
    let m = dense.len();
    let reps = column_representatives(&dense, cs.num_arcs);
    // Per row, the representative columns it touches.
    let touching: Vec<Vec<usize>> = (0..m)
        .map(|r| {
            reps.iter()
                .enumerate()
                .filter(|(_, &c)| dense[r][c] != 0)
                .map(|(i, _)| i)
                .collect()
        })
        .collect();

    let mut report = TuReport::default();
    let mut buf = Vec::new();
    for k in 1..=exhaustive_order.min(m) {
        let mut count = 0u64;
        let mut rows: Vec<usize> = (0..k).collect();
        loop {
            let mut cand: Vec<usize> = rows.iter().flat_map(|&r| touching[r].iter().copied()).collect();
            cand.sort_unstable();
            cand.dedup();
            if cand.len() >= k {
                let mut pick: Vec<usize> = (0..k).collect();
                loop {
                    let cols: Vec<usize> = pick.iter().map(|&i| reps[cand[i]]).collect();
                    let det = determinant(&dense, &rows, &cols, &mut buf);
                    count += 1;
                    if det.abs() > 1 {
                        report.exhaustive.push((k, count));
                        report.violation = Some(TuViolation {
                            rows: rows.clone(),
                            cols,
                            determinant: det,
                        });
                        return report;
                    }
                    if !next_combination(&mut pick, cand.len()) {
                        break;
                    }
                }
            }
            if !next_combination(&mut rows, m) {
                break;
            }
        }
        report.exhaustive.push((k, count));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for &(k, n) in samples {
        if k == 0 || k > m || k > reps.len() {
            report.sampled.push((k, 0));
            continue;
        }
        for i in 0..n {
            let mut rows = sample(&mut rng, m, k).into_vec();
            rows.sort_unstable();
            let mut cand: Vec<usize> = rows.iter().flat_map(|&r| touching[r].iter().copied()).collect();
            cand.sort_unstable();
            cand.dedup();
            let pool: Vec<usize> = if cand.len() >= k { cand } else { (0..reps.len()).collect() };
            let mut cols: Vec<usize> = sample(&mut rng, pool.len(), k)
                .into_iter()
                .map(|i| reps[pool[i]])
                .collect();
            cols.sort_unstable();
            let det = determinant(&dense, &rows, &cols, &mut buf);
            if det.abs() > 1 {
                report.sampled.push((k, i as u64 + 1));
                report.violation = Some(TuViolation {
                    rows,
                    cols,
                    determinant: det,
                });
                return report;
            }
        }
        report.sampled.push((k, n as u64));
    }
    report
}

/// One column index per class of nonzero columns equal up to sign.
fn column_representatives(dense: &[Vec<i8>], num_cols: usize) -> Vec<usize> {
    let mut seen: HashMap<Vec<i8>, usize> = HashMap::new();
    let mut reps = Vec::new();
    for c in 0..num_cols {
        let mut col: Vec<i8> = dense.iter().map(|row| row[c]).collect();
        let Some(&lead) = col.iter().find(|&&v| v != 0) else {
            continue;
        };
        if lead < 0 {
            col.iter_mut().for_each(|v| *v = -*v);
        }
        seen.entry(col).or_insert_with(|| {
            reps.push(c);
            c
        });
    }
    reps
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Fraction-free (Bareiss) determinant of the selected submatrix.
fn determinant(dense: &[Vec<i8>], rows: &[usize], cols: &[usize], buf: &mut Vec<i64>) -> i64 {
    let k = rows.len();
    buf.clear();
    for &r in rows {
        buf.extend(cols.iter().map(|&c| i64::from(dense[r][c])));
    }
    let at = |i: usize, j: usize| i * k + j;
    let mut sign = 1;
    let mut prev = 1i64;
    for p in 0..k {
        if buf[at(p, p)] == 0 {
            let Some(swap) = (p + 1..k).find(|&r| buf[at(r, p)] != 0) else {
                return 0;
            };
            for j in 0..k {
                buf.swap(at(p, j), at(swap, j));
            }
            sign = -sign;
        }
        let pivot = buf[at(p, p)];
        for i in p + 1..k {
            for j in p + 1..k {
                buf[at(i, j)] = (buf[at(i, j)] * pivot - buf[at(i, p)] * buf[at(p, j)]) / prev;
            }
        }
        prev = pivot;
    }
    sign * buf[at(k - 1, k - 1)]
}
