use std::collections::BTreeMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::WrappedField;
use crate::error::{Error, Result};
use crate::graph::{arc_index, CycleBasis, UnwrapGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnwrapResult {
    /// Cycle counts, pinned to 0 at `anchor`.
    pub n: Vec<i64>,
    /// `psi + 2π·n`, radians.
    pub phi: Vec<f64>,
    pub anchor: usize,
}

/// Vertex potentials `p` with `p_i − p_j + δ_ij − δ_ji = δ'_ij` on every
/// edge, obtained by walking the basis tree from each root (`p = 0` there)
/// and then checking every back edge.
///
/// `wrapped` is per edge, `flows` per arc. A back edge that fails its
/// equation is reported against its cycle row.
pub fn potentials_from_flows(
    g: &UnwrapGraph,
    basis: &CycleBasis,
    wrapped: &[i64],
    flows: &[i64],
) -> Result<Vec<i64>> {
    if wrapped.len() != g.num_edges() || flows.len() != g.num_arcs() {
        return Err(Error::InvalidParameter(format!(
            "expected {} gradients and {} arc flows, got {} and {}",
            g.num_edges(),
            g.num_arcs(),
            wrapped.len(),
            flows.len()
        )));
    }
    let net = |e: usize| flows[arc_index(e, true)] - flows[arc_index(e, false)];
    let mut p = vec![0i64; g.num_vertices()];
    for &v in basis.tree_order() {
        let Some((u, e)) = basis.parent(v) else {
            continue;
        };
        let edge = g.edge(e);
        p[v] = if edge.tail == u {
            p[u] - wrapped[e] + net(e)
        } else {
            p[u] + wrapped[e] - net(e)
        };
    }
    for (row, &e) in basis.back_edges().iter().enumerate() {
        let edge = g.edge(e);
        let residual = p[edge.tail] - p[edge.head] + net(e) - wrapped[e];
        if residual != 0 {
            // The cycle row closes the back edge head to tail.
            return Err(Error::InconsistentFlow {
                row,
                residual: -residual,
            });
        }
    }
    Ok(p)
}

/// Cycle counts from arc flows. The potentials of the flow equations count
/// cycles with the opposite sign to `phi = psi + 2π·n`, so `n = −p`.
pub fn integrate_flows(
    f: &WrappedField,
    g: &UnwrapGraph,
    basis: &CycleBasis,
    flows: &[i64],
) -> Result<UnwrapResult> {
    if f.len() != g.num_vertices() {
        return Err(Error::InvalidParameter(format!(
            "field has {} pixels, graph has {} vertices",
            f.len(),
            g.num_vertices()
        )));
    }
    if !basis.is_spanning_tree() {
        return Err(Error::Disconnected {
            components: basis.num_components(),
        });
    }
    let wrapped = f.wrapped_gradients(g);
    let p = potentials_from_flows(g, basis, &wrapped, flows)?;
    let n: Vec<i64> = p.iter().map(|&x| -x).collect();
    let phi = n
        .iter()
        .enumerate()
        .map(|(v, &k)| f.psi(v) + TAU * k as f64)
        .collect();
    Ok(UnwrapResult {
        n,
        phi,
        anchor: basis.roots()[0],
    })
}

/// Percentage of pixels whose cycle count differs from `truth` once the
/// free constant is aligned to the most frequent offset (smallest on ties).
pub fn inconsistency(n: &[i64], truth: &[i32]) -> f64 {
    assert_eq!(n.len(), truth.len(), "length mismatch");
    if n.is_empty() {
        return 0.0;
    }
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for (&a, &t) in n.iter().zip(truth) {
        *counts.entry(i64::from(t) - a).or_default() += 1;
    }
    let mut best = (0usize, 0i64);
    for (&offset, &count) in &counts {
        if count > best.0 {
            best = (count, offset);
        }
    }
    100.0 * (n.len() - best.0) as f64 / n.len() as f64
}
