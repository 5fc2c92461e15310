use serde::{Deserialize, Serialize};

use super::{wrap, WrappedField};
use crate::error::{Error, Result};
use crate::graph::UnwrapGraph;

/// Fixed-point multiplier applied to real costs before integer solving.
pub const COST_UNITS: i64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostScheme {
    /// Reliability from the local variance of wrapped gradients.
    #[default]
    Variance,
    Uniform,
}

impl std::str::FromStr for CostScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "variance" => Ok(CostScheme::Variance),
            "uniform" => Ok(CostScheme::Uniform),
            _ => Err(Error::InvalidParameter(format!("unknown cost scheme {s:?}"))),
        }
    }
}

/// Per-edge costs in `[0, 1]`, each a multiple of `1 / COST_UNITS` so the
/// integer form is exact. The metric exponent is fixed at 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub scheme: CostScheme,
    pub costs: Vec<f64>,
}

impl CostModel {
    pub fn uniform(num_edges: usize) -> Self {
        CostModel {
            scheme: CostScheme::Uniform,
            costs: vec![1.0; num_edges],
        }
    }

    /// Costs in units of `1 / COST_UNITS`.
    pub fn units(&self) -> Vec<i64> {
        self.costs.iter().map(|&c| to_units(c)).collect()
    }

    pub fn len(&self) -> usize {
        self.costs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.costs.is_empty()
    }
}

pub(crate) fn to_units(c: f64) -> i64 {
    (c * COST_UNITS as f64).round() as i64
}

pub fn compute_costs(f: &WrappedField, g: &UnwrapGraph, scheme: CostScheme) -> Result<CostModel> {
    if f.len() != g.num_vertices() || f.psi.len() != f.len() {
        return Err(Error::InvalidParameter(format!(
            "field has {} pixels, graph has {} vertices",
            f.psi.len(),
            g.num_vertices()
        )));
    }
    if scheme == CostScheme::Uniform {
        return Ok(CostModel::uniform(g.num_edges()));
    }
    let var = pixel_variance(f);
    let weights: Vec<f64> = g
        .edges()
        .iter()
        .map(|e| {
            let (ra, ca) = (e.tail / f.cols, e.tail % f.cols);
            let (rb, cb) = (e.head / f.cols, e.head % f.cols);
            let mut sum = var[e.tail] + var[e.head];
            let mut count = 2.0;
            if (ra + rb) % 2 == 0 && (ca + cb) % 2 == 0 {
                // Straight length-2 arc: include the pixel it passes over.
                let mid = (ra + rb) / 2 * f.cols + (ca + cb) / 2;
                if mid != e.tail && mid != e.head {
                    sum += var[mid];
                    count += 1.0;
                }
            }
            1.0 / (1.0 + sum / count)
        })
        .collect();
    let max = weights.iter().copied().fold(0.0, f64::max);
    let costs = weights
        .iter()
        .map(|&w| to_units(w / max) as f64 / COST_UNITS as f64)
        .collect();
    Ok(CostModel { scheme, costs })
}

/// Sum of the variances of the wrapped row and column gradients inside the
/// 3×3 window centred on each pixel.
fn pixel_variance(f: &WrappedField) -> Vec<f64> {
    let (rows, cols) = (f.rows, f.cols);
    let dx = |r: usize, c: usize| wrap(f.psi(r * cols + c + 1) - f.psi(r * cols + c));
    let dy = |r: usize, c: usize| wrap(f.psi((r + 1) * cols + c) - f.psi(r * cols + c));
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            let (r0, r1) = (r.saturating_sub(1), (r + 1).min(rows - 1));
            let (c0, c1) = (c.saturating_sub(1), (c + 1).min(cols - 1));
            let mut gx = Vec::with_capacity(9);
            let mut gy = Vec::with_capacity(9);
            for rr in r0..=r1 {
                for cc in c0..=c1 {
                    if cc + 1 < cols {
                        gx.push(dx(rr, cc));
                    }
                    if rr + 1 < rows {
                        gy.push(dy(rr, cc));
                    }
                }
            }
            out[r * cols + c] = variance(&gx) + variance(&gy);
        }
    }
    out
}

fn variance(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_grid_graph, ArcLevel};
    use crate::phase::{synthesize, Surface};

    #[test]
    fn constant_field_has_unit_cost() {
        let g = build_grid_graph(6, 5, ArcLevel::Distance2).unwrap();
        let f = WrappedField::new(6, 5, vec![0.7; 30]);
        let c = compute_costs(&f, &g, CostScheme::Variance).unwrap();
        assert!(c.costs.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn uniform_scheme_is_all_ones() {
        let g = build_grid_graph(4, 4, ArcLevel::Diagonal).unwrap();
        let s = Surface::defaults()[1];
        let f = synthesize(&s, 4, 4, 0.8, 1).unwrap();
        let c = compute_costs(&f, &g, CostScheme::Uniform).unwrap();
        assert_eq!(c.costs, vec![1.0; g.num_edges()]);
        assert_eq!(c.units(), vec![COST_UNITS; g.num_edges()]);
    }

    #[test]
    fn noisy_costs_are_scaled_and_reproducible() {
        let g = build_grid_graph(16, 16, ArcLevel::Diagonal).unwrap();
        let s = Surface::defaults()[1];
        let f = synthesize(&s, 16, 16, 0.6, 7).unwrap();
        let a = compute_costs(&f, &g, CostScheme::Variance).unwrap();
        let b = compute_costs(&synthesize(&s, 16, 16, 0.6, 7).unwrap(), &g, CostScheme::Variance)
            .unwrap();
        assert_eq!(a, b);
        assert!(a.costs.iter().all(|&x| (0.0..=1.0).contains(&x)));
        assert!(a.costs.contains(&1.0));
        assert!(a.costs.iter().any(|&x| x < 1.0));
        for (&x, u) in a.costs.iter().zip(a.units()) {
            assert_eq!(u as f64 / COST_UNITS as f64, x);
        }
    }

    #[test]
    fn noisier_neighbourhoods_cost_less() {
        let g = build_grid_graph(8, 8, ArcLevel::Planar).unwrap();
        let mut psi = vec![0.0f32; 64];
        // Scramble the right half.
        for (v, p) in psi.iter_mut().enumerate() {
            if v % 8 >= 5 {
                *p = [2.5f32, -1.0, 0.3, -2.8][v % 4];
            }
        }
        let f = WrappedField::new(8, 8, psi);
        let c = compute_costs(&f, &g, CostScheme::Variance).unwrap();
        let left = g.find_edge(g.vertex(3, 0), g.vertex(3, 1)).unwrap().0;
        let right = g.find_edge(g.vertex(3, 6), g.vertex(3, 7)).unwrap().0;
        assert!(c.costs[left] > c.costs[right]);
    }

    #[test]
    fn mismatched_field_is_rejected() {
        let g = build_grid_graph(3, 3, ArcLevel::Planar).unwrap();
        let f = WrappedField::new(2, 2, vec![0.0; 4]);
        assert!(compute_costs(&f, &g, CostScheme::Variance).is_err());
    }
}
