//! Wrapped phase fields, synthetic interferograms, edge costs and the
//! integration of flows back to cycle counts.

mod costs;
mod surface;
mod unwrap;

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::graph::UnwrapGraph;

pub use costs::{compute_costs, CostModel, CostScheme, COST_UNITS};
pub use surface::{synthesize, true_surface, Surface};
pub use unwrap::{inconsistency, integrate_flows, potentials_from_flows, UnwrapResult};

/// Nearest integer to `(psi_i − psi_j) / 2π`, ties away from zero.
pub fn wrapped_gradient(psi_i: f64, psi_j: f64) -> i64 {
    ((psi_i - psi_j) / TAU).round() as i64
}

/// Wraps a phase into `[−π, π)`.
pub fn wrap(phase: f64) -> f64 {
    let w = phase - TAU * ((phase + PI) / TAU).floor();
    if w >= PI {
        w - TAU
    } else {
        w
    }
}

/// Wrapped phase stored as `f32` (the on-disk precision), nudged to the
/// nearest representable value inside `[−π, π)`.
pub fn wrap_to_f32(phase: f64) -> f32 {
    let mut x = wrap(phase) as f32;
    if f64::from(x) >= PI {
        x = f32::from_bits(x.to_bits() - 1);
    }
    if f64::from(x) < -PI {
        // Negative floats: decreasing the bit pattern moves toward zero.
        x = f32::from_bits(x.to_bits() - 1);
    }
    x
}

/// Grid of measured phases with optional ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WrappedField {
    pub rows: usize,
    pub cols: usize,
    /// Row-major wrapped phase in `[−π, π)`, radians.
    pub psi: Vec<f32>,
    /// Ground-truth cycle counts, synthetic fields only.
    pub truth_n: Option<Vec<i32>>,
    /// Noise variance in rad², metadata only.
    pub noise_variance: f64,
    pub surface: Option<Surface>,
    pub seed: Option<u64>,
}

impl WrappedField {
    pub fn new(rows: usize, cols: usize, psi: Vec<f32>) -> Self {
        WrappedField {
            rows,
            cols,
            psi,
            truth_n: None,
            noise_variance: 0.0,
            surface: None,
            seed: None,
        }
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }

    pub fn psi(&self, v: usize) -> f64 {
        f64::from(self.psi[v])
    }

    /// Whether every stored phase lies in `[−π, π)`.
    pub fn is_wrapped(&self) -> bool {
        self.psi.iter().all(|&p| (-PI..PI).contains(&f64::from(p)))
    }

    /// `δ'` for every edge of `g` in its canonical (tail to head) direction.
    pub fn wrapped_gradients(&self, g: &UnwrapGraph) -> Vec<i64> {
        g.edges()
            .iter()
            .map(|e| wrapped_gradient(self.psi(e.tail), self.psi(e.head)))
            .collect()
    }
}
