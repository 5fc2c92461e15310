use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{wrap_to_f32, WrappedField};
use crate::error::{Error, Result};

/// Smooth synthetic phase surface, radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum Surface {
    /// Plane with the given slopes in rad/pixel.
    Ramp { slope_row: f64, slope_col: f64 },
    /// Centred Gaussian; `width` is the standard deviation as a fraction of
    /// the smaller grid dimension.
    Bump { amplitude: f64, width: f64 },
    /// `amplitude · sin(2πc/period) · cos(2πr/period)`.
    Sinusoid { amplitude: f64, period: f64 },
    /// Sum of three Gaussians of mixed sign over `[−3, 3]²`.
    Peaks { amplitude: f64 },
}

impl Surface {
    pub fn name(&self) -> &'static str {
        match self {
            Surface::Ramp { .. } => "ramp",
            Surface::Bump { .. } => "bump",
            Surface::Sinusoid { .. } => "sinusoid",
            Surface::Peaks { .. } => "peaks",
        }
    }

    /// The four default desk-scale shapes. Their noiseless gradients stay
    /// below π/2 per pixel on grids of 32×32 and larger, so every template
    /// arc (up to length 2) satisfies the Itoh condition.
    pub fn defaults() -> [Surface; 4] {
        [
            Surface::Ramp {
                slope_row: 0.3,
                slope_col: 0.5,
            },
            Surface::Bump {
                amplitude: 12.0,
                width: 0.2,
            },
            Surface::Sinusoid {
                amplitude: 5.0,
                period: 32.0,
            },
            Surface::Peaks { amplitude: 0.6 },
        ]
    }

    pub fn at(&self, row: usize, col: usize, rows: usize, cols: usize) -> f64 {
        let (r, c) = (row as f64, col as f64);
        match *self {
            Surface::Ramp {
                slope_row,
                slope_col,
            } => slope_row * r + slope_col * c,
            Surface::Bump { amplitude, width } => {
                let s = width * rows.min(cols) as f64;
                let (dr, dc) = (r - (rows as f64 - 1.0) / 2.0, c - (cols as f64 - 1.0) / 2.0);
                amplitude * (-(dr * dr + dc * dc) / (2.0 * s * s)).exp()
            }
            Surface::Sinusoid { amplitude, period } => {
                amplitude * (TAU * c / period).sin() * (TAU * r / period).cos()
            }
            Surface::Peaks { amplitude } => {
                let x = 6.0 * c / (cols as f64 - 1.0).max(1.0) - 3.0;
                let y = 6.0 * r / (rows as f64 - 1.0).max(1.0) - 3.0;
                let p = 3.0 * (1.0 - x).powi(2) * (-x * x - (y + 1.0).powi(2)).exp()
                    - 10.0 * (x / 5.0 - x.powi(3) - y.powi(5)) * (-x * x - y * y).exp()
                    - (-(x + 1.0).powi(2) - y * y).exp() / 3.0;
                amplitude * p
            }
        }
    }
}

impl fmt::Display for Surface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Surface::Ramp {
                slope_row,
                slope_col,
            } => write!(f, "ramp:{slope_row},{slope_col}"),
            Surface::Bump { amplitude, width } => write!(f, "bump:{amplitude},{width}"),
            Surface::Sinusoid { amplitude, period } => write!(f, "sinusoid:{amplitude},{period}"),
            Surface::Peaks { amplitude } => write!(f, "peaks:{amplitude}"),
        }
    }
}

/// `name[:p1[,p2]]`; omitted parameters take the defaults.
impl FromStr for Surface {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = s.split_once(':').unwrap_or((s, ""));
        let params = args
            .split(',')
            .filter(|a| !a.trim().is_empty())
            .map(|a| {
                a.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::UnknownShape(s.to_string()))
            })
            .collect::<Result<Vec<f64>>>()?;
        let [ramp, bump, sinusoid, peaks] = Surface::defaults();
        let template = match name.trim().to_ascii_lowercase().as_str() {
            "ramp" => ramp,
            "bump" => bump,
            "sinusoid" => sinusoid,
            "peaks" => peaks,
            _ => return Err(Error::UnknownShape(s.to_string())),
        };
        let arity = if matches!(template, Surface::Peaks { .. }) { 1 } else { 2 };
        if params.len() > arity {
            return Err(Error::UnknownShape(s.to_string()));
        }
        let p = |i: usize, d: f64| params.get(i).copied().unwrap_or(d);
        Ok(match template {
            Surface::Ramp {
                slope_row,
                slope_col,
            } => match params.len() {
                // A single slope applies to both axes.
                1 => Surface::Ramp {
                    slope_row: params[0],
                    slope_col: params[0],
                },
                _ => Surface::Ramp {
                    slope_row: p(0, slope_row),
                    slope_col: p(1, slope_col),
                },
            },
            Surface::Bump { amplitude, width } => Surface::Bump {
                amplitude: p(0, amplitude),
                width: p(1, width),
            },
            Surface::Sinusoid { amplitude, period } => Surface::Sinusoid {
                amplitude: p(0, amplitude),
                period: p(1, period),
            },
            Surface::Peaks { amplitude } => Surface::Peaks {
                amplitude: p(0, amplitude),
            },
        })
    }
}

/// Noiseless surface values, row-major.
pub fn true_surface(surface: &Surface, rows: usize, cols: usize) -> Vec<f64> {
    (0..rows * cols)
        .map(|v| surface.at(v / cols, v % cols, rows, cols))
        .collect()
}

/// Surface plus zero-mean Gaussian noise of variance `noise_variance`,
/// wrapped to `[−π, π)`. Ground truth cycle counts are taken from the noisy
/// field against the stored (f32) wrapped phase.
pub fn synthesize(
    surface: &Surface,
    rows: usize,
    cols: usize,
    noise_variance: f64,
    seed: u64,
) -> Result<WrappedField> {
    if !(noise_variance >= 0.0) || !noise_variance.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "noise variance must be a nonnegative number, got {noise_variance}"
        )));
    }
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidDimension { rows, cols });
    }
    let clean = true_surface(surface, rows, cols);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise_variance.sqrt())
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut psi = Vec::with_capacity(clean.len());
    let mut truth = Vec::with_capacity(clean.len());
    for phi in clean {
        let noisy = if noise_variance > 0.0 {
            phi + normal.sample(&mut rng)
        } else {
            phi
        };
        let w = wrap_to_f32(noisy);
        truth.push(((noisy - f64::from(w)) / (2.0 * PI)).round() as i32);
        psi.push(w);
    }
    Ok(WrappedField {
        rows,
        cols,
        psi,
        truth_n: Some(truth),
        noise_variance,
        surface: Some(*surface),
        seed: Some(seed),
    })
}
