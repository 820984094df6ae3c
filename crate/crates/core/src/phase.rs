//! RIS phase-shift state.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::PhaseResolution;
use crate::error::{Error, Result};

/// Phase of every RIS element, in element order `j = m * L + l`.
///
/// Discrete configurations are stored as grid indices so they stay exactly on
/// the `b`-bit grid; the angle is always derived from the index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PhaseConfig {
    Discrete { bits: u8, indices: Vec<u32> },
    Continuous { theta: Vec<f64> },
}

/// Angle of grid point `index` at `bits` resolution.
pub fn grid_angle(index: u32, bits: u8) -> f64 {
    index as f64 * PI / (1u64 << (bits - 1)) as f64
}

/// Every grid angle at `bits` resolution, in index order.
pub fn grid_angles(bits: u8) -> Vec<f64> {
    (0..1u32 << bits).map(|i| grid_angle(i, bits)).collect()
}

pub fn wrap_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Index of the nearest grid point under circular distance; exact ties go to
/// the smaller index.
pub fn quantize_index(theta: f64, bits: u8) -> u32 {
    let levels = 1u32 << bits;
    let step = TAU / levels as f64;
    let t = wrap_angle(theta);
    let mut best = 0u32;
    let mut best_dist = f64::INFINITY;
    for i in 0..levels {
        let d = (t - i as f64 * step).abs();
        let d = d.min(TAU - d);
        if d < best_dist {
            best_dist = d;
            best = i;
        }
    }
    best
}

/// Nearest `b`-bit grid angle to `theta`.
pub fn quantize_phase(theta: f64, bits: u8) -> f64 {
    grid_angle(quantize_index(theta, bits), bits)
}

impl PhaseConfig {
    pub fn zeros(elements: usize, resolution: PhaseResolution) -> PhaseConfig {
        match resolution {
            PhaseResolution::Bits(bits) => PhaseConfig::Discrete { bits, indices: vec![0; elements] },
            PhaseResolution::Continuous => PhaseConfig::Continuous { theta: vec![0.0; elements] },
        }
    }

    pub fn len(&self) -> usize {
        match self {
            PhaseConfig::Discrete { indices, .. } => indices.len(),
            PhaseConfig::Continuous { theta } => theta.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn resolution(&self) -> PhaseResolution {
        match self {
            PhaseConfig::Discrete { bits, .. } => PhaseResolution::Bits(*bits),
            PhaseConfig::Continuous { .. } => PhaseResolution::Continuous,
        }
    }

    pub fn angle(&self, j: usize) -> f64 {
        match self {
            PhaseConfig::Discrete { bits, indices } => grid_angle(indices[j], *bits),
            PhaseConfig::Continuous { theta } => theta[j],
        }
    }

    pub fn angles(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.angle(j)).collect()
    }

    /// Unit-modulus reflection coefficient `q_j = e^{j theta_j}`.
    pub fn coefficient(&self, j: usize) -> Complex64 {
        Complex64::from_polar(1.0, self.angle(j))
    }

    pub fn coefficients(&self) -> Vec<Complex64> {
        (0..self.len()).map(|j| self.coefficient(j)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PhaseConfig::Discrete { bits, indices } => {
                if !(1..=16).contains(bits) {
                    return Err(Error::InvalidConfig(format!("phase bits {bits} out of range")));
                }
                let levels = 1u32 << bits;
                if let Some(bad) = indices.iter().find(|&&i| i >= levels) {
                    return Err(Error::InvalidConfig(format!(
                        "phase index {bad} outside the {levels}-point grid"
                    )));
                }
            }
            PhaseConfig::Continuous { theta } => {
                if theta.iter().any(|t| !t.is_finite()) {
                    return Err(Error::InvalidConfig("non-finite phase".into()));
                }
            }
        }
        Ok(())
    }

    /// Project onto the grid of `resolution` (nearest point per element).
    pub fn quantized(&self, resolution: PhaseResolution) -> PhaseConfig {
        match resolution {
            PhaseResolution::Bits(bits) => PhaseConfig::Discrete {
                bits,
                indices: self.angles().into_iter().map(|t| quantize_index(t, bits)).collect(),
            },
            PhaseResolution::Continuous => {
                PhaseConfig::Continuous { theta: self.angles().into_iter().map(wrap_angle).collect() }
            }
        }
    }
}
