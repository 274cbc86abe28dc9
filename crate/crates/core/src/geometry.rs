//! System constants, array layout and steering vectors.
//!
//! Steering phases use the carrier wavelength only (narrowband model): the
//! arrays are assumed much shorter than one range cell.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numerics::C64;

pub const SPEED_OF_LIGHT: f64 = 3.0e8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadarParams {
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub subcarriers: usize,
    pub tx_count: usize,
    pub rx_count: usize,
}

impl RadarParams {
    pub fn new(
        carrier_hz: f64,
        bandwidth_hz: f64,
        subcarriers: usize,
        tx_count: usize,
        rx_count: usize,
    ) -> Result<Self> {
        let p = RadarParams { carrier_hz, bandwidth_hz, subcarriers, tx_count, rx_count };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.carrier_hz > 0.0 && self.carrier_hz.is_finite()) {
            return invalid(format!("carrier frequency must be positive, got {}", self.carrier_hz));
        }
        if !(self.bandwidth_hz > 0.0 && self.bandwidth_hz.is_finite()) {
            return invalid(format!("bandwidth must be positive, got {}", self.bandwidth_hz));
        }
        if self.tx_count < 1 || self.subcarriers < self.tx_count {
            return invalid(format!(
                "need N >= M >= 1, got N={} M={}",
                self.subcarriers, self.tx_count
            ));
        }
        if self.rx_count < 1 {
            return invalid("need at least one receive antenna");
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    pub fn subcarrier_spacing(&self) -> f64 {
        self.bandwidth_hz / self.subcarriers as f64
    }

    pub fn sample_period(&self) -> f64 {
        1.0 / self.bandwidth_hz
    }

    pub fn range_resolution(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.bandwidth_hz)
    }
}

/// Element offsets (meters) of the transmit and receive arrays, measured
/// from element 0 of each array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub tx_offsets: Vec<f64>,
    pub rx_offsets: Vec<f64>,
}

impl ArrayGeometry {
    pub fn new(tx_offsets: Vec<f64>, rx_offsets: Vec<f64>) -> Result<Self> {
        for (name, offs) in [("transmit", &tx_offsets), ("receive", &rx_offsets)] {
            if offs.is_empty() {
                return invalid(format!("{name} array has no elements"));
            }
            if offs[0] != 0.0 {
                return invalid(format!("{name} array offset of element 0 must be 0"));
            }
            if offs.iter().any(|d| !d.is_finite() || *d < 0.0) {
                return invalid(format!("{name} array offsets must be finite and non-negative"));
            }
        }
        Ok(ArrayGeometry { tx_offsets, rx_offsets })
    }

    /// Half-wavelength ULAs sized from `params`.
    pub fn half_wavelength(params: &RadarParams) -> Self {
        let d = params.wavelength() / 2.0;
        ArrayGeometry {
            tx_offsets: make_ula(params.tx_count, d),
            rx_offsets: make_ula(params.rx_count, d),
        }
    }

    pub fn tx_count(&self) -> usize {
        self.tx_offsets.len()
    }

    pub fn rx_count(&self) -> usize {
        self.rx_offsets.len()
    }

    pub fn tx_steering(&self, dod: f64, wavelength: f64) -> Vec<C64> {
        steering_vector(&self.tx_offsets, dod, wavelength)
    }

    pub fn rx_steering(&self, doa: f64, wavelength: f64) -> Vec<C64> {
        steering_vector(&self.rx_offsets, doa, wavelength)
    }
}

pub fn make_ula(count: usize, spacing: f64) -> Vec<f64> {
    (0..count).map(|i| i as f64 * spacing).collect()
}

/// `a_i = exp(-j 2π/λ · d_i · sin(angle))`.
pub fn steering_vector(offsets: &[f64], angle: f64, wavelength: f64) -> Vec<C64> {
    let k = 2.0 * PI / wavelength * angle.sin();
    offsets.iter().map(|&d| C64::from_polar(1.0, -k * d)).collect()
}

/// Number of range cells spanned by a target of extent `extent_m`.
pub fn occupied_cells(extent_m: f64, range_resolution: f64) -> Result<usize> {
    if !(extent_m >= 0.0) || !(range_resolution > 0.0) {
        return invalid("target extent must be >= 0 and range resolution > 0");
    }
    Ok((extent_m / range_resolution).ceil() as usize)
}

pub fn check_angle(angle: f64, what: &str) -> Result<()> {
    if !angle.is_finite() || angle.abs() >= PI / 2.0 {
        return invalid(format!("{what} must lie in (-90°, 90°), got {:.6}°", angle.to_degrees()));
    }
    Ok(())
}
