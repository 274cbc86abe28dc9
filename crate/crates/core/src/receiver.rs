//! Receive beamforming, CP removal and IRCI-free range reconstruction.
//!
//! After the receive beam is formed, the `N` samples following the prefix
//! hold a circular convolution of the scene with the equivalent transmit
//! signal `b(n)`. Dividing its spectrum by `Q·√N·B(k)·exp(j2π(L-1)k/N)`
//! and transforming back yields every cell coefficient with no leakage from
//! the other cells.

use std::f64::consts::PI;

use serde::Serialize;

use crate::channel::{RxCapture, Scene};
use crate::error::{invalid, Error, Result};
use crate::geometry::{check_angle, ArrayGeometry, RadarParams};
use crate::numerics::{dft_unitary_in_place, ensure_finite, Direction, C64, ZERO};
use crate::waveform::SubcarrierWeights;

/// Angles (radians) the receiver steers to, possibly different from the truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointingEstimate {
    pub dod_est: f64,
    pub doa_est: f64,
}

impl PointingEstimate {
    pub fn new(dod_est: f64, doa_est: f64) -> Result<Self> {
        check_angle(dod_est, "estimated departure angle")?;
        check_angle(doa_est, "estimated arrival angle")?;
        Ok(PointingEstimate { dod_est, doa_est })
    }

    /// Steering exactly at the scene's true angles.
    pub fn exact(scene: &Scene) -> Self {
        PointingEstimate { dod_est: scene.dod, doa_est: scene.doa }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileMeta {
    pub subcarriers: usize,
    pub tx_count: Option<usize>,
    pub rx_count: usize,
    pub cells: usize,
    pub dod_est: Option<f64>,
    pub doa_est: Option<f64>,
    pub seed: Option<u64>,
}

/// Reconstructed complex coefficients `ĥ(n)`, `n ∈ [0, N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeProfile {
    pub h_hat: Vec<C64>,
    pub meta: ProfileMeta,
}

impl RangeProfile {
    pub fn len(&self) -> usize {
        self.h_hat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h_hat.is_empty()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.h_hat.iter().map(|z| z.norm()).collect()
    }
}

/// `z(n) = A_r^H(θ₀) x(n)`.
pub fn receive_dbf(capture: &RxCapture, geom: &ArrayGeometry, params: &RadarParams, doa_est: f64) -> Result<Vec<C64>> {
    if capture.rx_count() != geom.rx_count() {
        return invalid(format!(
            "capture has {} antennas, geometry has {}",
            capture.rx_count(),
            geom.rx_count()
        ));
    }
    let a_r = geom.rx_steering(doa_est, params.wavelength());
    let mut z = vec![ZERO; capture.len()];
    for (a, row) in a_r.iter().zip(&capture.samples) {
        let w = a.conj();
        for (acc, x) in z.iter_mut().zip(row) {
            *acc += w * x;
        }
    }
    Ok(z)
}

/// The `n` samples starting at index `cells - 1`.
pub fn remove_cp(z: &[C64], cells: usize, n: usize) -> Result<Vec<C64>> {
    if cells == 0 || n == 0 {
        return invalid("cells and N must be positive");
    }
    let start = cells - 1;
    if z.len() < start + n {
        return invalid(format!("signal of {} samples is shorter than N + L - 1 = {}", z.len(), start + n));
    }
    Ok(z[start..start + n].to_vec())
}

/// `B(k) = Σ_m a_t(m) U_m(k)` for departure angle `dod`.
pub fn equivalent_spectrum(
    weights: &SubcarrierWeights,
    geom: &ArrayGeometry,
    params: &RadarParams,
    dod: f64,
) -> Result<Vec<C64>> {
    if weights.tx_count() != geom.tx_count() {
        return invalid(format!(
            "{} weight rows for {} transmit elements",
            weights.tx_count(),
            geom.tx_count()
        ));
    }
    let a_t = geom.tx_steering(dod, params.wavelength());
    let mut spectrum = vec![ZERO; weights.subcarriers()];
    for (a, row) in a_t.iter().zip(weights.rows()) {
        for (acc, u) in spectrum.iter_mut().zip(row) {
            *acc += a * u;
        }
    }
    Ok(spectrum)
}

/// `exp(j2π(L-1)k/N)` with the exponent reduced modulo `N`.
pub(crate) fn prefix_phase(cells: usize, k: usize, n: usize) -> C64 {
    let r = ((cells - 1) as u128 * k as u128 % n as u128) as f64;
    C64::from_polar(1.0, 2.0 * PI * r / n as f64)
}

/// Relative floor below which a spectrum bin counts as zero.
const SINGULAR_GUARD: f64 = 1e-12;

/// Range reconstruction from the prefix-stripped beam output `z_bar`.
pub fn reconstruct(z_bar: &[C64], spectrum: &[C64], rx_count: usize, cells: usize) -> Result<RangeProfile> {
    let n = z_bar.len();
    ensure_finite(z_bar)?;
    if spectrum.len() != n {
        return invalid(format!("spectrum has {} bins, signal has {n} samples", spectrum.len()));
    }
    if rx_count == 0 || cells == 0 {
        return invalid("rx_count and cells must be positive");
    }
    let rms = (spectrum.iter().map(|b| b.norm_sqr()).sum::<f64>() / n as f64).sqrt();
    if let Some(bin) = spectrum.iter().position(|b| !(b.norm() >= SINGULAR_GUARD * rms) || rms == 0.0) {
        return Err(Error::SpectrumSingular { bin, magnitude: spectrum[bin].norm() });
    }

    let mut buf = z_bar.to_vec();
    dft_unitary_in_place(&mut buf, Direction::Forward);
    let gain = rx_count as f64 * (n as f64).sqrt();
    for (k, (z, b)) in buf.iter_mut().zip(spectrum).enumerate() {
        *z /= b * prefix_phase(cells, k, n) * gain;
    }
    dft_unitary_in_place(&mut buf, Direction::Inverse);

    Ok(RangeProfile {
        h_hat: buf,
        meta: ProfileMeta {
            subcarriers: n,
            tx_count: None,
            rx_count,
            cells,
            dod_est: None,
            doa_est: None,
            seed: None,
        },
    })
}

/// Full chain from a capture: receive beam at `est.doa_est`, equivalent
/// spectrum at `est.dod_est`, then [`reconstruct`] normalised by the nominal
/// `Q`. With `est` equal to the truth this is the error-free reconstruction.
pub fn reconstruct_with_pointing_error(
    capture: &RxCapture,
    weights: &SubcarrierWeights,
    geom: &ArrayGeometry,
    params: &RadarParams,
    est: &PointingEstimate,
    cells: usize,
) -> Result<RangeProfile> {
    let n = weights.subcarriers();
    let z = receive_dbf(capture, geom, params, est.doa_est)?;
    let z_bar = remove_cp(&z, cells, n)?;
    let spectrum = equivalent_spectrum(weights, geom, params, est.dod_est)?;
    let mut profile = reconstruct(&z_bar, &spectrum, geom.rx_count(), cells)?;
    profile.meta.tx_count = Some(weights.tx_count());
    profile.meta.dod_est = Some(est.dod_est);
    profile.meta.doa_est = Some(est.doa_est);
    profile.meta.seed = (capture.noise_power > 0.0).then_some(capture.seed);
    Ok(profile)
}
