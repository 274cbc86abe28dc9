//! Closed-form performance predictions and the empirical metrics used to
//! check them.
//!
//! Everything is linear internally; decibels appear only in the `*_db`
//! helpers and report fields.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::channel::Scene;
use crate::error::{invalid, Error, Result};
use crate::geometry::{ArrayGeometry, RadarParams};
use crate::numerics::{trial_seed, ComplexSum, KahanSum, C64};
use crate::receiver::{PointingEstimate, RangeProfile};

/// Profiles with no sidelobe energy report this instead of -∞.
pub const PSLR_FLOOR_DB: f64 = -300.0;

pub const MIN_TRIALS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct PointingErrorReport {
    /// Receive-array gain `Q̃ = Σ_q exp(j2π f_c Δβ_q)`.
    pub q_tilde: C64,
    /// Transmit-array gain `M̃ = Σ_m exp(j2π f_c Δγ_m)`.
    pub m_tilde: C64,
    /// Period weights `w_0 .. w_{M-1}`.
    pub weights: Vec<C64>,
    /// `Q²M² / (|Q̃|²|M̃|²)`, linear.
    pub snr_loss: f64,
    pub snr_loss_db: f64,
    pub tx_count: usize,
    pub rx_count: usize,
}

/// `|h|² / (σ²/(Q N²) · Σ_k 1/|B(k)|²)`.
pub fn predicted_snr(h_l: C64, noise_power: f64, spectrum: &[C64], rx_count: usize) -> Result<f64> {
    if !(noise_power > 0.0) {
        return invalid("noise power must be positive");
    }
    if spectrum.is_empty() || rx_count == 0 {
        return invalid("spectrum and receive count must be non-empty");
    }
    if let Some(k) = spectrum.iter().position(|b| b.norm_sqr() == 0.0) {
        return invalid(format!("spectrum bin {k} is zero"));
    }
    let n = spectrum.len() as f64;
    let inv: f64 = spectrum.iter().map(|b| 1.0 / b.norm_sqr()).collect::<KahanSum>().value();
    Ok(h_l.norm_sqr() / (noise_power / (rx_count as f64 * n * n) * inv))
}

/// `Q·M·N·|h|² / σ²`, the flat-spectrum optimum.
pub fn max_snr(h_l: C64, noise_power: f64, params: &RadarParams) -> Result<f64> {
    if !(noise_power > 0.0) {
        return invalid("noise power must be positive");
    }
    let gain = (params.rx_count * params.tx_count * params.subcarriers) as f64;
    Ok(gain * h_l.norm_sqr() / noise_power)
}

/// Array gains and period weights for a receiver steered to `est` while
/// the target sits at (`dod`, `doa`).
pub fn pointing_weights(
    geom: &ArrayGeometry,
    params: &RadarParams,
    dod: f64,
    doa: f64,
    est: &PointingEstimate,
) -> PointingErrorReport {
    let k = 2.0 * PI / params.wavelength();
    let tx_phase: Vec<C64> = geom
        .tx_offsets
        .iter()
        .map(|d| C64::from_polar(1.0, k * d * (est.dod_est.sin() - dod.sin())))
        .collect();
    let q_tilde: C64 = geom
        .rx_offsets
        .iter()
        .map(|d| C64::from_polar(1.0, k * d * (est.doa_est.sin() - doa.sin())))
        .collect::<ComplexSum>()
        .value();
    let m_tilde = tx_phase.iter().copied().collect::<ComplexSum>().value();
    let (m, q) = (geom.tx_count(), geom.rx_count());
    let scale = q_tilde / (m * q) as f64;
    let weights = (0..m)
        .map(|i| {
            let s = tx_phase
                .iter()
                .enumerate()
                .map(|(mm, e)| e * C64::from_polar(1.0, -2.0 * PI * ((mm * i) % m) as f64 / m as f64))
                .collect::<ComplexSum>()
                .value();
            scale * s
        })
        .collect();
    let snr_loss = ((q * q * m * m) as f64) / (q_tilde.norm_sqr() * m_tilde.norm_sqr());
    PointingErrorReport {
        q_tilde,
        m_tilde,
        weights,
        snr_loss,
        snr_loss_db: 10.0 * snr_loss.log10(),
        tx_count: m,
        rx_count: q,
    }
}

/// `|Q̃|²|M̃|² N |h|² / (Q M σ²)`.
pub fn snr_error(report: &PointingErrorReport, h_l: C64, noise_power: f64, params: &RadarParams) -> Result<f64> {
    if !(noise_power > 0.0) {
        return invalid("noise power must be positive");
    }
    let qm = (report.rx_count * report.tx_count) as f64;
    Ok(report.q_tilde.norm_sqr() * report.m_tilde.norm_sqr() * params.subcarriers as f64 * h_l.norm_sqr()
        / (qm * noise_power))
}

fn cell_samples(trials: &[RangeProfile], cell: usize) -> Result<Vec<C64>> {
    if trials.len() < MIN_TRIALS {
        return invalid(format!("need at least {MIN_TRIALS} trials, got {}", trials.len()));
    }
    trials
        .iter()
        .map(|p| {
            p.h_hat
                .get(cell)
                .copied()
                .ok_or_else(|| Error::InvalidArgument(format!("cell {cell} outside profile of {} cells", p.len())))
        })
        .collect()
}

fn mean_and_variance(x: &[C64]) -> (C64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().copied().collect::<ComplexSum>().value() / n;
    let var = x.iter().map(|z| (z - mean).norm_sqr()).collect::<KahanSum>().value() / (n - 1.0);
    (mean, var)
}

/// Sample variance of `ĥ(cell)` across trials.
pub fn empirical_noise_variance(trials: &[RangeProfile], cell: usize) -> Result<f64> {
    Ok(mean_and_variance(&cell_samples(trials, cell)?).1)
}

/// `|h(cell)|²` over the sample variance of `ĥ(cell) - h(cell)`. Infinite
/// when the trials carry no noise.
pub fn empirical_snr(trials: &[RangeProfile], scene: &Scene, cell: usize) -> Result<f64> {
    let truth = *scene
        .h
        .get(cell)
        .ok_or_else(|| Error::InvalidArgument(format!("cell {cell} outside scene")))?;
    let errors: Vec<C64> = cell_samples(trials, cell)?.iter().map(|z| z - truth).collect();
    let (_, var) = mean_and_variance(&errors);
    Ok(if var > 0.0 { truth.norm_sqr() / var } else { f64::INFINITY })
}

/// `|mean ĥ(cell)|²` over the sample variance of `ĥ(cell)`: the output SNR
/// including any deterministic gain loss such as pointing error.
pub fn empirical_output_snr(trials: &[RangeProfile], cell: usize) -> Result<f64> {
    let (mean, var) = mean_and_variance(&cell_samples(trials, cell)?);
    Ok(if var > 0.0 { mean.norm_sqr() / var } else { f64::INFINITY })
}

/// `20·log10(max outside mainlobe / max inside mainlobe)`, floored at
/// [`PSLR_FLOOR_DB`].
pub fn pslr_db(magnitudes: &[f64], mainlobe: &[usize]) -> Result<f64> {
    if mainlobe.is_empty() {
        return invalid("mainlobe set is empty");
    }
    if let Some(&i) = mainlobe.iter().find(|&&i| i >= magnitudes.len()) {
        return invalid(format!("mainlobe index {i} outside profile of {} cells", magnitudes.len()));
    }
    let main = mainlobe.iter().map(|&i| magnitudes[i]).fold(0.0, f64::max);
    if main == 0.0 {
        return invalid("mainlobe is zero");
    }
    let side = magnitudes
        .iter()
        .enumerate()
        .filter(|(i, _)| !mainlobe.contains(i))
        .map(|(_, &v)| v)
        .fold(0.0, f64::max);
    if side == 0.0 {
        return Ok(PSLR_FLOOR_DB);
    }
    Ok((20.0 * (side / main).log10()).max(PSLR_FLOOR_DB))
}

/// Least-squares complex gain of each length-`n0` period relative to period
/// 0, fitted over the cells in `support` (offsets within a period).
pub fn periodicity_check(profile: &RangeProfile, n0: usize, m: usize, support: &[usize]) -> Result<Vec<C64>> {
    if n0 * m != profile.len() {
        return invalid(format!("profile length {} is not N0·M = {}", profile.len(), n0 * m));
    }
    if support.is_empty() || support.iter().any(|&n| n >= n0) {
        return invalid("support must be non-empty and inside one period");
    }
    let h = &profile.h_hat;
    let reference: f64 = support.iter().map(|&n| h[n].norm_sqr()).sum();
    if reference == 0.0 {
        return Err(Error::Degenerate("reference period is zero over the support".into()));
    }
    Ok((0..m)
        .map(|i| {
            support
                .iter()
                .map(|&n| h[n].conj() * h[n + i * n0])
                .collect::<ComplexSum>()
                .value()
                / reference
        })
        .collect())
}

/// Runs `trial(seed)` for `trials` derived seeds in parallel. Output order
/// follows the trial index regardless of scheduling.
pub fn monte_carlo<T, F>(trials: usize, base_seed: u64, trial: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    (0..trials as u64)
        .into_par_iter()
        .map(|i| trial(trial_seed(base_seed, i)))
        .collect()
}

pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Peak-normalised magnitudes in dB (`20·log10(|x| / max|x|)`), floored.
pub fn normalized_db(magnitudes: &[f64]) -> Vec<f64> {
    let peak = magnitudes.iter().copied().fold(0.0, f64::max);
    magnitudes
        .iter()
        .map(|&v| if peak > 0.0 && v > 0.0 { (20.0 * (v / peak).log10()).max(PSLR_FLOOR_DB) } else { PSLR_FLOOR_DB })
        .collect()
}

/// Level of each alias replica of `cell`, one per shift `i·n0` for
/// `i = 1..m`: the largest magnitude within `halfwidth` cells of
/// `(cell + i·n0) mod len`, in dB above the median magnitude.
pub fn replica_levels_db(magnitudes: &[f64], cell: usize, n0: usize, m: usize, halfwidth: usize) -> Result<Vec<f64>> {
    let len = magnitudes.len();
    if len == 0 || cell >= len || n0 * m > len || 2 * halfwidth + 1 > n0 {
        return invalid("replica window does not fit the profile");
    }
    let mut sorted = magnitudes.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[len / 2];
    if !(median > 0.0) {
        return Err(Error::Degenerate("median magnitude is zero".into()));
    }
    Ok((1..m)
        .map(|i| {
            let centre = cell + i * n0 + len;
            let peak = (centre - halfwidth..=centre + halfwidth)
                .map(|j| magnitudes[j % len])
                .fold(0.0, f64::max);
            20.0 * (peak / median).log10()
        })
        .collect())
}
