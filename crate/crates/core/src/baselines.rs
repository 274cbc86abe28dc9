//! Matched-filter comparison baselines: OFDM without a cyclic prefix and an
//! LFM chirp.

use std::f64::consts::PI;

use crate::channel::{echo, RxCapture, Scene};
use crate::error::{invalid, Result};
use crate::geometry::{ArrayGeometry, RadarParams};
use crate::numerics::{C64, ZERO};
use crate::receiver::receive_dbf;
use crate::waveform::{synthesize_tx, SubcarrierWeights, TxWaveformSet};

#[derive(Debug, Clone, PartialEq)]
pub struct LfmWaveform {
    pub samples: Vec<C64>,
    pub bandwidth_hz: f64,
    pub duration_s: f64,
}

/// Symmetric up-chirp `s(n) = exp(jπ (B/T) (n·T_s - T/2)²)` with `T_s = T/N`.
pub fn lfm_waveform(n: usize, bandwidth_hz: f64, duration_s: f64) -> Result<LfmWaveform> {
    if n < 2 {
        return invalid("chirp needs at least two samples");
    }
    if !(bandwidth_hz * duration_s > 0.0) || !bandwidth_hz.is_finite() || !duration_s.is_finite() {
        return invalid("chirp bandwidth and duration must be positive");
    }
    let ts = duration_s / n as f64;
    let rate = bandwidth_hz / duration_s;
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 * ts - duration_s / 2.0;
            C64::from_polar(1.0, PI * rate * t * t)
        })
        .collect();
    Ok(LfmWaveform { samples, bandwidth_hz, duration_s })
}

/// Sliding correlation `y(l) = Σ_n rx(n+l)·ref*(n)` for `l = 0..=len(rx)-len(ref)`.
pub fn matched_filter(rx: &[C64], reference: &[C64]) -> Result<Vec<C64>> {
    if reference.is_empty() || rx.len() < reference.len() {
        return invalid(format!(
            "matched filter needs len(rx) >= len(ref) > 0, got {} and {}",
            rx.len(),
            reference.len()
        ));
    }
    Ok((0..=rx.len() - reference.len())
        .map(|l| {
            rx[l..l + reference.len()]
                .iter()
                .zip(reference)
                .map(|(x, r)| x * r.conj())
                .sum()
        })
        .collect())
}

/// Magnitude of [`matched_filter`]; not normalised.
pub fn matched_filter_profile(rx: &[C64], reference: &[C64]) -> Result<Vec<f64>> {
    Ok(matched_filter(rx, reference)?.iter().map(|z| z.norm()).collect())
}

/// Equivalent transmit signal `b(n) = Σ_m a_t(m) u_m(n)` over the full
/// transmit length.
pub fn equivalent_signal(tx: &TxWaveformSet, geom: &ArrayGeometry, params: &RadarParams, dod: f64) -> Vec<C64> {
    let a_t = geom.tx_steering(dod, params.wavelength());
    let mut b = vec![ZERO; tx.len()];
    for (a, seq) in a_t.iter().zip(tx.sequences()) {
        for (acc, u) in b.iter_mut().zip(seq) {
            *acc += a * u;
        }
    }
    b
}

/// Echo of the same OFDM symbols transmitted without a prefix: `N + L - 1`
/// samples per antenna.
pub fn conventional_ofdm_capture(
    scene: &Scene,
    weights: &SubcarrierWeights,
    geom: &ArrayGeometry,
    params: &RadarParams,
    noise_power: f64,
    seed: u64,
) -> Result<RxCapture> {
    let body = synthesize_tx(weights, 1)?;
    echo(&body, scene, geom, params, noise_power, seed)
}

/// Receive beam at the true arrival angle, then correlation against the
/// `N`-sample equivalent transmit signal. One output per zone cell.
pub fn conventional_ofdm_profile_from_capture(
    capture: &RxCapture,
    scene: &Scene,
    weights: &SubcarrierWeights,
    geom: &ArrayGeometry,
    params: &RadarParams,
) -> Result<Vec<C64>> {
    let body = synthesize_tx(weights, 1)?;
    let reference = equivalent_signal(&body, geom, params, scene.dod);
    let z = receive_dbf(capture, geom, params, scene.doa)?;
    matched_filter(&z, &reference)
}

pub fn conventional_ofdm_profile(
    scene: &Scene,
    weights: &SubcarrierWeights,
    geom: &ArrayGeometry,
    params: &RadarParams,
    noise_power: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    let capture = conventional_ofdm_capture(scene, weights, geom, params, noise_power, seed)?;
    let mf = conventional_ofdm_profile_from_capture(&capture, scene, weights, geom, params)?;
    Ok(mf.iter().map(|z| z.norm()).collect())
}

/// LFM radar with the chirp radiated from transmit element 0 and received on
/// the full receive array. Returns the complex correlation per zone cell.
pub fn lfm_correlation(
    scene: &Scene,
    lfm: &LfmWaveform,
    geom: &ArrayGeometry,
    params: &RadarParams,
    noise_power: f64,
    seed: u64,
) -> Result<Vec<C64>> {
    let tx = TxWaveformSet::single(lfm.samples.clone())?;
    let single = ArrayGeometry { tx_offsets: vec![0.0], rx_offsets: geom.rx_offsets.clone() };
    let capture = echo(&tx, scene, &single, params, noise_power, seed)?;
    let z = receive_dbf(&capture, &single, params, scene.doa)?;
    matched_filter(&z, &lfm.samples)
}

pub fn lfm_profile(
    scene: &Scene,
    lfm: &LfmWaveform,
    geom: &ArrayGeometry,
    params: &RadarParams,
    noise_power: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    Ok(lfm_correlation(scene, lfm, geom, params, noise_power, seed)?
        .iter()
        .map(|z| z.norm())
        .collect())
}

/// Chirp spanning the OFDM bandwidth over the `N`-sample body duration.
pub fn default_lfm(params: &RadarParams) -> Result<LfmWaveform> {
    let n = params.subcarriers;
    lfm_waveform(n, params.bandwidth_hz, n as f64 / params.bandwidth_hz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::pslr_db;
    use crate::numerics::complex_gaussian;
    use crate::waveform::{design_subcarrier_weights, papr_db, WaveformConfig};

    #[test]
    fn chirp_is_constant_modulus() {
        let lfm = lfm_waveform(512, 50e6, 512.0 / 50e6).unwrap();
        assert!(papr_db(&lfm.samples).unwrap().abs() < 1e-12);
        assert!((lfm.bandwidth_hz * lfm.duration_s - 512.0).abs() < 1e-9);
    }

    #[test]
    fn zero_sweep_is_constant_phase() {
        let lfm = lfm_waveform(64, 1e-9, 1e-9).unwrap();
        for z in &lfm.samples {
            assert!((z - lfm.samples[0]).norm() < 1e-6);
        }
        assert!(lfm_waveform(1, 1.0, 1.0).is_err());
        assert!(lfm_waveform(8, 0.0, 1.0).is_err());
    }

    #[test]
    fn autocorrelation_peak() {
        let r = complex_gaussian(32, 1.0, 4).unwrap();
        let y = matched_filter_profile(&r, &r).unwrap();
        assert_eq!(y.len(), 1);
        let energy: f64 = r.iter().map(|z| z.norm_sqr()).sum();
        assert!((y[0] - energy).abs() < 1e-12);
        assert!(matched_filter_profile(&r[..4], &r).is_err());
    }

    #[test]
    fn delay_moves_peak() {
        let r = complex_gaussian(64, 1.0, 4).unwrap();
        let mut rx = vec![ZERO; 80];
        rx[9..73].copy_from_slice(&r);
        let y = matched_filter_profile(&rx, &r).unwrap();
        let arg = (0..y.len()).max_by(|&a, &b| y[a].total_cmp(&y[b])).unwrap();
        assert_eq!(arg, 9);
    }

    #[test]
    fn phase_rotation_invariance() {
        let r = complex_gaussian(32, 1.0, 5).unwrap();
        let rx = complex_gaussian(50, 1.0, 6).unwrap();
        let rot: Vec<C64> = rx.iter().map(|z| z * C64::from_polar(1.0, 1.234)).collect();
        let (a, b) = (matched_filter_profile(&rx, &r).unwrap(), matched_filter_profile(&rot, &r).unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    /// Brute-force aperiodic autocorrelation of an oversampled chirp; the
    /// first sidelobe after the mainlobe null approaches the sinc value.
    #[test]
    fn oversampled_chirp_first_sidelobe() {
        let n = 1024;
        let b = 50e6;
        let t = 64.0 / b; // B·T = 64, 16 samples per resolution cell
        let lfm = lfm_waveform(n, b, t).unwrap();
        let s = &lfm.samples;
        let ac: Vec<f64> = (0..n)
            .map(|lag| s[lag..].iter().zip(s).map(|(x, y)| x * y.conj()).sum::<C64>().norm())
            .collect();
        let mut i = 1;
        while ac[i + 1] < ac[i] {
            i += 1;
        }
        let mut j = i;
        while ac[j + 1] > ac[j] {
            j += 1;
        }
        let first = 20.0 * (ac[j] / ac[0]).log10();
        assert!((first - -13.49).abs() < 0.05, "first sidelobe {first} dB");
    }

    fn reference_setup() -> (RadarParams, ArrayGeometry, SubcarrierWeights) {
        let params = RadarParams::new(3e9, 50e6, 512, 4, 4).unwrap();
        let geom = ArrayGeometry::half_wavelength(&params);
        let cfg = WaveformConfig::new(512, 4, 61, None).unwrap();
        (params, geom, design_subcarrier_weights(&cfg).unwrap())
    }

    #[test]
    fn conventional_ofdm_peaks_at_target_with_sidelobes() {
        let (params, geom, w) = reference_setup();
        let scene = Scene::point(61, 40, C64::new(1.0, 0.0), 30f64.to_radians(), 20f64.to_radians()).unwrap();
        let prof = conventional_ofdm_profile(&scene, &w, &geom, &params, 0.0, 0).unwrap();
        assert_eq!(prof.len(), 61);
        let arg = (0..61).max_by(|&a, &b| prof[a].total_cmp(&prof[b])).unwrap();
        assert_eq!(arg, 40);
        assert!(pslr_db(&prof, &[40]).unwrap() > -60.0);

        let lfm = default_lfm(&params).unwrap();
        let lp = lfm_profile(&scene, &lfm, &geom, &params, 0.0, 0).unwrap();
        let arg = (0..61).max_by(|&a, &b| lp[a].total_cmp(&lp[b])).unwrap();
        assert_eq!(arg, 40);
        assert!(pslr_db(&lp, &[40]).unwrap() > -60.0);
    }
}
