//! Discrete baseband echo synthesis for a scene of range-cell scatterers.
//!
//! Delays are whole range cells. The echo at receive antenna `q` is
//! `x_q(n) = a_r(q) · Σ_l h(l) · Σ_m a_t(m) · u_m(n - l) + noise`, where the
//! transmit sequences are zero outside their support.

use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::geometry::{check_angle, ArrayGeometry, RadarParams, SPEED_OF_LIGHT};
use crate::numerics::{complex_gaussian, ensure_finite, C64, ZERO};
use crate::waveform::TxWaveformSet;

/// Complex scattering coefficients over the tracking zone plus the true
/// departure/arrival angles (radians).
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub h: Vec<C64>,
    pub dod: f64,
    pub doa: f64,
}

impl Scene {
    pub fn new(h: Vec<C64>, dod: f64, doa: f64) -> Result<Self> {
        ensure_finite(&h)?;
        check_angle(dod, "departure angle")?;
        check_angle(doa, "arrival angle")?;
        Ok(Scene { h, dod, doa })
    }

    /// A zone of `cells` cells with a single scatterer.
    pub fn point(cells: usize, cell: usize, coeff: C64, dod: f64, doa: f64) -> Result<Self> {
        if cell >= cells {
            return invalid(format!("scatterer cell {cell} outside zone of {cells} cells"));
        }
        let mut h = vec![ZERO; cells];
        h[cell] = coeff;
        Scene::new(h, dod, doa)
    }

    pub fn cells(&self) -> usize {
        self.h.len()
    }

    /// Indices of non-zero cells.
    pub fn support(&self) -> Vec<usize> {
        (0..self.h.len()).filter(|&l| self.h[l] != ZERO).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RxCapture {
    /// One row per receive antenna.
    pub samples: Vec<Vec<C64>>,
    pub noise_power: f64,
    pub seed: u64,
    pub doppler_residue_hz: f64,
}

impl RxCapture {
    pub fn rx_count(&self) -> usize {
        self.samples.len()
    }

    pub fn len(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Echo of a CP-OFDM transmission: the scene must span exactly `cp_len + 1`
/// cells, giving `N + 2L - 2` samples per antenna.
pub fn simulate_rx(
    tx: &TxWaveformSet,
    scene: &Scene,
    geom: &ArrayGeometry,
    params: &RadarParams,
    noise_power: f64,
    seed: u64,
) -> Result<RxCapture> {
    if scene.cells() != tx.cp_len() + 1 {
        return invalid(format!(
            "scene has {} cells but the cyclic prefix covers {}",
            scene.cells(),
            tx.cp_len() + 1
        ));
    }
    echo(tx, scene, geom, params, noise_power, seed)
}

/// Echo of an arbitrary transmit set (no prefix-length coupling). Output
/// length is `tx.len() + L - 1` per antenna.
pub fn echo(
    tx: &TxWaveformSet,
    scene: &Scene,
    geom: &ArrayGeometry,
    params: &RadarParams,
    noise_power: f64,
    seed: u64,
) -> Result<RxCapture> {
    if tx.tx_count() != geom.tx_count() {
        return invalid(format!(
            "{} transmit sequences for {} transmit elements",
            tx.tx_count(),
            geom.tx_count()
        ));
    }
    if !(noise_power >= 0.0) || !noise_power.is_finite() {
        return invalid(format!("noise power must be >= 0, got {noise_power}"));
    }
    let lambda = params.wavelength();
    let a_t = geom.tx_steering(scene.dod, lambda);
    let a_r = geom.rx_steering(scene.doa, lambda);

    let tx_len = tx.len();
    let mut b = vec![ZERO; tx_len];
    for (a, seq) in a_t.iter().zip(tx.sequences()) {
        for (acc, u) in b.iter_mut().zip(seq) {
            *acc += a * u;
        }
    }

    let out_len = tx_len + scene.cells() - 1;
    let mut y = vec![ZERO; out_len];
    for (l, &h) in scene.h.iter().enumerate() {
        if h == ZERO {
            continue;
        }
        for (acc, bn) in y[l..l + tx_len].iter_mut().zip(&b) {
            *acc += h * bn;
        }
    }

    let noise = if noise_power > 0.0 {
        Some(complex_gaussian(a_r.len() * out_len, noise_power, seed)?)
    } else {
        None
    };
    let samples = a_r
        .iter()
        .enumerate()
        .map(|(q, a)| {
            let row = y.iter().map(|yn| a * yn);
            match &noise {
                Some(v) => row.zip(&v[q * out_len..(q + 1) * out_len]).map(|(s, w)| s + w).collect(),
                None => row.collect(),
            }
        })
        .collect();
    Ok(RxCapture { samples, noise_power, seed, doppler_residue_hz: 0.0 })
}

/// Residual Doppler frequency `2·Δv·f_c / c` left by a velocity error `Δv`.
pub fn doppler_frequency(velocity_error: f64, params: &RadarParams) -> f64 {
    2.0 * velocity_error * params.carrier_hz / SPEED_OF_LIGHT
}

/// Multiplies every sample by a common phase ramp `exp(j2π f_d n T_s)`.
pub fn apply_doppler_residue(capture: &RxCapture, velocity_error: f64, params: &RadarParams) -> RxCapture {
    let fd = doppler_frequency(velocity_error, params);
    if fd == 0.0 {
        return capture.clone();
    }
    let step = 2.0 * PI * fd * params.sample_period();
    let ramp: Vec<C64> = (0..capture.len()).map(|n| C64::from_polar(1.0, step * n as f64)).collect();
    let samples = capture
        .samples
        .iter()
        .map(|row| row.iter().zip(&ramp).map(|(x, r)| x * r).collect())
        .collect();
    RxCapture { samples, doppler_residue_hz: capture.doppler_residue_hz + fd, ..capture.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::{design_subcarrier_weights, synthesize_tx, WaveformConfig};

    fn setup(n: usize, m: usize, q: usize, l: usize) -> (RadarParams, ArrayGeometry, TxWaveformSet) {
        let params = RadarParams::new(3e9, 50e6, n, m, q).unwrap();
        let geom = ArrayGeometry::half_wavelength(&params);
        let cfg = WaveformConfig::new(n, m, l, None).unwrap();
        let tx = synthesize_tx(&design_subcarrier_weights(&cfg).unwrap(), l).unwrap();
        (params, geom, tx)
    }

    #[test]
    fn identity_channel() {
        let (params, geom, tx) = setup(64, 1, 1, 1);
        let scene = Scene::point(1, 0, C64::new(1.0, 0.0), 0.3, -0.2).unwrap();
        let cap = simulate_rx(&tx, &scene, &geom, &params, 0.0, 0).unwrap();
        assert_eq!(cap.samples[0], tx.sequences()[0]);
    }

    #[test]
    fn one_cell_delay() {
        let (params, geom, tx) = setup(64, 1, 1, 2);
        let scene = Scene::point(2, 1, C64::new(1.0, 0.0), 0.0, 0.0).unwrap();
        let cap = simulate_rx(&tx, &scene, &geom, &params, 0.0, 0).unwrap();
        let u = &tx.sequences()[0];
        assert_eq!(cap.len(), u.len() + 1);
        assert_eq!(cap.samples[0][0], ZERO);
        assert_eq!(&cap.samples[0][1..], &u[..]);
    }

    #[test]
    fn reference_capture_length() {
        let (params, geom, tx) = setup(512, 4, 4, 61);
        let scene = Scene::point(61, 40, C64::new(1.0, 0.0), 30f64.to_radians(), 20f64.to_radians()).unwrap();
        let cap = simulate_rx(&tx, &scene, &geom, &params, 0.0, 0).unwrap();
        assert_eq!(cap.rx_count(), 4);
        assert!(cap.samples.iter().all(|r| r.len() == 632));
    }

    #[test]
    fn dimension_mismatches_rejected() {
        let (params, geom, tx) = setup(64, 2, 2, 5);
        let short = Scene::point(4, 0, C64::new(1.0, 0.0), 0.0, 0.0).unwrap();
        assert!(simulate_rx(&tx, &short, &geom, &params, 0.0, 0).is_err());
        let scene = Scene::point(5, 0, C64::new(1.0, 0.0), 0.0, 0.0).unwrap();
        let g1 = ArrayGeometry::new(vec![0.0], vec![0.0]).unwrap();
        assert!(simulate_rx(&tx, &scene, &g1, &params, 0.0, 0).is_err());
        assert!(simulate_rx(&tx, &scene, &geom, &params, -1.0, 0).is_err());
    }

    #[test]
    fn scene_validation() {
        assert!(Scene::new(vec![], 0.0, 0.0).is_err());
        assert!(Scene::new(vec![C64::new(f64::INFINITY, 0.0)], 0.0, 0.0).is_err());
        assert!(Scene::new(vec![ZERO], 2.0, 0.0).is_err());
        assert!(Scene::new(vec![ZERO; 3], 0.1, 0.1).is_ok());
        assert!(Scene::point(3, 3, C64::new(1.0, 0.0), 0.0, 0.0).is_err());
    }

    #[test]
    fn superposition_over_cells() {
        let (params, geom, tx) = setup(128, 4, 3, 9);
        let h: Vec<C64> = complex_gaussian(9, 1.0, 3).unwrap();
        let scene = Scene::new(h.clone(), 0.4, -0.1).unwrap();
        let full = simulate_rx(&tx, &scene, &geom, &params, 0.0, 0).unwrap();
        let mut sum = vec![vec![ZERO; full.len()]; 3];
        for (l, &coeff) in h.iter().enumerate() {
            let s = Scene::point(9, l, coeff, 0.4, -0.1).unwrap();
            let c = simulate_rx(&tx, &s, &geom, &params, 0.0, 0).unwrap();
            for (acc, row) in sum.iter_mut().zip(&c.samples) {
                for (a, x) in acc.iter_mut().zip(row) {
                    *a += x;
                }
            }
        }
        for (a, b) in sum.iter().flatten().zip(full.samples.iter().flatten()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn injected_noise_is_generator_output() {
        let (params, geom, tx) = setup(64, 2, 3, 5);
        let scene = Scene::point(5, 2, C64::new(0.5, -0.5), 0.2, 0.1).unwrap();
        let clean = simulate_rx(&tx, &scene, &geom, &params, 0.0, 0).unwrap();
        let noisy = simulate_rx(&tx, &scene, &geom, &params, 0.7, 99).unwrap();
        let len = clean.len();
        let noise = complex_gaussian(3 * len, 0.7, 99).unwrap();
        for q in 0..3 {
            for n in 0..len {
                let d = noisy.samples[q][n] - clean.samples[q][n];
                assert!((d - noise[q * len + n]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn doppler_examples() {
        let params = RadarParams::new(3e9, 50e6, 512, 4, 4).unwrap();
        assert!((doppler_frequency(1.0, &params) - 20.0).abs() < 1e-12);
        let (p, geom, tx) = setup(64, 2, 2, 5);
        let scene = Scene::point(5, 2, C64::new(1.0, 0.0), 0.2, 0.1).unwrap();
        let cap = simulate_rx(&tx, &scene, &geom, &p, 0.3, 5).unwrap();
        assert_eq!(apply_doppler_residue(&cap, 0.0, &p), cap);
        let twice = apply_doppler_residue(&apply_doppler_residue(&cap, 700.0, &p), 1300.0, &p);
        let once = apply_doppler_residue(&cap, 2000.0, &p);
        assert!((twice.doppler_residue_hz - once.doppler_residue_hz).abs() < 1e-9);
        for (a, b) in twice.samples.iter().flatten().zip(once.samples.iter().flatten()) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
