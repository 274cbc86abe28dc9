//! Interleaved Zadoff-Chu subcarrier weighting and CP-OFDM synthesis.
//!
//! Antenna `m` owns the subcarriers `k = M·p + m`. Each owned bin carries
//! `√M · exp(jφ_p)` where `φ_p` is a length-`N₀` Zadoff-Chu phase sequence, so
//! every transmit sequence has constant modulus and the spatially combined
//! spectrum is flat for any departure angle.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numerics::{dft_unitary, Direction, C64, ZERO};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WaveformConfig {
    pub subcarriers: usize,
    pub tx_count: usize,
    /// Tracking-zone length in range cells. The cyclic prefix is `cells - 1`.
    pub cells: usize,
    pub roots: Vec<usize>,
}

impl WaveformConfig {
    /// Builds a config, filling in the default roots when `roots` is `None`.
    pub fn new(subcarriers: usize, tx_count: usize, cells: usize, roots: Option<Vec<usize>>) -> Result<Self> {
        if tx_count == 0 || !subcarriers.is_multiple_of(tx_count) {
            return invalid(format!("N must be a multiple of M (N={subcarriers}, M={tx_count})"));
        }
        let n0 = subcarriers / tx_count;
        let roots = match roots {
            Some(r) => r,
            None => default_roots(n0, tx_count),
        };
        let cfg = WaveformConfig { subcarriers, tx_count, cells, roots };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let (n, m) = (self.subcarriers, self.tx_count);
        if m == 0 || n % m != 0 {
            return invalid(format!("N must be a multiple of M (N={n}, M={m})"));
        }
        let n0 = n / m;
        if n0 < 2 {
            return invalid(format!("need at least two subcarriers per antenna, N/M = {n0}"));
        }
        if self.cells < 1 || self.cells >= n0 {
            return invalid(format!("tracking zone must satisfy 1 <= L < N/M, got L={} N/M={n0}", self.cells));
        }
        if self.roots.len() != m {
            return invalid(format!("expected {m} Zadoff-Chu roots, got {}", self.roots.len()));
        }
        for &mu in &self.roots {
            check_root(n0, mu)?;
        }
        Ok(())
    }

    /// Subcarriers per antenna, `N₀ = N / M`.
    pub fn per_antenna(&self) -> usize {
        self.subcarriers / self.tx_count
    }
}

pub(crate) fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn check_root(n0: usize, mu: usize) -> Result<()> {
    if mu == 0 || mu >= n0 || gcd(mu, n0) != 1 {
        return invalid(format!("Zadoff-Chu root {mu} must satisfy 0 < mu < {n0} and gcd(mu, {n0}) = 1"));
    }
    Ok(())
}

/// The `M` smallest positive integers coprime to `n0`, wrapping around when
/// fewer than `M` exist.
pub fn default_roots(n0: usize, count: usize) -> Vec<usize> {
    let coprime: Vec<usize> = (1..n0.max(2)).filter(|&u| gcd(u, n0) == 1).collect();
    (0..count).map(|i| coprime[i % coprime.len()]).collect()
}

/// `φ_p = -(π/N₀)·(p + (N₀ mod 2))·μ·p` for `p = 0..N₀`, not wrapped.
pub fn zadoff_chu_phases(n0: usize, mu: usize) -> Result<Vec<f64>> {
    if n0 < 2 {
        return invalid("Zadoff-Chu length must be at least 2");
    }
    check_root(n0, mu)?;
    let odd = (n0 % 2) as u128;
    Ok((0..n0 as u128)
        .map(|p| -PI / n0 as f64 * ((p + odd) * mu as u128 * p) as f64)
        .collect())
}

/// Same phases reduced exactly modulo 2π before conversion to floating point.
fn zadoff_chu_phasors(n0: usize, mu: usize) -> Vec<C64> {
    let odd = (n0 % 2) as u128;
    let period = 2 * n0 as u128;
    (0..n0 as u128)
        .map(|p| {
            let r = ((p + odd) * p % period) * mu as u128 % period;
            C64::from_polar(1.0, -PI * r as f64 / n0 as f64)
        })
        .collect()
}

/// `M × N` subcarrier weight matrix, one row per transmit antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct SubcarrierWeights {
    rows: Vec<Vec<C64>>,
}

impl SubcarrierWeights {
    /// Wraps an arbitrary weight matrix (used for non-interleaved diagnostics).
    pub fn from_rows(rows: Vec<Vec<C64>>) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return invalid("weight rows must be non-empty and of equal length");
        }
        Ok(SubcarrierWeights { rows })
    }

    pub fn rows(&self) -> &[Vec<C64>] {
        &self.rows
    }

    pub fn tx_count(&self) -> usize {
        self.rows.len()
    }

    pub fn subcarriers(&self) -> usize {
        self.rows[0].len()
    }

    /// `(1/MN) Σ_m Σ_k |U_m(k)|²`; equals 1 for the interleaved design.
    pub fn mean_power(&self) -> f64 {
        let total: f64 = self.rows.iter().flatten().map(|z| z.norm_sqr()).sum();
        total / (self.tx_count() * self.subcarriers()) as f64
    }
}

fn interleave(cfg: &WaveformConfig, phasors: impl Fn(usize) -> Vec<C64>) -> Result<SubcarrierWeights> {
    cfg.validate()?;
    let (n, m) = (cfg.subcarriers, cfg.tx_count);
    let amp = (m as f64).sqrt();
    let rows = (0..m)
        .map(|ant| {
            let mut row = vec![ZERO; n];
            for (p, e) in phasors(ant).into_iter().enumerate() {
                row[m * p + ant] = e * amp;
            }
            row
        })
        .collect();
    Ok(SubcarrierWeights { rows })
}

pub fn design_subcarrier_weights(cfg: &WaveformConfig) -> Result<SubcarrierWeights> {
    let n0 = cfg.per_antenna();
    interleave(cfg, |ant| zadoff_chu_phasors(n0, cfg.roots[ant]))
}

/// Interleaved support with every phase forced to zero. Structural tests only.
#[doc(hidden)]
pub fn design_zero_phase_weights(cfg: &WaveformConfig) -> Result<SubcarrierWeights> {
    let n0 = cfg.per_antenna();
    interleave(cfg, |_| vec![C64::new(1.0, 0.0); n0])
}

/// Cyclic-prefixed discrete transmit sequences, `M × (N + L - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TxWaveformSet {
    sequences: Vec<Vec<C64>>,
    cp_len: usize,
}

impl TxWaveformSet {
    pub fn sequences(&self) -> &[Vec<C64>] {
        &self.sequences
    }

    pub fn cp_len(&self) -> usize {
        self.cp_len
    }

    pub fn tx_count(&self) -> usize {
        self.sequences.len()
    }

    pub fn len(&self) -> usize {
        self.sequences[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences[0].is_empty()
    }

    /// A single-antenna set from an arbitrary sequence, no prefix.
    pub fn single(sequence: Vec<C64>) -> Result<Self> {
        if sequence.is_empty() {
            return invalid("transmit sequence must be non-empty");
        }
        Ok(TxWaveformSet { sequences: vec![sequence], cp_len: 0 })
    }
}

/// Evaluates the `N`-point unitary IDFT of each weight row at
/// `n = 0 .. N + L - 1`. The IDFT is `N`-periodic, so the first `L - 1`
/// samples repeat as `u(n) = u(n + N)` and act as the cyclic prefix.
pub fn synthesize_tx(weights: &SubcarrierWeights, cells: usize) -> Result<TxWaveformSet> {
    let n = weights.subcarriers();
    let n0 = n / weights.tx_count();
    if cells == 0 || (cells > 1 && cells >= n0) {
        return invalid(format!("tracking zone L={cells} must satisfy 1 <= L < N/M = {n0}"));
    }
    let cp_len = cells - 1;
    let sequences = weights
        .rows()
        .iter()
        .map(|row| {
            let body = dft_unitary(row, Direction::Inverse)?;
            Ok(body.iter().chain(&body[..cp_len]).copied().collect())
        })
        .collect::<Result<Vec<Vec<C64>>>>()?;
    Ok(TxWaveformSet { sequences, cp_len })
}

/// Peak-to-average power ratio in dB.
pub fn papr_db(x: &[C64]) -> Result<f64> {
    if x.is_empty() {
        return invalid("PAPR of an empty sequence");
    }
    let powers: Vec<f64> = x.iter().map(|z| z.norm_sqr()).collect();
    let peak = powers.iter().copied().fold(0.0, f64::max);
    if peak == 0.0 {
        return invalid("PAPR of an all-zero sequence");
    }
    let mean = powers.iter().sum::<f64>() / powers.len() as f64;
    Ok(10.0 * (peak / mean).log10())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    #[test]
    fn zc_phases_even_length() {
        let phases = zadoff_chu_phases(4, 1).unwrap();
        let expect = [0.0, -PI / 4.0, -PI, -9.0 * PI / 4.0];
        for (a, b) in phases.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn zc_phases_odd_length() {
        let phases = zadoff_chu_phases(3, 1).unwrap();
        let expect = [0.0, -2.0 * PI / 3.0, -2.0 * PI];
        for (a, b) in phases.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn zc_root_must_be_coprime() {
        assert!(zadoff_chu_phases(4, 2).is_err());
        assert!(zadoff_chu_phases(4, 0).is_err());
        assert!(zadoff_chu_phases(4, 4).is_err());
        assert!(zadoff_chu_phases(1, 1).is_err());
    }

    #[test]
    fn reduced_phasors_match_formula() {
        for (n0, mu) in [(128, 1), (128, 5), (127, 3), (31, 30)] {
            let phases = zadoff_chu_phases(n0, mu).unwrap();
            for (e, phi) in zadoff_chu_phasors(n0, mu).iter().zip(phases) {
                assert!((e - C64::from_polar(1.0, phi)).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn default_roots_are_distinct_coprimes() {
        assert_eq!(default_roots(128, 4), vec![1, 3, 5, 7]);
        assert_eq!(default_roots(9, 3), vec![1, 2, 4]);
        assert_eq!(default_roots(2, 3), vec![1, 1, 1]);
    }

    #[test]
    fn config_validation() {
        assert!(WaveformConfig::new(510, 4, 61, None).is_err());
        assert!(WaveformConfig::new(512, 4, 128, None).is_err());
        assert!(WaveformConfig::new(512, 4, 0, None).is_err());
        assert!(WaveformConfig::new(512, 4, 127, None).is_ok());
        assert!(WaveformConfig::new(512, 4, 61, Some(vec![1, 2, 3, 5])).is_err());
        assert!(WaveformConfig::new(512, 4, 61, Some(vec![1, 3])).is_err());
        assert!(WaveformConfig::new(512, 4, 61, Some(vec![1, 1, 1, 1])).is_ok());
    }

    #[test]
    fn zero_phase_support_structure() {
        let cfg = WaveformConfig::new(4, 2, 1, None).unwrap();
        let w = design_zero_phase_weights(&cfg).unwrap();
        let s = C64::new(SQRT2, 0.0);
        assert_eq!(w.rows()[0], vec![s, ZERO, s, ZERO]);
        assert_eq!(w.rows()[1], vec![ZERO, s, ZERO, s]);
    }

    #[test]
    fn section5_design_row_structure() {
        let cfg = WaveformConfig::new(512, 4, 61, None).unwrap();
        let w = design_subcarrier_weights(&cfg).unwrap();
        for (m, row) in w.rows().iter().enumerate() {
            let nz: Vec<usize> = (0..512).filter(|&k| row[k] != ZERO).collect();
            assert_eq!(nz.len(), 128);
            assert!(nz.iter().all(|k| k % 4 == m));
            assert!(nz.iter().all(|&k| (row[k].norm() - 2.0).abs() < 1e-14));
        }
        let total: f64 = w.rows().iter().flatten().map(|z| z.norm_sqr()).sum();
        assert!((total - 512.0 * 4.0).abs() < 1e-9);
        assert!((w.mean_power() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_point_synthesis() {
        // N0 = 2, mu = 1: phases [0, -π/2] so U = [1, -j].
        let cfg = WaveformConfig::new(2, 1, 1, None).unwrap();
        let w = design_subcarrier_weights(&cfg).unwrap();
        assert!((w.rows()[0][1] - C64::new(0.0, -1.0)).norm() < 1e-15);
        let tx = synthesize_tx(&w, 1).unwrap();
        assert_eq!(tx.cp_len(), 0);
        let u = &tx.sequences()[0];
        assert_eq!(u.len(), 2);
        assert!((u[0] - C64::new(1.0, -1.0) / SQRT2).norm() < 1e-15);
        assert!((u[1] - C64::new(1.0, 1.0) / SQRT2).norm() < 1e-15);
    }

    #[test]
    fn cyclic_prefix_is_exact_copy() {
        let cfg = WaveformConfig::new(512, 4, 61, None).unwrap();
        let tx = synthesize_tx(&design_subcarrier_weights(&cfg).unwrap(), 61).unwrap();
        assert_eq!(tx.cp_len(), 60);
        for row in tx.sequences() {
            assert_eq!(row.len(), 572);
            for n in 0..60 {
                assert_eq!(row[n], row[n + 512]);
            }
        }
    }

    #[test]
    fn synthesis_rejects_long_zone() {
        let cfg = WaveformConfig::new(512, 4, 61, None).unwrap();
        let w = design_subcarrier_weights(&cfg).unwrap();
        assert!(synthesize_tx(&w, 128).is_err());
        assert!(synthesize_tx(&w, 0).is_err());
    }

    #[test]
    fn papr_examples() {
        let cm = [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, -1.0)];
        assert!(papr_db(&cm).unwrap().abs() < 1e-12);
        let imp = [C64::new(1.0, 0.0), ZERO, ZERO, ZERO];
        assert!((papr_db(&imp).unwrap() - 10.0 * 4f64.log10()).abs() < 1e-12);
        assert!(papr_db(&[ZERO, ZERO]).is_err());
        assert!(papr_db(&[]).is_err());
    }

    fn valid_config() -> impl Strategy<Value = WaveformConfig> {
        (1usize..=8, 2usize..=96).prop_flat_map(|(m, n0)| {
            let coprimes: Vec<usize> = (1..n0).filter(|&u| gcd(u, n0) == 1).collect();
            (
                Just(m),
                Just(n0),
                1..n0,
                proptest::collection::vec(proptest::sample::select(coprimes), m),
            )
                .prop_map(|(m, n0, l, roots)| WaveformConfig::new(n0 * m, m, l, Some(roots)).unwrap())
        })
    }

    proptest! {
        #[test]
        fn designed_weights_invariants(cfg in valid_config()) {
            let w = design_subcarrier_weights(&cfg).unwrap();
            let m = cfg.tx_count;
            let amp = (m as f64).sqrt();
            for (ant, row) in w.rows().iter().enumerate() {
                for (k, z) in row.iter().enumerate() {
                    if k % m == ant {
                        prop_assert!((z.norm() - amp).abs() < 1e-12);
                    } else {
                        prop_assert_eq!(*z, ZERO);
                    }
                }
            }
            for a in 0..m {
                for b in 0..m {
                    if a != b {
                        let ip: C64 = w.rows()[a].iter().zip(&w.rows()[b]).map(|(x, y)| x.conj() * y).sum();
                        prop_assert_eq!(ip, ZERO);
                    }
                }
            }
            prop_assert!((w.mean_power() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn constant_modulus_sequences(cfg in valid_config()) {
            let w = design_subcarrier_weights(&cfg).unwrap();
            let tx = synthesize_tx(&w, cfg.cells).unwrap();
            for row in tx.sequences() {
                for z in row {
                    prop_assert!((z.norm() - 1.0).abs() < 1e-10);
                }
                prop_assert!(papr_db(row).unwrap().abs() < 1e-9);
                for n in 0..tx.cp_len() {
                    prop_assert_eq!(row[n], row[n + cfg.subcarriers]);
                }
            }
        }

        #[test]
        fn zc_idft_has_unit_modulus(cfg in valid_config()) {
            let n0 = cfg.per_antenna();
            for &mu in &cfg.roots {
                let spectrum = zadoff_chu_phasors(n0, mu);
                let phi = dft_unitary(&spectrum, Direction::Inverse).unwrap();
                for z in phi {
                    prop_assert!((z.norm() - 1.0).abs() < 1e-10);
                }
            }
        }
    }
}
