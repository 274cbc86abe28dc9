//! Run configuration (JSON) and its validation.
//!
//! Angles are degrees in the file and radians everywhere else.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::channel::Scene;
use crate::geometry::{ArrayGeometry, RadarParams};
use crate::numerics::{C64, ZERO};
use crate::receiver::PointingEstimate;
use crate::waveform::{gcd, WaveformConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: RadarParams,
    pub waveform: WaveformSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub array: Option<ArraySettings>,
    pub scene: SceneSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pointing: Option<PointingSettings>,
    #[serde(default)]
    pub noise: NoiseSettings,
    pub experiment: Experiment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveformSettings {
    /// Tracking-zone length `L` in range cells.
    pub cells: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roots: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraySettings {
    pub tx_offsets_m: Vec<f64>,
    pub rx_offsets_m: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellEntry {
    pub index: usize,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSettings {
    pub cells: Vec<CellEntry>,
    pub dod_deg: f64,
    pub doa_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointingSettings {
    pub dod_est_deg: f64,
    pub doa_est_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSettings {
    #[serde(default)]
    pub power: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub trials: usize,
}

fn one() -> usize {
    1
}

impl Default for NoiseSettings {
    fn default() -> Self {
        NoiseSettings { power: 0.0, seed: 0, trials: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    /// CP-OFDM, conventional OFDM and LFM profiles of the scene.
    Profile,
    /// As `Profile`, plus per-scatterer recovery against the baselines.
    CompareBaselines,
    DopplerSweep { velocity_errors_mps: Vec<f64> },
    /// Same angular error applied to both departure and arrival steering.
    PointingSweep {
        errors_deg: Vec<f64>,
        /// `[tx_count, rx_count]` pairs; defaults to the configured array.
        #[serde(default)]
        antenna_counts: Vec<[usize; 2]>,
    },
    Periodicity {
        tx_error_deg: f64,
        #[serde(default)]
        rx_error_deg: f64,
    },
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Profile => "profile",
            Experiment::CompareBaselines => "compare_baselines",
            Experiment::DopplerSweep { .. } => "doppler_sweep",
            Experiment::PointingSweep { .. } => "pointing_sweep",
            Experiment::Periodicity { .. } => "periodicity",
        }
    }
}

/// One violated constraint. `field` is a dotted path into the config.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub field: String,
    pub message: String,
    pub line: Option<usize>,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}: {}", self.field, self.message),
            None => write!(f, "{}: {}", self.field, self.message),
        }
    }
}

impl RunConfig {
    /// Parses JSON, reporting syntax and schema errors with line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("line {} column {}: {e}", e.line(), e.column())))
    }

    pub fn radar_params(&self) -> RadarParams {
        self.params
    }

    pub fn waveform_config(&self) -> Result<WaveformConfig> {
        WaveformConfig::new(
            self.params.subcarriers,
            self.params.tx_count,
            self.waveform.cells,
            self.waveform.roots.clone(),
        )
    }

    pub fn geometry(&self) -> Result<ArrayGeometry> {
        match &self.array {
            Some(a) => ArrayGeometry::new(a.tx_offsets_m.clone(), a.rx_offsets_m.clone()),
            None => Ok(ArrayGeometry::half_wavelength(&self.params)),
        }
    }

    pub fn scene(&self) -> Result<Scene> {
        let mut h = vec![ZERO; self.waveform.cells];
        for c in &self.scene.cells {
            *h.get_mut(c.index)
                .ok_or_else(|| Error::Config(format!("scene cell {} outside tracking zone", c.index)))? =
                C64::new(c.re, c.im);
        }
        Scene::new(h, self.scene.dod_deg.to_radians(), self.scene.doa_deg.to_radians())
    }

    pub fn pointing(&self) -> Result<PointingEstimate> {
        match self.pointing {
            Some(p) => PointingEstimate::new(p.dod_est_deg.to_radians(), p.doa_est_deg.to_radians()),
            None => PointingEstimate::new(self.scene.dod_deg.to_radians(), self.scene.doa_deg.to_radians()),
        }
    }

    /// Every violated invariant; empty when the config is runnable.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let mut diag = |field: &str, message: String| {
            out.push(Diagnostic { field: field.to_string(), message, line: None })
        };
        let p = &self.params;
        if !(p.carrier_hz > 0.0 && p.carrier_hz.is_finite()) {
            diag("params.carrier_hz", "carrier frequency must be positive".into());
        }
        if !(p.bandwidth_hz > 0.0 && p.bandwidth_hz.is_finite()) {
            diag("params.bandwidth_hz", "bandwidth must be positive".into());
        }
        if p.rx_count < 1 {
            diag("params.rx_count", "need at least one receive antenna".into());
        }
        let mut n0 = None;
        if p.tx_count < 1 || p.subcarriers < p.tx_count {
            diag("params.tx_count", format!("need N >= M >= 1 (N={}, M={})", p.subcarriers, p.tx_count));
        } else if !p.subcarriers.is_multiple_of(p.tx_count) {
            diag(
                "params.subcarriers",
                format!("N must be multiple of M (N={}, M={}) for the interleaved subcarrier layout", p.subcarriers, p.tx_count),
            );
        } else if p.subcarriers / p.tx_count < 2 {
            diag("params.subcarriers", "need at least two subcarriers per antenna (N/M >= 2)".into());
        } else {
            n0 = Some(p.subcarriers / p.tx_count);
        }

        let cells = self.waveform.cells;
        if cells < 1 {
            diag("waveform.cells", "tracking zone needs at least one cell (L >= 1)".into());
        }
        if let Some(n0) = n0 {
            if cells >= n0 {
                diag(
                    "waveform.cells",
                    format!("tracking zone must be shorter than one aliasing period: L < N0 = N/M (L={cells}, N0={n0})"),
                );
            }
            if let Some(roots) = &self.waveform.roots {
                if roots.len() != p.tx_count {
                    diag("waveform.roots", format!("need one Zadoff-Chu root per transmit antenna ({})", p.tx_count));
                }
                for (i, &mu) in roots.iter().enumerate() {
                    if mu == 0 || mu >= n0 || gcd(mu, n0) != 1 {
                        diag(
                            &format!("waveform.roots[{i}]"),
                            format!("Zadoff-Chu root must satisfy 0 < mu < N0 and gcd(mu, N0) = 1 (mu={mu}, N0={n0})"),
                        );
                    }
                }
            }
        }

        if let Some(a) = &self.array {
            for (name, offs, count) in [
                ("array.tx_offsets_m", &a.tx_offsets_m, p.tx_count),
                ("array.rx_offsets_m", &a.rx_offsets_m, p.rx_count),
            ] {
                if offs.len() != count {
                    diag(name, format!("expected {count} element offsets, got {}", offs.len()));
                }
                if offs.first().is_some_and(|&d| d != 0.0) {
                    diag(name, "element 0 is the reference and must have offset 0".into());
                }
                if offs.iter().any(|d| !d.is_finite() || *d < 0.0) {
                    diag(name, "offsets must be finite and non-negative".into());
                }
            }
        }

        let angle_ok = |deg: f64| deg.is_finite() && deg.abs() < 90.0;
        if !angle_ok(self.scene.dod_deg) {
            diag("scene.dod_deg", "departure angle must lie in (-90, 90) degrees".into());
        }
        if !angle_ok(self.scene.doa_deg) {
            diag("scene.doa_deg", "arrival angle must lie in (-90, 90) degrees".into());
        }
        let mut seen = std::collections::BTreeSet::new();
        for (i, c) in self.scene.cells.iter().enumerate() {
            if c.index >= cells {
                diag(
                    &format!("scene.cells[{i}].index"),
                    format!("cell {} is outside the tracking zone of {cells} cells", c.index),
                );
            }
            if !seen.insert(c.index) {
                diag(&format!("scene.cells[{i}].index"), format!("cell {} listed twice", c.index));
            }
            if !c.re.is_finite() || !c.im.is_finite() {
                diag(&format!("scene.cells[{i}]"), "coefficient must be finite".into());
            }
        }
        if let Some(pt) = &self.pointing {
            if !angle_ok(pt.dod_est_deg) {
                diag("pointing.dod_est_deg", "estimated departure angle must lie in (-90, 90) degrees".into());
            }
            if !angle_ok(pt.doa_est_deg) {
                diag("pointing.doa_est_deg", "estimated arrival angle must lie in (-90, 90) degrees".into());
            }
        }

        let noise = &self.noise;
        if !(noise.power >= 0.0 && noise.power.is_finite()) {
            diag("noise.power", "noise power must be finite and >= 0".into());
        }
        if noise.trials < 1 {
            diag("noise.trials", "need at least one trial".into());
        } else if noise.trials > 1 && noise.trials < crate::analysis::MIN_TRIALS {
            diag(
                "noise.trials",
                format!("Monte-Carlo estimates need at least {} trials (got {})", crate::analysis::MIN_TRIALS, noise.trials),
            );
        }

        match &self.experiment {
            Experiment::Profile | Experiment::CompareBaselines => {}
            Experiment::DopplerSweep { velocity_errors_mps } => {
                if velocity_errors_mps.is_empty() {
                    diag("experiment.velocity_errors_mps", "sweep list is empty".into());
                }
                if velocity_errors_mps.iter().any(|v| !v.is_finite()) {
                    diag("experiment.velocity_errors_mps", "velocity errors must be finite".into());
                }
            }
            Experiment::PointingSweep { errors_deg, antenna_counts } => {
                if errors_deg.is_empty() {
                    diag("experiment.errors_deg", "sweep list is empty".into());
                }
                for (i, e) in errors_deg.iter().enumerate() {
                    if !angle_ok(self.scene.dod_deg + e) || !angle_ok(self.scene.doa_deg + e) {
                        diag(
                            &format!("experiment.errors_deg[{i}]"),
                            "steered angle leaves (-90, 90) degrees".into(),
                        );
                    }
                }
                if self.array.is_some() && !antenna_counts.is_empty() {
                    diag("experiment.antenna_counts", "antenna sweeps use half-wavelength ULAs; drop `array`".into());
                }
                for (i, [m, q]) in antenna_counts.iter().enumerate() {
                    let field = format!("experiment.antenna_counts[{i}]");
                    if *m < 1 || *q < 1 {
                        diag(&field, "antenna counts must be positive".into());
                    } else if !p.subcarriers.is_multiple_of(*m) {
                        diag(&field, format!("N must be multiple of M (N={}, M={m})", p.subcarriers));
                    } else if cells >= p.subcarriers / m {
                        diag(
                            &field,
                            format!("tracking zone must be shorter than one aliasing period: L < N/M = {}", p.subcarriers / m),
                        );
                    }
                }
            }
            Experiment::Periodicity { tx_error_deg, rx_error_deg } => {
                if !angle_ok(self.scene.dod_deg + tx_error_deg) {
                    diag("experiment.tx_error_deg", "steered departure angle leaves (-90, 90) degrees".into());
                }
                if !angle_ok(self.scene.doa_deg + rx_error_deg) {
                    diag("experiment.rx_error_deg", "steered arrival angle leaves (-90, 90) degrees".into());
                }
                if self.scene.cells.iter().all(|c| c.re == 0.0 && c.im == 0.0) {
                    diag("scene.cells", "periodicity needs at least one non-zero scatterer".into());
                }
            }
        }
        out
    }
}

/// Best-effort source line of a dotted field path such as
/// `scene.cells[2].index` within the raw JSON text.
pub fn locate(text: &str, field: &str) -> Option<usize> {
    let mut pos = 0;
    for seg in field.split('.') {
        let (name, index) = match seg.find('[') {
            Some(b) => (&seg[..b], seg[b + 1..seg.len() - 1].parse::<usize>().ok()),
            None => (seg, None),
        };
        let key = format!("\"{name}\"");
        pos += text[pos..].find(&key)? + key.len();
        if let Some(i) = index {
            pos += nth_element(&text[pos..], i)?;
        }
    }
    Some(text[..pos].matches('\n').count() + 1)
}

/// Byte offset of the start of element `i` of the first JSON array in `text`.
fn nth_element(text: &str, i: usize) -> Option<usize> {
    let open = text.find('[')?;
    let (mut depth, mut count, mut in_str, mut escaped) = (0usize, 0usize, false, false);
    let mut expecting = true;
    for (off, ch) in text[open + 1..].char_indices() {
        if in_str {
            match (escaped, ch) {
                (true, _) => escaped = false,
                (false, '\\') => escaped = true,
                (false, '"') => in_str = false,
                _ => {}
            }
            continue;
        }
        if depth == 0 && expecting && !ch.is_whitespace() {
            if ch == ']' {
                return None;
            }
            if count == i {
                return Some(open + 1 + off);
            }
            expecting = false;
        }
        match ch {
            '"' => in_str = true,
            '[' | '{' => depth += 1,
            ']' | '}' if depth == 0 => return None,
            ']' | '}' => depth -= 1,
            ',' if depth == 0 => {
                count += 1;
                expecting = true;
            }
            _ => {}
        }
    }
    None
}

/// Validation with source lines filled in from `text`.
pub fn validate_text(config: &RunConfig, text: &str) -> Vec<Diagnostic> {
    config
        .validate()
        .into_iter()
        .map(|mut d| {
            d.line = locate(text, &d.field);
            d
        })
        .collect()
}
