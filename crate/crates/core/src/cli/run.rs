//! Experiment execution. Every run yields an in-memory set of named text
//! files; nothing here touches the filesystem.

use serde_json::{json, Value};

use crate::analysis::{
    empirical_output_snr, max_snr, monte_carlo, normalized_db, pointing_weights, predicted_snr, pslr_db,
    periodicity_check, replica_levels_db, snr_error, to_db, PointingErrorReport, MIN_TRIALS,
};
use crate::baselines::{
    conventional_ofdm_capture, conventional_ofdm_profile_from_capture, default_lfm, lfm_correlation,
};
use crate::channel::{apply_doppler_residue, doppler_frequency, simulate_rx, Scene};
use crate::cli::config::{Experiment, RunConfig};
use crate::cli::output::{complex_json, profile_csv, Table};
use crate::geometry::{ArrayGeometry, RadarParams};
use crate::numerics::{trial_seed, C64, RNG_ALGORITHM};
use crate::receiver::{reconstruct_with_pointing_error, PointingEstimate, RangeProfile};
use crate::waveform::{design_subcarrier_weights, synthesize_tx, SubcarrierWeights, WaveformConfig};
use crate::{Error, Result};

/// Noise streams for the two baselines are drawn from fixed offsets of the
/// base seed so they never coincide with a CP-OFDM trial stream.
const CONV_STREAM: u64 = u64::MAX - 1;
const LFM_STREAM: u64 = u64::MAX - 2;

pub const DOPPLER_MODEL: &str =
    "residual Doppler f_d = 2*dv*f_c/c applied as a common phase ramp exp(j*2*pi*f_d*n*T_s) over the capture";
pub const MAINLOBE_RULE: &str =
    "mainlobe = scene cells with non-zero coefficient; every other cell of the evaluated profile is a sidelobe";

/// Named output files in write order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutput {
    pub files: Vec<(String, String)>,
}

impl RunOutput {
    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }
}

/// Provenance stamped on every output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stamp {
    pub config_sha256: String,
    pub seed: u64,
}

struct Setup {
    params: RadarParams,
    geom: ArrayGeometry,
    wcfg: WaveformConfig,
    weights: SubcarrierWeights,
    scene: Scene,
    est: PointingEstimate,
    noise_power: f64,
    seed: u64,
    trials: usize,
}

impl Setup {
    fn new(cfg: &RunConfig) -> Result<Self> {
        let params = cfg.radar_params();
        params.validate()?;
        let wcfg = cfg.waveform_config()?;
        Ok(Setup {
            params,
            geom: cfg.geometry()?,
            weights: design_subcarrier_weights(&wcfg)?,
            wcfg,
            scene: cfg.scene()?,
            est: cfg.pointing()?,
            noise_power: cfg.noise.power,
            seed: cfg.noise.seed,
            trials: cfg.noise.trials,
        })
    }

    fn cp_profile(&self, est: &PointingEstimate, seed: u64) -> Result<RangeProfile> {
        let tx = synthesize_tx(&self.weights, self.wcfg.cells)?;
        let cap = simulate_rx(&tx, &self.scene, &self.geom, &self.params, self.noise_power, seed)?;
        reconstruct_with_pointing_error(&cap, &self.weights, &self.geom, &self.params, est, self.wcfg.cells)
    }

    fn strongest_cell(&self) -> Option<usize> {
        let support = self.scene.support();
        support.into_iter().max_by(|&a, &b| self.scene.h[a].norm().total_cmp(&self.scene.h[b].norm()))
    }

    fn monte_carlo_enabled(&self) -> bool {
        self.trials >= MIN_TRIALS && self.noise_power > 0.0
    }

    fn report(&self, est: &PointingEstimate) -> PointingErrorReport {
        pointing_weights(&self.geom, &self.params, self.scene.dod, self.scene.doa, est)
    }
}

fn est_is_exact(est: &PointingEstimate, scene: &Scene) -> bool {
    est.dod_est == scene.dod && est.doa_est == scene.doa
}

fn opt_pslr(mags: &[f64], mainlobe: &[usize]) -> Option<f64> {
    if mainlobe.is_empty() {
        None
    } else {
        pslr_db(mags, mainlobe).ok()
    }
}

fn magnitudes(x: &[C64]) -> Vec<f64> {
    x.iter().map(|z| z.norm()).collect()
}

/// Runs the configured experiment. The config must already be validated.
pub fn run(cfg: &RunConfig, stamp: &Stamp) -> Result<RunOutput> {
    let mut setup = Setup::new(cfg)?;
    if let Experiment::Periodicity { tx_error_deg, rx_error_deg } = cfg.experiment {
        setup.est = PointingEstimate::new(
            setup.scene.dod + tx_error_deg.to_radians(),
            setup.scene.doa + rx_error_deg.to_radians(),
        )?;
    }
    let mut files = Vec::new();
    let mut metrics = serde_json::Map::new();

    let report = setup.report(&setup.est);
    metrics.insert("snr_loss_db".into(), json!(report.snr_loss_db));
    metrics.insert("weights".into(), Value::Array(report.weights.iter().map(|w| complex_json(*w)).collect()));
    metrics.insert("q_tilde".into(), complex_json(report.q_tilde));
    metrics.insert("m_tilde".into(), complex_json(report.m_tilde));

    match &cfg.experiment {
        Experiment::Profile => {
            profile_files(&setup, &report, stamp, &mut files, &mut metrics)?;
        }
        Experiment::CompareBaselines => {
            let profiles = profile_files(&setup, &report, stamp, &mut files, &mut metrics)?;
            compare_scatterers(&setup, &profiles, stamp, &mut files, &mut metrics);
        }
        Experiment::DopplerSweep { velocity_errors_mps } => {
            doppler_sweep(&setup, velocity_errors_mps, stamp, &mut files, &mut metrics)?;
        }
        Experiment::PointingSweep { errors_deg, antenna_counts } => {
            pointing_sweep(cfg, &setup, errors_deg, antenna_counts, stamp, &mut files, &mut metrics)?;
        }
        Experiment::Periodicity { .. } => {
            periodicity(&setup, stamp, &mut files, &mut metrics)?;
        }
    }

    metrics.insert("config_sha256".into(), json!(stamp.config_sha256));
    metrics.insert("seed".into(), json!(stamp.seed));
    metrics.insert("experiment".into(), json!(cfg.experiment.name()));
    files.push(("metrics.json".into(), pretty(&Value::Object(metrics))?));

    let mut names: Vec<&str> = files.iter().map(|(n, _)| n.as_str()).collect();
    names.push("manifest.json");
    let manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "config_sha256": stamp.config_sha256,
        "seed": stamp.seed,
        "trials": cfg.noise.trials,
        "rng": RNG_ALGORITHM,
        "trial_seeds": "trial i draws its noise from SplitMix64(seed, i)",
        "doppler_model": DOPPLER_MODEL,
        "pslr_mainlobe": MAINLOBE_RULE,
        "experiment": cfg.experiment.name(),
        "files": names,
        "config": cfg,
    });
    files.push(("manifest.json".into(), pretty(&manifest)?));
    Ok(RunOutput { files })
}

fn pretty(v: &Value) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

struct Profiles {
    cp: Vec<C64>,
    conv: Vec<C64>,
    lfm: Vec<C64>,
}

fn profile_files(
    s: &Setup,
    report: &PointingErrorReport,
    stamp: &Stamp,
    files: &mut Vec<(String, String)>,
    metrics: &mut serde_json::Map<String, Value>,
) -> Result<Profiles> {
    let cp = s.cp_profile(&s.est, s.seed)?.h_hat;
    let conv_cap = conventional_ofdm_capture(
        &s.scene,
        &s.weights,
        &s.geom,
        &s.params,
        s.noise_power,
        trial_seed(s.seed, CONV_STREAM),
    )?;
    let conv = conventional_ofdm_profile_from_capture(&conv_cap, &s.scene, &s.weights, &s.geom, &s.params)?;
    let lfm = lfm_correlation(
        &s.scene,
        &default_lfm(&s.params)?,
        &s.geom,
        &s.params,
        s.noise_power,
        trial_seed(s.seed, LFM_STREAM),
    )?;

    files.push(("cp_ofdm_profile.csv".into(), profile_csv(&cp, stamp)));
    files.push(("conventional_ofdm_profile.csv".into(), profile_csv(&conv, stamp)));
    files.push(("lfm_profile.csv".into(), profile_csv(&lfm, stamp)));

    let support = s.scene.support();
    metrics.insert(
        "pslr_db".into(),
        json!({
            "cp_ofdm": opt_pslr(&magnitudes(&cp), &support),
            "conventional_ofdm": opt_pslr(&magnitudes(&conv), &support),
            "lfm": opt_pslr(&magnitudes(&lfm), &support),
        }),
    );

    let (mut pred, mut emp) = (None, None);
    if let (Some(cell), true) = (s.strongest_cell(), s.noise_power > 0.0) {
        let h = s.scene.h[cell];
        let snr = if est_is_exact(&s.est, &s.scene) {
            let spectrum = crate::receiver::equivalent_spectrum(&s.weights, &s.geom, &s.params, s.scene.dod)?;
            predicted_snr(h, s.noise_power, &spectrum, s.geom.rx_count())?
        } else {
            snr_error(report, h, s.noise_power, &s.params)?
        };
        pred = Some(to_db(snr));
        if s.monte_carlo_enabled() {
            let trials = monte_carlo(s.trials, s.seed, |seed| s.cp_profile(&s.est, seed))?;
            emp = Some(to_db(empirical_output_snr(&trials, cell)?));
        }
    }
    metrics.insert("snr_pred_db".into(), json!(pred));
    metrics.insert("snr_emp_db".into(), json!(emp));
    Ok(Profiles { cp, conv, lfm })
}

fn compare_scatterers(
    s: &Setup,
    p: &Profiles,
    stamp: &Stamp,
    files: &mut Vec<(String, String)>,
    metrics: &mut serde_json::Map<String, Value>,
) {
    let cells = s.wcfg.cells;
    let support = s.scene.support();
    let truth = normalized_db(&magnitudes(&s.scene.h));
    let cp = normalized_db(&magnitudes(&p.cp[..cells]));
    let conv = normalized_db(&magnitudes(&p.conv));
    let lfm = normalized_db(&magnitudes(&p.lfm));
    let floor = |db: &[f64]| {
        (0..cells).filter(|i| !support.contains(i)).map(|i| db[i]).fold(f64::NEG_INFINITY, f64::max)
    };
    let (conv_floor, lfm_floor) = (floor(&conv), floor(&lfm));

    let mut table = Table::new(stamp, &["cell", "true_db", "cp_ofdm_db", "conventional_ofdm_db", "lfm_db"]);
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for &c in &support {
        table.row(&[c.to_string(), fmt(truth[c]), fmt(cp[c]), fmt(conv[c]), fmt(lfm[c])]);
        worst = worst.max((cp[c] - truth[c]).abs());
        rows.push(json!({
            "cell": c,
            "true_db": truth[c],
            "cp_ofdm_db": cp[c],
            "conventional_ofdm_db": conv[c],
            "lfm_db": lfm[c],
            "conventional_ofdm_missed": conv[c] <= conv_floor,
            "lfm_missed": lfm[c] <= lfm_floor,
        }));
    }
    files.push(("scatterers.csv".into(), table.finish()));
    metrics.insert("scatterers".into(), Value::Array(rows));
    metrics.insert("cp_ofdm_max_level_error_db".into(), json!(worst));
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

fn doppler_sweep(
    s: &Setup,
    velocities: &[f64],
    stamp: &Stamp,
    files: &mut Vec<(String, String)>,
    metrics: &mut serde_json::Map<String, Value>,
) -> Result<()> {
    let cells = s.wcfg.cells;
    let n0 = s.wcfg.per_antenna();
    let m = s.params.tx_count;
    let support = s.scene.support();
    let target = s.strongest_cell();
    let tx = synthesize_tx(&s.weights, cells)?;
    let clean = simulate_rx(&tx, &s.scene, &s.geom, &s.params, s.noise_power, s.seed)?;
    let conv_clean = conventional_ofdm_capture(
        &s.scene,
        &s.weights,
        &s.geom,
        &s.params,
        s.noise_power,
        trial_seed(s.seed, CONV_STREAM),
    )?;

    let mut table = Table::new(
        stamp,
        &["velocity_error_mps", "doppler_hz", "cp_peak_cell", "cp_zone_pslr_db", "max_replica_db", "conventional_ofdm_pslr_db"],
    );
    let mut rows = Vec::new();
    for (i, &dv) in velocities.iter().enumerate() {
        let cap = apply_doppler_residue(&clean, dv, &s.params);
        let prof = reconstruct_with_pointing_error(&cap, &s.weights, &s.geom, &s.params, &s.est, cells)?;
        let mags = prof.magnitudes();
        let peak = (0..mags.len()).max_by(|&a, &b| mags[a].total_cmp(&mags[b])).unwrap_or(0);
        let zone_pslr = opt_pslr(&mags[..cells], &support);
        let replica = match target {
            Some(c) if m > 1 => replica_levels_db(&mags, c, n0, m, 2)
                .ok()
                .and_then(|v| v.into_iter().reduce(f64::max)),
            _ => None,
        };
        let conv_cap = apply_doppler_residue(&conv_clean, dv, &s.params);
        let conv = conventional_ofdm_profile_from_capture(&conv_cap, &s.scene, &s.weights, &s.geom, &s.params)?;
        let conv_pslr = opt_pslr(&magnitudes(&conv), &support);

        files.push((format!("doppler_{i:02}_cp_ofdm.csv"), profile_csv(&prof.h_hat, stamp)));
        files.push((format!("doppler_{i:02}_conventional_ofdm.csv"), profile_csv(&conv, stamp)));
        let fd = doppler_frequency(dv, &s.params);
        let opt = |x: Option<f64>| x.map(fmt).unwrap_or_default();
        table.row(&[fmt(dv), fmt(fd), peak.to_string(), opt(zone_pslr), opt(replica), opt(conv_pslr)]);
        rows.push(json!({
            "velocity_error_mps": dv,
            "doppler_hz": fd,
            "cp_peak_cell": peak,
            "cp_zone_pslr_db": zone_pslr,
            "max_replica_db": replica,
            "conventional_ofdm_pslr_db": conv_pslr,
        }));
    }
    files.push(("doppler_sweep.csv".into(), table.finish()));
    metrics.insert("doppler_sweep".into(), Value::Array(rows));
    Ok(())
}

fn pointing_sweep(
    cfg: &RunConfig,
    s: &Setup,
    errors_deg: &[f64],
    antenna_counts: &[[usize; 2]],
    stamp: &Stamp,
    files: &mut Vec<(String, String)>,
    metrics: &mut serde_json::Map<String, Value>,
) -> Result<()> {
    let counts = if antenna_counts.is_empty() {
        vec![[s.params.tx_count, s.params.rx_count]]
    } else {
        antenna_counts.to_vec()
    };
    let target = s.strongest_cell();
    let mut table = Table::new(
        stamp,
        &["tx_count", "rx_count", "error_deg", "q_tilde_abs", "m_tilde_abs", "snr_loss_db", "mc_loss_db"],
    );
    let mut rows = Vec::new();
    for [m, q] in counts {
        let params = RadarParams { tx_count: m, rx_count: q, ..s.params };
        let roots = (m == s.params.tx_count).then(|| s.wcfg.roots.clone());
        let wcfg = WaveformConfig::new(params.subcarriers, m, s.wcfg.cells, roots)?;
        let geom = if m == s.params.tx_count && q == s.params.rx_count {
            cfg.geometry()?
        } else {
            ArrayGeometry::half_wavelength(&params)
        };
        let sub = Setup {
            params,
            geom,
            weights: design_subcarrier_weights(&wcfg)?,
            wcfg,
            scene: s.scene.clone(),
            est: s.est,
            noise_power: s.noise_power,
            seed: s.seed,
            trials: s.trials,
        };
        for &e in errors_deg {
            let est = PointingEstimate::new(
                s.scene.dod + e.to_radians(),
                s.scene.doa + e.to_radians(),
            )?;
            let report = sub.report(&est);
            let mc = match target {
                Some(cell) if sub.monte_carlo_enabled() => {
                    let trials = monte_carlo(sub.trials, sub.seed, |seed| sub.cp_profile(&est, seed))?;
                    let emp = empirical_output_snr(&trials, cell)?;
                    Some(to_db(max_snr(sub.scene.h[cell], sub.noise_power, &params)? / emp))
                }
                _ => None,
            };
            table.row(&[
                m.to_string(),
                q.to_string(),
                fmt(e),
                fmt(report.q_tilde.norm()),
                fmt(report.m_tilde.norm()),
                fmt(report.snr_loss_db),
                mc.map(fmt).unwrap_or_default(),
            ]);
            rows.push(json!({
                "tx_count": m,
                "rx_count": q,
                "error_deg": e,
                "q_tilde": complex_json(report.q_tilde),
                "m_tilde": complex_json(report.m_tilde),
                "snr_loss_db": report.snr_loss_db,
                "mc_loss_db": mc,
            }));
        }
    }
    files.push(("pointing_sweep.csv".into(), table.finish()));
    metrics.insert("pointing_sweep".into(), Value::Array(rows));
    Ok(())
}

fn periodicity(
    s: &Setup,
    stamp: &Stamp,
    files: &mut Vec<(String, String)>,
    metrics: &mut serde_json::Map<String, Value>,
) -> Result<()> {
    let m = s.params.tx_count;
    let n0 = s.wcfg.per_antenna();
    let prof = s.cp_profile(&s.est, s.seed)?;
    let report = s.report(&s.est);
    let w = &report.weights;
    let largest = w.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if !(w[0].norm() > 1e-12 * largest) {
        return Err(Error::Degenerate("period-0 weight vanishes; gains relative to it are undefined".into()));
    }
    let measured = periodicity_check(&prof, n0, m, &s.scene.support())?;
    let predicted: Vec<C64> = (0..m).map(|i| w[(m - i) % m] / w[0]).collect();
    let worst = measured.iter().zip(&predicted).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);

    files.push(("periodicity_profile.csv".into(), profile_csv(&prof.h_hat, stamp)));
    let mut table = Table::new(stamp, &["period", "measured_re", "measured_im", "predicted_re", "predicted_im"]);
    for (i, (a, b)) in measured.iter().zip(&predicted).enumerate() {
        table.row(&[i.to_string(), fmt(a.re), fmt(a.im), fmt(b.re), fmt(b.im)]);
    }
    files.push(("periodicity.csv".into(), table.finish()));
    metrics.insert("period_gains_measured".into(), Value::Array(measured.iter().map(|z| complex_json(*z)).collect()));
    metrics.insert("period_gains_predicted".into(), Value::Array(predicted.iter().map(|z| complex_json(*z)).collect()));
    metrics.insert("period_gain_max_error".into(), json!(worst));
    Ok(())
}

/// Waveform table `antenna,n,re,im` for the configured design.
pub fn design(cfg: &RunConfig, stamp: &Stamp) -> Result<String> {
    let wcfg = cfg.waveform_config()?;
    let tx = synthesize_tx(&design_subcarrier_weights(&wcfg)?, wcfg.cells)?;
    let mut table = Table::new(stamp, &["antenna", "n", "re", "im"]);
    for (a, seq) in tx.sequences().iter().enumerate() {
        for (n, z) in seq.iter().enumerate() {
            table.row(&[a.to_string(), n.to_string(), fmt(z.re), fmt(z.im)]);
        }
    }
    Ok(table.finish())
}
