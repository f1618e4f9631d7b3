//! TOML experiment configuration. Angles are given in degrees and
//! amplitudes in dB so every physical assumption stays readable; `build`
//! converts them into the scenario, jammer and design types.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::optimizer::{DesignConfig, RadarModel, Scheme, SidelobeMode, ThresholdRatios};
use crate::radar::CfarConfig;
use crate::signal::{isrj_mask, ComplexVector, JammerProfile, Scenario};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelModel {
    /// I.i.d. CN(0, 1) entries, redrawn per trial.
    #[default]
    Rayleigh,
    /// `H = I`; needs as many users as transmit antennas.
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioBlock {
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_users: usize,
    pub n_slots: usize,
    pub detection_angles_deg: Vec<f64>,
    pub target_angles_deg: Vec<f64>,
    /// Target amplitudes relative to a unit reflector.
    pub target_amplitudes_db: Vec<f64>,
    /// Round-trip delay of each target in samples.
    pub target_delays: Vec<usize>,
    /// Target whose echo power defines the sensing SNR.
    #[serde(default)]
    pub reference_target: usize,
    /// Target whose detection counts towards Pd.
    pub detect_target: usize,
    pub jammer_angle_deg: f64,
    /// Jammer-to-signal power ratio against the reference target.
    pub jsr_db: f64,
    /// Round-trip delay of the repeated signal in samples.
    #[serde(default)]
    pub jammer_delay: usize,
    #[serde(default)]
    pub comm_noise_power: f64,
    #[serde(default)]
    pub channel: ChannelModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JammerBlock {
    #[serde(default = "yes")]
    pub enabled: bool,
    pub pulse_width: f64,
    pub repetition_period: f64,
    pub n_slices: usize,
    /// Signal bandwidth in Hz; the sample interval is its inverse.
    pub bandwidth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignBlock {
    pub scheme: Scheme,
    #[serde(default)]
    pub sidelobe_mode: SidelobeMode,
    /// Thresholds as multiples of the LFM matched-filter mainlobe power,
    /// unless explicit per-angle lists are given below.
    #[serde(default)]
    pub ratios: ThresholdRatios,
    pub target_mainlobe_floor: Option<Vec<f64>>,
    pub jamming_mainlobe_cap: Option<Vec<f64>>,
    pub sidelobe_cap: Option<Vec<f64>>,
    pub jamming_sidelobe_cap: Option<Vec<f64>>,
    pub tx_power: f64,
    pub penalty: f64,
    pub max_outer_iters: usize,
    pub inner_tol: f64,
    pub inner_max_iters: usize,
    pub smoothing_eps: f64,
    pub stop_residual: f64,
}

impl Default for DesignBlock {
    fn default() -> Self {
        let d = DesignConfig::default();
        Self {
            scheme: Scheme::Jtmmd,
            sidelobe_mode: d.sidelobe_mode,
            ratios: ThresholdRatios::default(),
            target_mainlobe_floor: None,
            jamming_mainlobe_cap: None,
            sidelobe_cap: None,
            jamming_sidelobe_cap: None,
            tx_power: d.tx_power,
            penalty: d.penalty,
            max_outer_iters: d.max_outer_iters,
            inner_tol: d.inner_tol,
            inner_max_iters: d.inner_max_iters,
            smoothing_eps: d.smoothing_eps,
            stop_residual: d.stop_residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationBlock {
    /// Sensing SNR grid of the Pd sweep, ascending.
    pub snr_db: Vec<f64>,
    /// Sensing SNR of single `detect` runs.
    pub detect_snr_db: f64,
    pub n_trials: usize,
    /// Channel draws of the MUI evaluation.
    pub mui_trials: usize,
    pub pfa: f64,
    pub n_train: usize,
    pub n_guard: usize,
    /// Range-cell slack of the Pd event.
    #[serde(default = "one")]
    pub cell_tolerance: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioBlock,
    pub jammer: JammerBlock,
    #[serde(default)]
    pub design: DesignBlock,
    pub evaluation: EvaluationBlock,
    pub output: OutputBlock,
}

fn yes() -> bool {
    true
}

fn one() -> usize {
    1
}

/// Everything a run needs, in solver units.
#[derive(Debug, Clone)]
pub struct Setup {
    pub scenario: Scenario,
    pub jammer: JammerProfile,
    pub mask: ComplexVector,
    pub model: RadarModel,
    pub design: DesignConfig,
    pub delays: Vec<usize>,
    pub cfar: CfarConfig,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Canonical TOML rendering; equal configs render identically.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    /// Hex SHA-256 of the canonical rendering.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let s = &self.scenario;
        let w = s.target_angles_deg.len();
        if s.target_amplitudes_db.len() != w || s.target_delays.len() != w {
            return bad(format!(
                "{w} target angles need as many amplitudes and delays, got {} and {}",
                s.target_amplitudes_db.len(),
                s.target_delays.len()
            ));
        }
        if w == 0 {
            return bad("at least one target is required".into());
        }
        if s.reference_target >= w || s.detect_target >= w {
            return bad(format!(
                "reference_target {} / detect_target {} out of range for {w} targets",
                s.reference_target, s.detect_target
            ));
        }
        if let Some(&d) = s.target_delays.iter().find(|&&d| d >= s.n_slots) {
            return bad(format!(
                "target delay {d} must be below n_slots {}",
                s.n_slots
            ));
        }
        if s.jammer_delay >= s.n_slots {
            return bad(format!(
                "jammer delay {} must be below n_slots {}",
                s.jammer_delay, s.n_slots
            ));
        }
        if s.channel == ChannelModel::Identity && s.n_users != s.n_tx {
            return bad("identity channel needs n_users == n_tx".into());
        }
        if !s.jsr_db.is_finite() || s.target_amplitudes_db.iter().any(|a| !a.is_finite()) {
            return bad("amplitudes must be finite".into());
        }

        let e = &self.evaluation;
        if e.snr_db.is_empty() {
            return bad("snr_db grid is empty".into());
        }
        if e.snr_db.iter().any(|x| !x.is_finite()) || e.snr_db.windows(2).any(|p| p[0] >= p[1]) {
            return bad("snr_db grid must be finite and strictly ascending".into());
        }
        if e.n_trials == 0 || e.mui_trials == 0 {
            return bad("n_trials and mui_trials must be at least 1".into());
        }
        if !self.jammer.bandwidth.is_finite() || self.jammer.bandwidth <= 0.0 {
            return bad("jammer bandwidth must be positive".into());
        }
        let d = &self.design;
        for (name, list) in [
            ("target_mainlobe_floor", &d.target_mainlobe_floor),
            ("jamming_mainlobe_cap", &d.jamming_mainlobe_cap),
            ("sidelobe_cap", &d.sidelobe_cap),
            ("jamming_sidelobe_cap", &d.jamming_sidelobe_cap),
        ] {
            if let Some(l) = list {
                if l.len() != s.detection_angles_deg.len() {
                    return bad(format!(
                        "{name} needs one entry per detection angle ({})",
                        s.detection_angles_deg.len()
                    ));
                }
            }
        }
        let r = d.ratios;
        if ![r.target_floor, r.jamming_cap, r.sidelobe_cap]
            .iter()
            .chain(r.jamming_sidelobe_cap.iter())
            .all(|x| *x > 0.0 && x.is_finite())
        {
            return bad("threshold ratios must be positive".into());
        }
        // Catches the remaining scenario, jammer, design and CFAR invariants.
        self.build().map(|_| ())
    }

    pub fn scenario(&self) -> Scenario {
        let s = &self.scenario;
        let amp = |db: f64| Complex64::new(10f64.powf(db / 20.0), 0.0);
        let reference = amp(s
            .target_amplitudes_db
            .get(s.reference_target)
            .copied()
            .unwrap_or(0.0));
        Scenario {
            n_tx: s.n_tx,
            n_rx: s.n_rx,
            n_users: s.n_users,
            n_slots: s.n_slots,
            detection_angles: s
                .detection_angles_deg
                .iter()
                .map(|d| d.to_radians())
                .collect(),
            target_angles: s.target_angles_deg.iter().map(|d| d.to_radians()).collect(),
            target_amplitudes: s.target_amplitudes_db.iter().map(|&d| amp(d)).collect(),
            jammer_angle: s.jammer_angle_deg.to_radians(),
            jammer_amplitude: reference * 10f64.powf(s.jsr_db / 20.0),
            jammer_delay: s.jammer_delay,
            comm_noise_power: s.comm_noise_power,
            sense_noise_power: 0.0,
        }
    }

    pub fn jammer(&self) -> JammerProfile {
        let j = &self.jammer;
        JammerProfile {
            pulse_width: j.pulse_width,
            repetition_period: j.repetition_period,
            n_slices: j.n_slices,
            sample_interval: 1.0 / j.bandwidth,
            enabled: j.enabled,
        }
    }

    pub fn cfar(&self) -> CfarConfig {
        CfarConfig {
            pfa: self.evaluation.pfa,
            n_train: self.evaluation.n_train,
            n_guard: self.evaluation.n_guard,
        }
    }

    pub fn build(&self) -> Result<Setup> {
        let config_err = |e: Error| match e {
            Error::InvalidArgument(m) => Error::Config(m),
            other => other,
        };
        let scenario = self.scenario();
        scenario.validate().map_err(config_err)?;
        let jammer = self.jammer();
        jammer.validate().map_err(config_err)?;
        let cfar = self.cfar();
        cfar.validate().map_err(config_err)?;
        let mask = isrj_mask(&jammer, scenario.n_slots);
        let model = RadarModel::new(&scenario, &mask).map_err(config_err)?;

        let d = &self.design;
        let mut design =
            DesignConfig::with_reference_thresholds(&model, d.ratios).map_err(config_err)?;
        if let Some(l) = &d.target_mainlobe_floor {
            design.target_mainlobe_floor = l.clone();
        }
        if let Some(l) = &d.jamming_mainlobe_cap {
            design.jamming_mainlobe_cap = l.clone();
        }
        if let Some(l) = &d.sidelobe_cap {
            design.sidelobe_cap = l.clone();
        }
        if let Some(l) = &d.jamming_sidelobe_cap {
            design.jamming_sidelobe_cap = Some(l.clone());
        }
        design.sidelobe_mode = d.sidelobe_mode;
        design.tx_power = d.tx_power;
        design.penalty = d.penalty;
        design.max_outer_iters = d.max_outer_iters;
        design.inner_tol = d.inner_tol;
        design.inner_max_iters = d.inner_max_iters;
        design.smoothing_eps = d.smoothing_eps;
        design.stop_residual = d.stop_residual;
        design.validate(model.n_angles()).map_err(config_err)?;

        Ok(Setup {
            scenario,
            jammer,
            mask,
            model,
            design,
            delays: self.scenario.target_delays.clone(),
            cfar,
        })
    }
}
