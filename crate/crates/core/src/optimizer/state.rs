use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::model::{ModelOutputs, RadarModel};
use super::xsolve::XWarmStart;
use crate::error::{Error, Result};
use crate::signal::{lfm_waveform, max_modulus, ComplexMatrix, ComplexVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Matched filters tied to the waveform by consensus.
    Jtmd,
    /// Free unit-norm mismatched filters.
    Jtmmd,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Jtmd => "jtmd",
            Scheme::Jtmmd => "jtmmd",
        })
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jtmd" => Ok(Scheme::Jtmd),
            "jtmmd" => Ok(Scheme::Jtmmd),
            other => Err(Error::InvalidArgument(format!("unknown scheme '{other}'"))),
        }
    }
}

/// Which filter output the sidelobe caps apply to.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SidelobeMode {
    /// `z = b + d`, target and jamming at equal unit amplitude.
    #[default]
    Combined,
    /// `b` only.
    Target,
    /// `b` and `d` each, which bounds `α·b + α₀·d` for any amplitudes.
    Separate,
}

impl SidelobeMode {
    /// Number of `2P − 1`-lag blocks in the constrained output.
    pub fn blocks(self) -> usize {
        match self {
            SidelobeMode::Separate => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for SidelobeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SidelobeMode::Combined => "combined",
            SidelobeMode::Target => "target",
            SidelobeMode::Separate => "separate",
        })
    }
}

impl std::str::FromStr for SidelobeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "combined" => Ok(SidelobeMode::Combined),
            "target" => Ok(SidelobeMode::Target),
            "separate" => Ok(SidelobeMode::Separate),
            other => Err(Error::InvalidArgument(format!(
                "unknown sidelobe mode '{other}'"
            ))),
        }
    }
}

/// Thresholds and solver budget of one design run.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignConfig {
    /// ζ_l, lower bound on the target mainlobe power.
    pub target_mainlobe_floor: Vec<f64>,
    /// ε_l, upper bound on the jamming mainlobe power.
    pub jamming_mainlobe_cap: Vec<f64>,
    /// ϵ_l, upper bound on every sidelobe power.
    pub sidelobe_cap: Vec<f64>,
    /// Cap on the jamming block in separate mode; `None` reuses `sidelobe_cap`.
    pub jamming_sidelobe_cap: Option<Vec<f64>>,
    /// Per-slot transmit power budget P_t.
    pub tx_power: f64,
    /// ADMM penalty ρ.
    pub penalty: f64,
    pub max_outer_iters: usize,
    /// Relative tolerance of the waveform subproblem solver.
    pub inner_tol: f64,
    pub inner_max_iters: usize,
    /// Smoothing of the MUI norm is `smoothing_eps · √(M·P)`.
    pub smoothing_eps: f64,
    /// Early stop once every primal residual drops below this.
    pub stop_residual: f64,
    pub sidelobe_mode: SidelobeMode,
}

/// Ratios used to derive default thresholds from the LFM reference mainlobe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRatios {
    pub target_floor: f64,
    pub jamming_cap: f64,
    pub sidelobe_cap: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jamming_sidelobe_cap: Option<f64>,
}

impl Default for ThresholdRatios {
    fn default() -> Self {
        Self {
            target_floor: 0.8,
            jamming_cap: 0.01,
            sidelobe_cap: 0.001,
            jamming_sidelobe_cap: None,
        }
    }
}

impl DesignConfig {
    /// Thresholds scaled from the matched-filter mainlobe of the LFM start:
    /// `ζ_l = r_t·|b_l[P]|²`, `ε_l = r_j·ζ_l`, `ϵ_l = r_s·ζ_l`.
    pub fn with_reference_thresholds(model: &RadarModel, ratios: ThresholdRatios) -> Result<Self> {
        let x = lfm_waveform(model.n_tx, model.n_slots)?;
        let filters = (0..model.n_angles())
            .map(|l| model.matched_filter(&x, l))
            .collect::<Result<Vec<_>>>()?;
        let out = model.outputs(&x, &filters)?;
        let zeta: Vec<f64> = (0..model.n_angles())
            .map(|l| ratios.target_floor * out.target_mainlobe(l).norm_sqr())
            .collect();
        Ok(Self {
            jamming_mainlobe_cap: zeta.iter().map(|z| ratios.jamming_cap * z).collect(),
            sidelobe_cap: zeta.iter().map(|z| ratios.sidelobe_cap * z).collect(),
            jamming_sidelobe_cap: ratios
                .jamming_sidelobe_cap
                .map(|r| zeta.iter().map(|z| r * z).collect()),
            target_mainlobe_floor: zeta,
            ..Self::default()
        })
    }

    pub fn validate(&self, n_angles: usize) -> Result<()> {
        let mut lists = vec![
            &self.target_mainlobe_floor,
            &self.jamming_mainlobe_cap,
            &self.sidelobe_cap,
        ];
        lists.extend(self.jamming_sidelobe_cap.as_ref());
        if lists.iter().any(|l| l.len() != n_angles) {
            return Err(Error::InvalidArgument(format!(
                "threshold lists must have one entry per detection angle ({n_angles})"
            )));
        }
        if lists
            .iter()
            .flat_map(|l| l.iter())
            .any(|&t| !(t > 0.0 && t.is_finite()))
        {
            return Err(Error::InvalidArgument("thresholds must be positive".into()));
        }
        for (l, (eps, zeta)) in self
            .jamming_mainlobe_cap
            .iter()
            .zip(&self.target_mainlobe_floor)
            .enumerate()
        {
            if eps >= zeta {
                return Err(Error::InvalidArgument(format!(
                    "angle {l}: jamming cap {eps} must be below target floor {zeta}"
                )));
            }
        }
        if !(self.penalty > 0.0) || !(self.tx_power > 0.0) {
            return Err(Error::InvalidArgument(
                "penalty and tx_power must be positive".into(),
            ));
        }
        if !(self.inner_tol > 0.0) || self.inner_max_iters == 0 {
            return Err(Error::InvalidArgument(
                "inner solver budget must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Sidelobe cap of each output block at angle `l`: one block for the
    /// combined and target modes, target then jamming for separate mode.
    pub fn sidelobe_block_caps(&self, l: usize) -> Vec<f64> {
        match self.sidelobe_mode {
            SidelobeMode::Separate => vec![
                self.sidelobe_cap[l],
                self.jamming_sidelobe_cap
                    .as_ref()
                    .map_or(self.sidelobe_cap[l], |c| c[l]),
            ],
            _ => vec![self.sidelobe_cap[l]],
        }
    }

    pub(crate) fn smoothing(&self, n_users: usize, n_slots: usize) -> f64 {
        self.smoothing_eps * ((n_users * n_slots) as f64).sqrt()
    }
}

impl Default for DesignConfig {
    fn default() -> Self {
        Self {
            target_mainlobe_floor: Vec::new(),
            jamming_mainlobe_cap: Vec::new(),
            sidelobe_cap: Vec::new(),
            jamming_sidelobe_cap: None,
            tx_power: 2.0,
            penalty: 1.0,
            max_outer_iters: 100,
            inner_tol: 1e-8,
            inner_max_iters: 3000,
            smoothing_eps: 1e-8,
            stop_residual: 1e-4,
            sidelobe_mode: SidelobeMode::Combined,
        }
    }
}

/// Largest primal residual of each constraint group, maximized over angles.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Residuals {
    pub mainlobe: f64,
    pub jamming: f64,
    pub sidelobe: f64,
    pub filter: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.mainlobe
            .max(self.jamming)
            .max(self.sidelobe)
            .max(self.filter)
    }
}

/// Primal, auxiliary and dual iterates of one ADMM run.
///
/// The field names are scheme-neutral: for JTMD `aux_filter` holds the
/// matched filters of the current waveform, for JTMMD the unit-sphere
/// copies β_l.
#[derive(Debug, Clone)]
pub struct AdmmState {
    pub scheme: Scheme,
    pub penalty: f64,
    pub x: ComplexMatrix,
    pub filters: Vec<ComplexVector>,
    pub aux_mainlobe: Vec<Complex64>,
    pub aux_jamming: Vec<Complex64>,
    pub aux_sidelobe: Vec<ComplexVector>,
    pub aux_filter: Vec<ComplexVector>,
    pub dual_mainlobe: Vec<Complex64>,
    pub dual_jamming: Vec<Complex64>,
    pub dual_sidelobe: Vec<ComplexVector>,
    pub dual_filter: Vec<ComplexVector>,
    pub iter: usize,
    pub residual_history: Vec<Residuals>,
    pub(crate) x_warm: Option<XWarmStart>,
}

impl AdmmState {
    /// LFM waveform, its matched filters, everything else zero.
    pub fn initial(scheme: Scheme, model: &RadarModel, cfg: &DesignConfig) -> Result<Self> {
        let x = lfm_waveform(model.n_tx, model.n_slots)?;
        let filters = (0..model.n_angles())
            .map(|l| model.matched_filter(&x, l))
            .collect::<Result<Vec<_>>>()?;
        let aux_filter = match scheme {
            Scheme::Jtmd => filters.clone(),
            Scheme::Jtmmd => vec![ComplexVector::zeros(model.n_slots); model.n_angles()],
        };
        Ok(Self::from_parts(
            scheme,
            cfg.penalty,
            x,
            filters,
            aux_filter,
            cfg.sidelobe_mode,
        ))
    }

    pub fn from_parts(
        scheme: Scheme,
        penalty: f64,
        x: ComplexMatrix,
        filters: Vec<ComplexVector>,
        aux_filter: Vec<ComplexVector>,
        mode: SidelobeMode,
    ) -> Self {
        let n_angles = filters.len();
        let p = x.ncols();
        let side = mode.blocks() * (2 * p - 1);
        let zero = Complex64::new(0.0, 0.0);
        Self {
            scheme,
            penalty,
            x,
            aux_mainlobe: vec![zero; n_angles],
            aux_jamming: vec![zero; n_angles],
            aux_sidelobe: vec![ComplexVector::zeros(side); n_angles],
            dual_mainlobe: vec![zero; n_angles],
            dual_jamming: vec![zero; n_angles],
            dual_sidelobe: vec![ComplexVector::zeros(side); n_angles],
            dual_filter: vec![ComplexVector::zeros(p); n_angles],
            filters,
            aux_filter,
            iter: 0,
            residual_history: Vec::new(),
            x_warm: None,
        }
    }

    pub fn n_angles(&self) -> usize {
        self.filters.len()
    }

    /// Filter the v-update is pulled towards: `aux_filter_l − dual_filter_l/ρ`.
    pub fn filter_anchor(&self, l: usize) -> ComplexVector {
        &self.aux_filter[l] - &self.dual_filter[l] / Complex64::new(self.penalty, 0.0)
    }

    pub fn residuals(&self, model: &ModelOutputs, mode: SidelobeMode) -> Residuals {
        let mut r = Residuals::default();
        for l in 0..self.n_angles() {
            r.mainlobe = r
                .mainlobe
                .max((model.target_mainlobe(l) - self.aux_mainlobe[l]).norm());
            r.jamming = r
                .jamming
                .max((model.jamming_mainlobe(l) - self.aux_jamming[l]).norm());
            r.sidelobe = r.sidelobe.max(max_modulus(
                &(model.sidelobe_output(l, mode) - &self.aux_sidelobe[l]),
            ));
            r.filter = r
                .filter
                .max(max_modulus(&(&self.filters[l] - &self.aux_filter[l])));
        }
        r
    }
}

/// Dual ascent on every consensus constraint:
/// `κ += ρ(b[P] − c)`, `τ += ρ(d[P] − q)`, `ω += ρ(z − γ)`, `λ += ρ(v − v̄)`.
pub fn dual_update(state: &mut AdmmState, model: &ModelOutputs, cfg: &DesignConfig) {
    let rho = Complex64::new(state.penalty, 0.0);
    for l in 0..state.n_angles() {
        state.dual_mainlobe[l] += rho * (model.target_mainlobe(l) - state.aux_mainlobe[l]);
        state.dual_jamming[l] += rho * (model.jamming_mainlobe(l) - state.aux_jamming[l]);
        let side = model.sidelobe_output(l, cfg.sidelobe_mode) - &state.aux_sidelobe[l];
        state.dual_sidelobe[l] += side * rho;
        let cons = &state.filters[l] - &state.aux_filter[l];
        state.dual_filter[l] += cons * rho;
    }
}
