//! Outer ADMM loops of the two designs, plus the augmented Lagrangian and
//! a feasibility report for finished runs.
//!
//! Both loops share one iteration: waveform, filters, the three auxiliary
//! projections, the filter copy, then dual ascent. They differ only in
//! what the filter copy is. JTMD ties it to the matched filter of the
//! current waveform; JTMMD keeps a free unit-norm copy.

use std::io::Write;

use num_complex::Complex64;

use crate::comms::{mui, CommFrame};
use crate::error::{Error, Result};
use crate::optimizer::{
    dual_update, project_mainlobe_floor, project_modulus_cap, project_sidelobe_blocks,
    project_unit_sphere, solve_v_subproblem, solve_x_subproblem, AdmmState, DesignConfig,
    ModelOutputs, RadarModel, Residuals, Scheme,
};
use crate::signal::{isrj_mask, ComplexMatrix, ComplexVector, JammerProfile, Scenario};

/// Relative slack used when judging a finished design feasible.
pub const CONSTRAINT_RTOL: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct DesignResult {
    pub x: ComplexMatrix,
    pub filters: Vec<ComplexVector>,
    pub scheme: Scheme,
    pub iterations_run: usize,
    pub final_residuals: Residuals,
    /// `‖H X − S‖_F` of the start waveform followed by one entry per iteration.
    pub objective_trace: Vec<f64>,
    /// Primal residuals after each iteration.
    pub residual_trace: Vec<Residuals>,
    pub converged: bool,
    /// Outer iterations whose waveform solve stopped on its budget.
    pub inner_warnings: usize,
}

impl DesignResult {
    /// Writes `iter,objective,residual_*` rows. Row 0 is the start waveform
    /// and carries empty residual fields.
    pub fn write_trace_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "iter",
            "objective",
            "residual_mainlobe",
            "residual_jamming",
            "residual_sidelobe",
            "residual_filter",
        ])?;
        for (k, obj) in self.objective_trace.iter().enumerate() {
            let mut row = vec![k.to_string(), crate::harness::fmt_real(*obj)];
            match k.checked_sub(1).and_then(|i| self.residual_trace.get(i)) {
                Some(r) => row.extend(
                    [r.mainlobe, r.jamming, r.sidelobe, r.filter].map(crate::harness::fmt_real),
                ),
                None => row.extend(std::iter::repeat_n(String::new(), 4)),
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn run_jtmd(
    scenario: &Scenario,
    frame: &CommFrame,
    jammer: &JammerProfile,
    cfg: &DesignConfig,
) -> Result<DesignResult> {
    run_design(Scheme::Jtmd, scenario, frame, jammer, cfg)
}

pub fn run_jtmmd(
    scenario: &Scenario,
    frame: &CommFrame,
    jammer: &JammerProfile,
    cfg: &DesignConfig,
) -> Result<DesignResult> {
    run_design(Scheme::Jtmmd, scenario, frame, jammer, cfg)
}

pub fn run_design(
    scheme: Scheme,
    scenario: &Scenario,
    frame: &CommFrame,
    jammer: &JammerProfile,
    cfg: &DesignConfig,
) -> Result<DesignResult> {
    scenario.validate()?;
    jammer.validate()?;
    let model = RadarModel::new(scenario, &isrj_mask(jammer, scenario.n_slots))?;
    run_with_model(scheme, &model, frame, cfg)
}

/// Same as [`run_design`] for a prebuilt design model.
pub fn run_with_model(
    scheme: Scheme,
    model: &RadarModel,
    frame: &CommFrame,
    cfg: &DesignConfig,
) -> Result<DesignResult> {
    cfg.validate(model.n_angles())?;
    let mut state = AdmmState::initial(scheme, model, cfg)?;
    let mut objective_trace = vec![mui(&frame.channel, &state.x, &frame.symbols)?.frobenius];
    let mut inner_warnings = 0;
    let mut converged = false;

    for k in 0..cfg.max_outer_iters {
        let out = iterate(&mut state, model, frame, cfg, &mut inner_warnings)?;
        let res = state.residuals(&out, cfg.sidelobe_mode);
        state.residual_history.push(res);
        state.iter = k + 1;
        let obj = mui(&frame.channel, &state.x, &frame.symbols)?.frobenius;
        objective_trace.push(obj);
        log::debug!(
            "{scheme} iter {}: mui {obj:.6e} residual {:.3e}",
            k + 1,
            res.max()
        );
        // Small absolute residuals can still overshoot tiny caps, so the
        // iterate must also pass the constraint check.
        if res.max() < cfg.stop_residual
            && check_design(&state.x, &state.filters, cfg, model)?.all_satisfied()
        {
            converged = true;
            break;
        }
    }

    Ok(DesignResult {
        final_residuals: state.residual_history.last().copied().unwrap_or_default(),
        iterations_run: state.iter,
        residual_trace: state.residual_history,
        x: state.x,
        filters: state.filters,
        scheme,
        objective_trace,
        converged,
        inner_warnings,
    })
}

/// One outer iteration in place; returns the model outputs used for the
/// auxiliary and dual updates.
fn iterate(
    state: &mut AdmmState,
    model: &RadarModel,
    frame: &CommFrame,
    cfg: &DesignConfig,
    inner_warnings: &mut usize,
) -> Result<ModelOutputs> {
    let n_angles = model.n_angles();
    let rho = Complex64::new(state.penalty, 0.0);

    let sol = solve_x_subproblem(state, frame, cfg, model)?;
    if !sol.converged {
        *inner_warnings += 1;
    }
    state.x = sol.x;
    state.x_warm = Some(sol.warm);
    check_finite(state, "waveform")?;

    if state.scheme == Scheme::Jtmd {
        for l in 0..n_angles {
            state.aux_filter[l] = model.matched_filter(&state.x, l)?;
        }
    }

    for l in 0..n_angles {
        let yt = model.target_response(&state.x, l);
        let yj = yt.component_mul(&model.mask);
        state.filters[l] = solve_v_subproblem(state, l, cfg, &yt, &yj)?.filter;
    }
    check_finite(state, "filter")?;

    let out = model.outputs(&state.x, &state.filters)?;
    for l in 0..n_angles {
        state.aux_mainlobe[l] = project_mainlobe_floor(
            out.target_mainlobe(l) + state.dual_mainlobe[l] / rho,
            cfg.target_mainlobe_floor[l],
        );
        state.aux_jamming[l] = project_modulus_cap(
            out.jamming_mainlobe(l) + state.dual_jamming[l] / rho,
            cfg.jamming_mainlobe_cap[l],
        );
        let eta = out.sidelobe_output(l, cfg.sidelobe_mode) + &state.dual_sidelobe[l] / rho;
        state.aux_sidelobe[l] = project_sidelobe_blocks(
            &eta,
            &cfg.sidelobe_block_caps(l),
            2 * model.n_slots - 1,
            out.centre() + 1,
        );
    }

    if state.scheme == Scheme::Jtmmd {
        for l in 0..n_angles {
            let u = &state.filters[l] + &state.dual_filter[l] / rho;
            // a zero argument has no nearest unit vector; keep the old copy
            if let Ok(beta) = project_unit_sphere(&u) {
                state.aux_filter[l] = beta;
            }
        }
    }

    dual_update(state, &out, cfg);
    Ok(out)
}

fn check_finite(state: &AdmmState, stage: &str) -> Result<()> {
    let finite = |c: &Complex64| c.re.is_finite() && c.im.is_finite();
    let ok = state.x.iter().all(finite)
        && state.filters.iter().all(|v| v.iter().all(finite))
        && state.dual_sidelobe.iter().all(|v| v.iter().all(finite));
    if ok {
        return Ok(());
    }
    log::error!(
        "non-finite {stage} iterate at outer iteration {}: ‖X‖ = {}, filter norms {:?}, last residuals {:?}",
        state.iter + 1,
        state.x.norm(),
        state.filters.iter().map(|v| v.norm()).collect::<Vec<_>>(),
        state.residual_history.last()
    );
    Err(Error::NonFinite(format!(
        "{stage} iterate at outer iteration {}",
        state.iter + 1
    )))
}

/// Augmented Lagrangian in completed-square form:
/// `‖Ξ‖_F + ρ/2 Σ_l (|b[P] − c + κ/ρ|² + |d[P] − q + τ/ρ|² + ‖z − γ + ω/ρ‖² + ‖v − v̄ + λ/ρ‖²)`.
pub fn lagrangian_value(
    state: &AdmmState,
    frame: &CommFrame,
    model: &RadarModel,
    cfg: &DesignConfig,
) -> Result<f64> {
    let out = model.outputs(&state.x, &state.filters)?;
    let rho = state.penalty;
    let inv = Complex64::new(1.0 / rho, 0.0);
    let mut pen = 0.0;
    for l in 0..state.n_angles() {
        pen += (out.target_mainlobe(l) - state.aux_mainlobe[l] + state.dual_mainlobe[l] * inv)
            .norm_sqr();
        pen += (out.jamming_mainlobe(l) - state.aux_jamming[l] + state.dual_jamming[l] * inv)
            .norm_sqr();
        pen += (out.sidelobe_output(l, cfg.sidelobe_mode) - &state.aux_sidelobe[l]
            + &state.dual_sidelobe[l] * inv)
            .norm_squared();
        pen +=
            (&state.filters[l] - &state.aux_filter[l] + &state.dual_filter[l] * inv).norm_squared();
    }
    Ok(mui(&frame.channel, &state.x, &frame.symbols)?.frobenius + 0.5 * rho * pen)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintCheck {
    pub value: f64,
    pub bound: f64,
    pub satisfied: bool,
}

/// Problem constraints evaluated on a finished design.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintReport {
    /// `|b_l[P]|² ≥ ζ_l`
    pub target_mainlobe: Vec<ConstraintCheck>,
    /// `|d_l[P]|² ≤ ε_l`
    pub jamming_mainlobe: Vec<ConstraintCheck>,
    /// `max_{i≠P} |z_l[i]|² ≤ ϵ_l`, one entry per angle and output block.
    pub sidelobe: Vec<ConstraintCheck>,
    /// `‖X[:, p]‖² ≤ P_t`
    pub tx_power: Vec<ConstraintCheck>,
    /// `‖v_l‖² = 1`
    pub filter_norm: Vec<ConstraintCheck>,
}

impl ConstraintReport {
    pub fn all_satisfied(&self) -> bool {
        self.groups()
            .iter()
            .all(|(_, g)| g.iter().all(|c| c.satisfied))
    }

    pub fn groups(&self) -> [(&'static str, &[ConstraintCheck]); 5] {
        [
            ("target_mainlobe", &self.target_mainlobe),
            ("jamming_mainlobe", &self.jamming_mainlobe),
            ("sidelobe", &self.sidelobe),
            ("tx_power", &self.tx_power),
            ("filter_norm", &self.filter_norm),
        ]
    }
}

pub fn evaluate_constraints(
    result: &DesignResult,
    cfg: &DesignConfig,
    scenario: &Scenario,
    mask: &ComplexVector,
) -> Result<ConstraintReport> {
    let model = RadarModel::new(scenario, mask)?;
    check_design(&result.x, &result.filters, cfg, &model)
}

/// Constraint report for an arbitrary waveform/filter pair.
pub fn check_design(
    x: &ComplexMatrix,
    filters: &[ComplexVector],
    cfg: &DesignConfig,
    model: &RadarModel,
) -> Result<ConstraintReport> {
    cfg.validate(model.n_angles())?;
    let out = model.outputs(x, filters)?;
    let lower = |value: f64, bound: f64| ConstraintCheck {
        value,
        bound,
        satisfied: value >= bound * (1.0 - CONSTRAINT_RTOL),
    };
    let upper = |value: f64, bound: f64| ConstraintCheck {
        value,
        bound,
        satisfied: value <= bound * (1.0 + CONSTRAINT_RTOL),
    };
    let centre = out.centre();
    let mut report = ConstraintReport {
        target_mainlobe: Vec::new(),
        jamming_mainlobe: Vec::new(),
        sidelobe: Vec::new(),
        tx_power: Vec::new(),
        filter_norm: Vec::new(),
    };
    for l in 0..model.n_angles() {
        report.target_mainlobe.push(lower(
            out.target_mainlobe(l).norm_sqr(),
            cfg.target_mainlobe_floor[l],
        ));
        report.jamming_mainlobe.push(upper(
            out.jamming_mainlobe(l).norm_sqr(),
            cfg.jamming_mainlobe_cap[l],
        ));
        let lags = 2 * model.n_slots - 1;
        let side = out.sidelobe_output(l, cfg.sidelobe_mode);
        for (k, cap) in cfg.sidelobe_block_caps(l).into_iter().enumerate() {
            let psl = side
                .rows(k * lags, lags)
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != centre)
                .map(|(_, z)| z.norm_sqr())
                .fold(0.0, f64::max);
            report.sidelobe.push(upper(psl, cap));
        }
        let n2 = filters[l].norm_squared();
        report.filter_norm.push(ConstraintCheck {
            value: n2,
            bound: 1.0,
            satisfied: (n2 - 1.0).abs() <= CONSTRAINT_RTOL,
        });
    }
    for col in x.column_iter() {
        report
            .tx_power
            .push(upper(col.norm_squared(), cfg.tx_power));
    }
    Ok(report)
}
