//! Waveform update.
//!
//! For fixed filters the subproblem is
//!
//! ```text
//! min_X  ‖H X − S‖_F + ρ/2 ‖R vec(X) − t‖²   s.t.  ‖X[:, p]‖² ≤ P_t
//! ```
//!
//! where `R` stacks the matched lags `b_l[P]`, `d_l[P]` and the sidelobe
//! outputs of every angle as linear functions of `vec(X)`. The MUI norm is
//! not differentiable where `H X = S`, which is exactly where good designs
//! end up, so the solver splits it off: an inner ADMM over
//! `W = H X − S` (block soft-threshold) and `Z = X` (per-column ball
//! projection), followed by a short projected-gradient polish on the
//! smoothed objective `√(‖Ξ‖² + ε²) + ρ/2 ‖R x − t‖²`.

use nalgebra::linalg::Cholesky;
use num_complex::Complex64;

use super::model::RadarModel;
use super::state::{AdmmState, DesignConfig, SidelobeMode};
use super::vsolve::{filter_targets, FilterTargets};
use crate::comms::CommFrame;
use crate::error::{Error, Result};
use crate::signal::{ComplexMatrix, ComplexVector};

const SIGMA_MIN: f64 = 1e-6;
const SIGMA_MAX: f64 = 1e6;
const BALANCE_EVERY: usize = 25;
const POLISH_STEPS: usize = 30;

/// Inner-ADMM iterates carried from one outer iteration to the next.
#[derive(Debug, Clone)]
pub struct XWarmStart {
    w: ComplexMatrix,
    z: ComplexMatrix,
    u_w: ComplexMatrix,
    u_z: ComplexMatrix,
    sigma: f64,
}

#[derive(Debug, Clone)]
pub struct XSolution {
    pub x: ComplexMatrix,
    pub objective: f64,
    pub iterations: usize,
    /// False when the iteration budget ran out or the incoming waveform had
    /// to be returned instead.
    pub converged: bool,
    pub warm: XWarmStart,
}

/// One instance of the waveform subproblem.
#[derive(Debug, Clone)]
pub struct XSubproblem {
    channel: ComplexMatrix,
    symbols: ComplexMatrix,
    radar_map: ComplexMatrix,
    radar_target: ComplexVector,
    penalty: f64,
    tx_power: f64,
    smoothing: f64,
}

impl XSubproblem {
    pub fn new(
        model: &RadarModel,
        frame: &CommFrame,
        filters: &[ComplexVector],
        targets: &[FilterTargets],
        cfg: &DesignConfig,
        penalty: f64,
    ) -> Result<Self> {
        let (nt, p) = (model.n_tx, model.n_slots);
        let n_angles = model.n_angles();
        if filters.len() != n_angles || targets.len() != n_angles {
            return Err(Error::InvalidArgument(format!(
                "{} filters / {} targets for {n_angles} angles",
                filters.len(),
                targets.len()
            )));
        }
        if frame.channel.ncols() != nt || frame.symbols.ncols() != p {
            return Err(Error::InvalidArgument(format!(
                "frame is {}x{} / {}x{}, waveform {nt}x{p}",
                frame.channel.nrows(),
                frame.channel.ncols(),
                frame.symbols.nrows(),
                frame.symbols.ncols()
            )));
        }
        let n_lags = 2 * p - 1;
        let blocks = cfg.sidelobe_mode.blocks();
        let block = 2 + blocks * n_lags;
        let mut radar_map = ComplexMatrix::zeros(block * n_angles, nt * p);
        let mut radar_target = ComplexVector::zeros(block * n_angles);
        for l in 0..n_angles {
            let a = &model.steering[l];
            let v = &filters[l];
            let r0 = l * block;
            for pp in 0..p {
                let g = model.mask[pp];
                let vr = v[p - 1 - pp];
                let one = Complex64::new(1.0, 0.0);
                // per-block weight of the slot in the constrained output
                let gains = match cfg.sidelobe_mode {
                    SidelobeMode::Combined => [one + g, g],
                    SidelobeMode::Target => [one, g],
                    SidelobeMode::Separate => [one, g],
                };
                for m in 0..nt {
                    let col = m + pp * nt;
                    let ca = a[m].conj();
                    radar_map[(r0, col)] = ca * vr;
                    radar_map[(r0 + 1, col)] = ca * vr * g;
                    for (bi, gain) in gains.iter().take(blocks).enumerate() {
                        let base = r0 + 2 + bi * n_lags + pp;
                        for k in 0..p {
                            radar_map[(base + k, col)] = ca * v[k] * gain;
                        }
                    }
                }
            }
            let t = &targets[l];
            radar_target[r0] = t.mainlobe;
            radar_target[r0 + 1] = t.jamming;
            if t.sidelobe.len() != blocks * n_lags {
                return Err(Error::InvalidArgument(format!(
                    "sidelobe target of length {} for mode {}",
                    t.sidelobe.len(),
                    cfg.sidelobe_mode
                )));
            }
            radar_target
                .rows_mut(r0 + 2, blocks * n_lags)
                .copy_from(&t.sidelobe);
        }
        Ok(Self {
            channel: frame.channel.clone(),
            symbols: frame.symbols.clone(),
            radar_map,
            radar_target,
            penalty,
            tx_power: cfg.tx_power,
            smoothing: cfg.smoothing(frame.symbols.nrows(), p),
        })
    }

    /// Subproblem for the current ADMM state (filters, auxiliaries, duals).
    pub fn from_state(
        state: &AdmmState,
        model: &RadarModel,
        frame: &CommFrame,
        cfg: &DesignConfig,
    ) -> Result<Self> {
        let targets: Vec<_> = (0..state.n_angles())
            .map(|l| filter_targets(state, l))
            .collect();
        Self::new(model, frame, &state.filters, &targets, cfg, state.penalty)
    }

    pub fn n_tx(&self) -> usize {
        self.channel.ncols()
    }

    pub fn n_slots(&self) -> usize {
        self.symbols.ncols()
    }

    pub fn tx_power(&self) -> f64 {
        self.tx_power
    }

    /// `R vec(X) − t`.
    pub fn radar_residual(&self, x: &ComplexMatrix) -> ComplexVector {
        &self.radar_map * vectorize(x) - &self.radar_target
    }

    fn radar_penalty(&self, x: &ComplexMatrix) -> f64 {
        0.5 * self.penalty * self.radar_residual(x).norm_squared()
    }

    /// Exact objective with the non-smooth MUI norm.
    pub fn objective(&self, x: &ComplexMatrix) -> f64 {
        (&self.channel * x - &self.symbols).norm() + self.radar_penalty(x)
    }

    pub fn smoothed_objective(&self, x: &ComplexMatrix) -> f64 {
        let xi = (&self.channel * x - &self.symbols).norm_squared();
        (xi + self.smoothing * self.smoothing).sqrt() + self.radar_penalty(x)
    }

    /// Gradient of [`Self::smoothed_objective`] with respect to the real and
    /// imaginary parts of X, packed as `∂f/∂Re + j ∂f/∂Im`.
    pub fn smoothed_gradient(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let xi = &self.channel * x - &self.symbols;
        let denom = (xi.norm_squared() + self.smoothing * self.smoothing).sqrt();
        let mut g = self.channel.ad_mul(&xi) / Complex64::new(denom, 0.0);
        let radar =
            self.radar_map.ad_mul(&self.radar_residual(x)) * Complex64::new(self.penalty, 0.0);
        g += unvectorize(&radar, x.nrows(), x.ncols());
        g
    }

    pub fn project(&self, x: &ComplexMatrix) -> ComplexMatrix {
        project_columns(x, self.tx_power)
    }

    pub fn is_feasible(&self, x: &ComplexMatrix) -> bool {
        x.column_iter()
            .all(|c| c.norm_squared() <= self.tx_power * (1.0 + 1e-9))
    }

    /// Largest eigenvalue of `ρ RᴴR` by power iteration.
    fn radar_lipschitz(&self) -> f64 {
        let n = self.radar_map.ncols();
        let mut v = ComplexVector::from_fn(n, |i, _| Complex64::new(1.0, 0.1 * i as f64));
        let mut lambda = 0.0;
        for _ in 0..50 {
            let w = self.radar_map.ad_mul(&(&self.radar_map * &v));
            let norm = w.norm();
            if norm == 0.0 {
                return 0.0;
            }
            lambda = norm / v.norm();
            v = w / Complex64::new(norm, 0.0);
        }
        self.penalty * lambda
    }

    pub fn solve(
        &self,
        x0: &ComplexMatrix,
        warm: Option<&XWarmStart>,
        tol: f64,
        max_iters: usize,
    ) -> Result<XSolution> {
        let (nt, p) = (self.n_tx(), self.n_slots());
        let m = self.channel.nrows();
        let n = nt * p;
        if x0.nrows() != nt || x0.ncols() != p {
            return Err(Error::InvalidArgument(
                "initial waveform has the wrong shape".into(),
            ));
        }
        let x_in = self.project(x0);

        let fresh = || {
            let z = x_in.clone();
            XWarmStart {
                w: &self.channel * &z - &self.symbols,
                z,
                u_w: ComplexMatrix::zeros(m, p),
                u_z: ComplexMatrix::zeros(nt, p),
                sigma: 1.0,
            }
        };
        let mut ws = match warm {
            Some(w) if w.z.shape() == (nt, p) && w.w.shape() == (m, p) => w.clone(),
            _ => fresh(),
        };

        let radar_gram = self.radar_map.ad_mul(&self.radar_map) * Complex64::new(self.penalty, 0.0);
        let hh = self.channel.ad_mul(&self.channel);
        let rhs_radar = unvectorize(
            &(self.radar_map.ad_mul(&self.radar_target) * Complex64::new(self.penalty, 0.0)),
            nt,
            p,
        );
        let factor = |sigma: f64| -> Result<Cholesky<Complex64, nalgebra::Dyn>> {
            let mut a = radar_gram.clone();
            let s = Complex64::new(sigma, 0.0);
            for blk in 0..p {
                let o = blk * nt;
                for i in 0..nt {
                    for j in 0..nt {
                        a[(o + i, o + j)] += s * hh[(i, j)];
                    }
                    a[(o + i, o + i)] += s;
                }
            }
            Cholesky::new(a).ok_or_else(|| Error::NonFinite("waveform normal equations".into()))
        };
        let mut chol = factor(ws.sigma)?;

        let abs_tol = 1e-12;
        let mut converged = false;
        let mut iterations = 0;
        for it in 0..max_iters {
            iterations = it + 1;
            let sigma = Complex64::new(ws.sigma, 0.0);
            let rhs = &rhs_radar
                + self.channel.ad_mul(&(&self.symbols + &ws.w - &ws.u_w)) * sigma
                + (&ws.z - &ws.u_z) * sigma;
            let x = unvectorize(&chol.solve(&vectorize(&rhs)), nt, p);

            let hx = &self.channel * &x - &self.symbols;
            let w_arg = &hx + &ws.u_w;
            let w_norm = w_arg.norm();
            let shrink = if w_norm > 0.0 {
                (1.0 - 1.0 / (ws.sigma * w_norm)).max(0.0)
            } else {
                0.0
            };
            let w_new = w_arg * Complex64::new(shrink, 0.0);
            let z_new = project_columns(&(&x + &ws.u_z), self.tx_power);

            let r_w = &hx - &w_new;
            let r_z = &x - &z_new;
            let primal = (r_w.norm_squared() + r_z.norm_squared()).sqrt();
            let dual =
                ws.sigma * (self.channel.ad_mul(&(&w_new - &ws.w)) + (&z_new - &ws.z)).norm();

            ws.u_w += r_w;
            ws.u_z += r_z;
            ws.w = w_new;
            ws.z = z_new;

            let scale_pri = ((&hx + &self.symbols).norm_squared() + x.norm_squared())
                .sqrt()
                .max((ws.w.norm_squared() + ws.z.norm_squared()).sqrt())
                .max(self.symbols.norm());
            let scale_dual = ws.sigma * (self.channel.ad_mul(&ws.u_w) + &ws.u_z).norm();
            let eps_pri = ((n + m * p) as f64).sqrt() * abs_tol + tol * scale_pri;
            let eps_dual = (n as f64).sqrt() * abs_tol + tol * scale_dual;
            if primal <= eps_pri && dual <= eps_dual {
                converged = true;
                break;
            }

            if (it + 1) % BALANCE_EVERY == 0 {
                let ratio = (primal / eps_pri) / (dual / eps_dual).max(f64::MIN_POSITIVE);
                let new_sigma = if ratio > 10.0 {
                    (ws.sigma * 2.0).min(SIGMA_MAX)
                } else if ratio < 0.1 {
                    (ws.sigma / 2.0).max(SIGMA_MIN)
                } else {
                    ws.sigma
                };
                if new_sigma != ws.sigma {
                    let rescale = Complex64::new(ws.sigma / new_sigma, 0.0);
                    ws.u_w *= rescale;
                    ws.u_z *= rescale;
                    ws.sigma = new_sigma;
                    chol = factor(new_sigma)?;
                }
            }
        }
        let mut best = self.polish(ws.z.clone());
        let mut objective = self.objective(&best);
        let incoming = self.objective(&x_in);
        if !objective.is_finite() {
            return Err(Error::NonFinite("waveform subproblem iterate".into()));
        }
        if objective > incoming + tol * (1.0 + incoming.abs()) {
            log::debug!("waveform solver regressed ({objective} > {incoming}); keeping input");
            best = x_in;
            objective = incoming;
            converged = false;
        }
        Ok(XSolution {
            x: best,
            objective,
            iterations,
            converged,
            warm: ws,
        })
    }

    /// Projected gradient with backtracking on the smoothed objective,
    /// accepting only steps that lower the exact objective.
    fn polish(&self, mut x: ComplexMatrix) -> ComplexMatrix {
        let lipschitz = self.radar_lipschitz();
        let mut step = if lipschitz > 0.0 {
            1.0 / lipschitz
        } else {
            1.0
        };
        let mut f = self.objective(&x);
        for _ in 0..POLISH_STEPS {
            let g = self.smoothed_gradient(&x);
            let mut accepted = false;
            for _ in 0..30 {
                let cand = self.project(&(&x - &g * Complex64::new(step, 0.0)));
                let fc = self.objective(&cand);
                if fc < f {
                    x = cand;
                    f = fc;
                    accepted = true;
                    step *= 1.5;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        x
    }
}

/// Waveform update for the current ADMM state.
pub fn solve_x_subproblem(
    state: &AdmmState,
    frame: &CommFrame,
    cfg: &DesignConfig,
    model: &RadarModel,
) -> Result<XSolution> {
    let sub = XSubproblem::from_state(state, model, frame, cfg)?;
    sub.solve(
        &state.x,
        state.x_warm.as_ref(),
        cfg.inner_tol,
        cfg.inner_max_iters,
    )
}

/// Scale every column onto the ball `‖x_p‖² ≤ power`.
pub fn project_columns(x: &ComplexMatrix, power: f64) -> ComplexMatrix {
    let mut out = x.clone();
    let radius = power.sqrt();
    for mut col in out.column_iter_mut() {
        let norm = col.norm();
        if norm > radius {
            col *= Complex64::new(radius / norm, 0.0);
        }
    }
    out
}

fn vectorize(x: &ComplexMatrix) -> ComplexVector {
    ComplexVector::from_column_slice(x.as_slice())
}

fn unvectorize(v: &ComplexVector, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_column_slice(rows, cols, v.as_slice())
}
