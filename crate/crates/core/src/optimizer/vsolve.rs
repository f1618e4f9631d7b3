//! Receive-filter update. For fixed waveform every penalty term is affine in
//! `v_l`, so each per-angle subproblem is a regularized least-squares fit
//! with a closed-form solution.

use nalgebra::linalg::Cholesky;
use num_complex::Complex64;

use super::state::{AdmmState, DesignConfig, SidelobeMode};
use crate::error::{Error, Result};
use crate::signal::{ComplexMatrix, ComplexVector};

/// Targets the four penalty groups pull towards for one angle.
#[derive(Debug, Clone)]
pub struct FilterTargets {
    /// `c_l − κ_l/ρ`
    pub mainlobe: Complex64,
    /// `q_l − τ_l/ρ`
    pub jamming: Complex64,
    /// `γ_l − ω_l/ρ`
    pub sidelobe: ComplexVector,
    /// `v̄_l − λ_l/ρ`
    pub anchor: ComplexVector,
}

#[derive(Debug, Clone)]
pub struct FilterSolution {
    pub filter: ComplexVector,
    /// `‖N v − rhs‖₂` of the normal equations at the returned filter.
    pub normal_residual: f64,
    pub rhs_norm: f64,
}

/// Linear maps from filter taps to the penalized outputs.
#[derive(Debug, Clone)]
pub struct FilterMaps {
    /// `b[P] = mainlobe_row · v`
    pub mainlobe_row: ComplexVector,
    /// `d[P] = jamming_row · v`
    pub jamming_row: ComplexVector,
    /// Convolution matrix of the sidelobe-constrained output, one `(2P−1)×P`
    /// block per constrained component.
    pub conv: ComplexMatrix,
}

impl FilterMaps {
    pub fn new(y_t: &ComplexVector, y_j: &ComplexVector, mode: SidelobeMode) -> Result<Self> {
        let p = y_t.len();
        if y_j.len() != p || p == 0 {
            return Err(Error::InvalidArgument(format!(
                "combiner outputs of length {} and {}",
                y_t.len(),
                y_j.len()
            )));
        }
        // Matched lag of v ⊛ y is Σ_k v[k]·y[P−1−k].
        let mainlobe_row = ComplexVector::from_fn(p, |k, _| y_t[p - 1 - k]);
        let jamming_row = ComplexVector::from_fn(p, |k, _| y_j[p - 1 - k]);
        let inputs = match mode {
            SidelobeMode::Combined => vec![y_t + y_j],
            SidelobeMode::Target => vec![y_t.clone()],
            SidelobeMode::Separate => vec![y_t.clone(), y_j.clone()],
        };
        let n = 2 * p - 1;
        let conv = ComplexMatrix::from_fn(n * inputs.len(), p, |row, k| {
            let (u, i) = (&inputs[row / n], row % n);
            if i >= k && i - k < p {
                u[i - k]
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Ok(Self {
            mainlobe_row,
            jamming_row,
            conv,
        })
    }

    /// Sum of squared penalty residuals, i.e. the subproblem objective over ρ/2.
    pub fn objective(&self, v: &ComplexVector, t: &FilterTargets) -> f64 {
        let b = self.mainlobe_row.transpose() * v;
        let d = self.jamming_row.transpose() * v;
        (b[0] - t.mainlobe).norm_sqr()
            + (d[0] - t.jamming).norm_sqr()
            + (&self.conv * v - &t.sidelobe).norm_squared()
            + (v - &t.anchor).norm_squared()
    }

    fn normal_system(&self, t: &FilterTargets) -> (ComplexMatrix, ComplexVector) {
        let p = self.mainlobe_row.len();
        let rb = self.mainlobe_row.conjugate();
        let rd = self.jamming_row.conjugate();
        let mut n = self.conv.ad_mul(&self.conv);
        n += &rb * rb.adjoint();
        n += &rd * rd.adjoint();
        for k in 0..p {
            n[(k, k)] += Complex64::new(1.0, 0.0);
        }
        let rhs = &t.anchor + self.conv.ad_mul(&t.sidelobe) + &rb * t.mainlobe + &rd * t.jamming;
        (n, rhs)
    }

    pub fn solve(&self, t: &FilterTargets) -> Result<FilterSolution> {
        let p = self.mainlobe_row.len();
        if t.anchor.len() != p || t.sidelobe.len() != self.conv.nrows() {
            return Err(Error::InvalidArgument(format!(
                "filter targets sized {}/{} for {p} taps",
                t.anchor.len(),
                t.sidelobe.len()
            )));
        }
        let (n, rhs) = self.normal_system(t);
        let chol = Cholesky::new(n.clone())
            .ok_or_else(|| Error::NonFinite("filter normal equations".into()))?;
        let mut v = chol.solve(&rhs);
        // one refinement step
        let r = &rhs - &n * &v;
        v += chol.solve(&r);
        let normal_residual = (&n * &v - &rhs).norm();
        Ok(FilterSolution {
            filter: v,
            normal_residual,
            rhs_norm: rhs.norm(),
        })
    }
}

/// Exact minimizer of the per-angle filter subproblem for the current state.
pub fn solve_v_subproblem(
    state: &AdmmState,
    l: usize,
    cfg: &DesignConfig,
    y_t: &ComplexVector,
    y_j: &ComplexVector,
) -> Result<FilterSolution> {
    let maps = FilterMaps::new(y_t, y_j, cfg.sidelobe_mode)?;
    maps.solve(&filter_targets(state, l))
}

pub(crate) fn filter_targets(state: &AdmmState, l: usize) -> FilterTargets {
    let rho = Complex64::new(state.penalty, 0.0);
    FilterTargets {
        mainlobe: state.aux_mainlobe[l] - state.dual_mainlobe[l] / rho,
        jamming: state.aux_jamming[l] - state.dual_jamming[l] / rho,
        sidelobe: &state.aux_sidelobe[l] - &state.dual_sidelobe[l] / rho,
        anchor: state.filter_anchor(l),
    }
}
