use num_complex::Complex64;

use super::state::SidelobeMode;
use crate::error::{Error, Result};
use crate::signal::{convolve_slices, steering_vector, ComplexMatrix, ComplexVector, Scenario};

/// Transmit-side view of the detection grid: the steering vector of every
/// look direction and the repeater mask used by the design model.
#[derive(Debug, Clone)]
pub struct RadarModel {
    pub angles: Vec<f64>,
    pub steering: Vec<ComplexVector>,
    pub mask: ComplexVector,
    pub n_tx: usize,
    pub n_slots: usize,
}

impl RadarModel {
    pub fn new(scenario: &Scenario, mask: &ComplexVector) -> Result<Self> {
        if mask.len() != scenario.n_slots {
            return Err(Error::InvalidArgument(format!(
                "mask length {} vs {} slots",
                mask.len(),
                scenario.n_slots
            )));
        }
        let steering = scenario
            .detection_angles
            .iter()
            .map(|&t| steering_vector(scenario.n_tx, t))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            angles: scenario.detection_angles.clone(),
            steering,
            mask: mask.clone(),
            n_tx: scenario.n_tx,
            n_slots: scenario.n_slots,
        })
    }

    pub fn n_angles(&self) -> usize {
        self.steering.len()
    }

    /// 0-based position of the matched lag in a length `2P − 1` output.
    pub fn centre(&self) -> usize {
        self.n_slots - 1
    }

    fn check_x(&self, x: &ComplexMatrix) -> Result<()> {
        if x.nrows() != self.n_tx || x.ncols() != self.n_slots {
            return Err(Error::InvalidArgument(format!(
                "waveform is {}x{}, expected {}x{}",
                x.nrows(),
                x.ncols(),
                self.n_tx,
                self.n_slots
            )));
        }
        Ok(())
    }

    /// Target component of combiner `l`: `(a(N_t, θ_l)ᴴ X)ᵀ`.
    pub fn target_response(&self, x: &ComplexMatrix, l: usize) -> ComplexVector {
        let a = &self.steering[l];
        ComplexVector::from_iterator(x.ncols(), x.column_iter().map(|col| a.dotc(&col)))
    }

    /// Jamming component: the target response gated by the repeater mask.
    pub fn jamming_response(&self, x: &ComplexMatrix, l: usize) -> ComplexVector {
        self.target_response(x, l).component_mul(&self.mask)
    }

    pub fn outputs(&self, x: &ComplexMatrix, filters: &[ComplexVector]) -> Result<ModelOutputs> {
        self.check_x(x)?;
        if filters.len() != self.n_angles() {
            return Err(Error::InvalidArgument(format!(
                "{} filters for {} detection angles",
                filters.len(),
                self.n_angles()
            )));
        }
        let mut b = Vec::with_capacity(filters.len());
        let mut d = Vec::with_capacity(filters.len());
        let mut z = Vec::with_capacity(filters.len());
        for (l, v) in filters.iter().enumerate() {
            if v.len() != self.n_slots {
                return Err(Error::InvalidArgument(format!(
                    "filter {l} has {} taps, expected {}",
                    v.len(),
                    self.n_slots
                )));
            }
            let yt = self.target_response(x, l);
            let yj = yt.component_mul(&self.mask);
            let bl = convolve_slices(v.as_slice(), yt.as_slice());
            let dl = convolve_slices(v.as_slice(), yj.as_slice());
            z.push(&bl + &dl);
            b.push(bl);
            d.push(dl);
        }
        Ok(ModelOutputs {
            b,
            d,
            z,
            centre: self.centre(),
        })
    }

    /// Filter whose convolution with the target response peaks at the
    /// matched lag: the normalized, time-reversed `Xᴴ a(N_t, θ)`.
    pub fn matched_filter(&self, x: &ComplexMatrix, l: usize) -> Result<ComplexVector> {
        let xa = x.ad_mul(&self.steering[l]);
        reversed_unit(&xa, self.angles[l])
    }
}

fn reversed_unit(xa: &ComplexVector, theta: f64) -> Result<ComplexVector> {
    let norm = xa.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::DegenerateFilter { theta });
    }
    let n = xa.len();
    Ok(ComplexVector::from_fn(n, |k, _| xa[n - 1 - k] / norm))
}

/// Noise-free, unit-amplitude filter outputs of the design model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutputs {
    /// `b_l = v_l ⊛ y_{t,l}`.
    pub b: Vec<ComplexVector>,
    /// `d_l = v_l ⊛ y_{j,l}`.
    pub d: Vec<ComplexVector>,
    /// `z_l = b_l + d_l`.
    pub z: Vec<ComplexVector>,
    centre: usize,
}

impl ModelOutputs {
    pub fn target_mainlobe(&self, l: usize) -> Complex64 {
        self.b[l][self.centre]
    }

    pub fn jamming_mainlobe(&self, l: usize) -> Complex64 {
        self.d[l][self.centre]
    }

    /// Output subject to the sidelobe caps: `z_l`, `b_l`, or `b_l` stacked
    /// on `d_l`, one block of `2P − 1` lags each.
    pub fn sidelobe_output(&self, l: usize, mode: SidelobeMode) -> ComplexVector {
        match mode {
            SidelobeMode::Combined => self.z[l].clone(),
            SidelobeMode::Target => self.b[l].clone(),
            SidelobeMode::Separate => {
                let n = self.b[l].len();
                ComplexVector::from_fn(2 * n, |i, _| {
                    if i < n {
                        self.b[l][i]
                    } else {
                        self.d[l][i - n]
                    }
                })
            }
        }
    }

    pub fn centre(&self) -> usize {
        self.centre
    }
}

pub fn model_outputs(
    x: &ComplexMatrix,
    filters: &[ComplexVector],
    scenario: &Scenario,
    mask: &ComplexVector,
) -> Result<ModelOutputs> {
    RadarModel::new(scenario, mask)?.outputs(x, filters)
}

/// Matched filter of `x` towards `theta` (see [`RadarModel::matched_filter`]).
pub fn matched_filter(x: &ComplexMatrix, theta: f64) -> Result<ComplexVector> {
    let a = steering_vector(x.nrows(), theta)?;
    reversed_unit(&x.ad_mul(&a), theta)
}
