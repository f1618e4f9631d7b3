//! Complex baseband primitives shared by the design and detection chains:
//! array steering vectors, the orthogonal LFM waveform, the discretized
//! interrupted-sampling mask, full linear convolution and lobe metrics.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Geometry and amplitudes of one sensing/communication scene.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_users: usize,
    pub n_slots: usize,
    /// Combiner look directions θ_l in radians.
    pub detection_angles: Vec<f64>,
    pub target_angles: Vec<f64>,
    pub target_amplitudes: Vec<Complex64>,
    pub jammer_angle: f64,
    pub jammer_amplitude: Complex64,
    /// Round-trip delay of the repeated signal in samples.
    pub jammer_delay: usize,
    pub comm_noise_power: f64,
    pub sense_noise_power: f64,
}

impl Scenario {
    pub fn n_targets(&self) -> usize {
        self.target_angles.len()
    }

    pub fn n_angles(&self) -> usize {
        self.detection_angles.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_tx == 0 || self.n_rx == 0 || self.n_users == 0 {
            return Err(Error::InvalidArgument(
                "antenna and user counts must be positive".into(),
            ));
        }
        if self.n_slots < 2 {
            return Err(Error::InvalidArgument(format!(
                "n_slots must be at least 2, got {}",
                self.n_slots
            )));
        }
        if self.detection_angles.is_empty() {
            return Err(Error::InvalidArgument("no detection angles".into()));
        }
        let in_range = |a: &f64| a.is_finite() && a.abs() < FRAC_PI_2;
        if !self.detection_angles.iter().all(in_range)
            || !self.target_angles.iter().all(in_range)
            || !in_range(&self.jammer_angle)
        {
            return Err(Error::InvalidArgument(
                "angles must lie strictly inside (-pi/2, pi/2)".into(),
            ));
        }
        if self.jammer_delay >= self.n_slots {
            return Err(Error::InvalidArgument(format!(
                "jammer delay {} must be below n_slots {}",
                self.jammer_delay, self.n_slots
            )));
        }
        if self.target_angles.len() != self.target_amplitudes.len() {
            return Err(Error::InvalidArgument(format!(
                "{} target angles but {} amplitudes",
                self.target_angles.len(),
                self.target_amplitudes.len()
            )));
        }
        if !(self.comm_noise_power >= 0.0 && self.sense_noise_power >= 0.0) {
            return Err(Error::InvalidArgument(
                "noise powers must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Timing of the interrupted-sampling repeater.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JammerProfile {
    /// Slice width T_p in seconds.
    pub pulse_width: f64,
    /// Sampling repetition period T_s in seconds.
    pub repetition_period: f64,
    pub n_slices: usize,
    /// Grid spacing, the inverse of the signal bandwidth.
    pub sample_interval: f64,
    pub enabled: bool,
}

impl JammerProfile {
    pub fn validate(&self) -> Result<()> {
        if !(self.pulse_width > 0.0 && self.pulse_width <= self.repetition_period) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < pulse_width <= repetition_period, got {} / {}",
                self.pulse_width, self.repetition_period
            )));
        }
        if !(self.sample_interval > 0.0) || !self.sample_interval.is_finite() {
            return Err(Error::InvalidArgument(
                "sample_interval must be positive".into(),
            ));
        }
        if self.n_slices == 0 {
            return Err(Error::InvalidArgument("n_slices must be at least 1".into()));
        }
        Ok(())
    }

    /// Slice width and repetition period in samples.
    pub fn grid_lengths(&self) -> (usize, usize) {
        let on = (self.pulse_width / self.sample_interval).round() as usize;
        let period = (self.repetition_period / self.sample_interval).round() as usize;
        (on, period.max(1))
    }
}

/// Unit-norm response of an `n`-element half-wavelength ULA towards `theta`.
pub fn steering_vector(n: usize, theta: f64) -> Result<ComplexVector> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "steering vector needs n >= 1".into(),
        ));
    }
    let scale = 1.0 / (n as f64).sqrt();
    let phase = PI * theta.sin();
    Ok(ComplexVector::from_fn(n, |k, _| {
        Complex64::from_polar(scale, phase * k as f64)
    }))
}

/// Orthogonal multi-antenna LFM: row m is a chirp offset by m/P in frequency.
pub fn lfm_waveform(n_tx: usize, n_slots: usize) -> Result<ComplexMatrix> {
    if n_tx == 0 || n_slots == 0 {
        return Err(Error::InvalidArgument(format!(
            "lfm_waveform needs positive dimensions, got {n_tx}x{n_slots}"
        )));
    }
    let p_f = n_slots as f64;
    let scale = 1.0 / ((n_tx * n_slots) as f64).sqrt();
    Ok(ComplexMatrix::from_fn(n_tx, n_slots, |m, p| {
        // p is the 0-based slot, i.e. (p - 1) in 1-based notation
        let p = p as f64;
        let phase = 2.0 * PI * m as f64 * p / p_f + PI * p * p / p_f;
        Complex64::from_polar(scale, phase)
    }))
}

/// 0/1 slicing pattern of the repeater on a grid of `n_slots` samples.
///
/// Sample n is on when it falls in one of the first `n_slices` on-intervals
/// `[k·T_s, k·T_s + T_p)`; both lengths are rounded to whole samples first so
/// the duty ratio is exactly `round(T_p/dt) / round(T_s/dt)`.
pub fn isrj_mask(profile: &JammerProfile, n_slots: usize) -> ComplexVector {
    if !profile.enabled {
        return ComplexVector::zeros(n_slots);
    }
    let (on, period) = profile.grid_lengths();
    ComplexVector::from_fn(n_slots, |n, _| {
        let slice = n / period;
        if slice < profile.n_slices && n % period < on {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Repeater signal `X ⊙ g`, the mask broadcast over antennas.
pub fn apply_isrj(x: &ComplexMatrix, mask: &ComplexVector) -> Result<ComplexMatrix> {
    if mask.len() != x.ncols() {
        return Err(Error::InvalidArgument(format!(
            "mask length {} does not match {} slots",
            mask.len(),
            x.ncols()
        )));
    }
    let mut out = x.clone();
    for (p, mut col) in out.column_iter_mut().enumerate() {
        col *= mask[p];
    }
    Ok(out)
}

/// Full linear convolution, output length `len(v) + len(y) - 1`.
pub fn convolve_full(v: &ComplexVector, y: &ComplexVector) -> Result<ComplexVector> {
    if v.is_empty() || y.is_empty() {
        return Err(Error::InvalidArgument(
            "convolution of an empty sequence".into(),
        ));
    }
    Ok(convolve_slices(v.as_slice(), y.as_slice()))
}

pub(crate) fn convolve_slices(v: &[Complex64], y: &[Complex64]) -> ComplexVector {
    let mut out = ComplexVector::zeros(v.len() + y.len() - 1);
    for (k, &vk) in v.iter().enumerate() {
        if vk == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (n, &yn) in y.iter().enumerate() {
            out[k + n] += vk * yn;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LobeMetrics {
    pub mainlobe_power: f64,
    pub peak_sidelobe_power: f64,
    /// `+inf` when every sidelobe is exactly zero.
    pub ratio_db: f64,
}

/// Mainlobe power at the 1-based `matched_index` versus the strongest other lag.
pub fn lobe_metrics(z: &ComplexVector, matched_index: usize) -> Result<LobeMetrics> {
    if z.len() < 2 {
        return Err(Error::InvalidArgument(
            "lobe metrics need at least 2 lags".into(),
        ));
    }
    if matched_index == 0 || matched_index > z.len() {
        return Err(Error::InvalidArgument(format!(
            "matched index {matched_index} outside 1..={}",
            z.len()
        )));
    }
    let centre = matched_index - 1;
    let mainlobe_power = z[centre].norm_sqr();
    let peak_sidelobe_power = z
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != centre)
        .map(|(_, s)| s.norm_sqr())
        .fold(0.0, f64::max);
    if mainlobe_power == 0.0 && peak_sidelobe_power == 0.0 {
        return Err(Error::DegenerateInput(
            "lobe metrics of an all-zero output".into(),
        ));
    }
    let ratio_db = if peak_sidelobe_power == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (mainlobe_power / peak_sidelobe_power).log10()
    };
    Ok(LobeMetrics {
        mainlobe_power,
        peak_sidelobe_power,
        ratio_db,
    })
}

/// Largest entry modulus, the ℓ∞ norm of a complex vector.
pub fn max_modulus(v: &ComplexVector) -> f64 {
    v.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> ComplexVector {
        ComplexVector::from_fn(n, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    fn brute_conv(v: &ComplexVector, y: &ComplexVector) -> Vec<Complex64> {
        let n = v.len() + y.len() - 1;
        (0..n)
            .map(|i| {
                let mut acc = c(0.0, 0.0);
                for k in 0..v.len() {
                    if i >= k && i - k < y.len() {
                        acc += v[k] * y[i - k];
                    }
                }
                acc
            })
            .collect()
    }

    #[test]
    fn steering_examples() {
        let a = steering_vector(1, 0.7).unwrap();
        assert_abs_diff_eq!(a[0].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a[0].im, 0.0, epsilon = 1e-15);

        let a = steering_vector(4, 0.0).unwrap();
        for e in a.iter() {
            assert_abs_diff_eq!(e.re, 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(e.im, 0.0, epsilon = 1e-15);
        }

        let a = steering_vector(2, PI / 6.0).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(a[0].re, h, epsilon = 1e-12);
        assert_abs_diff_eq!(a[1].re, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a[1].im, h, epsilon = 1e-12);

        assert!(matches!(
            steering_vector(0, 0.1),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn lfm_first_column_and_norms() {
        let x = lfm_waveform(5, 12).unwrap();
        let expect = 1.0 / 60f64.sqrt();
        for m in 0..5 {
            assert_abs_diff_eq!(x[(m, 0)].re, expect, epsilon = 1e-15);
            assert_abs_diff_eq!(x[(m, 0)].im, 0.0, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(x.norm(), 1.0, epsilon = 1e-12);
        for col in x.column_iter() {
            assert_abs_diff_eq!(col.norm(), 1.0 / 12f64.sqrt(), epsilon = 1e-12);
        }
        assert!(lfm_waveform(0, 3).is_err());
        assert!(lfm_waveform(3, 0).is_err());
    }

    #[test]
    fn lfm_rows_orthogonal_square_case() {
        let x = lfm_waveform(4, 4).unwrap();
        // Independent route: the Gram entry is a geometric sum over slots.
        for m in 0..4 {
            for mp in 0..4 {
                let mut acc = c(0.0, 0.0);
                for p in 0..4 {
                    let d = (m as f64 - mp as f64) * p as f64;
                    acc += Complex64::from_polar(1.0, 2.0 * PI * d / 4.0);
                }
                acc /= 16.0;
                let expect = if m == mp { 0.25 } else { 0.0 };
                assert_abs_diff_eq!(acc.re, expect, epsilon = 1e-12);
                assert_abs_diff_eq!(acc.im, 0.0, epsilon = 1e-12);
            }
        }
        let gram = &x * x.adjoint();
        for m in 0..4 {
            for mp in 0..4 {
                let expect = if m == mp { 0.25 } else { 0.0 };
                assert_abs_diff_eq!(gram[(m, mp)].re, expect, epsilon = 1e-12);
                assert_abs_diff_eq!(gram[(m, mp)].im, 0.0, epsilon = 1e-12);
            }
        }
    }

    fn profile(tp: f64, ts: f64, ns: usize, dt: f64) -> JammerProfile {
        JammerProfile {
            pulse_width: tp,
            repetition_period: ts,
            n_slices: ns,
            sample_interval: dt,
            enabled: true,
        }
    }

    #[test]
    fn mask_examples() {
        let full = isrj_mask(&profile(1e-6, 1e-6, 8, 0.25e-6), 30);
        assert!(full.iter().all(|m| *m == c(1.0, 0.0)));

        let m = isrj_mask(&profile(2.5e-6, 7.5e-6, 2, 0.5e-6), 30);
        // Interval membership evaluated sample by sample.
        let expected: Vec<usize> = (0..30)
            .filter(|&n| (0..2).any(|k| n >= 15 * k && n < 15 * k + 5))
            .collect();
        assert_eq!(expected, vec![0, 1, 2, 3, 4, 15, 16, 17, 18, 19]);
        let ones: Vec<usize> = (0..30).filter(|&n| m[n].re == 1.0).collect();
        assert_eq!(ones, expected);

        let mut off = profile(2.5e-6, 7.5e-6, 2, 0.5e-6);
        off.enabled = false;
        assert!(isrj_mask(&off, 30).iter().all(|m| m.norm() == 0.0));
    }

    #[test]
    fn mask_duty_ratio_over_one_period() {
        for (tp, ts, dt) in [
            (2.5e-6, 7.5e-6, 0.1e-6),
            (1.0e-6, 3.3e-6, 0.2e-6),
            (0.7, 1.9, 0.1),
        ] {
            let p = profile(tp, ts, 1, dt);
            let (on, period) = p.grid_lengths();
            let m = isrj_mask(&p, period);
            let count = m.iter().filter(|v| v.re == 1.0).count();
            assert_eq!(count, ((tp / dt).round() as usize).min(period));
            assert_eq!(period, (ts / dt).round() as usize);
            assert_eq!(count, on);
        }
    }

    #[test]
    fn apply_isrj_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = ComplexMatrix::from_fn(3, 5, |_, _| c(rng.random(), rng.random()));
        let ones = ComplexVector::from_element(5, c(1.0, 0.0));
        assert_eq!(apply_isrj(&x, &ones).unwrap(), x);
        let zeros = ComplexVector::zeros(5);
        assert_eq!(apply_isrj(&x, &zeros).unwrap(), ComplexMatrix::zeros(3, 5));
        let mut one_hot = ComplexVector::zeros(5);
        one_hot[1] = c(1.0, 0.0);
        let y = apply_isrj(&x, &one_hot).unwrap();
        for p in 0..5 {
            let nonzero = y.column(p).iter().any(|v| v.norm() > 0.0);
            assert_eq!(nonzero, p == 1);
        }
        assert_eq!(y.column(1), x.column(1));
        assert!(apply_isrj(&x, &ComplexVector::zeros(4)).is_err());
    }

    #[test]
    fn convolution_examples() {
        let y = ComplexVector::from_vec(vec![c(1.0, 2.0), c(-3.0, 0.5)]);
        let one = ComplexVector::from_vec(vec![c(1.0, 0.0)]);
        assert_eq!(convolve_full(&one, &y).unwrap(), y);
        let delay = ComplexVector::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)]);
        let out = convolve_full(&delay, &y).unwrap();
        assert_eq!(out.as_slice(), &[c(0.0, 0.0), y[0], y[1]]);
        assert!(convolve_full(&ComplexVector::zeros(0), &y).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let v = random_vec(&mut rng, 8);
        let y = random_vec(&mut rng, 8);
        let fast = convolve_full(&v, &y).unwrap();
        assert_eq!(fast.len(), 15);
        for (a, b) in fast.iter().zip(brute_conv(&v, &y)) {
            assert!((a - b).norm() <= 1e-12);
        }
    }

    #[test]
    fn lobe_metric_examples() {
        let mut z = ComplexVector::zeros(7);
        z[3] = c(1.0, 0.0);
        let m = lobe_metrics(&z, 4).unwrap();
        assert_eq!(m.mainlobe_power, 1.0);
        assert_eq!(m.peak_sidelobe_power, 0.0);
        assert!(m.ratio_db.is_infinite() && m.ratio_db > 0.0);

        let z = ComplexVector::from_vec(vec![c(0.1, 0.0), c(1.0, 0.0), c(0.1, 0.0)]);
        let m = lobe_metrics(&z, 2).unwrap();
        assert_abs_diff_eq!(m.mainlobe_power, 1.0);
        assert_abs_diff_eq!(m.peak_sidelobe_power, 0.01, epsilon = 1e-15);
        assert_abs_diff_eq!(m.ratio_db, 20.0, epsilon = 1e-12);

        assert!(matches!(
            lobe_metrics(&ComplexVector::zeros(5), 3),
            Err(Error::DegenerateInput(_))
        ));
        assert!(lobe_metrics(&z, 0).is_err());
        assert!(lobe_metrics(&z, 4).is_err());
    }

    proptest! {
        #[test]
        fn steering_has_unit_norm(n in 1usize..64, theta in -1.5f64..1.5) {
            let a = steering_vector(n, theta).unwrap();
            prop_assert!((a.norm() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn convolution_matches_direct_sum(seed in any::<u64>(), lv in 1usize..=64, ly in 1usize..=64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v = random_vec(&mut rng, lv);
            let y = random_vec(&mut rng, ly);
            let fast = convolve_full(&v, &y).unwrap();
            for (a, b) in fast.iter().zip(brute_conv(&v, &y)) {
                prop_assert!((a - b).norm() <= 1e-12);
            }
        }

        #[test]
        fn convolution_is_bilinear(seed in any::<u64>(), n in 1usize..32) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v1 = random_vec(&mut rng, n);
            let v2 = random_vec(&mut rng, n);
            let y = random_vec(&mut rng, n + 3);
            let alpha = c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let lhs = convolve_full(&(&v1 * alpha), &y).unwrap();
            let rhs = convolve_full(&v1, &y).unwrap() * alpha;
            prop_assert!(max_modulus(&(lhs - rhs)) <= 1e-10);
            let lhs = convolve_full(&(&v1 + &v2), &y).unwrap();
            let rhs = convolve_full(&v1, &y).unwrap() + convolve_full(&v2, &y).unwrap();
            prop_assert!(max_modulus(&(lhs - rhs)) <= 1e-10);
        }
    }
}
