//! Receive chain: echo synthesis, combiner bank, pulse compression, CA-CFAR
//! and range/angle read-out.
//!
//! The receive window spans `2P − 1` samples so a target delayed by up to
//! `P − 1` samples is captured whole. Filter outputs therefore have length
//! `3P − 2` and a target at range cell `d` peaks at 0-based index `P − 1 + d`.

use std::io::Write;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{complex_gaussian_matrix, rng_from_seed};
use crate::signal::{convolve_full, steering_vector, ComplexMatrix, ComplexVector, Scenario};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrueTarget {
    pub angle: f64,
    pub amplitude: Complex64,
    /// Round-trip delay in samples.
    pub delay: usize,
}

#[derive(Debug, Clone)]
pub struct EchoFrame {
    /// `N_r × (2P − 1)` array snapshot.
    pub y_rx: ComplexMatrix,
    pub true_targets: Vec<TrueTarget>,
    pub jammer_on: bool,
    pub noise_power: f64,
    /// Transmit slots P.
    pub n_slots: usize,
}

/// Echo of every target and of the repeater, plus white noise of power
/// `scenario.sense_noise_power` per entry.
pub fn simulate_echo(
    scenario: &Scenario,
    x: &ComplexMatrix,
    mask: &ComplexVector,
    delays: &[usize],
    seed: u64,
) -> Result<EchoFrame> {
    let p = x.ncols();
    if x.nrows() != scenario.n_tx || p != scenario.n_slots || mask.len() != p {
        return Err(Error::InvalidArgument(format!(
            "waveform {}x{} / mask {} do not match the scenario",
            x.nrows(),
            p,
            mask.len()
        )));
    }
    if delays.len() != scenario.n_targets() {
        return Err(Error::InvalidArgument(format!(
            "{} delays for {} targets",
            delays.len(),
            scenario.n_targets()
        )));
    }
    if let Some(d) = delays
        .iter()
        .chain(std::iter::once(&scenario.jammer_delay))
        .find(|&&d| d >= p)
    {
        return Err(Error::InvalidArgument(format!(
            "delay {d} outside [0, {p})"
        )));
    }
    let nr = scenario.n_rx;
    let window = 2 * p - 1;
    let mut y = ComplexMatrix::zeros(nr, window);

    let add_path = |y: &mut ComplexMatrix,
                    angle: f64,
                    amp: Complex64,
                    gate: Option<&ComplexVector>,
                    delay: usize|
     -> Result<()> {
        if amp == Complex64::new(0.0, 0.0) {
            return Ok(());
        }
        let at = steering_vector(scenario.n_tx, angle)?;
        let ar = steering_vector(nr, angle)?;
        for pp in 0..p {
            let mut s = at.dotc(&x.column(pp)) * amp;
            if let Some(g) = gate {
                s *= g[pp];
            }
            for r in 0..nr {
                y[(r, pp + delay)] += ar[r] * s;
            }
        }
        Ok(())
    };

    let mut true_targets = Vec::with_capacity(delays.len());
    for ((&angle, &amp), &delay) in scenario
        .target_angles
        .iter()
        .zip(&scenario.target_amplitudes)
        .zip(delays)
    {
        add_path(&mut y, angle, amp, None, delay)?;
        true_targets.push(TrueTarget {
            angle,
            amplitude: amp,
            delay,
        });
    }
    let jammer_on = scenario.jammer_amplitude != Complex64::new(0.0, 0.0)
        && mask.iter().any(|g| g.norm() > 0.0);
    add_path(
        &mut y,
        scenario.jammer_angle,
        scenario.jammer_amplitude,
        Some(mask),
        scenario.jammer_delay,
    )?;

    if scenario.sense_noise_power > 0.0 {
        let mut rng = rng_from_seed(seed);
        y += complex_gaussian_matrix(&mut rng, nr, window, scenario.sense_noise_power);
    }
    if !y.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
        return Err(Error::NonFinite("echo frame".into()));
    }
    Ok(EchoFrame {
        y_rx: y,
        true_targets,
        jammer_on,
        noise_power: scenario.sense_noise_power,
        n_slots: p,
    })
}

/// Mean per-entry power of the echo of a target with amplitude `amp` at
/// `angle`, taken over its `N_r × P` footprint.
pub fn echo_power(x: &ComplexMatrix, angle: f64, amp: Complex64, n_rx: usize) -> Result<f64> {
    let at = steering_vector(x.nrows(), angle)?;
    let beam = x.ad_mul(&at).norm_squared();
    Ok(amp.norm_sqr() * beam / (n_rx * x.ncols()) as f64)
}

/// Beamformed snapshot `(a(N_r, θ)ᴴ Y)ᵀ`.
pub fn combine(y_rx: &ComplexMatrix, theta: f64) -> Result<ComplexVector> {
    let a = steering_vector(y_rx.nrows(), theta)?;
    Ok(ComplexVector::from_iterator(
        y_rx.ncols(),
        y_rx.column_iter().map(|col| a.dotc(&col)),
    ))
}

/// `z_l = v_l ⊛ combine(Y, θ_l)` for every look direction.
pub fn apply_filter_bank(
    frame: &EchoFrame,
    filters: &[ComplexVector],
    detection_angles: &[f64],
) -> Result<Vec<ComplexVector>> {
    if filters.len() != detection_angles.len() {
        return Err(Error::InvalidArgument(format!(
            "{} filters for {} angles",
            filters.len(),
            detection_angles.len()
        )));
    }
    filters
        .iter()
        .zip(detection_angles)
        .map(|(v, &theta)| convolve_full(v, &combine(&frame.y_rx, theta)?))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfarConfig {
    pub pfa: f64,
    /// Training cells per side.
    pub n_train: usize,
    /// Guard cells per side.
    pub n_guard: usize,
}

impl Default for CfarConfig {
    fn default() -> Self {
        Self {
            pfa: 1e-3,
            n_train: 16,
            n_guard: 2,
        }
    }
}

impl CfarConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.pfa > 0.0 && self.pfa < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "pfa {} outside (0, 1)",
                self.pfa
            )));
        }
        if self.n_train == 0 {
            return Err(Error::InvalidArgument("n_train must be positive".into()));
        }
        Ok(())
    }
}

/// CA-CFAR scale for `n` averaged exponential cells.
pub fn cfar_scale(pfa: f64, n: usize) -> f64 {
    let n = n as f64;
    n * (pfa.powf(-1.0 / n) - 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CfarOutput {
    pub detections: Vec<usize>,
    pub threshold: Vec<f64>,
}

/// Cell-averaging CFAR on square-law samples.
///
/// Near the ends the window keeps whatever training cells exist on each
/// side and the scale is computed for that count, so every cell is held to
/// the same false-alarm probability.
pub fn cfar_detect(magnitude_sq: &[f64], cfg: &CfarConfig) -> Result<CfarOutput> {
    cfg.validate()?;
    let n = magnitude_sq.len();
    let reach = cfg.n_train + cfg.n_guard;
    if n <= reach {
        return Err(Error::InvalidArgument(format!(
            "{n} cells cannot hold a window of {} guard + {} training cells",
            cfg.n_guard, cfg.n_train
        )));
    }
    let mut prefix = vec![0.0; n + 1];
    for (i, &s) in magnitude_sq.iter().enumerate() {
        prefix[i + 1] = prefix[i] + s;
    }
    let sum = |lo: usize, hi: usize| prefix[hi] - prefix[lo];

    let mut threshold = Vec::with_capacity(n);
    let mut detections = Vec::new();
    for i in 0..n {
        let mut total = 0.0;
        let mut count = 0;
        if i > cfg.n_guard {
            let hi = i - cfg.n_guard;
            let lo = hi.saturating_sub(cfg.n_train);
            total += sum(lo, hi);
            count += hi - lo;
        }
        let lo = i + cfg.n_guard + 1;
        if lo < n {
            let hi = (lo + cfg.n_train).min(n);
            total += sum(lo, hi);
            count += hi - lo;
        }
        let t = cfar_scale(cfg.pfa, count) * total / count as f64;
        if magnitude_sq[i] > t {
            detections.push(i);
        }
        threshold.push(t);
    }
    Ok(CfarOutput {
        detections,
        threshold,
    })
}

/// Collapses runs of adjacent indices to the index of their largest sample.
pub fn merge_adjacent(detections: &[usize], magnitude_sq: &[f64]) -> Vec<usize> {
    let mut peaks = Vec::new();
    let mut i = 0;
    while i < detections.len() {
        let mut best = detections[i];
        let mut j = i + 1;
        while j < detections.len() && detections[j] == detections[j - 1] + 1 {
            if magnitude_sq[detections[j]] > magnitude_sq[best] {
                best = detections[j];
            }
            j += 1;
        }
        peaks.push(best);
        i = j;
    }
    peaks
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectedTarget {
    pub angle_index: usize,
    pub angle: f64,
    pub range_cell: usize,
    pub magnitude_db: f64,
    pub threshold_db: f64,
}

#[derive(Debug, Clone)]
pub struct AngleTrace {
    pub magnitude_sq: Vec<f64>,
    pub threshold: Vec<f64>,
    /// Merged peaks, as filter-output indices.
    pub detections: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct DetectionReport {
    pub angles: Vec<AngleTrace>,
    pub targets: Vec<DetectedTarget>,
    /// Output index of range cell 0.
    pub zero_lag: usize,
}

impl DetectionReport {
    /// Estimated number of targets Ŵ.
    pub fn target_count(&self) -> usize {
        self.targets.len()
    }

    pub fn detects(&self, angle_index: usize, range_cell: usize) -> bool {
        self.detects_near(angle_index, range_cell, 0)
    }

    /// Whether a target was reported at `angle_index` within `tol` cells of
    /// `range_cell`.
    pub fn detects_near(&self, angle_index: usize, range_cell: usize, tol: usize) -> bool {
        self.targets
            .iter()
            .any(|t| t.angle_index == angle_index && t.range_cell.abs_diff(range_cell) <= tol)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["angle_index", "range_cell", "magnitude_db", "threshold_db"])?;
        for t in &self.targets {
            w.write_record([
                t.angle_index.to_string(),
                t.range_cell.to_string(),
                crate::harness::fmt_real(t.magnitude_db),
                crate::harness::fmt_real(t.threshold_db),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// CFAR on every filter output; peaks before the zero-delay index have no
/// physical range and are kept in the traces only.
pub fn estimate_targets(
    outputs: &[ComplexVector],
    detection_angles: &[f64],
    zero_lag: usize,
    cfar: &CfarConfig,
) -> Result<DetectionReport> {
    if outputs.len() != detection_angles.len() {
        return Err(Error::InvalidArgument(format!(
            "{} outputs for {} angles",
            outputs.len(),
            detection_angles.len()
        )));
    }
    let db = |p: f64| 10.0 * p.log10();
    let mut angles = Vec::with_capacity(outputs.len());
    let mut targets = Vec::new();
    for (l, z) in outputs.iter().enumerate() {
        let mag: Vec<f64> = z.iter().map(|c| c.norm_sqr()).collect();
        let cf = cfar_detect(&mag, cfar)?;
        let peaks = merge_adjacent(&cf.detections, &mag);
        for &i in &peaks {
            if i >= zero_lag {
                targets.push(DetectedTarget {
                    angle_index: l,
                    angle: detection_angles[l],
                    range_cell: i - zero_lag,
                    magnitude_db: db(mag[i]),
                    threshold_db: db(cf.threshold[i]),
                });
            }
        }
        angles.push(AngleTrace {
            magnitude_sq: mag,
            threshold: cf.threshold,
            detections: peaks,
        });
    }
    Ok(DetectionReport {
        angles,
        targets,
        zero_lag,
    })
}

/// Full receive chain for one echo frame.
pub fn detect(
    frame: &EchoFrame,
    filters: &[ComplexVector],
    detection_angles: &[f64],
    cfar: &CfarConfig,
) -> Result<DetectionReport> {
    let outputs = apply_filter_bank(frame, filters, detection_angles)?;
    estimate_targets(&outputs, detection_angles, frame.n_slots - 1, cfar)
}

/// Draws `n` i.i.d. unit-mean exponential samples, the square-law output of
/// unit-power complex noise.
pub fn exponential_noise<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::matched_filter;
    use crate::signal::lfm_waveform;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn scene(targets: &[(f64, Complex64)], jam: Complex64, noise: f64) -> Scenario {
        Scenario {
            n_tx: 8,
            n_rx: 8,
            n_users: 2,
            n_slots: 16,
            detection_angles: vec![0.3, -0.5],
            target_angles: targets.iter().map(|t| t.0).collect(),
            target_amplitudes: targets.iter().map(|t| t.1).collect(),
            jammer_angle: 0.3,
            jammer_amplitude: jam,
            jammer_delay: 0,
            comm_noise_power: 0.0,
            sense_noise_power: noise,
        }
    }

    fn mask(p: usize) -> ComplexVector {
        ComplexVector::from_fn(p, |i, _| c(if i % 4 < 2 { 1.0 } else { 0.0 }, 0.0))
    }

    #[test]
    fn silent_scene_is_zero() {
        let sc = scene(&[(0.3, c(0.0, 0.0))], c(0.0, 0.0), 0.0);
        let x = lfm_waveform(8, 16).unwrap();
        let f = simulate_echo(&sc, &x, &mask(16), &[3], 1).unwrap();
        assert!(f.y_rx.iter().all(|v| *v == c(0.0, 0.0)));
        assert!(!f.jammer_on);
    }

    #[test]
    fn matched_angle_combiner_recovers_transmit_response() {
        let amp = c(0.7, -0.2);
        let sc = scene(&[(0.3, amp)], c(0.0, 0.0), 0.0);
        let x = lfm_waveform(8, 16).unwrap();
        let f = simulate_echo(&sc, &x, &mask(16), &[0], 1).unwrap();
        let y = combine(&f.y_rx, 0.3).unwrap();
        let at = steering_vector(8, 0.3).unwrap();
        for p in 0..16 {
            assert!((y[p] - amp * at.dotc(&x.column(p))).norm() <= 1e-12);
        }
        assert!(y.rows(16, 15).iter().all(|v| v.norm() <= 1e-15));
    }

    #[test]
    fn delay_out_of_range_is_rejected() {
        let sc = scene(&[(0.3, c(1.0, 0.0))], c(0.0, 0.0), 0.0);
        let x = lfm_waveform(8, 16).unwrap();
        assert!(simulate_echo(&sc, &x, &mask(16), &[16], 1).is_err());
        let mut sc = scene(&[], c(1.0, 0.0), 0.0);
        sc.jammer_delay = 16;
        assert!(simulate_echo(&sc, &x, &mask(16), &[], 1).is_err());
    }

    #[test]
    fn jammer_is_gated_and_delayed() {
        let g = mask(16);
        let amp = c(0.0, 2.0);
        let mut sc = scene(&[], amp, 0.0);
        sc.jammer_delay = 5;
        let x = lfm_waveform(8, 16).unwrap();
        let f = simulate_echo(&sc, &x, &g, &[], 1).unwrap();
        assert!(f.jammer_on);
        let y = combine(&f.y_rx, 0.3).unwrap();
        let at = steering_vector(8, 0.3).unwrap();
        for i in 0..31 {
            let expect = if (5..21).contains(&i) {
                amp * g[i - 5] * at.dotc(&x.column(i - 5))
            } else {
                c(0.0, 0.0)
            };
            assert!((y[i] - expect).norm() <= 1e-12, "sample {i}");
        }
    }

    #[test]
    fn noise_power_matches() {
        let mut sc = scene(&[], c(0.0, 0.0), 0.37);
        sc.n_rx = 64;
        sc.n_slots = 800;
        sc.n_tx = 1;
        let x = ComplexMatrix::zeros(1, 800);
        let f = simulate_echo(&sc, &x, &ComplexVector::zeros(800), &[], 9).unwrap();
        let est = f.y_rx.norm_squared() / (f.y_rx.len() as f64);
        assert!((est / 0.37 - 1.0).abs() <= 0.02, "{est}");
    }

    #[test]
    fn scalar_combiner_is_identity() {
        let y = ComplexMatrix::from_fn(1, 5, |_, j| c(j as f64, 1.0));
        let out = combine(&y, 0.8).unwrap();
        assert_eq!(out, y.row(0).transpose());
    }

    #[test]
    fn combiner_unit_gain_and_nulls() {
        let nr = 8;
        let theta = 0.2f64;
        let u = ComplexVector::from_fn(6, |i, _| c(i as f64 - 2.0, 0.5));
        let a = steering_vector(nr, theta).unwrap();
        let y = &a * u.transpose();
        assert!((combine(&y, theta).unwrap() - &u).norm() <= 1e-12);
        for k in [1i32, 2, 3, -1, -2] {
            let s = theta.sin() + 2.0 * k as f64 / nr as f64;
            if s.abs() >= 1.0 {
                continue;
            }
            let a2 = steering_vector(nr, s.asin()).unwrap();
            let y2 = &a2 * u.transpose();
            assert!(combine(&y2, theta).unwrap().norm() <= 1e-10, "k = {k}");
        }
    }

    #[test]
    fn filter_bank_is_linear_and_impulse_pads() {
        let x = lfm_waveform(8, 16).unwrap();
        let sc1 = scene(&[(0.3, c(1.0, 0.0))], c(2.0, 0.0), 0.1);
        let sc2 = scene(&[(-0.5, c(0.0, 0.4))], c(0.0, 0.0), 0.2);
        let f1 = simulate_echo(&sc1, &x, &mask(16), &[2], 4).unwrap();
        let f2 = simulate_echo(&sc2, &x, &mask(16), &[5], 5).unwrap();
        let mut sum = f1.clone();
        sum.y_rx += &f2.y_rx;
        let angles = [0.3, -0.5];
        let filters: Vec<_> = angles
            .iter()
            .map(|&a| matched_filter(&x, a).unwrap())
            .collect();
        let z1 = apply_filter_bank(&f1, &filters, &angles).unwrap();
        let z2 = apply_filter_bank(&f2, &filters, &angles).unwrap();
        let zs = apply_filter_bank(&sum, &filters, &angles).unwrap();
        for l in 0..2 {
            assert!((&zs[l] - &z1[l] - &z2[l]).norm() <= 1e-10);
        }
        let mut imp = ComplexVector::zeros(16);
        imp[0] = c(1.0, 0.0);
        let z = apply_filter_bank(&f1, &[imp.clone(), imp], &angles).unwrap();
        let y = combine(&f1.y_rx, 0.3).unwrap();
        assert_eq!(z[0].rows(0, y.len()), y);
        assert!(z[0].rows(y.len(), 15).iter().all(|v| *v == c(0.0, 0.0)));
    }

    #[test]
    fn matched_peak_lands_at_delay() {
        let x = lfm_waveform(8, 16).unwrap();
        for d in [0usize, 3, 7, 15] {
            let sc = scene(&[(0.3, c(1.0, 0.0))], c(0.0, 0.0), 0.0);
            let f = simulate_echo(&sc, &x, &mask(16), &[d], 1).unwrap();
            let v = matched_filter(&x, 0.3).unwrap();
            let z = apply_filter_bank(&f, &[v], &[0.3]).unwrap();
            let peak = (0..z[0].len())
                .max_by(|&a, &b| z[0][a].norm().total_cmp(&z[0][b].norm()))
                .unwrap();
            assert_eq!(peak, 15 + d);
        }
    }

    #[test]
    fn cfar_constant_input_never_fires() {
        let cfg = CfarConfig::default();
        assert!(cfar_scale(1e-3, 32) > 1.0);
        let out = cfar_detect(&vec![2.5; 200], &cfg).unwrap();
        assert!(out.detections.is_empty());
    }

    #[test]
    fn cfar_finds_single_spike() {
        let mut x = vec![1.0; 300];
        x[137] = 1e6;
        let out = cfar_detect(&x, &CfarConfig::default()).unwrap();
        assert_eq!(out.detections, vec![137]);
    }

    #[test]
    fn cfar_window_must_fit() {
        assert!(cfar_detect(&[1.0; 10], &CfarConfig::default()).is_err());
        let bad = CfarConfig {
            pfa: 1.0,
            ..CfarConfig::default()
        };
        assert!(cfar_detect(&[1.0; 100], &bad).is_err());
    }

    #[test]
    fn cfar_false_alarm_rate_is_calibrated() {
        let cfg = CfarConfig::default();
        let mut rng = rng_from_seed(2024);
        let mut alarms = 0usize;
        let mut cells = 0usize;
        while cells < 1_000_000 {
            let x = exponential_noise(&mut rng, 1000);
            alarms += cfar_detect(&x, &cfg).unwrap().detections.len();
            cells += x.len();
        }
        let rate = alarms as f64 / cells as f64;
        assert!((3e-4..=3e-3).contains(&rate), "{rate}");
    }

    #[test]
    fn two_spikes_two_targets() {
        let p = 16;
        let mut z = ComplexVector::from_element(3 * p - 2, c(0.01, 0.0));
        z[p - 1 + 4] = c(100.0, 0.0);
        z[p - 1 + 12] = c(0.0, 50.0);
        let rep = estimate_targets(&[z], &[0.1], p - 1, &CfarConfig::default()).unwrap();
        assert_eq!(rep.target_count(), 2);
        assert!(rep.detects(0, 4) && rep.detects(0, 12));
    }

    #[test]
    fn quiet_outputs_report_nothing() {
        let z = ComplexVector::from_element(40, c(1.0, 0.0));
        let rep =
            estimate_targets(&[z.clone(), z], &[0.0, 0.5], 13, &CfarConfig::default()).unwrap();
        assert_eq!(rep.target_count(), 0);
        assert!(rep.targets.is_empty());
    }

    #[test]
    fn merging_keeps_the_local_maximum() {
        let mag = [0.0, 5.0, 9.0, 4.0, 0.0, 7.0];
        assert_eq!(merge_adjacent(&[1, 2, 3, 5], &mag), vec![2, 5]);
    }

    #[test]
    fn report_csv_layout() {
        let p = 16;
        let mut z = ComplexVector::from_element(3 * p - 2, c(0.01, 0.0));
        z[p + 2] = c(10.0, 0.0);
        let rep = estimate_targets(&[z], &[0.1], p - 1, &CfarConfig::default()).unwrap();
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next(),
            Some("angle_index,range_cell,magnitude_db,threshold_db")
        );
        assert!(lines.next().unwrap().starts_with("0,3,2.00000000000e1,"));
    }

    proptest! {
        #[test]
        fn cfar_detections_are_scale_invariant(seed in 0u64..500, scale in prop::sample::select(vec![1e-3, 1e3])) {
            let mut rng = rng_from_seed(seed);
            let mut x = exponential_noise(&mut rng, 120);
            x[40] *= 50.0;
            let cfg = CfarConfig { pfa: 1e-2, ..CfarConfig::default() };
            let a = cfar_detect(&x, &cfg).unwrap();
            let xs: Vec<f64> = x.iter().map(|v| v * scale).collect();
            let b = cfar_detect(&xs, &cfg).unwrap();
            prop_assert_eq!(a.detections, b.detections);
        }

        #[test]
        fn impulse_maps_to_its_cell(d in 0usize..16) {
            let p = 16;
            let mut z = ComplexVector::zeros(3 * p - 2);
            z.fill(c(1e-3, 0.0));
            z[p - 1 + d] = c(1e3, 0.0);
            let rep = estimate_targets(&[z], &[0.0], p - 1, &CfarConfig::default()).unwrap();
            prop_assert_eq!(rep.target_count(), 1);
            prop_assert_eq!(rep.targets[0].range_cell, d);
        }
    }
}
