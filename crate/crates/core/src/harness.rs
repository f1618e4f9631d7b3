//! Seeded experiment drivers and their CSV artifacts: MUI evaluation over
//! channel draws, the Pd-versus-SNR sweep and the sidelobe comparison.
//!
//! Every random draw comes from `derive_seed(root, stream, point, trial)`
//! and trial results are collected by index, so outputs do not depend on
//! the worker count.

use std::io::{Read, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::comms::{gen_symbols, mui, CommFrame, MuiMetrics};
use crate::config::{ChannelModel, ExperimentConfig, Setup};
use crate::error::{Error, Result};
use crate::optimizer::Scheme;
use crate::radar::{detect, echo_power, simulate_echo, DetectionReport};
use crate::rng::{derive_seed, Stream};
use crate::schemes::{run_with_model, DesignResult};
use crate::signal::{lfm_waveform, lobe_metrics, ComplexMatrix, ComplexVector};

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Fixed 12-significant-digit rendering used in every report CSV.
pub fn fmt_real(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.11e}")
    }
}

/// Communication frame of channel draw `trial`.
pub fn draw_frame(
    cfg: &ExperimentConfig,
    setup: &Setup,
    root: u64,
    trial: u64,
) -> Result<CommFrame> {
    let sc = &setup.scenario;
    let channel = match cfg.scenario.channel {
        ChannelModel::Rayleigh => {
            crate::comms::gen_channel(sc, derive_seed(root, Stream::Channel, 0, trial))
        }
        ChannelModel::Identity => ComplexMatrix::identity(sc.n_users, sc.n_tx),
    };
    let symbols = gen_symbols(
        sc.n_users,
        sc.n_slots,
        derive_seed(root, Stream::Symbols, 0, trial),
    )?;
    CommFrame::new(channel, symbols, sc.comm_noise_power)
}

/// Runs `scheme` on channel draw 0 of `root`.
pub fn design(
    cfg: &ExperimentConfig,
    setup: &Setup,
    scheme: Scheme,
    root: u64,
) -> Result<DesignResult> {
    let frame = draw_frame(cfg, setup, root, 0)?;
    run_with_model(scheme, &setup.model, &frame, &setup.design)
}

/// Sensing noise power that puts the reference target at `snr_db` under
/// the LFM reference transmission. The noise level is therefore the same
/// for every design under test.
pub fn noise_power_for_snr(cfg: &ExperimentConfig, setup: &Setup, snr_db: f64) -> Result<f64> {
    let r = cfg.scenario.reference_target;
    let sc = &setup.scenario;
    let lfm = lfm_waveform(sc.n_tx, sc.n_slots)?;
    let p = echo_power(&lfm, sc.target_angles[r], sc.target_amplitudes[r], sc.n_rx)?;
    Ok(p / 10f64.powf(snr_db / 10.0))
}

/// Detection angle closest to target `w`.
pub fn nearest_angle(setup: &Setup, w: usize) -> usize {
    let phi = setup.scenario.target_angles[w];
    let angles = &setup.scenario.detection_angles;
    (0..angles.len())
        .min_by(|&a, &b| (angles[a] - phi).abs().total_cmp(&(angles[b] - phi).abs()))
        .unwrap_or(0)
}

/// One echo simulation and CFAR pass at `snr_db`.
pub fn detect_once(
    cfg: &ExperimentConfig,
    setup: &Setup,
    x: &ComplexMatrix,
    filters: &[ComplexVector],
    snr_db: f64,
    seed: u64,
) -> Result<DetectionReport> {
    let mut sc = setup.scenario.clone();
    sc.sense_noise_power = noise_power_for_snr(cfg, setup, snr_db)?;
    let frame = simulate_echo(&sc, x, &setup.mask, &setup.delays, seed)?;
    detect(&frame, filters, &sc.detection_angles, &setup.cfar)
}

/// `detect` run at the configured sensing SNR.
pub fn run_detect(
    cfg: &ExperimentConfig,
    setup: &Setup,
    x: &ComplexMatrix,
    filters: &[ComplexVector],
    root: u64,
) -> Result<DetectionReport> {
    let seed = derive_seed(root, Stream::Detect, 0, 0);
    detect_once(cfg, setup, x, filters, cfg.evaluation.detect_snr_db, seed)
}

/// `angle_index,lag,magnitude_db,threshold_db,detected` for every filter
/// output sample; `lag` is the range cell, negative before zero delay.
pub fn write_detection_traces<W: Write>(report: &DetectionReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "angle_index",
        "lag",
        "magnitude_db",
        "threshold_db",
        "detected",
    ])?;
    let db = |p: f64| 10.0 * p.log10();
    for (l, tr) in report.angles.iter().enumerate() {
        for (i, (&m, &t)) in tr.magnitude_sq.iter().zip(&tr.threshold).enumerate() {
            w.write_record([
                l.to_string(),
                (i as i64 - report.zero_lag as i64).to_string(),
                fmt_real(db(m)),
                fmt_real(db(t)),
                u8::from(tr.detections.contains(&i)).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdPoint {
    pub snr_db: f64,
    pub pd: f64,
    pub detections: usize,
    pub n_trials: usize,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
}

impl PdPoint {
    /// Binomial standard deviation of the estimate.
    pub fn std(&self) -> f64 {
        (self.pd * (1.0 - self.pd) / self.n_trials as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepMeta {
    pub scheme: Scheme,
    pub seed: u64,
    pub config_hash: String,
    /// Human-readable statement of what counts as a detection.
    pub pd_event: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub points: Vec<PdPoint>,
    pub meta: SweepMeta,
}

impl SweepResult {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["snr_db", "pd", "n_trials", "wilson_lo", "wilson_hi"])?;
        for p in &self.points {
            w.write_record([
                fmt_real(p.snr_db),
                fmt_real(p.pd),
                p.n_trials.to_string(),
                fmt_real(p.wilson_lo),
                fmt_real(p.wilson_hi),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn meta_toml(&self) -> String {
        toml::to_string(&self.meta).expect("sweep metadata is plain TOML")
    }
}

/// Pd of the configured detect target over the SNR grid for a fixed design.
pub fn pd_sweep_for_design(
    cfg: &ExperimentConfig,
    setup: &Setup,
    scheme: Scheme,
    x: &ComplexMatrix,
    filters: &[ComplexVector],
    root: u64,
) -> Result<SweepResult> {
    let ev = &cfg.evaluation;
    let w = cfg.scenario.detect_target;
    let angle = nearest_angle(setup, w);
    let cell = setup.delays[w];
    let n = ev.n_trials;

    let hits = (0..ev.snr_db.len() * n)
        .into_par_iter()
        .map(|k| {
            let (i, t) = (k / n, k % n);
            let seed = derive_seed(root, Stream::SenseNoise, i as u64, t as u64);
            let rep = detect_once(cfg, setup, x, filters, ev.snr_db[i], seed)?;
            Ok(rep.detects_near(angle, cell, ev.cell_tolerance))
        })
        .collect::<Result<Vec<bool>>>()?;

    let points = ev
        .snr_db
        .iter()
        .zip(hits.chunks(n))
        .map(|(&snr_db, h)| {
            let detections = h.iter().filter(|&&d| d).count();
            let (wilson_lo, wilson_hi) = wilson_interval(detections, n, Z95);
            PdPoint {
                snr_db,
                pd: detections as f64 / n as f64,
                detections,
                n_trials: n,
                wilson_lo,
                wilson_hi,
            }
        })
        .collect();

    Ok(SweepResult {
        points,
        meta: SweepMeta {
            scheme,
            seed: root,
            config_hash: cfg.hash(),
            pd_event: format!(
                "target {w} reported at detection angle {angle} within {} cells of range cell {cell}",
                ev.cell_tolerance
            ),
        },
    })
}

/// Designs with the configured scheme, then sweeps Pd.
pub fn run_pd_sweep(cfg: &ExperimentConfig, root: u64) -> Result<SweepResult> {
    let setup = cfg.build()?;
    let scheme = cfg.design.scheme;
    let d = design(cfg, &setup, scheme, root)?;
    pd_sweep_for_design(cfg, &setup, scheme, &d.x, &d.filters, root)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuiRow {
    pub trial: usize,
    /// `None` when the design of this draw failed.
    pub metrics: Option<MuiMetrics>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MuiSummary {
    pub scheme: Scheme,
    pub rows: Vec<MuiRow>,
    pub failures: usize,
    pub median: Option<MuiMetrics>,
    pub max: Option<MuiMetrics>,
}

impl MuiSummary {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["trial", "frob", "frob_sq", "per_symbol"])?;
        for r in &self.rows {
            let m = r.metrics.map_or([f64::NAN; 3], |m| {
                [m.frobenius, m.frobenius_sq, m.per_symbol_avg]
            });
            let mut rec = vec![r.trial.to_string()];
            rec.extend(m.map(fmt_real));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// `statistic,frob,frob_sq,per_symbol` rows for the median and maximum,
    /// plus the failure count.
    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["statistic", "frob", "frob_sq", "per_symbol"])?;
        for (name, m) in [("median", self.median), ("max", self.max)] {
            let v = m.map_or([f64::NAN; 3], |m| {
                [m.frobenius, m.frobenius_sq, m.per_symbol_avg]
            });
            let mut rec = vec![name.to_string()];
            rec.extend(v.map(fmt_real));
            w.write_record(&rec)?;
        }
        w.write_record(["failures", &self.failures.to_string(), "", ""])?;
        w.flush()?;
        Ok(())
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// One design per channel draw; failed designs are counted and left out of
/// the aggregates.
pub fn run_mui_eval(cfg: &ExperimentConfig, root: u64) -> Result<MuiSummary> {
    let setup = cfg.build()?;
    let scheme = cfg.design.scheme;
    let rows = (0..cfg.evaluation.mui_trials)
        .into_par_iter()
        .map(|t| {
            let frame = draw_frame(cfg, &setup, root, t as u64)?;
            let metrics = match run_with_model(scheme, &setup.model, &frame, &setup.design) {
                Ok(d) => Some(mui(&frame.channel, &d.x, &frame.symbols)?),
                Err(e) => {
                    log::warn!("mui trial {t}: design failed: {e}");
                    None
                }
            };
            Ok(MuiRow { trial: t, metrics })
        })
        .collect::<Result<Vec<_>>>()?;

    let ok: Vec<MuiMetrics> = rows.iter().filter_map(|r| r.metrics).collect();
    let agg = |f: fn(Vec<f64>) -> f64| -> Option<MuiMetrics> {
        (!ok.is_empty()).then(|| MuiMetrics {
            frobenius: f(ok.iter().map(|m| m.frobenius).collect()),
            frobenius_sq: f(ok.iter().map(|m| m.frobenius_sq).collect()),
            per_symbol_avg: f(ok.iter().map(|m| m.per_symbol_avg).collect()),
        })
    };
    Ok(MuiSummary {
        scheme,
        failures: rows.len() - ok.len(),
        median: agg(median),
        max: agg(|v| v.into_iter().fold(f64::NEG_INFINITY, f64::max)),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SidelobeRow {
    /// `lfm`, `jtmd` or `jtmmd`.
    pub scheme: String,
    pub angle_index: usize,
    /// Mainlobe power in dB relative to the design floor ζ_l.
    pub mainlobe_db: f64,
    /// Peak sidelobe power in dB relative to ζ_l.
    pub psl_db: f64,
    pub ratio_db: f64,
}

/// Lobe metrics of `z_l = b_l + d_l` for one waveform and filter bank.
pub fn sidelobe_rows(
    setup: &Setup,
    label: &str,
    x: &ComplexMatrix,
    filters: &[ComplexVector],
) -> Result<Vec<SidelobeRow>> {
    let out = setup.model.outputs(x, filters)?;
    let db = |p: f64| 10.0 * p.log10();
    (0..setup.model.n_angles())
        .map(|l| {
            let m = lobe_metrics(&out.z[l], setup.model.n_slots)?;
            let zeta = setup.design.target_mainlobe_floor[l];
            Ok(SidelobeRow {
                scheme: label.into(),
                angle_index: l,
                mainlobe_db: db(m.mainlobe_power / zeta),
                psl_db: db(m.peak_sidelobe_power / zeta),
                ratio_db: m.ratio_db,
            })
        })
        .collect()
}

/// LFM baseline, JTMD and JTMMD on the same draw.
pub fn run_sidelobe_compare(cfg: &ExperimentConfig, root: u64) -> Result<Vec<SidelobeRow>> {
    let setup = cfg.build()?;
    let lfm = lfm_waveform(setup.scenario.n_tx, setup.scenario.n_slots)?;
    let lfm_filters = (0..setup.model.n_angles())
        .map(|l| setup.model.matched_filter(&lfm, l))
        .collect::<Result<Vec<_>>>()?;
    let (jtmd, jtmmd) = rayon::join(
        || design(cfg, &setup, Scheme::Jtmd, root),
        || design(cfg, &setup, Scheme::Jtmmd, root),
    );
    let (jtmd, jtmmd) = (jtmd?, jtmmd?);
    let mut rows = sidelobe_rows(&setup, "lfm", &lfm, &lfm_filters)?;
    rows.extend(sidelobe_rows(&setup, "jtmd", &jtmd.x, &jtmd.filters)?);
    rows.extend(sidelobe_rows(&setup, "jtmmd", &jtmmd.x, &jtmmd.filters)?);
    Ok(rows)
}

pub fn write_sidelobe_csv<W: Write>(rows: &[SidelobeRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scheme", "angle_index", "mainlobe_db", "psl_db", "ratio_db"])?;
    for r in rows {
        w.write_record([
            r.scheme.clone(),
            r.angle_index.to_string(),
            fmt_real(r.mainlobe_db),
            fmt_real(r.psl_db),
            fmt_real(r.ratio_db),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `row,col,re,im` for every entry, column-major. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_matrix_csv<W: Write>(m: &ComplexMatrix, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["row", "col", "re", "im"])?;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let c = m[(i, j)];
            w.write_record([
                i.to_string(),
                j.to_string(),
                c.re.to_string(),
                c.im.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn parse_entries<R: Read>(input: R) -> Result<Vec<(usize, usize, Complex64)>> {
    let mut r = csv::Reader::from_reader(input);
    let bad = |e: String| Error::InvalidArgument(format!("malformed complex table: {e}"));
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != 4 {
            return Err(bad(format!("{} fields", rec.len())));
        }
        let idx = |k: usize| rec[k].parse::<usize>().map_err(|e| bad(e.to_string()));
        let val = |k: usize| rec[k].parse::<f64>().map_err(|e| bad(e.to_string()));
        out.push((idx(0)?, idx(1)?, Complex64::new(val(2)?, val(3)?)));
    }
    Ok(out)
}

fn assemble(entries: Vec<(usize, usize, Complex64)>) -> Result<ComplexMatrix> {
    let rows = entries.iter().map(|e| e.0 + 1).max().unwrap_or(0);
    let cols = entries.iter().map(|e| e.1 + 1).max().unwrap_or(0);
    if entries.len() != rows * cols {
        return Err(Error::InvalidArgument(format!(
            "complex table has {} entries for a {rows}x{cols} shape",
            entries.len()
        )));
    }
    let mut m = ComplexMatrix::zeros(rows, cols);
    for (i, j, c) in entries {
        m[(i, j)] = c;
    }
    Ok(m)
}

pub fn read_matrix_csv<R: Read>(input: R) -> Result<ComplexMatrix> {
    assemble(parse_entries(input)?)
}

/// `angle_index,tap,re,im` for every filter coefficient, lossless like
/// [`write_matrix_csv`].
pub fn write_filters_csv<W: Write>(filters: &[ComplexVector], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["angle_index", "tap", "re", "im"])?;
    for (l, v) in filters.iter().enumerate() {
        for (k, c) in v.iter().enumerate() {
            w.write_record([
                l.to_string(),
                k.to_string(),
                c.re.to_string(),
                c.im.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_filters_csv<R: Read>(input: R) -> Result<Vec<ComplexVector>> {
    let m = assemble(parse_entries(input)?)?;
    Ok(m.row_iter().map(|r| r.transpose()).collect())
}
