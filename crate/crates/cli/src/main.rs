//! `isac-jam`: design waveforms and filters, simulate detection and run the
//! Monte-Carlo experiments from one TOML config.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand};

use isac_jam::config::ExperimentConfig;
use isac_jam::harness;
use isac_jam::optimizer::Scheme;
use isac_jam::schemes::check_design;
use isac_jam::{Error, Result};

const WAVEFORM_CSV: &str = "waveform.csv";
const FILTERS_CSV: &str = "filters.csv";

#[derive(Parser)]
#[command(name = "isac-jam", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Root seed; defaults to `evaluation.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory; defaults to `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Design scheme; defaults to `design.scheme`.
    #[arg(long, global = true)]
    scheme: Option<Scheme>,

    /// Worker threads for Monte-Carlo trials (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Run one design and write waveform, filters and the ADMM trace.
    Design,
    /// Simulate one echo frame for a design and write the detection report.
    Detect {
        /// Directory holding waveform.csv and filters.csv; designs afresh
        /// when omitted.
        #[arg(long)]
        design: Option<PathBuf>,
    },
    /// Pd of the weak target over the configured SNR grid.
    SweepPd,
    /// MUI of the design over independent channel draws.
    EvalMui,
    /// Mainlobe-to-peak-sidelobe ratios of LFM, JTMD and JTMMD.
    CompareSidelobes,
    /// Parse and check a config, then print its canonical form.
    ValidateConfig,
}

struct Ctx {
    cfg: ExperimentConfig,
    seed: u64,
    out: PathBuf,
    scheme: Scheme,
}

impl Ctx {
    fn file(&self, name: &str) -> Result<BufWriter<File>> {
        fs::create_dir_all(&self.out)?;
        Ok(BufWriter::new(File::create(self.out.join(name))?))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };

    let Some(config_path) = cli.config.clone() else {
        eprintln!("error: --config is required\n");
        eprintln!("{}", Cli::command().render_usage());
        return ExitCode::from(1);
    };

    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("error: cannot size the worker pool: {e}");
            return ExitCode::from(2);
        }
    }

    match run(&cli, &config_path) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}

fn run(cli: &Cli, config_path: &Path) -> Result<()> {
    let cfg = ExperimentConfig::load(config_path)?;
    if let Command::ValidateConfig = cli.command {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    let ctx = Ctx {
        seed: cli.seed.unwrap_or(cfg.evaluation.seed),
        out: cli.out.clone().unwrap_or_else(|| cfg.output.dir.clone()),
        scheme: cli.scheme.unwrap_or(cfg.design.scheme),
        cfg,
    };
    match &cli.command {
        Command::Design => design(&ctx),
        Command::Detect { design } => detect(&ctx, design.as_deref()),
        Command::SweepPd => sweep_pd(&ctx),
        Command::EvalMui => eval_mui(&ctx),
        Command::CompareSidelobes => compare_sidelobes(&ctx),
        Command::ValidateConfig => unreachable!("handled above"),
    }
}

fn design(ctx: &Ctx) -> Result<()> {
    let setup = ctx.cfg.build()?;
    let res = harness::design(&ctx.cfg, &setup, ctx.scheme, ctx.seed)?;
    harness::write_matrix_csv(&res.x, ctx.file(WAVEFORM_CSV)?)?;
    harness::write_filters_csv(&res.filters, ctx.file(FILTERS_CSV)?)?;
    res.write_trace_csv(ctx.file("trace.csv")?)?;

    let report = check_design(&res.x, &res.filters, &setup.design, &setup.model)?;
    if !res.converged {
        log::warn!(
            "{} stopped after {} iterations with residual {:.3e}",
            ctx.scheme,
            res.iterations_run,
            res.final_residuals.max()
        );
    }
    println!(
        "{}: {} iterations, converged {}, max residual {:.3e}, constraints satisfied {}",
        ctx.scheme,
        res.iterations_run,
        res.converged,
        res.final_residuals.max(),
        report.all_satisfied()
    );
    Ok(())
}

fn detect(ctx: &Ctx, design_dir: Option<&Path>) -> Result<()> {
    let setup = ctx.cfg.build()?;
    let (x, filters) = match design_dir {
        Some(dir) => {
            let open = |name: &str| {
                File::open(dir.join(name)).map_err(|e| {
                    Error::InvalidArgument(format!("{}: {e}", dir.join(name).display()))
                })
            };
            (
                harness::read_matrix_csv(open(WAVEFORM_CSV)?)?,
                harness::read_filters_csv(open(FILTERS_CSV)?)?,
            )
        }
        None => {
            let res = harness::design(&ctx.cfg, &setup, ctx.scheme, ctx.seed)?;
            (res.x, res.filters)
        }
    };
    let sc = &setup.scenario;
    if x.nrows() != sc.n_tx || x.ncols() != sc.n_slots || filters.len() != sc.n_angles() {
        return Err(Error::InvalidArgument(
            "design files do not match the configured scenario".into(),
        ));
    }
    let report = harness::run_detect(&ctx.cfg, &setup, &x, &filters, ctx.seed)?;
    report.write_csv(ctx.file("detections.csv")?)?;
    harness::write_detection_traces(&report, ctx.file("detection_traces.csv")?)?;
    println!("estimated target count {}", report.target_count());
    for t in &report.targets {
        println!(
            "  angle {:.1} deg, range cell {}, {:.1} dB over threshold",
            t.angle.to_degrees(),
            t.range_cell,
            t.magnitude_db - t.threshold_db
        );
    }
    Ok(())
}

fn sweep_pd(ctx: &Ctx) -> Result<()> {
    let setup = ctx.cfg.build()?;
    let res = harness::design(&ctx.cfg, &setup, ctx.scheme, ctx.seed)?;
    let sweep =
        harness::pd_sweep_for_design(&ctx.cfg, &setup, ctx.scheme, &res.x, &res.filters, ctx.seed)?;
    sweep.write_csv(ctx.file("pd_sweep.csv")?)?;
    fs::write(ctx.out.join("pd_sweep_meta.toml"), sweep.meta_toml())?;
    for p in &sweep.points {
        println!(
            "snr {:>6.1} dB  pd {:.3}  [{:.3}, {:.3}]",
            p.snr_db, p.pd, p.wilson_lo, p.wilson_hi
        );
    }
    Ok(())
}

fn eval_mui(ctx: &Ctx) -> Result<()> {
    let mut cfg = ctx.cfg.clone();
    cfg.design.scheme = ctx.scheme;
    let summary = harness::run_mui_eval(&cfg, ctx.seed)?;
    summary.write_csv(ctx.file("mui.csv")?)?;
    summary.write_summary_csv(ctx.file("mui_summary.csv")?)?;
    if let Some(m) = summary.median {
        println!(
            "{}: median per-symbol MUI {:.3e} over {} draws ({} failed)",
            ctx.scheme,
            m.per_symbol_avg,
            summary.rows.len() - summary.failures,
            summary.failures
        );
    }
    Ok(())
}

fn compare_sidelobes(ctx: &Ctx) -> Result<()> {
    let rows = harness::run_sidelobe_compare(&ctx.cfg, ctx.seed)?;
    harness::write_sidelobe_csv(&rows, ctx.file("sidelobes.csv")?)?;
    for r in &rows {
        println!(
            "{:<6} angle {}  ratio {:6.2} dB",
            r.scheme, r.angle_index, r.ratio_db
        );
    }
    Ok(())
}
