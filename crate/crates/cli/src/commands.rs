//! Subcommand implementations with the exit-code policy: 0 for success
//! (warnings included), 2 for validation failures, 3 for runtime
//! divergence or budget aborts.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};

use vessel_core::sim::{self, expand_grid, FeedbackMode, Scenario};
use vessel_core::VesselError;

use crate::plots::emit_figures;
use crate::report::build_report;
use crate::scenario::load_scenario;
use crate::sweep::{write_summary, SweepFile};

/// Environment variable holding the default output directory.
pub const OUT_DIR_ENV: &str = "VESSEL_OUT_DIR";

pub enum CmdError {
    /// Exit code 2.
    Validation(anyhow::Error),
    /// Exit code 3.
    Runtime(anyhow::Error),
}

impl CmdError {
    pub fn code(&self) -> i32 {
        match self {
            CmdError::Validation(_) => 2,
            CmdError::Runtime(_) => 3,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            CmdError::Validation(e) | CmdError::Runtime(e) => e,
        }
    }
}

fn validation(e: impl Into<anyhow::Error>) -> CmdError {
    CmdError::Validation(e.into())
}

/// Classifies an error raised while integrating: divergence and budget
/// aborts are runtime failures, everything else is a validation failure.
fn classify_run_error(e: VesselError) -> CmdError {
    match e {
        VesselError::Divergence { .. } | VesselError::SaturationBudget { .. } => {
            CmdError::Runtime(e.into())
        }
        _ => CmdError::Validation(e.into()),
    }
}

/// Same classification for errors that crossed an `anyhow` boundary
/// (e.g. reference integration inside report building).
fn classify_anyhow(e: anyhow::Error) -> CmdError {
    match e.downcast_ref::<VesselError>() {
        Some(VesselError::Divergence { .. }) | Some(VesselError::SaturationBudget { .. }) => {
            CmdError::Runtime(e)
        }
        _ => CmdError::Validation(e),
    }
}

fn out_base(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

pub fn cmd_validate(
    scenario: &str,
    out: Option<PathBuf>,
    window: Option<f64>,
) -> Result<(), CmdError> {
    let sc = load_scenario(scenario).map_err(validation)?;
    let (report, _) = build_report(&sc, window).map_err(validation)?;
    print!("{}", report.render_text());
    if let Some(path) = out {
        let text = report.to_toml().map_err(validation)?;
        std::fs::write(&path, text)
            .with_context(|| format!("cannot write report to {path:?}"))
            .map_err(validation)?;
        println!("\nreport written to {}", path.display());
    }
    Ok(())
}

pub struct RunArgs {
    pub scenario: String,
    pub out: Option<PathBuf>,
    pub csv: bool,
    pub plots: bool,
    pub mode: Option<String>,
    pub step: Option<f64>,
    pub horizon: Option<f64>,
    pub seed: Option<u64>,
    pub stride: Option<usize>,
    pub f0: Option<f64>,
    pub lambda: Option<f64>,
    pub observer_gain: Option<f64>,
}

fn apply_mode_flags(sc: &mut Scenario, args: &RunArgs) -> Result<()> {
    let Some(mode) = args.mode.as_deref() else {
        return Ok(());
    };
    sc.mode = match mode {
        "state" => FeedbackMode::State,
        "output-diff" => FeedbackMode::OutputDifferentiator {
            gain: args.observer_gain.unwrap_or(50.0),
        },
        "output-harness" => {
            let f0 = args.f0.unwrap_or(1.0);
            let lambda = args.lambda.unwrap_or(0.5);
            if lambda <= 0.0 || lambda.is_nan() {
                bail!("--lambda must be strictly positive, got {lambda}");
            }
            if f0 < 0.0 || f0.is_nan() {
                bail!("--f0 must be non-negative, got {f0}");
            }
            FeedbackMode::OutputHarness {
                f0,
                lambda,
                shape: vessel_core::observer::ErrorShape::Uniform,
            }
        }
        other => bail!("--mode: expected state, output-diff or output-harness, got {other:?}"),
    };
    Ok(())
}

pub fn cmd_run(args: RunArgs) -> Result<(), CmdError> {
    let mut sc = load_scenario(&args.scenario).map_err(validation)?;
    if let Some(step) = args.step {
        sc.step = step;
    }
    if let Some(horizon) = args.horizon {
        sc.horizon = horizon;
    }
    if let Some(seed) = args.seed {
        sc.seed = seed;
    }
    if let Some(stride) = args.stride {
        sc.record_stride = stride;
    }
    apply_mode_flags(&mut sc, &args).map_err(validation)?;

    // Validate before running; warnings are reported but do not block.
    let (report, _) = build_report(&sc, None).map_err(classify_anyhow)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }

    let record = sim::run(&sc).map_err(classify_run_error)?;

    let dir = out_base(args.out).join(&sc.name);
    std::fs::create_dir_all(&dir)
        .with_context(|| format!("cannot create output directory {dir:?}"))
        .map_err(validation)?;

    let write_csv = args.csv || !args.plots;
    if write_csv {
        let path = dir.join("run.csv");
        record
            .write_csv_path(&path)
            .map_err(|e| validation(anyhow!(e)))?;
        println!("csv:     {}", path.display());
    }
    if args.plots {
        for path in emit_figures(&record, &dir).map_err(validation)? {
            println!("figure:  {}", path.display());
        }
    }

    let t = record.terminal_errors();
    println!(
        "terminal errors: |e_xy| = {:.6e}, |e_uv| = {:.6e}, |e_psi| = {:.6e}",
        t.position, t.velocity, t.yaw
    );
    match record.events.saturation_exit {
        Some(s) => println!("yaw saturation exited at s = {s:.3}"),
        None => println!("yaw saturation never exited within the horizon"),
    }
    println!(
        "max |tau1| = {:.6} (ceiling {:.6}), max |tau2| = {:.6} (ceiling {:.6})",
        record.events.max_abs_tau1,
        record.gains.tau1_max,
        record.events.max_abs_tau2,
        record.gains.tau2_max
    );
    Ok(())
}

pub fn cmd_sweep(
    scenario: &str,
    grid_path: &Path,
    out: Option<PathBuf>,
    seed: Option<u64>,
) -> Result<(), CmdError> {
    let mut sc = load_scenario(scenario).map_err(validation)?;
    if let Some(seed) = seed {
        sc.seed = seed;
    }
    let text = std::fs::read_to_string(grid_path)
        .with_context(|| format!("cannot read sweep file {grid_path:?}"))
        .map_err(validation)?;
    let file = SweepFile::parse(&text).map_err(validation)?;
    let grid = file.to_grid().map_err(validation)?;
    let thresholds = file.thresholds();

    let points = expand_grid(&sc, &grid).map_err(|e| validation(anyhow!(e)))?;
    println!("running {} scenarios...", points.len());
    let result = sim::sweep(&points, &thresholds, true).map_err(|e| validation(anyhow!(e)))?;

    let dir = out_base(out).join(format!("{}-sweep", sc.name));
    std::fs::create_dir_all(&dir)
        .with_context(|| format!("cannot create output directory {dir:?}"))
        .map_err(validation)?;

    for (outcome, record) in result.outcomes.iter().zip(&result.records) {
        if let Some(record) = record {
            let path = dir.join(format!("run_{:03}.csv", outcome.id));
            record
                .write_csv_path(&path)
                .map_err(|e| validation(anyhow!(e)))?;
        }
        let detail = if outcome.message.is_empty() {
            format!("terminal_error_norm = {:.6e}", outcome.terminal_error_norm)
        } else {
            outcome.message.clone()
        };
        println!(
            "  run {:3} [{:clen$}] {:9} {detail}",
            outcome.id,
            outcome.label,
            outcome.status.as_str(),
            clen = 24,
        );
    }
    let summary = dir.join("summary.csv");
    write_summary(&summary, &result.outcomes).map_err(validation)?;
    println!("summary: {}", summary.display());
    Ok(())
}
