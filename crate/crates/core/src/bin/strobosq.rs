use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use strobosq::output::{write_file, write_json, write_twomode};
use strobosq::plot::render_duan_svg;
use strobosq::runner;
use strobosq::sweep::{OptimizeResult, ThresholdResult};
use strobosq::{
    find_threshold, optimize_pulse, run_sweep, simulate_entanglement, Error, OptimizeOptions,
    PulseSearchSpace, Result, RunConfig, SweepAxis, SweepSpec, ThresholdOptions, TwoModeConfig,
};

// Output goes to a closed pipe (e.g. `| head`) without panicking.
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

macro_rules! say_raw {
    ($s:expr) => {{
        let _ = std::io::stdout().write_all(AsRef::<str>::as_ref(&$s).as_bytes());
    }};
}

/// Conditional covariance dynamics of a stroboscopically probed resonator.
#[derive(Debug, Parser)]
#[command(name = "strobosq", version)]
struct Cli {
    /// Config document (flat `key = value` lines).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Start from a named preset; keys in --config are applied on top.
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,
    /// Output directory; defaults to `output.dir` of the resolved config.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for sweeps and grid searches.
    #[arg(long, global = true, value_name = "N", default_value_t = 1)]
    workers: usize,
    /// Skip SVG output.
    #[arg(long, global = true)]
    no_plot: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one simulation from the resolved config.
    Simulate,
    /// Run a figure preset.
    Reproduce {
        /// Preset name; may also be given with --preset.
        name: Option<String>,
    },
    /// Run one simulation per value along an axis.
    Sweep {
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated axis values in SI units.
        #[arg(
            long,
            value_delimiter = ',',
            required = true,
            allow_negative_numbers = true
        )]
        values: Vec<f64>,
    },
    /// Bisect an axis for the onset of squeezing.
    Threshold {
        #[arg(long)]
        axis: SweepAxis,
        #[arg(long, allow_negative_numbers = true)]
        lo: f64,
        #[arg(long, allow_negative_numbers = true)]
        hi: f64,
        /// Relative bracket width at which bisection stops.
        #[arg(long, default_value_t = 1e-3)]
        rel_tol: f64,
    },
    /// Search gating threshold and phase for the smallest final 2σ.
    Optimize {
        #[arg(long, value_delimiter = ',', required = true)]
        thresholds: Vec<f64>,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "0",
            allow_negative_numbers = true
        )]
        phases: Vec<f64>,
        /// Report the grid optimum without golden-section refinement.
        #[arg(long)]
        no_refine: bool,
    },
    /// Evolve the two collective modes and evaluate the Duan sum.
    Entangle {
        /// Probe P₋ with the same gating phase as X₊ instead of a quarter period later.
        #[arg(long)]
        same_phase: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    let preset = match &cli.command {
        Command::Reproduce { name: Some(n) } => Some(n.as_str()),
        Command::Reproduce { name: None } if cli.preset.is_none() => {
            return Err(Error::Precondition("reproduce needs a preset name".into()))
        }
        _ => cli.preset.as_deref(),
    };
    let cfg = load_config(preset, cli.config.as_deref(), cli.no_plot)?;
    let out = cli.out.clone().unwrap_or_else(|| cfg.output_dir.clone());

    match &cli.command {
        Command::Simulate | Command::Reproduce { .. } => simulate(&cfg, &out),
        Command::Sweep { axis, values } => sweep(&cfg, *axis, values, cli.workers, &out),
        Command::Threshold {
            axis,
            lo,
            hi,
            rel_tol,
        } => {
            let opts = ThresholdOptions {
                rel_tol: *rel_tol,
                ..ThresholdOptions::default()
            };
            say_raw!(cfg.echo()?);
            let res = find_threshold(&cfg, *axis, *lo, *hi, &opts)?;
            report_json::<ThresholdResult>(&res, &out.join("threshold.json"))
        }
        Command::Optimize {
            thresholds,
            phases,
            no_refine,
        } => {
            let space = PulseSearchSpace {
                thresholds: thresholds.clone(),
                phases: phases.clone(),
            };
            let opts = OptimizeOptions {
                refine: !no_refine,
                workers: cli.workers,
                ..OptimizeOptions::default()
            };
            say_raw!(cfg.echo()?);
            let res = optimize_pulse(&cfg, &space, &opts)?;
            report_json::<OptimizeResult>(&res, &out.join("optimize.json"))
        }
        Command::Entangle { same_phase } => entangle(&cfg, *same_phase, &out),
    }
}

fn load_config(preset: Option<&str>, path: Option<&Path>, no_plot: bool) -> Result<RunConfig> {
    let text = match path {
        Some(p) => fs::read_to_string(p).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        })?,
        None => String::new(),
    };
    let mut cfg = match preset {
        Some(name) => {
            let mut cfg = RunConfig::preset(name)?;
            cfg.apply_text(&text)?;
            cfg
        }
        None => RunConfig::parse(&text)?,
    };
    if no_plot {
        cfg.plot = false;
    }
    Ok(cfg)
}

fn simulate(cfg: &RunConfig, out: &Path) -> Result<()> {
    say_raw!(cfg.echo()?);
    let res = runner::run(cfg, Some(out))?;
    let s = &res.summary;
    say!(
        "final-period min 2σ = {:.6} ({}), global min 2σ = {:.6} at {:.3e} s",
        s.final_period_min_two_sigma,
        if s.squeezed {
            "squeezed"
        } else {
            "not squeezed"
        },
        s.global_min_two_sigma,
        s.global_min_time_s
    );
    if let Some(t) = s.first_squeezing_time_s {
        say!("first squeezing at {t:.6e} s");
    }
    for f in &res.files {
        say!("wrote {}", f.display());
    }
    Ok(())
}

fn sweep(
    cfg: &RunConfig,
    axis: SweepAxis,
    values: &[f64],
    workers: usize,
    out: &Path,
) -> Result<()> {
    say_raw!(cfg.echo()?);
    let spec = SweepSpec {
        base: cfg.clone(),
        axis,
        values: values.to_vec(),
    };
    let res = run_sweep(&spec, workers)?;
    for row in &res.rows {
        if let Err(e) = &row.outcome {
            log::warn!("row {} ({axis} = {}): {e}", row.index, row.value);
        }
    }
    let csv = res.to_csv();
    say_raw!(csv);
    let path = out.join("sweep.csv");
    write_file(&path, csv.as_bytes())?;
    say!("wrote {}", path.display());
    let path = out.join("sweep.provenance.txt");
    write_file(&path, res.provenance().as_bytes())?;
    say!("wrote {}", path.display());
    Ok(())
}

fn report_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    say!(
        "{}",
        serde_json::to_string_pretty(value).expect("result serializes")
    );
    write_json(value, path)?;
    say!("wrote {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct EntangleSummary {
    same_phase: bool,
    final_duan_sum: f64,
    min_duan_sum: f64,
    entangled_at_end: bool,
    first_entangled_time_s: Option<f64>,
}

fn entangle(cfg: &RunConfig, same_phase: bool, out: &Path) -> Result<()> {
    say_raw!(cfg.echo()?);
    let run = cfg.resolve()?;
    let m = run.model;
    let two = if same_phase {
        TwoModeConfig {
            shared: m.physical,
            derived: m.derived,
            schedule_plus: m.schedule,
            schedule_minus: m.schedule,
        }
    } else {
        TwoModeConfig::interleaved(m.physical, m.derived, m.schedule)
    };
    let traj = simulate_entanglement(&two, &run.control)?;
    let last = traj.len() - 1;
    let summary = EntangleSummary {
        same_phase,
        final_duan_sum: traj.duan_sum[last],
        min_duan_sum: traj.duan_sum.iter().copied().fold(f64::INFINITY, f64::min),
        entangled_at_end: traj.entangled[last],
        first_entangled_time_s: traj.first_entangled_time(),
    };

    let path = out.join("twomode.csv");
    write_twomode(&traj, &path)?;
    say!("wrote {}", path.display());
    if cfg.plot {
        let title = cfg.preset.as_deref().unwrap_or("two-mode");
        let svg = render_duan_svg(&traj.times, &traj.duan_sum, title)?;
        let path = out.join("duan.svg");
        write_file(&path, svg.as_bytes())?;
        say!("wrote {}", path.display());
    }
    report_json(&summary, &out.join("twomode.summary.json"))
}
