//! Single-run orchestration shared by the CLI and the Python bindings.

use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::dynamics::Trajectory;
use crate::error::Result;
use crate::metrics::{summarize, RunSummary};
use crate::output::{write_file, write_timeseries, SummaryDocument};
use crate::plot::emit_plot;

pub const TIMESERIES_FILE: &str = "timeseries.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CONFIG_FILE: &str = "config.resolved.txt";
pub const PLOT_FILE: &str = "plot.svg";

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trajectory: Trajectory,
    pub summary: RunSummary,
    pub files: Vec<PathBuf>,
}

/// Runs `cfg` and, when `out_dir` is given, writes the resolved config, the
/// time series, the summary and (if enabled) the plot there.
pub fn run(cfg: &RunConfig, out_dir: Option<&Path>) -> Result<RunOutput> {
    let echo = cfg.echo()?;
    let trajectory = cfg.simulate()?;
    let summary = summarize(&trajectory)?;
    let mut files = Vec::new();
    if let Some(dir) = out_dir {
        let path = dir.join(CONFIG_FILE);
        write_file(&path, echo.as_bytes())?;
        files.push(path);

        let path = dir.join(TIMESERIES_FILE);
        write_timeseries(&trajectory, &path)?;
        files.push(path);

        let doc = SummaryDocument::new(cfg.preset.clone(), summary, &trajectory);
        let path = dir.join(SUMMARY_FILE);
        write_file(&path, doc.to_json().as_bytes())?;
        files.push(path);

        if cfg.plot {
            let path = dir.join(PLOT_FILE);
            let title = cfg.preset.as_deref().unwrap_or("simulation");
            emit_plot(&trajectory, &path, title)?;
            files.push(path);
        }
    }
    Ok(RunOutput {
        trajectory,
        summary,
        files,
    })
}

/// Runs a named figure preset.
pub fn reproduce(preset: &str, out_dir: Option<&Path>) -> Result<RunOutput> {
    let cfg = RunConfig::preset(preset)?;
    run(&cfg, out_dir)
}
