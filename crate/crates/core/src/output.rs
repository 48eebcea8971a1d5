//! CSV time series, JSON run summaries and their readers.
//!
//! Floats are written in `{:.16e}` form: 17 significant digits, which parse
//! back to the identical `f64`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{CovarianceState, Trajectory};
use crate::error::{Error, Result};
use crate::metrics::{report, RunSummary};
use crate::twomode::TwoModeTrajectory;

pub const TIMESERIES_HEADER: &str = "t_s,a11,a12,a21,a22,two_sigma_x,two_sigma_p,det,kappa_sq";
pub const TWOMODE_HEADER: &str =
    "t_s,var_x_plus,var_p_plus,var_x_minus,var_p_minus,duan_sum,entangled";

pub fn timeseries_csv(traj: &Trajectory) -> String {
    let mut out = String::with_capacity(traj.len() * 220 + 64);
    out.push_str(TIMESERIES_HEADER);
    out.push('\n');
    for s in &traj.samples {
        let st = &s.state;
        let r = report(st);
        let row = [
            st.t,
            st.a11,
            st.a12,
            st.a21,
            st.a22,
            r.two_sigma_x,
            r.two_sigma_p,
            r.det,
            s.kappa_sq,
        ];
        push_row(&mut out, &row);
    }
    out
}

fn push_row(out: &mut String, values: &[f64]) {
    use std::fmt::Write as _;
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{v:.16e}");
    }
    out.push('\n');
}

pub fn write_timeseries(traj: &Trajectory, path: &Path) -> Result<()> {
    write_file(path, timeseries_csv(traj).as_bytes())
}

/// One parsed row of a time-series CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeseriesRow {
    pub state: CovarianceState,
    pub two_sigma_x: f64,
    pub two_sigma_p: f64,
    pub det: f64,
    pub kappa_sq: f64,
}

pub fn parse_timeseries(text: &str) -> Result<Vec<TimeseriesRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == TIMESERIES_HEADER => {}
        other => {
            return Err(Error::Csv {
                line: 1,
                message: format!("unexpected header {other:?}"),
            })
        }
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let v = line
                .split(',')
                .map(str::parse::<f64>)
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Csv {
                    line: i + 2,
                    message: e.to_string(),
                })?;
            if v.len() != 9 {
                return Err(Error::Csv {
                    line: i + 2,
                    message: format!("expected 9 columns, found {}", v.len()),
                });
            }
            Ok(TimeseriesRow {
                state: CovarianceState::new(v[0], v[1], v[2], v[3], v[4]),
                two_sigma_x: v[5],
                two_sigma_p: v[6],
                det: v[7],
                kappa_sq: v[8],
            })
        })
        .collect()
}

pub fn twomode_csv(traj: &TwoModeTrajectory) -> String {
    use std::fmt::Write as _;
    let mut out = String::with_capacity(traj.len() * 160 + 64);
    out.push_str(TWOMODE_HEADER);
    out.push('\n');
    for i in 0..traj.len() {
        let _ = writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            traj.times[i],
            traj.var_x_plus[i],
            traj.var_p_plus[i],
            traj.var_x_minus[i],
            traj.var_p_minus[i],
            traj.duan_sum[i],
            traj.entangled[i]
        );
    }
    out
}

pub fn write_twomode(traj: &TwoModeTrajectory, path: &Path) -> Result<()> {
    write_file(path, twomode_csv(traj).as_bytes())
}

/// Machine-readable per-run summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryDocument {
    pub preset: Option<String>,
    #[serde(flatten)]
    pub summary: RunSummary,
    pub uncertainty_violation_s: Option<f64>,
}

impl SummaryDocument {
    pub fn new(preset: Option<String>, summary: RunSummary, traj: &Trajectory) -> Self {
        SummaryDocument {
            preset,
            summary,
            uncertainty_violation_s: traj.uncertainty_violation,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    write_file(path, s.as_bytes())
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(bytes).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}
