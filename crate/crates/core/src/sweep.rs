//! Families of runs over one parameter axis, squeezing-onset search and a
//! simple pulse-shape search.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{fmt_num, RunConfig};
use crate::error::{Error, Result};
use crate::metrics::{summarize, SQUEEZING_THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Bath temperature, K.
    Temperature,
    /// Bath coupling, rad/s.
    Gamma,
    /// Orbit-averaged κ², 1/s.
    KappaSqAvg,
    Threshold,
    Eta,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Temperature => "temperature",
            SweepAxis::Gamma => "gamma",
            SweepAxis::KappaSqAvg => "kappa_sq_avg",
            SweepAxis::Threshold => "threshold",
            SweepAxis::Eta => "eta",
        }
    }

    /// `base` with this axis set to `value`, validated.
    pub fn apply(&self, base: &RunConfig, value: f64) -> Result<RunConfig> {
        let mut cfg = base.clone();
        match self {
            SweepAxis::Temperature => cfg.temperature_mk = value * 1e3,
            SweepAxis::Gamma => cfg.gamma = value,
            SweepAxis::KappaSqAvg => cfg.kappa_sq_avg = Some(value),
            SweepAxis::Threshold => cfg.threshold = value,
            SweepAxis::Eta => cfg.eta = value,
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "temperature" => SweepAxis::Temperature,
            "gamma" => SweepAxis::Gamma,
            "kappa_sq_avg" => SweepAxis::KappaSqAvg,
            "threshold" => SweepAxis::Threshold,
            "eta" => SweepAxis::Eta,
            _ => {
                return Err(Error::invalid(
                    "axis",
                    format!(
                        "unknown axis `{s}` (temperature, gamma, kappa_sq_avg, threshold, eta)"
                    ),
                ))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: RunConfig,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RowMetrics {
    pub final_period_min_two_sigma: f64,
    pub first_squeezing_time_s: Option<f64>,
    pub global_min_two_sigma: f64,
    pub det_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub value: f64,
    /// The resolved configuration of this row, re-runnable on its own.
    pub config: RunConfig,
    pub outcome: std::result::Result<RowMetrics, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
}

pub const SWEEP_CSV_HEADER: &str = "index,axis,value,final_period_min_two_sigma,\
first_squeezing_time_s,global_min_two_sigma,det_end,squeezed,error";

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(SWEEP_CSV_HEADER);
        s.push('\n');
        for row in &self.rows {
            let _ = write!(s, "{},{},{:.16e},", row.index, self.axis, row.value);
            match &row.outcome {
                Ok(m) => {
                    let first = m
                        .first_squeezing_time_s
                        .map_or_else(String::new, |t| format!("{t:.16e}"));
                    let _ = writeln!(
                        s,
                        "{:.16e},{},{:.16e},{:.16e},{},",
                        m.final_period_min_two_sigma,
                        first,
                        m.global_min_two_sigma,
                        m.det_end,
                        m.final_period_min_two_sigma < SQUEEZING_THRESHOLD
                    );
                }
                Err(e) => {
                    let _ = writeln!(s, ",,,,,\"{}\"", e.replace('"', "'"));
                }
            }
        }
        s
    }

    /// Every row's resolved configuration, one section per row.
    pub fn provenance(&self) -> String {
        let mut s = String::new();
        for row in &self.rows {
            let _ = writeln!(
                s,
                "# row {} ({} = {})",
                row.index,
                self.axis,
                fmt_num(row.value)
            );
            s.push_str(&row.config.to_text());
            s.push('\n');
        }
        s
    }
}

fn row_metrics(cfg: &RunConfig) -> Result<RowMetrics> {
    let traj = cfg.simulate()?;
    let s = summarize(&traj)?;
    Ok(RowMetrics {
        final_period_min_two_sigma: s.final_period_min_two_sigma,
        first_squeezing_time_s: s.first_squeezing_time_s,
        global_min_two_sigma: s.global_min_two_sigma,
        det_end: s.det_end,
    })
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::invalid("workers", e.to_string()))
}

/// One integration per value. Row order follows `spec.values` regardless of
/// `workers`; a failing row records its error and leaves the others intact.
pub fn run_sweep(spec: &SweepSpec, workers: usize) -> Result<SweepResult> {
    if spec.values.is_empty() {
        return Err(Error::invalid("values", "sweep needs at least one value"));
    }
    let configs = spec
        .values
        .iter()
        .map(|v| {
            if !v.is_finite() {
                return Err(Error::invalid("values", format!("{v} is not finite")));
            }
            spec.axis.apply(&spec.base, *v)
        })
        .collect::<Result<Vec<_>>>()?;

    let rows = pool(workers)?.install(|| {
        configs
            .into_par_iter()
            .enumerate()
            .map(|(index, config)| SweepRow {
                index,
                value: spec.values[index],
                outcome: row_metrics(&config).map_err(|e| e.to_string()),
                config,
            })
            .collect::<Vec<_>>()
    });
    Ok(SweepResult {
        axis: spec.axis,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdOptions {
    /// Stop once the bracket is this small relative to its magnitude.
    pub rel_tol: f64,
    /// Relative offset of the two certificate runs around the result.
    pub certificate_margin: f64,
    pub max_iter: usize,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        ThresholdOptions {
            rel_tol: 1e-3,
            certificate_margin: 0.1,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub squeezed_side: f64,
    pub squeezed_side_two_sigma: f64,
    pub other_side: f64,
    pub other_side_two_sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub axis: SweepAxis,
    /// Midpoint of the final bracket.
    pub value: f64,
    /// Final bracket endpoint on the squeezed side.
    pub squeezed_end: f64,
    pub unsqueezed_end: f64,
    pub evaluations: usize,
    pub certificate: Certificate,
}

/// Bisects `axis` between `lo` and `hi` for the value where the final-period
/// minimum 2σ crosses √2. Exactly one endpoint must be squeezed.
pub fn find_threshold(
    base: &RunConfig,
    axis: SweepAxis,
    lo: f64,
    hi: f64,
    opts: &ThresholdOptions,
) -> Result<ThresholdResult> {
    if !(lo.is_finite() && hi.is_finite()) || lo == hi {
        return Err(Error::Bracket(format!("degenerate bracket [{lo}, {hi}]")));
    }
    let eval = |v: f64| -> Result<f64> {
        let cfg = axis.apply(base, v)?;
        Ok(row_metrics(&cfg)?.final_period_min_two_sigma)
    };
    let squeezed = |f: f64| f < SQUEEZING_THRESHOLD;

    let mut evaluations = 2;
    let (mut a, mut fa) = (lo, eval(lo)?);
    let (mut b, mut fb) = (hi, eval(hi)?);
    if squeezed(fa) == squeezed(fb) {
        return Err(Error::Bracket(format!(
            "{axis} = {lo} gives 2σ = {fa:.4}, {axis} = {hi} gives 2σ = {fb:.4}; both on the same side of √2"
        )));
    }
    // Keep `a` on the squeezed side.
    if !squeezed(fa) {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }

    for _ in 0..opts.max_iter {
        if (b - a).abs() <= opts.rel_tol * a.abs().max(b.abs()) {
            break;
        }
        let mid = 0.5 * (a + b);
        let fm = eval(mid)?;
        evaluations += 1;
        let (low, high) = (fa.min(fb), fa.max(fb));
        let slack = 1e-9 * high.abs();
        if fm < low - slack || fm > high + slack {
            return Err(Error::NonMonotone(format!(
                "2σ = {fm:.6} at {axis} = {mid:e} lies outside the bracket values [{low:.6}, {high:.6}]"
            )));
        }
        if squeezed(fm) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
            fb = fm;
        }
    }

    let value = 0.5 * (a + b);
    let dir = (a - b).signum();
    let step = opts.certificate_margin * value.abs().max((b - a).abs());
    let squeezed_side = value + dir * step;
    let other_side = value - dir * step;
    let fs = eval(squeezed_side)?;
    let fo = eval(other_side)?;
    evaluations += 2;
    if !squeezed(fs) || squeezed(fo) {
        return Err(Error::NonMonotone(format!(
            "certificate failed: 2σ = {fs:.6} at {squeezed_side:e}, {fo:.6} at {other_side:e}"
        )));
    }
    Ok(ThresholdResult {
        axis,
        value,
        squeezed_end: a,
        unsqueezed_end: b,
        evaluations,
        certificate: Certificate {
            squeezed_side,
            squeezed_side_two_sigma: fs,
            other_side,
            other_side_two_sigma: fo,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PulseSearchSpace {
    pub thresholds: Vec<f64>,
    /// Gating phases, rad.
    pub phases: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulsePoint {
    pub threshold: f64,
    pub phase: f64,
    /// Final-period minimum 2σ.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResult {
    pub grid: Vec<PulsePoint>,
    pub grid_best: PulsePoint,
    pub best: PulsePoint,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeOptions {
    pub refine: bool,
    /// Golden-section stops when the bracket is this fraction of its start.
    pub rel_tol: f64,
    pub workers: usize,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions {
            refine: true,
            rel_tol: 1e-3,
            workers: 1,
        }
    }
}

fn pulse_objective(base: &RunConfig, threshold: f64, phase: f64) -> Result<f64> {
    let mut cfg = base.clone();
    cfg.threshold = threshold;
    cfg.phase = phase;
    cfg.validate()?;
    Ok(row_metrics(&cfg)?.final_period_min_two_sigma)
}

/// Grid search over (threshold, phase), then golden-section refinement of
/// each coordinate around the best grid point. The result is never worse
/// than the best grid point.
pub fn optimize_pulse(
    base: &RunConfig,
    space: &PulseSearchSpace,
    opts: &OptimizeOptions,
) -> Result<OptimizeResult> {
    if space.thresholds.is_empty() || space.phases.is_empty() {
        return Err(Error::invalid(
            "search space",
            "needs at least one threshold and one phase",
        ));
    }
    let mut thresholds = space.thresholds.clone();
    let mut phases = space.phases.clone();
    for v in &thresholds {
        if !(v.is_finite() && *v > 0.0 && *v < 1.0) {
            return Err(Error::invalid(
                "pulse.threshold",
                format!("{v} is not in (0, 1)"),
            ));
        }
    }
    if phases.iter().any(|p| !p.is_finite()) {
        return Err(Error::invalid("pulse.phase", "phases must be finite"));
    }
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    phases.sort_by(f64::total_cmp);
    phases.dedup();

    let points: Vec<(f64, f64)> = thresholds
        .iter()
        .flat_map(|t| phases.iter().map(move |p| (*t, *p)))
        .collect();
    let grid = pool(opts.workers)?.install(|| {
        points
            .par_iter()
            .map(|&(threshold, phase)| {
                pulse_objective(base, threshold, phase).map(|value| PulsePoint {
                    threshold,
                    phase,
                    value,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut evaluations = grid.len();
    let grid_best = *grid
        .iter()
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .expect("grid is non-empty");
    let mut best = grid_best;

    if opts.refine {
        if thresholds.len() > 1 {
            let (lo, hi) = neighbours(&thresholds, best.threshold);
            let phase = best.phase;
            let (t, v, n) =
                golden_section(lo, hi, opts.rel_tol, |t| pulse_objective(base, t, phase))?;
            evaluations += n;
            if v < best.value {
                best = PulsePoint {
                    threshold: t,
                    phase,
                    value: v,
                };
            }
        }
        if phases.len() > 1 {
            let (lo, hi) = neighbours(&phases, best.phase);
            let threshold = best.threshold;
            let (p, v, n) = golden_section(lo, hi, opts.rel_tol, |p| {
                pulse_objective(base, threshold, p)
            })?;
            evaluations += n;
            if v < best.value {
                best = PulsePoint {
                    threshold,
                    phase: p,
                    value: v,
                };
            }
        }
    }

    Ok(OptimizeResult {
        grid,
        grid_best,
        best,
        evaluations,
    })
}

/// Grid values on either side of `x` in a sorted list.
fn neighbours(sorted: &[f64], x: f64) -> (f64, f64) {
    let i = sorted.iter().position(|v| *v == x).unwrap_or(0);
    let lo = sorted[i.saturating_sub(1)];
    let hi = sorted[(i + 1).min(sorted.len() - 1)];
    (lo, hi)
}

/// Minimizes `f` on `[lo, hi]`; returns the argmin, its value and the call count.
pub(crate) fn golden_section(
    mut lo: f64,
    mut hi: f64,
    rel_tol: f64,
    mut f: impl FnMut(f64) -> Result<f64>,
) -> Result<(f64, f64, usize)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let width0 = (hi - lo).abs();
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let mut calls = 2;
    while (hi - lo).abs() > rel_tol * width0 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2)?;
        }
        calls += 1;
    }
    Ok(if f1 <= f2 {
        (x1, f1, calls)
    } else {
        (x2, f2, calls)
    })
}
