//! Squeezing diagnostics: 2σ quadrature widths, the √2 criterion, per-period
//! envelopes and the two-mode Duan sum.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::dynamics::{CovarianceState, Trajectory};
use crate::error::{Error, Result};

/// 2σ of the ground state. A quadrature is squeezed strictly below this.
pub const SQUEEZING_THRESHOLD: f64 = SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezingReport {
    pub two_sigma_x: f64,
    pub two_sigma_p: f64,
    pub min_two_sigma: f64,
    pub det: f64,
    pub squeezed: bool,
}

pub fn report(state: &CovarianceState) -> SqueezingReport {
    // a_ii = 2σ², so 2σ = √(2 a_ii).
    let two_sigma_x = (2.0 * state.a11).sqrt();
    let two_sigma_p = (2.0 * state.a22).sqrt();
    let min_two_sigma = two_sigma_x.min(two_sigma_p);
    SqueezingReport {
        two_sigma_x,
        two_sigma_p,
        min_two_sigma,
        det: state.det(),
        squeezed: min_two_sigma < SQUEEZING_THRESHOLD,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodExtrema {
    pub index: usize,
    pub min_x: f64,
    pub max_x: f64,
    pub min_p: f64,
    pub max_p: f64,
    /// False for a trailing partial period.
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub periods: Vec<PeriodExtrema>,
    pub global_min: f64,
    pub global_min_time: f64,
}

/// Groups samples into whole mechanical periods counted from t = 0.
///
/// Samples past the last whole period go into a final record marked
/// incomplete, so every sample is covered by some record.
pub fn envelope(traj: &Trajectory, omega: f64) -> Result<Envelope> {
    let period = std::f64::consts::TAU / omega;
    let t_end = traj.last_state().map_or(0.0, |s| s.t);
    if traj.len() < 2 || t_end < period * (1.0 - 1e-9) {
        return Err(Error::InsufficientData(format!(
            "trajectory spans {t_end:e} s, shorter than one period ({period:e} s)"
        )));
    }
    let whole = (t_end / period + 1e-9).floor() as usize;

    let mut periods: Vec<PeriodExtrema> = Vec::new();
    let mut global_min = f64::INFINITY;
    let mut global_min_time = 0.0;
    for s in &traj.samples {
        let r = report(&s.state);
        if r.min_two_sigma < global_min {
            global_min = r.min_two_sigma;
            global_min_time = s.state.t;
        }
        let idx = ((s.state.t / period + 1e-9).floor() as usize).min(whole);
        // A sample on a period boundary closes the previous period too.
        let on_boundary = idx > 0 && (s.state.t - idx as f64 * period).abs() < 1e-9 * period;
        if on_boundary {
            if let Some(prev) = periods.last_mut().filter(|p| p.index == idx - 1) {
                absorb(prev, &r);
            }
        }
        if idx == whole && on_boundary {
            continue;
        }
        match periods.last_mut() {
            Some(p) if p.index == idx => absorb(p, &r),
            _ => periods.push(PeriodExtrema {
                index: idx,
                min_x: r.two_sigma_x,
                max_x: r.two_sigma_x,
                min_p: r.two_sigma_p,
                max_p: r.two_sigma_p,
                complete: idx < whole,
            }),
        }
    }
    Ok(Envelope {
        periods,
        global_min,
        global_min_time,
    })
}

fn absorb(p: &mut PeriodExtrema, r: &SqueezingReport) {
    p.min_x = p.min_x.min(r.two_sigma_x);
    p.max_x = p.max_x.max(r.two_sigma_x);
    p.min_p = p.min_p.min(r.two_sigma_p);
    p.max_p = p.max_p.max(r.two_sigma_p);
}

/// Minimum of `min_two_sigma` over the last mechanical period of the run.
///
/// This is how "the value at the end of the run" is read off an oscillating
/// trace.
pub fn final_period_min(traj: &Trajectory) -> Result<f64> {
    let period = traj.model.period();
    let t_end = traj
        .last_state()
        .ok_or_else(|| Error::InsufficientData("empty trajectory".into()))?
        .t;
    let from = t_end - period * (1.0 + 1e-9);
    Ok(traj
        .samples
        .iter()
        .filter(|s| s.state.t >= from)
        .map(|s| report(&s.state).min_two_sigma)
        .fold(f64::INFINITY, f64::min))
}

/// First sample time at which either quadrature is squeezed.
pub fn first_squeezing_time(traj: &Trajectory) -> Option<f64> {
    traj.samples
        .iter()
        .find(|s| report(&s.state).squeezed)
        .map(|s| s.state.t)
}

/// Compact per-run figures written to summaries and consumed by tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub final_period_min_two_sigma: f64,
    pub squeezed: bool,
    pub first_squeezing_time_s: Option<f64>,
    pub global_min_two_sigma: f64,
    pub global_min_time_s: f64,
    pub det_end: f64,
    pub a11_end: f64,
    pub kappa_sq_avg: f64,
    pub kappa_sq_peak: f64,
    pub duty_cycle: f64,
}

pub fn summarize(traj: &Trajectory) -> Result<RunSummary> {
    let last = traj
        .last_state()
        .ok_or_else(|| Error::InsufficientData("empty trajectory".into()))?;
    let final_min = final_period_min(traj)?;
    let (global_min, global_min_time) = traj
        .samples
        .iter()
        .map(|s| (report(&s.state).min_two_sigma, s.state.t))
        .fold(
            (f64::INFINITY, 0.0),
            |acc, x| if x.0 < acc.0 { x } else { acc },
        );
    Ok(RunSummary {
        final_period_min_two_sigma: final_min,
        squeezed: final_min < SQUEEZING_THRESHOLD,
        first_squeezing_time_s: first_squeezing_time(traj),
        global_min_two_sigma: global_min,
        global_min_time_s: global_min_time,
        det_end: last.det(),
        a11_end: last.a11,
        kappa_sq_avg: traj.model.derived.kappa_sq_avg,
        kappa_sq_peak: traj.model.schedule.kappa_sq_peak,
        duty_cycle: traj.model.schedule.duty_cycle(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DuanWitness {
    pub sum: f64,
    pub entangled: bool,
}

/// `Var(X₊) + Var(P₋)`; entanglement is certified strictly below 1.
pub fn duan_sum(var_x_plus: f64, var_p_minus: f64) -> DuanWitness {
    debug_assert!(var_x_plus >= 0.0 && var_p_minus >= 0.0);
    let sum = var_x_plus + var_p_minus;
    DuanWitness {
        sum,
        entangled: sum < 1.0,
    }
}
