//! Second-moment dynamics of the probed resonator.
//!
//! The state is the matrix of doubled (co)variances of the dimensionless
//! quadratures, `a11 = 2 Var(X)`, `a12 = a21 = 2 Cov(X, P)`, `a22 = 2 Var(P)`.
//! The two off-diagonal entries are evolved separately; their equations are
//! identical, so a symmetric start stays exactly symmetric.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{DerivedParams, PhysicalParams};
use crate::schedule::PulseSchedule;

/// Diagonal entries above this are treated as a blow-up.
pub const DIVERGENCE_LIMIT: f64 = 1e12;
/// Slack below the Heisenberg bound `det >= 1` before a warning is raised.
pub const UNCERTAINTY_SLACK: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceState {
    pub t: f64,
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl CovarianceState {
    pub fn new(t: f64, a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        CovarianceState {
            t,
            a11,
            a12,
            a21,
            a22,
        }
    }

    /// Thermal equilibrium with the bath at t = 0.
    pub fn thermal(cap_n: f64) -> Self {
        Self::new(0.0, cap_n, 0.0, 0.0, cap_n)
    }

    /// Uncertainty product `a11 a22 − a12 a21`; equals 1 for a pure state.
    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.t, self.a11, self.a12, self.a21, self.a22];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(
                "initial",
                "covariance entries must be finite",
            ));
        }
        if !(self.a11 > 0.0 && self.a22 > 0.0) {
            return Err(Error::invalid("initial", "a11 and a22 must be > 0"));
        }
        Ok(())
    }

    fn components(&self) -> [f64; 4] {
        [self.a11, self.a12, self.a21, self.a22]
    }

    fn from_components(t: f64, a: [f64; 4]) -> Self {
        Self::new(t, a[0], a[1], a[2], a[3])
    }

    fn symmetric_offdiag(&self) -> bool {
        (self.a12 - self.a21).abs() <= 1e-12 * self.a12.abs().max(self.a21.abs()).max(1.0)
    }
}

/// Coefficients of the covariance equations that do not depend on time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeCoefficients {
    pub omega: f64,
    pub gamma: f64,
    pub eta: f64,
    pub cap_n: f64,
}

/// Time derivatives of `(a11, a12, a21, a22)`.
pub fn rhs(
    state: &CovarianceState,
    kappa_sq: f64,
    omega: f64,
    gamma: f64,
    eta: f64,
    cap_n: f64,
) -> [f64; 4] {
    derivative(
        state.components(),
        kappa_sq,
        &ModeCoefficients {
            omega,
            gamma,
            eta,
            cap_n,
        },
    )
}

#[inline]
fn derivative(a: [f64; 4], kappa_sq: f64, c: &ModeCoefficients) -> [f64; 4] {
    let [a11, a12, a21, a22] = a;
    let meas = c.eta * kappa_sq;
    let rot = c.omega * (a21 + a12);
    let diff = c.omega * (a11 - a22);
    [
        -meas * a11 * a11 + rot - c.gamma * (a11 - c.cap_n),
        -meas * a11 * a12 - diff - c.gamma * a12,
        -meas * a11 * a21 - diff - c.gamma * a21,
        kappa_sq - meas * a12 * a21 - rot - c.gamma * (a22 - c.cap_n),
    ]
}

#[inline]
fn rk4_step(y: [f64; 4], h: f64, kappa_sq: f64, c: &ModeCoefficients) -> [f64; 4] {
    let shift = |base: [f64; 4], k: [f64; 4], s: f64| {
        [
            base[0] + s * k[0],
            base[1] + s * k[1],
            base[2] + s * k[2],
            base[3] + s * k[3],
        ]
    };
    let k1 = derivative(y, kappa_sq, c);
    let k2 = derivative(shift(y, k1, 0.5 * h), kappa_sq, c);
    let k3 = derivative(shift(y, k2, 0.5 * h), kappa_sq, c);
    let k4 = derivative(shift(y, k3, h), kappa_sq, c);
    let mut out = [0.0; 4];
    for i in 0..4 {
        out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Everything a single-mode run depends on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub physical: PhysicalParams,
    pub derived: DerivedParams,
    pub schedule: PulseSchedule,
}

impl Model {
    pub fn coefficients(&self) -> ModeCoefficients {
        ModeCoefficients {
            omega: self.physical.omega,
            gamma: self.physical.gamma,
            eta: self.physical.eta,
            cap_n: self.derived.cap_n,
        }
    }

    pub fn thermal_state(&self) -> CovarianceState {
        CovarianceState::thermal(self.derived.cap_n)
    }

    pub fn period(&self) -> f64 {
        self.physical.period()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    /// Total simulated time, s.
    pub duration: f64,
    /// Output sampling interval, s.
    pub grid_dt: f64,
    /// Base RK4 steps per mechanical period.
    pub steps_per_period: u32,
}

impl StepControl {
    pub const MIN_STEPS_PER_PERIOD: u32 = 100;

    pub fn validate(&self) -> Result<()> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::invalid("run.duration", "must be finite and > 0"));
        }
        if !(self.grid_dt.is_finite() && self.grid_dt > 0.0) {
            return Err(Error::invalid("run.grid_dt", "must be finite and > 0"));
        }
        if self.steps_per_period < Self::MIN_STEPS_PER_PERIOD {
            return Err(Error::invalid(
                "run.steps_per_period",
                format!("must be at least {}", Self::MIN_STEPS_PER_PERIOD),
            ));
        }
        Ok(())
    }

    /// Number of grid intervals; the last grid point is pinned to `duration`.
    pub fn grid_len(&self) -> usize {
        ((self.duration / self.grid_dt) - 1e-9).ceil().max(1.0) as usize
    }

    pub fn grid_time(&self, k: usize) -> f64 {
        (k as f64 * self.grid_dt).min(self.duration)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub state: CovarianceState,
    /// κ² in force at the sample time.
    pub kappa_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub grid_dt: f64,
    pub model: Model,
    /// First sample time where `det < 1 − UNCERTAINTY_SLACK`, if any.
    pub uncertainty_violation: Option<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.state.t)
    }

    pub fn last_state(&self) -> Option<&CovarianceState> {
        self.samples.last().map(|s| &s.state)
    }
}

/// Fixed-step RK4 from `initial` (placed at t = 0) over `control.duration`.
///
/// Steps never straddle a pulse edge: each interval between consecutive edges
/// or grid points is covered by base steps, the last one shortened to land on
/// the boundary. κ² is constant on every such interval.
pub fn integrate(
    initial: &CovarianceState,
    model: &Model,
    control: &StepControl,
) -> Result<Trajectory> {
    model.physical.validate()?;
    model.schedule.validate()?;
    control.validate()?;
    initial.validate()?;

    let coeffs = model.coefficients();
    let omega = model.physical.omega;
    let schedule = &model.schedule;
    let h = model.period() / control.steps_per_period as f64;
    let n = control.grid_len();

    let mut y = initial.components();
    let mut samples = Vec::with_capacity(n + 1);
    samples.push(Sample {
        state: CovarianceState::from_components(0.0, y),
        kappa_sq: schedule.kappa_sq_at(omega, 0.0),
    });
    let mut violation = None;
    check_uncertainty(&samples[0].state, &mut violation);

    let mut cuts = Vec::new();
    let mut t_prev = 0.0;
    for k in 1..=n {
        let t_next = control.grid_time(k);
        cuts.clear();
        cuts.push(t_prev);
        cuts.extend(schedule.pulse_edges(omega, t_prev, t_next));
        cuts.push(t_next);

        for seg in cuts.windows(2) {
            let (s0, s1) = (seg[0], seg[1]);
            let kappa_sq = schedule.kappa_sq_at(omega, 0.5 * (s0 + s1));
            let m = ((s1 - s0) / h - 1e-9).ceil().max(1.0) as usize;
            for i in 0..m {
                let ta = s0 + i as f64 * h;
                let tb = if i + 1 == m {
                    s1
                } else {
                    s0 + (i + 1) as f64 * h
                };
                y = rk4_step(y, tb - ta, kappa_sq, &coeffs);
                check_divergence(tb, &y)?;
            }
        }

        let state = CovarianceState::from_components(t_next, y);
        check_uncertainty(&state, &mut violation);
        samples.push(Sample {
            state,
            kappa_sq: schedule.kappa_sq_at(omega, t_next),
        });
        t_prev = t_next;
    }

    Ok(Trajectory {
        samples,
        grid_dt: control.grid_dt,
        model: *model,
        uncertainty_violation: violation,
    })
}

/// `steps` equal RK4 steps over `duration` at constant κ², with no gating.
///
/// Unlike [`integrate`] this accepts ω = 0, which makes the pure
/// measurement flow reachable.
pub fn evolve_constant(
    initial: &CovarianceState,
    coeffs: &ModeCoefficients,
    kappa_sq: f64,
    duration: f64,
    steps: usize,
) -> Result<CovarianceState> {
    initial.validate()?;
    for (name, v) in [
        ("omega", coeffs.omega),
        ("gamma", coeffs.gamma),
        ("kappa_sq", kappa_sq),
        ("duration", duration),
    ] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::invalid(name, format!("{v} must be finite and >= 0")));
        }
    }
    if steps == 0 {
        return Err(Error::invalid("steps", "must be at least 1"));
    }
    let h = duration / steps as f64;
    let mut y = initial.components();
    for i in 1..=steps {
        y = rk4_step(y, h, kappa_sq, coeffs);
        check_divergence(initial.t + i as f64 * h, &y)?;
    }
    Ok(CovarianceState::from_components(initial.t + duration, y))
}

fn check_divergence(t: f64, y: &[f64; 4]) -> Result<()> {
    const NAMES: [&str; 4] = ["a11", "a12", "a21", "a22"];
    for (i, v) in y.iter().enumerate() {
        let diagonal = i == 0 || i == 3;
        if !v.is_finite() || (diagonal && *v > DIVERGENCE_LIMIT) {
            return Err(Error::Divergence {
                t,
                component: NAMES[i],
                value: *v,
            });
        }
    }
    Ok(())
}

fn check_uncertainty(state: &CovarianceState, first: &mut Option<f64>) {
    if first.is_none() && state.det() < 1.0 - UNCERTAINTY_SLACK {
        log::warn!(
            "uncertainty product {:.6} below 1 at t = {:e} s",
            state.det(),
            state.t
        );
        *first = Some(state.t);
    }
}

/// Exact solution of the κ = 0 flow after time `t`.
///
/// With `u = a11 + a22`, `v = a11 − a22`, `w = 2 a12`, the trace relaxes to
/// `2N` while `(v, w)` rotates at `2ω` and decays at `γ`.
pub fn free_evolution_closed_form(
    initial: &CovarianceState,
    omega: f64,
    gamma: f64,
    cap_n: f64,
    t: f64,
) -> Result<CovarianceState> {
    if !initial.symmetric_offdiag() {
        return Err(Error::Precondition(
            "free evolution closed form needs a12 == a21".into(),
        ));
    }
    let u0 = initial.a11 + initial.a22;
    let v0 = initial.a11 - initial.a22;
    let w0 = 2.0 * initial.a12;
    let decay = (-gamma * t).exp();
    let (s, c) = (2.0 * omega * t).sin_cos();
    let u = 2.0 * cap_n + (u0 - 2.0 * cap_n) * decay;
    let v = decay * (v0 * c + w0 * s);
    let w = decay * (-v0 * s + w0 * c);
    Ok(CovarianceState::new(
        initial.t + t,
        0.5 * (u + v),
        0.5 * w,
        0.5 * w,
        0.5 * (u - v),
    ))
}

/// Exact solution for constant κ² with ω = γ = 0 after time `tau`.
pub fn measurement_only_closed_form(
    initial: &CovarianceState,
    eta: f64,
    kappa_sq: f64,
    tau: f64,
) -> Result<CovarianceState> {
    if !initial.symmetric_offdiag() {
        return Err(Error::Precondition(
            "measurement closed form needs a12 == a21".into(),
        ));
    }
    if !(tau >= 0.0 && kappa_sq >= 0.0) {
        return Err(Error::Precondition("tau and kappa_sq must be >= 0".into()));
    }
    let denom = 1.0 + eta * kappa_sq * initial.a11 * tau;
    let a12 = initial.a12 / denom;
    Ok(CovarianceState::new(
        initial.t + tau,
        initial.a11 / denom,
        a12,
        a12,
        initial.a22 + kappa_sq * tau - eta * kappa_sq * initial.a12 * initial.a12 * tau / denom,
    ))
}
