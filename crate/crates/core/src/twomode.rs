//! Entanglement of two identical resonators through their collective modes.
//!
//! For identical resonators the collective modes X± = (X₂ ± X₁)/√2,
//! P± = (P₂ ± P₁)/√2 decouple, and each obeys the single-mode covariance
//! equations. The "+" mode is probed on X₊. The "−" mode is probed on P₋,
//! which is evolved as an X-type measurement in the frame rotated by π/2
//! (X' = P₋, P' = −X₋), so both modes go through [`integrate`] unchanged.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::dynamics::{integrate, CovarianceState, Model, StepControl, Trajectory};
use crate::error::{Error, Result};
use crate::metrics::duan_sum;
use crate::params::{DerivedParams, PhysicalParams};
use crate::schedule::PulseSchedule;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoModeConfig {
    pub shared: PhysicalParams,
    pub derived: DerivedParams,
    pub schedule_plus: PulseSchedule,
    pub schedule_minus: PulseSchedule,
}

impl TwoModeConfig {
    /// P₋ pulses trail the X₊ pulses by a quarter mechanical period.
    pub fn interleaved(
        shared: PhysicalParams,
        derived: DerivedParams,
        plus: PulseSchedule,
    ) -> Self {
        let mut minus = plus;
        minus.phase += FRAC_PI_2;
        TwoModeConfig {
            shared,
            derived,
            schedule_plus: plus,
            schedule_minus: minus,
        }
    }

    pub fn plus_model(&self) -> Model {
        Model {
            physical: self.shared,
            derived: self.derived,
            schedule: self.schedule_plus,
        }
    }

    pub fn minus_model(&self) -> Model {
        Model {
            physical: self.shared,
            derived: self.derived,
            schedule: self.schedule_minus,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoModeTrajectory {
    pub times: Vec<f64>,
    pub var_x_plus: Vec<f64>,
    pub var_p_plus: Vec<f64>,
    pub var_x_minus: Vec<f64>,
    pub var_p_minus: Vec<f64>,
    pub duan_sum: Vec<f64>,
    pub entangled: Vec<bool>,
    /// The "+" mode in its own (X₊, P₊) frame.
    pub plus: Trajectory,
    /// The "−" mode in the rotated frame, `a11 = 2 Var(P₋)`, `a22 = 2 Var(X₋)`.
    pub minus_rotated: Trajectory,
}

impl TwoModeTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// First sample time with a Duan sum below 1.
    pub fn first_entangled_time(&self) -> Option<f64> {
        self.entangled
            .iter()
            .position(|e| *e)
            .map(|i| self.times[i])
    }
}

/// Maps a state of the "−" mode from the rotated frame back to (X₋, P₋).
pub fn unrotate_minus(rotated: &CovarianceState) -> CovarianceState {
    CovarianceState::new(
        rotated.t,
        rotated.a22,
        -rotated.a21,
        -rotated.a12,
        rotated.a11,
    )
}

/// Evolves both collective modes from thermal equilibrium with the bath.
pub fn simulate_entanglement(
    config: &TwoModeConfig,
    control: &StepControl,
) -> Result<TwoModeTrajectory> {
    let plus_model = config.plus_model();
    let minus_model = config.minus_model();
    let init = plus_model.thermal_state();

    let (plus, minus) = rayon::join(
        || integrate(&init, &plus_model, control),
        || integrate(&init, &minus_model, control),
    );
    let plus = plus.map_err(|e| Error::Mode {
        mode: "plus",
        source: Box::new(e),
    })?;
    let minus_rotated = minus.map_err(|e| Error::Mode {
        mode: "minus",
        source: Box::new(e),
    })?;

    let n = plus.len();
    let mut times = Vec::with_capacity(n);
    let mut var_x_plus = Vec::with_capacity(n);
    let mut var_p_plus = Vec::with_capacity(n);
    let mut var_x_minus = Vec::with_capacity(n);
    let mut var_p_minus = Vec::with_capacity(n);
    let mut sums = Vec::with_capacity(n);
    let mut entangled = Vec::with_capacity(n);
    for (p, m) in plus.samples.iter().zip(&minus_rotated.samples) {
        let minus_native = unrotate_minus(&m.state);
        let w = duan_sum(0.5 * p.state.a11, 0.5 * minus_native.a22);
        times.push(p.state.t);
        var_x_plus.push(0.5 * p.state.a11);
        var_p_plus.push(0.5 * p.state.a22);
        var_x_minus.push(0.5 * minus_native.a11);
        var_p_minus.push(0.5 * minus_native.a22);
        sums.push(w.sum);
        entangled.push(w.entangled);
    }
    Ok(TwoModeTrajectory {
        times,
        var_x_plus,
        var_p_plus,
        var_x_minus,
        var_p_minus,
        duan_sum: sums,
        entangled,
        plus,
        minus_rotated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::derive;
    use std::f64::consts::TAU;

    fn config(temperature: f64, plus: PulseSchedule) -> TwoModeConfig {
        let shared = PhysicalParams {
            omega: TAU * 1e6,
            mass: 1.1e-11,
            gamma: TAU * 10.0,
            eta: 1.0,
            temperature,
            beta: 0.65e-6,
            photon_flux: 2.92e15,
        };
        TwoModeConfig::interleaved(shared, derive(&shared).unwrap(), plus)
    }

    fn ctl(duration: f64) -> StepControl {
        StepControl {
            duration,
            grid_dt: 1e-8,
            steps_per_period: 200,
        }
    }

    #[test]
    fn vacuum_sits_on_boundary() {
        let mut cfg = config(0.0, PulseSchedule::off());
        cfg.schedule_minus = PulseSchedule::off();
        let traj = simulate_entanglement(&cfg, &ctl(3e-6)).unwrap();
        assert!(traj.duan_sum.iter().all(|s| (*s - 1.0).abs() < 1e-12));
        assert!(traj.entangled.iter().all(|e| !e));
    }

    #[test]
    fn thermal_never_entangled() {
        let mut cfg = config(1e-3, PulseSchedule::off());
        cfg.schedule_minus = PulseSchedule::off();
        let n = cfg.derived.cap_n;
        let traj = simulate_entanglement(&cfg, &ctl(2e-6)).unwrap();
        assert!(traj.duan_sum.iter().all(|s| (*s - n).abs() < 1e-9 * n));
        assert_eq!(traj.first_entangled_time(), None);
    }

    #[test]
    fn default_minus_is_quarter_period_later() {
        let cfg = config(0.0, PulseSchedule::stroboscopic(1.0, 0.9, 0.0, 0.0));
        assert_eq!(cfg.schedule_minus.phase, FRAC_PI_2);
        let omega = cfg.shared.omega;
        assert_eq!(cfg.schedule_minus.kappa_sq_at(omega, 0.25e-6), 1.0);
        assert_eq!(cfg.schedule_minus.kappa_sq_at(omega, 0.0), 0.0);
    }

    #[test]
    fn swapping_schedules_swaps_columns() {
        let cfg = config(0.0, PulseSchedule::stroboscopic(1.2e4, 0.9, 0.0, 0.5e-6));
        let mut swapped = cfg;
        std::mem::swap(&mut swapped.schedule_plus, &mut swapped.schedule_minus);
        let a = simulate_entanglement(&cfg, &ctl(4e-6)).unwrap();
        let b = simulate_entanglement(&swapped, &ctl(4e-6)).unwrap();
        assert_eq!(a.var_x_plus, b.var_p_minus);
        assert_eq!(a.var_p_minus, b.var_x_plus);
    }

    #[test]
    fn unrotate_round_trip() {
        let s = CovarianceState::new(1.0, 2.0, 0.3, 0.3, 0.7);
        let u = unrotate_minus(&s);
        assert_eq!((u.a11, u.a12, u.a22), (0.7, -0.3, 2.0));
        assert_eq!(u.det(), s.det());
    }
}
