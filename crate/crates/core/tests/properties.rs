use std::f64::consts::TAU;

use proptest::prelude::*;
use strobosq::{
    derive, free_evolution_closed_form, integrate, CovarianceState, Model, PhysicalParams,
    PulseSchedule, RunConfig, StepControl,
};

const OMEGA: f64 = TAU * 1.0e6;
const PERIOD: f64 = TAU / OMEGA;

fn model(gamma: f64, eta: f64, temperature: f64, schedule: PulseSchedule) -> Model {
    let physical = PhysicalParams {
        omega: OMEGA,
        mass: 1.1e-11,
        gamma,
        eta,
        temperature,
        beta: 0.65e-6,
        photon_flux: 2.92e15,
    };
    Model {
        physical,
        derived: derive(&physical).unwrap(),
        schedule,
    }
}

fn control(periods: f64, steps_per_period: u32) -> StepControl {
    StepControl {
        duration: periods * PERIOD,
        grid_dt: PERIOD / 20.0,
        steps_per_period,
    }
}

/// A pure Gaussian state squeezed by `r` along the angle `theta`, scaled by
/// `mix` ≥ 1 so that `det = mix²`.
fn gaussian_state(r: f64, theta: f64, mix: f64) -> CovarianceState {
    let (s, c) = theta.sin_cos();
    let (lx, lp) = (mix * (-2.0 * r).exp(), mix * (2.0 * r).exp());
    let a11 = lx * c * c + lp * s * s;
    let a22 = lx * s * s + lp * c * c;
    let a12 = (lp - lx) * s * c;
    CovarianceState::new(0.0, a11, a12, a12, a22)
}

fn schedule_strategy() -> impl Strategy<Value = PulseSchedule> {
    prop_oneof![
        Just(PulseSchedule::off()),
        (0.0f64..5e4).prop_map(|k| PulseSchedule::continuous(k, 0.0)),
        (1e3f64..1e5, 0.5f64..0.99, 0.0f64..TAU, 0.0f64..3.0)
            .prop_map(|(k, c, ph, w)| PulseSchedule::stroboscopic(k, c, ph, w * PERIOD)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn uncertainty_product_never_drops_below_start_or_one(
        r in -1.0f64..1.0,
        theta in 0.0f64..TAU,
        mix in 1.0f64..4.0,
        eta in 0.0f64..=1.0,
        gamma in 0.0f64..1e5,
        temperature in 0.0f64..2e-3,
        schedule in schedule_strategy(),
    ) {
        let init = gaussian_state(r, theta, mix);
        let m = model(gamma, eta, temperature, schedule);
        let traj = integrate(&init, &m, &control(8.0, 200)).unwrap();
        let floor = init.det().min(1.0) - 1e-6;
        for s in &traj.samples {
            prop_assert!(s.state.det() >= floor, "det {} at t = {}", s.state.det(), s.state.t);
        }
        prop_assert!(traj.uncertainty_violation.is_none());
    }

    #[test]
    fn efficient_measurement_without_bath_keeps_states_pure(
        r in -1.0f64..1.0,
        theta in 0.0f64..TAU,
        schedule in schedule_strategy(),
    ) {
        let init = gaussian_state(r, theta, 1.0);
        let m = model(0.0, 1.0, 0.0, schedule);
        let traj = integrate(&init, &m, &control(10.0, 400)).unwrap();
        for s in &traj.samples {
            prop_assert!((s.state.det() - 1.0).abs() < 1e-6, "det {}", s.state.det());
        }
    }

    #[test]
    fn off_diagonals_stay_equal(
        r in -1.0f64..1.0,
        theta in 0.0f64..TAU,
        mix in 1.0f64..4.0,
        eta in 0.0f64..=1.0,
        schedule in schedule_strategy(),
    ) {
        let init = gaussian_state(r, theta, mix);
        let traj = integrate(&init, &model(TAU * 10.0, eta, 1e-3, schedule), &control(5.0, 200)).unwrap();
        for s in &traj.samples {
            prop_assert!((s.state.a12 - s.state.a21).abs() <= 1e-12);
        }
    }

    #[test]
    fn trace_is_conserved_without_measurement_or_bath(
        r in -1.5f64..1.5,
        theta in 0.0f64..TAU,
        mix in 1.0f64..10.0,
    ) {
        let init = gaussian_state(r, theta, mix);
        let traj = integrate(&init, &model(0.0, 1.0, 0.0, PulseSchedule::off()), &control(20.0, 200)).unwrap();
        let tr0 = init.a11 + init.a22;
        for s in &traj.samples {
            prop_assert!(((s.state.a11 + s.state.a22) - tr0).abs() <= 1e-10 * tr0);
        }
    }

    #[test]
    fn free_evolution_matches_closed_form(
        r in -1.0f64..1.0,
        theta in 0.0f64..TAU,
        mix in 1.0f64..4.0,
        gamma in 0.0f64..1e5,
        temperature in 0.0f64..2e-3,
    ) {
        let init = gaussian_state(r, theta, mix);
        let m = model(gamma, 1.0, temperature, PulseSchedule::off());
        let traj = integrate(&init, &m, &control(10.0, 4000)).unwrap();
        let c = m.coefficients();
        for s in &traj.samples {
            let exact = free_evolution_closed_form(&init, c.omega, c.gamma, c.cap_n, s.state.t).unwrap();
            let scale = exact.a11.max(exact.a22);
            for (a, b) in [(s.state.a11, exact.a11), (s.state.a12, exact.a12), (s.state.a22, exact.a22)] {
                prop_assert!((a - b).abs() <= 1e-9 * scale, "{a} vs {b}");
            }
        }
    }
}

#[test]
fn thermal_state_is_a_fixed_point_without_measurement() {
    for temperature in [0.0, 0.7e-3, 10e-3] {
        let m = model(TAU * 10.0, 1.0, temperature, PulseSchedule::off());
        let init = m.thermal_state();
        let traj = integrate(&init, &m, &control(100.0, 1000)).unwrap();
        let n = m.derived.cap_n;
        for s in &traj.samples {
            assert!((s.state.a11 - n).abs() <= 1e-10 * n);
            assert!((s.state.a22 - n).abs() <= 1e-10 * n);
            assert!(s.state.a12.abs() <= 1e-10 * n);
        }
    }
}

#[test]
fn halving_the_step_barely_moves_the_zoom_presets() {
    for name in ["fig-zoom-0K", "fig-zoom-10mK"] {
        let cfg = RunConfig::preset(name).unwrap();
        let mut fine = cfg.clone();
        fine.steps_per_period *= 2;
        let a = cfg.simulate().unwrap();
        let b = fine.simulate().unwrap();
        for (x, y) in a.samples.iter().zip(&b.samples) {
            let scale = y.state.a11.max(y.state.a22);
            assert!((x.state.a11 - y.state.a11).abs() <= 1e-4 * scale, "{name}");
            assert!((x.state.a22 - y.state.a22).abs() <= 1e-4 * scale, "{name}");
        }
    }
}

#[test]
fn same_config_gives_identical_trajectories() {
    let cfg = RunConfig::preset("fig-zoom-10mK").unwrap();
    assert_eq!(cfg.simulate().unwrap(), cfg.simulate().unwrap());
}
