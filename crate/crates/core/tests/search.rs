use std::f64::consts::TAU;

use strobosq::sweep::SWEEP_CSV_HEADER;
use strobosq::{
    find_threshold, optimize_pulse, run_sweep, summarize, Error, OptimizeOptions, PulseSearchSpace,
    RunConfig, SweepAxis, SweepSpec, ThresholdOptions, SQUEEZING_THRESHOLD,
};

fn final_min(cfg: &RunConfig) -> f64 {
    summarize(&cfg.simulate().unwrap())
        .unwrap()
        .final_period_min_two_sigma
}

#[test]
fn sweep_rows_follow_input_order() {
    let spec = SweepSpec {
        base: RunConfig::preset("fig-10mK").unwrap(),
        axis: SweepAxis::Temperature,
        values: vec![10e-3, 0.7e-3, 0.0],
    };
    let res = run_sweep(&spec, 3).unwrap();
    let v: Vec<f64> = res
        .rows
        .iter()
        .map(|r| r.outcome.as_ref().unwrap().final_period_min_two_sigma)
        .collect();
    assert!(v[0] > 1.41);
    assert!(v[2] < v[1] && v[1] < v[0]);
    let csv = res.to_csv();
    assert_eq!(csv.lines().next().unwrap(), SWEEP_CSV_HEADER);
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn single_value_sweep_equals_single_run() {
    let mut base = RunConfig::preset("fig-zoom-0K").unwrap();
    base.steps_per_period = 200;
    let spec = SweepSpec {
        base: base.clone(),
        axis: SweepAxis::Eta,
        values: vec![0.5],
    };
    let row = &run_sweep(&spec, 1).unwrap().rows[0];
    let mut direct = base;
    direct.eta = 0.5;
    assert_eq!(row.config, direct);
    assert_eq!(
        row.outcome.as_ref().unwrap().final_period_min_two_sigma,
        final_min(&direct)
    );
}

#[test]
fn diverging_row_does_not_spoil_the_others() {
    let mut base = RunConfig::preset("fig-zoom-0K").unwrap();
    base.eta = 0.0;
    base.steps_per_period = 200;
    let spec = SweepSpec {
        base,
        axis: SweepAxis::KappaSqAvg,
        values: vec![TAU * 197.0, 1e18],
    };
    let res = run_sweep(&spec, 2).unwrap();
    assert!(res.rows[0].outcome.is_ok());
    let err = res.rows[1].outcome.as_ref().unwrap_err();
    assert!(err.contains("diverged"), "{err}");
    assert!(res.to_csv().lines().nth(2).unwrap().contains("diverged"));
}

fn certify(base: &RunConfig, axis: SweepAxis, lo: f64, hi: f64) {
    let res = find_threshold(base, axis, lo, hi, &ThresholdOptions::default()).unwrap();
    assert!(res.value > lo.min(hi) && res.value < lo.max(hi));
    let width = (res.squeezed_end - res.unsqueezed_end).abs();
    assert!(width <= 1e-3 * res.value.abs() * 1.0001, "bracket {width}");
    // Independent re-check at ±10% of the returned value.
    let squeezed_side = if res.squeezed_end < res.unsqueezed_end {
        res.value * 0.9
    } else {
        res.value * 1.1
    };
    let other_side = if squeezed_side < res.value {
        res.value * 1.1
    } else {
        res.value * 0.9
    };
    assert!(final_min(&axis.apply(base, squeezed_side).unwrap()) < SQUEEZING_THRESHOLD);
    assert!(final_min(&axis.apply(base, other_side).unwrap()) >= SQUEEZING_THRESHOLD);
}

#[test]
fn temperature_threshold_is_certified() {
    certify(
        &RunConfig::preset("fig-10mK").unwrap(),
        SweepAxis::Temperature,
        10e-3,
        0.0,
    );
}

#[test]
fn gamma_threshold_is_certified() {
    certify(
        &RunConfig::preset("fig-10mK").unwrap(),
        SweepAxis::Gamma,
        TAU * 10.0,
        TAU * 0.1,
    );
}

#[test]
fn bracket_errors() {
    let base = RunConfig::preset("fig-10mK").unwrap();
    let opts = ThresholdOptions::default();
    assert!(matches!(
        find_threshold(&base, SweepAxis::Temperature, 1e-3, 1e-3, &opts),
        Err(Error::Bracket(_))
    ));
    assert!(matches!(
        find_threshold(&base, SweepAxis::Temperature, 10e-3, 20e-3, &opts),
        Err(Error::Bracket(_))
    ));
}

#[test]
fn pulse_grid_matches_exhaustive_evaluation() {
    let base = RunConfig::preset("fig-0K").unwrap();
    let thresholds = [0.8, 0.9, 0.95];
    let space = PulseSearchSpace {
        thresholds: thresholds.to_vec(),
        phases: vec![0.0],
    };
    let opts = OptimizeOptions {
        refine: false,
        workers: 3,
        ..OptimizeOptions::default()
    };
    let res = optimize_pulse(&base, &space, &opts).unwrap();

    let mut oracle = (f64::NAN, f64::INFINITY);
    for c in thresholds {
        let mut cfg = base.clone();
        cfg.threshold = c;
        let v = final_min(&cfg);
        if v < oracle.1 {
            oracle = (c, v);
        }
    }
    assert_eq!(res.grid_best.threshold, oracle.0);
    assert_eq!(res.grid_best.value, oracle.1);
    assert_eq!(res.best, res.grid_best);
    assert_eq!(res.evaluations, 3);
}

#[test]
fn refinement_never_loses_to_the_grid() {
    let mut base = RunConfig::preset("fig-0K").unwrap();
    base.duration = 100e-6;
    let space = PulseSearchSpace {
        thresholds: vec![0.8, 0.9, 0.95],
        phases: vec![-0.2, 0.0, 0.2],
    };
    let res = optimize_pulse(&base, &space, &OptimizeOptions::default()).unwrap();
    assert!(res.grid.iter().all(|p| res.best.value <= p.value));
    assert!(res.evaluations > res.grid.len());
}

#[test]
fn single_point_search_returns_that_point() {
    let mut base = RunConfig::preset("fig-zoom-0K").unwrap();
    base.steps_per_period = 200;
    let space = PulseSearchSpace {
        thresholds: vec![0.9],
        phases: vec![0.0],
    };
    let res = optimize_pulse(&base, &space, &OptimizeOptions::default()).unwrap();
    assert_eq!(res.best.value, final_min(&base));
    assert_eq!(res.evaluations, 1);
}
