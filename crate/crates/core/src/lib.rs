//! Conditional Gaussian covariance dynamics of a mechanical resonator under
//! stroboscopic back-action-evading position measurement.
//!
//! The crate evolves the second moments of the resonator quadratures under
//! thermal damping and a gated measurement, reports squeezing against the
//! ground-state width, and extends the model to the Duan entanglement
//! witness for two identical resonators.

pub mod config;
pub mod dynamics;
pub mod error;
pub mod metrics;
pub mod output;
pub mod params;
pub mod plot;
pub mod runner;
pub mod schedule;
pub mod sweep;
pub mod twomode;

pub use config::{parse_config, InitialPolicy, RunConfig, PRESET_NAMES};
pub use dynamics::{
    evolve_constant, free_evolution_closed_form, integrate, measurement_only_closed_form, rhs,
    CovarianceState, ModeCoefficients, Model, Sample, StepControl, Trajectory,
};
pub use error::{Error, Result};
pub use metrics::{
    duan_sum, envelope, final_period_min, report, summarize, DuanWitness, Envelope, RunSummary,
    SqueezingReport, SQUEEZING_THRESHOLD,
};
pub use params::{derive, thermal_occupation, DerivedParams, PhysicalParams, HBAR, K_B};
pub use schedule::{PeakPolicy, PulseMode, PulseSchedule};
pub use sweep::{
    find_threshold, optimize_pulse, run_sweep, OptimizeOptions, PulseSearchSpace, SweepAxis,
    SweepSpec, ThresholdOptions,
};
pub use twomode::{simulate_entanglement, TwoModeConfig, TwoModeTrajectory};
