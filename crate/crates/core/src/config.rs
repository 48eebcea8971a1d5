//! Run configuration: a flat `dotted.key = value` text format, built-in
//! figure presets, and resolution into a runnable [`Model`].
//!
//! Every key has a documented default, unknown or repeated keys are errors,
//! and [`RunConfig::to_text`] writes every key so the echoed text parses back
//! to the same configuration.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::dynamics::{integrate, CovarianceState, Model, StepControl, Trajectory};
use crate::error::{Error, Result};
use crate::params::{derive, PhysicalParams};
use crate::schedule::{PeakPolicy, PulseMode, PulseSchedule};

/// Orbit-averaged κ² used by every figure preset, 2π × 197 rad/s.
pub const PRESET_KAPPA_SQ_AVG: f64 = TAU * 197.0;

pub const PRESET_NAMES: [&str; 6] = [
    "fig-zoom-10mK",
    "fig-10mK",
    "fig-0p7mK",
    "fig-10mK-gamma0p1",
    "fig-zoom-0K",
    "fig-0K",
];

/// Every accepted key, in echo order.
pub const KEYS: [&str; 25] = [
    "preset",
    "resonator.omega",
    "resonator.mass",
    "bath.temperature_mK",
    "bath.gamma",
    "probe.eta",
    "probe.beta",
    "probe.photon_flux",
    "probe.kappa_sq_avg",
    "pulse.mode",
    "pulse.threshold",
    "pulse.phase",
    "pulse.peak_policy",
    "pulse.kappa_sq_peak",
    "pulse.warmup_periods",
    "initial.policy",
    "initial.a11",
    "initial.a12",
    "initial.a21",
    "initial.a22",
    "run.duration",
    "run.grid_dt",
    "run.steps_per_period",
    "output.dir",
    "output.plot",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialPolicy {
    /// Thermal equilibrium with the bath.
    Thermal,
    Explicit {
        a11: f64,
        a12: f64,
        a21: f64,
        a22: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub omega: f64,
    pub mass: f64,
    pub temperature_mk: f64,
    pub gamma: f64,
    pub eta: f64,
    pub beta: f64,
    pub photon_flux: f64,
    /// `None` computes κ² = 2β²Φ.
    pub kappa_sq_avg: Option<f64>,
    pub pulse_mode: PulseMode,
    pub threshold: f64,
    pub phase: f64,
    pub peak_policy: PeakPolicy,
    pub warmup_periods: f64,
    pub initial: InitialPolicy,
    pub duration: f64,
    pub grid_dt: f64,
    pub steps_per_period: u32,
    pub output_dir: PathBuf,
    pub plot: bool,
}

impl Default for RunConfig {
    /// A short 0 K run with the reference resonator.
    fn default() -> Self {
        let omega = TAU * 1.0e6;
        RunConfig {
            preset: None,
            omega,
            mass: 1.1e-11,
            temperature_mk: 0.0,
            gamma: TAU * 10.0,
            eta: 1.0,
            beta: 0.65e-6,
            photon_flux: 2.92e15,
            kappa_sq_avg: None,
            pulse_mode: PulseMode::Stroboscopic,
            threshold: 0.9,
            phase: 0.0,
            peak_policy: PeakPolicy::TenTimesAvg,
            warmup_periods: 2.5,
            initial: InitialPolicy::Thermal,
            duration: 20e-6,
            grid_dt: TAU / omega / 100.0,
            steps_per_period: 1000,
            output_dir: PathBuf::from("out"),
            plot: true,
        }
    }
}

/// A fully resolved single-mode run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedRun {
    pub model: Model,
    pub control: StepControl,
    pub initial: CovarianceState,
}

impl RunConfig {
    pub fn preset(name: &str) -> Result<Self> {
        let (temperature_mk, gamma, zoom) = match name {
            "fig-zoom-10mK" => (10.0, TAU * 10.0, true),
            "fig-10mK" => (10.0, TAU * 10.0, false),
            "fig-0p7mK" => (0.7, TAU * 10.0, false),
            "fig-10mK-gamma0p1" => (10.0, TAU * 0.1, false),
            "fig-zoom-0K" => (0.0, TAU * 10.0, true),
            "fig-0K" => (0.0, TAU * 10.0, false),
            _ => return Err(Error::UnknownPreset(name.to_string())),
        };
        let base = RunConfig::default();
        let period = TAU / base.omega;
        Ok(RunConfig {
            preset: Some(name.to_string()),
            temperature_mk,
            gamma,
            kappa_sq_avg: Some(PRESET_KAPPA_SQ_AVG),
            duration: if zoom { 20e-6 } else { 400e-6 },
            grid_dt: if zoom { period / 200.0 } else { period / 100.0 },
            output_dir: PathBuf::from("out").join(name),
            ..base
        })
    }

    pub fn period(&self) -> f64 {
        TAU / self.omega
    }

    pub fn physical(&self) -> PhysicalParams {
        PhysicalParams {
            omega: self.omega,
            mass: self.mass,
            gamma: self.gamma,
            eta: self.eta,
            temperature: self.temperature_mk * 1e-3,
            beta: self.beta,
            photon_flux: self.photon_flux,
        }
    }

    /// Checks every field, naming the offending key.
    pub fn validate(&self) -> Result<()> {
        fn check(ok: bool, key: &str, msg: &str) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::ConfigKey {
                    key: key.to_string(),
                    message: msg.to_string(),
                })
            }
        }
        let pos = |v: f64| v.is_finite() && v > 0.0;
        let nonneg = |v: f64| v.is_finite() && v >= 0.0;
        check(pos(self.omega), "resonator.omega", "must be > 0")?;
        check(pos(self.mass), "resonator.mass", "must be > 0")?;
        check(
            nonneg(self.temperature_mk),
            "bath.temperature_mK",
            "must be >= 0",
        )?;
        check(nonneg(self.gamma), "bath.gamma", "must be >= 0")?;
        check(
            nonneg(self.eta) && self.eta <= 1.0,
            "probe.eta",
            "must lie in [0, 1]",
        )?;
        check(nonneg(self.beta), "probe.beta", "must be >= 0")?;
        check(
            nonneg(self.photon_flux),
            "probe.photon_flux",
            "must be >= 0",
        )?;
        if let Some(k) = self.kappa_sq_avg {
            check(nonneg(k), "probe.kappa_sq_avg", "must be >= 0 or `auto`")?;
        }
        check(
            self.threshold.is_finite() && self.threshold > 0.0 && self.threshold < 1.0,
            "pulse.threshold",
            "must lie in the open interval (0, 1)",
        )?;
        check(self.phase.is_finite(), "pulse.phase", "must be finite")?;
        if let PeakPolicy::Explicit(v) = self.peak_policy {
            check(nonneg(v), "pulse.kappa_sq_peak", "must be >= 0")?;
        }
        check(
            nonneg(self.warmup_periods),
            "pulse.warmup_periods",
            "must be >= 0",
        )?;
        if let InitialPolicy::Explicit { a11, a12, a21, a22 } = self.initial {
            check(pos(a11), "initial.a11", "must be > 0")?;
            check(pos(a22), "initial.a22", "must be > 0")?;
            check(a12.is_finite(), "initial.a12", "must be finite")?;
            check(a21.is_finite(), "initial.a21", "must be finite")?;
        }
        check(pos(self.duration), "run.duration", "must be > 0")?;
        check(pos(self.grid_dt), "run.grid_dt", "must be > 0")?;
        check(
            self.steps_per_period >= StepControl::MIN_STEPS_PER_PERIOD,
            "run.steps_per_period",
            "must be at least 100",
        )?;
        Ok(())
    }

    pub fn resolve(&self) -> Result<ResolvedRun> {
        self.validate()?;
        let physical = self.physical();
        let mut derived = derive(&physical)?;
        if let Some(k) = self.kappa_sq_avg {
            derived = derived.with_kappa_sq_avg(k)?;
        }
        let peak = self
            .peak_policy
            .peak(derived.kappa_sq_avg, self.pulse_mode, self.threshold);
        let schedule = PulseSchedule {
            mode: self.pulse_mode,
            threshold: self.threshold,
            phase: self.phase,
            kappa_sq_peak: peak,
            warmup: self.warmup_periods * self.period(),
        };
        schedule.validate()?;
        let initial = match self.initial {
            InitialPolicy::Thermal => CovarianceState::thermal(derived.cap_n),
            InitialPolicy::Explicit { a11, a12, a21, a22 } => {
                CovarianceState::new(0.0, a11, a12, a21, a22)
            }
        };
        Ok(ResolvedRun {
            model: Model {
                physical,
                derived,
                schedule,
            },
            control: StepControl {
                duration: self.duration,
                grid_dt: self.grid_dt,
                steps_per_period: self.steps_per_period,
            },
            initial,
        })
    }

    /// Parses `text` on top of the defaults (or the named preset, when the
    /// document sets `preset`).
    pub fn parse(text: &str) -> Result<Self> {
        let entries = tokenize(text)?;
        let mut cfg = match entries.iter().find(|e| e.key == "preset") {
            Some(e) if e.value != "none" => RunConfig::preset(&e.value)?,
            _ => RunConfig::default(),
        };
        cfg.apply_entries(&entries)?;
        Ok(cfg)
    }

    /// Applies the keys in `text` on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let entries = tokenize(text)?;
        self.apply_entries(&entries)
    }

    fn apply_entries(&mut self, entries: &[Entry]) -> Result<()> {
        let omega_before = self.omega;
        let grid_given = entries.iter().any(|e| e.key == "run.grid_dt");
        let mut peak: Option<f64> = None;
        let mut policy_name: Option<String> = None;
        let mut init_policy: Option<String> = None;
        let mut init = match self.initial {
            InitialPolicy::Explicit { a11, a12, a21, a22 } => {
                [Some(a11), Some(a12), Some(a21), Some(a22)]
            }
            InitialPolicy::Thermal => [None; 4],
        };
        let mut init_given = false;

        for e in entries {
            let num = || parse_number(e);
            match e.key.as_str() {
                "preset" => {
                    self.preset = (e.value != "none").then(|| e.value.clone());
                }
                "resonator.omega" => self.omega = num()?,
                "resonator.mass" => self.mass = num()?,
                "bath.temperature_mK" => self.temperature_mk = num()?,
                "bath.gamma" => self.gamma = num()?,
                "probe.eta" => self.eta = num()?,
                "probe.beta" => self.beta = num()?,
                "probe.photon_flux" => self.photon_flux = num()?,
                "probe.kappa_sq_avg" => {
                    self.kappa_sq_avg = if e.value == "auto" {
                        None
                    } else {
                        Some(num()?)
                    };
                }
                "pulse.mode" => {
                    self.pulse_mode = e.value.parse().map_err(|m| e.syntax(m))?;
                }
                "pulse.threshold" => self.threshold = num()?,
                "pulse.phase" => self.phase = num()?,
                "pulse.peak_policy" => policy_name = Some(e.value.clone()),
                "pulse.kappa_sq_peak" => peak = Some(num()?),
                "pulse.warmup_periods" => self.warmup_periods = num()?,
                "initial.policy" => init_policy = Some(e.value.clone()),
                "initial.a11" | "initial.a12" | "initial.a21" | "initial.a22" => {
                    let idx = match &e.key[8..] {
                        "a11" => 0,
                        "a12" => 1,
                        "a21" => 2,
                        _ => 3,
                    };
                    init[idx] = Some(num()?);
                    init_given = true;
                }
                "run.duration" => self.duration = num()?,
                "run.grid_dt" => self.grid_dt = num()?,
                "run.steps_per_period" => {
                    self.steps_per_period = e
                        .value
                        .parse()
                        .map_err(|_| e.syntax("expected a non-negative integer"))?;
                }
                "output.dir" => self.output_dir = PathBuf::from(&e.value),
                "output.plot" => {
                    self.plot = match e.value.as_str() {
                        "true" => true,
                        "false" => false,
                        _ => return Err(e.syntax("expected true or false")),
                    };
                }
                _ => {
                    return Err(Error::ConfigSyntax {
                        line: e.line,
                        message: format!("unknown key `{}`", e.key),
                    })
                }
            }
        }

        let policy_name = policy_name.unwrap_or_else(|| self.peak_policy.name().to_string());
        self.peak_policy = match (policy_name.as_str(), peak) {
            ("explicit", Some(v)) => PeakPolicy::Explicit(v),
            ("explicit", None) => match self.peak_policy {
                PeakPolicy::Explicit(v) => PeakPolicy::Explicit(v),
                _ => {
                    return Err(key_err(
                        "pulse.kappa_sq_peak",
                        "required when pulse.peak_policy = explicit",
                    ))
                }
            },
            (_, Some(_)) => {
                return Err(key_err(
                    "pulse.kappa_sq_peak",
                    "only allowed when pulse.peak_policy = explicit",
                ))
            }
            ("ten_times_avg", None) => PeakPolicy::TenTimesAvg,
            ("avg_over_duty", None) => PeakPolicy::AvgOverDuty,
            (other, None) => {
                return Err(key_err(
                    "pulse.peak_policy",
                    &format!("expected ten_times_avg, avg_over_duty or explicit, got `{other}`"),
                ))
            }
        };

        let init_policy = init_policy.unwrap_or_else(|| match self.initial {
            InitialPolicy::Thermal => "thermal".into(),
            InitialPolicy::Explicit { .. } => "explicit".into(),
        });
        self.initial = match init_policy.as_str() {
            "thermal" if init_given => {
                return Err(key_err(
                    "initial.policy",
                    "initial.aNN keys need initial.policy = explicit",
                ))
            }
            "thermal" => InitialPolicy::Thermal,
            "explicit" => match init {
                [Some(a11), Some(a12), Some(a21), Some(a22)] => {
                    InitialPolicy::Explicit { a11, a12, a21, a22 }
                }
                _ => {
                    return Err(key_err(
                        "initial.policy",
                        "explicit initial state needs initial.a11, a12, a21 and a22",
                    ))
                }
            },
            other => {
                return Err(key_err(
                    "initial.policy",
                    &format!("expected thermal or explicit, got `{other}`"),
                ))
            }
        };

        // The default sampling follows the mechanical period.
        if !grid_given && self.omega != omega_before {
            self.grid_dt *= omega_before / self.omega;
        }
        self.validate()
    }

    /// All keys, one per line, in [`KEYS`] order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put(
            "preset",
            self.preset.clone().unwrap_or_else(|| "none".into()),
        );
        put("resonator.omega", fmt_num(self.omega));
        put("resonator.mass", fmt_num(self.mass));
        put("bath.temperature_mK", fmt_num(self.temperature_mk));
        put("bath.gamma", fmt_num(self.gamma));
        put("probe.eta", fmt_num(self.eta));
        put("probe.beta", fmt_num(self.beta));
        put("probe.photon_flux", fmt_num(self.photon_flux));
        put(
            "probe.kappa_sq_avg",
            self.kappa_sq_avg.map_or_else(|| "auto".into(), fmt_num),
        );
        put("pulse.mode", self.pulse_mode.to_string());
        put("pulse.threshold", fmt_num(self.threshold));
        put("pulse.phase", fmt_num(self.phase));
        put("pulse.peak_policy", self.peak_policy.name().into());
        if let PeakPolicy::Explicit(v) = self.peak_policy {
            put("pulse.kappa_sq_peak", fmt_num(v));
        }
        put("pulse.warmup_periods", fmt_num(self.warmup_periods));
        match self.initial {
            InitialPolicy::Thermal => put("initial.policy", "thermal".into()),
            InitialPolicy::Explicit { a11, a12, a21, a22 } => {
                put("initial.policy", "explicit".into());
                put("initial.a11", fmt_num(a11));
                put("initial.a12", fmt_num(a12));
                put("initial.a21", fmt_num(a21));
                put("initial.a22", fmt_num(a22));
            }
        }
        put("run.duration", fmt_num(self.duration));
        put("run.grid_dt", fmt_num(self.grid_dt));
        put("run.steps_per_period", self.steps_per_period.to_string());
        put("output.dir", self.output_dir.display().to_string());
        put("output.plot", self.plot.to_string());
        s
    }

    /// [`to_text`](Self::to_text) followed by the derived quantities as comments.
    pub fn echo(&self) -> Result<String> {
        let run = self.resolve()?;
        let d = &run.model.derived;
        let sch = &run.model.schedule;
        let mut s = self.to_text();
        let _ = writeln!(s, "# derived.x0 = {}", fmt_num(d.x0));
        let _ = writeln!(s, "# derived.p0 = {}", fmt_num(d.p0));
        let _ = writeln!(s, "# derived.nbar = {}", fmt_num(d.nbar));
        let _ = writeln!(s, "# derived.cap_n = {}", fmt_num(d.cap_n));
        let _ = writeln!(s, "# derived.kappa_sq_avg = {}", fmt_num(d.kappa_sq_avg));
        let _ = writeln!(
            s,
            "# derived.kappa_sq_peak = {}",
            fmt_num(sch.kappa_sq_peak)
        );
        let _ = writeln!(s, "# derived.duty_cycle = {}", fmt_num(sch.duty_cycle()));
        let _ = writeln!(s, "# derived.warmup_s = {}", fmt_num(sch.warmup));
        Ok(s)
    }

    pub fn simulate(&self) -> Result<Trajectory> {
        let run = self.resolve()?;
        integrate(&run.initial, &run.model, &run.control)
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    RunConfig::parse(text)
}

struct Entry {
    line: usize,
    key: String,
    value: String,
}

impl Entry {
    fn syntax(&self, msg: impl std::fmt::Display) -> Error {
        Error::ConfigSyntax {
            line: self.line,
            message: format!("`{}`: {msg}", self.key),
        }
    }
}

fn key_err(key: &str, msg: &str) -> Error {
    Error::ConfigKey {
        key: key.to_string(),
        message: msg.to_string(),
    }
}

fn tokenize(text: &str) -> Result<Vec<Entry>> {
    let mut out: Vec<Entry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::ConfigSyntax {
            line,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(Error::ConfigSyntax {
                line,
                message: "empty key or value".into(),
            });
        }
        if !KEYS.contains(&key) {
            return Err(Error::ConfigSyntax {
                line,
                message: format!("unknown key `{key}`"),
            });
        }
        if let Some(prev) = out.iter().find(|e| e.key == key) {
            return Err(Error::ConfigSyntax {
                line,
                message: format!("duplicate key `{key}` (first set on line {})", prev.line),
            });
        }
        out.push(Entry {
            line,
            key: key.to_string(),
            value: value.to_string(),
        });
    }
    Ok(out)
}

fn parse_number(e: &Entry) -> Result<f64> {
    let v: f64 = e
        .value
        .parse()
        .map_err(|_| e.syntax(format!("`{}` is not a number", e.value)))?;
    if !v.is_finite() {
        return Err(e.syntax("value must be finite"));
    }
    Ok(v)
}

/// Shortest representation that parses back to the same `f64`.
pub(crate) fn fmt_num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-3..1e6).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}
