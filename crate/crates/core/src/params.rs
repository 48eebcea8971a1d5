//! Physical configuration of the resonator, bath and probe, and the
//! quantities derived from it.
//!
//! All rates are angular (rad/s). Temperatures are in kelvin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Mechanical angular frequency, rad/s.
    pub omega: f64,
    /// Effective mass, kg.
    pub mass: f64,
    /// Bath coupling rate, rad/s.
    pub gamma: f64,
    /// Measurement efficiency in [0, 1].
    pub eta: f64,
    /// Bath temperature, K.
    pub temperature: f64,
    /// Probe phase shift per unit dimensionless displacement, rad.
    pub beta: f64,
    /// Probe photon flux, 1/s.
    pub photon_flux: f64,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        positive("omega", self.omega)?;
        positive("mass", self.mass)?;
        non_negative("gamma", self.gamma)?;
        non_negative("temperature", self.temperature)?;
        non_negative("beta", self.beta)?;
        non_negative("photon_flux", self.photon_flux)?;
        if !(self.eta.is_finite() && (0.0..=1.0).contains(&self.eta)) {
            return Err(Error::invalid(
                "eta",
                format!("{} is not in [0, 1]", self.eta),
            ));
        }
        Ok(())
    }

    /// Mechanical period 2π/ω, s.
    pub fn period(&self) -> f64 {
        std::f64::consts::TAU / self.omega
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    /// Zero-point length √(ħ/(mω)), m.
    pub x0: f64,
    /// Zero-point momentum √(ħmω), kg·m/s.
    pub p0: f64,
    /// Thermal occupation of the mode.
    pub nbar: f64,
    /// Thermal covariance N = 2n̄ + 1.
    pub cap_n: f64,
    /// Orbit-averaged measurement strength κ², 1/s.
    pub kappa_sq_avg: f64,
}

impl DerivedParams {
    /// Replaces the measurement strength computed from 2β²Φ.
    pub fn with_kappa_sq_avg(mut self, kappa_sq_avg: f64) -> Result<Self> {
        non_negative("kappa_sq_avg", kappa_sq_avg)?;
        self.kappa_sq_avg = kappa_sq_avg;
        Ok(self)
    }
}

/// Bose–Einstein occupation 1/(exp(ħω/k_B T) − 1); zero at T = 0.
pub fn thermal_occupation(temperature: f64, omega: f64) -> Result<f64> {
    non_negative("temperature", temperature)?;
    positive("omega", omega)?;
    if temperature == 0.0 {
        return Ok(0.0);
    }
    let x = HBAR * omega / (K_B * temperature);
    Ok(1.0 / x.exp_m1())
}

pub fn derive(params: &PhysicalParams) -> Result<DerivedParams> {
    params.validate()?;
    let nbar = thermal_occupation(params.temperature, params.omega)?;
    Ok(DerivedParams {
        x0: (HBAR / (params.mass * params.omega)).sqrt(),
        p0: (HBAR * params.mass * params.omega).sqrt(),
        nbar,
        cap_n: 2.0 * nbar + 1.0,
        kappa_sq_avg: 2.0 * params.beta * params.beta * params.photon_flux,
    })
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("{v} must be finite and > 0")))
    }
}

fn non_negative(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("{v} must be finite and >= 0")))
    }
}
