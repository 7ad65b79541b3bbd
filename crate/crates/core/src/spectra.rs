//! Physical constants, frequency conventions and thermal/quantum fluctuation spectra.
//!
//! All spectra are symmetrized and two-sided in frequency. The electronics
//! convention (positive frequencies only) is larger by a factor of 2, so the
//! classical Johnson-Nyquist density here reads `2 R k_B T`.
//!
//! Frequencies are angular (rad/s). Time dependence is `exp(-i omega t)`.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{non_negative, positive, NoiseError, Result};

/// Fixed CODATA 2018 constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Reduced Planck constant, J s.
    pub hbar: f64,
    /// Boltzmann constant, J/K.
    pub k_b: f64,
}

pub const CODATA_2018: PhysicalConstants = PhysicalConstants {
    hbar: 1.054_571_817e-34,
    k_b: 1.380_649e-23,
};

pub const HBAR: f64 = CODATA_2018.hbar;
pub const K_B: f64 = CODATA_2018.k_b;

/// Angular frequency in rad/s. The sign is meaningful: negative frequencies
/// carry the creation part of a field.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct AngularFrequency(f64);

impl AngularFrequency {
    pub fn new(omega: f64) -> Result<Self> {
        if !omega.is_finite() {
            return Err(NoiseError::Domain {
                quantity: "omega",
                value: omega,
                reason: "must be finite",
            });
        }
        Ok(Self(omega))
    }

    /// Converts an ordinary frequency in Hz (exactly 2 pi rad per cycle).
    pub fn from_hz(f: f64) -> Result<Self> {
        Self::new(2.0 * PI * f)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn abs(self) -> f64 {
        self.0.abs()
    }

    pub fn hz(self) -> f64 {
        self.0 / (2.0 * PI)
    }

    /// `hbar |omega|`, the energy of one quantum at this frequency.
    pub fn quantum_energy(self) -> f64 {
        HBAR * self.0.abs()
    }

    fn nonzero(self) -> Result<Self> {
        if self.0 == 0.0 {
            Err(NoiseError::Domain {
                quantity: "omega",
                value: 0.0,
                reason: "spectra are not evaluated at zero frequency",
            })
        } else {
            Ok(self)
        }
    }
}

impl fmt::Display for AngularFrequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} rad/s", self.0)
    }
}

/// Dimensionless symmetrized spectral density of one mode (number of quanta plus 1/2).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Occupation(f64);

impl Occupation {
    pub const VACUUM: Occupation = Occupation(0.5);

    pub fn new(sigma: f64) -> Result<Self> {
        if sigma.is_finite() && sigma >= 0.5 {
            Ok(Self(sigma))
        } else {
            Err(NoiseError::Domain {
                quantity: "occupation",
                value: sigma,
                reason: "must be at least 1/2",
            })
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Temperature equivalent of the energy per mode, `k_B theta = hbar |omega| sigma`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct EffectiveTemperature(f64);

impl EffectiveTemperature {
    pub fn kelvin(self) -> f64 {
        self.0
    }

    /// Energy per mode `k_B theta` in joules.
    pub fn energy(self) -> f64 {
        K_B * self.0
    }
}

/// `1/2 coth(hbar |omega| / 2 k_B T)`; exactly 1/2 at `T = 0`.
pub fn symmetrized_occupation(omega: AngularFrequency, temperature: f64) -> Result<Occupation> {
    let omega = omega.nonzero()?;
    let temperature = non_negative("temperature", temperature)?;
    if temperature == 0.0 {
        return Ok(Occupation::VACUUM);
    }
    let x = omega.quantum_energy() / (2.0 * K_B * temperature);
    // tanh saturates to 1 for large x, giving 1/2 without overflow
    Ok(Occupation(0.5 / x.tanh()))
}

/// Effective temperature of a mode of occupation `sigma` at `omega`.
pub fn effective_temperature(
    omega: AngularFrequency,
    sigma: Occupation,
) -> Result<EffectiveTemperature> {
    let omega = omega.nonzero()?;
    Ok(EffectiveTemperature(
        omega.quantum_energy() * sigma.value() / K_B,
    ))
}

/// Occupation of a mode whose energy corresponds to the effective temperature
/// `theta` at `omega`. Rejects `theta` below the zero-point value.
pub fn occupation_from_effective_temperature(
    omega: AngularFrequency,
    theta: f64,
) -> Result<Occupation> {
    let omega = omega.nonzero()?;
    let theta = non_negative("effective temperature", theta)?;
    Occupation::new(K_B * theta / omega.quantum_energy())
}

/// Thermal energy per mode `k_B theta` in joules; finite at every frequency.
/// At `omega = 0` this returns the classical value `k_B T`.
pub fn thermal_energy(omega: AngularFrequency, temperature: f64) -> Result<f64> {
    if omega.value() == 0.0 {
        return Ok(K_B * non_negative("temperature", temperature)?);
    }
    let sigma = symmetrized_occupation(omega, temperature)?;
    Ok(omega.quantum_energy() * sigma.value())
}

/// Symmetrized two-sided voltage noise density of a resistance, `2 R k_B theta` (V^2 s).
pub fn johnson_nyquist_voltage_psd(
    resistance: f64,
    omega: AngularFrequency,
    temperature: f64,
) -> Result<f64> {
    let resistance = positive("resistance", resistance)?;
    let sigma = symmetrized_occupation(omega, temperature)?;
    Ok(2.0 * resistance * omega.quantum_energy() * sigma.value())
}

/// Classical (`hbar omega << k_B T`) limit `2 R k_B T`, usable at DC.
pub fn johnson_nyquist_classical(resistance: f64, temperature: f64) -> Result<f64> {
    let resistance = positive("resistance", resistance)?;
    let temperature = non_negative("temperature", temperature)?;
    Ok(2.0 * resistance * K_B * temperature)
}
