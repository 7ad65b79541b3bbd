//! Cold-damped capacitive accelerometer.
//!
//! The proof mass (free mass with residual damping `H_m`) is read by a
//! transducer that turns its velocity into a current `I_s = kappa v` on the
//! antisymmetric mode at the carrier `omega_t`. That current drives an ideal
//! op-amp with capacitive feedback whose output is demodulated (ideally) back
//! to the measured frequency `Omega`. The amplifier voltage noise acts back on
//! the mass with the quanta-preserving ratio `Omega / omega_t`:
//! `F_ba = -kappa (Omega/omega_t) U`.
//!
//! A servo applies `-G_L (v + n_v)` where `v + n_v` is the velocity read by the
//! detection. Its gain is `G_L = loop_gain * H_m`.

use num_complex::Complex64;

use crate::amplifier::{current_drive_readout, line_covariance, OpAmpNoisePair};
use crate::error::{non_negative, positive, NoiseError, Result};
use crate::estimator::{added_noise_spectrum, normalize_estimator, EstimatorRow, NoiseBudget};
use crate::network::{InputMode, NoiseLine, SpectrumTable};
use crate::spectra::{AngularFrequency, K_B};

pub const MECHANICAL_LINE: &str = "mech";
pub const AMPLIFIER_LINE: &str = "amp.a";
pub const AMPLIFIER_LINE_PRIME: &str = "amp.a'";
pub const READOUT_LINE: &str = "readout";

/// Mechanical share of the budget above which the instrument is called
/// mechanically limited.
pub const DOMINANCE_THRESHOLD: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LoopGain {
    Finite(f64),
    Infinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccelerometerConfig {
    /// Proof mass, kg.
    pub mass: f64,
    /// Residual mechanical damping, kg/s.
    pub h_m: f64,
    /// Measured mechanical frequency, rad/s.
    pub omega: f64,
    /// Detection carrier, rad/s.
    pub omega_t: f64,
    /// Amplifier noise impedance, ohm.
    pub r_a: f64,
    /// Effective temperatures of the two amplifier lines, K.
    pub theta_a: f64,
    pub theta_a_prime: f64,
    /// Mechanical bath temperature, K.
    pub theta_m: f64,
    /// Detection line impedance, ohm, and its temperature, K.
    pub r_r: f64,
    pub t_r: f64,
    /// Op-amp feedback capacitance, F.
    pub feedback_capacitance: f64,
    /// Velocity-to-current coupling of the transducer, A s/m.
    pub transducer_coupling: f64,
    /// Servo gain in units of `H_m`.
    pub loop_gain: LoopGain,
}

impl Default for AccelerometerConfig {
    fn default() -> Self {
        use std::f64::consts::PI;
        Self {
            mass: 0.27,
            h_m: 1.3e-5,
            omega: 2.0 * PI * 5e-4,
            omega_t: 2.0 * PI * 1e5,
            r_a: 0.15e6,
            theta_a: 1.5,
            theta_a_prime: 1.5,
            theta_m: 306.0,
            r_r: 50.0,
            t_r: 306.0,
            feedback_capacitance: 10e-12,
            transducer_coupling: 100.0,
            loop_gain: LoopGain::Finite(1e3),
        }
    }
}

impl AccelerometerConfig {
    /// Reference damping that `loop_gain` multiplies.
    pub fn base_damping(&self) -> f64 {
        self.h_m
    }

    /// Servo damping `G_L` in kg/s; `None` for an infinite loop gain.
    pub fn servo_damping(&self) -> Result<Option<f64>> {
        match self.loop_gain {
            LoopGain::Finite(g) => Ok(Some(non_negative("loop gain", g)? * self.base_damping())),
            LoopGain::Infinite => Ok(None),
        }
    }

    fn validate(&self) -> Result<()> {
        positive("mass", self.mass)?;
        positive("H_m", self.h_m)?;
        positive("Omega", self.omega)?;
        positive("omega_t", self.omega_t)?;
        positive("R_a", self.r_a)?;
        positive("Theta_a", self.theta_a)?;
        positive("Theta_a'", self.theta_a_prime)?;
        non_negative("Theta_m", self.theta_m)?;
        positive("R_r", self.r_r)?;
        non_negative("T_r", self.t_r)?;
        positive("feedback capacitance", self.feedback_capacitance)?;
        non_negative("transducer coupling", self.transducer_coupling)?;
        self.servo_damping()?;
        if self.omega >= self.omega_t {
            return Err(NoiseError::Model(
                "mechanical frequency must lie below the detection carrier".into(),
            ));
        }
        Ok(())
    }
}

/// Classical Langevin force density `2 H_m k_B Theta_m`, N^2/Hz.
pub fn mechanical_langevin_psd(h_m: f64, theta_m: f64) -> Result<f64> {
    Ok(2.0 * positive("H_m", h_m)? * K_B * non_negative("Theta_m", theta_m)?)
}

const SIGNAL: usize = 0;
const LINES: [&str; 4] = [
    MECHANICAL_LINE,
    AMPLIFIER_LINE,
    AMPLIFIER_LINE_PRIME,
    READOUT_LINE,
];
const CONJUGATED: [bool; 4] = [false, false, true, false];

/// Linear combination over `[F_ext, mech, a, a'^+, readout]`.
type Combo = [Complex64; 5];

fn lin(parts: &[(Complex64, &Combo)]) -> Combo {
    let mut out = [Complex64::new(0.0, 0.0); 5];
    for (k, c) in parts {
        for (o, x) in out.iter_mut().zip(c.iter()) {
            *o += k * x;
        }
    }
    out
}

fn noise_terms(c: &Combo) -> Vec<(InputMode, Complex64)> {
    LINES
        .iter()
        .zip(CONJUGATED)
        .zip(&c[1..])
        .map(|((l, conj), x)| {
            let mode = if conj {
                InputMode::conjugated(*l)
            } else {
                InputMode::normal(*l)
            };
            (mode, *x)
        })
        .collect()
}

/// Accelerometer evaluated at one measured frequency.
#[derive(Debug, Clone)]
pub struct AccelerometerModel {
    pub omega: AngularFrequency,
    /// Occupations of the mechanical, amplifier and detection lines.
    pub spectra: SpectrumTable,
    /// Demodulated readout row and its coefficient on `F_ext`; `None` when the
    /// loop gain is infinite and the readout is nulled.
    pub readout: Option<(Vec<(InputMode, Complex64)>, Complex64)>,
    /// Force estimator with unit gain on `F_ext`.
    pub estimator: EstimatorRow,
    /// Detection velocity noise `n_v`, m/s per unit field.
    pub velocity_noise: Vec<(InputMode, Complex64)>,
    pub servo_damping: Option<f64>,
}

pub fn build_accelerometer(
    config: &AccelerometerConfig,
    omega: AngularFrequency,
) -> Result<AccelerometerModel> {
    config.validate()?;
    let big_omega = AngularFrequency::new(omega.abs())?;
    if big_omega.value() == 0.0 || big_omega.value() >= config.omega_t {
        return Err(NoiseError::Domain {
            quantity: "Omega",
            value: omega.value(),
            reason: "must lie strictly between 0 and the carrier frequency",
        });
    }
    let kappa = config.transducer_coupling;
    if kappa == 0.0 {
        return Err(NoiseError::ZeroSignal);
    }
    let carrier = AngularFrequency::new(config.omega_t)?;
    let c = |re: f64| Complex64::new(re, 0.0);
    let i = Complex64::i();

    let pair = OpAmpNoisePair::from_lines(config.r_a, config.theta_a, config.theta_a_prime)?;
    let amp = SpectrumTable::with_covariance(
        vec![AMPLIFIER_LINE.into(), AMPLIFIER_LINE_PRIME.into()],
        line_covariance(&pair, config.r_a, carrier)?,
    )?;
    let readout_line = NoiseLine::new(READOUT_LINE, config.r_r, config.t_r)?;
    let mech = NoiseLine::new(MECHANICAL_LINE, config.h_m, config.theta_m)?;
    let spectra = SpectrumTable::thermal(&[mech], big_omega)?
        .merge(&amp)?
        .merge(&SpectrumTable::thermal(
            std::slice::from_ref(&readout_line),
            carrier,
        )?)?;

    let zf = i / (config.omega_t * config.feedback_capacitance);
    let detection = current_drive_readout(
        &readout_line,
        zf,
        (AMPLIFIER_LINE, AMPLIFIER_LINE_PRIME),
        config.r_a,
        carrier,
    )?;
    let row = detection.map.row(READOUT_LINE)?;
    let coeff = |line: &str| {
        row.iter()
            .find(|(m, _)| m.line == line)
            .map_or(c(0.0), |(_, x)| *x)
    };
    // -r + g(U - Z_f I)
    let amp_readout: Combo = [
        c(0.0),
        c(0.0),
        coeff(AMPLIFIER_LINE),
        coeff(AMPLIFIER_LINE_PRIME),
        coeff(READOUT_LINE),
    ];
    let p = (carrier.quantum_energy() * config.r_a / 2.0).sqrt();
    let voltage: Combo = [c(0.0), c(0.0), c(p), c(-p), c(0.0)];
    let force_ext: Combo = [c(1.0), c(0.0), c(0.0), c(0.0), c(0.0)];
    let force_mech: Combo = [
        c(0.0),
        c((2.0 * big_omega.quantum_energy() * config.h_m).sqrt()),
        c(0.0),
        c(0.0),
        c(0.0),
    ];

    let transimpedance = detection.transimpedance;
    let velocity_noise = lin(&[(1.0 / (transimpedance * kappa), &amp_readout)]);
    let back_action = -kappa * big_omega.value() / config.omega_t;
    let z_m = Complex64::new(config.h_m, -big_omega.value() * config.mass);
    let servo_damping = config.servo_damping()?;

    let (readout, estimator) = match servo_damping {
        Some(g_l) => {
            let velocity = lin(&[
                (c(1.0), &force_ext),
                (c(1.0), &force_mech),
                (c(back_action), &voltage),
                (c(-g_l), &velocity_noise),
            ]);
            let velocity = lin(&[(1.0 / (z_m + g_l), &velocity)]);
            let r_out = lin(&[(c(1.0), &amp_readout), (transimpedance * kappa, &velocity)]);
            let terms = noise_terms(&r_out);
            let estimator = normalize_estimator(&terms, r_out[SIGNAL], "N")?;
            (Some((terms, r_out[SIGNAL])), estimator)
        }
        None => {
            // locked mass: v = -n_v, the servo force is the estimator
            let correction = lin(&[
                (c(1.0), &force_ext),
                (c(1.0), &force_mech),
                (c(back_action), &voltage),
                (z_m, &velocity_noise),
            ]);
            let estimator =
                normalize_estimator(&noise_terms(&correction), correction[SIGNAL], "N")?;
            (None, estimator)
        }
    };

    Ok(AccelerometerModel {
        omega: big_omega,
        spectra,
        readout,
        estimator,
        velocity_noise: noise_terms(&velocity_noise),
        servo_damping,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityReport {
    pub omega: AngularFrequency,
    /// Force noise density, N^2/Hz.
    pub sigma_ff: f64,
    /// `sqrt(sigma_ff) / M`, m s^-2 / sqrt(Hz).
    pub acceleration_asd: f64,
    pub budget: NoiseBudget,
    pub mechanical_fraction: f64,
    pub mechanical_dominates: bool,
}

pub fn sensitivity_at(
    config: &AccelerometerConfig,
    omega: AngularFrequency,
) -> Result<SensitivityReport> {
    let model = build_accelerometer(config, omega)?;
    let budget = added_noise_spectrum(&model.estimator, &model.spectra)?;
    let sigma_ff = budget.total;
    let mechanical_fraction = budget.fraction(MECHANICAL_LINE).unwrap_or(0.0);
    Ok(SensitivityReport {
        omega: model.omega,
        sigma_ff,
        acceleration_asd: sigma_ff.sqrt() / config.mass,
        mechanical_fraction,
        mechanical_dominates: mechanical_fraction > DOMINANCE_THRESHOLD,
        budget,
    })
}

/// Report at the configured measurement frequency.
pub fn sensitivity_report(config: &AccelerometerConfig) -> Result<SensitivityReport> {
    sensitivity_at(config, AngularFrequency::new(config.omega)?)
}

/// Noise force injected by the servo, compared with the thermal force a
/// passive damper of the same strength would add at `Theta_m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServoNoise {
    pub damping: f64,
    /// `|G_L|^2 S_nv`, N^2/Hz.
    pub force_psd: f64,
    /// `2 G_L k_B Theta_m`, N^2/Hz.
    pub thermal_equivalent: f64,
    /// Temperature of a passive damper with the same noise, K.
    pub effective_temperature: f64,
}

pub fn servo_noise(config: &AccelerometerConfig) -> Result<ServoNoise> {
    let model = build_accelerometer(config, AngularFrequency::new(config.omega)?)?;
    let damping = model
        .servo_damping
        .ok_or_else(|| NoiseError::Model("servo noise needs a finite loop gain".into()))?;
    let damping = positive("servo damping", damping)?;
    let row = normalize_estimator(&model.velocity_noise, Complex64::new(1.0, 0.0), "m/s")?;
    let velocity_psd = added_noise_spectrum(&row, &model.spectra)?.total;
    let force_psd = damping * damping * velocity_psd;
    Ok(ServoNoise {
        damping,
        force_psd,
        thermal_equivalent: 2.0 * damping * K_B * config.theta_m,
        effective_temperature: force_psd / (2.0 * damping * K_B),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn detection_total(r: &SensitivityReport) -> f64 {
        r.budget
            .terms
            .iter()
            .filter(|t| t.source != MECHANICAL_LINE)
            .map(|t| t.value)
            .sum()
    }

    #[test]
    fn langevin_value() {
        let oracle = 2.0 * 1.3e-5 * 1.380_649e-23 * 306.0;
        let psd = mechanical_langevin_psd(1.3e-5, 306.0).unwrap();
        assert_eq!(psd, oracle);
        assert!((psd / 1.1e-25 - 1.0).abs() < 0.05);
        assert_eq!(mechanical_langevin_psd(1.3e-5, 0.0).unwrap(), 0.0);
        assert_eq!(mechanical_langevin_psd(2.6e-5, 306.0).unwrap(), 2.0 * psd);
        assert!(mechanical_langevin_psd(0.0, 306.0).is_err());
    }

    #[test]
    fn nominal_sensitivity() {
        let cfg = AccelerometerConfig::default();
        let r = sensitivity_report(&cfg).unwrap();
        assert!((r.acceleration_asd / 1.2e-12 - 1.0).abs() < 0.05);
        assert!(r.mechanical_dominates);
        let mech = r.budget.term(MECHANICAL_LINE).unwrap();
        let langevin = mechanical_langevin_psd(cfg.h_m, cfg.theta_m).unwrap();
        assert!((mech / langevin - 1.0).abs() < 1e-9);
        assert!(((r.acceleration_asd * cfg.mass).powi(2) / r.sigma_ff - 1.0).abs() < 1e-12);
    }

    #[test]
    fn estimator_has_unit_gain() {
        let m = build_accelerometer(
            &AccelerometerConfig::default(),
            AngularFrequency::new(0.01).unwrap(),
        )
        .unwrap();
        assert_eq!(m.estimator.signal, Complex64::new(1.0, 0.0));
        assert_eq!(m.estimator.terms.len(), 4);
    }

    #[test]
    fn loop_gain_invariance() {
        let free = AccelerometerConfig {
            loop_gain: LoopGain::Finite(0.0),
            ..Default::default()
        };
        let reference = sensitivity_report(&free).unwrap();
        for gain in [
            LoopGain::Finite(1e3),
            LoopGain::Finite(1e5),
            LoopGain::Infinite,
        ] {
            let cfg = AccelerometerConfig {
                loop_gain: gain,
                ..Default::default()
            };
            let r = sensitivity_report(&cfg).unwrap();
            assert!((r.sigma_ff / reference.sigma_ff - 1.0).abs() < 1e-9);
            for (a, b) in r.budget.terms.iter().zip(&reference.budget.terms) {
                assert!((a.value - b.value).abs() <= 1e-9 * b.value);
            }
        }
    }

    #[test]
    fn weak_coupling_blocks_the_signal() {
        let base = sensitivity_report(&AccelerometerConfig::default()).unwrap();
        let weak = sensitivity_report(&AccelerometerConfig {
            transducer_coupling: 1e-6,
            ..Default::default()
        })
        .unwrap();
        assert!(detection_total(&weak) > 1e6 * detection_total(&base));
        let (a, b) = (
            weak.budget.term(MECHANICAL_LINE).unwrap(),
            base.budget.term(MECHANICAL_LINE).unwrap(),
        );
        assert!((a / b - 1.0).abs() < 1e-12);
        let zero = AccelerometerConfig {
            transducer_coupling: 0.0,
            ..Default::default()
        };
        assert_eq!(
            sensitivity_report(&zero).unwrap_err(),
            NoiseError::ZeroSignal
        );
    }

    #[test]
    fn detection_only() {
        let base = sensitivity_report(&AccelerometerConfig::default()).unwrap();
        let r = sensitivity_report(&AccelerometerConfig {
            h_m: 1e-30,
            ..Default::default()
        })
        .unwrap();
        assert!(r.mechanical_fraction < 1e-6);
        assert!(r.sigma_ff < 1e-3 * base.sigma_ff);
        assert!(!r.mechanical_dominates);
    }

    #[test]
    fn heavier_mass_halves_asd_at_fixed_force_noise() {
        let cfg = AccelerometerConfig {
            loop_gain: LoopGain::Infinite,
            ..Default::default()
        };
        let r = sensitivity_report(&cfg).unwrap();
        let heavy = AccelerometerConfig {
            mass: 2.0 * cfg.mass,
            ..cfg
        };
        let h = sensitivity_report(&heavy).unwrap();
        assert!((h.acceleration_asd / r.acceleration_asd - 0.5).abs() < 1e-4);
    }

    #[test]
    fn servo_damping_is_cold() {
        let cfg = AccelerometerConfig::default();
        let s = servo_noise(&cfg).unwrap();
        assert_eq!(s.damping, 1e3 * cfg.h_m);
        assert!(s.force_psd < 1e-6 * s.thermal_equivalent);
        assert!(s.effective_temperature < 1e-3 * cfg.theta_m);
    }

    #[test]
    fn invalid_parameters() {
        for cfg in [
            AccelerometerConfig {
                mass: 0.0,
                ..Default::default()
            },
            AccelerometerConfig {
                r_a: -1.0,
                ..Default::default()
            },
            AccelerometerConfig {
                loop_gain: LoopGain::Finite(-1.0),
                ..Default::default()
            },
            AccelerometerConfig {
                omega: 1e7,
                ..Default::default()
            },
            AccelerometerConfig {
                transducer_coupling: f64::NAN,
                ..Default::default()
            },
        ] {
            assert!(sensitivity_report(&cfg).is_err(), "{cfg:?}");
        }
    }
}
