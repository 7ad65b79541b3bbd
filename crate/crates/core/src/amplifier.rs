//! Active elements: phase-insensitive gain stages and the ideal operational
//! amplifier with reactive feedback.
//!
//! Amplification cannot preserve the free-field commutators with normal
//! coefficients only. The added noise enters through a conjugated input mode
//! and every row of an active map satisfies
//! `sum_normal |c|^2 - sum_conj |c|^2 = 1`.
//!
//! The op-amp voltage and current noise generators are rewritten on two lines
//! `a`, `a'` with the same normalization as every other line:
//!
//! ```text
//! U = sqrt(hbar|w| R / 2) (a - a'^+)
//! I = sqrt(hbar|w| / 2R) (a + a'^+)
//! ```
//!
//! which gives `[U, I] = 2 pi hbar w delta(w + w')`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{positive, NoiseError, Result};
use crate::network::{
    CMatrix, InputMode, NoiseLine, ReactiveElement, ScatteringMap, SpectrumTable, TOL_REACTIVE,
};
use crate::spectra::{
    effective_temperature, occupation_from_effective_temperature, AngularFrequency,
    EffectiveTemperature, Occupation, K_B,
};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub type ResponseFn = Arc<dyn Fn(AngularFrequency) -> Complex64 + Send + Sync>;

/// Phase-insensitive amplifier `a_out = G a_in + sqrt(|G|^2 - 1) b_in^+`.
#[derive(Clone)]
pub struct GainStage {
    gain: ResponseFn,
    /// Physical temperature of the added-noise line `b`, K.
    pub noise_temperature: f64,
    pub input: String,
    pub noise: String,
}

impl fmt::Debug for GainStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GainStage")
            .field("noise_temperature", &self.noise_temperature)
            .field("input", &self.input)
            .field("noise", &self.noise)
            .finish_non_exhaustive()
    }
}

impl GainStage {
    pub fn new(gain: ResponseFn, noise_temperature: f64) -> Self {
        Self {
            gain,
            noise_temperature,
            input: "a".into(),
            noise: "b".into(),
        }
    }

    pub fn constant(gain: Complex64, noise_temperature: f64) -> Self {
        Self::new(Arc::new(move |_| gain), noise_temperature)
    }

    pub fn with_labels(mut self, input: impl Into<String>, noise: impl Into<String>) -> Self {
        self.input = input.into();
        self.noise = noise.into();
        self
    }

    pub fn gain(&self, omega: AngularFrequency) -> Complex64 {
        (self.gain)(omega)
    }
}

/// One-row map of a gain stage at `omega`: `[G on a, sqrt(|G|^2-1) conjugated on b]`.
pub fn amplify_mode(stage: &GainStage, omega: AngularFrequency) -> Result<ScatteringMap> {
    let g = stage.gain(omega);
    let magnitude = g.norm();
    if !magnitude.is_finite() || magnitude < 1.0 {
        return Err(NoiseError::GainBelowUnity(magnitude));
    }
    let added = (magnitude * magnitude - 1.0).max(0.0).sqrt();
    ScatteringMap::new(
        vec![stage.input.clone()],
        vec![
            InputMode::normal(stage.input.clone()),
            InputMode::conjugated(stage.noise.clone()),
        ],
        DMatrix::from_row_slice(1, 2, &[g, Complex64::new(added, 0.0)]),
    )
}

/// Symmetrized voltage/current noise of an op-amp (V^2 s, A^2 s, V A s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpAmpNoisePair {
    pub voltage: f64,
    pub current: f64,
    pub cross: f64,
}

impl OpAmpNoisePair {
    pub fn new(voltage: f64, current: f64) -> Self {
        Self {
            voltage,
            current,
            cross: 0.0,
        }
    }

    /// Noise pair of two uncorrelated lines of impedance `r_a` at effective
    /// temperatures `theta_a`, `theta_a_prime`. Frequency independent.
    pub fn from_lines(r_a: f64, theta_a: f64, theta_a_prime: f64) -> Result<Self> {
        let r_a = positive("noise impedance", r_a)?;
        let sum = K_B * (positive("theta_a", theta_a)? + positive("theta_a'", theta_a_prime)?);
        Ok(Self {
            voltage: r_a * sum / 2.0,
            current: sum / (2.0 * r_a),
            cross: K_B * (theta_a - theta_a_prime) / 2.0,
        })
    }

    /// `sigma_UU sigma_II - sigma_UI^2 - (hbar w / 2)^2`, non-negative for physical noise.
    pub fn heisenberg_margin(&self, omega: AngularFrequency) -> f64 {
        let floor = omega.quantum_energy() / 2.0;
        self.voltage * self.current - self.cross * self.cross - floor * floor
    }
}

/// Noise-matching impedance and temperatures of the two amplifier lines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseDecomposition {
    pub impedance: f64,
    pub occupation_a: Occupation,
    pub occupation_a_prime: Occupation,
    pub theta_a: EffectiveTemperature,
    pub theta_a_prime: EffectiveTemperature,
}

/// Splits an op-amp noise pair into two uncorrelated lines.
///
/// The lines decorrelate at `R_a = sqrt(sigma_UU / sigma_II)` whatever the
/// cross spectrum. A nonzero `sigma_UI` instead splits the occupations:
/// `sigma_a, sigma_a' = (sqrt(sigma_UU sigma_II) +/- sigma_UI) / hbar|w|`.
pub fn decompose_noise_sources(
    pair: &OpAmpNoisePair,
    omega: AngularFrequency,
) -> Result<NoiseDecomposition> {
    let voltage = positive("sigma_UU", pair.voltage)?;
    let current = positive("sigma_II", pair.current)?;
    if omega.value() == 0.0 {
        return Err(NoiseError::Domain {
            quantity: "omega",
            value: 0.0,
            reason: "spectra are not evaluated at zero frequency",
        });
    }
    let geometric = (voltage * current).sqrt();
    let quantum = omega.quantum_energy();
    let checked = |s: f64| Occupation::new(s).map_err(|_| NoiseError::Heisenberg { occupation: s });
    let occupation_a = checked((geometric + pair.cross) / quantum)?;
    let occupation_a_prime = checked((geometric - pair.cross) / quantum)?;
    Ok(NoiseDecomposition {
        impedance: (voltage / current).sqrt(),
        occupation_a,
        occupation_a_prime,
        theta_a: effective_temperature(omega, occupation_a)?,
        theta_a_prime: effective_temperature(omega, occupation_a_prime)?,
    })
}

/// Rebuilds the voltage/current pair from two lines of impedance `r`.
pub fn recombine_noise_sources(
    r: f64,
    occupation_a: f64,
    occupation_a_prime: f64,
    omega: AngularFrequency,
) -> OpAmpNoisePair {
    let half = omega.quantum_energy() / 2.0;
    OpAmpNoisePair {
        voltage: half * r * (occupation_a + occupation_a_prime),
        current: half / r * (occupation_a + occupation_a_prime),
        cross: half * (occupation_a - occupation_a_prime),
    }
}

fn line_amplitudes(r: f64, omega: AngularFrequency) -> (f64, f64) {
    let half = omega.quantum_energy() / 2.0;
    ((half * r).sqrt(), (half / r).sqrt())
}

/// Covariance of the mode operators `(a, a'^+)` obtained by decomposing the
/// pair on an arbitrary impedance `r`. Diagonal only at `r = R_a`.
pub fn line_covariance(pair: &OpAmpNoisePair, r: f64, omega: AngularFrequency) -> Result<CMatrix> {
    let r = positive("decomposition impedance", r)?;
    let (p, q) = line_amplitudes(r, omega);
    // a = (U/p + I/q)/2, a'^+ = (I/q - U/p)/2
    let m = nalgebra::Matrix2::new(0.5 / p, 0.5 / q, -0.5 / p, 0.5 / q);
    let sigma = nalgebra::Matrix2::new(pair.voltage, pair.cross, pair.cross, pair.current);
    let c = m * sigma * m.transpose();
    Ok(CMatrix::from_fn(2, 2, |i, j| {
        Complex64::new(c[(i, j)], 0.0)
    }))
}

/// Ideal op-amp (infinite gain, infinite input impedance, null output
/// impedance) between a left line and a right line, with reactive feedback.
#[derive(Clone)]
pub struct IdealOpAmp {
    pub label: String,
    pub left: NoiseLine,
    pub right: NoiseLine,
    feedback: ResponseFn,
    pub noise: OpAmpNoisePair,
}

impl fmt::Debug for IdealOpAmp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IdealOpAmp")
            .field("label", &self.label)
            .field("left", &self.left)
            .field("right", &self.right)
            .field("noise", &self.noise)
            .finish_non_exhaustive()
    }
}

impl IdealOpAmp {
    pub fn new(
        label: impl Into<String>,
        left: NoiseLine,
        right: NoiseLine,
        feedback: ResponseFn,
        noise: OpAmpNoisePair,
    ) -> Self {
        Self {
            label: label.into(),
            left,
            right,
            feedback,
            noise,
        }
    }

    pub fn with_element(
        label: impl Into<String>,
        left: NoiseLine,
        right: NoiseLine,
        element: ReactiveElement,
        noise: OpAmpNoisePair,
    ) -> Self {
        let feedback: ResponseFn = Arc::new(move |w| {
            element
                .impedance(w)
                .unwrap_or(Complex64::new(f64::NAN, f64::NAN))
        });
        Self::new(label, left, right, feedback, noise)
    }

    pub fn line_a(&self) -> String {
        format!("{}.a", self.label)
    }

    pub fn line_a_prime(&self) -> String {
        format!("{}.a'", self.label)
    }

    /// Feedback impedance at `omega`, checked to be purely reactive.
    pub fn feedback(&self, omega: AngularFrequency) -> Result<Complex64> {
        reactive_feedback((self.feedback)(omega))
    }

    /// Input covariance over `l, r, a, a'` for a decomposition impedance `r`.
    pub fn input_spectra(&self, r: f64, omega: AngularFrequency) -> Result<SpectrumTable> {
        let lines = SpectrumTable::thermal(&[self.left.clone(), self.right.clone()], omega)?;
        let noise = SpectrumTable::with_covariance(
            vec![self.line_a(), self.line_a_prime()],
            line_covariance(&self.noise, r, omega)?,
        )?;
        lines.merge(&noise)
    }
}

fn reactive_feedback(z: Complex64) -> Result<Complex64> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(NoiseError::Model("feedback impedance is not finite".into()));
    }
    let residual = if z.norm() == 0.0 {
        0.0
    } else {
        z.re.abs() / z.norm()
    };
    if residual > TOL_REACTIVE {
        return Err(NoiseError::NonReactive { residual });
    }
    Ok(z)
}

/// Four-line map of an op-amp plus the reconstruction of `U` and `I` on `a, a'`.
#[derive(Debug, Clone)]
pub struct OpAmpScattering {
    pub map: ScatteringMap,
    /// Coefficients of `U` on `(a, a'^+)`, V per unit field.
    pub voltage_row: [Complex64; 2],
    /// Coefficients of `I` on `(a, a'^+)`.
    pub current_row: [Complex64; 2],
    pub decomposition_impedance: f64,
    pub omega: AngularFrequency,
}

/// Outputs `l_out`, `r_out` of an op-amp over inputs `l, r, a, a'^+`:
///
/// ```text
/// l_out = -l_in + sqrt(2/hbar|w|R_l) U
/// r_out = -r_in - 2 Z_f/sqrt(R_r R_l) l_in + sqrt(2/hbar|w|R_r) ((R_l+Z_f)/R_l U - Z_f I)
/// ```
pub fn opamp_scattering(
    amp: &IdealOpAmp,
    r: f64,
    omega: AngularFrequency,
) -> Result<OpAmpScattering> {
    let r = positive("decomposition impedance", r)?;
    if omega.value() == 0.0 {
        return Err(NoiseError::Domain {
            quantity: "omega",
            value: 0.0,
            reason: "spectra are not evaluated at zero frequency",
        });
    }
    let zf = amp.feedback(omega)?;
    let (rl, rr) = (amp.left.impedance(), amp.right.impedance());
    let (p, q) = line_amplitudes(r, omega);
    let voltage_row = [Complex64::new(p, 0.0), Complex64::new(-p, 0.0)];
    let current_row = [Complex64::new(q, 0.0), Complex64::new(q, 0.0)];

    let quantum = omega.quantum_energy();
    let gl = (2.0 / (quantum * rl)).sqrt();
    let gr = (2.0 / (quantum * rr)).sqrt();
    let voltage_gain = (Complex64::new(rl, 0.0) + zf) / rl;
    let mix = |k: usize| gr * (voltage_gain * voltage_row[k] - zf * current_row[k]);

    let one = Complex64::new(1.0, 0.0);
    #[rustfmt::skip]
    let amplitudes = DMatrix::from_row_slice(2, 4, &[
        -one, ZERO, gl * voltage_row[0], gl * voltage_row[1],
        -2.0 * zf / (rr * rl).sqrt(), -one, mix(0), mix(1),
    ]);
    let map = ScatteringMap::new(
        vec![amp.left.label.clone(), amp.right.label.clone()],
        vec![
            InputMode::normal(amp.left.label.clone()),
            InputMode::normal(amp.right.label.clone()),
            InputMode::normal(amp.line_a()),
            InputMode::conjugated(amp.line_a_prime()),
        ],
        amplitudes,
    )?;
    Ok(OpAmpScattering {
        map,
        voltage_row,
        current_row,
        decomposition_impedance: r,
        omega,
    })
}

/// Readout of an op-amp whose input is driven by an ideal current source
/// (the `R_l -> infinity` limit of the right row of [`opamp_scattering`]):
/// `r_out = -r_in + sqrt(2/hbar|w|R_r) (U - Z_f I + Z_f I_s)`.
#[derive(Debug, Clone)]
pub struct CurrentDriveReadout {
    /// Row `r_out` over `r, a, a'^+`.
    pub map: ScatteringMap,
    /// Coefficient of the drive current `I_s` in `r_out`, per ampere.
    pub transimpedance: Complex64,
}

pub fn current_drive_readout(
    right: &NoiseLine,
    feedback: Complex64,
    noise_lines: (&str, &str),
    r: f64,
    omega: AngularFrequency,
) -> Result<CurrentDriveReadout> {
    let r = positive("decomposition impedance", r)?;
    let zf = reactive_feedback(feedback)?;
    let (p, q) = line_amplitudes(r, omega);
    let gr = (2.0 / (omega.quantum_energy() * right.impedance())).sqrt();
    let amplitudes = DMatrix::from_row_slice(
        1,
        3,
        &[
            Complex64::new(-1.0, 0.0),
            gr * (Complex64::new(p, 0.0) - zf * q),
            gr * (Complex64::new(-p, 0.0) - zf * q),
        ],
    );
    Ok(CurrentDriveReadout {
        map: ScatteringMap::new(
            vec![right.label.clone()],
            vec![
                InputMode::normal(right.label.clone()),
                InputMode::normal(noise_lines.0),
                InputMode::conjugated(noise_lines.1),
            ],
            amplitudes,
        )?,
        transimpedance: gr * zf,
    })
}

/// Commutator bookkeeping of a map.
#[derive(Debug, Clone, PartialEq)]
pub struct CommutatorReport {
    /// Per-row `sum_normal |c|^2 - sum_conj |c|^2 - 1`.
    pub row_residuals: Vec<f64>,
    /// Largest off-diagonal entry of `S J S^H`.
    pub cross_residual: f64,
    /// Relative error of the `[U, I]` reconstruction, op-amp maps only.
    pub voltage_current_residual: Option<f64>,
}

impl CommutatorReport {
    pub fn max_row_residual(&self) -> f64 {
        self.row_residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    pub fn worst(&self) -> f64 {
        self.max_row_residual()
            .max(self.cross_residual)
            .max(self.voltage_current_residual.unwrap_or(0.0))
    }
}

pub fn commutator_audit(map: &ScatteringMap) -> CommutatorReport {
    let k = map.commutator_matrix();
    let mut cross: f64 = 0.0;
    for i in 0..k.nrows() {
        for j in 0..k.ncols() {
            if i != j {
                cross = cross.max(k[(i, j)].norm());
            }
        }
    }
    CommutatorReport {
        row_residuals: map.row_residuals(),
        cross_residual: cross,
        voltage_current_residual: None,
    }
}

impl OpAmpScattering {
    /// Audit including `[U, I]`: the normal-minus-conjugated cross coefficient
    /// of the `U` and `I` rows must equal `hbar |w|`.
    pub fn audit(&self) -> CommutatorReport {
        let mut report = commutator_audit(&self.map);
        let (u, i) = (self.voltage_row, self.current_row);
        let cross = (u[0] * i[0].conj() - u[1] * i[1].conj()).re;
        let quantum = self.omega.quantum_energy();
        report.voltage_current_residual = Some((cross - quantum).abs() / quantum);
        report
    }
}

/// Occupation of one op-amp line at an effective temperature `theta`.
pub fn line_occupation(omega: AngularFrequency, theta: f64) -> Result<Occupation> {
    occupation_from_effective_temperature(omega, theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::propagate_spectra;
    use crate::spectra::HBAR;

    fn w(x: f64) -> AngularFrequency {
        AngularFrequency::new(x).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn amp(zf_cap: f64) -> IdealOpAmp {
        IdealOpAmp::with_element(
            "u1",
            NoiseLine::new("l", 1.0e3, 4.0).unwrap(),
            NoiseLine::new("r", 50.0, 300.0).unwrap(),
            ReactiveElement::Capacitor(zf_cap),
            OpAmpNoisePair::from_lines(0.15e6, 1.5, 1.5).unwrap(),
        )
    }

    #[test]
    fn unit_gain_adds_no_noise() {
        let m = amplify_mode(&GainStage::constant(c(1.0, 0.0), 300.0), w(1.0)).unwrap();
        assert_eq!(m.amplitudes()[(0, 0)], c(1.0, 0.0));
        assert_eq!(m.amplitudes()[(0, 1)], ZERO);
        assert!(m.inputs()[1].conjugated);
    }

    #[test]
    fn gain_two_with_vacuum_inputs() {
        let m = amplify_mode(&GainStage::constant(c(2.0, 0.0), 0.0), w(1.0)).unwrap();
        let input = SpectrumTable::diagonal([("a".into(), 0.5), ("b".into(), 0.5)]).unwrap();
        let out = propagate_spectra(&m, &input).unwrap();
        // oracle: |G|^2 sigma_a + (|G|^2 - 1) sigma_b
        assert!((out.occupation("a").unwrap() - (4.0 * 0.5 + 3.0 * 0.5)).abs() < 1e-15);
        assert!((out.occupation("a").unwrap() - 3.5).abs() < 1e-15);
    }

    #[test]
    fn attenuation_is_rejected() {
        let err = amplify_mode(&GainStage::constant(c(0.5, 0.0), 0.0), w(1.0));
        assert!(matches!(err, Err(NoiseError::GainBelowUnity(_))));
    }

    #[test]
    fn gain_three_residual() {
        let m = amplify_mode(&GainStage::constant(c(3.0, 0.0), 0.0), w(1.0)).unwrap();
        let report = commutator_audit(&m);
        assert!(report.max_row_residual() < 1e-12);
    }

    #[test]
    fn complex_frequency_dependent_gain() {
        let stage = GainStage::new(Arc::new(|w| c(1.0 + w.abs(), w.value())), 1.0);
        for x in [0.1, 1.0, -3.0, 40.0] {
            let m = amplify_mode(&stage, w(x)).unwrap();
            assert!(commutator_audit(&m).max_row_residual() < 1e-12);
        }
    }

    #[test]
    fn noise_matching_impedance() {
        let pair = OpAmpNoisePair::new(4.0e-18, 1.0e-18);
        let d = decompose_noise_sources(&pair, w(1.0)).unwrap();
        assert!((d.impedance - 2.0).abs() < 1e-15);
    }

    #[test]
    fn instrument_parameters_round_trip() {
        let omega = AngularFrequency::from_hz(1.0e5).unwrap();
        let pair = OpAmpNoisePair::from_lines(0.15e6, 1.5, 1.5).unwrap();
        let d = decompose_noise_sources(&pair, omega).unwrap();
        assert!((d.impedance / 0.15e6 - 1.0).abs() < 1e-12);
        assert!((d.theta_a.kelvin() / 1.5 - 1.0).abs() < 1e-12);
        assert!((d.theta_a_prime.kelvin() / 1.5 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn heisenberg_floor_gives_vacuum_lines() {
        // sigma_UU sigma_II = (hbar w / 2)^2 -> sqrt(.)/(hbar w) = 1/2
        let omega = w(3.0e5);
        let half = HBAR * 3.0e5 / 2.0;
        let pair = OpAmpNoisePair::new(half * 7.0, half / 7.0);
        assert!(pair.heisenberg_margin(omega).abs() < 1e-12 * half * half);
        let d = decompose_noise_sources(&pair, omega).unwrap();
        assert!((d.occupation_a.value() - 0.5).abs() < 1e-12);
        assert!((d.occupation_a_prime.value() - 0.5).abs() < 1e-12);

        let below = OpAmpNoisePair::new(half * 0.5, half);
        assert!(matches!(
            decompose_noise_sources(&below, omega),
            Err(NoiseError::Heisenberg { .. })
        ));
    }

    #[test]
    fn decomposition_rejects_nonpositive_spectra() {
        assert!(decompose_noise_sources(&OpAmpNoisePair::new(0.0, 1.0), w(1.0)).is_err());
        assert!(decompose_noise_sources(&OpAmpNoisePair::new(1.0, -1.0), w(1.0)).is_err());
    }

    #[test]
    fn decompose_then_recombine() {
        let omega = w(7.0e4);
        for (uu, ii, ui) in [
            (3e-17, 2e-27, 0.0),
            (5e-18, 9e-26, 1e-23),
            (1e-16, 1e-24, -4e-22),
        ] {
            let pair = OpAmpNoisePair {
                voltage: uu,
                current: ii,
                cross: ui,
            };
            let d = decompose_noise_sources(&pair, omega).unwrap();
            let back = recombine_noise_sources(
                d.impedance,
                d.occupation_a.value(),
                d.occupation_a_prime.value(),
                omega,
            );
            assert!((back.voltage / uu - 1.0).abs() < 1e-12);
            assert!((back.current / ii - 1.0).abs() < 1e-12);
            assert!((back.cross - ui).abs() < 1e-12 * (uu * ii).sqrt());
        }
    }

    #[test]
    fn left_self_coefficient_and_signal_gain() {
        let omega = AngularFrequency::from_hz(1.0e5).unwrap();
        let a = amp(1e-11);
        let s = opamp_scattering(&a, 0.15e6, omega).unwrap();
        assert_eq!(s.map.amplitudes()[(0, 0)], c(-1.0, 0.0));
        assert_eq!(s.map.amplitudes()[(0, 1)], ZERO);
        let zf = a.feedback(omega).unwrap();
        let gain = s.map.amplitudes()[(1, 0)].norm();
        assert!((gain - 2.0 * zf.norm() / (1.0e3f64 * 50.0).sqrt()).abs() < 1e-12 * gain);
    }

    #[test]
    fn noise_lines_decorrelate_at_matching_impedance() {
        // oracle: expand <a . a'^+> = (sigma_II/q^2 - sigma_UU/p^2)/4 by hand
        let omega = w(2.0e5);
        let pair = OpAmpNoisePair::new(2.0e-17, 3.0e-27);
        let ra = (pair.voltage / pair.current).sqrt();
        let cov = line_covariance(&pair, ra, omega).unwrap();
        assert!(cov[(0, 1)].norm() < 1e-12 * cov[(0, 0)].norm());
        let off = line_covariance(&pair, 3.0 * ra, omega).unwrap();
        let half = HBAR * 2.0e5 / 2.0;
        let (p2, q2) = (half * 3.0 * ra, half / (3.0 * ra));
        let hand = (pair.current / q2 - pair.voltage / p2) / 4.0;
        assert!((off[(0, 1)].re - hand).abs() < 1e-12 * hand.abs());
    }

    #[test]
    fn opamp_rows_satisfy_commutators() {
        let omega = AngularFrequency::from_hz(1.0e5).unwrap();
        let s = opamp_scattering(&amp(1e-11), 0.15e6, omega).unwrap();
        let report = s.audit();
        assert!(report.worst() < 1e-10, "{report:?}");
        assert!(report.voltage_current_residual.unwrap() < 1e-12);
    }

    #[test]
    fn non_reactive_feedback_is_rejected() {
        let bad = IdealOpAmp::new(
            "u",
            NoiseLine::new("l", 1.0, 1.0).unwrap(),
            NoiseLine::new("r", 1.0, 1.0).unwrap(),
            Arc::new(|_| c(10.0, 1.0)),
            OpAmpNoisePair::new(1.0, 1.0),
        );
        assert!(matches!(
            opamp_scattering(&bad, 1.0, w(1.0)),
            Err(NoiseError::NonReactive { .. })
        ));
    }

    #[test]
    fn current_drive_is_the_open_left_port_limit() {
        let omega = AngularFrequency::from_hz(1.0e5).unwrap();
        let noise = OpAmpNoisePair::from_lines(0.15e6, 1.5, 1.5).unwrap();
        let element = ReactiveElement::Capacitor(1e-11);
        let right = NoiseLine::new("r", 50.0, 300.0).unwrap();
        let drive = current_drive_readout(
            &right,
            element.impedance(omega).unwrap(),
            ("u.a", "u.a'"),
            0.15e6,
            omega,
        )
        .unwrap();
        let wide = IdealOpAmp::with_element(
            "u",
            NoiseLine::new("l", 1e14, 0.0).unwrap(),
            right,
            element,
            noise,
        );
        let s = opamp_scattering(&wide, 0.15e6, omega).unwrap();
        for (k, col) in [(0, 1), (1, 2), (2, 3)] {
            let a = drive.map.amplitudes()[(0, k)];
            let b = s.map.amplitudes()[(1, col)];
            assert!((a - b).norm() < 1e-6 * a.norm(), "{a} vs {b}");
        }
        assert!(commutator_audit(&drive.map).max_row_residual() < 1e-10);
    }
}
