//! Calibrated estimators and per-source noise budgets.
//!
//! A readout row `sum_j c_j x_j` that carries a signal with coefficient `g`
//! is divided by `g`, so it reads as the signal plus an equivalent input
//! noise `sum_j mu_j x_j`. Its spectrum splits into per-source terms
//! `|mu_j|^2 sigma_j`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{positive, NoiseError, Result};
use crate::network::{InputMode, ScatteringMap, SpectrumTable};

/// Relative size of an off-diagonal covariance treated as a correlation.
const CORRELATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorRow {
    pub signal: Complex64,
    pub terms: Vec<(InputMode, Complex64)>,
    pub units: String,
}

/// Divides a readout row by its signal coefficient.
pub fn normalize_estimator(
    readout: &[(InputMode, Complex64)],
    signal: Complex64,
    units: impl Into<String>,
) -> Result<EstimatorRow> {
    if signal.norm() == 0.0 || !signal.norm().is_finite() {
        return Err(NoiseError::ZeroSignal);
    }
    Ok(EstimatorRow {
        signal: Complex64::new(1.0, 0.0),
        terms: readout
            .iter()
            .map(|(mode, c)| (mode.clone(), c / signal))
            .collect(),
        units: units.into(),
    })
}

/// Estimator of the field entering on `signal_line`, read from output `readout`.
/// The signal line's own fluctuations stay in the budget. A conjugated signal
/// column estimates the conjugate field.
pub fn estimator_from_map(
    map: &ScatteringMap,
    readout: &str,
    signal_line: &str,
    units: impl Into<String>,
) -> Result<EstimatorRow> {
    let row = map.row(readout)?;
    let signal = row
        .iter()
        .find(|(m, _)| m.line == signal_line)
        .map(|(_, c)| *c)
        .ok_or_else(|| NoiseError::UnknownLine(signal_line.to_string()))?;
    normalize_estimator(&row, signal, units)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetTerm {
    pub source: String,
    pub conjugated: bool,
    pub value: f64,
}

/// Noise budget of one estimator at one frequency.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseBudget {
    pub terms: Vec<BudgetTerm>,
    pub total: f64,
    pub dominant: Vec<String>,
}

impl NoiseBudget {
    fn from_terms(terms: Vec<BudgetTerm>) -> Self {
        let total = terms.iter().map(|t| t.value).sum();
        let dominant = dominant_sources(terms.iter().map(|t| (t.source.as_str(), t.value)));
        Self {
            terms,
            total,
            dominant,
        }
    }

    pub fn term(&self, source: &str) -> Option<f64> {
        self.terms
            .iter()
            .find(|t| t.source == source)
            .map(|t| t.value)
    }

    /// Budget with one source removed.
    pub fn without(&self, source: &str) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .filter(|t| t.source != source)
                .cloned()
                .collect(),
        )
    }

    /// Every term multiplied by `factor` (e.g. `hbar |w|` to get energies).
    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .map(|t| BudgetTerm {
                    value: t.value * factor,
                    ..t.clone()
                })
                .collect(),
        )
    }

    pub fn fraction(&self, source: &str) -> Option<f64> {
        self.term(source).map(|v| v / self.total)
    }
}

/// Labels of the largest terms; ties are all reported.
fn dominant_sources<'a>(terms: impl Iterator<Item = (&'a str, f64)>) -> Vec<String> {
    let mut best: Vec<String> = Vec::new();
    let mut best_value = f64::NEG_INFINITY;
    for (label, value) in terms {
        if value > best_value {
            best_value = value;
            best.clear();
            best.push(label.to_string());
        } else if value == best_value {
            best.push(label.to_string());
        }
    }
    best
}

/// `|mu_alpha|^2 sigma_alpha` for every source of the estimator.
pub fn added_noise_spectrum(row: &EstimatorRow, input: &SpectrumTable) -> Result<NoiseBudget> {
    let idx = row
        .terms
        .iter()
        .map(|(m, _)| input.index(&m.line))
        .collect::<Result<Vec<_>>>()?;
    let cov = input.covariance();
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            let scale = (cov[(i, i)].re * cov[(j, j)].re).sqrt();
            if i != j && cov[(i, j)].norm() > CORRELATION_TOL * scale {
                return Err(NoiseError::CorrelatedInputs(
                    input.labels()[i].clone(),
                    input.labels()[j].clone(),
                ));
            }
        }
    }
    let terms = row
        .terms
        .iter()
        .zip(&idx)
        .map(|((mode, mu), &i)| BudgetTerm {
            source: mode.line.clone(),
            conjugated: mode.conjugated,
            value: mu.norm_sqr() * cov[(i, i)].re,
        })
        .collect();
    Ok(NoiseBudget::from_terms(terms))
}

/// Band-integrated budget over a frequency sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandBudget {
    pub band_hz: (f64, f64),
    /// `(source, integral over the band)`, in PSD units times Hz.
    pub terms: Vec<(String, f64)>,
    pub total: f64,
    /// Integral divided by the band width; the point value for a single-point band.
    pub mean_total: f64,
    pub dominant: Vec<String>,
}

impl BandBudget {
    pub fn mean(&self, source: &str) -> Option<f64> {
        let width = self.band_hz.1 - self.band_hz.0;
        let single = width <= 0.0;
        self.terms.iter().find(|(s, _)| s == source).map(
            |(_, v)| {
                if single {
                    *v
                } else {
                    v / width
                }
            },
        )
    }
}

/// Trapezoidal integral of each term over the sweep points inside `band`.
/// Frequencies must be ascending and every budget must list the same sources.
pub fn integrate_band(
    frequencies_hz: &[f64],
    budgets: &[NoiseBudget],
    band: (f64, f64),
) -> Result<BandBudget> {
    if frequencies_hz.len() != budgets.len() {
        return Err(NoiseError::DimensionMismatch {
            expected: frequencies_hz.len(),
            actual: budgets.len(),
        });
    }
    let inside: Vec<usize> = (0..frequencies_hz.len())
        .filter(|&i| frequencies_hz[i] >= band.0 && frequencies_hz[i] <= band.1)
        .collect();
    let first = *inside
        .first()
        .ok_or_else(|| NoiseError::Model("no sweep point inside the band".into()))?;
    let sources: Vec<String> = budgets[first]
        .terms
        .iter()
        .map(|t| t.source.clone())
        .collect();

    let value = |i: usize, k: usize| budgets[i].terms.get(k).map_or(0.0, |t| t.value);
    let (lo, hi) = (
        frequencies_hz[first],
        frequencies_hz[*inside.last().unwrap()],
    );
    let terms: Vec<(String, f64)> = sources
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let v = if inside.len() == 1 {
                value(first, k)
            } else {
                inside
                    .windows(2)
                    .map(|p| {
                        0.5 * (value(p[0], k) + value(p[1], k))
                            * (frequencies_hz[p[1]] - frequencies_hz[p[0]])
                    })
                    .sum()
            };
            (s.clone(), v)
        })
        .collect();
    let total = terms.iter().map(|(_, v)| v).sum();
    let width = hi - lo;
    Ok(BandBudget {
        band_hz: (lo, hi),
        dominant: dominant_sources(terms.iter().map(|(s, v)| (s.as_str(), *v))),
        mean_total: if width > 0.0 { total / width } else { total },
        terms,
        total,
    })
}

/// Output-to-input signal-to-noise ratio of a gain stage,
/// `theta_a / (theta_a + (1 - 1/|G|^2) theta_b)`.
pub fn snr_degradation(theta_a: f64, theta_b: f64, gain: f64) -> Result<f64> {
    let theta_a = positive("theta_a", theta_a)?;
    let g2 = gain * gain;
    Ok(theta_a / (theta_a + (1.0 - 1.0 / g2) * theta_b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplifier::{amplify_mode, GainStage};
    use crate::spectra::AngularFrequency;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn gain_estimator(g: f64) -> EstimatorRow {
        let stage = GainStage::constant(c(g, 0.0), 0.0).with_labels("c", "b");
        let map = amplify_mode(&stage, AngularFrequency::new(1.0).unwrap()).unwrap();
        estimator_from_map(&map, "c", "c", "field").unwrap()
    }

    #[test]
    fn amplifier_estimator_coefficients() {
        let g = 5.0;
        let row = gain_estimator(g);
        assert_eq!(row.terms[0].1, c(1.0, 0.0));
        assert!(row.terms[1].0.conjugated);
        let expected = (1.0 - 1.0 / (g * g)).sqrt();
        assert!((row.terms[1].1.norm() - expected).abs() < 1e-15);
        let large = gain_estimator(1e8);
        assert!((large.terms[1].1.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn normalization_is_idempotent() {
        let row = gain_estimator(3.0);
        let again = normalize_estimator(&row.terms, row.signal, row.units.clone()).unwrap();
        assert_eq!(again, row);
    }

    #[test]
    fn zero_signal_is_rejected() {
        let r = normalize_estimator(&[(InputMode::normal("x"), c(1.0, 0.0))], c(0.0, 0.0), "u");
        assert_eq!(r, Err(NoiseError::ZeroSignal));
    }

    #[test]
    fn single_line_budget() {
        let row = normalize_estimator(&[(InputMode::normal("x"), c(1.0, 0.0))], c(1.0, 0.0), "u")
            .unwrap();
        let input = SpectrumTable::diagonal([("x".into(), 2.75)]).unwrap();
        let b = added_noise_spectrum(&row, &input).unwrap();
        assert_eq!(b.total, 2.75);
        assert_eq!(b.dominant, vec!["x".to_string()]);
    }

    #[test]
    fn sqrt_two_gain_with_vacuum() {
        let row = gain_estimator(2f64.sqrt());
        let input = SpectrumTable::diagonal([("c".into(), 0.5), ("b".into(), 0.5)]).unwrap();
        let b = added_noise_spectrum(&row, &input).unwrap();
        // oracle: 1/2 + (1 - 1/2) 1/2
        assert!((b.total - 0.75).abs() < 1e-15);
    }

    #[test]
    fn large_gain_thermal_sum() {
        use crate::spectra::{occupation_from_effective_temperature, K_B};
        let omega = AngularFrequency::from_hz(1.0e6).unwrap();
        let theta = 4.0;
        let s = occupation_from_effective_temperature(omega, theta)
            .unwrap()
            .value();
        let row = gain_estimator(1e6);
        let input = SpectrumTable::diagonal([("c".into(), s), ("b".into(), s)]).unwrap();
        let energy = added_noise_spectrum(&row, &input).unwrap().total * omega.quantum_energy();
        assert!((energy / (K_B * 2.0 * theta) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn missing_line() {
        let row = gain_estimator(2.0);
        let input = SpectrumTable::diagonal([("c".into(), 0.5)]).unwrap();
        assert!(matches!(
            added_noise_spectrum(&row, &input),
            Err(NoiseError::UnknownLine(_))
        ));
    }

    #[test]
    fn correlated_inputs_are_refused() {
        let row = gain_estimator(2.0);
        let cov = crate::network::CMatrix::from_row_slice(
            2,
            2,
            &[c(1.0, 0.0), c(0.3, 0.0), c(0.3, 0.0), c(1.0, 0.0)],
        );
        let input = SpectrumTable::with_covariance(vec!["c".into(), "b".into()], cov).unwrap();
        assert!(matches!(
            added_noise_spectrum(&row, &input),
            Err(NoiseError::CorrelatedInputs(..))
        ));
    }

    #[test]
    fn snr_values() {
        assert!((snr_degradation(2.0, 2.0, 1e9).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(snr_degradation(2.0, 0.0, 10.0).unwrap(), 1.0);
        // oracle: 1 / (2 - 0.01)
        assert!((snr_degradation(1.0, 1.0, 10.0).unwrap() - 1.0 / 1.99).abs() < 1e-15);
        assert!((snr_degradation(1.0, 1.0, 10.0).unwrap() - 0.502_51).abs() < 1e-5);
        assert!(snr_degradation(0.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn ties_report_every_source() {
        let b = NoiseBudget::from_terms(vec![
            BudgetTerm {
                source: "x".into(),
                conjugated: false,
                value: 1.0,
            },
            BudgetTerm {
                source: "y".into(),
                conjugated: true,
                value: 1.0,
            },
            BudgetTerm {
                source: "z".into(),
                conjugated: false,
                value: 0.5,
            },
        ]);
        assert_eq!(b.dominant, vec!["x".to_string(), "y".to_string()]);
    }

    #[test]
    fn band_integral_of_flat_terms() {
        let b = NoiseBudget::from_terms(vec![
            BudgetTerm {
                source: "x".into(),
                conjugated: false,
                value: 2.0,
            },
            BudgetTerm {
                source: "y".into(),
                conjugated: false,
                value: 3.0,
            },
        ]);
        let f = [1.0, 2.0, 4.0, 8.0];
        let band = integrate_band(&f, &vec![b.clone(); 4], (2.0, 8.0)).unwrap();
        assert_eq!(band.band_hz, (2.0, 8.0));
        assert!((band.total - 30.0).abs() < 1e-12);
        assert!((band.mean_total - 5.0).abs() < 1e-12);
        assert_eq!(band.mean("y"), Some(3.0));
        assert_eq!(band.dominant, vec!["y".to_string()]);

        let single = integrate_band(&f, &vec![b; 4], (4.0, 4.0)).unwrap();
        assert_eq!(single.mean_total, 5.0);
        assert!(integrate_band(&f, &[], (1.0, 2.0)).is_err());
    }
}
