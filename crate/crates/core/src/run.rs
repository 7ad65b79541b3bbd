//! Frequency sweeps of a parsed netlist and their CSV/JSON output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::accelerometer::sensitivity_at;
use crate::amplifier::{
    amplify_mode, line_covariance, opamp_scattering, GainStage, IdealOpAmp, OpAmpNoisePair,
};
use crate::error::{NoiseError, Result};
use crate::estimator::{
    added_noise_spectrum, estimator_from_map, integrate_band, BandBudget, NoiseBudget,
};
use crate::netlist::{Declaration, Feedback, NetlistDocument};
use crate::network::{
    scattering_from_admittance, NodalAdmittance, NoiseLine, ReactiveElement, ScatteringMap,
    SpectrumTable,
};
use crate::spectra::{
    occupation_from_effective_temperature, symmetrized_occupation, AngularFrequency,
};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Model(#[from] NoiseError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Per-frequency budgets of one `measure`.
#[derive(Debug, Clone)]
pub struct EstimatorSeries {
    pub label: String,
    pub units: &'static str,
    pub budgets: Vec<NoiseBudget>,
    pub band: BandBudget,
    /// Proof mass for force estimators, used to report acceleration.
    pub mass: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub frequencies_hz: Vec<f64>,
    pub estimators: Vec<EstimatorSeries>,
}

struct Circuit {
    lines: Vec<NoiseLine>,
    passive: Vec<usize>,
    elements: Vec<(ReactiveElement, usize, usize)>,
    opamps: Vec<(String, usize, usize, ReactiveElement, f64, f64)>,
    gains: Vec<(String, usize, Complex64, f64)>,
}

impl Circuit {
    fn new(doc: &NetlistDocument) -> Result<Self> {
        let mut lines = Vec::new();
        for d in &doc.declarations {
            if let Declaration::Line {
                name,
                resistance,
                temperature,
            } = d
            {
                lines.push(NoiseLine::new(name.clone(), *resistance, *temperature)?);
            }
        }
        let index = |name: &str| {
            lines
                .iter()
                .position(|l: &NoiseLine| l.label == name)
                .ok_or_else(|| NoiseError::UnknownLine(name.to_string()))
        };
        let mut active = vec![false; lines.len()];
        let mut elements = Vec::new();
        let mut opamps = Vec::new();
        let mut gains = Vec::new();
        for d in &doc.declarations {
            match d {
                Declaration::Capacitor {
                    capacitance, ports, ..
                } => elements.push((
                    ReactiveElement::Capacitor(*capacitance),
                    index(&ports.0)?,
                    index(&ports.1)?,
                )),
                Declaration::Inductor {
                    inductance, ports, ..
                } => elements.push((
                    ReactiveElement::Inductor(*inductance),
                    index(&ports.0)?,
                    index(&ports.1)?,
                )),
                Declaration::OpAmp {
                    name,
                    left,
                    right,
                    feedback,
                    r_a,
                    theta_a,
                } => {
                    let (l, r) = (index(left)?, index(right)?);
                    active[l] = true;
                    active[r] = true;
                    let element = match feedback {
                        Feedback::Capacitor(c) => ReactiveElement::Capacitor(*c),
                        Feedback::Inductor(h) => ReactiveElement::Inductor(*h),
                    };
                    opamps.push((name.clone(), l, r, element, *r_a, *theta_a));
                }
                Declaration::Gain {
                    name,
                    input,
                    gain,
                    noise_temperature,
                } => {
                    let i = index(input)?;
                    active[i] = true;
                    gains.push((name.clone(), i, *gain, *noise_temperature));
                }
                _ => {}
            }
        }
        // passive indices are positions within the passive block
        let passive: Vec<usize> = (0..lines.len()).filter(|&i| !active[i]).collect();
        let local = |i: usize| passive.iter().position(|&p| p == i).expect("passive line");
        let elements = elements
            .into_iter()
            .map(|(e, i, j)| (e, local(i), local(j)))
            .collect();
        Ok(Self {
            lines,
            passive,
            elements,
            opamps,
            gains,
        })
    }

    fn blocks(&self, omega: AngularFrequency) -> Result<Vec<ScatteringMap>> {
        let mut blocks = Vec::new();
        if !self.passive.is_empty() {
            let mut nodal = NodalAdmittance::new(self.passive.len());
            for (element, i, j) in &self.elements {
                nodal.bridge(*i, *j, element.admittance(omega)?);
            }
            let lines: Vec<NoiseLine> = self
                .passive
                .iter()
                .map(|&i| self.lines[i].clone())
                .collect();
            blocks.push(scattering_from_admittance(&nodal.build()?, &lines)?);
        }
        for (name, l, r, element, r_a, theta_a) in &self.opamps {
            let amp = IdealOpAmp::with_element(
                name.clone(),
                self.lines[*l].clone(),
                self.lines[*r].clone(),
                *element,
                OpAmpNoisePair::from_lines(*r_a, *theta_a, *theta_a)?,
            );
            blocks.push(opamp_scattering(&amp, *r_a, omega)?.map);
        }
        for (name, i, g, t_b) in &self.gains {
            let stage = GainStage::constant(*g, *t_b)
                .with_labels(self.lines[*i].label.clone(), format!("{name}.b"));
            blocks.push(amplify_mode(&stage, omega)?);
        }
        Ok(blocks)
    }

    fn spectra(&self, omega: AngularFrequency) -> Result<SpectrumTable> {
        let mut table = SpectrumTable::thermal(&self.lines, omega)?;
        for (name, _, _, _, r_a, theta_a) in &self.opamps {
            occupation_from_effective_temperature(omega, *theta_a)?;
            let pair = OpAmpNoisePair::from_lines(*r_a, *theta_a, *theta_a)?;
            table = table.merge(&SpectrumTable::with_covariance(
                vec![format!("{name}.a"), format!("{name}.a'")],
                line_covariance(&pair, *r_a, omega)?,
            )?)?;
        }
        for (name, _, _, t_b) in &self.gains {
            let sigma = symmetrized_occupation(omega, *t_b)?.value();
            table = table.merge(&SpectrumTable::diagonal([(format!("{name}.b"), sigma)])?)?;
        }
        Ok(table)
    }
}

/// Evaluates every `measure` over the sweep, in frequency order.
pub fn evaluate(doc: &NetlistDocument) -> Result<SweepOutput> {
    let frequencies_hz = doc.sweep().frequencies_hz();
    let measures: Vec<_> = doc.measures().cloned().collect();
    let mut per_measure: Vec<Vec<NoiseBudget>> = vec![Vec::new(); measures.len()];

    let (units, mass) = match doc.preset() {
        Some(preset) => {
            let config = preset.accelerometer();
            for &f in &frequencies_hz {
                let report = sensitivity_at(&config, AngularFrequency::from_hz(f)?)?;
                for series in per_measure.iter_mut() {
                    series.push(report.budget.clone());
                }
            }
            ("N^2/Hz", Some(config.mass))
        }
        None => {
            let circuit = Circuit::new(doc)?;
            for &f in &frequencies_hz {
                let omega = AngularFrequency::from_hz(f)?;
                let blocks = circuit.blocks(omega)?;
                let spectra = circuit.spectra(omega)?;
                for (m, series) in measures.iter().zip(per_measure.iter_mut()) {
                    let block = blocks
                        .iter()
                        .find(|b| b.outputs().contains(&m.line))
                        .ok_or_else(|| NoiseError::UnknownLine(m.line.clone()))?;
                    if block.input_index(&m.signal).is_none() {
                        return Err(NoiseError::Model(format!(
                            "signal `{}` does not reach line `{}`",
                            m.signal, m.line
                        )));
                    }
                    let row = estimator_from_map(block, &m.line, &m.signal, "J")?;
                    let budget = added_noise_spectrum(&row, &spectra)?;
                    series.push(budget.scaled(omega.quantum_energy()));
                }
            }
            ("J", None)
        }
    };

    let sweep = doc.sweep();
    let estimators = measures
        .into_iter()
        .zip(per_measure)
        .map(|(m, budgets)| {
            Ok(EstimatorSeries {
                band: integrate_band(&frequencies_hz, &budgets, (sweep.f_min, sweep.f_max))?,
                label: m.label,
                units,
                budgets,
                mass,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepOutput {
        frequencies_hz,
        estimators,
    })
}

fn num(x: f64) -> String {
    format!("{x:.8e}")
}

pub fn spectra_csv(out: &SweepOutput) -> String {
    let mut s = String::from("frequency_Hz");
    for e in &out.estimators {
        write!(s, ",{}_total", e.label).unwrap();
        for t in &e.budgets[0].terms {
            write!(s, ",{}_{}", e.label, t.source).unwrap();
        }
    }
    s.push('\n');
    for (k, f) in out.frequencies_hz.iter().enumerate() {
        s.push_str(&num(*f));
        for e in &out.estimators {
            let b = &e.budgets[k];
            write!(s, ",{}", num(b.total)).unwrap();
            for t in &b.terms {
                write!(s, ",{}", num(t.value)).unwrap();
            }
        }
        s.push('\n');
    }
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct BudgetRow {
    pub estimator: String,
    pub source: String,
    pub band_integral: f64,
    pub band_mean_psd: f64,
    pub fraction: f64,
    pub dominant: Vec<String>,
    pub acceleration_asd: Option<f64>,
}

/// Band rows of every estimator: one per source, then `total`.
pub fn budget_rows(out: &SweepOutput) -> Vec<BudgetRow> {
    let mut rows = Vec::new();
    for e in &out.estimators {
        let band = &e.band;
        let asd = |mean: f64| e.mass.map(|m| mean.sqrt() / m);
        for (source, integral) in &band.terms {
            let mean = band.mean(source).unwrap_or(f64::NAN);
            rows.push(BudgetRow {
                estimator: e.label.clone(),
                source: source.clone(),
                band_integral: *integral,
                band_mean_psd: mean,
                fraction: integral / band.total,
                dominant: if band.dominant.contains(source) {
                    vec![source.clone()]
                } else {
                    Vec::new()
                },
                acceleration_asd: asd(mean),
            });
        }
        rows.push(BudgetRow {
            estimator: e.label.clone(),
            source: "total".into(),
            band_integral: band.total,
            band_mean_psd: band.mean_total,
            fraction: 1.0,
            dominant: band.dominant.clone(),
            acceleration_asd: asd(band.mean_total),
        });
    }
    rows
}

/// `dominant` is `yes`/`no` on source rows and the dominant labels
/// (`;`-separated) on the `total` row.
pub fn budget_csv(out: &SweepOutput) -> String {
    let mut s = String::from(
        "estimator,source,band_integral,band_mean_psd,fraction,dominant,acceleration_asd\n",
    );
    for r in budget_rows(out) {
        let dominant = if r.source == "total" {
            r.dominant.join(";")
        } else if r.dominant.is_empty() {
            "no".into()
        } else {
            "yes".into()
        };
        writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.estimator,
            r.source,
            num(r.band_integral),
            num(r.band_mean_psd),
            num(r.fraction),
            dominant,
            r.acceleration_asd.map(num).unwrap_or_default()
        )
        .unwrap();
    }
    s
}

pub fn budget_json(out: &SweepOutput) -> String {
    let mut s = serde_json::to_string_pretty(&budget_rows(out)).expect("rows serialize");
    s.push('\n');
    s
}

fn write_file(path: PathBuf, contents: &str) -> std::result::Result<(), RunError> {
    std::fs::write(&path, contents).map_err(|source| RunError::Io { path, source })
}

/// Evaluates the document and writes `spectra.csv`, `budget.csv` and
/// optionally `budget.json` into `dir`.
pub fn run(
    doc: &NetlistDocument,
    dir: &Path,
    json: bool,
) -> std::result::Result<SweepOutput, RunError> {
    let out = evaluate(doc)?;
    std::fs::create_dir_all(dir).map_err(|source| RunError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    write_file(dir.join("spectra.csv"), &spectra_csv(&out))?;
    write_file(dir.join("budget.csv"), &budget_csv(&out))?;
    if json {
        write_file(dir.join("budget.json"), &budget_json(&out))?;
    }
    Ok(out)
}
