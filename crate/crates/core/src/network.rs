//! Passive quantum networks.
//!
//! Every dissipative element is a semi-infinite line of characteristic
//! impedance `R_n` whose end carries an inward field `a_in` and an outward
//! field `a_out`. With the normalization used here
//!
//! ```text
//! I = R^-1/2 sqrt(hbar|w|/2) (a_out - a_in)
//! U = R^+1/2 sqrt(hbar|w|/2) (a_out + a_in)
//! ```
//!
//! and a reactive multipole `U = -Z I` (`Z^H = -Z`), the lines scatter through
//! `a_out = S a_in` with `S = (z - 1)(z + 1)^-1`, `z = R^-1/2 Z R^-1/2`.
//! The same network written on nodes, `I = -Y U`, gives `S = (1 + y)^-1 (1 - y)`.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{non_negative, positive, NoiseError, Result};
use crate::spectra::{symmetrized_occupation, AngularFrequency};

pub type CMatrix = DMatrix<Complex64>;

/// Relative tolerance on `|Z + Z^H| / |Z|`.
pub const TOL_REACTIVE: f64 = 1e-9;
/// Tolerance on generalized unitarity residuals.
pub const TOL_UNITARY: f64 = 1e-10;
/// Largest accepted condition estimate of `(z + 1)`.
pub const MAX_CONDITION: f64 = 1e12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A semi-infinite line terminating one port.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseLine {
    pub label: String,
    impedance: f64,
    temperature: f64,
}

impl NoiseLine {
    pub fn new(label: impl Into<String>, impedance: f64, temperature: f64) -> Result<Self> {
        Ok(Self {
            label: label.into(),
            impedance: positive("line impedance", impedance)?,
            temperature: non_negative("line temperature", temperature)?,
        })
    }

    pub fn impedance(&self) -> f64 {
        self.impedance
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }
}

/// Anti-Hermitian matrix of a lossless multipole, evaluated at one frequency.
///
/// Used both for impedance (`U = -Z I`) and admittance (`I = -Y U`) descriptions.
#[derive(Debug, Clone, PartialEq)]
pub struct ReactiveMultipole {
    matrix: CMatrix,
}

impl ReactiveMultipole {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(NoiseError::DimensionMismatch {
                expected: matrix.nrows(),
                actual: matrix.ncols(),
            });
        }
        let residual = reactive_residual(&matrix);
        if residual > TOL_REACTIVE {
            return Err(NoiseError::NonReactive { residual });
        }
        Ok(Self { matrix })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            matrix: CMatrix::zeros(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
}

/// `|M + M^H|_F / |M|_F`, or 0 for the zero matrix.
pub fn reactive_residual(matrix: &CMatrix) -> f64 {
    let norm = matrix.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (matrix + matrix.adjoint()).norm() / norm
}

/// One scattering coefficient and whether it multiplies the conjugated
/// (frequency-reversed) input field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeCoefficient {
    pub amplitude: Complex64,
    pub conjugated: bool,
}

/// An input column: a line, entering either normally or conjugated.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InputMode {
    pub line: String,
    pub conjugated: bool,
}

impl InputMode {
    pub fn normal(line: impl Into<String>) -> Self {
        Self {
            line: line.into(),
            conjugated: false,
        }
    }

    pub fn conjugated(line: impl Into<String>) -> Self {
        Self {
            line: line.into(),
            conjugated: true,
        }
    }
}

/// Linear map from input modes to output fields at one frequency.
///
/// Rows are output fields, columns are input modes. Passive maps are square
/// with every column normal; amplification adds conjugated columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringMap {
    outputs: Vec<String>,
    inputs: Vec<InputMode>,
    amplitudes: CMatrix,
}

impl ScatteringMap {
    pub fn new(outputs: Vec<String>, inputs: Vec<InputMode>, amplitudes: CMatrix) -> Result<Self> {
        if amplitudes.nrows() != outputs.len() {
            return Err(NoiseError::DimensionMismatch {
                expected: outputs.len(),
                actual: amplitudes.nrows(),
            });
        }
        if amplitudes.ncols() != inputs.len() {
            return Err(NoiseError::DimensionMismatch {
                expected: inputs.len(),
                actual: amplitudes.ncols(),
            });
        }
        Ok(Self {
            outputs,
            inputs,
            amplitudes,
        })
    }

    pub fn identity(lines: &[String]) -> Self {
        Self {
            outputs: lines.to_vec(),
            inputs: lines.iter().map(InputMode::normal).collect(),
            amplitudes: CMatrix::identity(lines.len(), lines.len()),
        }
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    pub fn inputs(&self) -> &[InputMode] {
        &self.inputs
    }

    pub fn amplitudes(&self) -> &CMatrix {
        &self.amplitudes
    }

    pub fn coefficient(&self, row: usize, col: usize) -> ModeCoefficient {
        ModeCoefficient {
            amplitude: self.amplitudes[(row, col)],
            conjugated: self.inputs[col].conjugated,
        }
    }

    pub fn output_index(&self, label: &str) -> Result<usize> {
        self.outputs
            .iter()
            .position(|o| o == label)
            .ok_or_else(|| NoiseError::UnknownLine(label.to_string()))
    }

    pub fn input_index(&self, line: &str) -> Option<usize> {
        self.inputs.iter().position(|m| m.line == line)
    }

    /// Coefficients of one output row, labelled by input mode.
    pub fn row(&self, label: &str) -> Result<Vec<(InputMode, Complex64)>> {
        let i = self.output_index(label)?;
        Ok(self
            .inputs
            .iter()
            .cloned()
            .zip(self.amplitudes.row(i).iter().copied())
            .collect())
    }

    pub fn is_passive(&self) -> bool {
        self.inputs.iter().all(|m| !m.conjugated)
    }

    /// `K = S J S^H` with `J = diag(+1 normal, -1 conjugated)`; equals the
    /// identity when the outputs obey free-field commutators.
    pub fn commutator_matrix(&self) -> CMatrix {
        let mut weighted = self.amplitudes.clone();
        for (j, mode) in self.inputs.iter().enumerate() {
            if mode.conjugated {
                weighted.column_mut(j).neg_mut();
            }
        }
        &weighted * self.amplitudes.adjoint()
    }

    /// Per-row `sum_normal |c|^2 - sum_conj |c|^2 - 1`.
    pub fn row_residuals(&self) -> Vec<f64> {
        (0..self.outputs.len())
            .map(|i| {
                let balance: f64 = self
                    .amplitudes
                    .row(i)
                    .iter()
                    .zip(&self.inputs)
                    .map(|(c, m)| {
                        if m.conjugated {
                            -c.norm_sqr()
                        } else {
                            c.norm_sqr()
                        }
                    })
                    .sum();
                balance - 1.0
            })
            .collect()
    }

    /// Largest entry of `|S J S^H - 1|`, covering rows and cross-rows.
    pub fn unitarity_residual(&self) -> f64 {
        let k = self.commutator_matrix();
        let n = k.nrows();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((k[(i, j)] - target).norm());
            }
        }
        worst
    }
}

/// Symmetrized covariance of input modes, in occupation units.
///
/// The diagonal holds per-line occupations `sigma_n >= 1/2`. Off-diagonal
/// entries are correlations between the mode operators exactly as they enter
/// a map (so a conjugated column correlates through its conjugate).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTable {
    labels: Vec<String>,
    covariance: CMatrix,
}

impl SpectrumTable {
    pub fn diagonal(entries: impl IntoIterator<Item = (String, f64)>) -> Result<Self> {
        let (labels, sigmas): (Vec<String>, Vec<f64>) = entries.into_iter().unzip();
        let n = labels.len();
        let mut covariance = CMatrix::zeros(n, n);
        for (i, &s) in sigmas.iter().enumerate() {
            covariance[(i, i)] = Complex64::new(s, 0.0);
        }
        Self::with_covariance(labels, covariance)
    }

    pub fn with_covariance(labels: Vec<String>, covariance: CMatrix) -> Result<Self> {
        if covariance.nrows() != labels.len() || covariance.ncols() != labels.len() {
            return Err(NoiseError::DimensionMismatch {
                expected: labels.len(),
                actual: covariance.nrows(),
            });
        }
        let mut seen = HashMap::new();
        for (i, l) in labels.iter().enumerate() {
            if seen.insert(l.clone(), i).is_some() {
                return Err(NoiseError::Model(format!("duplicate spectrum label `{l}`")));
            }
        }
        Ok(Self { labels, covariance })
    }

    /// Thermal occupations of a set of lines at `omega`.
    pub fn thermal(lines: &[NoiseLine], omega: AngularFrequency) -> Result<Self> {
        let entries = lines
            .iter()
            .map(|l| {
                Ok((
                    l.label.clone(),
                    symmetrized_occupation(omega, l.temperature())?.value(),
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::diagonal(entries)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn covariance(&self) -> &CMatrix {
        &self.covariance
    }

    pub fn index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| NoiseError::UnknownLine(label.to_string()))
    }

    pub fn occupation(&self, label: &str) -> Result<f64> {
        let i = self.index(label)?;
        Ok(self.covariance[(i, i)].re)
    }

    pub fn correlation(&self, a: &str, b: &str) -> Result<Complex64> {
        Ok(self.covariance[(self.index(a)?, self.index(b)?)])
    }

    /// Merges two tables of disjoint lines, with no cross-correlation.
    pub fn merge(&self, other: &SpectrumTable) -> Result<SpectrumTable> {
        let n = self.labels.len();
        let m = other.labels.len();
        let mut covariance = CMatrix::zeros(n + m, n + m);
        covariance
            .view_mut((0, 0), (n, n))
            .copy_from(&self.covariance);
        covariance
            .view_mut((n, n), (m, m))
            .copy_from(&other.covariance);
        let labels = self.labels.iter().chain(&other.labels).cloned().collect();
        SpectrumTable::with_covariance(labels, covariance)
    }

    /// Covariance restricted and reordered to the input columns of a map.
    fn aligned(&self, inputs: &[InputMode]) -> Result<CMatrix> {
        let idx = inputs
            .iter()
            .map(|m| self.index(&m.line))
            .collect::<Result<Vec<_>>>()?;
        let n = idx.len();
        Ok(CMatrix::from_fn(n, n, |i, j| {
            self.covariance[(idx[i], idx[j])]
        }))
    }
}

/// Output covariance `S C S^H`. Conjugated columns weigh in through `|c|^2`
/// exactly like normal ones: symmetrized phase-insensitive spectra do not
/// distinguish a field from its conjugate.
pub fn propagate_spectra(map: &ScatteringMap, input: &SpectrumTable) -> Result<SpectrumTable> {
    let c = input.aligned(map.inputs())?;
    let out = map.amplitudes() * c * map.amplitudes().adjoint();
    SpectrumTable::with_covariance(map.outputs().to_vec(), out)
}

/// Symmetrized voltage and current densities at a line's port (V^2 s, A^2 s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PortSpectra {
    pub voltage: f64,
    pub current: f64,
}

/// Voltage and current spectra at the end of `line`, including the
/// correlation between its own outward and inward fields.
pub fn port_observables(
    map: &ScatteringMap,
    input: &SpectrumTable,
    line: &NoiseLine,
    omega: AngularFrequency,
) -> Result<PortSpectra> {
    let row = map.output_index(&line.label)?;
    let col = map
        .input_index(&line.label)
        .ok_or_else(|| NoiseError::UnknownLine(line.label.clone()))?;
    if map.inputs()[col].conjugated {
        return Err(NoiseError::ConjugatedPort(line.label.clone()));
    }
    let c = input.aligned(map.inputs())?;
    let quadratic = |sign: f64| {
        let mut w = map.amplitudes().row(row).clone_owned();
        w[col] += Complex64::new(sign, 0.0);
        (&w * &c * w.adjoint())[(0, 0)].re
    };
    let half_quantum = omega.quantum_energy() / 2.0;
    Ok(PortSpectra {
        voltage: half_quantum * line.impedance() * quadratic(1.0),
        current: half_quantum / line.impedance() * quadratic(-1.0),
    })
}

fn normalized(multipole: &ReactiveMultipole, lines: &[NoiseLine], power: f64) -> Result<CMatrix> {
    if multipole.dim() != lines.len() {
        return Err(NoiseError::DimensionMismatch {
            expected: lines.len(),
            actual: multipole.dim(),
        });
    }
    let scale: Vec<f64> = lines.iter().map(|l| l.impedance().powf(power)).collect();
    let m = multipole.matrix();
    Ok(CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        m[(i, j)] * scale[i] * scale[j]
    }))
}

/// Solves `a x = b` by LU with partial pivoting after a 1-norm condition check.
fn guarded_solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    let lu = a.clone().lu();
    let inverse = lu.try_inverse().ok_or(NoiseError::Singular {
        condition: f64::INFINITY,
    })?;
    let condition = one_norm(a) * one_norm(&inverse);
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(NoiseError::Singular { condition });
    }
    lu.solve(b).ok_or(NoiseError::Singular { condition })
}

fn one_norm(m: &CMatrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `S = (z - 1)(z + 1)^-1` for an impedance multipole terminated by `lines`.
pub fn scattering_from_impedance(
    impedance: &ReactiveMultipole,
    lines: &[NoiseLine],
) -> Result<ScatteringMap> {
    let z = normalized(impedance, lines, -0.5)?;
    let n = z.nrows();
    let id = CMatrix::identity(n, n);
    // (z-1) and (z+1) commute, so S = (z+1)^-1 (z-1)
    let s = guarded_solve(&(&z + &id), &(&z - &id))?;
    let labels: Vec<String> = lines.iter().map(|l| l.label.clone()).collect();
    ScatteringMap::new(
        labels.clone(),
        labels.into_iter().map(InputMode::normal).collect(),
        s,
    )
}

/// `S = (1 + y)^-1 (1 - y)` for a nodal admittance multipole.
/// A port with no attached element is open (`S = +1`).
pub fn scattering_from_admittance(
    admittance: &ReactiveMultipole,
    lines: &[NoiseLine],
) -> Result<ScatteringMap> {
    let y = normalized(admittance, lines, 0.5)?;
    let n = y.nrows();
    let id = CMatrix::identity(n, n);
    let s = guarded_solve(&(&id + &y), &(&id - &y))?;
    let labels: Vec<String> = lines.iter().map(|l| l.label.clone()).collect();
    ScatteringMap::new(
        labels.clone(),
        labels.into_iter().map(InputMode::normal).collect(),
        s,
    )
}

/// Lumped lossless elements, in the `exp(-i omega t)` convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReactiveElement {
    Capacitor(f64),
    Inductor(f64),
    /// Mutual inductance between two loops.
    MutualInductance(f64),
}

impl ReactiveElement {
    pub fn value(&self) -> f64 {
        match *self {
            Self::Capacitor(v) | Self::Inductor(v) | Self::MutualInductance(v) => v,
        }
    }

    fn validated(&self) -> Result<f64> {
        positive("element value", self.value())
    }

    /// Capacitor `i/(wC)`, inductor `-i w L`, mutual coupling `-i w M`.
    pub fn impedance(&self, omega: AngularFrequency) -> Result<Complex64> {
        let v = self.validated()?;
        let w = omega.value();
        if w == 0.0 {
            return Err(NoiseError::Domain {
                quantity: "omega",
                value: w,
                reason: "reactances are evaluated at nonzero frequency",
            });
        }
        Ok(match self {
            Self::Capacitor(_) => Complex64::new(0.0, 1.0 / (w * v)),
            Self::Inductor(_) | Self::MutualInductance(_) => Complex64::new(0.0, -w * v),
        })
    }

    pub fn admittance(&self, omega: AngularFrequency) -> Result<Complex64> {
        Ok(self.impedance(omega)?.inv())
    }
}

/// Series combination of impedances.
pub fn series(impedances: &[Complex64]) -> Complex64 {
    impedances.iter().sum()
}

/// Parallel combination of impedances. A zero member shorts the group.
pub fn parallel(impedances: &[Complex64]) -> Complex64 {
    if impedances.contains(&ZERO) {
        return ZERO;
    }
    impedances.iter().map(|z| z.inv()).sum::<Complex64>().inv()
}

/// Stamps two-terminal elements into a nodal admittance matrix. Port `i` is the
/// node where line `i` attaches; every line returns through a common ground.
#[derive(Debug, Clone)]
pub struct NodalAdmittance {
    matrix: CMatrix,
}

impl NodalAdmittance {
    pub fn new(ports: usize) -> Self {
        Self {
            matrix: CMatrix::zeros(ports, ports),
        }
    }

    /// Element from port node `i` to ground.
    pub fn shunt(&mut self, i: usize, y: Complex64) -> &mut Self {
        self.matrix[(i, i)] += y;
        self
    }

    /// Element between port nodes `i` and `j`.
    pub fn bridge(&mut self, i: usize, j: usize, y: Complex64) -> &mut Self {
        if i == j {
            return self.shunt(i, y);
        }
        self.matrix[(i, i)] += y;
        self.matrix[(j, j)] += y;
        self.matrix[(i, j)] -= y;
        self.matrix[(j, i)] -= y;
        self
    }

    pub fn build(self) -> Result<ReactiveMultipole> {
        ReactiveMultipole::new(self.matrix)
    }
}

/// Stamps elements into a loop impedance matrix. Loop `i` closes through port `i`.
#[derive(Debug, Clone)]
pub struct LoopImpedance {
    matrix: CMatrix,
}

impl LoopImpedance {
    pub fn new(ports: usize) -> Self {
        Self {
            matrix: CMatrix::zeros(ports, ports),
        }
    }

    /// Element in series with port `i` only.
    pub fn series(&mut self, i: usize, z: Complex64) -> &mut Self {
        self.matrix[(i, i)] += z;
        self
    }

    /// Element in the branch shared by loops `i` and `j` (same orientation).
    pub fn shared(&mut self, i: usize, j: usize, z: Complex64) -> &mut Self {
        if i == j {
            return self.series(i, z);
        }
        self.matrix[(i, i)] += z;
        self.matrix[(j, j)] += z;
        self.matrix[(i, j)] += z;
        self.matrix[(j, i)] += z;
        self
    }

    /// Mutual coupling between loops `i` and `j`.
    pub fn mutual(&mut self, i: usize, j: usize, z: Complex64) -> &mut Self {
        self.matrix[(i, j)] += z;
        self.matrix[(j, i)] += z;
        self
    }

    pub fn build(self) -> Result<ReactiveMultipole> {
        ReactiveMultipole::new(self.matrix)
    }
}
