//! Line-oriented netlist grammar.
//!
//! ```text
//! line <name> R=<ohm> T=<K>
//! cap <name> C=<F> ports=(<line>,<line>)
//! ind <name> L=<H> ports=(<line>,<line>)
//! opamp <name> left=<line> right=<line> Zf=cap:<F>|ind:<H> R_a=<ohm> Theta_a=<K>
//! gain <name> in=<line> G=<complex> T_b=<K>
//! sweep <f_min_Hz> <f_max_Hz> <n_points> lin|log
//! measure <line> as <label> signal=<line|force>
//! preset muscope [key=value ...]
//! ```
//!
//! `#` starts a comment. Numbers take an optional SI suffix
//! (`f p n u m k M G`); complex values are written `re`, `imi` or `re+imi`.
//! An op-amp `A` adds the noise lines `A.a` and `A.a'`, a gain stage `G` adds
//! `G.b`. A `cap`/`ind` whose two ports name the same line is a shunt.

use std::collections::{HashMap, HashSet};
use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

use crate::accelerometer::{AccelerometerConfig, LoopGain, READOUT_LINE};

/// Built-in signal of the `muscope` preset: the external force on the mass.
pub const FORCE_SIGNAL: &str = "force";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message} (at `{token}`)")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub token: String,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Feedback {
    Capacitor(f64),
    Inductor(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepScale {
    Linear,
    Logarithmic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub f_min: f64,
    pub f_max: f64,
    pub points: usize,
    pub scale: SweepScale,
}

impl Sweep {
    /// Sweep points in Hz, ascending, ending exactly on `f_max`.
    pub fn frequencies_hz(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.f_min];
        }
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|k| {
                if k + 1 == self.points {
                    return self.f_max;
                }
                let t = k as f64 / last;
                match self.scale {
                    SweepScale::Linear => self.f_min + (self.f_max - self.f_min) * t,
                    SweepScale::Logarithmic => self.f_min * (self.f_max / self.f_min).powf(t),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Measure {
    pub line: String,
    pub label: String,
    pub signal: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PresetValue {
    Number(f64),
    Infinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: String,
    pub overrides: Vec<(String, PresetValue)>,
}

/// Keys accepted by `preset muscope`. Frequencies are in Hz.
pub const MUSCOPE_KEYS: [&str; 13] = [
    "M",
    "H_m",
    "f_m",
    "f_t",
    "R_a",
    "Theta_a",
    "Theta_a_prime",
    "Theta_m",
    "R_r",
    "T_r",
    "C_f",
    "kappa",
    "loop_gain",
];

impl Preset {
    pub fn get(&self, key: &str) -> Option<PresetValue> {
        self.overrides
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| *v)
    }

    pub fn set(&mut self, key: &str, value: PresetValue) {
        match self.overrides.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.overrides.push((key.to_string(), value)),
        }
    }

    /// Accelerometer configuration with the overrides applied to the defaults.
    pub fn accelerometer(&self) -> AccelerometerConfig {
        use std::f64::consts::PI;
        let mut cfg = AccelerometerConfig::default();
        let number = |key: &str| match self.get(key) {
            Some(PresetValue::Number(x)) => Some(x),
            _ => None,
        };
        if let Some(x) = number("M") {
            cfg.mass = x;
        }
        if let Some(x) = number("H_m") {
            cfg.h_m = x;
        }
        if let Some(x) = number("f_m") {
            cfg.omega = 2.0 * PI * x;
        }
        if let Some(x) = number("f_t") {
            cfg.omega_t = 2.0 * PI * x;
        }
        if let Some(x) = number("R_a") {
            cfg.r_a = x;
        }
        if let Some(x) = number("Theta_a") {
            cfg.theta_a = x;
            cfg.theta_a_prime = x;
        }
        if let Some(x) = number("Theta_a_prime") {
            cfg.theta_a_prime = x;
        }
        if let Some(x) = number("Theta_m") {
            cfg.theta_m = x;
        }
        if let Some(x) = number("R_r") {
            cfg.r_r = x;
        }
        if let Some(x) = number("T_r") {
            cfg.t_r = x;
        }
        if let Some(x) = number("C_f") {
            cfg.feedback_capacitance = x;
        }
        if let Some(x) = number("kappa") {
            cfg.transducer_coupling = x;
        }
        match self.get("loop_gain") {
            Some(PresetValue::Number(x)) => cfg.loop_gain = LoopGain::Finite(x),
            Some(PresetValue::Infinite) => cfg.loop_gain = LoopGain::Infinite,
            None => {}
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Declaration {
    Line {
        name: String,
        resistance: f64,
        temperature: f64,
    },
    Capacitor {
        name: String,
        capacitance: f64,
        ports: (String, String),
    },
    Inductor {
        name: String,
        inductance: f64,
        ports: (String, String),
    },
    OpAmp {
        name: String,
        left: String,
        right: String,
        feedback: Feedback,
        r_a: f64,
        theta_a: f64,
    },
    Gain {
        name: String,
        input: String,
        gain: Complex64,
        noise_temperature: f64,
    },
    Sweep(Sweep),
    Measure(Measure),
    Preset(Preset),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetlistDocument {
    pub declarations: Vec<Declaration>,
}

impl NetlistDocument {
    pub fn sweep(&self) -> &Sweep {
        self.declarations
            .iter()
            .find_map(|d| match d {
                Declaration::Sweep(s) => Some(s),
                _ => None,
            })
            .expect("a parsed document has a sweep")
    }

    pub fn measures(&self) -> impl Iterator<Item = &Measure> {
        self.declarations.iter().filter_map(|d| match d {
            Declaration::Measure(m) => Some(m),
            _ => None,
        })
    }

    pub fn preset(&self) -> Option<&Preset> {
        self.declarations.iter().find_map(|d| match d {
            Declaration::Preset(p) => Some(p),
            _ => None,
        })
    }

    /// Applies a `key=value` override to the preset.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), String> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| format!("expected key=value, got `{assignment}`"))?;
        let value = parse_preset_value(key, value)?;
        let preset = self
            .declarations
            .iter_mut()
            .find_map(|d| match d {
                Declaration::Preset(p) => Some(p),
                _ => None,
            })
            .ok_or_else(|| "--set needs a netlist with a preset".to_string())?;
        preset.set(key, value);
        Ok(())
    }
}

fn fmt_ports(ports: &(String, String)) -> String {
    format!("({},{})", ports.0, ports.1)
}

fn fmt_complex(z: Complex64) -> String {
    let sign = if z.im.is_sign_negative() { "" } else { "+" };
    format!("{:e}{sign}{:e}i", z.re, z.im)
}

impl fmt::Display for PresetValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PresetValue::Number(x) => write!(f, "{x:e}"),
            PresetValue::Infinite => f.write_str("inf"),
        }
    }
}

impl fmt::Display for Declaration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Declaration::Line {
                name,
                resistance,
                temperature,
            } => write!(f, "line {name} R={resistance:e} T={temperature:e}"),
            Declaration::Capacitor {
                name,
                capacitance,
                ports,
            } => write!(f, "cap {name} C={capacitance:e} ports={}", fmt_ports(ports)),
            Declaration::Inductor {
                name,
                inductance,
                ports,
            } => write!(f, "ind {name} L={inductance:e} ports={}", fmt_ports(ports)),
            Declaration::OpAmp {
                name,
                left,
                right,
                feedback,
                r_a,
                theta_a,
            } => {
                let zf = match feedback {
                    Feedback::Capacitor(c) => format!("cap:{c:e}"),
                    Feedback::Inductor(l) => format!("ind:{l:e}"),
                };
                write!(
                    f,
                    "opamp {name} left={left} right={right} Zf={zf} R_a={r_a:e} Theta_a={theta_a:e}"
                )
            }
            Declaration::Gain {
                name,
                input,
                gain,
                noise_temperature,
            } => write!(
                f,
                "gain {name} in={input} G={} T_b={noise_temperature:e}",
                fmt_complex(*gain)
            ),
            Declaration::Sweep(s) => {
                let scale = match s.scale {
                    SweepScale::Linear => "lin",
                    SweepScale::Logarithmic => "log",
                };
                write!(f, "sweep {:e} {:e} {} {scale}", s.f_min, s.f_max, s.points)
            }
            Declaration::Measure(m) => {
                write!(f, "measure {} as {} signal={}", m.line, m.label, m.signal)
            }
            Declaration::Preset(p) => {
                write!(f, "preset {}", p.name)?;
                for (k, v) in &p.overrides {
                    write!(f, " {k}={v}")?;
                }
                Ok(())
            }
        }
    }
}

/// Canonical form: one declaration per line, floats in shortest exponent form.
impl fmt::Display for NetlistDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.declarations {
            writeln!(f, "{d}")?;
        }
        Ok(())
    }
}

/// Parses a number with an optional SI suffix.
pub fn parse_number(text: &str) -> Result<f64, String> {
    let (body, scale) = match text.chars().last() {
        Some(c) if "fpnumkMG".contains(c) => (
            &text[..text.len() - 1],
            match c {
                'f' => 1e-15,
                'p' => 1e-12,
                'n' => 1e-9,
                'u' => 1e-6,
                'm' => 1e-3,
                'k' => 1e3,
                'M' => 1e6,
                _ => 1e9,
            },
        ),
        _ => (text, 1.0),
    };
    let valid = !body.is_empty()
        && body.chars().any(|c| c.is_ascii_digit())
        && body
            .chars()
            .all(|c| c.is_ascii_digit() || "+-.eE".contains(c));
    let value: f64 = if valid { body.parse().ok() } else { None }
        .ok_or_else(|| format!("invalid number `{text}`"))?;
    let value = value * scale;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("number `{text}` is out of range"))
    }
}

/// Parses `re`, `imi` or `re+imi` (either sign).
pub fn parse_complex(text: &str) -> Result<Complex64, String> {
    let Some(body) = text.strip_suffix('i') else {
        return Ok(Complex64::new(parse_number(text)?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let invalid = |_| format!("invalid complex number `{text}`");
    match split {
        Some(k) => Ok(Complex64::new(
            parse_number(&body[..k]).map_err(invalid)?,
            parse_number(&body[k..]).map_err(invalid)?,
        )),
        None => Ok(Complex64::new(0.0, parse_number(body).map_err(invalid)?)),
    }
}

fn parse_preset_value(key: &str, text: &str) -> Result<PresetValue, String> {
    if !MUSCOPE_KEYS.contains(&key) {
        return Err(format!(
            "unknown muscope parameter `{key}`; expected one of {}",
            MUSCOPE_KEYS.join(", ")
        ));
    }
    if key == "loop_gain" && text == "inf" {
        return Ok(PresetValue::Infinite);
    }
    let x = parse_number(text)?;
    let zero_allowed = matches!(key, "Theta_m" | "T_r" | "kappa" | "loop_gain");
    if x < 0.0 || (x == 0.0 && !zero_allowed) {
        let bound = if zero_allowed {
            "non-negative"
        } else {
            "positive"
        };
        return Err(format!("{key} must be {bound}"));
    }
    Ok(PresetValue::Number(x))
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    column: usize,
}

impl<'a> Token<'a> {
    fn width(&self) -> usize {
        self.text.chars().count()
    }

    /// Splits `key=value` into its parts; the value keeps its own column.
    fn key_value(&self) -> Option<(&'a str, Token<'a>)> {
        let (key, value) = self.text.split_once('=')?;
        Some((
            key,
            Token {
                text: value,
                column: self.column + key.chars().count() + 1,
            },
        ))
    }
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut tokens = Vec::new();
    let mut start: Option<(usize, usize)> = None;
    let mut column = 0;
    for (byte, c) in line.char_indices() {
        column += 1;
        if c.is_whitespace() {
            if let Some((b, col)) = start.take() {
                tokens.push(Token {
                    text: &line[b..byte],
                    column: col,
                });
            }
        } else if start.is_none() {
            start = Some((byte, column));
        }
    }
    if let Some((b, col)) = start {
        tokens.push(Token {
            text: &line[b..],
            column: col,
        });
    }
    tokens
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Binding {
    Passive,
    Active,
}

#[derive(Default)]
struct Parser {
    declarations: Vec<Declaration>,
    names: HashSet<String>,
    lines: HashMap<String, Option<(Binding, String)>>,
    inputs: HashSet<String>,
    labels: HashSet<String>,
    has_sweep: bool,
    has_measure: bool,
    has_elements: bool,
    preset: bool,
}

struct Context<'a, 'b> {
    number: usize,
    tokens: &'b [Token<'a>],
}

impl<'a> Context<'a, '_> {
    fn error(&self, token: Token<'_>, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.number,
            column: token.column,
            token: token.text.to_string(),
            message: message.into(),
        }
    }

    fn end_of_line(&self) -> Token<'static> {
        let last = self.tokens.last().expect("non-empty line");
        Token {
            text: "<eol>",
            column: last.column + last.width(),
        }
    }

    fn positional(&self, index: usize, what: &str) -> Result<Token<'a>, ParseError> {
        self.tokens
            .get(index)
            .copied()
            .ok_or_else(|| self.error(self.end_of_line(), format!("expected {what}")))
    }

    fn no_extra(&self, count: usize) -> Result<(), ParseError> {
        match self.tokens.get(count) {
            Some(&t) => Err(self.error(t, "unexpected token")),
            None => Ok(()),
        }
    }

    /// Key/value arguments from `start`, each key once and from `allowed`.
    fn arguments(
        &self,
        start: usize,
        allowed: &[&str],
    ) -> Result<Vec<(&'a str, Token<'a>)>, ParseError> {
        let mut out: Vec<(&'a str, Token<'a>)> = Vec::new();
        for &t in &self.tokens[start.min(self.tokens.len())..] {
            let (key, value) = t
                .key_value()
                .ok_or_else(|| self.error(t, "expected key=value"))?;
            if !allowed.contains(&key) {
                return Err(self.error(
                    t,
                    format!(
                        "unknown key `{key}`; expected one of {}",
                        allowed.join(", ")
                    ),
                ));
            }
            if out.iter().any(|(k, _)| *k == key) {
                return Err(self.error(t, format!("duplicate key `{key}`")));
            }
            if value.text.is_empty() {
                return Err(self.error(value, format!("missing value for `{key}`")));
            }
            out.push((key, value));
        }
        Ok(out)
    }

    fn required(&self, args: &[(&'a str, Token<'a>)], key: &str) -> Result<Token<'a>, ParseError> {
        args.iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| self.error(self.tokens[0], format!("missing `{key}=`")))
    }

    fn number(&self, value: Token<'_>) -> Result<f64, ParseError> {
        parse_number(value.text).map_err(|m| self.error(value, m))
    }

    fn positive(&self, value: Token<'_>, what: &str) -> Result<f64, ParseError> {
        let x = self.number(value)?;
        if x > 0.0 {
            Ok(x)
        } else {
            Err(self.error(value, format!("{what} must be positive")))
        }
    }

    fn non_negative(&self, value: Token<'_>, what: &str) -> Result<f64, ParseError> {
        let x = self.number(value)?;
        if x >= 0.0 {
            Ok(x)
        } else {
            Err(self.error(value, format!("{what} must be non-negative")))
        }
    }
}

impl Parser {
    fn declare_name(&mut self, cx: &Context, token: Token<'_>) -> Result<String, ParseError> {
        if !is_identifier(token.text) {
            return Err(cx.error(token, "names are identifiers ([A-Za-z_][A-Za-z0-9_]*)"));
        }
        if !self.names.insert(token.text.to_string()) {
            return Err(cx.error(token, format!("duplicate name `{}`", token.text)));
        }
        Ok(token.text.to_string())
    }

    /// Attaches a declared line to an element.
    fn bind(
        &mut self,
        cx: &Context,
        token: Token<'_>,
        binding: Binding,
        element: &str,
    ) -> Result<String, ParseError> {
        let slot = self
            .lines
            .get_mut(token.text)
            .ok_or_else(|| cx.error(token, format!("undeclared line `{}`", token.text)))?;
        match slot {
            Some((Binding::Passive, _)) if binding == Binding::Passive => {}
            Some((_, owner)) => {
                return Err(cx.error(
                    token,
                    format!("line `{}` is already bound to `{owner}`", token.text),
                ))
            }
            None => *slot = Some((binding, element.to_string())),
        }
        Ok(token.text.to_string())
    }

    fn element_allowed(&mut self, cx: &Context) -> Result<(), ParseError> {
        if self.preset {
            return Err(cx.error(cx.tokens[0], "a preset netlist cannot declare elements"));
        }
        self.has_elements = true;
        Ok(())
    }

    fn ports(
        &mut self,
        cx: &Context,
        value: Token<'_>,
        element: &str,
    ) -> Result<(String, String), ParseError> {
        let inner = value
            .text
            .strip_prefix('(')
            .and_then(|s| s.strip_suffix(')'))
            .and_then(|s| s.split_once(','))
            .ok_or_else(|| cx.error(value, "expected ports=(<line>,<line>)"))?;
        let first = Token {
            text: inner.0,
            column: value.column + 1,
        };
        let second = Token {
            text: inner.1,
            column: value.column + 2 + inner.0.chars().count(),
        };
        let a = self.bind(cx, first, Binding::Passive, element)?;
        let b = self.bind(cx, second, Binding::Passive, element)?;
        Ok((a, b))
    }

    fn statement(&mut self, cx: &Context) -> Result<(), ParseError> {
        let keyword = cx.tokens[0];
        let declaration = match keyword.text {
            "line" => {
                self.element_allowed(cx)?;
                let name = self.declare_name(cx, cx.positional(1, "a line name")?)?;
                let args = cx.arguments(2, &["R", "T"])?;
                let resistance = cx.positive(cx.required(&args, "R")?, "R")?;
                let temperature = cx.non_negative(cx.required(&args, "T")?, "T")?;
                self.lines.insert(name.clone(), None);
                self.inputs.insert(name.clone());
                Declaration::Line {
                    name,
                    resistance,
                    temperature,
                }
            }
            "cap" | "ind" => {
                self.element_allowed(cx)?;
                let name = self.declare_name(cx, cx.positional(1, "an element name")?)?;
                let key = if keyword.text == "cap" { "C" } else { "L" };
                let args = cx.arguments(2, &[key, "ports"])?;
                let value = cx.positive(cx.required(&args, key)?, key)?;
                let ports = self.ports(cx, cx.required(&args, "ports")?, &name)?;
                if keyword.text == "cap" {
                    Declaration::Capacitor {
                        name,
                        capacitance: value,
                        ports,
                    }
                } else {
                    Declaration::Inductor {
                        name,
                        inductance: value,
                        ports,
                    }
                }
            }
            "opamp" => {
                self.element_allowed(cx)?;
                let name = self.declare_name(cx, cx.positional(1, "an op-amp name")?)?;
                let args = cx.arguments(2, &["left", "right", "Zf", "R_a", "Theta_a"])?;
                let left = self.bind(cx, cx.required(&args, "left")?, Binding::Active, &name)?;
                let right = self.bind(cx, cx.required(&args, "right")?, Binding::Active, &name)?;
                let zf = cx.required(&args, "Zf")?;
                let (kind, text) = zf
                    .text
                    .split_once(':')
                    .filter(|(k, _)| matches!(*k, "cap" | "ind"))
                    .ok_or_else(|| cx.error(zf, "expected Zf=cap:<F> or Zf=ind:<H>"))?;
                let value = cx.positive(
                    Token {
                        text,
                        column: zf.column + 4,
                    },
                    "feedback element",
                )?;
                let feedback = if kind == "cap" {
                    Feedback::Capacitor(value)
                } else {
                    Feedback::Inductor(value)
                };
                let r_a = cx.positive(cx.required(&args, "R_a")?, "R_a")?;
                let theta_a = cx.positive(cx.required(&args, "Theta_a")?, "Theta_a")?;
                self.inputs.insert(format!("{name}.a"));
                self.inputs.insert(format!("{name}.a'"));
                Declaration::OpAmp {
                    name,
                    left,
                    right,
                    feedback,
                    r_a,
                    theta_a,
                }
            }
            "gain" => {
                self.element_allowed(cx)?;
                let name = self.declare_name(cx, cx.positional(1, "a gain stage name")?)?;
                let args = cx.arguments(2, &["in", "G", "T_b"])?;
                let input = self.bind(cx, cx.required(&args, "in")?, Binding::Active, &name)?;
                let g = cx.required(&args, "G")?;
                let gain = parse_complex(g.text).map_err(|m| cx.error(g, m))?;
                if gain.norm() < 1.0 {
                    return Err(cx.error(g, "|G| must be at least 1"));
                }
                let noise_temperature = cx.non_negative(cx.required(&args, "T_b")?, "T_b")?;
                self.inputs.insert(format!("{name}.b"));
                Declaration::Gain {
                    name,
                    input,
                    gain,
                    noise_temperature,
                }
            }
            "sweep" => {
                if self.has_sweep {
                    return Err(cx.error(keyword, "only one sweep is allowed"));
                }
                let lo = cx.positional(1, "f_min in Hz")?;
                let f_min = cx.positive(lo, "f_min")?;
                let hi = cx.positional(2, "f_max in Hz")?;
                let f_max = cx.positive(hi, "f_max")?;
                if f_max < f_min {
                    return Err(cx.error(hi, "f_max must not be below f_min"));
                }
                let n = cx.positional(3, "a number of points")?;
                let points: usize = n
                    .text
                    .parse()
                    .ok()
                    .filter(|&p| p > 0)
                    .ok_or_else(|| cx.error(n, "points must be a positive integer"))?;
                if points == 1 && f_max != f_min {
                    return Err(cx.error(n, "a single-point sweep needs f_min = f_max"));
                }
                let s = cx.positional(4, "lin or log")?;
                let scale = match s.text {
                    "lin" => SweepScale::Linear,
                    "log" => SweepScale::Logarithmic,
                    _ => return Err(cx.error(s, "expected lin or log")),
                };
                cx.no_extra(5)?;
                self.has_sweep = true;
                Declaration::Sweep(Sweep {
                    f_min,
                    f_max,
                    points,
                    scale,
                })
            }
            "measure" => {
                let line = cx.positional(1, "a line to measure")?;
                if !self.lines.contains_key(line.text) {
                    return Err(cx.error(line, format!("undeclared line `{}`", line.text)));
                }
                let as_kw = cx.positional(2, "`as`")?;
                if as_kw.text != "as" {
                    return Err(cx.error(as_kw, "expected `as`"));
                }
                let label = cx.positional(3, "an estimator label")?;
                if !is_identifier(label.text) {
                    return Err(cx.error(label, "labels are identifiers ([A-Za-z_][A-Za-z0-9_]*)"));
                }
                if self.labels.contains(label.text) {
                    return Err(cx.error(label, format!("duplicate label `{}`", label.text)));
                }
                let args = cx.arguments(4, &["signal"])?;
                let signal = cx.required(&args, "signal")?;
                let known = if self.preset {
                    signal.text == FORCE_SIGNAL
                } else {
                    self.inputs.contains(signal.text)
                };
                if !known {
                    return Err(cx.error(signal, format!("unknown signal `{}`", signal.text)));
                }
                self.labels.insert(label.text.to_string());
                self.has_measure = true;
                Declaration::Measure(Measure {
                    line: line.text.to_string(),
                    label: label.text.to_string(),
                    signal: signal.text.to_string(),
                })
            }
            "preset" => {
                if self.preset {
                    return Err(cx.error(keyword, "only one preset is allowed"));
                }
                if self.has_elements {
                    return Err(cx.error(
                        keyword,
                        "a preset cannot be mixed with element declarations",
                    ));
                }
                let name = cx.positional(1, "a preset name")?;
                if name.text != "muscope" {
                    return Err(cx.error(name, "unknown preset; expected muscope"));
                }
                let args = cx.arguments(2, &MUSCOPE_KEYS)?;
                let mut overrides = Vec::new();
                for (key, value) in args {
                    let v = parse_preset_value(key, value.text).map_err(|m| cx.error(value, m))?;
                    overrides.push((key.to_string(), v));
                }
                self.preset = true;
                self.lines.insert(READOUT_LINE.to_string(), None);
                Declaration::Preset(Preset {
                    name: name.text.to_string(),
                    overrides,
                })
            }
            _ => {
                return Err(cx.error(
                    keyword,
                    "expected one of line, cap, ind, opamp, gain, sweep, measure, preset",
                ))
            }
        };
        self.declarations.push(declaration);
        Ok(())
    }
}

/// Parses a netlist; the first error stops parsing.
pub fn parse_netlist(text: &str) -> Result<NetlistDocument, ParseError> {
    let mut parser = Parser::default();
    let mut last_line = 1;
    for (index, raw) in text.lines().enumerate() {
        last_line = index + 1;
        let content = raw.split('#').next().unwrap_or("");
        let tokens = tokenize(content);
        if tokens.is_empty() {
            continue;
        }
        parser.statement(&Context {
            number: index + 1,
            tokens: &tokens,
        })?;
    }
    let eof = |message: &str| ParseError {
        line: last_line,
        column: 1,
        token: "<eof>".into(),
        message: message.into(),
    };
    if !parser.has_sweep {
        return Err(eof("missing sweep declaration"));
    }
    if !parser.has_measure {
        return Err(eof("missing measure declaration"));
    }
    Ok(NetlistDocument {
        declarations: parser.declarations,
    })
}
