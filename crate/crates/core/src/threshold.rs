//! Closed-form loss rates, success probabilities and loss thresholds, plus
//! grid sweeps that tabulate them.
//!
//! The single-photon-source quantities (`loss_rate_sps`, the `/256` success
//! constant) are fixed inputs, not derived by simulation here. Every
//! threshold is a strict inequality and is reported together with its signed
//! margin.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} = {v} outside [0, 1]")))
    }
}

/// `1 - eta_s / (2 - eta_s eta_d)`: effective per-photon loss of GHZ states
/// built from heralded single photons.
pub fn loss_rate_sps(eta_s: f64, eta_d: f64) -> Result<f64> {
    check_unit("eta_s", eta_s)?;
    check_unit("eta_d", eta_d)?;
    let f = 1.0 - eta_s / (2.0 - eta_s * eta_d);
    debug_assert!((0.0..=1.0).contains(&f));
    Ok(f)
}

/// `p2 / (p2 + p3)`.
pub fn loss_rate_cavity(p2: f64, p3: f64) -> Result<f64> {
    if !(p2 >= 0.0 && p3 >= 0.0) || p2 + p3 <= 0.0 {
        return Err(Error::invalid(format!("cavity loss rate needs p2, p3 >= 0 with p2 + p3 > 0 (got {p2}, {p3})")));
    }
    Ok(p2 / (p2 + p3))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCheck {
    pub passes: bool,
    pub margin: f64,
}

/// Margins within this distance of zero count as sitting on the boundary,
/// so a rounding error cannot turn an exact tie into a pass.
pub const BOUNDARY_TOLERANCE: f64 = 1e-12;

impl ThresholdCheck {
    fn strict(margin: f64) -> Self {
        ThresholdCheck { passes: margin > BOUNDARY_TOLERANCE, margin }
    }
}

/// Sign of `margin` with the boundary band mapped to 0.
pub fn sign_with_tolerance(margin: f64) -> i8 {
    if margin > BOUNDARY_TOLERANCE {
        1
    } else if margin < -BOUNDARY_TOLERANCE {
        -1
    } else {
        0
    }
}

/// `(1 - f) eta_d > 1/2`.
pub fn meets_loss_threshold(f: f64, eta_d: f64) -> ThresholdCheck {
    ThresholdCheck::strict((1.0 - f) * eta_d - 0.5)
}

/// `eta_s eta_d > 2/3`.
pub fn meets_sps_threshold(eta_s: f64, eta_d: f64) -> ThresholdCheck {
    ThresholdCheck::strict(eta_s * eta_d - 2.0 / 3.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Epr,
    SinglePhoton,
    Cavity,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Epr => "epr",
            Scheme::SinglePhoton => "single_photon",
            Scheme::Cavity => "cavity",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "epr" => Ok(Scheme::Epr),
            "single_photon" | "single-photon" | "sps" => Ok(Scheme::SinglePhoton),
            "cavity" => Ok(Scheme::Cavity),
            _ => Err(Error::Parse(format!("unknown scheme `{s}`"))),
        }
    }
}

/// GHZ preparation success probability: `eta_s^3 eta_d^3 / 32` from EPR
/// pairs, `/ 256` from single photons. For the cavity source the per-pair
/// emission probability into the detected arm, `p2 + p3`, plays the role of
/// `eta_s`.
pub fn success_prob_formula(scheme: Scheme, eta_s: f64, eta_d: f64) -> Result<f64> {
    check_unit("eta_s", eta_s)?;
    check_unit("eta_d", eta_d)?;
    let base = (eta_s * eta_d).powi(3);
    Ok(match scheme {
        Scheme::Epr | Scheme::Cavity => base / 32.0,
        Scheme::SinglePhoton => base / 256.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdParams {
    pub eta_s: f64,
    pub eta_d: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p3: Option<f64>,
}

impl Default for ThresholdParams {
    fn default() -> Self {
        ThresholdParams { eta_s: 1.0, eta_d: 1.0, f: None, p2: None, p3: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisName {
    EtaS,
    EtaD,
    P2,
    P3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: AxisName,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        let span = self.max - self.min;
        (0..self.steps).map(|i| self.min + span * i as f64 / (self.steps - 1) as f64).collect()
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    /// `name:min:max:steps`, e.g. `eta_d:0.5:1:51`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("grid `{s}` is not name:min:max:steps"));
        let parts: Vec<&str> = s.split(':').collect();
        let [name, min, max, steps] = parts[..] else { return Err(bad()) };
        let name = match name {
            "eta_s" | "eta-s" => AxisName::EtaS,
            "eta_d" | "eta-d" => AxisName::EtaD,
            "p2" => AxisName::P2,
            "p3" => AxisName::P3,
            _ => return Err(Error::Parse(format!("unknown grid axis `{name}`"))),
        };
        Ok(Axis {
            name,
            min: min.parse().map_err(|_| bad())?,
            max: max.parse().map_err(|_| bad())?,
            steps: steps.parse().map_err(|_| bad())?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub scheme: Scheme,
    pub axes: Vec<Axis>,
    /// Values for every parameter not swept.
    #[serde(default)]
    pub fixed: ThresholdParams,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() {
            return Err(Error::invalid("sweep needs at least one axis"));
        }
        for (i, a) in self.axes.iter().enumerate() {
            if a.steps < 2 {
                return Err(Error::invalid(format!("axis {:?} needs at least 2 steps", a.name)));
            }
            if !(0.0..=1.0).contains(&a.min) || !(0.0..=1.0).contains(&a.max) || a.min > a.max {
                return Err(Error::invalid(format!("axis {:?} bounds [{}, {}] outside [0, 1]", a.name, a.min, a.max)));
            }
            if self.axes[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::invalid(format!("axis {:?} given twice", a.name)));
            }
            let allowed = match self.scheme {
                Scheme::Epr | Scheme::SinglePhoton => matches!(a.name, AxisName::EtaS | AxisName::EtaD),
                Scheme::Cavity => matches!(a.name, AxisName::EtaD | AxisName::P2 | AxisName::P3),
            };
            if !allowed {
                return Err(Error::invalid(format!("axis {:?} does not apply to the {} scheme", a.name, self.scheme.name())));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub scheme: Scheme,
    pub eta_s: Option<f64>,
    pub eta_d: f64,
    pub f: f64,
    pub p2: Option<f64>,
    pub p3: Option<f64>,
    pub success_prob: f64,
    pub margin_loss_threshold: f64,
    pub margin_sps_threshold: Option<f64>,
    pub pass: bool,
}

/// Evaluates every applicable formula at one parameter point.
pub fn evaluate(scheme: Scheme, p: &ThresholdParams) -> Result<SweepRow> {
    check_unit("eta_d", p.eta_d)?;
    let row = match scheme {
        Scheme::Epr => {
            let loss = meets_loss_threshold(0.0, p.eta_d);
            SweepRow {
                scheme,
                eta_s: Some(p.eta_s),
                eta_d: p.eta_d,
                f: 0.0,
                p2: None,
                p3: None,
                success_prob: success_prob_formula(scheme, p.eta_s, p.eta_d)?,
                margin_loss_threshold: loss.margin,
                margin_sps_threshold: Some(meets_sps_threshold(p.eta_s, p.eta_d).margin),
                pass: p.eta_s > 0.0 && loss.passes,
            }
        }
        Scheme::SinglePhoton => {
            let f = loss_rate_sps(p.eta_s, p.eta_d)?;
            let loss = meets_loss_threshold(f, p.eta_d);
            SweepRow {
                scheme,
                eta_s: Some(p.eta_s),
                eta_d: p.eta_d,
                f,
                p2: None,
                p3: None,
                success_prob: success_prob_formula(scheme, p.eta_s, p.eta_d)?,
                margin_loss_threshold: loss.margin,
                margin_sps_threshold: Some(meets_sps_threshold(p.eta_s, p.eta_d).margin),
                pass: loss.passes,
            }
        }
        Scheme::Cavity => {
            let (p2, p3) = match (p.p2, p.p3) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(Error::invalid("cavity scheme needs p2 and p3")),
            };
            let f = loss_rate_cavity(p2, p3)?;
            let loss = meets_loss_threshold(f, p.eta_d);
            SweepRow {
                scheme,
                eta_s: None,
                eta_d: p.eta_d,
                f,
                p2: Some(p2),
                p3: Some(p3),
                success_prob: success_prob_formula(scheme, (p2 + p3).min(1.0), p.eta_d)?,
                margin_loss_threshold: loss.margin,
                margin_sps_threshold: None,
                pass: loss.passes,
            }
        }
    };
    Ok(row)
}

/// Rows in row-major order over the axes (last axis fastest).
pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let grids: Vec<Vec<f64>> = spec.axes.iter().map(Axis::values).collect();
    let total: usize = grids.iter().map(Vec::len).product();
    let mut rows = Vec::with_capacity(total);
    let mut index = vec![0usize; grids.len()];
    for _ in 0..total {
        let mut p = spec.fixed;
        for (axis, (&i, grid)) in spec.axes.iter().zip(index.iter().zip(&grids)) {
            let v = grid[i];
            match axis.name {
                AxisName::EtaS => p.eta_s = v,
                AxisName::EtaD => p.eta_d = v,
                AxisName::P2 => p.p2 = Some(v),
                AxisName::P3 => p.p3 = Some(v),
            }
        }
        rows.push(evaluate(spec.scheme, &p)?);
        for k in (0..index.len()).rev() {
            index[k] += 1;
            if index[k] < grids[k].len() {
                break;
            }
            index[k] = 0;
        }
    }
    Ok(rows)
}

pub const CSV_HEADER: [&str; 10] = [
    "scheme",
    "eta_s",
    "eta_d",
    "f",
    "p2",
    "p3",
    "success_prob",
    "margin_loss_threshold",
    "margin_sps_threshold",
    "pass",
];

/// Formats with 12 significant digits, fixed notation where it stays short.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let exp: i32 = sci[sci.find('e').expect("exponent") + 1..].parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.').to_string() } else { s };
        if s == "-0" { "0".into() } else { s }
    } else {
        let (mantissa, e) = sci.split_once('e').expect("exponent");
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{e}")
    }
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    let opt = |v: Option<f64>| v.map(fmt_sig).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.scheme.name().to_string(),
            opt(r.eta_s),
            fmt_sig(r.eta_d),
            fmt_sig(r.f),
            opt(r.p2),
            opt(r.p3),
            fmt_sig(r.success_prob),
            fmt_sig(r.margin_loss_threshold),
            opt(r.margin_sps_threshold),
            r.pass.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::Io { path: "<csv>".into(), source: e })?;
    Ok(())
}
