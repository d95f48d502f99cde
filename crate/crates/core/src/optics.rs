//! Passive optical elements, the photon-loss channel and threshold detectors.
//!
//! Conventions: a PBS transmits H in place and exchanges the V components of
//! its two ports with real coefficients. A rotator at angle `theta` maps
//! `H -> cos(theta) H + sin(theta) V`, `V -> sin(theta) H - cos(theta) V`, so
//! at 45 degrees it is an involution sending H to (H+V)/sqrt(2).

use std::collections::BTreeSet;
use std::f64::consts::FRAC_PI_4;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::fock::{Channel, FockBasisState, ModeId, Polarization, PureState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "ElementRecord", try_from = "ElementRecord")]
pub enum Element {
    Pbs { a: ModeId, b: ModeId },
    Rotator { mode: ModeId, angle: f64 },
    PolarizerH { mode: ModeId },
    Loss { mode: ModeId, transmissivity: f64 },
}

impl Element {
    pub fn pbs(a: u16, b: u16) -> Self {
        Element::Pbs { a: ModeId(a), b: ModeId(b) }
    }

    pub fn rotator_45(mode: u16) -> Self {
        Element::Rotator { mode: ModeId(mode), angle: FRAC_PI_4 }
    }

    pub fn polarizer_h(mode: u16) -> Self {
        Element::PolarizerH { mode: ModeId(mode) }
    }

    pub fn loss(mode: u16, transmissivity: f64) -> Self {
        Element::Loss { mode: ModeId(mode), transmissivity }
    }

    pub fn modes(&self) -> Vec<ModeId> {
        match *self {
            Element::Pbs { a, b } => vec![a, b],
            Element::Rotator { mode, .. } | Element::PolarizerH { mode } | Element::Loss { mode, .. } => vec![mode],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Element::Pbs { a, b } if a == b => Err(Error::invalid(format!("PBS needs two distinct modes, got {a} twice"))),
            Element::Rotator { angle, .. } if !angle.is_finite() => Err(Error::invalid("rotator angle must be finite")),
            Element::Loss { transmissivity: t, .. } if !(0.0..=1.0).contains(&t) => Err(Error::InvalidTransmissivity(t)),
            _ => Ok(()),
        }
    }
}

/// Serialized element: `{kind, modes, params}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ElementRecord {
    pub kind: String,
    pub modes: Vec<ModeId>,
    #[serde(default)]
    pub params: Vec<f64>,
}

impl From<Element> for ElementRecord {
    fn from(e: Element) -> Self {
        let (kind, params) = match e {
            Element::Pbs { .. } => ("pbs", vec![]),
            Element::Rotator { angle, .. } => ("rotator", vec![angle]),
            Element::PolarizerH { .. } => ("polarizer_h", vec![]),
            Element::Loss { transmissivity, .. } => ("loss", vec![transmissivity]),
        };
        ElementRecord { kind: kind.into(), modes: e.modes(), params }
    }
}

impl TryFrom<ElementRecord> for Element {
    type Error = Error;

    fn try_from(r: ElementRecord) -> Result<Self> {
        let arity = |m: usize, p: usize| {
            if r.modes.len() == m && r.params.len() == p {
                Ok(())
            } else {
                Err(Error::Parse(format!("element `{}` takes {m} modes and {p} params", r.kind)))
            }
        };
        let e = match r.kind.as_str() {
            "pbs" => {
                arity(2, 0)?;
                Element::Pbs { a: r.modes[0], b: r.modes[1] }
            }
            "rotator" => {
                arity(1, 1)?;
                Element::Rotator { mode: r.modes[0], angle: r.params[0] }
            }
            "polarizer_h" => {
                arity(1, 0)?;
                Element::PolarizerH { mode: r.modes[0] }
            }
            "loss" => {
                arity(1, 1)?;
                Element::Loss { mode: r.modes[0], transmissivity: r.params[0] }
            }
            other => return Err(Error::Parse(format!("unknown element kind `{other}`"))),
        };
        e.validate()?;
        Ok(e)
    }
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn rotator_matrix(angle: f64) -> DMatrix<Complex64> {
    let (s, c) = angle.sin_cos();
    DMatrix::from_row_slice(2, 2, &[real(c), real(s), real(s), real(-c)])
}

// channel order: aH, aV, bH, bV
fn pbs_matrix() -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(4, 4);
    m[(0, 0)] = real(1.0);
    m[(1, 3)] = real(1.0);
    m[(2, 2)] = real(1.0);
    m[(3, 1)] = real(1.0);
    m
}

/// Internal tags present on `modes` anywhere in the ensemble.
fn tags_on(ens: &Ensemble, modes: &[ModeId]) -> BTreeSet<u8> {
    ens.branches()
        .iter()
        .flat_map(|b| b.state.amplitudes().flat_map(|(k, _)| k.entries().iter().map(|(c, _)| *c)))
        .filter(|c| modes.contains(&c.mode))
        .map(|c| c.tag)
        .collect()
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// Kraus images of the loss channel on one channel: the k-th image holds
/// the components that lost k photons, with amplitude factor
/// `sqrt(C(n,k) t^(n-k) (1-t)^k)`.
fn lose_photons(state: &PureState, ch: Channel, t: f64) -> Vec<PureState> {
    let max_n = state.amplitudes().map(|(k, _)| k.count(ch)).max().unwrap_or(0);
    (0..=max_n)
        .map(|lost| {
            state.transform(|b| {
                let n = b.count(ch);
                if n < lost {
                    return None;
                }
                let p = binomial(n, lost) * t.powi((n - lost) as i32) * (1.0 - t).powi(lost as i32);
                Some((b.with_count(ch, n - lost), p.sqrt()))
            })
        })
        .filter(|s| !s.is_zero())
        .collect()
}

/// Loss channel of transmissivity `t` on a single polarization channel
/// (every tag).
pub fn apply_channel_loss(ens: &Ensemble, mode: ModeId, pol: Polarization, t: f64) -> Result<Ensemble> {
    ens.check_mode(mode)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidTransmissivity(t));
    }
    if t == 1.0 {
        return Ok(ens.clone());
    }
    let mut out = ens.clone();
    for tag in tags_on(ens, &[mode]) {
        let ch = Channel::new(mode, pol).with_tag(tag);
        out = out.branch_with(|s| Ok(lose_photons(s, ch, t)))?;
    }
    Ok(out)
}

fn map_per_tag(ens: &Ensemble, modes: &[ModeId], channels: impl Fn(u8) -> Vec<Channel>, u: &DMatrix<Complex64>) -> Result<Ensemble> {
    for &m in modes {
        ens.check_mode(m)?;
    }
    let tags = tags_on(ens, modes);
    ens.map_states(|s| {
        tags.iter().try_fold(s.clone(), |acc, &tag| acc.apply_linear_map(&channels(tag), u))
    })
}

pub fn apply_element(ens: &Ensemble, elem: &Element) -> Result<Ensemble> {
    elem.validate()?;
    match *elem {
        Element::Pbs { a, b } => map_per_tag(
            ens,
            &[a, b],
            |tag| {
                [
                    Channel::new(a, Polarization::H),
                    Channel::new(a, Polarization::V),
                    Channel::new(b, Polarization::H),
                    Channel::new(b, Polarization::V),
                ]
                .map(|c| c.with_tag(tag))
                .to_vec()
            },
            &pbs_matrix(),
        ),
        Element::Rotator { mode, angle } => map_per_tag(
            ens,
            &[mode],
            |tag| vec![Channel::new(mode, Polarization::H).with_tag(tag), Channel::new(mode, Polarization::V).with_tag(tag)],
            &rotator_matrix(angle),
        ),
        Element::PolarizerH { mode } => apply_channel_loss(ens, mode, Polarization::V, 0.0),
        Element::Loss { mode, transmissivity } => {
            let once = apply_channel_loss(ens, mode, Polarization::H, transmissivity)?;
            apply_channel_loss(&once, mode, Polarization::V, transmissivity)
        }
    }
}

/// H <-> V on one mode (all tags).
pub fn flip_polarization(ens: &Ensemble, mode: ModeId) -> Result<Ensemble> {
    ens.check_mode(mode)?;
    ens.map_states(|s| Ok(s.map_channels(|c| if c.mode == mode { c.flipped() } else { c })))
}

/// Detector efficiency folded in as a loss channel ahead of an ideal detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub efficiency: f64,
    #[serde(default)]
    pub number_resolving: bool,
}

impl DetectorModel {
    pub fn bucket(efficiency: f64) -> Self {
        DetectorModel { efficiency, number_resolving: false }
    }

    pub fn resolving(efficiency: f64) -> Self {
        DetectorModel { efficiency, number_resolving: true }
    }

    pub fn ideal() -> Self {
        Self::bucket(1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::invalid(format!("detector efficiency {} outside [0, 1]", self.efficiency)));
        }
        Ok(())
    }

    pub fn outcome(&self, photons: u32) -> ClickOutcome {
        ClickOutcome { clicked: photons > 0, count: self.number_resolving.then_some(photons) }
    }

    /// True for the outcome read as "registered exactly one photon": a click
    /// for bucket detectors, a count of one for resolving ones.
    pub fn heralds_single(&self, o: &ClickOutcome) -> bool {
        match o.count {
            Some(n) => n == 1,
            None => o.clicked,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ClickOutcome {
    pub clicked: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub count: Option<u32>,
}

#[derive(Debug, Clone)]
pub struct Detection {
    pub outcome: ClickOutcome,
    pub probability: f64,
    pub state: Ensemble,
}

/// Polarization-blind detection of `mode`. The mode is removed from every
/// returned ensemble.
pub fn detect(ens: &Ensemble, mode: ModeId, det: &DetectorModel) -> Result<Vec<Detection>> {
    det.validate()?;
    ens.check_mode(mode)?;
    let lossy = apply_element(ens, &Element::Loss { mode, transmissivity: det.efficiency })?;
    let groups = lossy.measure_modes(&[mode].into(), |config| det.outcome(config.photons_in_mode(mode)))?;
    Ok(groups.into_iter().map(|(outcome, probability, state)| Detection { outcome, probability, state }).collect())
}

/// Outcome of a polarization-resolved readout: one detector behind each PBS port.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ResolvedOutcome {
    pub h: ClickOutcome,
    pub v: ClickOutcome,
}

#[derive(Debug, Clone)]
pub struct ResolvedDetection {
    pub outcome: ResolvedOutcome,
    pub probability: f64,
    pub state: Ensemble,
}

/// Detection with a PBS in front of two detectors, so the H and V photon
/// numbers are read separately.
pub fn detect_resolved(ens: &Ensemble, mode: ModeId, det: &DetectorModel) -> Result<Vec<ResolvedDetection>> {
    det.validate()?;
    ens.check_mode(mode)?;
    let lossy = apply_element(ens, &Element::Loss { mode, transmissivity: det.efficiency })?;
    let count = |config: &FockBasisState, pol: Polarization| -> u32 {
        config.entries().iter().filter(|(c, _)| c.mode == mode && c.pol == pol).map(|&(_, n)| n).sum()
    };
    let groups = lossy.measure_modes(&[mode].into(), |config| ResolvedOutcome {
        h: det.outcome(count(config, Polarization::H)),
        v: det.outcome(count(config, Polarization::V)),
    })?;
    Ok(groups
        .into_iter()
        .map(|(outcome, probability, state)| ResolvedDetection { outcome, probability, state })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::trace_distance;
    use approx::assert_abs_diff_eq;

    fn ket_ens(modes: &[u16], counts: &[(Channel, u32)]) -> Ensemble {
        let s = PureState::basis(modes.iter().map(|&m| ModeId(m)), FockBasisState::from_counts(counts.iter().copied()))
            .unwrap();
        Ensemble::from_pure(s).unwrap()
    }

    #[test]
    fn pbs_routes_v_to_the_other_port() {
        let e = ket_ens(&[2, 4], &[(Channel::h(2), 1), (Channel::v(4), 1)]);
        let out = apply_element(&e, &Element::pbs(2, 4)).unwrap();
        let expected = ket_ens(&[2, 4], &[(Channel::h(2), 1), (Channel::v(2), 1)]);
        assert_abs_diff_eq!(trace_distance(&out, &expected).unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn loss_extremes() {
        let e = ket_ens(&[1], &[(Channel::h(1), 1)]);
        let same = apply_element(&e, &Element::loss(1, 1.0)).unwrap();
        assert_eq!(trace_distance(&same, &e).unwrap(), 0.0);
        let gone = apply_element(&e, &Element::loss(1, 0.0)).unwrap();
        assert_abs_diff_eq!(trace_distance(&gone, &Ensemble::vacuum_on([ModeId(1)])).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(gone.trace(), 1.0, epsilon = 1e-15);
        assert!(matches!(apply_element(&e, &Element::loss(1, 1.5)), Err(Error::InvalidTransmissivity(_))));
        assert!(matches!(apply_element(&e, &Element::loss(3, 0.5)), Err(Error::UnknownMode(ModeId(3)))));
    }

    #[test]
    fn polarizer_absorbs_v_only() {
        let e = ket_ens(&[1], &[(Channel::h(1), 1), (Channel::v(1), 2)]);
        let out = apply_element(&e, &Element::polarizer_h(1)).unwrap();
        let expected = ket_ens(&[1], &[(Channel::h(1), 1)]);
        assert_abs_diff_eq!(trace_distance(&out, &expected).unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn bucket_detection_examples() {
        let one = ket_ens(&[2], &[(Channel::h(2), 1)]);
        let r = detect(&one, ModeId(2), &DetectorModel::ideal()).unwrap();
        assert_eq!(r.len(), 1);
        assert!(r[0].outcome.clicked);
        assert_abs_diff_eq!(r[0].probability, 1.0, epsilon = 1e-15);
        assert!(r[0].state.modes().is_empty());

        let r = detect(&one, ModeId(2), &DetectorModel::bucket(0.8)).unwrap();
        assert_eq!(r.len(), 2);
        assert!(!r[0].outcome.clicked && r[1].outcome.clicked);
        assert_abs_diff_eq!(r[0].probability, 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(r[1].probability, 0.8, epsilon = 1e-15);

        // binomial oracle: P(click) = 1 - (1 - eta)^2
        let two = ket_ens(&[2], &[(Channel::h(2), 2)]);
        let r = detect(&two, ModeId(2), &DetectorModel::bucket(0.5)).unwrap();
        let click: f64 = r.iter().filter(|d| d.outcome.clicked).map(|d| d.probability).sum();
        assert_abs_diff_eq!(click, 0.75, epsilon = 1e-15);

        let r = detect(&two, ModeId(2), &DetectorModel::resolving(0.5)).unwrap();
        let probs: Vec<_> = r.iter().map(|d| (d.outcome.count.unwrap(), d.probability)).collect();
        assert_eq!(probs.len(), 3);
        assert_abs_diff_eq!(probs[0].1, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(probs[1].1, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(probs[2].1, 0.25, epsilon = 1e-15);
    }

    #[test]
    fn element_records_round_trip() {
        let elems = vec![Element::pbs(4, 6), Element::rotator_45(2), Element::polarizer_h(2), Element::loss(3, 0.25)];
        let text = serde_json::to_string(&elems).unwrap();
        assert!(text.contains(r#"{"kind":"pbs","modes":[4,6],"params":[]}"#));
        let back: Vec<Element> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, elems);
        assert!(serde_json::from_str::<Element>(r#"{"kind":"pbs","modes":[2,2]}"#).is_err());
        assert!(serde_json::from_str::<Element>(r#"{"kind":"mirror","modes":[2]}"#).is_err());
    }
}
