//! Three-photon GHZ construction from three pair sources.
//!
//! Sources sit on modes (1,2), (3,4), (5,6). The second photon of each pair
//! goes through a PBS network, a 45-degree rotator, an H polarizer and a
//! threshold detector; when all three detectors fire, modes 1, 3, 5 hold the
//! conditional output. The outcome tree over all click patterns is
//! enumerated exactly.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::fock::{FockBasisState, ModeId, Polarization};
use crate::fusion::{fit_id_ghz, ghz_pure};
use crate::optics::{apply_element, detect, ClickOutcome, DetectorModel, Element};
use crate::sources::{convert_bell, make_source, BellForm, SourceSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GhzCircuitLayout {
    /// (kept photon, detected photon) for each of the three sources.
    pub sources: [(ModeId, ModeId); 3],
    pub elements: Vec<Element>,
    /// Detection order.
    pub detectors: Vec<ModeId>,
    pub outputs: Vec<ModeId>,
}

/// PBS(4,6) then PBS(2,4), then a rotator and an H polarizer in front of each
/// detector on modes 2, 4, 6.
///
/// The PBS order fixes which error terms a double pair produces; this order
/// sends a V photon from detector arm 2 to 4, 4 to 6 and 6 to 2.
pub fn canonical_layout() -> GhzCircuitLayout {
    let mut elements = vec![Element::pbs(4, 6), Element::pbs(2, 4)];
    for m in [2, 4, 6] {
        elements.push(Element::rotator_45(m));
        elements.push(Element::polarizer_h(m));
    }
    GhzCircuitLayout {
        sources: [(ModeId(1), ModeId(2)), (ModeId(3), ModeId(4)), (ModeId(5), ModeId(6))],
        elements,
        detectors: vec![ModeId(2), ModeId(4), ModeId(6)],
        outputs: vec![ModeId(1), ModeId(3), ModeId(5)],
    }
}

impl GhzCircuitLayout {
    pub fn validate(&self) -> Result<()> {
        let mut declared = BTreeSet::new();
        for &(a, b) in &self.sources {
            if !declared.insert(a) || !declared.insert(b) {
                return Err(Error::invalid("source modes overlap"));
            }
        }
        for e in &self.elements {
            e.validate()?;
            if let Some(m) = e.modes().into_iter().find(|m| !declared.contains(m)) {
                return Err(Error::UnknownMode(m));
            }
        }
        let detected: BTreeSet<_> = self.detectors.iter().copied().collect();
        if detected.len() != self.detectors.len() {
            return Err(Error::invalid("a mode is detected more than once"));
        }
        let outputs: BTreeSet<_> = self.outputs.iter().copied().collect();
        if outputs.len() != self.outputs.len() || !detected.is_disjoint(&outputs) {
            return Err(Error::invalid("output modes must be distinct and undetected"));
        }
        let covered: BTreeSet<_> = detected.union(&outputs).copied().collect();
        if covered != declared {
            return Err(Error::invalid("every source mode must be either detected or output"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionalResult {
    /// Probability that every detector registers a photon.
    pub probability: f64,
    /// Conditional state on the output modes; `None` when the event is impossible.
    #[serde(skip)]
    pub state: Option<Ensemble>,
    pub click_pattern: Vec<ClickOutcome>,
    pub outputs: Vec<ModeId>,
    /// Every click pattern of the outcome tree with its probability.
    pub outcome_tree: Vec<(Vec<ClickOutcome>, f64)>,
}

/// Joint input state of the three sources, with Psi+ pairs converted to Phi+.
pub fn prepare_inputs(specs: &[SourceSpec; 3], layout: &GhzCircuitLayout) -> Result<Ensemble> {
    let mut joint: Option<Ensemble> = None;
    for (spec, &(a, b)) in specs.iter().zip(&layout.sources) {
        let mut src = make_source(spec, a, b)?;
        if let SourceSpec::Cavity { bell_form: BellForm::PsiPlus, .. } = spec {
            src = convert_bell(&src, b)?;
        }
        joint = Some(match joint {
            None => src,
            Some(j) => j.tensor(&src)?,
        });
    }
    Ok(joint.expect("three sources"))
}

pub fn run_ghz_circuit(specs: &[SourceSpec; 3], det: &DetectorModel, layout: &GhzCircuitLayout) -> Result<ConditionalResult> {
    layout.validate()?;
    det.validate()?;
    let mut state = prepare_inputs(specs, layout)?;
    for e in &layout.elements {
        state = apply_element(&state, e)?;
    }

    let mut tree: Vec<(Vec<ClickOutcome>, f64, Ensemble)> = vec![(Vec::new(), 1.0, state)];
    for &mode in &layout.detectors {
        let mut next = Vec::with_capacity(tree.len() * 2);
        for (pattern, p, ens) in tree {
            for d in detect(&ens, mode, det)? {
                let mut pat = pattern.clone();
                pat.push(d.outcome);
                next.push((pat, p * d.probability, d.state));
            }
        }
        tree = next;
    }

    let click_pattern = vec![det.outcome(1); layout.detectors.len()];
    let mut success = Vec::new();
    let mut outcome_tree = Vec::with_capacity(tree.len());
    for (pattern, p, ens) in tree {
        if pattern.iter().all(|o| det.heralds_single(o)) {
            success.push((p, ens));
        }
        outcome_tree.push((pattern, p));
    }
    let probability: f64 = success.iter().map(|(p, _)| p).sum();
    let state = if probability > 0.0 {
        Some(Ensemble::mixture(success.iter().map(|(p, e)| (p / probability, e)))?)
    } else {
        None
    };
    Ok(ConditionalResult { probability, state, click_pattern, outputs: layout.outputs.clone(), outcome_tree })
}

/// Diagonal weights of the conditional state grouped by photon-number pattern.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorClasses {
    /// One photon in every output mode.
    pub one_per_mode: f64,
    /// Some output mode holds two or more photons.
    pub double_occupancy: f64,
    /// Fewer photons than outputs and none doubled.
    pub photon_missing: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalTerm {
    pub basis: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputReport {
    pub probability: f64,
    pub ghz_fidelity: f64,
    /// `2 |<H..H|rho|V..V>|`: weight of the coherent GHZ part.
    pub ghz_coherence: f64,
    pub classes: ErrorClasses,
    /// Fock-basis populations with internal tags merged, largest first.
    pub diagonal: Vec<DiagonalTerm>,
    pub fitted_f: f64,
    pub residual: f64,
}

impl OutputReport {
    /// Population of a tag-blind basis state, e.g. `"1H@1 1V@1 1H@5"`.
    pub fn weight_of(&self, basis: &FockBasisState) -> f64 {
        let label = basis.to_string();
        self.diagonal.iter().find(|t| t.basis == label).map_or(0.0, |t| t.weight)
    }
}

pub fn analyze_output(result: &ConditionalResult) -> Result<OutputReport> {
    let outputs = &result.outputs[..];
    let state = match &result.state {
        Some(s) if result.probability > 0.0 => s,
        _ => return Err(Error::ZeroProbability),
    };
    let target = ghz_pure(outputs);
    let ghz_fidelity = state.expectation(&target);
    let all = |pol| FockBasisState::from_counts(outputs.iter().map(|&m| (crate::fock::Channel::new(m, pol), 1)));
    let ghz_coherence = 2.0 * state.element(&all(Polarization::H), &all(Polarization::V)).norm();

    let mut merged: BTreeMap<FockBasisState, f64> = BTreeMap::new();
    for (k, p) in state.diagonal() {
        *merged.entry(k.untagged()).or_default() += p;
    }
    let mut classes = ErrorClasses::default();
    for (k, p) in &merged {
        let counts: Vec<u32> = outputs.iter().map(|&m| k.photons_in_mode(m)).collect();
        if counts.iter().any(|&n| n >= 2) {
            classes.double_occupancy += p;
        } else if counts.iter().all(|&n| n == 1) {
            classes.one_per_mode += p;
        } else {
            classes.photon_missing += p;
        }
    }
    let mut diagonal: Vec<DiagonalTerm> =
        merged.into_iter().map(|(k, weight)| DiagonalTerm { basis: k.to_string(), weight }).collect();
    diagonal.sort_by(|a, b| b.weight.total_cmp(&a.weight).then_with(|| a.basis.cmp(&b.basis)));

    let fit = fit_id_ghz(state, outputs.len())?;
    Ok(OutputReport {
        probability: result.probability,
        ghz_fidelity,
        ghz_coherence,
        classes,
        diagonal,
        fitted_f: fit.f,
        residual: fit.residual,
    })
}

/// The six double-occupancy terms a double pair leaves on the outputs of the
/// canonical layout: (mode with H and V, single-photon mode, its polarization).
pub fn double_pair_terms() -> [FockBasisState; 6] {
    use crate::fock::Channel;
    let term = |double: u16, single: Channel| {
        FockBasisState::from_counts([(Channel::h(double), 1), (Channel::v(double), 1), (single, 1)])
    };
    [
        term(1, Channel::h(5)),
        term(1, Channel::v(3)),
        term(3, Channel::h(1)),
        term(3, Channel::v(5)),
        term(5, Channel::v(1)),
        term(5, Channel::h(3)),
    ]
}
