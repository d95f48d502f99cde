//! GHZ and independently degraded (ID) GHZ states, and the type-II fusion
//! gate that joins two of them.

use std::collections::BTreeSet;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensemble::{trace_distance, Ensemble};
use crate::error::{Error, Result};
use crate::fock::{Channel, FockBasisState, ModeId, Polarization, PureState};
use crate::optics::{apply_element, detect_resolved, flip_polarization, ClickOutcome, DetectorModel, Element, ResolvedOutcome};

/// `(|H...H> + |V...V>)/sqrt(2)` on the given modes.
pub fn ghz_pure(modes: &[ModeId]) -> PureState {
    let ket = |pol| FockBasisState::from_counts(modes.iter().map(|&m| (Channel::new(m, pol), 1)));
    PureState::from_amplitudes(
        modes.iter().copied(),
        [
            (ket(Polarization::H), Complex64::new(FRAC_1_SQRT_2, 0.0)),
            (ket(Polarization::V), Complex64::new(FRAC_1_SQRT_2, 0.0)),
        ],
    )
    .expect("one photon per mode")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdGhzSpec {
    pub f: f64,
    pub modes: Vec<ModeId>,
}

impl IdGhzSpec {
    pub fn new(f: f64, modes: impl IntoIterator<Item = impl Into<ModeId>>) -> Self {
        IdGhzSpec { f, modes: modes.into_iter().map(Into::into).collect() }
    }

    pub fn n(&self) -> usize {
        self.modes.len()
    }
}

/// GHZ state whose photons are each lost independently with probability
/// `f`: the full survivor set stays coherent, a proper nonempty subset S
/// decoheres into `1/2 (|H..H><H..H| + |V..V><V..V|)` on S, and the empty
/// set is the vacuum.
pub fn id_ghz(spec: &IdGhzSpec) -> Result<Ensemble> {
    let n = spec.n();
    if n == 0 {
        return Err(Error::invalid("ID GHZ state needs at least one mode"));
    }
    if n > 16 {
        return Err(Error::invalid(format!("ID GHZ state on {n} modes is too large to enumerate")));
    }
    if !(0.0..=1.0).contains(&spec.f) {
        return Err(Error::invalid(format!("loss rate f = {} outside [0, 1]", spec.f)));
    }
    let distinct: BTreeSet<_> = spec.modes.iter().collect();
    if distinct.len() != n {
        return Err(Error::invalid("ID GHZ modes must be distinct"));
    }
    let f = spec.f;
    let mut parts = Vec::new();
    for mask in 0u32..(1 << n) {
        let survivors: Vec<ModeId> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| spec.modes[i]).collect();
        let k = survivors.len() as i32;
        let w = f.powi(n as i32 - k) * (1.0 - f).powi(k);
        if w == 0.0 {
            continue;
        }
        if survivors.is_empty() {
            parts.push((w, PureState::vacuum_on(spec.modes.iter().copied())));
        } else if survivors.len() == n {
            parts.push((w, ghz_pure(&survivors)));
        } else {
            for pol in Polarization::BOTH {
                let ket = FockBasisState::from_counts(survivors.iter().map(|&m| (Channel::new(m, pol), 1)));
                parts.push((w / 2.0, PureState::basis(spec.modes.iter().copied(), ket)?));
            }
        }
    }
    Ensemble::from_branches(spec.modes.iter().copied(), parts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdGhzFit {
    pub f: f64,
    pub residual: f64,
}

/// Estimates the loss rate from the mean photon number and reports how far
/// the state is from the ID GHZ state with that rate. The state's declared
/// modes are the qubit labels.
pub fn fit_id_ghz(ens: &Ensemble, n: usize) -> Result<IdGhzFit> {
    let modes: Vec<ModeId> = ens.modes().iter().copied().collect();
    if modes.len() != n {
        return Err(Error::DimensionMismatch(format!("state has {} modes, expected {n}", modes.len())));
    }
    let f = (1.0 - ens.mean_photon_number() / ens.trace() / n as f64).clamp(0.0, 1.0);
    let reference = id_ghz(&IdGhzSpec { f, modes })?;
    Ok(IdGhzFit { f, residual: trace_distance(ens, &reference)? })
}

/// `n_a + n_b - 2`.
pub fn qubit_count_after_fusion(n_a: usize, n_b: usize) -> Result<usize> {
    if n_a < 1 || n_b < 1 {
        return Err(Error::invalid("fusion needs at least one qubit on each side"));
    }
    Ok(n_a + n_b - 2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FusionLabel {
    Success,
    Failure,
    LossDetected,
}

/// Readout of both fusion ports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FusionPattern {
    pub a: ResolvedOutcome,
    pub b: ResolvedOutcome,
}

impl FusionPattern {
    fn clicks(o: &ResolvedOutcome) -> usize {
        usize::from(o.h.clicked) + usize::from(o.v.clicked)
    }

    fn multi_count(o: &ClickOutcome) -> bool {
        o.count.is_some_and(|n| n >= 2)
    }

    pub fn label(&self) -> FusionLabel {
        let single = |o: &ResolvedOutcome| Self::clicks(o) == 1 && !Self::multi_count(&o.h) && !Self::multi_count(&o.v);
        if single(&self.a) && single(&self.b) {
            return FusionLabel::Success;
        }
        let clicks = Self::clicks(&self.a) + Self::clicks(&self.b);
        let bunched = [self.a.h, self.a.v, self.b.h, self.b.v].iter().any(Self::multi_count);
        if clicks >= 2 || bunched {
            FusionLabel::Failure
        } else {
            FusionLabel::LossDetected
        }
    }

    /// Success with different polarizations at the two ports: the fused
    /// state carries a bit flip on the second group.
    pub fn odd_parity(&self) -> bool {
        self.a.h.clicked != self.b.h.clicked
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FusionOutcome {
    pub label: FusionLabel,
    pub pattern: FusionPattern,
    pub probability: f64,
    #[serde(skip)]
    pub state: Ensemble,
}

/// Type-II fusion of qubit `qubit_a` of `left` with qubit `qubit_b` of
/// `right`: 45-degree rotators on both, a PBS, rotators again, then
/// polarization-resolved detection of both ports. Both measured photons are
/// consumed. On odd-parity successes the surviving modes of `right` are
/// flipped so every success leaves the standard `|H..H> + |V..V>` form.
pub fn fuse_type_ii(
    left: &Ensemble,
    right: &Ensemble,
    qubit_a: ModeId,
    qubit_b: ModeId,
    det: &DetectorModel,
) -> Result<Vec<FusionOutcome>> {
    left.check_mode(qubit_a)?;
    right.check_mode(qubit_b)?;
    let joint = left.tensor(right)?;
    let [a, b] = [qubit_a, qubit_b];
    let steps = [
        Element::Rotator { mode: a, angle: std::f64::consts::FRAC_PI_4 },
        Element::Rotator { mode: b, angle: std::f64::consts::FRAC_PI_4 },
        Element::Pbs { a, b },
        Element::Rotator { mode: a, angle: std::f64::consts::FRAC_PI_4 },
        Element::Rotator { mode: b, angle: std::f64::consts::FRAC_PI_4 },
    ];
    let mut state = joint;
    for e in &steps {
        state = apply_element(&state, e)?;
    }
    let right_rest: Vec<ModeId> = right.modes().iter().copied().filter(|&m| m != qubit_b).collect();

    let mut outcomes = Vec::new();
    for first in detect_resolved(&state, a, det)? {
        for second in detect_resolved(&first.state, b, det)? {
            let pattern = FusionPattern { a: first.outcome, b: second.outcome };
            let label = pattern.label();
            let mut fused = second.state;
            if label == FusionLabel::Success && pattern.odd_parity() {
                for &m in &right_rest {
                    fused = flip_polarization(&fused, m)?;
                }
            }
            outcomes.push(FusionOutcome { label, pattern, probability: first.probability * second.probability, state: fused });
        }
    }
    Ok(outcomes)
}

/// Probability and conditional state of the Success event (all success
/// patterns mixed), or `None` when success is impossible.
pub fn success_state(outcomes: &[FusionOutcome]) -> Result<Option<(f64, Ensemble)>> {
    let parts: Vec<(f64, &Ensemble)> =
        outcomes.iter().filter(|o| o.label == FusionLabel::Success).map(|o| (o.probability, &o.state)).collect();
    let p: f64 = parts.iter().map(|(p, _)| p).sum();
    if p <= 0.0 {
        return Ok(None);
    }
    let mix = Ensemble::mixture(parts.into_iter().map(|(q, e)| (q / p, e)))?;
    Ok(Some((p, mix)))
}
