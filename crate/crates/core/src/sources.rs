//! Photon-pair sources as ensembles on a pair of spatial modes.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::fock::{Channel, FockBasisState, ModeId, Polarization, PureState};
use crate::optics::flip_polarization;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BellForm {
    /// (|HH> + |VV>)/sqrt(2)
    #[default]
    PhiPlus,
    /// (|HV> + |VH>)/sqrt(2)
    PsiPlus,
}

/// How the second-order emission of a pair source is modelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DoublePairModel {
    /// Two pairs in distinguishable internal modes: `|Phi+>|Phi+>`, the
    /// second copy carrying channel tag 1.
    #[default]
    Distinguishable,
    /// Both pairs in the same modes: the pair-creation operator applied twice.
    Bosonic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SourceSpec {
    PerfectEpr,
    HeraldedEpr {
        eta_s: f64,
    },
    /// Pair source truncated after the double-pair term.
    Spdc {
        eta_s: f64,
        x: f64,
        #[serde(default)]
        double_pair: DoublePairModel,
    },
    /// Pair emitter with independent loss of either photon.
    Cavity {
        p0: f64,
        p1: f64,
        p2: f64,
        p3: f64,
        #[serde(default)]
        bell_form: BellForm,
    },
}

impl SourceSpec {
    pub fn heralded(eta_s: f64) -> Self {
        SourceSpec::HeraldedEpr { eta_s }
    }

    pub fn spdc(eta_s: f64, x: f64) -> Self {
        SourceSpec::Spdc { eta_s, x, double_pair: DoublePairModel::default() }
    }

    pub fn cavity(p0: f64, p1: f64, p2: f64, p3: f64) -> Self {
        SourceSpec::Cavity { p0, p1, p2, p3, bell_form: BellForm::PhiPlus }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} = {v} outside [0, 1]")))
            }
        };
        match *self {
            SourceSpec::PerfectEpr => Ok(()),
            SourceSpec::HeraldedEpr { eta_s } => unit("eta_s", eta_s),
            SourceSpec::Spdc { eta_s, x, .. } => {
                unit("eta_s", eta_s)?;
                if x < 0.0 || !x.is_finite() {
                    return Err(Error::invalid(format!("x = {x} must be a finite non-negative number")));
                }
                Ok(())
            }
            SourceSpec::Cavity { p0, p1, p2, p3, .. } => {
                for (n, v) in [("p0", p0), ("p1", p1), ("p2", p2), ("p3", p3)] {
                    unit(n, v)?;
                }
                let sum = p0 + p1 + p2 + p3;
                if (sum - 1.0).abs() > 1e-12 {
                    return Err(Error::invalid(format!("p0..p3 sum to {sum}, expected 1")));
                }
                Ok(())
            }
        }
    }

    /// Largest photon number the source can emit.
    pub fn max_photons(&self) -> u32 {
        match self {
            SourceSpec::Spdc { .. } => 4,
            _ => 2,
        }
    }
}

fn amp(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

pub fn bell_state(form: BellForm, a: ModeId, b: ModeId, tag: u8) -> PureState {
    use Polarization::{H, V};
    let pairs = match form {
        BellForm::PhiPlus => [(H, H), (V, V)],
        BellForm::PsiPlus => [(H, V), (V, H)],
    };
    let amps = pairs.map(|(pa, pb)| {
        (
            FockBasisState::from_counts([(Channel::new(a, pa).with_tag(tag), 1), (Channel::new(b, pb).with_tag(tag), 1)]),
            amp(FRAC_1_SQRT_2),
        )
    });
    PureState::from_amplitudes([a, b], amps).expect("two photons are within the cap")
}

/// `(a_H† b_H† + a_V† b_V†)^2 |0>`, normalized:
/// `(|2H,2H> + |HV,HV> + |2V,2V>)/sqrt(3)`.
pub fn two_pair_state(a: ModeId, b: ModeId) -> PureState {
    let pair = |s: &PureState| -> PureState {
        let hh = s.create_photon(Channel::new(a, Polarization::H)).and_then(|t| t.create_photon(Channel::new(b, Polarization::H)));
        let vv = s.create_photon(Channel::new(a, Polarization::V)).and_then(|t| t.create_photon(Channel::new(b, Polarization::V)));
        let (hh, vv) = (hh.expect("within cap"), vv.expect("within cap"));
        PureState::from_amplitudes(
            [a, b],
            hh.amplitudes().chain(vv.amplitudes()).map(|(k, c)| (k.clone(), c * FRAC_1_SQRT_2)),
        )
        .expect("within cap")
    };
    let once = pair(&PureState::vacuum_on([a, b]));
    pair(&once).normalized().expect("nonzero")
}

/// Two pairs in distinguishable internal modes (tags 0 and 1).
pub fn distinguishable_two_pair_state(a: ModeId, b: ModeId) -> PureState {
    let first = bell_state(BellForm::PhiPlus, a, b, 0);
    let second = bell_state(BellForm::PhiPlus, a, b, 1);
    let amps: Vec<_> = first
        .amplitudes()
        .flat_map(|(k1, c1)| {
            second.amplitudes().map(move |(k2, c2)| {
                (FockBasisState::from_counts(k1.entries().iter().chain(k2.entries()).copied()), c1 * c2)
            })
        })
        .collect();
    PureState::from_amplitudes([a, b], amps).expect("four photons are within the cap")
}

/// Density operator of `spec` on modes `(mode_a, mode_b)`. `mode_a` is the
/// photon that is kept, `mode_b` the one sent to the detectors.
pub fn make_source(spec: &SourceSpec, mode_a: ModeId, mode_b: ModeId) -> Result<Ensemble> {
    spec.validate()?;
    if mode_a == mode_b {
        return Err(Error::invalid(format!("source modes must differ, got {mode_a} twice")));
    }
    let modes = [mode_a, mode_b];
    let vac = PureState::vacuum_on(modes);
    let single = |m: ModeId, pol| PureState::basis(modes, FockBasisState::single(Channel::new(m, pol)));
    let phi = bell_state(BellForm::PhiPlus, mode_a, mode_b, 0);
    let parts = match *spec {
        SourceSpec::PerfectEpr => vec![(1.0, phi)],
        SourceSpec::HeraldedEpr { eta_s } => vec![(1.0 - eta_s, vac), (eta_s, phi)],
        SourceSpec::Spdc { eta_s, x, double_pair } => {
            let double_weight = x * eta_s * eta_s / 2.0;
            let z = 1.0 + double_weight;
            let double = match double_pair {
                DoublePairModel::Bosonic => two_pair_state(mode_a, mode_b),
                DoublePairModel::Distinguishable => distinguishable_two_pair_state(mode_a, mode_b),
            };
            vec![((1.0 - eta_s) / z, vac), (eta_s / z, phi), (double_weight / z, double)]
        }
        SourceSpec::Cavity { p0, p1, p2, p3, bell_form } => vec![
            (p0, vac),
            (p1 / 2.0, single(mode_a, Polarization::H)?),
            (p1 / 2.0, single(mode_a, Polarization::V)?),
            (p2 / 2.0, single(mode_b, Polarization::H)?),
            (p2 / 2.0, single(mode_b, Polarization::V)?),
            (p3, bell_state(bell_form, mode_a, mode_b, 0)),
        ],
    };
    Ensemble::from_branches(modes, parts)
}

/// Flips H and V on `mode`, turning Psi+ pairs into Phi+ pairs.
pub fn convert_bell(ens: &Ensemble, mode: ModeId) -> Result<Ensemble> {
    flip_polarization(ens, mode)
}
