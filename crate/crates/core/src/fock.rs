//! Sparse multimode Fock states in the polarization-resolved basis.
//!
//! A photon lives in a [`Channel`]: a spatial mode, a polarization and an
//! internal tag. The tag is an extra degree of freedom that passive optics
//! never touches; photons with different tags are mutually distinguishable
//! (different time bins, say). Almost everything uses tag 0.
//!
//! Linear-optical elements act on creation operators,
//! `a_i† -> sum_j U[i][j] b_j†`, so [`PureState::apply_linear_map`] rewrites
//! each basis ket as a monomial of creation operators, substitutes and
//! re-expands with the bosonic `sqrt(n!)` factors.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Amplitudes with magnitude below this are dropped after every operation.
pub const PRUNE_EPSILON: f64 = 1e-14;

/// Default bound on the photon number of any basis state. Three double-pair
/// sources carry at most twelve photons.
pub const DEFAULT_PHOTON_CAP: u32 = 12;

const UNITARY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModeId(pub u16);

impl From<u16> for ModeId {
    fn from(v: u16) -> Self {
        ModeId(v)
    }
}

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    pub const BOTH: [Polarization; 2] = [Polarization::H, Polarization::V];

    pub fn flipped(self) -> Self {
        match self {
            Polarization::H => Polarization::V,
            Polarization::V => Polarization::H,
        }
    }
}

/// One bosonic creation operator: (mode, polarization, tag).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Channel {
    pub mode: ModeId,
    pub pol: Polarization,
    pub tag: u8,
}

impl Channel {
    pub fn new(mode: impl Into<ModeId>, pol: Polarization) -> Self {
        Channel { mode: mode.into(), pol, tag: 0 }
    }

    pub fn h(mode: u16) -> Self {
        Channel::new(mode, Polarization::H)
    }

    pub fn v(mode: u16) -> Self {
        Channel::new(mode, Polarization::V)
    }

    pub fn with_tag(mut self, tag: u8) -> Self {
        self.tag = tag;
        self
    }

    pub fn flipped(self) -> Self {
        Channel { pol: self.pol.flipped(), ..self }
    }
}

/// Occupation numbers over channels. Entries are kept sorted by channel and
/// zero counts are never stored, so derived equality and ordering are the
/// canonical ones.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FockBasisState {
    entries: Vec<(Channel, u32)>,
}

impl FockBasisState {
    pub fn vacuum() -> Self {
        Self::default()
    }

    /// Builds a basis state from (channel, count) pairs; repeated channels add up.
    pub fn from_counts(counts: impl IntoIterator<Item = (Channel, u32)>) -> Self {
        let mut map: BTreeMap<Channel, u32> = BTreeMap::new();
        for (ch, n) in counts {
            *map.entry(ch).or_default() += n;
        }
        FockBasisState { entries: map.into_iter().filter(|&(_, n)| n > 0).collect() }
    }

    pub fn single(ch: Channel) -> Self {
        FockBasisState { entries: vec![(ch, 1)] }
    }

    pub fn entries(&self) -> &[(Channel, u32)] {
        &self.entries
    }

    pub fn is_vacuum(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, ch: Channel) -> u32 {
        match self.entries.binary_search_by(|(c, _)| c.cmp(&ch)) {
            Ok(i) => self.entries[i].1,
            Err(_) => 0,
        }
    }

    pub fn with_count(&self, ch: Channel, n: u32) -> Self {
        let mut entries = self.entries.clone();
        match entries.binary_search_by(|(c, _)| c.cmp(&ch)) {
            Ok(i) if n == 0 => {
                entries.remove(i);
            }
            Ok(i) => entries[i].1 = n,
            Err(_) if n == 0 => {}
            Err(i) => entries.insert(i, (ch, n)),
        }
        FockBasisState { entries }
    }

    pub fn total_photons(&self) -> u32 {
        self.entries.iter().map(|&(_, n)| n).sum()
    }

    pub fn photons_in_mode(&self, mode: ModeId) -> u32 {
        self.entries.iter().filter(|(c, _)| c.mode == mode).map(|&(_, n)| n).sum()
    }

    pub fn modes(&self) -> BTreeSet<ModeId> {
        self.entries.iter().map(|(c, _)| c.mode).collect()
    }

    /// Splits into (part on `modes`, remainder).
    pub fn split_modes(&self, modes: &BTreeSet<ModeId>) -> (FockBasisState, FockBasisState) {
        let (inside, outside): (Vec<_>, Vec<_>) =
            self.entries.iter().partition(|(c, _)| modes.contains(&c.mode));
        (FockBasisState { entries: inside }, FockBasisState { entries: outside })
    }

    /// Merges entries that differ only in their tag.
    pub fn untagged(&self) -> Self {
        Self::from_counts(self.entries.iter().map(|&(c, n)| (c.with_tag(0), n)))
    }

    pub fn map_channels(&self, f: impl Fn(Channel) -> Channel) -> Self {
        Self::from_counts(self.entries.iter().map(|&(c, n)| (f(c), n)))
    }

    fn merged(&self, other: &FockBasisState) -> Self {
        Self::from_counts(self.entries.iter().chain(other.entries.iter()).copied())
    }
}

impl fmt::Display for FockBasisState {
    /// `1H@1 1V@2`, tagged channels as `1H@1#1`, the vacuum as an empty string.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (c, n)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{}{:?}@{}", n, c.pol, c.mode)?;
            if c.tag != 0 {
                write!(f, "#{}", c.tag)?;
            }
        }
        Ok(())
    }
}

impl FromStr for FockBasisState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "vac" {
            return Ok(Self::vacuum());
        }
        let mut counts = Vec::new();
        for token in s.split_whitespace() {
            let bad = || Error::Parse(format!("bad basis token `{token}`"));
            let pol_at = token.find(['H', 'V']).ok_or_else(bad)?;
            let n: u32 = token[..pol_at].parse().map_err(|_| bad())?;
            let pol = if &token[pol_at..pol_at + 1] == "H" { Polarization::H } else { Polarization::V };
            let rest = token[pol_at + 1..].strip_prefix('@').ok_or_else(bad)?;
            let (mode, tag) = match rest.split_once('#') {
                Some((m, t)) => (m, t.parse::<u8>().map_err(|_| bad())?),
                None => (rest, 0),
            };
            let mode: u16 = mode.parse().map_err(|_| bad())?;
            counts.push((Channel::new(mode, pol).with_tag(tag), n));
        }
        Ok(Self::from_counts(counts))
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Superposition over Fock basis states on a declared set of modes.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    modes: BTreeSet<ModeId>,
    amplitudes: BTreeMap<FockBasisState, Complex64>,
    photon_cap: u32,
}

impl PureState {
    pub fn vacuum() -> Self {
        Self::vacuum_on(std::iter::empty())
    }

    pub fn vacuum_on(modes: impl IntoIterator<Item = ModeId>) -> Self {
        let mut amplitudes = BTreeMap::new();
        amplitudes.insert(FockBasisState::vacuum(), Complex64::new(1.0, 0.0));
        PureState { modes: modes.into_iter().collect(), amplitudes, photon_cap: DEFAULT_PHOTON_CAP }
    }

    /// Builds a state from explicit amplitudes. Modes touched by the support
    /// are declared automatically on top of `modes`.
    pub fn from_amplitudes(
        modes: impl IntoIterator<Item = ModeId>,
        amplitudes: impl IntoIterator<Item = (FockBasisState, Complex64)>,
    ) -> Result<Self> {
        let mut modes: BTreeSet<ModeId> = modes.into_iter().collect();
        let mut map: BTreeMap<FockBasisState, Complex64> = BTreeMap::new();
        for (b, a) in amplitudes {
            modes.extend(b.modes());
            *map.entry(b).or_default() += a;
        }
        let state = PureState { modes, amplitudes: map, photon_cap: DEFAULT_PHOTON_CAP }.pruned();
        state.check_cap()?;
        Ok(state)
    }

    pub fn basis(modes: impl IntoIterator<Item = ModeId>, b: FockBasisState) -> Result<Self> {
        Self::from_amplitudes(modes, [(b, Complex64::new(1.0, 0.0))])
    }

    pub fn modes(&self) -> &BTreeSet<ModeId> {
        &self.modes
    }

    pub fn declare_modes(mut self, modes: impl IntoIterator<Item = ModeId>) -> Self {
        self.modes.extend(modes);
        self
    }

    pub fn photon_cap(&self) -> u32 {
        self.photon_cap
    }

    pub fn with_photon_cap(mut self, cap: u32) -> Result<Self> {
        self.photon_cap = cap;
        self.check_cap()?;
        Ok(self)
    }

    pub fn amplitudes(&self) -> impl Iterator<Item = (&FockBasisState, &Complex64)> {
        self.amplitudes.iter()
    }

    pub fn amplitude(&self, b: &FockBasisState) -> Complex64 {
        self.amplitudes.get(b).copied().unwrap_or_default()
    }

    pub fn support_len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_zero(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Largest total photon number in the support.
    pub fn total_photons(&self) -> u32 {
        self.amplitudes.keys().map(FockBasisState::total_photons).max().unwrap_or(0)
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::ZeroProbability);
        }
        Ok(self.scaled(Complex64::new(1.0 / n, 0.0)))
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let amplitudes = self.amplitudes.iter().map(|(b, a)| (b.clone(), a * c)).collect();
        PureState { amplitudes, ..self.clone() }.pruned()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> Complex64 {
        let (small, large, conj_small) = if self.amplitudes.len() <= other.amplitudes.len() {
            (self, other, true)
        } else {
            (other, self, false)
        };
        let mut acc = Complex64::default();
        for (b, a) in &small.amplitudes {
            if let Some(c) = large.amplitudes.get(b) {
                acc += if conj_small { a.conj() * c } else { c.conj() * a };
            }
        }
        acc
    }

    /// Applies `a†` on `ch`; each ket `|n>` becomes `sqrt(n+1)|n+1>`. Not renormalized.
    pub fn create_photon(&self, ch: Channel) -> Result<Self> {
        let mut amplitudes = BTreeMap::new();
        for (b, a) in &self.amplitudes {
            let n = b.count(ch);
            amplitudes.insert(b.with_count(ch, n + 1), a * f64::from(n + 1).sqrt());
        }
        let mut modes = self.modes.clone();
        modes.insert(ch.mode);
        let out = PureState { modes, amplitudes, photon_cap: self.photon_cap };
        out.check_cap()?;
        Ok(out)
    }

    /// Tensor product with a state on disjoint modes.
    pub fn tensor(&self, other: &PureState) -> Result<Self> {
        if let Some(m) = self.modes.intersection(&other.modes).next() {
            return Err(Error::invalid(format!("tensor product over shared mode {m}")));
        }
        let mut amplitudes = BTreeMap::new();
        for (b1, a1) in &self.amplitudes {
            for (b2, a2) in &other.amplitudes {
                amplitudes.insert(b1.merged(b2), a1 * a2);
            }
        }
        let out = PureState {
            modes: self.modes.union(&other.modes).copied().collect(),
            amplitudes,
            photon_cap: self.photon_cap.min(other.photon_cap),
        }
        .pruned();
        out.check_cap()?;
        Ok(out)
    }

    /// Passive linear transformation of the listed channels: every creation
    /// operator `a_i†` on `inputs[i]` is replaced by `sum_j u[(i, j)] a_j†`.
    pub fn apply_linear_map(&self, inputs: &[Channel], u: &DMatrix<Complex64>) -> Result<Self> {
        let k = inputs.len();
        if u.nrows() != k || u.ncols() != k {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix for {k} channels",
                u.nrows(),
                u.ncols()
            )));
        }
        check_unitary(u)?;
        let distinct: BTreeSet<_> = inputs.iter().collect();
        if distinct.len() != k {
            return Err(Error::invalid("linear map channels must be distinct"));
        }
        if let Some(c) = inputs.iter().find(|c| !self.modes.contains(&c.mode)) {
            return Err(Error::UnknownMode(c.mode));
        }

        let mut out: BTreeMap<FockBasisState, Complex64> = BTreeMap::new();
        for (basis, amp) in &self.amplitudes {
            let counts: Vec<u32> = inputs.iter().map(|c| basis.count(*c)).collect();
            if counts.iter().all(|&n| n == 0) {
                *out.entry(basis.clone()).or_default() += amp;
                continue;
            }
            let rest = inputs.iter().fold(basis.clone(), |b, c| b.with_count(*c, 0));

            // |n> = prod (a_i†)^n_i / sqrt(n_i!) |0>
            let norm: f64 = counts.iter().map(|&n| factorial(n)).product::<f64>().sqrt();
            let mut poly: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
            poly.insert(vec![0; k], Complex64::new(1.0 / norm, 0.0));
            for (i, &n) in counts.iter().enumerate() {
                for _ in 0..n {
                    let mut next: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
                    for (exps, c) in &poly {
                        for j in 0..k {
                            let uij = u[(i, j)];
                            if uij == Complex64::default() {
                                continue;
                            }
                            let mut e = exps.clone();
                            e[j] += 1;
                            *next.entry(e).or_default() += c * uij;
                        }
                    }
                    poly = next;
                }
            }
            for (exps, c) in poly {
                let bosonic: f64 = exps.iter().map(|&m| factorial(m)).product::<f64>().sqrt();
                let b = inputs.iter().zip(&exps).fold(rest.clone(), |b, (ch, &m)| b.with_count(*ch, m));
                *out.entry(b).or_default() += amp * c * bosonic;
            }
        }
        Ok(PureState { modes: self.modes.clone(), amplitudes: out, photon_cap: self.photon_cap }.pruned())
    }

    /// Relabels channels through `f` (a permutation of channels, e.g. a
    /// polarization flip). Modes produced by `f` must already be declared.
    pub fn map_channels(&self, f: impl Fn(Channel) -> Channel) -> Self {
        let mut amplitudes = BTreeMap::new();
        for (b, a) in &self.amplitudes {
            *amplitudes.entry(b.map_channels(&f)).or_default() += a;
        }
        PureState { amplitudes, ..self.clone() }
    }

    /// Multiplies each amplitude by `g(basis)` and re-keys by the returned
    /// basis state. Used by Kraus-style maps.
    pub(crate) fn transform(
        &self,
        mut g: impl FnMut(&FockBasisState) -> Option<(FockBasisState, f64)>,
    ) -> Self {
        let mut amplitudes: BTreeMap<FockBasisState, Complex64> = BTreeMap::new();
        for (b, a) in &self.amplitudes {
            if let Some((nb, c)) = g(b) {
                if c != 0.0 {
                    *amplitudes.entry(nb).or_default() += a * c;
                }
            }
        }
        PureState { amplitudes, ..self.clone() }.pruned()
    }

    pub(crate) fn with_modes_and_amplitudes(
        &self,
        modes: BTreeSet<ModeId>,
        amplitudes: BTreeMap<FockBasisState, Complex64>,
    ) -> Self {
        PureState { modes, amplitudes, photon_cap: self.photon_cap }.pruned()
    }

    /// Global phase chosen so the first nonzero amplitude is real positive.
    pub(crate) fn phase_fixed(&self) -> Self {
        match self.amplitudes.values().next() {
            Some(a) if a.norm() > 0.0 => self.scaled(a.conj() / a.norm()),
            _ => self.clone(),
        }
    }

    fn pruned(mut self) -> Self {
        self.amplitudes.retain(|_, a| a.norm() >= PRUNE_EPSILON);
        self
    }

    fn check_cap(&self) -> Result<()> {
        let found = self.total_photons();
        if found > self.photon_cap {
            return Err(Error::PhotonCapExceeded { found, cap: self.photon_cap });
        }
        Ok(())
    }
}

fn check_unitary(u: &DMatrix<Complex64>) -> Result<()> {
    let k = u.nrows();
    let prod = u.adjoint() * u;
    let mut deviation: f64 = 0.0;
    for i in 0..k {
        for j in 0..k {
            let target = if i == j { 1.0 } else { 0.0 };
            deviation = deviation.max((prod[(i, j)] - target).norm());
        }
    }
    if deviation > UNITARY_TOLERANCE {
        return Err(Error::NonUnitary { deviation });
    }
    Ok(())
}

pub fn vacuum() -> PureState {
    PureState::vacuum()
}

pub fn create_photon(state: &PureState, mode: ModeId, pol: Polarization) -> Result<PureState> {
    state.create_photon(Channel::new(mode, pol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn rotator() -> DMatrix<Complex64> {
        DMatrix::from_row_slice(2, 2, &[c(1.0), c(1.0), c(1.0), c(-1.0)]) * c(FRAC_1_SQRT_2)
    }

    #[test]
    fn vacuum_is_single_empty_ket() {
        let v = vacuum();
        assert_eq!(v.support_len(), 1);
        assert_eq!(v.amplitude(&FockBasisState::vacuum()), c(1.0));
        assert_eq!(v.norm(), 1.0);
        assert_eq!(v.total_photons(), 0);
    }

    #[test]
    fn creation_carries_bosonic_factor() {
        let one = vacuum().create_photon(Channel::h(1)).unwrap();
        assert_eq!(one.amplitude(&FockBasisState::single(Channel::h(1))), c(1.0));

        let two = one.create_photon(Channel::h(1)).unwrap();
        let b = FockBasisState::from_counts([(Channel::h(1), 2)]);
        assert_abs_diff_eq!(two.amplitude(&b).re, 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(two.norm(), 2f64.sqrt(), epsilon = 1e-15);

        let pair = one.create_photon(Channel::v(2)).unwrap();
        let b = FockBasisState::from_counts([(Channel::h(1), 1), (Channel::v(2), 1)]);
        assert_eq!(pair.amplitude(&b), c(1.0));
    }

    #[test]
    fn rotator_on_single_and_double_photon() {
        let chans = [Channel::h(7), Channel::v(7)];
        let one = PureState::basis([], FockBasisState::single(Channel::h(7))).unwrap();
        let out = one.apply_linear_map(&chans, &rotator()).unwrap();
        assert_abs_diff_eq!(out.amplitude(&FockBasisState::single(Channel::h(7))).re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(out.amplitude(&FockBasisState::single(Channel::v(7))).re, FRAC_1_SQRT_2, epsilon = 1e-15);

        let two = PureState::basis([], FockBasisState::from_counts([(Channel::h(7), 2)])).unwrap();
        let out = two.apply_linear_map(&chans, &rotator()).unwrap();
        let hh = FockBasisState::from_counts([(Channel::h(7), 2)]);
        let hv = FockBasisState::from_counts([(Channel::h(7), 1), (Channel::v(7), 1)]);
        let vv = FockBasisState::from_counts([(Channel::v(7), 2)]);
        assert_abs_diff_eq!(out.amplitude(&hh).re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(out.amplitude(&hv).re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(out.amplitude(&vv).re, 0.5, epsilon = 1e-15);
        assert_eq!(out.support_len(), 3);
    }

    #[test]
    fn identity_map_is_noop() {
        let s = PureState::basis([], FockBasisState::from_counts([(Channel::h(1), 2), (Channel::v(1), 1)])).unwrap();
        let id = DMatrix::<Complex64>::identity(2, 2);
        let out = s.apply_linear_map(&[Channel::h(1), Channel::v(1)], &id).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn linear_map_errors() {
        let s = vacuum().create_photon(Channel::h(1)).unwrap();
        let bad = DMatrix::from_row_slice(2, 2, &[c(1.0), c(1.0), c(0.0), c(1.0)]);
        assert!(matches!(
            s.apply_linear_map(&[Channel::h(1), Channel::v(1)], &bad),
            Err(Error::NonUnitary { .. })
        ));
        assert!(matches!(
            s.apply_linear_map(&[Channel::h(3), Channel::v(3)], &rotator()),
            Err(Error::UnknownMode(ModeId(3)))
        ));
        assert!(matches!(
            s.apply_linear_map(&[Channel::h(1)], &rotator()),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn photon_cap_is_enforced() {
        let mut s = vacuum().with_photon_cap(2).unwrap();
        s = s.create_photon(Channel::h(1)).unwrap();
        s = s.create_photon(Channel::h(1)).unwrap();
        assert!(matches!(s.create_photon(Channel::v(1)), Err(Error::PhotonCapExceeded { found: 3, cap: 2 })));
    }

    #[test]
    fn basis_labels_round_trip() {
        let b = FockBasisState::from_counts([
            (Channel::v(2), 1),
            (Channel::h(1), 2),
            (Channel::h(1).with_tag(1), 1),
        ]);
        let label = b.to_string();
        assert_eq!(label, "2H@1 1H@1#1 1V@2");
        assert_eq!(label.parse::<FockBasisState>().unwrap(), b);
        assert_eq!("".parse::<FockBasisState>().unwrap(), FockBasisState::vacuum());
        assert!("2X@1".parse::<FockBasisState>().is_err());
    }

    #[test]
    fn zero_counts_are_not_stored() {
        let b = FockBasisState::from_counts([(Channel::h(1), 0), (Channel::v(1), 1)]);
        assert_eq!(b.entries().len(), 1);
        assert_eq!(b.with_count(Channel::v(1), 0), FockBasisState::vacuum());
    }
}
