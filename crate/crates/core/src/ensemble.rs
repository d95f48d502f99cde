//! Mixed states as weighted ensembles of normalized pure states,
//! `rho = sum_i w_i |psi_i><psi_i|`, plus a dense density-matrix view used
//! for comparisons.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{FockBasisState, ModeId, PureState};

/// Branches lighter than this are discarded as numerically empty.
const WEIGHT_FLOOR: f64 = 1e-28;

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub weight: f64,
    pub state: PureState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "EnsembleRecord", try_from = "EnsembleRecord")]
pub struct Ensemble {
    modes: BTreeSet<ModeId>,
    branches: Vec<Branch>,
}

impl Ensemble {
    pub fn from_pure(state: PureState) -> Result<Self> {
        let state = state.normalized()?;
        Ok(Ensemble { modes: state.modes().clone(), branches: vec![Branch { weight: 1.0, state }] })
    }

    /// Builds an ensemble from (weight, state) pairs. States are normalized;
    /// zero weights are dropped, negative ones rejected. Weights are taken
    /// as given, so the trace is their sum.
    pub fn from_branches(
        modes: impl IntoIterator<Item = ModeId>,
        parts: impl IntoIterator<Item = (f64, PureState)>,
    ) -> Result<Self> {
        let mut modes: BTreeSet<ModeId> = modes.into_iter().collect();
        let mut branches = Vec::new();
        for (w, s) in parts {
            if w < 0.0 || !w.is_finite() {
                return Err(Error::invalid(format!("branch weight {w} must be non-negative")));
            }
            if w == 0.0 {
                continue;
            }
            modes.extend(s.modes().iter().copied());
            branches.push(Branch { weight: w, state: s.normalized()? });
        }
        let branches =
            branches.into_iter().map(|b| Branch { state: b.state.declare_modes(modes.iter().copied()), ..b }).collect();
        Ok(Ensemble { modes, branches })
    }

    pub fn vacuum_on(modes: impl IntoIterator<Item = ModeId>) -> Self {
        let s = PureState::vacuum_on(modes);
        Ensemble { modes: s.modes().clone(), branches: vec![Branch { weight: 1.0, state: s }] }
    }

    /// Weighted mixture `sum_k p_k rho_k`.
    pub fn mixture<'a>(parts: impl IntoIterator<Item = (f64, &'a Ensemble)>) -> Result<Self> {
        let mut flat = Vec::new();
        let mut modes = BTreeSet::new();
        for (p, e) in parts {
            modes.extend(e.modes.iter().copied());
            flat.extend(e.branches.iter().map(|b| (p * b.weight, b.state.clone())));
        }
        Ok(Self::from_branches(modes, flat)?.compact())
    }

    pub fn modes(&self) -> &BTreeSet<ModeId> {
        &self.modes
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn trace(&self) -> f64 {
        self.branches.iter().map(|b| b.weight).sum()
    }

    pub fn normalized(&self) -> Result<Self> {
        let t = self.trace();
        if t <= 0.0 {
            return Err(Error::ZeroProbability);
        }
        Ok(Ensemble {
            modes: self.modes.clone(),
            branches: self.branches.iter().map(|b| Branch { weight: b.weight / t, state: b.state.clone() }).collect(),
        })
    }

    pub fn check_mode(&self, mode: ModeId) -> Result<()> {
        if self.modes.contains(&mode) {
            Ok(())
        } else {
            Err(Error::UnknownMode(mode))
        }
    }

    pub fn tensor(&self, other: &Ensemble) -> Result<Self> {
        let mut branches = Vec::with_capacity(self.len() * other.len());
        for a in &self.branches {
            for b in &other.branches {
                branches.push(Branch { weight: a.weight * b.weight, state: a.state.tensor(&b.state)? });
            }
        }
        Ok(Ensemble { modes: self.modes.union(&other.modes).copied().collect(), branches })
    }

    /// Applies a norm-preserving map to every branch.
    pub fn map_states(&self, mut f: impl FnMut(&PureState) -> Result<PureState>) -> Result<Self> {
        let branches = self
            .branches
            .iter()
            .map(|b| Ok(Branch { weight: b.weight, state: f(&b.state)? }))
            .collect::<Result<Vec<_>>>()?;
        let modes = branches.first().map(|b| b.state.modes().clone()).unwrap_or_else(|| self.modes.clone());
        Ok(Ensemble { modes, branches }.compact())
    }

    /// Kraus-style branching: `f` returns the unnormalized images `K_k|psi>`
    /// of a branch; each becomes a branch weighted by its squared norm.
    pub fn branch_with(&self, mut f: impl FnMut(&PureState) -> Result<Vec<PureState>>) -> Result<Self> {
        let mut branches = Vec::new();
        for b in &self.branches {
            for img in f(&b.state)? {
                let p = img.norm_sqr();
                if b.weight * p > WEIGHT_FLOOR {
                    branches.push(Branch { weight: b.weight * p, state: img.normalized()? });
                }
            }
        }
        Ok(Ensemble { modes: self.modes.clone(), branches }.compact())
    }

    /// Merges branches holding the same state up to global phase.
    pub fn compact(self) -> Self {
        let mut index: HashMap<Vec<(FockBasisState, i64, i64)>, usize> = HashMap::new();
        let mut out: Vec<Branch> = Vec::with_capacity(self.branches.len());
        for b in self.branches {
            let state = b.state.phase_fixed();
            let key: Vec<_> = state
                .amplitudes()
                .map(|(k, a)| (k.clone(), (a.re * 1e11).round() as i64, (a.im * 1e11).round() as i64))
                .collect();
            match index.get(&key) {
                Some(&i) => out[i].weight += b.weight,
                None => {
                    index.insert(key, out.len());
                    out.push(Branch { weight: b.weight, state });
                }
            }
        }
        Ensemble { modes: self.modes, branches: out }
    }

    /// Measures the configuration of `modes` in the Fock basis and groups the
    /// results by `key(config)`. Measured modes are removed. Each returned
    /// group carries its probability and its normalized post-measurement
    /// ensemble; groups with zero probability are omitted.
    pub fn measure_modes<K: Ord + Clone>(
        &self,
        modes: &BTreeSet<ModeId>,
        key: impl Fn(&FockBasisState) -> K,
    ) -> Result<Vec<(K, f64, Ensemble)>> {
        for &m in modes {
            self.check_mode(m)?;
        }
        let remaining: BTreeSet<ModeId> = self.modes.difference(modes).copied().collect();
        let mut groups: BTreeMap<K, Vec<Branch>> = BTreeMap::new();
        for b in &self.branches {
            let mut parts: BTreeMap<FockBasisState, BTreeMap<FockBasisState, Complex64>> = BTreeMap::new();
            for (basis, amp) in b.state.amplitudes() {
                let (measured, rest) = basis.split_modes(modes);
                *parts.entry(measured).or_default().entry(rest).or_default() += amp;
            }
            for (measured, amps) in parts {
                let sub = b.state.with_modes_and_amplitudes(remaining.clone(), amps);
                let p = sub.norm_sqr();
                if b.weight * p > WEIGHT_FLOOR {
                    groups
                        .entry(key(&measured))
                        .or_default()
                        .push(Branch { weight: b.weight * p, state: sub.normalized()? });
                }
            }
        }
        let total = self.trace();
        let mut out = Vec::with_capacity(groups.len());
        for (k, branches) in groups {
            let p: f64 = branches.iter().map(|b| b.weight).sum();
            let ens = Ensemble { modes: remaining.clone(), branches }.normalized()?.compact();
            out.push((k, p / total, ens));
        }
        Ok(out)
    }

    /// Keeps the components with no photons in `modes`. Returns the retained
    /// probability and the renormalized ensemble on the remaining modes.
    pub fn condition_on_vacuum(&self, modes: &[ModeId]) -> Result<(f64, Ensemble)> {
        let set: BTreeSet<ModeId> = modes.iter().copied().collect();
        self.measure_modes(&set, FockBasisState::is_vacuum)?
            .into_iter()
            .find(|(empty, _, _)| *empty)
            .map(|(_, p, e)| (p, e))
            .ok_or(Error::ZeroProbability)
    }

    /// Reduced state on `keep`.
    pub fn partial_trace(&self, keep: &[ModeId]) -> Result<Ensemble> {
        for &m in keep {
            self.check_mode(m)?;
        }
        let keep: BTreeSet<ModeId> = keep.iter().copied().collect();
        let traced: BTreeSet<ModeId> = self.modes.difference(&keep).copied().collect();
        if traced.is_empty() {
            return Ok(self.clone());
        }
        let trace = self.trace();
        let groups = self.measure_modes(&traced, |_| ())?;
        let (_, _, ens) = groups.into_iter().next().ok_or(Error::ZeroProbability)?;
        Ok(Ensemble { branches: ens.branches.into_iter().map(|b| Branch { weight: b.weight * trace, ..b }).collect(), ..ens })
    }

    /// `sum_i w_i |<target|psi_i>|^2`.
    pub fn expectation(&self, target: &PureState) -> f64 {
        self.branches.iter().map(|b| b.weight * target.inner(&b.state).norm_sqr()).sum()
    }

    /// Matrix element `<a|rho|b>`.
    pub fn element(&self, a: &FockBasisState, b: &FockBasisState) -> Complex64 {
        self.branches.iter().map(|br| br.state.amplitude(a) * br.state.amplitude(b).conj() * br.weight).sum()
    }

    /// Diagonal of the density operator in the Fock basis.
    pub fn diagonal(&self) -> BTreeMap<FockBasisState, f64> {
        let mut d: BTreeMap<FockBasisState, f64> = BTreeMap::new();
        for b in &self.branches {
            for (k, a) in b.state.amplitudes() {
                *d.entry(k.clone()).or_default() += b.weight * a.norm_sqr();
            }
        }
        d
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.diagonal().iter().map(|(k, p)| f64::from(k.total_photons()) * p).sum()
    }

    pub fn total_photons(&self) -> u32 {
        self.branches.iter().map(|b| b.state.total_photons()).max().unwrap_or(0)
    }

    pub fn support(&self) -> BTreeSet<FockBasisState> {
        self.branches.iter().flat_map(|b| b.state.amplitudes().map(|(k, _)| k.clone())).collect()
    }

    pub fn to_density_matrix(&self) -> DensityMatrix {
        let basis: Vec<FockBasisState> = self.support().into_iter().collect();
        let matrix = self.matrix_on(&basis);
        DensityMatrix { modes: self.modes.clone(), basis, matrix }
    }

    fn matrix_on(&self, basis: &[FockBasisState]) -> DMatrix<Complex64> {
        let index: HashMap<&FockBasisState, usize> = basis.iter().enumerate().map(|(i, b)| (b, i)).collect();
        let n = basis.len();
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        for b in &self.branches {
            let entries: Vec<(usize, Complex64)> =
                b.state.amplitudes().filter_map(|(k, a)| index.get(k).map(|&i| (i, *a))).collect();
            for &(i, ai) in &entries {
                for &(j, aj) in &entries {
                    m[(i, j)] += ai * aj.conj() * b.weight;
                }
            }
        }
        m
    }
}

/// Dense view of a density operator on an explicit basis.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    pub modes: BTreeSet<ModeId>,
    pub basis: Vec<FockBasisState>,
    pub matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    /// Checks Hermiticity (1e-12), unit trace (1e-10) and positivity (-1e-10).
    pub fn validate(&self) -> Result<()> {
        let herm = (&self.matrix - self.matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > 1e-12 {
            return Err(Error::invalid(format!("density matrix not Hermitian ({herm:.3e})")));
        }
        if (self.trace() - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(format!("density matrix trace {}", self.trace())));
        }
        let min = self.eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -1e-10 {
            return Err(Error::invalid(format!("density matrix has eigenvalue {min}")));
        }
        Ok(())
    }

    fn eigen(&self) -> SymmetricEigen<Complex64, nalgebra::Dyn> {
        SymmetricEigen::new(self.matrix.clone())
    }

    /// Spectral decomposition back into an ensemble.
    pub fn to_ensemble(&self) -> Result<Ensemble> {
        let eig = self.eigen();
        let mut parts = Vec::new();
        for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda <= 1e-15 {
                continue;
            }
            let col = eig.eigenvectors.column(k);
            let state =
                PureState::from_amplitudes(self.modes.iter().copied(), self.basis.iter().cloned().zip(col.iter().copied()))?;
            parts.push((lambda, state));
        }
        Ensemble::from_branches(self.modes.iter().copied(), parts)
    }
}

/// `1/2 ||rho_a - rho_b||_1`, from the eigenvalues of the difference on the
/// union of both supports.
pub fn trace_distance(a: &Ensemble, b: &Ensemble) -> Result<f64> {
    if a.modes != b.modes {
        return Err(Error::DimensionMismatch(format!("modes {:?} vs {:?}", a.modes, b.modes)));
    }
    let basis: Vec<FockBasisState> = a.support().union(&b.support()).cloned().collect();
    if basis.is_empty() {
        return Ok(0.0);
    }
    let diff = a.matrix_on(&basis) - b.matrix_on(&basis);
    let eig = SymmetricEigen::new(diff);
    Ok(0.5 * eig.eigenvalues.iter().map(|l| l.abs()).sum::<f64>())
}

/// `<target|rho|target>` for a normalized target.
pub fn fidelity_with_pure(ens: &Ensemble, target: &PureState) -> f64 {
    ens.expectation(target)
}

// Serialized layout: {modes, branches: [{weight, components: [{basis, re, im}]}]}.

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleRecord {
    pub modes: Vec<ModeId>,
    pub branches: Vec<BranchRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchRecord {
    pub weight: f64,
    pub components: Vec<ComponentRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComponentRecord {
    pub basis: String,
    pub re: f64,
    pub im: f64,
}

impl From<Ensemble> for EnsembleRecord {
    fn from(e: Ensemble) -> Self {
        EnsembleRecord {
            modes: e.modes.iter().copied().collect(),
            branches: e
                .branches
                .iter()
                .map(|b| BranchRecord {
                    weight: b.weight,
                    components: b
                        .state
                        .amplitudes()
                        .map(|(k, a)| ComponentRecord { basis: k.to_string(), re: a.re, im: a.im })
                        .collect(),
                })
                .collect(),
        }
    }
}

impl TryFrom<EnsembleRecord> for Ensemble {
    type Error = Error;

    fn try_from(r: EnsembleRecord) -> Result<Self> {
        let mut branches = Vec::with_capacity(r.branches.len());
        for b in r.branches {
            let amps = b
                .components
                .iter()
                .map(|c| Ok((c.basis.parse::<FockBasisState>()?, Complex64::new(c.re, c.im))))
                .collect::<Result<Vec<_>>>()?;
            let state = PureState::from_amplitudes(r.modes.iter().copied(), amps)?;
            if b.weight.is_nan() || b.weight <= 0.0 {
                return Err(Error::invalid("serialized branch weights must be positive"));
            }
            branches.push(Branch { weight: b.weight, state });
        }
        let modes: BTreeSet<ModeId> = r.modes.into_iter().collect();
        for b in &branches {
            if let Some(m) = b.state.modes().difference(&modes).next() {
                return Err(Error::UnknownMode(*m));
            }
        }
        Ok(Ensemble { modes, branches })
    }
}
