#![allow(dead_code)]

use eprsim::{Channel, Ensemble, FockBasisState, ModeId, PureState};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// H and V channels of `modes`, in order.
pub fn channels(modes: &[u16]) -> Vec<Channel> {
    modes.iter().flat_map(|&m| [Channel::h(m), Channel::v(m)]).collect()
}

/// Every occupation of `chans` with at most `max` photons in total.
pub fn occupations(k: usize, max: u32) -> Vec<Vec<u32>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for rest in occupations(k - 1, max) {
        let used: u32 = rest.iter().sum();
        for n in 0..=max - used {
            let mut v = rest.clone();
            v.push(n);
            out.push(v);
        }
    }
    out
}

pub fn basis_of(chans: &[Channel], counts: &[u32]) -> FockBasisState {
    FockBasisState::from_counts(chans.iter().copied().zip(counts.iter().copied()))
}

/// Random (non-Haar) unitary from the QR decomposition of a random matrix.
pub fn random_unitary(rng: &mut impl Rng, k: usize) -> DMatrix<Complex64> {
    let m = DMatrix::from_fn(k, k, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    m.qr().q()
}

/// Random normalized superposition of up to `terms` basis states of
/// `modes` with at most `max` photons each.
pub fn random_state(rng: &mut impl Rng, modes: &[u16], max: u32, terms: usize) -> PureState {
    let chans = channels(modes);
    let all = occupations(chans.len(), max);
    let amps: Vec<_> = (0..terms)
        .map(|_| {
            let occ = &all[rng.gen_range(0..all.len())];
            (basis_of(&chans, occ), c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        })
        .collect();
    let ids: Vec<ModeId> = modes.iter().map(|&m| ModeId(m)).collect();
    match PureState::from_amplitudes(ids.clone(), amps).and_then(|s| s.normalized()) {
        Ok(s) => s,
        Err(_) => PureState::vacuum_on(ids),
    }
}

pub fn random_ensemble(rng: &mut impl Rng, modes: &[u16], max: u32) -> Ensemble {
    let n = rng.gen_range(1..=3);
    let parts: Vec<_> = (0..n).map(|_| (rng.gen_range(0.05..1.0), random_state(rng, modes, max, 3))).collect();
    let total: f64 = parts.iter().map(|(w, _)| w).sum();
    Ensemble::from_branches(modes.iter().map(|&m| ModeId(m)), parts.into_iter().map(|(w, s)| (w / total, s))).unwrap()
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Permanent by summing over all permutations; fine for up to ~7 photons.
pub fn permanent(m: &DMatrix<Complex64>) -> Complex64 {
    let n = m.nrows();
    if n == 0 {
        return c(1.0, 0.0);
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let mut total = c(0.0, 0.0);
    permute(&mut idx, 0, &mut |p| {
        total += (0..n).map(|i| m[(i, p[i])]).product::<Complex64>();
    });
    total
}

fn permute(v: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, f);
        v.swap(k, i);
    }
}

/// `<out| U |inp>` for `a_i† -> sum_j u[i][j] a_j†`, from the permanent of
/// the submatrix with row i repeated inp[i] times and column j out[j] times.
pub fn transition_amplitude(u: &DMatrix<Complex64>, inp: &[u32], out: &[u32]) -> Complex64 {
    let n_in: u32 = inp.iter().sum();
    let n_out: u32 = out.iter().sum();
    if n_in != n_out {
        return c(0.0, 0.0);
    }
    let rows: Vec<usize> = inp.iter().enumerate().flat_map(|(i, &n)| std::iter::repeat_n(i, n as usize)).collect();
    let cols: Vec<usize> = out.iter().enumerate().flat_map(|(j, &n)| std::iter::repeat_n(j, n as usize)).collect();
    let sub = DMatrix::from_fn(rows.len(), cols.len(), |a, b| u[(rows[a], cols[b])]);
    let norm: f64 = inp.iter().chain(out).map(|&n| factorial(n)).product::<f64>().sqrt();
    permanent(&sub) / norm
}
