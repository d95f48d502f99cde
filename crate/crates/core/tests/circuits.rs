use approx::assert_abs_diff_eq;
use eprsim::ensemble::{fidelity_with_pure, trace_distance};
use eprsim::fusion::{fuse_type_ii, ghz_pure, id_ghz, qubit_count_after_fusion, success_state, FusionLabel, IdGhzSpec};
use eprsim::ghz::{analyze_output, canonical_layout, double_pair_terms, run_ghz_circuit};
use eprsim::optics::DetectorModel;
use eprsim::sources::{DoublePairModel, SourceSpec};
use eprsim::threshold::{evaluate, loss_rate_cavity, meets_loss_threshold, Scheme, ThresholdParams};
use eprsim::{Ensemble, FockBasisState, ModeId};

fn modes(ids: impl IntoIterator<Item = u16>) -> Vec<ModeId> {
    ids.into_iter().map(ModeId).collect()
}

#[test]
fn fusion_growth_law() {
    for (n, m) in [(3, 3), (3, 4), (4, 4)] {
        let left = modes(1..=n);
        let right = modes(n + 1..=n + m);
        let l = Ensemble::from_pure(ghz_pure(&left)).unwrap();
        let r = Ensemble::from_pure(ghz_pure(&right)).unwrap();
        let outcomes = fuse_type_ii(&l, &r, ModeId(n), ModeId(n + 1), &DetectorModel::ideal()).unwrap();
        let (p, state) = success_state(&outcomes).unwrap().unwrap();
        let expected = qubit_count_after_fusion(n as usize, m as usize).unwrap();
        assert_eq!(state.modes().len(), expected);
        let fused: Vec<ModeId> = state.modes().iter().copied().collect();
        assert_abs_diff_eq!(p, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity_with_pure(&state, &ghz_pure(&fused)), 1.0, epsilon = 1e-12);
    }
}

#[test]
fn fusion_success_probability_with_loss() {
    // Both measured photons must survive: (1-f)^2 eta_d^2 / 2.
    for (f, eta) in [(0.0, 0.7), (0.1, 1.0), (0.25, 0.9)] {
        let l = id_ghz(&IdGhzSpec::new(f, [1u16, 2, 3])).unwrap();
        let r = id_ghz(&IdGhzSpec::new(f, [4u16, 5, 6])).unwrap();
        let outcomes = fuse_type_ii(&l, &r, ModeId(3), ModeId(4), &DetectorModel::bucket(eta)).unwrap();
        let p: f64 = outcomes.iter().filter(|o| o.label == FusionLabel::Success).map(|o| o.probability).sum();
        assert_abs_diff_eq!(p, ((1.0 - f) * eta).powi(2) / 2.0, epsilon = 1e-12);
        let (_, state) = success_state(&outcomes).unwrap().unwrap();
        let want = id_ghz(&IdGhzSpec::new(f, [1u16, 2, 5, 6])).unwrap();
        assert!(trace_distance(&state, &want).unwrap() < 1e-9);
    }
}

#[test]
fn cyclic_source_permutation_relabels_outputs() {
    let specs = [SourceSpec::spdc(0.3, 1.0), SourceSpec::heralded(0.6), SourceSpec::spdc(0.5, 0.5)];
    let layout = canonical_layout();
    let base = run_ghz_circuit(&specs, &DetectorModel::bucket(0.8), &layout).unwrap();
    let rotated = run_ghz_circuit(&[specs[2], specs[0], specs[1]], &DetectorModel::bucket(0.8), &layout).unwrap();
    assert_abs_diff_eq!(base.probability, rotated.probability, epsilon = 1e-15);
    // Source k sits on output 2k-1; rotating the sources moves output 1 to 3, 3 to 5, 5 to 1.
    let relabel = |m: ModeId| ModeId(if m.0 == 5 { 1 } else { m.0 + 2 });
    let moved = base.state.unwrap().map_states(|s| Ok(s.map_channels(|c| eprsim::Channel { mode: relabel(c.mode), ..c }))).unwrap();
    assert!(trace_distance(&moved, &rotated.state.unwrap()).unwrap() < 1e-12);
}

#[test]
fn all_source_permutations_keep_the_success_probability() {
    let specs = [SourceSpec::spdc(0.2, 1.0), SourceSpec::heralded(0.7), SourceSpec::cavity(0.3, 0.2, 0.1, 0.4)];
    let det = DetectorModel::bucket(0.9);
    let p0 = run_ghz_circuit(&specs, &det, &canonical_layout()).unwrap().probability;
    for perm in [[0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
        let p = run_ghz_circuit(&perm.map(|i| specs[i]), &det, &canonical_layout()).unwrap().probability;
        assert_abs_diff_eq!(p, p0, epsilon = 1e-15);
    }
}

#[test]
fn cavity_success_probability() {
    // Each source must put its photon into the detected arm (p2 + p3) and
    // the detector must see it; routing then succeeds with probability 1/32.
    for (p, eta_d) in [((0.4, 0.2, 0.1, 0.3), 1.0), ((0.1, 0.1, 0.2, 0.6), 0.8), ((0.5, 0.2, 0.2, 0.1), 0.6)] {
        let spec = SourceSpec::cavity(p.0, p.1, p.2, p.3);
        let r = run_ghz_circuit(&[spec; 3], &DetectorModel::bucket(eta_d), &canonical_layout()).unwrap();
        let want = ((p.2 + p.3) * eta_d).powi(3) / 32.0;
        assert_abs_diff_eq!(r.probability, want, epsilon = 1e-14);
        let row = evaluate(Scheme::Cavity, &ThresholdParams { eta_s: 1.0, eta_d, f: None, p2: Some(p.2), p3: Some(p.3) }).unwrap();
        assert_abs_diff_eq!(row.success_prob, want, epsilon = 1e-14);
        let f = loss_rate_cavity(p.2, p.3).unwrap();
        let state = r.state.unwrap();
        let target = id_ghz(&IdGhzSpec::new(f, [1u16, 3, 5])).unwrap();
        assert!(trace_distance(&state, &target).unwrap() < 1e-10);
    }
}

#[test]
fn psi_plus_cavity_source_gives_the_same_state() {
    let mut spec = SourceSpec::cavity(0.4, 0.2, 0.1, 0.3);
    let phi = run_ghz_circuit(&[spec; 3], &DetectorModel::ideal(), &canonical_layout()).unwrap();
    if let SourceSpec::Cavity { bell_form, .. } = &mut spec {
        *bell_form = eprsim::BellForm::PsiPlus;
    }
    let psi = run_ghz_circuit(&[spec; 3], &DetectorModel::ideal(), &canonical_layout()).unwrap();
    assert_abs_diff_eq!(phi.probability, psi.probability, epsilon = 1e-15);
    assert!(trace_distance(&phi.state.unwrap(), &psi.state.unwrap()).unwrap() < 1e-12);
}

fn double_pair_ratio(model: DoublePairModel, eta_s: f64, x: f64) -> Vec<f64> {
    let spec = SourceSpec::Spdc { eta_s, x, double_pair: model };
    let r = run_ghz_circuit(&[spec; 3], &DetectorModel::ideal(), &canonical_layout()).unwrap();
    let report = analyze_output(&r).unwrap();
    double_pair_terms().iter().map(|t| report.weight_of(t) / report.ghz_fidelity).collect()
}

#[test]
fn double_pair_ratio_is_exact_for_distinguishable_pairs() {
    for (eta_s, x) in [(0.01, 1.0), (0.01, 0.5), (0.2, 1.0), (0.5, 0.3)] {
        for q in double_pair_ratio(DoublePairModel::Distinguishable, eta_s, x) {
            assert_abs_diff_eq!(q, x / 2.0 * (1.0 - eta_s), epsilon = 1e-12);
        }
    }
}

#[test]
fn bosonic_double_pairs_lose_a_third() {
    // (|2H2H> + |HV,HV> + |2V2V>)/sqrt(3) overlaps the two distinguishable
    // copies only in the symmetric part, which costs a factor 2/3.
    for (eta_s, x) in [(0.01, 1.0), (0.2, 0.5)] {
        for q in double_pair_ratio(DoublePairModel::Bosonic, eta_s, x) {
            assert_abs_diff_eq!(q, x / 2.0 * (1.0 - eta_s) * 2.0 / 3.0, epsilon = 1e-12);
        }
    }
}

#[test]
fn double_pair_remainder_is_first_order() {
    // Weight outside GHZ and the six double-pair terms, relative to GHZ.
    let remainder = |eta_s: f64, x: f64| {
        let spec = SourceSpec::spdc(eta_s, x);
        let r = run_ghz_circuit(&[spec; 3], &DetectorModel::ideal(), &canonical_layout()).unwrap();
        let rep = analyze_output(&r).unwrap();
        let listed: f64 = double_pair_terms().iter().map(|t| rep.weight_of(t)).sum();
        (1.0 - rep.ghz_fidelity - listed) / rep.ghz_fidelity
    };
    for x in [0.5, 1.0] {
        let a = remainder(1e-3, x);
        let b = remainder(1e-4, x);
        assert!(a > 0.0);
        assert_abs_diff_eq!(a / b, 10.0, epsilon = 0.01);
    }
}

#[test]
fn spdc_without_double_pairs_matches_heralded_circuit() {
    let det = DetectorModel::bucket(0.7);
    let s = run_ghz_circuit(&[SourceSpec::spdc(0.4, 0.0); 3], &det, &canonical_layout()).unwrap();
    let h = run_ghz_circuit(&[SourceSpec::heralded(0.4); 3], &det, &canonical_layout()).unwrap();
    assert_abs_diff_eq!(s.probability, h.probability, epsilon = 1e-15);
    assert!(trace_distance(&s.state.unwrap(), &h.state.unwrap()).unwrap() < 1e-12);
}

#[test]
fn number_resolving_detectors_differ_for_spdc() {
    let spec = SourceSpec::spdc(0.3, 1.0);
    let b = run_ghz_circuit(&[spec; 3], &DetectorModel::bucket(1.0), &canonical_layout()).unwrap();
    let n = run_ghz_circuit(&[spec; 3], &DetectorModel::resolving(1.0), &canonical_layout()).unwrap();
    assert!(n.probability < b.probability);
    let outcome_total: f64 = b.outcome_tree.iter().map(|(_, p)| p).sum();
    assert_abs_diff_eq!(outcome_total, 1.0, epsilon = 1e-10);
    let double = FockBasisState::from_counts([(eprsim::Channel::h(1), 1), (eprsim::Channel::v(1), 1), (eprsim::Channel::h(5), 1)]);
    assert!(analyze_output(&b).unwrap().weight_of(&double) > 0.0);
}

#[test]
fn thresholds_are_monotone_and_scale_invariant() {
    let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
    for w in grid.windows(2) {
        for &f in &grid {
            assert!(meets_loss_threshold(f, w[1]).margin >= meets_loss_threshold(f, w[0]).margin);
            assert!(meets_loss_threshold(w[1], f).margin <= meets_loss_threshold(w[0], f).margin);
        }
    }
    for (p2, p3) in [(0.1, 0.3), (0.2, 0.05), (0.0, 0.4)] {
        for lambda in [0.1, 2.0, 7.5] {
            assert_abs_diff_eq!(loss_rate_cavity(lambda * p2, lambda * p3).unwrap(), loss_rate_cavity(p2, p3).unwrap(), epsilon = 1e-15);
        }
    }
}
