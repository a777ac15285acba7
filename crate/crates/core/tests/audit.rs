mod common;

use std::collections::BTreeSet;

use privavg_core::privacy_audit::{
    check_conditional_masks, check_corollary2, check_lemma2, check_lemma3, check_raw_pair_consistency, check_theorem1,
    sampled_view_test, Binning, Claim, Method, SampledTest,
};
use privavg_core::scenarios::{cut_topology, CUT_ADVERSARY};
use privavg_core::{AdversarySpec, Error, Modulus, ProtocolParams, Topology};

fn m(p: u64) -> Modulus {
    Modulus::new(p).unwrap()
}

#[test]
fn lemma3_holds_for_every_input_on_small_graphs() {
    for t in [Topology::path(3), Topology::complete(3), Topology::star(4), Topology::cycle(4)] {
        for s in [[0, 0, 0, 0], [1, 2, 0, 2], [2, 2, 2, 1]] {
            let v = check_lemma3(&t, m(3), &s[..t.n()]).unwrap();
            assert!(v.pass && v.hypothesis_holds, "{:?} {s:?}: {}", t.edges(), v.details);
        }
    }
}

#[test]
fn lemma3_with_zero_inputs_matches_lemma2() {
    let t = Topology::cycle(4);
    assert_eq!(check_lemma3(&t, m(5), &[0; 4]).unwrap().pass, check_lemma2(&t, m(5)).unwrap().pass);
}

#[test]
fn disconnected_graphs_fail_the_hyperplane_check() {
    let t = Topology::new(4, [(1, 2), (3, 4)]).unwrap();
    let v = check_lemma2(&t, m(3)).unwrap();
    assert!(!v.pass && !v.hypothesis_holds);
    assert!(v.consistent_with_theory());
}

#[test]
fn conditional_masks_follow_the_cut() {
    let adv = AdversarySpec::new([3]);
    let v = check_conditional_masks(&Topology::complete(4), m(3), &adv).unwrap();
    assert!(v.pass && v.hypothesis_holds, "{}", v.details);
    let v = check_conditional_masks(&Topology::path(4), m(3), &AdversarySpec::new([2])).unwrap();
    assert!(!v.hypothesis_holds);
    assert!(!v.pass, "{}", v.details);
}

#[test]
fn raw_pair_enumeration_agrees_with_differences() {
    let adv = AdversarySpec::new([3]);
    for (t, s, s2) in [
        (Topology::path(3), [1, 0, 2], [0, 1, 2]),
        (Topology::complete(3), [2, 0, 1], [1, 1, 1]),
        (Topology::path(3), [1, 1, 0], [1, 1, 0]),
    ] {
        let v = check_raw_pair_consistency(&t, m(2), &adv, &s, &s2).unwrap();
        assert!(v.pass, "{}", v.details);
    }
    let v =
        check_raw_pair_consistency(&Topology::path(3), m(2), &AdversarySpec::new([2]), &[1, 0, 0], &[0, 0, 1]).unwrap();
    assert!(v.pass, "{}", v.details);
}

#[test]
fn theorem1_rejects_inadmissible_pairs() {
    let t = Topology::complete(3);
    let adv = AdversarySpec::new([3]);
    assert!(matches!(check_theorem1(&t, m(3), &adv, &[1, 1, 0], &[1, 1, 1]), Err(Error::AuditPrecondition(_))));
    assert!(matches!(check_theorem1(&t, m(3), &adv, &[1, 1, 0], &[2, 1, 0]), Err(Error::AuditPrecondition(_))));
    assert!(matches!(check_theorem1(&t, m(3), &adv, &[1, 1], &[1, 1, 0]), Err(Error::InputCount { .. })));
    let everyone = AdversarySpec::new([1, 2, 3]);
    assert!(check_theorem1(&t, m(3), &everyone, &[0; 3], &[0; 3]).is_err());
}

#[test]
fn large_instances_exceed_the_enumeration_budget() {
    let t = cut_topology();
    let adv = AdversarySpec::new(CUT_ADVERSARY);
    let err = check_theorem1(&t, m(31), &adv, &[0; 10], &[0; 10]).unwrap_err();
    assert!(matches!(err, Error::BudgetExceeded { .. }));
}

#[test]
fn corollary2_exact_on_a_small_cut() {
    // 1-2-3-4-5 path with C = {3}: H = {1,2} is one component of G - C.
    let t = Topology::path(5);
    let adv = AdversarySpec::new([3]);
    let h: BTreeSet<usize> = [1, 2].into();
    let v = check_corollary2(&t, m(2), &adv, &h, &[1, 0, 0, 1, 1], &[0, 1, 0, 1, 1]).unwrap();
    assert!(v.pass && v.hypothesis_holds, "{}", v.details);
    let across: BTreeSet<usize> = [2, 4].into();
    let v = check_corollary2(&t, m(2), &adv, &across, &[0, 1, 0, 0, 0], &[0, 0, 0, 1, 0]).unwrap();
    assert!(!v.hypothesis_holds && !v.pass, "{}", v.details);
}

#[test]
fn sampled_test_sees_leakage_across_components() {
    let t = cut_topology();
    let params = ProtocolParams::new(10, 4, Some(31)).unwrap();
    let h: BTreeSet<usize> = [1, 6].into();
    let s = vec![1, 2, 0, 3, 1, 2, 0, 3, 1, 2];
    let mut s2 = s.clone();
    s2[0] = 2;
    s2[5] = 1;
    let test = SampledTest::new(t, params, AdversarySpec::new(CUT_ADVERSARY), s, s2).target(h).samples(2_000);
    let v = sampled_view_test(&test).unwrap();
    assert_eq!((v.claim, v.method), (Claim::Corollary2, Method::ChiSquare));
    assert!(!v.hypothesis_holds && !v.pass, "{}", v.details);
    assert!(v.p_value.unwrap() < 1e-6);
}

#[test]
fn sampled_test_passes_without_a_cut() {
    let t = Topology::complete(4);
    let params = ProtocolParams::new(4, 3, Some(11)).unwrap();
    let test = SampledTest::new(t, params, AdversarySpec::new([4]), vec![2, 0, 1, 1], vec![0, 1, 2, 1])
        .samples(20_000)
        .binning(Binning::Marginals)
        .base_seed(5);
    let v = sampled_view_test(&test).unwrap();
    assert!(v.pass && v.hypothesis_holds, "{}", v.details);
}

#[test]
fn sampled_test_needs_enough_samples() {
    let params = ProtocolParams::new(3, 10, Some(30)).unwrap();
    let test =
        SampledTest::new(Topology::path(3), params, AdversarySpec::new([3]), vec![1, 2, 3], vec![2, 1, 3]).samples(50);
    assert!(matches!(sampled_view_test(&test), Err(Error::InsufficientSamples { .. })));
}
