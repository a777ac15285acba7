use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use super::{describe, fmt_set, AuditVerdict, Claim, Histogram, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::graph::{AgentId, Topology};
use crate::residue::Modulus;
use crate::simnet::AdversarySpec;

const CHUNK: u64 = 4096;

/// Histogram of `key(x)` over every `x ∈ Z_p^digits`, in parallel chunks.
fn enumerate<F>(digits: usize, p: Modulus, budget: u128, key: F) -> Result<Histogram>
where
    F: Fn(&[u64]) -> Vec<u64> + Sync,
{
    let p = p.get();
    let needed = (p as u128).checked_pow(digits as u32).unwrap_or(u128::MAX);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let total = needed as u64;
    let chunks = total.div_ceil(CHUNK);
    let hist = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = total.min(start + CHUNK);
            let mut x = decode(start, digits, p);
            let mut h = Histogram::new();
            for _ in start..end {
                h.add(key(&x));
                increment(&mut x, p);
            }
            h
        })
        .reduce(Histogram::new, Histogram::merge);
    Ok(hist)
}

fn decode(mut index: u64, digits: usize, p: u64) -> Vec<u64> {
    (0..digits)
        .map(|_| {
            let d = index % p;
            index /= p;
            d
        })
        .collect()
}

fn increment(x: &mut [u64], p: u64) {
    for d in x.iter_mut() {
        *d += 1;
        if *d < p {
            return;
        }
        *d = 0;
    }
}

/// `a = ∇ · b mod p`.
fn masks(t: &Topology, b: &[u64], p: u64) -> Vec<u64> {
    let mut a = vec![0u64; t.n()];
    for (&(i, j), &be) in t.edges().iter().zip(b) {
        a[i - 1] = (a[i - 1] + be) % p;
        a[j - 1] = (a[j - 1] + p - be) % p;
    }
    a
}

fn shift(a: &[u64], s: &[u64], p: u64) -> Vec<u64> {
    a.iter().zip(s).map(|(&x, &y)| (x + y % p) % p).collect()
}

fn sum_mod(xs: &[u64], p: u64) -> u64 {
    xs.iter().fold(0, |acc, &x| (acc + x % p) % p)
}

fn pow(p: u64, e: i64) -> Option<u128> {
    if e < 0 {
        None
    } else {
        (p as u128).checked_pow(e as u32)
    }
}

/// Histogram of the mask vector `a = ∇·b` over all `b ∈ Z_p^{|E|}`.
pub fn enumerate_mask_distribution(t: &Topology, p: Modulus) -> Result<Histogram> {
    let pv = p.get();
    enumerate(t.edges().len(), p, DEFAULT_BUDGET, |b| masks(t, b, pv))
}

/// Histogram of `s̃ = s + ∇·b` over all `b`.
pub fn enumerate_effective_inputs(t: &Topology, p: Modulus, s: &[u64]) -> Result<Histogram> {
    check_len(t, s)?;
    let pv = p.get();
    enumerate(t.edges().len(), p, DEFAULT_BUDGET, |b| shift(&masks(t, b, pv), s, pv))
}

/// Flat on the coset `{x : Σx ≡ target}` with the expected per-point count.
fn flat_on_hyperplane(h: &Histogram, t: &Topology, p: u64, target: u64) -> (bool, String) {
    let n = t.n() as i64;
    let e = t.edges().len() as i64;
    let want_support = pow(p, n - 1);
    let want_count = pow(p, e - n + 1);
    let on_plane = h.iter().all(|(k, _)| sum_mod(k, p) == target);
    let support = h.support_size() as u128;
    let flat = h.uniform_count();
    let pass =
        on_plane && Some(support) == want_support && matches!((flat, want_count), (Some(c), Some(w)) if c as u128 == w);
    let details = format!(
        "support {support} (expected {}), counts {}, all on Σ≡{target}: {on_plane}",
        want_support.map_or("n/a".into(), |x| x.to_string()),
        match flat {
            Some(c) => format!("uniform {c} (expected {})", want_count.map_or("n/a".into(), |x| x.to_string())),
            None => "non-uniform".into(),
        }
    );
    (pass, details)
}

/// Masks are uniform on `{a : Σa ≡ 0 mod p}` for connected graphs.
pub fn check_lemma2(t: &Topology, p: Modulus) -> Result<AuditVerdict> {
    let h = enumerate_mask_distribution(t, p)?;
    let (pass, details) = flat_on_hyperplane(&h, t, p.get(), 0);
    Ok(AuditVerdict::exact(Claim::Lemma2, describe(t, p.get()), pass, t.is_connected(), details))
}

/// Effective inputs are uniform on `{s̃ : Σs̃ ≡ Σs mod p}` for connected graphs.
pub fn check_lemma3(t: &Topology, p: Modulus, s: &[u64]) -> Result<AuditVerdict> {
    let h = enumerate_effective_inputs(t, p, s)?;
    let (pass, details) = flat_on_hyperplane(&h, t, p.get(), sum_mod(s, p.get()));
    let params = format!("{} s={:?}", describe(t, p.get()), s);
    Ok(AuditVerdict::exact(Claim::Lemma3, params, pass, t.is_connected(), details))
}

fn check_len(t: &Topology, s: &[u64]) -> Result<()> {
    if s.len() != t.n() {
        Err(Error::InputCount { expected: t.n(), got: s.len() })
    } else {
        Ok(())
    }
}

fn check_adversary(t: &Topology, adv: &AdversarySpec) -> Result<()> {
    if let Some(&v) = adv.members.iter().find(|&&v| !t.contains(v)) {
        return Err(Error::UnknownAgent(v));
    }
    if adv.members.len() >= t.n() {
        return Err(Error::AuditPrecondition("the adversary must leave at least one honest agent".into()));
    }
    Ok(())
}

/// Exact distribution of the view `(s̃_1..s̃_n, b_e for e ∈ E_C)` under input `s`.
pub fn view_histogram(t: &Topology, p: Modulus, adv: &AdversarySpec, s: &[u64]) -> Result<Histogram> {
    check_len(t, s)?;
    check_adversary(t, adv)?;
    let pv = p.get();
    let incident = adv.incident_edges(t);
    enumerate(t.edges().len(), p, DEFAULT_BUDGET, |b| {
        let mut key = shift(&masks(t, b, pv), s, pv);
        key.extend(incident.iter().map(|&e| b[e]));
        key
    })
}

fn honest_sum(s: &[u64], honest: &BTreeSet<AgentId>) -> u128 {
    honest.iter().map(|&i| s[i - 1] as u128).sum()
}

/// Same view distribution for `s` and `s'` (which agree on `C` and have equal
/// honest sums). Predicted whenever `C` is not a vertex cut.
pub fn check_theorem1(
    t: &Topology,
    p: Modulus,
    adv: &AdversarySpec,
    s: &[u64],
    s_prime: &[u64],
) -> Result<AuditVerdict> {
    check_len(t, s)?;
    check_len(t, s_prime)?;
    check_adversary(t, adv)?;
    if let Some(&i) = adv.members.iter().find(|&&i| s[i - 1] != s_prime[i - 1]) {
        return Err(Error::AuditPrecondition(format!("inputs differ at adversarial agent {i}")));
    }
    let honest = adv.honest(t);
    if honest_sum(s, &honest) != honest_sum(s_prime, &honest) {
        return Err(Error::AuditPrecondition("honest input sums differ".into()));
    }
    let cut = t.is_vertex_cut(&adv.members)?;
    let (h1, h2) = rayon::join(|| view_histogram(t, p, adv, s), || view_histogram(t, p, adv, s_prime));
    let (h1, h2) = (h1?, h2?);
    let identical = h1 == h2;
    let params = format!("{} C={} s={:?} s'={:?}", describe(t, p.get()), fmt_set(&adv.members), s, s_prime);
    let details = format!(
        "C is {}a vertex cut; view histograms {} ({} vs {} outcomes)",
        if cut { "" } else { "not " },
        if identical { "identical" } else { "differ" },
        h1.support_size(),
        h2.support_size()
    );
    Ok(AuditVerdict::exact(Claim::Theorem1, params, identical, !cut, details))
}

/// `(C, H)`-privacy for a target honest group `H`: identical views for inputs
/// that differ only inside `H` and keep its sum. Predicted when `H` lies in a
/// single component of `G − C` and has more than one member.
pub fn check_corollary2(
    t: &Topology,
    p: Modulus,
    adv: &AdversarySpec,
    target: &BTreeSet<AgentId>,
    s: &[u64],
    s_prime: &[u64],
) -> Result<AuditVerdict> {
    check_len(t, s)?;
    check_len(t, s_prime)?;
    check_adversary(t, adv)?;
    let hypothesis = corollary2_hypothesis(t, adv, target)?;
    if let Some(i) = t.vertices().find(|i| !target.contains(i) && s[i - 1] != s_prime[i - 1]) {
        return Err(Error::AuditPrecondition(format!("inputs differ at agent {i} outside the target group")));
    }
    if honest_sum(s, target) != honest_sum(s_prime, target) {
        return Err(Error::AuditPrecondition("target group sums differ".into()));
    }
    let params = format!(
        "{} C={} H={} s={:?} s'={:?}",
        describe(t, p.get()),
        fmt_set(&adv.members),
        fmt_set(target),
        s,
        s_prime
    );
    if target.len() == 1 {
        let v = target.iter().next().copied().unwrap_or_default();
        let details = format!("vacuous: singleton group, s_{v} equals the group sum and is revealed");
        return Ok(AuditVerdict::exact(Claim::Corollary2, params, false, false, details));
    }
    let (h1, h2) = rayon::join(|| view_histogram(t, p, adv, s), || view_histogram(t, p, adv, s_prime));
    let identical = h1? == h2?;
    let details = format!(
        "H {} by C; view histograms {}",
        if hypothesis { "not cut" } else { "cut" },
        if identical { "identical" } else { "differ" }
    );
    Ok(AuditVerdict::exact(Claim::Corollary2, params, identical, hypothesis, details))
}

/// `H` is a non-empty honest set lying inside one component of `G − C`, with at least two members.
pub(crate) fn corollary2_hypothesis(t: &Topology, adv: &AdversarySpec, target: &BTreeSet<AgentId>) -> Result<bool> {
    if target.is_empty() {
        return Err(Error::AuditPrecondition("target group is empty".into()));
    }
    if let Some(&v) = target.iter().find(|&&v| !t.contains(v)) {
        return Err(Error::UnknownAgent(v));
    }
    if let Some(&v) = target.iter().find(|&&v| adv.contains(v)) {
        return Err(Error::AuditPrecondition(format!("agent {v} is both adversarial and in the target group")));
    }
    let parts = t.components_without(&adv.members)?;
    let first = target.iter().next().copied().expect("non-empty");
    let whole = parts.part_of(first).is_some_and(|part| target.is_subset(part));
    Ok(whole && target.len() > 1)
}

/// Given any fixed `{b_e : e ∈ E_C}`, the honest masks are uniform on the
/// coset `Σ_H a_i ≡ −Σ_C a_i`. Holds when `C` is not a vertex cut.
pub fn check_conditional_masks(t: &Topology, p: Modulus, adv: &AdversarySpec) -> Result<AuditVerdict> {
    check_adversary(t, adv)?;
    let pv = p.get();
    let incident = adv.incident_edges(t);
    let honest: Vec<AgentId> = adv.honest(t).into_iter().collect();
    let joint = enumerate(t.edges().len(), p, DEFAULT_BUDGET, |b| {
        let a = masks(t, b, pv);
        let mut key: Vec<u64> = incident.iter().map(|&e| b[e]).collect();
        key.extend(honest.iter().map(|&i| a[i - 1]));
        key
    })?;
    let k = incident.len();
    let mut groups: BTreeMap<Vec<u64>, Histogram> = BTreeMap::new();
    for (key, c) in joint.iter() {
        groups.entry(key[..k].to_vec()).or_default().add_count(key[k..].to_vec(), c);
    }
    let h = honest.len() as i64;
    let honest_edges = t.edges().len() as i64 - k as i64;
    let want_support = pow(pv, h - 1);
    let want_count = pow(pv, honest_edges - h + 1);
    let all_flat = groups
        .values()
        .all(|g| Some(g.support_size() as u128) == want_support && g.uniform_count().map(|c| c as u128) == want_count);
    let coset_ok = joint.iter().all(|(key, _)| {
        let b = &key[..k];
        let mut bfull = vec![0u64; t.edges().len()];
        for (&e, &v) in incident.iter().zip(b) {
            bfull[e] = v;
        }
        // honest edges contribute zero to the total honest mask sum
        let a_known = masks(t, &bfull, pv);
        let adv_total: u64 = adv.members.iter().fold(0, |acc, &i| (acc + a_known[i - 1]) % pv);
        (sum_mod(&key[k..], pv) + adv_total).is_multiple_of(pv)
    });
    let cut = t.is_vertex_cut(&adv.members)?;
    let pass = all_flat && coset_ok;
    let details = format!(
        "{} conditioning values; per-value support expected {} with count {}; flat: {all_flat}; coset: {coset_ok}",
        groups.len(),
        want_support.map_or("n/a".into(), |x| x.to_string()),
        want_count.map_or("n/a".into(), |x| x.to_string()),
    );
    let params = format!("{} C={}", describe(t, pv), fmt_set(&adv.members));
    Ok(AuditVerdict::exact(Claim::ConditionalMasks, params, pass, !cut, details))
}

/// View distribution enumerated over raw share pairs `(r_ij, r_ji)` instead of
/// differences: outcome is `(s̃, then r_ij, r_ji for each e ∈ E_C)`.
pub fn raw_pair_view_histogram(t: &Topology, p: Modulus, adv: &AdversarySpec, s: &[u64]) -> Result<Histogram> {
    check_len(t, s)?;
    check_adversary(t, adv)?;
    let pv = p.get();
    let incident = adv.incident_edges(t);
    enumerate(2 * t.edges().len(), p, DEFAULT_BUDGET, |r| {
        let b: Vec<u64> = r.chunks(2).map(|pair| (pair[1] + pv - pair[0]) % pv).collect();
        let mut key = shift(&masks(t, &b, pv), s, pv);
        for &e in &incident {
            key.push(r[2 * e]);
            key.push(r[2 * e + 1]);
        }
        key
    })
}

/// Meta-check of the difference-level oracle: projecting the raw-share view
/// onto `(s̃, b_{E_C})` gives `p^{|E|}` times the difference-level histogram,
/// and both levels agree on whether `s` and `s'` are distinguishable.
pub fn check_raw_pair_consistency(
    t: &Topology,
    p: Modulus,
    adv: &AdversarySpec,
    s: &[u64],
    s_prime: &[u64],
) -> Result<AuditVerdict> {
    let pv = p.get();
    let n = t.n();
    let scale = (pv as u128).pow(t.edges().len() as u32);
    let project = |raw: &Histogram| {
        let mut out = Histogram::new();
        for (k, c) in raw.iter() {
            let mut key = k[..n].to_vec();
            key.extend(k[n..].chunks(2).map(|pair| (pair[1] + pv - pair[0]) % pv));
            out.add_count(key, c);
        }
        out
    };
    let raw1 = raw_pair_view_histogram(t, p, adv, s)?;
    let raw2 = raw_pair_view_histogram(t, p, adv, s_prime)?;
    let b1 = view_histogram(t, p, adv, s)?;
    let b2 = view_histogram(t, p, adv, s_prime)?;
    let scaled_match = |raw: &Histogram, b: &Histogram| {
        let proj = project(raw);
        proj.support_size() == b.support_size() && proj.iter().all(|(k, c)| c as u128 == b.count(k) as u128 * scale)
    };
    let projection_ok = scaled_match(&raw1, &b1) && scaled_match(&raw2, &b2);
    let same_verdict = (raw1 == raw2) == (b1 == b2);
    let params = format!("{} C={} s={:?} s'={:?}", describe(t, pv), fmt_set(&adv.members), s, s_prime);
    let details = format!(
        "projection matches: {projection_ok}; raw views {}; difference views {}",
        if raw1 == raw2 { "identical" } else { "differ" },
        if b1 == b2 { "identical" } else { "differ" }
    );
    Ok(AuditVerdict::exact(Claim::RawPairConsistency, params, projection_ok && same_verdict, true, details))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{cut_topology, CUT_ADVERSARY};

    fn m(p: u64) -> Modulus {
        Modulus::new(p).unwrap()
    }

    fn brute_masks(t: &Topology, p: u64) -> BTreeMap<Vec<u64>, u64> {
        // independent oracle: nested loops over b, explicit incidence columns
        let e = t.edges().len();
        let inc = t.incidence_matrix();
        let mut out = BTreeMap::new();
        let total = p.pow(e as u32);
        for idx in 0..total {
            let mut rem = idx;
            let b: Vec<i64> = (0..e)
                .map(|_| {
                    let d = rem % p;
                    rem /= p;
                    d as i64
                })
                .collect();
            let a: Vec<u64> = (0..t.n())
                .map(|i| (0..e).map(|c| inc.get(i, c) as i64 * b[c]).sum::<i64>().rem_euclid(p as i64) as u64)
                .collect();
            *out.entry(a).or_insert(0) += 1;
        }
        out
    }

    #[test]
    fn triangle_masks_mod_3() {
        let h = enumerate_mask_distribution(&Topology::complete(3), m(3)).unwrap();
        assert_eq!(h.total(), 27);
        assert_eq!(h.support_size(), 9);
        assert_eq!(h.uniform_count(), Some(3));
        let oracle = brute_masks(&Topology::complete(3), 3);
        assert!(h.iter().all(|(k, c)| oracle[k] == c));
    }

    #[test]
    fn single_edge_masks_mod_5() {
        let h = enumerate_mask_distribution(&Topology::path(2), m(5)).unwrap();
        assert_eq!(h.support_size(), 5);
        for k in 0..5u64 {
            assert_eq!(h.count(&[k, (5 - k) % 5]), 1);
        }
    }

    #[test]
    fn path_masks_mod_2() {
        let h = enumerate_mask_distribution(&Topology::path(3), m(2)).unwrap();
        assert_eq!(h.support_size(), 4);
        assert_eq!(h.uniform_count(), Some(1));
        assert!(h.iter().all(|(k, _)| k.iter().sum::<u64>() % 2 == 0));
    }

    #[test]
    fn lemma2_examples() {
        assert!(check_lemma2(&Topology::complete(3), m(3)).unwrap().pass);
        let split = Topology::new(4, [(1, 2), (3, 4)]).unwrap();
        let v = check_lemma2(&split, m(3)).unwrap();
        assert!(!v.pass && !v.hypothesis_holds);
        assert!(check_lemma2(&Topology::new(1, []).unwrap(), m(7)).unwrap().pass);
    }

    #[test]
    fn budget_is_enforced() {
        let err = enumerate_mask_distribution(&cut_topology(), m(3)).unwrap_err();
        assert_eq!(err, Error::BudgetExceeded { needed: 3u128.pow(15), budget: DEFAULT_BUDGET });
    }

    #[test]
    fn lemma3_examples() {
        let t = Topology::complete(3);
        let v = check_lemma3(&t, m(3), &[1, 0, 2]).unwrap();
        assert!(v.pass, "{v}");
        let h = enumerate_effective_inputs(&t, m(3), &[1, 0, 2]).unwrap();
        assert!(h.iter().all(|(k, _)| k.iter().sum::<u64>() % 3 == 0));
        assert_eq!(
            enumerate_effective_inputs(&t, m(3), &[0, 0, 0]).unwrap(),
            enumerate_mask_distribution(&t, m(3)).unwrap()
        );
        assert_eq!(
            enumerate_effective_inputs(&t, m(3), &[2, 0, 1]).unwrap(),
            enumerate_effective_inputs(&t, m(3), &[0, 1, 2]).unwrap()
        );
    }

    #[test]
    fn theorem1_examples() {
        let c3 = AdversarySpec::new([3]);
        let path = Topology::path(3);
        assert!(check_theorem1(&path, m(3), &c3, &[1, 2, 0], &[2, 1, 0]).unwrap().pass);
        let c2 = AdversarySpec::new([2]);
        let v = check_theorem1(&path, m(3), &c2, &[1, 0, 2], &[2, 0, 1]).unwrap();
        assert!(!v.pass && !v.hypothesis_holds);
        let v =
            check_theorem1(&Topology::complete(3), m(3), &AdversarySpec::default(), &[1, 0, 2], &[0, 2, 1]).unwrap();
        assert!(v.pass && v.hypothesis_holds);
    }

    #[test]
    fn theorem1_is_symmetric() {
        let path = Topology::path(3);
        for c in [1, 2, 3] {
            let adv = AdversarySpec::new([c]);
            let s = [1, 1, 1];
            let mut s2 = [0, 0, 0];
            let honest: Vec<usize> = adv.honest(&path).into_iter().collect();
            s2[c - 1] = 1;
            s2[honest[0] - 1] = 2;
            let a = check_theorem1(&path, m(3), &adv, &s, &s2).unwrap();
            let b = check_theorem1(&path, m(3), &adv, &s2, &s).unwrap();
            assert_eq!(a.pass, b.pass);
        }
    }

    #[test]
    fn theorem1_preconditions() {
        let path = Topology::path(3);
        let c3 = AdversarySpec::new([3]);
        assert!(matches!(check_theorem1(&path, m(3), &c3, &[1, 2, 0], &[2, 1, 1]), Err(Error::AuditPrecondition(_))));
        assert!(matches!(check_theorem1(&path, m(3), &c3, &[1, 2, 0], &[2, 2, 0]), Err(Error::AuditPrecondition(_))));
        let all = AdversarySpec::new([1, 2, 3]);
        assert!(check_theorem1(&path, m(3), &all, &[0; 3], &[0; 3]).is_err());
        assert!(check_theorem1(&path, m(3), &c3, &[0; 2], &[0; 3]).is_err());
    }

    #[test]
    fn corollary2_on_cut_graph() {
        let t = cut_topology();
        let adv = AdversarySpec::new(CUT_ADVERSARY);
        let h3: BTreeSet<AgentId> = [6, 7, 8, 9].into();
        let s = [1, 0, 0, 1, 0, 1, 0, 1, 1, 0];
        let s2 = [1, 0, 0, 1, 0, 0, 1, 1, 1, 0];
        let v = check_corollary2(&t, m(2), &adv, &h3, &s, &s2).unwrap();
        assert!(v.pass && v.hypothesis_holds, "{v}");

        let h2: BTreeSet<AgentId> = [4].into();
        let v = check_corollary2(&t, m(2), &adv, &h2, &s, &s).unwrap();
        assert!(!v.pass && !v.hypothesis_holds);
        assert!(v.details.contains("revealed"));

        // group spanning two components is cut and leaks
        let spanning: BTreeSet<AgentId> = [1, 6].into();
        let a = [1, 0, 0, 0, 0, 0, 0, 0, 0, 0];
        let b = [0, 0, 0, 0, 0, 1, 0, 0, 0, 0];
        let v = check_corollary2(&t, m(2), &adv, &spanning, &a, &b).unwrap();
        assert!(!v.hypothesis_holds && !v.pass);
    }

    #[test]
    fn corollary2_matches_theorem1_on_full_honest_set() {
        let t = Topology::complete(3);
        let adv = AdversarySpec::new([3]);
        let honest = adv.honest(&t);
        let c2 = check_corollary2(&t, m(3), &adv, &honest, &[1, 2, 0], &[2, 1, 0]).unwrap();
        let t1 = check_theorem1(&t, m(3), &adv, &[1, 2, 0], &[2, 1, 0]).unwrap();
        assert_eq!((c2.pass, c2.hypothesis_holds), (t1.pass, t1.hypothesis_holds));
    }

    #[test]
    fn corollary2_preconditions() {
        let t = Topology::path(4);
        let adv = AdversarySpec::new([2]);
        let overlap: BTreeSet<AgentId> = [2, 3].into();
        assert!(check_corollary2(&t, m(3), &adv, &overlap, &[0; 4], &[0; 4]).is_err());
        let target: BTreeSet<AgentId> = [3, 4].into();
        assert!(check_corollary2(&t, m(3), &adv, &target, &[1, 0, 0, 0], &[0, 0, 1, 0]).is_err());
        assert!(check_corollary2(&t, m(3), &adv, &BTreeSet::new(), &[0; 4], &[0; 4]).is_err());
    }

    #[test]
    fn conditional_masks() {
        let v = check_conditional_masks(&Topology::complete(4), m(3), &AdversarySpec::new([4])).unwrap();
        assert!(v.pass, "{v}");
        let v = check_conditional_masks(&Topology::cycle(5), m(2), &AdversarySpec::new([1])).unwrap();
        assert!(v.pass, "{v}");
        let v = check_conditional_masks(&Topology::path(3), m(3), &AdversarySpec::new([2])).unwrap();
        assert!(!v.pass && !v.hypothesis_holds);
    }

    #[test]
    fn raw_pairs_agree_with_differences_on_one_edge() {
        let t = Topology::path(2);
        for p in [2, 3, 5] {
            let v = check_raw_pair_consistency(&t, m(p), &AdversarySpec::new([1]), &[0, 1], &[0, 1]).unwrap();
            assert!(v.pass, "{v}");
            let v = check_raw_pair_consistency(&t, m(p), &AdversarySpec::default(), &[0, 1], &[1, 0]).unwrap();
            assert!(v.pass, "{v}");
        }
        let v = check_raw_pair_consistency(&Topology::path(3), m(2), &AdversarySpec::new([2]), &[1, 0, 0], &[0, 0, 1])
            .unwrap();
        assert!(v.pass, "{v}");
    }
}
