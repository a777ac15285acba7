use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::exact::corollary2_hypothesis;
use super::{describe, fmt_set, AuditVerdict, Claim, Histogram, Method, FULL_TUPLE_LIMIT};
use crate::consensus::ConsensusAlgo;
use crate::error::{Error, Result};
use crate::graph::{AgentId, Partition, Topology};
use crate::masking::ProtocolParams;
use crate::simnet::{extract_view, simulate, AdversarySpec, AdversaryView, SimConfig};

/// How simulated views are turned into histogram outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Binning {
    /// The whole `(s̃, b_{E_C})` tuple.
    FullTuple,
    /// One histogram per marginal: the target group's `Σ s̃ mod p`, each
    /// `b_e` on `E_C`, each honest agent's residual `s̃_i` minus the part of
    /// its mask the adversary knows, and the residual sum over each component
    /// of `G − C`. Tested jointly with Bonferroni.
    Marginals,
}

impl Binning {
    pub fn for_instance(t: &Topology, p: u64) -> Self {
        let outcomes = (p as u128).checked_pow(t.edges().len() as u32).unwrap_or(u128::MAX);
        if outcomes <= FULL_TUPLE_LIMIT {
            Binning::FullTuple
        } else {
            Binning::Marginals
        }
    }
}

/// A sampled distinguishing experiment between two input vectors.
#[derive(Debug, Clone)]
pub struct SampledTest {
    pub topology: Topology,
    pub params: ProtocolParams,
    pub adversary: AdversarySpec,
    /// Group whose inputs differ between `s` and `s'`; `None` means all honest agents.
    pub target: Option<BTreeSet<AgentId>>,
    pub s: Vec<u64>,
    pub s_prime: Vec<u64>,
    pub samples: usize,
    pub alpha: f64,
    /// Run `i` of both input vectors uses seed `base_seed + i`.
    pub base_seed: u64,
    pub binning: Option<Binning>,
}

impl SampledTest {
    pub fn new(
        topology: Topology,
        params: ProtocolParams,
        adversary: AdversarySpec,
        s: Vec<u64>,
        s_prime: Vec<u64>,
    ) -> Self {
        SampledTest {
            topology,
            params,
            adversary,
            target: None,
            s,
            s_prime,
            samples: 100_000,
            alpha: super::DEFAULT_ALPHA,
            base_seed: 0,
            binning: None,
        }
    }

    pub fn target(mut self, target: BTreeSet<AgentId>) -> Self {
        self.target = Some(target);
        self
    }

    pub fn samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn base_seed(mut self, seed: u64) -> Self {
        self.base_seed = seed;
        self
    }

    pub fn binning(mut self, binning: Binning) -> Self {
        self.binning = Some(binning);
        self
    }
}

/// Two-sample chi-square homogeneity test. Returns `(statistic, degrees of
/// freedom, p-value)`; bins are the union of both supports.
pub fn two_sample_chi_square(a: &Histogram, b: &Histogram) -> (f64, usize, f64) {
    let (na, nb) = (a.total() as f64, b.total() as f64);
    let bins: BTreeSet<&Vec<u64>> = a.iter().map(|(k, _)| k).chain(b.iter().map(|(k, _)| k)).collect();
    if bins.len() < 2 || na == 0.0 || nb == 0.0 {
        return (0.0, 0, 1.0);
    }
    let (ka, kb) = ((nb / na).sqrt(), (na / nb).sqrt());
    let stat: f64 = bins
        .iter()
        .map(|k| {
            let (oa, ob) = (a.count(k) as f64, b.count(k) as f64);
            (ka * oa - kb * ob).powi(2) / (oa + ob)
        })
        .sum();
    let df = bins.len() - 1;
    let p = ChiSquared::new(df as f64).map(|d| d.sf(stat)).unwrap_or(f64::NAN);
    (stat, df, p)
}

fn marginal_keys(
    t: &Topology,
    adv: &AdversarySpec,
    components: &Partition,
    target: &BTreeSet<AgentId>,
    view: &AdversaryView,
) -> Vec<(String, u64)> {
    let p = view.p;
    let mut out = Vec::new();
    let group_sum = target.iter().fold(0, |acc, &i| (acc + view.effective_inputs[i - 1]) % p);
    out.push(("group_sum".to_string(), group_sum));
    let mut known = vec![0u64; t.n()];
    for d in &view.incident_differences {
        out.push((format!("b{}-{}", d.i, d.j), d.b));
        known[d.i - 1] = (known[d.i - 1] + d.b) % p;
        known[d.j - 1] = (known[d.j - 1] + p - d.b) % p;
    }
    let residual = |i: AgentId| (view.effective_inputs[i - 1] + p - known[i - 1]) % p;
    for i in adv.honest(t) {
        out.push((format!("residual{i}"), residual(i)));
    }
    for part in components.parts() {
        let sum = part.iter().fold(0, |acc, &i| (acc + residual(i)) % p);
        out.push((format!("component{}", fmt_set(part)), sum));
    }
    out
}

fn histograms(
    test: &SampledTest,
    target: &BTreeSet<AgentId>,
    binning: Binning,
    s: &[u64],
) -> Result<BTreeMap<String, Histogram>> {
    let t = &test.topology;
    let views = (0..test.samples)
        .into_par_iter()
        .map(|i| {
            let cfg = SimConfig::new(t.clone(), s.to_vec(), test.params)
                .algo(ConsensusAlgo::flood())
                .adversary(test.adversary.clone())
                .seed(test.base_seed.wrapping_add(i as u64));
            extract_view(&simulate(&cfg)?.report)
        })
        .collect::<Result<Vec<_>>>()?;
    let components = t.components_without(&test.adversary.members)?;
    let mut out: BTreeMap<String, Histogram> = BTreeMap::new();
    for v in &views {
        match binning {
            Binning::FullTuple => out.entry("view".into()).or_default().add(v.outcome()),
            Binning::Marginals => {
                for (name, key) in marginal_keys(t, &test.adversary, &components, target, v) {
                    out.entry(name).or_default().add(vec![key]);
                }
            }
        }
    }
    Ok(out)
}

/// Simulate `samples` runs for each input vector and compare the recorded
/// adversary views with a two-sample chi-square test (Bonferroni across
/// marginals). Passes when no marginal is rejected at `alpha`.
pub fn sampled_view_test(test: &SampledTest) -> Result<AuditVerdict> {
    let t = &test.topology;
    let adv = &test.adversary;
    let n = t.n();
    for s in [&test.s, &test.s_prime] {
        test.params.validate_inputs(s)?;
    }
    if adv.members.len() >= n {
        return Err(Error::AuditPrecondition("the adversary must leave at least one honest agent".into()));
    }
    let honest = adv.honest(t);
    let target = test.target.clone().unwrap_or_else(|| honest.clone());
    let hypothesis = match &test.target {
        Some(target) => corollary2_hypothesis(t, adv, target)?,
        None => !t.is_vertex_cut(&adv.members)?,
    };
    if let Some(i) = t.vertices().find(|i| !target.contains(i) && test.s[i - 1] != test.s_prime[i - 1]) {
        return Err(Error::AuditPrecondition(format!("inputs differ at agent {i} outside the compared group")));
    }
    let group_sum = |s: &[u64]| target.iter().map(|&i| s[i - 1] as u128).sum::<u128>();
    if group_sum(&test.s) != group_sum(&test.s_prime) {
        return Err(Error::AuditPrecondition("compared group sums differ".into()));
    }
    if !(test.alpha > 0.0 && test.alpha < 1.0) {
        return Err(Error::AuditPrecondition(format!("alpha must lie in (0, 1), got {}", test.alpha)));
    }

    let p = test.params.p().get();
    let binning = test.binning.unwrap_or_else(|| Binning::for_instance(t, p));
    let (h1, h2) = rayon::join(
        || histograms(test, &target, binning, &test.s),
        || histograms(test, &target, binning, &test.s_prime),
    );
    let (h1, h2) = (h1?, h2?);

    let families = h1.len().max(1);
    let adjusted = test.alpha / families as f64;
    let mut worst: Option<(String, f64, usize, f64)> = None;
    for (name, a) in &h1 {
        let b = h2.get(name).cloned().unwrap_or_default();
        let bins = a.iter().map(|(k, _)| k).chain(b.iter().map(|(k, _)| k)).collect::<BTreeSet<_>>().len();
        if (a.total() + b.total()) < 10 * bins as u64 {
            return Err(Error::InsufficientSamples { samples: test.samples, bins });
        }
        let (stat, df, pv) = two_sample_chi_square(a, &b);
        if worst.as_ref().is_none_or(|w| pv < w.3) {
            worst = Some((name.clone(), stat, df, pv));
        }
    }
    let (name, stat, df, pv) = worst.unwrap_or_else(|| ("view".into(), 0.0, 0, 1.0));
    let pass = pv >= adjusted;
    let claim = if test.target.is_some() { Claim::Corollary2 } else { Claim::Theorem1 };
    let mut params = format!(
        "{} C={} s={:?} s'={:?} samples={} binning={:?}",
        describe(t, p),
        fmt_set(&adv.members),
        test.s,
        test.s_prime,
        test.samples,
        binning
    );
    if let Some(target) = &test.target {
        params.push_str(&format!(" H={}", fmt_set(target)));
    }
    let details = format!(
        "{families} histogram(s); smallest p-value in {name:?} (chi2 = {stat:.3}, df = {df}); Bonferroni level {adjusted:e}; {}",
        if hypothesis { "no leakage predicted" } else { "hypothesis fails, leakage possible" }
    );
    Ok(AuditVerdict {
        claim,
        method: Method::ChiSquare,
        params,
        pass,
        hypothesis_holds: hypothesis,
        statistic: Some(stat),
        p_value: Some(pv),
        alpha: Some(test.alpha),
        details,
    })
}
