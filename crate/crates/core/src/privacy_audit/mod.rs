//! Checks of the protocol's distributional privacy claims.
//!
//! Small instances are checked exactly by enumerating every edge-difference
//! vector `b ∈ Z_p^{|E|}` (views depend on the shares only through `b` and
//! the adversary's own transcript). Larger instances fall back to a sampled
//! two-sample chi-square test over simulated runs.

mod exact;
mod sampled;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub use exact::{
    check_conditional_masks, check_corollary2, check_lemma2, check_lemma3, check_raw_pair_consistency, check_theorem1,
    enumerate_effective_inputs, enumerate_mask_distribution, raw_pair_view_histogram, view_histogram,
};
pub use sampled::{sampled_view_test, two_sample_chi_square, Binning, SampledTest};

use crate::graph::{AgentId, Topology};

/// Largest `p^{|E|}` enumerated before directing callers to the sampled test.
pub const DEFAULT_BUDGET: u128 = 10_000_000;
/// Full view tuples are binned directly while `p^{|E|}` stays below this.
pub const FULL_TUPLE_LIMIT: u128 = 10_000;
pub const DEFAULT_ALPHA: f64 = 0.01;

/// Outcome counts; outcomes are canonical value tuples.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Histogram {
    counts: BTreeMap<Vec<u64>, u64>,
    total: u64,
}

impl Histogram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, outcome: Vec<u64>) {
        self.add_count(outcome, 1);
    }

    pub fn add_count(&mut self, outcome: Vec<u64>, count: u64) {
        *self.counts.entry(outcome).or_insert(0) += count;
        self.total += count;
    }

    pub fn merge(mut self, other: Histogram) -> Histogram {
        if self.counts.len() < other.counts.len() {
            return other.merge(self);
        }
        for (k, c) in other.counts {
            self.add_count(k, c);
        }
        self
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn support_size(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, outcome: &[u64]) -> u64 {
        self.counts.get(outcome).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<u64>, u64)> {
        self.counts.iter().map(|(k, &c)| (k, c))
    }

    /// The single count shared by every outcome, if the histogram is flat.
    pub fn uniform_count(&self) -> Option<u64> {
        let mut it = self.counts.values();
        let first = *it.next()?;
        it.all(|&c| c == first).then_some(first)
    }

    /// Canonical outcome label: values joined by `-`.
    pub fn label(outcome: &[u64]) -> String {
        outcome.iter().map(u64::to_string).collect::<Vec<_>>().join("-")
    }

    /// `outcome,count` rows with a header, in canonical outcome order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("outcome,count\n");
        for (k, c) in self.iter() {
            out.push_str(&format!("{},{}\n", Self::label(k), c));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Claim {
    Lemma2,
    Lemma3,
    Theorem1,
    Corollary2,
    ConditionalMasks,
    RawPairConsistency,
}

impl Claim {
    pub fn id(self) -> &'static str {
        match self {
            Claim::Lemma2 => "lemma2",
            Claim::Lemma3 => "lemma3",
            Claim::Theorem1 => "theorem1",
            Claim::Corollary2 => "corollary2",
            Claim::ConditionalMasks => "conditional-masks",
            Claim::RawPairConsistency => "raw-pair-consistency",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            Claim::Lemma2,
            Claim::Lemma3,
            Claim::Theorem1,
            Claim::Corollary2,
            Claim::ConditionalMasks,
            Claim::RawPairConsistency,
        ]
        .into_iter()
        .find(|c| c.id() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ExactEnumeration,
    ChiSquare,
}

impl Method {
    pub fn id(self) -> &'static str {
        match self {
            Method::ExactEnumeration => "exact_enumeration",
            Method::ChiSquare => "chi_square",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditVerdict {
    pub claim: Claim,
    pub method: Method,
    pub params: String,
    /// The checked distributional identity holds (for enumeration) or is not
    /// rejected (for chi-square).
    pub pass: bool,
    /// Whether the claim's hypothesis holds (e.g. `C` is not a vertex cut).
    /// When false the check is a leakage probe rather than a prediction.
    pub hypothesis_holds: bool,
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub alpha: Option<f64>,
    pub details: String,
}

impl AuditVerdict {
    fn exact(claim: Claim, params: String, pass: bool, hypothesis_holds: bool, details: String) -> Self {
        AuditVerdict {
            claim,
            method: Method::ExactEnumeration,
            params,
            pass,
            hypothesis_holds,
            statistic: None,
            p_value: None,
            alpha: None,
            details,
        }
    }

    /// The check agrees with what the theory predicts: a pass when the
    /// hypothesis holds, anything when it does not.
    pub fn consistent_with_theory(&self) -> bool {
        self.pass || !self.hypothesis_holds
    }
}

impl fmt::Display for AuditVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "claim: {}", self.claim.id())?;
        writeln!(f, "method: {}", self.method.id())?;
        writeln!(f, "params: {}", self.params)?;
        writeln!(f, "verdict: {}", if self.pass { "pass" } else { "fail" })?;
        writeln!(f, "hypothesis: {}", if self.hypothesis_holds { "holds" } else { "does not hold" })?;
        if let Some(s) = self.statistic {
            writeln!(f, "statistic: {s}")?;
        }
        if let Some(p) = self.p_value {
            writeln!(f, "p_value: {p:e}")?;
        }
        if let Some(a) = self.alpha {
            writeln!(f, "alpha: {a}")?;
        }
        writeln!(f, "details: {}", self.details)
    }
}

fn fmt_set(s: &BTreeSet<AgentId>) -> String {
    let ids: Vec<String> = s.iter().map(|v| v.to_string()).collect();
    format!("{{{}}}", ids.join(","))
}

fn describe(t: &Topology, p: u64) -> String {
    format!("n={} |E|={} p={}", t.n(), t.edges().len(), p)
}
