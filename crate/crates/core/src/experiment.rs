//! Experiment configuration and input normalization.
//!
//! Configs are TOML documents:
//!
//! ```toml
//! [topology]
//! n = 3
//! edges = [[1, 2], [1, 3], [2, 3]]   # or: file = "triangle.graph"
//!
//! [inputs]
//! values = [4, 7, 3]
//! q1 = 0
//! q2 = 9
//!
//! [protocol]
//! p = 30
//! algo = "flood"
//! seed = 1
//!
//! [adversary]
//! members = [3]
//!
//! [audit]
//! claims = ["lemma2", "theorem1"]
//! inputs_prime = [5, 6, 3]
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Deserialize;

use crate::consensus::{ConsensusAlgo, Variant, DEFAULT_GOSSIP_TOLERANCE};
use crate::error::{Error, Result};
use crate::graph::{AgentId, Topology};
use crate::masking::ProtocolParams;
use crate::privacy_audit::{Claim, DEFAULT_ALPHA};
use crate::simnet::{AdversarySpec, SimConfig, DEFAULT_MAX_DELAY};

/// Inputs shifted from `[q1, q2]` into `Z_q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Normalized {
    pub s: Vec<u64>,
    pub q: u64,
    /// Added back to the average of `s` to get the average of the raw inputs.
    pub shift: i64,
}

impl Normalized {
    pub fn restore(&self, average: &BigRational) -> BigRational {
        average + BigRational::from_integer(BigInt::from(self.shift))
    }
}

/// `s_i = x_i − q1`, `q = q2 − q1 + 1`.
pub fn normalize_inputs(xs: &[i64], q1: i64, q2: i64) -> Result<Normalized> {
    if q1 >= q2 {
        return Err(Error::InvalidParams(format!("need q1 < q2, got q1 = {q1}, q2 = {q2}")));
    }
    let s = xs
        .iter()
        .enumerate()
        .map(|(idx, &x)| {
            if x < q1 || x > q2 {
                Err(Error::InputOutOfRange { agent: idx + 1, value: x, lo: q1, hi: q2 })
            } else {
                Ok((x as i128 - q1 as i128) as u64)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let q =
        u64::try_from(q2 as i128 - q1 as i128 + 1).map_err(|_| Error::InvalidParams("input range too wide".into()))?;
    Ok(Normalized { s, q, shift: q1 })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    topology: RawTopology,
    inputs: RawInputs,
    #[serde(default)]
    protocol: RawProtocol,
    adversary: Option<RawAdversary>,
    #[serde(default)]
    shares: BTreeMap<String, u64>,
    #[serde(default)]
    audit: RawAudit,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTopology {
    n: Option<usize>,
    #[serde(default)]
    edges: Vec<(usize, usize)>,
    file: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInputs {
    values: Vec<i64>,
    q1: Option<i64>,
    q2: Option<i64>,
    q: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProtocol {
    p: Option<u64>,
    algo: Option<String>,
    gossip_tolerance: Option<f64>,
    max_rounds: Option<u64>,
    max_delay: Option<u64>,
    seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAdversary {
    members: Vec<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAudit {
    #[serde(default)]
    claims: Vec<String>,
    p: Option<u64>,
    inputs_prime: Option<Vec<i64>>,
    target: Option<Vec<usize>>,
    samples: Option<usize>,
    alpha: Option<f64>,
    #[serde(default)]
    sampled: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditConfig {
    pub claims: Vec<Claim>,
    /// Modulus for the exact claims; defaults to the protocol modulus.
    pub p: u64,
    pub s_prime: Option<Vec<u64>>,
    pub target: Option<BTreeSet<AgentId>>,
    pub samples: usize,
    pub alpha: f64,
    /// Force the sampled chi-square test for theorem1/corollary2.
    pub sampled: bool,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub topology: Topology,
    pub raw_inputs: Vec<i64>,
    pub inputs: Normalized,
    pub params: ProtocolParams,
    pub algo: ConsensusAlgo,
    pub adversary: Option<AdversarySpec>,
    pub seed: u64,
    pub max_delay: u64,
    pub pinned_shares: Option<BTreeMap<(AgentId, AgentId), u64>>,
    pub audit: AuditConfig,
}

fn field(name: &str, msg: impl std::fmt::Display) -> Error {
    Error::InvalidParams(format!("{name}: {msg}"))
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| field(&path.display().to_string(), e))?;
        Self::parse(&text, path.parent())
    }

    /// Parse a config; a topology `file` is resolved against `base_dir`.
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::InvalidParams(e.to_string()))?;

        let topology = match (&raw.topology.file, raw.topology.n) {
            (Some(file), _) => {
                if !raw.topology.edges.is_empty() || raw.topology.n.is_some() {
                    return Err(field("topology", "give either `file` or `n`/`edges`, not both"));
                }
                let path = base_dir.map_or_else(|| file.clone(), |d| d.join(file));
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| field("topology.file", format!("{}: {e}", path.display())))?;
                text.parse::<Topology>()?
            }
            (None, Some(n)) => {
                Topology::new(n, raw.topology.edges.iter().copied()).map_err(|e| field("topology.edges", e))?
            }
            (None, None) => return Err(field("topology", "missing `n` (or `file`)")),
        };
        let n = topology.n();
        if raw.inputs.values.len() != n {
            return Err(field("inputs.values", format!("expected {n} values, got {}", raw.inputs.values.len())));
        }
        let (q1, q2) = match (raw.inputs.q1, raw.inputs.q2, raw.inputs.q) {
            (_, Some(_), Some(_)) => return Err(field("inputs", "give either `q` or `q2`, not both")),
            (q1, Some(q2), None) => (q1.unwrap_or(0), q2),
            (q1, None, Some(q)) => {
                let q1 = q1.unwrap_or(0);
                (q1, q1 + q as i64 - 1)
            }
            (_, None, None) => return Err(field("inputs", "missing `q2` (or `q`)")),
        };
        let inputs = normalize_inputs(&raw.inputs.values, q1, q2)?;
        let params = ProtocolParams::new(n, inputs.q, raw.protocol.p).map_err(|e| field("protocol.p", e))?;

        let variant = match raw.protocol.algo.as_deref() {
            None => Variant::FloodSum,
            Some(s) => Variant::parse(s).ok_or_else(|| field("protocol.algo", format!("unknown algorithm {s:?}")))?,
        };
        let tol = raw.protocol.gossip_tolerance.unwrap_or(DEFAULT_GOSSIP_TOLERANCE);
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(field("protocol.gossip_tolerance", "must be a positive number"));
        }
        let algo = ConsensusAlgo { variant, gossip_tolerance: tol, max_rounds: raw.protocol.max_rounds };
        let max_delay = raw.protocol.max_delay.unwrap_or(DEFAULT_MAX_DELAY);
        if max_delay == 0 {
            return Err(field("protocol.max_delay", "must be at least 1"));
        }

        let adversary = match raw.adversary {
            None => None,
            Some(a) => {
                if let Some(&v) = a.members.iter().find(|&&v| !topology.contains(v)) {
                    return Err(field("adversary.members", format!("unknown agent {v}")));
                }
                Some(AdversarySpec::new(a.members))
            }
        };

        let pinned_shares = if raw.shares.is_empty() {
            None
        } else {
            let mut map = BTreeMap::new();
            for (key, &r) in &raw.shares {
                let parsed = key
                    .split_once('-')
                    .and_then(|(i, j)| Some((i.trim().parse::<usize>().ok()?, j.trim().parse::<usize>().ok()?)));
                let Some((i, j)) = parsed.filter(|&(i, j)| topology.has_edge(i, j)) else {
                    return Err(field(&format!("shares.{key}"), "expected \"i-j\" naming an edge"));
                };
                map.insert((i, j), r);
            }
            Some(map)
        };

        let claims = raw
            .audit
            .claims
            .iter()
            .map(|c| Claim::parse(c).ok_or_else(|| field("audit.claims", format!("unknown claim {c:?}"))))
            .collect::<Result<Vec<_>>>()?;
        let s_prime = match &raw.audit.inputs_prime {
            None => None,
            Some(xs) => {
                if xs.len() != n {
                    return Err(field("audit.inputs_prime", format!("expected {n} values, got {}", xs.len())));
                }
                Some(normalize_inputs(xs, q1, q2).map_err(|e| field("audit.inputs_prime", e))?.s)
            }
        };
        let target = match &raw.audit.target {
            None => None,
            Some(t) => {
                if let Some(&v) = t.iter().find(|&&v| !topology.contains(v)) {
                    return Err(field("audit.target", format!("unknown agent {v}")));
                }
                Some(t.iter().copied().collect())
            }
        };
        let audit_p = raw.audit.p.unwrap_or(params.p().get());
        if audit_p < 2 {
            return Err(field("audit.p", "must exceed 1"));
        }
        let alpha = raw.audit.alpha.unwrap_or(DEFAULT_ALPHA);
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(field("audit.alpha", "must lie in (0, 1)"));
        }
        let audit = AuditConfig {
            claims,
            p: audit_p,
            s_prime,
            target,
            samples: raw.audit.samples.unwrap_or(100_000),
            alpha,
            sampled: raw.audit.sampled,
        };

        Ok(ExperimentConfig {
            topology,
            raw_inputs: raw.inputs.values,
            inputs,
            params,
            algo,
            adversary,
            seed: raw.protocol.seed.unwrap_or(0),
            max_delay,
            pinned_shares,
            audit,
        })
    }

    pub fn sim_config(&self) -> SimConfig {
        let mut cfg = SimConfig::new(self.topology.clone(), self.inputs.s.clone(), self.params)
            .algo(self.algo)
            .seed(self.seed)
            .max_delay(self.max_delay);
        if let Some(adv) = &self.adversary {
            cfg = cfg.adversary(adv.clone());
        }
        if let Some(pinned) = &self.pinned_shares {
            cfg = cfg.pinned_shares(pinned.clone());
        }
        cfg
    }
}
