//! Deterministic discrete-event simulation of the two-phase protocol.
//!
//! Time is measured in integer ticks. Every send is delayed by a uniform
//! draw from `[1, max_delay]`; links are FIFO. Among the pending deliveries
//! with the smallest time, the next one is chosen uniformly at random. All
//! randomness derives from one master seed split into streams (see
//! [`crate::rng`]), so the schedule can change without changing any share.
//!
//! When an [`AdversarySpec`] is configured the run also records what the
//! colluding agents see: their inputs and own shares, every message
//! delivered to them, and all effective inputs (phase two is assumed to
//! reveal them). Recording never touches the schedule.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::consensus::{self, ConsensusAlgo, Variant};
use crate::error::{Error, Result};
use crate::graph::{AgentId, Topology};
use crate::masking::{phase_complete, AgentState, MaskShareMsg, PhaseDoneMsg, ProtocolParams};
use crate::residue::Residue;
use crate::rng::SeededRng;

pub const DEFAULT_MAX_DELAY: u64 = 4;

/// The colluding passive agents `C`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AdversarySpec {
    pub members: BTreeSet<AgentId>,
}

impl AdversarySpec {
    pub fn new<I: IntoIterator<Item = AgentId>>(members: I) -> Self {
        AdversarySpec { members: members.into_iter().collect() }
    }

    pub fn contains(&self, i: AgentId) -> bool {
        self.members.contains(&i)
    }

    /// `H = V \ C`.
    pub fn honest(&self, t: &Topology) -> BTreeSet<AgentId> {
        t.vertices().filter(|v| !self.members.contains(v)).collect()
    }

    /// Indices (canonical edge order) of edges with at least one endpoint in `C`.
    pub fn incident_edges(&self, t: &Topology) -> Vec<usize> {
        t.edges()
            .iter()
            .enumerate()
            .filter(|(_, (i, j))| self.contains(*i) || self.contains(*j))
            .map(|(e, _)| e)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub topology: Topology,
    pub inputs: Vec<u64>,
    pub params: ProtocolParams,
    pub algo: ConsensusAlgo,
    pub adversary: Option<AdversarySpec>,
    pub seed: u64,
    pub max_delay: u64,
    /// Use these `r_ij` instead of drawing them.
    pub pinned_shares: Option<BTreeMap<(AgentId, AgentId), u64>>,
    /// Drive the schedule from this seed instead of the master seed.
    pub schedule_seed: Option<u64>,
    pub record_gossip_trace: bool,
}

impl SimConfig {
    pub fn new(topology: Topology, inputs: Vec<u64>, params: ProtocolParams) -> Self {
        SimConfig {
            topology,
            inputs,
            params,
            algo: ConsensusAlgo::flood(),
            adversary: None,
            seed: 0,
            max_delay: DEFAULT_MAX_DELAY,
            pinned_shares: None,
            schedule_seed: None,
            record_gossip_trace: false,
        }
    }

    pub fn algo(mut self, algo: ConsensusAlgo) -> Self {
        self.algo = algo;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn adversary(mut self, adversary: AdversarySpec) -> Self {
        self.adversary = Some(adversary);
        self
    }

    pub fn max_delay(mut self, max_delay: u64) -> Self {
        self.max_delay = max_delay;
        self
    }

    pub fn pinned_shares(mut self, shares: BTreeMap<(AgentId, AgentId), u64>) -> Self {
        self.pinned_shares = Some(shares);
        self
    }

    pub fn schedule_seed(mut self, seed: u64) -> Self {
        self.schedule_seed = Some(seed);
        self
    }

    pub fn record_gossip_trace(mut self, on: bool) -> Self {
        self.record_gossip_trace = on;
        self
    }

    /// Short digest of everything but the seed, written into replay headers.
    pub fn config_hash(&self) -> String {
        let mut canon = self.topology.to_text();
        let _ = writeln!(canon, "inputs {:?}", self.inputs);
        let _ = writeln!(canon, "q {} p {}", self.params.q(), self.params.p());
        let _ = writeln!(
            canon,
            "algo {} tol {:e} rounds {:?}",
            self.algo.variant.name(),
            self.algo.gossip_tolerance,
            self.algo.max_rounds
        );
        let _ = writeln!(canon, "max_delay {}", self.max_delay);
        if let Some(adv) = &self.adversary {
            let _ = writeln!(canon, "adversary {:?}", adv.members);
        }
        if let Some(pinned) = &self.pinned_shares {
            let _ = writeln!(canon, "pinned {pinned:?}");
        }
        if let Some(s) = self.schedule_seed {
            let _ = writeln!(canon, "schedule_seed {s}");
        }
        hex::encode(&Sha256::digest(canon.as_bytes())[..8])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Payload {
    Share(MaskShareMsg),
    Done(PhaseDoneMsg),
}

impl Payload {
    pub fn link(&self) -> (AgentId, AgentId) {
        match self {
            Payload::Share(m) => (m.from, m.to),
            Payload::Done(m) => (m.from, m.to),
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Payload::Share(_) => "share",
            Payload::Done(_) => "done",
        }
    }

    fn value(&self) -> u64 {
        match self {
            Payload::Share(m) => m.share.value(),
            Payload::Done(m) => m.origin as u64,
        }
    }
}

/// A pending delivery. Ordered by `(time, seq)`; `seq` is the global send counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimEvent {
    pub time: u64,
    pub seq: u64,
    pub payload: Payload,
}

/// Index of the next event to deliver: uniform among the earliest pending
/// events that are at the head of their link.
pub fn delivery_schedule(rng: &mut SeededRng, pending: &[SimEvent]) -> usize {
    assert!(!pending.is_empty(), "no pending events");
    let t_min = pending.iter().map(|e| e.time).min().expect("non-empty");
    let mut heads: BTreeMap<(AgentId, AgentId), usize> = BTreeMap::new();
    for (idx, ev) in pending.iter().enumerate() {
        if ev.time != t_min {
            continue;
        }
        let slot = heads.entry(ev.payload.link()).or_insert(idx);
        if pending[*slot].seq > ev.seq {
            *slot = idx;
        }
    }
    let mut candidates: Vec<usize> = heads.into_values().collect();
    candidates.sort_by_key(|&i| pending[i].seq);
    candidates[rng.below(candidates.len() as u64) as usize]
}

/// One line of a replay file: `tick seq kind from to payload`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub tick: u64,
    pub seq: u64,
    pub kind: String,
    pub from: AgentId,
    pub to: AgentId,
    pub payload: u64,
}

impl TranscriptEntry {
    fn of(ev: &SimEvent) -> Self {
        let (from, to) = ev.payload.link();
        TranscriptEntry {
            tick: ev.time,
            seq: ev.seq,
            kind: ev.payload.kind().to_string(),
            from,
            to,
            payload: ev.payload.value(),
        }
    }

    pub fn line(&self) -> String {
        format!("{} {} {} {} {} {}", self.tick, self.seq, self.kind, self.from, self.to, self.payload)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Replay {
    pub seed: u64,
    pub config_hash: String,
    pub events: Vec<TranscriptEntry>,
}

impl Replay {
    pub fn to_text(&self) -> String {
        let mut out = format!("# privavg replay v1\n# seed={} config={}\n", self.seed, self.config_hash);
        for ev in &self.events {
            out.push_str(&ev.line());
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentValue {
    pub agent: AgentId,
    pub value: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShareRecord {
    pub from: AgentId,
    pub to: AgentId,
    pub value: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DifferenceRecord {
    pub i: AgentId,
    pub j: AgentId,
    pub b: u64,
}

/// Everything the colluding agents jointly observe.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversaryView {
    pub members: Vec<AgentId>,
    pub p: u64,
    pub adversary_inputs: Vec<AgentValue>,
    /// `s̃_i` for all agents, indexed by `agent − 1`.
    pub effective_inputs: Vec<u64>,
    /// `b_e` for every edge touching `C`, canonical edge order.
    pub incident_differences: Vec<DifferenceRecord>,
    /// Shares the members drew themselves.
    pub own_shares: Vec<ShareRecord>,
    /// Every phase-one message delivered to a member.
    pub transcript: Vec<TranscriptEntry>,
}

impl AdversaryView {
    /// Canonical outcome tuple `(s̃_1..s̃_n, b_e for e ∈ E_C)`.
    pub fn outcome(&self) -> Vec<u64> {
        self.effective_inputs.iter().copied().chain(self.incident_differences.iter().map(|d| d.b)).collect()
    }

    /// Recompute `{b_e : e ∈ E_C}` from the transcript and own shares alone.
    pub fn derive_differences(&self, t: &Topology) -> Result<Vec<DifferenceRecord>> {
        let p = self.p as i128;
        let mut sent: BTreeMap<(AgentId, AgentId), u64> = BTreeMap::new();
        for s in &self.own_shares {
            sent.insert((s.from, s.to), s.value);
        }
        for e in self.transcript.iter().filter(|e| e.kind == "share") {
            sent.insert((e.from, e.to), e.payload);
        }
        let spec = AdversarySpec::new(self.members.iter().copied());
        spec.incident_edges(t)
            .into_iter()
            .map(|e| {
                let (i, j) = t.edges()[e];
                let r_ij = sent.get(&(i, j)).ok_or(Error::IncompleteExchange(i, j))?;
                let r_ji = sent.get(&(j, i)).ok_or(Error::IncompleteExchange(i, j))?;
                let b = (*r_ji as i128 - *r_ij as i128).rem_euclid(p) as u64;
                Ok(DifferenceRecord { i, j, b })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentRecord {
    pub id: AgentId,
    pub input: u64,
    pub mask: u64,
    pub effective_input: u64,
    /// This agent's phase-two estimate of `Σ s̃_i`.
    #[serde(with = "rational_text")]
    pub estimate: BigRational,
    #[serde(with = "rational_text")]
    pub average: BigRational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    #[serde(with = "u64_text")]
    pub seed: u64,
    pub config_hash: String,
    pub n: usize,
    pub q: u64,
    pub p: u64,
    pub algo: String,
    pub max_delay: u64,
    pub ticks: u64,
    pub phase1_messages: u64,
    pub phase2_messages: u64,
    pub phase2_rounds: u64,
    #[serde(with = "rational_text")]
    pub average: BigRational,
    pub agents: Vec<AgentRecord>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub view: Option<AdversaryView>,
}

impl RunReport {
    pub fn masks(&self) -> Vec<u64> {
        self.agents.iter().map(|a| a.mask).collect()
    }

    pub fn effective_inputs(&self) -> Vec<u64> {
        self.agents.iter().map(|a| a.effective_input).collect()
    }

    pub fn to_text(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Report(e.to_string()))
    }

    pub fn from_text(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Report(e.to_string()))
    }
}

mod rational_text {
    use num_rational::BigRational;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(|_| D::Error::custom(format!("not a rational: {s:?}")))
    }
}

mod u64_text {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &u64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(|_| D::Error::custom(format!("not a u64: {s:?}")))
    }
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub report: RunReport,
    pub replay: Replay,
    /// `(round, max − min)` after every gossip exchange, when requested.
    pub gossip_trace: Vec<(u64, f64)>,
}

struct Scheduler {
    rng: SeededRng,
    max_delay: u64,
    seq: u64,
    pending: Vec<SimEvent>,
    link_clock: BTreeMap<(AgentId, AgentId), u64>,
}

impl Scheduler {
    fn send(&mut self, now: u64, payload: Payload) {
        let delay = self.rng.range_inclusive(1, self.max_delay);
        let clock = self.link_clock.entry(payload.link()).or_insert(0);
        let time = (now + delay).max(*clock);
        *clock = time;
        self.pending.push(SimEvent { time, seq: self.seq, payload });
        self.seq += 1;
    }

    fn next(&mut self) -> Option<SimEvent> {
        if self.pending.is_empty() {
            return None;
        }
        let idx = delivery_schedule(&mut self.rng, &self.pending);
        Some(self.pending.swap_remove(idx))
    }
}

/// Run both phases end to end.
pub fn simulate(cfg: &SimConfig) -> Result<SimOutput> {
    let t = &cfg.topology;
    let params = &cfg.params;
    let n = t.n();
    if params.n() != n {
        return Err(Error::InvalidParams(format!("parameters are for {} agents, topology has {n}", params.n())));
    }
    params.validate_inputs(&cfg.inputs)?;
    if cfg.max_delay == 0 {
        return Err(Error::InvalidParams("max_delay must be at least 1".into()));
    }
    let parts = t.components();
    if parts.len() > 1 {
        return Err(Error::Disconnected(parts.to_string()));
    }
    if let Some(adv) = &cfg.adversary {
        if let Some(&bad) = adv.members.iter().find(|&&v| !t.contains(v)) {
            return Err(Error::UnknownAgent(bad));
        }
    }

    let mut states = (1..=n).map(|i| AgentState::new(i, t, cfg.inputs[i - 1], params)).collect::<Result<Vec<_>>>()?;
    let mut sched = Scheduler {
        rng: SeededRng::with_stream(cfg.schedule_seed.unwrap_or(cfg.seed), 0),
        max_delay: cfg.max_delay,
        seq: 0,
        pending: Vec::new(),
        link_clock: BTreeMap::new(),
    };

    for st in states.iter_mut() {
        let msgs = match &cfg.pinned_shares {
            Some(pinned) => st.init_shares_pinned(pinned)?,
            None => st.init_shares(&mut SeededRng::with_stream(cfg.seed, st.id() as u64))?,
        };
        for m in msgs {
            sched.send(0, Payload::Share(m));
        }
        for m in st.announce_done() {
            sched.send(0, Payload::Done(m));
        }
    }

    let members = cfg.adversary.as_ref().map(|a| a.members.clone()).unwrap_or_default();
    let mut replay = Vec::new();
    let mut transcript = Vec::new();
    let mut now = 0;
    while let Some(ev) = sched.next() {
        now = ev.time;
        let entry = TranscriptEntry::of(&ev);
        let (_, to) = ev.payload.link();
        if members.contains(&to) {
            transcript.push(entry.clone());
        }
        replay.push(entry);
        let st = &mut states[to - 1];
        match ev.payload {
            Payload::Share(m) => {
                if st.receive_share(m)?.is_some() {
                    for d in st.announce_done() {
                        sched.send(now, Payload::Done(d));
                    }
                }
            }
            Payload::Done(m) => {
                for d in st.receive_done(m)? {
                    sched.send(now, Payload::Done(d));
                }
            }
        }
    }
    assert!(phase_complete(&states), "phase one stalled on a connected graph");
    let phase1_messages = replay.len() as u64;

    let effective: Vec<Residue> = states.iter().map(|s| s.effective_input().expect("masked")).collect();
    let mut gossip_trace = Vec::new();
    let phase2 = match cfg.algo.variant {
        Variant::FloodSum => consensus::flood_sum(t, &effective)?,
        Variant::GossipAvg => {
            let scaled: Vec<BigRational> = effective
                .iter()
                .map(|r| BigRational::from_integer(BigInt::from(r.value()) * BigInt::from(n)))
                .collect();
            let mut rng = SeededRng::with_stream(cfg.seed, n as u64 + 1);
            let record = cfg.record_gossip_trace;
            consensus::gossip_avg_observed(t, &scaled, &cfg.algo, &mut rng, |r| {
                if record {
                    use num_traits::ToPrimitive;
                    gossip_trace.push((r.round, r.spread().to_f64().unwrap_or(f64::NAN)));
                }
            })?
        }
    };

    let agents = states
        .iter()
        .zip(&phase2.values)
        .map(|(st, est)| {
            Ok(AgentRecord {
                id: st.id(),
                input: st.input().value(),
                mask: st.mask().expect("masked").value(),
                effective_input: st.effective_input().expect("masked").value(),
                estimate: est.clone(),
                average: consensus::finalize(est, params)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let average = agents[0].average.clone();
    debug_assert!(agents.iter().all(|a| a.average == average));

    let view = match &cfg.adversary {
        Some(adv) => Some(record_view(t, adv, &states, transcript, params)?),
        None => None,
    };
    let config_hash = cfg.config_hash();
    let report = RunReport {
        seed: cfg.seed,
        config_hash: config_hash.clone(),
        n,
        q: params.q(),
        p: params.p().get(),
        algo: cfg.algo.variant.name().to_string(),
        max_delay: cfg.max_delay,
        ticks: now,
        phase1_messages,
        phase2_messages: phase2.messages,
        phase2_rounds: phase2.rounds,
        average,
        agents,
        view,
    };
    Ok(SimOutput { report, replay: Replay { seed: cfg.seed, config_hash, events: replay }, gossip_trace })
}

fn record_view(
    t: &Topology,
    adv: &AdversarySpec,
    states: &[AgentState],
    transcript: Vec<TranscriptEntry>,
    params: &ProtocolParams,
) -> Result<AdversaryView> {
    let own_shares = adv
        .members
        .iter()
        .flat_map(|&i| {
            states[i - 1].sent_shares().iter().map(move |(&j, r)| ShareRecord { from: i, to: j, value: r.value() })
        })
        .collect();
    let mut view = AdversaryView {
        members: adv.members.iter().copied().collect(),
        p: params.p().get(),
        adversary_inputs: adv
            .members
            .iter()
            .map(|&i| AgentValue { agent: i, value: states[i - 1].input().value() })
            .collect(),
        effective_inputs: states.iter().map(|s| s.effective_input().expect("masked").value()).collect(),
        incident_differences: Vec::new(),
        own_shares,
        transcript,
    };
    view.incident_differences = view.derive_differences(t)?;
    Ok(view)
}

/// The adversary view recorded in `report`.
pub fn extract_view(report: &RunReport) -> Result<AdversaryView> {
    report.view.clone().ok_or(Error::NoAdversary)
}
