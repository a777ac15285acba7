//! Phase one: correlated masking.
//!
//! Every agent draws a uniform share `r_ij` per neighbour and sends it out,
//! then folds the shares it receives into a mask
//! `a_i = Σ_j (r_ji − r_ij) mod p` and publishes `s̃_i = s_i + a_i mod p`.
//! Masks sum to zero over the whole graph, so `Σ s̃_i mod p = Σ s_i`.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::graph::{AgentId, Topology};
use crate::residue::{sum_mod, Modulus, Residue};
use crate::rng::SeededRng;

/// Public parameters: `n` agents with inputs in `[0, q)`, arithmetic mod `p > n·(q−1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProtocolParams {
    n: usize,
    q: u64,
    p: Modulus,
}

impl ProtocolParams {
    /// `p = None` picks the smallest valid modulus `n·(q−1) + 1`.
    pub fn new(n: usize, q: u64, p: Option<u64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParams("need at least one agent".into()));
        }
        if q < 2 {
            return Err(Error::InvalidParams(format!("input bound q must exceed 1, got {q}")));
        }
        let bound = (n as u128) * (q as u128 - 1);
        let p = match p {
            Some(p) => p,
            None => u64::try_from(bound + 1)
                .map_err(|_| Error::InvalidParams("n·(q−1) + 1 does not fit in 64 bits".into()))?,
        };
        if (p as u128) <= bound {
            return Err(Error::InvalidParams(format!("p = {p} must exceed n·(q−1) = {bound}")));
        }
        Ok(ProtocolParams { n, q, p: Modulus::new(p)? })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn p(&self) -> Modulus {
        self.p
    }

    /// Checks `inputs ∈ Z_q^n`.
    pub fn validate_inputs(&self, inputs: &[u64]) -> Result<()> {
        if inputs.len() != self.n {
            return Err(Error::InputCount { expected: self.n, got: inputs.len() });
        }
        for (idx, &s) in inputs.iter().enumerate() {
            if s >= self.q {
                return Err(Error::InputOutOfRange { agent: idx + 1, value: s as i64, lo: 0, hi: self.q as i64 - 1 });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaskShareMsg {
    pub from: AgentId,
    pub to: AgentId,
    pub share: Residue,
}

/// Phase-one completion notice for `origin`, carried over the link `from -> to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseDoneMsg {
    pub origin: AgentId,
    pub from: AgentId,
    pub to: AgentId,
}

/// `b_e = r_ji − r_ij mod p` for the edge `e = {i, j}`, `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeDifference {
    pub edge: (AgentId, AgentId),
    pub b: Residue,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentState {
    id: AgentId,
    neighbors: BTreeSet<AgentId>,
    input: Residue,
    sent_shares: BTreeMap<AgentId, Residue>,
    received_shares: BTreeMap<AgentId, Residue>,
    shares_drawn: bool,
    mask: Option<Residue>,
    effective_input: Option<Residue>,
    completed_peers: BTreeSet<AgentId>,
    flooded: bool,
}

impl AgentState {
    pub fn new(id: AgentId, topology: &Topology, input: u64, params: &ProtocolParams) -> Result<Self> {
        let neighbors = topology.neighbors(id)?.clone();
        if input >= params.q() {
            return Err(Error::InputOutOfRange { agent: id, value: input as i64, lo: 0, hi: params.q() as i64 - 1 });
        }
        Ok(AgentState {
            id,
            neighbors,
            input: params.p().reduce(input),
            sent_shares: BTreeMap::new(),
            received_shares: BTreeMap::new(),
            shares_drawn: false,
            mask: None,
            effective_input: None,
            completed_peers: BTreeSet::new(),
            flooded: false,
        })
    }

    pub fn id(&self) -> AgentId {
        self.id
    }

    pub fn neighbors(&self) -> &BTreeSet<AgentId> {
        &self.neighbors
    }

    pub fn input(&self) -> Residue {
        self.input
    }

    pub fn sent_shares(&self) -> &BTreeMap<AgentId, Residue> {
        &self.sent_shares
    }

    pub fn received_shares(&self) -> &BTreeMap<AgentId, Residue> {
        &self.received_shares
    }

    pub fn mask(&self) -> Option<Residue> {
        self.mask
    }

    pub fn effective_input(&self) -> Option<Residue> {
        self.effective_input
    }

    pub fn completed_peers(&self) -> &BTreeSet<AgentId> {
        &self.completed_peers
    }

    pub fn has_flooded(&self) -> bool {
        self.flooded
    }

    /// Draw one uniform share per neighbour and emit it. Does not wait for
    /// incoming shares; an agent without neighbours is masked immediately.
    pub fn init_shares(&mut self, rng: &mut SeededRng) -> Result<Vec<MaskShareMsg>> {
        let p = self.input.modulus();
        self.init_shares_with(|_| Ok(rng.uniform_residue(p)))
    }

    /// Like [`init_shares`](Self::init_shares) but with prescribed shares
    /// `r_ij`, keyed by `(i, j)`.
    pub fn init_shares_pinned(&mut self, pinned: &BTreeMap<(AgentId, AgentId), u64>) -> Result<Vec<MaskShareMsg>> {
        let p = self.input.modulus();
        let id = self.id;
        self.init_shares_with(|j| pinned.get(&(id, j)).map(|&r| p.reduce(r)).ok_or(Error::MissingPinnedShare(id, j)))
    }

    fn init_shares_with<F>(&mut self, mut draw: F) -> Result<Vec<MaskShareMsg>>
    where
        F: FnMut(AgentId) -> Result<Residue>,
    {
        if self.shares_drawn {
            return Err(Error::SharesAlreadyDrawn(self.id));
        }
        let mut out = Vec::with_capacity(self.neighbors.len());
        for &j in &self.neighbors {
            let share = draw(j)?;
            self.sent_shares.insert(j, share);
            out.push(MaskShareMsg { from: self.id, to: j, share });
        }
        self.shares_drawn = true;
        self.try_finish()?;
        Ok(out)
    }

    /// Record `r_ji`. Returns `(a_i, s̃_i)` once the last expected share is in.
    pub fn receive_share(&mut self, msg: MaskShareMsg) -> Result<Option<(Residue, Residue)>> {
        if msg.to != self.id {
            return Err(Error::Misrouted { agent: self.id, to: msg.to });
        }
        if !self.neighbors.contains(&msg.from) {
            return Err(Error::NotNeighbor { agent: self.id, from: msg.from });
        }
        if msg.share.modulus() != self.input.modulus() {
            return Err(Error::ModulusMismatch { left: self.input.modulus().get(), right: msg.share.modulus().get() });
        }
        if self.received_shares.insert(msg.from, msg.share).is_some() {
            return Err(Error::DuplicateShare { agent: self.id, from: msg.from });
        }
        self.try_finish()
    }

    fn try_finish(&mut self) -> Result<Option<(Residue, Residue)>> {
        if self.mask.is_some() || !self.shares_drawn || self.received_shares.len() < self.neighbors.len() {
            return Ok(None);
        }
        let p = self.input.modulus();
        let diffs = self
            .neighbors
            .iter()
            .map(|j| self.received_shares[j].try_sub(self.sent_shares[j]))
            .collect::<Result<Vec<_>>>()?;
        let mask = sum_mod(p, diffs)?;
        let effective = self.input.try_add(mask)?;
        self.mask = Some(mask);
        self.effective_input = Some(effective);
        Ok(Some((mask, effective)))
    }

    /// Announce own completion to every neighbour. Only valid once masked, and only once.
    pub fn announce_done(&mut self) -> Vec<PhaseDoneMsg> {
        if self.flooded || self.mask.is_none() {
            return Vec::new();
        }
        self.flooded = true;
        self.completed_peers.insert(self.id);
        self.neighbors.iter().map(|&to| PhaseDoneMsg { origin: self.id, from: self.id, to }).collect()
    }

    /// Record a completion notice; the first notice per origin is forwarded to
    /// every other neighbour, later ones are dropped.
    pub fn receive_done(&mut self, msg: PhaseDoneMsg) -> Result<Vec<PhaseDoneMsg>> {
        if msg.to != self.id {
            return Err(Error::Misrouted { agent: self.id, to: msg.to });
        }
        if !self.neighbors.contains(&msg.from) {
            return Err(Error::NotNeighbor { agent: self.id, from: msg.from });
        }
        if !self.completed_peers.insert(msg.origin) {
            return Ok(Vec::new());
        }
        Ok(self
            .neighbors
            .iter()
            .filter(|&&to| to != msg.from)
            .map(|&to| PhaseDoneMsg { origin: msg.origin, from: self.id, to })
            .collect())
    }
}

/// One `b_e` per edge in canonical order. Computed from agent states for
/// analysis only; no agent ever holds this vector.
pub fn edge_differences(topology: &Topology, states: &[AgentState]) -> Result<Vec<EdgeDifference>> {
    topology
        .edges()
        .iter()
        .map(|&(i, j)| {
            let st = &states[i - 1];
            let incomplete = || Error::IncompleteExchange(i, j);
            let r_ij = *st.sent_shares.get(&j).ok_or_else(incomplete)?;
            let r_ji = *st.received_shares.get(&j).ok_or_else(incomplete)?;
            Ok(EdgeDifference { edge: (i, j), b: r_ji.try_sub(r_ij)? })
        })
        .collect()
}

/// Every agent has flooded its completion and heard from all `n` agents.
pub fn phase_complete(states: &[AgentState]) -> bool {
    let n = states.len();
    states.iter().all(|s| s.flooded && s.completed_peers.len() == n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::Triangle;

    fn triangle_states() -> (Topology, ProtocolParams, Vec<AgentState>) {
        let t = Triangle::topology();
        let params = ProtocolParams::new(3, Triangle::Q, Some(Triangle::P)).unwrap();
        let states = (1..=3).map(|i| AgentState::new(i, &t, Triangle::INPUTS[i - 1], &params).unwrap()).collect();
        (t, params, states)
    }

    fn exchange(states: &mut [AgentState], msgs: Vec<MaskShareMsg>) {
        for m in msgs {
            states[m.to - 1].receive_share(m).unwrap();
        }
    }

    #[test]
    fn params_validation() {
        assert_eq!(ProtocolParams::new(3, 10, None).unwrap().p().get(), 28);
        assert!(ProtocolParams::new(3, 10, Some(27)).is_err());
        assert!(ProtocolParams::new(3, 10, Some(28)).is_ok());
        assert!(ProtocolParams::new(3, 1, None).is_err());
        assert!(ProtocolParams::new(0, 10, None).is_err());
        let params = ProtocolParams::new(3, 10, Some(30)).unwrap();
        assert!(params.validate_inputs(&[4, 7, 3]).is_ok());
        assert_eq!(
            params.validate_inputs(&[4, 10, 3]),
            Err(Error::InputOutOfRange { agent: 2, value: 10, lo: 0, hi: 9 })
        );
        assert_eq!(params.validate_inputs(&[4]), Err(Error::InputCount { expected: 3, got: 1 }));
    }

    #[test]
    fn pinned_shares_reproduce_worked_example() {
        let (t, _, mut states) = triangle_states();
        let pinned = Triangle::shares();
        let first = states[0].init_shares_pinned(&pinned).unwrap();
        let shares: Vec<(AgentId, u64)> = first.iter().map(|m| (m.to, m.share.value())).collect();
        assert_eq!(shares, vec![(2, 14), (3, 8)]);

        let mut msgs = first;
        for st in &mut states[1..] {
            msgs.extend(st.init_shares_pinned(&pinned).unwrap());
        }
        exchange(&mut states, msgs);

        let masks: Vec<u64> = states.iter().map(|s| s.mask().unwrap().value()).collect();
        let eff: Vec<u64> = states.iter().map(|s| s.effective_input().unwrap().value()).collect();
        assert_eq!(masks, vec![22, 21, 17]);
        assert_eq!(eff, vec![26, 28, 20]);

        let b: Vec<((AgentId, AgentId), u64)> =
            edge_differences(&t, &states).unwrap().iter().map(|d| (d.edge, d.b.value())).collect();
        assert_eq!(b, vec![((1, 2), 27), ((1, 3), 25), ((2, 3), 18)]);
        let bv: Vec<u64> = b.iter().map(|x| x.1).collect();
        assert_eq!(t.incidence_matrix().apply_mod(&bv, Modulus::new(30).unwrap()), masks);
    }

    #[test]
    fn mask_returned_on_last_share_only() {
        let (_, _, mut states) = triangle_states();
        let pinned = Triangle::shares();
        states[0].init_shares_pinned(&pinned).unwrap();
        let p = Modulus::new(30).unwrap();
        let got = states[0].receive_share(MaskShareMsg { from: 2, to: 1, share: p.reduce(11) }).unwrap();
        assert_eq!(got, None);
        let got = states[0].receive_share(MaskShareMsg { from: 3, to: 1, share: p.reduce(3) }).unwrap();
        assert_eq!(got, Some((p.reduce(22), p.reduce(26))));
    }

    #[test]
    fn shares_arriving_before_init_are_held() {
        let (_, _, mut states) = triangle_states();
        let p = Modulus::new(30).unwrap();
        assert_eq!(states[0].receive_share(MaskShareMsg { from: 2, to: 1, share: p.reduce(11) }).unwrap(), None);
        assert_eq!(states[0].receive_share(MaskShareMsg { from: 3, to: 1, share: p.reduce(3) }).unwrap(), None);
        states[0].init_shares_pinned(&Triangle::shares()).unwrap();
        assert_eq!(states[0].mask(), Some(p.reduce(22)));
    }

    #[test]
    fn protocol_violations_are_errors() {
        let t = Topology::path(3);
        let params = ProtocolParams::new(3, 10, Some(30)).unwrap();
        let p = params.p();
        let mut st = AgentState::new(1, &t, 4, &params).unwrap();
        let mut rng = SeededRng::new(1);
        st.init_shares(&mut rng).unwrap();
        assert_eq!(st.init_shares(&mut rng), Err(Error::SharesAlreadyDrawn(1)));
        assert_eq!(
            st.receive_share(MaskShareMsg { from: 3, to: 1, share: p.reduce(1) }),
            Err(Error::NotNeighbor { agent: 1, from: 3 })
        );
        st.receive_share(MaskShareMsg { from: 2, to: 1, share: p.reduce(1) }).unwrap();
        assert_eq!(
            st.receive_share(MaskShareMsg { from: 2, to: 1, share: p.reduce(2) }),
            Err(Error::DuplicateShare { agent: 1, from: 2 })
        );
        assert_eq!(
            st.receive_share(MaskShareMsg { from: 2, to: 3, share: p.reduce(2) }),
            Err(Error::Misrouted { agent: 1, to: 3 })
        );
        assert!(AgentState::new(1, &t, 10, &params).is_err());
        assert!(AgentState::new(4, &t, 1, &params).is_err());
    }

    #[test]
    fn isolated_agent_is_masked_at_once() {
        let t = Topology::new(1, []).unwrap();
        let params = ProtocolParams::new(1, 5, None).unwrap();
        let mut st = AgentState::new(1, &t, 3, &params).unwrap();
        assert!(st.init_shares(&mut SeededRng::new(0)).unwrap().is_empty());
        assert_eq!(st.mask().unwrap().value(), 0);
        assert_eq!(st.effective_input().unwrap().value(), 3);
        assert!(st.announce_done().is_empty());
        assert!(phase_complete(std::slice::from_ref(&st)));
    }

    #[test]
    fn one_share_per_neighbour() {
        let t = Topology::star(6);
        let params = ProtocolParams::new(6, 4, None).unwrap();
        let mut hub = AgentState::new(1, &t, 0, &params).unwrap();
        let msgs = hub.init_shares(&mut SeededRng::new(3)).unwrap();
        let dests: BTreeSet<AgentId> = msgs.iter().map(|m| m.to).collect();
        assert_eq!(msgs.len(), 5);
        assert_eq!(dests, (2..=6).collect());
    }

    #[test]
    fn edge_differences_need_full_exchange() {
        let (t, _, mut states) = triangle_states();
        states[0].init_shares_pinned(&Triangle::shares()).unwrap();
        assert_eq!(edge_differences(&t, &states), Err(Error::IncompleteExchange(1, 2)));
    }

    #[test]
    fn equal_shares_give_zero_difference() {
        let t = Topology::path(2);
        let params = ProtocolParams::new(2, 3, Some(7)).unwrap();
        let mut states: Vec<AgentState> = (1..=2).map(|i| AgentState::new(i, &t, 1, &params).unwrap()).collect();
        let pinned: BTreeMap<_, _> = [((1, 2), 5), ((2, 1), 5)].into_iter().collect();
        let mut msgs = states[0].init_shares_pinned(&pinned).unwrap();
        msgs.extend(states[1].init_shares_pinned(&pinned).unwrap());
        exchange(&mut states, msgs);
        assert_eq!(edge_differences(&t, &states).unwrap()[0].b.value(), 0);
    }

    #[test]
    fn completion_flooding_dedupes_by_origin() {
        let (_, _, mut states) = triangle_states();
        let mut msgs = Vec::new();
        for st in states.iter_mut() {
            msgs.extend(st.init_shares_pinned(&Triangle::shares()).unwrap());
        }
        assert!(!phase_complete(&states));
        exchange(&mut states, msgs);
        assert!(!phase_complete(&states));

        let mut queue: Vec<PhaseDoneMsg> = states.iter_mut().flat_map(|s| s.announce_done()).collect();
        let mut delivered = 0;
        while let Some(m) = queue.pop() {
            delivered += 1;
            queue.extend(states[m.to - 1].receive_done(m).unwrap());
        }
        assert!(phase_complete(&states));
        // each origin crosses each directed link at most once
        assert!(delivered <= 3 * 6);
        assert!(states.iter_mut().all(|s| s.announce_done().is_empty()));
    }
}
