use thiserror::Error;

use crate::graph::AgentId;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("modulus must be greater than 1, got {0}")]
    InvalidModulus(u64),
    #[error("modulus mismatch: {left} vs {right}")]
    ModulusMismatch { left: u64, right: u64 },
    #[error("rank over Z_{0} requires a prime modulus")]
    NonPrimeModulus(u64),

    #[error("unknown agent id {0}")]
    UnknownAgent(AgentId),
    #[error("invalid edge {{{0}, {1}}}: {2}")]
    InvalidEdge(AgentId, AgentId, &'static str),
    #[error("topology parse error at line {line}: {msg}")]
    TopologyParse { line: usize, msg: String },
    #[error("vertex cut candidate must be a proper subset of the vertex set")]
    NotProperSubset,
    #[error("topology is disconnected; components: {0}")]
    Disconnected(String),
    #[error("vertex connectivity is computed by subset enumeration and supports 2..=20 agents, got {0}")]
    ConnectivityOutOfRange(usize),

    #[error("invalid protocol parameters: {0}")]
    InvalidParams(String),
    #[error("input of agent {agent} is {value}, outside the allowed range {lo}..={hi}")]
    InputOutOfRange { agent: AgentId, value: i64, lo: i64, hi: i64 },
    #[error("expected {expected} inputs, got {got}")]
    InputCount { expected: usize, got: usize },

    #[error("agent {0} already drew its shares")]
    SharesAlreadyDrawn(AgentId),
    #[error("agent {agent} received a second share from {from}")]
    DuplicateShare { agent: AgentId, from: AgentId },
    #[error("agent {agent} received a message from non-neighbor {from}")]
    NotNeighbor { agent: AgentId, from: AgentId },
    #[error("message addressed to {to} delivered to agent {agent}")]
    Misrouted { agent: AgentId, to: AgentId },
    #[error("share exchange incomplete on edge {{{0}, {1}}}")]
    IncompleteExchange(AgentId, AgentId),
    #[error("missing pinned share r_{0},{1}")]
    MissingPinnedShare(AgentId, AgentId),

    #[error("gossip did not reach tolerance within {rounds} rounds (spread {spread})")]
    GossipNotConverged { rounds: u64, spread: String, values: Vec<String> },
    #[error("sum estimate {0} is not within 1/4 of an integer")]
    RoundingAmbiguous(String),

    #[error("no adversary configured for this run")]
    NoAdversary,
    #[error("enumeration needs {needed} assignments, above the budget of {budget}; use the sampled test")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error("audit precondition violated: {0}")]
    AuditPrecondition(String),
    #[error("too few samples: {samples} samples over {bins} bins (need at least 5 expected per bin)")]
    InsufficientSamples { samples: usize, bins: usize },

    #[error("report format error: {0}")]
    Report(String),
}

pub type Result<T> = std::result::Result<T, Error>;
