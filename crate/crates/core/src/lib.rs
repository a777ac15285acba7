//! Private distributed average consensus for bounded integer inputs.
//!
//! Agents first hide their inputs behind correlated masks that cancel over
//! the whole network ([`masking`]), then run any ordinary average consensus
//! on the masked values ([`consensus`]). [`simnet`] drives both phases under
//! a seeded asynchronous schedule and records what a coalition of passive
//! adversaries observes; [`privacy_audit`] checks the resulting view
//! distributions exactly or statistically.

pub mod consensus;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod masking;
pub mod privacy_audit;
pub mod residue;
pub mod rng;
pub mod scenarios;
pub mod simnet;

pub use consensus::{finalize, flood_sum, gossip_avg, run_protocol, ConsensusAlgo, ConsensusResult, Variant};
pub use error::{Error, Result};
pub use graph::{AgentId, IncidenceMatrix, Partition, Topology};
pub use masking::{AgentState, EdgeDifference, ProtocolParams};
pub use residue::{sum_mod, Modulus, Residue};
pub use rng::SeededRng;
pub use simnet::{extract_view, simulate, AdversarySpec, AdversaryView, RunReport, SimConfig, SimOutput};
