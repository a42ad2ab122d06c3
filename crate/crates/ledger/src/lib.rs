//! Deterministic in-process stand-in for the swarm-learning contract, the
//! content-addressed file exchange and the token payout contract.

mod contract;
mod gas;
mod payout;
mod session;
mod store;

pub use contract::{
    agreed_report, apply_tx, replay, to_fixed, Address, ContractState, Phase, Rejection, RoundEntry, SignedTx,
    SwarmState, TokenState, Tx, FIXED_POINT,
};
pub use gas::{deployment_gas, estimate_gas_cost, DEPLOY_GAS_BASE, DEPLOY_GAS_PER_INSTITUTION};
pub use payout::{settle_payout, Settlement, U_MAX_FIXED};
pub use session::{run_swarm_session, write_trace_jsonl, PhaseTimings, SessionConfig, SessionTrace, TraceEntry, OWNER};
pub use store::{BlobStore, ContentHash, SharedStore};

#[derive(Debug, thiserror::Error)]
pub enum LedgerError {
    #[error("no blob stored under {0}")]
    BlobNotFound(ContentHash),
    #[error("{sender} {kind} rejected: {rejection}")]
    Rejected {
        sender: Address,
        kind: &'static str,
        rejection: Rejection,
    },
    #[error("timed out in phase {phase:?} waiting for {waiting_for:?}")]
    Timeout { phase: Phase, waiting_for: Vec<Address> },
    #[error("peer {peer} reported {found:?}, others reported {expected:?}")]
    Divergence {
        peer: Address,
        expected: Vec<u64>,
        found: Vec<u64>,
    },
    #[error("session needs at least two peers, got {0}")]
    TooFewPeers(usize),
    #[error("malformed transaction: {0}")]
    Encoding(#[from] serde_json::Error),
    #[error("malformed blob: {0}")]
    Blob(#[from] postcard::Error),
    #[error(transparent)]
    Training(#[from] ddval_fl::FlError),
    #[error(transparent)]
    Valuation(#[from] ddval_core::ValuationError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("peer {0} panicked")]
    PeerPanicked(Address),
}

pub type Result<T, E = LedgerError> = std::result::Result<T, E>;
