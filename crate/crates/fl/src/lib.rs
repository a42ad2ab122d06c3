//! Simulated federated training over a small one-hidden-layer network.
//!
//! The network stands in for a large image model: its hidden activations are
//! the deep features shared for point valuation, and its parameter deltas are
//! what clients exchange each round.

pub mod auroc;
pub mod baselines;
pub mod ddval;
pub mod federated;
pub mod model;
pub mod train;

use ddval_core::{ClientId, ValuationError};
use thiserror::Error;

pub use auroc::{auroc, validate};
pub use baselines::{
    canonical_client_svs, fit_client_heads, or_approx_client_svs, or_coalition_model, safe_approx_client_svs,
    safe_coalition_svs, ClientValuation, LogisticHead,
};
pub use ddval::{ddval_report, extract_deep_features, institutional_values};
pub use federated::{fed_avg_round, run_federated, write_history_jsonl, Client, FederatedRun, FlConfig, RoundRecord};
pub use model::{Mlp, ModelShape, Params};
pub use train::{batch_loss_and_grad, train_local, TrainConfig};

#[derive(Debug, Error)]
pub enum FlError {
    #[error("client has no training data")]
    EmptyClientData,
    #[error("no clients to train")]
    NoClients,
    #[error("learning rate {0} must be finite and non-negative")]
    InvalidLearningRate(f64),
    #[error("client weights sum to zero")]
    ZeroWeight,
    #[error("no client deltas to aggregate")]
    NoDeltas,
    #[error("missing weight for {0}")]
    MissingWeight(ClientId),
    #[error("no label dimension has both classes in the evaluation set")]
    NoScorableLabel,
    #[error("missing delta for {client} in round {round}")]
    MissingDelta { client: ClientId, round: usize },
    #[error("point has {found} features, model expects {expected}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("parameter vectors have lengths {0} and {1}")]
    ParamMismatch(usize, usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Valuation(#[from] ValuationError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, FlError>;
