//! Pure transition function of the combined swarm and token contracts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use ddval_core::plateau_reached;
use serde::{Deserialize, Serialize};

use crate::payout::{settle_payout, Settlement};
use crate::store::ContentHash;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Address(pub u64);

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{:016x}", self.0)
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, Default)]
pub enum Phase {
    #[default]
    Setup,
    Training,
    Valuation,
    Finished,
}

/// Scale of fixed-point test results and contributions.
pub const FIXED_POINT: u64 = 1_000_000_000;

/// Fixed-point encoding; negatives and NaN clamp to zero.
pub fn to_fixed(x: f64) -> u64 {
    if x.is_nan() || x <= 0.0 {
        0
    } else {
        (x * FIXED_POINT as f64).round() as u64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundEntry {
    pub round: u64,
    pub sender: Address,
    pub gradient_hash: ContentHash,
    pub test_result: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct SwarmState {
    pub owner: Option<Address>,
    pub whitelist: BTreeSet<Address>,
    pub initial_model_hash: Option<ContentHash>,
    pub ready: BTreeSet<Address>,
    /// Append-only submission log.
    pub rounds: Vec<RoundEntry>,
    pub phase: Phase,
    pub feature_hashes: BTreeMap<Address, ContentHash>,
    pub window: u64,
    pub max_rounds: u64,
    /// Per completed round, the lowest test result any peer submitted.
    pub round_results: Vec<u64>,
}

impl SwarmState {
    /// Round currently accepting submissions.
    pub fn current_round(&self) -> u64 {
        self.round_results.len() as u64 + 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct TokenState {
    pub depositors: BTreeMap<Address, u64>,
    pub total_fund: u64,
    /// Contribution vector reported by each institution, in whitelist order.
    pub reported: BTreeMap<Address, Vec<u64>>,
    pub paid_out: bool,
    pub balances: BTreeMap<Address, u64>,
    /// Funds held by the contract and not yet distributed.
    pub escrow: u64,
}

impl TokenState {
    /// Σ balances + escrow = Σ deposits.
    pub fn conserved(&self) -> bool {
        let deposits: u128 = self.depositors.values().map(|&v| v as u128).sum();
        let held: u128 = self.balances.values().map(|&v| v as u128).sum::<u128>() + self.escrow as u128;
        deposits == held && deposits == self.total_fund as u128
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct ContractState {
    pub swarm: SwarmState,
    pub token: TokenState,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Tx {
    Create {
        whitelist: Vec<Address>,
        model_hash: ContentHash,
        window: u64,
        max_rounds: u64,
    },
    SignalReady,
    SubmitRound {
        round: u64,
        gradient_hash: ContentHash,
        test_result: u64,
    },
    SubmitFeatures {
        hash: ContentHash,
    },
    ReportContribution {
        values: Vec<u64>,
    },
    Fund {
        amount: u64,
    },
    Payout,
}

impl Tx {
    pub fn kind(&self) -> &'static str {
        match self {
            Tx::Create { .. } => "create",
            Tx::SignalReady => "signal_ready",
            Tx::SubmitRound { .. } => "submit_round",
            Tx::SubmitFeatures { .. } => "submit_features",
            Tx::ReportContribution { .. } => "report_contribution",
            Tx::Fund { .. } => "fund",
            Tx::Payout => "payout",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedTx {
    pub sender: Address,
    pub tx: Tx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    #[error("contract already created")]
    AlreadyCreated,
    #[error("contract not created yet")]
    NotCreated,
    #[error("invalid create parameters")]
    InvalidCreate,
    #[error("sender is not whitelisted")]
    NotWhitelisted,
    #[error("sender already signalled ready")]
    AlreadyReady,
    #[error("transaction not allowed in phase {0:?}")]
    WrongPhase(Phase),
    #[error("sender already submitted this round")]
    DuplicateRound,
    #[error("round {found} submitted while round {expected} is open")]
    WrongRound { expected: u64, found: u64 },
    #[error("sender already published features")]
    DuplicateFeatures,
    #[error("features of some institution are missing")]
    FeaturesIncomplete,
    #[error("sender already reported")]
    DuplicateReport,
    #[error("report has {found} entries, expected {expected}")]
    WrongReportLength { expected: usize, found: usize },
    #[error("report differs from an earlier one")]
    ReportMismatch,
    #[error("contributions exceed the utility cap")]
    ExceedsCap,
    #[error("amount must be positive and not overflow")]
    InvalidAmount,
    #[error("not every institution has reported")]
    MissingReports,
    #[error("payout already executed")]
    DoublePayout,
}

type Outcome = std::result::Result<ContractState, Rejection>;

fn require_phase(state: &ContractState, phase: Phase) -> std::result::Result<(), Rejection> {
    if state.swarm.phase == phase {
        Ok(())
    } else {
        Err(Rejection::WrongPhase(state.swarm.phase))
    }
}

fn require_member(state: &ContractState, sender: Address) -> std::result::Result<(), Rejection> {
    if state.swarm.whitelist.contains(&sender) {
        Ok(())
    } else {
        Err(Rejection::NotWhitelisted)
    }
}

/// The contribution vector every institution agreed on, if all reported.
pub fn agreed_report(state: &ContractState) -> Option<&[u64]> {
    let swarm = &state.swarm;
    if state.token.reported.len() != swarm.whitelist.len() {
        return None;
    }
    state.token.reported.values().next().map(Vec::as_slice)
}

/// Applies `tx` to a copy of `state`. Rejected transactions leave no trace.
pub fn apply_tx(state: &ContractState, tx: &SignedTx) -> Outcome {
    let sender = tx.sender;
    let created = state.swarm.owner.is_some();
    if !created && !matches!(tx.tx, Tx::Create { .. }) {
        return Err(Rejection::NotCreated);
    }
    let mut next = state.clone();
    match &tx.tx {
        Tx::Create {
            whitelist,
            model_hash,
            window,
            max_rounds,
        } => {
            if created {
                return Err(Rejection::AlreadyCreated);
            }
            let members: BTreeSet<Address> = whitelist.iter().copied().collect();
            if members.is_empty() || members.len() != whitelist.len() || *window == 0 || *max_rounds == 0 {
                return Err(Rejection::InvalidCreate);
            }
            next.swarm.owner = Some(sender);
            next.swarm.whitelist = members;
            next.swarm.initial_model_hash = Some(*model_hash);
            next.swarm.window = *window;
            next.swarm.max_rounds = *max_rounds;
        }
        Tx::SignalReady => {
            require_member(state, sender)?;
            require_phase(state, Phase::Setup)?;
            if !next.swarm.ready.insert(sender) {
                return Err(Rejection::AlreadyReady);
            }
            if next.swarm.ready == next.swarm.whitelist {
                next.swarm.phase = Phase::Training;
            }
        }
        Tx::SubmitRound {
            round,
            gradient_hash,
            test_result,
        } => {
            require_member(state, sender)?;
            require_phase(state, Phase::Training)?;
            let swarm = &mut next.swarm;
            if swarm.rounds.iter().any(|e| e.round == *round && e.sender == sender) {
                return Err(Rejection::DuplicateRound);
            }
            let expected = swarm.current_round();
            if *round != expected {
                return Err(Rejection::WrongRound {
                    expected,
                    found: *round,
                });
            }
            swarm.rounds.push(RoundEntry {
                round: *round,
                sender,
                gradient_hash: *gradient_hash,
                test_result: *test_result,
            });
            let this_round: Vec<u64> = swarm
                .rounds
                .iter()
                .filter(|e| e.round == *round)
                .map(|e| e.test_result)
                .collect();
            if this_round.len() == swarm.whitelist.len() {
                let result = this_round.into_iter().min().expect("nonempty round");
                swarm.round_results.push(result);
                if plateau_reached(&swarm.round_results, swarm.window as usize)
                    || swarm.round_results.len() as u64 >= swarm.max_rounds
                {
                    swarm.phase = Phase::Valuation;
                }
            }
        }
        Tx::SubmitFeatures { hash } => {
            require_member(state, sender)?;
            require_phase(state, Phase::Valuation)?;
            if next.swarm.feature_hashes.insert(sender, *hash).is_some() {
                return Err(Rejection::DuplicateFeatures);
            }
        }
        Tx::ReportContribution { values } => {
            require_member(state, sender)?;
            require_phase(state, Phase::Valuation)?;
            if state.swarm.feature_hashes.len() != state.swarm.whitelist.len() {
                return Err(Rejection::FeaturesIncomplete);
            }
            if state.token.reported.contains_key(&sender) {
                return Err(Rejection::DuplicateReport);
            }
            let expected = state.swarm.whitelist.len();
            if values.len() != expected {
                return Err(Rejection::WrongReportLength {
                    expected,
                    found: values.len(),
                });
            }
            if state.token.reported.values().any(|r| r != values) {
                return Err(Rejection::ReportMismatch);
            }
            let total: u128 = values.iter().map(|&v| v as u128).sum();
            if total > (FIXED_POINT / 2) as u128 {
                return Err(Rejection::ExceedsCap);
            }
            next.token.reported.insert(sender, values.clone());
        }
        Tx::Fund { amount } => {
            if Some(sender) != state.swarm.owner {
                require_member(state, sender)?;
            }
            if state.token.paid_out {
                return Err(Rejection::DoublePayout);
            }
            let token = &mut next.token;
            let total = token.total_fund.checked_add(*amount).filter(|_| *amount > 0);
            let total = total.ok_or(Rejection::InvalidAmount)?;
            token.total_fund = total;
            token.escrow += amount;
            *token.depositors.entry(sender).or_insert(0) += amount;
        }
        Tx::Payout => {
            if Some(sender) != state.swarm.owner {
                require_member(state, sender)?;
            }
            if state.token.paid_out {
                return Err(Rejection::DoublePayout);
            }
            require_phase(state, Phase::Valuation)?;
            let agreed = agreed_report(state).ok_or(Rejection::MissingReports)?;
            let payees: Vec<Address> = state.swarm.whitelist.iter().copied().collect();
            let Settlement { payouts, refunds, .. } =
                settle_payout(&state.token.depositors, &payees, agreed, state.token.escrow)?;
            let token = &mut next.token;
            for (addr, amount) in payouts.iter().chain(&refunds) {
                *token.balances.entry(*addr).or_insert(0) += amount;
            }
            token.escrow = 0;
            token.paid_out = true;
            next.swarm.phase = Phase::Finished;
        }
    }
    Ok(next)
}

/// Replays a transaction log from the empty state, skipping rejections.
pub fn replay<'a>(log: impl IntoIterator<Item = &'a SignedTx>) -> ContractState {
    log.into_iter()
        .fold(ContractState::default(), |s, tx| apply_tx(&s, tx).unwrap_or(s))
}
