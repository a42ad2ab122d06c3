//! End-to-end swarm session: peers train over the ledger, publish deep
//! features, value every point independently and settle the token payout.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use ddval_core::{value_data_points, ClientId, Feature, Grouping, Point};
use ddval_fl::{extract_deep_features, fed_avg_round, train_local, validate, Client, FlConfig, Mlp, Params};
use serde::{Deserialize, Serialize};

use crate::contract::{agreed_report, apply_tx, to_fixed, Address, ContractState, Phase, Rejection, SignedTx, Tx};
use crate::payout::{settle_payout, Settlement};
use crate::store::{ContentHash, SharedStore};
use crate::{LedgerError, Result};

/// Address of the orchestrator that deploys and funds the contracts.
pub const OWNER: Address = Address(0);

fn peer_address(index: usize) -> Address {
    Address(index as u64 + 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub fl: FlConfig,
    pub k: usize,
    pub fund: u64,
    pub timeout: Duration,
    /// Peer that goes silent before signalling ready.
    pub drop_before_ready: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub index: usize,
    pub sender: Address,
    pub kind: String,
    /// Digest of the serialized transaction.
    pub payload_hash: ContentHash,
    pub phase: Phase,
    pub accepted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rejection: Option<Rejection>,
    pub tx: SignedTx,
}

/// Wall-clock seconds spent in each contract phase.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub setup: f64,
    pub training: f64,
    pub valuation: f64,
    pub settlement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTrace {
    pub entries: Vec<TraceEntry>,
    pub state: ContractState,
    pub institutions: Vec<Address>,
    /// Each peer's reported contribution vector.
    pub reports: BTreeMap<Address, Vec<u64>>,
    /// Institutional φ_AUC before fixed-point encoding.
    pub institutional_values: Vec<f64>,
    pub settlement: Settlement,
    pub timings: PhaseTimings,
    pub rounds: usize,
    pub final_auroc: f64,
    /// Local training and validation CPU time summed over peers.
    pub training_compute_secs: f64,
    /// Ledger submission, blob store and blob encoding CPU time summed over
    /// peers and the orchestrator.
    pub overhead_secs: f64,
    pub blobs_stored: usize,
}

impl SessionTrace {
    /// Ledger and store overhead relative to the training phase wall time.
    pub fn overhead_ratio(&self) -> f64 {
        self.overhead_secs / self.timings.training
    }
}

struct Chain {
    state: ContractState,
    entries: Vec<TraceEntry>,
}

struct Shared {
    chain: Mutex<Chain>,
    changed: Condvar,
    store: SharedStore,
    timeout: Duration,
    overhead: AtomicU64,
    compute: AtomicU64,
}

/// CPU time consumed by the calling thread. Peers share cores, so wall
/// time inside a thread would also count the other peers' work.
fn thread_cpu_nanos() -> u64 {
    let mut ts = libc::timespec { tv_sec: 0, tv_nsec: 0 };
    // SAFETY: `ts` is a valid, writable timespec.
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_THREAD_CPUTIME_ID, &mut ts) };
    if rc != 0 {
        return 0;
    }
    ts.tv_sec as u64 * 1_000_000_000 + ts.tv_nsec as u64
}

fn add_elapsed(counter: &AtomicU64, since: u64) {
    counter.fetch_add(thread_cpu_nanos().saturating_sub(since), Ordering::Relaxed);
}

#[derive(Serialize, Deserialize)]
struct DeltaBlob {
    n_points: usize,
    delta: Params,
}

impl Shared {
    fn submit(&self, sender: Address, tx: Tx) -> Result<()> {
        let start = thread_cpu_nanos();
        let signed = SignedTx { sender, tx };
        let payload = serde_json::to_vec(&signed)?;
        let mut chain = self.chain.lock().expect("ledger lock poisoned");
        let outcome = apply_tx(&chain.state, &signed);
        let rejection = outcome.as_ref().err().copied();
        if let Ok(next) = outcome {
            chain.state = next;
        }
        let entry = TraceEntry {
            index: chain.entries.len(),
            sender,
            kind: signed.tx.kind().to_string(),
            payload_hash: ContentHash::of(&payload),
            phase: chain.state.swarm.phase,
            accepted: rejection.is_none(),
            rejection,
            tx: signed,
        };
        let kind = entry.tx.tx.kind();
        chain.entries.push(entry);
        drop(chain);
        self.changed.notify_all();
        add_elapsed(&self.overhead, start);
        match rejection {
            None => Ok(()),
            Some(rejection) => Err(LedgerError::Rejected {
                sender,
                kind,
                rejection,
            }),
        }
    }

    /// Blocks until `ready` holds. Times out when the ledger sees no new
    /// transaction for the configured timeout, reporting who is missing.
    fn wait_for(
        &self,
        ready: impl Fn(&ContractState) -> bool,
        missing: impl Fn(&ContractState) -> Vec<Address>,
    ) -> Result<ContractState> {
        let mut chain = self.chain.lock().expect("ledger lock poisoned");
        loop {
            if ready(&chain.state) {
                return Ok(chain.state.clone());
            }
            let seen = chain.entries.len();
            let (next, timeout) = self
                .changed
                .wait_timeout_while(chain, self.timeout, |c| !ready(&c.state) && c.entries.len() == seen)
                .expect("ledger lock poisoned");
            chain = next;
            if timeout.timed_out() && !ready(&chain.state) {
                return Err(LedgerError::Timeout {
                    phase: chain.state.swarm.phase,
                    waiting_for: missing(&chain.state),
                });
            }
        }
    }

    fn put_blob<T: Serialize>(&self, value: &T) -> Result<ContentHash> {
        let start = thread_cpu_nanos();
        let hash = self.store.put(&postcard::to_stdvec(value)?);
        add_elapsed(&self.overhead, start);
        Ok(hash)
    }

    fn get_blob<T: for<'de> Deserialize<'de>>(&self, hash: &ContentHash) -> Result<T> {
        let start = thread_cpu_nanos();
        let value = postcard::from_bytes(&self.store.get(hash)?)?;
        add_elapsed(&self.overhead, start);
        Ok(value)
    }
}

fn not_ready(state: &ContractState) -> Vec<Address> {
    state.swarm.whitelist.difference(&state.swarm.ready).copied().collect()
}

struct PeerResult {
    values: Vec<u64>,
    institutional: Vec<f64>,
    final_auroc: f64,
}

struct Peer<'a> {
    shared: &'a Shared,
    address: Address,
    client: &'a Client,
    /// Client ids of all institutions in whitelist order.
    ids: &'a [ClientId],
    test: &'a [Point],
    cfg: &'a SessionConfig,
}

impl Peer<'_> {
    fn run(&self) -> Result<PeerResult> {
        let shared = self.shared;
        shared.submit(self.address, Tx::SignalReady)?;
        let state = shared.wait_for(|s| s.swarm.phase != Phase::Setup, not_ready)?;
        let hash = state.swarm.initial_model_hash.expect("created contract has a model");
        let initial: Mlp = shared.get_blob(&hash)?;
        let mut model = initial.with_params(initial.params.clone())?;

        let mut round = 1u64;
        loop {
            let start = thread_cpu_nanos();
            let auc = validate(&model, self.test)?;
            let delta = train_local(
                &model,
                &self.client.points,
                &self.cfg.fl.train(),
                self.cfg.fl.round_seed(round as usize),
            )?;
            add_elapsed(&shared.compute, start);
            let gradient_hash = shared.put_blob(&DeltaBlob {
                n_points: self.client.points.len(),
                delta,
            })?;
            shared.submit(
                self.address,
                Tx::SubmitRound {
                    round,
                    gradient_hash,
                    test_result: to_fixed(auc),
                },
            )?;
            let state = shared.wait_for(
                |s| s.swarm.round_results.len() as u64 >= round,
                |s| {
                    let done: Vec<Address> = s
                        .swarm
                        .rounds
                        .iter()
                        .filter(|e| e.round == round)
                        .map(|e| e.sender)
                        .collect();
                    s.swarm
                        .whitelist
                        .iter()
                        .filter(|a| !done.contains(a))
                        .copied()
                        .collect()
                },
            )?;
            let mut deltas = BTreeMap::new();
            let mut weights = BTreeMap::new();
            for entry in state.swarm.rounds.iter().filter(|e| e.round == round) {
                let blob: DeltaBlob = shared.get_blob(&entry.gradient_hash)?;
                let id = ClientId(entry.sender.0 as u32);
                weights.insert(id, blob.n_points as f64);
                deltas.insert(id, blob.delta);
            }
            model = fed_avg_round(&model, &deltas, &weights)?;
            if state.swarm.phase != Phase::Training {
                break;
            }
            round += 1;
        }

        let own = extract_deep_features(&model, &self.client.points)?;
        let hash = shared.put_blob(&own)?;
        shared.submit(self.address, Tx::SubmitFeatures { hash })?;
        let state = shared.wait_for(
            |s| s.swarm.feature_hashes.len() == s.swarm.whitelist.len(),
            |s| {
                s.swarm
                    .whitelist
                    .iter()
                    .filter(|a| !s.swarm.feature_hashes.contains_key(a))
                    .copied()
                    .collect()
            },
        )?;
        let mut train: Vec<Feature> = Vec::new();
        for hash in state.swarm.feature_hashes.values() {
            train.extend(shared.get_blob::<Vec<Feature>>(hash)?);
        }
        let test = extract_deep_features(&model, self.test)?;
        let final_auroc = validate(&model, self.test)?;
        let report = value_data_points(&train, &test, self.cfg.k, final_auroc, Grouping::Client)?;
        let institutional: Vec<f64> = self
            .ids
            .iter()
            .map(|id| report.group_sv.get(&id.to_string()).copied().unwrap_or(0.0))
            .collect();
        let values: Vec<u64> = institutional.iter().map(|&v| to_fixed(v)).collect();
        match shared.submit(self.address, Tx::ReportContribution { values: values.clone() }) {
            Err(LedgerError::Rejected {
                rejection: Rejection::ReportMismatch,
                ..
            }) => {
                let state = shared.chain.lock().expect("ledger lock poisoned").state.clone();
                let expected = state.token.reported.values().next().cloned().unwrap_or_default();
                Err(LedgerError::Divergence {
                    peer: self.address,
                    expected,
                    found: values,
                })
            }
            Err(e) => Err(e),
            Ok(()) => Ok(PeerResult {
                values,
                institutional,
                final_auroc,
            }),
        }
    }
}

/// Runs one complete session with one peer per client. Peer `i` gets
/// address `i + 1`; the orchestrator is [`OWNER`].
pub fn run_swarm_session(clients: &[Client], test: &[Point], cfg: &SessionConfig) -> Result<SessionTrace> {
    if clients.len() < 2 {
        return Err(LedgerError::TooFewPeers(clients.len()));
    }
    if clients.iter().any(|c| c.points.is_empty()) {
        return Err(ddval_fl::FlError::EmptyClientData.into());
    }
    let shared = Shared {
        chain: Mutex::new(Chain {
            state: ContractState::default(),
            entries: Vec::new(),
        }),
        changed: Condvar::new(),
        store: SharedStore::default(),
        timeout: cfg.timeout,
        overhead: AtomicU64::new(0),
        compute: AtomicU64::new(0),
    };
    let institutions: Vec<Address> = (0..clients.len()).map(peer_address).collect();
    let ids: Vec<ClientId> = clients.iter().map(|c| c.id).collect();
    let first = &clients[0].points[0];
    let shape = ddval_fl::ModelShape {
        d_in: first.features.len(),
        d_hidden: cfg.fl.hidden,
        n_labels: first.labels.len(),
    };

    let t0 = Instant::now();
    let model_hash = shared.put_blob(&Mlp::init(shape, cfg.fl.seed))?;
    shared.submit(
        OWNER,
        Tx::Create {
            whitelist: institutions.clone(),
            model_hash,
            window: cfg.fl.window as u64,
            max_rounds: cfg.fl.max_rounds as u64,
        },
    )?;
    shared.submit(OWNER, Tx::Fund { amount: cfg.fund })?;

    let (owner_result, peer_results) = std::thread::scope(|scope| {
        let handles: Vec<_> = clients
            .iter()
            .enumerate()
            .map(|(i, client)| {
                let peer = Peer {
                    shared: &shared,
                    address: institutions[i],
                    client,
                    ids: &ids,
                    test,
                    cfg,
                };
                let silent = cfg.drop_before_ready == Some(i);
                scope.spawn(move || if silent { Ok(None) } else { peer.run().map(Some) })
            })
            .collect();
        let owner = orchestrate(&shared, t0);
        let peers: Vec<Result<Option<PeerResult>>> = handles
            .into_iter()
            .zip(&institutions)
            .map(|(h, a)| h.join().unwrap_or(Err(LedgerError::PeerPanicked(*a))))
            .collect();
        (owner, peers)
    });
    let timings = owner_result?;
    let mut reports = BTreeMap::new();
    let mut first_result = None;
    for (result, address) in peer_results.into_iter().zip(&institutions) {
        if let Some(r) = result? {
            reports.insert(*address, r.values.clone());
            first_result.get_or_insert(r);
        }
    }
    let result = first_result.expect("payout implies every peer reported");
    let chain = shared.chain.into_inner().expect("ledger lock poisoned");
    let agreed = agreed_report(&chain.state).expect("payout implies an agreed report");
    let settlement = settle_payout(
        &chain.state.token.depositors,
        &institutions,
        agreed,
        chain.state.token.total_fund,
    )
    .map_err(|rejection| LedgerError::Rejected {
        sender: OWNER,
        kind: "payout",
        rejection,
    })?;
    Ok(SessionTrace {
        rounds: chain.state.swarm.round_results.len(),
        entries: chain.entries,
        state: chain.state,
        institutions,
        reports,
        institutional_values: result.institutional,
        settlement,
        timings,
        final_auroc: result.final_auroc,
        training_compute_secs: shared.compute.into_inner() as f64 * 1e-9,
        overhead_secs: shared.overhead.into_inner() as f64 * 1e-9,
        blobs_stored: shared.store.len(),
    })
}

fn orchestrate(shared: &Shared, t0: Instant) -> Result<PhaseTimings> {
    let mut timings = PhaseTimings::default();
    shared.wait_for(|s| s.swarm.phase != Phase::Setup, not_ready)?;
    timings.setup = t0.elapsed().as_secs_f64();
    let t = Instant::now();
    shared.wait_for(
        |s| s.swarm.phase != Phase::Training,
        |s| s.swarm.whitelist.iter().copied().collect(),
    )?;
    timings.training = t.elapsed().as_secs_f64();
    let t = Instant::now();
    shared.wait_for(
        |s| s.token.reported.len() == s.swarm.whitelist.len(),
        |s| {
            s.swarm
                .whitelist
                .iter()
                .filter(|a| !s.token.reported.contains_key(a))
                .copied()
                .collect()
        },
    )?;
    timings.valuation = t.elapsed().as_secs_f64();
    let t = Instant::now();
    shared.submit(OWNER, Tx::Payout)?;
    timings.settlement = t.elapsed().as_secs_f64();
    Ok(timings)
}

/// One JSON object per transaction.
pub fn write_trace_jsonl(entries: &[TraceEntry], mut writer: impl Write) -> Result<()> {
    for entry in entries {
        serde_json::to_writer(&mut writer, entry)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}
