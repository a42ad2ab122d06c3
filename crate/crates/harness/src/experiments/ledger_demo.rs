//! End-to-end swarm session with token settlement and gas estimate.

use std::collections::BTreeMap;
use std::time::Duration;

use ddval_fl::Client;
use ddval_ledger::{
    deployment_gas, estimate_gas_cost, run_swarm_session, Address, PhaseTimings, SessionConfig, SessionTrace,
};
use ddval_synth::{gen_synthetic, SynthConfig};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerDemoReport {
    pub experiment: String,
    pub config: ExperimentConfig,
    pub seeds: Vec<u64>,
    pub institutions: Vec<Address>,
    pub rounds: usize,
    pub final_auroc: f64,
    pub institutional_values: Vec<f64>,
    pub reported: Vec<u64>,
    pub reports_identical: bool,
    pub fund: u64,
    pub payouts: BTreeMap<Address, u64>,
    pub leftover: u64,
    pub refunds: BTreeMap<Address, u64>,
    /// Σ payouts + leftover = fund.
    pub conserved: bool,
    pub timings: PhaseTimings,
    pub training_compute_secs: f64,
    pub overhead_secs: f64,
    pub overhead_ratio: f64,
    pub transactions: usize,
    pub deployment_gas: u64,
    pub deployment_usd: f64,
    pub violations: Vec<String>,
}

pub fn run_ledger_demo(cfg: &ExperimentConfig) -> anyhow::Result<(LedgerDemoReport, SessionTrace)> {
    let seed = cfg.seeds.first().copied().unwrap_or(0);
    let l = &cfg.ledger;
    let synth = SynthConfig {
        n_clients: l.peers,
        n_points: l.points_per_peer,
        flip_fractions: Vec::new(),
        ..cfg.synth_for(seed)
    };
    let data = gen_synthetic(&synth)?;
    let clients = Client::from_sets(data.clients);
    let session = SessionConfig {
        fl: ddval_fl::FlConfig {
            window: l.window,
            max_rounds: l.max_rounds,
            ..cfg.fl_for(seed)
        },
        k: cfg.k,
        fund: l.fund,
        timeout: Duration::from_millis(l.timeout_ms),
        drop_before_ready: None,
    };
    let trace = run_swarm_session(&clients, &data.test, &session)?;

    let mut violations = Vec::new();
    let s = &trace.settlement;
    let paid: u64 = s.payouts.values().sum();
    let conserved = paid.checked_add(s.leftover) == Some(l.fund) && trace.state.token.conserved();
    if !conserved {
        violations.push(format!("payouts {paid} + leftover {} != fund {}", s.leftover, l.fund));
    }
    let first = trace.reports.values().next().cloned().unwrap_or_default();
    let reports_identical =
        trace.reports.len() == trace.institutions.len() && trace.reports.values().all(|r| *r == first);
    if !reports_identical {
        violations.push("peers reported different contribution vectors".into());
    }
    let gas = deployment_gas(l.peers as u64);
    let report = LedgerDemoReport {
        experiment: "ledger-demo".into(),
        config: cfg.clone(),
        seeds: vec![seed],
        institutions: trace.institutions.clone(),
        rounds: trace.rounds,
        final_auroc: trace.final_auroc,
        institutional_values: trace.institutional_values.clone(),
        reported: first,
        reports_identical,
        fund: l.fund,
        payouts: s.payouts.clone(),
        leftover: s.leftover,
        refunds: s.refunds.clone(),
        conserved,
        timings: trace.timings,
        training_compute_secs: trace.training_compute_secs,
        overhead_secs: trace.overhead_secs,
        overhead_ratio: trace.overhead_ratio(),
        transactions: trace.entries.len(),
        deployment_gas: gas,
        deployment_usd: estimate_gas_cost(gas, cfg.gas.gas_price_gwei, cfg.gas.eth_usd),
        violations,
    };
    Ok((report, trace))
}
