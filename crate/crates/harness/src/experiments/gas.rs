use ddval_ledger::{deployment_gas, estimate_gas_cost, DEPLOY_GAS_PER_INSTITUTION};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GasRow {
    pub institutions: usize,
    pub gas: u64,
    pub usd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GasReport {
    pub experiment: String,
    pub config: ExperimentConfig,
    pub seeds: Vec<u64>,
    pub gas_price_gwei: f64,
    pub eth_usd: f64,
    pub deployment: GasRow,
    pub per_institution_gas: u64,
    pub per_institution_usd: f64,
    /// Deployment cost for 1 up to twice the configured institutions.
    pub table: Vec<GasRow>,
}

pub fn run_gas(cfg: &ExperimentConfig) -> GasReport {
    let g = &cfg.gas;
    let row = |n: usize| {
        let gas = deployment_gas(n as u64);
        GasRow {
            institutions: n,
            gas,
            usd: estimate_gas_cost(gas, g.gas_price_gwei, g.eth_usd),
        }
    };
    GasReport {
        experiment: "gas".into(),
        config: cfg.clone(),
        seeds: cfg.seeds.clone(),
        gas_price_gwei: g.gas_price_gwei,
        eth_usd: g.eth_usd,
        deployment: row(g.institutions),
        per_institution_gas: DEPLOY_GAS_PER_INSTITUTION,
        per_institution_usd: estimate_gas_cost(DEPLOY_GAS_PER_INSTITUTION, g.gas_price_gwei, g.eth_usd),
        table: (1..=(2 * g.institutions).max(1)).map(row).collect(),
    }
}
