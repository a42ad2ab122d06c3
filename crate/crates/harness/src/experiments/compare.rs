//! Client-level accuracy of DDVal, OR and SaFE against exact retraining.

use std::collections::BTreeMap;

use anyhow::Context;
use ddval_core::{cosine_similarity, ClientId, Grouping};
use ddval_fl::{
    canonical_client_svs, ddval_report, extract_deep_features, institutional_values, or_approx_client_svs,
    run_federated, safe_approx_client_svs, Client,
};
use ddval_synth::{gen_synthetic, DistributionMode, SynthConfig};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::stats::Summary;

pub const METHODS: [&str; 3] = ["ddval", "or", "safe"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRun {
    pub seed: u64,
    pub mode: DistributionMode,
    pub coalition_retrainings: usize,
    pub rounds: usize,
    pub final_auroc: f64,
    pub canonical: Vec<f64>,
    /// Per method: client values in client order.
    pub estimates: BTreeMap<String, Vec<f64>>,
    pub cosine: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub experiment: String,
    pub config: ExperimentConfig,
    pub seeds: Vec<u64>,
    pub runs: Vec<CompareRun>,
    /// Mode → method → cosine similarity across seeds.
    pub summary: BTreeMap<String, BTreeMap<String, Summary>>,
    /// Seeds in which DDVal's cosine is at least OR's, per mode.
    pub ddval_at_least_or: BTreeMap<String, usize>,
    pub violations: Vec<String>,
}

pub fn mode_name(mode: DistributionMode) -> &'static str {
    match mode {
        DistributionMode::Iid => "iid",
        DistributionMode::NonIid => "non_iid",
    }
}

pub fn compare_one(cfg: &ExperimentConfig, seed: u64, mode: DistributionMode) -> anyhow::Result<CompareRun> {
    let synth = SynthConfig {
        n_clients: cfg.compare.n_clients,
        n_points: cfg.compare.n_points,
        mode,
        ..cfg.synth_for(seed)
    };
    let data = gen_synthetic(&synth)?;
    let clients = Client::from_sets(data.clients);
    let fl = cfg.fl_for(seed);

    let canonical = canonical_client_svs(&clients, &data.test, &fl)?;
    let run = run_federated(&clients, &data.test, &fl)?;
    let ids: Vec<ClientId> = clients.iter().map(|c| c.id).collect();

    let report = ddval_report(&run.final_model, &clients, &data.test, cfg.k, Grouping::Client)?;
    let ddval = institutional_values(&report, &ids);
    let or = or_approx_client_svs(&run.history, &run.initial, &run.weights, &data.test)?;
    let features = clients
        .iter()
        .map(|c| Ok((c.id, extract_deep_features(&run.final_model, &c.points)?)))
        .collect::<anyhow::Result<BTreeMap<_, _>>>()?;
    let test_features = extract_deep_features(&run.final_model, &data.test)?;
    let safe = safe_approx_client_svs(&features, &test_features)?;

    let estimates: BTreeMap<String, Vec<f64>> = [
        ("ddval".to_string(), ddval),
        ("or".to_string(), or.values),
        ("safe".to_string(), safe.values),
    ]
    .into();
    let cosine = estimates
        .iter()
        .map(|(m, v)| {
            let c = cosine_similarity(v, &canonical.values).with_context(|| format!("cosine of {m} at seed {seed}"))?;
            Ok((m.clone(), c))
        })
        .collect::<anyhow::Result<_>>()?;
    Ok(CompareRun {
        seed,
        mode,
        coalition_retrainings: canonical.evaluations,
        rounds: run.history.len(),
        final_auroc: report.coalition_auroc,
        canonical: canonical.values,
        estimates,
        cosine,
    })
}

pub fn run_compare_institutional(cfg: &ExperimentConfig) -> anyhow::Result<CompareReport> {
    let mut runs = Vec::new();
    for &mode in &cfg.compare.modes {
        for &seed in &cfg.seeds {
            runs.push(compare_one(cfg, seed, mode)?);
        }
    }
    let mut summary = BTreeMap::new();
    let mut ddval_at_least_or = BTreeMap::new();
    for &mode in &cfg.compare.modes {
        let of_mode: Vec<&CompareRun> = runs.iter().filter(|r| r.mode == mode).collect();
        let per_method = METHODS
            .iter()
            .filter_map(|m| {
                let values: Vec<f64> = of_mode.iter().map(|r| r.cosine[*m]).collect();
                Summary::of(&values).map(|s| (m.to_string(), s))
            })
            .collect();
        summary.insert(mode_name(mode).to_string(), per_method);
        let wins = of_mode.iter().filter(|r| r.cosine["ddval"] >= r.cosine["or"]).count();
        ddval_at_least_or.insert(mode_name(mode).to_string(), wins);
    }
    let expected = (1usize << cfg.compare.n_clients) - 1;
    let mut violations = Vec::new();
    for r in &runs {
        if r.coalition_retrainings != expected {
            violations.push(format!(
                "seed {}: {} coalition retrainings, expected {expected}",
                r.seed, r.coalition_retrainings
            ));
        }
        for (m, c) in &r.cosine {
            if !(-1.0..=1.0).contains(c) {
                violations.push(format!("seed {}: {m} cosine {c} outside [-1, 1]", r.seed));
            }
        }
    }
    Ok(CompareReport {
        experiment: "compare".into(),
        config: cfg.clone(),
        seeds: cfg.seeds.clone(),
        runs,
        summary,
        ddval_at_least_or,
        violations,
    })
}
