//! Per-point values under per-client label noise, stratified by the number
//! of flipped labels and by label pattern.

use std::collections::BTreeMap;

use ddval_core::{Grouping, PointId};
use ddval_fl::{ddval_report, run_federated, Client};
use ddval_synth::{gen_synthetic, linear_flip_fractions, SynthConfig};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::stats::Summary;

/// Flip strata that must decrease strictly for a seed to count as monotone.
pub const CHECKED_FLIP_STRATA: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stratum {
    pub count: usize,
    pub mean_sv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueRun {
    pub seed: u64,
    pub rounds: usize,
    pub coalition_auroc: f64,
    pub normalized_sum: f64,
    /// Flipped-label count → stratum.
    pub by_flips: BTreeMap<u32, Stratum>,
    /// "finding=<0|1>,conditions=<n>" → stratum.
    pub by_label_pattern: BTreeMap<String, Stratum>,
    /// Strata 0 through 4 are all present and strictly decreasing.
    pub strictly_decreasing: bool,
    #[serde(skip)]
    pub points: Option<ddval_core::ValuationReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interpretation {
    pub checked_strata: Vec<u32>,
    pub decreasing_seeds: usize,
    pub total_seeds: usize,
    pub monotone_decreasing: bool,
    pub statement: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueReport {
    pub experiment: String,
    pub config: ExperimentConfig,
    pub seeds: Vec<u64>,
    pub flip_fractions: Vec<f64>,
    pub runs: Vec<ValueRun>,
    /// Stratum → per-seed stratum means summarized across seeds.
    pub flip_summary: BTreeMap<u32, Summary>,
    pub label_summary: BTreeMap<String, Summary>,
    pub interpretation: Interpretation,
    pub violations: Vec<String>,
}

fn strata<K: Ord>(values: impl Iterator<Item = (K, f64)>) -> BTreeMap<K, Stratum> {
    let mut acc: BTreeMap<K, (usize, f64)> = BTreeMap::new();
    for (k, v) in values {
        let e = acc.entry(k).or_insert((0, 0.0));
        e.0 += 1;
        e.1 += v;
    }
    acc.into_iter()
        .map(|(k, (count, sum))| {
            (
                k,
                Stratum {
                    count,
                    mean_sv: sum / count as f64,
                },
            )
        })
        .collect()
}

/// True when strata 0..=`upto` all exist and their means strictly decrease.
pub fn strictly_decreasing(by_flips: &BTreeMap<u32, Stratum>, upto: u32) -> bool {
    (0..upto).all(|f| match (by_flips.get(&f), by_flips.get(&(f + 1))) {
        (Some(a), Some(b)) => a.mean_sv > b.mean_sv,
        _ => false,
    })
}

pub fn flip_fractions(cfg: &ExperimentConfig) -> Vec<f64> {
    cfg.value
        .flip_fractions
        .clone()
        .unwrap_or_else(|| linear_flip_fractions(cfg.synth.n_clients))
}

pub fn value_one(cfg: &ExperimentConfig, seed: u64) -> anyhow::Result<ValueRun> {
    let synth = SynthConfig {
        flip_fractions: flip_fractions(cfg),
        ..cfg.synth_for(seed)
    };
    let data = gen_synthetic(&synth)?;
    let clients = Client::from_sets(data.clients);
    let run = run_federated(&clients, &data.test, &cfg.fl_for(seed))?;
    let report = ddval_report(&run.final_model, &clients, &data.test, cfg.k, Grouping::Client)?;

    let labels: BTreeMap<PointId, (u8, usize)> = clients
        .iter()
        .flat_map(|c| &c.points)
        .map(|p| (p.point_id, (p.labels[0], p.condition_count())))
        .collect();
    let by_flips = strata(
        report
            .normalized_sv
            .iter()
            .map(|(id, v)| (report.lineage[id].flipped_label_count, *v)),
    );
    let by_label_pattern = strata(report.normalized_sv.iter().map(|(id, v)| {
        let (finding, conditions) = labels[id];
        (format!("finding={finding},conditions={conditions}"), *v)
    }));
    let upto = CHECKED_FLIP_STRATA.min(synth.n_labels as u32);
    Ok(ValueRun {
        seed,
        rounds: run.history.len(),
        coalition_auroc: report.coalition_auroc,
        normalized_sum: report.normalized_sv.values().sum(),
        strictly_decreasing: strictly_decreasing(&by_flips, upto),
        by_flips,
        by_label_pattern,
        points: Some(report),
    })
}

fn summarize<K: Ord + Clone>(maps: impl Iterator<Item = BTreeMap<K, Stratum>>) -> BTreeMap<K, Summary> {
    let mut per_key: BTreeMap<K, Vec<f64>> = BTreeMap::new();
    for m in maps {
        for (k, s) in m {
            per_key.entry(k).or_default().push(s.mean_sv);
        }
    }
    per_key
        .into_iter()
        .filter_map(|(k, v)| Summary::of(&v).map(|s| (k, s)))
        .collect()
}

pub fn run_value_points(cfg: &ExperimentConfig) -> anyhow::Result<ValueReport> {
    let runs = cfg
        .seeds
        .iter()
        .map(|&seed| value_one(cfg, seed))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mut violations = Vec::new();
    for r in &runs {
        let expected = r.coalition_auroc - 0.5;
        if (r.normalized_sum - expected).abs() > 1e-9 {
            violations.push(format!(
                "seed {}: normalized values sum to {} instead of {}",
                r.seed, r.normalized_sum, expected
            ));
        }
    }
    let upto = CHECKED_FLIP_STRATA.min(cfg.synth.n_labels as u32);
    let decreasing_seeds = runs.iter().filter(|r| r.strictly_decreasing).count();
    let flipping = flip_fractions(cfg).iter().any(|f| *f > 0.0);
    let monotone_decreasing = flipping && decreasing_seeds * 2 > runs.len();
    let statement = if !flipping {
        "no labels flipped: a single stratum".to_string()
    } else {
        format!(
            "mean value strictly decreases from 0 to {upto} flipped labels in {decreasing_seeds} of {} seeds",
            runs.len()
        )
    };
    Ok(ValueReport {
        experiment: "value".into(),
        config: cfg.clone(),
        seeds: cfg.seeds.clone(),
        flip_fractions: flip_fractions(cfg),
        flip_summary: summarize(runs.iter().map(|r| r.by_flips.clone())),
        label_summary: summarize(runs.iter().map(|r| r.by_label_pattern.clone())),
        interpretation: Interpretation {
            checked_strata: (0..=upto).collect(),
            decreasing_seeds,
            total_seeds: runs.len(),
            monotone_decreasing,
            statement,
        },
        runs,
        violations,
    })
}
