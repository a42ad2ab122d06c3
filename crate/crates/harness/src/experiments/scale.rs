//! Wall time of server-side valuation as the data and the client count grow.

use std::collections::BTreeMap;
use std::time::Instant;

use ddval_core::{value_data_points, Feature, Grouping};
use ddval_fl::{extract_deep_features, or_approx_client_svs, run_federated, safe_approx_client_svs, Client, FlConfig};
use ddval_synth::{gen_synthetic, SynthConfig};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::stats::growth_exponent;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointTiming {
    pub n_points: usize,
    pub seconds: Vec<f64>,
    pub best: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientTiming {
    pub n_clients: usize,
    pub or_evaluations: usize,
    pub or_seconds: Vec<f64>,
    pub safe_evaluations: usize,
    pub safe_seconds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleReport {
    pub experiment: String,
    pub config: ExperimentConfig,
    pub seeds: Vec<u64>,
    pub n_test: usize,
    pub ddval: Vec<PointTiming>,
    /// time(largest) / time(second largest), on best-of-repeats times.
    pub ddval_largest_ratio: Option<f64>,
    /// Slope of log time against log points.
    pub ddval_exponent: Option<f64>,
    pub clients: Vec<ClientTiming>,
    /// Per added client, the factor by which the best OR time grows.
    pub or_growth_per_client: Option<f64>,
    pub safe_growth_per_client: Option<f64>,
    pub violations: Vec<String>,
}

fn best(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Exponential base of `times` as a function of `counts`.
fn per_client_growth(counts: &[usize], times: &[f64]) -> Option<f64> {
    if counts.len() < 2 {
        return None;
    }
    let n = counts.len() as f64;
    let xs: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let ys: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| (sxy / sxx).exp())
}

fn quick_fl(cfg: &ExperimentConfig, seed: u64) -> FlConfig {
    FlConfig {
        max_rounds: cfg.scale.rounds,
        ..cfg.fl_for(seed)
    }
}

/// DDVal timings over growing prefixes of one dataset.
pub fn time_ddval(cfg: &ExperimentConfig, seed: u64) -> anyhow::Result<(Vec<PointTiming>, usize)> {
    let largest = cfg.scale.point_counts.iter().copied().max().unwrap_or(0);
    anyhow::ensure!(largest > 0, "scale.point_counts must not be empty");
    let n_clients = cfg.synth.n_clients.max(1);
    let synth = SynthConfig {
        n_points: largest.div_ceil(n_clients),
        n_clients,
        ..cfg.synth_for(seed)
    };
    let data = gen_synthetic(&synth)?;
    let clients = Client::from_sets(data.clients);
    let run = run_federated(&clients, &data.test, &quick_fl(cfg, seed))?;
    let auc = ddval_fl::validate(&run.final_model, &data.test)?;
    let all: Vec<Feature> = clients
        .iter()
        .map(|c| extract_deep_features(&run.final_model, &c.points))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .collect();
    let test = extract_deep_features(&run.final_model, &data.test)?;
    let mut timings = Vec::new();
    for &n in &cfg.scale.point_counts {
        let train = &all[..n.min(all.len())];
        let mut seconds = Vec::new();
        for _ in 0..cfg.scale.repeats.max(1) {
            let t = Instant::now();
            let report = value_data_points(train, &test, cfg.k, auc, Grouping::Client)?;
            seconds.push(t.elapsed().as_secs_f64());
            std::hint::black_box(report);
        }
        timings.push(PointTiming {
            n_points: train.len(),
            best: best(&seconds),
            seconds,
        });
    }
    Ok((timings, test.len()))
}

pub fn time_clients(cfg: &ExperimentConfig, seed: u64, n_clients: usize) -> anyhow::Result<ClientTiming> {
    let synth = SynthConfig {
        n_points: cfg.scale.points_per_client,
        n_clients,
        flip_fractions: Vec::new(),
        ..cfg.synth_for(seed)
    };
    let data = gen_synthetic(&synth)?;
    let clients = Client::from_sets(data.clients);
    let run = run_federated(&clients, &data.test, &quick_fl(cfg, seed))?;
    let features: BTreeMap<_, _> = clients
        .iter()
        .map(|c| Ok((c.id, extract_deep_features(&run.final_model, &c.points)?)))
        .collect::<anyhow::Result<_>>()?;
    let test = extract_deep_features(&run.final_model, &data.test)?;
    let mut timing = ClientTiming {
        n_clients,
        or_evaluations: 0,
        or_seconds: Vec::new(),
        safe_evaluations: 0,
        safe_seconds: Vec::new(),
    };
    for _ in 0..cfg.scale.repeats.max(1) {
        let t = Instant::now();
        let or = or_approx_client_svs(&run.history, &run.initial, &run.weights, &data.test)?;
        timing.or_seconds.push(t.elapsed().as_secs_f64());
        timing.or_evaluations = or.evaluations;
        let t = Instant::now();
        let safe = safe_approx_client_svs(&features, &test)?;
        timing.safe_seconds.push(t.elapsed().as_secs_f64());
        timing.safe_evaluations = safe.evaluations;
    }
    Ok(timing)
}

pub fn run_scale(cfg: &ExperimentConfig) -> anyhow::Result<ScaleReport> {
    let seed = cfg.seeds.first().copied().unwrap_or(0);
    anyhow::ensure!(
        cfg.scale.point_counts.windows(2).all(|w| w[0] < w[1]),
        "scale.point_counts must be ascending"
    );
    let (ddval, n_test) = time_ddval(cfg, seed)?;
    let clients = cfg
        .scale
        .client_counts
        .iter()
        .map(|&n| time_clients(cfg, seed, n))
        .collect::<anyhow::Result<Vec<_>>>()?;

    let mut violations = Vec::new();
    for c in &clients {
        let expected = (1usize << c.n_clients) - 1;
        if c.or_evaluations != expected || c.safe_evaluations != expected {
            violations.push(format!(
                "{} clients: {} OR and {} SaFE evaluations, expected {expected}",
                c.n_clients, c.or_evaluations, c.safe_evaluations
            ));
        }
    }
    let ddval_largest_ratio = match ddval.as_slice() {
        [.., a, b] => Some(b.best / a.best),
        _ => None,
    };
    let xs: Vec<f64> = ddval.iter().map(|t| t.n_points as f64).collect();
    let ys: Vec<f64> = ddval.iter().map(|t| t.best).collect();
    let counts: Vec<usize> = clients.iter().map(|c| c.n_clients).collect();
    let or_best: Vec<f64> = clients.iter().map(|c| best(&c.or_seconds)).collect();
    let safe_best: Vec<f64> = clients.iter().map(|c| best(&c.safe_seconds)).collect();
    Ok(ScaleReport {
        experiment: "scale".into(),
        config: cfg.clone(),
        seeds: vec![seed],
        n_test,
        ddval_exponent: growth_exponent(&xs, &ys),
        ddval_largest_ratio,
        ddval,
        or_growth_per_client: per_client_growth(&counts, &or_best),
        safe_growth_per_client: per_client_growth(&counts, &safe_best),
        clients,
        violations,
    })
}
