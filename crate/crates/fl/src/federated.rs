use std::collections::BTreeMap;
use std::io::Write;

use ddval_core::{plateau_reached, ClientId, Point};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::auroc::validate;
use crate::model::{Mlp, ModelShape, Params};
use crate::train::{train_local, TrainConfig};
use crate::{FlError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlConfig {
    pub hidden: usize,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Rounds without improvement that end training.
    pub window: usize,
    pub max_rounds: usize,
    pub seed: u64,
}

impl Default for FlConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            hidden: 32,
            lr: t.lr,
            epochs: t.epochs,
            batch_size: t.batch_size,
            window: 10,
            max_rounds: 200,
            seed: 0,
        }
    }
}

impl FlConfig {
    pub fn train(&self) -> TrainConfig {
        TrainConfig {
            lr: self.lr,
            epochs: self.epochs,
            batch_size: self.batch_size,
        }
    }

    /// Shuffling seed of round `round`. Independent of the client, so clients
    /// holding identical data compute identical updates.
    pub fn round_seed(&self, round: usize) -> u64 {
        self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(round as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Client {
    pub id: ClientId,
    pub points: Vec<Point>,
}

impl Client {
    /// Wraps per-client point sets, numbering clients by position.
    pub fn from_sets(sets: Vec<Vec<Point>>) -> Vec<Client> {
        sets.into_iter()
            .enumerate()
            .map(|(i, points)| Client {
                id: ClientId(i as u32),
                points,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round_index: usize,
    pub per_client_delta: BTreeMap<ClientId, Params>,
    pub aggregated_model: Mlp,
    pub validation_auc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FederatedRun {
    pub initial: Mlp,
    pub final_model: Mlp,
    pub history: Vec<RoundRecord>,
    /// Aggregation weight (data count) of every client.
    pub weights: BTreeMap<ClientId, f64>,
}

impl FederatedRun {
    pub fn aucs(&self) -> Vec<f64> {
        self.history.iter().map(|r| r.validation_auc).collect()
    }
}

/// `model + Σ w_c Δ_c / Σ w_c`, summed in client id order.
pub fn fed_avg_round(
    model: &Mlp,
    deltas: &BTreeMap<ClientId, Params>,
    weights: &BTreeMap<ClientId, f64>,
) -> Result<Mlp> {
    if deltas.is_empty() {
        return Err(FlError::NoDeltas);
    }
    let mut total = 0.0;
    for id in deltas.keys() {
        total += *weights.get(id).ok_or(FlError::MissingWeight(*id))?;
    }
    if total == 0.0 || !total.is_finite() {
        return Err(FlError::ZeroWeight);
    }
    let mut step = Params::zeros(model.params.len());
    for (id, delta) in deltas {
        step.add_scaled(delta, weights[id] / total)?;
    }
    model.with_params(&model.params + &step)
}

pub(crate) fn model_shape(clients: &[Client], hidden: usize) -> Result<ModelShape> {
    let first = clients
        .iter()
        .find_map(|c| c.points.first())
        .ok_or(FlError::NoClients)?;
    Ok(ModelShape {
        d_in: first.features.len(),
        d_hidden: hidden,
        n_labels: first.labels.len(),
    })
}

/// Trains all clients to the plateau (or the round cap) with FedAvg.
pub fn run_federated(clients: &[Client], test: &[Point], cfg: &FlConfig) -> Result<FederatedRun> {
    if clients.is_empty() {
        return Err(FlError::NoClients);
    }
    if cfg.window == 0 || cfg.max_rounds == 0 || cfg.hidden == 0 {
        return Err(FlError::InvalidConfig(
            "window, max_rounds and hidden must be positive".into(),
        ));
    }
    if clients.iter().any(|c| c.points.is_empty()) {
        return Err(FlError::EmptyClientData);
    }
    let shape = model_shape(clients, cfg.hidden)?;
    let initial = Mlp::init(shape, cfg.seed);
    let weights: BTreeMap<ClientId, f64> = clients.iter().map(|c| (c.id, c.points.len() as f64)).collect();
    let train_cfg = cfg.train();

    let mut model = initial.clone();
    let mut history: Vec<RoundRecord> = Vec::new();
    let mut aucs = Vec::new();
    for round in 1..=cfg.max_rounds {
        let seed = cfg.round_seed(round);
        let deltas: BTreeMap<ClientId, Params> = clients
            .par_iter()
            .map(|c| Ok((c.id, train_local(&model, &c.points, &train_cfg, seed)?)))
            .collect::<Result<_>>()?;
        model = fed_avg_round(&model, &deltas, &weights)?;
        let auc = validate(&model, test)?;
        aucs.push(auc);
        history.push(RoundRecord {
            round_index: round,
            per_client_delta: deltas,
            aggregated_model: model.clone(),
            validation_auc: auc,
        });
        if plateau_reached(&aucs, cfg.window) {
            break;
        }
    }
    Ok(FederatedRun {
        initial,
        final_model: model,
        history,
        weights,
    })
}

#[derive(Serialize)]
struct HistoryLine {
    round_index: usize,
    delta_norms: BTreeMap<String, f64>,
    validation_auc: f64,
}

/// One JSON object per round: index, per-client delta norms, validation AUROC.
pub fn write_history_jsonl(history: &[RoundRecord], mut writer: impl Write) -> Result<()> {
    for record in history {
        let line = HistoryLine {
            round_index: record.round_index,
            delta_norms: record
                .per_client_delta
                .iter()
                .map(|(id, d)| (id.to_string(), d.norm()))
                .collect(),
            validation_auc: record.validation_auc,
        };
        serde_json::to_writer(&mut writer, &line).map_err(std::io::Error::from)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> Mlp {
        Mlp::init(
            ModelShape {
                d_in: 2,
                d_hidden: 3,
                n_labels: 1,
            },
            0,
        )
    }

    fn ids(v: &[(u32, f64)]) -> BTreeMap<ClientId, f64> {
        v.iter().map(|&(i, w)| (ClientId(i), w)).collect()
    }

    #[test]
    fn single_client_applies_its_delta() {
        let m = model();
        let delta = Params((0..m.params.len()).map(|i| i as f64 * 0.01).collect());
        let deltas = [(ClientId(0), delta.clone())].into_iter().collect();
        let out = fed_avg_round(&m, &deltas, &ids(&[(0, 5.0)])).unwrap();
        assert_eq!(out.params, &m.params + &delta);
    }

    #[test]
    fn opposite_deltas_cancel() {
        let m = model();
        let delta = Params(vec![0.5; m.params.len()]);
        let deltas = [(ClientId(0), delta.clone()), (ClientId(1), delta.scaled(-1.0))]
            .into_iter()
            .collect();
        let out = fed_avg_round(&m, &deltas, &ids(&[(0, 2.0), (1, 2.0)])).unwrap();
        assert_eq!(out.params, m.params);
    }

    #[test]
    fn weighted_mean() {
        let m = model();
        let delta = Params(vec![1.0; m.params.len()]);
        let deltas = [(ClientId(0), delta.clone()), (ClientId(1), Params::zeros(delta.len()))]
            .into_iter()
            .collect();
        let out = fed_avg_round(&m, &deltas, &ids(&[(0, 3.0), (1, 1.0)])).unwrap();
        for (o, p) in out.params.0.iter().zip(&m.params.0) {
            assert!((o - p - 0.75).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_weight_rejected() {
        let m = model();
        let deltas = [(ClientId(0), Params::zeros(m.params.len()))].into_iter().collect();
        assert!(matches!(
            fed_avg_round(&m, &deltas, &ids(&[(0, 0.0)])),
            Err(FlError::ZeroWeight)
        ));
        assert!(matches!(
            fed_avg_round(&m, &BTreeMap::new(), &ids(&[(0, 1.0)])),
            Err(FlError::NoDeltas)
        ));
    }
}
