//! Client-level Shapley estimates: exact retraining of every coalition and the
//! two single-training approximations (gradient replay and per-client
//! logistic heads on deep features).

use std::collections::BTreeMap;

use ddval_core::{canonical_shapley, ClientId, CoalitionTable, Feature, Point};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::auroc::macro_auroc;
use crate::federated::{fed_avg_round, run_federated, Client, FlConfig, RoundRecord};
use crate::model::{sigmoid, Mlp};
use crate::{auroc::validate, FlError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientValuation {
    pub clients: Vec<ClientId>,
    pub values: Vec<f64>,
    /// Coalition utilities evaluated to produce the values.
    pub evaluations: usize,
}

impl ClientValuation {
    pub fn as_map(&self) -> BTreeMap<ClientId, f64> {
        self.clients.iter().copied().zip(self.values.iter().copied()).collect()
    }
}

fn members<T: Copy>(mask: usize, items: &[T]) -> Vec<T> {
    items
        .iter()
        .enumerate()
        .filter(|(i, _)| mask & (1 << i) != 0)
        .map(|(_, &x)| x)
        .collect()
}

/// Evaluates `utility` on every nonempty coalition (in parallel) and returns
/// the exact Shapley values.
fn shapley_over<F>(clients: Vec<ClientId>, utility: F) -> Result<ClientValuation>
where
    F: Fn(usize) -> Result<f64> + Sync,
{
    let n = clients.len();
    CoalitionTable::<f64>::new(n)?;
    let utilities: Vec<f64> = (1..1usize << n).into_par_iter().map(&utility).collect::<Result<_>>()?;
    let table = CoalitionTable::from_fn(n, |mask: usize| Ok::<_, FlError>(utilities[mask - 1]))?;
    Ok(ClientValuation {
        clients,
        values: canonical_shapley(&table)?,
        evaluations: utilities.len(),
    })
}

/// Exact client values: every coalition is trained from scratch with the
/// same configuration and scored as test AUROC minus 0.5.
pub fn canonical_client_svs(clients: &[Client], test: &[Point], cfg: &FlConfig) -> Result<ClientValuation> {
    let ids: Vec<ClientId> = clients.iter().map(|c| c.id).collect();
    shapley_over(ids, |mask| {
        let coalition: Vec<Client> = members(mask, &(0..clients.len()).collect::<Vec<_>>())
            .into_iter()
            .map(|i| clients[i].clone())
            .collect();
        let run = run_federated(&coalition, test, cfg)?;
        let last = run.history.last().ok_or(FlError::NoDeltas)?;
        Ok(last.validation_auc - 0.5)
    })
}

/// Model synthesized for `coalition`: the initial model plus, for every
/// recorded round, the data-weighted mean of the members' deltas.
pub fn or_coalition_model(
    history: &[RoundRecord],
    initial: &Mlp,
    weights: &BTreeMap<ClientId, f64>,
    coalition: &[ClientId],
) -> Result<Mlp> {
    let mut model = initial.clone();
    for record in history {
        let mut deltas = BTreeMap::new();
        for id in coalition {
            let delta = record.per_client_delta.get(id).ok_or(FlError::MissingDelta {
                client: *id,
                round: record.round_index,
            })?;
            deltas.insert(*id, delta.clone());
        }
        model = fed_avg_round(&model, &deltas, weights)?;
    }
    Ok(model)
}

/// One-round approximation of the client values from a single training run.
pub fn or_approx_client_svs(
    history: &[RoundRecord],
    initial: &Mlp,
    weights: &BTreeMap<ClientId, f64>,
    test: &[Point],
) -> Result<ClientValuation> {
    let ids: Vec<ClientId> = weights.keys().copied().collect();
    for record in history {
        if let Some(&client) = ids.iter().find(|id| !record.per_client_delta.contains_key(id)) {
            return Err(FlError::MissingDelta {
                client,
                round: record.round_index,
            });
        }
    }
    shapley_over(ids.clone(), |mask| {
        let model = or_coalition_model(history, initial, weights, &members(mask, &ids))?;
        Ok(validate(&model, test)? - 0.5)
    })
}

/// Independent logistic regression per label on deep features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticHead {
    pub dim: usize,
    pub n_labels: usize,
    /// `weights[l * dim + j]`
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

const HEAD_ITERATIONS: usize = 300;
const HEAD_LR: f64 = 1.0;
const HEAD_L2: f64 = 1e-4;

impl LogisticHead {
    /// Full-batch gradient descent from zero weights.
    pub fn fit(features: &[Feature]) -> Result<Self> {
        let first = features.first().ok_or(FlError::EmptyClientData)?;
        let (dim, n_labels) = (first.vector.len(), first.labels.len());
        let mut head = LogisticHead {
            dim,
            n_labels,
            weights: vec![0.0; dim * n_labels],
            bias: vec![0.0; n_labels],
        };
        let inv = 1.0 / features.len() as f64;
        let mut gw = vec![0.0; head.weights.len()];
        let mut gb = vec![0.0; n_labels];
        for _ in 0..HEAD_ITERATIONS {
            gw.iter_mut().for_each(|g| *g = 0.0);
            gb.iter_mut().for_each(|g| *g = 0.0);
            for f in features {
                for l in 0..n_labels {
                    let err = (sigmoid(head.logit(&f.vector, l)) - f.labels[l] as f64) * inv;
                    gb[l] += err;
                    let row = &mut gw[l * dim..(l + 1) * dim];
                    for (g, x) in row.iter_mut().zip(&f.vector) {
                        *g += err * x;
                    }
                }
            }
            for (w, g) in head.weights.iter_mut().zip(&gw) {
                *w -= HEAD_LR * (g + HEAD_L2 * *w);
            }
            for (b, g) in head.bias.iter_mut().zip(&gb) {
                *b -= HEAD_LR * g;
            }
        }
        Ok(head)
    }

    fn logit(&self, x: &[f64], label: usize) -> f64 {
        let row = &self.weights[label * self.dim..(label + 1) * self.dim];
        self.bias[label] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n_labels).map(|l| self.logit(x, l)).collect()
    }

    /// Parameter average weighted by `weights`.
    pub fn combine(heads: &[(&LogisticHead, f64)]) -> Result<Self> {
        let (first, _) = heads.first().ok_or(FlError::NoDeltas)?;
        let total: f64 = heads.iter().map(|(_, w)| w).sum();
        if total == 0.0 {
            return Err(FlError::ZeroWeight);
        }
        let mut out = LogisticHead {
            dim: first.dim,
            n_labels: first.n_labels,
            weights: vec![0.0; first.weights.len()],
            bias: vec![0.0; first.bias.len()],
        };
        for (head, w) in heads {
            let s = w / total;
            for (o, v) in out.weights.iter_mut().zip(&head.weights) {
                *o += s * v;
            }
            for (o, v) in out.bias.iter_mut().zip(&head.bias) {
                *o += s * v;
            }
        }
        Ok(out)
    }

    pub fn evaluate(&self, test: &[Feature]) -> Result<f64> {
        let scores: Vec<Vec<f64>> = test.iter().map(|f| self.scores(&f.vector)).collect();
        let labels: Vec<&[u8]> = test.iter().map(|f| f.labels.as_slice()).collect();
        macro_auroc(&scores, &labels)
    }
}

/// Client-side step of SaFE: one head per client with its data count.
pub fn fit_client_heads(features: &BTreeMap<ClientId, Vec<Feature>>) -> Result<Vec<(ClientId, LogisticHead, f64)>> {
    features
        .par_iter()
        .map(|(id, f)| {
            if f.is_empty() {
                return Err(FlError::EmptyClientData);
            }
            Ok((*id, LogisticHead::fit(f)?, f.len() as f64))
        })
        .collect()
}

/// Server-side step of SaFE: score every coalition's averaged head.
pub fn safe_coalition_svs(
    heads: &[(ClientId, LogisticHead, f64)],
    test_features: &[Feature],
) -> Result<ClientValuation> {
    let ids: Vec<ClientId> = heads.iter().map(|(id, _, _)| *id).collect();
    shapley_over(ids, |mask| {
        let chosen: Vec<(&LogisticHead, f64)> = heads
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, (_, h, w))| (h, *w))
            .collect();
        Ok(LogisticHead::combine(&chosen)?.evaluate(test_features)? - 0.5)
    })
}

pub fn safe_approx_client_svs(
    features: &BTreeMap<ClientId, Vec<Feature>>,
    test_features: &[Feature],
) -> Result<ClientValuation> {
    let heads = fit_client_heads(features)?;
    safe_coalition_svs(&heads, test_features)
}
