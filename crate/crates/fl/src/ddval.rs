//! Point valuation from the shared deep features of a trained global model.

use ddval_core::{value_data_points, ClientId, Feature, Grouping, Point, ValuationReport};
use rayon::prelude::*;

use crate::auroc::validate;
use crate::federated::Client;
use crate::model::Mlp;
use crate::{FlError, Result};

/// Hidden-layer activations of every point, carrying over labels and lineage.
pub fn extract_deep_features(model: &Mlp, data: &[Point]) -> Result<Vec<Feature>> {
    if data.is_empty() {
        return Err(FlError::EmptyClientData);
    }
    data.par_iter()
        .map(|p| {
            Ok(Feature {
                point_id: p.point_id,
                vector: model.hidden(&p.features)?,
                labels: p.labels.clone(),
                subject_id: p.subject_id,
                client_id: p.client_id,
            })
        })
        .collect()
}

/// Values every training point of every client with the KNN recursion over
/// deep features of `model`, normalized to the model's test AUROC.
pub fn ddval_report(
    model: &Mlp,
    clients: &[Client],
    test: &[Point],
    k: usize,
    grouping: Grouping,
) -> Result<ValuationReport> {
    let mut train = Vec::new();
    for c in clients {
        let mut features = extract_deep_features(model, &c.points)?;
        for f in &mut features {
            f.client_id = c.id;
        }
        train.extend(features);
    }
    let test_features = extract_deep_features(model, test)?;
    let auc = validate(model, test)?;
    let mut report = value_data_points(&train, &test_features, k, auc, grouping)?;
    let flips = clients
        .iter()
        .flat_map(|c| c.points.iter().map(|p| (p.point_id, p.flips)))
        .collect();
    report.set_flip_counts(&flips);
    Ok(report)
}

/// Per-client totals of a client-grouped report, in the order of `ids`.
pub fn institutional_values(report: &ValuationReport, ids: &[ClientId]) -> Vec<f64> {
    ids.iter()
        .map(|id| report.group_sv.get(&id.to_string()).copied().unwrap_or(0.0))
        .collect()
}
