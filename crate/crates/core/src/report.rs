//! The full point-valuation pass over shared deep features and its report.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Result, ValuationError};
use crate::knn::compute_knn_svs;
use crate::normalize::{aggregate_group, normalize_to_auc};
use crate::types::{ClientId, DeepFeature, PointId, SubjectId};

/// Hierarchy level used for group values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    #[default]
    Client,
    Subject,
}

impl Grouping {
    pub fn key<T>(self, f: &DeepFeature<T>) -> String {
        match self {
            Grouping::Client => f.client_id.to_string(),
            Grouping::Subject => f.subject_id.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointLineage {
    pub client_id: ClientId,
    pub subject_id: SubjectId,
    pub flipped_label_count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValuationReport {
    pub k: usize,
    pub d: usize,
    pub n_labels: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub coalition_auroc: f64,
    pub grouping: Grouping,
    pub raw_sv: BTreeMap<PointId, f64>,
    pub normalized_sv: BTreeMap<PointId, f64>,
    pub group_sv: BTreeMap<String, f64>,
    pub lineage: BTreeMap<PointId, PointLineage>,
}

#[derive(Serialize)]
struct CsvRow {
    point_id: PointId,
    client_id: ClientId,
    subject_id: SubjectId,
    raw_sv: f64,
    normalized_sv: f64,
    flipped_label_count: u32,
}

/// Values every training point against the test features, rescales to the
/// coalition's effective utility and sums the result per group.
pub fn value_data_points(
    train: &[DeepFeature<f64>],
    test: &[DeepFeature<f64>],
    k: usize,
    coalition_auroc: f64,
    grouping: Grouping,
) -> Result<ValuationReport> {
    let raw_sv = compute_knn_svs(train, test, k)?;
    let normalized_sv = normalize_to_auc(&raw_sv, coalition_auroc)?;
    let groups: BTreeMap<PointId, String> = train.iter().map(|f| (f.point_id, grouping.key(f))).collect();
    let group_sv = aggregate_group(&normalized_sv, &groups)?;
    let lineage = train
        .iter()
        .map(|f| {
            (
                f.point_id,
                PointLineage {
                    client_id: f.client_id,
                    subject_id: f.subject_id,
                    flipped_label_count: 0,
                },
            )
        })
        .collect();
    Ok(ValuationReport {
        k,
        d: train[0].vector.len(),
        n_labels: train[0].labels.len(),
        n_train: train.len(),
        n_test: test.len(),
        coalition_auroc,
        grouping,
        raw_sv,
        normalized_sv,
        group_sv,
        lineage,
    })
}

impl ValuationReport {
    /// Records how many labels of each point were flipped before training.
    pub fn set_flip_counts(&mut self, flips: &BTreeMap<PointId, u32>) {
        for (id, lineage) in self.lineage.iter_mut() {
            lineage.flipped_label_count = flips.get(id).copied().unwrap_or(0);
        }
    }

    /// Group values re-derived for another grouping of the same points.
    pub fn regroup<K: Ord + Clone>(&self, grouping: &BTreeMap<PointId, K>) -> Result<BTreeMap<K, f64>> {
        aggregate_group(&self.normalized_sv, grouping)
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(reader: impl Read) -> serde_json::Result<Self> {
        serde_json::from_reader(reader)
    }

    /// One row per point: `point_id, client_id, subject_id, raw_sv, normalized_sv, flipped_label_count`.
    pub fn write_csv(&self, writer: impl Write) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for (id, raw) in &self.raw_sv {
            let lineage = self
                .lineage
                .get(id)
                .ok_or_else(|| csv::Error::from(std::io::Error::other(ValuationError::MissingGroup(*id))))?;
            w.serialize(CsvRow {
                point_id: *id,
                client_id: lineage.client_id,
                subject_id: lineage.subject_id,
                raw_sv: *raw,
                normalized_sv: self.normalized_sv[id],
                flipped_label_count: lineage.flipped_label_count,
            })?;
        }
        w.flush()?;
        Ok(())
    }
}
