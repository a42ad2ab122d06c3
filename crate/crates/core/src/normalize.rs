use std::collections::BTreeMap;

use crate::error::{Result, ValuationError};
use crate::scalar::{Real, Scalar};
use crate::types::PointId;

/// Raw sums with magnitude below this cannot be rescaled.
pub const NORMALIZATION_EPSILON: f64 = 1e-12;

/// Rescales raw values so they sum to the coalition's effective utility,
/// `coalition_auroc - 0.5`.
pub fn normalize_to_auc<T: Real>(raw_sv: &BTreeMap<PointId, T>, coalition_auroc: T) -> Result<BTreeMap<PointId, T>> {
    if raw_sv.is_empty() {
        return Err(ValuationError::Empty("raw values"));
    }
    let auc = coalition_auroc.to_f64().unwrap_or(f64::NAN);
    if !(0.0..=1.0).contains(&auc) {
        return Err(ValuationError::AucOutOfRange(auc));
    }
    let sum = raw_sv.values().fold(T::zero(), |acc, &v| acc + v);
    let sum_f = sum.to_f64().unwrap_or(f64::NAN);
    if sum_f.is_nan() || sum_f.abs() < NORMALIZATION_EPSILON {
        return Err(ValuationError::DegenerateNormalization { sum: sum_f });
    }
    let half = T::one() / (T::one() + T::one());
    let scale = (coalition_auroc - half) / sum;
    Ok(raw_sv.iter().map(|(&id, &v)| (id, v * scale)).collect())
}

/// Sums point values per group.
pub fn aggregate_group<T: Scalar, K: Ord + Clone>(
    normalized_sv: &BTreeMap<PointId, T>,
    grouping: &BTreeMap<PointId, K>,
) -> Result<BTreeMap<K, T>> {
    let mut out: BTreeMap<K, T> = BTreeMap::new();
    for (id, &v) in normalized_sv {
        let key = grouping.get(id).ok_or(ValuationError::MissingGroup(*id))?;
        let slot = out.entry(key.clone()).or_insert_with(T::zero);
        *slot = *slot + v;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(values: &[f64]) -> BTreeMap<PointId, f64> {
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| (PointId(i as u64), v))
            .collect()
    }

    #[test]
    fn chance_level_zeroes_everything() {
        let out = normalize_to_auc(&map(&[0.3, -0.1, 0.2]), 0.5).unwrap();
        assert!(out.values().all(|&v| v == 0.0));
    }

    #[test]
    fn scales_to_effective_utility() {
        let out = normalize_to_auc(&map(&[1.0, 1.0, 2.0]), 0.9).unwrap();
        let got: Vec<f64> = out.values().copied().collect();
        for (g, e) in got.iter().zip([0.1, 0.1, 0.2]) {
            assert!((g - e).abs() < 1e-15, "{got:?}");
        }
    }

    #[test]
    fn already_normalized_is_unchanged() {
        let input = map(&[0.1, 0.2, 0.1]);
        let out = normalize_to_auc(&input, 0.9).unwrap();
        for (a, b) in input.values().zip(out.values()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn degenerate_inputs_rejected() {
        assert!(matches!(
            normalize_to_auc(&map(&[1e-13, -1e-13]), 0.8),
            Err(ValuationError::DegenerateNormalization { .. })
        ));
        assert!(matches!(
            normalize_to_auc(&map(&[1.0]), 1.2),
            Err(ValuationError::AucOutOfRange(_))
        ));
        assert!(matches!(
            normalize_to_auc::<f64>(&BTreeMap::new(), 0.8),
            Err(ValuationError::Empty(_))
        ));
    }

    #[test]
    fn group_sums() {
        let values = map(&[0.1, 0.2, -0.05]);
        let grouping: BTreeMap<_, _> = [(0, "G1"), (1, "G1"), (2, "G2")]
            .into_iter()
            .map(|(i, g)| (PointId(i), g))
            .collect();
        let out = aggregate_group(&values, &grouping).unwrap();
        assert!((out["G1"] - 0.3).abs() < 1e-15);
        assert_eq!(out["G2"], -0.05);

        let singleton: BTreeMap<_, _> = values.keys().map(|&id| (id, id)).collect();
        let same = aggregate_group(&values, &singleton).unwrap();
        assert_eq!(same, values);

        let mut partial = grouping.clone();
        partial.remove(&PointId(2));
        assert_eq!(
            aggregate_group(&values, &partial),
            Err(ValuationError::MissingGroup(PointId(2)))
        );
    }
}
