//! Exact Shapley values of the K-nearest-neighbor utility.
//!
//! For one test point and one label dimension, training points are sorted by
//! ascending distance `α_1 .. α_N`. The farthest point gets
//! `1[y_{α_N} = y] / N` and the rest follow the backward recursion
//!
//! ```text
//! φ(α_i) = φ(α_{i+1}) + (1[y_{α_i} = y] - 1[y_{α_{i+1}} = y]) / K · min(K, i) / i
//! ```
//!
//! Multi-label points run the recursion once per label dimension; values are
//! averaged over dimensions and then over test points.
//!
//! `K` is clamped to the training set size. For `K <= N` this is a no-op; for
//! `K > N` it keeps the result equal to the exact Shapley values of
//! [`knn_utility`] evaluated with the clamped `K`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;

use crate::error::{Result, ValuationError};
use crate::scalar::Scalar;
use crate::types::{check_features, DeepFeature, PointId};

/// Neighborhood size used when a run does not configure one.
pub const DEFAULT_K: usize = 10;

/// Test points per parallel work unit. Fixed so the reduction order does not
/// depend on the thread count.
const TEST_CHUNK: usize = 8;

fn squared_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| {
        let d = x - y;
        acc + d * d
    })
}

fn lexicographic<T: Scalar>(a: &[T], b: &[T]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(Ordering::Equal) | None => continue,
            Some(ord) => return ord,
        }
    }
    Ordering::Equal
}

/// Orders two equidistant training points. Identical content sorts adjacent,
/// so duplicated data receives identical values wherever it lives; the
/// point id breaks the remaining ties.
fn tie_break<T: Scalar>(a: &DeepFeature<T>, b: &DeepFeature<T>) -> Ordering {
    lexicographic(&a.vector, &b.vector)
        .then_with(|| a.labels.cmp(&b.labels))
        .then_with(|| a.point_id.cmp(&b.point_id))
}

/// Indices of `train` by ascending distance to `query`.
pub(crate) fn neighbor_order<T: Scalar>(train: &[&DeepFeature<T>], query: &[T]) -> Vec<usize> {
    let dist: Vec<T> = train.iter().map(|p| squared_distance(&p.vector, query)).collect();
    let mut order: Vec<usize> = (0..train.len()).collect();
    order.sort_unstable_by(|&a, &b| {
        dist[a]
            .partial_cmp(&dist[b])
            .unwrap_or(Ordering::Equal)
            .then_with(|| tie_break(train[a], train[b]))
    });
    order
}

fn validate<T: Scalar>(train: &[DeepFeature<T>], test: &[DeepFeature<T>], k: usize) -> Result<()> {
    if k == 0 {
        return Err(ValuationError::InvalidK);
    }
    let shape = check_features("training set", train, None)?;
    check_features("test set", test, Some(shape))?;
    let mut seen = HashSet::with_capacity(train.len());
    for p in train {
        if !seen.insert(p.point_id) {
            return Err(ValuationError::DuplicatePoint(p.point_id));
        }
    }
    Ok(())
}

/// `min(K, i) / (K · i)` for 1-based positions `i = 1..=n`, stored at `i - 1`.
fn step_coefficients<T: Scalar>(n: usize, k: usize) -> Vec<T> {
    let kt = T::from_count(k);
    (1..=n)
        .map(|i| T::from_count(k.min(i)) / (kt * T::from_count(i)))
        .collect()
}

/// Adds the recursion result of every label dimension for one test point into `acc`.
fn accumulate_test_point<T: Scalar>(train: &[&DeepFeature<T>], test: &DeepFeature<T>, coef: &[T], acc: &mut [T]) {
    let n = train.len();
    let order = neighbor_order(train, &test.vector);
    let n_t = T::from_count(n);
    for (dim, &y) in test.labels.iter().enumerate() {
        let hit = |pos: usize| train[order[pos]].labels[dim] == y;
        let mut phi = if hit(n - 1) { T::one() / n_t } else { T::zero() };
        acc[order[n - 1]] = acc[order[n - 1]] + phi;
        for pos in (0..n - 1).rev() {
            // `pos` is the 0-based slot of α_i with i = pos + 1.
            match (hit(pos), hit(pos + 1)) {
                (true, false) => phi = phi + coef[pos],
                (false, true) => phi = phi - coef[pos],
                _ => {}
            }
            acc[order[pos]] = acc[order[pos]] + phi;
        }
    }
}

/// KNN Shapley values aligned with the order of `train`.
pub fn knn_svs_dense<T: Scalar>(train: &[DeepFeature<T>], test: &[DeepFeature<T>], k: usize) -> Result<Vec<T>> {
    validate(train, test, k)?;
    let n = train.len();
    let k = k.min(n);
    let coef = step_coefficients::<T>(n, k);
    let refs: Vec<&DeepFeature<T>> = train.iter().collect();

    let partials: Vec<Vec<T>> = test
        .par_chunks(TEST_CHUNK)
        .map(|chunk| {
            let mut acc = vec![T::zero(); n];
            for t in chunk {
                accumulate_test_point(&refs, t, &coef, &mut acc);
            }
            acc
        })
        .collect();

    let mut total = vec![T::zero(); n];
    for part in &partials {
        for (t, &p) in total.iter_mut().zip(part) {
            *t = *t + p;
        }
    }
    let denom = T::from_count(test.len() * test[0].labels.len());
    Ok(total.into_iter().map(|v| v / denom).collect())
}

/// KNN Shapley value of every training point, keyed by point id.
pub fn compute_knn_svs<T: Scalar>(
    train: &[DeepFeature<T>],
    test: &[DeepFeature<T>],
    k: usize,
) -> Result<BTreeMap<PointId, T>> {
    let dense = knn_svs_dense(train, test, k)?;
    Ok(train.iter().map(|p| p.point_id).zip(dense).collect())
}

/// Utility whose exact Shapley values the recursion computes: among the
/// `min(k, |S|)` coalition members nearest to `test_point`, the number whose
/// label matches divided by `k`, averaged over label dimensions.
pub fn knn_utility<T: Scalar>(coalition: &[&DeepFeature<T>], test_point: &DeepFeature<T>, k: usize) -> Result<T> {
    if k == 0 {
        return Err(ValuationError::InvalidK);
    }
    if coalition.is_empty() {
        return Ok(T::zero());
    }
    for p in coalition {
        if p.vector.len() != test_point.vector.len() {
            return Err(ValuationError::DimensionMismatch {
                point: p.point_id,
                expected: test_point.vector.len(),
                found: p.vector.len(),
            });
        }
        if p.labels.len() != test_point.labels.len() {
            return Err(ValuationError::LabelMismatch {
                point: p.point_id,
                expected: test_point.labels.len(),
                found: p.labels.len(),
            });
        }
    }
    if test_point.labels.is_empty() {
        return Err(ValuationError::Empty("label vector"));
    }
    let order = neighbor_order(coalition, &test_point.vector);
    let nearest = &order[..k.min(coalition.len())];
    let mut total = T::zero();
    for (dim, &y) in test_point.labels.iter().enumerate() {
        let hits = nearest.iter().filter(|&&i| coalition[i].labels[dim] == y).count();
        total = total + T::from_count(hits) / T::from_count(k);
    }
    Ok(total / T::from_count(test_point.labels.len()))
}
