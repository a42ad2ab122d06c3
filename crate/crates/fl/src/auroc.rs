use rayon::prelude::*;

use crate::model::Mlp;
use crate::{FlError, Result};

/// Area under the ROC curve via the Mann-Whitney rank statistic, with tied
/// scores sharing their mid-rank. `None` when either class is absent.
pub fn auroc(scores: &[f64], labels: &[u8]) -> Option<f64> {
    debug_assert_eq!(scores.len(), labels.len());
    let positives = labels.iter().filter(|&&y| y == 1).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // 1-based ranks start+1 ..= end share their mean.
        let mid_rank = (start + 1 + end) as f64 / 2.0;
        let hits = order[start..end].iter().filter(|&&i| labels[i] == 1).count();
        rank_sum += mid_rank * hits as f64;
        start = end;
    }
    let p = positives as f64;
    let n = negatives as f64;
    Some((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Mean AUROC over the label dimensions that contain both classes.
pub fn macro_auroc(scores: &[Vec<f64>], labels: &[&[u8]]) -> Result<f64> {
    let n_labels = labels.first().map_or(0, |l| l.len());
    let mut total = 0.0;
    let mut scored = 0usize;
    let mut column_scores = vec![0.0; scores.len()];
    let mut column_labels = vec![0u8; labels.len()];
    for dim in 0..n_labels {
        for (i, (s, y)) in scores.iter().zip(labels).enumerate() {
            column_scores[i] = s[dim];
            column_labels[i] = y[dim];
        }
        if let Some(a) = auroc(&column_scores, &column_labels) {
            total += a;
            scored += 1;
        }
    }
    if scored == 0 {
        return Err(FlError::NoScorableLabel);
    }
    Ok(total / scored as f64)
}

/// Macro-averaged AUROC of `model` on `test`.
pub fn validate(model: &Mlp, test: &[ddval_core::Point]) -> Result<f64> {
    let scores = test
        .par_iter()
        .map(|p| model.predict(&p.features))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<&[u8]> = test.iter().map(|p| p.labels.as_slice()).collect();
    macro_auroc(&scores, &labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_and_inverted() {
        assert_eq!(auroc(&[0.1, 0.2, 0.8, 0.9], &[0, 0, 1, 1]), Some(1.0));
        assert_eq!(auroc(&[0.9, 0.8, 0.2, 0.1], &[0, 0, 1, 1]), Some(0.0));
    }

    #[test]
    fn three_of_four_pairs() {
        assert_eq!(auroc(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]), Some(0.75));
    }

    #[test]
    fn ties_count_half() {
        assert_eq!(auroc(&[0.5, 0.5], &[0, 1]), Some(0.5));
        assert_eq!(auroc(&[0.2, 0.5, 0.5, 0.9], &[0, 0, 1, 1]), Some(0.875));
    }

    #[test]
    fn matches_pair_counting() {
        let scores = [0.3, 0.1, 0.3, 0.7, 0.2, 0.7, 0.3, 0.9];
        let labels = [1, 0, 0, 1, 1, 0, 1, 1];
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for i in 0..8 {
            for j in 0..8 {
                if labels[i] == 1 && labels[j] == 0 {
                    pairs += 1.0;
                    wins += if scores[i] > scores[j] {
                        1.0
                    } else if scores[i] == scores[j] {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        let got = auroc(&scores, &labels).unwrap();
        assert!((got - wins / pairs).abs() < 1e-15);
    }

    #[test]
    fn single_class_dimensions_are_skipped() {
        let scores = vec![vec![0.1, 0.9], vec![0.8, 0.3], vec![0.2, 0.4]];
        let labels: Vec<&[u8]> = vec![&[0, 1], &[1, 1], &[0, 1]];
        assert_eq!(macro_auroc(&scores, &labels).unwrap(), 1.0);
        let flat: Vec<&[u8]> = vec![&[1, 1], &[1, 1], &[1, 1]];
        assert!(matches!(macro_auroc(&scores, &flat), Err(FlError::NoScorableLabel)));
    }
}
