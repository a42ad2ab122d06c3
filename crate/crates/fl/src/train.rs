use ddval_core::Point;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{bce_with_logit, sigmoid, Mlp, Params};
use crate::{FlError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.1,
            epochs: 1,
            batch_size: 32,
        }
    }
}

/// Mean over the batch of the per-label binary cross-entropy summed over
/// labels, and its gradient with respect to every parameter.
pub fn batch_loss_and_grad(model: &Mlp, batch: &[&Point]) -> Result<(f64, Params)> {
    let mut grad = vec![0.0; model.params.len()];
    let mut loss = 0.0;
    let inv = 1.0 / batch.len().max(1) as f64;
    let mut dlogits = vec![0.0; model.shape.n_labels];
    for p in batch {
        model.check_input(&p.features)?;
        let act = model.forward(&p.features);
        for ((d, &z), &y) in dlogits.iter_mut().zip(&act.logits).zip(&p.labels) {
            let y = y as f64;
            loss += bce_with_logit(z, y) * inv;
            *d = (sigmoid(z) - y) * inv;
        }
        model.backward(&p.features, &act, &dlogits, &mut grad);
    }
    Ok((loss, Params(grad)))
}

/// Runs `epochs` passes of mini-batch SGD from `model` over `data` and returns
/// the parameter change. `model` itself is left untouched.
pub fn train_local(model: &Mlp, data: &[Point], cfg: &TrainConfig, seed: u64) -> Result<Params> {
    if data.is_empty() {
        return Err(FlError::EmptyClientData);
    }
    if !(cfg.lr.is_finite() && cfg.lr >= 0.0) {
        return Err(FlError::InvalidLearningRate(cfg.lr));
    }
    if cfg.batch_size == 0 {
        return Err(FlError::InvalidConfig("batch_size must be positive".into()));
    }
    let mut local = model.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&Point> = chunk.iter().map(|&i| &data[i]).collect();
            let (_, grad) = batch_loss_and_grad(&local, &batch)?;
            local.params.add_scaled(&grad, -cfg.lr)?;
        }
    }
    Ok(&local.params - &model.params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelShape;
    use ddval_core::{ClientId, PointId, SubjectId};

    fn point(features: Vec<f64>, labels: Vec<u8>) -> Point {
        Point {
            point_id: PointId(0),
            subject_id: SubjectId(0),
            client_id: ClientId(0),
            features,
            labels,
            flips: 0,
        }
    }

    fn model() -> Mlp {
        Mlp::init(
            ModelShape {
                d_in: 3,
                d_hidden: 5,
                n_labels: 2,
            },
            4,
        )
    }

    #[test]
    fn zero_learning_rate_gives_zero_delta() {
        let data = vec![point(vec![1.0, 0.5, -0.2], vec![1, 0]); 10];
        let cfg = TrainConfig {
            lr: 0.0,
            ..Default::default()
        };
        let delta = train_local(&model(), &data, &cfg, 1).unwrap();
        assert!(delta.0.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn single_step_is_negative_scaled_gradient() {
        let m = model();
        let p = point(vec![0.4, -1.2, 0.7], vec![1, 0]);
        let cfg = TrainConfig {
            lr: 0.05,
            epochs: 1,
            batch_size: 32,
        };
        let delta = train_local(&m, std::slice::from_ref(&p), &cfg, 0).unwrap();

        // Central differences of the loss, independent of backpropagation.
        let eps = 1e-6;
        let loss = |params: &Params| {
            let probe = m.with_params(params.clone()).unwrap();
            batch_loss_and_grad(&probe, &[&p]).unwrap().0
        };
        for i in 0..m.params.len() {
            let mut up = m.params.clone();
            let mut down = m.params.clone();
            up.0[i] += eps;
            down.0[i] -= eps;
            let numeric = -cfg.lr * (loss(&up) - loss(&down)) / (2.0 * eps);
            let scale = numeric.abs().max(delta.0[i].abs()).max(1e-9);
            assert!(
                (numeric - delta.0[i]).abs() / scale < 1e-5,
                "param {i}: {numeric} vs {}",
                delta.0[i]
            );
        }
    }

    #[test]
    fn same_seed_same_delta() {
        let data: Vec<Point> = (0..40)
            .map(|i| point(vec![i as f64 / 40.0, 1.0, -0.5], vec![(i % 2) as u8, 1]))
            .collect();
        let cfg = TrainConfig {
            batch_size: 8,
            epochs: 2,
            ..Default::default()
        };
        let a = train_local(&model(), &data, &cfg, 9).unwrap();
        let b = train_local(&model(), &data, &cfg, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.norm() > 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        let cfg = TrainConfig::default();
        assert!(matches!(
            train_local(&model(), &[], &cfg, 0),
            Err(FlError::EmptyClientData)
        ));
        let data = vec![point(vec![1.0, 0.0, 0.0], vec![1, 1])];
        let bad = TrainConfig { lr: -1.0, ..cfg };
        assert!(matches!(
            train_local(&model(), &data, &bad, 0),
            Err(FlError::InvalidLearningRate(_))
        ));
    }
}
