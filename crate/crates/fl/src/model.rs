use std::ops::{Add, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{FlError, Result};

/// Flat parameter vector (weights and biases of every layer).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Params(pub Vec<f64>);

impl Params {
    pub fn zeros(len: usize) -> Self {
        Params(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `self += scale * other`
    pub fn add_scaled(&mut self, other: &Params, scale: f64) -> Result<()> {
        if self.len() != other.len() {
            return Err(FlError::ParamMismatch(self.len(), other.len()));
        }
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += scale * b;
        }
        Ok(())
    }

    pub fn scaled(&self, scale: f64) -> Params {
        Params(self.0.iter().map(|x| x * scale).collect())
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Params) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Add for &Params {
    type Output = Params;

    fn add(self, rhs: &Params) -> Params {
        assert_eq!(self.len(), rhs.len(), "parameter length mismatch");
        Params(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &Params {
    type Output = Params;

    fn sub(self, rhs: &Params) -> Params {
        assert_eq!(self.len(), rhs.len(), "parameter length mismatch");
        Params(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelShape {
    pub d_in: usize,
    pub d_hidden: usize,
    pub n_labels: usize,
}

impl ModelShape {
    pub fn n_params(&self) -> usize {
        self.d_in * self.d_hidden + self.d_hidden + self.d_hidden * self.n_labels + self.n_labels
    }

    /// Index ranges of each parameter block inside `Params`.
    pub fn w1(&self) -> std::ops::Range<usize> {
        0..self.d_in * self.d_hidden
    }

    pub fn b1(&self) -> std::ops::Range<usize> {
        let s = self.d_in * self.d_hidden;
        s..s + self.d_hidden
    }

    pub fn w2(&self) -> std::ops::Range<usize> {
        let s = self.b1().end;
        s..s + self.d_hidden * self.n_labels
    }

    pub fn b2(&self) -> std::ops::Range<usize> {
        let s = self.w2().end;
        s..s + self.n_labels
    }
}

/// One tanh hidden layer feeding independent sigmoid scores per label.
///
/// Weights are row-major: `w1[i * d_hidden + j]` connects input `i` to hidden
/// unit `j`, `w2[j * n_labels + l]` connects hidden `j` to label `l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub shape: ModelShape,
    pub params: Params,
}

/// Intermediate values of a forward pass kept for backpropagation.
pub(crate) struct Activations {
    pub hidden: Vec<f64>,
    pub logits: Vec<f64>,
}

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn init(shape: ModelShape, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Params::zeros(shape.n_params());
        let l1 = (6.0 / (shape.d_in + shape.d_hidden) as f64).sqrt();
        for w in &mut params.0[shape.w1()] {
            *w = rng.random_range(-l1..l1);
        }
        let l2 = (6.0 / (shape.d_hidden + shape.n_labels) as f64).sqrt();
        for w in &mut params.0[shape.w2()] {
            *w = rng.random_range(-l2..l2);
        }
        Mlp { shape, params }
    }

    pub fn with_params(&self, params: Params) -> Result<Self> {
        if params.len() != self.params.len() {
            return Err(FlError::ParamMismatch(self.params.len(), params.len()));
        }
        Ok(Mlp {
            shape: self.shape,
            params,
        })
    }

    pub(crate) fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.shape.d_in {
            return Err(FlError::ShapeMismatch {
                expected: self.shape.d_in,
                found: x.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn forward(&self, x: &[f64]) -> Activations {
        let s = &self.shape;
        let p = &self.params.0;
        let w1 = &p[s.w1()];
        let mut hidden = p[s.b1()].to_vec();
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let row = &w1[i * s.d_hidden..(i + 1) * s.d_hidden];
            for (h, w) in hidden.iter_mut().zip(row) {
                *h += xi * w;
            }
        }
        for h in hidden.iter_mut() {
            *h = h.tanh();
        }
        let w2 = &p[s.w2()];
        let mut logits = p[s.b2()].to_vec();
        for (j, &hj) in hidden.iter().enumerate() {
            let row = &w2[j * s.n_labels..(j + 1) * s.n_labels];
            for (z, w) in logits.iter_mut().zip(row) {
                *z += hj * w;
            }
        }
        Activations { hidden, logits }
    }

    /// Post-tanh hidden activations: the deep feature vector of `x`.
    pub fn hidden(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.forward(x).hidden)
    }

    /// Per-label probabilities.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.forward(x).logits.into_iter().map(sigmoid).collect())
    }

    /// Adds `grad`-shaped accumulators for one example with output error
    /// `dlogits` (derivative of the loss with respect to the logits).
    pub(crate) fn backward(&self, x: &[f64], act: &Activations, dlogits: &[f64], grad: &mut [f64]) {
        let s = &self.shape;
        let p = &self.params.0;
        let w2 = &p[s.w2()];
        let (w1g, rest) = grad.split_at_mut(s.b1().start);
        let (b1g, rest) = rest.split_at_mut(s.d_hidden);
        let (w2g, b2g) = rest.split_at_mut(s.d_hidden * s.n_labels);

        for (g, d) in b2g.iter_mut().zip(dlogits) {
            *g += d;
        }
        let mut dpre = vec![0.0; s.d_hidden];
        for (j, &hj) in act.hidden.iter().enumerate() {
            let row = &w2[j * s.n_labels..(j + 1) * s.n_labels];
            let grow = &mut w2g[j * s.n_labels..(j + 1) * s.n_labels];
            let mut dh = 0.0;
            for ((g, &w), &d) in grow.iter_mut().zip(row).zip(dlogits) {
                *g += hj * d;
                dh += w * d;
            }
            dpre[j] = dh * (1.0 - hj * hj);
        }
        for (g, d) in b1g.iter_mut().zip(&dpre) {
            *g += d;
        }
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let grow = &mut w1g[i * s.d_hidden..(i + 1) * s.d_hidden];
            for (g, d) in grow.iter_mut().zip(&dpre) {
                *g += xi * d;
            }
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of logit `z` against label `y`, computed stably.
pub(crate) fn bce_with_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - y * z + (-z.abs()).exp().ln_1p()
}
