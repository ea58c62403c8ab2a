// Copyright 2026 The rbert Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

use ndarray::{Array2, Axis};
use rand::Rng;

use super::param::{ParamId, ParamStore};
use super::Mode;
use crate::error::{RbertError, Result};

/// `x·Wᵀ + b`, with `x: n×p`, `W: q×p`, `b: 1×q`.
pub fn linear_forward(x: &Array2<f64>, weight: &Array2<f64>, bias: &Array2<f64>) -> Result<Array2<f64>> {
    let (_, p) = x.dim();
    let (q, wp) = weight.dim();
    if p != wp || bias.dim() != (1, q) {
        return Err(RbertError::Shape(format!(
            "linear: input {:?}, weight {:?}, bias {:?}",
            x.dim(),
            weight.dim(),
            bias.dim()
        )));
    }
    Ok(x.dot(&weight.t()) + bias)
}

/// Returns `(dx, dW, db)` for `y = x·Wᵀ + b`.
pub fn linear_backward(
    x: &Array2<f64>,
    weight: &Array2<f64>,
    dy: &Array2<f64>,
) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
    let dx = dy.dot(weight);
    let dw = dy.t().dot(x);
    let db = dy.sum_axis(Axis(0)).insert_axis(Axis(0));
    (dx, dw, db)
}

/// Affine layer backed by two store entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: ParamId,
}

impl Linear {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        weight_name: impl Into<String>,
        bias_name: impl Into<String>,
        in_dim: usize,
        out_dim: usize,
        rng: &mut R,
    ) -> Self {
        let weight = store.add_glorot(weight_name, out_dim, in_dim, rng);
        let bias = store.add_zeros(bias_name, 1, out_dim);
        Linear { weight, bias }
    }

    pub fn in_dim(&self, store: &ParamStore) -> usize {
        store.value(self.weight).ncols()
    }

    pub fn out_dim(&self, store: &ParamStore) -> usize {
        store.value(self.weight).nrows()
    }

    pub fn forward(&self, store: &ParamStore, x: &Array2<f64>) -> Result<Array2<f64>> {
        linear_forward(x, store.value(self.weight), store.value(self.bias))
    }

    /// Accumulates parameter gradients and returns `dx`.
    pub fn backward(&self, store: &mut ParamStore, x: &Array2<f64>, dy: &Array2<f64>) -> Array2<f64> {
        let (dx, dw, db) = linear_backward(x, store.value(self.weight), dy);
        *store.grad_mut(self.weight) += &dw;
        *store.grad_mut(self.bias) += &db;
        dx
    }
}

const LN_EPS: f64 = 1e-5;

/// Per-row layer normalization with learned gain and shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerNorm {
    pub gain: ParamId,
    pub shift: ParamId,
}

#[derive(Debug, Clone)]
pub struct LayerNormCache {
    normalized: Array2<f64>,
    inv_std: Vec<f64>,
}

impl LayerNorm {
    pub fn new(store: &mut ParamStore, prefix: &str, dim: usize) -> Self {
        LayerNorm {
            gain: store.add_ones(format!("{prefix}.gain"), 1, dim),
            shift: store.add_zeros(format!("{prefix}.shift"), 1, dim),
        }
    }

    pub fn forward(&self, store: &ParamStore, x: &Array2<f64>) -> (Array2<f64>, LayerNormCache) {
        let d = x.ncols() as f64;
        let mut normalized = x.clone();
        let mut inv_std = Vec::with_capacity(x.nrows());
        for mut row in normalized.rows_mut() {
            let mean = row.sum() / d;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / d;
            let inv = 1.0 / (var + LN_EPS).sqrt();
            row.mapv_inplace(|v| (v - mean) * inv);
            inv_std.push(inv);
        }
        let y = &normalized * store.value(self.gain) + store.value(self.shift);
        (y, LayerNormCache { normalized, inv_std })
    }

    pub fn backward(&self, store: &mut ParamStore, cache: &LayerNormCache, dy: &Array2<f64>) -> Array2<f64> {
        let gain = store.value(self.gain).clone();
        *store.grad_mut(self.gain) += &(dy * &cache.normalized).sum_axis(Axis(0)).insert_axis(Axis(0));
        *store.grad_mut(self.shift) += &dy.sum_axis(Axis(0)).insert_axis(Axis(0));
        let dnorm = dy * &gain;
        layer_norm_backward(&cache.normalized, &cache.inv_std, &dnorm)
    }
}

/// Gradient through the normalization step alone, given `d(normalized)`.
pub fn layer_norm_backward(normalized: &Array2<f64>, inv_std: &[f64], dnorm: &Array2<f64>) -> Array2<f64> {
    let d = normalized.ncols() as f64;
    let mut dx = Array2::zeros(normalized.raw_dim());
    for (i, mut out) in dx.rows_mut().into_iter().enumerate() {
        let g = dnorm.row(i);
        let xh = normalized.row(i);
        let sum_g = g.sum();
        let sum_gx = g.dot(&xh);
        for j in 0..out.len() {
            out[j] = inv_std[i] / d * (d * g[j] - sum_g - xh[j] * sum_gx);
        }
    }
    dx
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)

/// GELU, tanh approximation.
pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + 0.044715 * x * x * x)).tanh())
}

pub fn gelu_grad(x: f64) -> f64 {
    let inner = GELU_C * (x + 0.044715 * x * x * x);
    let t = inner.tanh();
    let dinner = GELU_C * (1.0 + 3.0 * 0.044715 * x * x);
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * dinner
}

/// Row-wise softmax.
pub fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut p = logits.clone();
    for mut row in p.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    p
}

/// Mean cross-entropy over rows and its gradient w.r.t. the logits,
/// `(softmax − onehot) / n`.
pub fn softmax_cross_entropy(logits: &Array2<f64>, targets: &[usize]) -> Result<(f64, Array2<f64>)> {
    let (n, classes) = logits.dim();
    if targets.len() != n {
        return Err(RbertError::Shape(format!("{} targets for {n} rows", targets.len())));
    }
    if let Some(&t) = targets.iter().find(|&&t| t >= classes) {
        return Err(RbertError::InvalidArgument(format!("target {t} outside {classes} classes")));
    }
    let mut loss = 0.0;
    let mut grad = Array2::zeros((n, classes));
    for (i, &t) in targets.iter().enumerate() {
        let row = logits.row(i);
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let log_sum = row.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
        loss += log_sum - row[t];
        for j in 0..classes {
            grad[[i, j]] = (row[j] - log_sum).exp();
        }
        grad[[i, t]] -= 1.0;
    }
    let scale = 1.0 / n as f64;
    grad *= scale;
    Ok((loss * scale, grad))
}

/// Per-element multipliers drawn by [`dropout`]: 0 for dropped elements,
/// `1/(1−rate)` for kept ones. `None` means identity.
#[derive(Debug, Clone, Default)]
pub struct DropoutMask(Option<Array2<f64>>);

impl DropoutMask {
    pub fn backward(&self, dy: &Array2<f64>) -> Array2<f64> {
        match &self.0 {
            Some(mask) => dy * mask,
            None => dy.clone(),
        }
    }
}

/// Inverted dropout. Identity in eval mode or when `rate == 0`.
pub fn dropout(x: &Array2<f64>, rate: f64, mode: &mut Mode<'_>) -> (Array2<f64>, DropoutMask) {
    debug_assert!((0.0..1.0).contains(&rate));
    match mode {
        Mode::Train(rng) if rate > 0.0 => {
            let keep = 1.0 / (1.0 - rate);
            let mask = Array2::from_shape_simple_fn(x.raw_dim(), || {
                if rng.gen::<f64>() < rate {
                    0.0
                } else {
                    keep
                }
            });
            (x * &mask, DropoutMask(Some(mask)))
        }
        _ => (x.clone(), DropoutMask(None)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Mode;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Central finite difference of `f` w.r.t. every entry of `x`.
    fn numeric_grad(x: &Array2<f64>, h: f64, f: impl Fn(&Array2<f64>) -> f64) -> Array2<f64> {
        let mut g = Array2::zeros(x.raw_dim());
        for idx in 0..x.len() {
            let mut plus = x.clone();
            let mut minus = x.clone();
            plus.as_slice_mut().unwrap()[idx] += h;
            minus.as_slice_mut().unwrap()[idx] -= h;
            g.as_slice_mut().unwrap()[idx] = (f(&plus) - f(&minus)) / (2.0 * h);
        }
        g
    }

    fn max_rel_err(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-8))
            .fold(0.0, f64::max)
    }

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
        Array2::from_shape_simple_fn((rows, cols), || rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn linear_identity_and_hand_example() {
        let x = array![[1.0, 2.0], [3.0, -4.0]];
        let eye = Array2::eye(2);
        assert_eq!(linear_forward(&x, &eye, &Array2::zeros((1, 2))).unwrap(), x);
        let out = linear_forward(
            &array![[1.0, 2.0]],
            &array![[1.0, 1.0], [0.0, 1.0]],
            &array![[1.0, 0.0]],
        )
        .unwrap();
        assert_eq!(out, array![[4.0, 2.0]]);
        assert!(linear_forward(&x, &Array2::zeros((2, 3)), &Array2::zeros((1, 2))).is_err());
    }

    #[test]
    fn linear_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (x, w, b) = (random(4, 3, &mut rng), random(5, 3, &mut rng), random(1, 5, &mut rng));
        let probe = random(4, 5, &mut rng);
        let f = |x: &Array2<f64>, w: &Array2<f64>, b: &Array2<f64>| {
            (linear_forward(x, w, b).unwrap() * &probe).sum()
        };
        let (dx, dw, db) = linear_backward(&x, &w, &probe);
        let h = 1e-4;
        assert!(max_rel_err(&dx, &numeric_grad(&x, h, |x| f(x, &w, &b))) < 1e-4);
        assert!(max_rel_err(&dw, &numeric_grad(&w, h, |w| f(&x, w, &b))) < 1e-4);
        assert!(max_rel_err(&db, &numeric_grad(&b, h, |b| f(&x, &w, b))) < 1e-4);
    }

    #[test]
    fn layer_norm_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut store = ParamStore::new();
        let ln = LayerNorm::new(&mut store, "ln", 6);
        store.get_mut(ln.gain).value = random(1, 6, &mut rng);
        let x = random(3, 6, &mut rng);
        let probe = random(3, 6, &mut rng);
        let (_, cache) = ln.forward(&store, &x);
        let dx = ln.backward(&mut store, &cache, &probe);
        let num = numeric_grad(&x, 1e-5, |x| (ln.forward(&store, x).0 * &probe).sum());
        assert!(max_rel_err(&dx, &num) < 1e-4);
    }

    #[test]
    fn gelu_derivative() {
        for i in -40..=40 {
            let x = i as f64 / 10.0;
            let h = 1e-5;
            let num = (gelu(x + h) - gelu(x - h)) / (2.0 * h);
            assert!((gelu_grad(x) - num).abs() < 1e-8, "x = {x}");
        }
    }

    #[test]
    fn cross_entropy_uniform_and_confident() {
        let (loss, _) = softmax_cross_entropy(&Array2::zeros((3, 19)), &[0, 5, 18]).unwrap();
        assert!((loss - 19f64.ln()).abs() < 1e-12);
        let mut logits = Array2::zeros((1, 4));
        logits[[0, 2]] = 1e3;
        let (loss, _) = softmax_cross_entropy(&logits, &[2]).unwrap();
        assert!(loss < 1e-12);
        assert!(softmax_cross_entropy(&logits, &[4]).is_err());
    }

    #[test]
    fn cross_entropy_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let logits = random(4, 7, &mut rng) * 3.0;
        let targets = [0, 6, 3, 3];
        let (_, grad) = softmax_cross_entropy(&logits, &targets).unwrap();
        let num = numeric_grad(&logits, 1e-5, |l| softmax_cross_entropy(l, &targets).unwrap().0);
        assert!(max_rel_err(&grad, &num) < 1e-4);
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = softmax_rows(&(random(50, 19, &mut rng) * 20.0));
        for row in p.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dropout_modes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random(10, 10, &mut rng);
        assert_eq!(dropout(&x, 0.5, &mut Mode::Eval).0, x);
        assert_eq!(dropout(&x, 0.0, &mut Mode::Train(&mut rng)).0, x);
    }

    #[test]
    fn dropout_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = Array2::ones((1000, 1000));
        let (y, _) = dropout(&x, 0.1, &mut Mode::Train(&mut rng));
        let zeros = y.iter().filter(|&&v| v == 0.0).count() as f64 / 1e6;
        assert!((zeros - 0.1).abs() < 0.01, "zero fraction {zeros}");
        let mean = y.mean().unwrap();
        assert!((mean - 1.0).abs() < 0.01, "mean {mean}");
    }
}
