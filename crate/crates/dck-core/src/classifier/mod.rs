//! Feed-forward softmax classifier trained with minibatch Adam: ReLU hidden
//! layers, categorical cross-entropy, epoch shuffling from a dedicated RNG
//! stream, and validation-based early stopping. Single-threaded on purpose so
//! a fixed seed reproduces parameters bit for bit.

use ndarray::{linalg::general_mat_mul, Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::DckError;
use crate::rng::{stream, SeedPolicy};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "LayerRepr", try_from = "LayerRepr")]
pub struct Layer {
    /// Weight matrix, shape [out, in], row-major.
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

/// JSON shape of a layer: weights as nested row-major arrays.
#[derive(Serialize, Deserialize)]
struct LayerRepr {
    w: Vec<Vec<f64>>,
    b: Vec<f64>,
}

impl From<Layer> for LayerRepr {
    fn from(layer: Layer) -> Self {
        LayerRepr {
            w: layer.w.rows().into_iter().map(|r| r.to_vec()).collect(),
            b: layer.b.to_vec(),
        }
    }
}

impl TryFrom<LayerRepr> for Layer {
    type Error = String;

    fn try_from(repr: LayerRepr) -> std::result::Result<Self, String> {
        let rows = repr.w.len();
        let cols = repr.w.first().map_or(0, |r| r.len());
        if rows == 0 || cols == 0 {
            return Err("empty weight matrix".into());
        }
        if repr.w.iter().any(|r| r.len() != cols) {
            return Err("ragged weight matrix".into());
        }
        if repr.b.len() != rows {
            return Err("bias length does not match weight rows".into());
        }
        let flat: Vec<f64> = repr.w.into_iter().flatten().collect();
        let w = Array2::from_shape_vec((rows, cols), flat).map_err(|e| e.to_string())?;
        Ok(Layer {
            w,
            b: Array1::from_vec(repr.b),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub layers: Vec<Layer>,
}

impl NetworkParams {
    pub fn input_width(&self) -> usize {
        self.layers.first().map_or(0, |l| l.w.ncols())
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().map_or(0, |l| l.w.nrows())
    }

    /// Layer widths [in, h1, ..., out].
    pub fn widths(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.layers.len() + 1);
        w.push(self.input_width());
        w.extend(self.layers.iter().map(|l| l.w.nrows()));
        w
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(DckError::invalid("network has no layers"));
        }
        for (i, pair) in self.layers.windows(2).enumerate() {
            if pair[1].w.ncols() != pair[0].w.nrows() {
                return Err(DckError::shape(format!(
                    "layer {} outputs {} but layer {} expects {}",
                    i,
                    pair[0].w.nrows(),
                    i + 1,
                    pair[1].w.ncols()
                )));
            }
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.b.len() != l.w.nrows() {
                return Err(DckError::shape(format!("layer {i} bias width mismatch")));
            }
            if l.w.iter().chain(l.b.iter()).any(|v| !v.is_finite()) {
                return Err(DckError::invalid(format!("layer {i} has non-finite parameters")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub val_fraction: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub clip_floor: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden: vec![128, 128, 64],
            learning_rate: 1e-3,
            batch_size: 64,
            max_epochs: 200,
            patience: 20,
            val_fraction: 0.1,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            clip_floor: 1e-12,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0
            || self.batch_size == 0
            || self.max_epochs == 0
            || self.patience == 0
            || self.clip_floor <= 0.0
            || self.adam_eps <= 0.0
        {
            return Err(DckError::Config(
                "training hyperparameters must be positive".into(),
            ));
        }
        if !(0.0 < self.val_fraction && self.val_fraction <= 0.5) {
            return Err(DckError::Config("val_fraction must be in (0, 0.5]".into()));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return Err(DckError::Config("adam betas must be in [0,1)".into()));
        }
        Ok(())
    }
}

/// One row of the training log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

/// Forward pass for a batch; returns softmax probabilities (rows sum to 1).
pub fn forward_batch(params: &NetworkParams, features: ArrayView2<f64>) -> Result<Array2<f64>> {
    if features.ncols() != params.input_width() {
        return Err(DckError::shape(format!(
            "feature width {} != network input width {}",
            features.ncols(),
            params.input_width()
        )));
    }
    let mut a = features.to_owned();
    let last = params.layers.len() - 1;
    for (l, layer) in params.layers.iter().enumerate() {
        let mut h = a.dot(&layer.w.t());
        h += &layer.b;
        if l < last {
            h.mapv_inplace(|v| v.max(0.0));
        } else {
            softmax_rows(&mut h);
        }
        a = h;
    }
    Ok(a)
}

/// Forward pass for a single feature vector.
pub fn forward(params: &NetworkParams, features: &[f64]) -> Result<Vec<f64>> {
    let x = Array2::from_shape_vec((1, features.len()), features.to_vec())
        .map_err(|e| DckError::shape(e.to_string()))?;
    Ok(forward_batch(params, x.view())?.row(0).to_vec())
}

fn softmax_rows(h: &mut Array2<f64>) {
    for mut row in h.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        for v in row.iter_mut() {
            *v /= total;
        }
    }
}

/// Mean categorical cross-entropy of predicted probabilities against integer
/// labels, with probabilities clipped to [floor, 1 - floor] inside the log.
pub fn loss(probs: ArrayView2<f64>, labels: &[usize], clip_floor: f64) -> Result<f64> {
    if probs.nrows() != labels.len() {
        return Err(DckError::shape("probability rows != labels"));
    }
    let mut total = 0.0;
    for (row, &label) in probs.rows().into_iter().zip(labels) {
        if label >= row.len() {
            return Err(DckError::shape(format!(
                "label {label} out of {} classes",
                row.len()
            )));
        }
        let p = row[label].clamp(clip_floor, 1.0 - clip_floor);
        total -= p.ln();
    }
    Ok(total / labels.len() as f64)
}

/// Per-layer gradients, same shapes as the parameters.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub dw: Vec<Array2<f64>>,
    pub db: Vec<Array1<f64>>,
}

/// Backpropagation for one batch; returns gradients and the batch loss.
pub fn backward(
    params: &NetworkParams,
    features: ArrayView2<f64>,
    labels: &[usize],
    clip_floor: f64,
) -> Result<(Gradients, f64)> {
    let n_layers = params.layers.len();
    let batch = features.nrows();
    if batch != labels.len() {
        return Err(DckError::shape("batch rows != labels"));
    }

    // Forward pass, caching pre-activations and activations.
    let mut activations: Vec<Array2<f64>> = Vec::with_capacity(n_layers + 1);
    activations.push(features.to_owned());
    let mut pre_activations: Vec<Array2<f64>> = Vec::with_capacity(n_layers);
    for (l, layer) in params.layers.iter().enumerate() {
        let mut h = activations[l].dot(&layer.w.t());
        h += &layer.b;
        pre_activations.push(h.clone());
        if l < n_layers - 1 {
            h.mapv_inplace(|v| v.max(0.0));
        } else {
            softmax_rows(&mut h);
        }
        activations.push(h);
    }

    let probs = &activations[n_layers];
    let batch_loss = loss(probs.view(), labels, clip_floor)?;

    // Softmax + cross-entropy: dL/dh_L = (p - onehot)/batch.
    let mut delta = probs.clone();
    for (i, &label) in labels.iter().enumerate() {
        delta[[i, label]] -= 1.0;
    }
    delta.mapv_inplace(|v| v / batch as f64);

    let mut dw: Vec<Array2<f64>> = params
        .layers
        .iter()
        .map(|l| Array2::zeros(l.w.dim()))
        .collect();
    let mut db: Vec<Array1<f64>> = params
        .layers
        .iter()
        .map(|l| Array1::zeros(l.b.len()))
        .collect();

    for l in (0..n_layers).rev() {
        general_mat_mul(1.0, &delta.t(), &activations[l], 0.0, &mut dw[l]);
        db[l].assign(&delta.sum_axis(Axis(0)));
        if l > 0 {
            let mut prev = delta.dot(&params.layers[l].w);
            prev.zip_mut_with(&pre_activations[l - 1], |d, &h| {
                if h <= 0.0 {
                    *d = 0.0;
                }
            });
            delta = prev;
        }
    }
    Ok((Gradients { dw, db }, batch_loss))
}

struct AdamState {
    m_w: Vec<Array2<f64>>,
    v_w: Vec<Array2<f64>>,
    m_b: Vec<Array1<f64>>,
    v_b: Vec<Array1<f64>>,
    t: u64,
}

impl AdamState {
    fn new(params: &NetworkParams) -> Self {
        AdamState {
            m_w: params.layers.iter().map(|l| Array2::zeros(l.w.dim())).collect(),
            v_w: params.layers.iter().map(|l| Array2::zeros(l.w.dim())).collect(),
            m_b: params.layers.iter().map(|l| Array1::zeros(l.b.len())).collect(),
            v_b: params.layers.iter().map(|l| Array1::zeros(l.b.len())).collect(),
            t: 0,
        }
    }

    fn step(&mut self, params: &mut NetworkParams, grads: &Gradients, config: &TrainConfig) {
        self.t += 1;
        let (b1, b2) = (config.adam_beta1, config.adam_beta2);
        let corr1 = 1.0 - b1.powi(self.t as i32);
        let corr2 = 1.0 - b2.powi(self.t as i32);
        let lr = config.learning_rate;
        let eps = config.adam_eps;
        for (l, layer) in params.layers.iter_mut().enumerate() {
            azip_update(
                layer.w.as_slice_mut().unwrap(),
                grads.dw[l].as_slice().unwrap(),
                self.m_w[l].as_slice_mut().unwrap(),
                self.v_w[l].as_slice_mut().unwrap(),
                b1,
                b2,
                corr1,
                corr2,
                lr,
                eps,
            );
            azip_update(
                layer.b.as_slice_mut().unwrap(),
                grads.db[l].as_slice().unwrap(),
                self.m_b[l].as_slice_mut().unwrap(),
                self.v_b[l].as_slice_mut().unwrap(),
                b1,
                b2,
                corr1,
                corr2,
                lr,
                eps,
            );
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn azip_update(
    param: &mut [f64],
    grad: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    b1: f64,
    b2: f64,
    corr1: f64,
    corr2: f64,
    lr: f64,
    eps: f64,
) {
    for i in 0..param.len() {
        m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
        v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
        let m_hat = m[i] / corr1;
        let v_hat = v[i] / corr2;
        param[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}

/// He-uniform weight initialization, zero biases, drawn from the weight-init
/// stream in layer order.
pub fn init_params(
    input_width: usize,
    hidden: &[usize],
    n_classes: usize,
    policy: &SeedPolicy,
) -> NetworkParams {
    let mut rng = policy.stream(stream::WEIGHT_INIT);
    let mut widths = vec![input_width];
    widths.extend_from_slice(hidden);
    widths.push(n_classes);
    let layers = widths
        .windows(2)
        .map(|pair| {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let limit = (6.0 / fan_in as f64).sqrt();
            let w = Array2::from_shape_fn((fan_out, fan_in), |_| rng.random_range(-limit..limit));
            Layer {
                w,
                b: Array1::zeros(fan_out),
            }
        })
        .collect();
    NetworkParams { layers }
}

/// Trains a classifier on the feature matrix. Returns the parameters of the
/// epoch with minimum validation loss and the per-epoch log.
pub fn train(
    features: &Array2<f64>,
    labels: &[usize],
    n_classes: usize,
    config: &TrainConfig,
    policy: &SeedPolicy,
) -> Result<(NetworkParams, Vec<EpochLog>)> {
    config.validate()?;
    let n = features.nrows();
    if n != labels.len() {
        return Err(DckError::shape("features/labels length mismatch"));
    }
    if n_classes < 2 {
        return Err(DckError::invalid("need at least 2 classes"));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(DckError::invalid(format!(
            "label {bad} out of {n_classes} classes"
        )));
    }

    let mut shuffle_rng = policy.stream(stream::TRAIN_SHUFFLE);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut shuffle_rng);
    let n_val = ((n as f64 * config.val_fraction).ceil() as usize).clamp(1, n - 1);
    let (val_idx, train_idx) = order.split_at(n_val);
    let val_idx = val_idx.to_vec();
    let mut train_idx = train_idx.to_vec();

    let take = |idx: &[usize]| -> (Array2<f64>, Vec<usize>) {
        let mut x = Array2::zeros((idx.len(), features.ncols()));
        let mut y = Vec::with_capacity(idx.len());
        for (row, &i) in idx.iter().enumerate() {
            x.row_mut(row).assign(&features.row(i));
            y.push(labels[i]);
        }
        (x, y)
    };
    let (val_x, val_y) = take(&val_idx);

    let mut params = init_params(features.ncols(), &config.hidden, n_classes, policy);
    let mut adam = AdamState::new(&params);

    let mut best_params = params.clone();
    let mut best_val = f64::INFINITY;
    let mut since_best = 0usize;
    let mut log = Vec::new();

    for epoch in 1..=config.max_epochs {
        train_idx.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        let mut seen = 0usize;
        for chunk in train_idx.chunks(config.batch_size) {
            let (batch_x, batch_y) = take(chunk);
            let (grads, batch_loss) = backward(&params, batch_x.view(), &batch_y, config.clip_floor)?;
            if !batch_loss.is_finite() {
                return Err(DckError::numeric(format!(
                    "training diverged (loss {batch_loss}) at epoch {epoch}"
                )));
            }
            adam.step(&mut params, &grads, config);
            epoch_loss += batch_loss * chunk.len() as f64;
            seen += chunk.len();
        }
        let train_loss = epoch_loss / seen as f64;
        let val_probs = forward_batch(&params, val_x.view())?;
        let val_loss = loss(val_probs.view(), &val_y, config.clip_floor)?;
        if !val_loss.is_finite() {
            return Err(DckError::numeric(format!(
                "training diverged (validation loss {val_loss}) at epoch {epoch}"
            )));
        }
        log.push(EpochLog {
            epoch,
            train_loss,
            val_loss,
        });
        if val_loss < best_val {
            best_val = val_loss;
            best_params = params.clone();
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= config.patience {
                break;
            }
        }
    }
    Ok((best_params, log))
}

/// Batch prediction; rows sum to one.
pub fn predict_proba(params: &NetworkParams, features: ArrayView2<f64>) -> Result<Array2<f64>> {
    params.validate()?;
    forward_batch(params, features)
}
