//! A small dense ReLU classifier trained with softmax loss and Adam.
//!
//! The network maps an input to two pre-softmax outputs `(u, v)`; the logit
//! `f = u - v` is the trained witness function of the two-sample test. The
//! empirical training value of `f` on samples `X ~ p`, `Y ~ q` is
//!
//! ```text
//! L_n[f] = 1/2 ( mean_X log D + mean_Y log(1-D) + 2 log 2 ),   D = e^f/(1+e^f),
//! ```
//!
//! which training maximizes (implemented as Adam descent on the mean softmax
//! cross-entropy, the same objective up to an additive constant when the
//! classes are balanced). Gradients are analytic and checked against central
//! finite differences in the tests.

use crate::linalg::Matrix;
use crate::num::{log_2_1md, log_2d, sigmoid};
use crate::rng::{tag, CounterRng};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("hidden_widths must be nonempty")]
    NoHiddenLayers,
    #[error("input dimension must be positive")]
    ZeroInputDim,
    #[error("input has {got} coordinates, the network expects {want}")]
    Dimension { got: usize, want: usize },
    #[error("training needs at least one sample per class")]
    EmptyTrainingSet,
    #[error("training diverged at epoch {epoch} (non-finite loss)")]
    Diverged { epoch: usize },
    #[error("malformed parameter container: {0}")]
    BadContainer(String),
}

/// Architecture of the classifier: dense ReLU layers, two linear outputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden_widths: Vec<usize>,
}

impl MlpSpec {
    pub const OUTPUT_DIM: usize = 2;

    pub fn new(input_dim: usize, hidden_widths: Vec<usize>) -> Result<Self, NnError> {
        if input_dim == 0 {
            return Err(NnError::ZeroInputDim);
        }
        if hidden_widths.is_empty() || hidden_widths.contains(&0) {
            return Err(NnError::NoHiddenLayers);
        }
        Ok(MlpSpec {
            input_dim,
            hidden_widths,
        })
    }

    fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_widths.len() + 1);
        let mut prev = self.input_dim;
        for &h in &self.hidden_widths {
            dims.push((h, prev));
            prev = h;
        }
        dims.push((Self::OUTPUT_DIM, prev));
        dims
    }
}

/// One dense layer, row-major `out × in` weights plus biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub out_dim: usize,
    pub in_dim: usize,
}

impl Layer {
    fn zeros(out_dim: usize, in_dim: usize) -> Self {
        Layer {
            w: vec![0.0; out_dim * in_dim],
            b: vec![0.0; out_dim],
            out_dim,
            in_dim,
        }
    }
}

/// Trained (or freshly initialized) parameters; immutable once built, safe
/// to share across threads for inference.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub spec: MlpSpec,
    pub layers: Vec<Layer>,
}

impl MlpParams {
    /// Uniform init on ±1/√fan_in for every weight and bias, deterministic
    /// in `seed`. The bias spread matters: with 1D inputs it is what spreads
    /// the ReLU hinges over the data range.
    pub fn init(spec: &MlpSpec, seed: u64) -> Self {
        let mut rng = CounterRng::new(seed, tag("mlp-init"));
        let layers = spec
            .layer_dims()
            .into_iter()
            .map(|(out, inp)| {
                let bound = 1.0 / (inp as f64).sqrt();
                let mut l = Layer::zeros(out, inp);
                for w in &mut l.w {
                    *w = rng.uniform(-bound, bound);
                }
                for b in &mut l.b {
                    *b = rng.uniform(-bound, bound);
                }
                l
            })
            .collect();
        MlpParams {
            spec: spec.clone(),
            layers,
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// The two pre-softmax outputs `(u, v)`.
    pub fn forward_outputs(&self, x: &[f64]) -> (f64, f64) {
        assert_eq!(x.len(), self.spec.input_dim, "input dimension");
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            next.clear();
            next.resize(layer.out_dim, 0.0);
            for r in 0..layer.out_dim {
                let row = &layer.w[r * layer.in_dim..(r + 1) * layer.in_dim];
                let mut s = layer.b[r];
                for (wv, xv) in row.iter().zip(&cur) {
                    s += wv * xv;
                }
                next[r] = if i + 1 < self.layers.len() {
                    s.max(0.0)
                } else {
                    s
                };
            }
            std::mem::swap(&mut cur, &mut next);
        }
        (cur[0], cur[1])
    }

    /// Logit `f(x) = u(x) - v(x)`.
    pub fn forward_logit(&self, x: &[f64]) -> f64 {
        let (u, v) = self.forward_outputs(x);
        u - v
    }

    pub fn try_forward_logit(&self, x: &[f64]) -> Result<f64, NnError> {
        if x.len() != self.spec.input_dim {
            return Err(NnError::Dimension {
                got: x.len(),
                want: self.spec.input_dim,
            });
        }
        Ok(self.forward_logit(x))
    }

    /// Logits over all rows of a sample matrix.
    pub fn logits(&self, m: &Matrix) -> Vec<f64> {
        m.iter_rows().map(|r| self.forward_logit(r)).collect()
    }
}

/// Training hyper-parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Pooled mini-batch size; batches beyond the last full one are dropped.
    /// A value of 0 means full batch.
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_betas: (f64, f64),
    pub adam_eps: f64,
    pub seed: u64,
    /// Optional global Lipschitz budget: after every step each layer is
    /// row-wise clipped so the product of per-layer operator-norm bounds
    /// stays at or below this value.
    pub weight_clip: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 100,
            learning_rate: 1e-3,
            adam_betas: (0.9, 0.999),
            adam_eps: 1e-8,
            seed: 0,
            weight_clip: None,
        }
    }
}

/// Per-epoch record of the empirical loss and training error.
#[derive(Debug, Clone, Default)]
pub struct TrainTrace {
    pub loss: Vec<f64>,
    pub train_error: Vec<f64>,
}

/// `L_n` on the given samples; always at most `log 2`.
pub fn empirical_loss(params: &MlpParams, x: &Matrix, y: &Matrix) -> f64 {
    let lx: f64 = x.iter_rows().map(|r| log_2d(params.forward_logit(r))).sum();
    let ly: f64 = y
        .iter_rows()
        .map(|r| log_2_1md(params.forward_logit(r)))
        .sum();
    0.5 * (lx / x.rows() as f64 + ly / y.rows() as f64)
}

/// Gradient buffers shaped like the parameters.
pub type Gradients = Vec<Layer>;

fn zero_grads(params: &MlpParams) -> Gradients {
    params
        .layers
        .iter()
        .map(|l| Layer::zeros(l.out_dim, l.in_dim))
        .collect()
}

/// Scratch for one forward/backward pass.
struct Scratch {
    /// Pre-activations per layer.
    pre: Vec<Vec<f64>>,
    /// Post-activations per layer (inputs to the next layer).
    act: Vec<Vec<f64>>,
    delta: Vec<Vec<f64>>,
}

impl Scratch {
    fn for_params(p: &MlpParams) -> Self {
        let pre: Vec<Vec<f64>> = p.layers.iter().map(|l| vec![0.0; l.out_dim]).collect();
        Scratch {
            act: pre.clone(),
            delta: pre.clone(),
            pre,
        }
    }
}

/// Forward pass keeping intermediates, then backward accumulation of
/// `coeff * d f(x) / d θ` into `grads`. Returns the logit.
fn forward_backward(
    params: &MlpParams,
    x: &[f64],
    coeff: f64,
    scratch: &mut Scratch,
    grads: &mut Gradients,
) -> f64 {
    let n_layers = params.layers.len();
    for (i, layer) in params.layers.iter().enumerate() {
        let (prev_acts, cur_acts) = scratch.act.split_at_mut(i);
        let input: &[f64] = if i == 0 { x } else { &prev_acts[i - 1] };
        for r in 0..layer.out_dim {
            let row = &layer.w[r * layer.in_dim..(r + 1) * layer.in_dim];
            let mut s = layer.b[r];
            for (wv, xv) in row.iter().zip(input) {
                s += wv * xv;
            }
            scratch.pre[i][r] = s;
            cur_acts[0][r] = if i + 1 < n_layers { s.max(0.0) } else { s };
        }
    }
    let logit = scratch.act[n_layers - 1][0] - scratch.act[n_layers - 1][1];
    // d logit / d outputs = (+1, -1), scaled by coeff.
    scratch.delta[n_layers - 1][0] = coeff;
    scratch.delta[n_layers - 1][1] = -coeff;
    for i in (0..n_layers).rev() {
        let layer = &params.layers[i];
        // Accumulate weight/bias gradients.
        let (head, tail) = scratch.delta.split_at_mut(i + 1);
        let delta = &head[i];
        let _ = tail;
        let input: &[f64] = if i == 0 { x } else { &scratch.act[i - 1] };
        let g = &mut grads[i];
        for r in 0..layer.out_dim {
            let d = delta[r];
            if d == 0.0 {
                continue;
            }
            let grow = &mut g.w[r * layer.in_dim..(r + 1) * layer.in_dim];
            for (gw, xv) in grow.iter_mut().zip(input) {
                *gw += d * xv;
            }
            g.b[r] += d;
        }
        if i == 0 {
            break;
        }
        // Propagate to the previous layer through the ReLU.
        let (prev_delta, cur_delta) = {
            let (a, b) = scratch.delta.split_at_mut(i);
            (&mut a[i - 1], &b[0])
        };
        for pd in prev_delta.iter_mut() {
            *pd = 0.0;
        }
        for r in 0..layer.out_dim {
            let d = cur_delta[r];
            if d == 0.0 {
                continue;
            }
            let row = &layer.w[r * layer.in_dim..(r + 1) * layer.in_dim];
            for (c, pd) in prev_delta.iter_mut().enumerate() {
                *pd += d * row[c];
            }
        }
        for (pd, pre) in prev_delta.iter_mut().zip(&scratch.pre[i - 1]) {
            if *pre <= 0.0 {
                *pd = 0.0;
            }
        }
    }
    logit
}

/// Analytic gradient of [`empirical_loss`] with respect to every parameter.
///
/// With `D = sigmoid(f)`: `∂L/∂f(x) = (1 - D(x)) / (2 n_X)` for `x ∈ X` and
/// `∂L/∂f(y) = -D(y) / (2 n_Y)` for `y ∈ Y`; the rest is backpropagation.
pub fn loss_gradient(params: &MlpParams, x: &Matrix, y: &Matrix) -> Gradients {
    let mut grads = zero_grads(params);
    let mut scratch = Scratch::for_params(params);
    let nx = x.rows() as f64;
    let ny = y.rows() as f64;
    for r in x.iter_rows() {
        let f = params.forward_logit(r);
        let coeff = (1.0 - sigmoid(f)) / (2.0 * nx);
        forward_backward(params, r, coeff, &mut scratch, &mut grads);
    }
    for r in y.iter_rows() {
        let f = params.forward_logit(r);
        let coeff = -sigmoid(f) / (2.0 * ny);
        forward_backward(params, r, coeff, &mut scratch, &mut grads);
    }
    grads
}

struct Adam {
    m: Gradients,
    v: Gradients,
    t: u64,
}

impl Adam {
    fn new(params: &MlpParams) -> Self {
        Adam {
            m: zero_grads(params),
            v: zero_grads(params),
            t: 0,
        }
    }

    /// One ascent step along `grads`.
    fn step(&mut self, params: &mut MlpParams, grads: &Gradients, cfg: &TrainConfig) {
        self.t += 1;
        let (b1, b2) = cfg.adam_betas;
        let c1 = 1.0 - b1.powi(self.t as i32);
        let c2 = 1.0 - b2.powi(self.t as i32);
        for (i, layer) in params.layers.iter_mut().enumerate() {
            let upd = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                *p += cfg.learning_rate * (*m / c1) / ((*v / c2).sqrt() + cfg.adam_eps);
            };
            for k in 0..layer.w.len() {
                upd(
                    &mut layer.w[k],
                    grads[i].w[k],
                    &mut self.m[i].w[k],
                    &mut self.v[i].w[k],
                );
            }
            for k in 0..layer.b.len() {
                upd(
                    &mut layer.b[k],
                    grads[i].b[k],
                    &mut self.m[i].b[k],
                    &mut self.v[i].b[k],
                );
            }
        }
    }
}

/// Row-wise clip so the product of per-layer operator-norm bounds stays at
/// or below `clip`. Hidden layers are bounded through the Frobenius norm
/// (row caps `c/√out`); the last layer through `‖w_u‖ + ‖w_v‖` (row caps
/// `c/2`), which dominates the logit's final-layer factor `‖w_u - w_v‖`.
fn clip_weights(params: &mut MlpParams, clip: f64) {
    let n = params.layers.len();
    let per_layer = clip.powf(1.0 / n as f64);
    for (i, layer) in params.layers.iter_mut().enumerate() {
        let row_cap = if i + 1 == n {
            per_layer / 2.0
        } else {
            per_layer / (layer.out_dim as f64).sqrt()
        };
        for r in 0..layer.out_dim {
            let row = &mut layer.w[r * layer.in_dim..(r + 1) * layer.in_dim];
            let nrm = row.iter().map(|w| w * w).sum::<f64>().sqrt();
            if nrm > row_cap {
                let s = row_cap / nrm;
                for w in row {
                    *w *= s;
                }
            }
        }
    }
}

/// Train a classifier on `X ~ p` (label 0) vs `Y ~ q` (label 1).
///
/// Batches are drawn by a seeded shuffle of the pooled labeled set each
/// epoch; the last incomplete batch is dropped. Everything is deterministic
/// in `(spec, cfg, data)`.
pub fn train(
    spec: &MlpSpec,
    cfg: &TrainConfig,
    x_tr: &Matrix,
    y_tr: &Matrix,
) -> Result<(MlpParams, TrainTrace), NnError> {
    if x_tr.rows() == 0 || y_tr.rows() == 0 {
        return Err(NnError::EmptyTrainingSet);
    }
    if x_tr.cols() != spec.input_dim || y_tr.cols() != spec.input_dim {
        return Err(NnError::Dimension {
            got: x_tr.cols(),
            want: spec.input_dim,
        });
    }
    let mut params = MlpParams::init(spec, cfg.seed);
    let mut adam = Adam::new(&params);
    let mut shuffle_rng = CounterRng::new(cfg.seed, tag("mlp-shuffle"));
    let pooled = x_tr.vstack(y_tr);
    let n = pooled.rows();
    let n_x = x_tr.rows();
    let batch = if cfg.batch_size == 0 || cfg.batch_size > n {
        n
    } else {
        cfg.batch_size
    };
    let mut scratch = Scratch::for_params(&params);
    let mut grads = zero_grads(&params);
    let mut trace = TrainTrace::default();
    for epoch in 0..cfg.epochs {
        let order = shuffle_rng.permutation(n);
        for chunk in order.chunks_exact(batch) {
            for g in grads.iter_mut() {
                g.w.iter_mut().for_each(|v| *v = 0.0);
                g.b.iter_mut().for_each(|v| *v = 0.0);
            }
            // Ascent gradient of the batch-mean objective: for label 0 the
            // logit gradient coefficient is (1 - D)/B, for label 1 it is
            // -D/B (mean cross-entropy, sign flipped to ascend L_n).
            let bf = chunk.len() as f64;
            for &idx in chunk {
                let row = pooled.row(idx);
                let f = params.forward_logit(row);
                let coeff = if idx < n_x {
                    (1.0 - sigmoid(f)) / bf
                } else {
                    -sigmoid(f) / bf
                };
                forward_backward(&params, row, coeff, &mut scratch, &mut grads);
            }
            adam.step(&mut params, &grads, cfg);
            if let Some(clip) = cfg.weight_clip {
                clip_weights(&mut params, clip);
            }
        }
        let loss = empirical_loss(&params, x_tr, y_tr);
        if !loss.is_finite() {
            return Err(NnError::Diverged { epoch });
        }
        let mut wrong = 0usize;
        for r in x_tr.iter_rows() {
            if params.forward_logit(r) < 0.0 {
                wrong += 1;
            }
        }
        for r in y_tr.iter_rows() {
            if params.forward_logit(r) >= 0.0 {
                wrong += 1;
            }
        }
        trace.loss.push(loss);
        trace.train_error.push(wrong as f64 / n as f64);
    }
    Ok((params, trace))
}

// ----------------------------------------------------------------------
// Binary parameter container: little-endian, a layer-count header, then per
// layer (out_dim: u32, in_dim: u32, row-major f64 weights, f64 biases).
// ----------------------------------------------------------------------

pub fn params_to_bytes(params: &MlpParams) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&(params.layers.len() as u32).to_le_bytes());
    for l in &params.layers {
        out.extend_from_slice(&(l.out_dim as u32).to_le_bytes());
        out.extend_from_slice(&(l.in_dim as u32).to_le_bytes());
        for w in &l.w {
            out.extend_from_slice(&w.to_le_bytes());
        }
        for b in &l.b {
            out.extend_from_slice(&b.to_le_bytes());
        }
    }
    out
}

pub fn params_from_bytes(bytes: &[u8]) -> Result<MlpParams, NnError> {
    let mut pos = 0usize;
    let take_u32 = |pos: &mut usize| -> Result<u32, NnError> {
        let end = *pos + 4;
        let s = bytes
            .get(*pos..end)
            .ok_or_else(|| NnError::BadContainer("truncated header".into()))?;
        *pos = end;
        Ok(u32::from_le_bytes(s.try_into().unwrap()))
    };
    let take_f64s = |pos: &mut usize, n: usize| -> Result<Vec<f64>, NnError> {
        let end = *pos + 8 * n;
        let s = bytes
            .get(*pos..end)
            .ok_or_else(|| NnError::BadContainer("truncated payload".into()))?;
        *pos = end;
        Ok(s.chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    };
    let n_layers = take_u32(&mut pos)? as usize;
    if n_layers < 2 {
        return Err(NnError::BadContainer(format!(
            "need at least 2 layers, got {n_layers}"
        )));
    }
    let mut layers = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let out_dim = take_u32(&mut pos)? as usize;
        let in_dim = take_u32(&mut pos)? as usize;
        if out_dim == 0 || in_dim == 0 {
            return Err(NnError::BadContainer("zero layer dimension".into()));
        }
        let w = take_f64s(&mut pos, out_dim * in_dim)?;
        let b = take_f64s(&mut pos, out_dim)?;
        layers.push(Layer {
            w,
            b,
            out_dim,
            in_dim,
        });
    }
    if pos != bytes.len() {
        return Err(NnError::BadContainer("trailing bytes".into()));
    }
    for win in layers.windows(2) {
        if win[1].in_dim != win[0].out_dim {
            return Err(NnError::BadContainer("inconsistent layer shapes".into()));
        }
    }
    let last = layers.last().unwrap();
    if last.out_dim != MlpSpec::OUTPUT_DIM {
        return Err(NnError::BadContainer(format!(
            "output dim {} != 2",
            last.out_dim
        )));
    }
    let spec = MlpSpec {
        input_dim: layers[0].in_dim,
        hidden_widths: layers[..layers.len() - 1]
            .iter()
            .map(|l| l.out_dim)
            .collect(),
    };
    if !layers
        .iter()
        .all(|l| l.w.iter().chain(&l.b).all(|v| v.is_finite()))
    {
        return Err(NnError::BadContainer("non-finite parameter".into()));
    }
    Ok(MlpParams { spec, layers })
}
