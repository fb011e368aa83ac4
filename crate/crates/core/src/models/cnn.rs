//! Small convolutional network with manual backpropagation.
//!
//! Layer stack: N conv blocks (3x3-style convolution, stride 1, optional
//! zero padding, ReLU, optional 2x2 max-pool) feeding a dense stack with a
//! sigmoid or softmax head. The post-ReLU output of the last conv layer is
//! the Grad-CAM target: both the feature maps and the gradient of any class
//! score with respect to them are exposed.
//!
//! Geometry is validated at construction, so inference only has to check
//! that the input matches the declared shape.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::rng;
use crate::tensor::Tensor;

use super::{loss, Predictor, Trainable};

/// Final activation. `Sigmoid` requires a single output unit and models
/// P(class 1); `Softmax` requires one unit per class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    Sigmoid,
    Softmax,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    /// `[out_channels, in_channels, kh, kw]`.
    kernel: Tensor,
    bias: Vec<f64>,
    /// Zero padding on each spatial border.
    pad: usize,
    /// Whether a 2x2 max-pool follows the ReLU.
    pool: bool,
}

impl ConvLayer {
    pub fn new(kernel: Tensor, bias: Vec<f64>, pad: usize, pool: bool) -> Result<Self> {
        if kernel.rank() != 4 {
            return Err(Error::InvalidArgument(format!(
                "conv kernel must be rank 4, got shape {:?}",
                kernel.shape()
            )));
        }
        if bias.len() != kernel.shape()[0] {
            return Err(Error::InvalidArgument(format!(
                "conv bias length {} != out channels {}",
                bias.len(),
                kernel.shape()[0]
            )));
        }
        Ok(Self {
            kernel,
            bias,
            pad,
            pool,
        })
    }

    pub fn kernel(&self) -> &Tensor {
        &self.kernel
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn pad(&self) -> usize {
        self.pad
    }

    pub fn pool(&self) -> bool {
        self.pool
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// `[out, in]`.
    weight: Tensor,
    bias: Vec<f64>,
}

impl DenseLayer {
    pub fn new(weight: Tensor, bias: Vec<f64>) -> Result<Self> {
        if weight.rank() != 2 {
            return Err(Error::InvalidArgument(format!(
                "dense weight must be rank 2, got shape {:?}",
                weight.shape()
            )));
        }
        if bias.len() != weight.shape()[0] {
            return Err(Error::InvalidArgument(format!(
                "dense bias length {} != output dim {}",
                bias.len(),
                weight.shape()[0]
            )));
        }
        Ok(Self { weight, bias })
    }

    pub fn weight(&self) -> &Tensor {
        &self.weight
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmallCnn {
    name: String,
    input_shape: [usize; 3],
    conv_layers: Vec<ConvLayer>,
    dense_layers: Vec<DenseLayer>,
    head: Head,
}

/// Everything the backward pass needs from one forward pass.
struct Cache {
    /// Input to each conv layer.
    conv_inputs: Vec<Tensor>,
    /// Post-ReLU output of each conv layer.
    feature_maps: Vec<Tensor>,
    /// For pooled layers: source flat index in the feature map per pooled
    /// cell (first maximum wins ties, so routing is deterministic).
    pool_sources: Vec<Option<Vec<usize>>>,
    /// Input vector to each dense layer.
    dense_inputs: Vec<Vec<f64>>,
    probs: Vec<f64>,
}

/// Parameter gradients in `parameters()` order plus the gradient with
/// respect to the last conv layer's post-ReLU output.
struct Gradients {
    flat: Vec<f64>,
    feature_map_grad: Vec<f64>,
}

impl SmallCnn {
    /// Validates the whole geometry chain: channel counts through the conv
    /// stack, spatial shrinkage from padding and pooling, dense dimensions,
    /// and the head/output-arity pairing.
    pub fn from_parts(
        name: impl Into<String>,
        input_shape: [usize; 3],
        conv_layers: Vec<ConvLayer>,
        dense_layers: Vec<DenseLayer>,
        head: Head,
    ) -> Result<Self> {
        if conv_layers.is_empty() || dense_layers.is_empty() {
            return Err(Error::InvalidArgument(String::from(
                "SmallCnn needs at least one conv layer and one dense layer",
            )));
        }
        let (mut c, mut h, mut w) = (input_shape[0], input_shape[1], input_shape[2]);
        for (i, layer) in conv_layers.iter().enumerate() {
            let ks = layer.kernel.shape();
            if ks[1] != c {
                return Err(Error::LayerShape {
                    layer: i,
                    message: format!("kernel expects {} input channels, got {}", ks[1], c),
                });
            }
            let (kh, kw) = (ks[2], ks[3]);
            let h_out = (h + 2 * layer.pad).checked_sub(kh - 1).unwrap_or(0);
            let w_out = (w + 2 * layer.pad).checked_sub(kw - 1).unwrap_or(0);
            if h_out == 0 || w_out == 0 {
                return Err(Error::LayerShape {
                    layer: i,
                    message: format!("{kh}x{kw} kernel too large for {h}x{w} input"),
                });
            }
            (c, h, w) = (ks[0], h_out, w_out);
            if layer.pool {
                if h < 2 || w < 2 {
                    return Err(Error::LayerShape {
                        layer: i,
                        message: format!("2x2 pool needs at least 2x2 input, got {h}x{w}"),
                    });
                }
                h /= 2;
                w /= 2;
            }
        }
        let mut flat = c * h * w;
        for (j, layer) in dense_layers.iter().enumerate() {
            let ws = layer.weight.shape();
            if ws[1] != flat {
                return Err(Error::LayerShape {
                    layer: conv_layers.len() + j,
                    message: format!("dense expects input dim {}, got {}", ws[1], flat),
                });
            }
            flat = ws[0];
        }
        match head {
            Head::Sigmoid if flat != 1 => {
                return Err(Error::InvalidArgument(format!(
                    "sigmoid head needs 1 output unit, got {flat}"
                )))
            }
            Head::Softmax if flat < 2 => {
                return Err(Error::InvalidArgument(format!(
                    "softmax head needs at least 2 output units, got {flat}"
                )))
            }
            _ => {}
        }
        Ok(Self {
            name: name.into(),
            input_shape,
            conv_layers,
            dense_layers,
            head,
        })
    }

    /// Default reference architecture: two conv blocks (8 then 16 kernels,
    /// 3x3, stride 1, padding 1), each with ReLU and 2x2 max-pool, one dense
    /// layer, softmax over 2 classes. Weights are He-uniform from the seed;
    /// biases start at zero.
    pub fn reference(name: impl Into<String>, input_shape: [usize; 3], seed: u64) -> Result<Self> {
        let name = name.into();
        let mut conv_layers = Vec::new();
        let (mut c, mut h, mut w) = (input_shape[0], input_shape[1], input_shape[2]);
        for (i, out_ch) in [8usize, 16].into_iter().enumerate() {
            let kernel = he_uniform(
                &[out_ch, c, 3, 3],
                c * 9,
                &mut rng::stream(seed, &format!("init/{name}/conv/{i}")),
            )?;
            conv_layers.push(ConvLayer::new(kernel, vec![0.0; out_ch], 1, true)?);
            (c, h, w) = (out_ch, h / 2, w / 2);
        }
        let flat = c * h * w;
        let weight = he_uniform(
            &[2, flat],
            flat,
            &mut rng::stream(seed, &format!("init/{name}/dense/0")),
        )?;
        let dense_layers = vec![DenseLayer::new(weight, vec![0.0; 2])?];
        Self::from_parts(name, input_shape, conv_layers, dense_layers, Head::Softmax)
    }

    pub fn input_shape(&self) -> [usize; 3] {
        self.input_shape
    }

    pub fn conv_layers(&self) -> &[ConvLayer] {
        &self.conv_layers
    }

    pub fn dense_layers(&self) -> &[DenseLayer] {
        &self.dense_layers
    }

    pub fn head(&self) -> Head {
        self.head
    }

    /// Probabilities plus every conv layer's post-ReLU output; the last
    /// entry is the Grad-CAM target layer.
    pub fn forward_with_activations(&self, input: &Tensor) -> Result<(Vec<f64>, Vec<Tensor>)> {
        let cache = self.forward_cached(input)?;
        Ok((cache.probs, cache.feature_maps))
    }

    /// Gradient of the pre-softmax score of `class_index` with respect to
    /// the last conv layer's post-ReLU feature maps.
    ///
    /// With a sigmoid head the class scores are `[0, z]`: class 1 owns the
    /// logit and class 0 is the constant reference, so its gradient is zero.
    pub fn grad_wrt_feature_maps(&self, input: &Tensor, class_index: usize) -> Result<Tensor> {
        if class_index >= self.class_count() {
            return Err(Error::ClassOutOfRange {
                index: class_index,
                count: self.class_count(),
            });
        }
        let cache = self.forward_cached(input)?;
        let d_last_pre = match self.head {
            Head::Sigmoid => vec![if class_index == 1 { 1.0 } else { 0.0 }],
            Head::Softmax => {
                let mut d = vec![0.0; self.class_count()];
                d[class_index] = 1.0;
                d
            }
        };
        let grads = self.backward(&cache, &d_last_pre);
        Tensor::from_vec(
            cache.feature_maps.last().unwrap().shape().to_vec(),
            grads.feature_map_grad,
        )
    }

    fn forward_cached(&self, input: &Tensor) -> Result<Cache> {
        if input.shape() != self.input_shape {
            return Err(Error::LayerShape {
                layer: 0,
                message: format!(
                    "input shape {:?} does not match model input {:?}",
                    input.shape(),
                    self.input_shape
                ),
            });
        }
        let mut conv_inputs = Vec::with_capacity(self.conv_layers.len());
        let mut feature_maps = Vec::with_capacity(self.conv_layers.len());
        let mut pool_sources = Vec::with_capacity(self.conv_layers.len());
        let mut x = input.clone();
        for layer in &self.conv_layers {
            let mut out = conv_forward(layer, &x);
            for v in out.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            let out_shape = conv_output_shape(layer, x.shape());
            let fm = Tensor::from_vec(out_shape.clone(), out)?;
            conv_inputs.push(x);
            if layer.pool {
                let (pooled, sources) = max_pool(&fm);
                pool_sources.push(Some(sources));
                x = pooled;
            } else {
                pool_sources.push(None);
                x = fm.clone();
            }
            feature_maps.push(fm);
        }

        let mut dense_inputs = Vec::with_capacity(self.dense_layers.len());
        let mut vec_x = x.data().to_vec();
        let mut pre = Vec::new();
        for (j, layer) in self.dense_layers.iter().enumerate() {
            dense_inputs.push(vec_x.clone());
            pre = dense_forward(layer, &vec_x);
            if j + 1 < self.dense_layers.len() {
                vec_x = pre.iter().map(|&v| if v < 0.0 { 0.0 } else { v }).collect();
            }
        }

        let probs = match self.head {
            Head::Sigmoid => {
                let p = math::sigmoid(pre[0]);
                vec![1.0 - p, p]
            }
            Head::Softmax => softmax(&pre),
        };
        if !probs.iter().all(|p| p.is_finite()) {
            return Err(Error::NonFinite("cnn forward"));
        }
        Ok(Cache {
            conv_inputs,
            feature_maps,
            pool_sources,
            dense_inputs,
            probs,
        })
    }

    /// Backpropagates from the last dense layer's pre-activation gradient.
    fn backward(&self, cache: &Cache, d_last_pre: &[f64]) -> Gradients {
        let n_conv = self.conv_layers.len();
        let mut conv_grads: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(n_conv);
        let mut dense_grads: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(self.dense_layers.len());

        // Dense stack, last to first.
        let mut d = d_last_pre.to_vec();
        for j in (0..self.dense_layers.len()).rev() {
            let layer = &self.dense_layers[j];
            let x = &cache.dense_inputs[j];
            let (out_dim, in_dim) = (layer.weight.shape()[0], layer.weight.shape()[1]);
            let mut dw = vec![0.0; out_dim * in_dim];
            for o in 0..out_dim {
                for i in 0..in_dim {
                    dw[o * in_dim + i] = d[o] * x[i];
                }
            }
            let db = d.clone();
            let wdata = layer.weight.data();
            let mut dx = vec![0.0; in_dim];
            for o in 0..out_dim {
                for i in 0..in_dim {
                    dx[i] += d[o] * wdata[o * in_dim + i];
                }
            }
            if j > 0 {
                // x is the post-ReLU output of the previous dense layer.
                for (g, &v) in dx.iter_mut().zip(x.iter()) {
                    if v <= 0.0 {
                        *g = 0.0;
                    }
                }
            }
            dense_grads.push((dw, db));
            d = dx;
        }
        dense_grads.reverse();

        // Conv stack, last to first.
        let mut feature_map_grad = Vec::new();
        for l in (0..n_conv).rev() {
            let layer = &self.conv_layers[l];
            let fm = &cache.feature_maps[l];
            let d_fm = match &cache.pool_sources[l] {
                Some(sources) => {
                    let mut up = vec![0.0; fm.len()];
                    for (cell, &src) in sources.iter().enumerate() {
                        up[src] += d[cell];
                    }
                    up
                }
                None => d.clone(),
            };
            if l == n_conv - 1 {
                feature_map_grad = d_fm.clone();
            }
            // ReLU mask from the post-activation values.
            let mut d_pre = d_fm;
            for (g, &v) in d_pre.iter_mut().zip(fm.data().iter()) {
                if v <= 0.0 {
                    *g = 0.0;
                }
            }
            let x = &cache.conv_inputs[l];
            let (dk, db, dx) = conv_backward(layer, x, fm.shape(), &d_pre);
            conv_grads.push((dk, db));
            d = dx;
        }
        conv_grads.reverse();

        let mut flat = Vec::new();
        for (dk, db) in &conv_grads {
            flat.extend_from_slice(dk);
            flat.extend_from_slice(db);
        }
        for (dw, db) in &dense_grads {
            flat.extend_from_slice(dw);
            flat.extend_from_slice(db);
        }
        Gradients {
            flat,
            feature_map_grad,
        }
    }
}

fn conv_output_shape(layer: &ConvLayer, input: &[usize]) -> Vec<usize> {
    let ks = layer.kernel.shape();
    vec![
        ks[0],
        input[1] + 2 * layer.pad - (ks[2] - 1),
        input[2] + 2 * layer.pad - (ks[3] - 1),
    ]
}

fn conv_forward(layer: &ConvLayer, x: &Tensor) -> Vec<f64> {
    let (c_in, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let ks = layer.kernel.shape();
    let (c_out, kh, kw) = (ks[0], ks[2], ks[3]);
    let pad = layer.pad as isize;
    let h_out = h + 2 * layer.pad - (kh - 1);
    let w_out = w + 2 * layer.pad - (kw - 1);
    let kdata = layer.kernel.data();
    let xdata = x.data();
    let mut out = vec![0.0; c_out * h_out * w_out];
    for o in 0..c_out {
        for i in 0..h_out {
            for j in 0..w_out {
                let mut s = layer.bias[o];
                for c in 0..c_in {
                    for u in 0..kh {
                        let ii = i as isize + u as isize - pad;
                        if ii < 0 || ii >= h as isize {
                            continue;
                        }
                        for v in 0..kw {
                            let jj = j as isize + v as isize - pad;
                            if jj < 0 || jj >= w as isize {
                                continue;
                            }
                            s += kdata[((o * c_in + c) * kh + u) * kw + v]
                                * xdata[(c * h + ii as usize) * w + jj as usize];
                        }
                    }
                }
                out[(o * h_out + i) * w_out + j] = s;
            }
        }
    }
    out
}

/// Kernel/bias gradients and the input gradient for one conv layer.
fn conv_backward(
    layer: &ConvLayer,
    x: &Tensor,
    out_shape: &[usize],
    d_pre: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (c_in, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let ks = layer.kernel.shape();
    let (c_out, kh, kw) = (ks[0], ks[2], ks[3]);
    let (h_out, w_out) = (out_shape[1], out_shape[2]);
    let pad = layer.pad as isize;
    let kdata = layer.kernel.data();
    let xdata = x.data();
    let mut dk = vec![0.0; kdata.len()];
    let mut db = vec![0.0; c_out];
    let mut dx = vec![0.0; xdata.len()];
    for o in 0..c_out {
        for i in 0..h_out {
            for j in 0..w_out {
                let g = d_pre[(o * h_out + i) * w_out + j];
                if g == 0.0 {
                    continue;
                }
                db[o] += g;
                for c in 0..c_in {
                    for u in 0..kh {
                        let ii = i as isize + u as isize - pad;
                        if ii < 0 || ii >= h as isize {
                            continue;
                        }
                        for v in 0..kw {
                            let jj = j as isize + v as isize - pad;
                            if jj < 0 || jj >= w as isize {
                                continue;
                            }
                            let k_idx = ((o * c_in + c) * kh + u) * kw + v;
                            let x_idx = (c * h + ii as usize) * w + jj as usize;
                            dk[k_idx] += g * xdata[x_idx];
                            dx[x_idx] += g * kdata[k_idx];
                        }
                    }
                }
            }
        }
    }
    (dk, db, dx)
}

/// 2x2 max-pool with stride 2; odd trailing rows/columns are dropped.
/// Returns the pooled tensor and, per pooled cell, the flat source index of
/// the chosen maximum (first in scan order on ties).
fn max_pool(x: &Tensor) -> (Tensor, Vec<usize>) {
    let (c, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let (h2, w2) = (h / 2, w / 2);
    let data = x.data();
    let mut out = Vec::with_capacity(c * h2 * w2);
    let mut sources = Vec::with_capacity(c * h2 * w2);
    for ch in 0..c {
        for i in 0..h2 {
            for j in 0..w2 {
                let mut best_idx = (ch * h + 2 * i) * w + 2 * j;
                let mut best = data[best_idx];
                for (di, dj) in [(0, 1), (1, 0), (1, 1)] {
                    let idx = (ch * h + 2 * i + di) * w + 2 * j + dj;
                    if data[idx] > best {
                        best = data[idx];
                        best_idx = idx;
                    }
                }
                out.push(best);
                sources.push(best_idx);
            }
        }
    }
    (
        Tensor::from_vec(vec![c, h2, w2], out).expect("pool shape"),
        sources,
    )
}

fn dense_forward(layer: &DenseLayer, x: &[f64]) -> Vec<f64> {
    let (out_dim, in_dim) = (layer.weight.shape()[0], layer.weight.shape()[1]);
    let wdata = layer.weight.data();
    let mut out = Vec::with_capacity(out_dim);
    for o in 0..out_dim {
        let mut s = layer.bias[o];
        for i in 0..in_dim {
            s += wdata[o * in_dim + i] * x[i];
        }
        out.push(s);
    }
    out
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let exps: Vec<f64> = scores.iter().map(|&s| math::exp(s - max)).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / sum).collect()
}

fn he_uniform(shape: &[usize], fan_in: usize, rng: &mut impl Rng) -> Result<Tensor> {
    let limit = math::sqrt(6.0 / fan_in as f64);
    let len: usize = shape.iter().product();
    let data: Vec<f64> = (0..len).map(|_| (2.0 * rng.gen::<f64>() - 1.0) * limit).collect();
    Tensor::from_vec(shape.to_vec(), data)
}

impl Predictor for SmallCnn {
    fn name(&self) -> &str {
        &self.name
    }

    fn class_count(&self) -> usize {
        match self.head {
            Head::Sigmoid => 2,
            Head::Softmax => self.dense_layers.last().unwrap().weight.shape()[0],
        }
    }

    fn predict(&self, input: &Tensor) -> Result<Vec<f64>> {
        Ok(self.forward_cached(input)?.probs)
    }
}

impl Trainable for SmallCnn {
    fn parameters(&self) -> Vec<f64> {
        let mut p = Vec::new();
        for layer in &self.conv_layers {
            p.extend_from_slice(layer.kernel.data());
            p.extend_from_slice(&layer.bias);
        }
        for layer in &self.dense_layers {
            p.extend_from_slice(layer.weight.data());
            p.extend_from_slice(&layer.bias);
        }
        p
    }

    fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        let expected = self.parameters().len();
        if params.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "expected {expected} parameters, got {}",
                params.len()
            )));
        }
        let mut offset = 0;
        let mut take = |n: usize| {
            let slice = &params[offset..offset + n];
            offset += n;
            slice.to_vec()
        };
        for layer in &mut self.conv_layers {
            let shape = layer.kernel.shape().to_vec();
            let len = layer.kernel.len();
            layer.kernel = Tensor::from_vec(shape, take(len))?;
            layer.bias = take(layer.bias.len());
        }
        for layer in &mut self.dense_layers {
            let shape = layer.weight.shape().to_vec();
            let len = layer.weight.len();
            layer.weight = Tensor::from_vec(shape, take(len))?;
            layer.bias = take(layer.bias.len());
        }
        Ok(())
    }

    fn loss_and_gradient(&self, images: &[&Tensor], labels: &[u8]) -> Result<(f64, Vec<f64>)> {
        if images.len() != labels.len() || images.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "batch of {} images vs {} labels",
                images.len(),
                labels.len()
            )));
        }
        if self.class_count() != 2 {
            return Err(Error::InvalidArgument(String::from(
                "binary cross-entropy training needs exactly 2 classes",
            )));
        }
        let n = images.len() as f64;
        let mut total_loss = 0.0;
        let mut grad = vec![0.0; self.parameters().len()];
        for (&image, &label) in images.iter().zip(labels.iter()) {
            if label > 1 {
                return Err(Error::NonBinaryLabel(label as f64));
            }
            let cache = self.forward_cached(image)?;
            let p1 = cache.probs[1];
            total_loss += loss::bce_per_class(p1, label)?;
            let y = label as f64;
            // d(BCE)/d(pre-activation), scaled for the batch mean.
            let d_last_pre = match self.head {
                Head::Sigmoid => vec![(p1 - y) / n],
                Head::Softmax => {
                    let mut d = cache.probs.clone();
                    d[label as usize] -= 1.0;
                    for v in &mut d {
                        *v /= n;
                    }
                    d
                }
            };
            let g = self.backward(&cache, &d_last_pre);
            for (acc, v) in grad.iter_mut().zip(g.flat.iter()) {
                *acc += v;
            }
        }
        Ok((total_loss / n, grad))
    }
}
