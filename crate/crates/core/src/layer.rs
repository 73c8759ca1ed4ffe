//! Forward layers and their exact reverse-mode gradients.
//!
//! Layers operate on single samples (no batch axis); minibatch training
//! accumulates parameter gradients across samples and then takes one step.
//! Conventions that matter for reproducibility:
//!
//! - max-pool argmax ties break to the lowest row-major index, so gradient
//!   routing is deterministic;
//! - `backward` *adds* into the parameter gradient accumulators, it never
//!   overwrites them;
//! - weights are initialized from Uniform(-a, a) with
//!   a = sqrt(6 / (fan_in + fan_out)), biases start at zero.

use rand::Rng;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    },
    MaxPool2d {
        kernel: usize,
        stride: usize,
    },
    ReLU,
    Flatten,
    FullyConnected {
        in_dim: usize,
        out_dim: usize,
    },
}

impl LayerKind {
    fn describe(&self) -> String {
        match self {
            LayerKind::Conv2d {
                in_channels,
                out_channels,
                kernel,
                stride,
                padding,
            } => format!("Conv2d({in_channels}->{out_channels}, k={kernel}, s={stride}, p={padding})"),
            LayerKind::MaxPool2d { kernel, stride } => format!("MaxPool2d(k={kernel}, s={stride})"),
            LayerKind::ReLU => "ReLU".to_string(),
            LayerKind::Flatten => "Flatten".to_string(),
            LayerKind::FullyConnected { in_dim, out_dim } => {
                format!("FullyConnected({in_dim}->{out_dim})")
            }
        }
    }
}

/// Weights and bias of a parameterized layer together with their gradient
/// accumulators (always the same shapes as the parameters themselves).
#[derive(Debug, Clone)]
pub struct LayerParams {
    pub weights: Tensor,
    pub bias: Tensor,
    pub weight_grad: Tensor,
    pub bias_grad: Tensor,
    /// Momentum buffers; allocated lazily on the first step with momentum > 0.
    velocity: Option<(Tensor, Tensor)>,
}

impl LayerParams {
    fn new(weights: Tensor, bias: Tensor) -> Self {
        let weight_grad = Tensor::zeros(weights.shape().to_vec());
        let bias_grad = Tensor::zeros(bias.shape().to_vec());
        LayerParams {
            weights,
            bias,
            weight_grad,
            bias_grad,
            velocity: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Layer {
    kind: LayerKind,
    params: Option<LayerParams>,
}

impl Layer {
    /// Builds a layer; parameterized kinds draw their weights from `rng`.
    pub fn new<R: Rng + ?Sized>(kind: LayerKind, rng: &mut R) -> Result<Self> {
        let params = match kind {
            LayerKind::Conv2d {
                in_channels,
                out_channels,
                kernel,
                stride,
                ..
            } => {
                if in_channels == 0 || out_channels == 0 || kernel == 0 || stride == 0 {
                    return Err(Error::InvalidConfig(format!(
                        "{} has a zero dimension",
                        kind.describe()
                    )));
                }
                let fan_in = in_channels * kernel * kernel;
                let fan_out = out_channels * kernel * kernel;
                let weights = init_uniform(
                    vec![out_channels, in_channels, kernel, kernel],
                    fan_in,
                    fan_out,
                    rng,
                );
                Some(LayerParams::new(weights, Tensor::zeros(vec![out_channels])))
            }
            LayerKind::FullyConnected { in_dim, out_dim } => {
                if in_dim == 0 || out_dim == 0 {
                    return Err(Error::InvalidConfig(format!(
                        "{} has a zero dimension",
                        kind.describe()
                    )));
                }
                let weights = init_uniform(vec![out_dim, in_dim], in_dim, out_dim, rng);
                Some(LayerParams::new(weights, Tensor::zeros(vec![out_dim])))
            }
            LayerKind::MaxPool2d { kernel, stride } => {
                if kernel == 0 || stride == 0 {
                    return Err(Error::InvalidConfig(format!(
                        "{} has a zero dimension",
                        kind.describe()
                    )));
                }
                None
            }
            LayerKind::ReLU | LayerKind::Flatten => None,
        };
        Ok(Layer { kind, params })
    }

    pub fn kind(&self) -> LayerKind {
        self.kind
    }

    pub fn params(&self) -> Option<&LayerParams> {
        self.params.as_ref()
    }

    pub fn params_mut(&mut self) -> Option<&mut LayerParams> {
        self.params.as_mut()
    }

    /// Output shape for a given input shape, validating compatibility.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        match self.kind {
            LayerKind::Conv2d {
                in_channels,
                out_channels,
                kernel,
                stride,
                padding,
            } => {
                let (c, h, w) = expect_chw(input, &self.kind)?;
                if c != in_channels {
                    return Err(Error::ShapeMismatch {
                        context: self.kind.describe(),
                        expected: vec![in_channels, h, w],
                        actual: input.to_vec(),
                    });
                }
                let ph = h + 2 * padding;
                let pw = w + 2 * padding;
                if kernel > ph || kernel > pw {
                    return Err(Error::InvalidConfig(format!(
                        "{}: kernel exceeds padded input extent {ph}x{pw}",
                        self.kind.describe()
                    )));
                }
                Ok(vec![
                    out_channels,
                    (ph - kernel) / stride + 1,
                    (pw - kernel) / stride + 1,
                ])
            }
            LayerKind::MaxPool2d { kernel, stride } => {
                let (c, h, w) = expect_chw(input, &self.kind)?;
                if kernel > h || kernel > w {
                    return Err(Error::InvalidConfig(format!(
                        "{}: kernel exceeds input extent {h}x{w}",
                        self.kind.describe()
                    )));
                }
                Ok(vec![c, (h - kernel) / stride + 1, (w - kernel) / stride + 1])
            }
            LayerKind::ReLU => Ok(input.to_vec()),
            LayerKind::Flatten => Ok(vec![input.iter().product()]),
            LayerKind::FullyConnected { in_dim, out_dim } => {
                let len: usize = input.iter().product();
                if len != in_dim {
                    return Err(Error::ShapeMismatch {
                        context: self.kind.describe(),
                        expected: vec![in_dim],
                        actual: input.to_vec(),
                    });
                }
                Ok(vec![out_dim])
            }
        }
    }

    pub fn forward(&self, input: &Tensor) -> Result<Tensor> {
        let out_shape = self.output_shape(input.shape())?;
        match self.kind {
            LayerKind::Conv2d {
                kernel,
                stride,
                padding,
                ..
            } => {
                let p = self.params.as_ref().expect("conv has params");
                Ok(conv_forward(input, &p.weights, &p.bias, kernel, stride, padding, out_shape))
            }
            LayerKind::MaxPool2d { kernel, stride } => {
                Ok(maxpool_forward(input, kernel, stride, out_shape))
            }
            LayerKind::ReLU => {
                let data = input.data().iter().map(|&v| v.max(0.0)).collect();
                Tensor::new(out_shape, data)
            }
            LayerKind::Flatten => Tensor::new(out_shape, input.data().to_vec()),
            LayerKind::FullyConnected { in_dim, out_dim } => {
                let p = self.params.as_ref().expect("fc has params");
                let w = p.weights.data();
                let x = input.data();
                let mut out = p.bias.data().to_vec();
                for (o, out_v) in out.iter_mut().enumerate().take(out_dim) {
                    let row = &w[o * in_dim..(o + 1) * in_dim];
                    let mut acc = 0.0;
                    for (wi, xi) in row.iter().zip(x) {
                        acc += wi * xi;
                    }
                    *out_v += acc;
                }
                Tensor::new(out_shape, out)
            }
        }
    }

    /// Reverse-mode step: given the layer input and the upstream gradient
    /// (shaped like the forward output), returns the input gradient and adds
    /// the parameter gradients into this layer's accumulators.
    pub fn backward(&mut self, input: &Tensor, upstream: &Tensor) -> Result<Tensor> {
        let out_shape = self.output_shape(input.shape())?;
        upstream.expect_shape(&out_shape, &format!("{} backward", self.kind.describe()))?;
        match self.kind {
            LayerKind::Conv2d {
                kernel,
                stride,
                padding,
                ..
            } => {
                let p = self.params.as_mut().expect("conv has params");
                Ok(conv_backward(input, upstream, p, kernel, stride, padding))
            }
            LayerKind::MaxPool2d { kernel, stride } => {
                Ok(maxpool_backward(input, upstream, kernel, stride))
            }
            LayerKind::ReLU => {
                let data = input
                    .data()
                    .iter()
                    .zip(upstream.data())
                    .map(|(&x, &g)| if x > 0.0 { g } else { 0.0 })
                    .collect();
                Tensor::new(input.shape().to_vec(), data)
            }
            LayerKind::Flatten => Tensor::new(input.shape().to_vec(), upstream.data().to_vec()),
            LayerKind::FullyConnected { in_dim, out_dim } => {
                let p = self.params.as_mut().expect("fc has params");
                let w = p.weights.data();
                let x = input.data();
                let up = upstream.data();
                let mut d_input = vec![0.0; in_dim];
                {
                    let wg = p.weight_grad.data_mut();
                    for o in 0..out_dim {
                        let g = up[o];
                        let row = o * in_dim;
                        for i in 0..in_dim {
                            wg[row + i] += g * x[i];
                            d_input[i] += g * w[row + i];
                        }
                    }
                }
                for (bg, &g) in p.bias_grad.data_mut().iter_mut().zip(up) {
                    *bg += g;
                }
                Tensor::new(input.shape().to_vec(), d_input)
            }
        }
    }

    /// SGD update `p <- p - lr * g` (with optional momentum), then zeroes the
    /// gradient accumulators.
    pub fn sgd_step(&mut self, lr: f64, momentum: f64) {
        if let Some(p) = self.params.as_mut() {
            if momentum != 0.0 && p.velocity.is_none() {
                p.velocity = Some((
                    Tensor::zeros(p.weights.shape().to_vec()),
                    Tensor::zeros(p.bias.shape().to_vec()),
                ));
            }
            match (momentum != 0.0, p.velocity.as_mut()) {
                (true, Some((vw, vb))) => {
                    for ((w, g), v) in p
                        .weights
                        .data_mut()
                        .iter_mut()
                        .zip(p.weight_grad.data())
                        .zip(vw.data_mut())
                    {
                        *v = momentum * *v + g;
                        *w -= lr * *v;
                    }
                    for ((b, g), v) in p
                        .bias
                        .data_mut()
                        .iter_mut()
                        .zip(p.bias_grad.data())
                        .zip(vb.data_mut())
                    {
                        *v = momentum * *v + g;
                        *b -= lr * *v;
                    }
                }
                _ => {
                    for (w, g) in p.weights.data_mut().iter_mut().zip(p.weight_grad.data()) {
                        *w -= lr * g;
                    }
                    for (b, g) in p.bias.data_mut().iter_mut().zip(p.bias_grad.data()) {
                        *b -= lr * g;
                    }
                }
            }
            p.weight_grad.fill(0.0);
            p.bias_grad.fill(0.0);
        }
    }

    pub fn zero_gradients(&mut self) {
        if let Some(p) = self.params.as_mut() {
            p.weight_grad.fill(0.0);
            p.bias_grad.fill(0.0);
        }
    }

    pub fn param_count(&self) -> usize {
        self.params
            .as_ref()
            .map(|p| p.weights.len() + p.bias.len())
            .unwrap_or(0)
    }
}

fn init_uniform<R: Rng + ?Sized>(
    shape: Vec<usize>,
    fan_in: usize,
    fan_out: usize,
    rng: &mut R,
) -> Tensor {
    let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let len = shape.iter().product();
    let data = (0..len).map(|_| rng.random_range(-a..a)).collect();
    Tensor::new(shape, data).expect("init shape consistent")
}

fn expect_chw(shape: &[usize], kind: &LayerKind) -> Result<(usize, usize, usize)> {
    if shape.len() != 3 {
        return Err(Error::ShapeMismatch {
            context: format!("{} expects a [C, H, W] input", kind.describe()),
            expected: vec![0, 0, 0],
            actual: shape.to_vec(),
        });
    }
    Ok((shape[0], shape[1], shape[2]))
}

fn conv_forward(
    input: &Tensor,
    weights: &Tensor,
    bias: &Tensor,
    kernel: usize,
    stride: usize,
    padding: usize,
    out_shape: Vec<usize>,
) -> Tensor {
    let (in_c, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let (out_c, oh, ow) = (out_shape[0], out_shape[1], out_shape[2]);
    let x = input.data();
    let wt = weights.data();
    let b = bias.data();
    let mut out = vec![0.0; out_c * oh * ow];
    for oc in 0..out_c {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut acc = b[oc];
                for ic in 0..in_c {
                    let w_base = ((oc * in_c + ic) * kernel) * kernel;
                    for ky in 0..kernel {
                        let iy = (oy * stride + ky) as isize - padding as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let x_row = (ic * h + iy as usize) * w;
                        let w_row = w_base + ky * kernel;
                        for kx in 0..kernel {
                            let ix = (ox * stride + kx) as isize - padding as isize;
                            if ix < 0 || ix >= w as isize {
                                continue;
                            }
                            acc += wt[w_row + kx] * x[x_row + ix as usize];
                        }
                    }
                }
                out[(oc * oh + oy) * ow + ox] = acc;
            }
        }
    }
    Tensor::new(out_shape, out).expect("conv output shape consistent")
}

fn conv_backward(
    input: &Tensor,
    upstream: &Tensor,
    p: &mut LayerParams,
    kernel: usize,
    stride: usize,
    padding: usize,
) -> Tensor {
    let (in_c, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let (out_c, oh, ow) = (
        upstream.shape()[0],
        upstream.shape()[1],
        upstream.shape()[2],
    );
    let x = input.data();
    let up = upstream.data();
    let wt = p.weights.data().to_vec();
    let wg = p.weight_grad.data_mut();
    let mut d_input = vec![0.0; x.len()];
    for oc in 0..out_c {
        let mut bias_acc = 0.0;
        for oy in 0..oh {
            for ox in 0..ow {
                let g = up[(oc * oh + oy) * ow + ox];
                if g == 0.0 {
                    continue;
                }
                bias_acc += g;
                for ic in 0..in_c {
                    let w_base = ((oc * in_c + ic) * kernel) * kernel;
                    for ky in 0..kernel {
                        let iy = (oy * stride + ky) as isize - padding as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let x_row = (ic * h + iy as usize) * w;
                        let w_row = w_base + ky * kernel;
                        for kx in 0..kernel {
                            let ix = (ox * stride + kx) as isize - padding as isize;
                            if ix < 0 || ix >= w as isize {
                                continue;
                            }
                            wg[w_row + kx] += g * x[x_row + ix as usize];
                            d_input[x_row + ix as usize] += g * wt[w_row + kx];
                        }
                    }
                }
            }
        }
        p.bias_grad.data_mut()[oc] += bias_acc;
    }
    Tensor::new(input.shape().to_vec(), d_input).expect("conv input grad shape")
}

fn maxpool_forward(input: &Tensor, kernel: usize, stride: usize, out_shape: Vec<usize>) -> Tensor {
    let (c, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let (oh, ow) = (out_shape[1], out_shape[2]);
    let x = input.data();
    let mut out = vec![0.0; c * oh * ow];
    for ch in 0..c {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut best = f64::NEG_INFINITY;
                for ky in 0..kernel {
                    let iy = oy * stride + ky;
                    let row = (ch * h + iy) * w;
                    for kx in 0..kernel {
                        let v = x[row + ox * stride + kx];
                        // strict > keeps the first (lowest row-major) max
                        if v > best {
                            best = v;
                        }
                    }
                }
                out[(ch * oh + oy) * ow + ox] = best;
            }
        }
    }
    Tensor::new(out_shape, out).expect("pool output shape consistent")
}

fn maxpool_backward(input: &Tensor, upstream: &Tensor, kernel: usize, stride: usize) -> Tensor {
    let (c, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let (oh, ow) = (upstream.shape()[1], upstream.shape()[2]);
    let x = input.data();
    let up = upstream.data();
    let mut d_input = vec![0.0; x.len()];
    for ch in 0..c {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut best = f64::NEG_INFINITY;
                let mut best_idx = 0;
                for ky in 0..kernel {
                    let iy = oy * stride + ky;
                    let row = (ch * h + iy) * w;
                    for kx in 0..kernel {
                        let idx = row + ox * stride + kx;
                        if x[idx] > best {
                            best = x[idx];
                            best_idx = idx;
                        }
                    }
                }
                d_input[best_idx] += up[(ch * oh + oy) * ow + ox];
            }
        }
    }
    Tensor::new(input.shape().to_vec(), d_input).expect("pool input grad shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn fc_forward_sums_weights() {
        let mut layer = Layer::new(LayerKind::FullyConnected { in_dim: 2, out_dim: 1 }, &mut rng()).unwrap();
        let p = layer.params_mut().unwrap();
        p.weights.data_mut().copy_from_slice(&[1.0, 1.0]);
        p.bias.data_mut().copy_from_slice(&[0.0]);
        let out = layer.forward(&Tensor::from_vec(vec![3.0, 4.0])).unwrap();
        assert_eq!(out.data(), &[7.0]);
    }

    #[test]
    fn relu_forward_clamps_negatives() {
        let layer = Layer::new(LayerKind::ReLU, &mut rng()).unwrap();
        let out = layer.forward(&Tensor::from_vec(vec![-1.0, 0.0, 2.0])).unwrap();
        assert_eq!(out.data(), &[0.0, 0.0, 2.0]);
    }

    #[test]
    fn conv_forward_sums_window() {
        let mut layer = Layer::new(
            LayerKind::Conv2d {
                in_channels: 1,
                out_channels: 1,
                kernel: 3,
                stride: 1,
                padding: 0,
            },
            &mut rng(),
        )
        .unwrap();
        let p = layer.params_mut().unwrap();
        p.weights.fill(1.0);
        p.bias.fill(0.0);
        let input = Tensor::new(vec![1, 3, 3], vec![1.0; 9]).unwrap();
        let out = layer.forward(&input).unwrap();
        assert_eq!(out.shape(), &[1, 1, 1]);
        assert_eq!(out.data(), &[9.0]);
    }

    #[test]
    fn relu_backward_routes_positive_inputs_only() {
        let mut layer = Layer::new(LayerKind::ReLU, &mut rng()).unwrap();
        let input = Tensor::from_vec(vec![-1.0, 2.0]);
        let grad = layer
            .backward(&input, &Tensor::from_vec(vec![1.0, 1.0]))
            .unwrap();
        assert_eq!(grad.data(), &[0.0, 1.0]);
    }

    #[test]
    fn maxpool_backward_conserves_gradient_mass() {
        let mut layer = Layer::new(LayerKind::MaxPool2d { kernel: 2, stride: 2 }, &mut rng()).unwrap();
        let input = Tensor::new(
            vec![1, 4, 4],
            vec![
                1.0, 2.0, 5.0, 1.0, //
                3.0, 4.0, 2.0, 0.0, //
                0.0, 9.0, 1.0, 1.0, //
                7.0, 6.0, 1.0, 1.0,
            ],
        )
        .unwrap();
        // integer-valued upstream keeps the sums exact regardless of order
        let upstream = Tensor::new(vec![1, 2, 2], vec![2.0, 3.0, 5.0, 7.0]).unwrap();
        let grad = layer.backward(&input, &upstream).unwrap();
        let grad_sum: f64 = grad.data().iter().sum();
        assert_eq!(grad_sum, 17.0);
        // gradient lands on the argmax cells: 4 (1,1), 5 (0,2), 9 (2,1), 1 (2,2)
        assert_eq!(grad.data()[input.idx3(0, 1, 1)], 2.0);
        assert_eq!(grad.data()[input.idx3(0, 0, 2)], 3.0);
        assert_eq!(grad.data()[input.idx3(0, 2, 1)], 5.0);
        assert_eq!(grad.data()[input.idx3(0, 2, 2)], 7.0);
    }

    #[test]
    fn maxpool_tie_breaks_to_first_row_major_index() {
        let mut layer = Layer::new(LayerKind::MaxPool2d { kernel: 2, stride: 2 }, &mut rng()).unwrap();
        let input = Tensor::new(vec![1, 2, 2], vec![5.0, 5.0, 5.0, 5.0]).unwrap();
        let upstream = Tensor::new(vec![1, 1, 1], vec![1.0]).unwrap();
        let grad = layer.backward(&input, &upstream).unwrap();
        assert_eq!(grad.data(), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn sgd_step_moves_against_gradient_and_clears_accumulators() {
        let mut layer = Layer::new(LayerKind::FullyConnected { in_dim: 1, out_dim: 1 }, &mut rng()).unwrap();
        let p = layer.params_mut().unwrap();
        p.weights.data_mut()[0] = 1.0;
        p.weight_grad.data_mut()[0] = 2.0;
        layer.sgd_step(0.5, 0.0);
        let p = layer.params().unwrap();
        assert_eq!(p.weights.data()[0], 0.0);
        assert_eq!(p.weight_grad.data()[0], 0.0);
    }

    #[test]
    fn zero_learning_rate_is_identity() {
        let mut layer = Layer::new(LayerKind::FullyConnected { in_dim: 3, out_dim: 2 }, &mut rng()).unwrap();
        let before = layer.params().unwrap().weights.clone();
        layer.params_mut().unwrap().weight_grad.fill(1.5);
        layer.sgd_step(0.0, 0.0);
        assert_eq!(layer.params().unwrap().weights, before);
    }

    #[test]
    fn accumulated_backwards_equal_step_on_summed_gradients() {
        let kind = LayerKind::FullyConnected { in_dim: 3, out_dim: 2 };
        let mut a = Layer::new(kind, &mut rng()).unwrap();
        let mut b = a.clone();
        let x1 = Tensor::from_vec(vec![0.3, -0.2, 1.0]);
        let x2 = Tensor::from_vec(vec![-1.1, 0.4, 0.5]);
        let u1 = Tensor::from_vec(vec![1.0, -0.5]);
        let u2 = Tensor::from_vec(vec![0.25, 2.0]);

        // two accumulated passes, one step
        a.backward(&x1, &u1).unwrap();
        a.backward(&x2, &u2).unwrap();
        a.sgd_step(0.1, 0.0);

        // manually summed gradients, one step
        b.backward(&x1, &u1).unwrap();
        let g1w = b.params().unwrap().weight_grad.clone();
        let g1b = b.params().unwrap().bias_grad.clone();
        b.zero_gradients();
        b.backward(&x2, &u2).unwrap();
        {
            let p = b.params_mut().unwrap();
            for (g, g1) in p.weight_grad.data_mut().iter_mut().zip(g1w.data()) {
                *g += g1;
            }
            for (g, g1) in p.bias_grad.data_mut().iter_mut().zip(g1b.data()) {
                *g += g1;
            }
        }
        b.sgd_step(0.1, 0.0);

        assert_eq!(a.params().unwrap().weights, b.params().unwrap().weights);
        assert_eq!(a.params().unwrap().bias, b.params().unwrap().bias);
    }

    #[test]
    fn shape_mismatch_names_layer_and_shapes() {
        let layer = Layer::new(LayerKind::FullyConnected { in_dim: 4, out_dim: 2 }, &mut rng()).unwrap();
        let err = layer.forward(&Tensor::from_vec(vec![1.0, 2.0])).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("FullyConnected(4->2)"), "{msg}");
        assert!(msg.contains("[4]") && msg.contains("[2]"), "{msg}");
    }

    #[test]
    fn pool_kernel_larger_than_input_rejected() {
        let layer = Layer::new(LayerKind::MaxPool2d { kernel: 3, stride: 1 }, &mut rng()).unwrap();
        let input = Tensor::new(vec![1, 2, 2], vec![0.0; 4]).unwrap();
        assert!(layer.forward(&input).is_err());
    }

    #[test]
    fn seeded_init_is_deterministic() {
        let kind = LayerKind::Conv2d {
            in_channels: 2,
            out_channels: 3,
            kernel: 3,
            stride: 1,
            padding: 1,
        };
        let a = Layer::new(kind, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        let b = Layer::new(kind, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        assert_eq!(a.params().unwrap().weights, b.params().unwrap().weights);
    }
}
