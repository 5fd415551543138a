use alloc::vec;
use alloc::vec::Vec;

use super::layers::{Activation, DenseLayer};
use super::loss::{check_labels, softmax2, PROB_CLAMP};
use super::norm::{normalize_rows, normalize_rows_backward, InstanceNormSpec};
use super::{LABEL_TARGET, NOISE, TARGET};
use crate::numerics::Matrix;
use crate::{Error, Result, Rng};

/// Shape of the extractor head and classifier.
///
/// The head is a stack of dense layers with ReLU, `input_dim -> head_dims[0]
/// -> ... -> feature_dim`. An empty `head_dims` is a pass-through head whose
/// feature dimension equals `input_dim`. The classifier is fixed: a dense
/// `feature_dim -> feature_dim` layer followed by a dense `feature_dim -> 2`
/// layer and softmax.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkConfig {
    pub input_dim: usize,
    pub head_dims: Vec<usize>,
    pub instance_norm: Option<InstanceNormSpec>,
    pub classifier_activation: Activation,
}

impl NetworkConfig {
    /// Default layout: two head layers `input_dim -> feature_dim ->
    /// feature_dim`, instance normalization, ReLU in the classifier.
    pub fn new(input_dim: usize, feature_dim: usize) -> Self {
        NetworkConfig {
            input_dim,
            head_dims: vec![feature_dim, feature_dim],
            instance_norm: Some(InstanceNormSpec::default()),
            classifier_activation: Activation::Relu,
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.head_dims.last().copied().unwrap_or(self.input_dim)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.head_dims.contains(&0) {
            return Err(Error::Parameter("network dimensions must be at least 1".into()));
        }
        if let Some(spec) = &self.instance_norm {
            spec.validate(self.feature_dim())?;
        }
        Ok(())
    }

    fn head_shapes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        core::iter::once(self.input_dim)
            .chain(self.head_dims.iter().copied())
            .zip(self.head_dims.iter().copied())
    }

    fn affine(&self) -> bool {
        self.instance_norm.is_some_and(|s| s.affine)
    }

    /// Lengths of the flattened parameter tensors, in canonical order.
    pub fn tensor_lengths(&self) -> Vec<usize> {
        let d = self.feature_dim();
        let mut lens = Vec::new();
        for (i, o) in self.head_shapes() {
            lens.push(i * o);
            lens.push(o);
        }
        if self.affine() {
            lens.push(d);
            lens.push(d);
        }
        lens.extend([d * d, d, d * 2, 2]);
        lens
    }
}

/// Network parameters.
///
/// Canonical tensor order: each head layer's weights then bias, the
/// instance-norm scale and shift (affine only), the classifier hidden layer,
/// then the output layer.
#[derive(Clone, Debug)]
pub struct Network {
    config: NetworkConfig,
    head: Vec<DenseLayer>,
    norm_scale: Vec<f64>,
    norm_shift: Vec<f64>,
    hidden: DenseLayer,
    output: DenseLayer,
    // Bumped on every parameter update; ties forward caches to a parameter state.
    version: u64,
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config && self.tensors() == other.tensors()
    }
}

/// Per-tensor gradients in canonical order.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub tensors: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn norm(&self) -> f64 {
        crate::math::sqrt(self.tensors.iter().flatten().map(|g| g * g).sum())
    }
}

/// Intermediates of a forward pass, consumed by [`Network::backward`].
#[derive(Clone, Debug)]
pub struct ForwardCache {
    version: u64,
    n_real: usize,
    head_inputs: Vec<Matrix>,
    head_pre: Vec<Matrix>,
    normalized: Option<(Matrix, Vec<f64>)>,
    features: Matrix,
    hidden_pre: Matrix,
    hidden_out: Matrix,
    probs: Matrix,
}

impl ForwardCache {
    /// Classifier input: head output (plus appended latent rows) after
    /// instance normalization.
    pub fn features(&self) -> &Matrix {
        &self.features
    }

    /// Softmax output; column [`TARGET`] is the target-class probability.
    pub fn probs(&self) -> &Matrix {
        &self.probs
    }

    pub fn into_parts(self) -> (Matrix, Matrix) {
        (self.features, self.probs)
    }
}

impl Network {
    /// Glorot-uniform weights, zero biases, unit scale / zero shift.
    pub fn init(config: NetworkConfig, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        let d = config.feature_dim();
        let head = config
            .head_shapes()
            .map(|(i, o)| DenseLayer::glorot(i, o, rng))
            .collect();
        let hidden = DenseLayer::glorot(d, d, rng);
        let output = DenseLayer::glorot(d, 2, rng);
        Ok(Self::assemble(config, head, hidden, output))
    }

    /// All parameters zero; the softmax is exactly uniform for any input.
    pub fn zeros(config: NetworkConfig) -> Result<Self> {
        config.validate()?;
        let d = config.feature_dim();
        let head = config.head_shapes().map(|(i, o)| DenseLayer::zeros(i, o)).collect();
        Ok(Self::assemble(
            config,
            head,
            DenseLayer::zeros(d, d),
            DenseLayer::zeros(d, 2),
        ))
    }

    fn assemble(config: NetworkConfig, head: Vec<DenseLayer>, hidden: DenseLayer, output: DenseLayer) -> Self {
        let d = config.feature_dim();
        let (norm_scale, norm_shift) = if config.affine() {
            (vec![1.0; d], vec![0.0; d])
        } else {
            (Vec::new(), Vec::new())
        };
        Network {
            config,
            head,
            norm_scale,
            norm_shift,
            hidden,
            output,
            version: 0,
        }
    }

    /// Rebuilds a network from flattened tensors in canonical order.
    pub fn from_tensors(config: NetworkConfig, tensors: Vec<Vec<f64>>) -> Result<Self> {
        config.validate()?;
        let lens = config.tensor_lengths();
        if tensors.len() != lens.len() || tensors.iter().zip(&lens).any(|(t, &l)| t.len() != l) {
            return Err(Error::Input("parameter tensors do not match network config".into()));
        }
        if tensors.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Input("non-finite network parameter".into()));
        }
        let mut net = Self::zeros(config)?;
        for (dst, src) in net.tensors_mut().into_iter().zip(&tensors) {
            dst.copy_from_slice(src);
        }
        Ok(net)
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn head(&self) -> &[DenseLayer] {
        &self.head
    }

    pub fn head_mut(&mut self) -> &mut [DenseLayer] {
        self.version += 1;
        &mut self.head
    }

    pub fn classifier(&self) -> (&DenseLayer, &DenseLayer) {
        (&self.hidden, &self.output)
    }

    pub fn classifier_mut(&mut self) -> (&mut DenseLayer, &mut DenseLayer) {
        self.version += 1;
        (&mut self.hidden, &mut self.output)
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for layer in &self.head {
            out.push(layer.weights.as_slice());
            out.push(&layer.bias);
        }
        if self.config.affine() {
            out.push(&self.norm_scale);
            out.push(&self.norm_shift);
        }
        out.push(self.hidden.weights.as_slice());
        out.push(&self.hidden.bias);
        out.push(self.output.weights.as_slice());
        out.push(&self.output.bias);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.version += 1;
        let affine = self.config.affine();
        let mut out: Vec<&mut [f64]> = Vec::new();
        for layer in &mut self.head {
            out.push(layer.weights.as_mut_slice());
            out.push(&mut layer.bias);
        }
        if affine {
            out.push(&mut self.norm_scale);
            out.push(&mut self.norm_shift);
        }
        out.push(self.hidden.weights.as_mut_slice());
        out.push(&mut self.hidden.bias);
        out.push(self.output.weights.as_mut_slice());
        out.push(&mut self.output.bias);
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.config.tensor_lengths().iter().sum()
    }

    /// Head output before normalization.
    pub fn head_forward(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.config.input_dim {
            return Err(Error::Shape {
                op: "head_forward",
                expected: (x.rows(), self.config.input_dim),
                found: x.shape(),
            });
        }
        let mut h = x.clone();
        for layer in &self.head {
            h = layer.forward(&h)?;
            h.as_mut_slice()
                .iter_mut()
                .for_each(|v| *v = Activation::Relu.apply(*v));
        }
        Ok(h)
    }

    /// Instance normalization (plus affine, when configured) of latent rows.
    pub fn normalize(&self, latent: &Matrix) -> Result<Matrix> {
        let d = self.config.feature_dim();
        if latent.cols() != d {
            return Err(Error::Shape {
                op: "normalize",
                expected: (latent.rows(), d),
                found: latent.shape(),
            });
        }
        Ok(match &self.config.instance_norm {
            Some(spec) => {
                let (mut y, _) = normalize_rows(latent, spec.epsilon);
                if spec.affine {
                    self.apply_affine(&mut y);
                }
                y
            }
            None => latent.clone(),
        })
    }

    fn apply_affine(&self, y: &mut Matrix) {
        for r in 0..y.rows() {
            for ((v, g), b) in y.row_mut(r).iter_mut().zip(&self.norm_scale).zip(&self.norm_shift) {
                *v = *v * g + b;
            }
        }
    }

    /// Classifier input representation for input-space rows.
    pub fn extract_features(&self, x: &Matrix) -> Result<Matrix> {
        self.normalize(&self.head_forward(x)?)
    }

    /// Softmax output of the classifier for (normalized) feature rows.
    pub fn classify(&self, features: &Matrix) -> Result<Matrix> {
        let hidden_pre = self.hidden.forward(features)?;
        let act = self.config.classifier_activation;
        let mut hidden_out = hidden_pre;
        hidden_out.as_mut_slice().iter_mut().for_each(|v| *v = act.apply(*v));
        let logits = self.output.forward(&hidden_out)?;
        Ok(softmax_rows(&logits))
    }

    /// Forward pass over input-space rows only.
    pub fn forward(&self, x: &Matrix) -> Result<ForwardCache> {
        self.forward_mixed(x, None)
    }

    /// Forward pass where `latent` rows (already in feature space) are
    /// appended after the head output, before normalization.
    pub fn forward_mixed(&self, real: &Matrix, latent: Option<&Matrix>) -> Result<ForwardCache> {
        if real.cols() != self.config.input_dim {
            return Err(Error::Shape {
                op: "forward",
                expected: (real.rows(), self.config.input_dim),
                found: real.shape(),
            });
        }
        let d = self.config.feature_dim();
        if let Some(z) = latent {
            if z.cols() != d {
                return Err(Error::Shape {
                    op: "forward (latent rows)",
                    expected: (z.rows(), d),
                    found: z.shape(),
                });
            }
        }
        let total = real.rows() + latent.map_or(0, Matrix::rows);
        if total == 0 {
            return Err(Error::Input("forward pass on an empty batch".into()));
        }

        let mut head_inputs = Vec::with_capacity(self.head.len());
        let mut head_pre = Vec::with_capacity(self.head.len());
        let mut h = real.clone();
        for layer in &self.head {
            let pre = layer.forward(&h)?;
            let mut act = pre.clone();
            act.as_mut_slice()
                .iter_mut()
                .for_each(|v| *v = Activation::Relu.apply(*v));
            head_inputs.push(core::mem::replace(&mut h, act));
            head_pre.push(pre);
        }
        let raw = match latent {
            Some(z) => h.vstack(z)?,
            None => h,
        };

        let (features, normalized) = match &self.config.instance_norm {
            Some(spec) => {
                let (xhat, inv_std) = normalize_rows(&raw, spec.epsilon);
                let mut y = xhat.clone();
                if spec.affine {
                    self.apply_affine(&mut y);
                }
                (y, Some((xhat, inv_std)))
            }
            None => (raw, None),
        };

        let hidden_pre = self.hidden.forward(&features)?;
        let act = self.config.classifier_activation;
        let mut hidden_out = hidden_pre.clone();
        hidden_out.as_mut_slice().iter_mut().for_each(|v| *v = act.apply(*v));
        let logits = self.output.forward(&hidden_out)?;
        let probs = softmax_rows(&logits);
        if probs.as_slice().iter().any(|p| !p.is_finite()) || features.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite activations in forward pass".into()));
        }

        Ok(ForwardCache {
            version: self.version,
            n_real: real.rows(),
            head_inputs,
            head_pre,
            normalized,
            features,
            hidden_pre,
            hidden_out,
            probs,
        })
    }

    /// Exact gradient of the mean binary cross-entropy with respect to every
    /// parameter. Latent rows contribute to the classifier (and affine norm)
    /// gradients only; they do not pass through the head.
    pub fn backward(&self, cache: &ForwardCache, labels: &[u8]) -> Result<Gradients> {
        if cache.version != self.version || cache.head_pre.len() != self.head.len() {
            return Err(Error::Usage(
                "forward cache does not belong to the current parameters".into(),
            ));
        }
        let n = cache.probs.rows();
        check_labels(labels, n)?;
        let inv_n = 1.0 / n as f64;

        // d loss / d logits; zero where the relevant probability sits in the clamp
        let mut grad_logits = Matrix::zeros(n, 2);
        for (r, &y) in labels.iter().enumerate() {
            let p_target = cache.probs.get(r, TARGET);
            let p_label = if y == LABEL_TARGET {
                p_target
            } else {
                cache.probs.get(r, NOISE)
            };
            if !(PROB_CLAMP..=1.0 - PROB_CLAMP).contains(&p_label) {
                continue;
            }
            let g = (p_target - f64::from(y)) * inv_n;
            grad_logits.set(r, TARGET, g);
            grad_logits.set(r, NOISE, -g);
        }

        let (g_out_w, g_out_b, mut grad_hidden) = self.output.backward(&cache.hidden_out, &grad_logits);
        let act = self.config.classifier_activation;
        for (g, &pre) in grad_hidden.as_mut_slice().iter_mut().zip(cache.hidden_pre.as_slice()) {
            *g *= act.derivative(pre);
        }
        let (g_hid_w, g_hid_b, grad_features) = self.hidden.backward(&cache.features, &grad_hidden);

        let mut norm_grads = Vec::new();
        let grad_raw = match (&self.config.instance_norm, &cache.normalized) {
            (Some(spec), Some((xhat, inv_std))) => {
                let mut grad_xhat = grad_features;
                if spec.affine {
                    let d = xhat.cols();
                    let mut g_scale = vec![0.0; d];
                    let mut g_shift = vec![0.0; d];
                    for r in 0..n {
                        for c in 0..d {
                            let g = grad_xhat.get(r, c);
                            g_scale[c] += g * xhat.get(r, c);
                            g_shift[c] += g;
                            grad_xhat.set(r, c, g * self.norm_scale[c]);
                        }
                    }
                    norm_grads.push(g_scale);
                    norm_grads.push(g_shift);
                }
                normalize_rows_backward(xhat, inv_std, &grad_xhat)
            }
            _ => grad_features,
        };

        let mut head_grads = Vec::with_capacity(2 * self.head.len());
        let mut grad_h = grad_raw.slice_rows(0, cache.n_real);
        for (i, layer) in self.head.iter().enumerate().rev() {
            for (g, &pre) in grad_h.as_mut_slice().iter_mut().zip(cache.head_pre[i].as_slice()) {
                *g *= Activation::Relu.derivative(pre);
            }
            let (gw, gb, gin) = layer.backward(&cache.head_inputs[i], &grad_h);
            head_grads.push((gw.into_vec(), gb));
            grad_h = gin;
        }

        let mut tensors = Vec::with_capacity(self.config.tensor_lengths().len());
        for (gw, gb) in head_grads.into_iter().rev() {
            tensors.push(gw);
            tensors.push(gb);
        }
        tensors.extend(norm_grads);
        tensors.push(g_hid_w.into_vec());
        tensors.push(g_hid_b);
        tensors.push(g_out_w.into_vec());
        tensors.push(g_out_b);
        Ok(Gradients { tensors })
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        for layer in self.head.iter().chain([&self.hidden, &self.output]) {
            layer.check_finite()?;
        }
        Ok(())
    }
}

fn softmax_rows(logits: &Matrix) -> Matrix {
    let mut probs = Matrix::zeros(logits.rows(), 2);
    for r in 0..logits.rows() {
        let (p0, p1) = softmax2(logits.get(r, 0), logits.get(r, 1));
        probs.set(r, TARGET, p0);
        probs.set(r, NOISE, p1);
    }
    probs
}
