use rand::Rng;

use super::NetError;
use crate::symbolic::{NoteVector, CHORD_CLASSES};

pub const INPUT_WIDTH: usize = 12;
pub const OUTPUT_WIDTH: usize = CHORD_CLASSES;

/// Fully connected layer; `weights` is `outputs × inputs`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    inputs: usize,
    outputs: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl DenseLayer {
    pub fn new(
        inputs: usize,
        outputs: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self, NetError> {
        if inputs == 0 || outputs == 0 {
            return Err(NetError::Shape("layer widths must be positive".into()));
        }
        if weights.len() != inputs * outputs || bias.len() != outputs {
            return Err(NetError::Shape(format!(
                "{inputs}→{outputs} layer needs {} weights and {outputs} biases, got {} and {}",
                inputs * outputs,
                weights.len(),
                bias.len()
            )));
        }
        Ok(DenseLayer {
            inputs,
            outputs,
            weights,
            bias,
        })
    }

    fn zeros(inputs: usize, outputs: usize) -> Self {
        DenseLayer {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    fn affine(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.inputs)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }
}

/// Feed-forward network: ReLU hidden layers, softmax output.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layers: Vec<DenseLayer>,
}

/// Parameter gradients laid out like [`MlpModel::layers`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub layers: Vec<DenseLayer>,
}

impl Gradient {
    pub fn flatten(&self) -> Vec<f64> {
        flatten(&self.layers)
    }
}

fn flatten(layers: &[DenseLayer]) -> Vec<f64> {
    layers
        .iter()
        .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
        .collect()
}

fn widths_ok(sizes: &[usize]) -> Result<(), NetError> {
    if sizes.len() < 2 || sizes.contains(&0) {
        return Err(NetError::Shape(format!("invalid layer sizes {sizes:?}")));
    }
    Ok(())
}

impl MlpModel {
    /// Glorot-uniform weights, zero biases. `sizes` includes input and output widths.
    pub fn initialized<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<Self, NetError> {
        widths_ok(sizes)?;
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let weights = (0..fan_in * fan_out)
                    .map(|_| rng.random_range(-limit..limit))
                    .collect();
                DenseLayer {
                    inputs: fan_in,
                    outputs: fan_out,
                    weights,
                    bias: vec![0.0; fan_out],
                }
            })
            .collect();
        Ok(MlpModel { layers })
    }

    pub fn zeros(sizes: &[usize]) -> Result<Self, NetError> {
        widths_ok(sizes)?;
        Ok(MlpModel {
            layers: sizes
                .windows(2)
                .map(|w| DenseLayer::zeros(w[0], w[1]))
                .collect(),
        })
    }

    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<Self, NetError> {
        if layers.is_empty() {
            return Err(NetError::Shape("model has no layers".into()));
        }
        if let Some(w) = layers.windows(2).find(|w| w[0].outputs != w[1].inputs) {
            return Err(NetError::Shape(format!(
                "layer widths do not chain: {} outputs feed {} inputs",
                w[0].outputs, w[1].inputs
            )));
        }
        let model = MlpModel { layers };
        if !model.is_finite() {
            return Err(NetError::Shape("non-finite parameter".into()));
        }
        Ok(model)
    }

    /// Checks the 12 → … → 48 shape required for chord prediction.
    pub fn ensure_harmonizer_shape(&self) -> Result<(), NetError> {
        if self.input_width() != INPUT_WIDTH || self.output_width() != OUTPUT_WIDTH {
            return Err(NetError::Shape(format!(
                "harmonizer must map {INPUT_WIDTH} inputs to {OUTPUT_WIDTH} classes, model is {:?}",
                self.layer_sizes()
            )));
        }
        Ok(())
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].inputs)
            .chain(self.layers.iter().map(|l| l.outputs))
            .collect()
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_width(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }

    pub fn parameters(&self) -> Vec<f64> {
        flatten(&self.layers)
    }

    pub fn set_parameters(&mut self, values: &[f64]) -> Result<(), NetError> {
        if values.len() != self.parameter_count() {
            return Err(NetError::Shape(format!(
                "expected {} parameters, got {}",
                self.parameter_count(),
                values.len()
            )));
        }
        let mut it = values.iter().copied();
        for layer in &mut self.layers {
            for w in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
                *w = it.next().expect("length checked");
            }
        }
        Ok(())
    }

    /// Pre-activations of every layer for one input; the last entry holds the logits.
    fn pre_activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let z = if i == 0 {
                layer.affine(x)
            } else {
                let a: Vec<f64> = out[i - 1].iter().map(|v| v.max(0.0)).collect();
                layer.affine(&a)
            };
            out.push(z);
        }
        out
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        self.pre_activations(x).pop().expect("at least one layer")
    }

    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.logits(x))
    }

    /// Class distribution over the 48 chord codes for one note vector.
    pub fn forward(&self, x: &NoteVector) -> Vec<f64> {
        self.probabilities(&x.to_f64())
    }

    /// Most probable class; ties resolve to the lowest index.
    pub fn predict(&self, x: &NoteVector) -> usize {
        argmax(&self.logits(&x.to_f64()))
    }

    /// Mean cross-entropy over `batch`.
    pub fn loss<I: AsRef<[f64]>>(&self, batch: &[(I, usize)]) -> f64 {
        let total: f64 = batch
            .iter()
            .map(|(x, y)| cross_entropy(&self.logits(x.as_ref()), *y))
            .sum();
        total / batch.len() as f64
    }

    /// Mean cross-entropy and its exact gradient by backpropagation.
    pub fn loss_and_gradient<I: AsRef<[f64]>>(&self, batch: &[(I, usize)]) -> (f64, Gradient) {
        let mut grads: Vec<DenseLayer> = self
            .layers
            .iter()
            .map(|l| DenseLayer::zeros(l.inputs, l.outputs))
            .collect();
        let mut total = 0.0;
        for (x, label) in batch {
            let x = x.as_ref();
            let zs = self.pre_activations(x);
            let logits = zs.last().expect("at least one layer");
            total += cross_entropy(logits, *label);
            let mut delta = softmax(logits);
            delta[*label] -= 1.0;
            for l in (0..self.layers.len()).rev() {
                let input: Vec<f64> = if l == 0 {
                    x.to_vec()
                } else {
                    zs[l - 1].iter().map(|v| v.max(0.0)).collect()
                };
                let g = &mut grads[l];
                for (o, d) in delta.iter().enumerate() {
                    g.bias[o] += d;
                    let row = &mut g.weights[o * g.inputs..(o + 1) * g.inputs];
                    for (gw, a) in row.iter_mut().zip(&input) {
                        *gw += d * a;
                    }
                }
                if l > 0 {
                    let layer = &self.layers[l];
                    let mut back = vec![0.0; layer.inputs];
                    for (o, d) in delta.iter().enumerate() {
                        let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                        for (b, w) in back.iter_mut().zip(row) {
                            *b += w * d;
                        }
                    }
                    for (b, z) in back.iter_mut().zip(&zs[l - 1]) {
                        if *z <= 0.0 {
                            *b = 0.0;
                        }
                    }
                    delta = back;
                }
            }
        }
        let scale = 1.0 / batch.len() as f64;
        for g in &mut grads {
            g.weights
                .iter_mut()
                .chain(g.bias.iter_mut())
                .for_each(|v| *v *= scale);
        }
        (total * scale, Gradient { layers: grads })
    }

    pub(crate) fn descend(&mut self, gradient: &Gradient, learning_rate: f64) {
        for (layer, g) in self.layers.iter_mut().zip(&gradient.layers) {
            for (w, d) in layer.weights.iter_mut().zip(&g.weights) {
                *w -= learning_rate * d;
            }
            for (b, d) in layer.bias.iter_mut().zip(&g.bias) {
                *b -= learning_rate * d;
            }
        }
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn cross_entropy(logits: &[f64], label: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    lse - logits[label]
}

/// Index of the first maximum.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}
