use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::NnError;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
    Relu,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + libm::exp(-z)),
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative expressed through the unit's output `y`:
    /// `y(1-y)` for the sigmoid, the step function for ReLU.
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Relu => "relu",
        }
    }
}

/// One dense layer. `weights` is row-major with shape `outputs x inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    inputs: usize,
    outputs: usize,
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl Layer {
    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.inputs + col]
    }

    fn affine(&self, x: &[f64], activation: Activation) -> Vec<f64> {
        self.weights
            .chunks_exact(self.inputs)
            .zip(&self.biases)
            .map(|(row, b)| {
                let z: f64 = row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + b;
                activation.apply(z)
            })
            .collect()
    }
}

/// Per-layer activations of one forward pass; `activations[0]` is the input
/// and the last entry is the network output.
#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    pub activations: Vec<Vec<f64>>,
}

impl Forward {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("at least the input")
    }
}

/// Loss gradients with the same layout as the network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

/// Feed-forward perceptron; every layer (output included) uses `activation`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layer_sizes: Vec<usize>,
    activation: Activation,
    layers: Vec<Layer>,
}

fn check_sizes(sizes: &[usize]) -> Result<(), NnError> {
    if sizes.len() < 2 || sizes.contains(&0) {
        return Err(NnError::Architecture(sizes.to_vec()));
    }
    Ok(())
}

impl Mlp {
    /// Glorot-uniform weights in `[-r, r]`, `r = sqrt(6 / (fan_in + fan_out))`,
    /// zero biases; drawn in layer order, row-major, from one seeded stream.
    pub fn new(layer_sizes: &[usize], activation: Activation, seed: u64) -> Result<Self, NnError> {
        check_sizes(layer_sizes)?;
        let mut rng = rng::seeded(seed);
        let layers = layer_sizes
            .windows(2)
            .map(|w| {
                let (inputs, outputs) = (w[0], w[1]);
                let r = libm::sqrt(6.0 / (inputs + outputs) as f64);
                let weights = (0..inputs * outputs)
                    .map(|_| (2.0 * rng::unit(&mut rng) - 1.0) * r)
                    .collect();
                Layer {
                    inputs,
                    outputs,
                    weights,
                    biases: vec![0.0; outputs],
                }
            })
            .collect();
        Ok(Mlp {
            layer_sizes: layer_sizes.to_vec(),
            activation,
            layers,
        })
    }

    /// All weights and biases zero.
    pub fn zeros(layer_sizes: &[usize], activation: Activation) -> Result<Self, NnError> {
        check_sizes(layer_sizes)?;
        let layers = layer_sizes
            .windows(2)
            .map(|w| Layer {
                inputs: w[0],
                outputs: w[1],
                weights: vec![0.0; w[0] * w[1]],
                biases: vec![0.0; w[1]],
            })
            .collect();
        Ok(Mlp {
            layer_sizes: layer_sizes.to_vec(),
            activation,
            layers,
        })
    }

    /// Rebuilds a network from row-major weights and biases, checking shapes.
    pub fn from_parts(
        layer_sizes: &[usize],
        activation: Activation,
        weights: Vec<Vec<f64>>,
        biases: Vec<Vec<f64>>,
    ) -> Result<Self, NnError> {
        check_sizes(layer_sizes)?;
        let n = layer_sizes.len() - 1;
        if weights.len() != n || biases.len() != n {
            return Err(NnError::Shape {
                expected: n,
                found: weights.len().min(biases.len()),
            });
        }
        let mut layers = Vec::with_capacity(n);
        for (l, (w, b)) in weights.into_iter().zip(biases).enumerate() {
            let (inputs, outputs) = (layer_sizes[l], layer_sizes[l + 1]);
            if w.len() != inputs * outputs {
                return Err(NnError::Shape {
                    expected: inputs * outputs,
                    found: w.len(),
                });
            }
            if b.len() != outputs {
                return Err(NnError::Shape {
                    expected: outputs,
                    found: b.len(),
                });
            }
            layers.push(Layer {
                inputs,
                outputs,
                weights: w,
                biases: b,
            });
        }
        Ok(Mlp {
            layer_sizes: layer_sizes.to_vec(),
            activation,
            layers,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_size(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn weight_mut(&mut self, layer: usize, row: usize, col: usize) -> &mut f64 {
        let l = &mut self.layers[layer];
        assert!(row < l.outputs && col < l.inputs);
        &mut l.weights[row * l.inputs + col]
    }

    pub fn bias_mut(&mut self, layer: usize, row: usize) -> &mut f64 {
        &mut self.layers[layer].biases[row]
    }

    pub fn forward(&self, x: &[f64]) -> Result<Forward, NnError> {
        if x.len() != self.input_size() {
            return Err(NnError::Shape {
                expected: self.input_size(),
                found: x.len(),
            });
        }
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.to_vec());
        for layer in &self.layers {
            let next = layer.affine(activations.last().unwrap(), self.activation);
            activations.push(next);
        }
        Ok(Forward { activations })
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize, NnError> {
        Ok(argmax(self.forward(x)?.output()))
    }

    /// Error terms for every layer (index `l` belongs to `layers[l]`),
    /// computed back to front from the output error `f'(y)(y - t)`.
    pub fn backprop(&self, forward: &Forward, target: &[f64]) -> Result<Vec<Vec<f64>>, NnError> {
        let out = forward.output();
        if target.len() != out.len() {
            return Err(NnError::Shape {
                expected: out.len(),
                found: target.len(),
            });
        }
        let act = self.activation;
        let mut deltas = vec![Vec::new(); self.layers.len()];
        let last = self.layers.len() - 1;
        deltas[last] = out
            .iter()
            .zip(target)
            .map(|(&y, &t)| act.derivative_from_output(y) * (y - t))
            .collect();
        for l in (0..last).rev() {
            let down = &self.layers[l + 1];
            let y = &forward.activations[l + 1];
            deltas[l] = backpropagated(act, y, &deltas[l + 1], down.weights(), down.inputs)?;
        }
        Ok(deltas)
    }

    /// `w += -rate * delta * x` for every synapse; biases see `x = 1`.
    pub fn update_weights(
        &mut self,
        forward: &Forward,
        deltas: &[Vec<f64>],
        learning_rate: f64,
    ) -> Result<(), NnError> {
        if deltas.len() != self.layers.len() {
            return Err(NnError::Shape {
                expected: self.layers.len(),
                found: deltas.len(),
            });
        }
        for (l, layer) in self.layers.iter_mut().enumerate() {
            let x = &forward.activations[l];
            let d = &deltas[l];
            if d.len() != layer.outputs || x.len() != layer.inputs {
                return Err(NnError::Shape {
                    expected: layer.outputs,
                    found: d.len(),
                });
            }
            for (j, (row, &dj)) in layer.weights.chunks_exact_mut(layer.inputs).zip(d).enumerate() {
                if dj == 0.0 {
                    continue;
                }
                let step = -learning_rate * dj;
                for (w, &xi) in row.iter_mut().zip(x) {
                    *w += step * xi;
                }
                layer.biases[j] += step;
            }
        }
        Ok(())
    }

    /// Gradient of `sum((y - t)^2) / 2` for one sample.
    pub fn gradients(&self, x: &[f64], target: &[f64]) -> Result<Gradients, NnError> {
        let fwd = self.forward(x)?;
        let deltas = self.backprop(&fwd, target)?;
        let weights = deltas
            .iter()
            .zip(&fwd.activations)
            .map(|(d, a)| d.iter().flat_map(|&dj| a.iter().map(move |&ai| dj * ai)).collect())
            .collect();
        Ok(Gradients {
            weights,
            biases: deltas,
        })
    }

    /// One stochastic-gradient step on a single sample.
    pub fn sgd_step(&mut self, x: &[f64], target: &[f64], learning_rate: f64) -> Result<(), NnError> {
        let fwd = self.forward(x)?;
        let deltas = self.backprop(&fwd, target)?;
        self.update_weights(&fwd, &deltas, learning_rate)
    }
}

fn backpropagated(
    act: Activation,
    y: &[f64],
    downstream: &[f64],
    weights: &[f64],
    width: usize,
) -> Result<Vec<f64>, NnError> {
    if width != y.len() || weights.len() != downstream.len() * width {
        return Err(NnError::Shape {
            expected: downstream.len() * y.len(),
            found: weights.len(),
        });
    }
    let mut sums = vec![0.0; width];
    for (row, &d) in weights.chunks_exact(width).zip(downstream) {
        for (s, &w) in sums.iter_mut().zip(row) {
            *s += d * w;
        }
    }
    Ok(y.iter()
        .zip(sums)
        .map(|(&yi, s)| act.derivative_from_output(yi) * s)
        .collect())
}

/// Sigmoid output error term `y(1-y)(y-t)`, elementwise.
pub fn output_delta(y: &[f64], target: &[f64]) -> Vec<f64> {
    y.iter().zip(target).map(|(&y, &t)| y * (1.0 - y) * (y - t)).collect()
}

/// Sigmoid hidden error term `y(1-y) * sum_k delta_k w_kj`.
///
/// `downstream_weights` is the next layer's row-major matrix, shape
/// `downstream_deltas.len() x y_hidden.len()`.
pub fn hidden_delta(
    y_hidden: &[f64],
    downstream_deltas: &[f64],
    downstream_weights: &[f64],
) -> Result<Vec<f64>, NnError> {
    backpropagated(
        Activation::Sigmoid,
        y_hidden,
        downstream_deltas,
        downstream_weights,
        y_hidden.len(),
    )
}

/// Index of the largest component; the first wins ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Mean over samples of the summed squared component error.
pub fn mse<O: AsRef<[f64]>, T: AsRef<[f64]>>(outputs: &[O], targets: &[T]) -> Result<f64, NnError> {
    if outputs.is_empty() {
        return Err(NnError::EmptySet);
    }
    if outputs.len() != targets.len() {
        return Err(NnError::Shape {
            expected: outputs.len(),
            found: targets.len(),
        });
    }
    let mut total = 0.0;
    for (o, t) in outputs.iter().zip(targets) {
        let (o, t) = (o.as_ref(), t.as_ref());
        if o.len() != t.len() {
            return Err(NnError::Shape {
                expected: o.len(),
                found: t.len(),
            });
        }
        total += o.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    Ok(total / outputs.len() as f64)
}
