//! Dense layers with hand-written backpropagation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::format::f64_17;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Tanh,
    Relu,
    Sigmoid,
    Softplus,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => sigmoid(z),
            Activation::Softplus => softplus(z),
        }
    }

    /// Derivative with respect to the pre-activation `z`, given `a = f(z)`.
    pub fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Softplus => sigmoid(z),
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

pub fn softplus(z: f64) -> f64 {
    if z > 30.0 {
        z
    } else {
        z.exp().ln_1p()
    }
}

/// `y = f(W x + b)` with `W` stored row-major as `outputs × inputs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
    #[serde(serialize_with = "f64_17::vec")]
    pub weights: Vec<f64>,
    #[serde(serialize_with = "f64_17::vec")]
    pub bias: Vec<f64>,
}

/// Values kept from a forward pass for the backward pass.
#[derive(Clone, Debug)]
pub struct Trace {
    pub z: Vec<f64>,
    pub a: Vec<f64>,
}

impl Dense {
    /// Glorot-uniform weights, zero bias.
    pub fn init<R: Rng + ?Sized>(inputs: usize, outputs: usize, activation: Activation, rng: &mut R) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        Self {
            inputs,
            outputs,
            activation,
            weights: (0..inputs * outputs).map(|_| rng.random_range(-limit..limit)).collect(),
            bias: vec![0.0; outputs],
        }
    }

    pub fn param_len(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub fn forward(&self, x: &[f64]) -> Trace {
        debug_assert_eq!(x.len(), self.inputs);
        let z: Vec<f64> = self
            .weights
            .chunks_exact(self.inputs)
            .zip(&self.bias)
            .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            .collect();
        let a = z.iter().map(|&v| self.activation.apply(v)).collect();
        Trace { z, a }
    }

    /// Accumulates parameter gradients into `grad` (weights then bias) given
    /// `d_out = ∂L/∂a`, and returns `∂L/∂x`.
    pub fn backward(&self, x: &[f64], trace: &Trace, d_out: &[f64], grad: &mut [f64]) -> Vec<f64> {
        let (gw, gb) = grad.split_at_mut(self.weights.len());
        let mut dx = vec![0.0; self.inputs];
        for o in 0..self.outputs {
            let dz = d_out[o] * self.activation.derivative(trace.z[o], trace.a[o]);
            if dz == 0.0 {
                continue;
            }
            gb[o] += dz;
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            let grow = &mut gw[o * self.inputs..(o + 1) * self.inputs];
            for i in 0..self.inputs {
                grow[i] += dz * x[i];
                dx[i] += dz * row[i];
            }
        }
        dx
    }

    pub fn params_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.weights, &mut self.bias)
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }
}

/// Applies one Adam step to every layer from a flat gradient buffer laid out
/// layer by layer.
pub fn adam_layers(
    layers: &mut [&mut Dense],
    grad: &[f64],
    states: &mut [crate::optim::AdamState],
    cfg: &crate::optim::AdamConfig,
) {
    let mut offset = 0;
    for (layer, state) in layers.iter_mut().zip(states) {
        let n = layer.param_len();
        let mut flat: Vec<f64> = layer.weights.iter().chain(&layer.bias).copied().collect();
        crate::optim::adam_step(&mut flat, &grad[offset..offset + n], state, cfg);
        let (w, b) = layer.params_mut();
        let split = w.len();
        w.copy_from_slice(&flat[..split]);
        b.copy_from_slice(&flat[split..]);
        offset += n;
    }
}
