//! Fully connected ReLU network trained with mini-batch Adam.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs x inputs`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        (0..self.outputs)
            .map(|o| {
                let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
                row.iter().zip(x).fold(self.biases[o], |acc, (w, v)| acc + w * v)
            })
            .collect()
    }
}

/// ReLU on every hidden layer, identity on the output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub layers: Vec<Layer>,
}

impl Network {
    pub fn zeros(sizes: &[usize]) -> Self {
        Self {
            layers: sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect(),
        }
    }

    /// He-uniform weights, zero biases.
    pub fn random(sizes: &[usize], rng: &mut impl Rng) -> Self {
        let mut net = Self::zeros(sizes);
        for layer in &mut net.layers {
            let bound = (6.0 / layer.inputs as f64).sqrt();
            for w in &mut layer.weights {
                *w = rng.gen_range(-bound..bound);
            }
        }
        net
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].inputs];
        s.extend(self.layers.iter().map(|l| l.outputs));
        s
    }

    /// Pre-activations of every layer.
    fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut zs: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let z = if i == 0 {
                layer.forward(x)
            } else {
                layer.forward(&relu(&zs[i - 1]))
            };
            zs.push(z);
        }
        zs
    }

    pub fn forward(&self, x: &[f64]) -> f64 {
        self.activations(x).last().expect("non-empty network")[0]
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// Parameters flattened layer by layer, weights before biases.
    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            p.extend(&l.weights);
            p.extend(&l.biases);
        }
        p
    }

    pub fn set_params(&mut self, p: &[f64]) {
        let mut i = 0;
        for l in &mut self.layers {
            for w in l.weights.iter_mut().chain(l.biases.iter_mut()) {
                *w = p[i];
                i += 1;
            }
        }
    }

    /// Mean squared error over the batch and its gradient in [`Self::params`] order.
    pub fn loss_and_grad(&self, xs: &[&[f64]], ys: &[f64]) -> (f64, Vec<f64>) {
        let n = ys.len() as f64;
        let mut grads: Vec<Layer> = self.layers.iter().map(|l| Layer::zeros(l.inputs, l.outputs)).collect();
        let mut loss = 0.0;
        for (x, &y) in xs.iter().zip(ys) {
            let zs = self.activations(x);
            let out = zs.last().expect("non-empty network")[0];
            loss += (out - y).powi(2);
            let mut delta = vec![2.0 * (out - y) / n];
            for li in (0..self.layers.len()).rev() {
                let layer = &self.layers[li];
                let input: Vec<f64> = if li == 0 { x.to_vec() } else { relu(&zs[li - 1]) };
                let g = &mut grads[li];
                for o in 0..layer.outputs {
                    g.biases[o] += delta[o];
                    for (gw, v) in g.weights[o * layer.inputs..(o + 1) * layer.inputs].iter_mut().zip(&input) {
                        *gw += delta[o] * v;
                    }
                }
                if li > 0 {
                    let prev = &zs[li - 1];
                    delta = (0..layer.inputs)
                        .map(|i| {
                            if prev[i] <= 0.0 {
                                return 0.0;
                            }
                            (0..layer.outputs).map(|o| layer.weights[o * layer.inputs + i] * delta[o]).sum()
                        })
                        .collect();
                }
            }
        }
        let flat = Network { layers: grads }.params();
        (loss / n, flat)
    }
}

fn relu(z: &[f64]) -> Vec<f64> {
    z.iter().map(|v| v.max(0.0)).collect()
}

#[derive(Debug, Clone, Copy)]
pub struct TrainParams {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

/// A network over standardized inputs and target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perceptron {
    pub network: Network,
    pub x_mean: Vec<f64>,
    pub x_scale: Vec<f64>,
    pub y_mean: f64,
    /// Zero when the training target was constant; prediction is then `y_mean`.
    pub y_scale: f64,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl Perceptron {
    pub fn fit(x: &[Vec<f64>], y: &[f64], hidden: &[usize], train: TrainParams, seed: u64) -> Self {
        let width = x[0].len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x_mean, x_scale): (Vec<f64>, Vec<f64>) = (0..width)
            .map(|j| {
                let (m, s) = mean_std(x.iter().map(|r| r[j]));
                (m, if s > 0.0 { s } else { 1.0 })
            })
            .unzip();
        let (y_mean, y_scale) = mean_std(y.iter().copied());

        let mut sizes = vec![width];
        sizes.extend(hidden.iter().copied().filter(|&h| h > 0));
        sizes.push(1);
        let mut network = Network::random(&sizes, &mut rng);
        let mut model = Self {
            network: Network::zeros(&sizes),
            x_mean,
            x_scale,
            y_mean,
            y_scale,
        };
        if y_scale == 0.0 {
            return model;
        }

        let xs: Vec<Vec<f64>> = x.iter().map(|r| model.standardize(r)).collect();
        let ys: Vec<f64> = y.iter().map(|v| (v - y_mean) / y_scale).collect();
        let mut params = network.params();
        let mut adam = Adam::new(params.len(), train.learning_rate);
        let mut order: Vec<usize> = (0..ys.len()).collect();
        for _ in 0..train.epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(train.batch_size.max(1)) {
                let bx: Vec<&[f64]> = batch.iter().map(|&i| xs[i].as_slice()).collect();
                let by: Vec<f64> = batch.iter().map(|&i| ys[i]).collect();
                let (_, grad) = network.loss_and_grad(&bx, &by);
                adam.step(&mut params, &grad);
                network.set_params(&params);
            }
        }
        model.network = network;
        model
    }

    fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.x_mean.iter().zip(&self.x_scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        if self.y_scale == 0.0 {
            return self.y_mean;
        }
        self.y_mean + self.y_scale * self.network.forward(&self.standardize(x))
    }
}

struct Adam {
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize, lr: f64) -> Self {
        Self {
            lr,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * grad[i];
            self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * grad[i] * grad[i];
            params[i] -= self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + Self::EPS);
        }
    }
}
