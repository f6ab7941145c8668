//! Dense feed-forward network with tanh hidden layers, manual backprop, and
//! an Adam optimizer over the flattened parameter vector.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    /// `inputs × outputs`.
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Activations saved by the forward pass: the input to every layer.
pub struct Trace {
    inputs: Vec<Array2<f64>>,
}

impl Mlp {
    /// Glorot-uniform weights and zero biases; the last layer's weights are
    /// multiplied by `output_gain`.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], output_gain: f64, rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output sizes");
        let last = sizes.len() - 2;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(li, pair)| {
                let (fan_in, fan_out) = (pair[0], pair[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let gain = if li == last { output_gain } else { 1.0 };
                let w = Array2::from_shape_fn((fan_in, fan_out), |_| {
                    gain * limit * (2.0 * rng.random::<f64>() - 1.0)
                });
                Dense {
                    w,
                    b: Array1::zeros(fan_out),
                }
            })
            .collect();
        Self { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("nonempty").w.ncols()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        self.forward_traced(x).0
    }

    pub fn forward_traced(&self, x: &Array2<f64>) -> (Array2<f64>, Trace) {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = h.dot(&layer.w);
            z += &layer.b;
            inputs.push(h);
            if i < last {
                z.mapv_inplace(f64::tanh);
            }
            h = z;
        }
        (h, Trace { inputs })
    }

    /// Gradient of a scalar loss with respect to every parameter, flattened
    /// in `flat()` order, given `dL/d(output)`.
    pub fn backward(&self, trace: &Trace, grad_out: &Array2<f64>) -> Vec<f64> {
        let n = self.layers.len();
        let mut grads: Vec<(Array2<f64>, Array1<f64>)> = Vec::with_capacity(n);
        let mut delta = grad_out.clone();
        for i in (0..n).rev() {
            let input = &trace.inputs[i];
            let gw = input.t().dot(&delta);
            let gb = delta.sum_axis(Axis(0));
            grads.push((gw, gb));
            if i > 0 {
                let mut back = delta.dot(&self.layers[i].w.t());
                // input to layer i is tanh output h; dtanh = 1 - h^2
                back.zip_mut_with(input, |d, &h| *d *= 1.0 - h * h);
                delta = back;
            }
        }
        grads.reverse();
        let mut flat = Vec::with_capacity(self.num_params());
        for (gw, gb) in grads {
            flat.extend(gw.iter().copied());
            flat.extend(gb.iter().copied());
        }
        flat
    }

    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend(l.w.iter().copied());
            out.extend(l.b.iter().copied());
        }
        out
    }

    pub fn set_flat(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.num_params());
        let mut it = values.iter().copied();
        for l in &mut self.layers {
            for w in l.w.iter_mut() {
                *w = it.next().expect("length checked");
            }
            for b in l.b.iter_mut() {
                *b = it.next().expect("length checked");
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.w.iter().all(|x| x.is_finite()) && l.b.iter().all(|x| x.is_finite()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(params: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; params],
            v: vec![0.0; params],
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// One descent step on `net` with gradient `grad`.
    pub fn step(&mut self, net: &mut Mlp, grad: &[f64]) {
        if self.lr == 0.0 {
            return;
        }
        self.t += 1;
        let b1t = 1.0 - self.beta1.powi(self.t as i32);
        let b2t = 1.0 - self.beta2.powi(self.t as i32);
        let mut params = net.flat();
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / b1t;
            let v_hat = self.v[i] / b2t;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        net.set_flat(&params);
    }
}
