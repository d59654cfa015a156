//! Fully connected ReLU stacks with optional identity shortcuts.
//!
//! Hidden layer `l` computes `h_l = relu(W_l h_{l-1} + b_l)`, plus `h_{l-1}`
//! when shortcuts are on and the widths match (every hidden layer but the
//! first, unless the input already has the hidden width). The output is
//! `v . h_L + c`.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonics::{common_dim, UnitPoint};
use crate::rng::{self, stream};

use super::train::Trainable;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DeepInit {
    /// Weights `N(0, kappa^2 / fan_in)`, biases zero.
    Gaussian { kappa: f64 },
    /// Weights `N(0, 2 / fan_in)`, biases `U[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
    HeStyle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeepNetSpec {
    pub hidden_layers: usize,
    pub width: usize,
    pub skip_connections: bool,
    pub bias: bool,
    pub init: DeepInit,
}

impl DeepNetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_layers == 0 || self.width == 0 {
            return Err(Error::Config("deep nets need hidden_layers >= 1 and width >= 1".into()));
        }
        if let DeepInit::Gaussian { kappa } = self.init {
            if !(kappa > 0.0) {
                return Err(Error::Config(format!("kappa must be > 0, got {kappa}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeepNet {
    spec: DeepNetSpec,
    input_dim: usize,
    weights: Vec<DMatrix<f64>>,
    biases: Vec<DVector<f64>>,
    out_w: DVector<f64>,
    out_b: f64,
}

pub fn init_deep(spec: DeepNetSpec, input_dim: usize, seed: u64) -> Result<DeepNet> {
    spec.validate()?;
    if input_dim == 0 {
        return Err(Error::Argument("input dimension must be >= 1".into()));
    }
    let mut r = rng::seeded(seed, stream::DEEP);
    let mut net = DeepNet::zeros(spec, input_dim)?;
    let fans: Vec<usize> = net.weights.iter().map(|w| w.ncols()).chain([spec.width]).collect();
    for (l, &fan_in) in fans.iter().enumerate() {
        let fan = fan_in as f64;
        let sigma = match spec.init {
            DeepInit::Gaussian { kappa } => kappa / fan.sqrt(),
            DeepInit::HeStyle => (2.0 / fan).sqrt(),
        };
        let bound = 1.0 / fan.sqrt();
        let he_bias = spec.bias && spec.init == DeepInit::HeStyle;
        if l < net.weights.len() {
            for w in net.weights[l].iter_mut() {
                *w = sigma * rng::standard_normal(&mut r);
            }
            if he_bias {
                for b in net.biases[l].iter_mut() {
                    *b = r.random_range(-bound..=bound);
                }
            }
        } else {
            for w in net.out_w.iter_mut() {
                *w = sigma * rng::standard_normal(&mut r);
            }
            if he_bias {
                net.out_b = r.random_range(-bound..=bound);
            }
        }
    }
    Ok(net)
}

impl DeepNet {
    /// All parameters zero.
    pub fn zeros(spec: DeepNetSpec, input_dim: usize) -> Result<Self> {
        spec.validate()?;
        let weights = (0..spec.hidden_layers)
            .map(|l| DMatrix::zeros(spec.width, if l == 0 { input_dim } else { spec.width }))
            .collect();
        Ok(Self {
            spec,
            input_dim,
            weights,
            biases: vec![DVector::zeros(spec.width); spec.hidden_layers],
            out_w: DVector::zeros(spec.width),
            out_b: 0.0,
        })
    }

    pub fn spec(&self) -> &DeepNetSpec {
        &self.spec
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// Weight matrix of hidden layer `l` (`width x fan_in`).
    pub fn layer_weights_mut(&mut self, l: usize) -> &mut DMatrix<f64> {
        &mut self.weights[l]
    }

    pub fn output_weights_mut(&mut self) -> &mut DVector<f64> {
        &mut self.out_w
    }

    fn has_shortcut(&self, l: usize) -> bool {
        self.spec.skip_connections && self.weights[l].ncols() == self.weights[l].nrows()
    }

    fn inputs(&self, points: &[UnitPoint]) -> Result<DMatrix<f64>> {
        let dim = common_dim(points)?;
        if dim != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                found: dim,
            });
        }
        Ok(DMatrix::from_fn(dim, points.len(), |j, i| points[i].coords()[j]))
    }

    /// Layer inputs `h_0 .. h_L` and pre-activations `z_1 .. z_L`, one column per sample.
    fn forward_cache(&self, x: DMatrix<f64>) -> (Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
        let mut acts = vec![x];
        let mut pre = Vec::with_capacity(self.weights.len());
        for l in 0..self.weights.len() {
            let mut z = &self.weights[l] * &acts[l];
            for mut col in z.column_iter_mut() {
                col += &self.biases[l];
            }
            let mut h = z.map(|v| v.max(0.0));
            if self.has_shortcut(l) {
                h += &acts[l];
            }
            pre.push(z);
            acts.push(h);
        }
        (acts, pre)
    }

    /// Pre-activations `z_1 .. z_L`, one column per point.
    pub fn pre_activations(&self, points: &[UnitPoint]) -> Result<Vec<DMatrix<f64>>> {
        Ok(self.forward_cache(self.inputs(points)?).1)
    }

    pub fn forward(&self, x: &UnitPoint) -> Result<f64> {
        Ok(self.predict(std::slice::from_ref(x))?[0])
    }
}

impl Trainable for DeepNet {
    fn predict(&self, points: &[UnitPoint]) -> Result<Vec<f64>> {
        let (acts, _) = self.forward_cache(self.inputs(points)?);
        let last = acts.last().expect("at least the input");
        Ok(last.tr_mul(&self.out_w).iter().map(|u| u + self.out_b).collect())
    }

    fn backprop(&self, points: &[UnitPoint], dl_du: &[f64]) -> Result<Vec<f64>> {
        let (acts, pre) = self.forward_cache(self.inputs(points)?);
        let g = DVector::from_column_slice(dl_du);
        let last = acts.last().expect("at least the input");
        let d_out_w = last * &g;
        let d_out_b = g.sum();
        // dL/dh_L, width x n
        let mut delta = &self.out_w * g.transpose();
        let mut d_w = vec![DMatrix::zeros(0, 0); self.weights.len()];
        let mut d_b = vec![DVector::zeros(0); self.weights.len()];
        for l in (0..self.weights.len()).rev() {
            let dz = delta.zip_map(&pre[l], |d, z| if z >= 0.0 { d } else { 0.0 });
            d_w[l] = &dz * acts[l].transpose();
            d_b[l] = dz.column_sum();
            let mut below = self.weights[l].tr_mul(&dz);
            if self.has_shortcut(l) {
                below += &delta;
            }
            delta = below;
        }
        let mut flat = Vec::with_capacity(self.params_len());
        for l in 0..self.weights.len() {
            flat.extend_from_slice(d_w[l].as_slice());
            if self.spec.bias {
                flat.extend_from_slice(d_b[l].as_slice());
            }
        }
        flat.extend_from_slice(d_out_w.as_slice());
        if self.spec.bias {
            flat.push(d_out_b);
        }
        Ok(flat)
    }

    fn params(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.params_len());
        for l in 0..self.weights.len() {
            flat.extend_from_slice(self.weights[l].as_slice());
            if self.spec.bias {
                flat.extend_from_slice(self.biases[l].as_slice());
            }
        }
        flat.extend_from_slice(self.out_w.as_slice());
        if self.spec.bias {
            flat.push(self.out_b);
        }
        flat
    }

    fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.params_len() {
            return Err(Error::DimensionMismatch {
                expected: self.params_len(),
                found: params.len(),
            });
        }
        let mut rest = params;
        let mut take = |n: usize| {
            let (head, tail) = rest.split_at(n);
            rest = tail;
            head
        };
        let bias = self.spec.bias;
        for l in 0..self.weights.len() {
            let n = self.weights[l].len();
            self.weights[l].as_mut_slice().copy_from_slice(take(n));
            if bias {
                let n = self.biases[l].len();
                self.biases[l].as_mut_slice().copy_from_slice(take(n));
            }
        }
        let n = self.out_w.len();
        self.out_w.as_mut_slice().copy_from_slice(take(n));
        if bias {
            self.out_b = take(1)[0];
        }
        Ok(())
    }

    fn step(&mut self, grad: &[f64], eta: f64) {
        let p: Vec<f64> = self.params().iter().zip(grad).map(|(p, g)| p - eta * g).collect();
        self.set_params(&p).expect("gradient has the parameter layout");
    }
}

impl DeepNet {
    fn params_len(&self) -> usize {
        let bias = usize::from(self.spec.bias);
        self.weights.iter().map(|w| w.len() + bias * w.nrows()).sum::<usize>() + self.out_w.len() + bias
    }
}
