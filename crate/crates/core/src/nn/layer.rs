use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::scalar::Scalar;
use crate::tensor::Tensor2D;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

/// Fully connected layer `y = act(x W + b)` with `W` stored `in x out`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer<T> {
    pub weights: Tensor2D<T>,
    pub bias: Vec<T>,
    pub activation: Activation,
}

/// Per-layer values kept from the forward pass for backpropagation.
#[derive(Debug, Clone)]
pub(crate) struct LayerCache<T> {
    pub input: Tensor2D<T>,
    pub output: Tensor2D<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad<T> {
    pub weights: Tensor2D<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> DenseLayer<T> {
    /// Uniform init in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` for weights and bias.
    pub fn uniform(in_dim: usize, out_dim: usize, activation: Activation, rng: &mut Rng) -> Self {
        let bound = 1.0 / (in_dim as f64).sqrt();
        let mut draw = || T::of(rng.random_range(-bound..=bound));
        let weights: Vec<T> = (0..in_dim * out_dim).map(|_| draw()).collect();
        let bias = (0..out_dim).map(|_| draw()).collect();
        Self {
            weights: Tensor2D::from_vec(in_dim, out_dim, weights).expect("sized"),
            bias,
            activation,
        }
    }

    pub fn new(weights: Tensor2D<T>, bias: Vec<T>, activation: Activation) -> Result<Self> {
        if bias.len() != weights.cols() {
            return Err(Error::DimensionMismatch {
                context: "DenseLayer bias",
                expected: weights.cols(),
                actual: bias.len(),
            });
        }
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn forward(&self, x: &Tensor2D<T>) -> Result<Tensor2D<T>> {
        if x.cols() != self.in_dim() {
            return Err(Error::DimensionMismatch {
                context: "DenseLayer::forward",
                expected: self.in_dim(),
                actual: x.cols(),
            });
        }
        let mut y = x.matmul(&self.weights)?;
        let relu = self.activation == Activation::Relu;
        let cols = y.cols();
        for row in y.as_mut_slice().chunks_exact_mut(cols.max(1)) {
            for (v, &b) in row.iter_mut().zip(&self.bias) {
                *v += b;
                if relu && *v < T::zero() {
                    *v = T::zero();
                }
            }
        }
        Ok(y)
    }

    /// Returns parameter gradients and, when `need_input_grad`, `dL/dx`.
    pub(crate) fn backward(
        &self,
        cache: &LayerCache<T>,
        grad_out: &Tensor2D<T>,
        need_input_grad: bool,
    ) -> Result<(LayerGrad<T>, Option<Tensor2D<T>>)> {
        cache.output.check_same(grad_out, "DenseLayer::backward")?;
        let grad_pre = match self.activation {
            Activation::Identity => grad_out.clone(),
            Activation::Relu => {
                let mut g = grad_out.clone();
                for (gv, &o) in g.as_mut_slice().iter_mut().zip(cache.output.as_slice()) {
                    if o <= T::zero() {
                        *gv = T::zero();
                    }
                }
                g
            }
        };
        let weights = cache.input.matmul_tn(&grad_pre)?;
        let bias = grad_pre.column_sums();
        let grad_in = if need_input_grad {
            Some(grad_pre.matmul_nt(&self.weights)?)
        } else {
            None
        };
        Ok((LayerGrad { weights, bias }, grad_in))
    }
}
