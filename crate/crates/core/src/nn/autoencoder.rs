//! Feedforward autoencoder with a mirrored decoder.

use crate::error::{Error, Result};
use crate::nn::layer::{Activation, DenseLayer, LayerCache, LayerGrad};
use crate::rng::{rng_for, STREAM_INIT};
use crate::scalar::Scalar;
use crate::tensor::Tensor2D;

/// Encoder and decoder layer stacks.
#[derive(Debug, Clone, PartialEq)]
pub struct AutoencoderParams<T> {
    pub encoder: Vec<DenseLayer<T>>,
    pub decoder: Vec<DenseLayer<T>>,
}

/// Activations kept from one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardPass<T> {
    encoder: Vec<LayerCache<T>>,
    decoder: Vec<LayerCache<T>>,
}

impl<T: Scalar> ForwardPass<T> {
    pub fn embedding(&self) -> &Tensor2D<T> {
        &self.encoder.last().expect("encoder has layers").output
    }

    pub fn reconstruction(&self) -> Option<&Tensor2D<T>> {
        self.decoder.last().map(|c| &c.output)
    }
}

/// Gradients for every autoencoder parameter, in the same layout as the params.
#[derive(Debug, Clone, PartialEq)]
pub struct AutoencoderGrads<T> {
    pub encoder: Vec<LayerGrad<T>>,
    pub decoder: Vec<LayerGrad<T>>,
}

impl<T: Scalar> AutoencoderGrads<T> {
    /// Flat views ordered like [`AutoencoderParams::param_slices_mut`].
    pub fn slices(&self) -> Vec<&[T]> {
        self.encoder
            .iter()
            .chain(&self.decoder)
            .flat_map(|g| [g.weights.as_slice(), g.bias.as_slice()])
            .collect()
    }
}

impl<T: Scalar> AutoencoderParams<T> {
    /// Builds `input_dim - dims[0] - ... - dims[last]` plus the mirrored decoder.
    /// Hidden layers use ReLU, the embedding and output layers are linear.
    pub fn new(input_dim: usize, dims: &[usize], seed: u64) -> Result<Self> {
        if dims.is_empty() || input_dim == 0 || dims.contains(&0) {
            return Err(Error::InvalidConfig(format!(
                "invalid architecture {input_dim}-{dims:?}"
            )));
        }
        let mut rng = rng_for(seed, STREAM_INIT, 0);
        let mut sizes = vec![input_dim];
        sizes.extend_from_slice(dims);
        let n = sizes.len() - 1;
        let act = |i: usize| {
            if i + 1 == n {
                Activation::Identity
            } else {
                Activation::Relu
            }
        };
        let encoder = (0..n)
            .map(|i| DenseLayer::uniform(sizes[i], sizes[i + 1], act(i), &mut rng))
            .collect();
        let rev: Vec<usize> = sizes.iter().rev().copied().collect();
        let decoder = (0..n)
            .map(|i| DenseLayer::uniform(rev[i], rev[i + 1], act(i), &mut rng))
            .collect();
        Ok(Self { encoder, decoder })
    }

    pub fn from_layers(encoder: Vec<DenseLayer<T>>, decoder: Vec<DenseLayer<T>>) -> Result<Self> {
        let params = Self { encoder, decoder };
        params.validate()?;
        Ok(params)
    }

    fn validate(&self) -> Result<()> {
        if self.encoder.is_empty() || self.decoder.is_empty() {
            return Err(Error::InvalidConfig("autoencoder needs layers".into()));
        }
        for stack in [&self.encoder, &self.decoder] {
            for w in stack.windows(2) {
                if w[0].out_dim() != w[1].in_dim() {
                    return Err(Error::DimensionMismatch {
                        context: "autoencoder layer chain",
                        expected: w[0].out_dim(),
                        actual: w[1].in_dim(),
                    });
                }
            }
        }
        if self.embed_dim() != self.decoder[0].in_dim() {
            return Err(Error::DimensionMismatch {
                context: "decoder input",
                expected: self.embed_dim(),
                actual: self.decoder[0].in_dim(),
            });
        }
        if self.decoder.last().unwrap().out_dim() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "decoder output",
                expected: self.input_dim(),
                actual: self.decoder.last().unwrap().out_dim(),
            });
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.encoder[0].in_dim()
    }

    pub fn embed_dim(&self) -> usize {
        self.encoder.last().expect("encoder has layers").out_dim()
    }

    /// Encoder sizes from input to embedding, e.g. `[64, 500, 500, 2000, 10]`.
    pub fn layer_dims(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.encoder.iter().map(|l| l.out_dim()))
            .collect()
    }

    pub fn encode(&self, batch: &Tensor2D<T>) -> Result<Tensor2D<T>> {
        if batch.cols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "encode",
                expected: self.input_dim(),
                actual: batch.cols(),
            });
        }
        run_stack(&self.encoder, batch)
    }

    pub fn decode(&self, embedding: &Tensor2D<T>) -> Result<Tensor2D<T>> {
        if embedding.cols() != self.embed_dim() {
            return Err(Error::DimensionMismatch {
                context: "decode",
                expected: self.embed_dim(),
                actual: embedding.cols(),
            });
        }
        run_stack(&self.decoder, embedding)
    }

    /// Encodes a large matrix in chunks to bound peak memory.
    pub fn encode_all(&self, data: &Tensor2D<T>) -> Result<Tensor2D<T>> {
        const CHUNK: usize = 1024;
        if data.rows() <= CHUNK {
            return self.encode(data);
        }
        let mut out = Vec::with_capacity(data.rows() * self.embed_dim());
        let idx: Vec<usize> = (0..data.rows()).collect();
        for c in idx.chunks(CHUNK) {
            out.extend(self.encode(&data.select_rows(c))?.into_vec());
        }
        Tensor2D::from_vec(data.rows(), self.embed_dim(), out)
    }

    /// Forward pass keeping intermediate activations. The decoder is only run
    /// when `with_decoder` is set.
    pub fn forward(&self, batch: &Tensor2D<T>, with_decoder: bool) -> Result<ForwardPass<T>> {
        if batch.cols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "forward",
                expected: self.input_dim(),
                actual: batch.cols(),
            });
        }
        let encoder = cache_stack(&self.encoder, batch.clone())?;
        let decoder = if with_decoder {
            let z = encoder.last().unwrap().output.clone();
            cache_stack(&self.decoder, z)?
        } else {
            Vec::new()
        };
        Ok(ForwardPass { encoder, decoder })
    }

    /// Backpropagates `dL/dz` (embedding) and optionally `dL/dr` (reconstruction).
    pub fn backward(
        &self,
        pass: &ForwardPass<T>,
        grad_embedding: &Tensor2D<T>,
        grad_reconstruction: Option<&Tensor2D<T>>,
    ) -> Result<AutoencoderGrads<T>> {
        let mut grad_z = grad_embedding.clone();
        let decoder = match grad_reconstruction {
            Some(gr) => {
                if pass.decoder.is_empty() {
                    return Err(Error::InvalidConfig(
                        "reconstruction gradient without decoder pass".into(),
                    ));
                }
                let (grads, gin) = backprop_stack(&self.decoder, &pass.decoder, gr, true)?;
                grad_z.add_scaled(&gin.expect("requested"), T::one())?;
                grads
            }
            None => self.decoder.iter().map(zero_grad).collect(),
        };
        let (encoder, _) = backprop_stack(&self.encoder, &pass.encoder, &grad_z, false)?;
        Ok(AutoencoderGrads { encoder, decoder })
    }

    pub fn zero_grads(&self) -> AutoencoderGrads<T> {
        AutoencoderGrads {
            encoder: self.encoder.iter().map(zero_grad).collect(),
            decoder: self.decoder.iter().map(zero_grad).collect(),
        }
    }

    /// Mutable flat views over every parameter: per layer weights then bias,
    /// encoder layers first.
    pub fn param_slices_mut(&mut self) -> Vec<&mut [T]> {
        self.encoder
            .iter_mut()
            .chain(self.decoder.iter_mut())
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }

    pub fn param_slices(&self) -> Vec<&[T]> {
        self.encoder
            .iter()
            .chain(&self.decoder)
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.param_slices()
            .iter()
            .all(|s| s.iter().all(|v| v.is_finite()))
    }
}

fn zero_grad<T: Scalar>(l: &DenseLayer<T>) -> LayerGrad<T> {
    LayerGrad {
        weights: Tensor2D::zeros(l.in_dim(), l.out_dim()),
        bias: vec![T::zero(); l.out_dim()],
    }
}

fn run_stack<T: Scalar>(layers: &[DenseLayer<T>], x: &Tensor2D<T>) -> Result<Tensor2D<T>> {
    let mut h = layers[0].forward(x)?;
    for l in &layers[1..] {
        h = l.forward(&h)?;
    }
    Ok(h)
}

fn cache_stack<T: Scalar>(layers: &[DenseLayer<T>], x: Tensor2D<T>) -> Result<Vec<LayerCache<T>>> {
    let mut caches: Vec<LayerCache<T>> = Vec::with_capacity(layers.len());
    let mut input = x;
    for l in layers {
        let output = l.forward(&input)?;
        caches.push(LayerCache {
            input,
            output: output.clone(),
        });
        input = output;
    }
    Ok(caches)
}

fn backprop_stack<T: Scalar>(
    layers: &[DenseLayer<T>],
    caches: &[LayerCache<T>],
    grad_out: &Tensor2D<T>,
    need_input_grad: bool,
) -> Result<(Vec<LayerGrad<T>>, Option<Tensor2D<T>>)> {
    let mut grads = Vec::with_capacity(layers.len());
    let mut g = grad_out.clone();
    for (i, (l, c)) in layers.iter().zip(caches).enumerate().rev() {
        let want = i > 0 || need_input_grad;
        let (lg, gin) = l.backward(c, &g, want)?;
        grads.push(lg);
        if let Some(gin) = gin {
            g = gin;
        }
    }
    grads.reverse();
    let input_grad = if need_input_grad { Some(g) } else { None };
    Ok((grads, input_grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_ae(d: usize) -> AutoencoderParams<f64> {
        let mut eye = Tensor2D::zeros(d, d);
        for i in 0..d {
            eye.set(i, i, 1.0);
        }
        let layer = DenseLayer::new(eye, vec![0.0; d], Activation::Identity).unwrap();
        AutoencoderParams::from_layers(vec![layer.clone()], vec![layer]).unwrap()
    }

    #[test]
    fn zero_network_gives_zero_embedding() {
        let mut ae = AutoencoderParams::<f64>::new(3, &[4, 2], 1).unwrap();
        for s in ae.param_slices_mut() {
            s.fill(0.0);
        }
        let x = Tensor2D::from_rows(&[[1.0, -2.0, 3.0], [0.5, 0.5, 0.5]]).unwrap();
        let z = ae.encode(&x).unwrap();
        assert_eq!(z.shape(), (2, 2));
        assert!(z.as_slice().iter().all(|&v| v == 0.0));
        assert!(ae.decode(&z).unwrap().as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_round_trip() {
        let ae = identity_ae(3);
        let x = Tensor2D::from_rows(&[[1.0, -2.0, 3.0], [0.5, 0.25, 7.0]]).unwrap();
        let z = ae.encode(&x).unwrap();
        assert_eq!(z, x);
        assert_eq!(ae.decode(&z).unwrap(), x);
    }

    #[test]
    fn shapes_and_dims() {
        let ae = AutoencoderParams::<f64>::new(3, &[2], 7).unwrap();
        let x = Tensor2D::from_rows(&[[1.0, 2.0, 3.0], [3.0, 2.0, 1.0]]).unwrap();
        let r = ae.decode(&ae.encode(&x).unwrap()).unwrap();
        assert_eq!(r.shape(), x.shape());
        assert_eq!(ae.layer_dims(), vec![3, 2]);
        assert_eq!(ae.decoder.last().unwrap().activation, Activation::Identity);
        assert_eq!(ae.encoder.last().unwrap().activation, Activation::Identity);

        let err = ae.encode(&Tensor2D::zeros(1, 4)).unwrap_err();
        assert!(matches!(
            err,
            Error::DimensionMismatch {
                expected: 3,
                actual: 4,
                ..
            }
        ));
        assert!(ae.decode(&Tensor2D::zeros(1, 3)).is_err());
    }

    #[test]
    fn hidden_layers_use_relu() {
        let ae = AutoencoderParams::<f64>::new(8, &[5, 4, 2], 0).unwrap();
        let acts: Vec<_> = ae.encoder.iter().map(|l| l.activation).collect();
        assert_eq!(
            acts,
            vec![Activation::Relu, Activation::Relu, Activation::Identity]
        );
        let dims: Vec<_> = ae.decoder.iter().map(|l| l.out_dim()).collect();
        assert_eq!(dims, vec![4, 5, 8]);
    }

    #[test]
    fn encode_is_deterministic() {
        let ae = AutoencoderParams::<f64>::new(4, &[6, 3], 11).unwrap();
        let x = Tensor2D::from_rows(&[[0.1, 0.2, 0.3, 0.4]]).unwrap();
        assert_eq!(ae.encode(&x).unwrap(), ae.encode(&x).unwrap());
        assert_eq!(ae, AutoencoderParams::<f64>::new(4, &[6, 3], 11).unwrap());
    }
}
