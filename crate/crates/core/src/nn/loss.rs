use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor2D;

/// Scalar loss together with its gradient with respect to every differentiable
/// input: the embedded batch, the reconstruction and (for jointly optimized
/// backends) the cluster centers. Only the closed set of terms in this crate
/// build graphs, so there is no way to smuggle in an operator without a
/// matching gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGraph<T> {
    pub value: T,
    pub grad_embedding: Tensor2D<T>,
    pub grad_reconstruction: Option<Tensor2D<T>>,
    pub grad_centers: Option<Tensor2D<T>>,
}

impl<T: Scalar> LossGraph<T> {
    /// Constant zero loss over a `batch x dim` embedding.
    pub fn zero(batch: usize, dim: usize) -> Self {
        Self {
            value: T::zero(),
            grad_embedding: Tensor2D::zeros(batch, dim),
            grad_reconstruction: None,
            grad_centers: None,
        }
    }

    pub fn from_embedding(value: T, grad_embedding: Tensor2D<T>) -> Self {
        Self {
            value,
            grad_embedding,
            grad_reconstruction: None,
            grad_centers: None,
        }
    }

    /// `self += weight * other`, merging gradient slots.
    pub fn accumulate(&mut self, other: &LossGraph<T>, weight: T) -> Result<()> {
        self.value += weight * other.value;
        self.grad_embedding
            .add_scaled(&other.grad_embedding, weight)?;
        merge(&mut self.grad_reconstruction, &other.grad_reconstruction, weight)?;
        merge(&mut self.grad_centers, &other.grad_centers, weight)?;
        if !self.value.is_finite() {
            return Err(Error::NonFinite("loss value"));
        }
        Ok(())
    }
}

fn merge<T: Scalar>(
    slot: &mut Option<Tensor2D<T>>,
    other: &Option<Tensor2D<T>>,
    weight: T,
) -> Result<()> {
    if let Some(o) = other {
        match slot {
            Some(s) => s.add_scaled(o, weight)?,
            None => {
                let mut s = o.clone();
                s.scale(weight);
                *slot = Some(s);
            }
        }
    }
    Ok(())
}

/// Mean squared error over all entries and its gradient w.r.t. `recon`.
pub fn mse_loss<T: Scalar>(recon: &Tensor2D<T>, input: &Tensor2D<T>) -> Result<(T, Tensor2D<T>)> {
    recon.check_same(input, "mse_loss")?;
    let n = recon.as_slice().len();
    if n == 0 {
        return Err(Error::EmptyDataset("mse_loss"));
    }
    let inv = T::one() / T::of(n as f64);
    let two = T::of(2.0);
    let mut grad = Tensor2D::zeros(recon.rows(), recon.cols());
    let mut sum = T::zero();
    for ((g, &r), &x) in grad
        .as_mut_slice()
        .iter_mut()
        .zip(recon.as_slice())
        .zip(input.as_slice())
    {
        let d = r - x;
        sum += d * d;
        *g = two * d * inv;
    }
    Ok((sum * inv, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_examples() {
        let x = Tensor2D::from_rows(&[[0.0, 1.0]]).unwrap();
        assert_eq!(mse_loss(&x, &x).unwrap().0, 0.0);
        let off = x.map(|v| v + 1.0);
        assert_eq!(mse_loss(&off, &x).unwrap().0, 1.0);
        let r = Tensor2D::from_rows(&[[1.0, 3.0]]).unwrap();
        let (v, g) = mse_loss(&r, &x).unwrap();
        assert_eq!(v, 2.5);
        // 2 (r - x) / n
        assert_eq!(g.as_slice(), &[1.0, 2.0]);
        assert!(mse_loss(&r, &Tensor2D::zeros(2, 1)).is_err());
    }

    #[test]
    fn accumulate_weights_terms() {
        let mut a = LossGraph::<f64>::zero(2, 1);
        let mut b = LossGraph::from_embedding(2.0, Tensor2D::filled(2, 1, 1.0));
        b.grad_centers = Some(Tensor2D::filled(1, 1, 3.0));
        a.accumulate(&b, 0.5).unwrap();
        assert_eq!(a.value, 1.0);
        assert_eq!(a.grad_embedding.as_slice(), &[0.5, 0.5]);
        assert_eq!(a.grad_centers.unwrap().as_slice(), &[1.5]);
        let mut c = LossGraph::<f64>::zero(3, 1);
        assert!(c.accumulate(&b, 1.0).is_err());
    }
}
