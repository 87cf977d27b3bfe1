use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Adam with bias correction; one accumulator pair per parameter slice.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    step: u64,
    first: Vec<Vec<T>>,
    second: Vec<Vec<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(lr: f64) -> Self {
        Self {
            lr: T::of(lr),
            beta1: T::of(0.9),
            beta2: T::of(0.999),
            eps: T::of(1e-8),
            step: 0,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Drops accumulator rows for removed cluster centers. Only valid when
    /// the state tracks a single `k x dim` slice.
    pub fn remove_rows(&mut self, dim: usize, remove: &[usize]) {
        for acc in self.first.iter_mut().chain(self.second.iter_mut()) {
            let kept: Vec<T> = acc
                .chunks_exact(dim)
                .enumerate()
                .filter(|(i, _)| !remove.contains(i))
                .flat_map(|(_, r)| r.iter().copied())
                .collect();
            *acc = kept;
        }
    }

    pub fn step(&mut self, params: &mut [&mut [T]], grads: &[&[T]]) -> Result<()> {
        if params.len() != grads.len() {
            return Err(Error::DimensionMismatch {
                context: "adam_step parameter count",
                expected: params.len(),
                actual: grads.len(),
            });
        }
        if self.first.is_empty() {
            self.first = params.iter().map(|p| vec![T::zero(); p.len()]).collect();
            self.second = self.first.clone();
        }
        if self.first.len() != params.len() {
            return Err(Error::DimensionMismatch {
                context: "adam_step state",
                expected: self.first.len(),
                actual: params.len(),
            });
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.len() != g.len() || p.len() != self.first[i].len() {
                return Err(Error::DimensionMismatch {
                    context: "adam_step tensor",
                    expected: self.first[i].len(),
                    actual: g.len(),
                });
            }
        }

        self.step += 1;
        let t = self.step as i32;
        let one = T::one();
        let bc1 = one - self.beta1.powi(t);
        let bc2 = one - self.beta2.powi(t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.first.iter_mut().zip(self.second.iter_mut()))
        {
            for (((pv, &gv), mv), vv) in p.iter_mut().zip(g.iter()).zip(m.iter_mut()).zip(v.iter_mut()) {
                *mv = b1 * *mv + (one - b1) * gv;
                *vv = b2 * *vv + (one - b2) * gv * gv;
                let m_hat = *mv / bc1;
                let v_hat = *vv / bc2;
                *pv -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut adam = AdamState::<f64>::new(0.1);
        let mut p = vec![1.0, -2.0];
        adam.step(&mut [&mut p], &[&[0.0, 0.0]]).unwrap();
        assert_eq!(p, vec![1.0, -2.0]);
        assert_eq!(adam.steps(), 1);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut adam = AdamState::<f64>::new(0.1);
        let mut p = vec![0.0];
        adam.step(&mut [&mut p], &[&[1.0]]).unwrap();
        // m_hat = 1, v_hat = 1 -> 0.1 / (1 + 1e-8)
        assert!((p[0] + 0.1 / (1.0 + 1e-8)).abs() < 1e-15);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut adam = AdamState::<f64>::new(0.1);
        let mut p = vec![0.0, 1.0];
        assert!(adam.step(&mut [&mut p], &[&[1.0]]).is_err());
        assert!(adam.step(&mut [&mut p], &[]).is_err());
    }

    #[test]
    fn deterministic_runs() {
        let run = || {
            let mut adam = AdamState::<f64>::new(0.01);
            let mut p = vec![0.3, -0.7, 1.1];
            for i in 0..50 {
                let g: Vec<f64> = p.iter().map(|v| 2.0 * v + i as f64 * 1e-3).collect();
                adam.step(&mut [&mut p], &[&g]).unwrap();
            }
            p
        };
        let a = run();
        let b = run();
        assert_eq!(
            a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }
}
