//! In-batch nearest-neighbor losses.

use crate::error::{Error, Result};
use crate::nn::LossGraph;
use crate::scalar::Scalar;
use crate::tensor::{sq_dist, Tensor2D};

/// Below this mean pairwise distance a batch counts as collapsed.
pub const COLLAPSE_EPS: f64 = 1e-12;

/// Neighbor count `floor(|B| / k_j)` clamped to `[1, |B| - 1]`.
pub fn compute_l(batch_size: usize, k_active: usize) -> usize {
    let upper = batch_size.saturating_sub(1).max(1);
    (batch_size / k_active.max(1)).clamp(1, upper)
}

fn pairwise<T: Scalar>(z: &Tensor2D<T>) -> Vec<T> {
    let n = z.rows();
    let mut d = vec![T::zero(); n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v = sq_dist(z.row(i), z.row(j));
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    d
}

/// The `l` nearest other members of the batch for each row; distance ties go
/// to the lower index.
pub fn neighbor_sets<T: Scalar>(z: &Tensor2D<T>, l: usize) -> Result<Vec<Vec<usize>>> {
    let d = pairwise(z);
    select_neighbors(&d, z.rows(), l)
}

fn select_neighbors<T: Scalar>(d: &[T], n: usize, l: usize) -> Result<Vec<Vec<usize>>> {
    if l == 0 || l >= n {
        return Err(Error::NeighborCount { l, batch: n });
    }
    Ok((0..n)
        .map(|i| {
            let row = &d[i * n..(i + 1) * n];
            let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            let cmp = |a: &usize, b: &usize| {
                row[*a]
                    .partial_cmp(&row[*b])
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.cmp(b))
            };
            if l < others.len() {
                others.select_nth_unstable_by(l - 1, cmp);
                others.truncate(l);
            }
            others.sort_unstable_by(cmp);
            others
        })
        .collect())
}

/// `1/(l|B|) * sum_x sum_{y in nn(x)} |z_x - z_y|^2` with gradients flowing
/// into both ends of every pair.
pub fn nn_loss<T: Scalar>(z: &Tensor2D<T>, l: usize) -> Result<LossGraph<T>> {
    let d = pairwise(z);
    nn_loss_from(z, &d, l)
}

fn nn_loss_from<T: Scalar>(z: &Tensor2D<T>, d: &[T], l: usize) -> Result<LossGraph<T>> {
    let n = z.rows();
    let sets = select_neighbors(d, n, l)?;
    let scale = T::one() / T::of((l * n) as f64);
    let two = T::of(2.0);
    let mut value = T::zero();
    let mut grad = Tensor2D::zeros(n, z.cols());
    for (x, neigh) in sets.iter().enumerate() {
        for &y in neigh {
            value += d[x * n + y];
            for c in 0..z.cols() {
                let g = two * scale * (z.get(x, c) - z.get(y, c));
                grad.row_mut(x)[c] += g;
                grad.row_mut(y)[c] -= g;
            }
        }
    }
    Ok(LossGraph::from_embedding(value * scale, grad))
}

/// Nearest-neighbor loss divided by the mean squared distance over all
/// ordered pairs of distinct batch members. A collapsed batch yields zero.
pub fn nn_loss_simul<T: Scalar>(z: &Tensor2D<T>, l: usize) -> Result<LossGraph<T>> {
    let n = z.rows();
    let d = pairwise(z);
    let num = nn_loss_from(z, &d, l)?;
    let pairs = T::of((n * (n - 1)) as f64);
    let den = d.iter().copied().sum::<T>() / pairs;
    if den.as_f64() < COLLAPSE_EPS {
        return Ok(LossGraph::zero(n, z.cols()));
    }
    // d den / d z_x = 4 (n z_x - sum_y z_y) / (n (n - 1))
    let sums = z.column_sums();
    let four = T::of(4.0);
    let nf = T::of(n as f64);
    let value = num.value / den;
    let mut grad = num.grad_embedding;
    let inv_den = T::one() / den;
    let ratio = value * inv_den;
    for x in 0..n {
        for c in 0..z.cols() {
            let dden = four * (nf * z.get(x, c) - sums[c]) / pairs;
            let g = grad.get(x, c) * inv_den - ratio * dden;
            grad.set(x, c, g);
        }
    }
    Ok(LossGraph::from_embedding(value, grad))
}
