//! Lloyd's k-means with k-means++ seeding.

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::{rng_for, Rng, STREAM_KMEANS};
use crate::scalar::Scalar;
use crate::tensor::{sq_dist, Tensor2D};

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult<T> {
    pub centers: Tensor2D<T>,
    pub labels: Vec<usize>,
    pub inertia: T,
    pub iterations: usize,
    /// Inertia of the assignment at the start of each Lloyd iteration.
    pub inertia_history: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansParams {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for KMeansParams {
    fn default() -> Self {
        Self {
            max_iter: 300,
            tol: 1e-6,
        }
    }
}

/// Nearest center per point; ties go to the lowest center index.
pub fn assign<T: Scalar>(centers: &Tensor2D<T>, points: &Tensor2D<T>) -> Result<Vec<usize>> {
    Ok(assign_with_dist(centers, points)?.0)
}

pub(crate) fn assign_with_dist<T: Scalar>(
    centers: &Tensor2D<T>,
    points: &Tensor2D<T>,
) -> Result<(Vec<usize>, Vec<T>)> {
    if centers.cols() != points.cols() {
        return Err(Error::DimensionMismatch {
            context: "assign",
            expected: centers.cols(),
            actual: points.cols(),
        });
    }
    if centers.rows() == 0 {
        return Err(Error::InvalidConfig("no centers to assign to".into()));
    }
    let mut labels = Vec::with_capacity(points.rows());
    let mut dists = Vec::with_capacity(points.rows());
    for p in points.row_iter() {
        let mut best = 0;
        let mut best_d = T::infinity();
        for (j, c) in centers.row_iter().enumerate() {
            let d = sq_dist(p, c);
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        labels.push(best);
        dists.push(best_d);
    }
    Ok((labels, dists))
}

fn validate<T: Scalar>(points: &Tensor2D<T>, k: usize) -> Result<()> {
    if k < 1 || k > points.rows() {
        return Err(Error::InvalidConfig(format!(
            "k-means needs 1 <= k <= N, got k={k} N={}",
            points.rows()
        )));
    }
    Ok(())
}

fn plus_plus<T: Scalar>(points: &Tensor2D<T>, k: usize, rng: &mut Rng) -> Tensor2D<T> {
    let n = points.rows();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = points
        .row_iter()
        .map(|p| sq_dist(p, points.row(chosen[0])).as_f64())
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 {
                    if r < w {
                        pick = i;
                        break;
                    }
                    r -= w;
                }
            }
            // float underflow at the tail: fall back to the last positive weight
            if d2[pick] == 0.0 {
                pick = d2.iter().rposition(|&w| w > 0.0).expect("total > 0");
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        chosen.push(next);
        for (i, p) in points.row_iter().enumerate() {
            let d = sq_dist(p, points.row(next)).as_f64();
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    points.select_rows(&chosen)
}

fn lloyd<T: Scalar>(points: &Tensor2D<T>, mut centers: Tensor2D<T>, params: &KMeansParams) -> Result<KMeansResult<T>> {
    let k = centers.rows();
    let dim = points.cols();
    let mut history = Vec::new();
    let mut iterations = 0;
    while iterations < params.max_iter {
        iterations += 1;
        let (labels, mut dists) = assign_with_dist(&centers, points)?;
        history.push(dists.iter().copied().sum());

        let mut sums = Tensor2D::<T>::zeros(k, dim);
        let mut counts = vec![0usize; k];
        for (p, &l) in points.row_iter().zip(&labels) {
            counts[l] += 1;
            for (s, &v) in sums.row_mut(l).iter_mut().zip(p) {
                *s += v;
            }
        }
        let mut next = centers.clone();
        for c in 0..k {
            if counts[c] > 0 {
                let inv = T::one() / T::of(counts[c] as f64);
                for (dst, &s) in next.row_mut(c).iter_mut().zip(sums.row(c)) {
                    *dst = s * inv;
                }
            } else {
                // farthest point from its own center; zero its distance so a
                // second empty cluster picks a different point
                let far = (0..dists.len())
                    .fold(0, |best, i| if dists[i] > dists[best] { i } else { best });
                next.row_mut(c).copy_from_slice(points.row(far));
                dists[far] = T::zero();
            }
        }
        let shift: T = centers
            .row_iter()
            .zip(next.row_iter())
            .map(|(a, b)| sq_dist(a, b))
            .sum();
        centers = next;
        if shift.as_f64() <= params.tol {
            break;
        }
    }
    let (labels, dists) = assign_with_dist(&centers, points)?;
    let inertia = dists.iter().copied().sum();
    Ok(KMeansResult {
        centers,
        labels,
        inertia,
        iterations,
        inertia_history: history,
    })
}

/// One k-means++ initialization followed by Lloyd iterations.
pub fn kmeans_fit<T: Scalar>(points: &Tensor2D<T>, k: usize, seed: u64, params: &KMeansParams) -> Result<KMeansResult<T>> {
    validate(points, k)?;
    let mut rng = rng_for(seed, STREAM_KMEANS, 0);
    let init = plus_plus(points, k, &mut rng);
    lloyd(points, init, params)
}

/// Best of `restarts` seeded runs by inertia; ties keep the earliest restart.
pub fn kmeans_restarts<T: Scalar>(
    points: &Tensor2D<T>,
    k: usize,
    seed: u64,
    restarts: usize,
    params: &KMeansParams,
) -> Result<KMeansResult<T>> {
    validate(points, k)?;
    let mut best: Option<KMeansResult<T>> = None;
    for r in 0..restarts.max(1) {
        let mut rng = rng_for(seed, STREAM_KMEANS, r as u64);
        let res = lloyd(points, plus_plus(points, k, &mut rng), params)?;
        if best.as_ref().is_none_or(|b| res.inertia < b.inertia) {
            best = Some(res);
        }
    }
    Ok(best.expect("at least one restart"))
}
