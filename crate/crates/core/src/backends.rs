//! Centroid-based deep clustering objectives.
//!
//! * `Dcn`: alternating. Hard nearest-center loss on the embedding only;
//!   centers follow a running-average update after each network step.
//! * `Dec`: simultaneous. KL divergence between Student-t soft assignments
//!   `Q` and the sharpened target `P`, which is held constant.
//! * `Dkm`: simultaneous. Squared distances weighted by
//!   `softmax(-alpha * d^2)`.
//!
//! Clustering losses are averaged over the batch.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kmeans::{self, KMeansParams};
use crate::nn::LossGraph;
use crate::scalar::Scalar;
use crate::tensor::{sq_dist, Tensor2D};

const LOG_FLOOR: f64 = 1e-12;
const DIST_CAP: f64 = 1e12;
/// k-means restarts used to initialize the centers.
pub const INIT_RESTARTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Dcn,
    Dec,
    Dkm,
}

impl BackendKind {
    /// Centers receive gradients and are optimized jointly with the network.
    pub fn is_simultaneous(self) -> bool {
        !matches!(self, BackendKind::Dcn)
    }

    pub fn name(self) -> &'static str {
        match self {
            BackendKind::Dcn => "dcn",
            BackendKind::Dec => "dec",
            BackendKind::Dkm => "dkm",
        }
    }
}

impl std::str::FromStr for BackendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dcn" => Ok(BackendKind::Dcn),
            "dec" => Ok(BackendKind::Dec),
            "dkm" => Ok(BackendKind::Dkm),
            other => Err(Error::InvalidConfig(format!("unknown backend {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel<T> {
    pub centers: Tensor2D<T>,
    pub kind: BackendKind,
    /// DKM softmax sharpness.
    pub alpha: T,
    /// DEC Student-t degrees of freedom.
    pub nu: T,
    /// DCN running-average counts, one per center.
    pub dcn_counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignments<T> {
    pub hard: Vec<usize>,
    pub soft: Option<Tensor2D<T>>,
}

impl<T: Scalar> ClusterModel<T> {
    pub fn new(kind: BackendKind, centers: Tensor2D<T>, alpha: f64, nu: f64) -> Result<Self> {
        if centers.rows() == 0 {
            return Err(Error::InvalidConfig("cluster model needs a center".into()));
        }
        if !centers.is_finite() {
            return Err(Error::NonFinite("centers"));
        }
        let dcn_counts = if kind == BackendKind::Dcn {
            vec![0; centers.rows()]
        } else {
            Vec::new()
        };
        Ok(Self {
            centers,
            kind,
            alpha: T::of(alpha),
            nu: T::of(nu),
            dcn_counts,
        })
    }

    pub fn k(&self) -> usize {
        self.centers.rows()
    }

    pub fn dim(&self) -> usize {
        self.centers.cols()
    }

    fn check_dim(&self, z: &Tensor2D<T>, context: &'static str) -> Result<()> {
        if z.cols() != self.dim() {
            return Err(Error::DimensionMismatch {
                context,
                expected: self.dim(),
                actual: z.cols(),
            });
        }
        Ok(())
    }

    /// Squared distances `|B| x k`.
    pub fn distances(&self, z: &Tensor2D<T>) -> Result<Tensor2D<T>> {
        self.check_dim(z, "distances")?;
        let mut d = Tensor2D::zeros(z.rows(), self.k());
        for (i, zi) in z.row_iter().enumerate() {
            for (j, mu) in self.centers.row_iter().enumerate() {
                d.set(i, j, sq_dist(zi, mu));
            }
        }
        Ok(d)
    }

    /// Soft assignment matrix for DEC (Student-t) and DKM (softmax); `None` for DCN.
    pub fn soft_assign(&self, z: &Tensor2D<T>) -> Result<Option<Tensor2D<T>>> {
        let d = self.distances(z)?;
        Ok(match self.kind {
            BackendKind::Dcn => None,
            BackendKind::Dec => Some(student_t(&d, self.nu)),
            BackendKind::Dkm => Some(neg_softmax(&d, self.alpha).0),
        })
    }

    /// Hard labels (nearest center, lowest index on ties) plus soft matrix
    /// for the simultaneous backends.
    pub fn hard_assign(&self, z: &Tensor2D<T>) -> Result<Assignments<T>> {
        self.check_dim(z, "hard_assign")?;
        let hard = kmeans::assign(&self.centers, z)?;
        let soft = self.soft_assign(z)?;
        Ok(Assignments { hard, soft })
    }

    /// Batch clustering loss with gradients. For DEC the target distribution
    /// is computed from this batch's `Q` and treated as a constant.
    pub fn clustering_loss(&self, z: &Tensor2D<T>) -> Result<LossGraph<T>> {
        self.clustering_loss_with_target(z, None)
    }

    /// Like [`clustering_loss`](Self::clustering_loss) but with an explicit DEC
    /// target (ignored by the other backends).
    pub fn clustering_loss_with_target(&self, z: &Tensor2D<T>, target: Option<&Tensor2D<T>>) -> Result<LossGraph<T>> {
        self.check_dim(z, "clustering_loss")?;
        if z.rows() == 0 {
            return Err(Error::EmptyDataset("clustering_loss"));
        }
        let graph = match self.kind {
            BackendKind::Dcn => self.dcn_loss(z)?,
            BackendKind::Dec => self.dec_loss(z, target)?,
            BackendKind::Dkm => self.dkm_loss(z)?,
        };
        if !graph.value.is_finite() || !graph.grad_embedding.is_finite() {
            return Err(Error::NonFinite(match self.kind {
                BackendKind::Dcn => "DCN clustering loss",
                BackendKind::Dec => "DEC clustering loss",
                BackendKind::Dkm => "DKM clustering loss",
            }));
        }
        Ok(graph)
    }

    fn dcn_loss(&self, z: &Tensor2D<T>) -> Result<LossGraph<T>> {
        let (labels, dists) = kmeans::assign_with_dist(&self.centers, z)?;
        let inv_b = T::one() / T::of(z.rows() as f64);
        let two = T::of(2.0);
        let mut grad = Tensor2D::zeros(z.rows(), self.dim());
        for (i, &l) in labels.iter().enumerate() {
            let mu = self.centers.row(l);
            for ((g, &zv), &m) in grad.row_mut(i).iter_mut().zip(z.row(i)).zip(mu) {
                *g = two * (zv - m) * inv_b;
            }
        }
        let value = dists.iter().copied().sum::<T>() * inv_b;
        Ok(LossGraph::from_embedding(value, grad))
    }

    fn dkm_loss(&self, z: &Tensor2D<T>) -> Result<LossGraph<T>> {
        let d = self.distances(z)?;
        let cap = T::of(DIST_CAP);
        let (s, capped) = neg_softmax(&d, self.alpha);
        let inv_b = T::one() / T::of(z.rows() as f64);
        let mut value = T::zero();
        let mut g = Tensor2D::zeros(z.rows(), self.k());
        for i in 0..z.rows() {
            let row_d: Vec<T> = d.row(i).iter().map(|&v| v.min(cap)).collect();
            let mean: T = row_d.iter().zip(s.row(i)).map(|(&dv, &sv)| dv * sv).sum();
            value += mean;
            for j in 0..self.k() {
                if capped.get(i, j) {
                    continue;
                }
                let sv = s.get(i, j);
                // d/dd_j of sum_k s_k d_k with s = softmax(-alpha d)
                let gij = sv - self.alpha * sv * (row_d[j] - mean);
                g.set(i, j, gij * inv_b);
            }
        }
        let (gz, gmu) = distance_backward(z, &self.centers, &g);
        Ok(LossGraph {
            value: value * inv_b,
            grad_embedding: gz,
            grad_reconstruction: None,
            grad_centers: Some(gmu),
        })
    }

    fn dec_loss(&self, z: &Tensor2D<T>, target: Option<&Tensor2D<T>>) -> Result<LossGraph<T>> {
        let d = self.distances(z)?;
        let q = student_t(&d, self.nu);
        let owned;
        let p = match target {
            Some(p) => {
                p.check_same(&q, "DEC target")?;
                p
            }
            None => {
                owned = dec_target(&q);
                &owned
            }
        };
        let floor = T::of(LOG_FLOOR);
        let inv_b = T::one() / T::of(z.rows() as f64);
        let half = T::of(0.5);
        let mut value = T::zero();
        let mut g = Tensor2D::zeros(z.rows(), self.k());
        for i in 0..z.rows() {
            for j in 0..self.k() {
                let (pv, qv) = (p.get(i, j), q.get(i, j));
                if pv > T::zero() {
                    value += pv * (pv.max(floor).ln() - qv.max(floor).ln());
                }
                // dL/dd_ij = (q - p) * d(log w)/dd, log w = -(nu+1)/2 log(1 + d/nu)
                let dlogw = -(self.nu + T::one()) * half / (self.nu + d.get(i, j));
                g.set(i, j, (qv - pv) * dlogw * inv_b);
            }
        }
        let (gz, gmu) = distance_backward(z, &self.centers, &g);
        Ok(LossGraph {
            value: value * inv_b,
            grad_embedding: gz,
            grad_reconstruction: None,
            grad_centers: Some(gmu),
        })
    }

    /// Deletes the given center indices, preserving the order of survivors.
    pub fn remove_clusters(&mut self, dead: &[usize]) -> Result<()> {
        if let Some(&bad) = dead.iter().find(|&&i| i >= self.k()) {
            return Err(Error::ClusterIndex {
                index: bad,
                k: self.k(),
            });
        }
        let keep: Vec<usize> = (0..self.k()).filter(|i| !dead.contains(i)).collect();
        if keep.is_empty() {
            return Err(Error::NoSurvivor(self.k()));
        }
        if keep.len() == self.k() {
            return Ok(());
        }
        self.centers = self.centers.select_rows(&keep);
        if self.kind == BackendKind::Dcn {
            self.dcn_counts = keep.iter().map(|&i| self.dcn_counts[i]).collect();
        }
        Ok(())
    }

    /// DCN running-average center update: for every sample with label `i`,
    /// `count_i += 1; mu_i -= (mu_i - z) / count_i`.
    pub fn epoch_update(&mut self, z: &Tensor2D<T>, labels: &[usize]) -> Result<()> {
        if self.kind != BackendKind::Dcn {
            return Err(Error::NotAlternating);
        }
        self.check_dim(z, "epoch_update")?;
        if labels.len() != z.rows() {
            return Err(Error::LabelLength(z.rows(), labels.len()));
        }
        for (zi, &l) in z.row_iter().zip(labels) {
            if l >= self.k() {
                return Err(Error::ClusterIndex { index: l, k: self.k() });
            }
            self.dcn_counts[l] += 1;
            let eta = T::one() / T::of(self.dcn_counts[l] as f64);
            for (m, &v) in self.centers.row_mut(l).iter_mut().zip(zi) {
                *m -= eta * (*m - v);
            }
        }
        Ok(())
    }
}

/// Initializes centers by k-means (best of [`INIT_RESTARTS`]) on the
/// pretrained embedding. Returns the model and the k-means labels.
pub fn init_model<T: Scalar>(
    kind: BackendKind,
    embedded: &Tensor2D<T>,
    k_init: usize,
    seed: u64,
    alpha: f64,
    nu: f64,
) -> Result<(ClusterModel<T>, Vec<usize>)> {
    let km = kmeans::kmeans_restarts(embedded, k_init, seed, INIT_RESTARTS, &KMeansParams::default())?;
    let mut model = ClusterModel::new(kind, km.centers, alpha, nu)?;
    if kind == BackendKind::Dcn {
        for &l in &km.labels {
            model.dcn_counts[l] += 1;
        }
    }
    Ok((model, km.labels))
}

/// DEC target `p_ij = (q_ij^2 / f_j) / sum_j' (q_ij'^2 / f_j')` with `f_j = sum_i q_ij`.
pub fn dec_target<T: Scalar>(q: &Tensor2D<T>) -> Tensor2D<T> {
    let f = q.column_sums();
    let mut p = Tensor2D::zeros(q.rows(), q.cols());
    for i in 0..q.rows() {
        let mut total = T::zero();
        for j in 0..q.cols() {
            let v = if f[j] > T::zero() {
                q.get(i, j) * q.get(i, j) / f[j]
            } else {
                T::zero()
            };
            p.set(i, j, v);
            total += v;
        }
        if total > T::zero() {
            p.row_mut(i).iter_mut().for_each(|v| *v /= total);
        }
    }
    p
}

fn student_t<T: Scalar>(d: &Tensor2D<T>, nu: T) -> Tensor2D<T> {
    let expo = -(nu + T::one()) / T::of(2.0);
    let mut q = d.map(|v| (T::one() + v / nu).powf(expo));
    for i in 0..q.rows() {
        let s: T = q.row(i).iter().copied().sum();
        q.row_mut(i).iter_mut().for_each(|v| *v /= s);
    }
    q
}

/// Row-wise `softmax(-alpha * min(d, cap))` with max subtraction. The second
/// value flags capped entries, which carry no gradient.
fn neg_softmax<T: Scalar>(d: &Tensor2D<T>, alpha: T) -> (Tensor2D<T>, Grid) {
    let cap = T::of(DIST_CAP);
    let mut s = Tensor2D::zeros(d.rows(), d.cols());
    let mut capped = Grid::new(d.rows(), d.cols());
    for i in 0..d.rows() {
        let row = d.row(i);
        let lo = row.iter().fold(T::infinity(), |a, &b| a.min(b.min(cap)));
        let mut total = T::zero();
        for (j, &v) in row.iter().enumerate() {
            if v > cap {
                capped.set(i, j);
            }
            let e = (-alpha * (v.min(cap) - lo)).exp();
            s.set(i, j, e);
            total += e;
        }
        s.row_mut(i).iter_mut().for_each(|v| *v /= total);
    }
    (s, capped)
}

#[derive(Debug, Clone)]
struct Grid {
    cols: usize,
    bits: Vec<bool>,
}

impl Grid {
    fn new(rows: usize, cols: usize) -> Self {
        Self {
            cols,
            bits: vec![false; rows * cols],
        }
    }
    fn set(&mut self, i: usize, j: usize) {
        self.bits[i * self.cols + j] = true;
    }
    fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.cols + j]
    }
}

/// Chain rule through `d_ij = |z_i - mu_j|^2` given `g_ij = dL/dd_ij`.
fn distance_backward<T: Scalar>(z: &Tensor2D<T>, centers: &Tensor2D<T>, g: &Tensor2D<T>) -> (Tensor2D<T>, Tensor2D<T>) {
    let two = T::of(2.0);
    let mut gz = Tensor2D::zeros(z.rows(), z.cols());
    let mut gmu = Tensor2D::zeros(centers.rows(), centers.cols());
    for i in 0..z.rows() {
        for j in 0..centers.rows() {
            let gij = g.get(i, j);
            if gij == T::zero() {
                continue;
            }
            for c in 0..z.cols() {
                let diff = two * gij * (z.get(i, c) - centers.get(j, c));
                gz.row_mut(i)[c] += diff;
                gmu.row_mut(j)[c] -= diff;
            }
        }
    }
    (gz, gmu)
}
