//! Independent oracles and checks shared by the integration and acceptance
//! tests. Nothing here calls into the code it checks except to obtain the
//! quantity under test.
#![allow(dead_code)]

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use unseen::backends::{dec_target, BackendKind, ClusterModel};
use unseen::nn::{mse_loss, Activation, AutoencoderParams, DenseLayer};
use unseen::unseen::{nn_loss, nn_loss_simul, total_loss, total_loss_gradients, LossWeights};
use unseen::Tensor2D;

pub const FD_STEP: f64 = 1e-5;
pub const FD_REL_TOL: f64 = 1e-4;
pub const FD_PROBES: usize = 100;
/// Gradients smaller than this are compared absolutely.
pub const FD_FLOOR: f64 = 1e-6;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor2D<f64> {
    let v = (0..rows * cols).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    Tensor2D::from_vec(rows, cols, v).unwrap()
}

pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FD_FLOOR)
}

/// Central difference of `f` at `x` along coordinate `i`.
pub fn central_diff(x: &[f64], i: usize, f: impl Fn(&[f64]) -> f64) -> f64 {
    let mut p = x.to_vec();
    p[i] = x[i] + FD_STEP;
    let up = f(&p);
    p[i] = x[i] - FD_STEP;
    let down = f(&p);
    (up - down) / (2.0 * FD_STEP)
}

#[derive(Debug, Clone, Copy)]
pub struct FdReport {
    pub probes: usize,
    pub max_rel: f64,
}

impl FdReport {
    pub fn passed(&self) -> bool {
        self.probes == FD_PROBES && self.max_rel < FD_REL_TOL
    }
}

fn fd_suite(seed: u64, mut probe: impl FnMut(&mut ChaCha8Rng) -> f64) -> FdReport {
    let mut r = rng(seed);
    let max_rel = (0..FD_PROBES).map(|_| probe(&mut r)).fold(0.0, f64::max);
    FdReport {
        probes: FD_PROBES,
        max_rel,
    }
}

pub fn fd_mse(seed: u64) -> FdReport {
    fd_suite(seed, |r| {
        let recon = normal_matrix(r, 4, 3);
        let input = normal_matrix(r, 4, 3);
        let (_, grad) = mse_loss(&recon, &input).unwrap();
        let i = r.random_range(0..12);
        let num = central_diff(recon.as_slice(), i, |v| {
            mse_loss(&Tensor2D::from_vec(4, 3, v.to_vec()).unwrap(), &input).unwrap().0
        });
        rel_err(grad.as_slice()[i], num)
    })
}

/// Clustering loss of `kind` on random embeddings and centers. Coordinates
/// are drawn from the embedding and, for jointly optimized backends, from
/// the centers. DEC's target is frozen at the unperturbed point.
pub fn fd_clustering(kind: BackendKind, seed: u64) -> FdReport {
    fd_suite(seed, |r| {
        let (n, k, d) = (5, 3, 3);
        let z = normal_matrix(r, n, d);
        let centers = normal_matrix(r, k, d);
        let alpha = [0.5, 2.0, 5.0][r.random_range(0..3)];
        let model = ClusterModel::new(kind, centers.clone(), alpha, 1.0).unwrap();
        let target = (kind == BackendKind::Dec).then(|| dec_target(&model.soft_assign(&z).unwrap().unwrap()));
        let graph = model.clustering_loss_with_target(&z, target.as_ref()).unwrap();
        let loss_at = |zv: &[f64], cv: &[f64]| {
            let m = ClusterModel::new(kind, Tensor2D::from_vec(k, d, cv.to_vec()).unwrap(), alpha, 1.0).unwrap();
            m.clustering_loss_with_target(&Tensor2D::from_vec(n, d, zv.to_vec()).unwrap(), target.as_ref())
                .unwrap()
                .value
        };
        if kind.is_simultaneous() && r.random_bool(0.5) {
            let i = r.random_range(0..k * d);
            let num = central_diff(centers.as_slice(), i, |cv| loss_at(z.as_slice(), cv));
            rel_err(graph.grad_centers.as_ref().unwrap().as_slice()[i], num)
        } else {
            let i = r.random_range(0..n * d);
            let num = central_diff(z.as_slice(), i, |zv| loss_at(zv, centers.as_slice()));
            rel_err(graph.grad_embedding.as_slice()[i], num)
        }
    })
}

pub fn fd_nn(simul: bool, seed: u64) -> FdReport {
    fd_suite(seed, |r| {
        let (n, d) = (6, 2);
        let z = normal_matrix(r, n, d);
        let l = r.random_range(1..n);
        let f = |t: &Tensor2D<f64>| if simul { nn_loss_simul(t, l) } else { nn_loss(t, l) }.unwrap();
        let graph = f(&z);
        let i = r.random_range(0..n * d);
        let num = central_diff(z.as_slice(), i, |v| f(&Tensor2D::from_vec(n, d, v.to_vec()).unwrap()).value);
        rel_err(graph.grad_embedding.as_slice()[i], num)
    })
}

/// A 3-2-3 autoencoder with random weights.
pub fn tiny_autoencoder(r: &mut ChaCha8Rng) -> AutoencoderParams<f64> {
    let layer = |r: &mut ChaCha8Rng, i: usize, o: usize, act: Activation| {
        let bias = normal_matrix(r, 1, o).into_vec();
        DenseLayer::new(normal_matrix(r, i, o), bias, act).unwrap()
    };
    let enc = vec![layer(r, 3, 2, Activation::Identity)];
    let dec = vec![layer(r, 2, 3, Activation::Identity)];
    AutoencoderParams::from_layers(enc, dec).unwrap()
}

/// A 3-4-2-4-3 autoencoder with ReLU hidden layers.
pub fn small_relu_autoencoder(r: &mut ChaCha8Rng) -> AutoencoderParams<f64> {
    let layer = |r: &mut ChaCha8Rng, i: usize, o: usize, act: Activation| {
        let bias = normal_matrix(r, 1, o).into_vec();
        DenseLayer::new(normal_matrix(r, i, o), bias, act).unwrap()
    };
    let enc = vec![layer(r, 3, 4, Activation::Relu), layer(r, 4, 2, Activation::Identity)];
    let dec = vec![layer(r, 2, 4, Activation::Relu), layer(r, 4, 3, Activation::Identity)];
    AutoencoderParams::from_layers(enc, dec).unwrap()
}

/// The full composite objective through the network parameters and the
/// centers, for every backend.
pub fn fd_total(seed: u64) -> FdReport {
    fd_suite(seed, |r| {
        let kind = [BackendKind::Dcn, BackendKind::Dec, BackendKind::Dkm][r.random_range(0..3)];
        let ae = if r.random_bool(0.5) {
            tiny_autoencoder(r)
        } else {
            small_relu_autoencoder(r)
        };
        let batch = normal_matrix(r, 3, 3);
        let centers = normal_matrix(r, 2, 2);
        let model = ClusterModel::new(kind, centers.clone(), 1.0, 1.0).unwrap();
        let weights = LossWeights {
            lambda1: if kind == BackendKind::Dec { 0.0 } else { 0.7 },
            lambda2: 1.3,
            nn_loss_enabled: true,
        };
        let l = r.random_range(1..3);
        let target = (kind == BackendKind::Dec)
            .then(|| dec_target(&model.soft_assign(&ae.encode(&batch).unwrap()).unwrap().unwrap()));
        let loss = total_loss(&ae, &batch, &model, l, &weights, target.as_ref()).unwrap();
        let grads = total_loss_gradients(&ae, &loss).unwrap();
        let value = |ae: &AutoencoderParams<f64>, m: &ClusterModel<f64>| {
            total_loss(ae, &batch, m, l, &weights, target.as_ref()).unwrap().graph.value
        };

        let slices = grads.slices();
        let n_params: usize = slices.iter().map(|s| s.len()).sum();
        let n_centers = if kind.is_simultaneous() { centers.as_slice().len() } else { 0 };
        let mut pick = r.random_range(0..n_params + n_centers);
        if pick >= n_params {
            pick -= n_params;
            let num = central_diff(centers.as_slice(), pick, |cv| {
                let mut m = model.clone();
                m.centers.as_mut_slice().copy_from_slice(cv);
                value(&ae, &m)
            });
            return rel_err(loss.graph.grad_centers.as_ref().unwrap().as_slice()[pick], num);
        }
        let (mut s, mut off) = (0, pick);
        while off >= slices[s].len() {
            off -= slices[s].len();
            s += 1;
        }
        let flat = ae.param_slices()[s].to_vec();
        let num = central_diff(&flat, off, |v| {
            let mut p = ae.clone();
            p.param_slices_mut()[s].copy_from_slice(v);
            value(&p, &model)
        });
        rel_err(slices[s][off], num)
    })
}

// ---- metric oracles -------------------------------------------------------

fn choose2(n: usize) -> f64 {
    (n * n.saturating_sub(1)) as f64 / 2.0
}

/// Adjusted Rand index by enumerating every pair of samples.
pub fn ari_pairs(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    let (mut both, mut same_a, mut same_b) = (0usize, 0usize, 0usize);
    for i in 0..n {
        for j in i + 1..n {
            let sa = a[i] == a[j];
            let sb = b[i] == b[j];
            same_a += sa as usize;
            same_b += sb as usize;
            both += (sa && sb) as usize;
        }
    }
    let pairs = choose2(n);
    if pairs == 0.0 {
        return 1.0;
    }
    let expected = same_a as f64 * same_b as f64 / pairs;
    let max = (same_a + same_b) as f64 / 2.0;
    if max == expected {
        return 1.0;
    }
    (both as f64 - expected) / (max - expected)
}

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// NMI with geometric-mean normalization from label frequencies.
pub fn nmi_entropy(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len() as f64;
    let mut ca: HashMap<usize, usize> = HashMap::new();
    let mut cb: HashMap<usize, usize> = HashMap::new();
    let mut joint: HashMap<(usize, usize), usize> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *ca.entry(x).or_default() += 1;
        *cb.entry(y).or_default() += 1;
        *joint.entry((x, y)).or_default() += 1;
    }
    let ha = entropy(ca.values().copied(), n);
    let hb = entropy(cb.values().copied(), n);
    let hab = entropy(joint.values().copied(), n);
    let mi = ha + hb - hab;
    if ha == 0.0 && hb == 0.0 {
        return 1.0;
    }
    if ha == 0.0 || hb == 0.0 {
        return 0.0;
    }
    (mi / (ha * hb).sqrt()).clamp(0.0, 1.0)
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// Best accuracy over every one-to-one mapping of predicted clusters to
/// classes, by exhaustive search.
pub fn acc_exhaustive(truth: &[usize], pred: &[usize]) -> f64 {
    let k = truth.iter().chain(pred).max().map_or(1, |m| m + 1);
    let best = permutations(k)
        .iter()
        .map(|perm| truth.iter().zip(pred).filter(|(&t, &p)| perm[p] == t).count())
        .max()
        .unwrap_or(0);
    best as f64 / truth.len() as f64
}

/// Random labeling pairs with `N <= 12` and at most 6 labels on each side.
pub fn random_labelings(seed: u64, count: usize) -> Vec<(Vec<usize>, Vec<usize>)> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let n = r.random_range(1..=12);
            let ka = r.random_range(1..=6);
            let kb = r.random_range(1..=6);
            let a = (0..n).map(|_| r.random_range(0..ka)).collect();
            let b = (0..n).map(|_| r.random_range(0..kb)).collect();
            (a, b)
        })
        .collect()
}

/// Largest absolute deviation of (acc, ari, nmi) from the oracles.
pub fn metric_oracle_deviation(seed: u64, count: usize) -> f64 {
    random_labelings(seed, count)
        .iter()
        .map(|(a, b)| {
            let m = unseen::metrics::evaluate(a, b).unwrap();
            (m.acc - acc_exhaustive(a, b))
                .abs()
                .max((m.ari - ari_pairs(a, b)).abs())
                .max((m.nmi - nmi_entropy(a, b)).abs())
        })
        .fold(0.0, f64::max)
}

// ---- neighbor-loss oracle -------------------------------------------------

/// Plain neighbor loss by sorting every other batch member by
/// `(distance, index)`.
pub fn nn_loss_oracle(z: &Tensor2D<f64>, l: usize) -> f64 {
    let n = z.rows();
    let dist = |i: usize, j: usize| -> f64 {
        z.row(i).iter().zip(z.row(j)).map(|(a, b)| (a - b) * (a - b)).sum()
    };
    let mut total = 0.0;
    for x in 0..n {
        let mut others: Vec<(f64, usize)> = (0..n).filter(|&y| y != x).map(|y| (dist(x, y), y)).collect();
        others.sort_by(|p, q| p.partial_cmp(q).unwrap());
        total += others.iter().take(l).map(|p| p.0).sum::<f64>();
    }
    total / (l * n) as f64
}

pub fn mean_pair_dist_oracle(z: &Tensor2D<f64>) -> f64 {
    let n = z.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += z.row(i).iter().zip(z.row(j)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
            }
        }
    }
    s / (n * (n - 1)) as f64
}

// ---- randomized short runs ------------------------------------------------

use unseen::data::{make_blobs, z_normalize, BlobSpec, NormalizeMode};
use unseen::unseen::{run_unseen, RunConfig};

#[derive(Debug)]
pub struct ShortRun {
    pub description: String,
    pub n: usize,
    pub creation_totals: Vec<f64>,
    pub current_totals: Vec<usize>,
    pub ks: Vec<usize>,
    pub k_init: usize,
}

impl ShortRun {
    /// First violated framework invariant, if any.
    pub fn violation(&self) -> Option<String> {
        for (e, (&c, &cur)) in self.creation_totals.iter().zip(&self.current_totals).enumerate() {
            if (c - self.n as f64).abs() > 1e-6 * self.n as f64 {
                return Some(format!("{}: epoch {} creation total {c} != {}", self.description, e + 1, self.n));
            }
            if cur != self.n {
                return Some(format!("{}: epoch {} current total {cur} != {}", self.description, e + 1, self.n));
            }
        }
        let mut prev = self.k_init;
        for &k in &self.ks {
            if k > prev || k < 1 {
                return Some(format!("{}: k trace {:?} not non-increasing", self.description, self.ks));
            }
            prev = k;
        }
        None
    }
}

/// A short run with randomly drawn data and settings; `index` cycles the
/// backend so every kind is covered.
pub fn random_short_run(seed: u64, index: usize) -> ShortRun {
    let mut r = rng(seed.wrapping_mul(7919).wrapping_add(index as u64));
    let backend = [BackendKind::Dcn, BackendKind::Dec, BackendKind::Dkm][index % 3];
    let k = r.random_range(2..=5);
    let n = r.random_range(120..=260);
    let d = r.random_range(3..=8);
    let std = r.random_range(0.3..2.0);
    let ds = make_blobs(&BlobSpec {
        n_samples: n,
        n_features: d,
        k,
        std,
        seed: r.random(),
    })
    .unwrap();
    let ds = z_normalize(&ds, NormalizeMode::FeatureWise);
    let mut cfg = RunConfig::for_backend(backend);
    cfg.k_init = r.random_range(4..=12);
    cfg.t = r.random_range(0.2..0.9);
    cfg.epochs = r.random_range(4..=9);
    cfg.pretrain_epochs = 3;
    cfg.batch_size = [16, 32, 64][r.random_range(0..3)];
    cfg.lr = [1e-3, 3e-3, 1e-2][r.random_range(0..3)];
    cfg.layers = vec![16, 4];
    cfg.seed = r.random_range(0..1000);
    let out = run_unseen(&ds.features, &cfg).unwrap();
    ShortRun {
        description: format!("{} n={n} k_init={} t={:.2}", backend.name(), cfg.k_init, cfg.t),
        n,
        creation_totals: out.traces.iter().map(|t| t.creation_total).collect(),
        current_totals: out.traces.iter().map(|t| t.current_total).collect(),
        ks: out.traces.iter().map(|t| t.k).collect(),
        k_init: cfg.k_init,
    }
}
