mod common;

use proptest::prelude::*;
use unseen::data::{make_blobs, BlobSpec};
use unseen::kmeans::{assign, kmeans_fit, kmeans_restarts, KMeansParams};
use unseen::metrics::evaluate;
use unseen::Tensor2D;

/// Smallest inertia over every labeling of `xs` into at most `k` groups.
fn optimal_inertia(xs: &[f64], k: usize) -> f64 {
    let n = xs.len();
    let mut best = f64::INFINITY;
    let mut labels = vec![0usize; n];
    loop {
        let mut sum = vec![0.0; k];
        let mut cnt = vec![0usize; k];
        for (&x, &l) in xs.iter().zip(&labels) {
            sum[l] += x;
            cnt[l] += 1;
        }
        let inertia: f64 = xs
            .iter()
            .zip(&labels)
            .map(|(&x, &l)| (x - sum[l] / cnt[l] as f64).powi(2))
            .sum();
        best = best.min(inertia);
        let mut i = 0;
        while i < n {
            labels[i] += 1;
            if labels[i] < k {
                break;
            }
            labels[i] = 0;
            i += 1;
        }
        if i == n {
            return best;
        }
    }
}

fn column(xs: &[f64]) -> Tensor2D<f64> {
    Tensor2D::from_vec(xs.len(), 1, xs.to_vec()).unwrap()
}

#[test]
fn two_pairs_example() {
    let xs = [0.0, 0.1, 10.0, 10.1];
    let r = kmeans_fit(&column(&xs), 2, 0, &KMeansParams::default()).unwrap();
    let mut c: Vec<f64> = r.centers.as_slice().to_vec();
    c.sort_by(f64::total_cmp);
    assert!((c[0] - 0.05).abs() < 1e-12 && (c[1] - 10.05).abs() < 1e-12);
    assert!((r.inertia - optimal_inertia(&xs, 2)).abs() < 1e-12);
}

#[test]
fn k_equals_n_has_zero_inertia() {
    let r = kmeans_fit(&column(&[3.0, -1.0, 7.5, 2.0]), 4, 9, &KMeansParams::default()).unwrap();
    assert!(r.inertia.abs() < 1e-12);
}

#[test]
fn degenerate_blobs_are_recovered() {
    for seed in 0..5 {
        let ds = make_blobs(&BlobSpec { n_samples: 40, n_features: 3, k: 4, std: 0.0, seed }).unwrap();
        let r = kmeans_restarts(&ds.features, 4, seed, 10, &KMeansParams::default()).unwrap();
        let m = evaluate(ds.labels.as_ref().unwrap(), &r.labels).unwrap();
        assert_eq!(m.ari, 1.0, "seed {seed}");
    }
}

/// Lloyd with k-means++ only guarantees a local optimum, so the global
/// optimum is checked as a hit rate over many tiny instances.
#[test]
fn restarts_usually_reach_the_optimum() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
    let trials = 300;
    let mut hits = 0;
    for seed in 0..trials {
        let n = rng.random_range(3..=8);
        let k = rng.random_range(2..=3.min(n));
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let r = kmeans_restarts(&column(&xs), k, seed, 10, &KMeansParams::default()).unwrap();
        if r.inertia <= optimal_inertia(&xs, k) * (1.0 + 1e-9) + 1e-12 {
            hits += 1;
        }
    }
    assert!(hits * 100 >= trials * 97, "optimum reached in {hits}/{trials}");
}

proptest! {
    #[test]
    fn restarts_return_a_lloyd_fixed_point(
        xs in prop::collection::vec(-5.0f64..5.0, 2..=8),
        k in 1usize..=3,
        seed in 0u64..1000,
    ) {
        prop_assume!(k <= xs.len());
        let x = column(&xs);
        let p = KMeansParams::default();
        let r = kmeans_restarts(&x, k, seed, 5, &p).unwrap();
        prop_assert!(r.inertia <= kmeans_fit(&x, k, seed, &p).unwrap().inertia + 1e-12);
        prop_assert!(r.inertia >= optimal_inertia(&xs, k) - 1e-9);
        prop_assert_eq!(assign(&r.centers, &x).unwrap(), r.labels.clone());
        for c in 0..k {
            let members: Vec<f64> = xs.iter().zip(&r.labels).filter(|(_, &l)| l == c).map(|(&v, _)| v).collect();
            if !members.is_empty() {
                let mean = members.iter().sum::<f64>() / members.len() as f64;
                prop_assert!((r.centers.get(c, 0) - mean).abs() < 1e-3, "center {} mean {}", r.centers.get(c, 0), mean);
            }
        }
    }

    #[test]
    fn lloyd_inertia_never_increases(
        pts in prop::collection::vec(-10.0f64..10.0, 4..60),
        k in 1usize..5,
        seed in 0u64..1000,
    ) {
        let n = pts.len() / 2;
        prop_assume!(n >= k);
        let x = Tensor2D::from_vec(n, 2, pts[..2 * n].to_vec()).unwrap();
        let r = kmeans_fit(&x, k, seed, &KMeansParams::default()).unwrap();
        for w in r.inertia_history.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12, "{:?}", r.inertia_history);
        }
        prop_assert_eq!(assign(&r.centers, &x).unwrap(), r.labels.clone());
        prop_assert!(r.labels.iter().all(|&l| l < k));
    }
}
