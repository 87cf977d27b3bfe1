use serde::{Deserialize, Serialize};

use crate::data::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizeMode {
    /// Per column: mean 0, population std 1.
    FeatureWise,
    /// Single-channel images: one mean/std over all pixels.
    ChannelWise,
}

/// Z-normalizes features. Zero-variance columns (or a constant image set)
/// become all zeros.
pub fn z_normalize(ds: &Dataset, mode: NormalizeMode) -> Dataset {
    let mut out = ds.clone();
    let n = ds.len();
    let d = ds.dim();
    let x = out.features.as_mut_slice();
    match mode {
        NormalizeMode::FeatureWise => {
            for j in 0..d {
                let (mean, std) = moments((0..n).map(|i| x[i * d + j]));
                for i in 0..n {
                    x[i * d + j] = standardize(x[i * d + j], mean, std);
                }
            }
        }
        NormalizeMode::ChannelWise => {
            let (mean, std) = moments(x.iter().copied());
            for v in x.iter_mut() {
                *v = standardize(*v, mean, std);
            }
        }
    }
    out
}

fn moments(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn standardize(v: f64, mean: f64, std: f64) -> f64 {
    if std > 0.0 {
        (v - mean) / std
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor2D;
    use proptest::prelude::*;

    fn ds(rows: &[Vec<f64>]) -> Dataset {
        Dataset::new(Tensor2D::from_rows(rows).unwrap(), None, "t").unwrap()
    }

    #[test]
    fn feature_wise_examples() {
        let out = z_normalize(&ds(&[vec![1.0, 5.0], vec![3.0, 5.0]]), NormalizeMode::FeatureWise);
        assert_eq!(out.features.as_slice(), &[-1.0, 0.0, 1.0, 0.0]);
        let out = z_normalize(
            &ds(&[vec![5.0], vec![5.0], vec![5.0]]),
            NormalizeMode::FeatureWise,
        );
        assert_eq!(out.features.as_slice(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn channel_wise_example() {
        let out = z_normalize(
            &ds(&[vec![0.0; 4], vec![2.0; 4]]),
            NormalizeMode::ChannelWise,
        );
        assert_eq!(out.features.row(0), &[-1.0; 4]);
        assert_eq!(out.features.row(1), &[1.0; 4]);
    }

    proptest! {
        #[test]
        fn idempotent(values in proptest::collection::vec(-50.0f64..50.0, 6..40), channel: bool) {
            let n = values.len() / 2;
            let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![values[2 * i], values[2 * i + 1]]).collect();
            let mode = if channel { NormalizeMode::ChannelWise } else { NormalizeMode::FeatureWise };
            let once = z_normalize(&ds(&rows), mode);
            let twice = z_normalize(&once, mode);
            for (a, b) in once.features.as_slice().iter().zip(twice.features.as_slice()) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
