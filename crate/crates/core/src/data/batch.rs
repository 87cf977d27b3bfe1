use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::{rng_for, STREAM_CLUSTER_BATCHES};

/// Shuffled mini-batches for one clustering epoch.
///
/// Every index in `0..n` appears exactly once. A trailing batch of a single
/// sample is merged into the previous one because the pairwise losses need
/// at least two members.
pub fn batches(n: usize, batch_size: usize, seed: u64, epoch: u64) -> Result<Vec<Vec<usize>>> {
    batches_on_stream(n, batch_size, seed, STREAM_CLUSTER_BATCHES, epoch)
}

pub(crate) fn batches_on_stream(
    n: usize,
    batch_size: usize,
    seed: u64,
    stream: u64,
    epoch: u64,
) -> Result<Vec<Vec<usize>>> {
    if batch_size < 2 {
        return Err(Error::InvalidConfig(format!(
            "batch size {batch_size} < 2"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_for(seed, stream, epoch));
    let mut out: Vec<Vec<usize>> = order.chunks(batch_size).map(<[usize]>::to_vec).collect();
    if out.len() >= 2 && out.last().is_some_and(|b| b.len() == 1) {
        let tail = out.pop().unwrap();
        out.last_mut().unwrap().extend(tail);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn singleton_merged() {
        let b = batches(5, 2, 0, 0).unwrap();
        let sizes: Vec<usize> = b.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![2, 3]);
    }

    #[test]
    fn deterministic_and_epoch_dependent() {
        assert_eq!(batches(100, 7, 3, 1).unwrap(), batches(100, 7, 3, 1).unwrap());
        assert_ne!(batches(100, 7, 3, 1).unwrap(), batches(100, 7, 3, 2).unwrap());
    }

    #[test]
    fn batch_size_below_two_rejected() {
        assert!(batches(10, 1, 0, 0).is_err());
    }

    proptest! {
        #[test]
        fn batches_partition_indices(n in 1usize..300, bs in 2usize..40, seed: u64, epoch in 0u64..5) {
            let b = batches(n, bs, seed, epoch).unwrap();
            let mut all: Vec<usize> = b.iter().flatten().copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            if n >= 2 {
                prop_assert!(b.iter().all(|x| x.len() >= 2));
            }
        }
    }
}
