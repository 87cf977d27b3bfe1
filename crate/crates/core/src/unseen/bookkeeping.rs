//! Creation/current size tracking, dead-cluster detection and dissolution.

use serde::{Deserialize, Serialize};

use crate::backends::ClusterModel;
use crate::error::{Error, Result};
use crate::kmeans;
use crate::scalar::Scalar;
use crate::tensor::Tensor2D;

/// How survivors' creation sizes grow when they absorb a dead cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CreationUpdate {
    /// Each survivor inherits the dead cluster's creation size in proportion
    /// to the share of its samples it receives. An empty dead cluster hands
    /// its whole creation size to the survivor nearest its center. Keeps
    /// `sum(creation) == N`.
    #[default]
    Transfer,
    /// Each survivor's creation size grows by the number of samples it
    /// receives.
    Increment,
}

/// Per-cluster sizes, aligned with the rows of the cluster model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterBookkeeping {
    /// Stable IDs: the index each cluster had at initialization.
    pub cluster_ids: Vec<usize>,
    pub creation_size: Vec<f64>,
    pub current_size: Vec<usize>,
}

impl ClusterBookkeeping {
    /// Creation sizes are the sizes of the initial assignment.
    pub fn from_labels(k: usize, labels: &[usize]) -> Result<Self> {
        let current = sizes(k, labels)?;
        Ok(Self {
            cluster_ids: (0..k).collect(),
            creation_size: current.iter().map(|&c| c as f64).collect(),
            current_size: current,
        })
    }

    pub fn k(&self) -> usize {
        self.cluster_ids.len()
    }

    pub fn refresh_current(&mut self, labels: &[usize]) -> Result<()> {
        self.current_size = sizes(self.k(), labels)?;
        Ok(())
    }

    pub fn creation_total(&self) -> f64 {
        self.creation_size.iter().sum()
    }

    pub fn current_total(&self) -> usize {
        self.current_size.iter().sum()
    }

    /// `current / creation`; an empty cluster that was created empty has
    /// ratio 0, a non-empty one created empty has ratio infinity.
    pub fn ratio(&self, pos: usize) -> f64 {
        let (cur, cre) = (self.current_size[pos] as f64, self.creation_size[pos]);
        if cre > 0.0 {
            cur / cre
        } else if cur == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

fn sizes(k: usize, labels: &[usize]) -> Result<Vec<usize>> {
    let mut s = vec![0usize; k];
    for &l in labels {
        *s.get_mut(l).ok_or(Error::ClusterIndex { index: l, k })? += 1;
    }
    Ok(s)
}

/// Positions of clusters whose size fell strictly below `t` times their
/// creation size. If every cluster qualifies, the largest (lowest position
/// on ties) is spared.
pub fn detect_dead(bk: &ClusterBookkeeping, t: f64) -> Vec<usize> {
    let mut dead: Vec<usize> = (0..bk.k()).filter(|&i| bk.ratio(i) < t).collect();
    if !dead.is_empty() && dead.len() == bk.k() {
        let keep = (0..bk.k()).fold(0, |best, i| {
            if bk.current_size[i] > bk.current_size[best] {
                i
            } else {
                best
            }
        });
        dead.retain(|&i| i != keep);
    }
    dead
}

/// Removes all `dead` clusters at once, reassigns their members to the
/// nearest surviving center and updates creation/current sizes.
///
/// `labels` are the full-dataset assignments before removal, `embedded`
/// the matching embedding. Returns the assignments after removal.
pub fn dissolve<T: Scalar>(
    model: &mut ClusterModel<T>,
    bk: &mut ClusterBookkeeping,
    dead: &[usize],
    embedded: &Tensor2D<T>,
    labels: &[usize],
    rule: CreationUpdate,
) -> Result<Vec<usize>> {
    if dead.is_empty() {
        return Ok(labels.to_vec());
    }
    if labels.len() != embedded.rows() {
        return Err(Error::LabelLength(embedded.rows(), labels.len()));
    }
    let k_old = model.k();
    let dead_centers = model.centers.select_rows(dead);
    model.remove_clusters(dead)?;
    let survivors: Vec<usize> = (0..k_old).filter(|i| !dead.contains(i)).collect();
    let new_labels = model.hard_assign(embedded)?.hard;

    // received[d][s]: samples moving from dead cluster d to survivor s
    let mut received = vec![vec![0usize; survivors.len()]; dead.len()];
    for (&before, &after) in labels.iter().zip(&new_labels) {
        if let Some(d) = dead.iter().position(|&x| x == before) {
            received[d][after] += 1;
        }
    }
    let mut creation: Vec<f64> = survivors.iter().map(|&i| bk.creation_size[i]).collect();
    for (d, &old) in dead.iter().enumerate() {
        let moved: usize = received[d].iter().sum();
        match rule {
            CreationUpdate::Increment => {
                for (c, &r) in creation.iter_mut().zip(&received[d]) {
                    *c += r as f64;
                }
            }
            CreationUpdate::Transfer => {
                let mass = bk.creation_size[old];
                if moved > 0 {
                    for (c, &r) in creation.iter_mut().zip(&received[d]) {
                        *c += mass * r as f64 / moved as f64;
                    }
                } else {
                    let row = dead_centers.select_rows(&[d]);
                    let heir = kmeans::assign(&model.centers, &row)?[0];
                    creation[heir] += mass;
                }
            }
        }
    }
    bk.cluster_ids = survivors.iter().map(|&i| bk.cluster_ids[i]).collect();
    bk.creation_size = creation;
    bk.refresh_current(&new_labels)?;
    Ok(new_labels)
}
