//! External clustering quality: optimal-matching accuracy, NMI and ARI.

pub mod hungarian;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use hungarian::linear_sum_assignment;

/// Co-occurrence counts of ground-truth classes (rows) and predicted
/// clusters (columns). Labels are mapped to rows/columns in ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    pub counts: Vec<Vec<u64>>,
    pub true_labels: Vec<usize>,
    pub pred_labels: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub acc: f64,
    pub ari: f64,
    pub nmi: f64,
    pub k_pred: usize,
}

pub fn contingency(true_labels: &[usize], pred_labels: &[usize]) -> Result<ContingencyTable> {
    if true_labels.len() != pred_labels.len() {
        return Err(Error::LabelLength(true_labels.len(), pred_labels.len()));
    }
    if true_labels.is_empty() {
        return Err(Error::EmptyDataset("contingency"));
    }
    let index = |labels: &[usize]| -> BTreeMap<usize, usize> {
        let mut m: BTreeMap<usize, usize> = labels.iter().map(|&l| (l, 0)).collect();
        for (i, v) in m.values_mut().enumerate() {
            *v = i;
        }
        m
    };
    let ti = index(true_labels);
    let pi = index(pred_labels);
    let mut counts = vec![vec![0u64; pi.len()]; ti.len()];
    for (t, p) in true_labels.iter().zip(pred_labels) {
        counts[ti[t]][pi[p]] += 1;
    }
    Ok(ContingencyTable {
        counts,
        true_labels: ti.into_keys().collect(),
        pred_labels: pi.into_keys().collect(),
    })
}

impl ContingencyTable {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    fn col_sums(&self) -> Vec<u64> {
        let mut s = vec![0u64; self.pred_labels.len()];
        for r in &self.counts {
            for (a, &c) in s.iter_mut().zip(r) {
                *a += c;
            }
        }
        s
    }
}

/// Best one-to-one cluster-to-class matching mass over `N`.
pub fn accuracy(table: &ContingencyTable) -> f64 {
    let n = table.true_labels.len().max(table.pred_labels.len());
    let mut cost = vec![vec![0i64; n]; n];
    for (i, row) in table.counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            cost[i][j] = -(c as i64);
        }
    }
    let assignment = linear_sum_assignment(&cost);
    let matched: i64 = assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| -cost[i][j])
        .sum();
    matched as f64 / table.total() as f64
}

fn entropy(sums: &[u64], n: f64) -> f64 {
    sums.iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Mutual information normalized by the geometric mean of the entropies.
pub fn nmi(table: &ContingencyTable) -> f64 {
    let n = table.total() as f64;
    let rows = table.row_sums();
    let cols = table.col_sums();
    let h_true = entropy(&rows, n);
    let h_pred = entropy(&cols, n);
    if h_true == 0.0 && h_pred == 0.0 {
        return 1.0;
    }
    if h_true == 0.0 || h_pred == 0.0 {
        return 0.0;
    }
    let mut mi = 0.0;
    for (i, row) in table.counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let c = c as f64;
                mi += c / n * (n * c / (rows[i] as f64 * cols[j] as f64)).ln();
            }
        }
    }
    (mi / (h_true * h_pred).sqrt()).clamp(0.0, 1.0)
}

fn comb2(c: u64) -> f64 {
    let c = c as f64;
    c * (c - 1.0) / 2.0
}

/// Adjusted Rand index from the sum-of-binomials form.
pub fn ari(table: &ContingencyTable) -> f64 {
    let index: f64 = table.counts.iter().flatten().map(|&c| comb2(c)).sum();
    let a: f64 = table.row_sums().into_iter().map(comb2).sum();
    let b: f64 = table.col_sums().into_iter().map(comb2).sum();
    let pairs = comb2(table.total());
    if pairs == 0.0 {
        return 1.0;
    }
    let expected = a * b / pairs;
    let max = (a + b) / 2.0;
    if max == expected {
        // both partitions trivial (all singletons or one block) and identical in kind
        return 1.0;
    }
    (index - expected) / (max - expected)
}

/// All three metrics plus the number of distinct predicted clusters.
pub fn evaluate(true_labels: &[usize], pred_labels: &[usize]) -> Result<MetricsReport> {
    let table = contingency(true_labels, pred_labels)?;
    Ok(MetricsReport {
        acc: accuracy(&table),
        ari: ari(&table),
        nmi: nmi(&table),
        k_pred: table.pred_labels.len(),
    })
}
