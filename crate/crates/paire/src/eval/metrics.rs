//! Scalar quality metrics shared by the evaluation tasks.

use pathfinding::prelude::{kuhn_munkres, Matrix};

use crate::error::Error;
use crate::Result;

/// Area under the ROC curve via the rank statistic. Ties in score
/// contribute 1/2, so the result is exactly the probability that a random
/// positive outranks a random negative.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Metric(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Metric("non-finite score".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Metric(
            "AUC needs at least one positive and one negative".into(),
        ));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[i].partial_cmp(&scores[j]).expect("finite scores"));

    // Average ranks over tied blocks, then sum the positives' ranks.
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1 ..= j+1 share the average.
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            if labels[idx] {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }

    let n_pos = n_pos as f64;
    let n_neg = n_neg as f64;
    Ok((rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg))
}

/// Micro- and macro-averaged F1 for single-label predictions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub micro_f1: f64,
    pub macro_f1: f64,
}

/// Compare predicted and true class ids. Micro-F1 pools counts over all
/// classes (for single-label data it equals accuracy); macro-F1 averages
/// per-class F1 over all `num_classes` classes, counting classes that never
/// occur as 0.
pub fn classification_metrics(pred: &[usize], truth: &[usize], num_classes: usize) -> Result<ClassMetrics> {
    if pred.len() != truth.len() {
        return Err(Error::Metric(format!(
            "{} predictions but {} labels",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Metric("no predictions to score".into()));
    }
    if pred.iter().chain(truth).any(|&c| c >= num_classes) {
        return Err(Error::Metric("class id out of range".into()));
    }

    let mut tp = vec![0usize; num_classes];
    let mut fp = vec![0usize; num_classes];
    let mut fn_ = vec![0usize; num_classes];
    for (&p, &t) in pred.iter().zip(truth) {
        if p == t {
            tp[p] += 1;
        } else {
            fp[p] += 1;
            fn_[t] += 1;
        }
    }

    let tp_all: usize = tp.iter().sum();
    let fp_all: usize = fp.iter().sum();
    let fn_all: usize = fn_.iter().sum();
    let micro_f1 = f1(tp_all, fp_all, fn_all);

    let macro_f1 = (0..num_classes).map(|c| f1(tp[c], fp[c], fn_[c])).sum::<f64>()
        / num_classes as f64;

    Ok(ClassMetrics { micro_f1, macro_f1 })
}

fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

/// Normalized mutual information between two labelings, normalized by the
/// arithmetic mean of the entropies. Two trivial single-block partitions
/// are identical, so that corner returns 1.
pub fn nmi(a: &[usize], b: &[usize]) -> Result<f64> {
    let n = a.len();
    if n == 0 || b.len() != n {
        return Err(Error::Metric("NMI needs two labelings of equal nonzero length".into()));
    }
    let ka = a.iter().max().unwrap() + 1;
    let kb = b.iter().max().unwrap() + 1;
    let mut joint = vec![0usize; ka * kb];
    let mut ca = vec![0usize; ka];
    let mut cb = vec![0usize; kb];
    for (&x, &y) in a.iter().zip(b) {
        joint[x * kb + y] += 1;
        ca[x] += 1;
        cb[y] += 1;
    }

    let nf = n as f64;
    let entropy = |counts: &[usize]| -> f64 {
        counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / nf;
                -p * p.ln()
            })
            .sum()
    };
    let ha = entropy(&ca);
    let hb = entropy(&cb);
    if ha + hb == 0.0 {
        return Ok(1.0);
    }

    let mut info = 0.0;
    for x in 0..ka {
        for y in 0..kb {
            let nxy = joint[x * kb + y];
            if nxy > 0 {
                let pxy = nxy as f64 / nf;
                info += pxy * (pxy / (ca[x] as f64 / nf * cb[y] as f64 / nf)).ln();
            }
        }
    }
    Ok((info / ((ha + hb) / 2.0)).clamp(0.0, 1.0))
}

/// Clustering accuracy: the best achievable accuracy over all one-to-one
/// relabelings of the clusters, found with the Hungarian algorithm.
pub fn clustering_accuracy(clusters: &[usize], labels: &[usize]) -> Result<f64> {
    let n = clusters.len();
    if n == 0 || labels.len() != n {
        return Err(Error::Metric(
            "clustering accuracy needs two labelings of equal nonzero length".into(),
        ));
    }
    let kc = clusters.iter().max().unwrap() + 1;
    let kl = labels.iter().max().unwrap() + 1;
    let k = kc.max(kl);
    let mut counts = vec![vec![0i64; k]; k];
    for (&c, &l) in clusters.iter().zip(labels) {
        counts[c][l] += 1;
    }
    let weights = Matrix::from_rows(counts).expect("square count matrix");
    let (matched, _) = kuhn_munkres(&weights);
    Ok(matched as f64 / n as f64)
}
