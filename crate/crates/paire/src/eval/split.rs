//! Edge holdout for link prediction and sampled pair sets for pairwise
//! node classification.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::graph::{DisjointSet, Graph, NodeId};
use crate::Result;

/// A link-prediction split. Positives are real edges; negatives are
/// sampled distinct non-edges, one per positive. Training negatives avoid
/// only the residual graph's edges (a held-out edge may reappear there);
/// test negatives avoid every original edge.
#[derive(Debug, Clone)]
pub struct LinkSplit {
    /// The graph with the held-out edges removed.
    pub residual: Graph,
    pub train_pos: Vec<(NodeId, NodeId)>,
    pub train_neg: Vec<(NodeId, NodeId)>,
    pub test_pos: Vec<(NodeId, NodeId)>,
    pub test_neg: Vec<(NodeId, NodeId)>,
}

/// Hold out `⌈fraction · |E|⌉` edges without changing the number of
/// connected components. Candidate edges are visited in a seeded shuffled
/// order and greedily removed when removal keeps the component count; once
/// an edge becomes a bridge it stays one, so a single pass suffices. Fails
/// with the achievable count if the graph cannot spare that many edges.
pub fn make_link_split(g: &Graph, fraction: f64, seed: u64) -> Result<LinkSplit> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Split(format!(
            "holdout fraction must lie strictly between 0 and 1, got {fraction}"
        )));
    }
    let m = g.num_edges();
    if m == 0 {
        return Err(Error::Split("graph has no edges to hold out".into()));
    }
    let target = (fraction * m as f64).ceil() as usize;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut rng);

    let base_components = g.component_count();
    let edges = g.edges();
    let mut kept = vec![true; m];
    let mut held: Vec<(NodeId, NodeId)> = Vec::with_capacity(target);
    for &ei in &order {
        if held.len() == target {
            break;
        }
        kept[ei] = false;
        let mut dsu = DisjointSet::new(g.num_nodes());
        for (j, &(u, v)) in edges.iter().enumerate() {
            if kept[j] {
                dsu.union(u, v);
            }
        }
        if dsu.count() == base_components {
            held.push(edges[ei]);
        } else {
            kept[ei] = true;
        }
    }
    if held.len() < target {
        return Err(Error::Split(format!(
            "cannot hold out {target} of {m} edges without splitting a component; \
             only {} are removable (achievable fraction {:.4})",
            held.len(),
            held.len() as f64 / m as f64
        )));
    }

    let residual_edges: Vec<(NodeId, NodeId)> = edges
        .iter()
        .zip(&kept)
        .filter_map(|(&e, &k)| k.then_some(e))
        .collect();
    let residual = g.with_edges(&residual_edges)?;

    let train_pos = residual.edges().to_vec();
    let train_neg = sample_non_edges(&residual, train_pos.len(), &mut rng)?;
    let test_neg = sample_non_edges(g, held.len(), &mut rng)?;
    Ok(LinkSplit {
        residual,
        train_pos,
        train_neg,
        test_pos: held,
        test_neg,
    })
}

/// Sample `count` distinct unordered node pairs that are not edges of
/// `reference`, by rejection.
fn sample_non_edges(reference: &Graph, count: usize, rng: &mut ChaCha8Rng) -> Result<Vec<(NodeId, NodeId)>> {
    let n = reference.num_nodes();
    let possible = n * (n - 1) / 2 - reference.num_edges();
    if possible < count {
        return Err(Error::Split(format!(
            "graph has only {possible} non-edges, need {count} negatives"
        )));
    }
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    let cap = 500 * count + 1000;
    while out.len() < count {
        attempts += 1;
        if attempts > cap {
            return Err(Error::Split(
                "negative sampling stalled; graph too dense for rejection sampling".into(),
            ));
        }
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u == v {
            continue;
        }
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        if reference.has_edge(a, b) || !seen.insert((a, b)) {
            continue;
        }
        out.push((a, b));
    }
    Ok(out)
}

/// Labeled node pairs for pairwise classification: does the pair share a
/// class? Balanced halves, split 80/20 into train and test.
#[derive(Debug, Clone)]
pub struct PairwiseDataset {
    pub train: Vec<((NodeId, NodeId), bool)>,
    pub test: Vec<((NodeId, NodeId), bool)>,
}

/// Sample `min(4·|E|, cap)` distinct unordered node pairs, half with equal
/// labels and half with different ones, then shuffle and split 80/20.
pub fn make_pairwise_dataset(g: &Graph, cap: usize, seed: u64) -> Result<PairwiseDataset> {
    if g.num_edges() == 0 {
        return Err(Error::Split("pairwise sampling needs a graph with edges".into()));
    }
    if g.num_classes() < 2 {
        return Err(Error::Split(
            "pairwise classification needs at least two classes".into(),
        ));
    }
    let total = (4 * g.num_edges()).min(cap);
    let half = total / 2;
    if half == 0 {
        return Err(Error::Split("pairwise sample size rounds to zero".into()));
    }

    let n = g.num_nodes();
    let labels = g.labels();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sample_half = |want_same: bool, rng: &mut ChaCha8Rng| -> Result<Vec<(NodeId, NodeId)>> {
        let mut seen = HashSet::with_capacity(half);
        let mut out = Vec::with_capacity(half);
        let mut attempts = 0usize;
        let cap = 500 * half + 1000;
        while out.len() < half {
            attempts += 1;
            if attempts > cap {
                return Err(Error::Split(format!(
                    "could not sample {half} distinct {} pairs",
                    if want_same { "same-class" } else { "different-class" }
                )));
            }
            let u = rng.random_range(0..n);
            let v = rng.random_range(0..n);
            if u == v || (labels[u] == labels[v]) != want_same {
                continue;
            }
            let (a, b) = if u < v { (u, v) } else { (v, u) };
            if seen.insert((a, b)) {
                out.push((a, b));
            }
        }
        Ok(out)
    };

    let mut examples: Vec<((NodeId, NodeId), bool)> = Vec::with_capacity(2 * half);
    for p in sample_half(true, &mut rng)? {
        examples.push((p, true));
    }
    for p in sample_half(false, &mut rng)? {
        examples.push((p, false));
    }
    examples.shuffle(&mut rng);
    let train_len = (0.8 * examples.len() as f64).round() as usize;
    let test = examples.split_off(train_len);
    Ok(PairwiseDataset {
        train: examples,
        test,
    })
}
