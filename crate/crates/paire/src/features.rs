//! Node features and the distribution-shaped model inputs.
//!
//! Raw features are non-negative counts or weights and stay sparse end to
//! end. Every training unit (an ordered pair, or a single node in node
//! mode) gets two input views:
//!
//! * **self view** — the unit's own features: `X_u ‖ X_v` for a pair,
//!   `X_u` for a node;
//! * **aggregated view** — the mean feature vector of each endpoint's
//!   1-hop neighbors (the node itself excluded), concatenated the same way.
//!
//! Each view is then L1-normalized *jointly across its full width* so it
//! becomes a probability distribution; the two halves of a pair view share
//! one normalizing constant. An all-zero view maps to the uniform
//! distribution so downstream KL terms stay well-defined.

use std::collections::HashMap;

use crate::error::Error;
use crate::graph::{Graph, NodeId, Pair};
use crate::Result;

/// Sparse non-negative vector with a fixed logical dimension.
/// Indices are strictly increasing; stored values are non-zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVec {
    dim: usize,
    idx: Vec<u32>,
    val: Vec<f64>,
}

impl SparseVec {
    /// Build from `(index, value)` entries; they may arrive unsorted but
    /// must be unique and in range. Zero values are dropped.
    pub fn from_entries(dim: usize, mut entries: Vec<(usize, f64)>) -> Result<Self> {
        entries.sort_unstable_by_key(|&(i, _)| i);
        let mut idx = Vec::with_capacity(entries.len());
        let mut val = Vec::with_capacity(entries.len());
        for (i, v) in entries {
            if i >= dim {
                return Err(Error::Domain(format!("index {i} out of range for dim {dim}")));
            }
            if idx.last() == Some(&(i as u32)) {
                return Err(Error::Domain(format!("duplicate index {i}")));
            }
            if !v.is_finite() {
                return Err(Error::Domain(format!("non-finite value at index {i}")));
            }
            if v != 0.0 {
                idx.push(i as u32);
                val.push(v);
            }
        }
        Ok(SparseVec { dim, idx, val })
    }

    /// The uniform distribution over `dim` entries.
    pub fn uniform(dim: usize) -> Self {
        SparseVec {
            dim,
            idx: (0..dim as u32).collect(),
            val: vec![1.0 / dim as f64; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.idx.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.idx
            .iter()
            .zip(&self.val)
            .map(|(&i, &v)| (i as usize, v))
    }

    pub fn sum(&self) -> f64 {
        self.val.iter().sum()
    }

    /// Value at `i` (zero when absent).
    pub fn get(&self, i: usize) -> f64 {
        match self.idx.binary_search(&(i as u32)) {
            Ok(k) => self.val[k],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }

    /// Scale so entries sum to one. Errors on negative entries; an
    /// all-zero vector becomes uniform.
    pub fn into_distribution(mut self) -> Result<Self> {
        if self.val.iter().any(|&v| v < 0.0) {
            return Err(Error::Domain(
                "negative entry in a vector that must normalize to a distribution".into(),
            ));
        }
        let total = self.sum();
        if total == 0.0 {
            return Ok(SparseVec::uniform(self.dim));
        }
        for v in &mut self.val {
            *v /= total;
        }
        Ok(self)
    }
}

/// Row-sparse feature matrix, one row per node.
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    rows: Vec<Vec<(usize, f64)>>,
    width: usize,
}

impl FeatureMatrix {
    /// Wrap pre-extracted sparse rows. Entries must be sorted by index
    /// within each row (the graph loader produces them that way).
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>, width: usize) -> Self {
        FeatureMatrix { rows, width }
    }

    pub fn from_dense(dense: &[Vec<f64>]) -> Self {
        let width = dense.first().map_or(0, Vec::len);
        let rows = dense
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|&(_, &v)| v != 0.0)
                    .map(|(i, &v)| (i, v))
                    .collect()
            })
            .collect();
        FeatureMatrix { rows, width }
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Feature width `F`.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn row(&self, u: NodeId) -> &[(usize, f64)] {
        &self.rows[u]
    }

    pub fn get(&self, u: NodeId, j: usize) -> f64 {
        self.rows[u]
            .iter()
            .find(|&&(i, _)| i == j)
            .map_or(0.0, |&(_, v)| v)
    }
}

/// Mean feature vector of `u`'s neighbors (empty neighborhood gives the
/// zero vector). Returned as sorted sparse entries of width `F`.
pub fn mean_aggregate(graph: &Graph, x: &FeatureMatrix, u: NodeId) -> Vec<(usize, f64)> {
    let nbrs = graph.neighbors(u);
    if nbrs.is_empty() {
        return Vec::new();
    }
    let mut acc: HashMap<usize, f64> = HashMap::new();
    for &v in nbrs {
        for &(j, val) in x.row(v) {
            *acc.entry(j).or_insert(0.0) += val;
        }
    }
    let inv = 1.0 / nbrs.len() as f64;
    let mut out: Vec<(usize, f64)> = acc.into_iter().map(|(j, s)| (j, s * inv)).collect();
    out.sort_unstable_by_key(|&(j, _)| j);
    out
}

/// One training unit's two input distributions.
#[derive(Debug, Clone)]
pub struct InputItem {
    pub self_dist: SparseVec,
    pub agg_dist: SparseVec,
}

/// The model-ready input set: one [`InputItem`] per unit, all of logical
/// width [`ModelInputs::width`] (`2F` in pair mode, `F` in node mode).
#[derive(Debug, Clone)]
pub struct ModelInputs {
    width: usize,
    items: Vec<InputItem>,
}

impl ModelInputs {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[InputItem] {
        &self.items
    }

    pub fn item(&self, i: usize) -> &InputItem {
        &self.items[i]
    }
}

/// Concatenate two sparse F-wide rows into one 2F-wide vector:
/// the second row's indices are shifted by `F`.
fn concat_rows(f: usize, a: &[(usize, f64)], b: &[(usize, f64)]) -> Result<SparseVec> {
    let mut entries = Vec::with_capacity(a.len() + b.len());
    entries.extend_from_slice(a);
    entries.extend(b.iter().map(|&(j, v)| (j + f, v)));
    SparseVec::from_entries(2 * f, entries)
}

/// Build inputs for a list of ordered pairs: for `p = (u, v)` the self view
/// is `X_u ‖ X_v` and the aggregated view concatenates the neighbor means
/// of `u` and `v`, each view normalized jointly over its `2F` entries.
pub fn pair_inputs(graph: &Graph, x: &FeatureMatrix, pairs: &[Pair]) -> Result<ModelInputs> {
    check_shapes(graph, x)?;
    let f = x.width();
    // Neighbor means are per node; compute each node's once.
    let mut agg: Vec<Option<Vec<(usize, f64)>>> = vec![None; graph.num_nodes()];
    for p in pairs {
        for u in [p.src, p.tgt] {
            if agg[u].is_none() {
                agg[u] = Some(mean_aggregate(graph, x, u));
            }
        }
    }
    let mut items = Vec::with_capacity(pairs.len());
    for p in pairs {
        let self_dist = concat_rows(f, x.row(p.src), x.row(p.tgt))?.into_distribution()?;
        let agg_dist = concat_rows(
            f,
            agg[p.src].as_deref().unwrap(),
            agg[p.tgt].as_deref().unwrap(),
        )?
        .into_distribution()?;
        items.push(InputItem {
            self_dist,
            agg_dist,
        });
    }
    Ok(ModelInputs {
        width: 2 * f,
        items,
    })
}

/// Build the node-mode inputs (one unit per node, width `F`): self view is
/// the node's own features, aggregated view its neighbor mean.
pub fn node_inputs(graph: &Graph, x: &FeatureMatrix) -> Result<ModelInputs> {
    check_shapes(graph, x)?;
    let f = x.width();
    let mut items = Vec::with_capacity(graph.num_nodes());
    for u in 0..graph.num_nodes() {
        let self_dist = SparseVec::from_entries(f, x.row(u).to_vec())?.into_distribution()?;
        let agg_dist =
            SparseVec::from_entries(f, mean_aggregate(graph, x, u))?.into_distribution()?;
        items.push(InputItem {
            self_dist,
            agg_dist,
        });
    }
    Ok(ModelInputs { width: f, items })
}

fn check_shapes(graph: &Graph, x: &FeatureMatrix) -> Result<()> {
    if graph.num_nodes() != x.num_rows() {
        return Err(Error::Dataset(format!(
            "{} nodes but {} feature rows",
            graph.num_nodes(),
            x.num_rows()
        )));
    }
    if x.width() == 0 {
        return Err(Error::Dataset("feature width is zero".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_graph() -> (Graph, FeatureMatrix) {
        // a - b - c, plus isolated d
        let g = Graph::from_parts(
            vec!["a".into(), "b".into(), "c".into(), "d".into()],
            &[(0, 1), (1, 2)],
            vec![0, 0, 1, 1],
            vec!["x".into(), "y".into()],
        )
        .unwrap();
        let x = FeatureMatrix::from_dense(&[
            vec![1.0, 0.0, 3.0],
            vec![0.0, 2.0, 0.0],
            vec![4.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0],
        ]);
        (g, x)
    }

    #[test]
    fn joint_normalization_over_both_halves() {
        // X_a = [1,0,3], X_b = [0,2,0]: one shared constant of 6
        let (g, x) = path_graph();
        let inputs = pair_inputs(&g, &x, &[Pair::new(0, 1)]).unwrap();
        assert_eq!(inputs.width(), 6);
        let d = inputs.item(0).self_dist.to_dense();
        let expect = [1.0 / 6.0, 0.0, 0.5, 0.0, 1.0 / 3.0, 0.0];
        for (got, want) in d.iter().zip(expect) {
            assert!((got - want).abs() < 1e-15, "{d:?}");
        }
    }

    #[test]
    fn distributions_sum_to_one() {
        let (g, x) = path_graph();
        let pairs: Vec<Pair> = g
            .edges()
            .iter()
            .flat_map(|&(u, v)| [Pair::new(u, v), Pair::new(v, u)])
            .collect();
        let inputs = pair_inputs(&g, &x, &pairs).unwrap();
        for item in inputs.items() {
            assert!((item.self_dist.sum() - 1.0).abs() < 1e-12);
            assert!((item.agg_dist.sum() - 1.0).abs() < 1e-12);
            assert!(item.self_dist.iter().all(|(_, v)| v > 0.0));
        }
    }

    #[test]
    fn aggregate_is_mean_of_neighbor_rows() {
        let (g, x) = path_graph();
        // b's neighbors are a and c: mean = ([1,0,3] + [4,0,0]) / 2
        let agg = mean_aggregate(&g, &x, 1);
        assert_eq!(agg, vec![(0, 2.5), (2, 1.5)]);
        // a's only neighbor is b
        assert_eq!(mean_aggregate(&g, &x, 0), vec![(1, 2.0)]);
        // isolated d has no neighbors
        assert!(mean_aggregate(&g, &x, 3).is_empty());
    }

    #[test]
    fn zero_view_becomes_uniform() {
        let (g, x) = path_graph();
        let inputs = node_inputs(&g, &x).unwrap();
        // isolated node with an all-zero feature row: both views uniform
        let item = inputs.item(3);
        for dist in [&item.self_dist, &item.agg_dist] {
            assert_eq!(dist.nnz(), 3);
            for (_, v) in dist.iter() {
                assert!((v - 1.0 / 3.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn node_mode_width_is_f() {
        let (g, x) = path_graph();
        let inputs = node_inputs(&g, &x).unwrap();
        assert_eq!(inputs.width(), 3);
        assert_eq!(inputs.len(), 4);
        // b's self view: [0,2,0] normalized
        assert_eq!(inputs.item(1).self_dist.to_dense(), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn negative_features_rejected() {
        let g = Graph::from_parts(
            vec!["a".into(), "b".into()],
            &[(0, 1)],
            vec![0, 0],
            vec!["x".into()],
        )
        .unwrap();
        let x = FeatureMatrix::from_dense(&[vec![1.0, -2.0], vec![1.0, 0.0]]);
        let err = pair_inputs(&g, &x, &[Pair::new(0, 1)]).unwrap_err();
        assert!(matches!(err, Error::Domain(_)), "{err}");
    }

    #[test]
    fn sparse_vec_basics() {
        let v = SparseVec::from_entries(5, vec![(3, 2.0), (0, 1.0), (2, 0.0)]).unwrap();
        assert_eq!(v.nnz(), 2); // zero entry dropped
        assert_eq!(v.get(3), 2.0);
        assert_eq!(v.get(2), 0.0);
        assert_eq!(v.sum(), 3.0);
        assert!(SparseVec::from_entries(2, vec![(2, 1.0)]).is_err());
        assert!(SparseVec::from_entries(4, vec![(1, 1.0), (1, 2.0)]).is_err());
        let u = SparseVec::uniform(4);
        assert!((u.sum() - 1.0).abs() < 1e-15);
    }
}
