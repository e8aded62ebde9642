//! Pair-to-node translators.
//!
//! A pair table embeds ordered pairs; node-level tasks need one vector per
//! node. A translator reduces the embeddings of a node's out-going pairs
//! (those with `src == u`) element-wise into a single vector. Nodes with no
//! out-going pairs — isolated nodes, or nodes that only ever appear as a
//! target — get the zero vector.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};

use crate::embedding::{NodeTable, PairTable};
use crate::error::Error;
use crate::graph::PairSet;
use crate::Result;

/// Element-wise reduction applied over a node's out-going pair embeddings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TranslatorMode {
    #[default]
    Sum,
    Mean,
    Max,
    Min,
}

impl TranslatorMode {
    pub const ALL: [TranslatorMode; 4] = [
        TranslatorMode::Sum,
        TranslatorMode::Mean,
        TranslatorMode::Max,
        TranslatorMode::Min,
    ];
}

impl fmt::Display for TranslatorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            TranslatorMode::Sum => "sum",
            TranslatorMode::Mean => "mean",
            TranslatorMode::Max => "max",
            TranslatorMode::Min => "min",
        };
        f.write_str(name)
    }
}

impl FromStr for TranslatorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(TranslatorMode::Sum),
            "mean" => Ok(TranslatorMode::Mean),
            "max" => Ok(TranslatorMode::Max),
            "min" => Ok(TranslatorMode::Min),
            other => Err(Error::Config(format!(
                "unknown translator '{other}' (expected sum, mean, max or min)"
            ))),
        }
    }
}

fn reduce_into(acc: &mut [f64], row: &[f64], first: bool, mode: TranslatorMode) {
    if first {
        acc.copy_from_slice(row);
        return;
    }
    match mode {
        TranslatorMode::Sum | TranslatorMode::Mean => {
            for (a, &v) in acc.iter_mut().zip(row) {
                *a += v;
            }
        }
        TranslatorMode::Max => {
            for (a, &v) in acc.iter_mut().zip(row) {
                if v > *a {
                    *a = v;
                }
            }
        }
        TranslatorMode::Min => {
            for (a, &v) in acc.iter_mut().zip(row) {
                if v < *a {
                    *a = v;
                }
            }
        }
    }
}

/// Translate in-memory pair embeddings (row `i` belongs to pair id `i` of
/// `ps`) into a node matrix with one row per graph node.
pub fn translate(ps: &PairSet, pair_z: ArrayView2<'_, f64>, mode: TranslatorMode) -> Result<Array2<f64>> {
    if pair_z.nrows() != ps.len() {
        return Err(Error::Task(format!(
            "pair set has {} pairs but embedding matrix has {} rows",
            ps.len(),
            pair_z.nrows()
        )));
    }
    let d = pair_z.ncols();
    let mut out = Array2::zeros((ps.num_nodes(), d));
    for u in 0..ps.num_nodes() {
        let ids = ps.out_pairs(u);
        let mut acc = out.row_mut(u);
        let acc = acc.as_slice_mut().expect("row is contiguous");
        for (k, &pid) in ids.iter().enumerate() {
            let row = pair_z.row(pid);
            reduce_into(acc, row.as_slice().expect("row is contiguous"), k == 0, mode);
        }
        if mode == TranslatorMode::Mean && !ids.is_empty() {
            let inv = 1.0 / ids.len() as f64;
            for a in acc.iter_mut() {
                *a *= inv;
            }
        }
    }
    Ok(out)
}

/// Translate a pair table read from disk without needing the graph. The node
/// universe is every key appearing in the table, in first-appearance order;
/// a node's out-going pairs are the rows where it is the source.
pub fn translate_table(pt: &PairTable, mode: TranslatorMode) -> Result<NodeTable> {
    let d = pt.dim();
    let mut order: Vec<String> = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for (s, t) in pt.pairs() {
        for key in [s, t] {
            if !index.contains_key(key.as_str()) {
                index.insert(key.as_str(), order.len());
                order.push(key.clone());
            }
        }
    }

    let mut out = Array2::zeros((order.len(), d));
    let mut counts = vec![0usize; order.len()];
    for (i, (s, _)) in pt.pairs().iter().enumerate() {
        let u = index[s.as_str()];
        let mut acc = out.row_mut(u);
        let acc = acc.as_slice_mut().expect("row is contiguous");
        let row = pt.row(i);
        reduce_into(acc, row.as_slice().expect("row is contiguous"), counts[u] == 0, mode);
        counts[u] += 1;
    }
    if mode == TranslatorMode::Mean {
        for (u, &c) in counts.iter().enumerate() {
            if c > 0 {
                let inv = 1.0 / c as f64;
                for a in out.row_mut(u).iter_mut() {
                    *a *= inv;
                }
            }
        }
    }
    NodeTable::from_keys(order, out)
}
