//! Embedding tables and their on-disk format.
//!
//! One plain-text format serves both granularities. The first line is a
//! header `KIND N D` with `KIND ∈ {PAIR, NODE}`, then `N` lines with `D`
//! values each:
//!
//! ```text
//! PAIR 4 3
//! n0 n1 0.25 -1.5 3
//! n1 n0 0.5 0.75 -2
//! ...
//! ```
//!
//! Pair lines carry the two endpoint keys, node lines a single key; keys
//! are the node identifiers from the `.content` file. Values print as
//! shortest round-trip decimals, so write → read → write is a byte-level
//! fixed point and same-seed runs produce identical files.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use ndarray::{Array2, ArrayView1};

use crate::error::Error;
use crate::graph::{Graph, Pair};
use crate::Result;

/// What one embedding row describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingKind {
    Pair,
    Node,
}

/// Embeddings of ordered pairs, keyed by endpoint key strings.
#[derive(Debug, Clone)]
pub struct PairTable {
    pairs: Vec<(String, String)>,
    index: HashMap<(String, String), usize>,
    data: Array2<f64>,
}

/// Embeddings of single nodes, keyed by node key strings.
#[derive(Debug, Clone)]
pub struct NodeTable {
    nodes: Vec<String>,
    index: HashMap<String, usize>,
    data: Array2<f64>,
}

/// A table of either kind, as read back from a file.
#[derive(Debug, Clone)]
pub enum EmbeddingTable {
    Pair(PairTable),
    Node(NodeTable),
}

impl PairTable {
    /// Tie embedding rows to the ordered pairs they were computed for,
    /// translating node ids to the graph's string keys.
    pub fn new(graph: &Graph, pairs: &[Pair], data: Array2<f64>) -> Result<Self> {
        if pairs.len() != data.nrows() {
            return Err(Error::Task(format!(
                "{} pairs but {} embedding rows",
                pairs.len(),
                data.nrows()
            )));
        }
        let keys: Vec<(String, String)> = pairs
            .iter()
            .map(|p| (graph.key(p.src).to_string(), graph.key(p.tgt).to_string()))
            .collect();
        Self::from_keys(keys, data)
    }

    pub fn from_keys(pairs: Vec<(String, String)>, data: Array2<f64>) -> Result<Self> {
        if pairs.len() != data.nrows() {
            return Err(Error::Task("pair keys and rows differ in count".into()));
        }
        let mut index = HashMap::with_capacity(pairs.len());
        for (i, p) in pairs.iter().enumerate() {
            if index.insert(p.clone(), i).is_some() {
                return Err(Error::Task(format!(
                    "duplicate pair ({}, {}) in embedding table",
                    p.0, p.1
                )));
            }
        }
        Ok(PairTable { pairs, index, data })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    /// Embedding row of the ordered pair `(src, tgt)`, if present.
    pub fn get(&self, src: &str, tgt: &str) -> Option<ArrayView1<'_, f64>> {
        self.index
            .get(&(src.to_string(), tgt.to_string()))
            .map(|&i| self.data.row(i))
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.data.row(i)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        let _ = writeln!(out, "PAIR {} {}", self.len(), self.dim());
        for (i, (s, t)) in self.pairs.iter().enumerate() {
            let _ = write!(out, "{s} {t}");
            for v in self.data.row(i) {
                let _ = write!(out, " {v}");
            }
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

impl NodeTable {
    /// One row per graph node, in node-id order.
    pub fn new(graph: &Graph, data: Array2<f64>) -> Result<Self> {
        if graph.num_nodes() != data.nrows() {
            return Err(Error::Task(format!(
                "{} nodes but {} embedding rows",
                graph.num_nodes(),
                data.nrows()
            )));
        }
        let nodes = (0..graph.num_nodes())
            .map(|u| graph.key(u).to_string())
            .collect();
        Self::from_keys(nodes, data)
    }

    pub fn from_keys(nodes: Vec<String>, data: Array2<f64>) -> Result<Self> {
        if nodes.len() != data.nrows() {
            return Err(Error::Task("node keys and rows differ in count".into()));
        }
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.clone(), i).is_some() {
                return Err(Error::Task(format!(
                    "duplicate node '{n}' in embedding table"
                )));
            }
        }
        Ok(NodeTable { nodes, index, data })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn get(&self, node: &str) -> Option<ArrayView1<'_, f64>> {
        self.index.get(node).map(|&i| self.data.row(i))
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.data.row(i)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        let _ = writeln!(out, "NODE {} {}", self.len(), self.dim());
        for (i, n) in self.nodes.iter().enumerate() {
            let _ = write!(out, "{n}");
            for v in self.data.row(i) {
                let _ = write!(out, " {v}");
            }
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

impl EmbeddingTable {
    pub fn kind(&self) -> EmbeddingKind {
        match self {
            EmbeddingTable::Pair(_) => EmbeddingKind::Pair,
            EmbeddingTable::Node(_) => EmbeddingKind::Node,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            EmbeddingTable::Pair(t) => t.dim(),
            EmbeddingTable::Node(t) => t.dim(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            EmbeddingTable::Pair(t) => t.len(),
            EmbeddingTable::Node(t) => t.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        match self {
            EmbeddingTable::Pair(t) => t.write(path),
            EmbeddingTable::Node(t) => t.write(path),
        }
    }
}

/// Read an embedding file of either kind.
pub fn read_embeddings(path: &Path) -> Result<EmbeddingTable> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "empty file"))?;
    let header = header.map_err(|e| Error::io(path, e))?;
    let head: Vec<&str> = header.split_whitespace().collect();
    if head.len() != 3 {
        return Err(Error::parse(path, 1, "header must be 'KIND N D'"));
    }
    let kind = match head[0] {
        "PAIR" => EmbeddingKind::Pair,
        "NODE" => EmbeddingKind::Node,
        other => {
            return Err(Error::parse(
                path,
                1,
                format!("unknown embedding kind '{other}'"),
            ))
        }
    };
    let n: usize = head[1]
        .parse()
        .map_err(|_| Error::parse(path, 1, format!("invalid row count '{}'", head[1])))?;
    let d: usize = head[2]
        .parse()
        .map_err(|_| Error::parse(path, 1, format!("invalid dimension '{}'", head[2])))?;

    let key_fields = match kind {
        EmbeddingKind::Pair => 2,
        EmbeddingKind::Node => 1,
    };
    let mut pair_keys = Vec::new();
    let mut node_keys = Vec::new();
    let mut data = Array2::zeros((n, d));
    let mut row = 0usize;
    for (lineno, line) in lines {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        if row == n {
            return Err(Error::parse(path, lineno, format!("more than {n} rows")));
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != key_fields + d {
            return Err(Error::parse(
                path,
                lineno,
                format!(
                    "expected {} fields, got {}",
                    key_fields + d,
                    fields.len()
                ),
            ));
        }
        match kind {
            EmbeddingKind::Pair => pair_keys.push((fields[0].to_string(), fields[1].to_string())),
            EmbeddingKind::Node => node_keys.push(fields[0].to_string()),
        }
        for (j, tok) in fields[key_fields..].iter().enumerate() {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::parse(path, lineno, format!("invalid value '{tok}'")))?;
            if !v.is_finite() {
                return Err(Error::parse(path, lineno, format!("non-finite value '{tok}'")));
            }
            data[(row, j)] = v;
        }
        row += 1;
    }
    if row != n {
        return Err(Error::Dataset(format!(
            "{}: header promises {n} rows, found {row}",
            path.display()
        )));
    }
    Ok(match kind {
        EmbeddingKind::Pair => EmbeddingTable::Pair(PairTable::from_keys(pair_keys, data)?),
        EmbeddingKind::Node => EmbeddingTable::Node(NodeTable::from_keys(node_keys, data)?),
    })
}
