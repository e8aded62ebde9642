//! Graph loading and the pair universe.
//!
//! Datasets come as two plain-text files in the citation-network layout:
//!
//! * `<name>.content` — one node per line: `key <feat_1> .. <feat_F> label`,
//!   tab- or space-separated. Feature values are non-negative reals.
//! * `<name>.cites` — one edge per line: `key_a key_b`. Direction is
//!   ignored; the graph is undirected. Self-loops and duplicate edges are
//!   dropped during loading.
//!
//! The embedding unit is not the node but the *ordered pair*: every
//! undirected edge `{u, v}` contributes both `(u, v)` and `(v, u)` to the
//! [`PairSet`], so `|P| = 2 |E|`. Pair ids are assigned deterministically
//! from the sorted edge list, which keeps downstream runs reproducible
//! independent of the line order in the `.cites` file.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::Error;
use crate::features::FeatureMatrix;
use crate::Result;

/// Node index into [`Graph`]; dense in `0..num_nodes()`.
pub type NodeId = usize;

/// An ordered node pair, the unit that gets embedded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pair {
    pub src: NodeId,
    pub tgt: NodeId,
}

impl Pair {
    pub fn new(src: NodeId, tgt: NodeId) -> Self {
        Pair { src, tgt }
    }

    /// The same pair with endpoints swapped.
    pub fn reversed(&self) -> Self {
        Pair {
            src: self.tgt,
            tgt: self.src,
        }
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.src, self.tgt)
    }
}

/// An undirected graph with string node keys, integer class labels and a
/// sorted adjacency structure. Node features live in the
/// [`FeatureMatrix`] returned alongside it by [`load_graph`].
#[derive(Debug, Clone)]
pub struct Graph {
    keys: Vec<String>,
    key_index: HashMap<String, NodeId>,
    adjacency: Vec<Vec<NodeId>>,
    /// Undirected edges as `(u, v)` with `u < v`, sorted lexicographically.
    edges: Vec<(NodeId, NodeId)>,
    labels: Vec<usize>,
    label_names: Vec<String>,
}

impl Graph {
    /// Build a graph from pre-indexed parts. Used by loaders and tests;
    /// `edges` may be in any order and contain duplicates or self-loops,
    /// which are dropped.
    pub fn from_parts(
        keys: Vec<String>,
        edges: &[(NodeId, NodeId)],
        labels: Vec<usize>,
        label_names: Vec<String>,
    ) -> Result<Self> {
        let n = keys.len();
        if labels.len() != n {
            return Err(Error::Dataset(format!(
                "{} nodes but {} labels",
                n,
                labels.len()
            )));
        }
        let mut key_index = HashMap::with_capacity(n);
        for (i, k) in keys.iter().enumerate() {
            if key_index.insert(k.clone(), i).is_some() {
                return Err(Error::Dataset(format!("duplicate node key '{k}'")));
            }
        }
        let mut undirected: Vec<(NodeId, NodeId)> = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::Lookup(format!("edge ({a}, {b}) out of range")));
            }
            if a == b {
                continue;
            }
            undirected.push((a.min(b), a.max(b)));
        }
        undirected.sort_unstable();
        undirected.dedup();

        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in &undirected {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
        }
        Ok(Graph {
            keys,
            key_index,
            adjacency,
            edges: undirected,
            labels,
            label_names,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.keys.len()
    }

    /// Number of undirected edges after dedup.
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Undirected edges as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    /// Sorted neighbor list of `u`.
    pub fn neighbors(&self, u: NodeId) -> &[NodeId] {
        &self.adjacency[u]
    }

    pub fn degree(&self, u: NodeId) -> usize {
        self.adjacency[u].len()
    }

    /// True if `{u, v}` is an edge. Binary search on the sorted adjacency.
    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    /// The original string key of a node.
    pub fn key(&self, u: NodeId) -> &str {
        &self.keys[u]
    }

    pub fn node_id(&self, key: &str) -> Option<NodeId> {
        self.key_index.get(key).copied()
    }

    /// Class label of a node, an index into [`Graph::label_names`].
    pub fn label(&self, u: NodeId) -> usize {
        self.labels[u]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Class names sorted lexicographically; label ids index into this, so
    /// class ids are stable under reordering of the content file.
    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn num_classes(&self) -> usize {
        self.label_names.len()
    }

    /// Number of connected components (isolated nodes each count as one).
    pub fn component_count(&self) -> usize {
        let mut dsu = DisjointSet::new(self.num_nodes());
        for &(u, v) in &self.edges {
            dsu.union(u, v);
        }
        dsu.count()
    }

    /// A copy of this graph with a subset of the edges. Used to build the
    /// residual training graph of a link-prediction split; nodes, labels and
    /// keys are shared unchanged.
    pub fn with_edges(&self, edges: &[(NodeId, NodeId)]) -> Result<Self> {
        Graph::from_parts(
            self.keys.clone(),
            edges,
            self.labels.clone(),
            self.label_names.clone(),
        )
    }
}

/// Union-find over `0..n`, path-halving + union by size.
#[derive(Debug, Clone)]
pub struct DisjointSet {
    parent: Vec<usize>,
    size: Vec<usize>,
    count: usize,
}

impl DisjointSet {
    pub fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
            size: vec![1; n],
            count: n,
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merge the sets of `a` and `b`; returns false if already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        self.count -= 1;
        true
    }

    pub fn connected(&mut self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }

    /// Current number of disjoint sets.
    pub fn count(&self) -> usize {
        self.count
    }
}

/// The ordered-pair universe of a graph: both directions of every
/// undirected edge, with a dense id per pair.
///
/// Ids are assigned from the sorted edge list: edge number `i` (with
/// `u < v`) yields pair `2i = (u, v)` and pair `2i + 1 = (v, u)`.
#[derive(Debug, Clone)]
pub struct PairSet {
    pairs: Vec<Pair>,
    index: HashMap<Pair, usize>,
    /// Pair ids whose `src` is the node, ascending; the out-going pairs
    /// that the translator folds into a node embedding.
    out_pairs: Vec<Vec<usize>>,
}

impl PairSet {
    /// Enumerate the ordered pairs of `graph`.
    pub fn build(graph: &Graph) -> Self {
        let mut pairs = Vec::with_capacity(2 * graph.num_edges());
        for &(u, v) in graph.edges() {
            pairs.push(Pair::new(u, v));
            pairs.push(Pair::new(v, u));
        }
        let index = pairs
            .iter()
            .enumerate()
            .map(|(i, p)| (*p, i))
            .collect::<HashMap<_, _>>();
        let mut out_pairs = vec![Vec::new(); graph.num_nodes()];
        for (i, p) in pairs.iter().enumerate() {
            out_pairs[p.src].push(i);
        }
        PairSet {
            pairs,
            index,
            out_pairs,
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn get(&self, id: usize) -> Pair {
        self.pairs[id]
    }

    /// Dense id of an ordered pair, if it is in the set.
    pub fn id_of(&self, pair: Pair) -> Option<usize> {
        self.index.get(&pair).copied()
    }

    /// Number of nodes in the graph the set was built from.
    pub fn num_nodes(&self) -> usize {
        self.out_pairs.len()
    }

    /// Ids of pairs with `src == u`, ascending.
    pub fn out_pairs(&self, u: NodeId) -> &[usize] {
        &self.out_pairs[u]
    }

    /// The pair neighborhood of `p`: pairs that share exactly one endpoint
    /// with `p`. Neither `p` itself nor its reverse qualifies (both share
    /// two endpoints). Returned ascending by pair id.
    pub fn pair_neighborhood(&self, p: Pair) -> Vec<usize> {
        let mut out = Vec::new();
        for (i, q) in self.pairs.iter().enumerate() {
            let shared = usize::from(q.src == p.src || q.src == p.tgt)
                + usize::from(q.tgt == p.src || q.tgt == p.tgt);
            if shared == 1 {
                out.push(i);
            }
        }
        out
    }
}

/// Read a `.content` / `.cites` pair of files into a graph plus its node
/// feature matrix. See the module docs for the expected layout.
pub fn load_graph(content: &Path, cites: &Path) -> Result<(Graph, FeatureMatrix)> {
    let file = File::open(content).map_err(|e| Error::io(content, e))?;
    let reader = BufReader::new(file);

    let mut keys: Vec<String> = Vec::new();
    let mut key_index: HashMap<String, usize> = HashMap::new();
    let mut raw_labels: Vec<String> = Vec::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut width: Option<usize> = None;

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(content, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 3 {
            return Err(Error::parse(
                content,
                lineno,
                format!("expected 'key features... label', got {} fields", fields.len()),
            ));
        }
        let f = fields.len() - 2;
        match width {
            None => width = Some(f),
            Some(w) if w != f => {
                return Err(Error::parse(
                    content,
                    lineno,
                    format!("row has {f} features, expected {w}"),
                ));
            }
            _ => {}
        }
        let key = fields[0].to_string();
        if key_index.contains_key(&key) {
            return Err(Error::parse(
                content,
                lineno,
                format!("duplicate node key '{key}'"),
            ));
        }
        let mut row = Vec::new();
        for (j, tok) in fields[1..=f].iter().enumerate() {
            let v: f64 = tok.parse().map_err(|_| {
                Error::parse(content, lineno, format!("invalid feature value '{tok}'"))
            })?;
            if !v.is_finite() {
                return Err(Error::parse(
                    content,
                    lineno,
                    format!("non-finite feature value '{tok}'"),
                ));
            }
            if v != 0.0 {
                row.push((j, v));
            }
        }
        key_index.insert(key.clone(), keys.len());
        keys.push(key);
        raw_labels.push(fields[f + 1].to_string());
        rows.push(row);
    }
    let width = width.ok_or_else(|| Error::Dataset(format!("{}: no nodes", content.display())))?;

    // Stable class ids: sort the distinct label names.
    let mut label_names: Vec<String> = raw_labels.clone();
    label_names.sort();
    label_names.dedup();
    let name_index: HashMap<&str, usize> = label_names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let labels: Vec<usize> = raw_labels.iter().map(|n| name_index[n.as_str()]).collect();

    let file = File::open(cites).map_err(|e| Error::io(cites, e))?;
    let reader = BufReader::new(file);
    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(cites, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::parse(
                cites,
                lineno,
                format!("expected 'key key', got {} fields", fields.len()),
            ));
        }
        let mut ids = [0usize; 2];
        for (slot, tok) in ids.iter_mut().zip(&fields) {
            *slot = *key_index.get(*tok).ok_or_else(|| {
                Error::parse(cites, lineno, format!("edge references unknown node '{tok}'"))
            })?;
        }
        edges.push((ids[0], ids[1]));
    }

    let graph = Graph::from_parts(keys, &edges, labels, label_names)?;
    let features = FeatureMatrix::from_rows(rows, width);
    Ok((graph, features))
}
