//! Demo logic kept free of browser types so it can be unit-tested
//! natively. `lib.rs` wraps [`DemoCore`] in a thin wasm-bindgen layer.

use ndarray::{Array1, Array2, ArrayView2};
use paire::{
    pair_inputs, translate, FeatureMatrix, Graph, PairSet, PreparedInputs, Result, TrainConfig,
    Trainer, TranslatorMode,
};

/// Zachary's karate club: 34 members, 78 friendship ties, and a
/// two-faction split. Small enough to retrain live in the browser while
/// still having real community structure to find.
pub const KARATE_EDGES: [(usize, usize); 78] = [
    (0, 1),
    (0, 2),
    (0, 3),
    (0, 4),
    (0, 5),
    (0, 6),
    (0, 7),
    (0, 8),
    (0, 10),
    (0, 11),
    (0, 12),
    (0, 13),
    (0, 17),
    (0, 19),
    (0, 21),
    (0, 31),
    (1, 2),
    (1, 3),
    (1, 7),
    (1, 13),
    (1, 17),
    (1, 19),
    (1, 21),
    (1, 30),
    (2, 3),
    (2, 7),
    (2, 8),
    (2, 9),
    (2, 13),
    (2, 27),
    (2, 28),
    (2, 32),
    (3, 7),
    (3, 12),
    (3, 13),
    (4, 6),
    (4, 10),
    (5, 6),
    (5, 10),
    (5, 16),
    (6, 16),
    (8, 30),
    (8, 32),
    (8, 33),
    (9, 33),
    (13, 33),
    (14, 32),
    (14, 33),
    (15, 32),
    (15, 33),
    (18, 32),
    (18, 33),
    (19, 33),
    (20, 32),
    (20, 33),
    (22, 32),
    (22, 33),
    (23, 25),
    (23, 27),
    (23, 29),
    (23, 32),
    (23, 33),
    (24, 25),
    (24, 27),
    (24, 31),
    (25, 31),
    (26, 29),
    (26, 33),
    (27, 33),
    (28, 31),
    (28, 33),
    (29, 32),
    (29, 33),
    (30, 32),
    (30, 33),
    (31, 32),
    (31, 33),
    (32, 33),
];

/// Faction of each member after the split (0 = instructor's side,
/// 1 = administrator's side).
pub const KARATE_FACTION: [usize; 34] = [
    0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 1, 0, 0, 1, 0, 1, 0, 1, 1, 1, 1, 1, 1, 1, 1, 1,
    1, 1, 1,
];

/// The built-in demo graph with one-hot node features and faction labels.
pub fn karate_graph() -> Result<(Graph, FeatureMatrix)> {
    let n = KARATE_FACTION.len();
    let graph = Graph::from_parts(
        (0..n).map(|i| format!("m{i}")).collect(),
        &KARATE_EDGES,
        KARATE_FACTION.to_vec(),
        vec!["instructor".into(), "administrator".into()],
    )?;
    // One-hot identity features: the self view then encodes *which* pair
    // this is and the aggregated view encodes the pair's neighborhoods.
    let rows: Vec<Vec<(usize, f64)>> = (0..n).map(|i| vec![(i, 1.0)]).collect();
    let x = FeatureMatrix::from_rows(rows, n);
    Ok((graph, x))
}

/// One training session over the built-in graph: owns the trainer and the
/// loss history, hands out embeddings and 2-D projections on demand.
pub struct DemoCore {
    graph: Graph,
    pairs: PairSet,
    prepared: PreparedInputs<f32>,
    trainer: Trainer<f32>,
    losses: Vec<f64>,
}

impl DemoCore {
    pub fn new(seed: u64, learning_rate: f64) -> Result<Self> {
        let (graph, x) = karate_graph()?;
        let pairs = PairSet::build(&graph);
        let inputs = pair_inputs(&graph, &x, pairs.pairs())?;
        let prepared = PreparedInputs::new(&inputs)?;
        let cfg = TrainConfig {
            dim: 16,
            hidden: 32,
            batch_size: 64,
            learning_rate,
            seed,
            ..TrainConfig::default()
        };
        let trainer = Trainer::new(&cfg, prepared.width())?;
        Ok(DemoCore {
            graph,
            pairs,
            prepared,
            trainer,
            losses: Vec::new(),
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn epochs_done(&self) -> usize {
        self.trainer.epochs_done()
    }

    pub fn losses(&self) -> &[f64] {
        &self.losses
    }

    /// Run `epochs` more passes; returns the latest mean epoch loss.
    pub fn step(&mut self, epochs: usize) -> Result<f64> {
        let mut last = f64::NAN;
        for _ in 0..epochs {
            last = self.trainer.run_epoch(&self.prepared)?;
            self.losses.push(last);
        }
        Ok(last)
    }

    /// Current node embeddings under the given translator.
    pub fn node_embeddings(&self, mode: TranslatorMode) -> Result<Array2<f64>> {
        let z = self.trainer.model().embed_prepared(&self.prepared)?;
        translate(&self.pairs, z.mapv(f64::from).view(), mode)
    }

    /// 2-D PCA projection of the node embeddings, each axis scaled to
    /// [-1, 1]; interleaved `[x0, y0, x1, y1, ...]`.
    pub fn positions(&self, mode: TranslatorMode) -> Result<Vec<f32>> {
        let z = self.node_embeddings(mode)?;
        Ok(pca_2d(z.view()))
    }

    /// Cosine similarity between the two nodes' embeddings — the same
    /// score the evaluation uses as a link-plausibility baseline.
    pub fn link_score(&self, u: usize, v: usize, mode: TranslatorMode) -> Result<f64> {
        let z = self.node_embeddings(mode)?;
        let (a, b) = (z.row(u), z.row(v));
        let na = a.dot(&a).sqrt();
        let nb = b.dot(&b).sqrt();
        if na == 0.0 || nb == 0.0 {
            return Ok(0.0);
        }
        Ok(a.dot(&b) / (na * nb))
    }
}

/// Project rows onto their top two principal components via power
/// iteration, then scale each axis into [-1, 1] for drawing.
fn pca_2d(z: ArrayView2<'_, f64>) -> Vec<f32> {
    let n = z.nrows();
    let mean = z.mean_axis(ndarray::Axis(0)).expect("non-empty matrix");
    let centered = &z - &mean.view().insert_axis(ndarray::Axis(0));
    let mut cov = centered.t().dot(&centered) / n as f64;

    let mut coords = Vec::with_capacity(2);
    for comp in 0..2 {
        let axis = principal_axis(&cov, comp);
        let proj = centered.dot(&axis);
        // Deflate so the next iteration finds the following component.
        let lambda = axis.dot(&cov.dot(&axis));
        let outer = axis
            .view()
            .insert_axis(ndarray::Axis(1))
            .dot(&axis.view().insert_axis(ndarray::Axis(0)));
        cov -= &(outer * lambda);
        coords.push(proj);
    }

    let mut out = vec![0.0f32; 2 * n];
    for (k, proj) in coords.iter().enumerate() {
        let max = proj.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
        for i in 0..n {
            out[2 * i + k] = (proj[i] / max) as f32;
        }
    }
    out
}

/// Dominant eigenvector of a symmetric matrix by power iteration with a
/// fixed deterministic start, so redraws are stable frame to frame.
fn principal_axis(cov: &Array2<f64>, comp: usize) -> Array1<f64> {
    let d = cov.nrows();
    let mut v = Array1::from_shape_fn(d, |i| ((i + comp + 1) as f64).sin());
    let norm = v.dot(&v).sqrt();
    v /= norm.max(1e-12);
    for _ in 0..100 {
        let next = cov.dot(&v);
        let norm = next.dot(&next).sqrt();
        if norm < 1e-12 {
            break;
        }
        v = next / norm;
    }
    v
}
