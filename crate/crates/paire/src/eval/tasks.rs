//! End-to-end task protocols: train embeddings, probe them, report.
//!
//! Link-level tasks are inductive: the model trains on the residual graph
//! of a link split and must handle held-out candidate pairs it has never
//! seen. Link prediction in pair mode ranks candidates by reconstruction:
//! the trained decoders reproduce the feature distributions of real pairs
//! far better than those of fabricated ones, so the negated autoencoder
//! loss is the link score. Node mode falls back to a logistic probe on
//! concatenated endpoint embeddings. Pairwise classification probes the
//! Hadamard product of the two endpoints' node vectors — a learned inner
//! product over node representations. Node classification and clustering
//! are transductive: the model trains on the full graph and node vectors
//! come from a translator (pair mode) or directly (node mode). Every task
//! repeats over `runs` seeds, `base seed + run index`, and reports
//! per-run values plus the mean.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::eval::kmeans::kmeans;
use crate::eval::logreg::logreg_ovr;
use crate::eval::metrics::{classification_metrics, clustering_accuracy, nmi, roc_auc, ClassMetrics};
use crate::eval::split::{make_link_split, make_pairwise_dataset, LinkSplit, PairwiseDataset};
use crate::features::{node_inputs, pair_inputs, FeatureMatrix};
use crate::graph::{Graph, NodeId, Pair, PairSet};
use crate::model::{train, Autoencoder, PreparedInputs, Real, TrainConfig};
use crate::translate::{translate, TranslatorMode};
use crate::Result;

/// The downstream task to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    LinkPred,
    Pairwise,
    NodeClass,
    Cluster,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Task::LinkPred => "link-pred",
            Task::Pairwise => "pairwise",
            Task::NodeClass => "node-class",
            Task::Cluster => "cluster",
        };
        f.write_str(name)
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "link-pred" => Ok(Task::LinkPred),
            "pairwise" => Ok(Task::Pairwise),
            "node-class" => Ok(Task::NodeClass),
            "cluster" => Ok(Task::Cluster),
            other => Err(Error::Config(format!(
                "unknown task '{other}' (expected link-pred, pairwise, node-class or cluster)"
            ))),
        }
    }
}

/// Whether the autoencoder embeds ordered pairs (the default) or single
/// nodes (the ablation baseline).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EmbedMode {
    #[default]
    Pair,
    Node,
}

impl fmt::Display for EmbedMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EmbedMode::Pair => "pair",
            EmbedMode::Node => "node",
        })
    }
}

impl FromStr for EmbedMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pair" => Ok(EmbedMode::Pair),
            "node" => Ok(EmbedMode::Node),
            other => Err(Error::Config(format!(
                "unknown mode '{other}' (expected pair or node)"
            ))),
        }
    }
}

/// Protocol knobs around the trainer.
#[derive(Debug, Clone)]
pub struct EvalConfig {
    /// Number of repeated runs; run `r` uses seed `train.seed + r`.
    pub runs: usize,
    /// Fraction of edges held out by link splits.
    pub holdout: f64,
    /// Labeled-node ratios for node classification.
    pub ratios: Vec<f64>,
    /// Pair-to-node translator for node-level tasks in pair mode.
    pub translator: TranslatorMode,
    /// Upper bound on the pairwise dataset size.
    pub pairwise_cap: usize,
    pub train: TrainConfig,
    pub mode: EmbedMode,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            runs: 10,
            holdout: 0.2,
            ratios: vec![0.3, 0.5, 0.7],
            translator: TranslatorMode::Sum,
            pairwise_cap: 20_000,
            train: TrainConfig::default(),
            mode: EmbedMode::Pair,
        }
    }
}

/// A trained pair-mode model with its pair universe and embeddings.
pub struct PairModel<T: Real> {
    pub model: Autoencoder<T>,
    pub pairs: PairSet,
    /// One row per pair id.
    pub z: Array2<f64>,
}

/// A trained node-mode model with one embedding row per node.
pub struct NodeModel<T: Real> {
    pub model: Autoencoder<T>,
    pub z: Array2<f64>,
}

fn to_f64<T: Real>(a: Array2<T>) -> Array2<f64> {
    a.mapv(|v| v.to_f64())
}

/// Train the pair autoencoder on `g` and embed every pair.
pub fn train_pair_model<T: Real>(g: &Graph, x: &FeatureMatrix, cfg: &TrainConfig) -> Result<PairModel<T>> {
    let pairs = PairSet::build(g);
    let inputs = pair_inputs(g, x, pairs.pairs())?;
    let (model, _) = train::<T>(cfg, &inputs)?;
    let z = to_f64(model.embed(&inputs)?);
    Ok(PairModel { model, pairs, z })
}

/// Train the node-mode autoencoder on `g` and embed every node.
pub fn train_node_model<T: Real>(g: &Graph, x: &FeatureMatrix, cfg: &TrainConfig) -> Result<NodeModel<T>> {
    let inputs = node_inputs(g, x)?;
    let (model, _) = train::<T>(cfg, &inputs)?;
    let z = to_f64(model.embed(&inputs)?);
    Ok(NodeModel { model, z })
}

/// Where candidate-edge vectors come from.
pub enum EdgeSource<'a, T: Real> {
    /// A pair-mode model: known pairs use their stored embedding, unseen
    /// candidates get a fresh forward pass.
    Pairs(&'a PairModel<T>),
    /// Node embeddings; an edge vector is the two endpoints concatenated.
    Nodes(&'a Array2<f64>),
}

/// Build one vector per candidate edge `(u, v)`. `context` is the graph
/// the source model was trained on — it supplies the neighborhoods for
/// embedding pairs the model has not seen.
pub fn concat_edge_embedding<T: Real>(
    context: &Graph,
    x: &FeatureMatrix,
    src: &EdgeSource<'_, T>,
    cands: &[(NodeId, NodeId)],
) -> Result<Array2<f64>> {
    match src {
        EdgeSource::Pairs(pm) => {
            let d = pm.z.ncols();
            let mut out = Array2::zeros((cands.len(), d));
            let mut fresh: Vec<Pair> = Vec::new();
            let mut fresh_rows: Vec<usize> = Vec::new();
            for (i, &(u, v)) in cands.iter().enumerate() {
                match pm.pairs.id_of(Pair::new(u, v)) {
                    Some(pid) => out.row_mut(i).assign(&pm.z.row(pid)),
                    None => {
                        fresh.push(Pair::new(u, v));
                        fresh_rows.push(i);
                    }
                }
            }
            if !fresh.is_empty() {
                let inputs = pair_inputs(context, x, &fresh)?;
                let z = to_f64(pm.model.embed(&inputs)?);
                for (k, &i) in fresh_rows.iter().enumerate() {
                    out.row_mut(i).assign(&z.row(k));
                }
            }
            Ok(out)
        }
        EdgeSource::Nodes(z) => {
            let d = z.ncols();
            let mut out = Array2::zeros((cands.len(), 2 * d));
            for (i, &(u, v)) in cands.iter().enumerate() {
                if u >= z.nrows() || v >= z.nrows() {
                    return Err(Error::Lookup(format!("node {} has no embedding", u.max(v))));
                }
                let mut row = out.row_mut(i);
                row.slice_mut(ndarray::s![..d]).assign(&z.row(u));
                row.slice_mut(ndarray::s![d..]).assign(&z.row(v));
            }
            Ok(out)
        }
    }
}

/// Reconstruction-based link scores for candidate pairs: the negated
/// autoencoder loss (unit weights) of each candidate's `PairInput` under
/// the trained model, with neighborhoods drawn from `context`. Real edges
/// sit on the manifold the decoders learned and reconstruct cheaply;
/// fabricated endpoint combinations do not, so ranking by this score
/// separates them.
pub fn recon_link_scores<T: Real>(
    context: &Graph,
    x: &FeatureMatrix,
    pm: &PairModel<T>,
    cands: &[(NodeId, NodeId)],
) -> Result<Vec<f64>> {
    let pairs: Vec<Pair> = cands.iter().map(|&(u, v)| Pair::new(u, v)).collect();
    let inputs = pair_inputs(context, x, &pairs)?;
    let prepared = PreparedInputs::new(&inputs)?;
    let losses = pm.model.item_losses(&prepared, 1.0, 1.0)?;
    Ok(losses.into_iter().map(|l| -l).collect())
}

fn fit_and_score<T: Real>(
    context: &Graph,
    x: &FeatureMatrix,
    src: &EdgeSource<'_, T>,
    train_set: &[((NodeId, NodeId), bool)],
    test_set: &[((NodeId, NodeId), bool)],
) -> Result<f64> {
    let train_cands: Vec<(NodeId, NodeId)> = train_set.iter().map(|&(p, _)| p).collect();
    let train_y: Vec<usize> = train_set.iter().map(|&(_, pos)| pos as usize).collect();
    let xtr = concat_edge_embedding(context, x, src, &train_cands)?;
    let clf = logreg_ovr(xtr.view(), &train_y, 2, 1.0)?;

    let test_cands: Vec<(NodeId, NodeId)> = test_set.iter().map(|&(p, _)| p).collect();
    let test_y: Vec<bool> = test_set.iter().map(|&(_, pos)| pos).collect();
    let xte = concat_edge_embedding(context, x, src, &test_cands)?;
    let scores = clf.binary_scores(xte.view())?;
    roc_auc(&scores, &test_y)
}

/// Link-prediction AUC over the held-out half of `split`. The source must
/// have been trained on `split.residual`. Pair tables rank candidates by
/// [`recon_link_scores`]; node tables fit a logistic probe on
/// concatenated endpoint embeddings over the training candidates first.
pub fn link_pred_auc<T: Real>(x: &FeatureMatrix, split: &LinkSplit, src: &EdgeSource<'_, T>) -> Result<f64> {
    let labeled = |pos: &[(NodeId, NodeId)], neg: &[(NodeId, NodeId)]| {
        pos.iter()
            .map(|&p| (p, true))
            .chain(neg.iter().map(|&p| (p, false)))
            .collect::<Vec<_>>()
    };
    let test_set = labeled(&split.test_pos, &split.test_neg);
    match src {
        EdgeSource::Pairs(pm) => {
            let cands: Vec<(NodeId, NodeId)> = test_set.iter().map(|&(p, _)| p).collect();
            let truth: Vec<bool> = test_set.iter().map(|&(_, pos)| pos).collect();
            let scores = recon_link_scores(&split.residual, x, pm, &cands)?;
            roc_auc(&scores, &truth)
        }
        EdgeSource::Nodes(_) => fit_and_score(
            &split.residual,
            x,
            src,
            &labeled(&split.train_pos, &split.train_neg),
            &test_set,
        ),
    }
}

/// AUC for same-class-vs-different-class pair classification: a logistic
/// probe on the Hadamard product of the two endpoints' rows of `node_z` —
/// a learned inner product over node vectors. In pair mode the vectors
/// come from translating a residually trained pair table, keeping the
/// setting inductive.
pub fn pairwise_auc(node_z: &Array2<f64>, ds: &PairwiseDataset) -> Result<f64> {
    let features = |set: &[((NodeId, NodeId), bool)]| -> Result<Array2<f64>> {
        let mut out = Array2::zeros((set.len(), node_z.ncols()));
        for (r, &((u, v), _)) in set.iter().enumerate() {
            if u >= node_z.nrows() || v >= node_z.nrows() {
                return Err(Error::Lookup(format!("node {} has no embedding", u.max(v))));
            }
            let mut row = out.row_mut(r);
            row.assign(&node_z.row(u));
            row *= &node_z.row(v);
        }
        Ok(out)
    };
    let train_y: Vec<usize> = ds.train.iter().map(|&(_, same)| same as usize).collect();
    let clf = logreg_ovr(features(&ds.train)?.view(), &train_y, 2, 1.0)?;
    let test_y: Vec<bool> = ds.test.iter().map(|&(_, same)| same).collect();
    let scores = clf.binary_scores(features(&ds.test)?.view())?;
    roc_auc(&scores, &test_y)
}

/// Micro/macro F1 of an OVR probe trained on a seeded `ratio` split of the
/// node embeddings.
pub fn node_class_f1(
    z: &Array2<f64>,
    labels: &[usize],
    num_classes: usize,
    ratio: f64,
    seed: u64,
) -> Result<ClassMetrics> {
    let n = z.nrows();
    if labels.len() != n {
        return Err(Error::Task(format!("{n} embeddings but {} labels", labels.len())));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Task(format!(
            "labeled ratio must lie strictly between 0 and 1, got {ratio}"
        )));
    }
    if n < 2 {
        return Err(Error::Task("need at least two nodes to split".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let train_len = ((ratio * n as f64).round() as usize).clamp(1, n - 1);

    let gather = |ids: &[usize]| {
        let mut xs = Array2::zeros((ids.len(), z.ncols()));
        let mut ys = Vec::with_capacity(ids.len());
        for (r, &i) in ids.iter().enumerate() {
            xs.row_mut(r).assign(&z.row(i));
            ys.push(labels[i]);
        }
        (xs, ys)
    };
    let (xtr, ytr) = gather(&order[..train_len]);
    let (xte, yte) = gather(&order[train_len..]);
    let clf = logreg_ovr(xtr.view(), &ytr, num_classes, 1.0)?;
    let pred = clf.predict(xte.view())?;
    classification_metrics(&pred, &yte, num_classes)
}

/// Cluster the node embeddings into `k` groups and score against the
/// labels; returns `(nmi, accuracy)`.
pub fn cluster_quality(z: &Array2<f64>, labels: &[usize], k: usize, seed: u64) -> Result<(f64, f64)> {
    if labels.len() != z.nrows() {
        return Err(Error::Task(format!(
            "{} embeddings but {} labels",
            z.nrows(),
            labels.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let res = kmeans(z.view(), k, 10, &mut rng)?;
    Ok((
        nmi(&res.assignments, labels)?,
        clustering_accuracy(&res.assignments, labels)?,
    ))
}

/// One scored value: `seed` is `None` for aggregate rows.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRecord {
    pub task: Task,
    pub dataset: String,
    pub seed: Option<u64>,
    pub metric: String,
    pub value: f64,
}

/// All records produced by one `run_task` invocation.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub task: Task,
    pub dataset: String,
    pub records: Vec<MetricRecord>,
}

impl EvalReport {
    pub fn new(task: Task, dataset: &str) -> Self {
        EvalReport {
            task,
            dataset: dataset.to_string(),
            records: Vec::new(),
        }
    }

    pub fn push(&mut self, seed: u64, metric: &str, value: f64) {
        self.records.push(MetricRecord {
            task: self.task,
            dataset: self.dataset.clone(),
            seed: Some(seed),
            metric: metric.to_string(),
            value,
        });
    }

    /// Append one `seed = None` mean record per metric, in first-appearance
    /// order.
    pub fn add_means(&mut self) {
        let mut names: Vec<String> = Vec::new();
        for r in &self.records {
            if r.seed.is_some() && !names.contains(&r.metric) {
                names.push(r.metric.clone());
            }
        }
        for name in names {
            let values: Vec<f64> = self.per_run(&name).map(|r| r.value).collect();
            if !values.is_empty() {
                self.records.push(MetricRecord {
                    task: self.task,
                    dataset: self.dataset.clone(),
                    seed: None,
                    metric: name,
                    value: values.iter().sum::<f64>() / values.len() as f64,
                });
            }
        }
    }

    fn per_run<'a>(&'a self, metric: &'a str) -> impl Iterator<Item = &'a MetricRecord> {
        self.records
            .iter()
            .filter(move |r| r.seed.is_some() && r.metric == metric)
    }

    /// The mean record's value for `metric`, if present.
    pub fn mean(&self, metric: &str) -> Option<f64> {
        self.records
            .iter()
            .find(|r| r.seed.is_none() && r.metric == metric)
            .map(|r| r.value)
    }

    /// Machine-readable key-value lines, one record per line.
    pub fn lines(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let _ = write!(out, "task={} dataset={} seed=", r.task, r.dataset);
            match r.seed {
                Some(s) => {
                    let _ = write!(out, "{s}");
                }
                None => out.push_str("mean"),
            }
            let _ = writeln!(out, " metric={} value={}", r.metric, r.value);
        }
        out
    }

    /// A short human-readable summary table.
    pub fn table(&self) -> String {
        let runs = self
            .records
            .iter()
            .filter(|r| r.seed.is_some())
            .filter(|r| r.metric == self.records.first().map_or("", |f| f.metric.as_str()))
            .count();
        let mut out = format!("# {} on {} ({} runs)\n", self.task, self.dataset, runs);
        let _ = writeln!(out, "{:<16} {:>8} {:>8} {:>8}", "metric", "mean", "min", "max");
        let mut seen: Vec<String> = Vec::new();
        for r in &self.records {
            if r.seed.is_none() || seen.contains(&r.metric) {
                continue;
            }
            seen.push(r.metric.clone());
            let values: Vec<f64> = self.per_run(&r.metric).map(|x| x.value).collect();
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let _ = writeln!(out, "{:<16} {:>8.4} {:>8.4} {:>8.4}", r.metric, mean, min, max);
        }
        out
    }
}

/// Run one task end to end: `runs` seeded repetitions of train + probe.
pub fn run_task(
    task: Task,
    g: &Graph,
    x: &FeatureMatrix,
    dataset: &str,
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    cfg.train.validate()?;
    if cfg.runs == 0 {
        return Err(Error::Config("need at least one evaluation run".into()));
    }
    if task == Task::NodeClass && cfg.ratios.is_empty() {
        return Err(Error::Config("node classification needs at least one ratio".into()));
    }

    let mut report = EvalReport::new(task, dataset);
    for r in 0..cfg.runs {
        let seed = cfg.train.seed + r as u64;
        let mut tcfg = cfg.train.clone();
        tcfg.seed = seed;
        match task {
            Task::LinkPred => {
                let split = make_link_split(g, cfg.holdout, seed)?;
                let auc = match cfg.mode {
                    EmbedMode::Pair => {
                        let pm = train_pair_model::<f32>(&split.residual, x, &tcfg)?;
                        link_pred_auc(x, &split, &EdgeSource::Pairs(&pm))?
                    }
                    EmbedMode::Node => {
                        let nm = train_node_model::<f32>(&split.residual, x, &tcfg)?;
                        link_pred_auc(x, &split, &EdgeSource::<f32>::Nodes(&nm.z))?
                    }
                };
                report.push(seed, "auc", auc);
            }
            Task::Pairwise => {
                let split = make_link_split(g, cfg.holdout, seed)?;
                let ds = make_pairwise_dataset(g, cfg.pairwise_cap, seed)?;
                let node_z = match cfg.mode {
                    EmbedMode::Pair => {
                        let pm = train_pair_model::<f32>(&split.residual, x, &tcfg)?;
                        translate(&pm.pairs, pm.z.view(), cfg.translator)?
                    }
                    EmbedMode::Node => train_node_model::<f32>(&split.residual, x, &tcfg)?.z,
                };
                report.push(seed, "auc", pairwise_auc(&node_z, &ds)?);
            }
            Task::NodeClass => {
                let node_z = node_embeddings(g, x, &tcfg, cfg)?;
                for &ratio in &cfg.ratios {
                    let m = node_class_f1(&node_z, g.labels(), g.num_classes(), ratio, seed)?;
                    report.push(seed, &format!("micro-f1@{ratio}"), m.micro_f1);
                    report.push(seed, &format!("macro-f1@{ratio}"), m.macro_f1);
                }
            }
            Task::Cluster => {
                let node_z = node_embeddings(g, x, &tcfg, cfg)?;
                let (nmi, acc) = cluster_quality(&node_z, g.labels(), g.num_classes(), seed)?;
                report.push(seed, "nmi", nmi);
                report.push(seed, "acc", acc);
            }
        }
    }
    report.add_means();
    Ok(report)
}

/// Node vectors for the transductive tasks under the configured mode.
fn node_embeddings(g: &Graph, x: &FeatureMatrix, tcfg: &TrainConfig, cfg: &EvalConfig) -> Result<Array2<f64>> {
    match cfg.mode {
        EmbedMode::Pair => {
            let pm = train_pair_model::<f32>(g, x, tcfg)?;
            translate(&pm.pairs, pm.z.view(), cfg.translator)
        }
        EmbedMode::Node => Ok(train_node_model::<f32>(g, x, tcfg)?.z),
    }
}
