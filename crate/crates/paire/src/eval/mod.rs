//! Downstream evaluation: splits, probes, metrics and task protocols.

pub mod kmeans;
pub mod logreg;
pub mod metrics;
pub mod split;
pub mod tasks;

pub use kmeans::{kmeans, KMeansResult};
pub use logreg::{logreg_ovr, LogReg};
pub use metrics::{classification_metrics, clustering_accuracy, nmi, roc_auc, ClassMetrics};
pub use split::{make_link_split, make_pairwise_dataset, LinkSplit, PairwiseDataset};
pub use tasks::{
    cluster_quality, concat_edge_embedding, link_pred_auc, node_class_f1, pairwise_auc,
    recon_link_scores, run_task, train_node_model, train_pair_model, EdgeSource, EmbedMode,
    EvalConfig, EvalReport, MetricRecord, NodeModel, PairModel, Task,
};
