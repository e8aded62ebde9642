//! `paire` — train pair embeddings, translate them to node embeddings,
//! and evaluate them on downstream tasks.
//!
//! Three subcommands cover the pipeline:
//!
//! ```text
//! paire embed     --dataset cora --out cora.emb
//! paire translate --embeddings cora.emb --translator sum --out nodes.emb
//! paire eval      --dataset cora --task link-pred --out report.txt
//! ```
//!
//! Every option can also come from a `key=value` config file passed with
//! `--config`; explicit flags win over file values. Exit codes: 0 on
//! success, 1 for usage or configuration mistakes, 2 for runtime failures
//! (unreadable data, training aborts, task errors).

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use ndarray::Array2;

use paire::eval::{cluster_quality, node_class_f1, EmbedMode, EvalConfig, EvalReport, Task};
use paire::{
    load_graph, node_inputs, pair_inputs, read_embeddings, translate_table, EmbeddingTable, Graph,
    NodeTable, PairSet, PairTable, PreparedInputs, Real, TrainConfig, Trainer, TranslatorMode,
};

#[derive(Parser)]
#[command(
    name = "paire",
    version,
    about = "Pair-level graph embeddings: train, translate, evaluate"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train the autoencoder and write an embedding file.
    Embed(EmbedArgs),
    /// Reduce a pair embedding file to one vector per node.
    Translate(TranslateArgs),
    /// Run a downstream task and write its report records.
    Eval(EvalArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Dataset name; resolves `data/<name>/<name>.content` and `.cites`
    /// unless --content/--cites point elsewhere.
    #[arg(long)]
    dataset: Option<String>,
    /// Node feature/label file (`<id> <feat...> <label>` per line).
    #[arg(long)]
    content: Option<PathBuf>,
    /// Edge list file (`<id> <id>` per line).
    #[arg(long)]
    cites: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Embedding dimension.
    #[arg(long)]
    dim: Option<usize>,
    /// Training epochs.
    #[arg(long)]
    epochs: Option<usize>,
    /// Minibatch size.
    #[arg(long)]
    batch: Option<usize>,
    /// Adam learning rate.
    #[arg(long)]
    lr: Option<f64>,
    /// RNG seed (evaluation run r uses seed + r).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct EmbedArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    train: TrainArgs,
    /// `paire` (pair embeddings) or `node-ablation` (node-level NodeE).
    #[arg(long)]
    mode: Option<String>,
    /// Output embedding file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// key=value config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct TranslateArgs {
    /// Input PAIR embedding file.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Reduction: sum, mean, max or min.
    #[arg(long)]
    translator: Option<String>,
    /// Output NODE embedding file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// key=value config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    train: TrainArgs,
    /// link-pred, pairwise, node-class or cluster.
    #[arg(long)]
    task: Option<String>,
    /// `paire` or `node-ablation`.
    #[arg(long)]
    mode: Option<String>,
    /// Pair-to-node reduction for node-level tasks.
    #[arg(long)]
    translator: Option<String>,
    /// Probe a saved embedding file (node-class/cluster only) instead of
    /// training.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Report file; records go to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// key=value config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

enum CliError {
    Usage(String),
    Lib(paire::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

impl From<paire::Error> for CliError {
    fn from(e: paire::Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            // Invalid configuration values are usage mistakes even when the
            // library reports them.
            CliError::Lib(paire::Error::Config(_)) => 1,
            CliError::Lib(_) => 2,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Values read from a `--config` file. Keys are validated against the full
/// set understood by any subcommand.
struct FileConfig(HashMap<String, String>);

const KNOWN_KEYS: &[&str] = &[
    "dataset", "content", "cites", "dim", "hidden", "epochs", "batch", "lr", "seed", "w-self",
    "w-agg", "mode", "translator", "task", "out", "embeddings", "runs", "holdout", "ratios",
    "pairwise-cap",
];

impl FileConfig {
    fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let mut map = HashMap::new();
        let Some(path) = path else {
            return Ok(FileConfig(map));
        };
        let text = fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config file {}: {e}", path.display())))?;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(usage(format!(
                    "{}:{}: expected 'key=value', got '{line}'",
                    path.display(),
                    i + 1
                )));
            };
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(usage(format!(
                    "{}:{}: unknown config key '{key}'",
                    path.display(),
                    i + 1
                )));
            }
            map.insert(key.to_string(), value.trim().to_string());
        }
        Ok(FileConfig(map))
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    /// Parse the value under `key`, if present.
    fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: fmt::Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| usage(format!("config key '{key}': {e}"))),
        }
    }
}

/// Flag value if present, else config-file value, else the default.
fn pick<T: FromStr>(flag: Option<T>, file: &FileConfig, key: &str, default: T) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    Ok(flag.or(file.parse(key)?).unwrap_or(default))
}

fn resolve_data(data: &DataArgs, file: &FileConfig) -> Result<(String, PathBuf, PathBuf), CliError> {
    let dataset = data
        .dataset
        .clone()
        .or_else(|| file.get("dataset").map(String::from));
    let explicit = |flag: &Option<PathBuf>, key: &str| {
        flag.clone().or_else(|| file.get(key).map(PathBuf::from))
    };
    let derived = |ext: &str| {
        dataset
            .as_ref()
            .map(|d| PathBuf::from(format!("data/{d}/{d}.{ext}")))
    };
    let content = explicit(&data.content, "content")
        .or_else(|| derived("content"))
        .ok_or_else(|| usage("no dataset: pass --dataset <name> or --content/--cites paths"))?;
    let cites = explicit(&data.cites, "cites")
        .or_else(|| derived("cites"))
        .ok_or_else(|| usage("no edge list: pass --dataset <name> or --cites <path>"))?;
    let name = dataset.unwrap_or_else(|| {
        content
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".to_string())
    });
    Ok((name, content, cites))
}

fn train_config(train: &TrainArgs, file: &FileConfig) -> Result<TrainConfig, CliError> {
    let defaults = TrainConfig::default();
    Ok(TrainConfig {
        dim: pick(train.dim, file, "dim", defaults.dim)?,
        hidden: file.parse("hidden")?.unwrap_or(defaults.hidden),
        epochs: pick(train.epochs, file, "epochs", defaults.epochs)?,
        batch_size: pick(train.batch, file, "batch", defaults.batch_size)?,
        learning_rate: pick(train.lr, file, "lr", defaults.learning_rate)?,
        w_self: file.parse("w-self")?.unwrap_or(defaults.w_self),
        w_agg: file.parse("w-agg")?.unwrap_or(defaults.w_agg),
        seed: pick(train.seed, file, "seed", defaults.seed)?,
    })
}

fn parse_mode(flag: &Option<String>, file: &FileConfig) -> Result<EmbedMode, CliError> {
    let raw = flag
        .clone()
        .or_else(|| file.get("mode").map(String::from))
        .unwrap_or_else(|| "paire".to_string());
    match raw.as_str() {
        "paire" => Ok(EmbedMode::Pair),
        "node-ablation" => Ok(EmbedMode::Node),
        other => Err(usage(format!(
            "unknown mode '{other}' (expected paire or node-ablation)"
        ))),
    }
}

fn parse_translator(flag: &Option<String>, file: &FileConfig) -> Result<TranslatorMode, CliError> {
    flag.clone()
        .or_else(|| file.get("translator").map(String::from))
        .map_or(Ok(TranslatorMode::Sum), |raw| Ok(raw.parse()?))
}

fn require_out(flag: &Option<PathBuf>, file: &FileConfig) -> Result<PathBuf, CliError> {
    flag.clone()
        .or_else(|| file.get("out").map(PathBuf::from))
        .ok_or_else(|| usage("no output path: pass --out <file>"))
}

fn load_dataset(content: &Path, cites: &Path, name: &str) -> Result<(Graph, paire::FeatureMatrix), CliError> {
    let (g, x) = load_graph(content, cites)?;
    eprintln!(
        "loaded {name}: {} nodes, {} edges, {} features, {} classes",
        g.num_nodes(),
        g.num_edges(),
        x.width(),
        g.num_classes()
    );
    Ok((g, x))
}

/// Train with per-epoch progress on stderr and return f64 embeddings of
/// the training units.
fn train_streaming(cfg: &TrainConfig, inputs: &paire::ModelInputs) -> Result<Array2<f64>, CliError> {
    let prepared = PreparedInputs::<f32>::new(inputs)?;
    let mut trainer = Trainer::<f32>::new(cfg, inputs.width())?;
    for epoch in 1..=cfg.epochs {
        let loss = trainer.run_epoch(&prepared)?;
        eprintln!("epoch {epoch}/{}: loss {loss:.6}", cfg.epochs);
    }
    let z = trainer.into_model().embed_prepared(&prepared)?;
    Ok(z.mapv(|v| v.to_f64()))
}

fn cmd_embed(args: &EmbedArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.config.as_deref())?;
    let (name, content, cites) = resolve_data(&args.data, &file)?;
    let out = require_out(&args.out, &file)?;
    let cfg = train_config(&args.train, &file)?;
    cfg.validate()?;
    let mode = parse_mode(&args.mode, &file)?;

    let (g, x) = load_dataset(&content, &cites, &name)?;
    match mode {
        EmbedMode::Pair => {
            let pairs = PairSet::build(&g);
            let inputs = pair_inputs(&g, &x, pairs.pairs())?;
            let z = train_streaming(&cfg, &inputs)?;
            let table = PairTable::new(&g, pairs.pairs(), z)?;
            table.write(&out)?;
            eprintln!("wrote {} pair embeddings (dim {}) to {}", table.len(), table.dim(), out.display());
        }
        EmbedMode::Node => {
            let inputs = node_inputs(&g, &x)?;
            let z = train_streaming(&cfg, &inputs)?;
            let table = NodeTable::new(&g, z)?;
            table.write(&out)?;
            eprintln!("wrote {} node embeddings (dim {}) to {}", table.len(), table.dim(), out.display());
        }
    }
    Ok(())
}

fn cmd_translate(args: &TranslateArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.config.as_deref())?;
    let input = args
        .embeddings
        .clone()
        .or_else(|| file.get("embeddings").map(PathBuf::from))
        .ok_or_else(|| usage("no input: pass --embeddings <pair file>"))?;
    let out = require_out(&args.out, &file)?;
    let mode = parse_translator(&args.translator, &file)?;

    let table = read_embeddings(&input)?;
    let EmbeddingTable::Pair(pt) = table else {
        return Err(paire::Error::Task(format!(
            "{} holds node embeddings; translate expects a PAIR file",
            input.display()
        ))
        .into());
    };
    let nt = translate_table(&pt, mode)?;
    nt.write(&out)?;
    eprintln!(
        "translated {} pairs into {} node embeddings ({mode}) at {}",
        pt.len(),
        nt.len(),
        out.display()
    );
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.config.as_deref())?;
    let (name, content, cites) = resolve_data(&args.data, &file)?;
    let task: Task = args
        .task
        .clone()
        .or_else(|| file.get("task").map(String::from))
        .ok_or_else(|| usage("no task: pass --task link-pred|pairwise|node-class|cluster"))?
        .parse()?;

    let mut cfg = EvalConfig {
        train: train_config(&args.train, &file)?,
        mode: parse_mode(&args.mode, &file)?,
        translator: parse_translator(&args.translator, &file)?,
        ..EvalConfig::default()
    };
    cfg.runs = file.parse("runs")?.unwrap_or(cfg.runs);
    cfg.holdout = file.parse("holdout")?.unwrap_or(cfg.holdout);
    cfg.pairwise_cap = file.parse("pairwise-cap")?.unwrap_or(cfg.pairwise_cap);
    if let Some(raw) = file.get("ratios") {
        cfg.ratios = raw
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| usage(format!("config key 'ratios': {e}")))?;
    }

    let (g, x) = load_dataset(&content, &cites, &name)?;
    let report = match &args.embeddings {
        None => run_task_streaming(task, &g, &x, &name, &cfg)?,
        Some(path) => eval_external(task, &g, path, &name, &cfg)?,
    };

    eprint!("{}", report.table());
    match &args.out {
        Some(path) => {
            fs::write(path, report.lines()).map_err(|e| paire::Error::Io {
                path: path.clone(),
                source: e,
            })?;
            eprintln!("wrote {} records to {}", report.records.len(), path.display());
        }
        None => print!("{}", report.lines()),
    }
    Ok(())
}

/// `run_task` with a progress line per run.
fn run_task_streaming(
    task: Task,
    g: &Graph,
    x: &paire::FeatureMatrix,
    name: &str,
    cfg: &EvalConfig,
) -> Result<EvalReport, CliError> {
    let mut report = EvalReport::new(task, name);
    for r in 0..cfg.runs.max(1) {
        let mut one = cfg.clone();
        one.runs = 1;
        one.train.seed = cfg.train.seed + r as u64;
        let partial = paire::run_task(task, g, x, name, &one)?;
        for rec in partial.records.into_iter().filter(|rec| rec.seed.is_some()) {
            eprintln!(
                "run {}/{}: {} = {:.4}",
                r + 1,
                cfg.runs,
                rec.metric,
                rec.value
            );
            report.records.push(rec);
        }
    }
    report.add_means();
    Ok(report)
}

/// Probe a saved embedding file instead of training. Link-level tasks need
/// the model itself for unseen pairs, so only node-class and cluster work.
fn eval_external(
    task: Task,
    g: &Graph,
    path: &Path,
    name: &str,
    cfg: &EvalConfig,
) -> Result<EvalReport, CliError> {
    if !matches!(task, Task::NodeClass | Task::Cluster) {
        return Err(usage(
            "--embeddings only supports node-class and cluster; link-level tasks \
             must train a model (rerun without --embeddings)",
        ));
    }
    let nt = match read_embeddings(path)? {
        EmbeddingTable::Node(nt) => nt,
        EmbeddingTable::Pair(pt) => translate_table(&pt, cfg.translator)?,
    };
    // Rows align by node key; nodes absent from the table (e.g. isolated
    // nodes never mentioned in a pair file) get the zero vector.
    let mut z = Array2::zeros((g.num_nodes(), nt.dim()));
    let mut hits = 0usize;
    for u in 0..g.num_nodes() {
        if let Some(row) = nt.get(g.key(u)) {
            z.row_mut(u).assign(&row);
            hits += 1;
        }
    }
    if hits == 0 {
        return Err(paire::Error::Task(format!(
            "{} shares no node keys with {name}",
            path.display()
        ))
        .into());
    }
    if hits < g.num_nodes() {
        eprintln!(
            "note: {} of {} nodes missing from {}; using zero vectors",
            g.num_nodes() - hits,
            g.num_nodes(),
            path.display()
        );
    }

    let mut report = EvalReport::new(task, name);
    for r in 0..cfg.runs.max(1) {
        let seed = cfg.train.seed + r as u64;
        match task {
            Task::NodeClass => {
                for &ratio in &cfg.ratios {
                    let m = node_class_f1(&z, g.labels(), g.num_classes(), ratio, seed)?;
                    report.push(seed, &format!("micro-f1@{ratio}"), m.micro_f1);
                    report.push(seed, &format!("macro-f1@{ratio}"), m.macro_f1);
                }
            }
            Task::Cluster => {
                let (nmi, acc) = cluster_quality(&z, g.labels(), g.num_classes(), seed)?;
                report.push(seed, "nmi", nmi);
                report.push(seed, "acc", acc);
            }
            _ => unreachable!("validated above"),
        }
    }
    report.add_means();
    Ok(report)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.cmd {
        Cmd::Embed(args) => cmd_embed(args),
        Cmd::Translate(args) => cmd_translate(args),
        Cmd::Eval(args) => cmd_eval(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
