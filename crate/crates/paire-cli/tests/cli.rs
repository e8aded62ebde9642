use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn paire() -> Command {
    Command::new(env!("CARGO_BIN_EXE_paire"))
}

fn run(args: &[&str], cwd: &Path) -> Output {
    paire()
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// A small two-community graph: a 5-clique and a 5-cycle joined by one
/// edge, two classes, three binary features.
fn write_dataset(dir: &Path) {
    let content = "\
a0 1 0 0 red
a1 1 0 0 red
a2 1 1 0 red
a3 1 0 0 red
a4 1 0 1 red
b0 0 0 1 blue
b1 0 1 1 blue
b2 0 0 1 blue
b3 0 0 1 blue
b4 0 1 1 blue
";
    let mut cites = String::new();
    for i in 0..5 {
        for j in (i + 1)..5 {
            cites.push_str(&format!("a{i} a{j}\n"));
        }
    }
    for i in 0..5 {
        cites.push_str(&format!("b{i} b{}\n", (i + 1) % 5));
    }
    cites.push_str("a0 b0\n");
    fs::write(dir.join("toy.content"), content).unwrap();
    fs::write(dir.join("toy.cites"), cites).unwrap();
}

fn fast_flags<'a>() -> [&'a str; 8] {
    ["--dim", "6", "--epochs", "2", "--batch", "8", "--lr", "0.01"]
}

#[test]
fn embed_writes_deterministic_pair_file() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path());

    let mut args = vec![
        "embed",
        "--content",
        "toy.content",
        "--cites",
        "toy.cites",
        "--out",
        "toy.emb",
    ];
    args.extend(fast_flags());
    let out = run(&args, dir.path());
    assert!(out.status.success(), "{}", stderr(&out));

    let text = fs::read_to_string(dir.path().join("toy.emb")).unwrap();
    // 16 edges → 32 ordered pairs of dimension 6.
    assert!(text.starts_with("PAIR 32 6\n"), "header: {}", text.lines().next().unwrap());
    assert_eq!(text.lines().count(), 33);

    // Same seed, byte-identical file.
    let first = fs::read(dir.path().join("toy.emb")).unwrap();
    let out2 = run(&args, dir.path());
    assert!(out2.status.success());
    assert_eq!(first, fs::read(dir.path().join("toy.emb")).unwrap());
}

#[test]
fn node_ablation_embeds_every_node() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path());
    let mut args = vec![
        "embed",
        "--content",
        "toy.content",
        "--cites",
        "toy.cites",
        "--mode",
        "node-ablation",
        "--out",
        "nodes.emb",
    ];
    args.extend(fast_flags());
    let out = run(&args, dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(dir.path().join("nodes.emb")).unwrap();
    assert!(text.starts_with("NODE 10 6\n"));
}

#[test]
fn translate_sums_outgoing_pairs() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("one.emb"),
        "PAIR 2 2\nu v 1.5 -2 \nv u 0.25 8\n",
    )
    .unwrap();
    let out = run(
        &["translate", "--embeddings", "one.emb", "--out", "n.emb"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(dir.path().join("n.emb")).unwrap();
    assert_eq!(text, "NODE 2 2\nu 1.5 -2\nv 0.25 8\n");

    // Translating a NODE file is a runtime error (exit 2).
    let out = run(
        &["translate", "--embeddings", "n.emb", "--out", "m.emb"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn embed_then_translate_matches_direct_graph_translation() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path());
    let mut args = vec![
        "embed", "--content", "toy.content", "--cites", "toy.cites", "--out", "p.emb",
    ];
    args.extend(fast_flags());
    assert!(run(&args, dir.path()).status.success());
    let out = run(
        &[
            "translate",
            "--embeddings",
            "p.emb",
            "--translator",
            "mean",
            "--out",
            "n.emb",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(dir.path().join("n.emb")).unwrap();
    assert!(text.starts_with("NODE 10 6\n"));
}

#[test]
fn eval_link_pred_writes_records() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path());
    fs::write(dir.path().join("eval.cfg"), "runs=2\nholdout=0.15\n").unwrap();
    let mut args = vec![
        "eval",
        "--content",
        "toy.content",
        "--cites",
        "toy.cites",
        "--task",
        "link-pred",
        "--config",
        "eval.cfg",
        "--out",
        "report.txt",
    ];
    args.extend(fast_flags());
    let out = run(&args, dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let report = fs::read_to_string(dir.path().join("report.txt")).unwrap();
    let seed_lines: Vec<&str> = report
        .lines()
        .filter(|l| l.contains("metric=auc") && !l.contains("seed=mean"))
        .collect();
    assert_eq!(seed_lines.len(), 2, "{report}");
    assert!(report.contains("seed=mean metric=auc"), "{report}");
    assert!(report.contains("task=link-pred dataset=toy"), "{report}");
}

#[test]
fn eval_node_class_against_saved_embeddings() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path());
    let mut args = vec![
        "embed", "--content", "toy.content", "--cites", "toy.cites", "--out", "p.emb",
    ];
    args.extend(fast_flags());
    assert!(run(&args, dir.path()).status.success());

    fs::write(dir.path().join("eval.cfg"), "runs=2\nratios=0.5\n").unwrap();
    let out = run(
        &[
            "eval",
            "--content",
            "toy.content",
            "--cites",
            "toy.cites",
            "--task",
            "node-class",
            "--embeddings",
            "p.emb",
            "--config",
            "eval.cfg",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("metric=micro-f1@0.5"), "{stdout}");

    // Link-level tasks cannot run from a file.
    let out = run(
        &[
            "eval",
            "--content",
            "toy.content",
            "--cites",
            "toy.cites",
            "--task",
            "link-pred",
            "--embeddings",
            "p.emb",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path());
    fs::write(
        dir.path().join("embed.cfg"),
        "content=toy.content\ncites=toy.cites\ndim=4\nepochs=1\nbatch=8\nout=from-config.emb\n",
    )
    .unwrap();

    // Config alone supplies everything, including the output path.
    let out = run(&["embed", "--config", "embed.cfg"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(fs::read_to_string(dir.path().join("from-config.emb"))
        .unwrap()
        .starts_with("PAIR 32 4\n"));

    // A flag overrides the file's dim.
    let out = run(
        &["embed", "--config", "embed.cfg", "--dim", "6", "--out", "flag.emb"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(fs::read_to_string(dir.path().join("flag.emb"))
        .unwrap()
        .starts_with("PAIR 32 6\n"));
}

#[test]
fn usage_errors_exit_1_runtime_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path());

    // No dataset at all.
    let out = run(&["embed", "--out", "x.emb"], dir.path());
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));

    // Unknown subcommand / flag are clap usage errors.
    let out = run(&["embiggen"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["embed", "--frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(1));

    // Unknown mode and task.
    let out = run(
        &["embed", "--content", "toy.content", "--cites", "toy.cites", "--mode", "edge", "--out", "x.emb"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    let out = run(
        &["eval", "--content", "toy.content", "--cites", "toy.cites", "--task", "lp"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));

    // Unknown config key.
    fs::write(dir.path().join("bad.cfg"), "dimension=9\n").unwrap();
    let out = run(
        &["embed", "--config", "bad.cfg", "--content", "toy.content", "--cites", "toy.cites", "--out", "x.emb"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    assert!(stderr(&out).contains("dimension"), "{}", stderr(&out));

    // Missing data file is a runtime failure, and no partial output appears.
    let out = run(
        &["embed", "--content", "missing.content", "--cites", "toy.cites", "--out", "x.emb"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(!dir.path().join("x.emb").exists());

    // --help succeeds.
    let out = run(&["--help"], dir.path());
    assert_eq!(out.status.code(), Some(0));
}
