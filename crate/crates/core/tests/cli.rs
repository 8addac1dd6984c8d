mod common;

use std::path::Path;

use common::{cli, corpus_snippets, TINY_CONFIG};
use transformcode::checkpoint::Checkpoint;
use transformcode::io::{read_embeddings, read_samples, write_pairs, write_snippets, PairRecord};

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Workspace {
    _dir: tempfile::TempDir,
    root: std::path::PathBuf,
}

impl Workspace {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        write_snippets(&root.join("snippets.jsonl"), &corpus_snippets()).unwrap();
        std::fs::write(root.join("cfg.toml"), TINY_CONFIG).unwrap();
        Workspace { _dir: dir, root }
    }

    fn p(&self, name: &str) -> std::path::PathBuf {
        self.root.join(name)
    }

    /// preprocess, train-tokenizer and train into `out`.
    fn train(&self, out: &str, seed: &str) {
        let out = self.p(out);
        let cfg = self.p("cfg.toml");
        let common = ["--seed", seed, "--config", s(&cfg), "--out", s(&out)];
        let snippets = self.p("snippets.jsonl");
        let steps: [Vec<&str>; 3] = [
            vec!["preprocess", "--snippets", s(&snippets)],
            vec!["train-tokenizer", "--samples"],
            vec!["train", "--samples"],
        ];
        let samples = out.join("samples.jsonl");
        let vocab = out.join("vocab.txt");
        for (i, step) in steps.iter().enumerate() {
            let mut args: Vec<&str> = common.to_vec();
            args.extend(step);
            if i > 0 {
                args.push(s(&samples));
            }
            if i == 2 {
                args.extend(["--vocab", s(&vocab)]);
            }
            let (ok, _, err) = cli(&args);
            assert!(ok, "{step:?}: {err}");
        }
    }
}

#[test]
fn train_embed_and_evaluate() {
    let w = Workspace::new();
    w.train("run", "3");
    let run = w.p("run");
    for f in [
        "samples.jsonl",
        "failures.jsonl",
        "vocab.txt",
        "checkpoint.bin",
        "train_log.jsonl",
        "train_report.json",
    ] {
        assert!(run.join(f).exists(), "{f} missing");
    }
    let log = std::fs::read_to_string(run.join("train_log.jsonl")).unwrap();
    assert!(log.lines().count() > 0);
    let first: serde_json::Value = serde_json::from_str(log.lines().next().unwrap()).unwrap();
    assert!(first["loss_total"].as_f64().unwrap().is_finite());

    let (ok, _, err) = cli(&[
        "--out",
        s(&run),
        "embed",
        "--checkpoint",
        s(&run.join("checkpoint.bin")),
        "--vocab",
        s(&run.join("vocab.txt")),
        "--snippets",
        s(&w.p("snippets.jsonl")),
    ]);
    assert!(ok, "{err}");
    let emb = read_embeddings(&run.join("embeddings.jsonl")).unwrap();
    assert_eq!(emb.len(), corpus_snippets().len());
    for e in &emb {
        let norm = e.embedding.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-9, "{} has norm {norm}", e.id);
    }

    let pairs: Vec<PairRecord> = emb
        .windows(2)
        .enumerate()
        .map(|(i, w)| PairRecord {
            id1: w[0].id.clone(),
            id2: w[1].id.clone(),
            label: i % 2 == 0,
        })
        .collect();
    write_pairs(&w.p("pairs.csv"), &pairs).unwrap();
    let (ok, out, err) = cli(&[
        "--out",
        s(&run),
        "eval-clone",
        "--embeddings",
        s(&run.join("embeddings.jsonl")),
        "--pairs",
        s(&w.p("pairs.csv")),
    ]);
    assert!(ok, "{err}");
    let m: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    let c = &m["counts"];
    let total: u64 = ["TP", "TN", "FP", "FN"].iter().map(|k| c[k].as_u64().unwrap()).sum();
    assert_eq!(total as usize, pairs.len());
    assert!(run.join("decisions.csv").exists());

    let (ok, out, _) = cli(&["--out", s(&run), "report"]);
    assert!(ok);
    assert!(out.contains("clone_metrics") && out.contains("vocab_size"));
}

#[test]
fn reruns_are_byte_identical() {
    let w = Workspace::new();
    w.train("a", "11");
    w.train("b", "11");
    for f in ["samples.jsonl", "vocab.txt", "checkpoint.bin", "train_log.jsonl"] {
        let a = std::fs::read(w.p("a").join(f)).unwrap();
        let b = std::fs::read(w.p("b").join(f)).unwrap();
        assert!(a == b, "{f} differs between runs");
    }
    w.train("c", "12");
    assert_ne!(
        std::fs::read(w.p("a/checkpoint.bin")).unwrap(),
        std::fs::read(w.p("c/checkpoint.bin")).unwrap()
    );
}

#[test]
fn checkpoint_round_trip_embeds_identically() {
    let w = Workspace::new();
    w.train("run", "5");
    let ck = Checkpoint::load(&w.p("run/checkpoint.bin")).unwrap();
    let again = Checkpoint::read_from(ck.to_bytes().as_slice()).unwrap();
    let samples = read_samples(&w.p("run/samples.jsonl")).unwrap();
    let vocab = transformcode::tokenizer::Vocabulary::read_from(std::io::BufReader::new(
        std::fs::File::open(w.p("run/vocab.txt")).unwrap(),
    ))
    .unwrap();
    for smp in samples.iter().take(5) {
        let (ids, _) = vocab.encode_lossy(&smp.tokens_normalized);
        let a = ck.params.embed(&ids[..ids.len().min(512)]).unwrap();
        let b = again.params.embed(&ids[..ids.len().min(512)]).unwrap();
        assert_eq!(a.as_slice().unwrap(), b.as_slice().unwrap());
    }
}

#[test]
fn classify_and_score_names() {
    let w = Workspace::new();
    w.train("run", "2");
    let run = w.p("run");
    let samples = run.join("samples.jsonl");
    let (ok, out, err) = cli(&[
        "--seed",
        "2",
        "--config",
        s(&w.p("cfg.toml")),
        "--out",
        s(&run),
        "train-classify",
        "--samples",
        s(&samples),
        "--vocab",
        s(&run.join("vocab.txt")),
        "--test-samples",
        s(&samples),
    ]);
    assert!(ok, "{err}");
    let v: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(
        v["test"]["test_samples"].as_u64().unwrap() as usize,
        corpus_snippets().len()
    );
    let ck = Checkpoint::load(&run.join("checkpoint.bin")).unwrap();
    assert_eq!(ck.labels, vec!["c", "java"]);
    assert!(ck.classifier.is_some());

    std::fs::write(
        w.p("names.csv"),
        "predicted,truth\ngetMax,computeMax\nparse_url,parseUrl\n",
    )
    .unwrap();
    let (ok, out, err) = cli(&["--out", s(&run), "score-names", "--names", s(&w.p("names.csv"))]);
    assert!(ok, "{err}");
    let v: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(v["count"], 2);
    assert_eq!(v["precision"], 1.0);
    assert_eq!(v["recall"], 0.75);
}

#[test]
fn failures_are_machine_readable() {
    let w = Workspace::new();
    let (ok, _, err) = cli(&["frobnicate"]);
    assert!(!ok);
    let v: serde_json::Value = serde_json::from_str(err.trim()).unwrap();
    assert_eq!(v["error"]["kind"], "usage");

    std::fs::write(
        w.p("bad.jsonl"),
        "{\"id\":\"a\",\"language\":\"c\",\"code\":\"int f(){return 1;}\"}\n{oops\n",
    )
    .unwrap();
    let (ok, _, err) = cli(&["--out", s(&w.p("o")), "preprocess", "--snippets", s(&w.p("bad.jsonl"))]);
    assert!(!ok);
    let v: serde_json::Value = serde_json::from_str(err.trim()).unwrap();
    assert_eq!(v["error"]["kind"], "malformed_record");
    assert!(
        v["error"]["message"].as_str().unwrap().contains("bad.jsonl:2:"),
        "{err}"
    );

    std::fs::write(w.p("typo.toml"), "[train]\nepoch = 3\n").unwrap();
    let (ok, _, err) = cli(&["--config", s(&w.p("typo.toml")), "report"]);
    assert!(!ok);
    assert!(err.contains("\"config\""), "{err}");
}
