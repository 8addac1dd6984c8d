//! Execution oracle shared by the integration tests: runs corpus programs and
//! their rewritten variants and compares what they print.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use transformcode::ast::{strip_comments, Language, NormalizedSnippet, SourceSnippet};
use transformcode::augment::{generate_anchor, AugmentConfig, TransformKind};

pub struct CorpusProgram {
    pub name: String,
    pub language: Language,
    pub source: String,
    pub inputs: Vec<Vec<String>>,
}

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/corpus")
}

/// Programs carry their harness inputs on the first line:
/// `// inputs: a b | c | ...`, one argument vector per `|` group.
pub fn load_corpus(language: Language) -> Vec<CorpusProgram> {
    let dir = corpus_dir().join(language.name());
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|path| {
            let source = std::fs::read_to_string(&path).unwrap();
            let header = source.lines().next().unwrap_or("");
            let listed = header
                .strip_prefix("// inputs:")
                .unwrap_or_else(|| panic!("{} lacks an inputs header", path.display()));
            let inputs = listed
                .split('|')
                .map(|g| g.split_whitespace().map(str::to_string).collect())
                .collect();
            CorpusProgram {
                name: path.file_stem().unwrap().to_string_lossy().into_owned(),
                language,
                source,
                inputs,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutput {
    pub stdout: Vec<u8>,
    pub exit_ok: bool,
}

pub fn c_compiler_available() -> bool {
    Command::new("gcc").arg("--version").output().is_ok()
}

/// Runs `source` once per input. Errors mean the program did not compile or
/// could not be interpreted.
pub fn run_program(language: Language, source: &str, inputs: &[Vec<String>]) -> Result<Vec<RunOutput>, String> {
    match language {
        Language::Java => inputs
            .iter()
            .map(|args| {
                javalite::run(source, args)
                    .map(|o| RunOutput {
                        stdout: o.stdout.into_bytes(),
                        exit_ok: o.exit_code == 0,
                    })
                    .map_err(|e| e.to_string())
            })
            .collect(),
        Language::C => {
            let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
            let src = dir.path().join("prog.c");
            let bin = dir.path().join("prog");
            std::fs::write(&src, source).map_err(|e| e.to_string())?;
            let cc = Command::new("gcc")
                .args(["-std=gnu11", "-O0", "-w", "-o"])
                .arg(&bin)
                .arg(&src)
                .output()
                .map_err(|e| e.to_string())?;
            if !cc.status.success() {
                return Err(String::from_utf8_lossy(&cc.stderr).into_owned());
            }
            inputs
                .iter()
                .map(|args| {
                    let out = Command::new("timeout")
                        .arg("10")
                        .arg(&bin)
                        .args(args)
                        .output()
                        .map_err(|e| e.to_string())?;
                    Ok(RunOutput {
                        stdout: out.stdout,
                        exit_ok: out.status.success(),
                    })
                })
                .collect()
        }
    }
}

/// Comment-free source wrapped as the augmenter's input. Identifiers keep
/// their original names so the program still runs.
pub fn as_anchor_input(p: &CorpusProgram) -> NormalizedSnippet {
    let stripped = strip_comments(&SourceSnippet::new(&p.name, p.language, &p.source)).unwrap();
    NormalizedSnippet {
        source_id: p.name.clone(),
        language: p.language,
        text: stripped.text,
        rename_map: Default::default(),
    }
}

/// Aggressive setting: every family attempted, many sites rewritten.
pub fn stress_config() -> AugmentConfig {
    let mut cfg = AugmentConfig::default();
    for k in TransformKind::ALL {
        cfg.per_kind_probability.insert(k, 1.0);
        cfg.site_probability.insert(k, 0.5);
    }
    cfg
}

#[derive(Debug, Default)]
pub struct EquivalenceReport {
    pub programs: usize,
    pub anchors: usize,
    pub executions: usize,
    pub failures: Vec<String>,
    pub applied: BTreeMap<TransformKind, usize>,
}

/// Generates anchors for every program under each (config, seed) and checks
/// that each one prints exactly what the original prints on every input.
pub fn check_equivalence(language: Language, seeds: u64, configs: &[AugmentConfig]) -> EquivalenceReport {
    let mut report = EquivalenceReport::default();
    for p in load_corpus(language) {
        report.programs += 1;
        let expected = match run_program(language, &p.source, &p.inputs) {
            Ok(o) => o,
            Err(e) => {
                report.failures.push(format!("{}: original does not run: {e}", p.name));
                continue;
            }
        };
        let input = as_anchor_input(&p);
        let mut seen = std::collections::HashSet::new();
        for cfg in configs {
            for seed in 0..seeds {
                let cfg = cfg.clone().with_seed(seed);
                let anchor = match generate_anchor(&input, &cfg) {
                    Ok(a) => a,
                    Err(e) => {
                        report.failures.push(format!("{} seed {seed}: {e}", p.name));
                        continue;
                    }
                };
                report.anchors += 1;
                for a in &anchor.applied {
                    *report.applied.entry(a.kind).or_default() += 1;
                }
                if !seen.insert(anchor.text.clone()) {
                    continue;
                }
                match run_program(language, &anchor.text, &p.inputs) {
                    Ok(got) => {
                        report.executions += got.len();
                        for (i, (g, e)) in got.iter().zip(&expected).enumerate() {
                            if g != e {
                                report.failures.push(format!(
                                    "{} seed {seed} input {i}: expected {:?} got {:?}\n{}",
                                    p.name,
                                    String::from_utf8_lossy(&e.stdout),
                                    String::from_utf8_lossy(&g.stdout),
                                    anchor.text
                                ));
                            }
                        }
                    }
                    Err(e) => report.failures.push(format!(
                        "{} seed {seed}: anchor fails to build: {e}\n{}",
                        p.name, anchor.text
                    )),
                }
            }
        }
    }
    report
}

/// Every corpus program as a snippet, labeled with its language.
pub fn corpus_snippets() -> Vec<SourceSnippet> {
    Language::ALL
        .into_iter()
        .flat_map(load_corpus)
        .map(|p| {
            SourceSnippet::new(format!("{}.{}", p.name, p.language), p.language, p.source).with_label(p.language.name())
        })
        .collect()
}

/// Runs the command-line binary and returns (success, stdout, stderr).
pub fn cli(args: &[&str]) -> (bool, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_transformcode"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.success(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

/// A model small enough for command-line tests to train in a second.
pub const TINY_CONFIG: &str = r#"
[model]
n_layers = 1
d_model = 16
n_heads = 2
mlp_dims = [16, 8]

[train]
batch_size = 8
epochs = 2
queue_capacity = 16
"#;
