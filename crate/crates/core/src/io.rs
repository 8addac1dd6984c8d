//! On-disk formats: the snippet store, clone-pair files, preprocessed samples
//! and embedding exports, plus ingestion and corpus preprocessing.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ast::SourceSnippet;
use crate::augment::AugmentConfig;
use crate::pipeline::{prepare_sample, SampleError};

pub const SAMPLES_FORMAT: &str = "transformcode-samples";
pub const EMBEDDINGS_FORMAT: &str = "transformcode-embeddings";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}:{line}: malformed record: {message}")]
    MalformedRecord {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("pair references unknown snippet `{0}`")]
    DanglingPairId(String),
    #[error("{path}: unsupported format `{format}` version {version}")]
    UnsupportedFormat {
        path: PathBuf,
        format: String,
        version: u32,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn open(path: &Path) -> Result<BufReader<File>, IoError> {
    File::open(path).map(BufReader::new).map_err(io_err(path))
}

pub fn create(path: &Path) -> Result<BufWriter<File>, IoError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

/// Non-blank lines parsed as JSON, with 1-based line numbers in errors.
fn read_json_lines<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<(usize, T)>, IoError> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let v = serde_json::from_str(&line).map_err(|e| IoError::MalformedRecord {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push((i + 1, v));
    }
    Ok(out)
}

pub fn read_snippets(path: &Path) -> Result<Vec<SourceSnippet>, IoError> {
    let records: Vec<(usize, SourceSnippet)> = read_json_lines(path)?;
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(records.len());
    for (line, s) in records {
        if s.text.trim().is_empty() {
            return Err(IoError::MalformedRecord {
                path: path.to_path_buf(),
                line,
                message: format!("snippet `{}` has empty code", s.id),
            });
        }
        if !seen.insert(s.id.clone()) {
            return Err(IoError::MalformedRecord {
                path: path.to_path_buf(),
                line,
                message: format!("duplicate id `{}`", s.id),
            });
        }
        out.push(s);
    }
    Ok(out)
}

pub fn write_snippets(path: &Path, snippets: &[SourceSnippet]) -> Result<(), IoError> {
    let mut w = create(path)?;
    for s in snippets {
        serde_json::to_writer(&mut w, s).expect("snippets serialize");
        writeln!(w).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRecord {
    pub id1: String,
    pub id2: String,
    #[serde(with = "clone_label")]
    pub label: bool,
}

mod clone_label {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(if *v { "clone" } else { "non-clone" })
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        let s = String::deserialize(d)?;
        match s.trim().to_ascii_lowercase().as_str() {
            "clone" | "1" | "true" => Ok(true),
            "non-clone" | "nonclone" | "0" | "false" => Ok(false),
            other => Err(serde::de::Error::custom(format!("unknown label `{other}`"))),
        }
    }
}

/// CSV with an `id1,id2,label` header.
pub fn read_pairs(path: &Path) -> Result<Vec<PairRecord>, IoError> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(open(path)?);
    let mut out = Vec::new();
    for (i, rec) in r.deserialize().enumerate() {
        out.push(rec.map_err(|e: csv::Error| IoError::MalformedRecord {
            path: path.to_path_buf(),
            line: i + 2,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn write_pairs(path: &Path, pairs: &[PairRecord]) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for p in pairs {
        w.serialize(p).map_err(|e| IoError::Io {
            path: path.to_path_buf(),
            source: e.into(),
        })?;
    }
    w.flush().map_err(io_err(path))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Unique snippets, in store order.
    pub snippets: Vec<SourceSnippet>,
    pub pairs: Vec<PairRecord>,
}

/// Loads the store; with a pair file, keeps each snippet named by some pair
/// exactly once.
pub fn ingest(snippets: &Path, pairs: Option<&Path>) -> Result<Dataset, IoError> {
    let store = read_snippets(snippets)?;
    let Some(pairs) = pairs else {
        return Ok(Dataset {
            snippets: store,
            pairs: Vec::new(),
        });
    };
    let pairs = read_pairs(pairs)?;
    let known: HashMap<&str, usize> = store.iter().enumerate().map(|(i, s)| (s.id.as_str(), i)).collect();
    let mut used = BTreeSet::new();
    for p in &pairs {
        for id in [&p.id1, &p.id2] {
            let i = known
                .get(id.as_str())
                .ok_or_else(|| IoError::DanglingPairId(id.clone()))?;
            used.insert(*i);
        }
    }
    let snippets = used.into_iter().map(|i| store[i].clone()).collect();
    Ok(Dataset { snippets, pairs })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessedSample {
    pub id: String,
    pub tokens_normalized: Vec<String>,
    pub tokens_anchor: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleFailure {
    pub id: String,
    pub error: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
}

/// Runs normalize, augment and extract over the corpus on `workers`
/// threads. Output order follows input order regardless of scheduling.
pub fn preprocess(
    snippets: &[SourceSnippet],
    cfg: &AugmentConfig,
    workers: usize,
) -> (Vec<PreprocessedSample>, Vec<SampleFailure>) {
    let run = || -> Vec<Result<PreprocessedSample, SampleFailure>> {
        snippets
            .par_iter()
            .map(|s| {
                prepare_sample(s, cfg)
                    .map(|p| PreprocessedSample {
                        id: p.id,
                        tokens_normalized: p.query.tokens,
                        tokens_anchor: p.key.tokens,
                        label: p.label,
                    })
                    .map_err(|e: SampleError| SampleFailure {
                        id: s.id.clone(),
                        error: e.to_string(),
                    })
            })
            .collect()
    };
    let results = match rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build() {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    };
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for r in results {
        match r {
            Ok(s) => ok.push(s),
            Err(f) => failed.push(f),
        }
    }
    (ok, failed)
}

fn write_with_header<T: Serialize>(path: &Path, format: &str, records: &[T]) -> Result<(), IoError> {
    let mut w = create(path)?;
    let header = Header {
        format: format.into(),
        version: FORMAT_VERSION,
    };
    serde_json::to_writer(&mut w, &header).expect("header serializes");
    writeln!(w).map_err(io_err(path))?;
    for r in records {
        serde_json::to_writer(&mut w, r).expect("record serializes");
        writeln!(w).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn read_with_header<T: for<'de> Deserialize<'de>>(path: &Path, format: &str) -> Result<Vec<T>, IoError> {
    let mut lines = open(path)?.lines();
    let first = lines.next().transpose().map_err(io_err(path))?.unwrap_or_default();
    let header: Header = serde_json::from_str(&first).map_err(|e| IoError::MalformedRecord {
        path: path.to_path_buf(),
        line: 1,
        message: format!("missing format header: {e}"),
    })?;
    if header.format != format || header.version != FORMAT_VERSION {
        return Err(IoError::UnsupportedFormat {
            path: path.to_path_buf(),
            format: header.format,
            version: header.version,
        });
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| IoError::MalformedRecord {
            path: path.to_path_buf(),
            line: i + 2,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn write_samples(path: &Path, samples: &[PreprocessedSample]) -> Result<(), IoError> {
    write_with_header(path, SAMPLES_FORMAT, samples)
}

pub fn read_samples(path: &Path) -> Result<Vec<PreprocessedSample>, IoError> {
    let samples: Vec<PreprocessedSample> = read_with_header(path, SAMPLES_FORMAT)?;
    for (i, s) in samples.iter().enumerate() {
        if s.tokens_normalized.is_empty() || s.tokens_anchor.is_empty() {
            return Err(IoError::MalformedRecord {
                path: path.to_path_buf(),
                line: i + 2,
                message: format!("sample `{}` has an empty token list", s.id),
            });
        }
    }
    Ok(samples)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub id: String,
    pub embedding: Vec<f64>,
}

pub fn write_embeddings(path: &Path, records: &[EmbeddingRecord]) -> Result<(), IoError> {
    write_with_header(path, EMBEDDINGS_FORMAT, records)
}

pub fn read_embeddings(path: &Path) -> Result<Vec<EmbeddingRecord>, IoError> {
    read_with_header(path, EMBEDDINGS_FORMAT)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::Language;

    fn store(dir: &Path, n: usize) -> PathBuf {
        let path = dir.join("s.jsonl");
        let snippets: Vec<SourceSnippet> = (0..n)
            .map(|i| {
                SourceSnippet::new(
                    format!("s{i}"),
                    Language::Java,
                    format!("int f(int a){{ return a + {i}; }}"),
                )
            })
            .collect();
        write_snippets(&path, &snippets).unwrap();
        path
    }

    #[test]
    fn dedup_through_pairs() {
        let dir = tempfile::tempdir().unwrap();
        let s = store(dir.path(), 5);
        let p = dir.path().join("p.csv");
        std::fs::write(&p, "id1,id2,label\ns0,s1,clone\ns1,s2,non-clone\ns3,s0,1\n").unwrap();
        let d = ingest(&s, Some(&p)).unwrap();
        assert_eq!(d.pairs.len(), 3);
        let ids: Vec<&str> = d.snippets.iter().map(|s| s.id.as_str()).collect();
        assert_eq!(ids, ["s0", "s1", "s2", "s3"]);
        std::fs::write(&p, "id1,id2,label\ns0,zz,clone\n").unwrap();
        assert!(matches!(ingest(&s, Some(&p)), Err(IoError::DanglingPairId(id)) if id == "zz"));
    }

    #[test]
    fn malformed_line_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(
            &path,
            "{\"id\":\"a\",\"language\":\"java\",\"code\":\"int x;\"}\n\n{oops\n",
        )
        .unwrap();
        match read_snippets(&path) {
            Err(IoError::MalformedRecord { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn samples_round_trip_and_reject_other_versions() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.jsonl");
        let samples = vec![PreprocessedSample {
            id: "a".into(),
            tokens_normalized: vec!["var1".into()],
            tokens_anchor: vec!["var1".into(), "=".into()],
            label: Some("sort".into()),
        }];
        write_samples(&path, &samples).unwrap();
        assert_eq!(read_samples(&path).unwrap(), samples);
        let text = std::fs::read_to_string(&path)
            .unwrap()
            .replace("\"version\":1", "\"version\":2");
        std::fs::write(&path, text).unwrap();
        assert!(matches!(
            read_samples(&path),
            Err(IoError::UnsupportedFormat { version: 2, .. })
        ));
    }

    #[test]
    fn preprocess_accounts_for_every_snippet() {
        let mut snippets: Vec<SourceSnippet> = (0..6)
            .map(|i| {
                SourceSnippet::new(
                    format!("s{i}"),
                    Language::Java,
                    format!("int f(int a){{ int b = a * {i}; return a + b; }}"),
                )
            })
            .collect();
        snippets.push(SourceSnippet::new("empty", Language::Java, "class A {}"));
        let cfg = AugmentConfig::default();
        let (ok, failed) = preprocess(&snippets, &cfg, 2);
        assert_eq!(ok.len() + failed.len(), snippets.len());
        assert_eq!(failed.len(), 1);
        assert_eq!(failed[0].id, "empty");
        let (again, _) = preprocess(&snippets, &cfg, 1);
        assert_eq!(ok, again);
    }
}
