//! WordPiece-style subword vocabulary trained per dataset.
//!
//! Every extraction token is one word. Words are split into characters, the
//! first bare and the rest carrying the continuation marker, and the pair with
//! the best `count(ab) / (count(a) * count(b))` score is merged until the cap
//! is reached or no pair occurs `min_frequency` times. There are no reserved
//! entries: ids map straight onto subwords.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extract::TokenSequence;

pub const VOCAB_MAGIC: &str = "transformcode-vocab";
pub const VOCAB_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TokenizerError {
    #[error("cannot train a vocabulary on an empty corpus")]
    EmptyCorpus,
    #[error("character {ch:?} in token {token:?} was never seen during training")]
    UnknownCharacter { token: String, ch: char },
    #[error("id {0} is out of range")]
    IdOutOfRange(u32),
    #[error("vocabulary file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TokenizerConfig {
    pub max_size: usize,
    pub min_frequency: u64,
    pub continuation_marker: String,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            max_size: 20_000,
            min_frequency: 2,
            continuation_marker: "##".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Unit {
    cont: bool,
    text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    entries: Vec<String>,
    index: HashMap<String, u32>,
    marker: String,
    max_size: usize,
}

impl Vocabulary {
    fn from_entries(entries: Vec<String>, marker: String, max_size: usize) -> Self {
        let index = entries.iter().enumerate().map(|(i, e)| (e.clone(), i as u32)).collect();
        Vocabulary {
            entries,
            index,
            marker,
            max_size,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_size(&self) -> usize {
        self.max_size
    }

    pub fn continuation_marker(&self) -> &str {
        &self.marker
    }

    pub fn entries(&self) -> &[String] {
        &self.entries
    }

    pub fn id(&self, subword: &str) -> Option<u32> {
        self.index.get(subword).copied()
    }

    pub fn subword(&self, id: u32) -> Result<&str, TokenizerError> {
        self.entries
            .get(id as usize)
            .map(String::as_str)
            .ok_or(TokenizerError::IdOutOfRange(id))
    }

    fn display(&self, u: &Unit) -> String {
        if u.cont {
            format!("{}{}", self.marker, u.text)
        } else {
            u.text.clone()
        }
    }

    fn is_continuation<'a>(&self, entry: &'a str) -> Option<&'a str> {
        entry.strip_prefix(self.marker.as_str()).filter(|rest| !rest.is_empty())
    }

    /// Greedy longest-match-first segmentation of one word.
    pub fn encode_token(&self, token: &str, out: &mut Vec<u32>) -> Result<(), TokenizerError> {
        let chars: Vec<(usize, char)> = token.char_indices().collect();
        let mut start = 0;
        let mut key = String::new();
        while start < chars.len() {
            let from = chars[start].0;
            let mut end = chars.len();
            let found = loop {
                let to = chars.get(end).map_or(token.len(), |c| c.0);
                key.clear();
                if start > 0 {
                    key.push_str(&self.marker);
                }
                key.push_str(&token[from..to]);
                let bare_lookalike = start == 0 && self.is_continuation(&key).is_some();
                if let Some(&id) = self.index.get(key.as_str()).filter(|_| !bare_lookalike) {
                    break Some((id, end));
                }
                end -= 1;
                if end == start {
                    break None;
                }
            };
            let (id, end) = found.ok_or_else(|| TokenizerError::UnknownCharacter {
                token: token.to_string(),
                ch: chars[start].1,
            })?;
            out.push(id);
            start = end;
        }
        Ok(())
    }

    pub fn encode(&self, tokens: &TokenSequence) -> Result<Vec<u32>, TokenizerError> {
        self.encode_tokens(&tokens.tokens)
    }

    pub fn encode_tokens<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Vec<u32>, TokenizerError> {
        let mut out = Vec::new();
        for t in tokens {
            self.encode_token(t.as_ref(), &mut out)?;
        }
        Ok(out)
    }

    /// Like `encode_tokens`, but words holding a character outside the
    /// alphabet are skipped. Returns the ids and the number of skipped words.
    pub fn encode_lossy<S: AsRef<str>>(&self, tokens: &[S]) -> (Vec<u32>, usize) {
        let mut out = Vec::new();
        let mut word = Vec::new();
        let mut skipped = 0;
        for t in tokens {
            word.clear();
            match self.encode_token(t.as_ref(), &mut word) {
                Ok(()) => out.extend_from_slice(&word),
                Err(_) => skipped += 1,
            }
        }
        (out, skipped)
    }

    /// Rebuilds words: a bare subword opens a new word, marked ones extend it.
    pub fn decode(&self, ids: &[u32]) -> Result<Vec<String>, TokenizerError> {
        let mut words: Vec<String> = Vec::new();
        for &id in ids {
            let entry = self.subword(id)?;
            match (self.is_continuation(entry), words.last_mut()) {
                (Some(rest), Some(last)) => last.push_str(rest),
                _ => words.push(entry.to_string()),
            }
        }
        Ok(words)
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<(), TokenizerError> {
        writeln!(
            w,
            "{VOCAB_MAGIC}\t{VOCAB_VERSION}\tmarker={}\tmax_size={}",
            escape(&self.marker),
            self.max_size
        )?;
        for (i, e) in self.entries.iter().enumerate() {
            writeln!(w, "{}\t{i}", escape(e))?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("vocabulary is UTF-8")
    }

    pub fn read_from(r: impl BufRead) -> Result<Self, TokenizerError> {
        let bad = |line: usize, message: String| TokenizerError::Format { line, message };
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| bad(1, "missing header".into()))??;
        let fields: Vec<&str> = header.split('\t').collect();
        if fields.len() != 4 || fields[0] != VOCAB_MAGIC {
            return Err(bad(1, format!("not a vocabulary header: {header:?}")));
        }
        let version: u32 = fields[1].parse().map_err(|_| bad(1, "bad version".into()))?;
        if version != VOCAB_VERSION {
            return Err(bad(1, format!("unsupported version {version}")));
        }
        let marker = fields[2]
            .strip_prefix("marker=")
            .map(unescape)
            .ok_or_else(|| bad(1, "missing marker".into()))?;
        let max_size = fields[3]
            .strip_prefix("max_size=")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad(1, "missing max_size".into()))?;
        let mut entries = Vec::new();
        for (n, line) in lines.enumerate() {
            let line = line?;
            let (sub, id) = line
                .rsplit_once('\t')
                .ok_or_else(|| bad(n + 2, "expected subword<TAB>id".into()))?;
            let id: usize = id.parse().map_err(|_| bad(n + 2, format!("bad id {id:?}")))?;
            if id != entries.len() {
                return Err(bad(n + 2, format!("ids must be dense and sorted, got {id}")));
            }
            entries.push(unescape(sub));
        }
        let v = Vocabulary::from_entries(entries, marker, max_size);
        if v.index.len() != v.entries.len() {
            return Err(bad(0, "duplicate subwords".into()));
        }
        Ok(v)
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut it = s.chars();
    while let Some(c) = it.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match it.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some(c) => out.push(c),
            None => out.push('\\'),
        }
    }
    out
}

/// Word frequencies over a corpus, built in parallel.
pub fn word_counts<'a, I>(corpus: I) -> HashMap<String, u64>
where
    I: IntoParallelIterator<Item = &'a TokenSequence>,
{
    corpus
        .into_par_iter()
        .fold(HashMap::new, |mut m: HashMap<String, u64>, seq| {
            for t in &seq.tokens {
                *m.entry(t.clone()).or_default() += 1;
            }
            m
        })
        .reduce(HashMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_default() += v;
            }
            a
        })
}

pub fn train_vocab(corpus: &[TokenSequence], cfg: &TokenizerConfig) -> Result<Vocabulary, TokenizerError> {
    train_from_counts(word_counts(corpus), cfg)
}

pub fn train_from_counts(counts: HashMap<String, u64>, cfg: &TokenizerConfig) -> Result<Vocabulary, TokenizerError> {
    let mut words: Vec<(String, u64)> = counts.into_iter().filter(|(w, _)| !w.is_empty()).collect();
    if words.is_empty() {
        return Err(TokenizerError::EmptyCorpus);
    }
    words.sort();
    let marker = cfg.continuation_marker.clone();
    let shell = Vocabulary::from_entries(Vec::new(), marker.clone(), cfg.max_size);

    // Every observed character in both positions, so any word over seen
    // characters segments.
    let mut alphabet: Vec<Unit> = words
        .iter()
        .flat_map(|(w, _)| w.chars())
        .flat_map(|c| {
            [false, true].map(|cont| Unit {
                cont,
                text: c.to_string(),
            })
        })
        .collect();
    alphabet.sort_by_key(|u| shell.display(u));
    alphabet.dedup();

    let mut units: Vec<Unit> = alphabet;
    let mut ids: HashMap<Unit, usize> = units.iter().cloned().enumerate().map(|(i, u)| (u, i)).collect();
    let mut displays: HashMap<String, usize> = units.iter().enumerate().map(|(i, u)| (shell.display(u), i)).collect();
    let mut segs: Vec<(Vec<usize>, u64)> = words
        .iter()
        .map(|(w, n)| {
            let seg = w
                .chars()
                .enumerate()
                .map(|(i, c)| {
                    ids[&Unit {
                        cont: i > 0,
                        text: c.to_string(),
                    }]
                })
                .collect();
            (seg, *n)
        })
        .collect();

    let mut banned: std::collections::HashSet<(usize, usize)> = Default::default();
    while units.len() + 1 < cfg.max_size {
        let mut unit_freq = vec![0u64; units.len()];
        let mut pair_freq: HashMap<(usize, usize), u64> = HashMap::new();
        for (seg, n) in &segs {
            for &u in seg {
                unit_freq[u] += n;
            }
            for w in seg.windows(2) {
                *pair_freq.entry((w[0], w[1])).or_default() += n;
            }
        }
        let mut best: Option<((usize, usize), u64)> = None;
        for (&pair, &c) in &pair_freq {
            if c < cfg.min_frequency || banned.contains(&pair) {
                continue;
            }
            let better = match best {
                None => true,
                Some((bp, bc)) => {
                    let lhs = c as u128 * (unit_freq[bp.0] as u128 * unit_freq[bp.1] as u128);
                    let rhs = bc as u128 * (unit_freq[pair.0] as u128 * unit_freq[pair.1] as u128);
                    lhs > rhs
                        || (lhs == rhs
                            && (shell.display(&units[pair.0]), shell.display(&units[pair.1]))
                                < (shell.display(&units[bp.0]), shell.display(&units[bp.1])))
                }
            };
            if better {
                best = Some((pair, c));
            }
        }
        let Some(((a, b), _)) = best else { break };
        let merged = Unit {
            cont: units[a].cont,
            text: format!("{}{}", units[a].text, units[b].text),
        };
        let disp = shell.display(&merged);
        // A bare unit that looks marked, or a display string already taken by
        // the other position, would make the file form ambiguous.
        let clash = (!merged.cont && shell.is_continuation(&disp).is_some())
            || displays.get(&disp).is_some_and(|&i| units[i] != merged);
        if clash {
            banned.insert((a, b));
            continue;
        }
        let m = *ids.entry(merged.clone()).or_insert_with(|| {
            units.push(merged);
            displays.insert(disp, units.len() - 1);
            units.len() - 1
        });
        for (seg, _) in &mut segs {
            let mut i = 0;
            while i + 1 < seg.len() {
                if seg[i] == a && seg[i + 1] == b {
                    seg[i] = m;
                    seg.remove(i + 1);
                }
                i += 1;
            }
        }
    }

    let entries = units.iter().map(|u| shell.display(u)).collect();
    Ok(Vocabulary::from_entries(entries, marker, cfg.max_size))
}

/// Human-readable segmentation, e.g. `var ##1 ##2`.
pub fn render(v: &Vocabulary, ids: &[u32]) -> String {
    let mut s = String::new();
    for (i, &id) in ids.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{}", v.subword(id).unwrap_or("?"));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(tokens: &[&str]) -> TokenSequence {
        TokenSequence {
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
            source_id: "t".into(),
            normalized: true,
        }
    }

    #[test]
    fn single_symbol_corpus_merges_up_to_the_word() {
        let v = train_vocab(&[seq(&["aaaa"; 3])], &TokenizerConfig::default()).unwrap();
        assert!(v.id("a").is_some());
        assert!(v.id("aaaa").is_some(), "{:?}", v.entries());
        let ids = v.encode_tokens(&["aaaa"]).unwrap();
        assert_eq!(ids, vec![v.id("aaaa").unwrap()]);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(matches!(
            train_vocab(&[], &TokenizerConfig::default()),
            Err(TokenizerError::EmptyCorpus)
        ));
    }

    #[test]
    fn falls_back_to_pieces() {
        let v = Vocabulary::from_entries(
            ["var", "1", "2", "##1", "##2", "v", "##a", "##r"]
                .map(String::from)
                .to_vec(),
            "##".into(),
            100,
        );
        let ids = v.encode_tokens(&["var12"]).unwrap();
        assert_eq!(render(&v, &ids), "var ##1 ##2");
        assert_eq!(v.decode(&ids).unwrap(), vec!["var12"]);
    }

    #[test]
    fn unknown_character_is_reported() {
        let v = train_vocab(&[seq(&["ab"])], &TokenizerConfig::default()).unwrap();
        match v.encode_tokens(&["ac"]) {
            Err(TokenizerError::UnknownCharacter { ch, .. }) => assert_eq!(ch, 'c'),
            other => panic!("{other:?}"),
        }
        let (ids, skipped) = v.encode_lossy(&["ac", "ba"]);
        assert_eq!(skipped, 1);
        assert_eq!(v.decode(&ids).unwrap(), vec!["ba"]);
    }

    #[test]
    fn decode_edges() {
        let v = train_vocab(&[seq(&["ab", "ab"])], &TokenizerConfig::default()).unwrap();
        assert!(v.decode(&[]).unwrap().is_empty());
        assert_eq!(v.decode(&[0]).unwrap(), vec![v.entries()[0].clone()]);
        assert!(matches!(v.decode(&[999]), Err(TokenizerError::IdOutOfRange(999))));
    }

    #[test]
    fn alphabet_ids_come_first_and_sorted() {
        let v = train_vocab(&[seq(&["ba", "ba", "ab"])], &TokenizerConfig::default()).unwrap();
        assert_eq!(&v.entries()[..4], &["##a", "##b", "a", "b"]);
        assert_eq!(v.entries()[4], "ba");
    }

    #[test]
    fn cap_is_respected() {
        let words: Vec<String> = (0..200).map(|i| format!("tok{i}x")).collect();
        let refs: Vec<&str> = words.iter().flat_map(|w| [w.as_str(), w.as_str()]).collect();
        let cfg = TokenizerConfig {
            max_size: 40,
            ..Default::default()
        };
        let v = train_vocab(&[seq(&refs)], &cfg).unwrap();
        assert!(v.len() < 40);
    }

    #[test]
    fn marker_lookalikes_stay_unambiguous() {
        let v = train_vocab(&[seq(&["###", "###", "a##", "a##", "#"])], &TokenizerConfig::default()).unwrap();
        let reloaded = Vocabulary::read_from(v.to_text().as_bytes()).unwrap();
        assert_eq!(reloaded, v);
        for t in ["###", "a##", "#", "##"] {
            let ids = v.encode_tokens(&[t]).unwrap();
            assert_eq!(v.decode(&ids).unwrap(), vec![t]);
        }
    }

    #[test]
    fn file_round_trip_with_awkward_characters() {
        let v = train_vocab(&[seq(&["\"a\tb\"", "x\\y", "\"a\tb\""])], &TokenizerConfig::default()).unwrap();
        let text = v.to_text();
        assert!(text.starts_with("transformcode-vocab\t1\t"));
        assert_eq!(Vocabulary::read_from(text.as_bytes()).unwrap(), v);
    }

    #[test]
    fn unknown_version_is_rejected() {
        let text = "transformcode-vocab\t2\tmarker=##\tmax_size=10\na\t0\n";
        assert!(matches!(
            Vocabulary::read_from(text.as_bytes()),
            Err(TokenizerError::Format { line: 1, .. })
        ));
    }

    proptest! {
        #[test]
        fn round_trip_and_determinism(words in prop::collection::vec("[a-c#_.\\[\\]0-9]{1,8}", 1..40)) {
            let refs: Vec<&str> = words.iter().map(String::as_str).collect();
            let corpus = [seq(&refs)];
            let cfg = TokenizerConfig { max_size: 30, ..Default::default() };
            let v = train_vocab(&corpus, &cfg).unwrap();
            prop_assert_eq!(&v, &train_vocab(&corpus, &cfg).unwrap());
            for w in &words {
                let ids = v.encode_tokens(&[w]).unwrap();
                prop_assert_eq!(v.decode(&ids).unwrap(), vec![w.clone()]);
            }
            prop_assert_eq!(&Vocabulary::read_from(v.to_text().as_bytes()).unwrap(), &v);
        }
    }
}
