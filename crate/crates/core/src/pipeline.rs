//! Per-snippet preprocessing: normalize, build the anchor, extract both views.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ast::{normalize, parse_text, AstError, SourceSnippet};
use crate::augment::{generate_anchor, sample_seed, AnchorSnippet, AugmentConfig, AugmentError};
use crate::extract::{extract_path, ExtractError, TokenSequence};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SampleError {
    #[error(transparent)]
    Ast(#[from] AstError),
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error("no transformation applies to `{0}`")]
    IdentityAnchor(String),
}

/// A positive pair: the normalized snippet and its transformed variant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnchorPair {
    pub id: String,
    pub query: TokenSequence,
    pub key: TokenSequence,
    pub label: Option<String>,
}

pub fn tokens_of(language: crate::ast::Language, text: &str, id: &str) -> Result<TokenSequence, SampleError> {
    let tree = parse_text(language, text)?;
    let mut seq = extract_path(&tree)?;
    seq.source_id = id.to_string();
    seq.normalized = true;
    Ok(seq)
}

/// Normalized extraction of a snippet, the view the encoder embeds.
pub fn query_tokens(snippet: &SourceSnippet) -> Result<TokenSequence, SampleError> {
    let n = normalize(snippet)?;
    tokens_of(snippet.language, &n.text, &snippet.id)
}

/// Anchor for one snippet, seeded from the global seed and the snippet id.
pub fn anchor_for(snippet: &SourceSnippet, cfg: &AugmentConfig) -> Result<(AnchorSnippet, String), SampleError> {
    let n = normalize(snippet)?;
    let seeded = cfg.clone().with_seed(sample_seed(cfg.rng_seed, &snippet.id));
    let anchor = generate_anchor(&n, &seeded)?;
    Ok((anchor, n.text))
}

pub fn prepare_sample(snippet: &SourceSnippet, cfg: &AugmentConfig) -> Result<AnchorPair, SampleError> {
    let (anchor, normalized) = anchor_for(snippet, cfg)?;
    if anchor.applied.is_empty() {
        return Err(SampleError::IdentityAnchor(snippet.id.clone()));
    }
    Ok(AnchorPair {
        id: snippet.id.clone(),
        query: tokens_of(snippet.language, &normalized, &snippet.id)?,
        key: tokens_of(snippet.language, &anchor.text, &snippet.id)?,
        label: snippet.label.clone(),
    })
}

/// Pairs for a batch; snippets without a usable anchor are dropped with a
/// warning, other failures propagate.
pub fn build_pairs(batch: &[SourceSnippet], cfg: &AugmentConfig) -> Result<Vec<AnchorPair>, SampleError> {
    let results: Vec<_> = batch.par_iter().map(|s| prepare_sample(s, cfg)).collect();
    let mut out = Vec::with_capacity(batch.len());
    for r in results {
        match r {
            Ok(p) => out.push(p),
            Err(SampleError::IdentityAnchor(id)) => log::warn!("dropping `{id}`: anchor equals the original"),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::Language;
    use crate::testdata::{BUBBLE_SORT, GET_MAX};

    fn batch() -> Vec<SourceSnippet> {
        vec![
            SourceSnippet::new("sort", Language::Java, BUBBLE_SORT),
            SourceSnippet::new("max", Language::Java, GET_MAX),
        ]
    }

    #[test]
    fn two_snippets_two_pairs() {
        let pairs = build_pairs(&batch(), &AugmentConfig::default()).unwrap();
        assert_eq!(pairs.len(), 2);
        for p in &pairs {
            assert_ne!(p.query.tokens, p.key.tokens, "{}", p.id);
            assert!(!p.query.is_empty() && !p.key.is_empty());
        }
        assert_eq!(pairs, build_pairs(&batch(), &AugmentConfig::default()).unwrap());
    }

    #[test]
    fn untransformable_snippets_are_dropped() {
        let s = vec![SourceSnippet::new("r", Language::Java, "int f(){ return 1; }")];
        let cfg = AugmentConfig::only(&[crate::augment::TransformKind::WhileForExchange]);
        assert!(build_pairs(&s, &cfg).unwrap().is_empty());
    }
}
