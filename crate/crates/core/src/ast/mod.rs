//! Source snippets, the language-agnostic syntax tree, and normalization.
//!
//! Parsing goes through tree-sitter grammars registered per [`Language`]; the
//! resulting concrete tree is copied into an owned arena ([`SyntaxTree`]) so
//! that the rest of the pipeline never touches tree-sitter types directly.

mod lang;
mod normalize;
mod tree;

pub use lang::{grammar, Grammar, Language};
pub use normalize::{normalize, strip_comments, NormalizedSnippet};
pub use tree::{parse, parse_text, Node, NodeId, SyntaxTree};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AstError {
    #[error("no grammar registered for language `{0}`")]
    UnsupportedLanguage(String),
    #[error("snippet `{0}` has empty source text")]
    EmptySource(String),
    #[error("parser produced no tree for snippet `{0}`")]
    ParserFailure(String),
}

/// One unit of source code as it appears in a snippet store.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSnippet {
    pub id: String,
    pub language: Language,
    #[serde(rename = "code")]
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl SourceSnippet {
    pub fn new(id: impl Into<String>, language: Language, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            language,
            text: text.into(),
            label: None,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }
}
