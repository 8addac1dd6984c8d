//! Critical-path extraction: a pruned depth-first walk that turns a syntax tree
//! into the flat token sequence fed to the encoder.

use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ast::{grammar, Language, NodeId, SyntaxTree};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExtractError {
    #[error("no statement-bearing node in `{0}`")]
    EmptyTree(String),
    #[error("invalid pruning table for {language}: {message}")]
    BadTable { language: Language, message: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
    pub source_id: String,
    pub normalized: bool,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "lowercase")]
enum SimpleRule {
    Skip,
    Atom,
    Descend,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Rule {
    Simple(SimpleRule),
    Fields {
        #[serde(default)]
        lead: Option<String>,
        fields: Vec<String>,
        #[serde(default)]
        root_only: Vec<String>,
    },
    Call {
        call: String,
    },
}

#[derive(Debug, Deserialize)]
struct TableFile {
    emit_anonymous: Vec<String>,
    rules: HashMap<String, Rule>,
}

/// Per-language pruning rules, loaded from the grammar's TOML table.
#[derive(Debug)]
pub struct PruningTable {
    emit_anonymous: HashSet<String>,
    rules: HashMap<String, Rule>,
}

impl PruningTable {
    pub fn parse(language: Language, source: &str) -> Result<Self, ExtractError> {
        let file: TableFile = toml::from_str(source).map_err(|e| ExtractError::BadTable {
            language,
            message: e.to_string(),
        })?;
        Ok(PruningTable {
            emit_anonymous: file.emit_anonymous.into_iter().collect(),
            rules: file.rules,
        })
    }

    pub fn for_language(language: Language) -> &'static PruningTable {
        static JAVA: OnceLock<PruningTable> = OnceLock::new();
        static C: OnceLock<PruningTable> = OnceLock::new();
        let cell = match language {
            Language::Java => &JAVA,
            Language::C => &C,
        };
        cell.get_or_init(|| {
            PruningTable::parse(language, grammar(language).pruning_table).expect("bundled pruning table is valid")
        })
    }
}

/// Extracts the critical-path tokens of `tree`.
pub fn extract_path(tree: &SyntaxTree) -> Result<TokenSequence, ExtractError> {
    extract_with(tree, PruningTable::for_language(tree.language()))
}

pub fn extract_with(tree: &SyntaxTree, table: &PruningTable) -> Result<TokenSequence, ExtractError> {
    let mut walker = Walker {
        tree,
        table,
        root_fn: tree.root_function(),
        out: Vec::new(),
    };
    walker.visit(tree.root());
    if walker.out.is_empty() {
        return Err(ExtractError::EmptyTree(tree.source().chars().take(40).collect()));
    }
    Ok(TokenSequence {
        tokens: walker.out,
        source_id: String::new(),
        normalized: false,
    })
}

struct Walker<'a> {
    tree: &'a SyntaxTree,
    table: &'a PruningTable,
    root_fn: Option<NodeId>,
    out: Vec<String>,
}

impl Walker<'_> {
    fn emit(&mut self, text: &str) {
        let token: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        if !token.is_empty() {
            self.out.push(token);
        }
    }

    fn visit(&mut self, id: NodeId) {
        let node = self.tree.node(id);
        if !node.named {
            if self.table.emit_anonymous.contains(node.kind) {
                let text = self.tree.text(id).to_string();
                self.emit(&text);
            }
            return;
        }
        match self.table.rules.get(node.kind) {
            Some(Rule::Simple(SimpleRule::Skip)) => {}
            Some(Rule::Simple(SimpleRule::Atom)) => {
                let text = self.tree.text(id).to_string();
                self.emit(&text);
            }
            Some(Rule::Fields {
                lead,
                fields,
                root_only,
            }) => {
                if let Some(lead) = lead {
                    self.emit(lead);
                }
                let at_root = self.root_fn == Some(id);
                for field in fields {
                    if !at_root && root_only.contains(field) {
                        continue;
                    }
                    let kids: Vec<NodeId> = self.tree.children_by_field(id, field).collect();
                    for k in kids {
                        self.visit(k);
                    }
                }
            }
            Some(Rule::Call { call }) => {
                let args = self.tree.child_by_field(id, call);
                let callee_end = args.map_or(node.end, |a| self.tree.span(a).0);
                let callee = self.tree.source()[node.start..callee_end].to_string();
                self.emit(&callee);
                if let Some(a) = args {
                    self.visit(a);
                }
            }
            Some(Rule::Simple(SimpleRule::Descend)) | None => {
                if node.is_leaf() {
                    let text = self.tree.text(id).to_string();
                    self.emit(&text);
                } else {
                    let kids = node.children.clone();
                    for k in kids {
                        self.visit(k);
                    }
                }
            }
        }
    }
}
