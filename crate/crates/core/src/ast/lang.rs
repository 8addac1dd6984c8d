use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::AstError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Java,
    C,
}

impl Language {
    pub const ALL: [Language; 2] = [Language::Java, Language::C];

    pub fn name(self) -> &'static str {
        match self {
            Language::Java => "java",
            Language::C => "c",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Language {
    type Err = AstError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "java" => Ok(Language::Java),
            "c" => Ok(Language::C),
            other => Err(AstError::UnsupportedLanguage(other.to_string())),
        }
    }
}

/// Node-kind vocabulary of one grammar.
///
/// Transformations and the normalizer are written against these names, so a
/// new language only has to describe its own kinds here.
#[derive(Debug)]
pub struct Grammar {
    pub language: Language,
    pub comment_kinds: &'static [&'static str],
    pub block: &'static str,
    pub local_declaration: &'static str,
    pub declarator: &'static str,
    pub field_access: &'static str,
    pub field_access_object: &'static str,
    pub member_name_kind: &'static str,
    pub array_access: &'static str,
    pub array_access_object: &'static str,
    pub call: &'static str,
    pub call_name_field: &'static str,
    pub function: &'static str,
    pub for_init_field: &'static str,
    pub boolean_true: &'static str,
    pub supports_exceptions: bool,
    /// Pruning table consumed by the path extractor.
    pub pruning_table: &'static str,
    ts_language: fn() -> tree_sitter::Language,
}

impl Grammar {
    pub fn ts_language(&self) -> tree_sitter::Language {
        (self.ts_language)()
    }

    pub fn is_comment(&self, kind: &str) -> bool {
        self.comment_kinds.contains(&kind)
    }
}

fn java_language() -> tree_sitter::Language {
    tree_sitter_java::LANGUAGE.into()
}

fn c_language() -> tree_sitter::Language {
    tree_sitter_c::LANGUAGE.into()
}

static JAVA: Grammar = Grammar {
    language: Language::Java,
    comment_kinds: &["line_comment", "block_comment"],
    block: "block",
    local_declaration: "local_variable_declaration",
    declarator: "variable_declarator",
    field_access: "field_access",
    field_access_object: "object",
    member_name_kind: "identifier",
    array_access: "array_access",
    array_access_object: "array",
    call: "method_invocation",
    call_name_field: "name",
    function: "method_declaration",
    for_init_field: "init",
    boolean_true: "true",
    supports_exceptions: true,
    pruning_table: include_str!("../../data/prune_java.toml"),
    ts_language: java_language,
};

static C: Grammar = Grammar {
    language: Language::C,
    comment_kinds: &["comment"],
    block: "compound_statement",
    local_declaration: "declaration",
    declarator: "init_declarator",
    field_access: "field_expression",
    field_access_object: "argument",
    member_name_kind: "field_identifier",
    array_access: "subscript_expression",
    array_access_object: "argument",
    call: "call_expression",
    call_name_field: "function",
    function: "function_definition",
    for_init_field: "initializer",
    boolean_true: "1",
    supports_exceptions: false,
    pruning_table: include_str!("../../data/prune_c.toml"),
    ts_language: c_language,
};

/// Looks up the compiled-in grammar for `language`.
pub fn grammar(language: Language) -> &'static Grammar {
    match language {
        Language::Java => &JAVA,
        Language::C => &C,
    }
}
