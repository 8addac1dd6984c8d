use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::OnceLock;

use super::lang::{grammar, Language};
use super::{AstError, SourceSnippet};

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub kind: &'static str,
    /// Field name under which this node hangs off its parent, if any.
    pub field: Option<&'static str>,
    pub named: bool,
    pub is_error: bool,
    pub start: usize,
    pub end: usize,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    pub leaf_text: Option<String>,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Owned parse tree over a copy of the source text.
#[derive(Debug, Clone)]
pub struct SyntaxTree {
    language: Language,
    source: String,
    nodes: Vec<Node>,
    root: NodeId,
    had_errors: bool,
}

thread_local! {
    static PARSERS: RefCell<HashMap<Language, tree_sitter::Parser>> = RefCell::new(HashMap::new());
}

/// Parses a snippet. Syntax errors are recovered, never fatal.
pub fn parse(snippet: &SourceSnippet) -> Result<SyntaxTree, AstError> {
    parse_text(snippet.language, &snippet.text).map_err(|e| match e {
        AstError::ParserFailure(_) => AstError::ParserFailure(snippet.id.clone()),
        other => other,
    })
}

pub fn parse_text(language: Language, text: &str) -> Result<SyntaxTree, AstError> {
    let ts_tree = PARSERS.with(|cell| {
        let mut parsers = cell.borrow_mut();
        let parser = parsers.entry(language).or_insert_with(|| {
            let mut p = tree_sitter::Parser::new();
            p.set_language(&grammar(language).ts_language())
                .expect("grammar ABI matches the linked tree-sitter runtime");
            p
        });
        parser.parse(text, None)
    });
    let ts_tree = ts_tree.ok_or_else(|| AstError::ParserFailure(String::new()))?;
    Ok(SyntaxTree::from_ts(language, text, &ts_tree))
}

fn static_language(language: Language) -> &'static tree_sitter::Language {
    static JAVA: OnceLock<tree_sitter::Language> = OnceLock::new();
    static C: OnceLock<tree_sitter::Language> = OnceLock::new();
    let cell = match language {
        Language::Java => &JAVA,
        Language::C => &C,
    };
    cell.get_or_init(|| grammar(language).ts_language())
}

fn static_kind(lang: &'static tree_sitter::Language, ts: &tree_sitter::Node<'_>) -> &'static str {
    if ts.is_error() {
        return "ERROR";
    }
    lang.node_kind_for_id(ts.kind_id()).unwrap_or("UNKNOWN")
}

impl SyntaxTree {
    fn from_ts(language: Language, text: &str, ts_tree: &tree_sitter::Tree) -> Self {
        let root_ts = ts_tree.root_node();
        let ts_lang = static_language(language);
        let mut nodes: Vec<Node> = Vec::new();
        // (ts node, parent id, field)
        let mut stack = vec![(root_ts, None::<NodeId>, None::<&'static str>)];
        while let Some((ts, parent, field)) = stack.pop() {
            let id = nodes.len();
            let leaf = ts.child_count() == 0;
            nodes.push(Node {
                kind: static_kind(ts_lang, &ts),
                field,
                named: ts.is_named(),
                is_error: ts.is_error() || ts.is_missing(),
                start: ts.start_byte(),
                end: ts.end_byte(),
                parent,
                children: Vec::new(),
                leaf_text: leaf.then(|| text[ts.byte_range()].to_string()),
            });
            if let Some(p) = parent {
                nodes[p].children.push(id);
            }
            let mut cursor = ts.walk();
            let mut kids = Vec::with_capacity(ts.child_count() as usize);
            if cursor.goto_first_child() {
                loop {
                    kids.push((
                        cursor.node(),
                        cursor.field_id().and_then(|f| ts_lang.field_name_for_id(f.get())),
                    ));
                    if !cursor.goto_next_sibling() {
                        break;
                    }
                }
            }
            for (child, f) in kids.into_iter().rev() {
                stack.push((child, Some(id), f));
            }
        }
        // Children were appended in pop order, which is source order because
        // siblings are pushed reversed.
        SyntaxTree {
            language,
            source: text.to_string(),
            nodes,
            root: 0,
            had_errors: root_ts.has_error(),
        }
    }

    pub fn language(&self) -> Language {
        self.language
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn had_errors(&self) -> bool {
        self.had_errors
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn kind(&self, id: NodeId) -> &'static str {
        self.nodes[id].kind
    }

    pub fn text(&self, id: NodeId) -> &str {
        let n = &self.nodes[id];
        &self.source[n.start..n.end]
    }

    pub fn span(&self, id: NodeId) -> (usize, usize) {
        let n = &self.nodes[id];
        (n.start, n.end)
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id].parent
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id].children
    }

    pub fn named_children(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes[id]
            .children
            .iter()
            .copied()
            .filter(move |&c| self.nodes[c].named)
    }

    pub fn child_by_field(&self, id: NodeId, field: &str) -> Option<NodeId> {
        self.children_by_field(id, field).next()
    }

    pub fn children_by_field<'a>(&'a self, id: NodeId, field: &'a str) -> impl Iterator<Item = NodeId> + 'a {
        self.nodes[id]
            .children
            .iter()
            .copied()
            .filter(move |&c| self.nodes[c].field == Some(field))
    }

    /// All node ids in pre-order (parents before children, siblings in source order).
    pub fn preorder(&self) -> Vec<NodeId> {
        self.preorder_from(self.root)
    }

    pub fn preorder_from(&self, start: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![start];
        while let Some(id) = stack.pop() {
            out.push(id);
            for &c in self.nodes[id].children.iter().rev() {
                stack.push(c);
            }
        }
        out
    }

    /// Whether `id` lies inside the subtree rooted at `ancestor` (inclusive).
    pub fn is_within(&self, mut id: NodeId, ancestor: NodeId) -> bool {
        loop {
            if id == ancestor {
                return true;
            }
            match self.nodes[id].parent {
                Some(p) => id = p,
                None => return false,
            }
        }
    }

    /// Named top-level children of the root, ignoring comments.
    pub fn top_level_items(&self) -> Vec<NodeId> {
        let g = grammar(self.language);
        self.named_children(self.root)
            .filter(|&c| !g.is_comment(self.nodes[c].kind))
            .collect()
    }

    /// The function node when the whole snippet is a single method/function.
    pub fn root_function(&self) -> Option<NodeId> {
        let g = grammar(self.language);
        match self.top_level_items().as_slice() {
            [only] if self.nodes[*only].kind == g.function => Some(*only),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn java(text: &str) -> SyntaxTree {
        parse_text(Language::Java, text).unwrap()
    }

    fn count_kind(t: &SyntaxTree, kind: &str) -> usize {
        t.preorder().into_iter().filter(|&n| t.kind(n) == kind).count()
    }

    #[test]
    fn bubble_sort_has_two_fors_and_an_if() {
        let t = java(crate::testdata::BUBBLE_SORT);
        assert!(!t.had_errors());
        assert_eq!(count_kind(&t, "for_statement"), 2);
        assert_eq!(count_kind(&t, "if_statement"), 1);
        let method = t
            .preorder()
            .into_iter()
            .find(|&n| t.kind(n) == "method_declaration")
            .unwrap();
        let body = t.child_by_field(method, "body").unwrap();
        let fors: Vec<_> = t
            .preorder_from(body)
            .into_iter()
            .filter(|&n| t.kind(n) == "for_statement")
            .collect();
        assert!(t.is_within(fors[1], fors[0]));
    }

    #[test]
    fn empty_method_parses_cleanly() {
        let t = java("void f(){}");
        assert!(!t.had_errors());
        let f = t.root_function().expect("single method");
        let body = t.child_by_field(f, "body").unwrap();
        assert_eq!(t.named_children(body).count(), 0);
    }

    #[test]
    fn broken_declaration_recovers_and_spans_input() {
        let src = "int x = ;";
        let t = java(src);
        assert!(t.had_errors());
        assert_eq!(t.span(t.root()).0, 0);
        assert!(t.span(t.root()).1 >= src.trim_end().len());
    }

    #[test]
    fn children_nest_inside_parent_spans() {
        let t = parse_text(Language::C, crate::testdata::C_SAMPLE).unwrap();
        for id in t.preorder() {
            let (s, e) = t.span(id);
            let mut prev_end = s;
            for &c in t.children(id) {
                let (cs, ce) = t.span(c);
                assert!(cs >= prev_end && ce <= e, "child {} escapes {}", t.kind(c), t.kind(id));
                prev_end = ce;
            }
            if t.node(id).is_leaf() {
                assert!(t.node(id).leaf_text.is_some());
            }
        }
    }

    #[test]
    fn unsupported_language_name_is_rejected() {
        assert!(matches!(
            "cobol".parse::<Language>(),
            Err(AstError::UnsupportedLanguage(_))
        ));
    }
}
