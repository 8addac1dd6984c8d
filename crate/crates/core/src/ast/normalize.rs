use std::collections::HashSet;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::lang::{grammar, Grammar, Language};
use super::tree::{parse_text, NodeId, SyntaxTree};
use super::{AstError, SourceSnippet};
use crate::edit::{apply_edits, Edit};

/// A snippet after comment removal and canonical `varN` renaming.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizedSnippet {
    pub source_id: String,
    pub language: Language,
    pub text: String,
    /// original identifier -> canonical name, in order of first occurrence
    pub rename_map: IndexMap<String, String>,
}

/// Removes every line and block comment, keeping all other bytes in order.
pub fn strip_comments(snippet: &SourceSnippet) -> Result<SourceSnippet, AstError> {
    let tree = parse_text(snippet.language, &snippet.text)?;
    let edits = comment_edits(&tree);
    Ok(SourceSnippet {
        text: apply_edits(&snippet.text, &edits),
        ..snippet.clone()
    })
}

fn comment_edits(tree: &SyntaxTree) -> Vec<Edit> {
    let g = grammar(tree.language());
    let src = tree.source().as_bytes();
    tree.preorder()
        .into_iter()
        .filter(|&n| g.is_comment(tree.kind(n)))
        .map(|n| {
            let (s, e) = tree.span(n);
            // keep two words from fusing when a comment was their only separator
            let joins = s > 0 && e < src.len() && is_word(src[s - 1]) && is_word(src[e]);
            Edit::replace(s, e, if joins { " " } else { "" })
        })
        .collect()
}

fn is_word(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b == b'$'
}

/// Strips comments and renames variables to `var1`, `var2`, ... by first
/// occurrence in a pre-order walk.
///
/// Renamed: parameters, locals, fields, catch/loop variables, member names
/// accessed through a renamed variable (`arr.length`), and the function name
/// when the snippet is a single function. Types, keywords, literals and
/// library call names are left alone.
pub fn normalize(snippet: &SourceSnippet) -> Result<NormalizedSnippet, AstError> {
    let tree = parse_text(snippet.language, &snippet.text)?;
    let g = grammar(snippet.language);
    let eligible = Eligibility::collect(&tree, g);

    let mut edits = comment_edits(&tree);
    let mut rename_map: IndexMap<String, String> = IndexMap::new();
    for id in tree.preorder() {
        if !tree.node(id).is_leaf() || !eligible.renames_at(&tree, g, id) {
            continue;
        }
        let original = tree.text(id).to_string();
        let next = rename_map.len() + 1;
        let canonical = rename_map
            .entry(original)
            .or_insert_with(|| format!("var{next}"))
            .clone();
        let (s, e) = tree.span(id);
        edits.push(Edit::replace(s, e, canonical));
    }

    Ok(NormalizedSnippet {
        source_id: snippet.id.clone(),
        language: snippet.language,
        text: apply_edits(&snippet.text, &edits),
        rename_map,
    })
}

struct Eligibility {
    variables: HashSet<String>,
    members: HashSet<String>,
    root_function: Option<String>,
}

impl Eligibility {
    fn collect(tree: &SyntaxTree, g: &Grammar) -> Self {
        let mut variables = HashSet::new();
        for id in tree.preorder() {
            if let Some(name) = declared_name(tree, g, id) {
                variables.insert(tree.text(name).to_string());
            }
        }
        let mut members = HashSet::new();
        for id in tree.preorder() {
            if tree.kind(id) != g.field_access {
                continue;
            }
            if let (Some(obj), Some(field)) = (
                tree.child_by_field(id, g.field_access_object),
                tree.child_by_field(id, "field"),
            ) {
                if object_is_variable(tree, obj, &variables) {
                    members.insert(tree.text(field).to_string());
                }
            }
        }
        let root_function = tree
            .root_function()
            .and_then(|f| function_name(tree, g, f))
            .map(|n| tree.text(n).to_string());
        Eligibility {
            variables,
            members,
            root_function,
        }
    }

    fn is_name(&self, text: &str) -> bool {
        self.variables.contains(text) || self.members.contains(text) || self.root_function.as_deref() == Some(text)
    }

    fn renames_at(&self, tree: &SyntaxTree, g: &Grammar, id: NodeId) -> bool {
        let node = tree.node(id);
        let text = tree.text(id);
        let is_root_fn = self.root_function.as_deref() == Some(text);
        let Some(parent) = node.parent else {
            return false;
        };
        let pkind = tree.kind(parent);
        let field = node.field;

        if node.kind == g.member_name_kind && pkind == g.field_access && field == Some("field") {
            let obj = tree.child_by_field(parent, g.field_access_object);
            return obj.is_some_and(|o| object_is_variable(tree, o, &self.variables)) && self.is_name(text);
        }
        if node.kind != "identifier" {
            return false;
        }
        if pkind == g.call && field == Some(g.call_name_field) {
            return is_root_fn;
        }
        match (g.language, pkind, field) {
            (Language::Java, "method_declaration", Some("name")) => is_root_fn,
            (Language::C, "function_declarator", Some("declarator")) => is_root_fn,
            (
                Language::Java,
                "class_declaration"
                | "interface_declaration"
                | "enum_declaration"
                | "constructor_declaration"
                | "labeled_statement"
                | "break_statement"
                | "continue_statement"
                | "scoped_identifier"
                | "import_declaration"
                | "package_declaration"
                | "annotation"
                | "marker_annotation",
                _,
            ) => false,
            (Language::C, "labeled_statement" | "goto_statement", _) => false,
            _ => self.is_name(text),
        }
    }
}

fn object_is_variable(tree: &SyntaxTree, obj: NodeId, variables: &HashSet<String>) -> bool {
    match tree.kind(obj) {
        "this" => true,
        "identifier" => variables.contains(tree.text(obj)),
        _ => false,
    }
}

/// The identifier introduced by a declaration-like node, if `id` is one.
pub(crate) fn declared_name(tree: &SyntaxTree, g: &Grammar, id: NodeId) -> Option<NodeId> {
    match (g.language, tree.kind(id)) {
        (
            Language::Java,
            "variable_declarator"
            | "formal_parameter"
            | "catch_formal_parameter"
            | "enhanced_for_statement"
            | "spread_parameter"
            | "resource",
        ) => tree
            .child_by_field(id, "name")
            .filter(|&n| tree.kind(n) == "identifier"),
        (Language::Java, "lambda_expression") => tree
            .child_by_field(id, "parameters")
            .filter(|&n| tree.kind(n) == "identifier"),
        (Language::Java, "inferred_parameters") => None,
        (Language::C, "declaration" | "parameter_declaration" | "field_declaration") => None,
        (Language::C, _) => {
            // declarators hang off declarations; find the identifier they introduce
            let parent = tree.parent(id)?;
            let pk = tree.kind(parent);
            let is_top_declarator =
                matches!(pk, "declaration" | "parameter_declaration") && tree.node(id).field == Some("declarator");
            if !is_top_declarator {
                return None;
            }
            c_declarator_identifier(tree, id)
        }
        _ => None,
    }
}

fn c_declarator_identifier(tree: &SyntaxTree, mut id: NodeId) -> Option<NodeId> {
    loop {
        match tree.kind(id) {
            "identifier" => return Some(id),
            "function_declarator" => return None,
            "init_declarator" | "pointer_declarator" | "array_declarator" | "parenthesized_declarator" => {
                id = tree.child_by_field(id, "declarator")?;
            }
            _ => return None,
        }
    }
}

pub(crate) fn function_name(tree: &SyntaxTree, g: &Grammar, f: NodeId) -> Option<NodeId> {
    match g.language {
        Language::Java => tree.child_by_field(f, "name"),
        Language::C => {
            let mut d = tree.child_by_field(f, "declarator")?;
            loop {
                match tree.kind(d) {
                    "function_declarator" => return tree.child_by_field(d, "declarator"),
                    "pointer_declarator" | "parenthesized_declarator" => {
                        d = tree.child_by_field(d, "declarator")?;
                    }
                    _ => return None,
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testdata::{BUBBLE_SORT, C_SAMPLE, GET_MAX};
    use proptest::prelude::*;

    fn java(text: &str) -> SourceSnippet {
        SourceSnippet::new("t", Language::Java, text)
    }

    #[test]
    fn strips_line_comment() {
        let out = strip_comments(&java("int n; // count")).unwrap();
        assert_eq!(out.text, "int n; ");
    }

    #[test]
    fn strips_block_comments() {
        let out = strip_comments(&java("/*a*/x/*b*/=1;")).unwrap();
        assert_eq!(out.text, "x=1;");
    }

    #[test]
    fn strips_fig_comment_only() {
        let out = strip_comments(&java(BUBBLE_SORT)).unwrap();
        assert_eq!(out.text, BUBBLE_SORT.replace("// swap elements", ""));
    }

    #[test]
    fn comment_markers_inside_strings_survive() {
        let src = r#"String s = "a // not a comment /* nor this */";"#;
        assert_eq!(strip_comments(&java(src)).unwrap().text, src);
    }

    #[test]
    fn adjacent_words_are_not_fused() {
        let out = strip_comments(&java("int/**/x = 1;")).unwrap();
        assert_eq!(out.text, "int x = 1;");
    }

    #[test]
    fn get_max_parameters_become_var2_var3() {
        let n = normalize(&java(GET_MAX)).unwrap();
        assert_eq!(
            n.text,
            "public int var1(int var2, int var3) { if (var2>var3) return var2; else return var3;}"
        );
        let pairs: Vec<_> = n.rename_map.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        assert_eq!(pairs, [("getMax", "var1"), ("a", "var2"), ("b", "var3")]);
    }

    #[test]
    fn nothing_to_rename() {
        let n = normalize(&java("return 1;")).unwrap();
        assert_eq!(n.text, "return 1;");
        assert!(n.rename_map.is_empty());
    }

    #[test]
    fn bubble_sort_renames_member_and_keeps_class_and_method() {
        let n = normalize(&java(BUBBLE_SORT)).unwrap();
        assert!(n.text.contains("class BubbleSortExample"));
        assert!(n.text.contains("static void bubbleSort(int[] var1)"));
        assert!(n.text.contains("int var2 = var1.var3;"));
        assert!(!n.text.contains("//"));
        let names: Vec<_> = n.rename_map.keys().cloned().collect();
        assert_eq!(names, ["arr", "n", "length", "temp", "i", "j"]);
    }

    #[test]
    fn library_names_are_kept() {
        let src = "class A { static void main(String[] args) { int x = Integer.parseInt(args[0]); System.out.println(Math.max(x, 1)); } }";
        let n = normalize(&java(src)).unwrap();
        assert!(n.text.contains("Integer.parseInt(var1[0])"));
        assert!(n.text.contains("System.out.println(Math.max(var2, 1))"));
    }

    #[test]
    fn c_function_and_struct_members() {
        let n = normalize(&SourceSnippet::new("c", Language::C, C_SAMPLE)).unwrap();
        assert!(n.text.contains("int main(int var1, char **var2)"));
        assert!(n.text.contains("printf("));
        assert!(n.text.contains("var5.var6 = 1;"), "{}", n.text);
    }

    #[test]
    fn c_single_function_name_is_renamed() {
        let src = "int add(int a, int b) { return add(a, 0) + b; }";
        let n = normalize(&SourceSnippet::new("c", Language::C, src)).unwrap();
        assert_eq!(n.text, "int var1(int var2, int var3) { return var1(var2, 0) + var3; }");
    }

    #[test]
    fn idempotent_on_samples() {
        for (lang, src) in [
            (Language::Java, BUBBLE_SORT),
            (Language::Java, GET_MAX),
            (Language::C, C_SAMPLE),
        ] {
            let once = normalize(&SourceSnippet::new("s", lang, src)).unwrap();
            let twice = normalize(&SourceSnippet::new("s", lang, once.text.clone())).unwrap();
            assert_eq!(once.text, twice.text);
        }
    }

    fn assert_map_invariants(n: &NormalizedSnippet) {
        let values: HashSet<_> = n.rename_map.values().collect();
        assert_eq!(values.len(), n.rename_map.len(), "injective");
        for (i, v) in n.rename_map.values().enumerate() {
            assert_eq!(v, &format!("var{}", i + 1));
        }
    }

    proptest! {
        #[test]
        fn parse_and_normalize_never_panic(s in "\\PC{0,200}") {
            for lang in Language::ALL {
                let snip = SourceSnippet::new("fuzz", lang, s.clone());
                let n = normalize(&snip).unwrap();
                assert_map_invariants(&n);
            }
        }

        #[test]
        fn rename_map_contiguous_on_generated_java(
            names in proptest::collection::vec("[a-z][a-z0-9]{0,4}", 1..6)
        ) {
            let body: String = names
                .iter()
                .enumerate()
                .map(|(i, n)| format!("int {n}_{i} = {i}; {n}_{i}++;"))
                .collect();
            let src = format!("void f(int p) {{ {body} }}");
            let n = normalize(&java(&src)).unwrap();
            assert_map_invariants(&n);
            let again = normalize(&java(&n.text)).unwrap();
            prop_assert_eq!(again.text, n.text);
        }
    }
}
