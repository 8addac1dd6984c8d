//! Lexical facts about a snippet used to decide whether a rewrite site is safe:
//! declared types, read/write sets, and side effects.

use std::collections::{HashMap, HashSet};

use crate::ast::{Grammar, Language, NodeId, SyntaxTree};

/// Numeric rank for Java binary numeric promotion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum NumType {
    Int,
    Long,
    Float,
    Double,
}

impl NumType {
    fn from_java(ty: &str) -> Option<NumType> {
        match ty {
            "byte" | "short" | "char" | "int" => Some(NumType::Int),
            "long" => Some(NumType::Long),
            "float" => Some(NumType::Float),
            "double" => Some(NumType::Double),
            _ => None,
        }
    }
}

pub struct Analysis {
    /// Declared type text per name; `None` when declarations disagree.
    types: HashMap<String, Option<String>>,
    pub identifiers: HashSet<String>,
    pub address_taken: HashSet<String>,
    /// Whether some catch clause does more than rethrow, or a finally exists.
    pub has_handlers: bool,
    pub max_var_index: usize,
}

impl Analysis {
    pub fn new(tree: &SyntaxTree, g: &Grammar) -> Self {
        let mut types: HashMap<String, Option<String>> = HashMap::new();
        let mut identifiers = HashSet::new();
        let mut address_taken = HashSet::new();
        let mut has_handlers = false;
        let mut max_var_index = 0;

        for id in tree.preorder() {
            let kind = tree.kind(id);
            if tree.node(id).is_leaf() && tree.node(id).named {
                let text = tree.text(id);
                if matches!(kind, "identifier" | "field_identifier" | "type_identifier") {
                    identifiers.insert(text.to_string());
                    if let Some(n) = text.strip_prefix("var").and_then(|d| d.parse::<usize>().ok()) {
                        max_var_index = max_var_index.max(n);
                    }
                }
            }
            match (g.language, kind) {
                (Language::Java, "catch_clause") => {
                    if !is_pure_rethrow(tree, id) {
                        has_handlers = true;
                    }
                }
                (Language::Java, "finally_clause") => has_handlers = true,
                (Language::C, "pointer_expression") => {
                    let op = tree.children(id).first().map(|&c| tree.text(c));
                    if op == Some("&") {
                        if let Some(arg) = tree.child_by_field(id, "argument") {
                            for n in tree.preorder_from(arg) {
                                if tree.kind(n) == "identifier" {
                                    address_taken.insert(tree.text(n).to_string());
                                }
                            }
                        }
                    }
                }
                _ => {}
            }
            if g.language == Language::Java {
                if let Some((name, ty)) = java_declared_type(tree, id) {
                    types
                        .entry(name)
                        .and_modify(|old| {
                            if old.as_deref() != Some(ty.as_str()) {
                                *old = None;
                            }
                        })
                        .or_insert(Some(ty));
                }
            }
        }
        Analysis {
            types,
            identifiers,
            address_taken,
            has_handlers,
            max_var_index,
        }
    }

    pub fn declared_type(&self, name: &str) -> Option<&str> {
        self.types.get(name).and_then(|t| t.as_deref())
    }

    /// A `varN` name not used anywhere in the snippet.
    pub fn fresh_name(&mut self) -> String {
        loop {
            self.max_var_index += 1;
            let name = format!("var{}", self.max_var_index);
            if !self.identifiers.contains(&name) {
                self.identifiers.insert(name.clone());
                return name;
            }
        }
    }

    /// Static numeric type of a Java expression, when it can be read off the
    /// declarations alone.
    pub fn java_num_type(&self, tree: &SyntaxTree, id: NodeId) -> Option<NumType> {
        match tree.kind(id) {
            "decimal_integer_literal" | "hex_integer_literal" | "octal_integer_literal" | "binary_integer_literal" => {
                let t = tree.text(id);
                Some(if t.ends_with('l') || t.ends_with('L') {
                    NumType::Long
                } else {
                    NumType::Int
                })
            }
            "decimal_floating_point_literal" => {
                let t = tree.text(id);
                Some(if t.ends_with('f') || t.ends_with('F') {
                    NumType::Float
                } else {
                    NumType::Double
                })
            }
            "character_literal" => Some(NumType::Int),
            "identifier" => self.declared_type(tree.text(id)).and_then(NumType::from_java),
            "parenthesized_expression" => tree.named_children(id).next().and_then(|c| self.java_num_type(tree, c)),
            "array_access" => {
                let arr = tree.child_by_field(id, "array")?;
                if tree.kind(arr) != "identifier" {
                    return None;
                }
                let ty = self.declared_type(tree.text(arr))?;
                NumType::from_java(ty.strip_suffix("[]")?)
            }
            "field_access" => {
                let obj = tree.child_by_field(id, "object")?;
                let field = tree.child_by_field(id, "field")?;
                let is_array = tree.kind(obj) == "identifier"
                    && self.declared_type(tree.text(obj)).is_some_and(|t| t.ends_with("[]"));
                (is_array && tree.text(field) == "length").then_some(NumType::Int)
            }
            "unary_expression" => {
                let op = tree.child_by_field(id, "operator").map(|o| tree.text(o))?;
                if op == "!" {
                    return None;
                }
                let operand = tree.child_by_field(id, "operand")?;
                self.java_num_type(tree, operand).map(|t| t.max(NumType::Int))
            }
            "binary_expression" => {
                let op = tree.child_by_field(id, "operator").map(|o| tree.text(o))?;
                if !matches!(op, "+" | "-" | "*" | "/" | "%") {
                    return None;
                }
                let l = self.java_num_type(tree, tree.child_by_field(id, "left")?)?;
                let r = self.java_num_type(tree, tree.child_by_field(id, "right")?)?;
                Some(l.max(r))
            }
            "cast_expression" => {
                let ty = tree.child_by_field(id, "type")?;
                NumType::from_java(tree.text(ty))
            }
            _ => None,
        }
    }

    /// Declared numeric type of an assignable target (identifier or array element).
    pub fn java_target_type(&self, tree: &SyntaxTree, target: NodeId) -> Option<NumType> {
        match tree.kind(target) {
            "identifier" | "array_access" => self.java_num_type(tree, target),
            _ => None,
        }
    }
}

fn is_pure_rethrow(tree: &SyntaxTree, catch: NodeId) -> bool {
    let param = tree
        .named_children(catch)
        .find(|&c| tree.kind(c) == "catch_formal_parameter")
        .and_then(|p| tree.child_by_field(p, "name"))
        .map(|n| tree.text(n).to_string());
    let Some(body) = tree.child_by_field(catch, "body") else {
        return false;
    };
    let stmts: Vec<_> = tree.named_children(body).collect();
    match (param, stmts.as_slice()) {
        (Some(p), [only]) if tree.kind(*only) == "throw_statement" => tree
            .named_children(*only)
            .next()
            .is_some_and(|e| tree.kind(e) == "identifier" && tree.text(e) == p),
        _ => false,
    }
}

fn java_declared_type(tree: &SyntaxTree, id: NodeId) -> Option<(String, String)> {
    let strip = |s: &str| s.chars().filter(|c| !c.is_whitespace()).collect::<String>();
    match tree.kind(id) {
        "variable_declarator" => {
            let decl = tree.parent(id)?;
            let ty = tree.child_by_field(decl, "type")?;
            let name = tree.child_by_field(id, "name")?;
            let mut t = strip(tree.text(ty));
            if let Some(d) = tree.child_by_field(id, "dimensions") {
                t.push_str(&strip(tree.text(d)));
            }
            Some((tree.text(name).to_string(), t))
        }
        "formal_parameter" | "enhanced_for_statement" | "catch_formal_parameter" => {
            let name = tree.child_by_field(id, "name")?;
            let ty = tree
                .child_by_field(id, "type")
                .or_else(|| tree.named_children(id).find(|&c| tree.kind(c) == "catch_type"))?;
            let mut t = strip(tree.text(ty));
            if let Some(d) = tree.child_by_field(id, "dimensions") {
                t.push_str(&strip(tree.text(d)));
            }
            Some((tree.text(name).to_string(), t))
        }
        _ => None,
    }
}

/// Read/write summary of one statement.
#[derive(Debug, Default, Clone)]
pub struct Effects {
    pub reads: HashSet<String>,
    pub writes: HashSet<String>,
    pub heap_read: bool,
    pub heap_write: bool,
    pub calls: bool,
    pub control: bool,
    pub may_throw: bool,
}

impl Effects {
    pub fn of(tree: &SyntaxTree, g: &Grammar, analysis: &Analysis, stmt: NodeId) -> Effects {
        let mut fx = Effects::default();
        let mut walker = EffectWalker {
            tree,
            g,
            analysis,
            fx: &mut fx,
        };
        walker.visit(stmt, Access::Read);
        fx
    }

    /// Whether executing `self` then `other` may differ from the reverse order.
    pub fn conflicts(&self, other: &Effects, exceptions_observable: bool) -> bool {
        let rw = |a: &Effects, b: &Effects| a.writes.iter().any(|w| b.reads.contains(w) || b.writes.contains(w));
        rw(self, other)
            || rw(other, self)
            || (self.heap_write && (other.heap_read || other.heap_write))
            || (other.heap_write && self.heap_read)
            || self.calls
            || other.calls
            || self.control
            || other.control
            || (exceptions_observable && (self.may_throw || other.may_throw))
            || (self.may_throw && other.may_throw)
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Access {
    Read,
    Write,
    ReadWrite,
}

struct EffectWalker<'a> {
    tree: &'a SyntaxTree,
    g: &'a Grammar,
    analysis: &'a Analysis,
    fx: &'a mut Effects,
}

impl EffectWalker<'_> {
    fn name(&mut self, name: &str, access: Access) {
        let heap = self.analysis.address_taken.contains(name);
        if matches!(access, Access::Read | Access::ReadWrite) {
            self.fx.reads.insert(name.to_string());
            self.fx.heap_read |= heap;
        }
        if matches!(access, Access::Write | Access::ReadWrite) {
            self.fx.writes.insert(name.to_string());
            self.fx.heap_write |= heap;
        }
    }

    fn visit(&mut self, id: NodeId, access: Access) {
        let t = self.tree;
        let kind = t.kind(id);
        let g = self.g;
        match kind {
            "identifier" => {
                let text = t.text(id).to_string();
                self.name(&text, access);
            }
            "assignment_expression" => {
                let op = t.child_by_field(id, "operator").map(|o| t.text(o)).unwrap_or("=");
                let target_access = if op == "=" { Access::Write } else { Access::ReadWrite };
                if let Some(l) = t.child_by_field(id, "left") {
                    self.visit(l, target_access);
                }
                if let Some(r) = t.child_by_field(id, "right") {
                    self.visit(r, Access::Read);
                }
                if matches!(op, "/=" | "%=") {
                    self.fx.may_throw = true;
                }
            }
            "update_expression" => {
                for c in t.named_children(id).collect::<Vec<_>>() {
                    self.visit(c, Access::ReadWrite);
                }
            }
            k if k == g.array_access || k == g.field_access => {
                self.fx.may_throw = true;
                if matches!(access, Access::Read | Access::ReadWrite) {
                    self.fx.heap_read = true;
                }
                if matches!(access, Access::Write | Access::ReadWrite) {
                    self.fx.heap_write = true;
                }
                for c in t.named_children(id).collect::<Vec<_>>() {
                    let is_member_name = k == g.field_access && t.node(c).field == Some("field");
                    if !is_member_name {
                        self.visit(c, Access::Read);
                    }
                }
            }
            "pointer_expression" => {
                let op = t.children(id).first().map(|&c| t.text(c)).unwrap_or("");
                if op == "*" {
                    if matches!(access, Access::Read | Access::ReadWrite) {
                        self.fx.heap_read = true;
                    }
                    if matches!(access, Access::Write | Access::ReadWrite) {
                        self.fx.heap_write = true;
                    }
                }
                for c in t.named_children(id).collect::<Vec<_>>() {
                    self.visit(c, Access::Read);
                }
            }
            "method_invocation"
            | "call_expression"
            | "object_creation_expression"
            | "lambda_expression"
            | "method_reference"
            | "explicit_constructor_invocation" => {
                self.fx.calls = true;
            }
            "return_statement" | "break_statement" | "continue_statement" | "throw_statement" | "goto_statement"
            | "yield_statement" => {
                self.fx.control = true;
                self.children(id);
            }
            "binary_expression" => {
                let op = t.child_by_field(id, "operator").map(|o| t.text(o)).unwrap_or("");
                if matches!(op, "/" | "%") {
                    self.fx.may_throw = true;
                }
                self.children(id);
            }
            "array_creation_expression" | "cast_expression" => {
                self.fx.may_throw = true;
                self.children(id);
            }
            "variable_declarator" | "init_declarator" => {
                for c in t.named_children(id).collect::<Vec<_>>() {
                    let f = t.node(c).field;
                    if f == Some("name") || (f == Some("declarator") && g.language == Language::C) {
                        self.declarator(c);
                    } else {
                        self.visit(c, Access::Read);
                    }
                }
            }
            "declaration" if g.language == Language::C => {
                for c in t.named_children(id).collect::<Vec<_>>() {
                    match t.node(c).field {
                        Some("declarator") => {
                            if t.kind(c) == "init_declarator" {
                                self.visit(c, Access::Read);
                            } else {
                                self.declarator(c);
                            }
                        }
                        Some("type") => {}
                        _ => self.visit(c, Access::Read),
                    }
                }
            }
            "local_variable_declaration" => {
                for c in t.children_by_field(id, "declarator").collect::<Vec<_>>() {
                    self.visit(c, Access::Read);
                }
            }
            "field_identifier" | "type_identifier" | "primitive_type" | "integral_type" => {}
            _ => self.children(id),
        }
    }

    fn children(&mut self, id: NodeId) {
        for c in self.tree.named_children(id).collect::<Vec<_>>() {
            self.visit(c, Access::Read);
        }
    }

    /// A declarator introduces (writes) its name; array sizes are reads.
    fn declarator(&mut self, id: NodeId) {
        let t = self.tree;
        match t.kind(id) {
            "identifier" => {
                let text = t.text(id).to_string();
                self.name(&text, Access::Write);
            }
            _ => {
                for c in t.named_children(id).collect::<Vec<_>>() {
                    if t.node(c).field == Some("declarator") {
                        self.declarator(c);
                    } else {
                        self.visit(c, Access::Read);
                    }
                }
            }
        }
    }
}
