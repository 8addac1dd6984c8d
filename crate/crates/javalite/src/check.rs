//! Compile-time checks a Java compiler would reject: unresolved names, local
//! redeclaration, unreachable statements and missing returns.

use std::collections::HashSet;

use tree_sitter::Node;

use crate::JavaError;

/// Class names that may appear as the receiver of a static call or field.
pub const LIBRARY_CLASSES: &[&str] = &[
    "System",
    "Math",
    "Integer",
    "Long",
    "Double",
    "String",
    "Character",
    "Boolean",
];

pub struct Checker<'a> {
    src: &'a [u8],
    class_name: String,
    statics: HashSet<String>,
    methods: HashSet<String>,
    scopes: Vec<Vec<String>>,
}

fn err(msg: impl Into<String>) -> JavaError {
    JavaError::Compile(msg.into())
}

impl<'a> Checker<'a> {
    pub fn new(src: &'a [u8], class_name: &str, statics: HashSet<String>, methods: HashSet<String>) -> Self {
        Checker {
            src,
            class_name: class_name.to_string(),
            statics,
            methods,
            scopes: Vec::new(),
        }
    }

    fn text(&self, n: Node) -> &'a str {
        n.utf8_text(self.src).unwrap_or("")
    }

    pub fn check_method(&mut self, method: Node) -> Result<(), JavaError> {
        self.scopes = vec![Vec::new()];
        if let Some(params) = method.child_by_field_name("parameters") {
            for p in named(params) {
                if let Some(n) = p.child_by_field_name("name") {
                    self.declare(n)?;
                }
            }
        }
        let Some(body) = method.child_by_field_name("body") else {
            return Ok(());
        };
        self.stmt(body)?;
        let returns_value = method
            .child_by_field_name("type")
            .is_some_and(|t| t.kind() != "void_type");
        if returns_value && can_complete(body, self.src) {
            let name = method.child_by_field_name("name").map(|n| self.text(n)).unwrap_or("?");
            return Err(err(format!("missing return statement in {name}")));
        }
        Ok(())
    }

    pub fn check_field_initializer(&mut self, expr: Node) -> Result<(), JavaError> {
        self.scopes = vec![Vec::new()];
        self.expr(expr)
    }

    fn declare(&mut self, name: Node) -> Result<(), JavaError> {
        let n = self.text(name).to_string();
        if self.scopes.iter().any(|s| s.contains(&n)) {
            return Err(err(format!("variable {n} is already defined")));
        }
        self.scopes.last_mut().expect("scope open").push(n);
        Ok(())
    }

    fn resolves(&self, name: &str) -> bool {
        self.scopes.iter().any(|s| s.iter().any(|v| v == name)) || self.statics.contains(name)
    }

    fn scoped<T>(&mut self, f: impl FnOnce(&mut Self) -> Result<T, JavaError>) -> Result<T, JavaError> {
        self.scopes.push(Vec::new());
        let r = f(self);
        self.scopes.pop();
        r
    }

    fn sequence(&mut self, stmts: &[Node]) -> Result<(), JavaError> {
        for (i, s) in stmts.iter().enumerate() {
            if i > 0 && !can_complete(stmts[i - 1], self.src) {
                return Err(err(format!("unreachable statement at byte {}", s.start_byte())));
            }
            self.stmt(*s)?;
        }
        Ok(())
    }

    fn stmt(&mut self, n: Node) -> Result<(), JavaError> {
        match n.kind() {
            "block" => {
                let kids: Vec<Node> = named(n).filter(|c| !is_comment(c)).collect();
                self.scoped(|c| c.sequence(&kids))
            }
            "local_variable_declaration" => {
                let mut cursor = n.walk();
                let decls: Vec<Node> = n.children_by_field_name("declarator", &mut cursor).collect();
                for d in decls {
                    if let Some(name) = d.child_by_field_name("name") {
                        self.declare(name)?;
                    }
                    if let Some(v) = d.child_by_field_name("value") {
                        self.expr(v)?;
                    }
                }
                Ok(())
            }
            "expression_statement" | "return_statement" | "throw_statement" => {
                for c in named(n) {
                    self.expr(c)?;
                }
                Ok(())
            }
            "if_statement" | "while_statement" | "do_statement" => {
                if let Some(c) = n.child_by_field_name("condition") {
                    self.expr(c)?;
                }
                for f in ["consequence", "alternative", "body"] {
                    if let Some(s) = n.child_by_field_name(f) {
                        self.scoped(|c| c.stmt(s))?;
                    }
                }
                Ok(())
            }
            "for_statement" => self.scoped(|c| {
                let mut cursor = n.walk();
                let inits: Vec<Node> = n.children_by_field_name("init", &mut cursor).collect();
                for i in inits {
                    if i.kind() == "local_variable_declaration" {
                        c.stmt(i)?;
                    } else {
                        c.expr(i)?;
                    }
                }
                if let Some(cond) = n.child_by_field_name("condition") {
                    c.expr(cond)?;
                }
                let updates: Vec<Node> = n.children_by_field_name("update", &mut cursor).collect();
                for u in updates {
                    c.expr(u)?;
                }
                match n.child_by_field_name("body") {
                    Some(b) => c.stmt(b),
                    None => Ok(()),
                }
            }),
            "enhanced_for_statement" => {
                if let Some(v) = n.child_by_field_name("value") {
                    self.expr(v)?;
                }
                self.scoped(|c| {
                    if let Some(name) = n.child_by_field_name("name") {
                        c.declare(name)?;
                    }
                    match n.child_by_field_name("body") {
                        Some(b) => c.stmt(b),
                        None => Ok(()),
                    }
                })
            }
            "labeled_statement" => {
                for c in named(n).filter(|c| c.kind() != "identifier") {
                    self.stmt(c)?;
                }
                Ok(())
            }
            "try_statement" => {
                for c in named(n) {
                    match c.kind() {
                        "block" => self.stmt(c)?,
                        "catch_clause" => self.scoped(|ck| {
                            for p in named(c) {
                                if p.kind() == "catch_formal_parameter" {
                                    if let Some(name) = p.child_by_field_name("name") {
                                        ck.declare(name)?;
                                    }
                                } else if p.kind() == "block" {
                                    ck.stmt(p)?;
                                }
                            }
                            Ok(())
                        })?,
                        "finally_clause" => {
                            for b in named(c) {
                                self.stmt(b)?;
                            }
                        }
                        _ => {}
                    }
                }
                Ok(())
            }
            "switch_expression" => {
                if let Some(c) = n.child_by_field_name("condition") {
                    self.expr(c)?;
                }
                let Some(body) = n.child_by_field_name("body") else {
                    return Ok(());
                };
                self.scoped(|c| {
                    for group in named(body) {
                        let stmts: Vec<Node> = named(group)
                            .filter(|s| s.kind() != "switch_label" && !is_comment(s))
                            .collect();
                        c.sequence(&stmts)?;
                    }
                    Ok(())
                })
            }
            "break_statement" | "continue_statement" | ";" => Ok(()),
            k if k.ends_with("comment") => Ok(()),
            other => Err(JavaError::Unsupported(format!("statement `{other}`"))),
        }
    }

    fn expr(&mut self, n: Node) -> Result<(), JavaError> {
        match n.kind() {
            "identifier" => {
                let name = self.text(n);
                if self.resolves(name) {
                    Ok(())
                } else {
                    Err(err(format!("cannot find symbol {name}")))
                }
            }
            "method_invocation" => {
                let name = n.child_by_field_name("name").map(|x| self.text(x)).unwrap_or("");
                match n.child_by_field_name("object") {
                    Some(obj) => {
                        if !self.is_class_ref(obj) {
                            self.expr(obj)?;
                        }
                    }
                    None => {
                        if !self.methods.contains(name) {
                            return Err(err(format!("cannot find symbol method {name}")));
                        }
                    }
                }
                if let Some(args) = n.child_by_field_name("arguments") {
                    for a in named(args) {
                        self.expr(a)?;
                    }
                }
                Ok(())
            }
            "field_access" => match n.child_by_field_name("object") {
                Some(obj) if !self.is_class_ref(obj) => self.expr(obj),
                _ => Ok(()),
            },
            "lambda_expression" | "method_reference" | "this" | "super" => {
                Err(JavaError::Unsupported(n.kind().to_string()))
            }
            _ => {
                for c in named(n) {
                    if !c.kind().ends_with("type") && c.kind() != "type_identifier" {
                        self.expr(c)?;
                    }
                }
                Ok(())
            }
        }
    }

    fn is_class_ref(&self, n: Node) -> bool {
        if n.kind() == "field_access" {
            return n.child_by_field_name("object").is_some_and(|o| self.is_class_ref(o));
        }
        let t = self.text(n);
        n.kind() == "identifier" && !self.resolves(t) && (LIBRARY_CLASSES.contains(&t) || t == self.class_name)
    }
}

pub fn named(n: Node) -> impl Iterator<Item = Node> {
    let mut cursor = n.walk();
    let kids: Vec<Node> = n.named_children(&mut cursor).collect();
    kids.into_iter()
}

pub fn is_comment(n: &Node) -> bool {
    n.kind().ends_with("comment")
}

fn is_constant_true(cond: Option<Node>, src: &[u8]) -> bool {
    match cond {
        None => true,
        Some(c) => {
            let t: String = c
                .utf8_text(src)
                .unwrap_or("")
                .chars()
                .filter(|ch| !ch.is_whitespace() && *ch != '(' && *ch != ')')
                .collect();
            t == "true"
        }
    }
}

fn label_of(stmt: Node, src: &[u8]) -> Option<String> {
    let p = stmt.parent()?;
    if p.kind() != "labeled_statement" {
        return None;
    }
    named(p)
        .find(|c| c.kind() == "identifier")
        .and_then(|c| c.utf8_text(src).ok().map(str::to_string))
}

/// Whether a `break` inside `body` exits the statement `target`.
fn has_break_to(target: Node, body: Node, src: &[u8]) -> bool {
    let label = label_of(target, src);
    fn walk(n: Node, label: &Option<String>, nested: bool, src: &[u8]) -> bool {
        if n.kind() == "break_statement" {
            let l = named(n)
                .find(|c| c.kind() == "identifier")
                .and_then(|c| c.utf8_text(src).ok());
            return match l {
                None => !nested,
                Some(l) => label.as_deref() == Some(l),
            };
        }
        let nests = matches!(
            n.kind(),
            "while_statement" | "for_statement" | "enhanced_for_statement" | "do_statement" | "switch_expression"
        );
        named(n).any(|c| walk(c, label, nested || nests, src))
    }
    walk(body, &label, false, src)
}

/// Conservative reading of the language's "can complete normally" rules.
pub fn can_complete(n: Node, src: &[u8]) -> bool {
    match n.kind() {
        "return_statement" | "throw_statement" | "break_statement" | "continue_statement" | "yield_statement" => false,
        "block" => named(n)
            .filter(|c| !is_comment(c))
            .last()
            .is_none_or(|s| can_complete(s, src)),
        "labeled_statement" => named(n)
            .filter(|c| c.kind() != "identifier")
            .all(|s| can_complete(s, src) || has_break_to(s, s, src)),
        "if_statement" => match (
            n.child_by_field_name("consequence"),
            n.child_by_field_name("alternative"),
        ) {
            (Some(c), Some(a)) => can_complete(c, src) || can_complete(a, src),
            _ => true,
        },
        "while_statement" | "for_statement" => {
            let body = n.child_by_field_name("body");
            !is_constant_true(n.child_by_field_name("condition"), src) || body.is_some_and(|b| has_break_to(n, b, src))
        }
        "do_statement" => {
            let body = n.child_by_field_name("body");
            let breaks = body.is_some_and(|b| has_break_to(n, b, src));
            breaks || !is_constant_true(n.child_by_field_name("condition"), src)
        }
        "try_statement" => {
            let mut try_ok = false;
            let mut finally_ok = true;
            for c in named(n) {
                match c.kind() {
                    "block" => try_ok |= can_complete(c, src),
                    "catch_clause" => try_ok |= named(c).filter(|b| b.kind() == "block").all(|b| can_complete(b, src)),
                    "finally_clause" => {
                        finally_ok = named(c).all(|b| can_complete(b, src));
                    }
                    _ => {}
                }
            }
            try_ok && finally_ok
        }
        "switch_expression" => {
            let Some(body) = n.child_by_field_name("body") else {
                return true;
            };
            let groups: Vec<Node> = named(body).collect();
            let has_default = groups
                .iter()
                .any(|g| named(*g).any(|l| l.kind() == "switch_label" && l.named_child_count() == 0));
            let last_completes = groups.last().is_none_or(|g| {
                named(*g)
                    .filter(|s| s.kind() != "switch_label" && !is_comment(s))
                    .last()
                    .is_none_or(|s| can_complete(s, src))
            });
            !has_default || last_completes || has_break_to(n, body, src)
        }
        _ => true,
    }
}
