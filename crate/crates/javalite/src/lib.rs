//! A small interpreter for a single-class, static-method subset of Java.
//!
//! Programs are parsed with tree-sitter, checked for the compile errors a
//! source rewrite is most likely to introduce (unresolved or redeclared
//! names, unreachable statements, missing returns), then run directly over
//! the syntax tree. Anything outside the subset fails with
//! [`JavaError::Unsupported`] rather than being guessed at.

mod check;
mod interp;
mod value;

use std::collections::{HashMap, HashSet};

use thiserror::Error;
use tree_sitter::{Node, Parser};

pub use value::{format_double, Value};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum JavaError {
    #[error("syntax error: {0}")]
    Parse(String),
    #[error("compile error: {0}")]
    Compile(String),
    #[error("unsupported construct: {0}")]
    Unsupported(String),
    #[error("step limit exceeded")]
    StepLimit,
}

/// Observable result of one program run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub stdout: String,
    pub stderr: String,
    pub exit_code: i32,
}

/// Statements executed before a run is abandoned.
pub const DEFAULT_STEP_LIMIT: u64 = 5_000_000;

/// Checks and runs `source` with `args` as the `main` arguments.
pub fn run(source: &str, args: &[String]) -> Result<Output, JavaError> {
    run_with_limit(source, args, DEFAULT_STEP_LIMIT)
}

pub fn run_with_limit(source: &str, args: &[String], step_limit: u64) -> Result<Output, JavaError> {
    let source = source.to_string();
    let args = args.to_vec();
    // Deep recursion in the interpreted program recurses natively too.
    std::thread::Builder::new()
        .stack_size(256 << 20)
        .spawn(move || run_inner(&source, &args, step_limit))
        .expect("spawn interpreter thread")
        .join()
        .unwrap_or_else(|_| Err(JavaError::Unsupported("interpreter panicked".into())))
}

/// Runs only the compile-time checks.
pub fn check(source: &str) -> Result<(), JavaError> {
    let tree = parse(source)?;
    let program = Program::collect(tree.root_node(), source.as_bytes())?;
    program.check(source.as_bytes())
}

fn parse(source: &str) -> Result<tree_sitter::Tree, JavaError> {
    let mut parser = Parser::new();
    parser
        .set_language(&tree_sitter_java::LANGUAGE.into())
        .expect("java grammar loads");
    let tree = parser
        .parse(source, None)
        .ok_or_else(|| JavaError::Parse("no tree".into()))?;
    if tree.root_node().has_error() {
        return Err(JavaError::Parse(first_error(tree.root_node())));
    }
    Ok(tree)
}

fn first_error(n: Node) -> String {
    if n.is_error() || n.is_missing() {
        return format!("near byte {}", n.start_byte());
    }
    let mut c = n.walk();
    let kids: Vec<Node> = n.children(&mut c).collect();
    kids.into_iter()
        .find(|k| k.has_error())
        .map_or_else(|| "unknown".into(), first_error)
}

struct Program<'t> {
    class_name: String,
    methods: HashMap<String, Vec<Node<'t>>>,
    fields: Vec<Node<'t>>,
}

impl<'t> Program<'t> {
    fn collect(root: Node<'t>, src: &[u8]) -> Result<Self, JavaError> {
        let classes: Vec<Node> = check::named(root).filter(|c| !check::is_comment(c)).collect();
        let [class] = classes.as_slice() else {
            return Err(JavaError::Unsupported("expected exactly one top-level class".into()));
        };
        if class.kind() != "class_declaration" {
            return Err(JavaError::Unsupported(format!("top-level {}", class.kind())));
        }
        let class_name = class
            .child_by_field_name("name")
            .and_then(|n| n.utf8_text(src).ok())
            .unwrap_or("")
            .to_string();
        let body = class
            .child_by_field_name("body")
            .ok_or_else(|| JavaError::Parse("class without body".into()))?;
        let mut methods: HashMap<String, Vec<Node>> = HashMap::new();
        let mut fields = Vec::new();
        for member in check::named(body).filter(|c| !check::is_comment(c)) {
            let is_static = check::named(member)
                .find(|m| m.kind() == "modifiers")
                .and_then(|m| m.utf8_text(src).ok())
                .is_some_and(|m| m.split_whitespace().any(|w| w == "static"));
            match member.kind() {
                "method_declaration" | "field_declaration" if !is_static => {
                    return Err(JavaError::Unsupported("instance members".into()));
                }
                "method_declaration" => {
                    let name = member
                        .child_by_field_name("name")
                        .and_then(|n| n.utf8_text(src).ok())
                        .unwrap_or("")
                        .to_string();
                    methods.entry(name).or_default().push(member);
                }
                "field_declaration" => fields.push(member),
                other => return Err(JavaError::Unsupported(format!("class member {other}"))),
            }
        }
        if !methods.contains_key("main") {
            return Err(JavaError::Compile("no main method".into()));
        }
        Ok(Program {
            class_name,
            methods,
            fields,
        })
    }

    fn check(&self, src: &[u8]) -> Result<(), JavaError> {
        let mut statics = HashSet::new();
        for f in &self.fields {
            let mut c = f.walk();
            for d in f.children_by_field_name("declarator", &mut c) {
                if let Some(n) = d.child_by_field_name("name").and_then(|n| n.utf8_text(src).ok()) {
                    if !statics.insert(n.to_string()) {
                        return Err(JavaError::Compile(format!("field {n} is already defined")));
                    }
                }
            }
        }
        let methods = self.methods.keys().cloned().collect();
        let mut checker = check::Checker::new(src, &self.class_name, statics, methods);
        for f in &self.fields {
            let mut c = f.walk();
            let decls: Vec<Node> = f.children_by_field_name("declarator", &mut c).collect();
            for d in decls {
                if let Some(v) = d.child_by_field_name("value") {
                    checker.check_field_initializer(v)?;
                }
            }
        }
        for overloads in self.methods.values() {
            for m in overloads {
                checker.check_method(*m)?;
            }
        }
        Ok(())
    }
}

fn run_inner(source: &str, args: &[String], step_limit: u64) -> Result<Output, JavaError> {
    let tree = parse(source)?;
    let src = source.as_bytes();
    let program = Program::collect(tree.root_node(), src)?;
    program.check(src)?;
    let mut vm = interp::Interp::new(src, &program.class_name, program.methods.clone(), step_limit);
    let mut result = Ok(());
    for f in &program.fields {
        result = vm.init_static_field(*f);
        if result.is_err() {
            break;
        }
    }
    if result.is_ok() {
        result = vm.run_main(args);
    }
    let mut stderr = std::mem::take(&mut vm.err);
    let exit_code = match result {
        Ok(()) => 0,
        Err(interp::Unwind::Throw(exc)) => {
            stderr.push_str(&format!(
                "Exception in thread \"main\" {}\n",
                Value::Exc(exc).to_java_string()
            ));
            1
        }
        Err(interp::Unwind::Fatal(e)) => return Err(e),
    };
    Ok(Output {
        stdout: std::mem::take(&mut vm.out),
        stderr,
        exit_code,
    })
}
