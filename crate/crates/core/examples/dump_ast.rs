//! Prints the syntax tree of a source file, one node per line.
//!
//! cargo run --example dump_ast -- java path/to/File.java

use transformcode::ast::{parse_text, Language, SyntaxTree};

fn show(t: &SyntaxTree, id: usize, depth: usize) {
    let n = t.node(id);
    let field = n.field.map(|f| format!("{f}: ")).unwrap_or_default();
    let kind = if n.named {
        n.kind.to_string()
    } else {
        format!("'{}'", n.kind)
    };
    let text = if n.is_leaf() {
        format!(" {:?}", t.text(id))
    } else {
        String::new()
    };
    println!("{}{field}{kind}{text}", "  ".repeat(depth));
    for &c in t.children(id) {
        show(t, c, depth + 1);
    }
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    if args.len() != 3 {
        eprintln!("usage: dump_ast <java|c> <file>");
        std::process::exit(2);
    }
    let lang: Language = args[1].parse().expect("language is java or c");
    let src = std::fs::read_to_string(&args[2]).expect("readable file");
    let t = parse_text(lang, &src).expect("parses");
    show(&t, t.root(), 0);
}
