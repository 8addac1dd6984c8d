use rand::{Rng, RngCore};

use super::analysis::{Analysis, Effects};
use super::TransformKind;
use crate::ast::{Grammar, Language, NodeId, SyntaxTree};
use crate::edit::Edit;

/// Everything a transform may look at when proposing a rewrite.
pub struct Context<'a> {
    pub tree: &'a SyntaxTree,
    pub grammar: &'static Grammar,
    pub analysis: Analysis,
    /// Chance that any one site is rewritten, for transforms that act per site.
    pub site_probability: f64,
    /// Guarantee at least one site is taken when any exists.
    pub force: bool,
}

/// Text edits plus the spans (in the input text) they touched.
#[derive(Debug, Clone, Default)]
pub struct Rewrite {
    pub edits: Vec<Edit>,
    pub sites: Vec<(usize, usize)>,
}

/// One semantics-preserving rewrite family.
pub trait Transform: Send + Sync {
    fn kind(&self) -> TransformKind;

    fn name(&self) -> &'static str {
        self.kind().name()
    }

    fn supports(&self, _language: Language) -> bool {
        true
    }

    /// Proposes a rewrite of the context's tree, or `None` when no site applies.
    fn rewrite(&self, cx: &mut Context<'_>, rng: &mut dyn RngCore) -> Option<Rewrite>;
}

impl Context<'_> {
    fn text(&self, id: NodeId) -> &str {
        self.tree.text(id)
    }

    fn kind(&self, id: NodeId) -> &'static str {
        self.tree.kind(id)
    }

    fn field(&self, id: NodeId, name: &str) -> Option<NodeId> {
        self.tree.child_by_field(id, name)
    }

    fn is_java(&self) -> bool {
        self.grammar.language == Language::Java
    }

    fn nodes_of(&self, kinds: &[&str]) -> Vec<NodeId> {
        self.tree
            .preorder()
            .into_iter()
            .filter(|&n| kinds.contains(&self.kind(n)))
            .collect()
    }

    /// Statement blocks whose children run in sequence. Switch bodies are left
    /// out since their children are case labels.
    fn blocks(&self) -> Vec<NodeId> {
        self.tree
            .preorder()
            .into_iter()
            .filter(|&n| {
                let k = self.kind(n);
                (k == self.grammar.block || k == "constructor_body")
                    && self.tree.parent(n).is_none_or(|p| self.kind(p) != "switch_statement")
            })
            .collect()
    }

    fn statements(&self, block: NodeId) -> Vec<NodeId> {
        self.tree
            .named_children(block)
            .filter(|&c| !self.grammar.is_comment(self.kind(c)))
            .collect()
    }

    fn is_declaration(&self, id: NodeId) -> bool {
        self.kind(id) == self.grammar.local_declaration
    }

    fn is_simple(&self, id: NodeId) -> bool {
        self.kind(id) == "expression_statement" || self.is_declaration(id)
    }

    fn effects(&self, id: NodeId) -> Effects {
        Effects::of(self.tree, self.grammar, &self.analysis, id)
    }

    fn exceptions_observable(&self) -> bool {
        self.is_java() && self.analysis.has_handlers
    }

    /// Whether two adjacent statements may be exchanged.
    fn independent(&self, a: NodeId, b: NodeId) -> bool {
        !self
            .effects(a)
            .conflicts(&self.effects(b), self.exceptions_observable())
    }

    fn swap_edit(&self, a: NodeId, b: NodeId) -> Edit {
        let (a0, a1) = self.tree.span(a);
        let (b0, b1) = self.tree.span(b);
        let src = self.tree.source();
        Edit::replace(a0, b1, format!("{}{}{}", &src[b0..b1], &src[a1..b0], &src[a0..a1]))
    }

    /// Operand without side effects and, when exceptions can be observed,
    /// without the possibility of throwing.
    fn is_atom(&self, id: NodeId) -> bool {
        let g = self.grammar;
        match self.kind(id) {
            "identifier"
            | "decimal_integer_literal"
            | "hex_integer_literal"
            | "octal_integer_literal"
            | "binary_integer_literal"
            | "decimal_floating_point_literal"
            | "character_literal"
            | "number_literal"
            | "char_literal"
            | "true"
            | "false"
            | "null_literal" => true,
            k if (k == g.array_access || k == g.field_access) && !self.exceptions_observable() => self
                .tree
                .named_children(id)
                .all(|c| self.kind(c) == "field_identifier" || self.is_atom(c)),
            _ => false,
        }
    }

    /// Assignable target that can be evaluated twice without changing behavior.
    fn is_simple_lvalue(&self, id: NodeId) -> bool {
        let g = self.grammar;
        let k = self.kind(id);
        k == "identifier" || ((k == g.array_access || (k == g.field_access && !self.is_java())) && self.is_atom(id))
    }

    /// Declared Java type is one whose `++` equals `= x + 1` without a cast.
    fn java_wide_target(&self, target: NodeId) -> bool {
        let ty = match self.kind(target) {
            "identifier" => self.analysis.declared_type(self.text(target)),
            "array_access" => self
                .field(target, "array")
                .filter(|&a| self.kind(a) == "identifier")
                .and_then(|a| self.analysis.declared_type(self.text(a)))
                .and_then(|t| t.strip_suffix("[]")),
            _ => None,
        };
        matches!(ty, Some("int" | "long" | "float" | "double"))
    }

    fn is_discarded(&self, expr: NodeId) -> bool {
        let node = self.tree.node(expr);
        match node.parent {
            Some(p) => {
                self.kind(p) == "expression_statement"
                    || (self.kind(p) == "for_statement" && node.field == Some("update"))
            }
            None => false,
        }
    }

    fn operator(&self, id: NodeId) -> Option<(NodeId, &str)> {
        self.tree
            .children(id)
            .iter()
            .copied()
            .find(|&c| {
                self.tree.node(c).field == Some("operator")
                    || (!self.tree.node(c).named && matches!(self.text(c), "++" | "--"))
            })
            .map(|c| (c, self.text(c)))
    }

    /// Per-site Bernoulli selection, topped up to one site when forced.
    fn choose_sites(&self, n: usize, rng: &mut dyn RngCore) -> Vec<usize> {
        let mut picked: Vec<usize> = (0..n)
            .filter(|_| rng.gen_bool(self.site_probability.clamp(0.0, 1.0)))
            .collect();
        if picked.is_empty() && self.force && n > 0 {
            picked.push(rng.gen_range(0..n));
        }
        picked
    }
}

fn pick<T: Clone>(items: &[T], rng: &mut dyn RngCore) -> Option<T> {
    (!items.is_empty()).then(|| items[rng.gen_range(0..items.len())].clone())
}

fn strip_ws(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace()).collect()
}

pub struct PermuteDeclaration;

impl Transform for PermuteDeclaration {
    fn kind(&self) -> TransformKind {
        TransformKind::PermuteDeclaration
    }

    fn rewrite(&self, cx: &mut Context<'_>, rng: &mut dyn RngCore) -> Option<Rewrite> {
        let mut pairs = Vec::new();
        for block in cx.blocks() {
            let stmts = cx.statements(block);
            for w in stmts.windows(2) {
                if cx.is_declaration(w[0]) && cx.is_declaration(w[1]) && cx.independent(w[0], w[1]) {
                    pairs.push((w[0], w[1]));
                }
            }
        }
        let (a, b) = pick(&pairs, rng)?;
        Some(Rewrite {
            edits: vec![cx.swap_edit(a, b)],
            sites: vec![(cx.tree.span(a).0, cx.tree.span(b).1)],
        })
    }
}

pub struct PermuteStatement;

impl Transform for PermuteStatement {
    fn kind(&self) -> TransformKind {
        TransformKind::PermuteStatement
    }

    fn rewrite(&self, cx: &mut Context<'_>, rng: &mut dyn RngCore) -> Option<Rewrite> {
        let mut candidates: Vec<Vec<(NodeId, NodeId)>> = Vec::new();
        for block in cx.blocks() {
            let stmts = cx.statements(block);
            let mut run = Vec::new();
            for w in stmts.windows(2) {
                if cx.is_simple(w[0]) && cx.is_simple(w[1]) && cx.independent(w[0], w[1]) {
                    run.push((w[0], w[1]));
                }
            }
            if !run.is_empty() {
                candidates.push(run);
            }
        }
        // Walk each block left to right so chosen pairs never share a statement.
        let mut chosen = Vec::new();
        for run in &candidates {
            let mut last_b = None;
            for &(a, b) in run {
                if last_b == Some(a) {
                    continue;
                }
                if rng.gen_bool(cx.site_probability.clamp(0.0, 1.0)) {
                    chosen.push((a, b));
                    last_b = Some(b);
                }
            }
        }
        if chosen.is_empty() && cx.force {
            let all: Vec<_> = candidates.concat();
            chosen.extend(pick(&all, rng));
        }
        if chosen.is_empty() {
            return None;
        }
        Some(Rewrite {
            edits: chosen.iter().map(|&(a, b)| cx.swap_edit(a, b)).collect(),
            sites: chosen
                .iter()
                .map(|&(a, b)| (cx.tree.span(a).0, cx.tree.span(b).1))
                .collect(),
        })
    }
}

pub struct SwapCondition;

fn mirror(op: &str) -> Option<&'static str> {
    Some(match op {
        "<" => ">",
        ">" => "<",
        "<=" => ">=",
        ">=" => "<=",
        "==" => "==",
        "!=" => "!=",
        "+" => "+",
        "*" => "*",
        _ => return None,
    })
}

impl Transform for SwapCondition {
    fn kind(&self) -> TransformKind {
        TransformKind::SwapCondition
    }

    fn rewrite(&self, cx: &mut Context<'_>, rng: &mut dyn RngCore) -> Option<Rewrite> {
        let mut sites = Vec::new();
        for id in cx.nodes_of(&["binary_expression"]) {
            let (Some(l), Some(r), Some((op_id, op))) = (cx.field(id, "left"), cx.field(id, "right"), cx.operator(id))
            else {
                continue;
            };
            let Some(mirrored) = mirror(op) else { continue };
            if !cx.is_atom(l) || !cx.is_atom(r) {
                continue;
            }
            // In Java `+` may concatenate strings, so both sides must be numeric.
            if cx.is_java()
                && matches!(op, "+" | "*")
                && (cx.analysis.java_num_type(cx.tree, l).is_none() || cx.analysis.java_num_type(cx.tree, r).is_none())
            {
                continue;
            }
            sites.push((l, op_id, r, mirrored));
        }
        let (l, op_id, r, mirrored) = pick(&sites, rng)?;
        let src = cx.tree.source();
        let (l0, l1) = cx.tree.span(l);
        let (o0, o1) = cx.tree.span(op_id);
        let (r0, r1) = cx.tree.span(r);
        let text = format!(
            "{}{}{}{}{}",
            &src[r0..r1],
            &src[o1..r0],
            mirrored,
            &src[l1..o0],
            &src[l0..l1]
        );
        Some(Rewrite {
            edits: vec![Edit::replace(l0, r1, text)],
            sites: vec![(l0, r1)],
        })
    }
}

pub struct ArithmeticTransform;

impl ArithmeticTransform {
    fn alternatives(cx: &Context<'_>, id: NodeId) -> Vec<String> {
        let mut out = Vec::new();
        match cx.kind(id) {
            "assignment_expression" => {
                let (Some(left), Some(right), Some((_, op))) =
                    (cx.field(id, "left"), cx.field(id, "right"), cx.operator(id))
                else {
                    return out;
                };
                if !cx.is_simple_lvalue(left) {
                    return out;
                }
                let target = cx.text(left);
                if let Some(base) = op.strip_suffix('=').filter(|b| matches!(*b, "+" | "-" | "*" | "/")) {
                    if cx.is_java() {
                        let t = cx.analysis.java_target_type(cx.tree, left);
                        let e = cx.analysis.java_num_type(cx.tree, right);
                        match (t, e) {
                            (Some(t), Some(e)) if e <= t && cx.java_wide_target(left) => {}
                            _ => return out,
                        }
                    }
                    let e = cx.text(right);
                    let e = if cx.is_atom(right) || cx.kind(right) == "parenthesized_expression" {
                        e.to_string()
                    } else {
                        format!("({e})")
                    };
                    out.push(format!("{target} = {target} {base} {e}"));
                } else if op == "=" && cx.kind(right) == "binary_expression" {
                    let (Some(rl), Some(rr), Some((_, rop))) =
                        (cx.field(right, "left"), cx.field(right, "right"), cx.operator(right))
                    else {
                        return out;
                    };
                    if !matches!(rop, "+" | "-" | "*" | "/") || strip_ws(cx.text(rl)) != strip_ws(target) {
                        return out;
                    }
                    out.push(format!("{target} {rop}= {}", cx.text(rr)));
                    let unit = matches!(rop, "+" | "-") && cx.text(rr) == "1";
                    if unit && cx.is_discarded(id) && (!cx.is_java() || cx.java_wide_target(left)) {
                        out.push(format!("{target}{rop}{rop}"));
                    }
                }
            }
            "update_expression" => {
                let Some((_, op)) = cx.operator(id) else { return out };
                let Some(arg) = cx.tree.named_children(id).next() else {
                    return out;
                };
                if !cx.is_discarded(id) || !cx.is_simple_lvalue(arg) {
                    return out;
                }
                if cx.is_java() && !cx.java_wide_target(arg) {
                    return out;
                }
                let target = cx.text(arg);
                let base = &op[..1];
                out.push(format!("{target} = {target} {base} 1"));
            }
            _ => {}
        }
        out
    }
}

impl Transform for ArithmeticTransform {
    fn kind(&self) -> TransformKind {
        TransformKind::ArithmeticTransform
    }

    fn rewrite(&self, cx: &mut Context<'_>, rng: &mut dyn RngCore) -> Option<Rewrite> {
        let sites: Vec<(NodeId, Vec<String>)> = cx
            .nodes_of(&["assignment_expression", "update_expression"])
            .into_iter()
            .map(|id| (id, Self::alternatives(cx, id)))
            .filter(|(_, alts)| !alts.is_empty())
            .collect();
        let (id, alts) = pick(&sites, rng)?;
        let text = pick(&alts, rng)?;
        let (s, e) = cx.tree.span(id);
        Some(Rewrite {
            edits: vec![Edit::replace(s, e, text)],
            sites: vec![(s, e)],
        })
    }
}

pub struct WhileForExchange;

impl WhileForExchange {
    fn while_to_for(cx: &Context<'_>, id: NodeId) -> Option<Edit> {
        let cond = cx.field(id, "condition")?;
        let inner = cx.tree.named_children(cond).next()?;
        let (s, _) = cx.tree.span(id);
        let (_, ce) = cx.tree.span(cond);
        Some(Edit::replace(s, ce, format!("for(;{};)", cx.text(inner))))
    }

    fn for_to_while(cx: &Context<'_>, id: NodeId) -> Option<Edit> {
        let body = cx.field(id, "body")?;
        let t = cx.tree;
        if t.preorder_from(body)
            .into_iter()
            .any(|n| cx.kind(n) == "continue_statement")
        {
            return None;
        }
        if t.parent(id).is_some_and(|p| cx.kind(p) == "labeled_statement") {
            return None;
        }
        // An update after a body that cannot finish would be unreachable code in Java.
        if cx.is_java() && !can_complete_normally(cx, body) {
            return None;
        }
        let mut init = Vec::new();
        for i in t.children_by_field(id, cx.grammar.for_init_field) {
            if cx.is_declaration(i) {
                init.push(cx.text(i).to_string());
            } else {
                init.push(format!("{};", cx.text(i)));
            }
        }
        let cond = cx
            .field(id, "condition")
            .map(|c| cx.text(c).to_string())
            .unwrap_or_else(|| cx.grammar.boolean_true.to_string());
        let updates: Vec<String> = t
            .children_by_field(id, "update")
            .map(|u| format!("{};", cx.text(u)))
            .collect();
        let mut out = String::from("{ ");
        for i in &init {
            out.push_str(i);
            out.push(' ');
        }
        out.push_str(&format!("while ({cond}) {{ {}", cx.text(body)));
        for u in &updates {
            out.push(' ');
            out.push_str(u);
        }
        out.push_str(" } }");
        let (s, e) = t.span(id);
        Some(Edit::replace(s, e, out))
    }
}

/// Conservative Java reachability: `false` whenever completion is uncertain.
fn can_complete_normally(cx: &Context<'_>, id: NodeId) -> bool {
    let t = cx.tree;
    let contains_break = |n: NodeId| t.preorder_from(n).into_iter().any(|x| cx.kind(x) == "break_statement");
    match cx.kind(id) {
        "return_statement" | "throw_statement" | "break_statement" | "continue_statement" | "yield_statement" => false,
        "block" => cx.statements(id).last().is_none_or(|&s| can_complete_normally(cx, s)),
        "if_statement" => match (cx.field(id, "consequence"), cx.field(id, "alternative")) {
            (Some(c), Some(a)) => can_complete_normally(cx, c) || can_complete_normally(cx, a),
            _ => true,
        },
        "while_statement" | "for_statement" => {
            let infinite = match cx.field(id, "condition") {
                None => true,
                Some(c) => strip_ws(cx.text(c)).trim_matches(|ch| ch == '(' || ch == ')') == "true",
            };
            !infinite || contains_break(id)
        }
        "do_statement"
        | "switch_expression"
        | "try_statement"
        | "try_with_resources_statement"
        | "labeled_statement"
        | "synchronized_statement" => false,
        _ => true,
    }
}

impl Transform for WhileForExchange {
    fn kind(&self) -> TransformKind {
        TransformKind::WhileForExchange
    }

    fn rewrite(&self, cx: &mut Context<'_>, rng: &mut dyn RngCore) -> Option<Rewrite> {
        let mut sites = Vec::new();
        for id in cx.nodes_of(&["while_statement", "for_statement"]) {
            let edit = if cx.kind(id) == "while_statement" {
                Self::while_to_for(cx, id)
            } else {
                Self::for_to_while(cx, id)
            };
            if let Some(e) = edit {
                sites.push((id, e));
            }
        }
        let (id, edit) = pick(&sites, rng)?;
        Some(Rewrite {
            edits: vec![edit],
            sites: vec![cx.tree.span(id)],
        })
    }
}

pub struct AddDummyStatement;

impl Transform for AddDummyStatement {
    fn kind(&self) -> TransformKind {
        TransformKind::AddDummyStatement
    }

    fn rewrite(&self, cx: &mut Context<'_>, rng: &mut dyn RngCore) -> Option<Rewrite> {
        // (offset, insert-after?) for each candidate position.
        let mut points = Vec::new();
        for block in cx.blocks() {
            let stmts = cx.statements(block);
            if stmts.is_empty() {
                let open = cx.tree.children(block).first().map(|&c| cx.tree.span(c).1)?;
                points.push((open, true));
            }
            for s in stmts {
                let (start, end) = cx.tree.span(s);
                if cx.is_simple(s) {
                    points.push((end, true));
                } else {
                    points.push((start, false));
                }
            }
        }
        let chosen = cx.choose_sites(points.len(), rng);
        if chosen.is_empty() {
            return None;
        }
        let mut rw = Rewrite::default();
        for i in chosen {
            let (at, after) = points[i];
            let name = cx.analysis.fresh_name();
            let decl = format!("int {name} = {};", rng.gen_range(0..100));
            let text = if after { format!(" {decl}") } else { format!("{decl} ") };
            rw.edits.push(Edit::insert(at, text));
            rw.sites.push((at, at));
        }
        Some(rw)
    }
}

pub struct AddTryCatch;

impl Transform for AddTryCatch {
    fn kind(&self) -> TransformKind {
        TransformKind::AddTryCatch
    }

    fn supports(&self, language: Language) -> bool {
        crate::ast::grammar(language).supports_exceptions
    }

    fn rewrite(&self, cx: &mut Context<'_>, rng: &mut dyn RngCore) -> Option<Rewrite> {
        let mut stmts = Vec::new();
        for block in cx.blocks() {
            stmts.extend(
                cx.statements(block)
                    .into_iter()
                    .filter(|&s| cx.kind(s) == "expression_statement"),
            );
        }
        let chosen = cx.choose_sites(stmts.len(), rng);
        if chosen.is_empty() {
            return None;
        }
        let var = if cx.analysis.identifiers.contains("e") {
            cx.analysis.fresh_name()
        } else {
            "e".to_string()
        };
        let mut rw = Rewrite::default();
        for i in chosen {
            let s = stmts[i];
            let (a, b) = cx.tree.span(s);
            rw.edits.push(Edit::replace(
                a,
                b,
                format!("try {{ {} }} catch (Exception {var}) {{ throw {var}; }}", cx.text(s)),
            ));
            rw.sites.push((a, b));
        }
        Some(rw)
    }
}
