use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use tree_sitter::Node;

use crate::check::{is_comment, named, LIBRARY_CLASSES};
use crate::value::{is_known_exception, ArrayObj, ExcObj, Ty, Value};
use crate::JavaError;

const MAX_DEPTH: usize = 1_500;

pub enum Unwind {
    Throw(Rc<ExcObj>),
    Fatal(JavaError),
}

impl From<JavaError> for Unwind {
    fn from(e: JavaError) -> Self {
        Unwind::Fatal(e)
    }
}

type R<T> = Result<T, Unwind>;

fn throw<T>(class: &str, msg: impl Into<Option<String>>) -> R<T> {
    Err(Unwind::Throw(Rc::new(ExcObj::new(class, msg))))
}

fn unsupported<T>(what: impl Into<String>) -> R<T> {
    Err(Unwind::Fatal(JavaError::Unsupported(what.into())))
}

fn compile<T>(what: impl Into<String>) -> R<T> {
    Err(Unwind::Fatal(JavaError::Compile(what.into())))
}

enum Flow {
    Normal,
    Break(Option<String>),
    Continue(Option<String>),
    Return(Value),
}

struct Slot {
    ty: Ty,
    val: Value,
}

enum Place {
    Local(usize, usize),
    Static(String),
    Elem(Rc<RefCell<ArrayObj>>, usize),
}

pub struct Interp<'t> {
    src: &'t [u8],
    class_name: String,
    methods: HashMap<String, Vec<Node<'t>>>,
    statics: HashMap<String, Slot>,
    /// Scopes of the running frame, innermost last; each holds (name, slot).
    scopes: Vec<Vec<(String, Slot)>>,
    pub out: String,
    pub err: String,
    steps: u64,
    step_limit: u64,
    depth: usize,
}

impl<'t> Interp<'t> {
    pub fn new(src: &'t [u8], class_name: &str, methods: HashMap<String, Vec<Node<'t>>>, step_limit: u64) -> Self {
        Interp {
            src,
            class_name: class_name.to_string(),
            methods,
            statics: HashMap::new(),
            scopes: Vec::new(),
            out: String::new(),
            err: String::new(),
            steps: 0,
            step_limit,
            depth: 0,
        }
    }

    fn text(&self, n: Node) -> &'t str {
        n.utf8_text(self.src).unwrap_or("")
    }

    fn tick(&mut self) -> R<()> {
        self.steps += 1;
        if self.steps > self.step_limit {
            return Err(Unwind::Fatal(JavaError::StepLimit));
        }
        Ok(())
    }

    pub fn init_static_field(&mut self, decl: Node<'t>) -> R<()> {
        let base = self.parse_type(decl.child_by_field_name("type"))?;
        let mut cursor = decl.walk();
        let declarators: Vec<Node> = decl.children_by_field_name("declarator", &mut cursor).collect();
        for d in declarators {
            let (name, ty, val) = self.declarator(&base, d)?;
            self.statics.insert(name, Slot { ty, val });
        }
        Ok(())
    }

    pub fn run_main(&mut self, args: &[String]) -> R<()> {
        let arr = Value::Array(Rc::new(RefCell::new(ArrayObj {
            elem: Ty::Str,
            data: args.iter().map(Value::str).collect(),
        })));
        self.call_user("main", vec![arr]).map(|_| ())
    }

    // ---------------------------------------------------------------- types

    fn parse_type(&self, n: Option<Node>) -> R<Ty> {
        let Some(n) = n else {
            return unsupported("missing type");
        };
        Ok(match n.kind() {
            "integral_type" => match self.text(n) {
                "int" => Ty::Int,
                "long" => Ty::Long,
                "char" => Ty::Char,
                other => return unsupported(format!("type {other}")),
            },
            "floating_point_type" => match self.text(n) {
                "double" => Ty::Double,
                other => return unsupported(format!("type {other}")),
            },
            "boolean_type" => Ty::Bool,
            "void_type" => Ty::Void,
            "type_identifier" => match self.text(n) {
                "String" => Ty::Str,
                "StringBuilder" => Ty::Builder,
                e if is_known_exception(e) => Ty::Exception(e.to_string()),
                other => return unsupported(format!("type {other}")),
            },
            "array_type" => {
                let elem = self.parse_type(n.child_by_field_name("element"))?;
                let dims = n
                    .child_by_field_name("dimensions")
                    .map_or(1, |d| self.text(d).matches('[').count());
                elem.array_of(dims)
            }
            other => return unsupported(format!("type node {other}")),
        })
    }

    /// Implicit assignment conversion; only widening is allowed.
    fn assign_convert(&self, v: Value, ty: &Ty, constant: bool) -> R<Value> {
        Ok(match (ty, v) {
            (Ty::Int, Value::Int(x)) => Value::Int(x),
            (Ty::Int, Value::Char(c)) => Value::Int(c.into()),
            (Ty::Long, v @ (Value::Int(_) | Value::Char(_) | Value::Long(_))) => {
                Value::Long(v.as_i64().expect("integral"))
            }
            (Ty::Double, v) if v.as_f64().is_some() => Value::Double(v.as_f64().expect("numeric")),
            (Ty::Char, Value::Char(c)) => Value::Char(c),
            (Ty::Char, Value::Int(x)) if constant && (0..=0xffff).contains(&x) => Value::Char(x as u16),
            (Ty::Bool, Value::Bool(b)) => Value::Bool(b),
            (Ty::Str, v @ (Value::Str(_) | Value::Null)) => v,
            (Ty::Builder, v @ (Value::Builder(_) | Value::Null)) => v,
            (Ty::Array(_), v @ (Value::Array(_) | Value::Null)) => v,
            (Ty::Exception(_), v @ (Value::Exc(_) | Value::Null)) => v,
            (ty, v) => {
                return compile(format!(
                    "incompatible types: {} cannot be converted to {ty:?}",
                    v.ty_name()
                ))
            }
        })
    }

    fn cast(&self, v: Value, ty: &Ty) -> R<Value> {
        let Some(f) = v.as_f64() else {
            return self.assign_convert(v, ty, false);
        };
        let i = v.as_i64();
        Ok(match ty {
            Ty::Int => Value::Int(match i {
                Some(x) => x as i32,
                None => f as i32,
            }),
            Ty::Long => Value::Long(i.unwrap_or(f as i64)),
            Ty::Double => Value::Double(f),
            Ty::Char => Value::Char(match i {
                Some(x) => x as u16,
                None => (f as i32) as u16,
            }),
            other => return compile(format!("cannot cast {} to {other:?}", v.ty_name())),
        })
    }

    fn is_constant(n: Node) -> bool {
        matches!(
            n.kind(),
            "decimal_integer_literal" | "hex_integer_literal" | "octal_integer_literal" | "binary_integer_literal"
        )
    }

    // ------------------------------------------------------------ variables

    fn declare(&mut self, name: String, ty: Ty, val: Value) {
        self.scopes.last_mut().expect("scope").push((name, Slot { ty, val }));
    }

    fn find(&self, name: &str) -> R<Place> {
        for (si, scope) in self.scopes.iter().enumerate().rev() {
            if let Some(vi) = scope.iter().rposition(|(n, _)| n == name) {
                return Ok(Place::Local(si, vi));
            }
        }
        if self.statics.contains_key(name) {
            return Ok(Place::Static(name.to_string()));
        }
        compile(format!("cannot find symbol {name}"))
    }

    fn place(&mut self, n: Node<'t>) -> R<Place> {
        match n.kind() {
            "identifier" => self.find(self.text(n)),
            "parenthesized_expression" => {
                let inner = named(n).next().expect("inner expression");
                self.place(inner)
            }
            "array_access" => {
                let arr = self.eval(n.child_by_field_name("array").expect("array"))?;
                let idx = self.eval(n.child_by_field_name("index").expect("index"))?;
                self.elem_place(arr, idx)
            }
            other => unsupported(format!("assignment target {other}")),
        }
    }

    fn elem_place(&self, arr: Value, idx: Value) -> R<Place> {
        let Value::Array(a) = arr else {
            return throw("NullPointerException", None);
        };
        let i = self.int_index(&idx)?;
        let len = a.borrow().data.len();
        if i < 0 || i as usize >= len {
            return throw(
                "ArrayIndexOutOfBoundsException",
                format!("Index {i} out of bounds for length {len}"),
            );
        }
        Ok(Place::Elem(a, i as usize))
    }

    fn int_index(&self, v: &Value) -> R<i32> {
        match v {
            Value::Int(i) => Ok(*i),
            Value::Char(c) => Ok((*c).into()),
            other => compile(format!("array index of type {}", other.ty_name())),
        }
    }

    fn read(&self, p: &Place) -> Value {
        match p {
            Place::Local(s, v) => self.scopes[*s][*v].1.val.clone(),
            Place::Static(n) => self.statics[n].val.clone(),
            Place::Elem(a, i) => a.borrow().data[*i].clone(),
        }
    }

    fn place_ty(&self, p: &Place) -> Ty {
        match p {
            Place::Local(s, v) => self.scopes[*s][*v].1.ty.clone(),
            Place::Static(n) => self.statics[n].ty.clone(),
            Place::Elem(a, _) => a.borrow().elem.clone(),
        }
    }

    fn write(&mut self, p: &Place, v: Value) {
        match p {
            Place::Local(s, i) => self.scopes[*s][*i].1.val = v,
            Place::Static(n) => self.statics.get_mut(n).expect("static").val = v,
            Place::Elem(a, i) => a.borrow_mut().data[*i] = v,
        }
    }

    fn declarator(&mut self, base: &Ty, d: Node<'t>) -> R<(String, Ty, Value)> {
        let name = self.text(d.child_by_field_name("name").expect("name")).to_string();
        let extra = d
            .child_by_field_name("dimensions")
            .map_or(0, |x| self.text(x).matches('[').count());
        let ty = base.clone().array_of(extra);
        let val = match d.child_by_field_name("value") {
            Some(v) if v.kind() == "array_initializer" => self.array_init(&ty, v)?,
            Some(v) => {
                let x = self.eval(v)?;
                self.assign_convert(x, &ty, Self::is_constant(v))?
            }
            None => ty.default_value(),
        };
        Ok((name, ty, val))
    }

    fn array_init(&mut self, ty: &Ty, n: Node<'t>) -> R<Value> {
        let Ty::Array(elem) = ty else {
            return compile("array initializer for non-array");
        };
        let mut data = Vec::new();
        for c in named(n).filter(|c| !is_comment(c)) {
            let v = if c.kind() == "array_initializer" {
                self.array_init(elem, c)?
            } else {
                let x = self.eval(c)?;
                self.assign_convert(x, elem, Self::is_constant(c))?
            };
            data.push(v);
        }
        Ok(Value::Array(Rc::new(RefCell::new(ArrayObj {
            elem: (**elem).clone(),
            data,
        }))))
    }

    fn new_array(&self, ty: &Ty, dims: &[i32]) -> R<Value> {
        let Ty::Array(elem) = ty else {
            return compile("dimension on non-array");
        };
        let (first, rest) = dims.split_first().expect("at least one dimension");
        if *first < 0 {
            return throw("NegativeArraySizeException", first.to_string());
        }
        let mut data = Vec::with_capacity(*first as usize);
        for _ in 0..*first {
            data.push(if rest.is_empty() {
                elem.default_value()
            } else {
                self.new_array(elem, rest)?
            });
        }
        Ok(Value::Array(Rc::new(RefCell::new(ArrayObj {
            elem: (**elem).clone(),
            data,
        }))))
    }

    // ----------------------------------------------------------- statements

    fn block(&mut self, stmts: &[Node<'t>]) -> R<Flow> {
        self.scopes.push(Vec::new());
        let mut flow = Flow::Normal;
        for s in stmts {
            match self.exec(*s) {
                Ok(Flow::Normal) => {}
                Ok(other) => {
                    flow = other;
                    break;
                }
                Err(e) => {
                    self.scopes.pop();
                    return Err(e);
                }
            }
        }
        self.scopes.pop();
        Ok(flow)
    }

    fn scoped_exec(&mut self, n: Node<'t>) -> R<Flow> {
        self.block(&[n])
    }

    fn cond(&mut self, n: Node<'t>) -> R<bool> {
        match self.eval(n)? {
            Value::Bool(b) => Ok(b),
            other => compile(format!("condition of type {}", other.ty_name())),
        }
    }

    fn exec(&mut self, n: Node<'t>) -> R<Flow> {
        self.tick()?;
        self.exec_labeled(n, None)
    }

    fn exec_labeled(&mut self, n: Node<'t>, label: Option<&str>) -> R<Flow> {
        match n.kind() {
            "block" => {
                let stmts: Vec<Node> = named(n).filter(|c| !is_comment(c)).collect();
                self.block(&stmts)
            }
            "local_variable_declaration" => {
                let base = self.parse_type(n.child_by_field_name("type"))?;
                let mut cursor = n.walk();
                let decls: Vec<Node> = n.children_by_field_name("declarator", &mut cursor).collect();
                for d in decls {
                    let (name, ty, val) = self.declarator(&base, d)?;
                    self.declare(name, ty, val);
                }
                Ok(Flow::Normal)
            }
            "expression_statement" => {
                let e = named(n).next().expect("expression");
                self.eval(e)?;
                Ok(Flow::Normal)
            }
            "if_statement" => {
                let c = self.cond(n.child_by_field_name("condition").expect("cond"))?;
                if c {
                    self.scoped_exec(n.child_by_field_name("consequence").expect("then"))
                } else if let Some(a) = n.child_by_field_name("alternative") {
                    self.scoped_exec(a)
                } else {
                    Ok(Flow::Normal)
                }
            }
            "while_statement" => {
                let cond = n.child_by_field_name("condition").expect("cond");
                let body = n.child_by_field_name("body").expect("body");
                while self.cond(cond)? {
                    self.tick()?;
                    match self.scoped_exec(body)? {
                        Flow::Break(l) if l.is_none() || l.as_deref() == label => break,
                        Flow::Continue(l) if l.is_none() || l.as_deref() == label => {}
                        Flow::Normal => {}
                        other => return Ok(other),
                    }
                }
                Ok(Flow::Normal)
            }
            "do_statement" => {
                let cond = n.child_by_field_name("condition").expect("cond");
                let body = n.child_by_field_name("body").expect("body");
                loop {
                    self.tick()?;
                    match self.scoped_exec(body)? {
                        Flow::Break(l) if l.is_none() || l.as_deref() == label => break,
                        Flow::Continue(l) if l.is_none() || l.as_deref() == label => {}
                        Flow::Normal => {}
                        other => return Ok(other),
                    }
                    if !self.cond(cond)? {
                        break;
                    }
                }
                Ok(Flow::Normal)
            }
            "for_statement" => {
                self.scopes.push(Vec::new());
                let r = self.for_loop(n, label);
                self.scopes.pop();
                r
            }
            "enhanced_for_statement" => {
                let ty = self.parse_type(n.child_by_field_name("type"))?;
                let name = self.text(n.child_by_field_name("name").expect("name")).to_string();
                let body = n.child_by_field_name("body").expect("body");
                let Value::Array(arr) = self.eval(n.child_by_field_name("value").expect("value"))? else {
                    return throw("NullPointerException", None);
                };
                let len = arr.borrow().data.len();
                for i in 0..len {
                    self.tick()?;
                    let item = arr.borrow().data[i].clone();
                    let item = self.assign_convert(item, &ty, false)?;
                    self.scopes.push(vec![(
                        name.clone(),
                        Slot {
                            ty: ty.clone(),
                            val: item,
                        },
                    )]);
                    let r = self.scoped_exec(body);
                    self.scopes.pop();
                    match r? {
                        Flow::Break(l) if l.is_none() || l.as_deref() == label => break,
                        Flow::Continue(l) if l.is_none() || l.as_deref() == label => {}
                        Flow::Normal => {}
                        other => return Ok(other),
                    }
                }
                Ok(Flow::Normal)
            }
            "labeled_statement" => {
                let l = named(n).find(|c| c.kind() == "identifier").map(|c| self.text(c));
                let inner = named(n).find(|c| c.kind() != "identifier").expect("statement");
                match self.exec_labeled(inner, l)? {
                    Flow::Break(Some(b)) if Some(b.as_str()) == l => Ok(Flow::Normal),
                    other => Ok(other),
                }
            }
            "return_statement" => {
                let v = match named(n).next() {
                    Some(e) => self.eval(e)?,
                    None => Value::Void,
                };
                Ok(Flow::Return(v))
            }
            "break_statement" | "continue_statement" => {
                let l = named(n)
                    .find(|c| c.kind() == "identifier")
                    .map(|c| self.text(c).to_string());
                Ok(if n.kind() == "break_statement" {
                    Flow::Break(l)
                } else {
                    Flow::Continue(l)
                })
            }
            "throw_statement" => {
                let v = self.eval(named(n).next().expect("thrown"))?;
                match v {
                    Value::Exc(e) => Err(Unwind::Throw(e)),
                    Value::Null => throw("NullPointerException", None),
                    other => compile(format!("cannot throw {}", other.ty_name())),
                }
            }
            "try_statement" => self.try_statement(n),
            "switch_expression" => self.switch(n),
            ";" => Ok(Flow::Normal),
            k if k.ends_with("comment") => Ok(Flow::Normal),
            other => unsupported(format!("statement {other}")),
        }
    }

    fn for_loop(&mut self, n: Node<'t>, label: Option<&str>) -> R<Flow> {
        let mut cursor = n.walk();
        let inits: Vec<Node> = n.children_by_field_name("init", &mut cursor).collect();
        let updates: Vec<Node> = n.children_by_field_name("update", &mut cursor).collect();
        for i in inits {
            if i.kind() == "local_variable_declaration" {
                self.exec(i)?;
            } else {
                self.eval(i)?;
            }
        }
        let cond = n.child_by_field_name("condition");
        let body = n.child_by_field_name("body").expect("body");
        loop {
            if let Some(c) = cond {
                if !self.cond(c)? {
                    break;
                }
            }
            self.tick()?;
            match self.scoped_exec(body)? {
                Flow::Break(l) if l.is_none() || l.as_deref() == label => break,
                Flow::Continue(l) if l.is_none() || l.as_deref() == label => {}
                Flow::Normal => {}
                other => return Ok(other),
            }
            for u in &updates {
                self.eval(*u)?;
            }
        }
        Ok(Flow::Normal)
    }

    fn try_statement(&mut self, n: Node<'t>) -> R<Flow> {
        let body = n.child_by_field_name("body").expect("try body");
        let mut result = self.scoped_exec(body);
        if let Err(Unwind::Throw(exc)) = &result {
            let exc = exc.clone();
            for clause in named(n).filter(|c| c.kind() == "catch_clause") {
                let param = named(clause)
                    .find(|p| p.kind() == "catch_formal_parameter")
                    .expect("catch parameter");
                let types = named(param)
                    .find(|t| t.kind() == "catch_type")
                    .map(|t| named(t).map(|x| self.text(x).to_string()).collect::<Vec<_>>())
                    .unwrap_or_default();
                if types.iter().any(|t| exc.is_instance_of(t)) {
                    let name = self.text(param.child_by_field_name("name").expect("name")).to_string();
                    let cbody = clause.child_by_field_name("body").expect("catch body");
                    self.scopes.push(vec![(
                        name,
                        Slot {
                            ty: Ty::Exception(exc.class.clone()),
                            val: Value::Exc(exc.clone()),
                        },
                    )]);
                    result = self.scoped_exec(cbody);
                    self.scopes.pop();
                    break;
                }
            }
        }
        if let Some(fin) = named(n).find(|c| c.kind() == "finally_clause") {
            let fblock = named(fin).next().expect("finally block");
            match self.scoped_exec(fblock)? {
                Flow::Normal => {}
                abrupt => return Ok(abrupt),
            }
        }
        result
    }

    fn switch(&mut self, n: Node<'t>) -> R<Flow> {
        let v = self.eval(n.child_by_field_name("condition").expect("cond"))?;
        let body = n.child_by_field_name("body").expect("switch body");
        let groups: Vec<Node> = named(body).collect();
        if groups.iter().any(|g| g.kind() != "switch_block_statement_group") {
            return unsupported("switch rules");
        }
        let mut start = None;
        let mut default = None;
        'find: for (gi, g) in groups.iter().enumerate() {
            for label in named(*g).filter(|l| l.kind() == "switch_label") {
                let consts: Vec<Node> = named(label).collect();
                if consts.is_empty() {
                    default = Some(gi);
                }
                for c in consts {
                    let cv = self.eval(c)?;
                    if self.values_equal(&v, &cv)? {
                        start = Some(gi);
                        break 'find;
                    }
                }
            }
        }
        let Some(start) = start.or(default) else {
            return Ok(Flow::Normal);
        };
        let stmts: Vec<Node> = groups[start..]
            .iter()
            .flat_map(|g| named(*g).filter(|s| s.kind() != "switch_label" && !is_comment(s)))
            .collect();
        match self.block(&stmts)? {
            Flow::Break(None) => Ok(Flow::Normal),
            other => Ok(other),
        }
    }

    fn values_equal(&self, a: &Value, b: &Value) -> R<bool> {
        Ok(match (a, b) {
            (Value::Str(x), Value::Str(y)) => x == y,
            _ => match (a.as_i64(), b.as_i64()) {
                (Some(x), Some(y)) => x == y,
                _ => return compile("switch on unsupported type"),
            },
        })
    }

    // ---------------------------------------------------------- expressions

    pub fn eval(&mut self, n: Node<'t>) -> R<Value> {
        match n.kind() {
            "decimal_integer_literal" | "hex_integer_literal" | "octal_integer_literal" | "binary_integer_literal" => {
                self.int_literal(n)
            }
            "decimal_floating_point_literal" => {
                let t: String = self.text(n).chars().filter(|c| *c != '_').collect();
                let t = t.trim_end_matches(['d', 'D']);
                match t.parse::<f64>() {
                    Ok(v) => Ok(Value::Double(v)),
                    Err(_) => unsupported(format!("literal {t}")),
                }
            }
            "true" => Ok(Value::Bool(true)),
            "false" => Ok(Value::Bool(false)),
            "null_literal" => Ok(Value::Null),
            "character_literal" => {
                let t = self.text(n);
                let s = unescape(&t[1..t.len() - 1]);
                let units: Vec<u16> = s.encode_utf16().collect();
                match units.as_slice() {
                    [c] => Ok(Value::Char(*c)),
                    _ => compile(format!("bad char literal {t}")),
                }
            }
            "string_literal" => {
                let t = self.text(n);
                if t.starts_with("\"\"\"") {
                    return unsupported("text block");
                }
                Ok(Value::str(unescape(&t[1..t.len() - 1])))
            }
            "identifier" => {
                let p = self.find(self.text(n))?;
                Ok(self.read(&p))
            }
            "parenthesized_expression" => self.eval(named(n).next().expect("inner")),
            "binary_expression" => self.binary(n),
            "unary_expression" => self.unary(n),
            "update_expression" => self.update(n),
            "assignment_expression" => self.assign(n),
            "ternary_expression" => {
                if self.cond(n.child_by_field_name("condition").expect("cond"))? {
                    self.eval(n.child_by_field_name("consequence").expect("then"))
                } else {
                    self.eval(n.child_by_field_name("alternative").expect("else"))
                }
            }
            "cast_expression" => {
                let ty = self.parse_type(n.child_by_field_name("type"))?;
                let v = self.eval(n.child_by_field_name("value").expect("value"))?;
                self.cast(v, &ty)
            }
            "array_access" => {
                let p = self.place(n)?;
                Ok(self.read(&p))
            }
            "field_access" => self.field_access(n),
            "method_invocation" => self.invoke(n),
            "object_creation_expression" => self.construct(n),
            "array_creation_expression" => {
                let elem = self.parse_type(n.child_by_field_name("type"))?;
                let mut dims = Vec::new();
                let mut extra = 0;
                let mut cursor = n.walk();
                let dnodes: Vec<Node> = n.children_by_field_name("dimensions", &mut cursor).collect();
                for d in dnodes {
                    if d.kind() == "dimensions_expr" {
                        let v = self.eval(named(d).next().expect("size"))?;
                        dims.push(self.int_index(&v)?);
                    } else {
                        extra += self.text(d).matches('[').count();
                    }
                }
                let ty = elem.array_of(dims.len() + extra);
                match n.child_by_field_name("value") {
                    Some(init) => self.array_init(&ty, init),
                    None => self.new_array(&ty, &dims),
                }
            }
            other => unsupported(format!("expression {other}")),
        }
    }

    fn int_literal(&self, n: Node) -> R<Value> {
        let raw: String = self.text(n).chars().filter(|c| *c != '_').collect();
        let long = raw.ends_with(['l', 'L']);
        let digits = raw.trim_end_matches(['l', 'L']);
        let (radix, body) = if let Some(h) = digits.strip_prefix("0x").or(digits.strip_prefix("0X")) {
            (16, h)
        } else if let Some(b) = digits.strip_prefix("0b").or(digits.strip_prefix("0B")) {
            (2, b)
        } else if digits.len() > 1 && digits.starts_with('0') {
            (8, &digits[1..])
        } else {
            (10, digits)
        };
        let v = u64::from_str_radix(body, radix)
            .map_err(|_| Unwind::Fatal(JavaError::Compile(format!("bad literal {raw}"))))?;
        Ok(if long {
            Value::Long(v as i64)
        } else if radix == 10 {
            // 2147483648 only appears under unary minus.
            if v > 1 << 31 {
                return compile(format!("integer number too large {raw}"));
            }
            Value::Int(v as u32 as i32)
        } else {
            Value::Int(v as u32 as i32)
        })
    }

    fn binary(&mut self, n: Node<'t>) -> R<Value> {
        let op = self.text(n.child_by_field_name("operator").expect("op"));
        let l = n.child_by_field_name("left").expect("left");
        let r = n.child_by_field_name("right").expect("right");
        match op {
            "&&" => return Ok(Value::Bool(self.cond(l)? && self.cond(r)?)),
            "||" => return Ok(Value::Bool(self.cond(l)? || self.cond(r)?)),
            _ => {}
        }
        let a = self.eval(l)?;
        let b = self.eval(r)?;
        binop(op, a, b)
    }

    fn unary(&mut self, n: Node<'t>) -> R<Value> {
        let op = self.text(n.child_by_field_name("operator").expect("op"));
        let operand = n.child_by_field_name("operand").expect("operand");
        // -2147483648 and -9223372036854775808L are legal literals.
        if op == "-" && Self::is_constant(operand) {
            let t: String = self.text(operand).chars().filter(|c| *c != '_').collect();
            if t == "2147483648" {
                return Ok(Value::Int(i32::MIN));
            }
            if t.eq_ignore_ascii_case("9223372036854775808l") {
                return Ok(Value::Long(i64::MIN));
            }
        }
        let v = self.eval(operand)?;
        Ok(match (op, v) {
            ("!", Value::Bool(b)) => Value::Bool(!b),
            ("-", Value::Double(d)) => Value::Double(-d),
            ("-", Value::Long(x)) => Value::Long(x.wrapping_neg()),
            ("-", v) if v.as_i64().is_some() => Value::Int((v.as_i64().expect("int") as i32).wrapping_neg()),
            ("+", v) if v.as_f64().is_some() => match v {
                Value::Char(c) => Value::Int(c.into()),
                v => v,
            },
            ("~", Value::Long(x)) => Value::Long(!x),
            ("~", v) if v.as_i64().is_some() => Value::Int(!(v.as_i64().expect("int") as i32)),
            (op, v) => return compile(format!("bad operand {} for unary {op}", v.ty_name())),
        })
    }

    fn update(&mut self, n: Node<'t>) -> R<Value> {
        let target = named(n).next().expect("operand");
        let op_node = {
            let mut c = n.walk();
            let kids: Vec<Node> = n.children(&mut c).collect();
            kids.into_iter()
                .find(|k| matches!(k.kind(), "++" | "--"))
                .expect("operator")
        };
        let prefix = op_node.start_byte() < target.start_byte();
        let delta = if op_node.kind() == "++" { "+" } else { "-" };
        let p = self.place(target)?;
        let old = self.read(&p);
        let ty = self.place_ty(&p);
        if !ty.is_numeric() {
            return compile("++/-- on non-numeric");
        }
        let new = self.cast(binop(delta, old.clone(), Value::Int(1))?, &ty)?;
        self.write(&p, new.clone());
        Ok(if prefix { new } else { old })
    }

    fn assign(&mut self, n: Node<'t>) -> R<Value> {
        let op = self.text(n.child_by_field_name("operator").expect("op"));
        let left = n.child_by_field_name("left").expect("left");
        let right = n.child_by_field_name("right").expect("right");
        if op == "=" {
            // Array reference and index are evaluated before the right side,
            // but the bounds check happens after it.
            let p = if left.kind() == "array_access" {
                let arr = self.eval(left.child_by_field_name("array").expect("array"))?;
                let idx = self.eval(left.child_by_field_name("index").expect("index"))?;
                let v = self.eval(right)?;
                let p = self.elem_place(arr, idx)?;
                let ty = self.place_ty(&p);
                let v = self.assign_convert(v, &ty, Self::is_constant(right))?;
                self.write(&p, v.clone());
                return Ok(v);
            } else {
                self.place(left)?
            };
            let v = self.eval(right)?;
            let ty = self.place_ty(&p);
            let v = self.assign_convert(v, &ty, Self::is_constant(right))?;
            self.write(&p, v.clone());
            return Ok(v);
        }
        let base = &op[..op.len() - 1];
        let p = self.place(left)?;
        let old = self.read(&p);
        let rhs = self.eval(right)?;
        let ty = self.place_ty(&p);
        let combined = binop(base, old, rhs)?;
        let v = if ty == Ty::Str {
            combined
        } else {
            self.cast(combined, &ty)?
        };
        self.write(&p, v.clone());
        Ok(v)
    }

    fn field_access(&mut self, n: Node<'t>) -> R<Value> {
        let obj = n.child_by_field_name("object").expect("object");
        let field = self.text(n.child_by_field_name("field").expect("field"));
        if obj.kind() == "identifier" && self.find(self.text(obj)).is_err() {
            return match (self.text(obj), field) {
                ("Integer", "MAX_VALUE") => Ok(Value::Int(i32::MAX)),
                ("Integer", "MIN_VALUE") => Ok(Value::Int(i32::MIN)),
                ("Long", "MAX_VALUE") => Ok(Value::Long(i64::MAX)),
                ("Long", "MIN_VALUE") => Ok(Value::Long(i64::MIN)),
                (c, f) if c == self.class_name => {
                    let p = self.find(f)?;
                    Ok(self.read(&p))
                }
                (c, f) => unsupported(format!("static field {c}.{f}")),
            };
        }
        match (self.eval(obj)?, field) {
            (Value::Array(a), "length") => Ok(Value::Int(a.borrow().data.len() as i32)),
            (Value::Null, _) => throw("NullPointerException", None),
            (v, f) => unsupported(format!("field {f} of {}", v.ty_name())),
        }
    }

    fn args(&mut self, n: Node<'t>) -> R<Vec<Value>> {
        let mut out = Vec::new();
        if let Some(a) = n.child_by_field_name("arguments") {
            for e in named(a).filter(|c| !is_comment(c)) {
                out.push(self.eval(e)?);
            }
        }
        Ok(out)
    }

    fn construct(&mut self, n: Node<'t>) -> R<Value> {
        let ty = self.text(n.child_by_field_name("type").expect("type"));
        let args = self.args(n)?;
        match (ty, args.as_slice()) {
            ("StringBuilder", []) => Ok(Value::Builder(Rc::new(RefCell::new(String::new())))),
            ("StringBuilder", [v]) => Ok(Value::Builder(Rc::new(RefCell::new(v.to_java_string())))),
            (e, []) if is_known_exception(e) => Ok(Value::Exc(Rc::new(ExcObj::new(e, None)))),
            (e, [m]) if is_known_exception(e) => Ok(Value::Exc(Rc::new(ExcObj::new(e, m.to_java_string())))),
            (t, _) => unsupported(format!("new {t}")),
        }
    }

    fn invoke(&mut self, n: Node<'t>) -> R<Value> {
        let name = self.text(n.child_by_field_name("name").expect("name"));
        let obj = n.child_by_field_name("object");
        let class_ref = obj.and_then(|o| {
            let t = self.text(o);
            let is_class = (o.kind() == "identifier"
                && self.find(t).is_err()
                && (LIBRARY_CLASSES.contains(&t) || t == self.class_name))
                || t == "System.out"
                || t == "System.err";
            is_class.then_some(t)
        });
        match class_ref {
            None if obj.is_none() => {
                let args = self.args(n)?;
                self.call_user(name, args)
            }
            Some(c) if c == self.class_name => {
                let args = self.args(n)?;
                self.call_user(name, args)
            }
            Some(c) => {
                let args = self.args(n)?;
                self.call_static(c, name, args)
            }
            None => {
                let recv = self.eval(obj.expect("receiver"))?;
                let args = self.args(n)?;
                self.call_method(recv, name, args)
            }
        }
    }

    fn call_user(&mut self, name: &str, args: Vec<Value>) -> R<Value> {
        let Some(cands) = self.methods.get(name) else {
            return compile(format!("cannot find symbol method {name}"));
        };
        let mut chosen = None;
        for m in cands.clone() {
            let params = m.child_by_field_name("parameters").expect("params");
            let ps: Vec<Node> = named(params).filter(|p| p.kind() == "formal_parameter").collect();
            if ps.len() != args.len() {
                continue;
            }
            let mut converted = Vec::new();
            let mut ok = true;
            for (p, a) in ps.iter().zip(&args) {
                let mut ty = self.parse_type(p.child_by_field_name("type"))?;
                if let Some(d) = p.child_by_field_name("dimensions") {
                    ty = ty.array_of(self.text(d).matches('[').count());
                }
                let pname = self.text(p.child_by_field_name("name").expect("name")).to_string();
                match self.assign_convert(a.clone(), &ty, false) {
                    Ok(v) => converted.push((pname, Slot { ty, val: v })),
                    Err(_) => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                chosen = Some((m, converted));
                break;
            }
        }
        let Some((method, frame)) = chosen else {
            return compile(format!("no applicable overload for {name}"));
        };
        if self.depth >= MAX_DEPTH {
            return throw("StackOverflowError", None);
        }
        let ret_ty = self.parse_type(method.child_by_field_name("type"))?;
        let body = method.child_by_field_name("body").expect("body");
        let saved = std::mem::replace(&mut self.scopes, vec![frame]);
        self.depth += 1;
        let result = self.exec(body);
        self.depth -= 1;
        self.scopes = saved;
        match result? {
            Flow::Return(v) if ret_ty == Ty::Void => {
                debug_assert!(matches!(v, Value::Void));
                Ok(Value::Void)
            }
            Flow::Return(v) => self.assign_convert(v, &ret_ty, false),
            Flow::Normal if ret_ty == Ty::Void => Ok(Value::Void),
            _ => compile(format!("method {name} fell off its end")),
        }
    }

    fn call_static(&mut self, class: &str, name: &str, args: Vec<Value>) -> R<Value> {
        let num = |v: &Value| v.as_f64();
        Ok(match (class, name, args.as_slice()) {
            ("System.out", "println", []) => {
                self.out.push('\n');
                Value::Void
            }
            ("System.out", "println", [v]) => {
                self.out.push_str(&v.to_java_string());
                self.out.push('\n');
                Value::Void
            }
            ("System.out", "print", [v]) => {
                self.out.push_str(&v.to_java_string());
                Value::Void
            }
            ("System.err", "println", [v]) => {
                self.err.push_str(&v.to_java_string());
                self.err.push('\n');
                Value::Void
            }
            ("Math", "max" | "min", [a, b]) => {
                let r = binop("+", a.clone(), b.clone())?;
                let (x, y) = (num(a).expect("numeric"), num(b).expect("numeric"));
                let pick_a = if name == "max" { x >= y } else { x <= y };
                let chosen = if pick_a { a.clone() } else { b.clone() };
                // Result has the promoted type of both operands.
                match r {
                    Value::Int(_) => Value::Int(chosen.as_i64().expect("int") as i32),
                    Value::Long(_) => Value::Long(chosen.as_i64().expect("long")),
                    _ => Value::Double(chosen.as_f64().expect("double")),
                }
            }
            ("Math", "abs", [Value::Int(x)]) => Value::Int(x.wrapping_abs()),
            ("Math", "abs", [Value::Long(x)]) => Value::Long(x.wrapping_abs()),
            ("Math", "abs", [Value::Double(x)]) => Value::Double(x.abs()),
            ("Math", "sqrt", [v]) if num(v).is_some() => Value::Double(num(v).expect("n").sqrt()),
            ("Math", "pow", [a, b]) if num(a).is_some() && num(b).is_some() => {
                Value::Double(num(a).expect("n").powf(num(b).expect("n")))
            }
            ("Math", "floorMod", [Value::Int(a), Value::Int(b)]) => {
                if *b == 0 {
                    return throw("ArithmeticException", "/ by zero".to_string());
                }
                let m = a.wrapping_rem(*b);
                Value::Int(if m != 0 && ((m < 0) != (*b < 0)) { m + b } else { m })
            }
            ("Integer", "parseInt", [Value::Str(s)]) => match s.parse::<i32>() {
                Ok(v) if !s.starts_with('+') || s.len() > 1 => Value::Int(v),
                _ => return throw("NumberFormatException", format!("For input string: \"{s}\"")),
            },
            ("Long", "parseLong", [Value::Str(s)]) => match s.parse::<i64>() {
                Ok(v) => Value::Long(v),
                Err(_) => return throw("NumberFormatException", format!("For input string: \"{s}\"")),
            },
            ("Integer" | "Long" | "String" | "Double" | "Character", "toString" | "valueOf", [v])
                if class == "String" || name == "toString" =>
            {
                Value::str(v.to_java_string())
            }
            ("Integer", "valueOf", [Value::Str(s)]) => match s.parse::<i32>() {
                Ok(v) => Value::Int(v),
                Err(_) => return throw("NumberFormatException", format!("For input string: \"{s}\"")),
            },
            ("Character", "isDigit", [Value::Char(c)]) => {
                Value::Bool(char::from_u32((*c).into()).is_some_and(|c| c.is_ascii_digit()))
            }
            ("Character", "isLetter", [Value::Char(c)]) => {
                Value::Bool(char::from_u32((*c).into()).is_some_and(|c| c.is_alphabetic()))
            }
            ("Integer", "compare", [a, b]) => {
                let (x, y) = (a.as_i64().expect("int"), b.as_i64().expect("int"));
                Value::Int((x > y) as i32 - (x < y) as i32)
            }
            (c, m, a) => return unsupported(format!("{c}.{m} with {} args", a.len())),
        })
    }

    fn call_method(&mut self, recv: Value, name: &str, args: Vec<Value>) -> R<Value> {
        let utf16 = |s: &str| s.encode_utf16().collect::<Vec<u16>>();
        Ok(match (recv, name, args.as_slice()) {
            (Value::Null, _, _) => return throw("NullPointerException", None),
            (Value::Str(s), "length", []) => Value::Int(utf16(&s).len() as i32),
            (Value::Str(s), "isEmpty", []) => Value::Bool(s.is_empty()),
            (Value::Str(s), "charAt", [i]) => {
                let i = self.int_index(i)?;
                let u = utf16(&s);
                if i < 0 || i as usize >= u.len() {
                    return throw(
                        "StringIndexOutOfBoundsException",
                        format!("Index {i} out of bounds for length {}", u.len()),
                    );
                }
                Value::Char(u[i as usize])
            }
            (Value::Str(s), "equals", [o]) => Value::Bool(matches!(o, Value::Str(t) if *t == s)),
            (Value::Str(s), "compareTo", [Value::Str(t)]) => {
                let (a, b) = (utf16(&s), utf16(t));
                let k = a.iter().zip(&b).position(|(x, y)| x != y);
                Value::Int(match k {
                    Some(k) => i32::from(a[k]) - i32::from(b[k]),
                    None => a.len() as i32 - b.len() as i32,
                })
            }
            (Value::Str(s), "substring", idx) if !idx.is_empty() && idx.len() <= 2 => {
                let u = utf16(&s);
                let b = self.int_index(&idx[0])?;
                let e = match idx.get(1) {
                    Some(v) => self.int_index(v)?,
                    None => u.len() as i32,
                };
                if b < 0 || e > u.len() as i32 || b > e {
                    return throw(
                        "StringIndexOutOfBoundsException",
                        format!("begin {b}, end {e}, length {}", u.len()),
                    );
                }
                Value::str(String::from_utf16_lossy(&u[b as usize..e as usize]))
            }
            (Value::Str(s), "indexOf", [Value::Str(t)]) => {
                Value::Int(s.find(&**t).map_or(-1, |i| utf16(&s[..i]).len() as i32))
            }
            (Value::Str(s), "indexOf", [Value::Char(c)]) => {
                Value::Int(utf16(&s).iter().position(|x| x == c).map_or(-1, |i| i as i32))
            }
            (Value::Str(s), "contains", [Value::Str(t)]) => Value::Bool(s.contains(&**t)),
            (Value::Str(s), "toUpperCase", []) => Value::str(s.to_uppercase()),
            (Value::Str(s), "toLowerCase", []) => Value::str(s.to_lowercase()),
            (Value::Str(s), "trim", []) => Value::str(s.trim_matches(|c: char| c <= ' ')),
            (Value::Str(s), "toCharArray", []) => Value::Array(Rc::new(RefCell::new(ArrayObj {
                elem: Ty::Char,
                data: utf16(&s).into_iter().map(Value::Char).collect(),
            }))),
            (Value::Builder(b), "append", [v]) => {
                b.borrow_mut().push_str(&v.to_java_string());
                Value::Builder(b)
            }
            (Value::Builder(b), "toString", []) => Value::str(b.borrow().clone()),
            (Value::Builder(b), "length", []) => Value::Int(utf16(&b.borrow()).len() as i32),
            (Value::Builder(b), "reverse", []) => {
                let r: String = b.borrow().chars().rev().collect();
                *b.borrow_mut() = r;
                Value::Builder(b)
            }
            (Value::Builder(b), "charAt", [i]) => {
                let s: String = b.borrow().clone();
                return self.call_method(Value::str(s), "charAt", vec![i.clone()]);
            }
            (Value::Exc(e), "getMessage", []) => match &e.message {
                Some(m) => Value::str(m),
                None => Value::Null,
            },
            (v @ Value::Exc(_), "toString", []) => Value::str(v.to_java_string()),
            (Value::Array(a), "clone", []) => {
                let a = a.borrow();
                Value::Array(Rc::new(RefCell::new(ArrayObj {
                    elem: a.elem.clone(),
                    data: a.data.clone(),
                })))
            }
            (v, m, a) => return unsupported(format!("{}.{m} with {} args", v.ty_name(), a.len())),
        })
    }
}

fn unescape(s: &str) -> String {
    let mut out = String::new();
    let mut chars = s.chars().peekable();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('t') => out.push('\t'),
            Some('r') => out.push('\r'),
            Some('b') => out.push('\u{8}'),
            Some('f') => out.push('\u{c}'),
            Some('0') => out.push('\0'),
            Some('s') => out.push(' '),
            Some('u') => {
                while chars.peek() == Some(&'u') {
                    chars.next();
                }
                let hex: String = chars.by_ref().take(4).collect();
                if let Some(ch) = u32::from_str_radix(&hex, 16).ok().and_then(char::from_u32) {
                    out.push(ch);
                }
            }
            Some(other) => out.push(other),
            None => out.push('\\'),
        }
    }
    out
}

/// Binary operators other than `&&`/`||`, with Java's numeric promotion.
pub fn binop(op: &str, a: Value, b: Value) -> R<Value> {
    if op == "+" && (matches!(a, Value::Str(_)) || matches!(b, Value::Str(_))) {
        return Ok(Value::str(format!("{}{}", a.to_java_string(), b.to_java_string())));
    }
    if let (Value::Bool(x), Value::Bool(y)) = (&a, &b) {
        return Ok(Value::Bool(match op {
            "==" => x == y,
            "!=" => x != y,
            "&" => *x & *y,
            "|" => *x | *y,
            "^" => *x ^ *y,
            _ => return compile(format!("bad operands for {op}: boolean")),
        }));
    }
    if matches!(op, "==" | "!=") {
        let eq = match (&a, &b) {
            (Value::Null, Value::Null) => Some(true),
            (Value::Null, _) | (_, Value::Null) => Some(false),
            (Value::Array(x), Value::Array(y)) => Some(Rc::ptr_eq(x, y)),
            (Value::Str(x), Value::Str(y)) => Some(std::ptr::eq(x.as_ptr(), y.as_ptr())),
            (Value::Builder(x), Value::Builder(y)) => Some(Rc::ptr_eq(x, y)),
            (Value::Exc(x), Value::Exc(y)) => Some(Rc::ptr_eq(x, y)),
            _ => None,
        };
        if let Some(eq) = eq {
            return Ok(Value::Bool(if op == "==" { eq } else { !eq }));
        }
    }
    if matches!(op, "<<" | ">>" | ">>>") {
        let s = b
            .as_i64()
            .ok_or_else(|| Unwind::Fatal(JavaError::Compile("shift by non-integer".into())))?;
        return Ok(match a {
            Value::Long(x) => Value::Long(match op {
                "<<" => x.wrapping_shl((s & 63) as u32),
                ">>" => x.wrapping_shr((s & 63) as u32),
                _ => ((x as u64) >> (s & 63)) as i64,
            }),
            v if v.as_i64().is_some() => {
                let x = v.as_i64().expect("int") as i32;
                Value::Int(match op {
                    "<<" => x.wrapping_shl((s & 31) as u32),
                    ">>" => x.wrapping_shr((s & 31) as u32),
                    _ => ((x as u32) >> (s & 31)) as i32,
                })
            }
            v => return compile(format!("shift of {}", v.ty_name())),
        });
    }
    let (Some(_), Some(_)) = (a.as_f64(), b.as_f64()) else {
        return compile(format!("bad operands for {op}: {} and {}", a.ty_name(), b.ty_name()));
    };
    let cmp = |o: std::cmp::Ordering| -> Option<bool> {
        use std::cmp::Ordering::*;
        Some(match op {
            "<" => o == Less,
            "<=" => o != Greater,
            ">" => o == Greater,
            ">=" => o != Less,
            "==" => o == Equal,
            "!=" => o != Equal,
            _ => return None,
        })
    };
    if matches!(a, Value::Double(_)) || matches!(b, Value::Double(_)) {
        let (x, y) = (a.as_f64().expect("n"), b.as_f64().expect("n"));
        if let Some(c) = x.partial_cmp(&y).map(cmp) {
            if let Some(r) = c {
                return Ok(Value::Bool(r));
            }
        } else if matches!(op, "<" | "<=" | ">" | ">=" | "==" | "!=") {
            return Ok(Value::Bool(op == "!="));
        }
        return Ok(Value::Double(match op {
            "+" => x + y,
            "-" => x - y,
            "*" => x * y,
            "/" => x / y,
            "%" => x % y,
            _ => return compile(format!("bad operator {op} for double")),
        }));
    }
    let (x, y) = (a.as_i64().expect("i"), b.as_i64().expect("i"));
    if let Some(r) = cmp(x.cmp(&y)) {
        return Ok(Value::Bool(r));
    }
    if matches!(op, "/" | "%") && y == 0 {
        return throw("ArithmeticException", "/ by zero".to_string());
    }
    if matches!(a, Value::Long(_)) || matches!(b, Value::Long(_)) {
        return Ok(Value::Long(match op {
            "+" => x.wrapping_add(y),
            "-" => x.wrapping_sub(y),
            "*" => x.wrapping_mul(y),
            "/" => x.wrapping_div(y),
            "%" => x.wrapping_rem(y),
            "&" => x & y,
            "|" => x | y,
            "^" => x ^ y,
            _ => return compile(format!("bad operator {op} for long")),
        }));
    }
    let (x, y) = (x as i32, y as i32);
    Ok(Value::Int(match op {
        "+" => x.wrapping_add(y),
        "-" => x.wrapping_sub(y),
        "*" => x.wrapping_mul(y),
        "/" => x.wrapping_div(y),
        "%" => x.wrapping_rem(y),
        "&" => x & y,
        "|" => x | y,
        "^" => x ^ y,
        _ => return compile(format!("bad operator {op} for int")),
    }))
}
