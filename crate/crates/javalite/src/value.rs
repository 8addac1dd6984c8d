use std::cell::RefCell;
use std::fmt::Write as _;
use std::rc::Rc;

#[derive(Debug, Clone, PartialEq)]
pub enum Ty {
    Int,
    Long,
    Double,
    Bool,
    Char,
    Str,
    Builder,
    Exception(String),
    Array(Box<Ty>),
    Void,
}

impl Ty {
    pub fn array_of(mut self, dims: usize) -> Ty {
        for _ in 0..dims {
            self = Ty::Array(Box::new(self));
        }
        self
    }

    pub fn default_value(&self) -> Value {
        match self {
            Ty::Int => Value::Int(0),
            Ty::Long => Value::Long(0),
            Ty::Double => Value::Double(0.0),
            Ty::Bool => Value::Bool(false),
            Ty::Char => Value::Char(0),
            _ => Value::Null,
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, Ty::Int | Ty::Long | Ty::Double | Ty::Char)
    }
}

#[derive(Debug)]
pub struct ArrayObj {
    pub elem: Ty,
    pub data: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExcObj {
    pub class: String,
    pub message: Option<String>,
}

impl ExcObj {
    pub fn new(class: &str, message: impl Into<Option<String>>) -> Self {
        ExcObj {
            class: class.to_string(),
            message: message.into(),
        }
    }

    pub fn qualified(&self) -> String {
        format!("java.lang.{}", self.class)
    }

    /// Whether a `catch (name ...)` clause catches this exception.
    pub fn is_instance_of(&self, name: &str) -> bool {
        if name == self.class || name == "Throwable" {
            return true;
        }
        let mut cur = self.class.as_str();
        while let Some(parent) = superclass(cur) {
            if parent == name {
                return true;
            }
            cur = parent;
        }
        false
    }
}

fn superclass(class: &str) -> Option<&'static str> {
    Some(match class {
        "ArithmeticException"
        | "IndexOutOfBoundsException"
        | "NullPointerException"
        | "IllegalArgumentException"
        | "NegativeArraySizeException"
        | "IllegalStateException"
        | "ClassCastException" => "RuntimeException",
        "ArrayIndexOutOfBoundsException" | "StringIndexOutOfBoundsException" => "IndexOutOfBoundsException",
        "NumberFormatException" => "IllegalArgumentException",
        "RuntimeException" => "Exception",
        "Exception" | "Error" => "Throwable",
        "StackOverflowError" => "Error",
        _ => return None,
    })
}

pub fn is_known_exception(name: &str) -> bool {
    name == "Throwable" || superclass(name).is_some()
}

#[derive(Debug, Clone)]
pub enum Value {
    Int(i32),
    Long(i64),
    Double(f64),
    Bool(bool),
    Char(u16),
    Str(Rc<str>),
    Array(Rc<RefCell<ArrayObj>>),
    Builder(Rc<RefCell<String>>),
    Exc(Rc<ExcObj>),
    Null,
    Void,
}

impl Value {
    pub fn str(s: impl AsRef<str>) -> Value {
        Value::Str(Rc::from(s.as_ref()))
    }

    pub fn ty_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "int",
            Value::Long(_) => "long",
            Value::Double(_) => "double",
            Value::Bool(_) => "boolean",
            Value::Char(_) => "char",
            Value::Str(_) => "String",
            Value::Array(_) => "array",
            Value::Builder(_) => "StringBuilder",
            Value::Exc(_) => "Exception",
            Value::Null => "null",
            Value::Void => "void",
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match *self {
            Value::Int(v) => Some(v.into()),
            Value::Long(v) => Some(v),
            Value::Char(v) => Some(v.into()),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Value::Double(v) => Some(v),
            _ => self.as_i64().map(|v| v as f64),
        }
    }

    /// Rendering used by string concatenation and `println`.
    pub fn to_java_string(&self) -> String {
        match self {
            Value::Int(v) => v.to_string(),
            Value::Long(v) => v.to_string(),
            Value::Double(v) => format_double(*v),
            Value::Bool(v) => v.to_string(),
            Value::Char(c) => String::from_utf16_lossy(&[*c]),
            Value::Str(s) => s.to_string(),
            Value::Array(a) => {
                let a = a.borrow();
                let code = match a.elem {
                    Ty::Int => "I",
                    Ty::Long => "J",
                    Ty::Double => "D",
                    Ty::Char => "C",
                    Ty::Bool => "Z",
                    _ => "L",
                };
                // Identity hashes are not reproducible; a fixed one keeps runs comparable.
                format!("[{code}@1b6d3586")
            }
            Value::Builder(b) => b.borrow().clone(),
            Value::Exc(e) => match &e.message {
                Some(m) => format!("{}: {m}", e.qualified()),
                None => e.qualified(),
            },
            Value::Null => "null".to_string(),
            Value::Void => String::new(),
        }
    }
}

/// `Double.toString`: shortest round-trip digits, scientific outside [1e-3, 1e7).
pub fn format_double(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "Infinity" } else { "-Infinity" }.into();
    }
    let a = v.abs();
    if a == 0.0 || (1e-3..1e7).contains(&a) {
        let mut s = format!("{v}");
        if !s.contains('.') {
            s.push_str(".0");
        }
        s
    } else {
        let s = format!("{v:e}");
        let (mant, exp) = s.split_once('e').expect("exponent present");
        let mut out = mant.to_string();
        if !out.contains('.') {
            out.push_str(".0");
        }
        let _ = write!(out, "E{exp}");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubles_format_like_java() {
        assert_eq!(format_double(3.0), "3.0");
        assert_eq!(format_double(0.1), "0.1");
        assert_eq!(format_double(-0.0), "-0.0");
        assert_eq!(format_double(1e7), "1.0E7");
        assert_eq!(format_double(1.25e-5), "1.25E-5");
        assert_eq!(format_double(1234.5), "1234.5");
    }

    #[test]
    fn exception_hierarchy() {
        let e = ExcObj::new("ArrayIndexOutOfBoundsException", None);
        assert!(e.is_instance_of("RuntimeException"));
        assert!(e.is_instance_of("Exception"));
        assert!(!e.is_instance_of("ArithmeticException"));
    }
}
