//! Side-effect-free reduction of expressions to values.

use std::cell::OnceCell;
use std::fmt;
use std::rc::Rc;

use crate::externals::ExternalKind;
use crate::runtime::{Instance, InstanceBody};
use crate::syntax::{desugar, BinOp, Const, DoBlock, Expr, ExprKind, Item, Program, WidgetExpr};
use crate::types::Type;

/// Built-in operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Builtin {
    Loc,
    Get,
    Set,
    Head,
    Tail,
    Ctor(ExternalKind),
}

impl Builtin {
    pub fn name(self) -> &'static str {
        match self {
            Builtin::Loc => "loc",
            Builtin::Get => "get",
            Builtin::Set => "set",
            Builtin::Head => "head",
            Builtin::Tail => "tail",
            Builtin::Ctor(k) => k.ctor_name(),
        }
    }

    pub fn all() -> Vec<Builtin> {
        let mut v = vec![Builtin::Loc, Builtin::Get, Builtin::Set, Builtin::Head, Builtin::Tail];
        v.extend(ExternalKind::ALL.into_iter().map(Builtin::Ctor));
        v
    }
}

#[derive(Debug)]
pub struct Closure {
    pub params: Vec<String>,
    pub body: Rc<Expr>,
    pub env: Env,
}

#[derive(Debug)]
pub struct DoVal {
    pub block: Rc<DoBlock>,
    pub env: Env,
}

#[derive(Debug)]
pub struct WidgetVal {
    pub expr: Rc<WidgetExpr>,
    pub env: Env,
}

/// Primitive commands produced by applying built-in operators.
#[derive(Debug)]
pub enum Command {
    Loc(Value),
    Get(Value),
    Set(Value, Value),
    Construct {
        kind: ExternalKind,
        targs: Vec<Type>,
        args: Vec<Value>,
    },
    /// Operation of an external widget instance, e.g. `n.move(x,y)`.
    ExtOp {
        instance: Rc<Instance>,
        op: String,
        args: Option<Vec<Value>>,
    },
    /// Field of the widget yielded by a command, e.g. `s.name` for a
    /// command `s`.
    FieldOf {
        cmd: Value,
        field: String,
        args: Option<Vec<Value>>,
    },
}

#[derive(Clone, Debug)]
pub enum Value {
    Unit,
    Int(i64),
    Str(Rc<str>),
    Bool(bool),
    List(Rc<Vec<Value>>),
    Record(Rc<Vec<(String, Value)>>),
    Closure(Rc<Closure>),
    Raise(Rc<(String, Vec<Value>)>),
    Do(Rc<DoVal>),
    Widget(Rc<WidgetVal>),
    Top,
    Builtin(Builtin, Rc<Vec<Type>>),
    Command(Rc<Command>),
    Location(u64),
    Instance(Rc<Instance>),
    /// A recursive value under construction.
    FixRef(Rc<OnceCell<Value>>),
}

impl Value {
    pub fn str(s: &str) -> Value {
        Value::Str(Rc::from(s))
    }

    pub fn is_command(&self) -> bool {
        matches!(self, Value::Do(_) | Value::Raise(_) | Value::Widget(_) | Value::Top | Value::Command(_))
    }

    /// Follows a filled recursive reference.
    pub fn deref(&self) -> Result<Value, EvalError> {
        match self {
            Value::FixRef(cell) => match cell.get() {
                Some(v) => v.deref(),
                None => Err(EvalError::Unready),
            },
            v => Ok(v.clone()),
        }
    }

    pub fn as_instance(&self) -> Option<&Rc<Instance>> {
        match self {
            Value::Instance(i) => Some(i),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound variable {0}")]
    Unbound(String),
    #[error("recursive value used before it is defined")]
    Unready,
    #[error("{0}")]
    Stuck(String),
}

fn stuck<T>(m: impl Into<String>) -> Result<T, EvalError> {
    Err(EvalError::Stuck(m.into()))
}

/// A persistent environment; extending it never changes existing ones.
#[derive(Clone, Debug, Default)]
pub struct Env(Option<Rc<EnvNode>>);

#[derive(Debug)]
struct EnvNode {
    name: String,
    value: Value,
    next: Env,
}

impl Env {
    pub fn empty() -> Env {
        Env(None)
    }

    pub fn bind(&self, name: &str, value: Value) -> Env {
        Env(Some(Rc::new(EnvNode { name: name.to_string(), value, next: self.clone() })))
    }

    /// The bound value, without following recursive references.
    pub fn get_raw(&self, name: &str) -> Option<&Value> {
        let mut cur = &self.0;
        while let Some(node) = cur {
            if node.name == name {
                return Some(&node.value);
            }
            cur = &node.next.0;
        }
        None
    }

    pub fn lookup(&self, name: &str) -> Result<Value, EvalError> {
        self.get_raw(name).ok_or_else(|| EvalError::Unbound(name.to_string()))?.deref()
    }

    /// The environment holding only the built-in operators.
    pub fn builtins() -> Env {
        Builtin::all()
            .into_iter()
            .fold(Env::empty(), |env, b| env.bind(b.name(), Value::Builtin(b, Rc::new(Vec::new()))))
    }
}

/// Reduces an expression to a value.
pub fn eval(env: &Env, e: &Expr) -> Result<Value, EvalError> {
    match &e.kind {
        ExprKind::Var(x) => env.lookup(x),
        ExprKind::Const(Const::Int(n)) => Ok(Value::Int(*n)),
        ExprKind::Const(Const::Str(s)) => Ok(Value::str(s)),
        ExprKind::Const(Const::Bool(b)) => Ok(Value::Bool(*b)),
        ExprKind::List(es) => Ok(Value::List(Rc::new(es.iter().map(|x| eval(env, x)).collect::<Result<_, _>>()?))),
        ExprKind::EmptyList(_) => Ok(Value::List(Rc::new(Vec::new()))),
        ExprKind::Record(fs) => Ok(Value::Record(Rc::new(
            fs.iter().map(|(n, x)| Ok((n.clone(), eval(env, x)?))).collect::<Result<_, EvalError>>()?,
        ))),
        ExprKind::Field(r, x) => field(&eval(env, r)?, x),
        ExprKind::Fun(f) => Ok(Value::Closure(Rc::new(Closure {
            params: f.params.iter().map(|p| p.name.clone()).collect(),
            body: f.body.clone(),
            env: env.clone(),
        }))),
        ExprKind::App(f, args) => {
            let fv = eval(env, f)?;
            let args = args.iter().map(|a| eval(env, a)).collect::<Result<Vec<_>, _>>()?;
            apply(&fv, args)
        }
        ExprKind::If(c, a, b) => match eval(env, c)? {
            Value::Bool(true) => eval(env, a),
            Value::Bool(false) => eval(env, b),
            v => stuck(format!("condition is not a boolean: {v}")),
        },
        ExprKind::Fix(f) => {
            let cell = Rc::new(OnceCell::new());
            let v = apply(&eval(env, f)?, vec![Value::FixRef(cell.clone())])?;
            let _ = cell.set(v.clone());
            Ok(v)
        }
        ExprKind::Raise(n, args) => {
            let args = args.iter().map(|a| eval(env, a)).collect::<Result<Vec<_>, _>>()?;
            Ok(Value::Raise(Rc::new((n.clone(), args))))
        }
        ExprKind::Do(d) => Ok(Value::Do(Rc::new(DoVal { block: d.clone(), env: env.clone() }))),
        ExprKind::Widget(w) => Ok(Value::Widget(Rc::new(WidgetVal { expr: w.clone(), env: env.clone() }))),
        ExprKind::Top => Ok(Value::Top),
        ExprKind::TyAbs(_, body) => eval(env, body),
        ExprKind::TyApp(f, ts) => match eval(env, f)? {
            Value::Builtin(b, targs) if targs.is_empty() => Ok(Value::Builtin(b, Rc::new(ts.clone()))),
            v => Ok(v),
        },
        ExprKind::Binary(op, a, b) => binary(*op, &eval(env, a)?, &eval(env, b)?),
        ExprKind::Let(x, _, e1, e2) => {
            let v = eval(env, e1)?;
            eval(&env.bind(x, v), e2)
        }
        ExprKind::LetRec(..) => stuck("internal error: letrec must be desugared before evaluation"),
    }
}

fn binary(op: BinOp, a: &Value, b: &Value) -> Result<Value, EvalError> {
    use Value::{Bool, Int, Str};
    Ok(match (op, a, b) {
        (BinOp::Add, Int(x), Int(y)) => Int(x.wrapping_add(*y)),
        (BinOp::Add, Str(x), Str(y)) => Value::str(&format!("{x}{y}")),
        (BinOp::Sub, Int(x), Int(y)) => Int(x.wrapping_sub(*y)),
        (BinOp::Mul, Int(x), Int(y)) => Int(x.wrapping_mul(*y)),
        (BinOp::Lt, Int(x), Int(y)) => Bool(x < y),
        (BinOp::Le, Int(x), Int(y)) => Bool(x <= y),
        (BinOp::Gt, Int(x), Int(y)) => Bool(x > y),
        (BinOp::Ge, Int(x), Int(y)) => Bool(x >= y),
        (BinOp::Eq, x, y) => Bool(values_equal(x, y)),
        _ => return stuck(format!("operator {} cannot combine {a} and {b}", op.symbol())),
    })
}

/// Equality: structural on data, identity on functions, commands and
/// widgets.
pub fn values_equal(a: &Value, b: &Value) -> bool {
    let (a, b) = match (a.deref(), b.deref()) {
        (Ok(a), Ok(b)) => (a, b),
        _ => return false,
    };
    match (&a, &b) {
        (Value::Unit, Value::Unit) | (Value::Top, Value::Top) => true,
        (Value::Int(x), Value::Int(y)) => x == y,
        (Value::Str(x), Value::Str(y)) => x == y,
        (Value::Bool(x), Value::Bool(y)) => x == y,
        (Value::Location(x), Value::Location(y)) => x == y,
        (Value::List(x), Value::List(y)) => {
            x.len() == y.len() && x.iter().zip(y.iter()).all(|(p, q)| values_equal(p, q))
        }
        (Value::Record(x), Value::Record(y)) => {
            x.len() == y.len() && x.iter().all(|(n, v)| y.iter().any(|(m, w)| n == m && values_equal(v, w)))
        }
        (Value::Raise(x), Value::Raise(y)) => {
            x.0 == y.0 && x.1.len() == y.1.len() && x.1.iter().zip(&y.1).all(|(p, q)| values_equal(p, q))
        }
        (Value::Closure(x), Value::Closure(y)) => Rc::ptr_eq(x, y),
        (Value::Do(x), Value::Do(y)) => Rc::ptr_eq(x, y),
        (Value::Widget(x), Value::Widget(y)) => Rc::ptr_eq(x, y),
        (Value::Command(x), Value::Command(y)) => Rc::ptr_eq(x, y),
        (Value::Instance(x), Value::Instance(y)) => Rc::ptr_eq(x, y),
        (Value::Builtin(x, s), Value::Builtin(y, t)) => x == y && s == t,
        _ => false,
    }
}

/// Applies a function value to arguments.
pub fn apply(f: &Value, args: Vec<Value>) -> Result<Value, EvalError> {
    let cmd = |c: Command| Ok(Value::Command(Rc::new(c)));
    match f.deref()? {
        Value::Closure(c) => {
            if c.params.len() != args.len() {
                return stuck(format!("function expects {} arguments, found {}", c.params.len(), args.len()));
            }
            let env = c.params.iter().zip(args).fold(c.env.clone(), |env, (p, v)| env.bind(p, v));
            eval(&env, &c.body)
        }
        Value::Builtin(b, targs) => {
            let mut args = args.into_iter();
            let mut next = || args.next().ok_or_else(|| EvalError::Stuck(format!("too few arguments to {}", b.name())));
            match b {
                Builtin::Loc => cmd(Command::Loc(next()?)),
                Builtin::Get => cmd(Command::Get(next()?)),
                Builtin::Set => {
                    let l = next()?;
                    cmd(Command::Set(l, next()?))
                }
                Builtin::Head => match next()? {
                    Value::List(xs) => xs.first().cloned().map_or_else(|| stuck("head of the empty list"), Ok),
                    v => stuck(format!("head of a non-list {v}")),
                },
                Builtin::Tail => match next()? {
                    Value::List(xs) if !xs.is_empty() => Ok(Value::List(Rc::new(xs[1..].to_vec()))),
                    Value::List(_) => stuck("tail of the empty list"),
                    v => stuck(format!("tail of a non-list {v}")),
                },
                Builtin::Ctor(kind) => {
                    let args: Vec<Value> = std::iter::from_fn(|| next().ok()).collect();
                    if args.len() != kind.param_shapes().len() {
                        return stuck(format!("{} expects {} arguments", kind.ctor_name(), kind.param_shapes().len()));
                    }
                    cmd(Command::Construct { kind, targs: targs.to_vec(), args })
                }
            }
        }
        Value::Command(c) => match &*c {
            Command::ExtOp { instance, op, args: None } => {
                cmd(Command::ExtOp { instance: instance.clone(), op: op.clone(), args: Some(args) })
            }
            Command::FieldOf { cmd: inner, field, args: None } => {
                cmd(Command::FieldOf { cmd: inner.clone(), field: field.clone(), args: Some(args) })
            }
            _ => stuck("a command is not a function"),
        },
        v => stuck(format!("{v} is not a function")),
    }
}

/// Field reference. Fields of a command denote commands on the widget it
/// yields.
pub fn field(v: &Value, x: &str) -> Result<Value, EvalError> {
    match v.deref()? {
        Value::Record(fs) => match fs.iter().find(|(n, _)| n == x) {
            Some((_, v)) => Ok(v.clone()),
            None => stuck(format!("record has no field {x}")),
        },
        Value::Instance(i) => instance_field(&i, x),
        c if c.is_command() => {
            Ok(Value::Command(Rc::new(Command::FieldOf { cmd: c, field: x.to_string(), args: None })))
        }
        v => stuck(format!("{v} has no field {x}")),
    }
}

/// Field of a widget instance: components and handlers, then those of its
/// parent; external widgets expose their operations.
pub fn instance_field(i: &Rc<Instance>, x: &str) -> Result<Value, EvalError> {
    match &i.body {
        InstanceBody::User { parent, components, handlers, .. } => {
            if let Some((_, v)) = components.iter().find(|(n, _)| n == x) {
                return Ok(v.clone());
            }
            if let Some(h) = handlers.iter().find(|h| h.name == x) {
                return Ok(h.fun.clone());
            }
            instance_field(parent, x)
        }
        InstanceBody::External { kind, .. } => match kind.op_arity(x) {
            Some(0) => Ok(Value::Command(Rc::new(Command::ExtOp {
                instance: i.clone(),
                op: x.to_string(),
                args: Some(Vec::new()),
            }))),
            Some(_) => {
                Ok(Value::Command(Rc::new(Command::ExtOp { instance: i.clone(), op: x.to_string(), args: None })))
            }
            None => stuck(format!("{} has no field {x}", kind.type_name())),
        },
        InstanceBody::Top => stuck(format!("Top has no field {x}")),
    }
}

/// The environment of a program's top-level definitions. All definitions
/// are mutually recursive; functions are available before values, and
/// values are computed in source order.
pub fn program_env(p: &Program) -> Result<Env, EvalError> {
    let p = desugar(p);
    let mut env = Env::builtins();
    let mut cells = Vec::new();
    for item in &p.items {
        if matches!(item, Item::Type(_)) {
            continue;
        }
        let cell = Rc::new(OnceCell::new());
        env = env.bind(item.name(), Value::FixRef(cell.clone()));
        cells.push((item, cell));
    }
    for (item, cell) in &cells {
        if let Item::Fun(f) = item {
            let _ = cell.set(Value::Closure(Rc::new(Closure {
                params: f.params.iter().map(|p| p.name.clone()).collect(),
                body: f.body.clone(),
                env: env.clone(),
            })));
        }
    }
    for (item, cell) in &cells {
        if let Item::Val(v) = item {
            let _ = cell.set(eval(&env, &v.body)?);
        }
    }
    Ok(env)
}

/// The command a program runs: its entry value, or its entry function
/// applied to no arguments.
pub fn entry_command(p: &Program, env: &Env) -> Result<Value, EvalError> {
    match p.item(&p.entry) {
        Some(Item::Fun(f)) if f.params.is_empty() => apply(&env.lookup(&p.entry)?, Vec::new()),
        Some(Item::Val(_)) => env.lookup(&p.entry),
        _ => stuck(format!("no runnable entry {}", p.entry)),
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Unit => f.write_str("*"),
            Value::Int(n) => write!(f, "{n}"),
            Value::Str(s) => write!(f, "'{s}'"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::List(xs) => {
                f.write_str("[")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str("]")
            }
            Value::Record(fs) => {
                f.write_str("{")?;
                for (i, (n, v)) in fs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(";")?;
                    }
                    write!(f, "{n}={v}")?;
                }
                f.write_str("}")
            }
            Value::Closure(_) => f.write_str("<function>"),
            Value::Raise(r) => {
                write!(f, "raise {}(", r.0)?;
                for (i, a) in r.1.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            Value::Do(_) => f.write_str("<do>"),
            Value::Widget(_) => f.write_str("<widget>"),
            Value::Top => f.write_str("top"),
            Value::Builtin(b, _) => f.write_str(b.name()),
            Value::Command(_) => f.write_str("<command>"),
            Value::Location(l) => write!(f, "!{l}"),
            Value::Instance(i) => write!(f, "<widget {}>", i.id),
            Value::FixRef(cell) => match cell.get() {
                Some(v) => write!(f, "{v}"),
                None => f.write_str("<unready>"),
            },
        }
    }
}
