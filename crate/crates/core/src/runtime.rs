//! Performing commands against the runtime state: locations, widget
//! instantiation and the state of external widgets.

use std::cell::OnceCell;
use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::path::{Path, PathBuf};
use std::rc::Rc;

use crate::eval::{apply, eval, instance_field, Command, EvalError, Value, WidgetVal};
use crate::externals::db::{Column, DbError, DbState, Scalar};
use crate::externals::provider::{Directive, ProviderSim};
use crate::externals::{ExternalKind, ParamShape};
use crate::syntax::WidgetDef;
use crate::types::Type;

/// An event handler of a widget instance.
#[derive(Clone, Debug)]
pub struct Handler {
    pub name: String,
    pub arity: usize,
    pub fun: Value,
}

/// A performed widget.
#[derive(Debug)]
pub struct Instance {
    pub id: u64,
    pub body: InstanceBody,
}

#[derive(Debug)]
pub enum InstanceBody {
    User {
        self_name: String,
        parent: Rc<Instance>,
        components: Vec<(String, Value)>,
        handlers: Vec<Handler>,
    },
    External {
        kind: ExternalKind,
        type_args: Vec<Type>,
        /// Scalar constructor arguments shown on the display.
        props: Vec<(String, Value)>,
        children: Vec<Rc<Instance>>,
    },
    Top,
}

impl Instance {
    /// Widgets directly below this one: the parent and component widgets
    /// of a user widget, the children of an external widget.
    pub fn children(&self) -> Vec<Rc<Instance>> {
        match &self.body {
            InstanceBody::User { parent, components, .. } => std::iter::once(parent.clone())
                .chain(components.iter().filter_map(|(_, v)| v.as_instance().cloned()))
                .collect(),
            InstanceBody::External { children, .. } => children.clone(),
            InstanceBody::Top => Vec::new(),
        }
    }

    /// A copy with the `idx`-th child (as numbered by `children`) replaced;
    /// the copy keeps this instance's id.
    pub fn with_child(&self, idx: usize, new: Rc<Instance>) -> Instance {
        let body = match &self.body {
            InstanceBody::User { self_name, parent, components, handlers } => {
                let mut parent = parent.clone();
                let mut components = components.clone();
                if idx == 0 {
                    parent = new;
                } else {
                    let mut k = 0;
                    for (_, v) in components.iter_mut() {
                        if v.as_instance().is_some() {
                            k += 1;
                            if k == idx {
                                *v = Value::Instance(new.clone());
                            }
                        }
                    }
                }
                InstanceBody::User { self_name: self_name.clone(), parent, components, handlers: handlers.clone() }
            }
            InstanceBody::External { kind, type_args, props, children } => {
                let mut children = children.clone();
                children[idx] = new;
                InstanceBody::External { kind: *kind, type_args: type_args.clone(), props: props.clone(), children }
            }
            InstanceBody::Top => InstanceBody::Top,
        };
        Instance { id: self.id, body }
    }

    pub fn handler(&self, name: &str, arity: usize) -> Option<&Handler> {
        match &self.body {
            InstanceBody::User { handlers, .. } => handlers.iter().find(|h| h.name == name && h.arity == arity),
            _ => None,
        }
    }

    pub fn external_kind(&self) -> Option<ExternalKind> {
        match &self.body {
            InstanceBody::External { kind, .. } => Some(*kind),
            _ => None,
        }
    }
}

/// An event raised by a widget or delivered from the platform.
#[derive(Clone, Debug)]
pub struct Event {
    /// The widget the event originates from; `None` for events raised by
    /// a handler body.
    pub target: Option<u64>,
    pub name: String,
    pub args: Vec<Value>,
}

#[derive(Clone, Debug)]
pub enum Outcome {
    Value(Value),
    Raised(Event),
}

#[derive(Debug, thiserror::Error)]
pub enum RuntimeError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Db(#[from] DbError),
    #[error("{0}")]
    Stuck(String),
}

fn stuck<T>(m: impl Into<String>) -> Result<T, RuntimeError> {
    Err(RuntimeError::Stuck(m.into()))
}

/// Mutable state of an external widget.
#[derive(Clone, Debug, PartialEq)]
pub enum ExternalState {
    Db(DbState),
    Notifier { connected: bool },
    AddScreen { name: String, address: String, records: Vec<(String, String)> },
}

pub struct Runtime {
    store: Vec<Value>,
    next_id: u64,
    /// Instances of performed widget values and constructor commands,
    /// keyed by value identity. The value is kept so its address stays
    /// unique.
    memo: HashMap<usize, (Value, Rc<Instance>)>,
    building: HashSet<usize>,
    pub states: BTreeMap<u64, ExternalState>,
    pub provider: ProviderSim,
    pub data_dir: PathBuf,
    /// Platform events waiting for delivery.
    pub pending: VecDeque<Event>,
}

impl Runtime {
    pub fn new(data_dir: &Path, provider: ProviderSim) -> Runtime {
        Runtime {
            store: Vec::new(),
            next_id: 0,
            memo: HashMap::new(),
            building: HashSet::new(),
            states: BTreeMap::new(),
            provider,
            data_dir: data_dir.to_path_buf(),
            pending: VecDeque::new(),
        }
    }

    /// Contents of a location.
    pub fn load(&self, l: u64) -> Option<&Value> {
        self.store.get(l as usize)
    }

    fn alloc_id(&mut self) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    /// Performs a command value.
    pub fn perform(&mut self, v: &Value) -> Result<Outcome, RuntimeError> {
        match v.deref()? {
            Value::Do(d) => {
                let mut env = d.env.clone();
                for b in &d.block.bindings {
                    let c = eval(&env, &b.expr)?;
                    match self.perform(&c)? {
                        Outcome::Value(x) => env = env.bind(&b.name, x),
                        raised => return Ok(raised),
                    }
                }
                Ok(Outcome::Value(eval(&env, &d.block.ret)?))
            }
            Value::Raise(r) => Ok(Outcome::Raised(Event { target: None, name: r.0.clone(), args: r.1.clone() })),
            Value::Top => {
                let id = self.alloc_id();
                Ok(Outcome::Value(Value::Instance(Rc::new(Instance { id, body: InstanceBody::Top }))))
            }
            Value::Widget(w) => {
                let key = Rc::as_ptr(&w) as usize;
                self.memoized(key, v, |rt| rt.instantiate(&w))
            }
            Value::Command(c) => match &*c {
                Command::Construct { kind, targs, args } => {
                    let key = Rc::as_ptr(&c) as usize;
                    self.memoized(key, v, |rt| rt.construct(*kind, targs, args))
                }
                other => self.perform_primitive(other),
            },
            other => stuck(format!("{other} is not a command")),
        }
    }

    fn memoized(
        &mut self,
        key: usize,
        v: &Value,
        build: impl FnOnce(&mut Runtime) -> Result<Outcome, RuntimeError>,
    ) -> Result<Outcome, RuntimeError> {
        if let Some((_, inst)) = self.memo.get(&key) {
            return Ok(Outcome::Value(Value::Instance(inst.clone())));
        }
        if !self.building.insert(key) {
            return stuck("a widget contains itself");
        }
        let r = build(self);
        self.building.remove(&key);
        let out = r?;
        if let Outcome::Value(Value::Instance(inst)) = &out {
            self.memo.insert(key, (v.clone(), inst.clone()));
        }
        Ok(out)
    }

    fn perform_instance(&mut self, v: &Value) -> Result<Result<Rc<Instance>, Event>, RuntimeError> {
        match self.perform(v)? {
            Outcome::Value(Value::Instance(i)) => Ok(Ok(i)),
            Outcome::Value(other) => stuck(format!("expected a widget, found {other}")),
            Outcome::Raised(e) => Ok(Err(e)),
        }
    }

    fn instantiate(&mut self, w: &WidgetVal) -> Result<Outcome, RuntimeError> {
        let x = &w.expr;
        if x.defs.is_empty() {
            let parent = eval(&w.env, &x.parent)?;
            return self.perform(&parent);
        }
        let self_cell = Rc::new(OnceCell::new());
        let mut env = w.env.bind(&x.self_name, Value::FixRef(self_cell.clone()));
        let mut components = Vec::new();
        let mut handler_defs = Vec::new();
        for d in &x.defs {
            let WidgetDef::Bind(b) = d else { return stuck("internal error: handler sugar reached the runtime") };
            if let Type::Fun(ps, _) = &b.ty {
                handler_defs.push((b, ps.len()));
                continue;
            }
            let c = eval(&env, &b.expr)?;
            match self.perform(&c)? {
                Outcome::Value(v) => {
                    env = env.bind(&b.name, v.clone());
                    components.push((b.name.clone(), v));
                }
                raised => return Ok(raised),
            }
        }
        let mut cells = Vec::new();
        for (b, _) in &handler_defs {
            let cell = Rc::new(OnceCell::new());
            env = env.bind(&b.name, Value::FixRef(cell.clone()));
            cells.push(cell);
        }
        let mut handlers = Vec::new();
        for ((b, arity), cell) in handler_defs.iter().zip(&cells) {
            let c = eval(&env, &b.expr)?;
            match self.perform(&c)? {
                Outcome::Value(f) => {
                    let _ = cell.set(f.clone());
                    handlers.push(Handler { name: b.name.clone(), arity: *arity, fun: f });
                }
                raised => return Ok(raised),
            }
        }
        let pcmd = eval(&env, &x.parent)?;
        let parent = match self.perform_instance(&pcmd)? {
            Ok(p) => p,
            Err(e) => return Ok(Outcome::Raised(e)),
        };
        let id = self.alloc_id();
        let inst = Rc::new(Instance {
            id,
            body: InstanceBody::User { self_name: x.self_name.clone(), parent, components, handlers },
        });
        let _ = self_cell.set(Value::Instance(inst.clone()));
        Ok(Outcome::Value(Value::Instance(inst)))
    }

    fn construct(&mut self, kind: ExternalKind, targs: &[Type], args: &[Value]) -> Result<Outcome, RuntimeError> {
        let mut children = Vec::new();
        let mut plain = Vec::new();
        for (shape, a) in kind.param_shapes().into_iter().zip(args) {
            match shape {
                ParamShape::Plain => plain.push(a.deref()?),
                ParamShape::Command => match self.perform_instance(a)? {
                    Ok(i) => children.push(i),
                    Err(e) => return Ok(Outcome::Raised(e)),
                },
                ParamShape::CommandList => {
                    let Value::List(items) = a.deref()? else { return stuck("expected a list of commands") };
                    for item in items.iter() {
                        match self.perform_instance(item)? {
                            Ok(i) => children.push(i),
                            Err(e) => return Ok(Outcome::Raised(e)),
                        }
                    }
                }
            }
        }
        let names: &[&str] = match kind {
            ExternalKind::Button => &["label"],
            ExternalKind::Label => &["text"],
            ExternalKind::Clock => &["x", "y"],
            ExternalKind::Notifier => &["port"],
            ExternalKind::Db => &["file"],
            ExternalKind::AddScreen => &["records"],
            ExternalKind::Screen => &["x", "y", "w", "h"],
            ExternalKind::Window | ExternalKind::Phone => &["title"],
        };
        let props: Vec<(String, Value)> = names.iter().map(|n| n.to_string()).zip(plain.iter().cloned()).collect();
        let id = self.alloc_id();
        match kind {
            ExternalKind::Db => {
                let Some(Value::Str(file)) = plain.first() else { return stuck("db expects a file name") };
                let col = |i: usize| match targs.get(i) {
                    None => Ok(Column::Str),
                    Some(t) => Column::from_type(t)
                        .ok_or_else(|| RuntimeError::Stuck(format!("db column type {t} is not a scalar"))),
                };
                let state = DbState::open(&self.data_dir.join(&**file), col(0)?, col(1)?)?;
                self.states.insert(id, ExternalState::Db(state));
            }
            ExternalKind::Notifier => {
                self.states.insert(id, ExternalState::Notifier { connected: false });
            }
            ExternalKind::AddScreen => {
                let records = match plain.first() {
                    Some(Value::List(rs)) => rs.iter().map(record_pair).collect(),
                    _ => Vec::new(),
                };
                self.states
                    .insert(id, ExternalState::AddScreen { name: String::new(), address: String::new(), records });
            }
            _ => {}
        }
        let inst = Instance { id, body: InstanceBody::External { kind, type_args: targs.to_vec(), props, children } };
        Ok(Outcome::Value(Value::Instance(Rc::new(inst))))
    }

    fn perform_primitive(&mut self, c: &Command) -> Result<Outcome, RuntimeError> {
        let done = |v: Value| Ok(Outcome::Value(v));
        match c {
            Command::Loc(v) => {
                self.store.push(v.deref()?);
                done(Value::Location(self.store.len() as u64 - 1))
            }
            Command::Get(l) => match l.deref()? {
                Value::Location(i) => done(self.store[i as usize].clone()),
                other => stuck(format!("get of a non-location {other}")),
            },
            Command::Set(l, v) => match l.deref()? {
                Value::Location(i) => {
                    let v = v.deref()?;
                    self.store[i as usize] = v.clone();
                    done(v)
                }
                other => stuck(format!("set of a non-location {other}")),
            },
            Command::ExtOp { instance, op, args } => {
                let Some(args) = args else { return stuck(format!("operation {op} needs arguments")) };
                done(self.ext_op(instance, op, args)?)
            }
            Command::FieldOf { cmd, field, args } => {
                let inst = match self.perform_instance(cmd)? {
                    Ok(i) => i,
                    Err(e) => return Ok(Outcome::Raised(e)),
                };
                let mut f = instance_field(&inst, field)?;
                if let Some(args) = args {
                    f = apply(&f, args.clone())?;
                }
                if f.is_command() {
                    self.perform(&f)
                } else {
                    done(f)
                }
            }
            Command::Construct { .. } => stuck("internal error: constructors are performed through the memo"),
        }
    }

    fn ext_op(&mut self, inst: &Rc<Instance>, op: &str, args: &[Value]) -> Result<Value, RuntimeError> {
        let id = inst.id;
        let args: Vec<Value> = args.iter().map(|a| a.deref()).collect::<Result<_, _>>()?;
        let Some(state) = self.states.get_mut(&id) else { return stuck(format!("widget {id} has no state")) };
        match (state, op, args.as_slice()) {
            (ExternalState::Notifier { connected }, "connect", []) => {
                *connected = true;
                Ok(Value::Bool(true))
            }
            (ExternalState::Notifier { connected }, "register", [Value::Str(addr)]) => {
                if !*connected {
                    return Ok(Value::Bool(false));
                }
                let entered = self.provider.register_self(addr, id);
                self.announce(entered);
                Ok(Value::Bool(true))
            }
            (ExternalState::Notifier { .. }, "move", [Value::Int(x), Value::Int(y)]) => {
                let entered = self.provider.move_self(*x, *y);
                self.announce(entered);
                Ok(Value::Bool(true))
            }
            (ExternalState::Db(db), "records", []) => Ok(Value::List(Rc::new(
                db.records
                    .iter()
                    .map(|(k, v)| {
                        Value::Record(Rc::new(vec![("key".into(), scalar_value(k)), ("val".into(), scalar_value(v))]))
                    })
                    .collect(),
            ))),
            (ExternalState::Db(db), "update", [k, v]) => {
                let (ks, vs) = (to_scalar(k)?, to_scalar(v)?);
                db.update(ks, vs)?;
                Ok(v.clone())
            }
            (ExternalState::Db(db), "delete", [k]) => Ok(Value::Bool(db.delete(&to_scalar(k)?)?)),
            (ExternalState::AddScreen { name, .. }, "name", []) => Ok(Value::str(name)),
            (ExternalState::AddScreen { address, .. }, "address", []) => Ok(Value::str(address)),
            (_, op, _) => stuck(format!("unsupported operation {op} on widget {id}")),
        }
    }

    fn announce(&mut self, entered: Vec<String>) {
        let Some(n) = self.provider.notifier else { return };
        for addr in entered {
            self.pending.push_back(Event { target: Some(n), name: "notify".into(), args: vec![Value::str(&addr)] });
        }
    }

    /// Applies a scripted peer action of the service provider.
    pub fn provider_step(&mut self, d: &Directive) {
        let entered = self.provider.step(d);
        self.announce(entered);
    }

    /// Sets a text field of an input widget.
    pub fn set_field(&mut self, id: u64, field: &str, text: &str) -> Result<(), RuntimeError> {
        match (self.states.get_mut(&id), field) {
            (Some(ExternalState::AddScreen { name, .. }), "name") => *name = text.to_string(),
            (Some(ExternalState::AddScreen { address, .. }), "address") => *address = text.to_string(),
            _ => return stuck(format!("widget {id} has no text field {field}")),
        }
        Ok(())
    }
}

fn record_pair(v: &Value) -> (String, String) {
    let get = |n: &str| match v {
        Value::Record(fs) => fs.iter().find(|(m, _)| m == n).map(|(_, x)| plain_text(x)).unwrap_or_default(),
        _ => String::new(),
    };
    (get("key"), get("val"))
}

/// Text of a scalar value without quotes.
pub fn plain_text(v: &Value) -> String {
    match v {
        Value::Str(s) => s.to_string(),
        other => other.to_string(),
    }
}

fn scalar_value(s: &Scalar) -> Value {
    match s {
        Scalar::Str(s) => Value::str(s),
        Scalar::Int(n) => Value::Int(*n),
        Scalar::Bool(b) => Value::Bool(*b),
    }
}

fn to_scalar(v: &Value) -> Result<Scalar, RuntimeError> {
    match v {
        Value::Str(s) => Ok(Scalar::Str(s.to_string())),
        Value::Int(n) => Ok(Scalar::Int(*n)),
        Value::Bool(b) => Ok(Scalar::Bool(*b)),
        other => stuck(format!("{other} cannot be stored in a database")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{entry_command, program_env, Env};
    use crate::externals::provider::DEFAULT_RANGE;
    use crate::syntax::{desugar_expr, parse_expr, parse_program};

    const COUNTERS: &str = "\
        fun add1(l:!int):<int> = do { x:int <- get[int](l); y:int <- set[int](l,x+1) return y }\n\
        fun add2(l:!int):<int> = do { x:int <- add1(l); y:int <- add1(l) return y }\n\
        val main:<Top> = top";

    fn runtime() -> (tempfile::TempDir, Runtime) {
        let dir = tempfile::tempdir().unwrap();
        let rt = Runtime::new(dir.path(), ProviderSim::new(DEFAULT_RANGE));
        (dir, rt)
    }

    fn reduce(env: &Env, src: &str) -> Value {
        eval(env, &desugar_expr(&Rc::new(parse_expr(src).unwrap()))).unwrap()
    }

    fn value(o: Outcome) -> Value {
        match o {
            Outcome::Value(v) => v,
            Outcome::Raised(e) => panic!("raised {}", e.name),
        }
    }

    fn int(v: &Value) -> i64 {
        match v.deref().unwrap() {
            Value::Int(n) => n,
            other => panic!("not an int: {other}"),
        }
    }

    fn location(rt: &mut Runtime, env: &Env, n: i64) -> u64 {
        match value(rt.perform(&reduce(env, &format!("loc[int]({n})"))).unwrap()) {
            Value::Location(l) => l,
            other => panic!("not a location: {other}"),
        }
    }

    fn counters() -> Env {
        program_env(&parse_program(COUNTERS).unwrap()).unwrap()
    }

    #[test]
    fn add1_increments_the_location() {
        let (_d, mut rt) = runtime();
        let env = counters();
        let l = location(&mut rt, &env, 0);
        let cmd = apply(&env.lookup("add1").unwrap(), vec![Value::Location(l)]).unwrap();
        assert_eq!(int(&value(rt.perform(&cmd).unwrap())), 1);
        assert_eq!(int(rt.load(l).unwrap()), 1);
    }

    #[test]
    fn add2_nests_two_increments() {
        let (_d, mut rt) = runtime();
        let env = counters();
        let l = location(&mut rt, &env, 0);
        let cmd = apply(&env.lookup("add2").unwrap(), vec![Value::Location(l)]).unwrap();
        assert_eq!(int(&value(rt.perform(&cmd).unwrap())), 2);
        assert_eq!(int(rt.load(l).unwrap()), 2);
    }

    #[test]
    fn pure_return_yields_its_value() {
        let (_d, mut rt) = runtime();
        assert_eq!(int(&value(rt.perform(&reduce(&Env::builtins(), "do { return 5 }")).unwrap())), 5);
        assert!(rt.load(0).is_none());
    }

    #[test]
    fn loc_get_and_set() {
        let (_d, mut rt) = runtime();
        let env = Env::builtins();
        let l = location(&mut rt, &env, 42);
        assert_eq!(int(rt.load(l).unwrap()), 42);
        let env = env.bind("l", Value::Location(l));
        assert_eq!(int(&value(rt.perform(&reduce(&env, "get[int](l)")).unwrap())), 42);
        assert_eq!(int(&value(rt.perform(&reduce(&env, "set[int](l,7)")).unwrap())), 7);
        assert_eq!(int(rt.load(l).unwrap()), 7);
    }

    #[test]
    fn raise_is_reported_with_its_arguments() {
        let (_d, mut rt) = runtime();
        match rt.perform(&reduce(&Env::builtins(), "raise notify('a')")).unwrap() {
            Outcome::Raised(e) => {
                assert_eq!(e.name, "notify");
                assert_eq!(e.args.len(), 1);
            }
            Outcome::Value(v) => panic!("returned {v}"),
        }
    }

    fn ids(i: &Rc<Instance>, out: &mut Vec<u64>) {
        for c in i.children() {
            ids(&c, out);
        }
        out.push(i.id);
    }

    fn perform_program(rt: &mut Runtime, src: &str) -> Rc<Instance> {
        let p = parse_program(src).unwrap();
        let env = program_env(&p).unwrap();
        let cmd = entry_command(&p, &env).unwrap();
        value(rt.perform(&cmd).unwrap()).as_instance().unwrap().clone()
    }

    fn example1() -> String {
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/example1.wdg")).unwrap()
    }

    #[test]
    fn example1_allocates_four_fresh_ids_in_post_order() {
        let (_d, mut rt) = runtime();
        let root = perform_program(&mut rt, &example1());
        let mut seen = Vec::new();
        ids(&root, &mut seen);
        assert_eq!(seen, vec![0, 1, 2, 3]);
    }

    #[test]
    fn performing_is_deterministic() {
        let (_d, mut a) = runtime();
        let (_e, mut b) = runtime();
        let (mut x, mut y) = (Vec::new(), Vec::new());
        ids(&perform_program(&mut a, &example1()), &mut x);
        ids(&perform_program(&mut b, &example1()), &mut y);
        assert_eq!(x, y);
    }

    #[test]
    fn same_widget_value_keeps_its_identity() {
        let (_d, mut rt) = runtime();
        let w = reduce(&Env::builtins(), "widget (button('x')) { push(i:int):<*> = raise go() }");
        let a = value(rt.perform(&w).unwrap());
        let b = value(rt.perform(&w).unwrap());
        assert_eq!(a.as_instance().unwrap().id, b.as_instance().unwrap().id);
        let other = reduce(&Env::builtins(), "widget (button('x')) { push(i:int):<*> = raise go() }");
        let c = value(rt.perform(&other).unwrap());
        assert_ne!(a.as_instance().unwrap().id, c.as_instance().unwrap().id);
    }

    #[test]
    fn empty_widget_body_behaves_as_its_parent() {
        let (_d, mut a) = runtime();
        let (_e, mut b) = runtime();
        let wrapped = value(a.perform(&reduce(&Env::builtins(), "widget (button('x')) {}")).unwrap());
        let plain = value(b.perform(&reduce(&Env::builtins(), "button('x')")).unwrap());
        let (wrapped, plain) = (wrapped.as_instance().unwrap().clone(), plain.as_instance().unwrap().clone());
        assert_eq!(crate::dispatch::project(&wrapped, &a), crate::dispatch::project(&plain, &b));
        assert!(wrapped.handler("push", 1).is_none());
    }

    #[test]
    fn widget_over_top_is_rooted_at_top() {
        let (_d, mut rt) = runtime();
        let i = value(rt.perform(&reduce(&Env::builtins(), "widget (top) {}")).unwrap());
        let mut node = i.as_instance().unwrap().clone();
        while let InstanceBody::User { parent, .. } = &node.body {
            node = parent.clone();
        }
        assert!(matches!(node.body, InstanceBody::Top));
    }
}
