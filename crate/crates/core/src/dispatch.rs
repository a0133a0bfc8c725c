//! Displaying widget trees and delivering events to the most specific
//! handler.

use std::collections::{BTreeMap, VecDeque};
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use crate::eval::{apply, EvalError, Value};
use crate::externals::provider::Directive;
use crate::runtime::{plain_text, Event, ExternalState, Instance, InstanceBody, Outcome, Runtime, RuntimeError};

/// A displayable external widget with its displayable descendants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisplayNode {
    pub id: u64,
    pub kind: String,
    #[serde(default)]
    pub props: BTreeMap<String, serde_json::Value>,
    #[serde(default)]
    pub children: Vec<DisplayNode>,
}

impl DisplayNode {
    /// Nodes in pre-order.
    pub fn walk(&self) -> Vec<&DisplayNode> {
        let mut out = vec![self];
        for c in &self.children {
            out.extend(c.walk());
        }
        out
    }

    pub fn prop_str(&self, name: &str) -> Option<&str> {
        self.props.get(name).and_then(|v| v.as_str())
    }

    /// The visible caption: a button label, label text or window title.
    pub fn caption(&self) -> Option<&str> {
        ["label", "text", "title"].iter().find_map(|p| self.prop_str(p))
    }
}

fn json_of(v: &Value) -> serde_json::Value {
    match v {
        Value::Int(n) => serde_json::Value::from(*n),
        Value::Bool(b) => serde_json::Value::from(*b),
        other => serde_json::Value::from(plain_text(other)),
    }
}

/// The display tree of an instance: user widgets are transparent and show
/// their parent; `Top` shows nothing.
pub fn project(inst: &Instance, rt: &Runtime) -> Option<DisplayNode> {
    match &inst.body {
        InstanceBody::User { parent, .. } => project(parent, rt),
        InstanceBody::Top => None,
        InstanceBody::External { kind, props, children, .. } => {
            let mut map = BTreeMap::new();
            match rt.states.get(&inst.id) {
                Some(ExternalState::AddScreen { name, address, records }) => {
                    map.insert("name".into(), name.as_str().into());
                    map.insert("address".into(), address.as_str().into());
                    let text: Vec<String> = records.iter().map(|(k, v)| format!("{k}: {v}")).collect();
                    map.insert("records".into(), text.join("\n").into());
                    map.insert("count".into(), records.len().into());
                }
                _ => {
                    for (n, v) in props {
                        map.insert(n.clone(), json_of(v));
                    }
                }
            }
            Some(DisplayNode {
                id: inst.id,
                kind: kind.ctor_name().to_string(),
                props: map,
                children: children.iter().filter_map(|c| project(c, rt)).collect(),
            })
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DispatchError {
    #[error("no handler found for event {name} with {arity} arguments")]
    NoHandler { name: String, arity: usize },
    #[error("no widget with id {0} in the tree")]
    NoTarget(u64),
    #[error("handler {0} did not yield a widget")]
    BadResult(String),
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
}

impl From<EvalError> for DispatchError {
    fn from(e: EvalError) -> Self {
        DispatchError::Runtime(RuntimeError::Eval(e))
    }
}

/// The chain of instances from `root` down to the widget `id`, with the
/// child index taken at each step.
fn path_to(root: &Rc<Instance>, id: u64) -> Option<(Vec<Rc<Instance>>, Vec<usize>)> {
    if root.id == id {
        return Some((vec![root.clone()], Vec::new()));
    }
    for (i, c) in root.children().iter().enumerate() {
        if let Some((mut nodes, mut idx)) = path_to(c, id) {
            nodes.insert(0, root.clone());
            idx.insert(0, i);
            return Some((nodes, idx));
        }
    }
    None
}

/// The first external widget, in pre-order, that raises the event itself.
fn context_source(root: &Rc<Instance>, name: &str, arity: usize) -> Option<u64> {
    if let Some(k) = root.external_kind() {
        if k.own_raises().contains_key(name, arity) {
            return Some(root.id);
        }
    }
    root.children().iter().find_map(|c| context_source(c, name, arity))
}

/// Resolves the widget an untargeted platform event comes from.
pub fn resolve_context(root: &Rc<Instance>, e: &Event) -> Event {
    let target = e.target.or_else(|| context_source(root, &e.name, e.args.len())).or(Some(root.id));
    Event { target, ..e.clone() }
}

/// The owner of the handler for an event: the deepest user widget on the
/// path to the target defining a handler of that name and arity, among the
/// first `limit` nodes of the path.
pub fn find_handler(nodes: &[Rc<Instance>], name: &str, arity: usize, limit: usize) -> Option<usize> {
    (0..limit.min(nodes.len())).rev().find(|&k| nodes[k].handler(name, arity).is_some())
}

/// Delivers an event and returns the new root. A raised event is passed on
/// to the containers above the widget whose handler raised it.
pub fn process_event(rt: &mut Runtime, root: &Rc<Instance>, event: &Event) -> Result<Rc<Instance>, DispatchError> {
    let event = resolve_context(root, event);
    let target = event.target.unwrap_or(root.id);
    let (nodes, idx) = path_to(root, target).ok_or(DispatchError::NoTarget(target))?;
    let (mut name, mut args) = (event.name.clone(), event.args.clone());
    let mut limit = nodes.len();
    loop {
        let Some(k) = find_handler(&nodes, &name, args.len(), limit) else {
            return Err(DispatchError::NoHandler { name, arity: args.len() });
        };
        let handler = nodes[k].handler(&name, args.len()).expect("found above");
        let cmd = apply(&handler.fun, args.clone())?;
        match rt.perform(&cmd)? {
            Outcome::Value(Value::Instance(new)) => return Ok(splice(&nodes[..k], &idx[..k], new)),
            Outcome::Value(Value::Unit) => return Ok(root.clone()),
            Outcome::Value(_) => return Err(DispatchError::BadResult(name)),
            Outcome::Raised(e) => {
                name = e.name;
                args = e.args;
                limit = k;
            }
        }
    }
}

/// Rebuilds the ancestors of a replaced widget; they keep their ids.
fn splice(ancestors: &[Rc<Instance>], idx: &[usize], new: Rc<Instance>) -> Rc<Instance> {
    ancestors.iter().zip(idx).rev().fold(new, |child, (a, &i)| Rc::new(a.with_child(i, child)))
}

/// An input from the environment of a running program.
#[derive(Clone, Debug)]
pub enum Input {
    Event(Event),
    SetField { id: u64, field: String, text: String },
    Provider(Directive),
}

/// Where frames go and inputs come from.
pub trait Backend {
    fn show(&mut self, frame: Option<&DisplayNode>) -> Result<(), DispatchError>;
    /// The next input, or `None` when the session is over. `frame` is the
    /// current display.
    fn next(&mut self, frame: Option<&DisplayNode>) -> Result<Option<Input>, DispatchError>;
}

/// The display-wait-process cycle. Shows the initial frame, then one frame
/// per processed event; returns the final root.
pub fn run_loop(
    rt: &mut Runtime,
    root: Rc<Instance>,
    backend: &mut dyn Backend,
) -> Result<Rc<Instance>, DispatchError> {
    let mut root = root;
    let mut frame = project(&root, rt);
    backend.show(frame.as_ref())?;
    let mut queue: VecDeque<Event> = rt.pending.drain(..).collect();
    loop {
        while let Some(e) = queue.pop_front() {
            root = process_event(rt, &root, &e)?;
            queue.extend(rt.pending.drain(..));
            frame = project(&root, rt);
            backend.show(frame.as_ref())?;
        }
        match backend.next(frame.as_ref())? {
            None => return Ok(root),
            Some(Input::Event(e)) => queue.push_back(e),
            Some(Input::SetField { id, field, text }) => rt.set_field(id, &field, &text)?,
            Some(Input::Provider(d)) => rt.provider_step(&d),
        }
        queue.extend(rt.pending.drain(..));
    }
}
