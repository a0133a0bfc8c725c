//! Running programs against scripted inputs and recording the frames they
//! display.

pub mod server;

use std::collections::VecDeque;
use std::path::PathBuf;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use crate::diag::Diagnostic;
use crate::dispatch::{run_loop, Backend, DispatchError, DisplayNode, Input};
use crate::eval::{entry_command, program_env, EvalError, Value};
use crate::externals::provider::{Directive, ProviderSim, DEFAULT_RANGE};
use crate::runtime::{Event, Instance, Outcome, Runtime, RuntimeError};
use crate::syntax::Program;
use crate::typecheck::check_runnable;

/// Picks one node of the current display.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Select {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    /// Matches a button label, label text or window title.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<u64>,
    /// Child indices from the root.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<Vec<usize>>,
}

impl Select {
    pub fn label(text: &str) -> Select {
        Select { label: Some(text.into()), ..Select::default() }
    }

    pub fn kind(kind: &str) -> Select {
        Select { kind: Some(kind.into()), ..Select::default() }
    }

    fn matches(&self, n: &DisplayNode, path: &[usize]) -> bool {
        self.kind.as_ref().is_none_or(|k| *k == n.kind)
            && self.label.as_ref().is_none_or(|l| n.caption() == Some(l.as_str()))
            && self.id.is_none_or(|i| i == n.id)
            && self.path.as_ref().is_none_or(|p| p == path)
    }

    /// All matching nodes.
    pub fn find<'a>(&self, root: &'a DisplayNode) -> Vec<&'a DisplayNode> {
        let mut out = Vec::new();
        self.collect(root, &mut Vec::new(), &mut out);
        out
    }

    fn collect<'a>(&self, n: &'a DisplayNode, path: &mut Vec<usize>, out: &mut Vec<&'a DisplayNode>) {
        if self.matches(n, path) {
            out.push(n);
        }
        for (i, c) in n.children.iter().enumerate() {
            path.push(i);
            self.collect(c, path, out);
            path.pop();
        }
    }

    /// The single matching node.
    pub fn resolve<'a>(&self, frame: Option<&'a DisplayNode>) -> Result<&'a DisplayNode, HarnessError> {
        let root = frame.ok_or_else(|| HarnessError::Select("nothing is displayed".into()))?;
        match self.find(root).as_slice() {
            [one] => Ok(one),
            [] => Err(HarnessError::Select(format!("no node matches {}", self.describe()))),
            many => Err(HarnessError::Select(format!("{} nodes match {}", many.len(), self.describe()))),
        }
    }

    fn describe(&self) -> String {
        serde_json::to_string(self).unwrap_or_default()
    }
}

/// One step of a test script.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Step {
    /// A user interaction with a displayed widget. A `push` carries the
    /// target id unless `args` are given.
    UiEvent {
        select: Select,
        name: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        args: Option<Vec<serde_json::Value>>,
    },
    /// An event from the platform, delivered to the widget that raises it.
    ContextEvent {
        name: String,
        #[serde(default)]
        args: Vec<serde_json::Value>,
    },
    /// Typing into a text field.
    SetField { select: Select, field: String, text: String },
    /// An action of the simulated service provider.
    Provider { directive: Directive },
    /// An assertion on the current display.
    Expect {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        root_kind: Option<String>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        contains: Vec<Select>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        absent: Vec<Select>,
    },
}

impl Step {
    pub fn push(label: &str) -> Step {
        Step::UiEvent { select: Select::label(label), name: "push".into(), args: None }
    }
}

/// Reads a script: a JSON array of steps.
pub fn parse_script(text: &str) -> Result<Vec<Step>, HarnessError> {
    serde_json::from_str(text).map_err(|e| HarnessError::Script(e.to_string()))
}

/// The frames displayed during a run, in order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub frames: Vec<Option<DisplayNode>>,
}

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("program is not runnable:\n{}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"))]
    Check(Vec<Diagnostic>),
    #[error("bad script: {0}")]
    Script(String),
    #[error("{0}")]
    Select(String),
    #[error("expectation failed: {0}")]
    Expect(String),
    #[error(transparent)]
    Dispatch(#[from] DispatchError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<RuntimeError> for HarnessError {
    fn from(e: RuntimeError) -> Self {
        HarnessError::Dispatch(e.into())
    }
}

impl From<EvalError> for HarnessError {
    fn from(e: EvalError) -> Self {
        HarnessError::Dispatch(e.into())
    }
}

pub fn json_to_value(v: &serde_json::Value) -> Result<Value, HarnessError> {
    match v {
        serde_json::Value::Bool(b) => Ok(Value::Bool(*b)),
        serde_json::Value::String(s) => Ok(Value::str(s)),
        serde_json::Value::Number(n) => {
            n.as_i64().map(Value::Int).ok_or_else(|| HarnessError::Script(format!("argument {n} is not an integer")))
        }
        other => Err(HarnessError::Script(format!("unsupported event argument {other}"))),
    }
}

/// Turns a script step into an input against the current display. An
/// `expect` step is checked and yields no input.
pub fn step_input(step: &Step, frame: Option<&DisplayNode>) -> Result<Option<Input>, HarnessError> {
    let args = |xs: &[serde_json::Value]| xs.iter().map(json_to_value).collect::<Result<Vec<_>, _>>();
    Ok(Some(match step {
        Step::UiEvent { select, name, args: given } => {
            let node = select.resolve(frame)?;
            let args = match given {
                Some(xs) => args(xs)?,
                None if name == "push" => vec![Value::Int(node.id as i64)],
                None => Vec::new(),
            };
            Input::Event(Event { target: Some(node.id), name: name.clone(), args })
        }
        Step::ContextEvent { name, args: xs } => {
            Input::Event(Event { target: None, name: name.clone(), args: args(xs)? })
        }
        Step::SetField { select, field, text } => {
            let node = select.resolve(frame)?;
            Input::SetField { id: node.id, field: field.clone(), text: text.clone() }
        }
        Step::Provider { directive } => Input::Provider(directive.clone()),
        Step::Expect { root_kind, contains, absent } => {
            check_expect(frame, root_kind.as_deref(), contains, absent)?;
            return Ok(None);
        }
    }))
}

fn check_expect(
    frame: Option<&DisplayNode>,
    root_kind: Option<&str>,
    contains: &[Select],
    absent: &[Select],
) -> Result<(), HarnessError> {
    if let Some(k) = root_kind {
        let found = frame.map(|f| f.kind.as_str());
        if found != Some(k) {
            return Err(HarnessError::Expect(format!("root kind is {found:?}, expected {k}")));
        }
    }
    for s in contains {
        s.resolve(frame).map_err(|e| HarnessError::Expect(e.to_string()))?;
    }
    for s in absent {
        if frame.is_some_and(|f| !s.find(f).is_empty()) {
            return Err(HarnessError::Expect(format!("{} is displayed", s.describe())));
        }
    }
    Ok(())
}

/// Settings of a run.
#[derive(Clone, Debug)]
pub struct RunOptions {
    /// Where `db` files live.
    pub data_dir: PathBuf,
    /// Distance at which the provider announces a peer.
    pub range: i64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { data_dir: PathBuf::from("."), range: DEFAULT_RANGE }
    }
}

/// Checks a program and performs its entry command, giving the runtime
/// and the initial root widget.
pub fn start(p: &Program, opts: &RunOptions) -> Result<(Runtime, Rc<Instance>), HarnessError> {
    let diags = check_runnable(p);
    if !diags.is_empty() {
        return Err(HarnessError::Check(diags));
    }
    start_unchecked(p, opts)
}

/// Performs a program's entry command without checking it first.
pub fn start_unchecked(p: &Program, opts: &RunOptions) -> Result<(Runtime, Rc<Instance>), HarnessError> {
    let env = program_env(p)?;
    let cmd = entry_command(p, &env)?;
    let mut rt = Runtime::new(&opts.data_dir, ProviderSim::new(opts.range));
    match rt.perform(&cmd)? {
        Outcome::Value(Value::Instance(root)) => Ok((rt, root)),
        Outcome::Value(v) => Err(HarnessError::Dispatch(DispatchError::BadResult(format!("entry yielded {v}")))),
        Outcome::Raised(e) => {
            Err(HarnessError::Dispatch(DispatchError::NoHandler { name: e.name, arity: e.args.len() }))
        }
    }
}

/// Feeds script steps and records every frame.
pub struct Headless {
    steps: VecDeque<Step>,
    pub trace: Trace,
    /// The first script error, if any.
    pub error: Option<HarnessError>,
}

impl Headless {
    pub fn new(steps: &[Step]) -> Headless {
        Headless { steps: steps.iter().cloned().collect(), trace: Trace::default(), error: None }
    }
}

impl Backend for Headless {
    fn show(&mut self, frame: Option<&DisplayNode>) -> Result<(), DispatchError> {
        self.trace.frames.push(frame.cloned());
        Ok(())
    }

    fn next(&mut self, frame: Option<&DisplayNode>) -> Result<Option<Input>, DispatchError> {
        while let Some(step) = self.steps.pop_front() {
            match step_input(&step, frame) {
                Ok(Some(input)) => return Ok(Some(input)),
                Ok(None) => {}
                Err(e) => {
                    self.error = Some(e);
                    return Ok(None);
                }
            }
        }
        Ok(None)
    }
}

/// Runs a program headlessly against a script and returns its trace.
pub fn run_script(p: &Program, script: &[Step], opts: &RunOptions) -> Result<Trace, HarnessError> {
    let (mut rt, root) = start(p, opts)?;
    run_with(&mut rt, root, script)
}

/// Runs from an already started program.
pub fn run_with(rt: &mut Runtime, root: Rc<Instance>, script: &[Step]) -> Result<Trace, HarnessError> {
    let mut backend = Headless::new(script);
    run_loop(rt, root, &mut backend)?;
    match backend.error {
        Some(e) => Err(e),
        None => Ok(backend.trace),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(id: u64, kind: &str, label: Option<&str>, children: Vec<DisplayNode>) -> DisplayNode {
        let mut props = std::collections::BTreeMap::new();
        if let Some(l) = label {
            props.insert("label".to_string(), serde_json::Value::from(l));
        }
        DisplayNode { id, kind: kind.into(), props, children }
    }

    fn screen() -> DisplayNode {
        node(3, "screen", None, vec![node(0, "button", Some("add"), vec![]), node(1, "button", Some("del"), vec![])])
    }

    #[test]
    fn select_matches_every_given_field() {
        let s = screen();
        assert_eq!(Select::label("del").resolve(Some(&s)).unwrap().id, 1);
        assert_eq!(Select::kind("button").find(&s).len(), 2);
        let by_path = Select { path: Some(vec![0]), ..Select::default() };
        assert_eq!(by_path.resolve(Some(&s)).unwrap().id, 0);
        let both = Select { kind: Some("screen".into()), label: Some("add".into()), ..Select::default() };
        assert!(both.find(&s).is_empty());
    }

    #[test]
    fn ambiguous_or_missing_selection_is_an_error() {
        let s = screen();
        assert!(matches!(Select::kind("button").resolve(Some(&s)), Err(HarnessError::Select(_))));
        assert!(matches!(Select::label("nope").resolve(Some(&s)), Err(HarnessError::Select(_))));
        assert!(matches!(Select::label("add").resolve(None), Err(HarnessError::Select(_))));
    }

    #[test]
    fn push_carries_the_target_id() {
        let s = screen();
        match step_input(&Step::push("del"), Some(&s)).unwrap() {
            Some(Input::Event(e)) => {
                assert_eq!(e.target, Some(1));
                assert!(matches!(e.args.as_slice(), [Value::Int(1)]));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn expect_checks_presence_and_absence() {
        let s = screen();
        let ok = Step::Expect {
            root_kind: Some("screen".into()),
            contains: vec![Select::label("add")],
            absent: vec![Select::kind("label")],
        };
        assert!(step_input(&ok, Some(&s)).unwrap().is_none());
        let bad = Step::Expect { root_kind: None, contains: vec![], absent: vec![Select::label("add")] };
        assert!(matches!(step_input(&bad, Some(&s)), Err(HarnessError::Expect(_))));
        let wrong_root = Step::Expect { root_kind: Some("phone".into()), contains: vec![], absent: vec![] };
        assert!(matches!(step_input(&wrong_root, Some(&s)), Err(HarnessError::Expect(_))));
    }

    #[test]
    fn scripts_round_trip_through_json() {
        let text = r#"[{"type":"ui-event","select":{"label":"add"},"name":"push"},
                      {"type":"context-event","name":"notify","args":["a@b"]},
                      {"type":"set-field","select":{"kind":"addscreen"},"field":"name","text":"Sally"},
                      {"type":"provider","directive":{"action":"peer-register","addr":"a@b"}},
                      {"type":"expect","contains":[{"kind":"clock"}]}]"#;
        let steps = parse_script(text).unwrap();
        assert_eq!(steps.len(), 5);
        assert_eq!(steps[0], Step::push("add"));
        let again = parse_script(&serde_json::to_string(&steps).unwrap()).unwrap();
        assert_eq!(again, steps);
    }

    #[test]
    fn unknown_script_fields_are_rejected() {
        assert!(parse_script(r#"[{"type":"ui-event","select":{"colour":"red"},"name":"push"}]"#).is_err());
        assert!(parse_script(r#"[{"type":"dance"}]"#).is_err());
    }

    #[test]
    fn event_arguments_are_scalars() {
        assert!(matches!(json_to_value(&serde_json::json!(4)), Ok(Value::Int(4))));
        assert!(matches!(json_to_value(&serde_json::json!(true)), Ok(Value::Bool(true))));
        assert!(json_to_value(&serde_json::json!(1.5)).is_err());
        assert!(json_to_value(&serde_json::json!([1])).is_err());
    }
}
