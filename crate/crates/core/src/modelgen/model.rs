//! The textual model format: stereotyped classes, a state machine over root
//! containers and sharing invariants.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::externals::ExternalKind;
use crate::syntax::{parse_expr, parse_type};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RappModel {
    /// Plain type aliases emitted before the widget types.
    #[serde(default)]
    pub types: Vec<TypeAlias>,
    pub classes: Vec<ModelClass>,
    pub statemachine: StateMachine,
    #[serde(default)]
    pub invariants: Vec<Invariant>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypeAlias {
    pub name: String,
    pub def: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stereotype {
    External,
    Widget,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelClass {
    pub name: String,
    pub stereotype: Stereotype,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub superclass: Option<String>,
    /// Name of the generated function; defaults to the class name in snake
    /// case.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<String>,
    /// Constructor arguments of an external class, as attribute and
    /// association names; defaults to attributes then containments.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ctor: Option<Vec<String>>,
    /// Associations whose targets give the type arguments of an external
    /// class.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub type_params: Vec<String>,
    #[serde(default)]
    pub attributes: Vec<Attribute>,
    #[serde(default)]
    pub operations: Vec<Operation>,
    #[serde(default)]
    pub associations: Vec<Association>,
}

impl ModelClass {
    pub fn function_name(&self) -> String {
        self.function.clone().unwrap_or_else(|| snake_case(&self.name))
    }

    pub fn is_external(&self) -> bool {
        self.stereotype == Stereotype::External
    }

    pub fn operation(&self, name: &str, kind: OpKind) -> Option<&Operation> {
        self.operations.iter().find(|o| o.name == name && o.kind == kind)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Attribute {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: String,
    /// A fixed value; the attribute is then not a parameter.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    /// The value is a command performed before the widget is built.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub command: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParam {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpKind {
    Event,
    Command,
    Handler,
    Query,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Operation {
    pub name: String,
    #[serde(default)]
    pub params: Vec<ModelParam>,
    pub kind: OpKind,
    /// Events a handler raises instead of making a transition.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub raises: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Association {
    pub name: String,
    /// Target classes; several targets form a union. Empty in an external
    /// class means any widget, to be specialised by subclasses.
    #[serde(default)]
    pub targets: Vec<String>,
    #[serde(default)]
    pub containment: bool,
    /// The member holds the command itself rather than its result.
    #[serde(default)]
    pub command: bool,
    /// A list of widgets rather than a single one.
    #[serde(default)]
    pub many: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub type_args: Vec<String>,
    /// Parameter name used when the widget is passed in.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param: Option<String>,
    /// Expressions for attributes of the target.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub args: BTreeMap<String, String>,
}

impl Association {
    pub fn param_name(&self) -> &str {
        self.param.as_deref().unwrap_or(&self.name)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateMachine {
    pub states: Vec<State>,
    #[serde(default)]
    pub transitions: Vec<Transition>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct State {
    pub name: String,
    #[serde(default)]
    pub initial: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transition {
    pub event: String,
    /// Argument names; when given they must match the handler's arity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub args: Option<Vec<String>>,
    pub source: String,
    pub target: String,
    /// A boolean Widget expression over the handler's scope.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guard: Option<String>,
}

/// `context C: lhs = rhs`, with dotted navigation paths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Invariant {
    pub context: String,
    pub lhs: String,
    pub rhs: String,
}

impl Invariant {
    pub fn lhs_path(&self) -> Vec<&str> {
        self.lhs.split('.').map(str::trim).collect()
    }

    pub fn rhs_path(&self) -> Vec<&str> {
        self.rhs.split('.').map(str::trim).collect()
    }
}

/// Problems found in a model.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub struct ModelError {
    pub messages: Vec<String>,
}

impl ModelError {
    pub fn one(msg: impl Into<String>) -> ModelError {
        ModelError { messages: vec![msg.into()] }
    }
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.messages.join("\n"))
    }
}

pub fn snake_case(name: &str) -> String {
    let mut out = String::new();
    for (i, c) in name.chars().enumerate() {
        if c.is_uppercase() {
            if i > 0 {
                out.push('_');
            }
            out.extend(c.to_lowercase());
        } else {
            out.push(c);
        }
    }
    out
}

/// Reads and validates a model file.
pub fn load_model(path: &Path) -> Result<RappModel, ModelError> {
    let text = std::fs::read_to_string(path).map_err(|e| ModelError::one(format!("{}: {e}", path.display())))?;
    parse_model(&text)
}

/// Parses and validates a model.
pub fn parse_model(text: &str) -> Result<RappModel, ModelError> {
    let m: RappModel = serde_json::from_str(text).map_err(|e| ModelError::one(format!("malformed model: {e}")))?;
    m.validate()?;
    Ok(m)
}

/// Name of the class every state must extend.
pub const ROOT_CONTAINER: &str = "Window";

impl RappModel {
    pub fn class(&self, name: &str) -> Option<&ModelClass> {
        self.classes.iter().find(|c| c.name == name)
    }

    pub fn is_state(&self, name: &str) -> bool {
        self.statemachine.states.iter().any(|s| s.name == name)
    }

    pub fn initial_state(&self) -> Option<&str> {
        self.statemachine.states.iter().find(|s| s.initial).map(|s| s.name.as_str())
    }

    /// The class followed by its superclasses. Stops on a cycle.
    pub fn chain(&self, name: &str) -> Vec<&ModelClass> {
        let mut out: Vec<&ModelClass> = Vec::new();
        let mut next = self.class(name);
        while let Some(c) = next {
            if out.iter().any(|o| o.name == c.name) {
                break;
            }
            out.push(c);
            next = c.superclass.as_deref().and_then(|s| self.class(s));
        }
        out
    }

    pub fn extends(&self, name: &str, ancestor: &str) -> bool {
        self.chain(name).iter().any(|c| c.name == ancestor)
    }

    /// Attributes including inherited ones; a subclass redefinition takes
    /// the place of the inherited attribute.
    pub fn attributes(&self, name: &str) -> Vec<&Attribute> {
        let mut out: Vec<&Attribute> = Vec::new();
        for c in self.chain(name).into_iter().rev() {
            for a in &c.attributes {
                match out.iter_mut().find(|o| o.name == a.name) {
                    Some(slot) => *slot = a,
                    None => out.push(a),
                }
            }
        }
        out
    }

    pub fn attribute(&self, class: &str, name: &str) -> Option<&Attribute> {
        self.attributes(class).into_iter().find(|a| a.name == name)
    }

    /// Associations in the class's own declaration order, then inherited
    /// ones it does not redefine.
    pub fn associations(&self, name: &str) -> Vec<&Association> {
        let mut out: Vec<&Association> = Vec::new();
        for c in self.chain(name) {
            for a in &c.associations {
                if !out.iter().any(|o| o.name == a.name) {
                    out.push(a);
                }
            }
        }
        out
    }

    pub fn association(&self, class: &str, name: &str) -> Option<&Association> {
        self.associations(class).into_iter().find(|a| a.name == name)
    }

    /// The handler for an event, looked up along the superclass chain.
    pub fn handler(&self, class: &str, event: &str) -> Option<&Operation> {
        self.chain(class).into_iter().find_map(|c| c.operation(event, OpKind::Handler))
    }

    /// Handlers including inherited ones, most derived first.
    pub fn handlers(&self, class: &str) -> Vec<&Operation> {
        let mut out: Vec<&Operation> = Vec::new();
        for c in self.chain(class) {
            for o in c.operations.iter().filter(|o| o.kind == OpKind::Handler) {
                if !out.iter().any(|h| h.name == o.name) {
                    out.push(o);
                }
            }
        }
        out
    }

    /// Parameter types of an event, from its declaration in any class.
    pub fn event_params(&self, name: &str) -> Option<&[ModelParam]> {
        self.classes
            .iter()
            .flat_map(|c| &c.operations)
            .find(|o| o.kind == OpKind::Event && o.name == name)
            .map(|o| o.params.as_slice())
    }

    /// Constructor argument names of an external class.
    pub fn ctor_args(&self, name: &str) -> Vec<String> {
        let own = self.chain(name).into_iter().find_map(|c| c.ctor.clone());
        own.unwrap_or_else(|| {
            let mut out: Vec<String> = self.attributes(name).iter().map(|a| a.name.clone()).collect();
            for c in self.chain(name).into_iter().rev() {
                for a in c.associations.iter().filter(|a| a.containment) {
                    if !out.contains(&a.name) {
                        out.push(a.name.clone());
                    }
                }
            }
            out
        })
    }

    /// Follows an invariant path from a class; gives the class reached, or
    /// `None` when the path ends at an attribute.
    pub fn navigate(&self, from: &str, path: &[&str]) -> Result<Option<String>, String> {
        let mut at = from.to_string();
        for (i, seg) in path.iter().enumerate() {
            if let Some(a) = self.association(&at, seg) {
                match a.targets.as_slice() {
                    [t] => at = t.clone(),
                    _ => return Err(format!("{seg} in {} does not lead to a single class", path.join("."))),
                }
            } else if self.attribute(&at, seg).is_some() && i + 1 == path.len() {
                return Ok(None);
            } else {
                return Err(format!("{seg} is not a member of {at} in {}", path.join(".")));
            }
        }
        Ok(Some(at))
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let mut errs = Vec::new();
        let sm = &self.statemachine;
        if self.classes.is_empty() && sm.states.is_empty() {
            errs.push("empty model".to_string());
        }
        match sm.states.iter().filter(|s| s.initial).count() {
            0 => errs.push("no initial state".to_string()),
            1 => {}
            n => errs.push(format!("{n} initial states")),
        }

        let mut seen = HashSet::new();
        for c in &self.classes {
            if !seen.insert(c.name.as_str()) {
                errs.push(format!("class {} is defined twice", c.name));
            }
        }
        for a in &self.types {
            if let Err(e) = parse_type(&a.def) {
                errs.push(format!("type {}: {e}", a.name));
            }
        }

        let known = |n: &str| self.class(n).is_some();
        for c in &self.classes {
            self.validate_class(c, &known, &mut errs);
        }

        for s in &sm.states {
            if !known(&s.name) {
                errs.push(format!("state {} names no class", s.name));
            } else if !self.extends(&s.name, ROOT_CONTAINER) {
                errs.push(format!("state {} does not extend {ROOT_CONTAINER}", s.name));
            }
        }
        for t in &sm.transitions {
            for end in [&t.source, &t.target] {
                if !self.is_state(end) {
                    errs.push(format!("transition {} -> {} on {}: {end} is not a state", t.source, t.target, t.event));
                }
            }
            match self.handler(&t.source, &t.event) {
                None => errs.push(format!(
                    "transition {} -> {}: {} has no handler for {}",
                    t.source, t.target, t.source, t.event
                )),
                Some(h) => {
                    if let Some(args) = &t.args {
                        if args.len() != h.params.len() {
                            errs.push(format!(
                                "transition {} -> {} on {}: {} arguments, the handler takes {}",
                                t.source,
                                t.target,
                                t.event,
                                args.len(),
                                h.params.len()
                            ));
                        }
                    }
                }
            }
            if let Some(g) = &t.guard {
                if let Err(e) = parse_expr(g) {
                    errs.push(format!("guard of {} -> {}: {e}", t.source, t.target));
                }
            }
        }

        for inv in &self.invariants {
            if !known(&inv.context) {
                errs.push(format!("invariant context {} names no class", inv.context));
                continue;
            }
            let l = self.navigate(&inv.context, &inv.lhs_path());
            let r = self.navigate(&inv.context, &inv.rhs_path());
            match (l, r) {
                (Err(e), _) | (_, Err(e)) => errs.push(format!("invariant in {}: {e}", inv.context)),
                (Ok(a), Ok(b)) if a != b => {
                    errs.push(format!("invariant in {}: {} and {} have different types", inv.context, inv.lhs, inv.rhs))
                }
                _ => {}
            }
        }

        if errs.is_empty() {
            Ok(())
        } else {
            Err(ModelError { messages: errs })
        }
    }

    fn validate_class(&self, c: &ModelClass, known: &dyn Fn(&str) -> bool, errs: &mut Vec<String>) {
        if let Some(s) = &c.superclass {
            if !known(s) {
                errs.push(format!("class {} extends unknown class {s}", c.name));
            } else if self.chain(&c.name).last().and_then(|l| l.superclass.as_deref()).is_some_and(known) {
                errs.push(format!("class {} inherits from itself", c.name));
            }
        }
        for a in &c.associations {
            for t in &a.targets {
                if !known(t) {
                    errs.push(format!("association {}.{} targets unknown class {t}", c.name, a.name));
                }
            }
            if !c.is_external() && a.targets.is_empty() {
                errs.push(format!("association {}.{} has no target", c.name, a.name));
            }
            for e in a.args.values() {
                if let Err(err) = parse_expr(e) {
                    errs.push(format!("argument of {}.{}: {err}", c.name, a.name));
                }
            }
        }
        for a in &c.attributes {
            if let Err(e) = parse_type(&a.ty) {
                errs.push(format!("attribute {}.{}: {e}", c.name, a.name));
            }
            if let Some(v) = &a.value {
                if let Err(e) = parse_expr(v) {
                    errs.push(format!("value of {}.{}: {e}", c.name, a.name));
                }
            }
        }
        for o in &c.operations {
            for p in &o.params {
                if let Err(e) = parse_type(&p.ty) {
                    errs.push(format!("parameter {} of {}.{}: {e}", p.name, c.name, o.name));
                }
            }
            for r in &o.raises {
                if self.event_params(r).is_none() {
                    errs.push(format!("handler {}.{} raises undeclared event {r}", c.name, o.name));
                }
            }
        }
        if c.is_external() {
            if c.operations.iter().any(|o| o.kind == OpKind::Handler) {
                errs.push(format!("external class {} declares a handler", c.name));
            }
            match ExternalKind::from_type(&c.name) {
                None => errs.push(format!("external class {} is not a platform widget", c.name)),
                Some(k) => {
                    let args = self.ctor_args(&c.name);
                    if args.len() != k.param_shapes().len() {
                        errs.push(format!(
                            "external class {} has {} constructor arguments, the platform widget takes {}",
                            c.name,
                            args.len(),
                            k.param_shapes().len()
                        ));
                    }
                    if !c.type_params.is_empty() && c.type_params.len() != k.type_params().len() {
                        errs.push(format!("external class {} has the wrong number of type parameters", c.name));
                    }
                }
            }
        } else if c.superclass.is_none() {
            errs.push(format!("widget class {} has no superclass", c.name));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snake_case_splits_words() {
        assert_eq!(snake_case("Main"), "main");
        assert_eq!(snake_case("AddScreen"), "add_screen");
    }

    #[test]
    fn empty_model_has_no_initial_state() {
        let err = parse_model(r#"{"classes":[],"statemachine":{"states":[]}}"#).unwrap_err();
        assert!(err.messages.iter().any(|m| m == "no initial state"), "{err}");
    }

    #[test]
    fn malformed_json_is_reported() {
        let err = parse_model("{").unwrap_err();
        assert!(err.to_string().starts_with("malformed model"));
    }
}
