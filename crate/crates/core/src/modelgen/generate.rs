//! Mapping widget classes and the state machine to Widget type definitions
//! and function skeletons.

use std::collections::{BTreeMap, HashMap};

use super::model::{Association, ModelError, OpKind, Operation, RappModel, Transition};
use crate::externals::ExternalKind;

/// A handler body left for the developer; filled with `do { return self }`
/// it keeps the program well typed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hole {
    pub function: String,
    pub handler: String,
}

/// Marker line written before each hole.
pub const TODO_MARK: &str = "// TODO";

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedSource {
    pub type_defs: Vec<String>,
    pub functions: Vec<String>,
    pub todos: Vec<Hole>,
}

impl GeneratedSource {
    /// The whole module.
    pub fn text(&self) -> String {
        let mut out = String::from("// Skeleton generated from a model; handlers marked TODO need behaviour.\n\n");
        out.push_str(&self.type_defs.join("\n"));
        for f in &self.functions {
            out.push_str("\n\n");
            out.push_str(f);
        }
        out.push('\n');
        out
    }
}

/// Where a function parameter comes from in the class it builds.
#[derive(Clone, Debug, PartialEq, Eq)]
enum Origin {
    Attr(String),
    Assoc(String),
    /// Needed by a contained or parent widget.
    Inner,
}

impl Origin {
    fn member(&self) -> Option<&str> {
        match self {
            Origin::Attr(n) | Origin::Assoc(n) => Some(n),
            Origin::Inner => None,
        }
    }
}

#[derive(Clone, Debug)]
struct FParam {
    name: String,
    ty: String,
    origin: Origin,
}

/// Names visible while building an expression for `class`.
struct Scope<'s> {
    class: &'s str,
    params: Vec<FParam>,
    locals: Vec<String>,
}

impl Scope<'_> {
    fn has(&self, name: &str) -> bool {
        self.locals.iter().any(|l| l == name) || self.params.iter().any(|p| p.name == name)
    }
}

struct Gen<'a> {
    m: &'a RappModel,
    params: HashMap<String, Vec<FParam>>,
    visiting: Vec<String>,
}

/// Generates type definitions and function skeletons for a validated
/// model.
pub fn generate(m: &RappModel) -> Result<GeneratedSource, ModelError> {
    let mut g = Gen { m, params: HashMap::new(), visiting: Vec::new() };
    let mut out = GeneratedSource { type_defs: Vec::new(), functions: Vec::new(), todos: Vec::new() };
    for a in &m.types {
        out.type_defs.push(format!("type {} = {}", a.name, a.def));
    }
    let widgets: Vec<&str> = m.classes.iter().filter(|c| !c.is_external()).map(|c| c.name.as_str()).collect();
    for c in &widgets {
        out.type_defs.push(g.type_def(c)?);
    }
    for c in &widgets {
        let (text, holes) = g.function(c)?;
        out.functions.push(text);
        out.todos.extend(holes);
    }
    Ok(out)
}

fn err<T>(msg: impl Into<String>) -> Result<T, ModelError> {
    Err(ModelError::one(msg))
}

fn indent(text: &str, by: usize) -> String {
    let pad = " ".repeat(by);
    text.lines().map(|l| if l.is_empty() { String::new() } else { format!("{pad}{l}") }).collect::<Vec<_>>().join("\n")
}

impl<'a> Gen<'a> {
    fn fun_name(&self, class: &str) -> String {
        self.m.class(class).map(|c| c.function_name()).unwrap_or_default()
    }

    fn is_shared(&self, class: &str, member: &str) -> bool {
        self.m.invariants.iter().any(|i| i.context == class && i.rhs_path() == [member])
    }

    /// The type of a widget of class `t` reached through `via`.
    fn class_type(&self, t: &str, via: Option<&Association>) -> String {
        match self.m.class(t) {
            Some(c) if c.is_external() => {
                let args = match via {
                    Some(a) if !a.type_args.is_empty() => a.type_args.clone(),
                    _ => self.type_args(t, t),
                };
                if args.is_empty() {
                    t.to_string()
                } else {
                    format!("{t}[{}]", args.join(","))
                }
            }
            _ => t.to_string(),
        }
    }

    /// Type arguments of external `ext` as specialised by `by`.
    fn type_args(&self, ext: &str, by: &str) -> Vec<String> {
        let Some(c) = self.m.class(ext) else { return Vec::new() };
        c.type_params
            .iter()
            .map(|p| match self.m.association(by, p) {
                Some(a) if !a.targets.is_empty() => {
                    a.targets.iter().map(|t| self.class_type(t, None)).collect::<Vec<_>>().join("+")
                }
                _ => "Top".to_string(),
            })
            .collect()
    }

    fn assoc_type(&self, a: &Association) -> String {
        let t = a.targets.iter().map(|t| self.class_type(t, Some(a))).collect::<Vec<_>>().join("+");
        let t = if a.command { format!("<{t}>") } else { t };
        if a.many {
            format!("[{t}]")
        } else {
            t
        }
    }

    fn single_target<'b>(&self, a: &'b Association) -> Option<&'b str> {
        match a.targets.as_slice() {
            [t] => Some(t),
            _ => None,
        }
    }

    /// Associations of `class` declared by none of its superclasses; the
    /// others are built by the parent.
    fn own_containments(&self, class: &str) -> Vec<&'a Association> {
        let ancestors = self.m.chain(class);
        self.m
            .associations(class)
            .into_iter()
            .filter(|a| a.containment)
            .filter(|a| !ancestors[1..].iter().any(|c| c.associations.iter().any(|b| b.name == a.name)))
            .collect()
    }

    fn superclass(&self, class: &str) -> Option<&'a str> {
        self.m.class(class).and_then(|c| c.superclass.as_deref())
    }

    // ---- parameters -------------------------------------------------

    /// Parameters of the function for a widget class: transition targets
    /// held by reference, own and inherited attributes, other references,
    /// attributes needed by contained widgets, then shared contained
    /// widgets.
    fn params_of(&mut self, class: &str) -> Result<Vec<FParam>, ModelError> {
        if let Some(p) = self.params.get(class) {
            return Ok(p.clone());
        }
        if self.visiting.iter().any(|v| v == class) {
            return err(format!("class {class} contains itself"));
        }
        self.visiting.push(class.to_string());
        let r = self.compute_params(class);
        self.visiting.pop();
        let ps = r?;
        self.params.insert(class.to_string(), ps.clone());
        Ok(ps)
    }

    fn compute_params(&mut self, class: &str) -> Result<Vec<FParam>, ModelError> {
        let m = self.m;
        let assocs = m.associations(class);
        let refs: Vec<&Association> = assocs.iter().copied().filter(|a| !a.containment).collect();
        let state_ref = |a: &Association| matches!(a.targets.as_slice(), [t] if m.is_state(t));
        let mut ps = Vec::new();
        let push = |ps: &mut Vec<FParam>, name: &str, ty: String, origin: Origin| {
            if !ps.iter().any(|p: &FParam| p.name == name) {
                ps.push(FParam { name: name.to_string(), ty, origin });
            }
        };
        for a in refs.iter().filter(|a| state_ref(a)) {
            push(&mut ps, a.param_name(), self.assoc_type(a), Origin::Assoc(a.name.clone()));
        }
        for at in m.attributes(class) {
            if at.value.is_none() {
                push(&mut ps, &at.name, at.ty.clone(), Origin::Attr(at.name.clone()));
            }
        }
        for a in refs.iter().filter(|a| !state_ref(a)) {
            push(&mut ps, a.param_name(), self.assoc_type(a), Origin::Assoc(a.name.clone()));
        }

        let mut scope = Scope { class, params: ps, locals: self.locals(class) };
        let contained: Vec<&Association> =
            assocs.iter().copied().filter(|a| a.containment && !self.is_shared(class, &a.name)).collect();
        for a in contained {
            for t in &a.targets {
                self.needs(&mut scope, t, t, Some(a))?;
            }
        }
        if let Some(s) = self.superclass(class) {
            if self.m.class(s).is_some_and(|c| c.is_external()) {
                self.needs(&mut scope, s, class, None)?;
            } else {
                self.needs(&mut scope, s, s, None)?;
            }
        }
        let mut ps = scope.params;
        for a in assocs.iter().filter(|a| a.containment && self.is_shared(class, &a.name)) {
            push(&mut ps, a.param_name(), self.assoc_type(a), Origin::Assoc(a.name.clone()));
        }
        Ok(ps)
    }

    /// Member names of `class` usable without a parameter.
    fn locals(&self, class: &str) -> Vec<String> {
        let mut out: Vec<String> =
            self.m.attributes(class).iter().filter(|a| a.value.is_some()).map(|a| a.name.clone()).collect();
        out.extend(self.own_containments(class).iter().map(|a| a.name.clone()));
        out
    }

    /// Adds to the scope the parameters needed to build a `t` whose
    /// associations are specialised by `by`.
    fn needs(&mut self, scope: &mut Scope, t: &str, by: &str, via: Option<&Association>) -> Result<(), ModelError> {
        let m = self.m;
        let given = |n: &str| via.is_some_and(|a| a.args.contains_key(n));
        let Some(c) = m.class(t) else { return Ok(()) };
        if c.is_external() {
            for arg in m.ctor_args(t) {
                if given(&arg) {
                    continue;
                }
                if let Some(at) = m.attribute(by, &arg) {
                    if at.value.is_none() && !scope.has(&arg) {
                        scope.params.push(FParam { name: arg.clone(), ty: at.ty.clone(), origin: Origin::Inner });
                    }
                } else if let Some(a) = m.association(by, &arg) {
                    if by != scope.class {
                        for inner in &a.targets {
                            self.needs(scope, inner, inner, Some(a))?;
                        }
                    }
                }
            }
        } else {
            for p in self.params_of(t)? {
                let refers_here = matches!(&p.origin, Origin::Assoc(a)
                    if m.association(t, a).and_then(|a| self.single_target(a)) == Some(scope.class));
                if given(&p.name) || refers_here || scope.has(&p.name) {
                    continue;
                }
                scope.params.push(FParam { name: p.name, ty: p.ty, origin: Origin::Inner });
            }
        }
        Ok(())
    }

    // ---- expressions ------------------------------------------------

    /// The expression for a member or parameter name in `class`.
    fn resolve(&self, scope: &Scope, name: &str, handler: &[String]) -> Option<String> {
        if handler.iter().any(|h| h == name) {
            return Some(name.to_string());
        }
        if let Some(at) = self.m.attribute(scope.class, name) {
            return Some(match (&at.value, at.command) {
                (Some(v), false) => v.clone(),
                _ => name.to_string(),
            });
        }
        if let Some(a) = self.m.association(scope.class, name) {
            if !a.containment {
                return Some(a.param_name().to_string());
            }
            if self.own_containments(scope.class).iter().any(|o| o.name == name) {
                return Some(name.to_string());
            }
            return None;
        }
        scope.params.iter().find(|p| p.name == name).map(|p| p.name.clone())
    }

    /// The value `class` holds for a sharing invariant of `target` whose
    /// right side is `member`.
    fn shared_value(
        &self,
        scope: &Scope,
        target: &str,
        member: &str,
        handler: &[String],
    ) -> Result<Option<String>, ModelError> {
        let invs: Vec<_> =
            self.m.invariants.iter().filter(|i| i.context == target && i.rhs_path() == [member]).collect();
        let mut found: Option<String> = None;
        for inv in invs {
            let path = inv.lhs_path();
            let Some(head) = self.m.association(target, path[0]).and_then(|a| self.single_target(a)) else {
                continue;
            };
            let rest = &path[1..];
            let value = if head == scope.class {
                let Some((first, more)) = rest.split_first() else { continue };
                let Some(base) = self.resolve(scope, first, handler) else {
                    return err(format!("{}: {} is not available in {}", inv.lhs, first, scope.class));
                };
                std::iter::once(base).chain(more.iter().map(|s| s.to_string())).collect::<Vec<_>>().join(".")
            } else {
                let holder = self
                    .m
                    .associations(scope.class)
                    .into_iter()
                    .find(|a| !a.containment && self.single_target(a) == Some(head));
                let Some(holder) = holder else { continue };
                std::iter::once(holder.param_name().to_string())
                    .chain(rest.iter().map(|s| s.to_string()))
                    .collect::<Vec<_>>()
                    .join(".")
            };
            match &found {
                Some(f) if *f != value => {
                    return err(format!(
                        "ambiguous sharing: {target}.{member} is bound to both {f} and {value} in {}",
                        scope.class
                    ))
                }
                _ => found = Some(value),
            }
        }
        Ok(found)
    }

    /// A call of the function for widget class `t` from `scope`.
    fn call(
        &mut self,
        scope: &Scope,
        t: &str,
        args: &BTreeMap<String, String>,
        handler: &[String],
    ) -> Result<String, ModelError> {
        let mut out = Vec::new();
        for p in self.params_of(t)? {
            if let Some(e) = args.get(&p.name) {
                out.push(e.clone());
                continue;
            }
            if let Origin::Assoc(a) = &p.origin {
                if self.m.association(t, a).and_then(|a| self.single_target(a)) == Some(scope.class) {
                    out.push("self".to_string());
                    continue;
                }
            }
            if let Some(member) = p.origin.member() {
                if let Some(v) = self.shared_value(scope, t, member, handler)? {
                    out.push(v);
                    continue;
                }
            }
            match self.resolve(scope, &p.name, handler) {
                Some(v) => out.push(v),
                None => {
                    return err(format!(
                        "cannot supply argument {} of {} from {}",
                        p.name,
                        self.fun_name(t),
                        scope.class
                    ))
                }
            }
        }
        Ok(format!("{}({})", self.fun_name(t), out.join(",")))
    }

    /// Builds an external widget `ext` whose associations are specialised
    /// by `by`.
    fn construct_external(
        &mut self,
        scope: &Scope,
        ext: &str,
        by: &str,
        via: Option<&Association>,
    ) -> Result<String, ModelError> {
        let Some(kind) = ExternalKind::from_type(ext) else {
            return err(format!("{ext} is not a platform widget"));
        };
        let mut args = Vec::new();
        for arg in self.m.ctor_args(ext) {
            if let Some(e) = via.and_then(|a| a.args.get(&arg)) {
                args.push(e.clone());
            } else if let Some(at) = self.m.attribute(by, &arg) {
                let v = match (&at.value, at.command) {
                    (Some(v), false) => Some(v.clone()),
                    _ => self.resolve(scope, &arg, &[]),
                };
                match v {
                    Some(v) => args.push(v),
                    None => return err(format!("cannot supply {arg} of {ext} in {}", scope.class)),
                }
            } else if let Some(a) = self.m.association(by, &arg) {
                let a = a.clone();
                args.push(self.build_assoc(scope, &a)?);
            } else {
                return err(format!("{ext} has no member {arg}"));
            }
        }
        let targs = match via {
            Some(a) if !a.type_args.is_empty() => a.type_args.clone(),
            _ => self.type_args(ext, by),
        };
        let targs = if targs.is_empty() { String::new() } else { format!("[{}]", targs.join(",")) };
        Ok(format!("{}{targs}({})", kind.ctor_name(), args.join(",")))
    }

    fn build_target(&mut self, scope: &Scope, t: &str, via: &Association) -> Result<String, ModelError> {
        if self.m.class(t).is_some_and(|c| c.is_external()) {
            self.construct_external(scope, t, t, Some(via))
        } else {
            self.call(scope, t, &via.args, &[])
        }
    }

    fn build_assoc(&mut self, scope: &Scope, a: &Association) -> Result<String, ModelError> {
        let items = a.targets.iter().map(|t| self.build_target(scope, t, a)).collect::<Result<Vec<_>, _>>()?;
        if a.many {
            Ok(format!("[{}]", items.join(",")))
        } else if items.len() == 1 {
            Ok(items.into_iter().next().expect("one item"))
        } else {
            err(format!("association {} has several targets but is not a list", a.name))
        }
    }

    fn parent(&mut self, scope: &Scope) -> Result<String, ModelError> {
        let Some(s) = self.superclass(scope.class) else {
            return err(format!("widget class {} has no superclass", scope.class));
        };
        if self.m.class(s).is_some_and(|c| c.is_external()) {
            self.construct_external(scope, s, scope.class, None)
        } else {
            self.call(scope, s, &BTreeMap::new(), &[])
        }
    }

    // ---- types ------------------------------------------------------

    fn event_sig(&self, name: &str) -> String {
        let ps = self.m.event_params(name).unwrap_or(&[]);
        format!("{name}({})", ps.iter().map(|p| p.ty.as_str()).collect::<Vec<_>>().join(","))
    }

    /// Events a widget of class `t` lets escape.
    fn raised(&self, t: &str) -> Vec<String> {
        self.raised_at(t, t, 0)
    }

    fn raised_at(&self, level: &str, by: &str, depth: usize) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let Some(c) = self.m.class(level) else { return out };
        if depth > 32 {
            return out;
        }
        let add = |out: &mut Vec<String>, e: &str| {
            if !out.iter().any(|o| o == e) {
                out.push(e.to_string());
            }
        };
        if c.is_external() {
            for o in c.operations.iter().filter(|o| o.kind == OpKind::Event) {
                add(&mut out, &o.name);
            }
        }
        if let Some(s) = &c.superclass {
            for e in self.raised_at(s, by, depth + 1) {
                add(&mut out, &e);
            }
        }
        for a in c.associations.iter().filter(|a| a.containment) {
            let targets = self.m.association(by, &a.name).map(|s| s.targets.clone()).unwrap_or_default();
            for t in targets {
                for e in self.raised_at(&t, &t, depth + 1) {
                    add(&mut out, &e);
                }
            }
        }
        if !c.is_external() {
            let handlers: Vec<&Operation> = c.operations.iter().filter(|o| o.kind == OpKind::Handler).collect();
            for h in &handlers {
                for r in &h.raises {
                    add(&mut out, r);
                }
            }
            out.retain(|e| !handlers.iter().any(|h| h.name == *e));
        }
        out
    }

    fn raises_clause(&self, events: &[String]) -> String {
        if events.is_empty() {
            String::new()
        } else {
            format!(" raises {}", events.iter().map(|e| self.event_sig(e)).collect::<Vec<_>>().join(", "))
        }
    }

    fn transitions(&self, class: &str, event: &str) -> Vec<&'a Transition> {
        self.m.statemachine.transitions.iter().filter(|t| t.source == class && t.event == event).collect()
    }

    /// Result states of a handler, in transition order.
    fn handler_targets(&self, class: &str, h: &Operation) -> Vec<String> {
        let trs = self.transitions(class, &h.name);
        let mut out: Vec<String> = Vec::new();
        for t in &trs {
            if !out.contains(&t.target) {
                out.push(t.target.clone());
            }
        }
        let has_default = trs.iter().any(|t| t.guard.is_none());
        if (out.is_empty() || !has_default) && !out.iter().any(|t| t == class) {
            out.push(class.to_string());
        }
        out
    }

    fn handler_type(&self, class: &str, h: &Operation) -> String {
        if !h.raises.is_empty() {
            return format!("<*>{}", self.raises_clause(&h.raises));
        }
        format!("<{}>", self.handler_targets(class, h).join("+"))
    }

    fn parent_type(&self, class: &str) -> String {
        match self.superclass(class) {
            Some(s) if self.m.class(s).is_some_and(|c| c.is_external()) => {
                let args = self.type_args(s, class);
                if args.is_empty() {
                    s.to_string()
                } else {
                    format!("{s}[{}]", args.join(","))
                }
            }
            Some(s) => s.to_string(),
            None => "Top".to_string(),
        }
    }

    fn type_def(&self, class: &str) -> Result<String, ModelError> {
        let mut fields = Vec::new();
        for a in self.own_containments(class) {
            fields.push(format!("{}:{}", a.name, self.assoc_type(a)));
        }
        for h in self.m.handlers(class) {
            let ps = h.params.iter().map(|p| p.ty.as_str()).collect::<Vec<_>>().join(",");
            fields.push(format!("{}:({ps})->{}", h.name, self.handler_type(class, h)));
        }
        let head =
            format!("type {class} = Widget({}){}", self.parent_type(class), self.raises_clause(&self.raised(class)));
        Ok(match fields.len() {
            0 => format!("{head} {{}}"),
            1 => format!("{head} {{ {} }}", fields[0]),
            _ => format!("{head} {{\n  {}\n}}", fields.join(";\n  ")),
        })
    }

    // ---- functions --------------------------------------------------

    fn outcome(&mut self, scope: &Scope, target: &str, handler: &[String]) -> Result<Outcome, ModelError> {
        if target == scope.class {
            return Ok(Outcome::Widget("self".into()));
        }
        let held = self
            .m
            .associations(scope.class)
            .into_iter()
            .find(|a| !a.containment && self.single_target(a) == Some(target));
        if let Some(a) = held {
            return Ok(Outcome::Widget(a.param_name().to_string()));
        }
        Ok(Outcome::Command(self.call(scope, target, &BTreeMap::new(), handler)?))
    }

    /// A handler definition and whether its body is a hole.
    fn handler(&mut self, scope: &Scope, h: &Operation) -> Result<(String, bool), ModelError> {
        let class = scope.class;
        let names: Vec<String> = h.params.iter().map(|p| p.name.clone()).collect();
        let head = format!(
            "{}({}):{} =",
            h.name,
            h.params.iter().map(|p| format!("{}:{}", p.name, p.ty)).collect::<Vec<_>>().join(","),
            if h.raises.is_empty() { self.handler_type(class, h) } else { "<*>".to_string() }
        );
        if let Some(e) = h.raises.first() {
            if h.raises.len() > 1 {
                return err(format!("handler {class}.{} raises several events", h.name));
            }
            let ps = self.m.event_params(e).unwrap_or(&[]);
            let mut args = Vec::new();
            for p in ps {
                match self.resolve(scope, &p.name, &names) {
                    Some(v) => args.push(v),
                    None => {
                        return err(format!("cannot supply argument {} of event {e} in {class}.{}", p.name, h.name))
                    }
                }
            }
            return Ok((format!("{head} raise {e}({})", args.join(",")), false));
        }

        let trs = self.transitions(class, &h.name);
        let unguarded: Vec<&&Transition> = trs.iter().filter(|t| t.guard.is_none()).collect();
        if unguarded.len() > 1 {
            return err(format!("{class} has several unguarded transitions on {}", h.name));
        }
        let hole = format!("{head} do {{ return self }}");
        let guarded: Vec<&&Transition> = trs.iter().filter(|t| t.guard.is_some()).collect();
        if guarded.is_empty() {
            let Some(t) = unguarded.first() else { return Ok((hole, true)) };
            return Ok(match self.outcome(scope, &t.target, &names)? {
                Outcome::Widget(w) if w == "self" => (hole, true),
                Outcome::Widget(w) => (format!("{head} do {{ return {w} }}"), false),
                Outcome::Command(c) => (format!("{head} {c}"), false),
            });
        }

        let mut binds: Vec<String> = Vec::new();
        let mut bound: Vec<(String, String)> = Vec::new();
        let mut value = |this: &mut Self, target: &str| -> Result<String, ModelError> {
            Ok(match this.outcome(scope, target, &names)? {
                Outcome::Widget(w) => w,
                Outcome::Command(c) => {
                    if let Some((_, v)) = bound.iter().find(|(t, _)| t == target) {
                        return Ok(v.clone());
                    }
                    let v = super::model::snake_case(target);
                    binds.push(format!("{v}:{} <- {c}", this.class_type(target, None)));
                    bound.push((target.to_string(), v.clone()));
                    v
                }
            })
        };
        let mut arms = Vec::new();
        for t in &guarded {
            let v = value(self, &t.target)?;
            arms.push((t.guard.clone().expect("guarded"), v));
        }
        let default = match unguarded.first() {
            Some(t) => value(self, &t.target)?,
            None => "self".to_string(),
        };
        let mut ret = default;
        for (g, v) in arms.into_iter().rev() {
            ret = format!("if {g} then {v} else {ret}");
        }
        let mut body = binds.join(";\n");
        if !body.is_empty() {
            body.push('\n');
        }
        body.push_str(&format!("return {ret}"));
        Ok((format!("{head} do {{\n{}\n}}", indent(&body, 2)), true))
    }

    fn function(&mut self, class: &str) -> Result<(String, Vec<Hole>), ModelError> {
        let params = self.params_of(class)?;
        let fname = self.fun_name(class);
        let scope = Scope { class, params: params.clone(), locals: self.locals(class) };
        let parent = self.parent(&scope)?;

        let mut defs = Vec::new();
        let mut holes = Vec::new();
        for a in self.own_containments(class) {
            let ty = self.assoc_type(a);
            if self.is_shared(class, &a.name) {
                defs.push(format!("{}:{ty} = {}", a.name, a.param_name()));
            } else {
                let e = self.build_assoc(&scope, a)?;
                let op = if a.command || a.many { "=" } else { "<-" };
                defs.push(format!("{}:{ty} {op} {e}", a.name));
            }
        }
        for h in self.m.handlers(class) {
            let (text, hole) = self.handler(&scope, h)?;
            if hole {
                holes.push(Hole { function: fname.clone(), handler: h.name.clone() });
                defs.push(format!("{TODO_MARK}\n{text}"));
            } else {
                defs.push(text);
            }
        }
        let body = if defs.is_empty() {
            "{}".to_string()
        } else {
            let joined = defs
                .iter()
                .enumerate()
                .map(|(i, d)| if i + 1 < defs.len() { format!("{d};") } else { d.clone() })
                .collect::<Vec<_>>()
                .join("\n");
            format!("{{\n{}\n}}", indent(&joined, 2))
        };
        let widget = format!("widget self:{class} ({parent}) {body}");

        let sig = format!(
            "fun {fname}({}):<{class}> =",
            params.iter().map(|p| format!("{}:{}", p.name, p.ty)).collect::<Vec<_>>().join(",")
        );
        let prelude: Vec<String> = self
            .m
            .attributes(class)
            .into_iter()
            .filter(|a| a.command)
            .filter_map(|a| a.value.as_ref().map(|v| format!("{}:{} <- {v}", a.name, a.ty)))
            .collect();
        let text = if prelude.is_empty() {
            format!("{sig}\n{}", indent(&widget, 2))
        } else {
            let mut v = "p".to_string();
            let mut i = 1;
            while scope.has(&v) || self.m.attribute(class, &v).is_some() {
                v = format!("p{i}");
                i += 1;
            }
            let mut lines = prelude.join(";\n");
            lines.push_str(&format!(";\n{v}:{class} <-\n{}\nreturn {v}", indent(&widget, 2)));
            format!("{sig} do {{\n{}\n}}", indent(&lines, 2))
        };
        Ok((text, holes))
    }
}

enum Outcome {
    /// A widget value already at hand.
    Widget(String),
    /// A command building the target state.
    Command(String),
}
